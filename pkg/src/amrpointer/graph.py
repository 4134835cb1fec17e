"""AMR graph data model, Penman notation I/O and structural queries.

Graphs are labeled directed graphs over concept nodes. Constants (polarity
markers, numbers, quoted strings) are modeled as ordinary nodes flagged
``is_constant``; they never carry outgoing edges. Node-to-token alignments
are half-open ``[start, end)`` spans over the sentence tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional


class GraphError(Exception):
    """Raised when a graph invariant is violated."""


class PenmanError(Exception):
    """Penman syntax or serialization error, with position when known."""

    def __init__(self, message: str, line: int = None, col: int = None):
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Concept:
    """A node label. Constants keep their surface form (quotes included)."""

    label: str
    is_constant: bool = False

    def __post_init__(self):
        if not self.label:
            raise GraphError("empty concept label")


class Edge(NamedTuple):
    src: str
    role: str
    dst: str


# Roles ending in "-of" that are genuine (non-inverse) AMR roles.
NON_INVERSE_ROLES = {":consist-of", ":prep-out-of", ":prep-on-behalf-of"}

_ROLE_RE = re.compile(r"^:[A-Za-z0-9-]+$")
_NUMBER_RE = re.compile(r"^[+-]?[0-9]+([.][0-9]+)?$")


def invert_role(role: str) -> str:
    """:ARG0 <-> :ARG0-of, leaving the known non-inverse roles alone."""
    if role in NON_INVERSE_ROLES:
        return role + "-of"
    if role.endswith("-of"):
        return role[:-3]
    return role + "-of"


def is_constant_label(label: str) -> bool:
    """Surface test used when a node is created from a bare action label."""
    if label.startswith('"') and label.endswith('"') and len(label) >= 2:
        return True
    if _NUMBER_RE.match(label):
        return True
    return label in ("-", "+", "imperative", "expressive", "interrogative")


class AmrGraph:
    """A rooted directed graph with concepts, constants and alignments.

    Nodes are keyed by opaque string ids; insertion order is the creation
    order, which structural tie-breaks rely on. Graphs are append-only
    during construction and treated as immutable afterwards.
    """

    def __init__(self):
        self.nodes: dict[str, Concept] = {}
        self.edges: list[Edge] = []
        self.root: Optional[str] = None
        self.alignments: dict[str, tuple[int, int]] = {}
        self._edge_set: set[Edge] = set()

    def add_node(self, node_id: str, concept: Concept,
                 span: tuple[int, int] = None) -> str:
        if node_id in self.nodes:
            raise GraphError(f"duplicate node id {node_id!r}")
        self.nodes[node_id] = concept
        if span is not None:
            self.alignments[node_id] = span
        return node_id

    def add_edge(self, src: str, role: str, dst: str):
        if src not in self.nodes or dst not in self.nodes:
            raise GraphError(f"edge endpoint missing: {src!r} -{role}-> {dst!r}")
        if src == dst:
            raise GraphError(f"self-loop on {src!r}")
        if not _ROLE_RE.match(role):
            raise GraphError(f"bad role label {role!r}")
        if self.nodes[src].is_constant:
            raise GraphError(f"constant node {src!r} cannot have outgoing edges")
        edge = Edge(src, role, dst)
        if edge in self._edge_set:
            raise GraphError(f"duplicate edge {edge}")
        self.edges.append(edge)
        self._edge_set.add(edge)

    def has_edge(self, src: str, role: str, dst: str) -> bool:
        return Edge(src, role, dst) in self._edge_set

    def set_root(self, node_id: str):
        if node_id not in self.nodes:
            raise GraphError(f"root {node_id!r} is not a node")
        self.root = node_id

    def node_index(self, node_id: str) -> int:
        """Creation ordinal of a node (insertion order)."""
        for i, n in enumerate(self.nodes):
            if n == node_id:
                return i
        raise GraphError(f"unknown node {node_id!r}")

    def in_degree(self, node_id: str) -> int:
        return sum(1 for e in self.edges if e.dst == node_id)

    def outgoing(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.src == node_id]

    def incoming(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == node_id]

    def validate_alignments(self, n_tokens: int):
        for node_id, (start, end) in self.alignments.items():
            if node_id not in self.nodes:
                raise GraphError(f"alignment for missing node {node_id!r}")
            if not (0 <= start < end <= n_tokens):
                raise GraphError(
                    f"alignment span {start}-{end} of {node_id!r} out of bounds "
                    f"for {n_tokens} tokens")

    def __len__(self):
        return len(self.nodes)


@dataclass(frozen=True)
class TripleSet:
    """Instance/attribute/relation triples in the usual Smatch form.

    Roles are stored without the leading colon. Inverse relation roles are
    canonicalized, so the triple set is independent of which orientation a
    re-entrant edge was stored in. Attribute triples (edges into constants)
    keep their literal role.
    """

    instances: frozenset  # (var, concept)
    attributes: frozenset  # (role, var, value); TOP is ("TOP", root, "top")
    relations: frozenset  # (role, var1, var2)

    def size(self) -> int:
        return len(self.instances) + len(self.attributes) + len(self.relations)

    def variables(self) -> list[str]:
        return sorted(v for v, _ in self.instances)


def to_triples(g: AmrGraph, top: bool = True) -> TripleSet:
    """Extract the Smatch triple view of a graph."""
    instances = []
    attributes = []
    relations = []
    for node_id, concept in g.nodes.items():
        if not concept.is_constant:
            instances.append((node_id, concept.label))
    for src, role, dst in g.edges:
        if g.nodes[dst].is_constant:
            attributes.append((role[1:], src, g.nodes[dst].label))
        elif role not in NON_INVERSE_ROLES and role.endswith("-of"):
            relations.append((role[1:-3], dst, src))
        else:
            relations.append((role[1:], src, dst))
    if top and g.root is not None:
        attributes.append(("TOP", g.root, "top"))
    return TripleSet(frozenset(instances), frozenset(attributes),
                     frozenset(relations))


def is_connected(g: AmrGraph) -> bool:
    """True iff all nodes are mutually reachable ignoring edge direction."""
    if len(g.nodes) <= 1:
        return True
    neighbors: dict[str, set[str]] = {n: set() for n in g.nodes}
    for src, _, dst in g.edges:
        neighbors[src].add(dst)
        neighbors[dst].add(src)
    start = next(iter(g.nodes))
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for other in neighbors[node]:
            if other not in seen:
                seen.add(other)
                frontier.append(other)
    return len(seen) == len(g.nodes)


def infer_root(g: AmrGraph) -> str:
    """Earliest-created node with in-degree 0, else earliest node overall."""
    if not g.nodes:
        raise GraphError("cannot infer root of an empty graph")
    targets = {e.dst for e in g.edges}
    for node_id in g.nodes:
        if node_id not in targets:
            return node_id
    return next(iter(g.nodes))


# ---------------------------------------------------------------------------
# Penman parsing


class _Token(NamedTuple):
    kind: str  # LP RP SLASH ROLE ATOM STRING
    value: str
    line: int
    col: int


def _tokenize_penman(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        start_col = col
        if ch == "(":
            tokens.append(_Token("LP", ch, line, start_col))
            i += 1
            col += 1
        elif ch == ")":
            tokens.append(_Token("RP", ch, line, start_col))
            i += 1
            col += 1
        elif ch == "/":
            tokens.append(_Token("SLASH", ch, line, start_col))
            i += 1
            col += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                if text[j] == "\n":
                    raise PenmanError("unterminated string", line, start_col)
                j += 1
            if j >= n:
                raise PenmanError("unterminated string", line, start_col)
            tokens.append(_Token("STRING", text[i:j + 1], line, start_col))
            col += j + 1 - i
            i = j + 1
        else:
            j = i
            while j < n and text[j] not in ' \t\r\n()/"':
                j += 1
            word = text[i:j]
            kind = "ROLE" if word.startswith(":") else "ATOM"
            tokens.append(_Token(kind, word, line, start_col))
            col += j - i
            i = j
    return tokens


class _PenmanParser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        # Variables are every atom declared as "( atom / concept"; collected
        # up front so bare references resolve as re-entrancies even when they
        # precede the declaration, and conflicting redeclarations fail early.
        self.variables: dict[str, str] = {}
        for k in range(len(tokens) - 3):
            if (tokens[k].kind == "LP" and tokens[k + 1].kind == "ATOM"
                    and tokens[k + 2].kind == "SLASH"
                    and tokens[k + 3].kind in ("ATOM", "STRING")):
                var, concept = tokens[k + 1].value, tokens[k + 3].value
                if self.variables.get(var, concept) != concept:
                    raise PenmanError(
                        f"variable {var!r} redeclared with conflicting "
                        f"concept {concept!r}",
                        tokens[k + 1].line, tokens[k + 1].col)
                self.variables.setdefault(var, concept)
        self.graph = AmrGraph()
        for var, concept in self.variables.items():
            self.graph.add_node(var, Concept(concept))
        self._const_counter: dict[tuple[str, str], int] = {}

    def _peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, expected: str = None) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", "", 1, 1)
            raise PenmanError("unexpected end of input", last.line, last.col)
        if expected and tok.kind != expected:
            raise PenmanError(f"expected {expected}, found {tok.value!r}",
                              tok.line, tok.col)
        self.pos += 1
        return tok

    def parse(self) -> AmrGraph:
        root = self._parse_node()
        extra = self._peek()
        if extra is not None:
            raise PenmanError(f"trailing input {extra.value!r}",
                              extra.line, extra.col)
        self.graph.set_root(root)
        return self.graph

    def _parse_node(self) -> str:
        self._next("LP")
        var_tok = self._next("ATOM")
        var = var_tok.value
        self._next("SLASH")
        concept_tok = self._next()
        if concept_tok.kind not in ("ATOM", "STRING"):
            raise PenmanError(f"expected concept, found {concept_tok.value!r}",
                              concept_tok.line, concept_tok.col)
        while True:
            tok = self._peek()
            if tok is None:
                raise PenmanError("unexpected end of input",
                                  var_tok.line, var_tok.col)
            if tok.kind == "RP":
                self._next()
                return var
            if tok.kind != "ROLE":
                raise PenmanError(f"expected role or ')', found {tok.value!r}",
                                  tok.line, tok.col)
            role = self._next().value
            if not _ROLE_RE.match(role):
                raise PenmanError(f"bad role label {role!r}", tok.line, tok.col)
            val = self._peek()
            if val is None:
                raise PenmanError("role with no value", tok.line, tok.col)
            if val.kind == "LP":
                child = self._parse_node()
                self._add_edge_checked(var, role, child, tok)
            elif val.kind == "STRING":
                self._next()
                self._add_constant(var, role, val.value, tok)
            elif val.kind == "ATOM":
                self._next()
                if val.value in self.variables:
                    self._add_edge_checked(var, role, val.value, tok)
                else:
                    self._add_constant(var, role, val.value, tok)
            else:
                raise PenmanError(f"expected value, found {val.value!r}",
                                  val.line, val.col)

    def _add_edge_checked(self, src, role, dst, tok):
        try:
            self.graph.add_edge(src, role, dst)
        except GraphError as exc:
            raise PenmanError(str(exc), tok.line, tok.col)

    def _add_constant(self, src, role, value, tok):
        key = (src, role[1:])
        ordinal = self._const_counter.get(key, 0)
        self._const_counter[key] = ordinal + 1
        node_id = f"{src}.{role[1:]}" if ordinal == 0 else f"{src}.{role[1:]}.{ordinal}"
        self.graph.add_node(node_id, Concept(value, is_constant=True))
        try:
            self.graph.add_edge(src, role, node_id)
        except GraphError as exc:
            raise PenmanError(str(exc), tok.line, tok.col)


def parse_penman(text: str) -> AmrGraph:
    """Parse one Penman expression into a graph.

    Repeated variables become shared nodes (re-entrancies). Constant values
    get synthesized node ids of the form ``var.role`` so they can be
    referenced from alignment metadata.
    """

    tokens = _tokenize_penman(text)
    if not tokens:
        raise PenmanError("empty input", 1, 1)
    return _PenmanParser(tokens).parse()


# ---------------------------------------------------------------------------
# Penman printing


def print_penman(g: AmrGraph) -> str:
    """Serialize a rooted connected graph to Penman text.

    Variables are renamed deterministically (first letter of the concept
    plus a disambiguating integer). Re-entrant mentions print as bare
    variables; edges that can only be reached against their direction print
    with the inverted role.
    """
    text, _ = print_penman_with_map(g)
    return text


def print_penman_with_map(g: AmrGraph) -> tuple[str, dict[str, str]]:
    """Like print_penman but also returns the node-id -> variable mapping."""
    if g.root is None:
        raise PenmanError("cannot print a rootless graph")
    if not is_connected(g):
        raise PenmanError("cannot print a disconnected graph")
    if g.nodes[g.root].is_constant:
        raise PenmanError("root must not be a constant")

    names: dict[str, str] = {}
    letter_counts: dict[str, int] = {}

    def name_for(node_id: str) -> str:
        if node_id not in names:
            first = g.nodes[node_id].label[0].lower()
            if not first.isalpha():
                first = "x"
            ordinal = letter_counts.get(first, 0)
            letter_counts[first] = ordinal + 1
            names[node_id] = f"{first}{ordinal}"
        return names[node_id]

    node_order = {n: i for i, n in enumerate(g.nodes)}
    printed_edges: set[Edge] = set()
    visited: set[str] = set()

    def render(node_id: str) -> str:
        visited.add(node_id)
        parts = [f"({name_for(node_id)} / {g.nodes[node_id].label}"]
        incident = []
        for e in g.outgoing(node_id):
            incident.append((e.role, g.nodes[e.dst].label, node_order[e.dst],
                             e, e.dst, False))
        for e in g.incoming(node_id):
            incident.append((invert_role(e.role), g.nodes[e.src].label,
                             node_order[e.src], e, e.src, True))
        incident.sort(key=lambda item: (item[5], item[0], item[1], item[2]))
        for role, _, _, edge, other, _ in incident:
            if edge in printed_edges:
                continue
            printed_edges.add(edge)
            if g.nodes[other].is_constant:
                parts.append(f"{role} {g.nodes[other].label}")
            elif other in visited:
                parts.append(f"{role} {name_for(other)}")
            else:
                parts.append(f"{role} {render(other)}")
        return " ".join(parts) + ")"

    text = render(g.root)
    return text, names
