"""Subgraph templates for single-action multi-node generation.

A template is the connected internal structure produced by one SUBGRAPH
action (dates, named entities and similar). Its canonical label is a
depth-first serialization, so the label alone is enough to re-instantiate
the template; a dictionary file is only a convenience index.

Label grammar (root is always node 0):

    label  := nodes '~' edges
    nodes  := node (';' node)*          node  := concept ['^']   (^ = constant)
    edges  := [edge (';' edge)*]        edge  := src '>' rolebody '>' dst

Concept text escapes ``% ; ~ ^ >`` as percent pairs. Role bodies drop the
leading colon (roles are ``:[A-Za-z0-9-]+`` so they need no escaping).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .graph import AmrGraph, Concept, GraphError

_ESCAPES = {"%": "%25", ";": "%3B", "~": "%7E", "^": "%5E", ">": "%3E"}
_UNESCAPE_RE = re.compile(r"%([0-9A-Fa-f]{2})")


class TemplateError(ValueError):
    """Malformed template label or non-templatable node group."""


def _escape(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def _unescape(text: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: chr(int(m.group(1), 16)), text)


@dataclass(frozen=True)
class SubgraphTemplate:
    """Concepts in canonical depth-first order plus internal edges.

    ``edges`` hold (src_index, role, dst_index) with the root at index 0.
    """

    concepts: tuple  # tuple[Concept, ...]
    edges: tuple  # tuple[(int, str, int), ...]

    def __post_init__(self):
        if not self.concepts:
            raise TemplateError("empty template")
        n = len(self.concepts)
        for src, role, dst in self.edges:
            if not (0 <= src < n and 0 <= dst < n) or src == dst:
                raise TemplateError(f"bad template edge {(src, role, dst)}")
        if not self._connected():
            raise TemplateError("template must be connected")

    def _connected(self) -> bool:
        n = len(self.concepts)
        adj = {i: set() for i in range(n)}
        for src, _, dst in self.edges:
            adj[src].add(dst)
            adj[dst].add(src)
        seen, frontier = {0}, [0]
        while frontier:
            for other in adj[frontier.pop()]:
                if other not in seen:
                    seen.add(other)
                    frontier.append(other)
        return len(seen) == n

    @property
    def root_index(self) -> int:
        return 0


def serialize_template(template: SubgraphTemplate) -> str:
    """Canonical label: independent of the construction order of edges."""
    nodes = ";".join(
        _escape(c.label) + ("^" if c.is_constant else "")
        for c in template.concepts)
    edges = ";".join(
        f"{src}>{role[1:]}>{dst}"
        for src, role, dst in sorted(template.edges))
    return f"{nodes}~{edges}"


def decode_template(label: str) -> SubgraphTemplate:
    """Rebuild a template from its label."""
    if "~" not in label:
        raise TemplateError(f"missing '~' separator in template {label!r}")
    nodes_part, _, edges_part = label.partition("~")
    concepts = []
    for item in nodes_part.split(";"):
        if not item:
            raise TemplateError(f"empty node in template {label!r}")
        is_constant = item.endswith("^")
        text = item[:-1] if is_constant else item
        concepts.append(Concept(_unescape(text), is_constant))
    edges = []
    if edges_part:
        for item in edges_part.split(";"):
            fields = item.split(">")
            if len(fields) != 3 or not fields[0].isdigit() or not fields[2].isdigit():
                raise TemplateError(f"bad edge {item!r} in template {label!r}")
            edges.append((int(fields[0]), ":" + fields[1], int(fields[2])))
    return SubgraphTemplate(tuple(concepts), tuple(edges))


def build_template(graph: AmrGraph, group: list) -> tuple:
    """Canonicalize a node group of ``graph`` into a template.

    Returns (template, gold_nodes) where gold_nodes lists the group's node
    ids in template index order. Raises TemplateError when the group has no
    unique internal root, is disconnected, or contains an internal cycle.
    """
    members = set(group)
    if len(members) < 2:
        raise TemplateError("template needs at least two nodes")
    internal = [e for e in graph.edges
                if e.src in members and e.dst in members]
    targets = {e.dst for e in internal}
    roots = [n for n in group if n not in targets]
    if len(roots) != 1:
        raise TemplateError("template needs exactly one internal root")
    root = roots[0]

    children: dict[str, list] = {n: [] for n in group}
    for e in internal:
        children[e.src].append(e)

    # Recursive canonical strings order DFS children; cycles make the
    # recursion diverge, so guard with a path set.
    canon_cache: dict[str, str] = {}

    def canon(node: str, path: frozenset) -> str:
        if node in path:
            raise TemplateError("cycle inside template group")
        if node in canon_cache:
            return canon_cache[node]
        concept = graph.nodes[node]
        parts = [_escape(concept.label) + ("^" if concept.is_constant else "")]
        child_keys = sorted(
            (e.role, canon(e.dst, path | {node})) for e in children[node])
        for role, sub in child_keys:
            parts.append(f"({role}{sub})")
        result = "".join(parts)
        canon_cache[node] = result
        return result

    canon(root, frozenset())

    order: list[str] = []
    index: dict[str, int] = {}

    def visit(node: str):
        if node in index:
            return
        index[node] = len(order)
        order.append(node)
        for e in sorted(children[node],
                        key=lambda e: (e.role, canon_cache[e.dst])):
            visit(e.dst)

    visit(root)
    if len(order) != len(members):
        raise TemplateError("template group is disconnected")

    concepts = tuple(graph.nodes[n] for n in order)
    edges = tuple(sorted((index[e.src], e.role, index[e.dst])
                         for e in internal))
    return SubgraphTemplate(concepts, edges), order
