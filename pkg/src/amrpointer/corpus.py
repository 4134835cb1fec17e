"""Aligned AMR corpus and action file I/O.

Corpus files hold blank-line-separated blocks:

    # ::id <string>
    # ::tok <t1> <t2> ...
    # ::lemmas <l1> <l2> ...        (optional; defaults to tokens)
    # ::node <noderef> <concept> <start>-<end>
    # ::root <noderef>              (optional; defaults to the Penman root)
    (v / concept :role (w / ...))   Penman lines last

Node references are Penman variables, or ``var.role`` (``var.role.k`` for
repeats) for constant values, matching the node ids the parser synthesizes.

Action files hold one space-separated action line per sentence.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .actions import ActionError, PointedAction, parse_action
from .graph import AmrGraph, GraphError, parse_penman, print_penman_with_map
from .machine import Sentence


class CorpusError(Exception):
    """Malformed corpus or action file; message carries the location."""


@dataclass(frozen=True)
class AlignedExample:
    """A sentence with its gold graph and (possibly partial) alignments."""

    id: str
    sentence: Sentence
    graph: AmrGraph

    def __post_init__(self):
        self.graph.validate_alignments(len(self.sentence))


def read_corpus(path, require_graph: bool = True) -> list[AlignedExample]:
    """Read every block of a corpus file, in file order."""
    with open(path, encoding="utf-8") as handle:
        content = handle.read()
    examples = []
    block_lines: list[tuple[int, str]] = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        if line.strip():
            block_lines.append((lineno, line))
        elif block_lines:
            examples.append(_parse_block(block_lines, len(examples), path,
                                         require_graph))
            block_lines = []
    if block_lines:
        examples.append(_parse_block(block_lines, len(examples), path,
                                     require_graph))
    return examples


def _parse_block(lines, index, path, require_graph) -> AlignedExample:
    block_id = None
    tokens = None
    lemmas = None
    node_lines = []  # (lineno, ref, concept, start, end)
    root_ref = None
    penman_parts = []
    first_line = lines[0][0]
    for lineno, line in lines:
        stripped = line.strip()
        if stripped.startswith("# ::id"):
            block_id = stripped[len("# ::id"):].strip()
        elif stripped.startswith("# ::tok"):
            tokens = stripped[len("# ::tok"):].split()
        elif stripped.startswith("# ::lemmas"):
            lemmas = stripped[len("# ::lemmas"):].split()
        elif stripped.startswith("# ::node"):
            node_lines.append((lineno, stripped[len("# ::node"):].strip()))
        elif stripped.startswith("# ::root"):
            root_ref = stripped[len("# ::root"):].strip()
        elif stripped.startswith("#"):
            continue
        else:
            penman_parts.append(line)
    block_id = block_id or f"example-{index}"
    if tokens is None:
        raise CorpusError(
            f"{path}: block {block_id!r} (line {first_line}) is missing ::tok")
    if lemmas is not None and len(lemmas) != len(tokens):
        raise CorpusError(
            f"{path}: block {block_id!r} has {len(lemmas)} lemmas for "
            f"{len(tokens)} tokens")
    sentence = Sentence(tuple(tokens), tuple(lemmas) if lemmas else None)

    if not penman_parts:
        if require_graph:
            raise CorpusError(
                f"{path}: block {block_id!r} (line {first_line}) has no graph")
        return AlignedExample(block_id, sentence, AmrGraph())
    try:
        graph = parse_penman("\n".join(penman_parts))
    except GraphError as exc:
        raise CorpusError(f"{path}: block {block_id!r}: {exc}")

    for lineno, body in node_lines:
        fields = body.split()
        if len(fields) < 3 or "-" not in fields[-1]:
            raise CorpusError(
                f"{path}: block {block_id!r} line {lineno}: bad ::node line")
        ref = fields[0]
        concept = " ".join(fields[1:-1])
        start_text, _, end_text = fields[-1].partition("-")
        try:
            start, end = int(start_text), int(end_text)
        except ValueError:
            raise CorpusError(
                f"{path}: block {block_id!r} line {lineno}: bad span "
                f"{fields[-1]!r}")
        if ref not in graph.nodes:
            raise CorpusError(
                f"{path}: block {block_id!r} line {lineno}: alignment "
                f"references missing node {ref!r}")
        if graph.nodes[ref].label != concept:
            raise CorpusError(
                f"{path}: block {block_id!r} line {lineno}: node {ref!r} is "
                f"{graph.nodes[ref].label!r}, not {concept!r}")
        if not (0 <= start < end <= len(tokens)):
            raise CorpusError(
                f"{path}: block {block_id!r} line {lineno}: span "
                f"{start}-{end} out of bounds")
        graph.alignments[ref] = (start, end)

    if root_ref is not None:
        if root_ref not in graph.nodes:
            raise CorpusError(
                f"{path}: block {block_id!r}: ::root references missing node "
                f"{root_ref!r}")
        graph.set_root(root_ref)
    return AlignedExample(block_id, sentence, graph)


def write_corpus(examples, path):
    """Debug writer for the block format; read_corpus inverts it."""
    with open(path, "w", encoding="utf-8") as handle:
        for ex in examples:
            text, names = print_penman_with_map(ex.graph)
            refs = _node_refs(ex.graph, names)
            handle.write(f"# ::id {ex.id}\n")
            handle.write("# ::tok " + " ".join(ex.sentence.tokens) + "\n")
            if tuple(ex.sentence.lemmas) != tuple(ex.sentence.tokens):
                handle.write("# ::lemmas " + " ".join(ex.sentence.lemmas) + "\n")
            for node_id, (start, end) in ex.graph.alignments.items():
                label = ex.graph.nodes[node_id].label
                handle.write(f"# ::node {refs[node_id]} {label} {start}-{end}\n")
            if ex.graph.root is not None:
                handle.write(f"# ::root {refs[ex.graph.root]}\n")
            handle.write(text + "\n\n")


def _node_refs(graph: AmrGraph, names) -> dict:
    """Node references as the re-reading parser will synthesize them."""
    refs = {node_id: names[node_id] for node_id in graph.nodes
            if not graph.nodes[node_id].is_constant}
    order = {n: i for i, n in enumerate(graph.nodes)}
    by_attachment: dict[tuple, list] = {}
    for e in graph.edges:
        if graph.nodes[e.dst].is_constant:
            by_attachment.setdefault((e.src, e.role), []).append(e.dst)
    for (src, role), constants in by_attachment.items():
        # Re-parse numbering follows text order, which print_penman sorts
        # by constant label then creation order.
        constants.sort(key=lambda n: (graph.nodes[n].label, order[n]))
        for ordinal, node_id in enumerate(constants):
            base = f"{names[src]}.{role[1:]}"
            refs[node_id] = base if ordinal == 0 else f"{base}.{ordinal}"
    return refs


def complete_alignments(ex: AlignedExample) -> AlignedExample:
    """Give every unaligned node the span of its nearest aligned neighbor.

    Spans propagate outward from the aligned nodes one undirected hop per
    round; per hop, parents win over children, then the smaller token start,
    then the earlier node. Idempotent; fails when nothing is aligned.
    """
    graph = ex.graph
    if not graph.alignments:
        raise CorpusError(f"example {ex.id!r} has no aligned nodes")
    if len(graph.alignments) == len(graph.nodes):
        return ex

    spans = dict(graph.alignments)
    order = {n: i for i, n in enumerate(graph.nodes)}
    while len(spans) < len(graph.nodes):
        additions = {}
        for node in graph.nodes:
            if node in spans:
                continue
            candidates = []
            for e in graph.incoming(node):
                if e.src in spans:
                    candidates.append((0, spans[e.src][0], order[e.src], e.src))
            for e in graph.outgoing(node):
                if e.dst in spans:
                    candidates.append((1, spans[e.dst][0], order[e.dst], e.dst))
            if candidates:
                candidates.sort()
                additions[node] = spans[candidates[0][3]]
        if not additions:
            # Unaligned nodes in a component with no aligned node at all.
            missing = [n for n in graph.nodes if n not in spans]
            raise CorpusError(
                f"example {ex.id!r}: cannot align {missing} by graph proximity")
        spans.update(additions)

    completed = AmrGraph()
    for node_id, concept in graph.nodes.items():
        completed.add_node(node_id, concept)
    for src, role, dst in graph.edges:
        completed.add_edge(src, role, dst)
    if graph.root is not None:
        completed.set_root(graph.root)
    completed.alignments.update(spans)
    return replace(ex, graph=completed)


def read_actions(path) -> list[list[PointedAction]]:
    """One action line per sentence; inverse of write_actions."""
    lines = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = []
            col = 1
            for token in raw.rstrip("\n").split(" "):
                if not token:
                    col += 1
                    continue
                try:
                    line.append(parse_action(token))
                except ActionError as exc:
                    raise CorpusError(
                        f"{path}: line {lineno}, column {col}: {exc}")
                col += len(token) + 1
            lines.append(line)
    return lines


def write_actions(lines, path):
    with open(path, "w", encoding="utf-8") as handle:
        for line in lines:
            handle.write(" ".join(str(pa) for pa in line) + "\n")
