"""Action-sequence extraction from gold graphs and alignments.

One left-to-right pass: merge through multi-token spans, generate the nodes
aligned to each position (as a single subgraph action when the aligned
group qualifies, otherwise node by node in traversal order), attach each
new node to every previously built neighbor, and advance with SHIFT or
REDUCE. Arcs always point at the target node's latest reference step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import actions as A
from . import machine as M
from .corpus import AlignedExample, complete_alignments
from .graph import AmrGraph, to_triples
from .templates import SubgraphTemplate, TemplateError, build_template, serialize_template


class OracleError(Exception):
    """The example cannot be turned into an action sequence."""


@dataclass(frozen=True)
class OracleConfig:
    """Extraction variants.

    subgraph_mode "all_multinode" collapses every multi-node alignment into
    one subgraph action instead of only the externally unattached ones;
    edge_order flips arcs to build the farther attachments first; traversal
    generates leaves before parents within a multi-node token.
    """

    subgraph_mode: str = "default"  # default | all_multinode
    edge_order: str = "closer_first"  # closer_first | farther_first
    traversal: str = "pre_order"  # pre_order | post_order

    def __post_init__(self):
        if self.subgraph_mode not in ("default", "all_multinode"):
            raise ValueError(f"bad subgraph_mode {self.subgraph_mode!r}")
        if self.edge_order not in ("closer_first", "farther_first"):
            raise ValueError(f"bad edge_order {self.edge_order!r}")
        if self.traversal not in ("pre_order", "post_order"):
            raise ValueError(f"bad traversal {self.traversal!r}")


@dataclass(frozen=True)
class OracleOutcome:
    """Extracted actions plus how much of the gold graph they reproduce."""

    actions: tuple
    covered_triples: int
    gold_triples: int

    @property
    def full_coverage(self) -> bool:
        return self.covered_triples == self.gold_triples


def subgraph_eligible(group: list, graph: AmrGraph,
                      all_multinode: bool = False) -> Optional[SubgraphTemplate]:
    """Template for a node group, or None when it must be built node by node.

    A group qualifies when it has at least two nodes, a unique internal
    root, and is internally connected and acyclic; by default every
    non-root member must additionally have no edges crossing the group
    boundary (subgraph internals are unreachable for later attachment).
    """
    if len(group) < 2:
        return None
    members = set(group)
    if not all_multinode:
        internal_targets = {e.dst for e in graph.edges
                            if e.src in members and e.dst in members}
        roots = [n for n in group if n not in internal_targets]
        for node in group:
            if len(roots) == 1 and node == roots[0]:
                continue
            for e in graph.outgoing(node) + graph.incoming(node):
                other = e.dst if e.src == node else e.src
                if other not in members:
                    return None
    try:
        template, _ = build_template(graph, group)
    except TemplateError:
        return None
    return template


def extract(ex: AlignedExample, cfg: OracleConfig = OracleConfig()) -> OracleOutcome:
    """Derive the oracle action sequence for one aligned example."""
    ex = complete_alignments(ex)
    gold = ex.graph
    spans = gold.alignments
    gold_order = {n: i for i, n in enumerate(gold.nodes)}

    state = M.initial_state(ex.sentence)
    emitted: dict[str, str] = {}  # gold node -> machine node

    def span_of(node):
        return spans[node]

    def apply(pointed):
        nonlocal state
        state = M.apply(state, pointed)

    def emit_arcs(gold_node, exclude=frozenset()):
        """Attach the current node to every emitted, pointable gold neighbor."""
        arcs = []
        for e in gold.outgoing(gold_node):
            if e.dst in emitted and e.dst not in exclude:
                arcs.append((A.LA, e.role, emitted[e.dst]))
        for e in gold.incoming(gold_node):
            if e.src in emitted and e.src not in exclude:
                arcs.append((A.RA, e.role, emitted[e.src]))
        pointable = {rec.node: rec.reference_steps[-1]
                     for rec in state.node_records}
        keyed = []
        for kind, role, target in arcs:
            if target not in pointable:  # subgraph internals are lost
                continue
            ref = pointable[target]
            keyed.append((-ref if cfg.edge_order == "closer_first" else ref,
                          role, kind, ref))
        keyed.sort()
        for _, role, kind, ref in keyed:
            apply(A.PointedAction(A.Action(kind, role), ref))

    def emit_node(gold_node):
        concept = gold.nodes[gold_node]
        lemma = state.sentence.lemmas[state.cursor].lower()
        if not concept.is_constant and lemma == concept.label:
            apply(A.copy_lemma())
        elif not concept.is_constant and lemma + "-01" == concept.label:
            apply(A.copy_sense01())
        else:
            apply(A.pred(concept.label))
        emitted[gold_node] = state.current_node
        emit_arcs(gold_node)

    def emit_template(template, ordered_gold_nodes):
        apply(A.subgraph(serialize_template(template)))
        base_index = len(state.nodes) - len(ordered_gold_nodes)
        for i, gold_node in enumerate(ordered_gold_nodes):
            emitted[gold_node] = state.nodes[base_index + i][0]
        # Only boundary-crossing edges of the root remain to be drawn.
        emit_arcs(ordered_gold_nodes[0], exclude=frozenset(ordered_gold_nodes))

    def traversal_order(group):
        members = set(group)
        children = {n: [] for n in group}
        has_parent = set()
        for e in gold.edges:
            if e.src in members and e.dst in members:
                children[e.src].append(e)
                has_parent.add(e.dst)
        roots = sorted((n for n in group if n not in has_parent),
                       key=lambda n: gold_order[n])
        if not roots:  # internal cycle through inverse roles
            roots = sorted(group, key=lambda n: gold_order[n])
        order = []
        seen = set()

        def child_key(e):
            leaf_first = 0 if not children.get(e.dst) else 1
            return (e.role, leaf_first, gold_order[e.dst])

        def visit(node):
            if node in seen:
                return
            seen.add(node)
            if cfg.traversal == "pre_order":
                order.append(node)
            for e in sorted(children[node], key=child_key):
                visit(e.dst)
            if cfg.traversal == "post_order":
                order.append(node)

        for root in roots:
            visit(root)
        for node in sorted(group, key=lambda n: gold_order[n]):
            visit(node)
        return order

    while not state.done:
        cursor = state.cursor
        pending = [n for n in gold.nodes
                   if n not in emitted and span_of(n)[0] <= cursor < span_of(n)[1] - 1]
        if pending:
            apply(A.merge())
            continue
        group = [n for n in gold.nodes
                 if n not in emitted and span_of(n)[1] - 1 <= cursor]
        if not group:
            apply(A.reduce_())
            continue
        template = subgraph_eligible(
            group, gold, all_multinode=cfg.subgraph_mode == "all_multinode")
        if template is not None:
            _, ordered = build_template(gold, group)
            emit_template(template, ordered)
        else:
            for node in traversal_order(group):
                emit_node(node)
        apply(A.shift())

    covered, total = _coverage(gold, state, emitted)
    return OracleOutcome(tuple(state.history), covered, total)


def _coverage(gold: AmrGraph, state: M.MachineState,
              emitted: dict) -> tuple[int, int]:
    """Count gold triples the replayed graph reproduces under the known map."""
    replayed = M.recover_graph(state)
    gold_triples = to_triples(gold)
    got = to_triples(replayed)
    covered = 0
    for var, concept in gold_triples.instances:
        if (emitted.get(var), concept) in got.instances:
            covered += 1
    for role, var, value in gold_triples.attributes:
        if role == "TOP":
            if emitted.get(var) is not None and replayed.root == emitted[var]:
                covered += 1
        elif (role, emitted.get(var), value) in got.attributes:
            covered += 1
    for role, var1, var2 in gold_triples.relations:
        if (role, emitted.get(var1), emitted.get(var2)) in got.relations:
            covered += 1
    return covered, gold_triples.size()


def build_subgraph_dictionary(examples, cfg: OracleConfig = OracleConfig()) -> dict:
    """Label -> template over a corpus; identical structures collide."""
    dictionary: dict[str, SubgraphTemplate] = {}
    for ex in examples:
        ex = complete_alignments(ex)
        groups: dict[tuple, list] = {}
        for node, span in ex.graph.alignments.items():
            groups.setdefault(span, []).append(node)
        for group in groups.values():
            template = subgraph_eligible(
                group, ex.graph,
                all_multinode=cfg.subgraph_mode == "all_multinode")
            if template is not None:
                dictionary[serialize_template(template)] = template
    return dictionary


def write_subgraph_dictionary(dictionary: dict, path):
    with open(path, "w", encoding="utf-8") as handle:
        for label in sorted(dictionary):
            handle.write(f"{label}\t{serialize_template(dictionary[label])}\n")


def read_subgraph_dictionary(path) -> dict:
    from .templates import decode_template

    dictionary = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            label, _, serialized = line.partition("\t")
            dictionary[label] = decode_template(serialized)
    return dictionary


def oracle_stats(examples, outcomes, restarts: int = 16, seed: int = 0) -> dict:
    """Corpus averages plus the oracle Smatch of replay against gold."""
    from .smatch import corpus_smatch

    if not examples:
        raise OracleError("empty corpus")
    if len(examples) != len(outcomes):
        raise OracleError("examples and outcomes differ in length")
    pairs = []
    for ex, outcome in zip(examples, outcomes):
        replayed = M.replay(ex.sentence, list(outcome.actions))
        pairs.append((replayed, ex.graph))
    score = corpus_smatch(pairs, restarts=restarts, seed=seed)
    return {
        "avg_actions": sum(len(o.actions) for o in outcomes) / len(outcomes),
        "oracle_smatch": score.f1,
        "avg_source_len": sum(len(ex.sentence) for ex in examples) / len(examples),
    }
