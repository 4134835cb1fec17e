"""The cursor-and-pointer transition machine.

A single cursor scans the sentence left to right; node actions build graph
nodes at the cursor, and arc actions attach the most recently created node
to any earlier node by pointing at one of its action steps.

Step indexing: step 0 is the start symbol, the t-th applied action has step
index t. A node's reference steps are its creation step plus every arc step
applied while it was the current node; pointers may name any reference step
of a node, and the oracle and decoder emit the latest one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from . import actions as A
from .actions import Action, PointedAction
from .graph import AmrGraph, Concept, Edge, GraphError, infer_root, is_constant_label
from .templates import TemplateError, decode_template


class InvalidActionError(Exception):
    """An action was rejected; the message names the violated rule."""


@dataclass(frozen=True)
class Sentence:
    """Tokens plus lemmas; lemmas default to the tokens themselves."""

    tokens: tuple
    lemmas: tuple = None

    def __post_init__(self):
        if not self.tokens:
            raise ValueError("empty sentence")
        if self.lemmas is None:
            object.__setattr__(self, "lemmas", tuple(self.tokens))
        if len(self.lemmas) != len(self.tokens):
            raise ValueError("lemmas and tokens must have the same length")

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class NodeRecord:
    """Where a node lives in the action sequence."""

    node: str
    creation_step: int
    reference_steps: tuple


@dataclass(frozen=True)
class MachineState:
    """Full parser state; a value that can be cheaply copied per hypothesis."""

    sentence: Sentence
    cursor: int = 0
    history: tuple = ()
    node_records: tuple = ()  # tuple[NodeRecord], creation order
    current_node: Optional[str] = None
    merge_start: Optional[int] = None
    acted_at_cursor: bool = False
    nodes: tuple = ()  # tuple[(node_id, Concept)]
    edges: tuple = ()  # tuple[Edge]
    node_spans: tuple = ()  # tuple[(node_id, (start, end))]
    step_to_node: tuple = ()  # tuple[(step, node_id)]

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.sentence)

    @property
    def next_step(self) -> int:
        return len(self.history) + 1

    def current_span(self) -> tuple[int, int]:
        start = self.merge_start if self.merge_start is not None else self.cursor
        return (start, self.cursor + 1)

    def record_for(self, node_id: str) -> NodeRecord:
        for rec in self.node_records:
            if rec.node == node_id:
                return rec
        raise KeyError(node_id)

    def node_of_step(self, step: int) -> Optional[str]:
        for s, node in self.step_to_node:
            if s == step:
                return node
        return None

    def concept_of(self, node_id: str) -> Concept:
        for nid, concept in self.nodes:
            if nid == node_id:
                return concept
        raise KeyError(node_id)

    def latest_reference(self, node_id: str) -> int:
        return self.record_for(node_id).reference_steps[-1]


def initial_state(sentence: Sentence) -> MachineState:
    return MachineState(sentence=sentence)


def valid_actions(state: MachineState) -> tuple[frozenset, frozenset]:
    """Valid action kinds plus the set of valid pointer steps.

    Node-creating kinds are always available at a token. Arc kinds appear
    when a current node exists and some other node is pointable; the pointer
    set holds every reference step of every node other than the current one
    (subgraph internals are never pointable). Duplicate-edge and
    constant-source checks are per concrete arc, see ``arc_violation``.
    """
    if state.done:
        raise InvalidActionError("machine is done; no actions are valid")
    kinds = set(A.NODE_KINDS)
    if state.acted_at_cursor:
        kinds.add(A.SHIFT)
    elif state.merge_start is None:
        kinds.add(A.REDUCE)
    if state.cursor < len(state.sentence) - 1:
        kinds.add(A.MERGE)
    pointers: set[int] = set()
    if state.current_node is not None:
        for rec in state.node_records:
            if rec.node != state.current_node:
                pointers.update(rec.reference_steps)
    if pointers:
        kinds.update(A.ARC_KINDS)
    return frozenset(kinds), frozenset(pointers)


def arc_violation(state: MachineState, kind: str, pointer: int,
                  role: str) -> Optional[str]:
    """Reason the concrete arc is invalid, or None when it is allowed."""
    if state.current_node is None:
        return "no current node to attach"
    target = state.node_of_step(pointer)
    if target is None:
        return "pointer does not reference a node"
    if target == state.current_node:
        return "pointer references the current node itself"
    if kind == A.LA:
        src, dst = state.current_node, target
    else:
        src, dst = target, state.current_node
    if state.concept_of(src).is_constant:
        return "arc source is a constant"
    if Edge(src, role, dst) in state.edges:
        return "duplicate edge"
    return None


def apply(state: MachineState, pointed: PointedAction) -> MachineState:
    """Apply one action, returning the successor state.

    Raises InvalidActionError naming the violated rule when the action is
    not valid in ``state``.
    """
    if state.done:
        raise InvalidActionError("machine is done")
    action = pointed.action
    kinds, pointers = valid_actions(state)
    if action.kind not in kinds:
        raise InvalidActionError(_kind_rejection(state, action.kind))
    step = state.next_step
    history = state.history + (pointed,)

    if action.kind == A.SHIFT:
        return replace(state, history=history, cursor=state.cursor + 1,
                       acted_at_cursor=False, current_node=None,
                       merge_start=None)
    if action.kind == A.REDUCE:
        return replace(state, history=history, cursor=state.cursor + 1,
                       acted_at_cursor=False, current_node=None,
                       merge_start=None)
    if action.kind == A.MERGE:
        start = state.merge_start if state.merge_start is not None else state.cursor
        return replace(state, history=history, cursor=state.cursor + 1,
                       merge_start=start, acted_at_cursor=False,
                       current_node=None)

    if action.kind in (A.COPY_LEMMA, A.COPY_SENSE01, A.PRED):
        if action.kind == A.COPY_LEMMA:
            label = state.sentence.lemmas[state.cursor].lower()
        elif action.kind == A.COPY_SENSE01:
            label = state.sentence.lemmas[state.cursor].lower() + "-01"
        else:
            label = action.label
        node_id = f"m{len(state.nodes)}"
        concept = Concept(label, is_constant=is_constant_label(label))
        record = NodeRecord(node_id, step, (step,))
        return replace(
            state, history=history, acted_at_cursor=True, current_node=node_id,
            nodes=state.nodes + ((node_id, concept),),
            node_spans=state.node_spans + ((node_id, state.current_span()),),
            node_records=state.node_records + (record,),
            step_to_node=state.step_to_node + ((step, node_id),))

    if action.kind == A.SUBGRAPH:
        try:
            template = decode_template(action.label)
        except TemplateError as exc:
            raise InvalidActionError(f"bad subgraph label: {exc}")
        base = len(state.nodes)
        ids = [f"m{base + i}" for i in range(len(template.concepts))]
        span = state.current_span()
        new_nodes = tuple((ids[i], c) for i, c in enumerate(template.concepts))
        new_spans = tuple((nid, span) for nid in ids)
        new_edges = tuple(Edge(ids[s], role, ids[d])
                          for s, role, d in template.edges)
        root_id = ids[template.root_index]
        record = NodeRecord(root_id, step, (step,))
        return replace(
            state, history=history, acted_at_cursor=True, current_node=root_id,
            nodes=state.nodes + new_nodes,
            edges=state.edges + new_edges,
            node_spans=state.node_spans + new_spans,
            node_records=state.node_records + (record,),
            step_to_node=state.step_to_node + ((step, root_id),))

    # Arc actions; any reference step of another node is accepted.
    reason = arc_violation(state, action.kind, pointed.pointer, action.label)
    if reason is not None:
        raise InvalidActionError(reason)
    target = state.node_of_step(pointed.pointer)
    if action.kind == A.LA:
        edge = Edge(state.current_node, action.label, target)
    else:
        edge = Edge(target, action.label, state.current_node)
    records = tuple(
        NodeRecord(rec.node, rec.creation_step, rec.reference_steps + (step,))
        if rec.node == state.current_node else rec
        for rec in state.node_records)
    return replace(
        state, history=history, edges=state.edges + (edge,),
        node_records=records,
        step_to_node=state.step_to_node + ((step, state.current_node),))


def _kind_rejection(state: MachineState, kind: str) -> str:
    if kind == A.SHIFT:
        return "SHIFT requires an action at the current cursor position"
    if kind == A.REDUCE:
        if state.merge_start is not None:
            return "REDUCE is not allowed inside a merged span"
        return "REDUCE requires no action at the current cursor position"
    if kind == A.MERGE:
        return "MERGE is not allowed at the last token"
    if kind in A.ARC_KINDS:
        if state.current_node is None:
            return "arc actions require a current node"
        return "arc actions require another pointable node"
    return f"action kind {kind} is not valid here"


def recover_graph(state: MachineState, root: str = None) -> AmrGraph:
    """Build the graph of a finished machine, with inferred or given root."""
    if not state.done:
        raise InvalidActionError("cannot recover a graph before the machine is done")
    graph = AmrGraph()
    for node_id, concept in state.nodes:
        graph.add_node(node_id, concept)
    for node_id, span in state.node_spans:
        graph.alignments[node_id] = span
    for src, role, dst in state.edges:
        graph.add_edge(src, role, dst)
    if root is not None:
        graph.set_root(root)
    elif graph.nodes:
        graph.set_root(infer_root(graph))
    return graph


def run(sentence: Sentence, line: list) -> MachineState:
    """Fold ``apply`` over an action line from the initial state."""
    state = initial_state(sentence)
    for pointed in line:
        state = apply(state, pointed)
    return state


def replay(sentence: Sentence, line: list, root: str = None) -> AmrGraph:
    """Apply a full action line and recover the resulting graph."""
    return recover_graph(run(sentence, line), root=root)
