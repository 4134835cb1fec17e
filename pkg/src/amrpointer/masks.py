"""Deterministic attention permissions encoding parser and graph state.

For every action step the bundle records which source tokens the aligned
and lookahead cross-attention heads may see, which earlier target positions
the two direction-split graph heads may see, and which token is fed to the
decoder (arc steps re-feed the current node's creating action, so those
positions hold progressively richer views of the node).

Positions are decoder positions: 0 is the start symbol and the t-th action
sits at position t, the same indexing arc pointers use.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import actions as A
from . import machine as M
from .machine import MachineState, Sentence


class MaskError(Exception):
    """The action sequence cannot be replayed for mask computation."""


@dataclass(frozen=True)
class MaskBundle:
    """Attention permissions for one action step."""

    step: int
    cursor: int
    aligned_src: tuple  # singleton (cursor,)
    future_src: tuple  # strictly after the cursor
    neighbors_out: tuple  # LA-direction positions, current position included
    neighbors_in: tuple  # RA-direction positions, current position included
    held_input: str  # pointer-removed action string fed to the decoder

    def to_json(self) -> str:
        return json.dumps({
            "step": self.step,
            "cursor": self.cursor,
            "aligned": list(self.aligned_src),
            "future": list(self.future_src),
            "out": list(self.neighbors_out),
            "in": list(self.neighbors_in),
            "held": self.held_input,
        }, sort_keys=False)


def _replay_states(sentence: Sentence, line) -> list[MachineState]:
    states = [M.initial_state(sentence)]
    try:
        for pointed in line:
            states.append(M.apply(states[-1], pointed))
    except M.InvalidActionError as exc:
        raise MaskError(f"invalid action sequence at step {len(states)}: {exc}")
    return states


def _dummy_sentence(line) -> Sentence:
    advances = sum(1 for pa in line if pa.kind in A.CURSOR_KINDS)
    length = max(advances, 1)
    # MERGE needs at least one token beyond the merged span.
    cursor = 0
    for pa in line:
        if pa.kind == A.MERGE:
            length = max(length, cursor + 2)
        if pa.kind in A.CURSOR_KINDS:
            cursor += 1
    return Sentence(tuple(f"tok{i}" for i in range(length)))


def compute_masks(line, sentence: Sentence = None) -> list[MaskBundle]:
    """Mask bundles for every step of a valid action line."""
    if sentence is None:
        sentence = _dummy_sentence(line)
    states = _replay_states(sentence, line)
    n_tokens = len(sentence)
    bundles = []
    for t, pointed in enumerate(line, start=1):
        before, after = states[t - 1], states[t]
        cursor = before.cursor
        aligned = (cursor,)
        future = tuple(range(cursor + 1, n_tokens))
        current = after.current_node
        out_set, in_set = {t}, {t}
        held = str(pointed.action)
        if current is not None:
            record = after.record_for(current)
            creating = after.history[record.creation_step - 1]
            if pointed.action.is_arc:
                held = str(creating.action)
            for step in record.reference_steps[1:]:
                if step > t:
                    continue
                arc = after.history[step - 1]
                if arc.kind == A.LA:
                    out_set.add(arc.pointer)
                else:
                    in_set.add(arc.pointer)
        bundles.append(MaskBundle(
            step=t, cursor=cursor, aligned_src=aligned, future_src=future,
            neighbors_out=tuple(sorted(out_set)),
            neighbors_in=tuple(sorted(in_set)),
            held_input=held))
    return bundles


def alignment_masks(line, n_tokens: int) -> list[tuple]:
    """Per-step (aligned, future) source token sets."""
    sentence = Sentence(tuple(f"tok{i}" for i in range(n_tokens)))
    return [(b.aligned_src, b.future_src) for b in compute_masks(line, sentence)]


def graph_masks(line, sentence: Sentence = None) -> list[tuple]:
    """Per-step (neighbors_out, neighbors_in, held_input)."""
    return [(b.neighbors_out, b.neighbors_in, b.held_input)
            for b in compute_masks(line, sentence)]


def m_hop_closure(bundles: list[MaskBundle], layers: int) -> list[tuple]:
    """Positions reachable by composing the neighbor masks ``layers`` times."""
    if layers < 1:
        raise ValueError("layers must be at least 1")
    one_hop = {b.step: set(b.neighbors_out) | set(b.neighbors_in)
               for b in bundles}
    reach = {step: set(hops) for step, hops in one_hop.items()}
    for _ in range(layers - 1):
        reach = {
            step: set().union(*(one_hop.get(p, {p}) for p in positions))
            for step, positions in reach.items()
        }
    return [tuple(sorted(reach[b.step])) for b in bundles]


def export_masks(handle, example_id: str, sentence: Sentence, line):
    """Write one JSON header line plus one JSON line per step."""
    bundles = compute_masks(line, sentence)
    header = {"id": example_id, "S": len(sentence), "T": len(line)}
    handle.write(json.dumps(header) + "\n")
    for bundle in bundles:
        handle.write(bundle.to_json() + "\n")
