import random

import pytest

import amrpointer.actions as A
from amrpointer.actions import left_arc, merge, pred, reduce_, right_arc, shift
from amrpointer.graph import to_triples
from amrpointer.machine import (InvalidActionError, Sentence, apply,
                                initial_state, recover_graph, replay, run,
                                valid_actions)
from amrpointer.smatch import smatch
from amrpointer.oracle import extract
from amrpointer.corpus import read_actions, write_actions

from genexamples import random_corpus

FIGURE_SENTENCE = Sentence(("The", "boy", "wants", "to", "go"),
                           ("the", "boy", "want", "to", "go"))
FIGURE_ACTIONS = [
    reduce_(),                 # 1
    A.copy_lemma(),            # 2: boy
    shift(),                   # 3
    A.copy_sense01(),          # 4: want-01
    left_arc(2, ":ARG0"),      # 5: want-01 -> boy
    shift(),                   # 6
    reduce_(),                 # 7
    pred("go-02"),             # 8
    right_arc(5, ":ARG1"),     # 9: want-01 -> go-02, via want's last reference
    left_arc(2, ":ARG0"),      # 10: go-02 -> boy
    shift(),                   # 11
]


def test_fresh_state_validity():
    kinds, pointers = valid_actions(initial_state(FIGURE_SENTENCE))
    assert A.REDUCE in kinds and A.MERGE in kinds
    assert {A.COPY_LEMMA, A.COPY_SENSE01, A.PRED, A.SUBGRAPH} <= kinds
    assert A.SHIFT not in kinds
    assert A.LA not in kinds and A.RA not in kinds
    assert pointers == frozenset()


def test_after_first_copy():
    state = run(FIGURE_SENTENCE, FIGURE_ACTIONS[:2])  # REDUCE COPY at "boy"
    kinds, pointers = valid_actions(state)
    assert A.SHIFT in kinds
    assert A.REDUCE not in kinds
    assert A.LA not in kinds  # no second node yet
    assert pointers == frozenset()


def test_pointer_set_after_pred():
    state = run(FIGURE_SENTENCE, FIGURE_ACTIONS[:8])  # through PRED(go-02)
    kinds, pointers = valid_actions(state)
    assert pointers == frozenset({2, 4, 5})
    assert A.LA in kinds and A.RA in kinds
    boy = state.node_of_step(2)
    want = state.node_of_step(4)
    assert state.record_for(boy).reference_steps == (2,)
    assert state.record_for(want).reference_steps == (4, 5)


def test_figure_sequence_builds_figure_graph():
    graph = replay(FIGURE_SENTENCE, FIGURE_ACTIONS)
    labels = sorted(c.label for c in graph.nodes.values())
    assert labels == ["boy", "go-02", "want-01"]
    triples = to_triples(graph, top=False)
    by_label = {c.label: n for n, c in graph.nodes.items()}
    assert ("ARG0", by_label["want-01"], by_label["boy"]) in triples.relations
    assert ("ARG1", by_label["want-01"], by_label["go-02"]) in triples.relations
    assert ("ARG0", by_label["go-02"], by_label["boy"]) in triples.relations
    assert graph.root == by_label["want-01"]
    assert graph.alignments[by_label["boy"]] == (1, 2)


def test_pointer_to_non_node_step_rejected():
    state = run(FIGURE_SENTENCE, FIGURE_ACTIONS[:8])
    with pytest.raises(InvalidActionError, match="does not reference a node"):
        apply(state, left_arc(3, ":ARG0"))  # step 3 was SHIFT


def test_merge_at_last_token_rejected():
    state = initial_state(Sentence(("a", "b")))
    state = apply(state, reduce_())
    with pytest.raises(InvalidActionError):
        apply(state, merge())


def test_merge_must_end_in_a_node():
    state = initial_state(Sentence(("New", "York", "wins")))
    state = apply(state, merge())
    kinds, _ = valid_actions(state)
    assert A.REDUCE not in kinds and A.SHIFT not in kinds
    assert A.MERGE in kinds and A.PRED in kinds


def test_merged_span_alignment():
    sentence = Sentence(("New", "York", "wins"), ("new", "york", "win"))
    line = [merge(), pred("city"), shift(), A.copy_sense01(),
            left_arc(2, ":location"), shift()]
    graph = replay(sentence, line)
    city = next(n for n, c in graph.nodes.items() if c.label == "city")
    assert graph.alignments[city] == (0, 2)


def test_duplicate_edge_rejected():
    sentence = Sentence(("a", "b"))
    state = run(sentence, [pred("x"), shift(), pred("y"), left_arc(1, ":mod")])
    with pytest.raises(InvalidActionError, match="duplicate"):
        apply(state, left_arc(1, ":mod"))


def test_self_pointer_rejected():
    sentence = Sentence(("a", "b"))
    state = run(sentence, [pred("x"), shift(), pred("y")])
    with pytest.raises(InvalidActionError, match="current node"):
        apply(state, left_arc(3, ":mod"))


def test_constant_cannot_be_arc_source():
    sentence = Sentence(("a", "b"))
    state = run(sentence, [pred("boy"), shift(), pred("-")])
    # LA would draw the edge out of the constant "-" node.
    with pytest.raises(InvalidActionError, match="constant"):
        apply(state, left_arc(1, ":mod"))
    # RA into the constant from "boy" is fine.
    after = apply(state, right_arc(1, ":polarity"))
    assert len(after.edges) == 1


def test_cursor_advances_sum_to_length():
    for ex in random_corpus(seed=31, count=30):
        outcome = extract(ex)
        advances = sum(1 for pa in outcome.actions
                       if pa.kind in (A.SHIFT, A.REDUCE, A.MERGE))
        assert advances == len(ex.sentence)
        cursors = []
        state = initial_state(ex.sentence)
        for pa in outcome.actions:
            cursors.append(state.cursor)
            state = apply(state, pa)
        assert cursors == sorted(cursors)
        assert state.done


def test_pointers_resolve_to_earlier_nodes():
    for ex in random_corpus(seed=37, count=30):
        outcome = extract(ex)
        state = initial_state(ex.sentence)
        for pa in outcome.actions:
            if pa.action.is_arc:
                target = state.node_of_step(pa.pointer)
                assert target is not None
                assert state.record_for(target).creation_step <= pa.pointer
                assert pa.pointer < state.next_step
            state = apply(state, pa)


def test_apply_is_deterministic():
    state = run(FIGURE_SENTENCE, FIGURE_ACTIONS[:4])
    a = apply(state, left_arc(2, ":ARG0"))
    b = apply(state, left_arc(2, ":ARG0"))
    assert a == b


def test_replay_without_nodes_yields_empty_graph():
    graph = replay(Sentence(("a",)), [reduce_()])
    assert not graph.nodes
    assert graph.root is None


def test_recover_graph_requires_done():
    state = run(FIGURE_SENTENCE, FIGURE_ACTIONS[:4])
    with pytest.raises(InvalidActionError):
        recover_graph(state)


def _sample_valid(rng, state):
    kinds, pointers = valid_actions(state)
    choices = []
    if A.SHIFT in kinds:
        choices += [shift()] * 4
    if A.REDUCE in kinds:
        choices += [reduce_()] * 4
    if A.MERGE in kinds:
        choices.append(merge())
    if rng.random() < 0.5:
        choices.append(pred(rng.choice(["boy", "go-02", "-", "city"])))
        choices.append(A.copy_lemma())
    if pointers and rng.random() < 0.6:
        pointer = rng.choice(sorted(pointers))
        role = rng.choice([":ARG0", ":ARG1", ":mod"])
        for kind in (A.LA, A.RA):
            from amrpointer.machine import arc_violation
            if arc_violation(state, kind, pointer, role) is None:
                choices.append(A.PointedAction(A.Action(kind, role), pointer))
    return rng.choice(choices) if choices else None


def test_fuzzed_walks_terminate_and_recover():
    rng = random.Random(12345)
    for trial in range(300):
        length = rng.randint(1, 6)
        sentence = Sentence(tuple(f"w{i}" for i in range(length)))
        state = initial_state(sentence)
        steps = 0
        while not state.done:
            pointed = _sample_valid(rng, state)
            if pointed is None:
                pointed = A.copy_lemma()
            state = apply(state, pointed)
            steps += 1
            assert steps < 500
        recover_graph(state)  # must not raise


def test_oracle_files_replay_identically(tmp_path, hand_corpus):
    lines = [list(extract(ex).actions) for ex in hand_corpus]
    path = tmp_path / "actions.txt"
    write_actions(lines, path)
    reread = read_actions(path)
    assert reread == lines
    for ex, line in zip(hand_corpus, reread):
        graph = replay(ex.sentence, line)
        assert smatch(graph, ex.graph).f1 == pytest.approx(1.0)
