"""Constrained beam search over joint (action, pointer) outputs.

Scorers supply one distribution over pointer-removed actions and one over
pointer positions; the search restricts both to what the state machine
allows, takes the single most likely valid pointer per arc action, and
multiplies it into the arc's score. A deterministic count-based scorer
stands in for a trained model.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Protocol

from . import actions as A
from . import machine as M
from .actions import PointedAction, format_vocab_action, parse_vocab_action
from .machine import MachineState, Sentence

_SCORE_FLOOR = 1e-12
_START = "<s>"
_SENSE_SUFFIX = re.compile(r"^(.*)-\d{2,}$")


class DecodeError(Exception):
    pass


class Scorer(Protocol):
    """Scoring contract used by the beam search."""

    def vocabulary(self) -> list:
        """Pointer-removed actions, in the deterministic tie-break order."""

    def score(self, state: MachineState) -> tuple:
        """(action scores keyed by vocab string, pointer scores by position)."""


@dataclass
class CountScorer:
    """Conditional action counts keyed by (previous action kind, token class).

    The token class is "verb" for cursor lemmas that produced a sense-
    suffixed node at training time and "other" otherwise. Action scores are
    add-one smoothed; pointer scores decay exponentially with distance over
    the valid pointer positions (uniform at lam=0).
    """

    lam: float = 0.5
    counts: dict = field(default_factory=dict)  # "prev|class" -> {action: n}
    verb_lemmas: set = field(default_factory=set)

    def __post_init__(self):
        self._vocab = sorted(
            {parse_vocab_action(text)
             for observed in self.counts.values() for text in observed},
            key=lambda a: a.sort_key())
        self._vocab_strings = [format_vocab_action(a) for a in self._vocab]

    def vocabulary(self) -> list:
        return list(self._vocab)

    def context(self, state: MachineState) -> str:
        prev = state.history[-1].kind if state.history else _START
        lemma = state.sentence.lemmas[state.cursor].lower()
        token_class = "verb" if lemma in self.verb_lemmas else "other"
        return f"{prev}|{token_class}"

    def score(self, state: MachineState) -> tuple:
        observed = self.counts.get(self.context(state), {})
        denominator = sum(observed.values()) + len(self._vocab)
        action_scores = {
            text: (observed.get(text, 0) + 1) / denominator
            for text in self._vocab_strings
        }
        _, pointers = M.valid_actions(state)
        pointer_scores: dict = {}
        if pointers:
            t = state.next_step
            weights = {p: math.exp(-self.lam * (t - p)) for p in pointers}
            z = sum(weights.values())
            pointer_scores = {p: w / z for p, w in weights.items()}
        return action_scores, pointer_scores

    def to_json(self) -> str:
        payload = {
            "lambda": self.lam,
            "counts": {ctx: dict(sorted(observed.items()))
                       for ctx, observed in sorted(self.counts.items())},
            "verb_lemmas": sorted(self.verb_lemmas),
        }
        return json.dumps(payload, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CountScorer":
        payload = json.loads(text)
        return cls(lam=payload["lambda"], counts=payload["counts"],
                   verb_lemmas=set(payload.get("verb_lemmas", [])))


def train_count_scorer(examples, lines, lam: float = 0.5) -> CountScorer:
    """Fit a CountScorer on aligned (example, action line) training pairs."""
    if not lines or len(examples) != len(lines):
        raise DecodeError("training needs one action line per example")
    replays = []
    verb_lemmas: set = set()
    for ex, line in zip(examples, lines):
        states = [M.initial_state(ex.sentence)]
        for pointed in line:
            states.append(M.apply(states[-1], pointed))
        replays.append(states[:-1])
        for state, pointed in zip(states, line):
            lemma = state.sentence.lemmas[state.cursor].lower()
            if pointed.kind == A.COPY_SENSE01:
                verb_lemmas.add(lemma)
            elif pointed.kind == A.PRED:
                match = _SENSE_SUFFIX.match(pointed.action.label)
                if match and match.group(1) == lemma:
                    verb_lemmas.add(lemma)

    counts: dict = {}
    for (ex, line), states in zip(zip(examples, lines), replays):
        for state, pointed in zip(states, line):
            prev = state.history[-1].kind if state.history else _START
            lemma = state.sentence.lemmas[state.cursor].lower()
            token_class = "verb" if lemma in verb_lemmas else "other"
            context = f"{prev}|{token_class}"
            text = format_vocab_action(pointed.action)
            bucket = counts.setdefault(context, {})
            bucket[text] = bucket.get(text, 0) + 1
    return CountScorer(lam=lam, counts=counts, verb_lemmas=verb_lemmas)


@dataclass(frozen=True)
class _Hypothesis:
    state: MachineState
    log_score: float
    emitted: tuple


def _forced_completion(state: MachineState):
    """Cursor-advancing actions that finish the machine from any state."""
    while not state.done:
        kinds, _ = M.valid_actions(state)
        if A.SHIFT in kinds:
            pointed = A.shift()
        elif A.REDUCE in kinds:
            pointed = A.reduce_()
        else:  # mid-merge: a node action unblocks SHIFT
            pointed = A.copy_lemma()
        state = M.apply(state, pointed)
        yield pointed


def beam_search(scorer: Scorer, sentence: Sentence, k: int = 1,
                t_max: int = None) -> list:
    """Best finished action sequence under the scorer, machine-valid throughout.

    Finished hypotheses collect in a pool; the search stops once no live
    hypothesis can outscore the pool (step scores never exceed one), and any
    hypotheses still live at ``t_max`` are force-completed with
    cursor-advancing actions.
    """
    if k < 1:
        raise DecodeError("beam size must be at least 1")
    if t_max is None:
        t_max = 4 * len(sentence) + 8
    if t_max < len(sentence):
        raise DecodeError("t_max must be at least the sentence length")
    vocab = scorer.vocabulary()

    live = [_Hypothesis(M.initial_state(sentence), 0.0, ())]
    finished: list = []

    for _ in range(t_max):
        if not live:
            break
        if finished and max(f.log_score for f in finished) >= max(
                h.log_score for h in live):
            break
        candidates = []
        for parent_idx, hyp in enumerate(live):
            kinds, pointers = M.valid_actions(hyp.state)
            action_scores, pointer_scores = scorer.score(hyp.state)
            p_star = None
            q_star = 0.0
            if pointers:
                p_star = max(pointers,
                             key=lambda p: (pointer_scores.get(p, 0.0), p))
                q_star = pointer_scores.get(p_star, 0.0)
            options = []
            for rank, action in enumerate(vocab):
                if action.kind not in kinds:
                    continue
                base = action_scores.get(format_vocab_action(action), 0.0)
                if action.is_arc:
                    if p_star is None or M.arc_violation(
                            hyp.state, action.kind, p_star, action.label):
                        continue
                    options.append((rank, action, p_star, base * q_star))
                else:
                    options.append((rank, action, None, base))
            if not options:
                continue
            if all(score <= 0.0 for _, _, _, score in options):
                uniform = 1.0 / len(options)
                options = [(rank, action, ptr, uniform)
                           for rank, action, ptr, _ in options]
            for rank, action, ptr, score in options:
                log_score = hyp.log_score + math.log(max(score, _SCORE_FLOOR))
                candidates.append((-log_score, parent_idx, rank, hyp,
                                   PointedAction(action, ptr)))
        if not candidates:
            break
        candidates.sort(key=lambda c: c[:3])
        new_live = []
        for neg_score, _, _, hyp, pointed in candidates:
            # Only cursor moves at the last token can finish; pool them all,
            # keep the top-k unfinished.
            finishes = (pointed.kind in (A.SHIFT, A.REDUCE)
                        and hyp.state.cursor == len(sentence) - 1)
            if finishes:
                finished.append(_Hypothesis(
                    M.apply(hyp.state, pointed), -neg_score,
                    hyp.emitted + (pointed,)))
            elif len(new_live) < k:
                new_live.append(_Hypothesis(
                    M.apply(hyp.state, pointed), -neg_score,
                    hyp.emitted + (pointed,)))
        live = new_live

    for hyp in live:
        state, log_score, emitted = hyp.state, hyp.log_score, hyp.emitted
        for pointed in _forced_completion(state):
            action_scores, pointer_scores = scorer.score(state)
            step = action_scores.get(format_vocab_action(pointed.action), 0.0)
            if pointed.action.is_arc:
                step *= pointer_scores.get(pointed.pointer, 0.0)
            log_score += math.log(max(step, _SCORE_FLOOR))
            state = M.apply(state, pointed)
            emitted = emitted + (pointed,)
        finished.append(_Hypothesis(state, log_score, emitted))

    if not finished:
        raise DecodeError("beam search produced no finished hypothesis")

    vocab_rank = {format_vocab_action(a): i for i, a in enumerate(vocab)}

    def final_key(hyp: _Hypothesis):
        sequence_key = tuple(
            (vocab_rank.get(format_vocab_action(pa.action), len(vocab)),
             pa.action.sort_key(),
             -(pa.pointer if pa.pointer is not None else -1))
            for pa in hyp.emitted)
        return (-hyp.log_score, len(hyp.emitted), sequence_key)

    return list(min(finished, key=final_key).emitted)


def joint_logprob(scorer: Scorer, sentence: Sentence, line: list) -> float:
    """Log of the factored sequence probability under the scorer.

    Arc steps contribute their pointer probability on top of the action
    probability; other steps only the action probability. Invalid sequences
    raise InvalidActionError.
    """
    state = M.initial_state(sentence)
    total = 0.0
    for pointed in line:
        action_scores, pointer_scores = scorer.score(state)
        p = action_scores.get(format_vocab_action(pointed.action), 0.0)
        total += math.log(p) if p > 0.0 else -math.inf
        if pointed.action.is_arc:
            q = pointer_scores.get(pointed.pointer, 0.0)
            total += math.log(q) if q > 0.0 else -math.inf
        state = M.apply(state, pointed)
    return total
