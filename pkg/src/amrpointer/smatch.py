"""Smatch: triple F1 under the best injective variable mapping.

The score is approximated by restart hill-climbing over mappings (the first
restart seeds greedily by concept match, the rest randomly), with an exact
brute-force matcher as an independent test oracle for small graphs.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .graph import AmrGraph, TripleSet, to_triples


@dataclass(frozen=True)
class SmatchResult:
    precision: float
    recall: float
    f1: float
    matched: int
    mapping: tuple  # ((var_a, var_b), ...) pairs of the best mapping found

    def summary(self) -> str:
        return f"P {self.precision:.3f} R {self.recall:.3f} F1 {self.f1:.3f}"


def _as_triples(g, top: bool) -> TripleSet:
    if isinstance(g, TripleSet):
        return g
    return to_triples(g, top=top)


def match_count(a: TripleSet, b: TripleSet, mapping: dict) -> int:
    """Triples of ``a`` whose image under ``mapping`` is a triple of ``b``."""
    count = 0
    for var, concept in a.instances:
        if (mapping.get(var), concept) in b.instances:
            count += 1
    for role, var, value in a.attributes:
        if var in mapping:
            if (role, mapping[var], value) in b.attributes:
                count += 1
        elif (role, var, value) in b.attributes:
            count += 1
    for role, var1, var2 in a.relations:
        if (role, mapping.get(var1), mapping.get(var2)) in b.relations:
            count += 1
    return count


def _scores(matched: int, size_a: int, size_b: int) -> tuple:
    if size_a == 0 and size_b == 0:
        return 1.0, 1.0, 1.0
    precision = matched / size_a if size_a else 0.0
    recall = matched / size_b if size_b else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def _hill_climb(a: TripleSet, b: TripleSet, restarts: int, seed: int) -> tuple:
    vars_a = a.variables()
    vars_b = b.variables()
    upper = min(a.size(), b.size())
    concept_of_b: dict[str, str] = {v: c for v, c in b.instances}

    best_count = -1
    best_mapping: dict = {}
    for restart in range(restarts):
        if restart == 0:
            mapping = _greedy_init(a, vars_a, vars_b, concept_of_b)
        else:
            rng = random.Random((seed << 16) ^ restart)
            images = vars_b.copy()
            rng.shuffle(images)
            mapping = dict(zip(vars_a, images))
        count = match_count(a, b, mapping)
        improved = True
        while improved:
            improved = False
            count, mapping, improved = _best_move(a, b, vars_a, vars_b,
                                                  mapping, count)
        if count > best_count:
            best_count = count
            best_mapping = mapping
        if best_count >= upper:
            break
    return best_count, best_mapping


def _greedy_init(a, vars_a, vars_b, concept_of_b) -> dict:
    mapping = {}
    used = set()
    concept_of_a = {v: c for v, c in a.instances}
    for var in vars_a:
        for candidate in vars_b:
            if candidate not in used and concept_of_b.get(candidate) == concept_of_a.get(var):
                mapping[var] = candidate
                used.add(candidate)
                break
    for var in vars_a:
        if var in mapping:
            continue
        for candidate in vars_b:
            if candidate not in used:
                mapping[var] = candidate
                used.add(candidate)
                break
    return mapping


def _best_move(a, b, vars_a, vars_b, mapping, count):
    """Single best relabel-or-swap move; ties keep the first enumerated."""
    best = (count, mapping, False)
    used = set(mapping.values())
    for var in vars_a:
        current = mapping.get(var)
        for candidate in vars_b:
            if candidate in used and candidate != current:
                continue
            trial = dict(mapping)
            if candidate == current:
                continue
            trial[var] = candidate
            trial_count = match_count(a, b, trial)
            if trial_count > best[0]:
                best = (trial_count, trial, True)
        if current is not None:
            trial = dict(mapping)
            del trial[var]
            trial_count = match_count(a, b, trial)
            if trial_count > best[0]:
                best = (trial_count, trial, True)
    for var1, var2 in itertools.combinations(vars_a, 2):
        if mapping.get(var1) == mapping.get(var2):
            continue
        trial = dict(mapping)
        img1, img2 = mapping.get(var1), mapping.get(var2)
        if img2 is None:
            trial[var1] = None
        else:
            trial[var1] = img2
        if img1 is None:
            trial[var2] = None
        else:
            trial[var2] = img1
        trial = {k: v for k, v in trial.items() if v is not None}
        trial_count = match_count(a, b, trial)
        if trial_count > best[0]:
            best = (trial_count, trial, True)
    return best


def smatch(a, b, restarts: int = 16, seed: int = 0, top: bool = True) -> SmatchResult:
    """Hill-climbing Smatch of ``a`` (predicted side) against ``b`` (gold side).

    Deterministic for fixed restarts and seed. Inputs may be graphs or
    pre-extracted TripleSets.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    ta, tb = _as_triples(a, top), _as_triples(b, top)
    matched, mapping = _hill_climb(ta, tb, restarts, seed)
    matched = max(matched, 0)
    precision, recall, f1 = _scores(matched, ta.size(), tb.size())
    pairs = tuple(sorted(mapping.items()))
    return SmatchResult(precision, recall, f1, matched, pairs)


def smatch_exact(a, b, top: bool = True, max_options: int = 2_000_000) -> SmatchResult:
    """Exhaustive-search Smatch; the true optimum for small graphs."""
    ta, tb = _as_triples(a, top), _as_triples(b, top)
    vars_a, vars_b = ta.variables(), tb.variables()
    if min(len(vars_a), len(vars_b)) > 8:
        raise ValueError("smatch_exact size bound exceeded (more than 8 "
                         "variables on both sides)")
    swap = len(vars_a) > len(vars_b)
    small, large = (vars_b, vars_a) if swap else (vars_a, vars_b)
    count_estimate = 1
    for i in range(len(small)):
        count_estimate *= len(large) - i
        if count_estimate > max_options:
            raise ValueError("smatch_exact size bound exceeded")

    source, target = (tb, ta) if swap else (ta, tb)
    best_matched = -1
    best_mapping: dict = {}
    for images in itertools.permutations(large, len(small)):
        mapping = dict(zip(small, images))
        matched = match_count(source, target, mapping)
        if matched > best_matched:
            best_matched = matched
            best_mapping = mapping
    if swap:
        best_mapping = {v: k for k, v in best_mapping.items()}
    best_matched = max(best_matched, 0)
    precision, recall, f1 = _scores(best_matched, ta.size(), tb.size())
    return SmatchResult(precision, recall, f1, best_matched,
                        tuple(sorted(best_mapping.items())))


def corpus_smatch(pairs, restarts: int = 16, seed: int = 0,
                  top: bool = True) -> SmatchResult:
    """Micro-averaged Smatch over (predicted, gold) graph pairs."""
    total_matched = total_a = total_b = 0
    for a, b in pairs:
        ta, tb = _as_triples(a, top), _as_triples(b, top)
        result = smatch(ta, tb, restarts=restarts, seed=seed)
        total_matched += result.matched
        total_a += ta.size()
        total_b += tb.size()
    precision, recall, f1 = _scores(total_matched, total_a, total_b)
    return SmatchResult(precision, recall, f1, total_matched, ())
