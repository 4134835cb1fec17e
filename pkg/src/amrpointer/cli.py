"""Batch command line for oracle extraction, replay, scoring and decoding.

Exit codes: 0 ok, 1 usage, 2 data error, 3 internal invariant violation.
Partial output files are removed when a command fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from . import decode as D
from . import machine as M
from . import masks as K
from . import oracle as O
from . import smatch as S
from .actions import ActionError
from .corpus import CorpusError, read_actions, read_corpus, write_actions
from .graph import GraphError, PenmanError, is_connected, parse_penman
from .machine import InvalidActionError
from .templates import TemplateError


def _parallel_map(fn, items, jobs):
    if jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


class _AtomicOutput:
    """Write to a temp file, promote on success, drop on failure."""

    def __init__(self, path):
        self.path = path
        directory = os.path.dirname(os.path.abspath(path))
        fd, self.tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-")
        os.close(fd)

    def __enter__(self):
        return self.tmp_path

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            os.replace(self.tmp_path, self.path)
        elif os.path.exists(self.tmp_path):
            os.unlink(self.tmp_path)
        return False


def read_penman_file(path):
    """Penman graphs separated by blank lines; '#' comment lines skipped."""
    graphs = []
    with open(path, encoding="utf-8") as handle:
        content = handle.read()
    block: list[str] = []
    for line in content.splitlines() + [""]:
        if line.strip() and not line.lstrip().startswith("#"):
            block.append(line)
        elif block:
            graphs.append(parse_penman("\n".join(block)))
            block = []
    return graphs


def _oracle_config(args) -> O.OracleConfig:
    return O.OracleConfig(
        subgraph_mode={"default": "default", "all": "all_multinode"}[args.subgraph_mode],
        edge_order={"closer": "closer_first", "farther": "farther_first"}[args.edge_order],
        traversal={"pre": "pre_order", "post": "post_order"}[args.traversal])


def _extract_one(cfg, ex):
    return O.extract(ex, cfg)


def cmd_oracle_extract(args) -> int:
    examples = read_corpus(args.corpus)
    cfg = _oracle_config(args)
    outcomes = _parallel_map(partial(_extract_one, cfg), examples, args.jobs)
    with _AtomicOutput(args.out) as tmp:
        write_actions([list(o.actions) for o in outcomes], tmp)
    covered = sum(o.covered_triples for o in outcomes)
    total = sum(o.gold_triples for o in outcomes)
    avg = sum(len(o.actions) for o in outcomes) / len(outcomes) if outcomes else 0.0
    print(f"extracted {len(outcomes)} sentences, avg actions {avg:.1f}, "
          f"coverage {covered}/{total} ({100.0 * covered / total if total else 100.0:.1f}%)")
    return 0


def _replay_one(restarts, seed, pair):
    from .graph import to_triples

    ex, line = pair
    replayed = M.replay(ex.sentence, line)
    result = S.smatch(replayed, ex.graph, restarts=restarts, seed=seed)
    return result, to_triples(replayed).size(), to_triples(ex.graph).size()


def cmd_oracle_replay(args) -> int:
    examples = read_corpus(args.corpus)
    lines = read_actions(args.actions)
    if len(examples) != len(lines):
        raise CorpusError(
            f"{args.actions}: {len(lines)} action lines for "
            f"{len(examples)} corpus examples")
    scored = _parallel_map(partial(_replay_one, args.restarts, args.seed),
                           list(zip(examples, lines)), args.jobs)
    matched = total_pred = total_gold = 0
    for ex, (result, pred_size, gold_size) in zip(examples, scored):
        if args.report:
            print(f"{ex.id} {result.summary()}")
        matched += result.matched
        total_pred += pred_size
        total_gold += gold_size
    precision = matched / total_pred if total_pred else 0.0
    recall = matched / total_gold if total_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    if total_pred == 0 and total_gold == 0:
        f1 = 1.0
    avg_actions = sum(len(line) for line in lines) / len(lines) if lines else 0.0
    avg_len = sum(len(ex.sentence) for ex in examples) / len(examples) if examples else 0.0
    print(f"corpus Smatch {f1:.3f}")
    print(f"avg actions {avg_actions:.1f}")
    print(f"avg source length {avg_len:.1f}")
    return 0


def cmd_smatch(args) -> int:
    gold = read_penman_file(args.gold)
    pred = read_penman_file(args.pred)
    if len(gold) != len(pred):
        raise CorpusError(f"{len(pred)} predicted graphs vs {len(gold)} gold")
    top = not args.no_top
    if args.exact:
        matched = total_pred = total_gold = 0
        for p, g in zip(pred, gold):
            result = S.smatch_exact(p, g, top=top)
            matched += result.matched
            from .graph import to_triples
            total_pred += to_triples(p, top=top).size()
            total_gold += to_triples(g, top=top).size()
        precision = matched / total_pred if total_pred else 0.0
        recall = matched / total_gold if total_gold else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        if total_pred == 0 and total_gold == 0:
            f1 = 1.0
        print(f"P {precision:.3f} R {recall:.3f} F1 {f1:.3f}")
    else:
        result = S.corpus_smatch(list(zip(pred, gold)), restarts=args.restarts,
                                 seed=args.seed, top=top)
        print(result.summary())
    return 0


def cmd_stats(args) -> int:
    examples = read_corpus(args.corpus)
    lines = read_actions(args.actions)
    if len(examples) != len(lines):
        raise CorpusError(
            f"{args.actions}: {len(lines)} action lines for "
            f"{len(examples)} corpus examples")
    total_actions = sum(len(line) for line in lines)
    print(f"sentences {len(lines)}")
    print(f"avg actions {total_actions / len(lines):.1f}")
    print(f"avg source length {sum(len(ex.sentence) for ex in examples) / len(examples):.1f}")
    histogram: dict = {}
    for line in lines:
        for pointed in line:
            histogram[pointed.kind] = histogram.get(pointed.kind, 0) + 1
    for kind in sorted(histogram):
        print(f"{kind} {histogram[kind]}")
    return 0


def cmd_masks(args) -> int:
    examples = read_corpus(args.corpus)
    lines = read_actions(args.actions)
    if len(examples) != len(lines):
        raise CorpusError(
            f"{args.actions}: {len(lines)} action lines for "
            f"{len(examples)} corpus examples")
    with _AtomicOutput(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as handle:
            for ex, line in zip(examples, lines):
                K.export_masks(handle, ex.id, ex.sentence, line)
    print(f"wrote masks for {len(lines)} sentences to {args.out}")
    return 0


def cmd_train_mock(args) -> int:
    examples = read_corpus(args.corpus)
    lines = read_actions(args.actions)
    scorer = D.train_count_scorer(examples, lines, lam=getattr(args, "lambda"))
    with _AtomicOutput(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(scorer.to_json() + "\n")
    print(f"trained count scorer on {len(lines)} sentences "
          f"({len(scorer.vocabulary())} actions)")
    return 0


def _decode_one(scorer, beam, tmax, sentence):
    return D.beam_search(scorer, sentence, k=beam, t_max=tmax)


def cmd_decode(args) -> int:
    with open(args.model, encoding="utf-8") as handle:
        scorer = D.CountScorer.from_json(handle.read())
    examples = read_corpus(args.corpus, require_graph=False)
    decoder = partial(_decode_one, scorer, args.beam, args.tmax)
    outputs = _parallel_map(decoder, [ex.sentence for ex in examples], args.jobs)
    with _AtomicOutput(args.out) as tmp:
        write_actions(outputs, tmp)
    print(f"decoded {len(outputs)} sentences with beam {args.beam}")
    return 0


def cmd_check(args) -> int:
    graphs = read_penman_file(args.pred)
    detached = 0
    for i, graph in enumerate(graphs):
        connected = is_connected(graph)
        if not connected:
            detached += 1
        print(f"graph {i}: {'connected' if connected else 'detached'}")
    print(f"{detached}/{len(graphs)} graphs have detached nodes")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amrpointer",
        description="Cursor-and-pointer AMR transition toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    oracle = sub.add_parser("oracle", help="oracle extraction and replay")
    oracle_sub = oracle.add_subparsers(dest="oracle_command", required=True)

    extract = oracle_sub.add_parser("extract", help="gold graphs to actions")
    extract.add_argument("--corpus", required=True)
    extract.add_argument("--out", required=True)
    extract.add_argument("--subgraph-mode", choices=("default", "all"),
                         default="default")
    extract.add_argument("--edge-order", choices=("closer", "farther"),
                         default="closer")
    extract.add_argument("--traversal", choices=("pre", "post"), default="pre")
    extract.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    extract.set_defaults(func=cmd_oracle_extract)

    replay = oracle_sub.add_parser("replay", help="actions back to graphs")
    replay.add_argument("--corpus", required=True)
    replay.add_argument("--actions", required=True)
    replay.add_argument("--report", action="store_true")
    replay.add_argument("--restarts", type=int, default=16)
    replay.add_argument("--seed", type=int, default=0)
    replay.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    replay.set_defaults(func=cmd_oracle_replay)

    smatch_cmd = sub.add_parser("smatch", help="score predicted against gold")
    smatch_cmd.add_argument("--gold", required=True)
    smatch_cmd.add_argument("--pred", required=True)
    smatch_cmd.add_argument("--restarts", type=int, default=16)
    smatch_cmd.add_argument("--seed", type=int, default=0)
    smatch_cmd.add_argument("--exact", action="store_true")
    smatch_cmd.add_argument("--no-top", action="store_true")
    smatch_cmd.set_defaults(func=cmd_smatch)

    stats = sub.add_parser("stats", help="action file statistics")
    stats.add_argument("--actions", required=True)
    stats.add_argument("--corpus", required=True)
    stats.set_defaults(func=cmd_stats)

    masks_cmd = sub.add_parser("masks", help="export attention masks")
    masks_cmd.add_argument("--actions", required=True)
    masks_cmd.add_argument("--corpus", required=True)
    masks_cmd.add_argument("--out", required=True)
    masks_cmd.set_defaults(func=cmd_masks)

    train = sub.add_parser("train-mock", help="fit the count scorer")
    train.add_argument("--actions", required=True)
    train.add_argument("--corpus", required=True)
    train.add_argument("--out", required=True)
    train.add_argument("--lambda", type=float, default=0.5)
    train.set_defaults(func=cmd_train_mock)

    decode_cmd = sub.add_parser("decode", help="beam-search decode a corpus")
    decode_cmd.add_argument("--model", required=True)
    decode_cmd.add_argument("--corpus", required=True)
    decode_cmd.add_argument("--beam", type=int, default=1)
    decode_cmd.add_argument("--out", required=True)
    decode_cmd.add_argument("--tmax", type=int, default=None)
    decode_cmd.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    decode_cmd.set_defaults(func=cmd_decode)

    check = sub.add_parser("check", help="connectivity report")
    check.add_argument("--pred", required=True)
    check.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (CorpusError, PenmanError, GraphError, ActionError, TemplateError,
            O.OracleError, D.DecodeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidActionError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
