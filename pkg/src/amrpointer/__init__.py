"""Cursor-and-pointer transition toolkit for AMR parsing."""

from .actions import Action, PointedAction
from .corpus import AlignedExample, complete_alignments, read_actions, read_corpus, write_actions, write_corpus
from .graph import AmrGraph, Concept, Edge, TripleSet, infer_root, is_connected, parse_penman, print_penman, to_triples
from .machine import MachineState, Sentence, initial_state, recover_graph, replay, run, valid_actions
from .oracle import OracleConfig, OracleOutcome, build_subgraph_dictionary, extract, oracle_stats, subgraph_eligible
from .smatch import match_count, smatch, smatch_exact
from .templates import SubgraphTemplate, decode_template, serialize_template

__all__ = [
    "Action", "PointedAction",
    "AlignedExample", "complete_alignments", "read_actions", "read_corpus",
    "write_actions", "write_corpus",
    "AmrGraph", "Concept", "Edge", "TripleSet", "infer_root", "is_connected",
    "parse_penman", "print_penman", "to_triples",
    "MachineState", "Sentence", "initial_state", "recover_graph", "replay",
    "run", "valid_actions",
    "OracleConfig", "OracleOutcome", "build_subgraph_dictionary", "extract",
    "oracle_stats", "subgraph_eligible",
    "match_count", "smatch", "smatch_exact",
    "SubgraphTemplate", "decode_template", "serialize_template",
]

__version__ = "0.1.0"
