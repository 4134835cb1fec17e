"""Transition action vocabulary and its text encoding.

One action per token, space separated, one sentence per line:

    ACTION := SHIFT | REDUCE | MERGE | COPY_LEMMA | COPY_SENSE01
            | PRED(<label>) | SUBGRAPH(<label>)
            | LA(<uint>,<role>) | RA(<uint>,<role>)

Labels percent-encode space, ``(``, ``)``, ``,`` and ``%``. Arc pointers are
action step indices: step 0 is the start symbol, the t-th emitted action has
step index t.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

SHIFT = "SHIFT"
REDUCE = "REDUCE"
MERGE = "MERGE"
COPY_LEMMA = "COPY_LEMMA"
COPY_SENSE01 = "COPY_SENSE01"
PRED = "PRED"
SUBGRAPH = "SUBGRAPH"
LA = "LA"
RA = "RA"

KIND_ORDER = (SHIFT, REDUCE, MERGE, COPY_LEMMA, COPY_SENSE01, PRED, SUBGRAPH,
              LA, RA)
_KIND_RANK = {kind: i for i, kind in enumerate(KIND_ORDER)}

NODE_KINDS = frozenset({COPY_LEMMA, COPY_SENSE01, PRED, SUBGRAPH})
ARC_KINDS = frozenset({LA, RA})
CURSOR_KINDS = frozenset({SHIFT, REDUCE, MERGE})

_ROLE_RE = re.compile(r"^:[A-Za-z0-9-]+$")
_ESCAPES = {"%": "%25", " ": "%20", "(": "%28", ")": "%29", ",": "%2C"}
_UNESCAPE_RE = re.compile(r"%([0-9A-Fa-f]{2})")


class ActionError(ValueError):
    """Malformed action token or action constraint violation."""


def encode_label(label: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in label)


def decode_label(label: str) -> str:
    return _UNESCAPE_RE.sub(lambda m: chr(int(m.group(1), 16)), label)


@dataclass(frozen=True)
class Action:
    """A pointer-removed action: a kind plus a label or an arc role."""

    kind: str
    label: Optional[str] = None  # node label for PRED/SUBGRAPH, role for arcs

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ActionError(f"unknown action kind {self.kind!r}")
        if self.kind in (PRED, SUBGRAPH):
            if not self.label:
                raise ActionError(f"{self.kind} requires a label")
        elif self.kind in ARC_KINDS:
            if not self.label or not _ROLE_RE.match(self.label):
                raise ActionError(f"{self.kind} requires a role, got "
                                  f"{self.label!r}")
        elif self.label is not None:
            raise ActionError(f"{self.kind} takes no label")

    @property
    def is_arc(self) -> bool:
        return self.kind in ARC_KINDS

    @property
    def is_node(self) -> bool:
        return self.kind in NODE_KINDS

    def sort_key(self):
        return (_KIND_RANK[self.kind], self.label or "")

    def __str__(self):
        if self.kind in (PRED, SUBGRAPH):
            return f"{self.kind}({encode_label(self.label)})"
        if self.kind in ARC_KINDS:
            return f"{self.kind}({self.label})"
        return self.kind


@dataclass(frozen=True)
class PointedAction:
    """An action with a pointer; present exactly for arc actions."""

    action: Action
    pointer: Optional[int] = None

    def __post_init__(self):
        if self.action.is_arc:
            if self.pointer is None or self.pointer < 0:
                raise ActionError(f"{self.action.kind} requires a pointer")
        elif self.pointer is not None:
            raise ActionError(f"{self.action.kind} takes no pointer")

    @property
    def kind(self) -> str:
        return self.action.kind

    def __str__(self):
        if self.action.is_arc:
            return f"{self.kind}({self.pointer},{self.action.label})"
        return str(self.action)


def shift() -> PointedAction:
    return PointedAction(Action(SHIFT))


def reduce_() -> PointedAction:
    return PointedAction(Action(REDUCE))


def merge() -> PointedAction:
    return PointedAction(Action(MERGE))


def copy_lemma() -> PointedAction:
    return PointedAction(Action(COPY_LEMMA))


def copy_sense01() -> PointedAction:
    return PointedAction(Action(COPY_SENSE01))


def pred(label: str) -> PointedAction:
    return PointedAction(Action(PRED, label))


def subgraph(label: str) -> PointedAction:
    return PointedAction(Action(SUBGRAPH, label))


def left_arc(pointer: int, role: str) -> PointedAction:
    return PointedAction(Action(LA, role), pointer)


def right_arc(pointer: int, role: str) -> PointedAction:
    return PointedAction(Action(RA, role), pointer)


def parse_action(text: str) -> PointedAction:
    """Parse one action token, with or without an arc pointer."""
    if "(" not in text:
        if text not in (SHIFT, REDUCE, MERGE, COPY_LEMMA, COPY_SENSE01):
            raise ActionError(f"unknown action {text!r}")
        return PointedAction(Action(text))
    if not text.endswith(")"):
        raise ActionError(f"unbalanced parentheses in {text!r}")
    kind, _, rest = text.partition("(")
    body = rest[:-1]
    if kind in (PRED, SUBGRAPH):
        return PointedAction(Action(kind, decode_label(body)))
    if kind in ARC_KINDS:
        head, sep, role = body.partition(",")
        if not sep:
            raise ActionError(f"{kind} requires '(pointer,role)': {text!r}")
        if not head.isdigit():
            raise ActionError(f"bad pointer {head!r} in {text!r}")
        return PointedAction(Action(kind, role), int(head))
    raise ActionError(f"unknown action {text!r}")


def parse_vocab_action(text: str) -> Action:
    """Parse a pointer-removed action string such as ``LA(:ARG0)``."""
    if "(" not in text:
        return parse_action(text).action
    kind, _, rest = text.partition("(")
    body = rest[:-1] if text.endswith(")") else None
    if body is None:
        raise ActionError(f"unbalanced parentheses in {text!r}")
    if kind in ARC_KINDS and "," not in body:
        return Action(kind, body)
    return parse_action(text).action


def format_vocab_action(action: Action) -> str:
    return str(action)
