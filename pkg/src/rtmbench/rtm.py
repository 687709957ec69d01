"""Classical reactive Turing machines: rules, tapes with a marked head cell,
stepping and configuration graphs."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Optional, Set, Tuple

from .atoms import BLANK, TAU, Const, Term, TermError, format_term, parse_term_prefix, term_key
from .lts import FiniteLts, explore, label_to_str

MOVES = ("L", "R")


class RtmFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RtmRule:
    source: Term
    read: Term
    action: Term
    write: Term
    move: str
    target: Term

    def __post_init__(self) -> None:
        if self.move not in MOVES:
            raise ValueError(f"move must be L or R, got {self.move!r}")


@dataclass(frozen=True)
class TapeInstance:
    cells: Tuple[Term, ...] = (BLANK,)
    head: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        if not 0 <= self.head < len(self.cells):
            raise ValueError("the head must sit on a cell")

    @property
    def symbol(self) -> Term:
        return self.cells[self.head]

    def normalized(self) -> "TapeInstance":
        """Drop unmarked blank cells at both ends."""
        lo, hi = 0, len(self.cells)
        while lo < self.head and self.cells[lo] == BLANK:
            lo += 1
        while hi - 1 > self.head and self.cells[hi - 1] == BLANK:
            hi -= 1
        if lo == 0 and hi == len(self.cells):
            return self
        return TapeInstance(self.cells[lo:hi], self.head - lo)

    def write_and_move(self, symbol: Term, move: str) -> "TapeInstance":
        cells = list(self.cells)
        cells[self.head] = symbol
        head = self.head + (1 if move == "R" else -1)
        if head < 0:
            cells.insert(0, BLANK)
            head = 0
        elif head == len(cells):
            cells.append(BLANK)
        return TapeInstance(tuple(cells), head).normalized()

    def __str__(self) -> str:
        return " ".join(("^" if i == self.head else "") + format_term(c) for i, c in enumerate(self.cells))


@dataclass(frozen=True)
class Configuration:
    state: Term
    tape: TapeInstance = TapeInstance()

    def term(self) -> Term:
        """The configuration as one term, tape first, so that canonical renaming
        numbers tape atoms left to right before control-state atoms."""
        return (self.tape.cells, Const(f"h{self.tape.head}"), self.state)

    @staticmethod
    def of_term(t: Term) -> "Configuration":
        cells, head, state = t
        return Configuration(state, TapeInstance(cells, int(head.symbol[1:])))

    def __str__(self) -> str:
        return f"{format_term(self.state)} | {self.tape}"


@dataclass(frozen=True)
class Rtm:
    rules: Tuple[RtmRule, ...]
    initial: Term
    comments: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))

    @property
    def states(self) -> FrozenSet[Term]:
        return frozenset([self.initial] + [r.source for r in self.rules] + [r.target for r in self.rules])

    @property
    def data_alphabet(self) -> FrozenSet[Term]:
        return frozenset([BLANK] + [r.read for r in self.rules] + [r.write for r in self.rules])

    @property
    def action_alphabet(self) -> FrozenSet[Term]:
        return frozenset(r.action for r in self.rules)

    def initial_configuration(self) -> Configuration:
        return Configuration(self.initial)


def step(m: Rtm, c: Configuration) -> Set[Tuple[Term, Configuration]]:
    out = set()
    d = c.tape.symbol
    for r in m.rules:
        if r.source == c.state and r.read == d:
            out.add((r.action, Configuration(r.target, c.tape.write_and_move(r.write, r.move))))
    return out


def _sorted_steps(steps) -> List[Tuple[Term, Configuration]]:
    return sorted(steps, key=lambda e: (term_key(e[0]), term_key(e[1].term())))


def config_lts(m: Rtm, depth: Optional[int] = None, max_states: Optional[int] = None) -> FiniteLts:
    """Reachable configuration graph from ``(initial, blank tape)``; ``None``
    depth means explore until closed."""

    def succ(c: Configuration):
        return [(label_to_str(a), t) for a, t in _sorted_steps(step(m, c))]

    return explore(m.initial_configuration(), succ, depth, name=str, max_states=max_states)


@dataclass(frozen=True)
class RtmVerdict:
    ok: bool
    problems: Tuple[str, ...] = ()


def validate(m: Rtm) -> RtmVerdict:
    problems = []
    for i, r in enumerate(m.rules, 1):
        if r.move not in MOVES:
            problems.append(f"rule {i}: unknown move {r.move!r}")
    if m.rules and m.initial not in {r.source for r in m.rules} | {r.target for r in m.rules}:
        problems.append(f"initial state {format_term(m.initial)} occurs in no rule")
    return RtmVerdict(not problems, tuple(problems))


# ---------------------------------------------------------------------------
# text format

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def format_name(t: Term) -> str:
    """States and actions print bare when they are identifier-like constants."""
    if type(t) is Const and _IDENT_RE.fullmatch(t.symbol):
        return t.symbol
    return format_term(t)


def _read_terms(text: str, count: int, line: int) -> Tuple[List[Term], str]:
    pos, out = 0, []
    for _ in range(count):
        try:
            t, pos = parse_term_prefix(text, pos, bare_constants=True)
        except TermError as e:
            raise RtmFormatError(f"line {line}: {e}") from e
        out.append(t)
    return out, text[pos:]


def parse_rtm(text: str) -> Rtm:
    initial = None
    rules: List[RtmRule] = []
    comments: List[str] = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#") and not re.match(r"#\d", line):
            comments.append(raw)
            continue
        key, _, rest = line.partition(":")
        if key == "initial":
            (initial,), tail = _read_terms(rest, 1, i)
            if tail.strip():
                raise RtmFormatError(f"line {i}: trailing input {tail.strip()!r}")
        elif key == "rule":
            (s, d, a, e), tail = _read_terms(rest, 4, i)
            parts = tail.split(None, 1)
            if not parts or parts[0] not in MOVES:
                raise RtmFormatError(f"line {i}: unknown move symbol {parts[0] if parts else ''!r}")
            (t,), tail = _read_terms(parts[1] if len(parts) > 1 else "", 1, i)
            if tail.strip():
                raise RtmFormatError(f"line {i}: trailing input {tail.strip()!r}")
            rules.append(RtmRule(s, d, a, e, parts[0], t))
        else:
            raise RtmFormatError(f"line {i}: unknown key {key!r}")
    if initial is None:
        raise RtmFormatError("no 'initial:' line")
    m = Rtm(tuple(rules), initial, tuple(comments))
    v = validate(m)
    if not v.ok:
        raise RtmFormatError("; ".join(v.problems))
    return m


def emit_rtm(m: Rtm) -> str:
    out = list(m.comments)
    out.append(f"initial: {format_name(m.initial)}")
    for r in m.rules:
        out.append(f"rule: {format_name(r.source)} {format_term(r.read)} {format_name(r.action)} "
                   f"{format_term(r.write)} {r.move} {format_name(r.target)}")
    return "\n".join(out) + "\n"
