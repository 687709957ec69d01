"""Reactive Turing machines with atoms (rule schemas over orbit-finite
alphabets), oracle-backed infinitary machines, the copy / fresh /
label-production gadgets, and extraction of the configuration system."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .atoms import (
    BLANK, TAU, Atom, Const, Term, TermError, Var, check_caps, canonical_form, format_term,
    parse_term_prefix, support_of, term_key, vars_in_order,
)
from .lts import EffectiveLtsA, FiniteLts, effective_from_successors, explore, label_to_str, normalize_edge
from .orbitsets import (
    TRUE, EqConstraint, Literal, OrbitSet, canonical_enumerate, describe_orbit, encode,
    extend_valuations, match, parse_constraint, partial_sat, substitute,
)
from .rtm import MOVES, Configuration, TapeInstance

Macro = Callable[[Configuration], Iterable[Tuple[Term, Configuration]]]


class RtmaFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RuleSchema:
    source: Term
    read: Term
    action: Term
    write: Term
    move: str
    target: Term
    constraint: EqConstraint = TRUE

    def __post_init__(self) -> None:
        if self.move not in MOVES:
            raise ValueError(f"move must be L or R, got {self.move!r}")

    def patterns(self) -> Tuple[Term, ...]:
        return (self.source, self.read, self.action, self.write, self.target)

    def bound_variables(self) -> List[Var]:
        return vars_in_order((self.source, self.read))

    def right_only_variables(self) -> List[Var]:
        bound = set(self.bound_variables())
        return [v for v in vars_in_order((self.action, self.write, self.target)) if v not in bound]

    def atoms(self) -> frozenset:
        return support_of(self.patterns()) | self.constraint.atoms()

    def __str__(self) -> str:
        s = " ".join([format_term(self.source), format_term(self.read), format_term(self.action),
                      format_term(self.write), self.move, format_term(self.target)])
        if self.constraint.literals:
            s += " where " + str(self.constraint)
        return s


def _state_key(t: Term):
    """Coarse index key for a state or state pattern (``None`` = wildcard)."""
    if type(t) is Const:
        return t
    if type(t) is tuple and t and type(t[0]) is Const:
        return (t[0], len(t))
    return None


@dataclass(frozen=True)
class RtmA:
    """A machine with atoms.

    ``macros`` optionally adds host-computed transitions per configuration;
    the compiled machines use it for enumerator calls, which run as single
    τ-steps between tape-level gadget runs.
    """

    support: frozenset
    schemas: Tuple[RuleSchema, ...]
    initial: Term
    state_space: Optional[OrbitSet] = None
    initial_tape: TapeInstance = TapeInstance()
    macros: Optional[Macro] = field(default=None, compare=False)
    comments: Tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", frozenset(Atom(a) for a in self.support))
        object.__setattr__(self, "schemas", tuple(self.schemas))
        index: Dict[object, List[RuleSchema]] = {}
        for r in self.schemas:
            index.setdefault(_state_key(r.source), []).append(r)
        object.__setattr__(self, "_index", index)

    def schemas_for(self, state: Term) -> List[RuleSchema]:
        idx = self._index  # type: ignore[attr-defined]
        return idx.get(_state_key(state), []) + (idx.get(None, []) if _state_key(state) is not None else [])

    def initial_configuration(self) -> Configuration:
        return Configuration(self.initial, self.initial_tape)


@dataclass(frozen=True)
class RtmaVerdict:
    ok: bool
    problems: Tuple[str, ...] = ()


def validate_rtma(m: RtmA, max_depth: int = 3, max_tuple: int = 16) -> RtmaVerdict:
    """Legality (every atom a schema mentions is in the support) and
    orbit-finiteness (patterns within the nesting caps)."""
    problems = []
    for i, r in enumerate(m.schemas, 1):
        stray = r.atoms() - m.support
        if stray:
            problems.append(f"schema {i} ({r}): atoms outside the support: "
                            + " ".join(format_term(a) for a in sorted(stray, key=int)))
        for p in r.patterns():
            try:
                check_caps(p, max_depth, max_tuple)
            except TermError as e:
                problems.append(f"schema {i} ({r}): {e}")
                break
        extra = set(r.constraint.variables()) - set(vars_in_order(r.patterns()))
        if extra:
            problems.append(f"schema {i} ({r}): constraint mentions unknown variables "
                            + " ".join(sorted(v.name for v in extra)))
    stray = support_of(m.initial) - m.support
    if stray:
        problems.append("initial state mentions atoms outside the support")
    return RtmaVerdict(not problems, tuple(problems))


def step_canonical(m: RtmA, c: Configuration) -> Set[Tuple[Term, Configuration]]:
    """Successors of ``c``, one per orbit of choices for right-only variables.

    Right-only variables range over the atoms already present (machine support
    and configuration) plus canonical fresh atoms.
    """
    here = m.support | support_of(c.term())
    out: Set[Tuple[Term, Configuration]] = set()
    symbol = c.tape.symbol
    for r in m.schemas_for(c.state):
        val = match(r.source, c.state)
        if val is None:
            continue
        val = match(r.read, symbol, val)
        if val is None or not partial_sat(r.constraint, val):
            continue
        for ext in extend_valuations(r.right_only_variables(), r.constraint, val, here, here | r.atoms()):
            tape = c.tape.write_and_move(substitute(r.write, ext), r.move)
            out.add((substitute(r.action, ext), Configuration(substitute(r.target, ext), tape)))
    if m.macros is not None:
        out.update(m.macros(c))
    return out


def _canonical_edges(m: RtmA, ct: Term) -> List[Tuple[Term, Term]]:
    c = Configuration.of_term(ct)
    edges = {normalize_edge(ct, a, c2.term(), m.support) for a, c2 in step_canonical(m, c)}
    return sorted(edges, key=lambda e: (term_key(e[0]), term_key(e[1])))


def config_lts_canonical(m: RtmA, depth: Optional[int] = None, *, start: Optional[Configuration] = None,
                         cost: Optional[Callable[[str, Term, Term], int]] = None,
                         max_states: Optional[int] = None) -> FiniteLts:
    """Configuration graph under canonical stepping; configurations are stored
    as canonical terms over the machine support."""
    init = canonical_form((start or m.initial_configuration()).term(), m.support)

    def succ(ct: Term):
        return [(label_to_str(a), t) for a, t in _canonical_edges(m, ct)]

    return explore(init, succ, depth, name=format_term, cost=cost, max_states=max_states)


def extract_effective_ltsa(m: RtmA, start: Optional[Configuration] = None) -> EffectiveLtsA:
    """The configuration system of ``m`` as an enumerator over orbit codes."""
    init = (start or m.initial_configuration()).term()

    def succ(ct: Term):
        c = Configuration.of_term(ct)
        return [(a, c2.term()) for a, c2 in step_canonical(m, c)]

    return effective_from_successors(m.support, init, succ)


# ---------------------------------------------------------------------------
# gadgets

COPY, FRESH, FINISH, START, FIRED = (Const(s) for s in ("copy", "fresh", "finish", "start", "fired"))
CHECK, REFRESH, BACK = Const("check"), Const("refresh"), Const("back")

_x, _y, _a, _b = Var("x"), Var("y"), Var("a"), Var("b")


def copy_gadget() -> List[RuleSchema]:
    """Copy the atom under the head to the first blank to the right."""
    cx = (COPY, _x)
    return [
        RuleSchema(COPY, _x, TAU, _x, "R", cx),
        RuleSchema(cx, _y, TAU, _y, "R", cx),
        RuleSchema(cx, BLANK, TAU, _x, "R", FINISH),
    ]


def fresh_gadget(variant: str = "corrected", avoid: Iterable[Atom] = ()) -> List[RuleSchema]:
    """Guess an atom at the blank under the head and check it against every atom
    to its left, re-guessing on a clash.

    ``variant="literal"`` keeps the move after a detected clash pointing left,
    which sends the re-guess loop onto the clashing tape atom itself;
    ``"corrected"`` moves right so the loop walks back to the guessed cell.
    Atoms in ``avoid`` are excluded from every guess.
    """
    if variant not in ("literal", "corrected"):
        raise ValueError(f"unknown fresh gadget variant {variant!r}")
    avoid = sorted(set(avoid), key=int)
    cx, cy, rx = (CHECK, _x), (CHECK, _y), (REFRESH, _x)
    not_k = lambda v: tuple(Literal("!=", v, k) for k in avoid)
    return [
        RuleSchema(FRESH, BLANK, TAU, _x, "L", cx, EqConstraint(not_k(_x))),
        RuleSchema(cx, _y, TAU, _y, "L", cx, EqConstraint.of((_x, "!=", _y), (_y, "!=", BLANK))),
        RuleSchema(cx, _x, TAU, _x, "L" if variant == "literal" else "R", rx),
        RuleSchema(rx, _y, TAU, _y, "R", rx, EqConstraint.of((_x, "!=", _y))),
        RuleSchema(rx, _x, TAU, _y, "L", cy, EqConstraint((Literal("!=", _x, _y),) + not_k(_y))),
        RuleSchema(cx, BLANK, TAU, BLANK, "R", FINISH),
    ]


def label_state(code: int) -> Const:
    return Const(f"e{code:x}")


def label_orbits(labels: OrbitSet) -> List[Tuple[Term, Const, int]]:
    """``(canonical label, entry symbol, atom count)`` per orbit of labels."""
    out = []
    for rep in canonical_enumerate(labels):
        d, atoms = describe_orbit(rep, labels.support)
        out.append((rep, label_state(encode([d])), len(atoms)))
    return out


def produce_label_gadget(labels: OrbitSet) -> List[RuleSchema]:
    """One program per label orbit.

    Started in ``start`` on a tape ``E a1 .. an`` (``E`` the orbit's entry
    symbol, ``ai`` its non-support atoms in first-occurrence order), the
    program gathers the atoms into one tuple cell and then fires the single
    visible transition carrying the label, ending in ``fired``.  Orbits
    without such atoms expect a ready ``()`` cell after ``E``.
    """
    k = labels.support
    schemas: List[RuleSchema] = []
    for rep, e, n in label_orbits(labels):
        d, _ = describe_orbit(rep, k)
        vs = d.variables()
        schemas.append(RuleSchema(START, e, TAU, e, "R", e))
        if n:
            ea, eab = (e, _a), (e, _a, BACK)
            schemas += [
                RuleSchema(e, _a, TAU, _a, "R", ea),
                RuleSchema(ea, _b, TAU, _b, "R", ea),
                RuleSchema(ea, BLANK, TAU, (_a,), "L", eab),
                RuleSchema(eab, _b, TAU, _b, "L", eab, EqConstraint.of((_a, "!=", _b))),
                RuleSchema(eab, _a, TAU, _a, "R", e),
            ]
            for i in range(2, n + 1):
                prev = tuple(Var(f"a{j}") for j in range(1, i))
                ai = Var(f"a{i}")
                schemas.append(RuleSchema((e, ai), prev, TAU, prev + (ai,), "L", (e, ai, BACK)))
        schemas.append(RuleSchema(e, tuple(vs), d.pattern, d.pattern, "R", FIRED, d.constraint))
    return schemas


def emit_gadget(kind: str, labels: Optional[OrbitSet] = None, variant: str = "corrected",
                avoid: Iterable[Atom] = ()) -> List[RuleSchema]:
    if kind == "copy":
        return copy_gadget()
    if kind == "fresh":
        return fresh_gadget(variant, avoid)
    if kind == "produce_label":
        if labels is None:
            raise ValueError("produce_label needs a label set")
        return produce_label_gadget(labels)
    raise ValueError(f"unknown gadget {kind!r}")


def gadget_machine(kind: str, tape: Sequence[Term], head: int, *, labels: Optional[OrbitSet] = None,
                   variant: str = "corrected", support: Iterable[Atom] = (),
                   avoid: Optional[Iterable[Atom]] = None) -> RtmA:
    """A stand-alone machine running one gadget from a prepared tape.

    Putting tape atoms into ``support`` while leaving ``avoid`` empty keeps
    them fixed under canonical renaming without banning them as guesses,
    which is how a run is checked to leave the original tape untouched.
    """
    entry = {"copy": COPY, "fresh": FRESH, "produce_label": START}[kind]
    k = frozenset(support) | (labels.support if labels is not None else frozenset())
    schemas = emit_gadget(kind, labels, variant, avoid=(k if avoid is None else avoid) if kind == "fresh" else ())
    return RtmA(k, tuple(schemas), entry, initial_tape=TapeInstance(tuple(tape), head))


# ---------------------------------------------------------------------------
# infinitary machines


@dataclass(frozen=True)
class RtmInf:
    """A machine over a countable state/data alphabet whose rules come from a
    host function ``out_rules(state, read)`` yielding
    ``(action, write, move, target)``.  ``finite`` marks a computable (always
    finite) relation as opposed to a merely enumerable one."""

    out_rules: Callable[[Term, Term], Iterable[Tuple[Term, Term, str, Term]]] = field(compare=False)
    initial: Term
    finite: bool = True

    def initial_configuration(self) -> Configuration:
        return Configuration(self.initial)


@dataclass(frozen=True)
class InfStep:
    successors: frozenset
    truncated: bool


def step_inf(m: RtmInf, c: Configuration, budget: Optional[int] = None) -> InfStep:
    if budget is not None and budget < 0:
        raise ValueError("budget must be nonnegative")
    out = set()
    truncated = False
    for i, (a, e, move, t) in enumerate(m.out_rules(c.state, c.tape.symbol)):
        if budget is not None and i >= budget:
            truncated = True
            break
        out.add((a, Configuration(t, c.tape.write_and_move(e, move))))
    return InfStep(frozenset(out), truncated)


def config_lts_inf(m: RtmInf, depth: Optional[int] = None, budget: Optional[int] = None,
                   max_states: Optional[int] = None) -> FiniteLts:
    flagged = []

    def succ(c: Configuration):
        r = step_inf(m, c, budget)
        if r.truncated:
            flagged.append(c)
        return sorted(((label_to_str(a), t) for a, t in r.successors), key=lambda e: (e[0], str(e[1])))

    g = explore(m.initial_configuration(), succ, depth, name=str, max_states=max_states)
    if flagged:
        g = FiniteLts(g.num_states, g.transitions, g.initial, g.names, g.frontier, True)
    return g


# ---------------------------------------------------------------------------
# text format


def _read(text: str, count: int, line: int, allow_vars: bool) -> Tuple[List[Term], str]:
    pos, out = 0, []
    for _ in range(count):
        try:
            t, pos = parse_term_prefix(text, pos, allow_vars=allow_vars, bare_constants=True)
        except TermError as e:
            raise RtmaFormatError(f"line {line}: {e}") from e
        out.append(t)
    return out, text[pos:]


def parse_schema(text: str, line: int = 1) -> RuleSchema:
    (s, d, a, e), tail = _read(text, 4, line, True)
    parts = tail.split(None, 1)
    if not parts or parts[0] not in MOVES:
        raise RtmaFormatError(f"line {line}: unknown move symbol {parts[0] if parts else ''!r}")
    (t,), tail = _read(parts[1] if len(parts) > 1 else "", 1, line, True)
    tail = tail.strip()
    constraint = TRUE
    if tail:
        if not tail.startswith("where "):
            raise RtmaFormatError(f"line {line}: expected 'where', got {tail!r}")
        try:
            constraint = parse_constraint(tail[len("where "):])
        except (TermError, ValueError) as ex:
            raise RtmaFormatError(f"line {line}: {ex}") from ex
    for p in (s, d, a, e, t):
        try:
            check_caps(p)
        except TermError as ex:
            raise RtmaFormatError(f"line {line}: {ex}") from ex
    return RuleSchema(s, d, a, e, parts[0], t, constraint)


def parse_rtma(text: str) -> RtmA:
    support: frozenset = frozenset()
    initial = None
    tape = TapeInstance()
    schemas: List[RuleSchema] = []
    comments: List[str] = []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#") and not line[1:2].isdigit():
            comments.append(raw)
            continue
        key, _, rest = line.partition(":")
        if key == "support":
            toks, _ = _read(rest, len(rest.split()), i, False)
            if any(type(a) is not Atom for a in toks):
                raise RtmaFormatError(f"line {i}: support lists atoms only")
            support = frozenset(toks)
        elif key == "initial":
            (initial,), tail = _read(rest, 1, i, False)
            if tail.strip():
                raise RtmaFormatError(f"line {i}: trailing input {tail.strip()!r}")
        elif key == "tape":
            (cells,), tail = _read(rest, 1, i, False)
            if type(cells) is not tuple or not tail.strip().isdigit():
                raise RtmaFormatError(f"line {i}: expected 'tape: (<cells>) <head>'")
            try:
                tape = TapeInstance(cells, int(tail))
            except ValueError as e:
                raise RtmaFormatError(f"line {i}: {e}") from e
        elif key == "schema":
            schemas.append(parse_schema(rest, i))
        else:
            raise RtmaFormatError(f"line {i}: unknown key {key!r}")
    if initial is None:
        raise RtmaFormatError("no 'initial:' line")
    return RtmA(support, tuple(schemas), initial, initial_tape=tape, comments=tuple(comments))


def emit_rtma(m: RtmA) -> str:
    out = list(m.comments)
    out.append("support:" + "".join(" " + format_term(a) for a in sorted(m.support, key=int)))
    out.append(f"initial: {format_term(m.initial)}")
    if m.initial_tape != TapeInstance():
        out.append(f"tape: {format_term(m.initial_tape.cells)} {m.initial_tape.head}")
    out += [f"schema: {r}" for r in m.schemas]
    return "\n".join(out) + "\n"
