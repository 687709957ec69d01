"""π-calculus front-end: parsing and printing, free names, α-canonical forms,
early operational semantics and the induced system with atoms.

Processes are terms whose names are atoms::

    'nil                 0
    ('tau, P)            tau.P
    ('out, x, y, P)      x<y>.P
    ('in, x, z, P)       x(z).P       (z bound in P)
    ('sum, P, Q)         P + Q
    ('par, P, Q)         P | Q
    ('new, z, P)         new z.P      (z bound in P)
    ('rep, P)            !P

Actions are ``'tau``, ``('out, x, y)``, ``('in, x, y)`` and ``('bout, x, z)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

from .atoms import TAU, Atom, Const, Permutation, Term, Var, apply, canonical_form, fresh, support_of, term_key
from .lts import EffectiveLtsA, effective_from_successors
from .orbitsets import EqConstraint, OrbitDescriptor, OrbitSet

NIL = Const("nil")
_TAU_P, _OUT, _IN, _SUM, _PAR, _NEW, _REP = (Const(s) for s in ("tau", "out", "in", "sum", "par", "new", "rep"))
BOUT = Const("bout")

Process = Term
Action = Term


class PiSyntaxError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constructors and inspection


def tau_(p: Process) -> Process:
    return (_TAU_P, p)


def out_(x: Atom, y: Atom, p: Process = NIL) -> Process:
    return (_OUT, x, y, p)


def in_(x: Atom, z: Atom, p: Process = NIL) -> Process:
    return (_IN, x, z, p)


def sum_(p: Process, q: Process) -> Process:
    return (_SUM, p, q)


def par_(p: Process, q: Process) -> Process:
    return (_PAR, p, q)


def new_(z: Atom, p: Process) -> Process:
    return (_NEW, z, p)


def rep_(p: Process) -> Process:
    return (_REP, p)


def kind(p: Process) -> Const:
    return NIL if p == NIL else p[0]


def free_names(p: Process) -> frozenset:
    k = kind(p)
    if k == NIL:
        return frozenset()
    if k == _TAU_P:
        return free_names(p[1])
    if k == _OUT:
        return frozenset((p[1], p[2])) | free_names(p[3])
    if k == _IN:
        return frozenset((p[1],)) | (free_names(p[3]) - {p[2]})
    if k in (_SUM, _PAR):
        return free_names(p[1]) | free_names(p[2])
    if k == _NEW:
        return free_names(p[2]) - {p[1]}
    if k == _REP:
        return free_names(p[1])
    raise ValueError(f"not a process: {p!r}")


def bound_names(a: Action) -> frozenset:
    if type(a) is tuple and a[0] == BOUT:
        return frozenset((a[2],))
    return frozenset()


def action_names(a: Action) -> frozenset:
    return support_of(a)


def is_process(p: Term) -> bool:
    try:
        free_names(p)
        return True
    except (ValueError, TypeError, IndexError):
        return False


# ---------------------------------------------------------------------------
# renaming


def rename_free(p: Process, m: Mapping[Atom, Atom]) -> Process:
    """Substitute free names by ``m``.  Binders are assumed not to clash with
    the substituted names (true for terms with distinct fresh binders)."""
    k = kind(p)
    if k == NIL:
        return p
    f = lambda a: m.get(a, a)
    if k == _TAU_P:
        return (k, rename_free(p[1], m))
    if k == _OUT:
        return (k, f(p[1]), f(p[2]), rename_free(p[3], m))
    if k == _IN:
        inner = {a: b for a, b in m.items() if a != p[2]}
        return (k, f(p[1]), p[2], rename_free(p[3], inner))
    if k in (_SUM, _PAR):
        return (k, rename_free(p[1], m), rename_free(p[2], m))
    if k == _NEW:
        inner = {a: b for a, b in m.items() if a != p[1]}
        return (k, p[1], rename_free(p[2], inner))
    return (k, rename_free(p[1], m))


def alpha_canonical(p: Process, avoid: Iterable[Atom] = ()) -> Process:
    """Rename every binder, in pre-order, to the least atom outside the free
    names, ``avoid`` and the binders already chosen."""
    used: Set[Atom] = set(free_names(p)) | set(avoid)

    def next_atom() -> Atom:
        a = fresh(used)
        used.add(a)
        return a

    def go(p: Process, env: Dict[Atom, Atom]) -> Process:
        k = kind(p)
        if k == NIL:
            return p
        f = lambda a: env.get(a, a)
        if k == _TAU_P:
            return (k, go(p[1], env))
        if k == _OUT:
            return (k, f(p[1]), f(p[2]), go(p[3], env))
        if k == _IN:
            b = next_atom()
            return (k, f(p[1]), b, go(p[3], {**env, p[2]: b}))
        if k in (_SUM, _PAR):
            return (k, go(p[1], env), go(p[2], env))
        if k == _NEW:
            b = next_atom()
            return (k, b, go(p[2], {**env, p[1]: b}))
        return (k, go(p[1], env))

    return go(p, {})


def alpha_equivalent(p: Process, q: Process) -> bool:
    avoid = free_names(p) | free_names(q)
    return alpha_canonical(p, avoid) == alpha_canonical(q, avoid)


def _freshen(p: Process, used: Set[Atom]) -> Process:
    """α-variant of ``p`` whose binders are fresh for ``used`` (updated)."""
    def go(p: Process, env: Dict[Atom, Atom]) -> Process:
        k = kind(p)
        if k == NIL:
            return p
        f = lambda a: env.get(a, a)
        if k == _TAU_P:
            return (k, go(p[1], env))
        if k == _OUT:
            return (k, f(p[1]), f(p[2]), go(p[3], env))
        if k == _IN:
            b = fresh(used)
            used.add(b)
            return (k, f(p[1]), b, go(p[3], {**env, p[2]: b}))
        if k in (_SUM, _PAR):
            return (k, go(p[1], env), go(p[2], env))
        if k == _NEW:
            b = fresh(used)
            used.add(b)
            return (k, b, go(p[2], {**env, p[1]: b}))
        return (k, go(p[1], env))

    return go(p, {})


# ---------------------------------------------------------------------------
# operational semantics
#
# Inputs are kept as abstractions (channel, continuation) until their object
# is known: at top level, or inside a communication.

_Step = Tuple[str, Action, object]  # ("act", action, process) | ("in", channel, Callable)


def _raw(p: Process, used: Set[Atom]) -> List[_Step]:
    k = kind(p)
    if k == NIL:
        return []
    if k == _TAU_P:
        return [("act", TAU, p[1])]
    if k == _OUT:
        return [("act", (_OUT, p[1], p[2]), p[3])]
    if k == _IN:
        _, x, y, body = p
        return [("in", x, lambda z, body=body, y=y: rename_free(body, {y: z}))]
    if k == _SUM:
        return _raw(p[1], used) + _raw(p[2], used)
    if k == _PAR:
        return _par(p[1], p[2], used)
    if k == _NEW:
        return _restrict(p[1], _raw(p[2], used))
    return _replicate(p[1], used)


def _maybe(f: Callable[[Process], Process], p: Optional[Process]) -> Optional[Process]:
    return None if p is None else f(p)


def _wrap(steps: List[_Step], f: Callable[[Process], Process]) -> List[_Step]:
    out: List[_Step] = []
    for kind_, a, r in steps:
        if kind_ == "act":
            out.append(("act", a, f(r)))
        else:
            out.append(("in", a, lambda z, r=r: _maybe(f, r(z))))
    return out


def _interact(left: List[_Step], right: List[_Step], combine: Callable[[Process, Process], Process],
              blocked: frozenset = frozenset()) -> List[_Step]:
    """COM and CLOSE between output steps of ``left`` and input steps of
    ``right``; ``combine`` puts the two residuals back in their places.  A
    bound output whose name is in ``blocked`` cannot close."""
    out: List[_Step] = []
    for k1, a, p1 in left:
        if k1 != "act" or type(a) is not tuple:
            continue
        for k2, x, cont in right:
            if k2 != "in" or x != a[1]:
                continue
            q1 = cont(a[2])
            if q1 is None:
                continue
            if a[0] == _OUT:
                out.append(("act", TAU, combine(p1, q1)))
            elif a[0] == BOUT and a[2] not in blocked:
                out.append(("act", TAU, (_NEW, a[2], combine(p1, q1))))
    return out


def _par(p: Process, q: Process, used: Set[Atom]) -> List[_Step]:
    sp, sq = _raw(p, used), _raw(q, used)
    fp, fq = free_names(p), free_names(q)
    out: List[_Step] = []
    for kind_, a, r in sp:
        if kind_ == "act" and bound_names(a) & fq:
            continue
        out += _wrap([(kind_, a, r)], lambda r2: (_PAR, r2, q))
    for kind_, a, r in sq:
        if kind_ == "act" and bound_names(a) & fp:
            continue
        out += _wrap([(kind_, a, r)], lambda r2: (_PAR, p, r2))
    out += _interact(sp, sq, lambda a, b: (_PAR, a, b), fq)
    out += _interact(sq, sp, lambda a, b: (_PAR, b, a), fp)
    return out


def _restrict(z: Atom, steps: List[_Step]) -> List[_Step]:
    out: List[_Step] = []
    for kind_, a, r in steps:
        if kind_ == "in":
            if a == z:
                continue
            out.append(("in", a, lambda w, r=r: None if w == z else _maybe(lambda q: (_NEW, z, q), r(w))))
            continue
        if a == TAU:
            out.append(("act", a, (_NEW, z, r)))
        elif a[0] == _OUT and a[2] == z and a[1] != z:
            out.append(("act", (BOUT, a[1], z), r))  # OPEN
        elif z not in support_of(a):
            out.append(("act", a, (_NEW, z, r)))
    return out


def _replicate(p: Process, used: Set[Atom]) -> List[_Step]:
    bang = (_REP, p)
    c1 = _freshen(p, used)
    s1 = _raw(c1, used)
    out = _wrap(s1, lambda r: (_PAR, r, bang))
    c2 = _freshen(p, used)
    s2 = _raw(c2, used)
    out += [("act", TAU, (_PAR, r, bang)) for _, _, r in _interact(s1, s2, lambda a, b: (_PAR, a, b))]
    return out


def _all_atoms(p: Process) -> Set[Atom]:
    return set(support_of(p))


def sos_step(p: Process, candidates: Iterable[Atom] = ()) -> List[Tuple[Action, Process]]:
    """Concrete transitions of ``p``.  Inputs are instantiated with the free
    names of ``p``, ``candidates`` and one atom fresh for everything in sight.
    Extruded and received fresh names are whatever the derivation picked."""
    q = alpha_canonical(p, set(candidates))
    used = _all_atoms(q) | set(candidates)
    steps = _raw(q, used)
    objects = sorted(free_names(q) | set(candidates), key=int)
    new = fresh(used)
    out: List[Tuple[Action, Process]] = []
    for kind_, a, r in steps:
        if kind_ == "act":
            out.append((a, r))
            continue
        for z in objects + [new]:
            res = r(z)
            if res is not None:
                out.append(((_IN, a, z), res))
    return out


def sos_step_canonical(p: Process, avoid: Iterable[Atom] = ()) -> List[Tuple[Action, Process]]:
    """Transitions up to α-conversion and up to the choice of fresh names.

    Inputs receive each name in ``fn(p) ∪ avoid`` plus one canonical fresh
    name; bound outputs extrude the same canonical fresh name.  Targets are
    α-canonical with binders avoiding ``avoid`` and the action's names.
    """
    avoid = frozenset(avoid)
    known = free_names(p) | avoid
    canon = fresh(known)
    found: Dict[Tuple[Action, Process], None] = {}
    for a, r in sos_step(p, avoid):
        if type(a) is tuple and a[2] not in known:
            # a received or extruded name from outside: move it to ``canon``
            pm = Permutation.transposition(a[2], canon)
            a, r = apply(pm, a), apply(pm, r)
        found.setdefault((a, alpha_canonical(r, known | support_of(a))))
    return sorted(found, key=lambda e: (term_key(e[0]), term_key(e[1])))


def is_transition(s: Process, a: Action, t: Process) -> bool:
    """Decide ``s --a--> t`` up to α-conversion."""
    if type(a) is tuple and a[0] == BOUT and a[2] in free_names(s):
        return False
    names = free_names(s) | support_of(a)
    for a2, r in sos_step(s, support_of(a)):
        if type(a2) is tuple and a2[0] == BOUT and type(a) is tuple and a[0] == BOUT and a2[1] == a[1]:
            pm = Permutation.transposition(a2[2], a[2])
            a2, r = apply(pm, a2), apply(pm, r)
        if a2 == a and alpha_canonical(r, names | free_names(t)) == alpha_canonical(t, names | free_names(r)):
            return True
    return False


def canonical_state(p: Process, support: Iterable[Atom]) -> Process:
    k = frozenset(support)
    return canonical_form(alpha_canonical(p, k), k)


def pi_labels(support: Iterable[Atom]) -> OrbitSet:
    x, y = Var("x"), Var("y")
    k = frozenset(support)
    return OrbitSet(k, (OrbitDescriptor(TAU, EqConstraint(())),
                        OrbitDescriptor((_OUT, x, y), EqConstraint(())),
                        OrbitDescriptor((_IN, x, y), EqConstraint(())),
                        OrbitDescriptor((BOUT, x, y), EqConstraint.of((x, "!=", y)))))


def effective_ltsa_of(p: Process) -> EffectiveLtsA:
    """The system of α-classes reachable from ``p`` with support ``fn(p)``
    (the silent action is a constant, so it needs no support atom)."""
    k = free_names(p)
    return effective_from_successors(k, canonical_state(p, k), lambda s: sos_step_canonical(s, k),
                                     labels=pi_labels(k))


# ---------------------------------------------------------------------------
# text syntax

_TOKEN = re.compile(r"\s*(?:(?P<atom>#\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<num>0)|(?P<p>[<>().|+!]))")
_KEYWORDS = {"tau", "new"}


@dataclass
class PiParse:
    process: Process
    names: Dict[Atom, str]


class _PiParser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.toks: List[Tuple[str, str, int]] = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                break
            self.toks.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
            pos = m.end()
        if text[pos:].strip():
            raise PiSyntaxError(f"unexpected character at position {pos + len(text[pos:]) - len(text[pos:].lstrip())}")
        self.i = 0
        explicit = {int(v[1:]) for k, v, _ in self.toks if k == "atom"}
        self.used: Set[Atom] = {Atom(a) for a in explicit}
        self.by_name: Dict[str, Atom] = {}
        self.names: Dict[Atom, str] = {}

    def error(self, msg: str) -> PiSyntaxError:
        pos = self.toks[self.i][2] if self.i < len(self.toks) else len(self.text)
        return PiSyntaxError(f"{msg} at position {pos}")

    def peek(self, value: Optional[str] = None) -> bool:
        if self.i >= len(self.toks):
            return False
        return value is None or self.toks[self.i][1] == value

    def expect(self, value: str) -> None:
        if not self.peek(value):
            raise self.error(f"expected {value!r}")
        self.i += 1

    def name(self) -> Atom:
        if self.i >= len(self.toks):
            raise self.error("expected a name")
        k, v, _ = self.toks[self.i]
        if k == "atom":
            self.i += 1
            return Atom(int(v[1:]))
        if k != "name" or v in _KEYWORDS:
            raise self.error("expected a name")
        self.i += 1
        a = self.by_name.get(v)
        if a is None:
            a = fresh(self.used)
            self.used.add(a)
            self.by_name[v] = a
            self.names[a] = v
        return a

    def process(self) -> Process:
        p = self.summation()
        while self.peek("|"):
            self.i += 1
            p = (_PAR, p, self.summation())
        return p

    def summation(self) -> Process:
        p = self.unit()
        while self.peek("+"):
            self.i += 1
            p = (_SUM, p, self.unit())
        return p

    def continuation(self) -> Process:
        if self.peek("."):
            self.i += 1
            return self.unit()
        return NIL

    def unit(self) -> Process:
        if not self.peek():
            raise self.error("expected a process")
        k, v, _ = self.toks[self.i]
        if v == "0":
            self.i += 1
            return NIL
        if v == "(":
            self.i += 1
            p = self.process()
            self.expect(")")
            return p
        if v == "!":
            self.i += 1
            return (_REP, self.unit())
        if v == "tau":
            self.i += 1
            return (_TAU_P, self.continuation())
        if v == "new":
            self.i += 1
            z = self.name()
            self.expect(".")
            return (_NEW, z, self.unit())
        x = self.name()
        if self.peek("<"):
            self.i += 1
            y = self.name()
            self.expect(">")
            return (_OUT, x, y, self.continuation())
        if self.peek("("):
            self.i += 1
            z = self.name()
            self.expect(")")
            return (_IN, x, z, self.continuation())
        raise self.error("expected '<' or '(' after a channel name")


def parse_pi_with_names(text: str) -> PiParse:
    p = _PiParser(text)
    proc = p.process()
    if p.i != len(p.toks):
        raise p.error("trailing input")
    return PiParse(proc, p.names)


def parse_pi(text: str) -> Process:
    """Parse ``0``, ``tau.P``, ``a<b>.P``, ``a(x).P``, ``P+Q``, ``P|Q``,
    ``new x.P``, ``!P`` and parentheses; ``|`` binds loosest, prefixes
    tightest.  Identifiers become atoms in order of first appearance;
    ``#n`` denotes atom ``n`` directly."""
    return parse_pi_with_names(text).process


def pretty(p: Process, names: Optional[Mapping[Atom, str]] = None) -> str:
    def nm(a: Atom) -> str:
        if names and a in names:
            return names[a]
        return f"#{int(a)}"

    def par(p: Process) -> str:
        if kind(p) == _PAR:
            rhs = summ(p[2]) if kind(p[2]) != _PAR else "(" + par(p[2]) + ")"
            return par(p[1]) + " | " + rhs
        return summ(p)

    def summ(p: Process) -> str:
        if kind(p) == _SUM:
            rhs = unit(p[2]) if kind(p[2]) != _SUM else "(" + summ(p[2]) + ")"
            return summ(p[1]) + " + " + rhs
        return unit(p)

    def unit(p: Process) -> str:
        k = kind(p)
        if k == NIL:
            return "0"
        if k == _TAU_P:
            return "tau." + unit(p[1])
        if k == _OUT:
            return f"{nm(p[1])}<{nm(p[2])}>." + unit(p[3])
        if k == _IN:
            return f"{nm(p[1])}({nm(p[2])})." + unit(p[3])
        if k == _NEW:
            return f"new {nm(p[1])}." + unit(p[2])
        if k == _REP:
            return "!" + unit(p[1])
        return "(" + par(p) + ")"

    return par(p)


def pretty_action(a: Action, names: Optional[Mapping[Atom, str]] = None) -> str:
    nm = (lambda x: names.get(x, f"#{int(x)}")) if names else (lambda x: f"#{int(x)}")
    if a == TAU:
        return "tau"
    if a[0] == _OUT:
        return f"{nm(a[1])}<{nm(a[2])}>"
    if a[0] == _IN:
        return f"{nm(a[1])}({nm(a[2])})"
    return f"{nm(a[1])}<new {nm(a[2])}>"
