"""Finite presentations of legal, orbit-finite sets with atoms.

A descriptor is a pattern (a term that may contain variables at atom
positions) together with a conjunction of equality and disequality literals.
Variables range over atoms only, so a literal equating a variable with a
constant symbol is unsatisfiable.  An :class:`OrbitSet` is a finite union of
descriptors over a declared support ``K``.

Descriptor lists are numbered by :func:`encode`, a nested length-prefixed
pairing whose inverse :func:`decode` is total on its image.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .atoms import (
    Atom, Const, Permutation, Term, TermError, Var, apply, atoms_in_order, canonical_form, check_caps,
    format_term, fresh, fresh_atoms, iter_nodes, parse_term, parse_term_prefix, support_of,
    term_key, vars_in_order,
)

Operand = Union[Var, Atom, Const]
SetBuilderCode = int


class InstantiationError(ValueError):
    pass


class DecodeError(ValueError):
    pass


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class Literal:
    op: str  # "=" or "!="
    left: Operand
    right: Operand

    def __post_init__(self) -> None:
        if self.op not in ("=", "!="):
            raise ValueError(f"unknown literal operator {self.op!r}")
        for x in (self.left, self.right):
            if type(x) not in (Var, Atom, Const):
                raise ValueError(f"literal operand must be a variable, atom or constant: {x!r}")

    def __str__(self) -> str:
        return f"{format_term(self.left)}{self.op}{format_term(self.right)}"


@dataclass(frozen=True)
class EqConstraint:
    literals: Tuple[Literal, ...] = ()

    @classmethod
    def of(cls, *lits: Tuple[str, Operand, Operand]) -> "EqConstraint":
        return cls(tuple(Literal(op, a, b) for a, op, b in lits))

    def variables(self) -> List[Var]:
        seen: Dict[Var, None] = {}
        for lit in self.literals:
            for x in (lit.left, lit.right):
                if type(x) is Var:
                    seen.setdefault(x)
        return list(seen)

    def atoms(self) -> frozenset:
        return frozenset(x for lit in self.literals for x in (lit.left, lit.right) if type(x) is Atom)

    def __and__(self, other: "EqConstraint") -> "EqConstraint":
        return EqConstraint(self.literals + tuple(l for l in other.literals if l not in self.literals))

    def __str__(self) -> str:
        return ", ".join(str(l) for l in self.literals)


TRUE = EqConstraint()


def _classes(literals: Iterable[Literal]):
    parent: Dict[Operand, Operand] = {}

    def find(x: Operand) -> Operand:
        parent.setdefault(x, x)
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    lits = list(literals)
    for lit in lits:
        ra, rb = find(lit.left), find(lit.right)
        if lit.op == "=" and ra != rb:
            parent[ra] = rb
    return find, lits, parent


def _same(a: Operand, b: Operand) -> bool:
    return type(a) is type(b) and a == b


def sat(c: EqConstraint) -> bool:
    """Satisfiability over an infinite atom carrier (variables take atoms)."""
    find, lits, parent = _classes(c.literals)
    ground: Dict[Operand, Operand] = {}
    has_var: Dict[Operand, bool] = {}
    for x in list(parent):
        r = find(x)
        if type(x) is Var:
            has_var[r] = True
        else:
            g = ground.get(r)
            if g is None:
                ground[r] = x
            elif not _same(g, x):
                return False
    for r, g in ground.items():
        if type(g) is Const and has_var.get(r):
            return False
    for lit in lits:
        if lit.op == "!=" and find(lit.left) == find(lit.right):
            return False
    return True


def _subst_operand(x: Operand, val: Mapping[Var, Atom]) -> Operand:
    if type(x) is Var:
        return val.get(x, x)
    return x


def substitute_constraint(c: EqConstraint, val: Mapping[Var, Atom]) -> EqConstraint:
    return EqConstraint(tuple(Literal(l.op, _subst_operand(l.left, val), _subst_operand(l.right, val))
                              for l in c.literals))


def partial_sat(c: EqConstraint, val: Mapping[Var, Atom]) -> bool:
    """Whether ``val`` extends to a satisfying valuation of ``c``."""
    return sat(substitute_constraint(c, val))


def violated_literal(c: EqConstraint, val: Mapping[Var, Atom]) -> Optional[Literal]:
    """The first literal that is false under a total valuation, if any."""
    for lit in c.literals:
        a, b = _subst_operand(lit.left, val), _subst_operand(lit.right, val)
        if type(a) is Var or type(b) is Var:
            return lit
        if _same(a, b) != (lit.op == "="):
            return lit
    return None


def project_constraint(c: EqConstraint, keep: Iterable[Var]) -> EqConstraint:
    """Existentially eliminate every variable not in ``keep``.

    Exact for satisfiable constraints: an eliminated variable is either
    pinned to a kept representative of its class, or it only takes part in
    disequalities, which an infinite carrier can always honour.
    """
    keep_list = [v for v in keep]
    keep_set = set(keep_list)
    find, lits, parent = _classes(c.literals)
    for v in keep_list:
        find(v)
    members: Dict[Operand, List[Operand]] = {}
    for x in parent:
        members.setdefault(find(x), []).append(x)
    rep: Dict[Operand, Optional[Operand]] = {}
    for r, ms in members.items():
        ground = [x for x in ms if type(x) is not Var]
        kept = [v for v in keep_list if v in ms]
        rep[r] = ground[0] if ground else (kept[0] if kept else None)
    out: List[Literal] = []

    def add(lit: Literal) -> None:
        if lit not in out:
            out.append(lit)

    for v in keep_list:
        r = rep[find(v)]
        if r is not None and not _same(r, v):
            add(Literal("=", v, r))
    for lit in lits:
        if lit.op != "!=":
            continue
        ra, rb = rep[find(lit.left)], rep[find(lit.right)]
        if ra is None or rb is None:
            continue
        if type(ra) is not Var and type(rb) is not Var:
            continue  # distinct ground values: already true
        add(Literal("!=", ra, rb))
    return EqConstraint(tuple(out))


# ---------------------------------------------------------------------------
# descriptors


def substitute(pattern: Term, val: Mapping[Var, Term]) -> Term:
    k = type(pattern)
    if k is Var:
        return val.get(pattern, pattern)
    if k is tuple:
        return tuple([substitute(x, val) for x in pattern])
    return pattern


def match(pattern: Term, term: Term, val: Optional[Mapping[Var, Atom]] = None) -> Optional[Dict[Var, Atom]]:
    """Match a pattern against a ground term; variables bind atoms only."""
    out: Dict[Var, Atom] = dict(val) if val else {}
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        kp = type(p)
        if kp is Var:
            if type(t) is not Atom:
                return None
            cur = out.get(p)
            if cur is None:
                out[p] = t
            elif cur != t:
                return None
        elif kp is tuple:
            if type(t) is not tuple or len(t) != len(p):
                return None
            stack.extend(zip(p, t))
        elif type(t) is not kp or p != t:
            return None
    return out


@dataclass(frozen=True)
class OrbitDescriptor:
    pattern: Term
    constraint: EqConstraint = TRUE

    def __post_init__(self) -> None:
        extra = set(self.constraint.variables()) - set(vars_in_order(self.pattern))
        if extra:
            names = ", ".join(sorted(v.name for v in extra))
            raise ValueError(f"constraint mentions variables absent from the pattern: {names}")

    def variables(self) -> List[Var]:
        return vars_in_order(self.pattern)

    def atoms(self) -> frozenset:
        return support_of(self.pattern) | self.constraint.atoms()

    def matches(self, t: Term) -> Optional[Dict[Var, Atom]]:
        val = match(self.pattern, t)
        if val is None or violated_literal(self.constraint, val) is not None:
            return None
        return val

    def __str__(self) -> str:
        return format_descriptor(self)


def instantiate(d: OrbitDescriptor, val: Mapping[Var, Atom]) -> Term:
    for v in d.variables():
        if v not in val:
            raise InstantiationError(f"no value for variable {v.name}")
        if type(val[v]) is not Atom:
            raise InstantiationError(f"variable {v.name} must be bound to an atom")
    bad = violated_literal(d.constraint, val)
    if bad is not None:
        raise InstantiationError(f"valuation violates {bad}")
    return substitute(d.pattern, val)


@dataclass(frozen=True)
class OrbitSet:
    support: frozenset = frozenset()
    descriptors: Tuple[OrbitDescriptor, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", frozenset(Atom(a) for a in self.support))
        object.__setattr__(self, "descriptors", tuple(self.descriptors))

    def atoms_outside_support(self) -> frozenset:
        return frozenset(a for d in self.descriptors for a in d.atoms()) - self.support

    def __contains__(self, t: Term) -> bool:
        return member(t, self)


def member(t: Term, s: OrbitSet) -> bool:
    return any(d.matches(t) is not None for d in s.descriptors)


def extend_valuations(variables: Sequence[Var], constraint: EqConstraint,
                      val: Mapping[Var, Atom], candidates: Iterable[Atom],
                      avoid: Iterable[Atom] = ()) -> Iterator[Dict[Var, Atom]]:
    """All valuations of ``variables`` extending ``val``, one per orbit over the
    candidate atoms.

    Each unbound variable is tried against every candidate, every fresh atom
    already introduced for an earlier variable, and one new fresh atom (chosen
    outside ``avoid``, the candidates and the values in ``val``).  Branches
    that cannot satisfy ``constraint`` are pruned as early as possible.
    """
    cands = sorted(set(candidates), key=int)
    todo = [v for v in variables if v not in val]
    taken = set(cands) | set(avoid) | set(val.values())

    def rec(i: int, cur: Dict[Var, Atom], fresh_used: List[Atom]) -> Iterator[Dict[Var, Atom]]:
        if i == len(todo):
            if violated_literal(constraint, cur) is None:
                yield dict(cur)
            return
        v = todo[i]
        new = fresh(taken | set(fresh_used))
        for a in itertools.chain(cands, fresh_used, [new]):
            cur[v] = a
            if partial_sat(constraint, cur):
                yield from rec(i + 1, cur, fresh_used + [a] if a == new else fresh_used)
            del cur[v]

    start = dict(val)
    if not partial_sat(constraint, start):
        return iter(())
    return rec(0, start, [])


def canonical_enumerate(s: OrbitSet) -> List[Term]:
    """One canonical representative per orbit of ``s`` under ``s.support``-fixing
    permutations, sorted by :func:`term_key`."""
    found: Dict[Term, None] = {}
    for d in s.descriptors:
        for val in extend_valuations(d.variables(), d.constraint, {}, s.support, s.support | d.atoms()):
            t = substitute(d.pattern, val)
            found.setdefault(canonical_form(t, s.support))
    return sorted(found, key=term_key)


def describe_orbit(t: Term, support: Iterable[Atom]) -> Tuple[OrbitDescriptor, Tuple[Atom, ...]]:
    """The descriptor of exactly the orbit of ground ``t`` over ``support``,
    plus the atom tuple that instantiates it back to ``t``."""
    k = frozenset(support)
    free = [a for a in atoms_in_order(t) if a not in k]
    names = {a: Var(f"v{i}") for i, a in enumerate(free)}
    pattern = _abstract(t, names)
    lits: List[Literal] = []
    vs = list(names.values())
    for i, j in itertools.combinations(range(len(vs)), 2):
        lits.append(Literal("!=", vs[i], vs[j]))
    for v in vs:
        for a in sorted(k, key=int):
            lits.append(Literal("!=", v, a))
    return OrbitDescriptor(pattern, EqConstraint(tuple(lits))), tuple(free)


def _abstract(t: Term, names: Mapping[Atom, Var]) -> Term:
    k = type(t)
    if k is Atom:
        return names.get(t, t)
    if k is tuple:
        return tuple([_abstract(x, names) for x in t])
    return t


# ---------------------------------------------------------------------------
# numbering of descriptor lists


def pair(x: int, y: int) -> int:
    """Injective pairing of naturals whose size is additive in its arguments.

    Layout from the least significant bit: ``b-1`` zeros, the ``b``-bit
    reversal of ``m = bitlen(y) + 1``, then ``y``, then ``x``.
    """
    n = y.bit_length()
    m = n + 1
    b = m.bit_length()
    rev = int(format(m, "b")[::-1], 2)
    return (((x << n) | y) << (2 * b - 1)) | (rev << (b - 1))


def unpair(z: int) -> Tuple[int, int]:
    if z <= 0:
        raise DecodeError("0 is not a pair code")
    zeros = (z & -z).bit_length() - 1
    b = zeros + 1
    rev = (z >> zeros) & ((1 << b) - 1)
    m = int(format(rev, "b").zfill(b)[::-1], 2)
    n = m - 1
    rest = z >> (zeros + b)
    return rest >> n, rest & ((1 << n) - 1)


def _text_number(s: str) -> int:
    return int.from_bytes(s.encode("utf-8"), "big")


def _number_text(n: int) -> str:
    try:
        return n.to_bytes((n.bit_length() + 7) // 8, "big").decode("utf-8")
    except UnicodeDecodeError as e:
        raise DecodeError("code does not hold text") from e


def _list_code(xs: Sequence[int]) -> int:
    z = 0
    for x in reversed(xs):
        z = 1 + pair(x, z)
    return z


def _list_decode(z: int) -> List[int]:
    out: List[int] = []
    while z:
        h, z = unpair(z - 1)
        out.append(h)
    return out


def _descriptor_code(d: OrbitDescriptor) -> int:
    return pair(_text_number(format_term(d.pattern)), _text_number(str(d.constraint)))


def encode(ds: Sequence[OrbitDescriptor]) -> SetBuilderCode:
    return _list_code([_descriptor_code(d) for d in ds])


def decode(code: SetBuilderCode) -> List[OrbitDescriptor]:
    if code < 0:
        raise DecodeError("codes are natural numbers")
    try:
        out = []
        for dc in _list_decode(code):
            pc, cc = unpair(dc)
            pattern = parse_term(_number_text(pc), allow_vars=True)
            ctext = _number_text(cc)
            constraint = parse_constraint(ctext) if ctext else TRUE
            out.append(OrbitDescriptor(pattern, constraint))
    except (TermError, ValueError) as e:
        raise DecodeError(f"{code} is not the code of a descriptor list: {e}") from e
    if encode(out) != code:
        raise DecodeError(f"{code} is not the code of a descriptor list")
    return out


def orbit_code(t: Term, support: Iterable[Atom]) -> Tuple[SetBuilderCode, Tuple[Atom, ...]]:
    d, atoms = describe_orbit(t, support)
    return encode([d]), atoms


def state_of_code(code: SetBuilderCode, atoms: Sequence[Atom]) -> Term:
    """Instantiate a single-descriptor code with its atom tuple."""
    ds = decode(code)
    if len(ds) != 1:
        raise DecodeError("a state code holds exactly one descriptor")
    d = ds[0]
    vs = d.variables()
    if len(vs) != len(atoms):
        raise InstantiationError(f"descriptor has {len(vs)} variables but {len(atoms)} atoms were given")
    return instantiate(d, dict(zip(vs, atoms)))


def encode_transition(src: Term, label: Term, tgt: Term, constraint: EqConstraint = TRUE) -> SetBuilderCode:
    """Number a transition descriptor as the nested list ``{{s},{s,a},{s,a,t}}``."""
    vs = vars_in_order(src)
    vsa = vars_in_order((src, label))
    return encode([
        OrbitDescriptor((src,), project_constraint(constraint, vs)),
        OrbitDescriptor((src, label), project_constraint(constraint, vsa)),
        OrbitDescriptor((src, label, tgt), constraint),
    ])


def transition_parts(code: SetBuilderCode) -> Tuple[Term, Term, Term, EqConstraint]:
    ds = decode(code)
    if len(ds) != 3 or not all(type(d.pattern) is tuple for d in ds) \
            or [len(d.pattern) for d in ds] != [1, 2, 3]:
        raise DecodeError("not a transition code")
    s, a, t = ds[2].pattern
    return s, a, t, ds[2].constraint


def project_transition(code: SetBuilderCode, component: str) -> OrbitDescriptor:
    """The descriptor of one component (``source``, ``label`` or ``target``)."""
    ds = decode(code)
    if len(ds) != 3:
        raise DecodeError("not a transition code")
    if component == "source":
        d = ds[0]
        return OrbitDescriptor(d.pattern[0], d.constraint)
    if component == "label":
        d = ds[1]
        lab = d.pattern[1]
        return OrbitDescriptor(lab, project_constraint(d.constraint, vars_in_order(lab)))
    if component == "target":
        d = ds[2]
        tgt = d.pattern[2]
        return OrbitDescriptor(tgt, project_constraint(d.constraint, vars_in_order(tgt)))
    raise ValueError(f"unknown component {component!r}")


def abstract_transition(state: Term, label: Term, target: Term, support: Iterable[Atom]) -> SetBuilderCode:
    """Code of the orbit of ``(state, label, target)`` over the support.

    Atoms of ``state`` become ``v0, v1, ...`` in first-occurrence order (the
    same naming :func:`describe_orbit` uses); atoms new in the label or target
    become ``w0, w1, ...``.  All variables are pairwise distinct and avoid the
    support.
    """
    k = frozenset(support)
    names: Dict[Atom, Var] = {}
    for i, a in enumerate(a for a in atoms_in_order(state) if a not in k):
        names[a] = Var(f"v{i}")
    j = 0
    for a in atoms_in_order((label, target)):
        if a not in k and a not in names:
            names[a] = Var(f"w{j}")
            j += 1
    vs = list(names.values())
    lits = [Literal("!=", vs[i], vs[j]) for i, j in itertools.combinations(range(len(vs)), 2)]
    lits += [Literal("!=", v, a) for v in vs for a in sorted(k, key=int)]
    return encode_transition(_abstract(state, names), _abstract(label, names), _abstract(target, names),
                             EqConstraint(tuple(lits)))


# ---------------------------------------------------------------------------
# support-violation search


def support_violation(sample: Iterable[Term], membership: Callable[[Term], bool],
                      support: Iterable[Atom], atom_budget: int = 8) -> Optional[Tuple[Permutation, Term]]:
    """Look for a transposition fixing ``support`` that maps a sample element
    outside the set decided by ``membership``.

    Candidate atoms are the non-support atoms of the sample plus
    ``atom_budget`` further atoms.  ``None`` means no violation was found
    within the budget, not that the set is supported.
    """
    k = frozenset(support)
    items = sorted(set(sample), key=term_key)
    seen = frozenset(a for t in items for a in support_of(t))
    cands = sorted(seen - k, key=int) + fresh_atoms(seen | k, atom_budget)
    for t in items:
        moved = [a for a in atoms_in_order(t) if a not in k]
        for a in moved:
            for b in cands:
                if b == a:
                    continue
                p = Permutation.transposition(a, b)
                if not membership(apply(p, t)):
                    return p, t
    return None


# ---------------------------------------------------------------------------
# text syntax

_LIT_RE = re.compile(r"\s*(!=|≠|=)\s*")


def parse_literal(text: str) -> Literal:
    text = text.strip()
    left, pos = parse_term_prefix(text, 0, allow_vars=True)
    m = _LIT_RE.match(text, pos)
    if not m:
        raise TermError(f"expected '=' or '!=' in literal {text!r}")
    right, end = parse_term_prefix(text, m.end(), allow_vars=True)
    if text[end:].strip():
        raise TermError(f"trailing input in literal {text!r}")
    op = "=" if m.group(1) == "=" else "!="
    return Literal(op, left, right)


def parse_constraint(text: str) -> EqConstraint:
    text = text.strip()
    if not text:
        return TRUE
    return EqConstraint(tuple(parse_literal(part) for part in _split_top(text)))


def _split_top(text: str) -> List[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def format_descriptor(d: OrbitDescriptor) -> str:
    s = "orbit " + format_term(d.pattern)
    if d.constraint.literals:
        s += " where " + str(d.constraint)
    return s


def parse_descriptor(text: str, max_depth: Optional[int] = 3, max_tuple: Optional[int] = 16) -> OrbitDescriptor:
    text = text.strip()
    if not text.startswith("orbit "):
        raise TermError(f"descriptor must start with 'orbit ': {text!r}")
    body = text[len("orbit "):]
    pattern, pos = parse_term_prefix(body, 0, allow_vars=True)
    rest = body[pos:].strip()
    constraint = TRUE
    if rest:
        if not rest.startswith("where "):
            raise TermError(f"expected 'where' after pattern in {text!r}")
        constraint = parse_constraint(rest[len("where "):])
    check_caps(pattern, max_depth, max_tuple)
    return OrbitDescriptor(pattern, constraint)
