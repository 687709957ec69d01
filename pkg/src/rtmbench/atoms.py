"""Atoms, terms over atoms, finitely supported permutations and canonical renaming.

Terms are built from four kinds of node:

* :class:`Atom` -- a name with no structure beyond equality (printed ``#n``);
* :class:`Const` -- a symbol from a finite alphabet (printed ``'sym``);
* :class:`Var` -- a pattern variable (printed bare, lowercase);
* plain Python tuples of terms (printed ``(t1,...,tn)``).

``Atom`` subclasses ``int`` and ``Const`` subclasses ``str`` so that hashing
and equality run at C speed; the integer value of an atom is only an
identity and a tie-breaker for canonical forms.
"""

from __future__ import annotations

import re
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

DEFAULT_MAX_DEPTH = 3
DEFAULT_MAX_ARITY = 16


class TermError(ValueError):
    """Raised for malformed term text or terms exceeding the declared caps."""


class Atom(int):
    __slots__ = ()

    def __new__(cls, index: int) -> "Atom":
        if index < 0:
            raise ValueError("atom index must be nonnegative")
        return int.__new__(cls, index)

    @property
    def index(self) -> int:
        return int(self)

    def __repr__(self) -> str:
        return f"#{int(self)}"

    __str__ = __repr__


class Const(str):
    __slots__ = ()

    @property
    def symbol(self) -> str:
        return str.__str__(self)

    def __repr__(self) -> str:
        return "'" + str.__str__(self)


class Var:
    __slots__ = ("name",)

    def __init__(self, name: str) -> None:
        if not _VAR_RE.fullmatch(name):
            raise TermError(f"bad variable name {name!r}")
        self.name = name

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Var) and other.name == self.name

    def __hash__(self) -> int:
        return hash(("var", self.name))

    def __repr__(self) -> str:
        return self.name


Term = Union[Atom, Const, Var, tuple]

TAU = Const("tau")
BLANK = Const("_")

_VAR_RE = re.compile(r"[a-z][a-z0-9]*")
_SYMBOL_RE = re.compile(r"[A-Za-z0-9_.+\-*^~<>$@]+")


# ---------------------------------------------------------------------------
# inspection


def is_atom(t: Term) -> bool:
    return type(t) is Atom


def iter_nodes(t: Term) -> Iterator[Term]:
    """Pre-order traversal of the leaves of ``t`` (tuples are descended)."""
    stack = [t]
    while stack:
        x = stack.pop()
        if type(x) is tuple:
            stack.extend(reversed(x))
        else:
            yield x


def atoms_in_order(t: Term) -> List[Atom]:
    """Distinct atoms of ``t`` in first-occurrence (left-to-right) order."""
    seen: Dict[Atom, None] = {}
    for x in iter_nodes(t):
        if type(x) is Atom and x not in seen:
            seen[x] = None
    return list(seen)


def support_of(t: Term) -> frozenset:
    """The least support of a single term: the set of atoms occurring in it."""
    return frozenset(x for x in iter_nodes(t) if type(x) is Atom)


def vars_in_order(t: Term) -> List[Var]:
    seen: Dict[Var, None] = {}
    for x in iter_nodes(t):
        if type(x) is Var and x not in seen:
            seen[x] = None
    return list(seen)


def is_ground(t: Term) -> bool:
    return not any(type(x) is Var for x in iter_nodes(t))


def depth_of(t: Term) -> int:
    if type(t) is not tuple:
        return 0
    return 1 + max((depth_of(x) for x in t), default=0)


def max_arity(t: Term) -> int:
    if type(t) is not tuple:
        return 0
    return max([len(t)] + [max_arity(x) for x in t])


def check_caps(t: Term, max_depth: Optional[int] = DEFAULT_MAX_DEPTH,
               max_tuple: Optional[int] = DEFAULT_MAX_ARITY) -> None:
    if max_depth is not None and depth_of(t) > max_depth:
        raise TermError(f"tuple nesting depth {depth_of(t)} exceeds cap {max_depth}: {format_term(t)}")
    if max_tuple is not None and max_arity(t) > max_tuple:
        raise TermError(f"tuple arity {max_arity(t)} exceeds cap {max_tuple}: {format_term(t)}")


def term_key(t: Term):
    """A total-order key over terms, used only to make outputs deterministic."""
    k = type(t)
    if k is Const:
        return (0, str.__str__(t))
    if k is Atom:
        return (1, int(t))
    if k is Var:
        return (2, t.name)
    return (3, len(t), tuple(term_key(x) for x in t))


# ---------------------------------------------------------------------------
# permutations


class Permutation:
    """A finitely supported bijection on atoms (identity outside ``mapping``)."""

    __slots__ = ("_map",)

    def __init__(self, mapping: Optional[Mapping[Atom, Atom]] = None) -> None:
        m = {Atom(a): Atom(b) for a, b in (mapping or {}).items() if a != b}
        if len(set(m.values())) != len(m) or set(m.values()) != set(m):
            raise ValueError("mapping is not a finitely supported bijection")
        self._map = m

    @classmethod
    def identity(cls) -> "Permutation":
        return cls()

    @classmethod
    def transposition(cls, a: Atom, b: Atom) -> "Permutation":
        return cls({a: b, b: a})

    @classmethod
    def from_injection(cls, f: Mapping[Atom, Atom]) -> "Permutation":
        """Extend a finite injective partial map to a permutation.

        Cycles are closed by sending the unused images back onto the
        unmapped preimages in index order.
        """
        f = dict(f)
        if len(set(f.values())) != len(f):
            raise ValueError("partial map is not injective")
        dom, ran = set(f), set(f.values())
        dangling = sorted(ran - dom)  # images that still need an image
        missing = sorted(dom - ran)   # preimages nothing maps onto yet
        for a, b in zip(dangling, missing):
            f[a] = b
        return cls(f)

    @property
    def mapping(self) -> Dict[Atom, Atom]:
        return dict(self._map)

    def __call__(self, a: Atom) -> Atom:
        return self._map.get(a, a)

    def domain(self) -> frozenset:
        return frozenset(self._map)

    def is_identity(self) -> bool:
        return not self._map

    def fixes(self, atoms: Iterable[Atom]) -> bool:
        return all(self._map.get(a, a) == a for a in atoms)

    def compose(self, other: "Permutation") -> "Permutation":
        """``self ∘ other``: apply ``other`` first."""
        keys = set(self._map) | set(other._map)
        return Permutation({a: self(other(a)) for a in keys})

    def inverse(self) -> "Permutation":
        return Permutation({b: a for a, b in self._map.items()})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Permutation) and other._map == self._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{a!r}->{b!r}" for a, b in sorted(self._map.items()))
        return f"Permutation({{{inner}}})"


def apply(p: Permutation, t: Term) -> Term:
    if not p._map:
        return t
    return _rename(t, p._map)


def _rename(t: Term, m: Mapping[Atom, Atom]) -> Term:
    k = type(t)
    if k is Atom:
        return m.get(t, t)
    if k is tuple:
        return tuple([_rename(x, m) for x in t])
    return t


def rename_atoms(t: Term, m: Mapping[Atom, Atom]) -> Term:
    """Apply an atom map that need not be a permutation (used for substitution)."""
    return _rename(t, m)


# ---------------------------------------------------------------------------
# freshness and canonical forms


def fresh(avoid: Iterable[Atom]) -> Atom:
    """The least-index atom outside ``avoid``."""
    used = {int(a) for a in avoid}
    i = 0
    while i in used:
        i += 1
    return Atom(i)


def fresh_atoms(avoid: Iterable[Atom], count: int) -> List[Atom]:
    used = {int(a) for a in avoid}
    out: List[Atom] = []
    i = 0
    while len(out) < count:
        if i not in used:
            out.append(Atom(i))
        i += 1
    return out


def canonical_renaming(t: Term, protected: Iterable[Atom] = ()) -> Dict[Atom, Atom]:
    """The injective map used by :func:`canonicalize` (non-protected atoms only)."""
    prot = protected if isinstance(protected, (set, frozenset)) else set(protected)
    m: Dict[Atom, Atom] = {}
    nxt = 0
    for x in iter_nodes(t):
        if type(x) is Atom and x not in prot and x not in m:
            while Atom(nxt) in prot:
                nxt += 1
            m[x] = Atom(nxt)
            nxt += 1
    return m


def canonical_form(t: Term, protected: Iterable[Atom] = ()) -> Term:
    """Like :func:`canonicalize` but skips building the permutation."""
    m = canonical_renaming(t, protected)
    if all(a == b for a, b in m.items()):
        return t
    return _rename(t, m)


def canonicalize(t: Term, protected: Iterable[Atom] = ()) -> Tuple[Term, Permutation]:
    """Rename non-protected atoms, in first-occurrence order, to the least
    atoms outside ``protected``.  Returns ``(result, p)`` with
    ``apply(p, t) == result``."""
    m = canonical_renaming(t, protected)
    p = Permutation.from_injection(m)
    return _rename(t, m), p


def orbit_eq(t1: Term, t2: Term, protected: Iterable[Atom] = ()) -> Optional[Permutation]:
    """A permutation fixing ``protected`` that maps ``t1`` onto ``t2``, if any."""
    prot = set(protected)
    fwd: Dict[Atom, Atom] = {}
    bwd: Dict[Atom, Atom] = {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        ka, kb = type(a), type(b)
        if ka is not kb:
            return None
        if ka is tuple:
            if len(a) != len(b):
                return None
            stack.extend(zip(a, b))
        elif ka is Atom:
            if (a in prot or b in prot) and a != b:
                return None
            if fwd.setdefault(a, b) != b or bwd.setdefault(b, a) != a:
                return None
        elif a != b:
            return None
    return Permutation.from_injection(fwd)


# ---------------------------------------------------------------------------
# text syntax


def format_term(t: Term) -> str:
    k = type(t)
    if k is Atom:
        return f"#{int(t)}"
    if k is Const:
        return "'" + str.__str__(t)
    if k is Var:
        return t.name
    if k is tuple:
        return "(" + ",".join(format_term(x) for x in t) + ")"
    raise TermError(f"not a term: {t!r}")


_TOKEN_RE = re.compile(r"\s*(?:(?P<atom>#\d+)|(?P<const>'[^\s,()'#=!]+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[(),]))")


class _TermParser:
    def __init__(self, text: str, allow_vars: bool, bare_constants: bool) -> None:
        self.text = text
        self.pos = 0
        self.allow_vars = allow_vars
        self.bare_constants = bare_constants

    def error(self, msg: str) -> TermError:
        return TermError(f"{msg} at column {self.pos + 1} in {self.text!r}")

    def peek(self):
        m = _TOKEN_RE.match(self.text, self.pos)
        if not m:
            return None, None
        return m, m.lastgroup

    def term(self) -> Term:
        m, kind = self.peek()
        if m is None or kind is None:
            raise self.error("expected a term")
        if kind == "punct" and m.group("punct") == "(":
            self.pos = m.end()
            items: List[Term] = []
            m2, k2 = self.peek()
            if m2 is not None and k2 == "punct" and m2.group("punct") == ")":
                self.pos = m2.end()
                return ()
            while True:
                items.append(self.term())
                m2, k2 = self.peek()
                if m2 is None or k2 != "punct":
                    raise self.error("expected ',' or ')'")
                self.pos = m2.end()
                if m2.group("punct") == ")":
                    return tuple(items)
                if m2.group("punct") != ",":
                    raise self.error("expected ',' or ')'")
        self.pos = m.end()
        if kind == "atom":
            return Atom(int(m.group("atom")[1:]))
        if kind == "const":
            sym = m.group("const")[1:]
            if not _SYMBOL_RE.fullmatch(sym):
                raise self.error(f"bad constant symbol {sym!r}")
            return Const(sym)
        if kind == "ident":
            name = m.group("ident")
            if self.allow_vars and _VAR_RE.fullmatch(name):
                return Var(name)
            if self.bare_constants:
                return Const(name)
            raise self.error(f"unexpected identifier {name!r}")
        raise self.error("unexpected token")


def parse_term(text: str, *, allow_vars: bool = False, bare_constants: bool = False,
               max_depth: Optional[int] = None, max_tuple: Optional[int] = None) -> Term:
    """Parse the printed form of a term.

    ``allow_vars`` reads lowercase identifiers as variables; ``bare_constants``
    reads remaining identifiers as constants (used for state and action names
    in machine files).  Caps are enforced when given.
    """
    p = _TermParser(text, allow_vars, bare_constants)
    t = p.term()
    if text[p.pos:].strip():
        raise p.error("trailing input")
    check_caps(t, max_depth, max_tuple)
    return t


def parse_term_prefix(text: str, pos: int, *, allow_vars: bool = False,
                      bare_constants: bool = False) -> Tuple[Term, int]:
    p = _TermParser(text, allow_vars, bare_constants)
    p.pos = pos
    t = p.term()
    return t, p.pos
