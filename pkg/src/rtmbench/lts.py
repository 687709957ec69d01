"""Labelled transition systems: finite graphs, descriptor-presented systems with
atoms, enumerator-backed effective systems, and bounded orbit-quotient
exploration."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from .atoms import (
    TAU, Atom, Const, Term, TermError, atoms_in_order, canonical_form, format_term, fresh_atoms,
    parse_term, support_of, term_key,
)
from .orbitsets import (
    DecodeError, OrbitDescriptor, OrbitSet, SetBuilderCode, abstract_transition, decode,
    extend_valuations, format_descriptor, match, orbit_code, parse_descriptor, partial_sat,
    state_of_code, substitute, transition_parts,
)

TAU_LABEL = "tau"
DEFAULT_EMISSION_CAP = 10_000


class LtsFormatError(ValueError):
    pass


# ---------------------------------------------------------------------------
# finite graphs


@dataclass(frozen=True)
class FiniteLts:
    """A finite LTS over states ``0 .. num_states-1`` with string labels.

    ``names`` optionally records where each state came from (a printed
    canonical term).  ``frontier`` lists states whose outgoing transitions
    were cut by an exploration bound, and ``truncated`` is set when an
    exploration hit a hard cap and the graph may be missing parts.
    """

    num_states: int
    transitions: Tuple[Tuple[int, str, int], ...] = ()
    initial: int = 0
    names: Optional[Tuple[str, ...]] = None
    frontier: frozenset = frozenset()
    truncated: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if self.num_states < 1:
            raise ValueError("an LTS has at least its initial state")
        if not 0 <= self.initial < self.num_states:
            raise ValueError(f"initial state {self.initial} out of range")
        for (s, a, t) in self.transitions:
            if not (0 <= s < self.num_states and 0 <= t < self.num_states):
                raise ValueError(f"transition ({s},{a!r},{t}) leaves the state range")
        if self.names is not None and len(self.names) != self.num_states:
            raise ValueError("names must cover every state")

    @property
    def states(self) -> range:
        return range(self.num_states)

    def labels(self) -> Set[str]:
        return {a for _, a, _ in self.transitions}

    def adjacency(self) -> List[List[Tuple[str, int]]]:
        adj: List[List[Tuple[str, int]]] = [[] for _ in range(self.num_states)]
        for s, a, t in self.transitions:
            adj[s].append((a, t))
        return adj

    def name(self, s: int) -> str:
        return self.names[s] if self.names else str(s)

    def renumbered(self, order: Sequence[int]) -> "FiniteLts":
        """The same graph with state ``order[i]`` renamed to ``i``."""
        new = {old: i for i, old in enumerate(order)}
        return FiniteLts(
            self.num_states,
            tuple((new[s], a, new[t]) for s, a, t in self.transitions),
            new[self.initial],
            tuple(self.name(o) for o in order) if self.names else None,
            frozenset(new[s] for s in self.frontier),
            self.truncated,
        )


def out_concrete(l: FiniteLts, s: int) -> Set[Tuple[str, int]]:
    if not 0 <= s < l.num_states:
        raise ValueError(f"unknown state {s}")
    return {(a, t) for (x, a, t) in l.transitions if x == s}


def label_to_str(t: Term) -> str:
    """Printed form of an action term as used in graph labels: constants print
    as their bare symbol (so the silent action is ``tau``), anything else in
    term syntax."""
    if type(t) is Const:
        return t.symbol
    return format_term(t)


def str_to_label(s: str) -> Term:
    if s == TAU_LABEL:
        return TAU
    try:
        return parse_term(s)
    except TermError:
        return Const(s)


_HEADER_RE = re.compile(r"^des\s*\(\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*\)\s*$")
_EDGE_RE = re.compile(r'^\(\s*(\d+)\s*,\s*"((?:[^"\\]|\\.)*)"\s*,\s*(\d+)\s*\)\s*$')
_EDGE_BARE_RE = re.compile(r"^\(\s*(\d+)\s*,\s*([^,\"]+?)\s*,\s*(\d+)\s*\)\s*$")


def parse_aut(text: str) -> FiniteLts:
    """Read the Aldebaran ``.aut`` format."""
    lines = text.splitlines()
    idx = [i for i, line in enumerate(lines) if line.strip()]
    if not idx:
        raise LtsFormatError("line 1: missing 'des' header")
    hline = idx[0]
    m = _HEADER_RE.match(lines[hline].strip())
    if not m:
        raise LtsFormatError(f"line {hline + 1}: malformed header {lines[hline]!r}")
    init, count, n = (int(g) for g in m.groups())
    if n < 1:
        raise LtsFormatError(f"line {hline + 1}: an LTS needs at least one state")
    trans: List[Tuple[int, str, int]] = []
    for i in idx[1:]:
        raw = lines[i].strip()
        m = _EDGE_RE.match(raw)
        if m:
            label = m.group(2).replace('\\"', '"').replace("\\\\", "\\")
        else:
            m = _EDGE_BARE_RE.match(raw)
            if not m:
                raise LtsFormatError(f"line {i + 1}: malformed transition {lines[i]!r}")
            label = m.group(2)
        s, t = int(m.group(1)), int(m.group(3))
        if s >= n or t >= n:
            raise LtsFormatError(f"line {i + 1}: state out of range 0..{n - 1}")
        trans.append((s, label, t))
    if len(trans) != count:
        raise LtsFormatError(f"line {hline + 1}: header announces {count} transitions, found {len(trans)}")
    if init >= n:
        raise LtsFormatError(f"line {hline + 1}: initial state {init} out of range")
    return FiniteLts(n, tuple(trans), init)


def emit_aut(l: FiniteLts) -> str:
    out = [f"des ({l.initial},{len(l.transitions)},{l.num_states})"]
    for s, a, t in l.transitions:
        esc = a.replace("\\", "\\\\").replace('"', '\\"')
        out.append(f'({s},"{esc}",{t})')
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# bounded exploration


def explore(initial: Hashable, successors: Callable[[Hashable], Iterable[Tuple[str, Hashable]]],
            depth: Optional[int], *, name: Callable[[Hashable], str] = str,
            cost: Optional[Callable[[str, Hashable, Hashable], int]] = None,
            max_states: Optional[int] = None) -> FiniteLts:
    """Explore a successor function into a finite graph.

    Distance is the least total ``cost`` along a path (default: every step
    costs 1, so this is plain breadth-first depth).  States within ``depth``
    are expanded; transitions that would exceed ``depth`` are dropped and
    their source recorded in ``frontier``.  Exceeding ``max_states`` stops the
    search and sets ``truncated``.
    """
    index: Dict[Hashable, int] = {initial: 0}
    order: List[Hashable] = [initial]
    dist: Dict[Hashable, int] = {initial: 0}
    done: Set[Hashable] = set()
    edges: Dict[Tuple[int, str, int], None] = {}
    frontier: Set[int] = set()
    truncated = False
    dq = deque([(0, initial)])
    while dq:
        d, u = dq.popleft()
        if u in done or d != dist[u]:
            continue
        done.add(u)
        for label, v in successors(u):
            c = 1 if cost is None else cost(label, u, v)
            nd = d + c
            if depth is not None and nd > depth:
                frontier.add(index[u])
                continue
            if v not in index:
                if max_states is not None and len(order) >= max_states:
                    truncated = True
                    frontier.add(index[u])
                    continue
                index[v] = len(order)
                order.append(v)
            edges.setdefault((index[u], label, index[v]))
            if nd < dist.get(v, nd + 1):
                dist[v] = nd
                if c == 0:
                    dq.appendleft((nd, v))
                else:
                    dq.append((nd, v))
        if truncated:
            break
    if truncated:
        frontier.update(index[u] for u in order if u not in done)
    return FiniteLts(len(order), tuple(edges), 0, tuple(name(s) for s in order), frozenset(frontier), truncated)


# ---------------------------------------------------------------------------
# systems with atoms


@dataclass(frozen=True)
class SymbolicLtsA:
    """A transition system with atoms presented by descriptors.

    ``transition_space`` holds descriptors whose patterns are
    ``(source, label, target)`` triples.  ``labels`` optionally declares the
    label set (needed when compiling to a machine).
    """

    support: frozenset
    state_space: OrbitSet
    transition_space: OrbitSet
    initial: Term
    labels: Optional[OrbitSet] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "support", frozenset(Atom(a) for a in self.support))
        for d in self.transition_space.descriptors:
            if type(d.pattern) is not tuple or len(d.pattern) != 3:
                raise ValueError(f"transition descriptor is not a triple: {format_descriptor(d)}")

    def label_space(self) -> OrbitSet:
        if self.labels is not None:
            return self.labels
        from .orbitsets import project_constraint
        ds = []
        for d in self.transition_space.descriptors:
            lab = d.pattern[1]
            from .atoms import vars_in_order
            ds.append(OrbitDescriptor(lab, project_constraint(d.constraint, vars_in_order(lab))))
        return OrbitSet(self.support, tuple(ds))


class EffectiveLtsA:
    """An enumerator-backed transition system with atoms.

    ``out`` maps the code of a state orbit to a stream of transition codes
    (see :func:`rtmbench.orbitsets.encode_transition`).  Streams are read at
    most ``cap`` emissions deep and cached, so re-querying a code yields the
    same prefix.
    """

    def __init__(self, support: Iterable[Atom], initial: Tuple[SetBuilderCode, Tuple[Atom, ...]],
                 out: Callable[[SetBuilderCode], Iterable[SetBuilderCode]], cap: int = DEFAULT_EMISSION_CAP,
                 labels: Optional[OrbitSet] = None) -> None:
        self.support = frozenset(Atom(a) for a in support)
        self.initial = (initial[0], tuple(initial[1]))
        self._out = out
        self.cap = cap
        self.labels = labels
        self._cache: Dict[SetBuilderCode, Tuple[List[SetBuilderCode], bool]] = {}
        self.truncated_codes: Set[SetBuilderCode] = set()
        self.diagnostics: List[str] = []

    def emissions(self, code: SetBuilderCode) -> Tuple[List[SetBuilderCode], bool]:
        hit = self._cache.get(code)
        if hit is not None:
            return hit
        got: List[SetBuilderCode] = []
        truncated = False
        for c in self._out(code):
            if len(got) >= self.cap:
                truncated = True
                break
            got.append(c)
        if truncated:
            self.truncated_codes.add(code)
            self.diagnostics.append(f"enumeration for a state code stopped after {self.cap} emissions")
        self._cache[code] = (got, truncated)
        return got, truncated

    def initial_state(self) -> Term:
        return state_of_code(*self.initial)


def normalize_edge(state: Term, label: Term, target: Term, support: frozenset) -> Tuple[Term, Term]:
    """Express an edge in the frame of its (canonical) source.

    Atoms new to the edge are renamed, in first-occurrence order over
    ``(label, target)``, to the least atoms outside the support and the
    source; the target is then put in canonical form.
    """
    protected = support | support_of(state)
    label, target = canonical_form((label, target), protected)
    return label, canonical_form(target, support)


def _triple_successors(state: Term, s_pat: Term, a_pat: Term, t_pat: Term, constraint, support: frozenset,
                       raw: bool = False):
    val = match(s_pat, state)
    if val is None or not partial_sat(constraint, val):
        return None
    here = support | support_of(state)
    from .atoms import vars_in_order
    out = []
    for ext in extend_valuations(vars_in_order((s_pat, a_pat, t_pat)), constraint, val, here,
                                 here | support_of((a_pat, t_pat))):
        a, t = substitute(a_pat, ext), substitute(t_pat, ext)
        out.append((a, t) if raw else normalize_edge(state, a, t, support))
    return out


def symbolic_successors(l: SymbolicLtsA, state: Term) -> List[Tuple[Term, Term]]:
    found: Dict[Tuple[Term, Term], None] = {}
    for d in l.transition_space.descriptors:
        s_pat, a_pat, t_pat = d.pattern
        got = _triple_successors(state, s_pat, a_pat, t_pat, d.constraint, l.support)
        for e in got or ():
            found.setdefault(e)
    return sorted(found, key=lambda e: (term_key(e[0]), term_key(e[1])))


def effective_successors(l: EffectiveLtsA, state: Term) -> List[Tuple[Term, Term]]:
    code, _ = orbit_code(state, l.support)
    codes, _ = l.emissions(code)
    found: Dict[Tuple[Term, Term], None] = {}
    for c in codes:
        try:
            s_pat, a_pat, t_pat, constraint = transition_parts(c)
        except DecodeError as e:
            l.diagnostics.append(f"undecodable emission: {e}")
            continue
        got = _triple_successors(state, s_pat, a_pat, t_pat, constraint, l.support)
        if got is None:
            l.diagnostics.append(f"emission does not start at the queried state {format_term(state)}")
            continue
        for e in got:
            found.setdefault(e)
    return sorted(found, key=lambda e: (term_key(e[0]), term_key(e[1])))


def successors(l, state: Term) -> List[Tuple[Term, Term]]:
    if isinstance(l, SymbolicLtsA):
        return symbolic_successors(l, state)
    if isinstance(l, EffectiveLtsA):
        return effective_successors(l, state)
    raise TypeError(f"not a system with atoms: {type(l).__name__}")


def initial_state(l) -> Term:
    if isinstance(l, SymbolicLtsA):
        return canonical_form(l.initial, l.support)
    return canonical_form(l.initial_state(), l.support)


def effective_from_successors(support: Iterable[Atom], initial: Term,
                              succ: Callable[[Term], Iterable[Tuple[Term, Term]]],
                              cap: int = DEFAULT_EMISSION_CAP, labels: Optional[OrbitSet] = None) -> EffectiveLtsA:
    """Wrap a concrete successor function as an enumerator over orbit codes.

    ``out`` decodes a state code to its canonical representative, asks
    ``succ`` for its transitions and emits one code per transition orbit.
    """
    k = frozenset(support)
    init = canonical_form(initial, k)

    def out(code: SetBuilderCode):
        ds = decode(code)
        n = len(ds[0].variables())
        state = state_of_code(code, tuple(fresh_atoms(k, n)))
        seen: Set[SetBuilderCode] = set()
        for label, target in succ(state):
            c = abstract_transition(state, label, target, k)
            if c not in seen:
                seen.add(c)
                yield c

    return EffectiveLtsA(k, orbit_code(init, k), out, cap, labels)


def symbolic_to_effective(l: SymbolicLtsA) -> EffectiveLtsA:
    return effective_from_successors(l.support, l.initial, lambda s: symbolic_successors(l, s),
                                     labels=l.label_space())


def bounded_reach(l, depth: int, max_states: Optional[int] = None) -> FiniteLts:
    """Orbit-quotient reachable graph of a system with atoms up to ``depth``.

    States are canonical forms over the support; labels are written in the
    frame of their source state (see :func:`normalize_edge`).
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")

    def succ(s: Term):
        return [(label_to_str(a), t) for a, t in successors(l, s)]

    g = explore(initial_state(l), succ, depth, name=format_term, max_states=max_states)
    if isinstance(l, EffectiveLtsA) and l.truncated_codes:
        g = FiniteLts(g.num_states, g.transitions, g.initial, g.names, g.frontier, True)
    return g


def sample_transitions(l: SymbolicLtsA, depth: int, max_states: int = 200) -> List[Term]:
    """Concrete ``(s, a, t)`` triples leaving the states of the depth-bounded
    quotient, one per canonical branch, all in the source's own frame."""
    layer, seen = [initial_state(l)], {initial_state(l)}
    out: Dict[Term, None] = {}
    for d in range(depth + 1):
        nxt = []
        for state in layer:
            for desc in l.transition_space.descriptors:
                for a, t in _triple_successors(state, *desc.pattern, desc.constraint, l.support, raw=True) or ():
                    out.setdefault((state, a, t))
            for _, t in symbolic_successors(l, state):
                if t not in seen and len(seen) < max_states:
                    seen.add(t)
                    nxt.append(t)
        layer = nxt
    return list(out)


@dataclass(frozen=True)
class SupportVerdict:
    ok: bool
    offending: Tuple[Atom, ...] = ()

    def __str__(self) -> str:
        if self.ok:
            return "supported"
        return "atoms outside the support: " + " ".join(format_term(a) for a in self.offending)


def check_k_supported(l: SymbolicLtsA) -> SupportVerdict:
    """Accept iff every atom mentioned by a descriptor or the initial state lies
    in the declared support (then every support-fixing permutation maps the
    presented sets onto themselves)."""
    bad = (l.state_space.atoms_outside_support() | l.transition_space.atoms_outside_support()
           | support_of(l.initial)) - l.support
    if l.labels is not None:
        bad |= l.labels.atoms_outside_support() - l.support
    return SupportVerdict(not bad, tuple(sorted(bad, key=int)))


# ---------------------------------------------------------------------------
# text format for symbolic systems


def parse_ltsa(text: str) -> SymbolicLtsA:
    support: Optional[frozenset] = None
    initial: Optional[Term] = None
    states, trans, labels = [], [], []
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(":")
        rest = rest.strip()
        try:
            if key == "support":
                support = frozenset(parse_term(tok) for tok in rest.split())
                if any(type(a) is not Atom for a in support):
                    raise LtsFormatError("support lists atoms only")
            elif key == "initial":
                initial = parse_term(rest)
            elif key == "state":
                states.append(parse_descriptor(rest))
            elif key == "trans":
                trans.append(parse_descriptor(rest, max_depth=4))
            elif key == "label":
                labels.append(parse_descriptor(rest))
            else:
                raise LtsFormatError(f"unknown key {key!r}")
        except (TermError, ValueError) as e:
            raise LtsFormatError(f"line {i}: {e}") from e
    if initial is None:
        raise LtsFormatError("missing 'initial:' line")
    k = support or frozenset()
    return SymbolicLtsA(k, OrbitSet(k, tuple(states)), OrbitSet(k, tuple(trans)), initial,
                        OrbitSet(k, tuple(labels)) if labels else None)


def format_ltsa(l: SymbolicLtsA) -> str:
    out = ["support:" + "".join(" " + format_term(a) for a in sorted(l.support, key=int)),
           "initial: " + format_term(l.initial)]
    out += ["state: " + format_descriptor(d) for d in l.state_space.descriptors]
    out += ["trans: " + format_descriptor(d) for d in l.transition_space.descriptors]
    if l.labels is not None:
        out += ["label: " + format_descriptor(d) for d in l.labels.descriptors]
    return "\n".join(out) + "\n"
