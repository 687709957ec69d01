"""Translators from transition systems to machines, and round-trip checking.

* :func:`compile_lts_to_rtminf` builds the three-control-state machine that
  keeps one encoded source state on its tape and rewrites it per transition.
* :func:`compile_ltsa_to_rtma` builds a machine with atoms that simulates an
  effective system with atoms in three stages: pick an enumerated transition
  orbit, valuate its free variables with the copy / fresh gadgets, then fire
  the label through the label-production gadget.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .atoms import (
    BLANK, TAU, Atom, Const, Term, format_term, fresh, support_of, term_key, vars_in_order,
)
from .bisim import BisimVerdict, branching_bisim, dp_branching_bisim
from .lts import (
    EffectiveLtsA, FiniteLts, SymbolicLtsA, bounded_reach, initial_state, str_to_label,
    successors, symbolic_to_effective,
)
from .orbitsets import (
    DecodeError, OrbitDescriptor, OrbitSet, TRUE, decode, describe_orbit, encode, match, orbit_code,
    partial_sat, state_of_code, substitute, transition_parts, violated_literal,
)
from .rtm import Configuration, Rtm, RtmRule, TapeInstance, config_lts
from .rtm_atoms import (
    FINISH, FIRED, FRESH, COPY, START, RtmA, RtmInf, config_lts_canonical, config_lts_inf, copy_gadget,
    fresh_gadget, label_orbits, produce_label_gadget,
)

CUT_LABEL = "<cut>"
UP, S, T = Const("up"), Const("s"), Const("t")


# ---------------------------------------------------------------------------
# countable systems


def _finite_code(i: int) -> Const:
    return Const(f"q{i}")


def compile_lts_to_rtminf(l: Union[FiniteLts, EffectiveLtsA, SymbolicLtsA]) -> Union[Rtm, RtmInf]:
    """Three control states ``up``, ``s`` and ``t``; the tape holds one symbol
    encoding the current source state.

    A finite source gives a classical machine with one rule per source
    transition.  A system with atoms (explored through its orbit quotient)
    gives an infinitary machine whose rules are computed on demand; its
    state symbols are the codes of ground descriptors.
    """
    if isinstance(l, FiniteLts):
        rules = [RtmRule(UP, BLANK, TAU, _finite_code(l.initial), "R", S),
                 RtmRule(S, BLANK, TAU, BLANK, "L", T)]
        for s1, a, s2 in l.transitions:
            rules.append(RtmRule(T, _finite_code(s1), str_to_label(a), _finite_code(s2), "R", S))
        return Rtm(tuple(rules), UP)
    if isinstance(l, SymbolicLtsA):
        l = symbolic_to_effective(l)

    def enc(t: Term) -> Const:
        return Const(f"c{encode([OrbitDescriptor(t, TRUE)]):x}")

    def dec(c: Term) -> Term:
        return decode(int(c.symbol[1:], 16))[0].pattern

    init = initial_state(l)

    def out_rules(state: Term, read: Term):
        if state == UP and read == BLANK:
            yield TAU, enc(init), "R", S
        elif state == S and read == BLANK:
            yield TAU, BLANK, "L", T
        elif state == T and type(read) is Const and read.symbol.startswith("c"):
            for a, t in successors(l, dec(read)):
                yield a, enc(t), "R", S

    return RtmInf(out_rules, UP, finite=False)


# ---------------------------------------------------------------------------
# systems with atoms


def _qsym(code: int) -> Const:
    return Const(f"q{code:x}")


def _csym(code: int) -> Const:
    return Const(f"c{code:x}")


def _num(c: Const) -> int:
    return int(c.symbol[1:], 16)


_GEN, _CTX, _NEXT = Const("gen"), Const("ctx"), Const("next")


class _Simulation:
    """Host side of the compiled machine: enumerator calls and stage changes,
    each surfacing as one τ-step."""

    def __init__(self, l: EffectiveLtsA, labels: OrbitSet) -> None:
        self.l = l
        self.k = l.support
        self.entries = {e: n for _, e, n in label_orbits(labels)}
        self._valid: Dict[int, List[int]] = {}
        self.diagnostics: List[str] = []

    def valid_emissions(self, code: int) -> List[int]:
        hit = self._valid.get(code)
        if hit is not None:
            return hit
        n = len(decode(code)[0].variables())
        state = state_of_code(code, tuple(_fresh_run(self.k, n)))
        codes, _ = self.l.emissions(code)
        ok = []
        for c in codes:
            try:
                s_pat, _, _, constraint = transition_parts(c)
            except DecodeError:
                self.diagnostics.append("skipped an undecodable emission")
                continue
            val = match(s_pat, state)
            if val is None or not partial_sat(constraint, val):
                self.diagnostics.append("skipped an emission that does not start at the queried state")
                continue
            ok.append(c)
        self._valid[code] = ok
        return ok

    def stage1(self, q: Const, atoms: Tuple[Atom, ...], j: int = 0) -> Configuration:
        return Configuration(Const(f"enum{j}"), TapeInstance((q, BLANK) + tuple(atoms), 0).normalized())

    def initial_stage1(self) -> Configuration:
        code, atoms = orbit_code(initial_state(self.l), self.k)
        return self.stage1(_qsym(code), atoms)

    def __call__(self, c: Configuration) -> List[Tuple[Term, Configuration]]:
        st, cells = c.state, c.tape.cells
        if st == UP:
            return [(TAU, self.initial_stage1())] if cells == (BLANK,) else []
        if type(st) is Const and st.symbol.startswith("enum"):
            return self._enumerate(int(st.symbol[4:]), cells)
        if st == FINISH and type(cells[0]) is tuple and cells[0][:1] == (_GEN,):
            return self._valuate(cells)
        if st == FIRED:
            for cell in cells:
                if type(cell) is tuple and cell[:1] == (_NEXT,):
                    return [(TAU, self.stage1(cell[1], cell[2]))]
            return []
        if st in self.entries and type(c.tape.symbol) is tuple and type(cells[0]) is tuple \
                and cells[0][:1] == (_CTX,):
            _, atoms, q = cells[0]
            return [(TAU, self.stage1(q, atoms))]
        return []

    def _enumerate(self, j: int, cells) -> List[Tuple[Term, Configuration]]:
        q, atoms = cells[0], tuple(cells[2:])
        valid = self.valid_emissions(_num(q))
        out = []
        if j < len(valid):
            tape = TapeInstance(((_GEN, q, _csym(valid[j])), BLANK) + atoms, 0).normalized()
            out.append((TAU, Configuration(FINISH, tape)))
        if j + 1 < len(valid):
            out.append((TAU, self.stage1(q, atoms, j + 1)))
        return out

    def _valuate(self, cells) -> List[Tuple[Term, Configuration]]:
        _, q, csym = cells[0]
        region: List[Atom] = []
        for cell in cells[2:]:
            if type(cell) is not Atom:
                break
            region.append(cell)
        code = _num(q)
        ns = len(decode(code)[0].variables())
        s_atoms, made = tuple(region[:ns]), region[ns:]
        state = state_of_code(code, s_atoms)
        s_pat, a_pat, t_pat, constraint = transition_parts(_num(csym))
        val = match(s_pat, state)
        if val is None:
            return []
        free = [v for v in vars_in_order((a_pat, t_pat)) if v not in val]
        if len(made) > len(free):
            return []
        val.update(zip(free, made))
        if not partial_sat(constraint, val):
            return []
        base = (cells[0], BLANK) + tuple(region)
        if len(made) < len(free):
            v = free[len(made)]
            out = []
            seen = set()
            for p, r in enumerate(region):
                if r not in seen and partial_sat(constraint, {**val, v: r}):
                    seen.add(r)
                    out.append((TAU, Configuration(COPY, TapeInstance(base, 2 + p).normalized())))
            for k in sorted(self.k, key=int):
                if partial_sat(constraint, {**val, v: k}):
                    out.append((TAU, Configuration(FINISH, TapeInstance(base + (k,), 0))))
            if partial_sat(constraint, {**val, v: fresh(self.k | set(region))}):
                out.append((TAU, Configuration(FRESH, TapeInstance(base + (BLANK,), len(base)))))
            return out
        if violated_literal(constraint, val) is not None:
            return []
        label, target = substitute(a_pat, val), substitute(t_pat, val)
        d, la = describe_orbit(label, self.k)
        e = Const(f"e{encode([d]):x}")
        if e not in self.entries:
            self.diagnostics.append(f"label {format_term(label)} is outside the declared label set")
            return []
        t_code, t_atoms = orbit_code(target, self.k)
        tape = ((_CTX, s_atoms, q), BLANK, e) + (tuple(la) if la else ((),)) \
            + (BLANK, (_NEXT, _qsym(t_code), tuple(t_atoms)))
        return [(TAU, Configuration(START, TapeInstance(tape, 2)))]


def _fresh_run(k, n: int) -> List[Atom]:
    from .atoms import fresh_atoms
    return fresh_atoms(k, n)


def _label_space(l: Union[EffectiveLtsA, SymbolicLtsA], labels: Optional[OrbitSet]) -> OrbitSet:
    if labels is not None:
        return labels
    if isinstance(l, SymbolicLtsA):
        return l.label_space()
    if l.labels is not None:
        return l.labels
    raise ValueError("compiling needs the label set of the source (pass labels=...)")


def compile_ltsa_to_rtma(l: Union[EffectiveLtsA, SymbolicLtsA], labels: Optional[OrbitSet] = None) -> RtmA:
    """Machine with atoms simulating ``l``; enumerator calls and stage
    bookkeeping run as host macros, atom handling as gadget schemas."""
    lab = _label_space(l, labels)
    eff = symbolic_to_effective(l) if isinstance(l, SymbolicLtsA) else l
    k = eff.support
    if not lab.support <= k:
        raise ValueError("the label set must be supported by the source's support")
    lab = OrbitSet(k, lab.descriptors)
    schemas = copy_gadget() + fresh_gadget("corrected", avoid=k) + produce_label_gadget(lab)
    sim = _Simulation(eff, lab)
    m = RtmA(k, tuple(schemas), UP, macros=sim)
    object.__setattr__(m, "simulation", sim)
    return m


def firing_cost(label: str, u: Term, v: Term) -> int:
    """Exploration cost for compiled machines: only steps into ``fired``
    count, so depth matches the number of simulated source transitions."""
    return 1 if v[2] == FIRED else 0


def with_cut_loops(g: FiniteLts) -> FiniteLts:
    """Mark states whose successors were cut off by a depth bound with a
    ``<cut>`` self-loop, so bounded graphs compare on equal terms."""
    extra = tuple((s, CUT_LABEL, s) for s in sorted(g.frontier))
    return FiniteLts(g.num_states, g.transitions + extra, g.initial, g.names, g.frontier, g.truncated)


# ---------------------------------------------------------------------------
# round trips


@dataclass
class CompilationReport:
    source: str
    machine: str
    mode: str
    depth: Optional[int]
    verdict: str  # related | not related | inconclusive
    closed: bool
    source_states: int
    machine_states: int
    witness_size: int = 0
    distinguishing: Optional[str] = None
    notes: List[str] = field(default_factory=list)
    result: Optional[BisimVerdict] = field(default=None, repr=False)
    graphs: Tuple[Optional[FiniteLts], Optional[FiniteLts]] = field(default=(None, None), repr=False)

    @property
    def related(self) -> bool:
        return self.verdict == "related"

    def to_text(self) -> str:
        lines = [f"source: {self.source}", f"machine: {self.machine}", f"mode: {self.mode}",
                 f"depth: {'full' if self.depth is None else self.depth}",
                 f"source-states: {self.source_states}", f"machine-states: {self.machine_states}",
                 f"closed: {'true' if self.closed else 'false'}", f"verdict: {self.verdict}"]
        if self.related:
            lines.append(f"witness-pairs: {self.witness_size}")
        if self.distinguishing:
            lines.append(f"distinguishing: {self.distinguishing}")
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def _summary(x) -> str:
    if isinstance(x, FiniteLts):
        return f"finite lts, {x.num_states} states, {len(x.transitions)} transitions"
    if isinstance(x, SymbolicLtsA):
        return (f"symbolic lts with atoms, support {len(x.support)}, "
                f"{len(x.transition_space.descriptors)} transition descriptors")
    if isinstance(x, EffectiveLtsA):
        return f"effective lts with atoms, support {len(x.support)}"
    if isinstance(x, Rtm):
        return f"rtm, {len(x.states)} states, {len(x.rules)} rules"
    if isinstance(x, RtmInf):
        return "infinitary rtm"
    if isinstance(x, RtmA):
        return f"rtm with atoms, support {len(x.support)}, {len(x.schemas)} schemas"
    return type(x).__name__


def verify_roundtrip(source, machine, depth: Optional[int] = None, mode: str = "bb",
                     max_states: int = 200_000) -> CompilationReport:
    """Build both graphs and compare them.

    Finite sources and classical machines are compared on full graphs.  For
    systems with atoms, the source is explored to ``depth`` transitions and
    the machine to ``depth`` fired transitions, with cut-off states marked by
    a ``<cut>`` loop; the report says whether either graph was cut.
    """
    if mode not in ("bb", "dpbb"):
        raise ValueError(f"unknown mode {mode!r}")
    notes: List[str] = []
    if isinstance(source, FiniteLts):
        gs = source
    else:
        gs = with_cut_loops(bounded_reach(source, depth if depth is not None else 10**9, max_states=max_states))
    if isinstance(machine, Rtm):
        gm = config_lts(machine, None if depth is None or isinstance(source, FiniteLts) else 2 * depth + 2,
                        max_states=max_states)
        if gm.frontier:
            gm = with_cut_loops(gm)
    elif isinstance(machine, RtmInf):
        gm = config_lts_inf(machine, None if depth is None else 2 * depth + 2, max_states=max_states)
        gm = with_cut_loops(gm)
    else:
        gm = with_cut_loops(config_lts_canonical(machine, depth, cost=firing_cost, max_states=max_states))
        sim = getattr(machine, "simulation", None)
        if sim is not None:
            notes += sorted(set(sim.diagnostics))
            if sim.l.truncated_codes:
                notes.append("enumerator output was truncated")
    closed = not gs.frontier and not gm.frontier
    if gs.truncated or gm.truncated:
        notes.append("exploration hit a cap")
        return CompilationReport(_summary(source), _summary(machine), mode, depth, "inconclusive", closed,
                                 gs.num_states, gm.num_states, notes=notes, graphs=(gs, gm))
    check = dp_branching_bisim if mode == "dpbb" else branching_bisim
    v = check(gs, gm)
    dist = None
    if not v.related and v.distinguishing:
        (p, q), a = v.distinguishing
        dist = f"states {p} and {q} differ on {a}"
    if not closed:
        notes.append("graphs were cut at the depth bound; cut states carry a <cut> loop")
    return CompilationReport(_summary(source), _summary(machine), mode, depth,
                             "related" if v.related else "not related", closed, gs.num_states, gm.num_states,
                             len(v.witness or ()), dist, notes, v, (gs, gm))
