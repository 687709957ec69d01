import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtmbench.atoms import BLANK, TAU, Atom, Const, Permutation, Var, apply, canonical_form, orbit_eq, support_of
from rtmbench.demos import copy_replay, fresh_replay, produce_label_replay
from rtmbench.lts import bounded_reach, str_to_label
from rtmbench.orbitsets import EqConstraint, OrbitDescriptor, OrbitSet
from rtmbench.rtm import Configuration, TapeInstance
from rtmbench.rtm_atoms import (COPY, FRESH, RtmA, RtmaFormatError, RtmInf, RuleSchema, config_lts_canonical,
                                copy_gadget, emit_gadget, emit_rtma, extract_effective_ltsa, fresh_gadget,
                                gadget_machine, label_orbits, parse_rtma, step_canonical,
                                step_inf, validate_rtma)

from oracles import random_rtma, reachable, successor_classes

A = Atom
x, y = Var("x"), Var("y")
UP, S1, S2, S3 = (Const(n) for n in ("up", "s1", "s2", "s3"))
PAIRS = OrbitSet(frozenset(), (OrbitDescriptor((x, y)),))


def one_shot() -> RtmA:
    return RtmA(frozenset(), (RuleSchema(UP, BLANK, x, x, "R", S1),
                              RuleSchema(S1, BLANK, TAU, BLANK, "L", S2),
                              RuleSchema(S2, x, x, BLANK, "R", S3)), UP)


def test_validate_examples():
    for kind in ("copy", "fresh", "produce_label"):
        m = RtmA(frozenset(), tuple(emit_gadget(kind, PAIRS)), COPY)
        assert validate_rtma(m).ok, kind
    bad = RtmA(frozenset(), (RuleSchema(UP, BLANK, A(7), BLANK, "R", UP),), UP)
    v = validate_rtma(bad)
    assert not v.ok and "#7" in v.problems[0]
    wide = "(" + ",".join(f"v{i}" for i in range(17)) + ")"
    with pytest.raises(RtmaFormatError):
        parse_rtma(f"initial: 'up\nschema: 'up {wide} 'tau '_ R 'up\n")


def test_step_canonical_examples():
    m = RtmA(frozenset(), tuple(fresh_gadget()), FRESH)
    c = Configuration(FRESH, TapeInstance((A(0), A(1), BLANK), 2))
    targets = {c2.state for _, c2 in step_canonical(m, c)}
    assert targets == {("check", A(0)), ("check", A(1)), ("check", A(2))}
    m = RtmA(frozenset(), tuple(copy_gadget()), COPY)
    c = Configuration(COPY, TapeInstance((A(5), A(6)), 0))
    assert step_canonical(m, c) == {(TAU, Configuration((COPY, A(5)), TapeInstance((A(5), A(6)), 1)))}
    assert step_canonical(m, Configuration(UP)) == set()


def test_config_lts_canonical_examples():
    g = config_lts_canonical(one_shot())
    labels = [a for _, a, _ in sorted(g.transitions)]
    assert g.num_states == 4 and labels == ["#0", "tau", "#0"]
    assert config_lts_canonical(one_shot(), 0).num_states == 1


def test_copy_gadget_replay():
    assert copy_replay() == ["((#0,#1,#0,'_),'h3,'finish)"]


def test_fresh_gadget_corrected_has_one_terminal_class():
    assert fresh_replay("corrected") == ["((#0,#1,#2),'h0,'finish)"]


def test_fresh_gadget_literal_rules_lose_the_original_tape():
    finished = [t for t in fresh_replay("literal") if t.endswith("'finish)")]
    assert finished == ["((#0,#1,#2),'h0,'finish)", "((#0,#2,#1),'h0,'finish)"]


def test_produce_label_off_diagonal():
    (e, n), = [(e, n) for rep, e, n in label_orbits(PAIRS) if rep == (A(0), A(1))]
    m = gadget_machine("produce_label", [e, A(3), A(4)], 0, labels=PAIRS, support=[A(3), A(4)])
    g = config_lts_canonical(m)
    visible = [a for _, a, _ in g.transitions if a != "tau"]
    assert visible == ["(#3,#4)"]


def test_produce_label_one_transition_per_orbit_and_tuple():
    labels = OrbitSet(frozenset({A(9)}), (OrbitDescriptor((x, y, A(9))), OrbitDescriptor(Const("go"))))
    for rep, e, n in label_orbits(labels):
        atoms = [A(i) for i in range(n)] if n else [()]
        g = produce_label_replay(labels, [e] + atoms)
        visible = [a for _, a, _ in g.transitions if a != "tau"]
        assert len(visible) == 1
        assert orbit_eq(str_to_label(visible[0]), rep, labels.support) is not None


def test_extract_matches_config_graph_on_gadgets():
    m = gadget_machine("fresh", [A(0), A(1), BLANK], 2, support=[A(0), A(1)], avoid=())
    e = extract_effective_ltsa(m)
    g1, g2 = bounded_reach(e, 40), config_lts_canonical(m, 40)
    assert (g1.num_states, len(g1.transitions)) == (g2.num_states, len(g2.transitions))
    empty = RtmA(frozenset(), (), UP)
    assert bounded_reach(extract_effective_ltsa(empty), 5).num_states == 1
    copy = extract_effective_ltsa(gadget_machine("copy", [A(1), A(2)], 0))
    assert {a for _, a, _ in bounded_reach(copy, 10).transitions} == {"tau"}


def test_step_inf_budget():
    def rules(state, read):
        i = 0
        while True:
            yield (Const("a"), BLANK, "R", Const(f"n{i}"))
            i += 1
    inf = RtmInf(rules, UP, finite=False)
    r = step_inf(inf, inf.initial_configuration(), 0)
    assert r.successors == frozenset() and r.truncated
    r = step_inf(inf, inf.initial_configuration(), 3)
    assert len(r.successors) == 3 and r.truncated
    fin = RtmInf(lambda s, d: [(Const("a"), BLANK, "R", UP)], UP)
    r = step_inf(fin, fin.initial_configuration(), 5)
    assert len(r.successors) == 1 and not r.truncated


def test_rtma_text_round_trip():
    m = gadget_machine("fresh", [A(0), BLANK], 1, support=[A(0)])
    text = emit_rtma(m)
    assert "tape: (#0,'_) 1" in text
    m2 = parse_rtma(text)
    assert m2 == m and emit_rtma(m2) == text
    with pytest.raises(RtmaFormatError, match="line 2"):
        parse_rtma("initial: 'up\nschema: 'up '_ 'tau '_ Q 'up\n")


# ---------------------------------------------------------------------------
# properties


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_step_equivariance(seed):
    rng = random.Random(seed)
    m = random_rtma(rng)
    for c in reachable(m, 4)[:10]:
        free = [A(i) for i in range(6) if A(i) not in m.support]
        a, b = rng.sample(free, 2)
        p = Permutation.transposition(a, b)
        pc = Configuration.of_term(apply(p, c.term()))
        mine = {canonical_form(apply(p, (act, c2.term())), m.support | support_of(pc.term()))
                for act, c2 in step_canonical(m, c)}
        assert mine == successor_classes(m, pc)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_canonical_stepping_is_faithful(seed):
    """Concrete choices for right-only variables land in some canonical class."""
    rng = random.Random(seed)
    m = random_rtma(rng)
    from rtmbench.orbitsets import match, substitute, violated_literal
    for c in reachable(m, 3)[:8]:
        here = m.support | support_of(c.term())
        classes = {canonical_form((a, c2.term()), here) for a, c2 in step_canonical(m, c)}
        for r in m.schemas_for(c.state):
            val = match(r.source, c.state)
            val = None if val is None else match(r.read, c.tape.symbol, val)
            if val is None:
                continue
            for _ in range(5):
                ext = dict(val)
                for v in r.right_only_variables():
                    ext[v] = A(rng.randrange(50))
                if violated_literal(r.constraint, ext) is not None:
                    continue
                tape = c.tape.write_and_move(substitute(r.write, ext), r.move)
                c2 = Configuration(substitute(r.target, ext), tape)
                assert canonical_form((substitute(r.action, ext), c2.term()), here) in classes
