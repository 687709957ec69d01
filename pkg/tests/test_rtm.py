import random

import pytest

from rtmbench.atoms import BLANK, TAU, Const
from rtmbench.compilers import compile_lts_to_rtminf
from rtmbench.lts import FiniteLts, label_to_str
from rtmbench.rtm import (Configuration, Rtm, RtmFormatError, RtmRule, TapeInstance, config_lts, emit_rtm,
                          parse_rtm, step, validate)

UP, Q, ONE = Const("up"), Const("q"), Const("1")
a = Const("a")


def test_step_examples():
    m = Rtm((RtmRule(UP, BLANK, a, ONE, "R", Q),), UP)
    assert step(m, m.initial_configuration()) == {(a, Configuration(Q, TapeInstance((ONE, BLANK), 1)))}
    assert step(m, Configuration(Q)) == set()


def test_step_thm34_fragment():
    m = compile_lts_to_rtminf(FiniteLts(2, ((0, "a", 1),)))
    s, t = Const("s"), Const("t")
    q0, q1 = Const("q0"), Const("q1")
    c = Configuration(t, TapeInstance((q0, BLANK), 0))
    ((act, c2),) = step(m, c)
    assert act == a and c2 == Configuration(s, TapeInstance((q1, BLANK), 1))
    ((act, c3),) = step(m, c2)
    assert act == TAU and c3 == Configuration(t, TapeInstance((q1,), 0))


def test_config_lts_examples():
    loop = Rtm((RtmRule(UP, BLANK, a, BLANK, "R", UP),), UP)
    g = config_lts(loop)
    assert g.num_states == 1 and g.transitions == ((0, "a", 0),)
    g = config_lts(Rtm((), UP))
    assert g.num_states == 1 and not g.transitions
    g = config_lts(Rtm((RtmRule(UP, BLANK, a, ONE, "R", UP),), UP), depth=0)
    assert g.num_states == 1 and not g.transitions


def test_tape_normalization():
    t = TapeInstance((BLANK, BLANK, ONE, BLANK, BLANK), 2).normalized()
    assert t == TapeInstance((ONE,), 0)
    assert TapeInstance((BLANK, ONE), 0).normalized() == TapeInstance((BLANK, ONE), 0)
    with pytest.raises(ValueError):
        TapeInstance((ONE,), 3)


def test_rtm_text_examples():
    m = parse_rtm("initial: q0\nrule: q0 '_ a '1 R q1\n")
    assert m.states == {Const("q0"), Const("q1")}
    text = "# a comment\ninitial: q0\nrule: q0 '_ a '1 R q1\nrule: q1 '1 tau '_ L q0\n"
    assert emit_rtm(parse_rtm(text)) == text
    with pytest.raises(RtmFormatError, match="initial"):
        parse_rtm("initial: zz\nrule: q0 '_ a '1 R q1\n")
    with pytest.raises(RtmFormatError, match="move"):
        parse_rtm("initial: q0\nrule: q0 '_ a '1 X q1\n")
    with pytest.raises(RtmFormatError):
        parse_rtm("rule: q0 '_ a '1 R q1\n")


def test_validate_reports_missing_initial():
    v = validate(Rtm((RtmRule(UP, BLANK, a, ONE, "R", Q),), Const("zz")))
    assert not v.ok and "zz" in v.problems[0]


def random_rtm(rng: random.Random) -> Rtm:
    states = [Const(f"p{i}") for i in range(rng.randint(1, 3))]
    data = [BLANK, ONE, Const("2")]
    acts = [TAU, a, Const("b")]
    rules = {RtmRule(rng.choice(states), rng.choice(data), rng.choice(acts), rng.choice(data),
                     rng.choice("LR"), rng.choice(states)) for _ in range(rng.randint(0, 6))}
    return Rtm(tuple(sorted(rules, key=repr)), states[0])


def raw_step(m: Rtm, state, cells, head):
    """Stepping on an unnormalized tape that grows by one blank per move off the edge."""
    out = set()
    for r in m.rules:
        if r.source == state and r.read == cells[head]:
            c = list(cells)
            c[head] = r.write
            h = head + (1 if r.move == "R" else -1)
            if h < 0:
                c.insert(0, BLANK)
                h = 0
            elif h == len(c):
                c.append(BLANK)
            out.add((r.action, (r.target, tuple(c), h)))
    return out


def test_normalization_soundness_against_raw_stepping():
    rng = random.Random(7)
    for _ in range(100):
        m = random_rtm(rng)
        depth = 6
        g = config_lts(m, depth)
        norm_edges = {(g.name(s), lab, g.name(t)) for s, lab, t in g.transitions}
        image = set()
        layer = {(m.initial, (BLANK,), 0)}
        for _ in range(depth):
            nxt = set()
            for c in layer:
                src = str(Configuration(c[0], TapeInstance(c[1], c[2]).normalized()))
                for act, c2 in raw_step(m, *c):
                    image.add((src, label_to_str(act), str(Configuration(c2[0], TapeInstance(c2[1], c2[2]).normalized()))))
                    nxt.add(c2)
            layer = nxt
        assert image == norm_edges


def test_every_transition_has_a_trigger():
    rng = random.Random(3)
    for _ in range(50):
        m = random_rtm(rng)
        seen = {m.initial_configuration()}
        layer = [m.initial_configuration()]
        for _ in range(5):
            nxt = []
            for c in layer:
                for act, c2 in step(m, c):
                    assert any(r.source == c.state and r.read == c.tape.symbol and r.action == act
                               for r in m.rules)
                    if c2 not in seen:
                        seen.add(c2)
                        nxt.append(c2)
            layer = nxt
        assert step(m, m.initial_configuration()) == step(m, m.initial_configuration())
