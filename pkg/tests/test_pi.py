import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtmbench.atoms import TAU, Atom, Const, Permutation, apply, orbit_eq, support_of
from rtmbench.lts import bounded_reach
from rtmbench.pi import (BOUT, NIL, PiSyntaxError, alpha_canonical, alpha_equivalent, effective_ltsa_of,
                         free_names, in_, is_process, is_transition, kind, new_, out_, par_, parse_pi,
                         parse_pi_with_names, pretty, rename_free, rep_, sos_step, sos_step_canonical, sum_, tau_)

from oracles import random_process

A = Atom
IN, OUT, NEW = Const("in"), Const("out"), Const("new")


def names(text: str, *ns: str):
    r = parse_pi_with_names(text)
    back = {v: k for k, v in r.names.items()}
    return r.process, [back[n] for n in ns]


def test_parse_examples():
    p, (a, b, x) = names("a<b>.0 | a(x).0", "a", "b", "x")
    assert p == par_(out_(a, b), in_(a, x))
    p, (z, a) = names("new z.(z<a>.0)", "z", "a")
    assert p == new_(z, out_(z, a))
    p, (a, x, b) = names("!a(x).x<b>.0", "a", "x", "b")
    assert p == rep_(in_(a, x, out_(x, b)))


def test_parse_precedence_and_sugar():
    p, (a, b, c) = names("a<b> + tau | c(b)", "a", "b", "c")
    assert p == par_(sum_(out_(a, b), tau_(NIL)), in_(c, b))
    assert parse_pi("#4<#4>.0") == out_(A(4), A(4))
    q, (a,) = names("a<#0>.0", "a")
    assert a != A(0)


@pytest.mark.parametrize("bad, pos", [("a<b.0", 3), ("a.0", 1), ("(0", 2), ("0 $", 2), ("new tau.0", 4), ("", 0)])
def test_parse_errors_report_position(bad, pos):
    with pytest.raises(PiSyntaxError, match=f"position {pos}$"):
        parse_pi(bad)


@pytest.mark.parametrize("text, shown", [
    ("a<b>.0 | a(x).0", "a<b>.0 | a(x).0"),
    ("new z.(z<a>.0)", "new z.z<a>.0"),
    ("!a(x).x<b>.0", "!a(x).x<b>.0"),
    ("a<b>.0 +  (tau.0|c(d).0)", "a<b>.0 + (tau.0 | c(d).0)"),
    ("(a<b>.0 | c<d>.0) | 0", "a<b>.0 | c<d>.0 | 0"),
])
def test_pretty_round_trip(text, shown):
    r = parse_pi_with_names(text)
    assert pretty(r.process, r.names) == shown
    assert parse_pi(shown) == r.process
    assert parse_pi(pretty(r.process)) == r.process


def test_free_names_examples():
    p, (a, b) = names("a<b>.0", "a", "b")
    assert free_names(p) == {a, b}
    p, (a, b) = names("a(x).x<b>.0", "a", "b")
    assert free_names(p) == {a, b}
    p, (b,) = names("new a.(a<b>.0)", "b")
    assert free_names(p) == {b}


def test_alpha_canonical_examples():
    p1, (a, b) = names("a(x).x<b>.0", "a", "b")
    p2 = in_(a, A(9), out_(A(9), b))
    assert alpha_canonical(p1) == alpha_canonical(p2)
    assert alpha_canonical(parse_pi("new z.z<z>.0")) == alpha_canonical(parse_pi("new w.w<w>.0"))
    p = parse_pi("a<b>.0")
    assert alpha_canonical(p) == p


def test_sos_examples():
    assert sos_step_canonical(parse_pi("tau.0")) == [(TAU, NIL)]
    p, (a, b, c) = names("a<b>.0 | a(x).x<c>.0", "a", "b", "c")
    assert (TAU, par_(NIL, out_(b, c))) in sos_step_canonical(p)
    p, (a,) = names("new z.(a<z>.0)", "a")
    ((act, target),) = sos_step_canonical(p)
    assert act[:2] == (BOUT, a) and act[2] != a and target == NIL


def test_sos_side_conditions():
    # restriction blocks the channel, close needs the scope to be extruded
    p, (a,) = names("new a.(a<a>.0)", "a")
    assert sos_step_canonical(p) == []
    p = parse_pi("new z.(a<z>.0) | a(x).x<x>.0")
    ((z, body),) = [t[1:] for act, t in sos_step_canonical(p) if act == TAU]
    assert body == par_(NIL, out_(z, z))
    # PAR: an extruded name must not capture a free name of the other side
    p, (a, z) = names("new z.(a<z>.0) | z<z>.0", "a", "z")
    ((act, t),) = [s for s in sos_step_canonical(p) if s[0] != TAU and s[0][0] == BOUT]
    assert act[2] != z and z in free_names(t)


def test_effective_system_examples():
    p, (a,) = names("a(x).0", "a")
    g = bounded_reach(effective_ltsa_of(p), 3)
    labels = [a for _, a, _ in g.transitions]
    assert len(labels) == 2
    steps = [act for act, _ in sos_step_canonical(p)]
    assert all(s[1] == a for s in steps)
    fresh_in = [s for s in steps if s[2] != a]
    assert len(fresh_in) == 1
    # concrete inputs of any name outside {a} are orbit-equal to the fresh branch
    for z in range(10):
        if A(z) != a:
            assert orbit_eq((IN, a, A(z)), fresh_in[0], {a}) is not None
    g = bounded_reach(effective_ltsa_of(parse_pi("0")), 5)
    assert g.num_states == 1 and not g.transitions


# ---------------------------------------------------------------------------
# random terms

def rebind(p, rng: random.Random):
    """Rename every binder to an atom not used anywhere else."""
    taken = {int(a) for a in support_of(p)}
    pool = iter(rng.sample([n for n in range(100, 200) if n not in taken], 40))

    def go(q):
        if kind(q) == IN:
            z = A(next(pool))
            return in_(q[1], z, rename_free(go(q[3]), {q[2]: z}))
        if kind(q) == NEW:
            z = A(next(pool))
            return new_(z, rename_free(go(q[2]), {q[1]: z}))
        if kind(q) == NIL:
            return q
        return (q[0],) + tuple(go(r) if is_process(r) else r for r in q[1:])
    return go(p)


def seeds(n: int):
    return settings(max_examples=n, deadline=None)(given(st.integers(0, 10**6)))


@seeds(150)
def test_pretty_parse_round_trip(seed):
    p = random_process(random.Random(seed))
    assert parse_pi(pretty(p)) == p


@seeds(150)
def test_alpha_canonical_idempotent_and_complete(seed):
    rng = random.Random(seed)
    p = random_process(rng)
    c = alpha_canonical(p)
    assert alpha_canonical(c) == c
    assert alpha_equivalent(p, c) and free_names(c) == free_names(p)
    q = rebind(p, rng)
    assert alpha_canonical(q) == c
    assert alpha_equivalent(p, q)


@seeds(150)
def test_free_names_never_grow(seed):
    p = random_process(random.Random(seed))
    layer, fn0 = [p], free_names(p)
    for _ in range(3):
        nxt = []
        for q in layer[:20]:
            for act, t in sos_step_canonical(q, fn0):
                carried = support_of(act) if act != TAU else frozenset()
                assert free_names(t) <= free_names(q) | carried
                if act == TAU or act[0] == OUT:
                    assert free_names(t) <= free_names(q)
                nxt.append(t)
        layer = nxt


@seeds(150)
def test_sos_equivariance(seed):
    rng = random.Random(seed)
    p = random_process(rng)
    pi = Permutation.transposition(A(rng.randrange(6)), A(rng.randrange(6, 12)))
    here = sos_step_canonical(p)
    there = sos_step_canonical(apply(pi, p))
    assert len(here) == len(there)
    for act, t in here:
        assert is_transition(apply(pi, p), apply(pi, act), apply(pi, t))
    # a transposition fixing fn(p) maps p to itself, so it maps transitions to transitions
    k = free_names(p)
    fixing = Permutation.transposition(*rng.sample([a for a in map(A, range(12)) if a not in k], 2))
    assert alpha_equivalent(apply(fixing, p), p)
    for act, t in here:
        assert is_transition(p, apply(fixing, act), apply(fixing, t))


@seeds(150)
def test_input_collapse_is_faithful(seed):
    rng = random.Random(seed)
    p = random_process(rng)
    k = free_names(p)
    canon = sos_step_canonical(p)
    z = A(rng.randrange(12))
    for act, t in sos_step(p, [z]):
        if act == TAU or act[0] != IN or act[2] != z:
            continue
        ok = False
        for act2, t2 in canon:
            pi = orbit_eq(act, act2, k)
            if pi is not None and alpha_equivalent(apply(pi, t), t2):
                ok = True
                break
        assert ok, (act, t)
