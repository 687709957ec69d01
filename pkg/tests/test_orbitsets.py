import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rtmbench.atoms import TAU, Atom, Const, Permutation, TermError, Var, apply, canonical_form, orbit_eq
from rtmbench.orbitsets import (TRUE, DecodeError, EqConstraint, InstantiationError, Literal, OrbitDescriptor,
                                OrbitSet, canonical_enumerate, decode, describe_orbit, encode,
                                encode_transition, instantiate, member, orbit_code, parse_descriptor,
                                format_descriptor, project_transition, sat, state_of_code, support_violation,
                                transition_parts)

A = Atom
x, y, z, w = Var("x"), Var("y"), Var("z"), Var("w")


def test_sat_examples():
    assert sat(EqConstraint.of((x, "!=", y)))
    assert not sat(EqConstraint.of((x, "=", y), (x, "!=", y)))
    assert not sat(EqConstraint.of((x, "=", A(1)), (x, "!=", A(1))))
    assert not sat(EqConstraint.of((x, "=", A(1)), (x, "=", A(2))))
    assert sat(TRUE)


def test_member_examples():
    diag = OrbitSet(frozenset(), (OrbitDescriptor((x, x)),))
    assert member((A(3), A(3)), diag)
    assert not member((A(3), A(4)), diag)
    assert member(TAU, OrbitSet(frozenset(), (OrbitDescriptor(TAU),)))


def test_instantiate_examples():
    d = OrbitDescriptor((x, y), EqConstraint.of((x, "!=", y)))
    assert instantiate(d, {x: A(1), y: A(2)}) == (A(1), A(2))
    with pytest.raises(InstantiationError, match="x!=y"):
        instantiate(d, {x: A(1), y: A(1)})
    with pytest.raises(InstantiationError, match="variable y"):
        instantiate(d, {x: A(1)})
    assert instantiate(OrbitDescriptor(x), {x: A(9)}) == A(9)


def test_descriptor_rejects_stray_constraint_variable():
    with pytest.raises(ValueError):
        OrbitDescriptor(x, EqConstraint.of((y, "!=", x)))


def test_canonical_enumerate_examples():
    assert canonical_enumerate(OrbitSet(frozenset(), (OrbitDescriptor((x, y)),))) == [(A(0), A(0)), (A(0), A(1))]
    assert canonical_enumerate(OrbitSet(frozenset(), (OrbitDescriptor(TAU),))) == [TAU]
    s = OrbitSet(frozenset({A(0)}), (OrbitDescriptor(x, EqConstraint.of((x, "!=", A(0)))),))
    assert canonical_enumerate(s) == [A(1)]


def test_encode_round_trip_and_injectivity():
    d1 = OrbitDescriptor((x, Const("up")), EqConstraint.of((x, "!=", A(0))))
    d2 = OrbitDescriptor((x, x))
    for ds in ([d1], [d2], [d1, d2], [d2, d1], []):
        assert decode(encode(ds)) == ds
        assert encode(decode(encode(ds))) == encode(ds)
    assert len({encode(ds) for ds in ([d1], [d2], [d1, d2], [d2, d1])}) == 4


def test_decode_rejects_non_codes():
    bad = 0
    while True:
        try:
            decode(bad)
            bad += 1
        except DecodeError:
            break
    with pytest.raises(DecodeError):
        decode(bad)
    with pytest.raises(DecodeError):
        decode(-1)


def test_transition_projection():
    code = encode_transition(Const("up"), x, (Const("s"), x))
    assert transition_parts(code)[:3] == (Const("up"), x, (Const("s"), x))
    assert project_transition(code, "label") == OrbitDescriptor(x)
    assert project_transition(code, "source") == OrbitDescriptor(Const("up"))
    assert project_transition(code, "target") == OrbitDescriptor((Const("s"), x))


def test_orbit_code_round_trip():
    t = (A(4), Const("s"), A(7), A(4))
    code, atoms = orbit_code(t, {A(7)})
    assert atoms == (A(4),)
    assert state_of_code(code, atoms) == t
    assert state_of_code(code, (A(1),)) == (A(1), Const("s"), A(7), A(1))


def test_descriptor_text_round_trip():
    d = OrbitDescriptor((x, (y, Const("tau"))), EqConstraint.of((x, "!=", y), (y, "!=", A(2))))
    text = format_descriptor(d)
    assert text == "orbit (x,(y,'tau)) where x!=y, y!=#2"
    assert parse_descriptor(text) == d
    with pytest.raises(TermError):
        parse_descriptor("orbit (x,y) when x!=y")


def test_support_violation_examples():
    up, down = Const("up"), Const("down")
    evens = [(up, A(2 * n), down) for n in range(1, 5)]
    is_even = lambda t: type(t[1]) is Atom and int(t[1]) % 2 == 0
    assert not is_even(apply(Permutation.transposition(A(2), A(3)), (up, A(2), down)))
    cert = support_violation(evens, is_even, (), 8)
    assert cert is not None
    p, t = cert
    assert t in evens and p.fixes(()) and not is_even(apply(p, t))
    odd = [((Const("s"), A(n)), A(n), (Const("s"), A(n + 2))) for n in (1, 3, 5)]
    odd_member = lambda t: t[0][1] == t[1] and int(t[1]) % 2 == 1 and int(t[2][1]) == int(t[1]) + 2
    assert support_violation(odd, odd_member, {A(1), A(3)}, 8) is not None
    diag = [(A(i), A(i)) for i in range(4)]
    for budget in (0, 4, 8):
        assert support_violation(diag, lambda t: t[0] == t[1], (), budget) is None


# ---------------------------------------------------------------------------
# brute-force oracles

CARRIER = [A(i) for i in range(6)]


def brute_sat(c: EqConstraint) -> bool:
    vs = c.variables()
    for vals in itertools.product(CARRIER, repeat=len(vs)):
        env = dict(zip(vs, vals))
        get = lambda o: env.get(o, o) if type(o) is Var else o
        if all((get(l.left) == get(l.right)) == (l.op == "=") for l in c.literals):
            return True
    return False


@st.composite
def constraints(draw):
    ops = st.sampled_from(["=", "!="])
    operands = st.sampled_from([x, y, z, w, A(0), A(1)])
    lits = draw(st.lists(st.tuples(operands, ops, operands), max_size=5))
    return EqConstraint.of(*lits)


@settings(max_examples=300)
@given(constraints())
def test_sat_agrees_with_brute_force(c):
    assert sat(c) == brute_sat(c)


def brute_orbits(s: OrbitSet, extra: int = 4):
    """Orbit representatives by instantiating every descriptor over a small
    carrier that has enough atoms outside the support."""
    carrier = sorted(set(s.support) | {A(i) for i in range(len(s.support) + extra + 2)}, key=int)
    reps = set()
    for d in s.descriptors:
        vs = d.variables()
        for vals in itertools.product(carrier, repeat=len(vs)):
            val = dict(zip(vs, vals))
            try:
                t = instantiate(d, val)
            except InstantiationError:
                continue
            reps.add(canonical_form(t, s.support))
    return reps


@st.composite
def orbit_sets(draw):
    k = draw(st.frozensets(st.sampled_from([A(0), A(1)]), max_size=2))
    descs = []
    for _ in range(draw(st.integers(1, 2))):
        pattern = draw(st.sampled_from([(x, y), (x, x), (x, y, z), (Const("up"), x), (x, (y, A(0))), (x, y, x)]))
        vs = list(dict.fromkeys(v for v in pattern if type(v) is Var)) + \
            [v for p in pattern if type(p) is tuple for v in p if type(v) is Var]
        lits = draw(st.lists(st.tuples(st.sampled_from(vs), st.sampled_from(["=", "!="]),
                                       st.sampled_from(vs + [A(0)])), max_size=2))
        if any(A(0) in (p if type(p) is tuple else (p,)) for p in pattern) or any(l[2] == A(0) for l in lits):
            k = k | {A(0)}
        descs.append(OrbitDescriptor(pattern, EqConstraint.of(*lits)))
    return OrbitSet(k, tuple(descs))


@settings(max_examples=150, deadline=None)
@given(orbit_sets())
def test_canonical_enumerate_matches_brute_force(s):
    got = canonical_enumerate(s)
    assert len(got) == len(set(got))
    assert set(got) == brute_orbits(s)
    for a, b in itertools.combinations(got, 2):
        assert orbit_eq(a, b, s.support) is None


@settings(max_examples=200, deadline=None)
@given(orbit_sets(), st.data())
def test_descriptor_sets_closed_under_fixing_transpositions(s, data):
    reps = sorted(brute_orbits(s, extra=2), key=repr)
    if not reps:
        return
    t = data.draw(st.sampled_from(reps))
    free = [A(i) for i in range(8) if A(i) not in s.support]
    a, b = data.draw(st.sampled_from(free)), data.draw(st.sampled_from(free))
    p = Permutation.transposition(a, b) if a != b else Permutation.identity()
    assert member(t, s) == member(apply(p, t), s)


@given(st.lists(st.integers(0, 5).map(A), min_size=0, max_size=5), st.frozensets(st.integers(0, 3).map(A)))
def test_describe_orbit_is_exactly_the_orbit(atoms, k):
    t = tuple(atoms)
    d, tup = describe_orbit(t, k)
    s = OrbitSet(frozenset(k), (d,))
    assert member(t, s)
    rng = random.Random(len(atoms))
    for _ in range(10):
        u = tuple(A(rng.randrange(8)) for _ in atoms)
        assert member(u, s) == (orbit_eq(t, u, k) is not None)
