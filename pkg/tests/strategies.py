"""Hypothesis strategies shared by the property tests."""

from __future__ import annotations

from hypothesis import strategies as st

from rtmbench.atoms import BLANK, TAU, Atom, Const, Permutation

ATOM_POOL = 8

atoms = st.integers(0, ATOM_POOL - 1).map(Atom)
consts = st.sampled_from([TAU, BLANK, Const("up"), Const("s")])
terms = st.recursive(atoms | consts, lambda inner: st.lists(inner, min_size=0, max_size=4).map(tuple),
                     max_leaves=10)
atom_sets = st.frozensets(atoms, max_size=4)


@st.composite
def permutations(draw, pool: int = ATOM_POOL + 4):
    images = draw(st.permutations(list(range(pool))))
    return Permutation({Atom(i): Atom(j) for i, j in enumerate(images)})


@st.composite
def transpositions_fixing(draw, support):
    free = [Atom(i) for i in range(ATOM_POOL + 4) if Atom(i) not in support]
    a = draw(st.sampled_from(free))
    b = draw(st.sampled_from([x for x in free if x != a]))
    return Permutation.transposition(a, b)
