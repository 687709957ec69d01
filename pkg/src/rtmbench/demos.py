"""Worked examples: a system over an infinite alphabet, two families of sets
that have no finite support, and replays of the machine gadgets.

Each ``*_demo`` function returns the transcript the CLI prints, so golden
tests can compare it byte for byte.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

from .atoms import BLANK, Atom, Const, Permutation, Term, Var, apply, format_term
from .lts import FiniteLts, SymbolicLtsA, bounded_reach, format_ltsa
from .orbitsets import EqConstraint, OrbitDescriptor, OrbitSet, support_violation
from .rtm import Configuration
from .rtm_atoms import FINISH, FIRED, RtmA, config_lts_canonical, gadget_machine

UP, DOWN, S = Const("up"), Const("down"), Const("s")


# ---------------------------------------------------------------------------
# a system that reads one arbitrary atom and echoes it


def infinite_alphabet_ltsa() -> SymbolicLtsA:
    """``up --x--> (s,x) --x--> down`` for every atom ``x``, empty support."""
    x = Var("x")
    states = OrbitSet(frozenset(), (OrbitDescriptor(UP), OrbitDescriptor((S, x)), OrbitDescriptor(DOWN)))
    trans = OrbitSet(frozenset(), (OrbitDescriptor((UP, x, (S, x))), OrbitDescriptor(((S, x), x, DOWN))))
    return SymbolicLtsA(frozenset(), states, trans, UP)


def infinite_alphabet_demo() -> str:
    l = infinite_alphabet_ltsa()
    g = bounded_reach(l, 2)
    lines = [
        "# demo: infinite-alphabet",
        "# From 'up' the system can read any atom x and must later echo that same x.",
        "# A classical machine has finitely many (state, symbol) rule triggers, so",
        "# from its start it offers finitely many visible labels before any tape",
        "# symbol can influence the choice; infinitely many distinct first labels",
        "# cannot be matched.  This is an argument, printed here, not a proof.",
        "# With atoms the whole system is two transition orbits over the empty",
        "# support, which the machine compiler accepts directly.",
        "#",
        "# orbit quotient at depth 2:",
    ]
    for s, a, t in sorted(g.transitions):
        lines.append(f"#   {g.name(s)} --{a}--> {g.name(t)}")
    lines.append("#")
    lines.append("# the system in .ltsa form (save it and run 'compile rtma FILE --verify --depth 30'):")
    return "\n".join(lines) + "\n" + format_ltsa(l)


# ---------------------------------------------------------------------------
# sets without finite support; natural numbers are modelled as atoms #n


def even_family(count: int) -> List[Term]:
    """``(up, 2n, down)`` for ``n < count``."""
    return [(UP, Atom(2 * n), DOWN) for n in range(count)]


def is_even_member(t: Term) -> bool:
    return type(t) is tuple and len(t) == 3 and t[0] == UP and t[2] == DOWN and type(t[1]) is Atom \
        and int(t[1]) % 2 == 0


def odd_chain_family(count: int) -> List[Term]:
    """``((s,n), n, (s,n+2))`` for the first ``count`` odd ``n``."""
    return [((S, Atom(n)), Atom(n), (S, Atom(n + 2))) for n in range(1, 2 * count, 2)]


def is_odd_chain_member(t: Term) -> bool:
    try:
        (s1, n1), a, (s2, n2) = t
    except (TypeError, ValueError):
        return False
    if s1 != S or s2 != S or not all(type(v) is Atom for v in (n1, a, n2)):
        return False
    return n1 == a and int(a) % 2 == 1 and int(n2) == int(a) + 2


def certificates_for_all_supports(sample: Sequence[Term], membership: Callable[[Term], bool],
                                  max_size: int = 5, budget: int = 8
                                  ) -> List[Tuple[frozenset, Optional[Tuple[Permutation, Term]]]]:
    """Run the violation search against every subset of the sample's atoms
    with at most ``max_size`` elements."""
    pool = sorted({a for t in sample for a in _atoms(t)}, key=int)
    out = []
    for size in range(max_size + 1):
        for k in combinations(pool, size):
            out.append((frozenset(k), support_violation(sample, membership, k, budget)))
    return out


def _atoms(t: Term) -> Iterable[Atom]:
    if type(t) is Atom:
        yield t
    elif type(t) is tuple:
        for c in t:
            yield from _atoms(c)


def _perm_text(p: Permutation) -> str:
    a, b = sorted(p.mapping)[0], p.mapping[sorted(p.mapping)[0]]
    return f"({format_term(a)} {format_term(b)})"


def _family_demo(title: str, explanation: List[str], sample: List[Term],
                 membership: Callable[[Term], bool], verdict: str) -> str:
    lines = [f"demo: {title}"] + explanation + ["", "sample:"]
    lines += ["  " + format_term(t) for t in sample]
    first = support_violation(sample, membership, (), 8)
    lines += ["", "candidate support {}:"]
    if first is None:
        lines.append("  no violation found")
    else:
        p, t = first
        lines += [f"  transposition {_perm_text(p)} maps {format_term(t)}",
                  f"  to {format_term(apply(p, t))}, which is not in the set"]
    results = certificates_for_all_supports(sample, membership)
    found = sum(1 for _, c in results if c is not None)
    lines += ["", f"candidate supports of size <= 5 drawn from the sample atoms: {len(results)}",
              f"supports refuted by a certificate: {found}"]
    worst = max(results, key=lambda r: (len(r[0]), sorted(map(int, r[0]))))
    k, c = worst
    if c is not None:
        ks = "{" + ", ".join(format_term(a) for a in sorted(k, key=int)) + "}"
        lines.append(f"  e.g. K = {ks}: transposition {_perm_text(c[0])} on {format_term(c[1])}")
    lines += ["", f"verdict: {verdict if found == len(results) else 'inconclusive'}",
              "(certificates refute each candidate support; they do not prove that no support exists)"]
    return "\n".join(lines) + "\n"


def mcrl2_counterexample_demo() -> str:
    return _family_demo(
        "mcrl2-counterexample",
        ["A process that starts by announcing an arbitrary even number and stops.",
         "Numbers are modelled as atoms #n; only equality of atoms is observable,",
         "so the set of transitions must be closed under swapping atoms outside a",
         "finite support.  Swapping an even atom with an odd one breaks membership."],
        even_family(8), is_even_member, "not nominally executable")


def odd_chain_demo() -> str:
    return _family_demo(
        "odd-chain",
        ["Transitions (s_n) --n--> (s_n+2) for odd n, with naturals modelled as atoms.",
         "Renaming any atom in a transition breaks the n / n+2 link, so no finite",
         "set of atoms supports the transition relation."],
        odd_chain_family(8), is_odd_chain_member, "not legal")


# ---------------------------------------------------------------------------
# gadget replays


def terminal_configurations(m: RtmA, depth: int = 200) -> List[str]:
    """Names of reachable configurations without outgoing steps."""
    g = config_lts_canonical(m, depth)
    busy = {s for s, _, _ in g.transitions}
    return [g.name(s) for s in g.states if s not in busy]


def copy_replay(tape: Sequence[Term] = (Atom(1), Atom(2)), head: int = 0) -> List[str]:
    return terminal_configurations(gadget_machine("copy", tape, head))


def fresh_replay(variant: str, tape: Sequence[Term] = (Atom(0), Atom(1), BLANK), head: int = 2) -> List[str]:
    """Terminal classes of the fresh gadget with the tape atoms held fixed
    (in the support) but still allowed as guesses."""
    atoms = [c for c in tape if type(c) is Atom]
    return terminal_configurations(gadget_machine("fresh", tape, head, variant=variant, support=atoms, avoid=()))


def produce_label_replay(labels: OrbitSet, tape: Sequence[Term], head: int = 0) -> FiniteLts:
    return config_lts_canonical(gadget_machine("produce_label", tape, head, labels=labels))


def gadgets_demo() -> str:
    from .rtm_atoms import label_orbits

    lines = ["demo: gadgets", "", "copy, tape #1 #2 with the head on #1:"]
    lines += ["  terminal: " + t for t in copy_replay()]
    for variant in ("corrected", "literal"):
        lines += ["", f"fresh ({variant}), tape #0 #1 _ with the head on the blank, tape atoms fixed:"]
        lines += ["  terminal: " + t for t in fresh_replay(variant)]
    x, y = Var("x"), Var("y")
    labels = OrbitSet(frozenset(), (OrbitDescriptor((x, y)),))
    lines += ["", "produce_label for pairs (x,y), one run per label orbit:"]
    for rep, e, n in label_orbits(labels):
        atoms = [Atom(i) for i in range(n)]
        g = produce_label_replay(labels, [e] + atoms)
        visible = [(g.name(s), a, g.name(t)) for s, a, t in g.transitions if a != "tau"]
        lines.append(f"  orbit {format_term(rep)}: {len(visible)} visible transition(s)")
        for s, a, t in visible:
            lines.append(f"    {a}")
    lines += ["", "The literal fresh variant overwrites a tape atom when its first guess",
              "clashes, so it ends in more than one class; the corrected variant keeps",
              "the original tape and ends in a single class."]
    return "\n".join(lines) + "\n"


DEMOS = {
    "infinite-alphabet": infinite_alphabet_demo,
    "mcrl2-counterexample": mcrl2_counterexample_demo,
    "odd-chain": odd_chain_demo,
    "gadgets": gadgets_demo,
}
