"""Branching bisimilarity and its divergence-preserving variant on finite LTSs.

The deciders use signature-based partition refinement on the disjoint union of
the two systems; :func:`check_relation` is an independent clause-by-clause
verifier for candidate relations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Set, Tuple

from .lts import TAU_LABEL, FiniteLts

Pair = Tuple[int, int]
DIVERGENCE = "<divergence>"


@dataclass(frozen=True)
class BisimVerdict:
    related: bool
    witness: Optional[FrozenSet[Pair]] = None
    # when not related: the initial pair and an action one side can do that the
    # other cannot match (DIVERGENCE for a τ-loop mismatch)
    distinguishing: Optional[Tuple[Pair, str]] = None

    def __bool__(self) -> bool:
        return self.related


def _tarjan(n: int, succ: List[List[int]]) -> List[int]:
    """SCC id per node; ids come out in reverse topological order (sinks first)."""
    index = [-1] * n
    low = [0] * n
    on = [False] * n
    comp = [-1] * n
    stack: List[int] = []
    counter = 0
    ncomp = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on[root] = True
        while work:
            v, i = work[-1]
            if i < len(succ[v]):
                work[-1] = (v, i + 1)
                w = succ[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on[w] = True
                    work.append((w, 0))
                elif on[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    while True:
                        w = stack.pop()
                        on[w] = False
                        comp[w] = ncomp
                        if w == v:
                            break
                    ncomp += 1
    return comp


def _refine(n: int, edges: List[Tuple[int, str, int]], divergence: bool) -> Tuple[List[int], List[Dict[int, frozenset]]]:
    """Stable partition of ``0..n-1``; also returns the per-round signatures so a
    caller can explain why two states were separated."""
    block = [0] * n
    history: List[Dict[int, frozenset]] = []
    out: List[List[Tuple[str, int]]] = [[] for _ in range(n)]
    for s, a, t in edges:
        out[s].append((a, t))
    nblocks = 1
    while True:
        inert: List[List[int]] = [[t for a, t in out[s] if a == TAU_LABEL and block[t] == block[s]] for s in range(n)]
        comp = _tarjan(n, inert)
        ncomp = max(comp) + 1 if n else 0
        members: List[List[int]] = [[] for _ in range(ncomp)]
        for s in range(n):
            members[comp[s]].append(s)
        csig: List[Set[Tuple[str, int]]] = [set() for _ in range(ncomp)]
        cdiv = [False] * ncomp
        for c in range(ncomp):  # sinks first, so successors are already done
            for s in members[c]:
                for a, t in out[s]:
                    if a == TAU_LABEL and block[t] == block[s]:
                        if comp[t] == c:
                            cdiv[c] = True
                        else:
                            csig[c] |= csig[comp[t]]
                            cdiv[c] = cdiv[c] or cdiv[comp[t]]
                    else:
                        csig[c].add((a, block[t]))
        sigs: Dict[int, frozenset] = {}
        for s in range(n):
            sig = set(csig[comp[s]])
            if divergence and cdiv[comp[s]]:
                sig.add((DIVERGENCE, block[s]))
            sigs[s] = frozenset(sig)
        history.append(sigs)
        keys: Dict[Tuple[int, frozenset], int] = {}
        new = [keys.setdefault((block[s], sigs[s]), len(keys)) for s in range(n)]
        if len(keys) == nblocks:
            return new, history
        block, nblocks = new, len(keys)


def _union(l1: FiniteLts, l2: FiniteLts) -> Tuple[int, List[Tuple[int, str, int]]]:
    off = l1.num_states
    edges = list(l1.transitions) + [(s + off, a, t + off) for s, a, t in l2.transitions]
    return off + l2.num_states, edges


def _decide(l1: FiniteLts, l2: FiniteLts, divergence: bool) -> BisimVerdict:
    n, edges = _union(l1, l2)
    off = l1.num_states
    i1, i2 = l1.initial, l2.initial + off
    block, history = _refine(n, edges, divergence)
    if block[i1] == block[i2]:
        rel = frozenset((s, t) for s in range(off) for t in range(l2.num_states) if block[s] == block[t + off])
        return BisimVerdict(True, rel)
    # the first round in which the initial states get different signatures is
    # the round that separates them
    for sigs in history:
        if sigs[i1] != sigs[i2]:
            diff = sorted(sigs[i1] ^ sigs[i2], key=lambda e: (e[0] == DIVERGENCE, e[0], e[1]))
            return BisimVerdict(False, None, ((l1.initial, l2.initial), diff[0][0]))
    raise AssertionError("initial states split without a signature difference")


def branching_bisim(l1: FiniteLts, l2: FiniteLts) -> BisimVerdict:
    return _decide(l1, l2, divergence=False)


def dp_branching_bisim(l1: FiniteLts, l2: FiniteLts) -> BisimVerdict:
    return _decide(l1, l2, divergence=True)


def minimize(l: FiniteLts, divergence: bool = False) -> FiniteLts:
    """Quotient of ``l`` by (divergence-preserving) branching bisimilarity,
    dropping inert τ-steps."""
    block, _ = _refine(l.num_states, list(l.transitions), divergence)
    ren: Dict[int, int] = {}
    for s in [l.initial] + list(range(l.num_states)):
        ren.setdefault(block[s], len(ren))
    edges: Dict[Tuple[int, str, int], None] = {}
    for s, a, t in l.transitions:
        bs, bt = ren[block[s]], ren[block[t]]
        if a == TAU_LABEL and bs == bt:
            if divergence and _on_inert_cycle(l, block, s):
                edges.setdefault((bs, a, bt))
            continue
        edges.setdefault((bs, a, bt))
    return FiniteLts(len(ren), tuple(edges), 0)


def _on_inert_cycle(l: FiniteLts, block: List[int], s: int) -> bool:
    adj = l.adjacency()
    seen, stack = set(), [t for a, t in adj[s] if a == TAU_LABEL and block[t] == block[s]]
    while stack:
        u = stack.pop()
        if u == s:
            return True
        if u in seen:
            continue
        seen.add(u)
        stack.extend(t for a, t in adj[u] if a == TAU_LABEL and block[t] == block[u])
    return False


# ---------------------------------------------------------------------------
# direct verification of a candidate relation


def _tau_closure(adj: List[List[Tuple[str, int]]], s: int, strict: bool) -> Set[int]:
    start = [t for a, t in adj[s] if a == TAU_LABEL]
    seen: Set[int] = set() if strict else {s}
    stack = list(start)
    while stack:
        u = stack.pop()
        if u in seen:
            continue
        seen.add(u)
        stack.extend(t for a, t in adj[u] if a == TAU_LABEL)
    return seen


def _transfer(adj_from, adj_to, rel: Set[Pair], s: int, t: int) -> bool:
    """Clause 1 for the pair (s, t) with ``rel`` oriented from ``adj_from`` to
    ``adj_to``."""
    reach = _tau_closure(adj_to, t, strict=False)
    mids = [u for u in reach if (s, u) in rel]
    for a, s2 in adj_from[s]:
        ok = False
        for u in mids:
            if a == TAU_LABEL and (s2, u) in rel:
                ok = True
                break
            if any(b == a and (s2, v) in rel for b, v in adj_to[u]):
                ok = True
                break
        if not ok:
            return False
    return True


def _diverges_within(adj, allowed: Set[int], s: int) -> bool:
    """Is there an infinite τ-path from ``s`` staying inside ``allowed``?"""
    if s not in allowed:
        return False
    n = len(adj)
    succ = [[t for a, t in adj[u] if a == TAU_LABEL and t in allowed] if u in allowed else [] for u in range(n)]
    comp = _tarjan(n, succ)
    size: Dict[int, int] = {}
    for u in range(n):
        size[comp[u]] = size.get(comp[u], 0) + 1
    cyclic = {u for u in allowed if size[comp[u]] > 1 or u in succ[u]}
    seen, stack = set(), [s]
    while stack:
        u = stack.pop()
        if u in cyclic:
            return True
        if u in seen:
            continue
        seen.add(u)
        stack.extend(succ[u])
    return False


def _divergence_ok(adj_from, adj_to, rel: Set[Pair], s: int, t: int) -> bool:
    related_to_t = {u for (u, v) in rel if v == t}
    later = _tau_closure(adj_to, t, strict=True)
    good = {u for u in related_to_t if any((u, v) in rel for v in later)}
    return not _diverges_within(adj_from, related_to_t - good, s)


def check_relation(rel: Iterable[Pair], l1: FiniteLts, l2: FiniteLts, divergence_mode: bool = False) -> bool:
    """True iff ``rel`` is a (divergence-preserving) branching bisimulation from
    ``l1`` to ``l2`` that relates the initial states."""
    r = set(rel)
    if (l1.initial, l2.initial) not in r:
        return False
    for s, t in r:
        if not (0 <= s < l1.num_states and 0 <= t < l2.num_states):
            return False
    a1, a2 = l1.adjacency(), l2.adjacency()
    inv = {(t, s) for s, t in r}
    for s, t in r:
        if not _transfer(a1, a2, r, s, t) or not _transfer(a2, a1, inv, t, s):
            return False
        if divergence_mode and not (_divergence_ok(a1, a2, r, s, t) and _divergence_ok(a2, a1, inv, t, s)):
            return False
    return True
