"""Stable graphs and the perturbative evaluation of Gaussian integrals.

A stable graph is a multigraph with loops whose vertices carry genera and
leg counts, subject to 2 g(v) + n(v) >= 3 at every vertex.  Connected
classes of contribution weight 2 g(G) + #legs <= N are enumerated by vertex
profile (multisets of (genus, edge-valence, legs)) followed by all loop and
multiplicity assignments, deduplicated by a canonical relabelling.

The Feynman amplitude of a class decorates each vertex of genus i with j
edge slots and k legs by the matching hbar^i component of the integrand,
sums over slot arrangements, and contracts edge slots with the inverse of
the Lagrangian quadratic form.  Koszul signs are inherited from the same
pairing convention as the contraction engine of the integration module, so
the graph sums reproduce the integrals exactly:

    int e^{f/hbar} (Gaussian)      = sum over all stable graphs of
                                     hbar^{-chi(G)} F(G)/|Aut G|,
    hbar log int e^{f/hbar} (...)  = the same sum over connected graphs
                                     with hbar^{g(G)}.

The disconnected sum is evaluated through the exponential of the connected
one (their equality with the integrals is the package's flagship check).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .integrate import IntegrationProblem
from .series import FormalSeries
from .superspace import ODD


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class StableGraph:
    genus: tuple[int, ...]
    legs: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]  # sorted pairs (u <= v), sorted list

    @property
    def n_vertices(self) -> int:
        return len(self.genus)

    def degree(self, v: int) -> int:
        return sum((u == v) + (w == v) for u, w in self.edges)

    def valence(self, v: int) -> int:
        return self.degree(v) + self.legs[v]

    def loops_at(self, v: int) -> int:
        return sum(1 for u, w in self.edges if u == v and w == v)

    def multiplicity(self, u: int, v: int) -> int:
        a, b = min(u, v), max(u, v)
        return sum(1 for e in self.edges if e == (a, b))


def stable_graph(genus, legs, edges) -> StableGraph:
    genus = tuple(int(g) for g in genus)
    legs = tuple(int(k) for k in legs)
    if len(genus) != len(legs):
        raise GraphError("genus and leg lists must have equal length")
    n = len(genus)
    norm = []
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u},{v}) references a missing vertex")
        norm.append((min(u, v), max(u, v)))
    g = StableGraph(genus, legs, tuple(sorted(norm)))
    for v in range(n):
        if any(x < 0 for x in (g.genus[v], g.legs[v])):
            raise GraphError("negative decorations")
        if 2 * g.genus[v] + g.valence(v) < 3:
            raise GraphError(f"vertex {v} violates stability: 2g+n >= 3")
    return g


def genus_and_euler(g: StableGraph) -> tuple[int, int]:
    """Total genus (first Betti number plus vertex genera) and chi = b0 - g."""
    n = g.n_vertices
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    components = len({find(v) for v in range(n)})
    b1 = len(g.edges) - n + components
    total_genus = b1 + sum(g.genus)
    return total_genus, components - total_genus


def is_connected(g: StableGraph) -> bool:
    if g.n_vertices <= 1:
        return True
    _, chi = genus_and_euler(g)
    n = g.n_vertices
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in g.edges:
        parent[find(u)] = find(v)
    return len({find(v) for v in range(n)}) == 1


def _certificate(g: StableGraph, perm) -> tuple:
    inv = [0] * len(perm)
    for new, old in enumerate(perm):
        inv[old] = new
    genus = tuple(g.genus[perm[i]] for i in range(len(perm)))
    legs = tuple(g.legs[perm[i]] for i in range(len(perm)))
    edges = tuple(sorted((min(inv[u], inv[v]), max(inv[u], inv[v])) for u, v in g.edges))
    return (genus, legs, edges)


def _refine(g: StableGraph, colors: list[int]) -> list[int]:
    """Stable refinement of integer vertex colors by neighbour multisets."""
    n = g.n_vertices
    while True:
        signature = []
        for v in range(n):
            neigh = []
            for u, w in g.edges:
                if u == v and w != v:
                    neigh.append(colors[w])
                elif w == v and u != v:
                    neigh.append(colors[u])
            signature.append((colors[v], tuple(sorted(neigh))))
        ranking = {sig: rank for rank, sig in enumerate(sorted(set(signature)))}
        new = [ranking[signature[v]] for v in range(n)]
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def _canonical_data(g: StableGraph) -> tuple[tuple, int]:
    """Minimal certificate and the vertex-level automorphism count.

    Individualisation-refinement: refine colors, split the first
    non-trivial class by distinguishing each member in turn, recurse.
    Discrete leaves are permutations; the minimal certificate is canonical
    and the number of leaves attaining it is the order of the vertex
    automorphism group.
    """
    n = g.n_vertices
    if n == 0:
        return ((), (), ()), 1
    base = [(g.genus[v], g.legs[v], g.degree(v), g.loops_at(v)) for v in range(n)]
    ranking = {c: i for i, c in enumerate(sorted(set(base)))}
    start = [ranking[c] for c in base]
    best: list = [None, 0]

    def descend(colors: list[int]):
        colors = _refine(g, colors)
        groups: dict[int, list[int]] = {}
        for v in range(n):
            groups.setdefault(colors[v], []).append(v)
        target = None
        for c in sorted(groups):
            if len(groups[c]) > 1:
                target = groups[c]
                break
        if target is None:
            perm = tuple(sorted(range(n), key=lambda v: colors[v]))
            cert = _certificate(g, perm)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, 1
            elif cert == best[0]:
                best[1] += 1
            return
        for v in target:
            nc = [2 * c + 1 for c in colors]
            nc[v] = 2 * colors[v]
            descend(nc)

    descend(start)
    return best[0], best[1]


def canonical_form(g: StableGraph) -> StableGraph:
    """Lexicographically minimal relabelling (isomorphism-class certificate)."""
    cert, _ = _canonical_data(g)
    return StableGraph(*cert)


def aut_order(g: StableGraph) -> int:
    """Order of the automorphism group acting on vertices, half-edges, legs."""
    _, vertex_auts = _canonical_data(g)
    order = vertex_auts
    for v in range(g.n_vertices):
        order *= factorial(g.legs[v])
        loops = g.loops_at(v)
        order *= factorial(loops) * 2 ** loops
    seen = set()
    for u, v in g.edges:
        if u != v and (u, v) not in seen:
            seen.add((u, v))
            order *= factorial(g.multiplicity(u, v))
    return order


# -- enumeration ---------------------------------------------------------


def _vertex_types(max_excess: int, allowed=None):
    """Types (genus, edge-valence, legs) with 1 <= 2g+j+k-2 <= max_excess."""
    types = []
    for g in range(max_excess // 2 + 2):
        for j in range(max_excess + 3):
            for k in range(max_excess + 3):
                excess = 2 * g + j + k - 2
                if 2 * g + j + k >= 3 and 1 <= excess <= max_excess:
                    if allowed is None or (g, j, k) in allowed:
                        types.append((g, j, k))
    return types


def _profiles(max_excess: int, allowed=None):
    """Multisets of vertex types with total excess <= max_excess, sum j even."""
    types = _vertex_types(max_excess, allowed)
    out = []

    def rec(start: int, budget: int, acc: list):
        if acc:
            if sum(t[1] for t in acc) % 2 == 0:
                out.append(tuple(acc))
        for idx in range(start, len(types)):
            t = types[idx]
            excess = 2 * t[0] + t[1] + t[2] - 2
            if excess <= budget:
                acc.append(t)
                rec(idx, budget - excess, acc)
                acc.pop()

    rec(0, max_excess, [])
    return out


def _edge_assignments(degrees: list[int], types=None):
    """All (loops, multiplicities) with sum at v = degrees[v]; yields edge lists.

    When vertex types are given, untouched vertices of equal type are
    interchangeable, so a positive multiplicity may only go to the first
    untouched vertex of its type; every isomorphism class keeps at least
    one representative and the labelled explosion is tamed.
    """
    n = len(degrees)
    if types is None:
        types = [None] * n

    def closed_component(v: int, edges: list) -> bool:
        """A component wholly inside the exhausted vertices 0..v-1 that does
        not already span everything can never reconnect."""
        if v == 0 or v == n:
            return False
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in edges:
            parent[find(a)] = find(b)
        comp_max: dict = {}
        for x in range(n):
            r = find(x)
            comp_max[r] = max(comp_max.get(r, -1), x)
        if len(comp_max) == 1:
            return False
        return any(mx < v for mx in comp_max.values())

    def rec(v: int, remaining: list[int], edges: list):
        if v == n:
            if all(r == 0 for r in remaining):
                yield tuple(edges)
            return
        if closed_component(v, edges):
            return

        def fresh(t: int) -> bool:
            return remaining[t] == degrees[t]

        def dist(target: int, rem_v: int, acc: list):
            if target == n:
                if rem_v == 0:
                    yield from rec(v + 1, remaining, acc)
                return
            max_m = min(rem_v, remaining[target])
            blocked = fresh(target) and any(
                fresh(t2) and types[t2] == types[target] for t2 in range(v + 1, target)
            )
            for m in range(max_m + 1):
                if m > 0 and blocked:
                    break
                remaining[target] -= m
                yield from dist(target + 1, rem_v - m, acc + [(v, target)] * m)
                remaining[target] += m

        for loops in range(remaining[v] // 2 + 1):
            rem = remaining[v] - 2 * loops
            saved = remaining[v]
            remaining[v] = 0
            yield from dist(v + 1, rem, edges + [(v, v)] * loops)
            remaining[v] = saved

    yield from rec(0, list(degrees), [])


def enumerate_connected(max_weight: int, allowed_types=None):
    """One representative per isomorphism class of connected stable graphs
    with 2 g(G) + #legs <= max_weight, with automorphism orders.

    The per-vertex excess 2g(v)+n(v)-2 >= 1 sums to 2g(G)+#legs-2, so the
    vertex count is bounded by max_weight - 2 and enumeration terminates.
    allowed_types optionally restricts vertex decorations to a given set of
    (genus, edge-valence, legs) triples (classes whose amplitude would
    vanish anyway are then skipped).
    """
    if max_weight < 3:
        return []
    key = (max_weight, None if allowed_types is None else frozenset(allowed_types))
    if key in _ENUM_CACHE:
        return _ENUM_CACHE[key]
    seen: dict = {}
    for profile in _profiles(max_weight - 2, allowed_types):
        genus = [t[0] for t in profile]
        degrees = [t[1] for t in profile]
        legs = [t[2] for t in profile]
        for edges in _edge_assignments(degrees, list(profile)):
            try:
                g = stable_graph(genus, legs, edges)
            except GraphError:
                continue
            if not is_connected(g):
                continue
            cg = canonical_form(g)
            if cg not in seen:
                seen[cg] = aut_order(cg)
    items = sorted(seen.items(), key=lambda kv: (kv[0].n_vertices, kv[0].genus, kv[0].legs, kv[0].edges))
    _ENUM_CACHE[key] = items
    return items


_ENUM_CACHE: dict = {}


# -- amplitudes ----------------------------------------------------------


def _distinct_permutations(items: tuple):
    """Distinct permutations of a multiset, lexicographic."""
    pool = sorted(items)
    n = len(pool)
    if n == 0:
        yield ()
        return

    def rec(remaining: list, acc: list):
        if not remaining:
            yield tuple(acc)
            return
        prev = object()
        for idx in range(len(remaining)):
            if remaining[idx] == prev:
                continue
            prev = remaining[idx]
            yield from rec(remaining[:idx] + remaining[idx + 1:], acc + [remaining[idx]])

    yield from rec(pool, [])


def _reorder_sign(parities: list[int], order: list[int]) -> int:
    """Koszul sign of the permutation placing source factor order[i] at i."""
    inversions = 0
    m = len(order)
    for i in range(m):
        if parities[order[i]] != ODD:
            continue
        for j in range(i + 1, m):
            if parities[order[j]] == ODD and order[i] > order[j]:
                inversions += 1
    return -1 if inversions % 2 else 1


def _match_arrangement(source: list[int], target: list[int]) -> list[int]:
    """Positions in source realizing target (stable on equal values)."""
    used = [False] * len(source)
    order = []
    for t in target:
        for i, s in enumerate(source):
            if not used[i] and s == t:
                used[i] = True
                order.append(i)
                break
        else:  # pragma: no cover
            raise GraphError("arrangement does not match the multiset")
    return order


def feynman_amplitude(g: StableGraph, f: FormalSeries, prob: IntegrationProblem) -> FormalSeries:
    """Contract vertex decorations of f along the edges of g.

    Decorations of a vertex with genus i, j edge slots, k legs are the
    terms of f with hbar exponent i, Lagrangian degree j and homology
    degree k (terms touching the d-image block are outside the integration
    domain and never decorate).  The result is a polynomial in homology
    duals of degree #legs, free of hbar.
    """
    if f.space != prob.ad_space:
        raise GraphError("amplitude integrand must live over the adapted space")
    cutoff = f.cutoff
    h = prob.h_count
    space = prob.ad_space
    hs = prob.h_space
    nverts = g.n_vertices

    candidates = []
    for v in range(nverts):
        j, k = g.degree(v), g.legs[v]
        cand = []
        for (hb, mono), c in f.terms.items():
            if hb != g.genus[v]:
                continue
            if any(mono[i] for i in prob.d_indices):
                continue
            ldeg = sum(mono[i] for i in prob.l_indices)
            hdeg = sum(mono[i] for i in range(h))
            if ldeg == j and hdeg == k:
                cand.append((c, mono))
        if not cand:
            return FormalSeries.zero(hs, cutoff)
        candidates.append(cand)

    # fixed slot pairing from the edges: per vertex a queue of slot ids
    slot_base = []
    pos = 0
    for v in range(nverts):
        slot_base.append(pos)
        pos += g.degree(v) + g.legs[v]
    next_slot = [slot_base[v] for v in range(nverts)]
    pairing = []
    for u, v in g.edges:
        a = next_slot[u]
        next_slot[u] += 1
        b = next_slot[v]
        next_slot[v] += 1
        pairing.append((a, b) if a < b else (b, a))

    out = FormalSeries.zero(hs, cutoff)
    for choice in itertools.product(*candidates):
        # per-vertex data: L factor multiset, H factor list, multiplicities
        vertex_data = []
        coeff = Fraction(1)
        for v, (c, mono) in enumerate(choice):
            lfactors = []
            mult = 1
            for i in prob.l_indices:
                e = mono[i]
                if e:
                    lfactors.extend([i] * e)
                    mult *= factorial(e)
            hfactors = [i for i in range(h) for _ in range(mono[i])]
            mult *= factorial(g.legs[v])
            coeff *= c * mult
            vertex_data.append((mono, tuple(lfactors), tuple(hfactors)))
        if coeff == 0:
            continue

        arrangement_pools = [
            list(_distinct_permutations(lf)) for (_, lf, _) in vertex_data
        ]
        for arrangement in itertools.product(*arrangement_pools):
            sign = 1
            seq: list[int] = []       # generator index per global slot
            for v, (mono, lf, hf) in enumerate(vertex_data):
                stored = sorted(list(lf) + list(hf))
                target = list(arrangement[v]) + list(hf)
                order = _match_arrangement(stored, target)
                sign *= _reorder_sign([space.parities[i] for i in stored], order)
                seq.extend(target)
            # contraction: pairs first (in position order), kept legs after
            value = Fraction(1)
            paired = set()
            for a, b in pairing:
                paired.add(a)
                paired.add(b)
            kept = [i for i in range(len(seq)) if i not in paired]
            target_positions = [p for ab in sorted(pairing) for p in ab] + kept
            sign *= _reorder_sign([space.parities[i] for i in seq], target_positions)
            dead = False
            for a, b in sorted(pairing):
                ga, gb = seq[a] - h, seq[b] - h
                sab = prob.sigma_inv[ga][gb]
                if sab == 0:
                    dead = True
                    break
                value *= sab
            if dead:
                continue
            # multiply the kept homology factors, in order, into a monomial
            term = FormalSeries.one(hs, cutoff)
            for posn in kept:
                term = term * FormalSeries.generator(hs, seq[posn], cutoff)
            out = out + term.scale(coeff * sign * value)
    return out


def _decoration_types(f: FormalSeries, prob: IntegrationProblem) -> set:
    """The (genus, edge-valence, legs) triples f can decorate."""
    h = prob.h_count
    types = set()
    for (hb, mono), _ in f.terms.items():
        if hb < 0 or any(mono[i] for i in prob.d_indices):
            continue
        ldeg = sum(mono[i] for i in prob.l_indices)
        hdeg = sum(mono[i] for i in range(h))
        types.add((hb, ldeg, hdeg))
    return types


def graph_sum_connected(f: FormalSeries, prob: IntegrationProblem, max_weight=None) -> FormalSeries:
    """Sum of hbar^{g(G)} F(G)/|Aut G| over connected stable graph classes."""
    if max_weight is None:
        max_weight = f.cutoff
    out = FormalSeries.zero(prob.h_space, f.cutoff)
    for g, aut in enumerate_connected(max_weight, _decoration_types(f, prob)):
        total_genus, _ = genus_and_euler(g)
        amp = feynman_amplitude(g, f, prob)
        if amp.is_zero():
            continue
        out = out + amp.hbar_shift(total_genus).scale(Fraction(1, aut))
    return out


def graph_sum_all(f: FormalSeries, prob: IntegrationProblem, max_weight=None) -> FormalSeries:
    """Sum over all (possibly disconnected) stable graphs, via exponentiation.

    Disconnected amplitudes multiply over components, Euler characteristics
    add, and automorphisms contribute component permutations, so the full
    sum is exp of (1/hbar times) the connected one.  It may carry negative
    hbar powers.

    A connected class of weight w contributes to the disconnected sum at
    weight w - 2 (one hbar less), so reproducing the integral at weight
    <= N requires connected data up to weight N + 2; the computation runs
    at the extended cutoff and re-truncates.
    """
    cutoff = f.cutoff
    if max_weight is None:
        max_weight = cutoff
    extended = FormalSeries.build(f.space, cutoff + 2, dict(f.terms))
    connected = graph_sum_connected(extended, prob, max_weight + 2)
    full = connected.hbar_shift(-1).exp()
    return FormalSeries.build(prob.h_space, cutoff, dict(full.terms))
