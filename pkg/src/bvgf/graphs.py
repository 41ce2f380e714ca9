"""Feynman graphs with trivalent vertices, external legs and (for links) univalent vertices.

A graph is stored as a vertex count split into trivalent vertices ``0..n_tri-1``
and univalent vertices ``n_tri..``, a sorted tuple of internal edges ``(u, v)``
with ``u <= v`` (repeated for parallel edges, ``u == v`` for a tadpole) and the
number of external legs at every vertex.  Univalent vertices carry a mark
``(component, position)``.
"""
from __future__ import annotations

import functools
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

DEFAULT_MAX_TRIVALENT = 6


class GraphBoundError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    n_tri: int
    edges: tuple
    legs: tuple
    marks: tuple = ()
    aut_order: int = field(default=0, compare=False)
    loop_count: int = field(default=0, compare=False)

    @property
    def n_uni(self):
        return len(self.marks)

    @property
    def n_vertices(self):
        return self.n_tri + self.n_uni

    @property
    def n_external(self):
        return sum(self.legs)

    @property
    def link_mode(self):
        return bool(self.marks)

    def valence(self, v):
        k = self.legs[v]
        for a, b in self.edges:
            k += (a == v) + (b == v)
        return k

    def internal_degree(self, v):
        return self.valence(v) - self.legs[v]

    def has_tadpole(self):
        return any(a == b for a, b in self.edges)

    def components(self):
        parent = list(range(self.n_vertices))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for a, b in self.edges:
            parent[find(a)] = find(b)
        groups: dict = {}
        for v in range(self.n_vertices):
            groups.setdefault(find(v), []).append(v)
        return sorted(groups.values())

    def is_connected(self):
        return self.n_vertices > 0 and len(self.components()) == 1

    def bridges(self):
        """Indices into ``edges`` whose removal increases the number of components."""
        base = len(self.components())
        out = []
        for i in range(len(self.edges)):
            g = Graph(self.n_tri, self.edges[:i] + self.edges[i + 1:], self.legs, self.marks)
            if len(g.components()) > base:
                out.append(i)
        return out

    def encoding(self) -> str:
        """Canonical text form: ``T<n>|U<marks>|E<u-v,...>|L<legs>``."""
        marks = ",".join(f"{c}.{p}" for c, p in self.marks)
        edges = ",".join(f"{a}-{b}" for a, b in self.edges)
        legs = ",".join(str(k) for k in self.legs)
        return f"T{self.n_tri}|U{marks}|E{edges}|L{legs}"

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with vertex ``v`` renamed ``perm[v]`` (univalent stay univalent)."""
        n = self.n_vertices
        inv = [0] * n
        for v, p in enumerate(perm):
            inv[p] = v
        edges = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in self.edges))
        legs = tuple(self.legs[inv[p]] for p in range(n))
        marks = tuple(self.marks[inv[p] - self.n_tri] for p in range(self.n_tri, n))
        return Graph(self.n_tri, edges, legs, marks)


# ---------------------------------------------------------------------------
# canonical forms and automorphisms

def _key(g: Graph):
    return (g.edges, g.legs, g.marks)


def _vertex_invariant(g: Graph, v):
    nb = Counter()
    loops = 0
    for a, b in g.edges:
        if a == b == v:
            loops += 1
        elif a == v:
            nb[b] += 1
        elif b == v:
            nb[a] += 1
    kind = 0 if v < g.n_tri else 1
    return (kind, g.legs[v], loops, tuple(sorted(nb.values())))


def _candidate_perms(g: Graph, rotations: bool):
    """Vertex permutations compatible with the coarse invariants."""
    n_t = g.n_tri
    inv = [_vertex_invariant(g, v) for v in range(n_t)]
    cells: dict = {}
    for v in range(n_t):
        cells.setdefault(inv[v], []).append(v)
    cell_list = [cells[k] for k in sorted(cells)]
    targets = []
    pos = 0
    for cell in cell_list:
        targets.append(list(range(pos, pos + len(cell))))
        pos += len(cell)
    uni_maps = list(_univalent_maps(g, rotations))
    for choice in itertools.product(*[itertools.permutations(t) for t in targets]):
        perm = [0] * g.n_vertices
        for cell, imgs in zip(cell_list, choice):
            for v, p in zip(cell, imgs):
                perm[v] = p
        for um in uni_maps:
            for v, p in um.items():
                perm[v] = p
            yield tuple(perm)


def _univalent_maps(g: Graph, rotations: bool):
    """Maps of univalent vertices: identity, or independent cyclic rotations per component."""
    n_t = g.n_tri
    if not g.marks:
        yield {}
        return
    if not rotations:
        yield {n_t + i: n_t + i for i in range(g.n_uni)}
        return
    by_comp: dict = {}
    for i, (c, p) in enumerate(g.marks):
        by_comp.setdefault(c, []).append((p, n_t + i))
    comps = sorted(by_comp)
    for c in comps:
        by_comp[c].sort()
    options = []
    for c in comps:
        verts = [v for _, v in by_comp[c]]
        k = len(verts)
        options.append([{verts[i]: verts[(i + s) % k] for i in range(k)} for s in range(k)])
    for combo in itertools.product(*options):
        m = {}
        for part in combo:
            m.update(part)
        yield m


def _normalize_marks(g: Graph) -> Graph:
    """Univalent vertices listed by (component, position), positions renumbered 0..k-1."""
    if not g.marks:
        return g
    n_t = g.n_tri
    order = sorted(range(g.n_uni), key=lambda i: g.marks[i])
    perm = list(range(n_t)) + [0] * g.n_uni
    for new, old in enumerate(order):
        perm[n_t + old] = n_t + new
    h = g.relabel(perm)
    count: dict = {}
    marks = []
    for c, _ in h.marks:
        marks.append((c, count.get(c, 0)))
        count[c] = count.get(c, 0) + 1
    return Graph(h.n_tri, h.edges, h.legs, tuple(marks))


def canonical(g: Graph, rotations: bool = True) -> Graph:
    """Canonical representative with aut_order and loop_count filled in."""
    g = _normalize_marks(Graph(g.n_tri, tuple(sorted(tuple(sorted(e)) for e in g.edges)), tuple(g.legs),
                               tuple(tuple(m) for m in g.marks)))
    # the candidates form a union of cosets of the automorphism group, so the
    # number of permutations reaching the minimum is the vertex part of |Aut|
    best = None
    best_key = None
    stab = 0
    for perm in _candidate_perms(g, rotations):
        h = g.relabel(perm)
        h = Graph(h.n_tri, h.edges, h.legs, g.marks)  # marks are positional slots
        k = _key(h)
        if best_key is None or k < best_key:
            best, best_key, stab = h, k, 1
        elif k == best_key:
            stab += 1
    aut = stab * _local_symmetry(g)
    return Graph(best.n_tri, best.edges, best.legs, best.marks, aut, loop_number(best))


def _local_symmetry(g: Graph) -> int:
    """Half-edge symmetries fixing every vertex: leg permutations, loop flips/swaps, parallel edges."""
    f = 1
    for v in range(g.n_vertices):
        f *= math.factorial(g.legs[v])
    for (a, b), m in Counter(g.edges).items():
        f *= math.factorial(m)
        if a == b:
            f *= 2 ** m
    return f


def automorphism_order(g: Graph, rotations: bool = True) -> int:
    return canonical(g, rotations).aut_order


def loop_number(g: Graph) -> int:
    """Action mode: first Betti number E - V + c.  Link mode: |E_in| - |V_t|."""
    if g.marks:
        return len(g.edges) - g.n_tri
    return len(g.edges) - g.n_vertices + len(g.components())


# ---------------------------------------------------------------------------
# enumeration

def _multigraphs(n: int, degrees: Sequence[int]):
    """All (loops, edge multiplicities) with vertex v of internal degree degrees[v]."""
    pairs = [(a, b) for a in range(n) for b in range(a, n)]

    def rec(idx, remaining, edges):
        if idx == len(pairs):
            if all(r == 0 for r in remaining):
                yield tuple(edges)
            return
        a, b = pairs[idx]
        if a == b:
            max_m = remaining[a] // 2
        else:
            max_m = min(remaining[a], remaining[b])
        # all pairs involving a are at indices <= last (a, n-1); prune when a must be saturated
        for m in range(max_m, -1, -1):
            rem = list(remaining)
            if a == b:
                rem[a] -= 2 * m
            else:
                rem[a] -= m
                rem[b] -= m
            if b == n - 1 and rem[a] != 0:
                continue
            yield from rec(idx + 1, rem, edges + [(a, b)] * m)

    yield from rec(0, list(degrees), [])


def enumerate_graphs(n_trivalent: int, n_external: int, allow_tadpoles: bool = True,
                     connected_only: bool = True, max_trivalent: int = DEFAULT_MAX_TRIVALENT) -> list:
    """One representative per isomorphism class, sorted by canonical encoding."""
    if n_trivalent > max_trivalent:
        raise GraphBoundError(f"n_trivalent={n_trivalent} exceeds bound {max_trivalent}")
    return list(_enumerate_cached(n_trivalent, n_external, allow_tadpoles, connected_only))


@functools.lru_cache(maxsize=None)
def _enumerate_cached(n_trivalent, n_external, allow_tadpoles, connected_only):
    n, k = n_trivalent, n_external
    if n == 0 or k > 3 * n or (3 * n - k) % 2:
        return []
    seen = {}
    for legs in _compositions(k, n, 3):
        degrees = [3 - l for l in legs]
        for edges in _multigraphs(n, degrees):
            g = Graph(n, edges, tuple(legs))
            if not allow_tadpoles and g.has_tadpole():
                continue
            if connected_only and not g.is_connected():
                continue
            c = canonical(g)
            seen.setdefault(c.encoding(), c)
    return tuple(seen[key] for key in sorted(seen))


def _compositions(total: int, parts: int, cap: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(cap, total), -1, -1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first,) + rest


def enumerate_link_graphs(circles: int, n_univalent_per_circle: Sequence[int], n_trivalent: int,
                          n_external: int, rotations: bool = True,
                          max_trivalent: int = DEFAULT_MAX_TRIVALENT) -> list:
    """Link graphs: univalent vertices on ``circles`` components in cyclic order.

    Every connected component must contain a univalent vertex.  With
    ``rotations`` the marks on each circle are identified up to rotation;
    otherwise each mark is a fixed slot.
    """
    if n_trivalent > max_trivalent:
        raise GraphBoundError(f"n_trivalent={n_trivalent} exceeds bound {max_trivalent}")
    counts = list(n_univalent_per_circle)
    if len(counts) != circles:
        raise ValueError("one univalent count per circle required")
    if any(c < 1 for c in counts):
        raise ValueError("each circle needs at least one univalent vertex")
    marks = tuple((c, p) for c in range(circles) for p in range(counts[c]))
    return _link_graphs(n_trivalent, marks, n_external, rotations)


def _link_graphs(n_tri: int, marks: tuple, n_external: int, rotations: bool) -> list:
    n_u = len(marks)
    n = n_tri + n_u
    caps = [3] * n_tri + [1] * n_u
    seen = {}
    if n == 0:
        return []
    for legs in _capped_compositions(n_external, caps):
        degrees = [caps[v] - legs[v] for v in range(n)]
        for edges in _multigraphs(n, degrees):
            g = Graph(n_tri, edges, tuple(legs), marks)
            if not _every_component_touches_link(g):
                continue
            c = canonical(g, rotations)
            seen.setdefault(c.encoding(), c)
    return [seen[key] for key in sorted(seen)]


def _capped_compositions(total, caps):
    if not caps:
        if total == 0:
            yield ()
        return
    for first in range(min(caps[0], total), -1, -1):
        for rest in _capped_compositions(total - first, caps[1:]):
            yield (first,) + rest


def _every_component_touches_link(g: Graph) -> bool:
    return all(any(v >= g.n_tri for v in comp) for comp in g.components())


# ---------------------------------------------------------------------------
# Wick / perfect-matching oracle

def half_edges(n_trivalent: int, n_univalent: int = 0):
    """Half-edge labels ``(vertex, slot)``."""
    out = [(v, s) for v in range(n_trivalent) for s in range(3)]
    out += [(n_trivalent + u, 0) for u in range(n_univalent)]
    return out


def matchings(items: Sequence):
    """All perfect matchings of ``items`` (as lists of pairs)."""
    items = list(items)
    if not items:
        yield []
        return
    first = items[0]
    for i in range(1, len(items)):
        pair = (first, items[i])
        rest = items[1:i] + items[i + 1:]
        for m in matchings(rest):
            yield [pair] + m


def partial_matchings(n_trivalent: int, n_external: int, n_univalent: int = 0):
    """Pairs ``(external half-edges, matching of the rest)``."""
    hes = half_edges(n_trivalent, n_univalent)
    if n_external > len(hes) or (len(hes) - n_external) % 2:
        return
    for ext in itertools.combinations(hes, n_external):
        rest = [h for h in hes if h not in ext]
        for m in matchings(rest):
            yield ext, m


def graph_of_matching(n_trivalent: int, external, matching, marks: tuple = ()) -> Graph:
    n = n_trivalent + len(marks)
    legs = [0] * n
    for v, _ in external:
        legs[v] += 1
    edges = tuple(sorted(tuple(sorted((a[0], b[0]))) for a, b in matching))
    return Graph(n_trivalent, edges, tuple(legs), tuple(marks))


def wick_sum_oracle(n_trivalent: int, n_external: int, amplitude: Callable | None = None,
                    connected_only: bool = False, max_trivalent: int = 4):
    """Sum of ``amplitude(graph_of_matching)`` over all leg choices and pairings,
    divided by ``n! 6^n``.  External legs are an unordered set of half-edges,
    so no further leg symmetrization factor appears.
    """
    if n_trivalent > max_trivalent:
        raise GraphBoundError(f"oracle limited to n_trivalent <= {max_trivalent}")
    amplitude = amplitude or (lambda g: 1)
    if n_trivalent == 0:
        return Fraction(1) if n_external == 0 and not connected_only else Fraction(0)
    total = 0
    for ext, m in partial_matchings(n_trivalent, n_external):
        g = graph_of_matching(n_trivalent, ext, m)
        if connected_only and not g.is_connected():
            continue
        total = total + amplitude(g)
    return total * Fraction(1, math.factorial(n_trivalent) * 6 ** n_trivalent)
