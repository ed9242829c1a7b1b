"""The collapsed tree, its coned-off metric, and the induced dynamics.

Collapsing every component of the lower filtration subgraph in the universal
cover leaves a simplicial tree. Anchoring everything at one map-fixed base
vertex makes the tree finitely representable: a vertex is a tight edge path
from the base, taken up to a terminal excursion into the lower subgraph, so
a canonical representative simply drops that terminal excursion. Geodesics
are free reductions, and the two adjusted lengths from the length calculus
are the two coarse metrics on the tree.

When a periodic path is certified, its translates sweep out lines in the
tree. Coning each line off at height h = eigenlength(rho)/2 yields the
electrified space: crossing a cone costs exactly eigenlength(rho) no matter
how long the stretch it bypasses. The exact electrified distance between
tree vertices is a shortest path over a small candidate set read off the
geodesic's mu/nu decomposition: the lattice points of each periodic stretch
together with the nearest lattice point of the same line beyond each end,
since a shortest route may leave the geodesic by a partial period to reach
a cheaper entry. This is cross-checked in the tests against Dijkstra runs
on explicit finite balls. Loops act by prepending; the classification of a
conjugacy class into elliptic, axis, and loxodromic cases reads off the
decomposition of its cyclic word.

Everything metric here lives in the eigenlength gauge and therefore needs an
expanding top stratum; tree points, equality, and the elliptic branch of the
classification work without one.
"""

from __future__ import annotations

import dataclasses
import heapq
import itertools
import random
from fractions import Fraction
from typing import Sequence

from .graphs import (
    Circuit,
    EdgePath,
    GraphError,
    circuit_reverse,
    cyclic_tighten,
    tighten_edges,
)
from .path_metrics import MuNuDecomposition, _ctx, mu_nu
from .trackmap import MapError, TopRep, apply_map


def base_vertex(f: TopRep) -> str:
    """The anchor vertex for tree coordinates: the declared base if any,
    otherwise the least map-fixed vertex. Must be fixed by the map, or the
    lifted action would move the anchor."""
    cached = getattr(f, "_tree_base", None)
    if cached is not None:
        return cached
    b = f.base_vertex
    if b is None:
        fixed = sorted(v for v in f.graph.vertices if f.vertex_image.get(v) == v)
        if not fixed:
            raise MapError("the map fixes no vertex; no base is available")
        b = fixed[0]
    elif f.vertex_image.get(b) != b:
        raise MapError(f"declared base vertex {b!r} is not fixed by the map")
    f._tree_base = b
    return b


@dataclasses.dataclass(frozen=True)
class TreePoint:
    """A vertex of the collapsed tree: a canonical tight path from the base.

    Canonical means the word carries no terminal lower-stratum excursion, so
    distinct instances are distinct vertices and dataclass equality is the
    collapse relation.
    """

    word: tuple[int, ...]
    base: str


def _trim_lower(top: frozenset[int], word: tuple[int, ...]) -> tuple[int, ...]:
    n = len(word)
    while n and word[n - 1] not in top:
        n -= 1
    return word[:n]


def tree_point(f: TopRep, p: EdgePath | Sequence[int]) -> TreePoint:
    """Canonical tree vertex for a tight path from the base vertex."""
    base = base_vertex(f)
    if isinstance(p, EdgePath):
        if p.start != base:
            raise GraphError(f"path starts at {p.start!r}, not the base {base!r}")
        word = p.edges
    else:
        word = tuple(p)
        f.graph._check_composable(word, base)
    if tighten_edges(word) != word:
        raise GraphError("tree points are encoded by tight paths")
    return TreePoint(_trim_lower(_ctx(f).top, word), base)


def _word_end(f: TopRep, word: tuple[int, ...]) -> str:
    return f.graph.term_of(word[-1]) if word else base_vertex(f)


def _connector(v: TreePoint, w: TreePoint) -> tuple[int, ...]:
    if v.base != w.base:
        raise GraphError("tree points are anchored at different base vertices")
    return tighten_edges(tuple(-e for e in reversed(v.word)) + w.word)


@dataclasses.dataclass(frozen=True)
class TreeGeodesic:
    """The geodesic between two tree vertices, with both coarse lengths.

    ``word`` is the reduced connecting path in the graph; lower-stratum edges
    in it are excursions through collapsed classes and weigh nothing in
    either gauge.
    """

    word: tuple[int, ...]
    decomposition: MuNuDecomposition
    d_u: int
    d_pf: Fraction


def tree_geodesic(f: TopRep, v: TreePoint, w: TreePoint) -> TreeGeodesic:
    word = _connector(v, w)
    dec = mu_nu(f, word)
    ctx = _ctx(f)
    d_u = 0
    d_pf = Fraction(0)
    for mu in dec.mus:
        d_u += sum(1 for e in mu if e in ctx.top)
        d_pf += sum((ctx.eigen[abs(e)] for e in mu), Fraction(0))
    return TreeGeodesic(word, dec, d_u, d_pf)


# -- the action -------------------------------------------------------------


def act(f: TopRep, gamma: Sequence[int], x: TreePoint) -> TreePoint:
    """Deck action of a tight loop at the base: prepend and reduce."""
    g = f.graph
    base = base_vertex(f)
    word = tuple(gamma)
    if tighten_edges(word) != word:
        raise GraphError("acting words must be tight")
    g._check_composable(word, base)
    end = g.term_of(word[-1]) if word else base
    if end != base:
        raise GraphError(f"acting word ends at {end!r}, not a loop at {base!r}")
    return tree_point(f, tighten_edges(word + x.word))


def lift_apply(f: TopRep, x: TreePoint) -> TreePoint:
    """The lifted map on tree vertices: apply to the base path and reduce.

    Satisfies the twisted equivariance lift_apply(act(g, x)) =
    act(image of g, lift_apply(x)), exactly, canonicalization included.
    """
    image = apply_map(f, EdgePath(x.word, x.base))
    return tree_point(f, image)


# -- Nielsen lines and the coned metric -------------------------------------


class _ConeCtx:
    """Cone-side cache: periodic path endpoints and the cone height."""

    def __init__(self, f: TopRep):
        ctx = _ctx(f)
        self._ctx = ctx
        if ctx.rho is None:
            raise MapError("no certified periodic path; the coned data is empty")
        if any(e not in ctx.top for e in ctx.rho):
            raise MapError("certified periodic path leaves the top stratum")
        g = f.graph
        self.rho_init = g.init_of(ctx.rho[0])
        self.rho_term = g.term_of(ctx.rho[-1])
        if ctx.rho_closed and tighten_edges(ctx.rho + ctx.rho) != ctx.rho + ctx.rho:
            raise MapError("closed periodic path does not concatenate tightly")

    @property
    def height(self) -> Fraction:
        return self._ctx.lpf_rho / 2


def _cone_ctx(f: TopRep) -> _ConeCtx:
    cone = getattr(f, "_cone_ctx_cache", None)
    if cone is None:
        cone = _ConeCtx(f)
        f._cone_ctx_cache = cone
    return cone


def cone_height(f: TopRep) -> Fraction:
    """Half the periodic path's eigenlength: the normalized cone height."""
    return _cone_ctx(f).height


@dataclasses.dataclass(frozen=True)
class ConeRoute:
    """An electrified distance together with the route that realizes it.

    Aligned with the decomposition: ``bypassed[a]`` says whether the chosen
    route crosses the cone point of the a-th periodic stretch's line (a
    one-copy stretch ties and stays direct).
    """

    d_star: Fraction
    word: tuple[int, ...]
    decomposition: MuNuDecomposition
    bypassed: tuple[bool, ...]


def cone_distance(f: TopRep, v: TreePoint, w: TreePoint) -> ConeRoute:
    """Exact distance in the coned-off tree between two tree vertices.

    Every line the geodesic runs along for at least one full period offers
    a shortcut through its cone point: enter at any lattice point of the
    line, pay one bypass, leave at any other. A shortest route only ever
    enters within one period of the shared stretch, but the best entry can
    sit a partial period off the geodesic, where the line peels away from
    it, so per stretch the candidates are its lattice points on the geodesic
    plus the first lattice point beyond each end. The distance is then an
    exact shortest path over this small candidate set. Ties prefer fewer
    cone crossings, so a one-copy stretch reports as kept.
    """
    word = _connector(v, w)
    dec = mu_nu(f, word)
    ctx = _ctx(f)
    eigen = ctx.eigen
    if not dec.exponents:
        d = sum((eigen[abs(e)] for e in word), Fraction(0))
        return ConeRoute(d, word, dec, ())

    words: list[tuple[int, ...]] = []
    sums: list[list[Fraction]] = []
    index: dict[tuple[int, ...], int] = {}

    def node(wd: tuple[int, ...]) -> int:
        i = index.get(wd)
        if i is None:
            i = len(words)
            index[wd] = i
            words.append(wd)
            acc = [Fraction(0)]
            for e in wd:
                acc.append(acc[-1] + eigen[abs(e)])
            sums.append(acc)
        return i

    src = node(())
    dst = node(word)
    period = len(ctx.rho)
    lines: list[list[int]] = []
    pos = 0
    for a, exp in enumerate(dec.exponents):
        pos += len(dec.mus[a])
        start, end = pos, pos + abs(exp) * period
        members = [node(word[: start + m * period]) for m in range(abs(exp) + 1)]
        if ctx.rho_closed:
            pat = ctx.rho if exp > 0 else ctx.rho_rev
            back = tuple(-e for e in reversed(pat))
            members.append(node(tighten_edges(word[:start] + back)))
            members.append(node(tighten_edges(word[:end] + pat)))
        lines.append(sorted(set(members)))
        pos = end

    def leg(i: int, j: int) -> Fraction:
        a, b = words[i], words[j]
        k = 0
        m = min(len(a), len(b))
        while k < m and a[k] == b[k]:
            k += 1
        return sums[i][len(a)] - sums[i][k] + sums[j][len(b)] - sums[j][k]

    n = len(words)
    hops: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for lid, members in enumerate(lines):
        for i in members:
            for j in members:
                if i != j:
                    hops[i].append((j, lid))

    # Dijkstra on (length, crossings), lexicographic; tree legs join every
    # pair of candidates, one bypass joins same-line lattice points
    best: list[tuple[Fraction, int] | None] = [None] * n
    prev: list[tuple[int, int | None]] = [(-1, None)] * n
    best[src] = (Fraction(0), 0)
    heap: list[tuple[Fraction, int, int]] = [(Fraction(0), 0, src)]
    while heap:
        d, k, u = heapq.heappop(heap)
        if (d, k) > best[u]:
            continue
        if u == dst:
            break
        for vtx in range(n):
            if vtx == u:
                continue
            cand = (d + leg(u, vtx), k)
            if best[vtx] is None or cand < best[vtx]:
                best[vtx] = cand
                prev[vtx] = (u, None)
                heapq.heappush(heap, (cand[0], cand[1], vtx))
        for vtx, lid in hops[u]:
            cand = (d + ctx.lpf_rho, k + 1)
            if best[vtx] is None or cand < best[vtx]:
                best[vtx] = cand
                prev[vtx] = (u, lid)
                heapq.heappush(heap, (cand[0], cand[1], vtx))

    crossed: set[int] = set()
    cur = dst
    while cur != src:
        cur, lid = prev[cur]
        if lid is not None:
            crossed.add(lid)
    flags = tuple(a in crossed for a in range(len(lines)))
    return ConeRoute(best[dst][0], word, dec, flags)


def _line_translates(f: TopRep, word: tuple[int, ...]) -> dict[int, tuple[int, ...]]:
    """All composable translates of a lattice word along its line.

    Beyond |k| = len(word)/len(rho) + 1 a translate is strictly longer than
    the input (the appended copies survive reduction), so the range below
    contains every candidate for the minimal representative.
    """
    ctx = _ctx(f)
    cone = _cone_ctx(f)
    bound = len(word) // len(ctx.rho) + 1
    out = {0: word}
    cur = word
    for k in range(1, bound + 1):
        if _word_end(f, cur) != cone.rho_init:
            break
        cur = tighten_edges(cur + ctx.rho)
        out[k] = cur
    cur = word
    for k in range(1, bound + 1):
        if _word_end(f, cur) != cone.rho_term:
            break
        cur = tighten_edges(cur + ctx.rho_rev)
        out[-k] = cur
    return out


def line_representative(f: TopRep, v: TreePoint) -> tuple[int, ...]:
    """Canonical name of the Nielsen line through a lattice point: the least
    (length, word) translate. Lattice points share a line iff they share a
    representative."""
    cone = _cone_ctx(f)
    end = _word_end(f, v.word)
    if end not in (cone.rho_init, cone.rho_term):
        raise MapError("point is not a concatenation point of any Nielsen line")
    ctx = _ctx(f)
    best = min(
        (_trim_lower(ctx.top, t) for t in _line_translates(f, v.word).values()),
        key=lambda t: (len(t), t),
    )
    return best


@dataclasses.dataclass(frozen=True)
class NielsenLineWindow:
    """A finite stretch of a Nielsen line: k consecutive periodic copies.

    ``lattice`` holds the k+1 concatenation points, consecutive ones joined
    by one copy of the periodic path; ``window`` is the projected word.
    """

    center: TreePoint
    window: tuple[int, ...]
    lattice: tuple[TreePoint, ...]


def nielsen_line_window(f: TopRep, center: TreePoint, k: int) -> NielsenLineWindow:
    ctx = _ctx(f)
    cone = _cone_ctx(f)
    if k < 1:
        raise ValueError("window length must be at least 1")
    if not ctx.rho_closed and k > 1:
        raise MapError("a non-closed periodic path only supports one-step windows")
    if _word_end(f, center.word) != cone.rho_init:
        raise MapError("window center is not a concatenation point")
    lattice = [center]
    cur = center.word
    for _ in range(k):
        cur = tighten_edges(cur + ctx.rho)
        lattice.append(tree_point(f, cur))
    return NielsenLineWindow(center, ctx.rho * k, tuple(lattice))


# -- finite balls and the Dijkstra substrate ---------------------------------


@dataclasses.dataclass(frozen=True)
class ConedBall:
    """A finite window of the coned tree as an explicit weighted graph.

    ``points`` are canonical tree words within the radius, sorted by
    (length, word); ``lines`` are the representatives of the Nielsen lines
    meeting the ball, cone points indexed after the tree points. Every edge
    appears once with its exact weight: eigenlengths on tree edges, the cone
    height on cone edges, so every bypass costs eigenlength(rho) in total.
    """

    center: TreePoint
    radius: int
    points: tuple[tuple[int, ...], ...]
    lines: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, int, Fraction], ...]


def _lower_excursions(f: TopRep, v0: str) -> list[tuple[int, ...]]:
    """Tight all-lower words from a vertex, the trivial one included.

    In a forest these are simple paths, so any word longer than the lower
    edge count certifies a cycle, where the collapsed class is infinite and
    no finite window exists.
    """
    g = f.graph
    ctx = _ctx(f)
    limit = sum(1 for e in g.edge_ids if g.stratum_of(e) != g.top)
    out: list[tuple[int, ...]] = [()]
    stack: list[tuple[tuple[int, ...], str]] = [((), v0)]
    while stack:
        word, v = stack.pop()
        for e in sorted(g.out_edges(v)):
            if e in ctx.top or (word and e == -word[-1]):
                continue
            nxt = word + (e,)
            if len(nxt) > limit:
                raise GraphError(
                    f"lower strata reachable from {v0!r} contain a cycle; "
                    "collapsed classes there are infinite"
                )
            out.append(nxt)
            stack.append((nxt, g.term_of(e)))
    return out


def coned_ball(
    f: TopRep, radius: int, *, center: TreePoint | None = None, max_points: int = 20000
) -> ConedBall:
    """Breadth-first window of the coned tree around a center vertex.

    Raises an explicit truncation error when the vertex count would pass
    ``max_points``. Deterministic: neighbor expansion and final ordering are
    both sorted.
    """
    if radius < 0:
        raise GraphError("radius must be nonnegative")
    ctx = _ctx(f)
    g = f.graph
    if center is None:
        center = tree_point(f, ())
    seen = {center.word}
    tree_edges: list[tuple[tuple[int, ...], tuple[int, ...], Fraction]] = []
    frontier = [center.word]
    for _ in range(radius):
        nxt: list[tuple[int, ...]] = []
        for w in frontier:
            for exc in _lower_excursions(f, _word_end(f, w)):
                u = g.term_of(exc[-1]) if exc else _word_end(f, w)
                tail = exc[-1] if exc else (w[-1] if w else None)
                for e in sorted(g.out_edges(u)):
                    if e not in ctx.top or (tail is not None and e == -tail):
                        continue
                    child = w + exc + (e,)
                    if child in seen:
                        continue
                    seen.add(child)
                    if len(seen) > max_points:
                        raise GraphError(
                            f"coned ball exceeded the cap of {max_points} vertices; "
                            "shrink the radius or raise the cap"
                        )
                    tree_edges.append((w, child, ctx.eigen[abs(e)]))
                    nxt.append(child)
        frontier = nxt
    points = sorted(seen, key=lambda t: (len(t), t))
    index = {w: i for i, w in enumerate(points)}
    edges = [(index[a], index[b], wt) for a, b, wt in tree_edges]

    lines: list[tuple[int, ...]] = []
    if ctx.rho is not None:
        cone = _cone_ctx(f)
        members: dict[tuple[int, ...], list[int]] = {}
        for w in points:
            if _word_end(f, w) in (cone.rho_init, cone.rho_term):
                rep = line_representative(f, TreePoint(w, center.base))
                members.setdefault(rep, []).append(index[w])
        lines = sorted(members, key=lambda t: (len(t), t))
        h = cone.height
        for j, rep in enumerate(lines):
            apex = len(points) + j
            for i in members[rep]:
                edges.append((i, apex, h))
    edges.sort(key=lambda t: (t[0], t[1]))
    return ConedBall(center, radius, tuple(points), tuple(lines), tuple(edges))


# -- hyperbolicity probe ------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class HyperbolicityProbe:
    """Largest four-point defect seen over a set of vertex quadruples."""

    delta: Fraction
    checked: int
    exhaustive: bool
    worst: tuple[tuple[int, ...], ...] | None


def hyperbolicity_probe(
    f: TopRep,
    ball: ConedBall,
    *,
    quads: Sequence[tuple[tuple[int, ...], ...]] | None = None,
    count: int = 1500,
    seed: int = 5,
) -> HyperbolicityProbe:
    """Four-point probe of the coned metric on a ball's vertex set.

    For each quadruple the three pairings of the six distances give sums
    s1 >= s2 >= s3; the defect is (s1 - s2)/2, zero exactly on tree metrics.
    Passing explicit quadruples makes monotonicity checks reproducible:
    the maximum over a superset can only grow.
    """
    base = ball.center.base
    if quads is None:
        n = len(ball.points)
        total = n * (n - 1) * (n - 2) * (n - 3) // 24 if n >= 4 else 0
        if total == 0:
            quads = []
            exhaustive = True
        elif total <= count:
            quads = [
                tuple(ball.points[i] for i in combo)
                for combo in itertools.combinations(range(n), 4)
            ]
            exhaustive = True
        else:
            rng = random.Random(seed)
            picked: set[tuple[int, ...]] = set()
            attempts = 0
            while len(picked) < count and attempts < 4 * count:
                picked.add(tuple(sorted(rng.sample(range(n), 4))))
                attempts += 1
            quads = [tuple(ball.points[i] for i in combo) for combo in sorted(picked)]
            exhaustive = False
    else:
        quads = [tuple(q) for q in quads]
        exhaustive = False

    cache: dict[tuple[tuple[int, ...], tuple[int, ...]], Fraction] = {}

    def dist(a: tuple[int, ...], b: tuple[int, ...]) -> Fraction:
        key = (a, b) if a <= b else (b, a)
        got = cache.get(key)
        if got is None:
            got = cone_distance(f, TreePoint(key[0], base), TreePoint(key[1], base)).d_star
            cache[key] = got
        return got

    delta = Fraction(0)
    worst: tuple[tuple[int, ...], ...] | None = None
    for a, b, c, d in quads:
        s = sorted(
            (
                dist(a, b) + dist(c, d),
                dist(a, c) + dist(b, d),
                dist(a, d) + dist(b, c),
            ),
            reverse=True,
        )
        defect = (s[0] - s[1]) / 2
        if defect > delta:
            delta = defect
            worst = (a, b, c, d)
    return HyperbolicityProbe(delta, len(quads), exhaustive, worst)


# -- comparison constants -----------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ConeComparison:
    """Constants (K, C) with d*/K - C <= D_PF <= K d* + C on all vertex pairs."""

    k: Fraction
    c: Fraction


def cone_qi_constants(f: TopRep) -> ConeComparison:
    """Quasi-isometry constants between the tree gauge and the coned metric.

    Without a periodic path the two metrics agree. With one, K collects the
    concatenation slack against the line length and the cone height against
    the shortest top edge, and C is one full bypass at scale 1/K.
    """
    ctx = _ctx(f)
    if ctx.rho is None:
        return ConeComparison(Fraction(1), Fraction(0))
    eta_min = min(ctx.eigen[abs(e)] for e in ctx.top)
    slack = 2 * ctx.lpf_rho
    h = ctx.lpf_rho / 2
    k = max(Fraction(1), 2 * slack / ctx.lpf_rho, 1 + 4 * h / eta_min)
    return ConeComparison(k, 2 * h / k)


# -- dynamics ---------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ElementClass:
    """Classification of a conjugacy class acting on the coned tree.

    ``translation`` is the translation length on the tree (zero for the
    elliptic case); ``growth`` tabulates the coned distance from the base
    vertex to its k-th iterate, the quantity whose linear growth separates
    loxodromic from bounded behavior.
    """

    kind: str
    circuit: Circuit
    translation: Fraction
    growth: tuple[Fraction, ...]


def _based_loop(f: TopRep, circuit: Circuit) -> tuple[int, ...]:
    """A tight loop at the base representing the conjugacy class."""
    g = f.graph
    b = base_vertex(f)
    edges = circuit.edges
    for i, e in enumerate(edges):
        if g.init_of(e) == b:
            return edges[i:] + edges[:i]
    prev: dict[str, tuple[str, int] | None] = {b: None}
    queue = [b]
    for v in queue:
        for e in sorted(g.out_edges(v)):
            w = g.term_of(e)
            if w not in prev:
                prev[w] = (v, e)
                queue.append(w)
    target = g.init_of(edges[0])
    if target not in prev:
        raise GraphError("circuit is not reachable from the base vertex")
    back: list[int] = []
    v = target
    while prev[v] is not None:
        u, e = prev[v]
        back.append(e)
        v = u
    conn = tuple(reversed(back))
    return tighten_edges(conn + edges + tuple(-e for e in reversed(conn)))


def _growth_table(f: TopRep, circuit: Circuit, k_max: int) -> tuple[Fraction, ...]:
    loop = _based_loop(f, circuit)
    origin = tree_point(f, ())
    out = [Fraction(0)]
    cur: tuple[int, ...] = ()
    for _ in range(k_max):
        cur = tighten_edges(cur + loop)
        out.append(cone_distance(f, origin, tree_point(f, cur)).d_star)
    return tuple(out)


def classify_element(
    f: TopRep, c: Circuit | Sequence[int], *, k_max: int = 6
) -> ElementClass:
    """Sort a conjugacy class into elliptic, axis, or loxodromic behavior.

    Elliptic: the cyclic word avoids the top stratum, so it fixes a vertex
    of the collapsed tree and every iterate collapses to the base. Axis: the
    cyclic word is a power of the certified closed periodic path up to
    rotation and inversion; it translates along a Nielsen line in the tree
    but the line's cone point pins its orbit in the coned space. Otherwise
    loxodromic, with tree translation length the cyclic eigenlength.

    Canonical circuit rotation makes the answer conjugation-invariant.
    """
    circuit = c if isinstance(c, Circuit) else cyclic_tighten(f.graph, tuple(c))
    ctx = _ctx(f)
    if all(e not in ctx.top for e in circuit.edges):
        loop = _based_loop(f, circuit)
        if all(e not in ctx.top for e in loop):
            # the fixed vertex is the base itself; iterates collapse to it
            growth = tuple(Fraction(0) for _ in range(k_max + 1))
        else:
            # fixes a vertex away from the base; bounded but not zero
            growth = _growth_table(f, circuit, k_max)
        return ElementClass("elliptic", circuit, Fraction(0), growth)
    if ctx.rho is not None and ctx.rho_closed:
        m, rem = divmod(len(circuit.edges), len(ctx.rho))
        if rem == 0 and m >= 1:
            power = cyclic_tighten(f.graph, ctx.rho * m)
            if circuit in (power, circuit_reverse(power)):
                return ElementClass(
                    "nielsen-axis",
                    circuit,
                    m * ctx.lpf_rho,
                    _growth_table(f, circuit, k_max),
                )
    translation = sum((ctx.eigen[abs(e)] for e in circuit.edges), Fraction(0))
    return ElementClass(
        "loxodromic", circuit, translation, _growth_table(f, circuit, k_max)
    )


@dataclasses.dataclass(frozen=True)
class StableGrowth:
    """Best linear lower bound k*eta - kappa under the sampled growth table."""

    eta: Fraction
    kappa: Fraction
    table: tuple[Fraction, ...]


def stable_growth_check(
    f: TopRep, c: Circuit | Sequence[int], k_max: int = 12
) -> StableGrowth:
    """Fit the least-slack linear lower bound to the coned growth of a
    loxodromic class.

    Maximizes the total of k*eta - kappa subject to staying under every
    sample; the optimum is supported by two rows of the table, so an exact
    rational enumeration of the support pairs solves it. On classes whose
    powers stay clear of the periodic path the fit is the tree translation
    length with no offset.
    """
    if k_max < 1:
        raise ValueError("need at least two growth samples")
    cls = classify_element(f, c, k_max=k_max)
    if cls.kind != "loxodromic":
        raise MapError(f"stable growth needs a loxodromic class, got {cls.kind}")
    d = cls.growth
    ks = range(k_max + 1)
    best: tuple[Fraction, Fraction, Fraction] | None = None
    for i in range(k_max + 1):
        for j in range(i + 1, k_max + 1):
            eta = (d[j] - d[i]) / (j - i)
            kappa = i * eta - d[i]
            if any(k * eta - kappa > d[k] for k in ks):
                continue
            objective = sum((k * eta - kappa for k in ks), Fraction(0))
            key = (objective, eta, -kappa)
            if best is None or key > best:
                best = key
    assert best is not None  # the lower convex hull always has a support pair
    _, eta, neg_kappa = best
    return StableGrowth(eta, -neg_kappa, d)
