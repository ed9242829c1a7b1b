"""Discretized suspension of the lifted map: layered windows over a ball.

A window stacks copies of a finite coned-tree ball at the integer levels
a..b, joins consecutive levels by unit-weight vertical edges from each
vertex to its image under the lifted map, and measures shortest paths in
the resulting graph. Integer fibers are isometric copies of the ball, so
horizontal weights repeat level for level; the drift of the fiber scale
between consecutive integer levels is not modeled by extra layers but
reported as (stretch, slack) metadata on the window.

Maps with no expanding stratum still get a window: vertices are plain
tight words and every fiber edge weighs 1. Such maps cannot flare, which
is exactly what the verifier is expected to report on them.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
import random
from fractions import Fraction
from typing import Sequence

from .conetree import (
    ConedBall,
    TreePoint,
    base_vertex,
    coned_ball,
    lift_apply,
    line_representative,
)
from .graphs import EdgePath, GraphError
from .trackmap import MapError, TopRep, apply_map, top_expansion


def _has_expansion(f: TopRep) -> bool:
    try:
        top_expansion(f)
    except MapError:
        return False
    return True


def unit_ball(f: TopRep, radius: int, *, max_points: int = 20000) -> ConedBall:
    """Plain word ball around the base vertex with unit edge weights.

    The fallback fiber model for maps with no expanding stratum: no
    canonical trimming, no cone points, every edge of weight 1.
    """
    if radius < 0:
        raise GraphError("radius must be nonnegative")
    g = f.graph
    base = base_vertex(f)
    center = TreePoint((), base)
    seen = {(): None}
    edges: list[tuple[tuple[int, ...], tuple[int, ...], Fraction]] = []
    frontier: list[tuple[int, ...]] = [()]
    for _ in range(radius):
        nxt: list[tuple[int, ...]] = []
        for w in frontier:
            at = g.term_of(w[-1]) if w else base
            for e in sorted(g.out_edges(at)):
                if w and e == -w[-1]:
                    continue
                child = w + (e,)
                if child not in seen:
                    if len(seen) >= max_points:
                        raise GraphError(
                            "coned ball exceeded the cap of "
                            f"{max_points} vertices; shrink the radius or raise the cap"
                        )
                    seen[child] = None
                    nxt.append(child)
                edges.append((w, child, Fraction(1)))
        frontier = nxt
    points = tuple(sorted(seen, key=lambda t: (len(t), t)))
    index = {w: i for i, w in enumerate(points)}
    pairs = sorted({(index[a], index[b], w) for a, b, w in edges})
    return ConedBall(center, radius, points, (), tuple(pairs))


@dataclasses.dataclass(frozen=True)
class SuspensionPoint:
    """A vertex of a suspension window: (ball vertex id, integer level).

    Vertex ids follow the ball convention: tree vertices first in ball
    order, then one cone vertex per Nielsen line.
    """

    vertex: int
    level: int


@dataclasses.dataclass
class SuspensionWindow:
    """Layered graph over a ball: one isometric fiber per integer level.

    ``vertical`` lists the level-independent image pairs (v, f(v)); the
    actual vertical edge count is (levels - 1) * len(vertical). ``stretch``
    and ``slack`` bound how far the integer-level model can sit from the
    continuously rescaled metric it discretizes: one level step rescales
    fibers by at most ``stretch`` and costs exactly ``slack``.
    """

    level_lo: int
    level_hi: int
    points: tuple[tuple[int, ...], ...]
    lines: tuple[tuple[int, ...], ...]
    horizontal: tuple[tuple[int, int, Fraction], ...]
    vertical: tuple[tuple[int, int], ...]
    stretch: float
    slack: Fraction

    @property
    def vertex_count(self) -> int:
        return len(self.points) + len(self.lines)

    @property
    def level_count(self) -> int:
        return self.level_hi - self.level_lo + 1

    @property
    def vertical_edge_count(self) -> int:
        return (self.level_hi - self.level_lo) * len(self.vertical)

    def contains(self, p: SuspensionPoint) -> bool:
        return (
            0 <= p.vertex < self.vertex_count
            and self.level_lo <= p.level <= self.level_hi
        )

    def vertex_of(self, word: Sequence[int]) -> int:
        """Index of a tree vertex by its word."""
        w = tuple(word)
        cache = getattr(self, "_point_index", None)
        if cache is None:
            cache = {pw: i for i, pw in enumerate(self.points)}
            self._point_index = cache
        if w not in cache:
            raise GraphError(f"word {w!r} is not a vertex of the window")
        return cache[w]

    def cone_of(self, line: Sequence[int]) -> int:
        """Index of the cone vertex over a Nielsen line representative."""
        w = tuple(line)
        if w not in self.lines:
            raise GraphError(f"no cone vertex over the line {w!r}")
        return len(self.points) + self.lines.index(w)


def build_window(f: TopRep, ball: ConedBall, a: int, b: int) -> SuspensionWindow:
    """Stack the ball at levels a..b and wire each vertex to its image.

    Vertices whose image leaves the ball simply carry no vertical edge; a
    cone vertex whose image is not over any representable line is a hard
    truncation error because the layer structure itself breaks there.
    """
    if b < a:
        raise ValueError("window levels must satisfy a <= b")
    expanding = _has_expansion(f)
    base = ball.center.base
    index = {w: i for i, w in enumerate(ball.points)}
    line_index = {w: len(ball.points) + j for j, w in enumerate(ball.lines)}
    vertical: list[tuple[int, int]] = []
    if b > a:
        for i, w in enumerate(ball.points):
            if expanding:
                img = lift_apply(f, TreePoint(w, base)).word
            else:
                # unit-gauge vertices are raw tight words, no trimming
                img = apply_map(f, _as_based_path(f, w)).edges
            j = index.get(img)
            if j is not None:
                vertical.append((i, j))
        for j, lw in enumerate(ball.lines):
            image = lift_apply(f, TreePoint(lw, base))
            try:
                rep = line_representative(f, image)
            except MapError as exc:
                raise GraphError(
                    f"image of the cone vertex over {lw!r} is not "
                    "representable in the window"
                ) from exc
            k = line_index.get(rep)
            if k is not None:
                vertical.append((len(ball.points) + j, k))
    stretch = max(top_expansion(f), 1.0) if expanding else 1.0
    return SuspensionWindow(
        a, b, ball.points, ball.lines, ball.edges, tuple(vertical),
        stretch, Fraction(1),
    )


def _as_based_path(f: TopRep, word: tuple[int, ...]) -> EdgePath:
    return EdgePath(word, base_vertex(f))


def _scaled_adjacency(w: SuspensionWindow):
    """Integer-weight adjacency over (level, vertex) nodes, cached.

    All weights are dyadic rationals, so one common scale turns Dijkstra
    into exact integer arithmetic.
    """
    cached = getattr(w, "_adjacency", None)
    if cached is not None:
        return cached
    scale = math.lcm(1, *(wt.denominator for _, _, wt in w.horizontal))
    n = w.vertex_count
    levels = w.level_count
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n * levels)]
    for k in range(levels):
        off = k * n
        for i, j, wt in w.horizontal:
            c = int(wt * scale)
            adj[off + i].append((off + j, c))
            adj[off + j].append((off + i, c))
    for k in range(levels - 1):
        off = k * n
        for i, j in w.vertical:
            adj[off + i].append((off + n + j, scale))
            adj[off + n + j].append((off + i, scale))
    w._adjacency = (scale, adj)
    return w._adjacency


def _distances_from(w: SuspensionWindow, node: int) -> list[int | None]:
    cache = getattr(w, "_dist_cache", None)
    if cache is None:
        cache = {}
        w._dist_cache = cache
    if node in cache:
        return cache[node]
    scale, adj = _scaled_adjacency(w)
    dist: list[int | None] = [None] * len(adj)
    heap = [(0, node)]
    while heap:
        d, u = heapq.heappop(heap)
        if dist[u] is not None:
            continue
        dist[u] = d
        for v, c in adj[u]:
            if dist[v] is None:
                heapq.heappush(heap, (d + c, v))
    cache[node] = dist
    return dist


def _node(w: SuspensionWindow, p: SuspensionPoint) -> int:
    if not w.contains(p):
        raise ValueError(f"suspension point {p} lies outside the window")
    return (p.level - w.level_lo) * w.vertex_count + p.vertex


def suspension_distance(
    w: SuspensionWindow, x: SuspensionPoint, y: SuspensionPoint
) -> Fraction:
    """Exact shortest-path distance in the layered graph.

    Horizontal edges keep their fiber weights at every level, vertical
    steps cost 1 each, so the result can never undercut the level gap.
    """
    scale, _ = _scaled_adjacency(w)
    dist = _distances_from(w, _node(w, x))
    d = dist[_node(w, y)]
    if d is None:
        raise GraphError("window is disconnected between the two points")
    return Fraction(d, scale)


def fiber_distance(w: SuspensionWindow, u: int, v: int) -> Fraction:
    """Distance inside a single fiber (level-independent by isometry)."""
    cache = getattr(w, "_fiber_cache", None)
    if cache is None:
        cache = {}
        w._fiber_cache = cache
    if u not in cache:
        scale, adj = _scaled_adjacency(w)
        n = w.vertex_count
        dist: list[int | None] = [None] * n
        heap = [(0, u)]
        while heap:
            d, a = heapq.heappop(heap)
            if dist[a] is not None:
                continue
            dist[a] = d
            for b, c in adj[a]:
                if b < n and dist[b] is None:
                    heapq.heappush(heap, (d + c, b))
        cache[u] = dist
    scale, _ = _scaled_adjacency(w)
    d = cache[u][v]
    if d is None:
        raise GraphError("fiber is disconnected between the two vertices")
    return Fraction(d, scale)


def properness_gauge(
    w: SuspensionWindow, *, count: int = 300, seed: int = 7
) -> tuple[tuple[int, Fraction], ...]:
    """Empirical properness table: max fiber distance per window-distance
    bucket, sampled over same-level pairs. Buckets are ceilings of the
    window distance; a slowly growing table is the uniform-properness
    signal, a jump means some fiber spreads without the window noticing.
    """
    rng = random.Random(seed)
    n = w.vertex_count
    sources = sorted(rng.sample(range(n), min(n, 10)))
    gauge: dict[int, Fraction] = {}
    for _ in range(count):
        u = rng.choice(sources)
        v = rng.randrange(n)
        k = rng.randint(w.level_lo, w.level_hi)
        dw = suspension_distance(
            w, SuspensionPoint(u, k), SuspensionPoint(v, k)
        )
        df = fiber_distance(w, u, v)
        bucket = math.ceil(dw)
        if df > gauge.get(bucket, Fraction(-1)):
            gauge[bucket] = df
    return tuple(sorted(gauge.items()))


# -- two-ended flaring for sections ------------------------------------------


@dataclasses.dataclass(frozen=True)
class Flaring2Report:
    """Outcome of the section-flaring search.

    ``triples`` holds the probed fiber distances (low end, middle, high
    end) per section pair; ``threshold`` is the least integer A such that
    every probed pair with middle >= A flares toward one end, provided at
    least ``min_support`` pairs actually reach A.
    """

    nu: Fraction
    k2: int
    r: int
    passed: bool
    threshold: int | None
    vacuous: bool
    checked: int
    support: int
    violations: int
    triples: tuple[tuple[Fraction, Fraction, Fraction], ...]


def flaring2_judge(
    nu: Fraction,
    triples: Sequence[tuple[Fraction, Fraction, Fraction]],
    *,
    min_support: int = 8,
    max_threshold: int = 40,
) -> tuple[int, int, int, bool]:
    """Least integer threshold clearing all violators, with support count.

    Returns (threshold, support, violations, vacuous). A pair violates
    when nu * middle exceeds both ends; the threshold escalates past the
    worst violating middle, and certificates with fewer than min_support
    surviving pairs at or above it are vacuous.
    """
    violating = [m for lo, m, hi in triples if nu * m > max(lo, hi)]
    threshold = 1 if not violating else math.floor(max(violating)) + 1
    support = sum(1 for lo, m, hi in triples if m >= threshold)
    vacuous = support < min_support or threshold > max_threshold
    return threshold, support, len(violating), vacuous


def _forward_chains(w: SuspensionWindow, span: int) -> list[tuple[int, ...]]:
    img = {i: j for i, j in w.vertical if i < len(w.points)}
    chains = []
    for v in range(len(w.points)):
        chain = [v]
        while len(chain) <= span and chain[-1] in img:
            chain.append(img[chain[-1]])
        if len(chain) == span + 1:
            chains.append(tuple(chain))
    return chains


def _fiber_neighbors(w: SuspensionWindow) -> dict[int, list[int]]:
    nbr: dict[int, list[int]] = {}
    for i, j, _ in w.horizontal:
        nbr.setdefault(i, []).append(j)
        nbr.setdefault(j, []).append(i)
    return nbr


def verify_flaring2(
    f: TopRep,
    nu2,
    *,
    k2: int = 2,
    r: int = 1,
    radius: int = 6,
    levels: tuple[int, int] | None = None,
    pair_count: int = 60,
    noise_count: int = 20,
    seed: int = 11,
    min_support: int = 8,
    max_threshold: int = 40,
    window: SuspensionWindow | None = None,
) -> Flaring2Report:
    """Sample quasigeodesic section pairs and search the flaring threshold.

    Sections map the window's levels to fiber vertices with per-step
    displacement at most 2 * k2 (checked against the window metric, not
    assumed from the construction); candidates violating it are discarded.
    The bulk of the samples follow exact forward orbits, a noisy minority
    hops to fiber neighbors first. A pair flares when the middle fiber
    distance, once at least the threshold, is beaten by nu2 times neither
    end; the least such integer threshold must keep real support.
    """
    nu2 = Fraction(nu2) if not isinstance(nu2, Fraction) else nu2
    if nu2 <= 1:
        raise ValueError("the flaring factor must exceed 1")
    if r < 1:
        raise ValueError("the flaring window needs a positive half-span")
    if window is None:
        if levels is None:
            levels = (0, 2 * r)
        ball = coned_ball(f, radius) if _has_expansion(f) else unit_ball(f, radius)
        window = build_window(f, ball, levels[0], levels[1])
    if window.level_count != 2 * r + 1:
        raise ValueError("window must span exactly 2 * r level steps")
    lo, hi = window.level_lo, window.level_hi
    mid = lo + r

    rng = random.Random(seed)
    chains = _forward_chains(window, 2 * r)
    cap = max(2 * pair_count, 24)
    if len(chains) > cap:
        chains = sorted(rng.sample(chains, cap))
    sections: list[tuple[int, ...]] = list(chains)
    nbr = _fiber_neighbors(window)
    bound = Fraction(2 * k2)
    img = {i: j for i, j in window.vertical}

    def step_ok(x: int, y: int, t: int) -> bool:
        # riding the vertical edge from x and walking the fiber to y gives
        # a true upper bound; only an inconclusive bound needs the full
        # window metric
        if x in img and Fraction(1) + fiber_distance(window, img[x], y) <= bound:
            return True
        return (
            suspension_distance(
                window,
                SuspensionPoint(x, lo + t),
                SuspensionPoint(y, lo + t + 1),
            )
            <= bound
        )

    for c in chains:
        if len(sections) >= len(chains) + noise_count:
            break
        noisy = list(c)
        k = rng.randrange(1, len(noisy))
        if noisy[k] not in nbr:
            continue
        noisy[k] = rng.choice(sorted(nbr[noisy[k]]))
        if all(step_ok(noisy[t], noisy[t + 1], t) for t in range(len(noisy) - 1)):
            sections.append(tuple(noisy))
    for c in sections[: len(chains)]:
        # orbit steps ride single vertical edges; the displacement claim
        # still gets checked rather than trusted
        for t in range(2 * r):
            if not step_ok(c[t], c[t + 1], t):
                raise GraphError("an exact orbit step left the displacement bound")

    pairs: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    if len(sections) >= 2:
        want = min(pair_count, len(sections) * (len(sections) - 1) // 2)
        seen = set()
        while len(pairs) < want:
            a, b = rng.sample(range(len(sections)), 2)
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            pairs.append((sections[key[0]], sections[key[1]]))

    triples = tuple(
        (
            fiber_distance(window, s1[0], s2[0]),
            fiber_distance(window, s1[r], s2[r]),
            fiber_distance(window, s1[2 * r], s2[2 * r]),
        )
        for s1, s2 in pairs
    )
    threshold, support, violations, vacuous = flaring2_judge(
        nu2, triples, min_support=min_support, max_threshold=max_threshold
    )
    passed = not vacuous
    return Flaring2Report(
        nu2, k2, r, passed, threshold if passed else None, vacuous,
        len(triples), support, violations, triples,
    )
