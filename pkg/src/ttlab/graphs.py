"""Filtered marked graphs and edge paths.

A marked graph here is a finite connected graph whose positive edges are
numbered 1..m and carry a stratum index; the oriented edge -e is the reversal
of e. Strata indices are contiguous 1..u and the union of strata 1..i is the
filtration subgraph G_i. Everything downstream (map iteration, length
calculus, coned trees) works on tight edge paths over such a graph, so this
module owns the tightening/canonicalization primitives and the structural
validator.

Paths are tuples of signed edge ids. A degenerate path is an empty tuple
together with its basepoint, which is why :class:`EdgePath` always records a
start vertex.
"""

from __future__ import annotations

import dataclasses
from typing import Iterable, Mapping, Sequence


class GraphError(ValueError):
    """Structural problem: bad composition, unknown edge, broken schema."""


@dataclasses.dataclass(frozen=True)
class EdgePath:
    """A composable sequence of oriented edges with a recorded start vertex.

    ``edges`` may be empty, in which case ``start`` is the whole content of
    the path. Two paths are equal iff their edge tuples and start vertices
    agree; endpoints of nonempty paths are derived through the graph.
    """

    edges: tuple[int, ...]
    start: str

    def __len__(self) -> int:
        return len(self.edges)

    def is_degenerate(self) -> bool:
        return not self.edges


@dataclasses.dataclass(frozen=True)
class Circuit:
    """A nonempty cyclically tight loop, stored in canonical rotation."""

    edges: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.edges)


@dataclasses.dataclass(frozen=True)
class Subgraph:
    """The filtration subgraph G_i: positive edge ids plus incident vertices."""

    index: int
    edges: frozenset[int]
    vertices: frozenset[str]


class MarkedGraph:
    """Connected graph with involutive edge reversal and a stratum filtration.

    ``edges`` maps positive edge id -> (init vertex, term vertex, stratum).
    Oriented edges are the nonzero ints ±id with reverse(e) = -e, so the
    reversal involution is fixed-point free by construction and
    init(-e) = term(e) holds definitionally.
    """

    def __init__(
        self,
        vertices: Sequence[str],
        edges: Mapping[int, tuple[str, str, int]],
        labels: Mapping[int, str] | None = None,
    ):
        self.vertices: tuple[str, ...] = tuple(vertices)
        self._vertex_set = frozenset(self.vertices)
        if len(self._vertex_set) != len(self.vertices):
            raise GraphError("duplicate vertex ids")
        self.edge_ids: tuple[int, ...] = tuple(sorted(edges))
        self._init: dict[int, str] = {}
        self._term: dict[int, str] = {}
        self._stratum: dict[int, int] = {}
        self.labels: dict[int, str] = dict(labels or {})
        for e, (a, b, s) in edges.items():
            if e <= 0:
                raise GraphError(f"edge id {e} is not positive")
            if a not in self._vertex_set or b not in self._vertex_set:
                raise GraphError(f"edge {e} references an unknown vertex")
            if s <= 0:
                raise GraphError(f"edge {e} has non-positive stratum {s}")
            self._init[e] = a
            self._init[-e] = b
            self._term[e] = b
            self._term[-e] = a
            self._stratum[e] = s
            self._stratum[-e] = s
        self.top = max(self._stratum.values(), default=0)
        self._out: dict[str, tuple[int, ...]] = {v: () for v in self.vertices}
        grouped: dict[str, list[int]] = {v: [] for v in self.vertices}
        for e in self.oriented_edges():
            grouped[self._init[e]].append(e)
        for v, es in grouped.items():
            self._out[v] = tuple(sorted(es, key=lambda e: (abs(e), e < 0)))

    # -- basic queries ----------------------------------------------------

    def oriented_edges(self) -> tuple[int, ...]:
        return tuple(e for p in self.edge_ids for e in (p, -p))

    def init_of(self, e: int) -> str:
        try:
            return self._init[e]
        except KeyError:
            raise GraphError(f"unknown oriented edge {e}") from None

    def term_of(self, e: int) -> str:
        try:
            return self._term[e]
        except KeyError:
            raise GraphError(f"unknown oriented edge {e}") from None

    def stratum_of(self, e: int) -> int:
        try:
            return self._stratum[e]
        except KeyError:
            raise GraphError(f"unknown oriented edge {e}") from None

    def out_edges(self, v: str) -> tuple[int, ...]:
        return self._out[v]

    def stratum_edges(self, i: int) -> tuple[int, ...]:
        return tuple(e for e in self.edge_ids if self._stratum[e] == i)

    def label_of(self, e: int) -> str:
        base = self.labels.get(abs(e), str(abs(e)))
        return base if e > 0 else base + "~"

    def has_vertex(self, v: str) -> bool:
        return v in self._vertex_set

    # -- path construction -------------------------------------------------

    def path(self, edges: Iterable[int], start: str | None = None) -> EdgePath:
        seq = tuple(edges)
        s = self._check_composable(seq, start)
        return EdgePath(seq, s)

    def path_end(self, p: EdgePath) -> str:
        return self._term[p.edges[-1]] if p.edges else p.start

    def reverse_path(self, p: EdgePath) -> EdgePath:
        return EdgePath(tuple(-e for e in reversed(p.edges)), self.path_end(p))

    def _check_composable(self, seq: Sequence[int], start: str | None) -> str:
        if not seq:
            if start is None:
                raise GraphError("degenerate path needs an explicit basepoint")
            if start not in self._vertex_set:
                raise GraphError(f"unknown vertex {start!r}")
            return start
        for e in seq:
            if e not in self._init:
                raise GraphError(f"unknown oriented edge {e}")
        for k in range(len(seq) - 1):
            if self._term[seq[k]] != self._init[seq[k + 1]]:
                raise GraphError(
                    f"path is not composable at position {k}: "
                    f"term({seq[k]}) != init({seq[k + 1]})"
                )
        s = self._init[seq[0]]
        if start is not None and start != s:
            raise GraphError(f"declared start {start!r} differs from init of first edge")
        return s


# -- tightening -----------------------------------------------------------


def tighten_edges(seq: Sequence[int]) -> tuple[int, ...]:
    """Stack-based cancellation of adjacent inverse pairs; endpoint preserving."""
    out: list[int] = []
    for e in seq:
        if out and out[-1] == -e:
            out.pop()
        else:
            out.append(e)
    return tuple(out)


def tighten(graph: MarkedGraph, edges: Iterable[int], start: str | None = None) -> EdgePath:
    """The unique tight path with the same endpoints as the input path.

    Raises :class:`GraphError` when the input is not composable. Idempotent:
    tightening a tight path returns it unchanged.
    """
    seq = tuple(edges)
    s = graph._check_composable(seq, start)
    return EdgePath(tighten_edges(seq), s)


def cyclic_tighten(graph: MarkedGraph, edges: Iterable[int]) -> Circuit:
    """Canonical cyclically tight form of a nonempty closed edge path.

    The result is rotated to the lexicographically least position under the
    natural order on signed edge ids, so equal conjugacy classes compare
    equal. Total cancellation raises ``GraphError("trivial conjugacy class")``.
    """
    seq = tuple(edges)
    if not seq:
        raise GraphError("trivial conjugacy class")
    graph._check_composable(seq, None)
    if graph.init_of(seq[0]) != graph.term_of(seq[-1]):
        raise GraphError("circuit input is not a closed path")
    cur = tighten_edges(seq)
    while len(cur) >= 2 and cur[0] == -cur[-1]:
        cur = cur[1:-1]
    if not cur:
        raise GraphError("trivial conjugacy class")
    n = len(cur)
    doubled = cur + cur
    best = min(doubled[i : i + n] for i in range(n))
    return Circuit(best)


def circuit_reverse(c: Circuit) -> Circuit:
    rev = tuple(-e for e in reversed(c.edges))
    n = len(rev)
    doubled = rev + rev
    return Circuit(min(doubled[i : i + n] for i in range(n)))


def subgraph(graph: MarkedGraph, i: int) -> Subgraph:
    """The filtration subgraph G_i spanned by strata 1..i (G_0 is empty)."""
    if not 0 <= i <= graph.top:
        raise GraphError(f"filtration index {i} out of range 0..{graph.top}")
    es = frozenset(e for e in graph.edge_ids if graph.stratum_of(e) <= i)
    vs = frozenset(v for e in es for v in (graph.init_of(e), graph.term_of(e)))
    return Subgraph(i, es, vs)


def validate_graph(graph: MarkedGraph) -> list[str]:
    """Every violated structural invariant, one message each; empty iff valid."""
    report: list[str] = []
    if not graph.edge_ids:
        report.append("graph has no edges")
        return report
    strata = sorted({graph.stratum_of(e) for e in graph.edge_ids})
    if strata != list(range(1, graph.top + 1)):
        report.append(f"stratum indices {strata} are not contiguous 1..{graph.top}")
    # connectivity of G_u over undirected adjacency
    seen = {graph.vertices[0]}
    stack = [graph.vertices[0]]
    while stack:
        v = stack.pop()
        for e in graph.out_edges(v):
            w = graph.term_of(e)
            if w not in seen:
                seen.add(w)
                stack.append(w)
    missing = [v for v in graph.vertices if v not in seen]
    if missing:
        report.append(f"graph is not connected: unreachable vertices {missing}")
    return report


def path_in_subgraph(graph: MarkedGraph, edges: Sequence[int], i: int) -> bool:
    """True iff every edge of the path lies in G_i (degenerate paths qualify)."""
    return all(graph.stratum_of(e) <= i for e in edges)


# -- probe sets -------------------------------------------------------------


def iter_tight_words(graph: MarkedGraph, max_len: int, starts: Sequence[str] | None = None):
    """Depth-first enumeration of every tight edge word of length 1..max_len."""
    if starts is None:
        starts = graph.vertices
    stack = [((e,), graph.term_of(e)) for v in starts for e in reversed(graph.out_edges(v))]
    while stack:
        word, end = stack.pop()
        yield word
        if len(word) < max_len:
            for e in graph.out_edges(end):
                if e != -word[-1]:
                    stack.append((word + (e,), graph.term_of(e)))


def random_tight_word(graph: MarkedGraph, length: int, rng) -> tuple[int, ...]:
    """One uniform-ish tight random walk of exactly the requested length
    (shorter only if a vertex dead-ends, which cannot happen on core graphs)."""
    v = rng.choice(graph.vertices)
    word: list[int] = []
    for _ in range(length):
        options = [e for e in graph.out_edges(v) if not word or e != -word[-1]]
        if not options:
            break
        e = rng.choice(options)
        word.append(e)
        v = graph.term_of(e)
    return tuple(word)


def probe_tight_words(
    graph: MarkedGraph, max_len: int, cap: int, seed: int = 0
) -> tuple[list[tuple[int, ...]], bool]:
    """A deterministic probe set: exhaustive up to max_len when that stays
    within ``cap`` words, otherwise ``cap`` seeded random walks of lengths
    cycling 1..max_len. Returns (words, exhaustive_flag)."""
    import random as _random

    words: list[tuple[int, ...]] = []
    for w in iter_tight_words(graph, max_len):
        words.append(w)
        if len(words) > cap:
            break
    if len(words) <= cap:
        return words, True
    rng = _random.Random(seed)
    sampled = [random_tight_word(graph, 1 + i % max_len, rng) for i in range(cap)]
    return [w for w in sampled if w], False
