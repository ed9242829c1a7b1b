"""Two-tier length calculus on tight paths.

Every tight path gets a pair of raw lengths: an integer count of top-stratum
edges and an exact rational eigenlength. On top of those sit the adjusted
lengths, which discount whole copies of the verified periodic path so that
concatenation becomes almost additive, plus the small constants (comparison
ratio, concatenation slack, expansion pair) that the coarse-geometry modules
consume.

Adjusted lengths rest on an isolation decomposition: the unique way to write
a tight path as single edges and whole copies of the periodic path. The
uniqueness is not an accident of greedy scanning; copies of the periodic
path cannot overlap, and the decomposition routine checks that as it goes.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction
from typing import Literal, Sequence

from .graphs import GraphError, probe_tight_words, tighten_edges
from .trackmap import MapError, TopRep, apply_map, certified_rho, top_expansion

Tag = Literal["u", "pf"]

_TAGS = ("u", "pf")


class _Ctx:
    """Per-map cache of the bits every length computation touches.

    The eigenlength table is lazy: the top-count gauge stays available on
    maps with no expanding stratum, where asking for eigenlengths raises.
    """

    def __init__(self, f: TopRep):
        g = f.graph
        self._f = f
        self._eigen: dict[int, Fraction] | None = None
        self.top = frozenset(
            s * e for e in g.edge_ids if g.stratum_of(e) == g.top for s in (1, -1)
        )
        cert = certified_rho(f)
        if cert is None:
            self.rho: tuple[int, ...] | None = None
            self.rho_rev: tuple[int, ...] | None = None
            self.rho_closed = False
            self.lu_rho = 0
        else:
            self.rho = cert.rho.edges
            self.rho_rev = tuple(-e for e in reversed(self.rho))
            self.rho_closed = cert.closed
            self.lu_rho = sum(1 for e in self.rho if e in self.top)

    @property
    def eigen(self) -> dict[int, Fraction]:
        if self._eigen is None:
            self._eigen = self._f.eigenlengths()
        return self._eigen

    @property
    def lpf_rho(self) -> Fraction:
        if self.rho is None:
            return Fraction(0)
        return sum((self.eigen[abs(e)] for e in self.rho), Fraction(0))


def _ctx(f: TopRep) -> _Ctx:
    ctx = getattr(f, "_metrics_ctx", None)
    if ctx is None:
        ctx = _Ctx(f)
        f._metrics_ctx = ctx
    return ctx


def _require_tight(word: tuple[int, ...]) -> None:
    if tighten_edges(word) != word:
        raise GraphError("length calculus is defined on tight paths only")


def little_lengths(f: TopRep, word: Sequence[int]) -> tuple[int, Fraction]:
    """Raw lengths of a tight path: (top-stratum edge count, eigenlength)."""
    w = tuple(word)
    _require_tight(w)
    ctx = _ctx(f)
    lu = sum(1 for e in w if e in ctx.top)
    lpf = sum((ctx.eigen[abs(e)] for e in w), Fraction(0))
    return lu, lpf


@dataclasses.dataclass(frozen=True)
class RhoIsolation:
    """A tight path written as single edges and whole periodic-path copies.

    ``terms`` entries are ("edge", e) or ("rho", s) with s = +-1 the copy's
    orientation. ``count`` is the number of rho terms.
    """

    word: tuple[int, ...]
    terms: tuple[tuple[str, int], ...]

    @property
    def count(self) -> int:
        return sum(1 for kind, _ in self.terms if kind == "rho")


def _rho_windows(
    word: tuple[int, ...], rho: tuple[int, ...], rho_rev: tuple[int, ...]
) -> list[tuple[int, int]]:
    """Starts and orientations of every periodic-path window in the word.

    A window matching both orientations means rho equals its own reverse,
    which verified data never does; treat it as corrupt input.
    """
    k = len(rho)
    out: list[tuple[int, int]] = []
    for i in range(len(word) - k + 1):
        win = word[i : i + k]
        fwd = win == rho
        bwd = win == rho_rev
        if fwd and bwd:
            raise MapError("periodic path data matches its own reverse")
        if fwd:
            out.append((i, 1))
        elif bwd:
            out.append((i, -1))
    return out


def rho_isolation(f: TopRep, word: Sequence[int]) -> RhoIsolation:
    """Decompose a tight path into edges and whole periodic-path copies.

    Greedy left-to-right, which is forced: distinct copies of the periodic
    path in a tight path never overlap, and the routine raises if the data
    violates that.
    """
    w = tuple(word)
    _require_tight(w)
    ctx = _ctx(f)
    if ctx.rho is None:
        return RhoIsolation(w, tuple(("edge", e) for e in w))
    windows = _rho_windows(w, ctx.rho, ctx.rho_rev)
    k = len(ctx.rho)
    terms: list[tuple[str, int]] = []
    pos = 0
    for start, sgn in windows:
        if start < pos:
            raise MapError(
                "overlapping periodic-path copies, the declared path "
                "cannot be a verified periodic path"
            )
        terms.extend(("edge", e) for e in w[pos:start])
        terms.append(("rho", sgn))
        pos = start + k
    terms.extend(("edge", e) for e in w[pos:])
    return RhoIsolation(w, tuple(terms))


@dataclasses.dataclass(frozen=True)
class MuNuDecomposition:
    """Alternating form mu_0 nu_1 mu_1 ... nu_A mu_A of a tight path.

    Each nu is a maximal power rho**exp (exp signed, never zero); the mus are
    the rho-free stretches between them. Only mu_0 and mu_A may be empty.
    """

    word: tuple[int, ...]
    mus: tuple[tuple[int, ...], ...]
    exponents: tuple[int, ...]

    @property
    def copies(self) -> int:
        return sum(abs(x) for x in self.exponents)


def mu_nu(f: TopRep, word: Sequence[int]) -> MuNuDecomposition:
    """Group the isolation terms of a tight path into the alternating form."""
    iso = rho_isolation(f, word)
    ctx = _ctx(f)
    mus: list[tuple[int, ...]] = []
    exps: list[int] = []
    cur_mu: list[int] = []
    cur_exp = 0
    for kind, val in iso.terms:
        if kind == "edge":
            if cur_exp:
                exps.append(cur_exp)
                cur_exp = 0
            cur_mu.append(val)
            continue
        if cur_exp and (val > 0) != (cur_exp > 0):
            # rho immediately followed by its reverse cancels, impossible in
            # a tight word; start a fresh factor with a degenerate mu between
            # only if the data were corrupt.
            raise MapError("adjacent periodic-path copies with opposite orientation")
        if cur_exp == 0:
            mus.append(tuple(cur_mu))
            cur_mu = []
        elif not ctx.rho_closed:
            raise MapError("consecutive copies of a non-closed periodic path")
        cur_exp += 1 if val > 0 else -1
    if cur_exp:
        exps.append(cur_exp)
        cur_mu = []
        mus.append(())
    if not exps or cur_mu or not mus or len(mus) == len(exps):
        mus.append(tuple(cur_mu))
    for interior in mus[1:-1]:
        if not interior:
            raise MapError("interior rho-free stretch is degenerate")
    return MuNuDecomposition(iso.word, tuple(mus), tuple(exps))


def adjusted_length(f: TopRep, word: Sequence[int], tag: Tag = "u") -> int | Fraction:
    """Adjusted length: raw length minus the full length of every whole
    periodic-path copy. Integer for tag "u", exact rational for tag "pf"."""
    if tag not in _TAGS:
        raise ValueError(f"unknown length tag {tag!r}")
    iso = rho_isolation(f, word)
    ctx = _ctx(f)
    if tag == "u":
        lu = sum(1 for e in iso.word if e in ctx.top)
        return lu - iso.count * ctx.lu_rho
    lpf = sum((ctx.eigen[abs(e)] for e in iso.word), Fraction(0))
    return lpf - iso.count * ctx.lpf_rho


@dataclasses.dataclass(frozen=True)
class MetricConstants:
    """The small constants the coarse-geometry layers consume.

    comparison: exact ratio bounding each raw length by the other on single
        edges, hence on all paths.
    slack_u / slack_pf: concatenation slack for the adjusted lengths, twice
        the periodic path's raw length in each gauge (zero without one).
    expansion: pair (D, E) with D the top expansion factor and E the least
        additive error observed on the probe set for
        ``adjusted(f(word)) within [adjusted(word)/D - E, D*adjusted(word) + E]``.
    """

    comparison: Fraction
    slack_u: int
    slack_pf: Fraction
    expansion: tuple[float, float]
    probe_words: int
    probe_exhaustive: bool


def constants(
    f: TopRep, *, probe_len: int = 8, probe_cap: int = 20000, seed: int = 7
) -> MetricConstants:
    """Compute the metric constants, calibrating (D, E) on a probe set.

    D is pinned to the top-stratum expansion factor; E is then the least
    slack making both expansion inequalities hold across the probe words.
    """
    ctx = _ctx(f)
    comparison = Fraction(1)
    for e in sorted({abs(x) for x in ctx.top}):
        v = ctx.eigen[e]
        comparison = max(comparison, v, 1 / v)
    lam = float(top_expansion(f))
    words, exhaustive = probe_tight_words(f.graph, probe_len, probe_cap, seed)
    err = 0.0
    for w in words:
        lw = int(adjusted_length(f, w, "u"))
        img = apply_map(f, f.graph.path(w), 1)
        li = int(adjusted_length(f, img.edges, "u"))
        err = max(err, li - lam * lw, lw / lam - li)
    return MetricConstants(
        comparison=comparison,
        slack_u=2 * ctx.lu_rho,
        slack_pf=2 * ctx.lpf_rho,
        expansion=(lam, err),
        probe_words=len(words),
        probe_exhaustive=exhaustive,
    )


@dataclasses.dataclass(frozen=True)
class ConcatenationCheck:
    lhs: int | Fraction
    rhs: int | Fraction

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs


def concatenation_check(
    f: TopRep, gamma: Sequence[int], delta: Sequence[int], tag: Tag = "u"
) -> ConcatenationCheck:
    """Adjusted length of the tightened concatenation against the sum of the
    pieces plus the slack constant. Pieces must be composable."""
    g, d = tuple(gamma), tuple(delta)
    _require_tight(g)
    _require_tight(d)
    graph = f.graph
    if g and d:
        if graph.term_of(g[-1]) != graph.init_of(d[0]):
            raise GraphError("paths are not composable, no common junction vertex")
    joined = tighten_edges(g + d)
    ctx = _ctx(f)
    slack = ctx.lu_rho * 2 if tag == "u" else ctx.lpf_rho * 2
    lhs = adjusted_length(f, joined, tag)
    rhs = adjusted_length(f, g, tag) + adjusted_length(f, d, tag) + slack
    return ConcatenationCheck(lhs, rhs)
