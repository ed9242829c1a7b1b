"""Graph self-maps respecting a stratum filtration.

A :class:`TopRep` sends vertices to vertices and each edge to a tight path,
compatibly with reversal and never raising stratum height. On top of the raw
map this module computes everything stratum-local: transition matrices, the
expanding/non-expanding taxonomy, Perron-Frobenius spectra and eigenlengths,
direction gates with their illegal turns, and verification of declared
periodic (Nielsen) paths.

The expensive classification artifacts are cached on the representative,
which is treated as immutable after construction.
"""

from __future__ import annotations

import dataclasses
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .graphs import (
    Circuit,
    EdgePath,
    GraphError,
    MarkedGraph,
    cyclic_tighten,
    subgraph,
    tighten_edges,
)


class MapError(ValueError):
    """A representative violates the taxonomy or spectrum contracts."""


SplitTerm = tuple[str, tuple[int, ...]]  # (kind tag, edge word)

SPLIT_KINDS = ("edge", "eg-nielsen", "neg-nielsen", "exceptional", "taken")


class TopRep:
    """A filtration-respecting topological representative.

    ``edge_image`` maps each positive edge id to a tight edge word; images of
    reversed edges are derived, so reversal equivariance holds by
    construction. ``nielsen`` optionally declares a periodic path candidate
    ``(word, split)``; ``splittings`` optionally declares a complete splitting
    of each edge image as a list of (kind, word) terms. ``ct`` is a flag
    asserting the representative satisfies the full normal form; it gates
    nothing here beyond being reported, since only mechanically checkable
    pieces are validated.
    """

    def __init__(
        self,
        graph: MarkedGraph,
        vertex_image: Mapping[str, str],
        edge_image: Mapping[int, Sequence[int]],
        *,
        nielsen: tuple[Sequence[int], int] | None = None,
        splittings: Mapping[int, Sequence[SplitTerm]] | None = None,
        ct: bool = False,
        base_vertex: str | None = None,
        name: str = "",
    ):
        self.graph = graph
        self.vertex_image = dict(vertex_image)
        self.edge_image = {e: tuple(w) for e, w in edge_image.items()}
        self.nielsen = (tuple(nielsen[0]), int(nielsen[1])) if nielsen else None
        self.splittings = (
            {e: tuple((k, tuple(w)) for k, w in terms) for e, terms in splittings.items()}
            if splittings
            else None
        )
        self.ct = bool(ct)
        self.base_vertex = base_vertex
        self.name = name
        img: dict[int, tuple[int, ...]] = {}
        for e in graph.edge_ids:
            w = self.edge_image.get(e, ())
            img[e] = w
            img[-e] = tuple(-x for x in reversed(w))
        self._signed: dict[int, tuple[int, ...]] = img
        self._strata: dict[int, StratumInfo] | None = None
        self._turns: TurnAnalysis | None = None
        self._eigen: dict[int, Fraction] | None = None
        self._bcc_seed: tuple[int, int] | None = None

    def image_of(self, e: int) -> tuple[int, ...]:
        return self._signed[e]

    # -- structural validation ---------------------------------------------

    def validate(self) -> list[str]:
        """Every violated map invariant, one message each; empty iff valid."""
        g = self.graph
        report: list[str] = []
        for v in g.vertices:
            w = self.vertex_image.get(v)
            if w is None:
                report.append(f"vertex {v!r} has no image")
            elif not g.has_vertex(w):
                report.append(f"vertex {v!r} maps to unknown vertex {w!r}")
        for e in g.edge_ids:
            if e not in self.edge_image:
                report.append(f"edge {e} has no image")
                continue
            w = self.edge_image[e]
            try:
                g._check_composable(w, None if w else self.vertex_image.get(g.init_of(e)))
            except GraphError as err:
                report.append(f"image of edge {e} is broken: {err}")
                continue
            if tighten_edges(w) != w:
                report.append(f"image of edge {e} is not tight")
            want_init = self.vertex_image.get(g.init_of(e))
            want_term = self.vertex_image.get(g.term_of(e))
            got_init = g.init_of(w[0]) if w else want_init
            got_term = g.term_of(w[-1]) if w else want_init
            if w and (got_init != want_init or got_term != want_term):
                report.append(
                    f"image of edge {e} runs {got_init!r}->{got_term!r}, "
                    f"expected {want_init!r}->{want_term!r}"
                )
            s = g.stratum_of(e)
            for x in w:
                if g.stratum_of(x) > s:
                    report.append(
                        f"image of edge {e} (stratum {s}) crosses higher stratum "
                        f"edge {x} (stratum {g.stratum_of(x)})"
                    )
                    break
        # edges of strata with nonzero transition matrix need nondegenerate images
        for i in range(1, g.top + 1):
            edges = g.stratum_edges(i)
            if any(self._signed.get(e) for e in edges):
                for e in edges:
                    if e in self.edge_image and not self.edge_image[e]:
                        report.append(f"edge {e} in irreducible stratum {i} has degenerate image")
        if self.base_vertex is not None and not g.has_vertex(self.base_vertex):
            report.append(f"unknown base vertex {self.base_vertex!r}")
        return report

    # -- transition matrices and taxonomy -----------------------------------

    def transition_matrix(self, i: int) -> tuple[tuple[int, ...], ...]:
        """Entry (r, c): occurrences of row edge (either orientation) in the
        image of column edge; rows and columns ordered by positive edge id."""
        edges = self.graph.stratum_edges(i)
        rows = []
        for r in edges:
            rows.append(
                tuple(sum(1 for x in self.edge_image.get(c, ()) if abs(x) == r) for c in edges)
            )
        return tuple(rows)

    def strata(self) -> dict[int, "StratumInfo"]:
        if self._strata is None:
            self._strata = classify_strata(self)
        return self._strata

    def turns(self) -> "TurnAnalysis":
        if self._turns is None:
            self._turns = turn_analysis(self)
        return self._turns

    def eigenlengths(self) -> dict[int, Fraction]:
        if self._eigen is None:
            self._eigen = eigenlength(self)
        return self._eigen


@dataclasses.dataclass(frozen=True)
class PFSpectrum:
    """Spectral radius and positive left eigenvector of an irreducible
    nonnegative matrix, min entry normalized to exactly 1 (exact rationals
    converted losslessly from the converged floats)."""

    value: float
    vector: tuple[Fraction, ...]
    residual: float
    iterations: int


@dataclasses.dataclass(frozen=True)
class StratumInfo:
    index: int
    kind: str  # EG | NEG-fixed | NEG-linear | NEG-superlinear | zero
    edges: tuple[int, ...]
    matrix: tuple[tuple[int, ...], ...]
    pf: PFSpectrum | None = None
    twist_path: tuple[int, ...] | None = None  # based loop at the edge's endpoint
    twist_coefficient: int | None = None


def _is_irreducible(M: Sequence[Sequence[int]]) -> bool:
    n = len(M)
    if n == 0:
        return False
    if n == 1:
        return M[0][0] != 0
    for s in range(n):
        seen = {s}
        stack = [s]
        while stack:
            i = stack.pop()
            for j in range(n):
                if M[i][j] and j not in seen:
                    seen.add(j)
                    stack.append(j)
        if len(seen) != n:
            return False
    return True


def pf_spectrum(M: Sequence[Sequence[int]], *, _tol: float = 1e-12) -> PFSpectrum:
    """Perron-Frobenius data of an irreducible nonnegative integer matrix.

    Power iteration on M + I (irreducible implies primitive after the shift)
    with a Rayleigh-quotient stopping rule; for matrices of size <= 4 the
    value is cross-checked against the characteristic polynomial roots.
    Raises :class:`MapError` on reducible input.
    """
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise MapError("pf_spectrum needs a nonempty square matrix")
    if (A < 0).any():
        raise MapError("pf_spectrum needs a nonnegative matrix")
    if not _is_irreducible(M):
        raise MapError("matrix is reducible; no Perron-Frobenius spectrum")
    n = A.shape[0]
    B = A + np.eye(n)
    v = np.ones(n)
    lam = 0.0
    iterations = 0
    for iterations in range(1, 100000):
        w = v @ B
        w = w / w.max()
        lam = float((w @ A @ w) / (w @ w))
        resid = float(np.abs(w @ A - lam * w).max())
        v = w
        if resid <= _tol * float(np.abs(w).max()):
            break
    resid = float(np.abs(v @ A - lam * v).max())
    if resid > 1e-10 * float(np.abs(v).max()):
        raise MapError(f"power iteration failed to converge (residual {resid:g})")
    if n <= 4:
        roots = np.roots(np.poly(A))
        top = max(r.real for r in roots if abs(r.imag) <= 1e-8)
        if abs(top - lam) > 1e-8 * max(1.0, abs(lam)):
            raise MapError(
                f"power iteration ({lam!r}) disagrees with characteristic "
                f"polynomial root ({top!r})"
            )
    exact = [Fraction(float(x)) for x in v]
    m = min(exact)
    exact = [x / m for x in exact]
    return PFSpectrum(value=lam, vector=tuple(exact), residual=resid, iterations=iterations)


def _primitive_root(word: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word == word[:p] * (n // p):
            return word[:p], n // p
    return word, 1  # unreachable


def _edge_key(e: int) -> tuple[int, int]:
    return (abs(e), 0 if e > 0 else 1)


def _word_key(w: Sequence[int]) -> list[tuple[int, int]]:
    return [_edge_key(e) for e in w]


def classify_strata(f: TopRep) -> dict[int, StratumInfo]:
    """Per-stratum taxonomy; raises :class:`MapError` naming any stratum that
    fits no category (the error, not a silent default, is the contract)."""
    g = f.graph
    out: dict[int, StratumInfo] = {}
    for i in range(1, g.top + 1):
        edges = g.stratum_edges(i)
        M = f.transition_matrix(i)
        if all(all(x == 0 for x in row) for row in M):
            if not any(g.stratum_of(e) > i for e in g.edge_ids):
                raise MapError(f"stratum {i} is a zero stratum with nothing above it")
            out[i] = StratumInfo(i, "zero", edges, M)
            continue
        if len(edges) == 1:
            (e,) = edges
            w = f.edge_image[e]
            occurrences = sum(1 for x in w if abs(x) == e)
            if occurrences != 1 or not w or w[0] != e:
                raise MapError(
                    f"stratum {i}: single edge {e} has image {w}, which is not of the "
                    "form edge followed by a lower loop"
                )
            tail = w[1:]
            if not tail:
                out[i] = StratumInfo(i, "NEG-fixed", edges, M)
                continue
            if g.init_of(tail[0]) != g.term_of(e) or g.term_of(tail[-1]) != g.term_of(e):
                raise MapError(f"stratum {i}: the suffix of the image of edge {e} is not a loop")
            root, power = _primitive_root(tail)
            if _word_key(tuple(-x for x in reversed(root))) < _word_key(root):
                root = tuple(-x for x in reversed(root))
                power = -power
            fixed = tighten_edges(tuple(y for x in root for y in f.image_of(x)))
            if fixed == root:
                out[i] = StratumInfo(
                    i, "NEG-linear", edges, M, twist_path=root, twist_coefficient=power
                )
            else:
                out[i] = StratumInfo(i, "NEG-superlinear", edges, M)
            continue
        if not _is_irreducible(M):
            raise MapError(f"stratum {i} is multi-edge but its transition matrix is reducible")
        pf = pf_spectrum(M)
        if pf.value <= 1 + 1e-9:
            raise MapError(
                f"stratum {i} is irreducible and multi-edge but not expanding "
                f"(spectral radius {pf.value!r}); no category fits"
            )
        out[i] = StratumInfo(i, "EG", edges, M, pf=pf)
    return out


def eigenlength(f: TopRep) -> dict[int, Fraction]:
    """Additive edge lengths: the top-stratum PF left eigenvector entries on
    top edges (min entry exactly 1) and zero on everything lower."""
    info = f.strata()[f.graph.top]
    if info.kind != "EG":
        raise MapError(
            f"top stratum has kind {info.kind}; eigenlengths need an expanding top stratum"
        )
    assert info.pf is not None
    lengths = {e: Fraction(0) for e in f.graph.edge_ids}
    for e, val in zip(info.edges, info.pf.vector):
        lengths[e] = val
    return lengths


def top_expansion(f: TopRep) -> float:
    info = f.strata()[f.graph.top]
    if info.kind != "EG" or info.pf is None:
        raise MapError("top stratum is not expanding")
    return info.pf.value


# -- map application -------------------------------------------------------


def _substitute(f: TopRep, seq: Sequence[int]) -> tuple[int, ...]:
    img = f._signed
    out: list[int] = []
    for e in seq:
        for x in img[e]:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


def apply_map(f: TopRep, p: EdgePath | Sequence[int], k: int = 1) -> EdgePath:
    """The tightened image path f^k_#(p); k = 0 is the identity.

    Degenerate paths track their basepoint through the vertex map, so the
    semigroup identity apply(f, p, j+k) == apply(f, apply(f, p, j), k) holds
    on the nose.
    """
    if k < 0:
        raise MapError("cannot iterate a map a negative number of times")
    g = f.graph
    if isinstance(p, EdgePath):
        seq, start = p.edges, p.start
    else:
        seq = tuple(p)
        if not seq:
            raise MapError("raw degenerate input needs an EdgePath with a basepoint")
        start = g.init_of(seq[0])
    g._check_composable(seq, start if not seq else None)
    seq = tighten_edges(seq)
    for _ in range(k):
        seq = _substitute(f, seq)
        start = f.vertex_image[start]
    if seq:
        start = g.init_of(seq[0])
    return EdgePath(seq, start)


def bounded_cancellation(f: TopRep, k: int = 1) -> int:
    """Upper bound on one-side cancellation when tightening f^k of a tight
    concatenation: the per-junction maximum over composable edge pairs,
    composed through bcc(f^k) <= c (L^k - 1) / (L - 1) with L the max edge
    image length."""
    if f._bcc_seed is None:
        g = f.graph
        c = 0
        for e in g.oriented_edges():
            a = f._signed[e]
            for e2 in g.out_edges(g.term_of(e)):
                if e2 == -e:
                    continue
                b = f._signed[e2]
                t = 0
                while t < len(a) and t < len(b) and a[len(a) - 1 - t] == -b[t]:
                    t += 1
                c = max(c, t)
        L = max((len(f.edge_image[e]) for e in g.edge_ids), default=0)
        f._bcc_seed = (c, L)
    c, L = f._bcc_seed
    if k <= 0:
        return 0
    if L <= 1:
        return c * k
    return c * (L**k - 1) // (L - 1)


def apply_map_trunc(f: TopRep, p: EdgePath | Sequence[int], k: int = 1) -> EdgePath:
    """f^k_#(p) with the first and last bcc(f^k) edges removed.

    Always a contiguous subpath of the full image; degenerate (based at the
    image's midpoint vertex) when the image is shorter than twice the
    cancellation bound.
    """
    q = apply_map(f, p, k)
    t = bounded_cancellation(f, k)
    g = f.graph
    if len(q.edges) <= 2 * t:
        mid = len(q.edges) // 2
        v = q.start
        for e in q.edges[:mid]:
            v = g.term_of(e)
        return EdgePath((), v)
    core = q.edges[t : len(q.edges) - t]
    v = q.start
    for e in q.edges[:t]:
        v = g.term_of(e)
    return EdgePath(core, v)


# -- turns, gates, legality -------------------------------------------------


@dataclasses.dataclass(frozen=True)
class TurnAnalysis:
    """Direction map data: ``df`` sends each oriented edge to the first edge
    of its image (None when degenerate); ``gates`` partition directions at
    each vertex by eventual coincidence under df; a turn is illegal iff both
    directions share a gate."""

    df: dict[int, int | None]
    gates: tuple[frozenset[int], ...]
    illegal_turns: frozenset[frozenset[int]]
    illegal_top: frozenset[frozenset[int]]
    top: int
    _stratum: dict[int, int]

    def is_illegal(self, d1: int, d2: int) -> bool:
        return d1 == d2 or frozenset((d1, d2)) in self.illegal_turns

    def is_u_legal(self, edges: Sequence[int]) -> bool:
        """No illegal turn whose two directions both lie in the top stratum.

        Paths with no interior junction (single edges, degenerate paths) are
        vacuously legal.
        """
        u = self.top
        for i in range(len(edges) - 1):
            d1, d2 = -edges[i], edges[i + 1]
            if self._stratum[d1] == u and self._stratum[d2] == u and self.is_illegal(d1, d2):
                return False
        return True

    def top_illegal_positions(self, edges: Sequence[int]) -> list[int]:
        u = self.top
        out = []
        for i in range(len(edges) - 1):
            d1, d2 = -edges[i], edges[i + 1]
            if self._stratum[d1] == u and self._stratum[d2] == u and self.is_illegal(d1, d2):
                out.append(i + 1)
        return out


def turn_analysis(f: TopRep) -> TurnAnalysis:
    g = f.graph
    dirs = g.oriented_edges()
    df: dict[int, int | None] = {}
    for d in dirs:
        img = f._signed[d]
        df[d] = img[0] if img else None
    n = len(dirs)
    # eventual coincidence: directions merging under df do so within n steps,
    # so classes are the fibers of the n-fold iterate (dead chains stay apart)
    final: dict[int, tuple[int, ...] | None] = {}
    for d in dirs:
        x: int | None = d
        trace = []
        for _ in range(n):
            x = df[x] if x is not None else None
            if x is None:
                break
            trace.append(x)
        final[d] = None if x is None else (x,)
    groups: dict[tuple[str, tuple[int, ...] | None, int], list[int]] = {}
    for d in dirs:
        key = (g.init_of(d), final[d], d if final[d] is None else 0)
        groups.setdefault(key, []).append(d)
    gates = tuple(frozenset(v) for v in groups.values())
    illegal = set()
    illegal_top = set()
    stratum = {d: g.stratum_of(d) for d in dirs}
    for gate in gates:
        members = sorted(gate, key=_edge_key)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                t = frozenset((members[a], members[b]))
                illegal.add(t)
                if stratum[members[a]] == g.top and stratum[members[b]] == g.top:
                    illegal_top.add(t)
    return TurnAnalysis(
        df=df,
        gates=gates,
        illegal_turns=frozenset(illegal),
        illegal_top=frozenset(illegal_top),
        top=g.top,
        _stratum=stratum,
    )


# -- Nielsen paths ----------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class NielsenCertificate:
    """A verified periodic path: fixed by the map, a single top-stratum
    illegal turn, legal halves of balanced eigenlength."""

    rho: EdgePath
    alpha: EdgePath
    beta: EdgePath
    split: int
    closed: bool
    endpoint_in_lower: tuple[bool, bool]


@dataclasses.dataclass(frozen=True)
class NielsenRefusal:
    """Why a candidate is not a verified periodic path (first failed clause)."""

    clause: str
    detail: str


def verify_nielsen(
    f: TopRep,
    candidate: Sequence[int],
    split: int | None = None,
    *,
    rel_tol: float = 1e-8,
) -> NielsenCertificate | NielsenRefusal:
    """Check the four periodic-path clauses in order and return either a
    certificate or a refusal naming the first clause that fails.

    Clauses: (1) the path is fixed by the map; (2) it crosses exactly one
    top-stratum illegal turn, at the declared split when one is given;
    (3) both halves are top-legal; (4) the halves carry equal eigenlength up
    to ``rel_tol``.
    """
    g = f.graph
    word = tuple(candidate)
    if not word:
        return NielsenRefusal("fixed", "candidate is degenerate")
    p = g.path(word)
    if apply_map(f, p, 1) != p:
        return NielsenRefusal("fixed", "the map does not fix the candidate path")
    ta = f.turns()
    spots = ta.top_illegal_positions(word)
    if len(spots) != 1:
        return NielsenRefusal(
            "illegal-turn-count",
            f"candidate crosses {len(spots)} top-stratum illegal turns, expected 1",
        )
    mid = spots[0]
    if split is not None and split != mid:
        return NielsenRefusal(
            "illegal-turn-count",
            f"declared split {split} does not sit at the illegal turn (position {mid})",
        )
    alpha, beta = word[:mid], word[mid:]
    if not ta.is_u_legal(alpha) or not ta.is_u_legal(beta):
        return NielsenRefusal("legal-halves", "a half crosses a top-stratum illegal turn")
    lengths = f.eigenlengths()
    la = sum((lengths[abs(e)] for e in alpha), Fraction(0))
    lb = sum((lengths[abs(e)] for e in beta), Fraction(0))
    if abs(la - lb) > rel_tol * max(la, lb):
        return NielsenRefusal(
            "balanced-halves",
            f"half eigenlengths {float(la)!r} and {float(lb)!r} do not balance",
        )
    start = p.start
    end = g.path_end(p)
    low = subgraph(g, g.top - 1).vertices
    return NielsenCertificate(
        rho=p,
        alpha=EdgePath(alpha, start),
        beta=EdgePath(beta, g.term_of(alpha[-1])),
        split=mid,
        closed=start == end,
        endpoint_in_lower=(start in low, end in low),
    )


def certified_rho(f: TopRep) -> NielsenCertificate | None:
    """The declared periodic path, verified once and cached on the map.

    Returns None when the map declares none; raises MapError when a declared
    candidate fails verification (bad data should never pass silently)."""
    cached = getattr(f, "_rho_cert", False)
    if cached is not False:
        return cached
    if f.nielsen is None:
        f._rho_cert = None
        return None
    word, split = f.nielsen
    outcome = verify_nielsen(f, word, split)
    if isinstance(outcome, NielsenRefusal):
        raise MapError(
            f"declared periodic path fails verification at clause "
            f"{outcome.clause!r}: {outcome.detail}"
        )
    f._rho_cert = outcome
    return outcome


@dataclasses.dataclass(frozen=True)
class FixedCircuitReport:
    fixed: bool
    terms: tuple[tuple[str, int], ...] | None  # ("edge", e) / ("rho", +-1)


def is_fixed_circuit(f: TopRep, c: Circuit) -> FixedCircuitReport:
    """Whether the map fixes the circuit, plus a decomposition into fixed
    edges and whole periodic-path copies when declared data allows one."""
    img = tuple(y for x in c.edges for y in f.image_of(x))
    try:
        fixed = cyclic_tighten(f.graph, img) == c
    except GraphError:
        fixed = False
    if not fixed:
        return FixedCircuitReport(False, None)
    if f.nielsen is None:
        terms = _fixed_terms(f, c.edges, None)
    else:
        terms = _fixed_terms(f, c.edges, f.nielsen[0])
    return FixedCircuitReport(True, terms)


def _fixed_terms(
    f: TopRep, edges: tuple[int, ...], rho: tuple[int, ...] | None
) -> tuple[tuple[str, int], ...] | None:
    n = len(edges)
    rrev = tuple(-x for x in reversed(rho)) if rho else None
    for rot in range(n):
        w = edges[rot:] + edges[:rot]
        pos = 0
        terms: list[tuple[str, int]] = []
        ok = True
        while pos < n:
            e = w[pos]
            if f.image_of(e) == (e,):
                terms.append(("edge", e))
                pos += 1
                continue
            if rho and w[pos : pos + len(rho)] == rho:
                terms.append(("rho", 1))
                pos += len(rho)
                continue
            if rrev and w[pos : pos + len(rrev)] == rrev:
                terms.append(("rho", -1))
                pos += len(rrev)
                continue
            ok = False
            break
        if ok:
            return tuple(terms)
    return None
