"""Flaring probes for the adjusted length along orbits of the map.

The flaring property says that once a path is long enough, iterating the map
forward or backward must stretch it by a definite factor: in the three-term
form, the middle of (L(w), L(f^N w), L(f^2N w)) cannot dominate both ends.
The verifiers here search for the step count N and the threshold A over a
deterministic probe set, escalating A past the worst violator and refusing
to certify vacuously (a threshold so high that no probe word reaches it
certifies nothing, which is exactly how a non-expanding map fails).

Coarse similarity is the comparison relation used by the perturbed variant:
two paths are eta-close when short connectors (adjusted length at most eta)
turn one into the other. Pseudo-orbits iterate the map up to that slack.
"""

from __future__ import annotations

import dataclasses
import math
import random
from fractions import Fraction
from typing import Sequence

from .graphs import (
    EdgePath,
    GraphError,
    MarkedGraph,
    iter_tight_words,
    probe_tight_words,
    random_tight_word,
    tighten_edges,
)
from .path_metrics import _ctx, adjusted_length
from .trackmap import MapError, TopRep, apply_map, apply_map_trunc, top_expansion


def _as_path(g: MarkedGraph, p: EdgePath | Sequence[int]) -> EdgePath:
    if isinstance(p, EdgePath):
        return p
    seq = tuple(p)
    if seq:
        return g.path(seq)
    if len(g.vertices) == 1:
        return EdgePath((), g.vertices[0])
    raise GraphError("a degenerate path needs an explicit basepoint on this graph")


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    return Fraction(str(x))


# -- coarse similarity -------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class CoarseSimWitness:
    """Connectors alpha, omega with gamma = [alpha . beta . omega]."""

    alpha: tuple[int, ...]
    omega: tuple[int, ...]
    eta: int


def connector_radius(f: TopRep, eta: int) -> int:
    """Edge-length cap for connector candidates of adjusted length <= eta.

    Adjusted length ignores whole periodic-path copies, so a raw cap is
    needed to keep the candidate set finite; a witness can always be
    normalized to fit inside it. Maps without an expanding stratum fall back
    to comparison ratio 1.
    """
    ctx = _ctx(f)
    try:
        comparison = max(
            (max(v, 1 / v) for v in ctx.eigen.values() if v > 0),
            default=Fraction(1),
        )
    except MapError:
        comparison = Fraction(1)
    return math.ceil(eta * comparison) + ctx.lu_rho + 2


def coarse_sim(
    f: TopRep,
    gamma: EdgePath | Sequence[int],
    beta: EdgePath | Sequence[int],
    eta: int,
) -> CoarseSimWitness | None:
    """Search for connectors showing gamma and beta are eta-coarsely similar.

    Only the left connector is searched: once alpha is chosen, the right
    connector is forced to omega = [beta~ alpha~ gamma], so the check is a
    single adjusted-length bound. Candidates are capped by connector_radius.
    Returns the witness with shortest alpha, or None.
    """
    if eta < 0:
        raise ValueError("the similarity slack cannot be negative")
    g = f.graph
    gp = _as_path(g, gamma)
    bp = _as_path(g, beta)
    radius = connector_radius(f, eta)
    candidates: list[tuple[int, ...]] = [()]
    if radius > 0:
        candidates.extend(
            w for w in iter_tight_words(g, radius, starts=[gp.start])
        )
    candidates.sort(key=lambda w: (len(w), w))
    rev_beta = g.reverse_path(bp)
    for alpha in candidates:
        if adjusted_length(f, alpha, "u") > eta:
            continue
        if alpha:
            if g.term_of(alpha[-1]) != bp.start:
                continue
        elif gp.start != bp.start:
            continue
        rev_alpha = tuple(-e for e in reversed(alpha))
        combined = rev_beta.edges + rev_alpha + gp.edges
        if combined:
            try:
                g._check_composable(combined, None)
            except GraphError:
                continue
        omega = tighten_edges(combined)
        if adjusted_length(f, omega, "u") <= eta:
            return CoarseSimWitness(alpha, omega, eta)
    return None


# -- orbits ------------------------------------------------------------------


def exact_orbit(
    f: TopRep, word: EdgePath | Sequence[int], steps: int
) -> tuple[tuple[int, ...], ...]:
    """The forward orbit (w, f#(w), ..., f^steps#(w)) as edge words."""
    p = _as_path(f.graph, word)
    out = [p.edges]
    for _ in range(steps):
        p = apply_map(f, p, 1)
        out.append(p.edges)
    return tuple(out)


@dataclasses.dataclass(frozen=True)
class PseudoOrbit:
    """A sequence where each word is eta-coarsely similar to the image of
    its predecessor; eta = 0 collapses to an exact orbit."""

    words: tuple[tuple[int, ...], ...]
    eta: int


def _connector_ball(f: TopRep, eta: int) -> dict[str, list[tuple[int, ...]]]:
    """Per-vertex connector candidates: tight words of adjusted length <= eta
    within the raw radius, the empty word included."""
    g = f.graph
    radius = connector_radius(f, eta)
    ball: dict[str, list[tuple[int, ...]]] = {v: [()] for v in g.vertices}
    if eta > 0:
        for v in g.vertices:
            for w in iter_tight_words(g, radius, starts=[v]):
                if adjusted_length(f, w, "u") <= eta:
                    ball[v].append(w)
    return ball


def _perturb(
    f: TopRep, p: EdgePath, eta: int, rng, ball: dict[str, list[tuple[int, ...]]]
) -> EdgePath:
    g = f.graph
    pre = rng.choice(ball[p.start])
    alpha = tuple(-e for e in reversed(pre))  # ends at the path's start
    omega = rng.choice(ball[g.path_end(p)])
    start = g.init_of(alpha[0]) if alpha else p.start
    seq = tighten_edges(alpha + p.edges + omega)
    return EdgePath(seq, g.init_of(seq[0]) if seq else start)


def sample_pseudo_orbits(
    f: TopRep,
    *,
    count: int,
    steps: int,
    eta: int,
    seed: int = 0,
    start_len: int = 8,
) -> list[PseudoOrbit]:
    """Seeded pseudo-orbits: iterate the map, perturbing each image by
    random connectors from the eta-ball. Deterministic for a fixed seed."""
    g = f.graph
    rng = random.Random(seed)
    ball = _connector_ball(f, eta)
    out: list[PseudoOrbit] = []
    for _ in range(count):
        v = rng.choice(g.vertices)
        word: list[int] = []
        for _ in range(rng.randrange(1, start_len + 1)):
            options = [e for e in g.out_edges(v) if not word or e != -word[-1]]
            if not options:
                break
            e = rng.choice(options)
            word.append(e)
            v = g.term_of(e)
        p = _as_path(g, tuple(word)) if word else EdgePath((), g.vertices[0])
        words = [p.edges]
        for _ in range(steps):
            p = _perturb(f, apply_map(f, p, 1), eta, rng, ball)
            words.append(p.edges)
        out.append(PseudoOrbit(tuple(words), eta))
    return out


# -- flaring verdicts --------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class StepVerdict:
    steps: int
    threshold: int
    vacuous: bool
    support: int
    violations: int
    worst: tuple[tuple[int, ...], tuple[int, int, int]] | None


@dataclasses.dataclass(frozen=True)
class FlaringReport:
    """Outcome of a flaring search.

    ``passed`` means some step count N admitted a threshold A within bounds
    such that every probe triple with middle >= A flared, and at least one
    probe triple actually reached A (no vacuous certificates).
    """

    kind: str
    nu: Fraction
    eta: int
    passed: bool
    steps: int | None
    threshold: int | None
    vacuous: bool
    checked: int
    per_step: tuple[StepVerdict, ...]


def _judge_step(
    nu: Fraction,
    n: int,
    triples: list[tuple[tuple[int, ...], tuple[int, int, int]]],
    min_support: int,
) -> StepVerdict:
    """Escalate the threshold past the worst violator, then demand real
    evidence: at least min_support probe triples must reach the threshold
    (and hence flare). A lucky handful at the sample's length ceiling is
    not a certificate."""
    worst = None
    worst_mid = -1
    violations = 0
    for seedword, (l0, mid, l2) in triples:
        if mid > 0 and max(l0, l2) < nu * mid:
            violations += 1
            if mid > worst_mid:
                worst_mid = mid
                worst = (seedword, (l0, mid, l2))
    threshold = worst_mid + 1 if worst_mid >= 0 else 1
    support = sum(1 for _, (_, mid, _) in triples if mid >= threshold)
    return StepVerdict(n, threshold, support < min_support, support, violations, worst)


def _length_orbit(f: TopRep, p: EdgePath, steps: int) -> list[int]:
    out = [adjusted_length(f, p.edges, "u")]
    for _ in range(steps):
        p = apply_map(f, p, 1)
        out.append(adjusted_length(f, p.edges, "u"))
    return out


def verify_special_flaring(
    f: TopRep,
    nu,
    *,
    max_steps: int = 6,
    max_threshold: int = 40,
    probe_len: int = 6,
    probe_cap: int = 2000,
    sample_count: int = 300,
    sample_len: int = 24,
    seed: int = 11,
    min_support: int = 8,
) -> FlaringReport:
    """Search (N, A) such that exact orbits nu-flare above threshold A.

    The probe set is the exhaustive ball of short tight words plus seeded
    longer random walks; for each N in 1..max_steps the threshold escalates
    past the worst violating middle and must land within max_threshold
    without becoming vacuous.
    """
    nu = _as_fraction(nu)
    if nu <= 1:
        raise ValueError("the flaring factor must exceed 1")
    g = f.graph
    words, _ = probe_tight_words(g, probe_len, probe_cap, seed)
    rng = random.Random(seed + 1)
    for i in range(sample_count):
        w = random_tight_word(g, 1 + (i * sample_len) // max(sample_count, 1), rng)
        if w:
            words.append(w)
    length_rows = [
        (w, _length_orbit(f, _as_path(g, w), 2 * max_steps)) for w in words
    ]
    per_step: list[StepVerdict] = []
    for n in range(1, max_steps + 1):
        triples = [(w, (row[0], row[n], row[2 * n])) for w, row in length_rows]
        verdict = _judge_step(nu, n, triples, min_support)
        per_step.append(verdict)
        if verdict.threshold <= max_threshold and not verdict.vacuous:
            return FlaringReport(
                "special", nu, 0, True, n, verdict.threshold, False,
                len(length_rows), tuple(per_step),
            )
    all_vacuous = all(v.vacuous for v in per_step)
    return FlaringReport(
        "special", nu, 0, False, None, None, all_vacuous,
        len(length_rows), tuple(per_step),
    )


def verify_general_flaring(
    f: TopRep,
    nu,
    *,
    eta: int,
    max_steps: int = 6,
    max_threshold: int = 40,
    probe_len: int = 6,
    probe_cap: int = 1000,
    sample_count: int = 150,
    sample_len: int = 20,
    seed: int = 11,
    min_support: int = 8,
) -> FlaringReport:
    """Like the special search but over eta-pseudo-orbits.

    Exact orbits of the probe words are always included (they are valid
    pseudo-orbits), so at eta = 0 this reduces to the special search over
    the same probe set.
    """
    nu = _as_fraction(nu)
    if nu <= 1:
        raise ValueError("the flaring factor must exceed 1")
    if eta < 0:
        raise ValueError("the similarity slack cannot be negative")
    g = f.graph
    words, _ = probe_tight_words(g, probe_len, probe_cap, seed)
    rng = random.Random(seed + 1)
    for i in range(sample_count):
        w = random_tight_word(g, 1 + (i * sample_len) // max(sample_count, 1), rng)
        if w:
            words.append(w)
    ball = _connector_ball(f, eta) if eta > 0 else None
    exact_rows = [
        (w, _length_orbit(f, _as_path(g, w), 2 * max_steps)) for w in words
    ]
    per_step: list[StepVerdict] = []
    checked = len(exact_rows)
    for n in range(1, max_steps + 1):
        triples = [(w, (row[0], row[n], row[2 * n])) for w, row in exact_rows]
        if ball is not None:
            step_rng = random.Random(seed * 1000003 + eta * 101 + n)
            for w in words:
                p = _as_path(g, w)
                lens = [adjusted_length(f, p.edges, "u")]
                for _ in range(2 * n):
                    p = _perturb(f, apply_map(f, p, 1), eta, step_rng, ball)
                    lens.append(adjusted_length(f, p.edges, "u"))
                triples.append((w, (lens[0], lens[n], lens[2 * n])))
        verdict = _judge_step(nu, n, triples, min_support)
        per_step.append(verdict)
        checked = max(checked, len(triples))
        if verdict.threshold <= max_threshold and not verdict.vacuous:
            return FlaringReport(
                "general", nu, eta, True, n, verdict.threshold, False,
                checked, tuple(per_step),
            )
    all_vacuous = all(v.vacuous for v in per_step)
    return FlaringReport(
        "general", nu, eta, False, None, None, all_vacuous,
        checked, tuple(per_step),
    )


# -- growth gauge for split paths ---------------------------------------------


@dataclasses.dataclass(frozen=True)
class PositiveFlaringRow:
    steps: int
    min_ratio: float
    trunc_alive: int


@dataclasses.dataclass(frozen=True)
class PositiveFlaringReport:
    """Growth of adjusted length along images against the half-power of the
    expansion factor; the truncated-image column reports how many probe
    words survive trimming by the cancellation bound (often none at higher
    powers on small examples, which is honest, not a defect)."""

    base: float
    rows: tuple[PositiveFlaringRow, ...]
    checked: int
    skipped: int
    least_ratio: float
    passed: bool


def verify_positive_flaring(
    f: TopRep,
    *,
    words: Sequence[Sequence[int]] | None = None,
    max_steps: int = 5,
) -> PositiveFlaringReport:
    """Gauge L(f^m w) >= c * sqrt(lambda)^m * L(w) over the probe words.

    Words of adjusted length zero (whole periodic-path powers, lower-stratum
    paths) are skipped as vacuous. Default probe: the top-stratum edges and
    every edge image.
    """
    g = f.graph
    lam = top_expansion(f)
    base = math.sqrt(lam)
    if words is None:
        words = [
            (e,) for e in g.edge_ids if g.stratum_of(e) == g.top
        ] + [f.image_of(e) for e in g.edge_ids]
        words = sorted(set(words))
    probes = []
    skipped = 0
    for w in words:
        w = tuple(w)
        base_len = adjusted_length(f, w, "u")
        if base_len == 0:
            skipped += 1
            continue
        probes.append((w, base_len))
    rows: list[PositiveFlaringRow] = []
    least = math.inf
    for m in range(max_steps + 1):
        ratios = []
        alive = 0
        for w, base_len in probes:
            p = _as_path(g, w)
            img = apply_map(f, p, m)
            ratios.append(adjusted_length(f, img.edges, "u") / (base**m * base_len))
            if apply_map_trunc(f, p, m).edges:
                alive += 1
        if ratios:
            row_min = min(ratios)
            least = min(least, row_min)
            rows.append(PositiveFlaringRow(m, row_min, alive))
    passed = bool(probes) and least > 0
    return PositiveFlaringReport(
        base=base,
        rows=tuple(rows),
        checked=len(probes),
        skipped=skipped,
        least_ratio=0.0 if math.isinf(least) else least,
        passed=passed,
    )
