"""Length calculus: raw and adjusted lengths, isolation, decomposition,
constants. Frozen values for the two-loop rose reps were worked out by hand
from the golden-ratio spectra; randomized checks compare against the
window-scan oracle and the defining identities."""

import math
import random
from fractions import Fraction

import pytest

from ttlab.graphs import GraphError, MarkedGraph
from ttlab.path_metrics import (
    ConcatenationCheck,
    MetricConstants,
    MuNuDecomposition,
    RhoIsolation,
    adjusted_length,
    concatenation_check,
    constants,
    little_lengths,
    mu_nu,
    rho_isolation,
)
from ttlab.trackmap import MapError, TopRep

from oracles import greedy_disjoint_windows, tighten_by_scan

PHI = (1 + math.sqrt(5)) / 2
RHO = (-2, -1, 2, 1)
RHO_REV = (-1, -2, 1, 2)


def _random_tight_word(graph, length, rng):
    v = rng.choice(graph.vertices)
    out = []
    for _ in range(length):
        options = [e for e in graph.out_edges(v) if not out or e != -out[-1]]
        e = rng.choice(options)
        out.append(e)
        v = graph.term_of(e)
    return tuple(out)


# -- raw lengths -------------------------------------------------------------


def test_little_lengths_pinned(fib, tower):
    lu, lpf = little_lengths(fib, (1, 2, 1))
    assert lu == 3
    assert abs(float(lpf) - (2 * PHI + 1)) < 1e-9

    lu, lpf = little_lengths(tower, (4, 2))
    assert lu == 1
    assert abs(float(lpf) - PHI) < 1e-9

    assert little_lengths(fib, ()) == (0, Fraction(0))


def test_little_lengths_requires_tight(fib):
    with pytest.raises(GraphError):
        little_lengths(fib, (1, -1))


def test_lengths_are_exact_types(geom):
    lu, lpf = little_lengths(geom, (1, 2))
    assert isinstance(lu, int) and isinstance(lpf, Fraction)
    assert isinstance(adjusted_length(geom, RHO, "u"), int)
    assert isinstance(adjusted_length(geom, RHO, "pf"), Fraction)


# -- isolation ---------------------------------------------------------------


def test_isolation_without_declared_path(fib):
    iso = rho_isolation(fib, (1, 2, -1))
    assert iso.terms == (("edge", 1), ("edge", 2), ("edge", -1))
    assert iso.count == 0


def test_isolation_pinned(geom):
    f = geom
    assert rho_isolation(f, RHO).terms == (("rho", 1),)
    assert rho_isolation(f, RHO_REV).terms == (("rho", -1),)
    word = (1,) + RHO + (2,)
    iso = rho_isolation(f, word)
    assert iso.terms == (("edge", 1), ("rho", 1), ("edge", 2))
    assert iso.count == 1


def test_isolation_matches_window_oracle(geom):
    f = geom
    g = f.graph
    rng = random.Random(20260816)
    for trial in range(300):
        pieces = []
        for _ in range(rng.randrange(1, 4)):
            pieces.append(_random_tight_word(g, rng.randrange(0, 7), rng))
            pieces.append(RHO if rng.random() < 0.5 else RHO_REV)
        pieces.append(_random_tight_word(g, rng.randrange(0, 7), rng))
        word = tighten_by_scan([e for p in pieces for e in p])
        iso = rho_isolation(f, word)
        windows = greedy_disjoint_windows(word, RHO)
        assert iso.count == len(windows)
        rebuilt = []
        pos = 0
        for p, s in windows:
            rebuilt.extend(("edge", e) for e in word[pos:p])
            rebuilt.append(("rho", s))
            pos = p + len(RHO)
        rebuilt.extend(("edge", e) for e in word[pos:])
        assert iso.terms == tuple(rebuilt)


def test_isolation_rejects_untight(geom):
    with pytest.raises(GraphError):
        rho_isolation(geom, (1, -1, 2))


def test_declared_path_failure_is_loud(fib2):
    base = fib2
    bogus = TopRep(
        base.graph,
        base.vertex_image,
        base.edge_image,
        nielsen=((1, 2), 1),
        base_vertex=base.base_vertex,
    )
    with pytest.raises(MapError, match="declared periodic path"):
        rho_isolation(bogus, (1, 2))


# -- alternating decomposition ----------------------------------------------


def test_munu_pinned(geom):
    f = geom
    d = mu_nu(f, RHO + RHO + RHO)
    assert d.mus == ((), ())
    assert d.exponents == (3,)
    assert d.copies == 3

    d = mu_nu(f, (1,) + RHO + (2,))
    assert d.mus == ((1,), (2,))
    assert d.exponents == (1,)

    d = mu_nu(f, RHO_REV + RHO_REV)
    assert d.mus == ((), ())
    assert d.exponents == (-2,)

    d = mu_nu(f, (1, 2, 1))
    assert d.mus == ((1, 2, 1),)
    assert d.exponents == ()


def test_munu_reconstructs_word(geom):
    f = geom
    g = f.graph
    rng = random.Random(99)
    for trial in range(300):
        pieces = []
        for _ in range(rng.randrange(0, 3)):
            pieces.append(_random_tight_word(g, rng.randrange(0, 6), rng))
            rep = RHO if rng.random() < 0.5 else RHO_REV
            pieces.extend(rep for _ in range(rng.randrange(1, 4)))
        pieces.append(_random_tight_word(g, rng.randrange(0, 6), rng))
        word = tighten_by_scan([e for p in pieces for e in p])
        d = mu_nu(f, word)
        rebuilt = list(d.mus[0])
        for a, exp in enumerate(d.exponents):
            block = RHO if exp > 0 else RHO_REV
            rebuilt.extend(block * abs(exp))
            rebuilt.extend(d.mus[a + 1])
        assert tuple(rebuilt) == word
        for interior in d.mus[1:-1]:
            assert interior
        assert all(e != 0 for e in d.exponents)
        assert d.copies == rho_isolation(f, word).count


# -- adjusted lengths --------------------------------------------------------


def test_adjusted_pinned(geom, fib):
    f = geom
    assert adjusted_length(f, RHO + RHO + RHO, "u") == 0
    assert adjusted_length(f, RHO + RHO + RHO, "pf") == Fraction(0)
    word = (1,) + RHO + (2,)
    assert adjusted_length(f, word, "u") == 2
    phi = f.eigenlengths()[1]
    assert adjusted_length(f, word, "pf") == phi + 1

    # without a declared path the adjustment is the raw length
    assert adjusted_length(fib, (1, 2, 1), "u") == 3


def test_adjusted_rejects_unknown_tag(geom):
    with pytest.raises(ValueError):
        adjusted_length(geom, RHO, "length")


def test_adjusted_dual_route(geom):
    """Discounting whole copies equals summing raw lengths over the mus."""
    f = geom
    g = f.graph
    rng = random.Random(7)
    for trial in range(250):
        pieces = [_random_tight_word(g, rng.randrange(0, 5), rng)]
        for _ in range(rng.randrange(0, 3)):
            pieces.append(RHO if rng.random() < 0.5 else RHO_REV)
            pieces.append(_random_tight_word(g, rng.randrange(0, 5), rng))
        word = tighten_by_scan([e for p in pieces for e in p])
        d = mu_nu(f, word)
        via_mus_u = sum(little_lengths(f, m)[0] for m in d.mus)
        via_mus_pf = sum((little_lengths(f, m)[1] for m in d.mus), Fraction(0))
        assert adjusted_length(f, word, "u") == via_mus_u
        assert adjusted_length(f, word, "pf") == via_mus_pf


def test_adjusted_reverse_symmetric(geom):
    f = geom
    g = f.graph
    rng = random.Random(13)
    for trial in range(200):
        word = tighten_by_scan(
            [e for _ in range(2) for e in _random_tight_word(g, 6, rng) + RHO]
        )
        rev = tuple(-e for e in reversed(word))
        for tag in ("u", "pf"):
            assert adjusted_length(f, word, tag) == adjusted_length(f, rev, tag)


def test_two_gauges_sandwich(geom, tower):
    """Each adjusted length bounds the other within the comparison ratio."""
    for f in (geom, tower):
        k = constants(f, probe_len=3, probe_cap=50).comparison
        rng = random.Random(5)
        for trial in range(200):
            word = _random_tight_word(f.graph, rng.randrange(0, 12), rng)
            lu = adjusted_length(f, word, "u")
            lpf = adjusted_length(f, word, "pf")
            assert lu <= k * lpf
            assert lpf <= k * lu


def test_almost_additive_at_splits(geom):
    """Splitting a tight word at a vertex loses at most one straddling copy."""
    f = geom
    g = f.graph
    rng = random.Random(31)
    lu_rho, lpf_rho = little_lengths(f, RHO)
    for trial in range(120):
        word = tighten_by_scan(
            [e for p in (_random_tight_word(g, 5, rng), RHO, RHO) for e in p]
        )
        for i in range(len(word) + 1):
            left, right = word[:i], word[i:]
            for tag, lrho in (("u", lu_rho), ("pf", lpf_rho)):
                whole = adjusted_length(f, word, tag)
                split_sum = adjusted_length(f, left, tag) + adjusted_length(f, right, tag)
                assert split_sum - lrho <= whole <= split_sum


# -- constants ---------------------------------------------------------------


def test_constants_fib(fib):
    c = constants(fib, probe_len=8, probe_cap=20000, seed=1)
    assert abs(float(c.comparison) - PHI) < 1e-9
    assert c.slack_u == 0 and c.slack_pf == 0
    d, e = c.expansion
    assert abs(d - PHI) < 1e-9
    assert 0 <= e <= 8
    assert c.probe_exhaustive
    assert c.probe_words == 13120  # sum of 4 * 3**(L-1) for L = 1..8


def test_constants_probe_cap_falls_back_to_sampling(fib):
    c = constants(fib, probe_len=8, probe_cap=100, seed=2)
    assert not c.probe_exhaustive
    assert 0 < c.probe_words <= 100


def test_constants_geom(geom):
    c = constants(geom, probe_len=6, probe_cap=5000, seed=3)
    assert c.slack_u == 8
    assert c.slack_pf == 2 * little_lengths(geom, RHO)[1]
    assert abs(float(c.comparison) - PHI) < 1e-9
    d, e = c.expansion
    assert abs(d - PHI**2) < 1e-9
    assert e >= 0


# -- concatenation slack -----------------------------------------------------


def test_concatenation_pinned(geom):
    f = geom
    out = concatenation_check(f, RHO, (-1, -2), "u")
    assert isinstance(out, ConcatenationCheck)
    assert out.lhs == 2  # cancellation destroys the copy inside the left piece
    assert out.rhs == 0 + 2 + 8
    assert out.ok


def test_concatenation_seeded(geom):
    f = geom
    g = f.graph
    rng = random.Random(61)
    for trial in range(300):
        a = tighten_by_scan(_random_tight_word(g, rng.randrange(0, 6), rng) + RHO)
        b = tighten_by_scan(RHO_REV + _random_tight_word(g, rng.randrange(0, 6), rng))
        for tag in ("u", "pf"):
            assert concatenation_check(f, a, b, tag).ok


def test_concatenation_requires_composable():
    g = MarkedGraph(
        vertices=("u", "w"),
        edges={1: ("u", "u", 1), 2: ("u", "w", 1)},
        labels={1: "a", 2: "b"},
    )
    f = TopRep(g, {"u": "u", "w": "w"}, {1: (1,), 2: (2,)})
    with pytest.raises(GraphError, match="not composable"):
        concatenation_check(f, (2,), (2,), "u")
