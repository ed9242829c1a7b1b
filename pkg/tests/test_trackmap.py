import math
import random
from fractions import Fraction

import pytest

import ttlab.trackmap as tm
from ttlab.graphs import EdgePath, MarkedGraph, cyclic_tighten
from ttlab.trackmap import (
    MapError,
    NielsenCertificate,
    NielsenRefusal,
    TopRep,
    apply_map,
    apply_map_trunc,
    bounded_cancellation,
    classify_strata,
    eigenlength,
    is_fixed_circuit,
    pf_spectrum,
    turn_analysis,
    verify_nielsen,
)

from oracles import enumerate_tight_paths, fixed_path_search

PHI = (1 + math.sqrt(5)) / 2
LAM2 = PHI * PHI  # expansion of the squared map
RHO2 = (-2, -1, 2, 1)  # the periodic path of fib2, found by exhaustive search


def _rose(edge_images, strata=None, n=None):
    n = n or len(edge_images)
    strata = strata or {e: 1 for e in range(1, n + 1)}
    g = MarkedGraph(["v"], {e: ("v", "v", strata[e]) for e in range(1, n + 1)})
    return TopRep(g, {"v": "v"}, edge_images, base_vertex="v")


# -- spectra ---------------------------------------------------------------


def test_fib_transition_matrix_and_spectrum(fib):
    assert fib.transition_matrix(1) == ((1, 1), (1, 0))
    info = fib.strata()[1]
    assert info.kind == "EG"
    assert abs(info.pf.value - PHI) <= 1e-10 * PHI
    # frozen eigenvector (min entry 1): (phi, 1) on (a, b)
    assert info.pf.vector[1] == 1
    assert abs(float(info.pf.vector[0]) - PHI) <= 1e-9


def test_pf_spectrum_pinned_cases():
    single = pf_spectrum([[2]])
    assert single.value == pytest.approx(2.0, rel=1e-12)
    assert single.vector == (Fraction(1),)
    with pytest.raises(MapError, match="reducible"):
        pf_spectrum([[1, 0], [0, 1]])
    with pytest.raises(MapError, match="reducible"):
        pf_spectrum([[0]])
    perm = pf_spectrum([[0, 1], [1, 0]])
    assert perm.value == pytest.approx(1.0, rel=1e-10)
    assert perm.vector == (Fraction(1), Fraction(1))


def test_pf_residual_contract(fib, fib2, tower):
    for f in (fib, fib2, tower):
        info = f.strata()[f.graph.top]
        M = info.matrix
        v = info.pf.vector
        lam = Fraction(info.pf.value)
        n = len(v)
        resid = max(abs(sum(v[i] * M[i][j] for i in range(n)) - lam * v[j]) for j in range(n))
        assert resid <= Fraction(1, 10**10) * max(v)


def test_eigenlength_values(fib, fib2, tower, ident):
    el = eigenlength(fib)
    assert el[2] == 1 and abs(float(el[1]) - PHI) <= 1e-9
    el2 = fib2.eigenlengths()
    assert el2[2] == 1 and abs(float(el2[1]) - PHI) <= 1e-9  # lam2 - 1 = phi
    elt = tower.eigenlengths()
    assert elt[1] == 0 and elt[2] == 0 and elt[3] == 0
    assert elt[5] == 1 and abs(float(elt[4]) - PHI) <= 1e-9
    with pytest.raises(MapError, match="expanding top stratum"):
        eigenlength(ident)


def test_eigenlength_scales_under_map(fib, fib2, tower):
    for f in (fib, fib2, tower):
        el = f.eigenlengths()
        lam = f.strata()[f.graph.top].pf.value
        for e in f.graph.edge_ids:
            before = float(el[e])
            after = float(sum(el[abs(x)] for x in f.edge_image[e]))
            assert after == pytest.approx(lam * before, rel=1e-8, abs=1e-12)


# -- taxonomy ---------------------------------------------------------------


def test_tower_taxonomy(tower):
    kinds = {i: s.kind for i, s in tower.strata().items()}
    assert kinds == {1: "NEG-fixed", 2: "NEG-linear", 3: "NEG-linear", 4: "EG"}
    s2 = tower.strata()[2]
    assert s2.twist_path == (1,) and s2.twist_coefficient == 1
    s3 = tower.strata()[3]
    assert s3.twist_path == (1,) and s3.twist_coefficient == 2


def test_ident_taxonomy(ident):
    kinds = {i: s.kind for i, s in ident.strata().items()}
    assert kinds == {1: "NEG-fixed", 2: "NEG-fixed"}


def test_taxonomy_errors_name_the_stratum():
    f = _rose({1: [-1]})  # single edge, image does not start with the edge
    with pytest.raises(MapError, match="stratum 1"):
        classify_strata(f)
    f = _rose({1: [1, 1]})  # occurs twice in its own image: no category
    with pytest.raises(MapError, match="stratum 1"):
        classify_strata(f)
    f = _rose({1: [1], 2: [2]})  # 2x2 identity block: multi-edge reducible
    with pytest.raises(MapError, match="reducible"):
        classify_strata(f)
    f = _rose({1: [2], 2: [1]})  # irreducible permutation: not expanding
    with pytest.raises(MapError, match="not expanding"):
        classify_strata(f)


def test_superlinear_detection():
    # f(e) = e * (a b a~ b~): the suffix is a loop but not map-fixed
    f = _rose(
        {1: [1, 2], 2: [1], 3: [3, 1, 2, -1, -2]},
        strata={1: 1, 2: 1, 3: 2},
    )
    assert f.strata()[2].kind == "NEG-superlinear"


def test_linear_with_negative_coefficient():
    f = _rose({1: [1], 2: [2, -1, -1, -1]}, strata={1: 1, 2: 2})
    s = f.strata()[2]
    assert s.kind == "NEG-linear"
    assert s.twist_path == (1,) and s.twist_coefficient == -3


# -- map application ---------------------------------------------------------


def test_apply_map_pinned_examples(fib):
    assert apply_map(fib, (-1,), 1).edges == (-2, -1)
    assert apply_map(fib, (1,), 2).edges == (1, 2, 1)
    p = EdgePath((), "v")
    assert apply_map(fib, p, 5) == p


def test_apply_map_semigroup_property(fib, fib2, tower):
    rng = random.Random(23)
    for f in (fib, fib2, tower):
        words = list(enumerate_tight_paths(f.graph, 4))
        for _ in range(150):
            w = rng.choice(words)
            p = f.graph.path(w)
            j, k = rng.randrange(0, 4), rng.randrange(0, 4)
            assert apply_map(f, apply_map(f, p, j), k) == apply_map(f, p, j + k)


def test_apply_map_identity_is_k0(fib):
    for w in [(1,), (1, 2), (-2, -1, 2, 1)]:
        p = fib.graph.path(w)
        assert apply_map(fib, p, 0) == p


def test_bounded_cancellation_values(fib):
    assert bounded_cancellation(fib, 0) == 0
    assert bounded_cancellation(fib, 1) == 1
    # cooperative bound with max image length 2: c (2^k - 1)
    assert bounded_cancellation(fib, 2) == 3
    assert bounded_cancellation(fib, 3) == 7


def test_apply_map_trunc_subpath_contract(fib, fib2):
    rng = random.Random(5)
    for f in (fib, fib2):
        words = list(enumerate_tight_paths(f.graph, 6))
        for _ in range(200):
            w = rng.choice(words)
            k = rng.randrange(0, 3)
            full = apply_map(f, f.graph.path(w), k)
            trunc = apply_map_trunc(f, f.graph.path(w), k)
            t = bounded_cancellation(f, k)
            if len(full.edges) <= 2 * t:
                assert trunc.edges == ()
            else:
                assert trunc.edges == full.edges[t : len(full.edges) - t]


# -- turns -------------------------------------------------------------------


def test_fib_turns_frozen(fib):
    ta = turn_analysis(fib)
    assert ta.df == {1: 1, 2: 1, -1: -2, -2: -1}
    assert ta.illegal_top == frozenset({frozenset({1, 2})})
    assert ta.is_u_legal((1,))
    assert ta.is_u_legal(())
    assert ta.is_u_legal((1, 2))
    assert not ta.is_u_legal((-1, 2))  # crosses the illegal turn {a, b}
    assert not ta.is_u_legal((-2, 1))


def test_fib2_gates(fib2):
    ta = fib2.turns()
    assert ta.df == {1: 1, 2: 1, -1: -1, -2: -2}
    assert ta.illegal_top == frozenset({frozenset({1, 2})})


def test_legality_persists_under_iteration(fib, fib2):
    for f in (fib, fib2):
        ta = f.turns()
        for w in enumerate_tight_paths(f.graph, 5):
            if ta.is_u_legal(w):
                img = apply_map(f, f.graph.path(w), 1)
                assert ta.is_u_legal(img.edges)


# -- periodic paths -----------------------------------------------------------


def test_exhaustive_search_certifies_fib2(fib2):
    found = fixed_path_search(tm, fib2, 6)
    # every fixed path up to length 6 is the periodic path or its reverse
    assert set(found) == {RHO2, (-1, -2, 1, 2)}
    cert = verify_nielsen(fib2, RHO2)
    assert isinstance(cert, NielsenCertificate)
    assert cert.split == 2
    assert cert.closed
    assert cert.alpha.edges == (-2, -1) and cert.beta.edges == (2, 1)
    assert cert.endpoint_in_lower == (False, False)
    lengths = fib2.eigenlengths()
    half = sum(lengths[abs(e)] for e in cert.alpha.edges)
    whole = sum(lengths[abs(e)] for e in RHO2)
    assert 2 * half == whole
    assert abs(float(whole) - 2 * LAM2) <= 1e-8


def test_geom_declares_the_certified_path(geom):
    assert geom.nielsen is not None
    word, split = geom.nielsen
    cert = verify_nielsen(geom, word, split)
    assert isinstance(cert, NielsenCertificate)
    assert cert.closed


def test_nielsen_refusals_name_first_failed_clause(fib2):
    r = verify_nielsen(fib2, (1,))
    assert isinstance(r, NielsenRefusal) and r.clause == "fixed"
    # fixed but crosses two illegal turns: the doubled periodic path
    r = verify_nielsen(fib2, RHO2 + RHO2)
    assert isinstance(r, NielsenRefusal) and r.clause == "illegal-turn-count"
    r = verify_nielsen(fib2, RHO2, split=1)
    assert isinstance(r, NielsenRefusal) and r.clause == "illegal-turn-count"
    r = verify_nielsen(fib2, ())
    assert isinstance(r, NielsenRefusal) and r.clause == "fixed"


def test_certificate_implies_fixed_for_small_powers(geom):
    word, _ = geom.nielsen
    p = geom.graph.path(word)
    for k in range(1, 6):
        assert apply_map(geom, p, k) == p


def test_is_fixed_circuit(geom, fib, ident):
    rho_circ = cyclic_tighten(geom.graph, RHO2)
    rep = is_fixed_circuit(geom, rho_circ)
    assert rep.fixed and rep.terms == (("rho", 1),)
    rep = is_fixed_circuit(fib, cyclic_tighten(fib.graph, (1,)))
    assert not rep.fixed and rep.terms is None
    rep = is_fixed_circuit(ident, cyclic_tighten(ident.graph, (1,)))
    assert rep.fixed and rep.terms == (("edge", 1),)


# -- validation ----------------------------------------------------------------


def test_fixture_reps_validate_clean(fib, fib2, geom, tower, tower_qe, ident):
    for f in (fib, fib2, geom, tower, tower_qe, ident):
        assert f.validate() == []


def test_validate_catches_breakage():
    g = MarkedGraph(["v"], {1: ("v", "v", 1), 2: ("v", "v", 2)})
    f = TopRep(g, {"v": "v"}, {1: (1, 2), 2: (2,)})  # lower edge crossing higher stratum
    assert any("crosses higher stratum" in m for m in f.validate())
    f = TopRep(g, {"v": "v"}, {1: (1, -1)})
    msgs = f.validate()
    assert any("not tight" in m for m in msgs)
    assert any("no image" in m for m in msgs)


def test_reversal_equivariance_is_structural(fib2):
    for e in fib2.graph.edge_ids:
        assert fib2.image_of(-e) == tuple(-x for x in reversed(fib2.image_of(e)))
