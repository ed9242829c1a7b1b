"""End-to-end command dispatch: reports, exit codes, determinism."""

import json

import pytest

from ttlab import fixtures
from ttlab.cli import run
from ttlab.conetree import cone_distance, cone_qi_constants, tree_point
from ttlab.disintegration import coordinate_hom
from ttlab.document import canonical_text, digest
from ttlab.path_metrics import adjusted_length, little_lengths, mu_nu


def _run(capsys, argv):
    """Exit code plus the parsed report from the JSON line on stdout."""
    code = run(argv)
    out = capsys.readouterr().out.strip().splitlines()
    report = json.loads(out[-1]) if out and out[-1].startswith("{") else None
    return code, report


# -- loading and report envelope ----------------------------------------------


def test_validate_bundled_fixture(capsys):
    code, rep = _run(capsys, ["validate", "fib"])
    assert code == 0
    assert rep["command"] == "validate"
    assert rep["results"]["valid"] is True
    assert rep["results"]["strata"] == {"1": "EG"}
    assert rep["results"]["certified_periodic_path"] is None
    assert rep["fixture"]["name"] == "fib"
    assert rep["fixture"]["digest"] == digest(fixtures.load_document("fib"))
    assert rep["config"]["seed"] == 11 and rep["config"]["strict"] is True


def test_validate_reads_files_too(tmp_path, capsys):
    path = tmp_path / "copy.json"
    path.write_text(canonical_text(fixtures.load_document("geom")))
    code, rep = _run(capsys, ["validate", str(path)])
    assert code == 0
    assert rep["fixture"]["name"] == "copy"
    assert rep["fixture"]["digest"] == digest(fixtures.load_document("geom"))
    assert rep["results"]["certified_periodic_path"] == [-2, -1, 2, 1]


def test_validate_broken_document_is_a_verdict(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": 1}')
    code, rep = _run(capsys, ["validate", str(path)])
    assert code == 1
    assert rep["results"] == {"valid": False}
    assert rep["fixture"]["digest"] is None
    assert any("missing key 'graph'" in d for d in rep["counterexamples"])


def test_other_commands_treat_broken_documents_as_input_errors(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": 1}')
    assert run(["spectrum", str(path)]) == 2
    assert "invalid document" in capsys.readouterr().err


def test_missing_file_and_unknown_command(capsys):
    assert run(["validate", "/no/such/file.json"]) == 2
    with pytest.raises(SystemExit) as err:
        run(["frobnicate", "fib"])
    assert err.value.code == 2


def test_lenient_flag_downgrades_unknown_keys(tmp_path, capsys):
    doc = fixtures.load_document("fib")
    doc["comment"] = "scratch"
    path = tmp_path / "annotated.json"
    path.write_text(json.dumps(doc))
    code, rep = _run(capsys, ["validate", str(path)])
    assert code == 1  # strict is the default
    code, rep = _run(capsys, ["validate", str(path), "--lenient"])
    assert code == 0
    assert rep["config"]["strict"] is False
    assert any("comment" in w for w in rep["results"]["warnings"])


def test_json_out_matches_stdout_report(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _ = _run(capsys, ["spectrum", "tower", "--json-out", str(out)])
    assert code == 0
    code, rep = _run(capsys, ["spectrum", "tower"])
    assert json.loads(out.read_text()) == rep


def test_reports_are_byte_identical_across_runs(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert run(["metrics", "geom", "--probe", "40", "--json-out", str(p)]) == 0
    capsys.readouterr()
    assert paths[0].read_bytes() == paths[1].read_bytes()


# -- inspection commands -------------------------------------------------------


def test_spectrum_reports_the_stratum_table(capsys):
    code, rep = _run(capsys, ["spectrum", "tower"])
    assert code == 0
    table = rep["results"]["strata"]
    assert [table[k]["kind"] for k in "1234"] == [
        "NEG-fixed", "NEG-linear", "NEG-linear", "EG",
    ]
    assert table["2"]["twist_path"] == [1] and table["2"]["twist_coefficient"] == 1
    assert table["3"]["twist_coefficient"] == 2
    top = table["4"]
    assert abs(top["value"] - (1 + 5 ** 0.5) / 2) < 1e-9
    assert len(top["vector"]) == 2 and top["residual"] < 1e-10


def test_tighten_words_and_circuit_forms(capsys):
    code, rep = _run(capsys, ["tighten", "fib", "--word", "1,-1,2", "--word", "1,2"])
    assert code == 0
    rows = rep["results"]["paths"]
    assert rows[0]["tight"] == [2] and rows[0]["circuit"] == [2]
    assert rows[1]["tight"] == [1, 2]
    assert run(["tighten", "fib"]) == 2  # needs at least one word
    assert run(["tighten", "fib", "--word", "0"]) == 2


def test_metrics_word_table_matches_the_module(geom, capsys):
    word = "-2,-1,2,1,-2,-1,2,1,1"
    code, rep = _run(capsys, ["metrics", "geom", f"--word={word}"])
    assert code == 0
    w = tuple(int(x) for x in word.split(","))
    row = rep["results"]["paths"][0]
    lu, lpf = little_lengths(geom, w)
    assert row["little_u"] == lu and row["little_pf"] == str(lpf)
    assert row["copies"] == 2
    assert row["adjusted_u"] == int(adjusted_length(geom, w, "u"))
    assert row["adjusted_pf"] == str(adjusted_length(geom, w, "pf"))


def test_metrics_sweep_default_factor_is_clean(capsys):
    code, rep = _run(capsys, ["metrics", "geom", "--probe", "80"])
    assert code == 0
    assert rep["counterexamples"] == []
    assert rep["results"]["sandwich_checked"] > 0


def test_metrics_sweep_with_silly_factor_finds_counterexamples(capsys):
    # forcing the comparison factor to 1 must break the sandwich on geom
    code, rep = _run(capsys, ["metrics", "geom", "--probe", "60", "--mu", "1"])
    assert code == 1
    assert rep["counterexamples"]
    assert rep["results"]["sandwich_factor"] == "1"


def test_decompose_matches_the_module(geom, capsys):
    word = "1,-2,-1,2,1,-2,-1,2,1,2"
    code, rep = _run(capsys, ["decompose", "geom", f"--word={word}"])
    assert code == 0
    w = tuple(int(x) for x in word.split(","))
    dec = mu_nu(geom, w)
    row = rep["results"]["paths"][0]
    assert row["mus"] == [list(m) for m in dec.mus]
    assert row["exponents"] == list(dec.exponents)
    assert row["copies"] == dec.copies


def test_cone_dist_reports_the_route(geom, capsys):
    code, rep = _run(capsys, ["cone-dist", "geom", "--word", "1,2", "--word", "2,1"])
    assert code == 0
    route = cone_distance(geom, tree_point(geom, (1, 2)), tree_point(geom, (2, 1)))
    qi = cone_qi_constants(geom)
    assert rep["results"]["distance"] == str(route.d_star)
    assert rep["results"]["qi_factor"] == str(qi.k)
    assert rep["results"]["qi_offset"] == str(qi.c)
    assert run(["cone-dist", "geom", "--word", "1"]) == 2  # needs two


def test_classify_kind_strings(capsys):
    code, rep = _run(
        capsys,
        ["classify", "geom", "--word=-2,-1,2,1", "--word", "1"],
    )
    assert code == 0
    kinds = [r["kind"] for r in rep["results"]["elements"]]
    assert kinds == ["nielsen-axis", "loxodromic"]
    code, rep = _run(capsys, ["classify", "tower", "--word", "2"])
    assert rep["results"]["elements"][0]["kind"] == "elliptic"


# -- searches ------------------------------------------------------------------


def test_flare_special_verdicts(capsys):
    code, rep = _run(capsys, ["flare-special", "fib", "--nu", "1.2", "--probe", "5"])
    assert code == 0
    res = rep["results"]
    assert res["passed"] is True and res["steps"] == 1 and res["threshold"] == 25
    assert rep["config"]["nu"] == "1.2" and rep["config"]["probe"] == 5

    code, rep = _run(capsys, ["flare-special", "ident", "--nu", "1.2", "--probe", "4"])
    assert code == 1
    assert rep["results"]["passed"] is False
    assert rep["counterexamples"]  # worst violators listed per step


def test_flare_requires_the_factor(capsys):
    assert run(["flare", "fib"]) == 2
    assert run(["flare-special", "fib"]) == 2


def test_flare_general_smoke(capsys):
    code, rep = _run(
        capsys, ["flare", "duo", "--nu", "1.2", "--eta", "1", "--probe", "4"]
    )
    assert code == 0
    assert rep["results"]["passed"] is True
    assert rep["results"]["eta"] == 1


def test_suspend_window_report(capsys):
    code, rep = _run(capsys, ["suspend", "fib", "--radius", "3", "--levels", "0:2"])
    assert code == 0
    res = rep["results"]
    assert res["fiber_points"] == 53 and res["cone_points"] == 0
    assert res["vertices"] == 53  # per-fiber count; three levels stack it
    assert res["levels"] == [0, 2]
    assert abs(res["stretch"] - (1 + 5 ** 0.5) / 2) < 1e-12
    assert res["properness_gauge"]


def test_suspend_flaring_verdicts(capsys):
    code, rep = _run(
        capsys, ["suspend", "duo", "--radius", "4", "--levels", "0:2", "--nu", "1.2"]
    )
    assert code == 0
    assert rep["results"]["flaring"]["passed"] is True

    code, rep = _run(
        capsys, ["suspend", "fib", "--radius", "4", "--levels", "0:2", "--nu", "1.2"]
    )
    assert code == 1
    fl = rep["results"]["flaring"]
    assert fl["passed"] is False and fl["violations"] > 0
    assert rep["counterexamples"]  # violating triples, capped


def test_suspend_level_validation(capsys):
    assert run(["suspend", "fib", "--levels", "2:1"]) == 2
    assert run(["suspend", "fib", "--levels", "0:3", "--nu", "1.2"]) == 2


def test_disintegrate_structure_report(capsys):
    code, rep = _run(capsys, ["disintegrate", "tower_qe"])
    assert code == 0
    res = rep["results"]
    assert [b["strata"] for b in res["blocks"]] == [[2], [3], [4]]
    assert res["lattice"]["relations"] == [[-1, 2, -1]]
    assert res["lattice"]["basis"] == [[2, 1, 0], [1, 0, -1]]
    assert len(res["triples"]) == 1


def test_disintegrate_tuple_verdicts(tower_qe, capsys):
    code, rep = _run(capsys, ["disintegrate", "tower_qe", "--tuple", "2,1,0"])
    assert code == 0
    res = rep["results"]
    assert res["admissible"] is True and res["in_semigroup"] is True
    vec = coordinate_hom(tower_qe, (2, 1, 0))
    assert res["omega"] == [[i, v] for i, v in vec.omega]
    assert res["edge_images"]["4"]  # powered map materialized

    code, rep = _run(capsys, ["disintegrate", "tower_qe", "--tuple", "1,0,0"])
    assert code == 1
    assert rep["results"]["admissible"] is False
    assert rep["counterexamples"][0]["coefficients"] == [1, 2]

    # arity mismatches are input errors, not verdicts
    assert run(["disintegrate", "tower_qe", "--tuple", "1,1"]) == 2
    assert run(["disintegrate", "tower", "--tuple", "0,2,1"]) == 2

    # tower has no windows, hence no relations: every size-2 tuple passes
    code, rep = _run(capsys, ["disintegrate", "tower", "--tuple", "3,1"])
    assert code == 0 and rep["results"]["admissible"] is True
