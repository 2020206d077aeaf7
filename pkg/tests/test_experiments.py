import math

import numpy as np
import pytest

from spfim import experiments as ex
from spfim.config import apply_overrides, parse_config
from spfim.errors import ConfigError
from spfim.report import parse_csv, report_from_json, report_to_csv, report_to_json, write_report


def _cfg(kind, body="", seed=3):
    return parse_config(f"[experiment]\nkind = {kind}\nseed = {seed}\n{body}")


VR_BODY = "[model]\nn = 6\n[variance_ratio]\nn_values = 6, 12\nreplicates = 400\n"


@pytest.fixture(scope="module")
def vr_report():
    with pytest.warns(UserWarning):
        return ex.run_variance_ratio(_cfg("variance_ratio", VR_BODY))


def test_variance_ratio_header_and_ratios(vr_report):
    assert vr_report.columns == ["entry", "method", "variance", "ratio", "n", "seed"]
    assert len(vr_report.rows) == 2 * 9 * 2
    by_key = {(r["n"], r["entry"], r["method"]): r for r in vr_report.rows}
    for (n, j, method), r in by_key.items():
        q = by_key[(n, j, "independent")]["variance"] / by_key[(n, j, "standard")]["variance"]
        assert r["ratio"] == q
    assert set(vr_report.summary["loglog_slope"]) == set(vr_report.summary["parameter_names"])


def test_variance_ratio_rerun_is_identical(vr_report):
    with pytest.warns(UserWarning):
        again = ex.run_variance_ratio(_cfg("variance_ratio", VR_BODY))
    strip = lambda text: [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert strip(report_to_csv(again)) == strip(report_to_csv(vr_report))


def test_csv_and_json_round_trip(vr_report, tmp_path):
    cols, rows = parse_csv(report_to_csv(vr_report))
    assert cols == vr_report.columns
    assert rows == vr_report.rows
    back = report_from_json(report_to_json(vr_report))
    assert back.rows == vr_report.rows
    assert back.series == vr_report.series
    paths = write_report(vr_report, str(tmp_path / "vr"), "csv")
    assert [p.name for p in paths] == ["vr.csv", "vr_series.csv"]
    assert paths[0].read_text().splitlines()[0] == "entry,method,variance,ratio,n,seed"


def test_json_keeps_infinite_values():
    rep = ex.ExperimentReport("timing", ["x"], [{"x": math.inf}], {})
    assert '"inf"' in report_to_json(rep)
    assert report_from_json(report_to_json(rep)).rows[0]["x"] == math.inf


def test_quadratic_sentinel_ratio():
    body = "[model]\nname = quadratic\na = 2, 0, 3\nn = 4\n[variance_ratio]\nreplicates = 20\n"
    with pytest.warns(UserWarning):
        rep = ex.run_variance_ratio(_cfg("variance_ratio", body))
    assert {r["ratio"] for r in rep.rows} == {1.0}
    assert {r["variance"] for r in rep.rows} == {0.0}


def test_variance_ratio_helpers():
    np.testing.assert_array_equal(ex.variance_ratio([0.0, 1.0, 2.0], [0.0, 0.0, 4.0]), [1.0, np.inf, 0.5])
    assert ex.loglog_slope([10, 100], [1.0, 0.1]) == pytest.approx(-1.0)
    x = np.random.default_rng(0).standard_normal((200_000, 1))
    s2, se = ex.variance_std_error(x)
    # normal data: se of the sample variance is sqrt(2/R)
    assert se[0] == pytest.approx(np.sqrt(2 / 200_000), rel=0.03)
    assert abs(s2[0] - 1) < 4 * se[0]


def test_divisor_pairs():
    assert ex.divisor_pairs(16) == [(1, 16), (2, 8), (4, 4), (8, 2), (16, 1)]
    assert ex.divisor_pairs(1) == [(1, 1)]
    with pytest.raises(ValueError):
        ex.divisor_pairs(0)


def test_mn_tradeoff_quadratic_is_zero_on_diagonal():
    body = "[model]\nname = quadratic\na = 2, 0, 3\n[mn_tradeoff]\nbudget = 4\nreplicates = 30\n"
    rep = ex.run_mn_tradeoff(_cfg("mn_tradeoff", body))
    assert rep.columns == ["row", "col", "M", "N", "variance", "std_error", "seed"]
    assert sorted({r["M"] for r in rep.rows}) == [1, 2, 4]
    assert all(r["variance"] == 0.0 for r in rep.rows if r["row"] == r["col"])


def test_accuracy_with_exact_truth_on_quadratic():
    body = "[model]\nname = quadratic\na = 2.5\nn = 3\n[accuracy]\nreplicates = 3\nM = 1\nN = 5\n"
    cfg = _cfg("accuracy", body)
    rep = ex.run_accuracy(cfg, truth=ex.build_model(cfg).analytic_fim())
    assert [r["mean_relative_error"] for r in rep.rows] == pytest.approx([0.0, 0.0], abs=1e-12)
    assert rep.rows[0]["error_ratio_indep_over_basic"] == 1.0


def test_timing_columns():
    body = "[model]\nname = mixture\n[timing]\nn_values = 5\nreplicates = 50\n"
    rep = ex.run_timing(_cfg("timing", body))
    assert rep.columns == ["n", "method", "wall_time_seconds", "time_ratio_basic_over_indep", "seed"]
    assert all(r["wall_time_seconds"] > 0 for r in rep.rows)


def test_seed_changes_results():
    body = "[model]\nname = mixture\nn = 5\n[mn_tradeoff]\nbudget = 2\nreplicates = 50\n"
    a = ex.run_mn_tradeoff(_cfg("mn_tradeoff", body, seed=1))
    b = ex.run_mn_tradeoff(_cfg("mn_tradeoff", body, seed=2))
    assert [r["variance"] for r in a.rows] != [r["variance"] for r in b.rows]


class TestConfig:
    def test_defaults(self):
        cfg = _cfg("accuracy")
        assert cfg.model.name == "mixture"
        assert (cfg.M, cfg.N, cfg.replicates) == (2, 4000, 50)

    @pytest.mark.parametrize("text", [
        "[experiment]\nkind = nothing\n",
        "[experiment]\nkind = timing\nseed = abc\n",
        "[experiment]\nkind = timing\n[estimator]\nc = -1\n",
        "[experiment]\nkind = timing\n[estimator]\nperturbation = segmented_uniform\na = 0\n",
        "[experiment]\nkind = mn_tradeoff\n[mn_tradeoff]\nbudget = 0\n",
        "no sections at all",
        "[model]\nname = mixture\n",
    ])
    def test_bad_configs(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_bad_model_parameters_surface_as_config_errors(self):
        cfg = _cfg("timing", "[model]\nname = mixture\ntheta = 1.5, 0, 1, 0, 1\n")
        with pytest.raises(ConfigError):
            ex.build_model(cfg)

    def test_override_precedence(self):
        env = {"SPFIM_WORKERS": "3", "SPFIM_OUTPUT_DIR": "/tmp/x"}
        cfg = apply_overrides(_cfg("timing"), environ=env)
        assert cfg.workers == 3 and cfg.output == "/tmp/x/timing"
        cfg = apply_overrides(_cfg("timing"), workers=2, out="o/p", environ=env)
        assert cfg.workers == 2 and cfg.output == "o/p"
        with pytest.raises(ConfigError):
            apply_overrides(_cfg("timing"), environ={"SPFIM_WORKERS": "many"})
