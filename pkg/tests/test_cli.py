from pathlib import Path

import pytest

from spfim.cli import main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, body):
    path = tmp_path / "study.ini"
    path.write_text(body)
    return str(path)


def test_missing_config_is_a_config_error(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "absent.ini")]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_argument_is_a_config_error():
    assert main([]) == 2


def test_invalid_value_is_a_config_error(tmp_path):
    assert main(["--config", _write(tmp_path, "[experiment]\nkind = timing\nworkers = 0\n")]) == 2


def test_invalid_model_parameters_exit_code(tmp_path):
    body = "[experiment]\nkind = timing\n[model]\nname = mixture\ntheta = 2, 0, 1, 0, 1\n"
    assert main(["--config", _write(tmp_path, body), "--no-figures"]) == 2
    body = "[experiment]\nkind = timing\n[model]\nname = signal_plus_noise\nsigma = -1, 0, 0, 1, 0, 1\n"
    assert main(["--config", _write(tmp_path, body), "--no-figures"]) == 2


def test_failed_replicate_exit_code(tmp_path, capsys):
    # c = 0.5 moves a 0.01*I covariance far outside the positive definite cone
    body = ("[experiment]\nkind = timing\n[model]\nmu = 0, 0\nsigma = 0.01, 0, 0.01\n"
            "[estimator]\nc = 0.5\n[timing]\nn_values = 3\nreplicates = 10\n")
    with pytest.warns(UserWarning):
        assert main(["--config", _write(tmp_path, body), "--no-figures"]) == 1
    assert "ReplicateError" in capsys.readouterr().err


def test_run_writes_report_and_figures(tmp_path, capsys):
    body = ("[experiment]\nkind = variance_ratio\nseed = 4\n[model]\nn = 5\n"
            "[variance_ratio]\nn_values = 5, 10\nreplicates = 200\n")
    out = tmp_path / "res" / "vr"
    with pytest.warns(UserWarning):
        code = main(["--config", _write(tmp_path, body), "--out", str(out)])
    assert code == 0
    names = sorted(p.name for p in out.parent.iterdir())
    assert names == ["vr.csv", "vr_ratio_covariance.png", "vr_ratio_mean.png", "vr_series.csv"]
    assert "wrote" in capsys.readouterr().out


@pytest.mark.parametrize("kind,extra", [
    ("timing", "[timing]\nn_values = 4, 8\nreplicates = 20\n"),
    ("accuracy", "[accuracy]\nreplicates = 2\nM = 1\nN = 10\noracle_replicates = 200\n[model]\nn = 4\n"),
    ("mn_tradeoff", "[mn_tradeoff]\nbudget = 2\nreplicates = 20\n[model]\nn = 3\n"),
])
def test_every_study_runs_in_json(tmp_path, kind, extra):
    body = f"[experiment]\nkind = {kind}\n" + extra
    out = tmp_path / kind
    assert main(["--config", _write(tmp_path, body), "--out", str(out), "--format", "json"]) == 0
    assert (tmp_path / f"{kind}.json").exists()
    assert any(p.suffix == ".png" for p in tmp_path.iterdir())


@pytest.mark.parametrize("name", ["variance_ratio", "timing", "accuracy", "mn_tradeoff"])
def test_shipped_configs_parse(name):
    from spfim.config import load_config

    assert load_config(CONFIGS / f"{name}.ini").experiment == name
