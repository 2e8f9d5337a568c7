import json
import math

import numpy as np
import pytest

import mwlp
from mwlp import cli
from mwlp.config import KINDS, ExperimentConfig, parse_config
from mwlp.errors import ParseError, ValidationError
from mwlp.runner import Outcome, band_limited_family, build_report, on_grid, run_experiment


def test_defaults():
    cfg = parse_config("")
    assert cfg == ExperimentConfig()
    assert cfg.refine_J == cfg.J - 1
    assert cfg.to_dict()["J2"] == cfg.J - 1


def test_parses_values_and_comments():
    text = "# header\nkind = riesz   # trailing\nq = inf\nweight.a = 0.5, -0.3\nhomogeneous = no\n\nJ = 0x8\n"
    cfg = parse_config(text)
    assert cfg.kind == "riesz" and math.isinf(cfg.q) and cfg.J == 8
    assert cfg.weight_a == (0.5, -0.3) and cfg.homogeneous is False
    assert cfg.to_dict()["q"] == "inf"


def test_invalid_p_names_the_field():
    with pytest.raises(ValidationError) as err:
        parse_config("p = 0\n")
    assert err.value.fields == ["p"]


def test_validation_collects_every_violation():
    with pytest.raises(ValidationError) as err:
        parse_config("p = 0\nJ = 30\nn = 3\n")
    assert set(err.value.fields) == {"p", "J", "n"}


@pytest.mark.parametrize("text, line, needle", [
    ("J = 8\nfoo = 1\n", 2, "foo"),
    ("J = 8\n\nJ = 9\n", 3, "repeated"),
    ("p = two\n", 1, "p"),
    ("# c\nnot a pair\n", 2, "key=value"),
])
def test_parse_errors_cite_line_and_key(text, line, needle):
    with pytest.raises(ParseError) as err:
        parse_config(text)
    assert err.value.line == line
    assert needle in str(err.value) and f"line {line}" in str(err.value)


def test_overrides_apply_after_file():
    cfg = parse_config("seed = 3\nJ = 8\n", seed=7, J=None)
    assert cfg.seed == 7 and cfg.J == 8


def test_replace_validates():
    with pytest.raises(ValidationError):
        ExperimentConfig().replace(m=9)


def test_digest_tracks_content():
    a, b = parse_config("J = 8\n"), parse_config("J=8")
    assert a.digest() == b.digest()
    assert a.digest() != parse_config("J = 9\n").digest()


def test_band_limited_family_is_seeded_and_band_limited():
    a = band_limited_family(3, 1, 2, 5, seed=1)
    b = band_limited_family(3, 1, 2, 5, seed=1)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    f = on_grid(a[0], 8, 1)
    spec = np.fft.fft(f.values, axis=0)
    nu = np.abs(np.fft.fftfreq(256, 1 / 256))
    assert np.abs(spec[nu > 5]).max() <= 1e-10 * np.abs(spec).max()
    assert abs(f.component_means()).max() <= 1e-12


def small(kind, **kw):
    base = {"kind": kind, "J": 6, "trials": 2, "out": "unused"}
    if kind in ("reduce", "inequalities"):
        base.update(m=2, weight_model="rotated", weight_a=(0.5, -0.3))
    base.update(kw)
    return ExperimentConfig(**base)


def test_report_fields(tmp_path):
    status, rep = run_experiment(small("norms"), tmp_path)
    assert status == 0 and rep["pass"] is True
    assert rep["version"] == mwlp.__version__
    assert len(rep["config_hash"]) == 16
    assert {"jmin", "jmax", "homogeneous"} <= set(rep["truncation"])
    on_disk = json.loads((tmp_path / "norms.json").read_text())
    assert on_disk["config"]["J"] == 6
    assert (tmp_path / "norms_norms.csv").exists()


def test_equivalence_identity_ratios_are_one(tmp_path):
    _, rep = run_experiment(small("equivalence", J=7, alpha=0.5), tmp_path)
    assert rep["results"]["identity_check"] is True
    assert rep["results"]["identical_pipeline_deviation"] <= 1e-9


def test_riesz_round_trip(tmp_path):
    status, rep = run_experiment(small("riesz", J=10, beta=2.0), tmp_path)
    assert rep["results"]["roundtrip_error"] <= 1e-10
    assert status == 0


def test_build_report_marks_failure():
    rep = build_report(small("norms"), Outcome({"x": math.inf}, False))
    assert rep["pass"] is False and rep["results"]["x"] == "inf"


def write_cfg(tmp_path, text):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return p


def test_cli_success_and_determinism(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "J = 6\ntrials = 2\n")
    outs = []
    for _ in range(2):
        # same output directory: the resolved config, path included, is echoed in the report
        code = cli.main(["norms", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "4"])
        assert code == 0
        outs.append((tmp_path / "o" / "norms.json").read_bytes())
    assert outs[0] == outs[1]
    assert "norms: pass" in capsys.readouterr().out


def test_cli_bad_config_exits_one(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "p = 0\n")
    assert cli.main(["norms", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "p:" in capsys.readouterr().err
    assert cli.main(["norms", "--config", str(tmp_path / "missing.cfg")]) == 1


def test_cli_failed_checks_exit_two(tmp_path, monkeypatch):
    cfg = write_cfg(tmp_path, "J = 6\n")
    monkeypatch.setattr(cli, "run_experiment",
                        lambda c: (2, build_report(c, Outcome({}, False))))
    assert cli.main(["norms", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_cli_rejects_unknown_kind():
    with pytest.raises(SystemExit):
        cli.main(["plot"])
    assert "plot" not in KINDS


@pytest.mark.parametrize("kind", ["ap-check", "reduce", "wavelet", "sobolev"])
def test_every_kind_runs_on_a_small_grid(kind, tmp_path):
    status, rep = run_experiment(small(kind), tmp_path)
    assert status in (0, 2)
    assert rep["kind"] == kind and (tmp_path / f"{kind}.json").exists()
