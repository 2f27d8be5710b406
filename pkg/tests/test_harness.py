import json
import math

import numpy as np
import pytest

from extremeabc.abc import PosteriorSample, Stage
from extremeabc.corrfuncs import CorrelationModel, Family
from extremeabc.design import BlockMaximaPanel, MarginScale, SpatialDesign
from extremeabc.errors import ParameterDomainError, ParseError, SchemaError
from extremeabc.harness import io
from extremeabc.harness.cli import main
from extremeabc.harness.config import ModelSpec, StudyConfig, config_from_dict, load_config
from extremeabc.harness.evaluation import band_coverage, correlation_reach, mse_curve
from extremeabc.harness.exposure import predict_exposure
from extremeabc.harness.study import run_simulation_study
from extremeabc.margins import GevParams, UNIT_FRECHET
from extremeabc.maxstable import simulate_schlather

MODEL_C = CorrelationModel("whittle-matern", 1.0, 3.0)


# ---------------------------------------------------------------- io

def test_panel_roundtrip_is_exact(tmp_path):
    d = SpatialDesign.uniform_square(5, np.random.default_rng(0))
    p = simulate_schlather(d, MODEL_C, 30, 1)
    io.save_sites(d, tmp_path / "sites.csv")
    io.save_panel(p, tmp_path / "panel.csv")
    d2 = io.load_sites(tmp_path / "sites.csv")
    assert d2 == d
    p2 = io.load_panel(tmp_path / "panel.csv", d2)
    assert np.array_equal(p2.values, p.values) and p2.scale is MarginScale.UNIT_FRECHET
    assert p2.meta["seed"] == [1]


def test_panel_columns_follow_the_design(tmp_path):
    d = SpatialDesign([[0, 0], [1, 0]], ids=["a", "b"])
    (tmp_path / "p.csv").write_text("b,a\n2,1\n4,3\n")
    assert io.load_panel(tmp_path / "p.csv", d).values.tolist() == [[1, 2], [3, 4]]


def test_duplicate_site_id(tmp_path):
    (tmp_path / "s.csv").write_text("id,x,y\na,0,0\nb,1,1\na,2,2\n")
    with pytest.raises(SchemaError):
        io.load_sites(tmp_path / "s.csv")


def test_parse_error_names_the_row(tmp_path):
    d = SpatialDesign([[0, 0], [1, 0]])
    lines = ["s1,s2"] + [f"{i},{i + 1}" for i in range(1, 11)]
    lines[7] = "7,oops"
    (tmp_path / "p.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError, match="row 7"):
        io.load_panel(tmp_path / "p.csv", d)


def test_header_mismatch(tmp_path):
    d = SpatialDesign([[0, 0], [1, 0]])
    (tmp_path / "p.csv").write_text("s1,zz\n1,2\n")
    with pytest.raises(SchemaError):
        io.load_panel(tmp_path / "p.csv", d)


def test_posterior_roundtrip(tmp_path):
    s = PosteriorSample([[1.0, 2.0], [3.0, 0.5]], [0.1, 0.2], [0.25, 0.75], 0.2, 0.01,
                        Stage.ADAPTIVE, Family.CAUCHY, provenance={"family": "cauchy"})
    io.save_posterior(s, tmp_path / "post.csv")
    back = io.load_posterior(tmp_path / "post.csv")
    assert np.array_equal(back.phi, s.phi) and np.array_equal(back.weights, s.weights)
    assert back.family is Family.CAUCHY and back.stage is Stage.ADAPTIVE


def test_fits_and_weights(tmp_path):
    d = SpatialDesign([[0, 0], [1, 0]], ids=["a", "b"])
    (tmp_path / "f.csv").write_text("site_id,mu,sigma,xi\nb,1,2,0.1\na,0,1,0\n")
    fits = io.load_fits(tmp_path / "f.csv", d)
    assert fits[0] == GevParams(0, 1, 0) and fits[1] == GevParams(1, 2, 0.1)
    (tmp_path / "w.csv").write_text("id,weight\na,3\n")
    with pytest.raises(SchemaError):
        io.load_weights(tmp_path / "w.csv", d)


# ---------------------------------------------------------------- config

def test_config_parsing(tmp_path):
    (tmp_path / "c.toml").write_text(
        'seed = 5\nreplicates = 2\nestimators = ["mcle"]\n'
        '[[models]]\nlabel = "C"\nc2 = 1.0\nnu = 3.0\n[abc]\nclusters = 20\n')
    cfg = load_config(tmp_path / "c.toml")
    assert cfg.seed == 5 and cfg.estimators == ("mcle",) and cfg.abc.clusters == 20
    assert cfg.models[0].model == MODEL_C


@pytest.mark.parametrize("data", [
    {"models": [{"c2": 1, "nu": 1}], "seeds": 3},
    {"models": [{"c2": 1, "nu": 1, "shape": 2}]},
    {"models": [{"c2": 1, "nu": 1}], "abc": {"draws": 5}},
    {"models": [{"c2": 1}]},
    {"models": [{"c2": 1, "nu": 1}], "estimators": ["kriging"]},
    {"models": []},
])
def test_config_rejects_bad_keys(data):
    with pytest.raises(SchemaError):
        config_from_dict(data)


# ---------------------------------------------------------------- evaluation

def test_mse_examples():
    assert mse_curve(MODEL_C, MODEL_C).mse == 0.0
    res = mse_curve(MODEL_C, lambda h: MODEL_C(h) + 0.01)
    assert res.mse == pytest.approx(1e-4 * res.upper, rel=1e-9)
    assert MODEL_C(res.upper) == pytest.approx(0.1, abs=1e-8)
    assert not res.capped


def test_mse_caps_at_diameter():
    res = mse_curve(CorrelationModel("whittle-matern", 5.0, 3.0), lambda h: np.zeros_like(h), 2.0)
    assert res.capped and res.upper == 2.0 and res.mse > 0


def test_reach_matches_exponential():
    h, capped = correlation_reach(CorrelationModel("whittle-matern", 2.0, 0.5))
    assert h == pytest.approx(2.0 * math.log(10), abs=1e-7) and not capped


def test_band_coverage():
    inside = lambda h: (MODEL_C(h) - 0.1, MODEL_C(h) + 0.1)
    assert band_coverage(MODEL_C, inside, 3.0) == 1.0
    # band only covers the first half of the grid
    half = lambda h: (np.where(h <= 1.5, 0.0, 2.0), np.full_like(h, 1.0))
    assert band_coverage(MODEL_C, half, 3.0, n_grid=101) == pytest.approx(51 / 101)


# ---------------------------------------------------------------- study

def _tiny_config(**kw):
    base = dict(models=(ModelSpec("C", "whittle-matern", 1.0, 3.0),), seed=3, n_blocks=20,
                sites=5, replicates=1, estimators=("mcle",))
    base.update(kw)
    return StudyConfig(**base)


def test_smallest_study_gives_one_row():
    rep = run_simulation_study(_tiny_config())
    assert len(rep.rows) == 1 and rep.rows[0]["mse"] >= 0
    assert rep.summary[0]["runs"] == 1 and rep.summary[0]["se"] is None


def test_study_is_thread_independent():
    from extremeabc.harness.config import AbcSettings
    cfg = _tiny_config(replicates=2, estimators=("triplet", "mcle"),
                       abc=AbcSettings(iterations=300, percentile=0.15, clusters=4))
    a = run_simulation_study(cfg, threads=1).as_dict()
    assert all("coverage" in r for r in a["rows"] if r["estimator"] == "triplet")
    b = run_simulation_study(cfg, threads=3).as_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_study_records_failures_and_continues():
    from extremeabc.harness.config import AbcSettings
    # 99 iterations is below the rejection sampler's minimum
    cfg = _tiny_config(estimators=("pairwise", "mcle"), abc=AbcSettings(iterations=99))
    rep = run_simulation_study(cfg)
    assert rep.rows[0]["mse"] is None and "ParameterDomainError" in rep.rows[0]["error"]
    assert rep.rows[1]["mse"] is not None
    assert rep.summary[0]["failures"] == 1


# ---------------------------------------------------------------- exposure

def _posterior():
    return PosteriorSample([[1.0, 1.0], [2.0, 1.5]], [0, 0], [0.5, 0.5], 0.0, 0.1,
                           Stage.REJECTION, Family.WHITTLE_MATERN)


def test_exposure_saturation_cases():
    d = SpatialDesign.uniform_square(6, np.random.default_rng(1))
    margins = [GevParams(20, 3, -0.1)] * 6
    r = predict_exposure(_posterior(), d, margins, np.ones(6), [-np.inf, np.inf], 50, seed=2)
    assert np.all(r.totals[:, 0] == 6) and np.all(r.totals[:, 1] == 0)
    # minima: data are negated, so simulated minima sit near -20; nothing lies below -1e6
    r = predict_exposure(_posterior(), d, margins, np.ones(6), [-1e6], 50, minima=True, seed=2)
    assert np.all(r.totals == 0)


def test_exposure_monotone_and_intermediate():
    d = SpatialDesign.uniform_square(8, np.random.default_rng(2))
    margins = [UNIT_FRECHET] * 8
    t = [0.5, 1.0, 2.0, 4.0]
    r = predict_exposure(_posterior(), d, margins, np.ones(8), t, 300, seed=3)
    assert np.all(np.diff(r.totals, axis=1) <= 0)
    frac = r.intermediate_fraction()
    assert np.all((frac > 0) & (frac < 1))
    rm = predict_exposure(_posterior(), d, margins, np.ones(8), [-4.0, -2.0, -1.0], 300,
                          minima=True, seed=3)
    assert np.all(np.diff(rm.totals, axis=1) >= 0)


def test_exposure_checks_inputs():
    d = SpatialDesign.uniform_square(3, np.random.default_rng(2))
    with pytest.raises(ParameterDomainError):
        predict_exposure(_posterior(), d, [UNIT_FRECHET] * 2, np.ones(3), [1.0], 5)
    with pytest.raises(ParameterDomainError):
        predict_exposure(_posterior(), d, [UNIT_FRECHET] * 3, -np.ones(3), [1.0], 5)


# ---------------------------------------------------------------- cli

def test_cli_pipeline(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["simulate", "--n-sites", "6", "--c2", "1", "--nu", "1", "--blocks", "30",
                 "--seed", "4", "--output", out]) == 0
    sites, panel = str(tmp_path / "sites.csv"), str(tmp_path / "panel.csv")
    assert main(["summarize", "--sites", sites, "--panel", panel, "--clusters", "5",
                 "--output", out]) == 0
    assert main(["abc", "--sites", sites, "--panel", panel, "--clusters", "5",
                 "--iterations", "200", "--percentile", "0.1", "--output", out,
                 "--threads", "2"]) == 0
    assert main(["evaluate", "--c2", "1", "--nu", "1", "--posterior",
                 str(tmp_path / "posterior.csv"), "--output", out]) == 0
    ev = json.loads((tmp_path / "evaluation.json").read_text())
    assert ev["mse"] >= 0
    raw = tmp_path / "raw.csv"
    z = io.load_panel(panel, io.load_sites(sites)).values
    np.savetxt(raw, 10 + 2 * np.log(z), delimiter=",", header=",".join(f"s{i}" for i in range(1, 7)),
               comments="")
    assert main(["transform", "--sites", sites, "--panel", str(raw), "--output", out]) == 0
    assert main(["predict", "--posterior", str(tmp_path / "posterior.csv"), "--sites", sites,
                 "--fits", str(tmp_path / "fits.csv"), "--thresholds", "9,11,13", "--sims", "40",
                 "--output", out]) == 0
    assert (tmp_path / "exposure.csv").exists()


def test_cli_exit_codes(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--c2", "1"])
    assert info.value.code == 2
    assert main(["mcle", "--sites", str(tmp_path / "missing.csv"), "--panel", "x.csv"]) == 3
    (tmp_path / "s.csv").write_text("id,x,y\na,0,0\na,1,1\n")
    assert main(["mcle", "--sites", str(tmp_path / "s.csv"), "--panel", "x.csv"]) == 3
    # a constant raw panel cannot be fitted: numerical failure
    (tmp_path / "t.csv").write_text("id,x,y\na,0,0\nb,1,1\n")
    (tmp_path / "raw.csv").write_text("a,b\n" + "1,2\n" * 30)
    assert main(["transform", "--sites", str(tmp_path / "t.csv"), "--panel",
                 str(tmp_path / "raw.csv"), "--output", str(tmp_path)]) == 4
