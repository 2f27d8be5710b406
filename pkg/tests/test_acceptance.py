"""End-to-end acceptance checks, one marker per criterion.

Run ``pytest tests/test_acceptance.py -v`` to see a PASS/FAIL line per
criterion in the terminal summary. Stochastic checks use fixed seeds; the
desk-scale posterior study (criteria 7 and 8) takes roughly five minutes.
"""
import json
import math

import numpy as np
import pytest
from scipy import stats

import oracles
from extremeabc.abc import abc_adaptive, abc_rejection
from extremeabc.corrfuncs import CorrelationModel, correlation, extremal_coeff_pair
from extremeabc.design import SpatialDesign
from extremeabc.harness.config import AbcSettings, ModelSpec, StudyConfig
from extremeabc.harness.study import run_simulation_study
from extremeabc.maxstable import bivariate_cdf, simulate_schlather
from extremeabc.mcle import pair_logdensity
from extremeabc.summaries import (Summarizer, madograms, triangle_distance, ward_cluster)

MODEL_B = CorrelationModel("whittle-matern", 1.0, 1.0)
MODEL_C = CorrelationModel("whittle-matern", 1.0, 3.0)
STUDY_SEED = 2024


def _theta(rho):
    return 1.0 + np.sqrt((1.0 - rho) / 2.0)


# ------------------------------------------------------------------ 1

@pytest.mark.criterion(1)
def test_closed_forms(record_property):
    tol = 1e-9
    assert abs(bivariate_cdf(1.0, 1.0, 0.0) - 0.1813898346) < 1e-9
    for z1, z2, rho in ((1.0, 1.0, 0.0), (0.4, 3.0, 0.7), (8.0, 2.0, -0.3)):
        ref = float(oracles.schlather_cdf_mp(z1, z2, rho))
        assert abs(bivariate_cdf(z1, z2, rho) - ref) < tol
    assert abs(bivariate_cdf(1.0, 1.0, 0.0) - math.exp(-(1 + math.sqrt(0.5)))) < tol
    assert abs(extremal_coeff_pair(0.0) - (1 + math.sqrt(0.5))) < tol
    assert extremal_coeff_pair(1.0) == 1.0 and extremal_coeff_pair(-1.0) == 2.0
    z = np.geomspace(0.1, 50, 25)
    # complete dependence and independence limits
    np.testing.assert_allclose(bivariate_cdf(z, z, 1.0), np.exp(-1 / z), rtol=0, atol=tol)
    np.testing.assert_allclose(bivariate_cdf(z, 2 * z, -1.0), np.exp(-1 / z - 1 / (2 * z)),
                               rtol=0, atol=tol)
    # F(z, z) = exp(-theta / z)
    for rho in (-0.5, 0.0, 0.4, 0.95):
        np.testing.assert_allclose(-z * np.log(bivariate_cdf(z, z, rho)),
                                   extremal_coeff_pair(rho), rtol=0, atol=tol)
    h = np.linspace(0.0, 15.0, 301)
    x = h / 2.0
    np.testing.assert_allclose(CorrelationModel("whittle-matern", 2.0, 0.5)(h), np.exp(-x),
                               rtol=0, atol=tol)
    np.testing.assert_allclose(CorrelationModel("whittle-matern", 2.0, 1.5)(h),
                               (1 + x) * np.exp(-x), rtol=0, atol=tol)
    np.testing.assert_allclose(CorrelationModel("cauchy", 2.0, 1.5)(h), (1 + x * x) ** -1.5,
                               rtol=0, atol=tol)
    np.testing.assert_allclose(CorrelationModel("powered-exponential", 2.0, 1.5)(h),
                               np.exp(-(x ** 1.5)), rtol=0, atol=tol)
    assert correlation(CorrelationModel("cauchy", 2.0, 1.0, c1=0.8), 0.0) == 0.8
    record_property("detail", "all identities within 1e-9")


# ------------------------------------------------------------------ 2

@pytest.mark.criterion(2)
def test_density_against_difference_oracle(record_property):
    zs = np.geomspace(0.2, 20.0, 9)
    worst = 0.0
    for rho in (-0.5, 0.0, 0.5, 0.9):
        for z1 in zs:
            for z2 in zs:
                ref = oracles.mixed_partial_fd(z1, z2, rho)
                worst = max(worst, abs(math.exp(pair_logdensity(z1, z2, rho)) / ref - 1))
    record_property("detail", f"max relative error {worst:.2e} over 324 grid points")
    assert worst < 1e-6


# ------------------------------------------------------------------ 3

@pytest.mark.criterion(3)
def test_simulator_margins_and_dependence(record_property):
    hs = np.array([0.5, 1.0, 2.0, 3.0, 5.0])
    d = SpatialDesign(np.c_[np.r_[0.0, hs], np.zeros(6)])
    z = simulate_schlather(d, MODEL_B, 100_000, (STUDY_SEED, 3, 0)).values
    ks = max(stats.kstest(col, stats.invweibull(1).cdf).statistic for col in z.T)
    theta_hat = 1.0 / np.mean(1.0 / np.maximum(z[:, :1], z[:, 1:]), axis=0)
    dev = np.max(np.abs(theta_hat - _theta(MODEL_B(hs))))
    pooled = simulate_schlather(d, MODEL_B, 50_000, (STUDY_SEED, 3, 1)).values
    zmax = pooled.reshape(10_000, 5, 6).max(axis=1) / 5.0
    ks_max = max(stats.kstest(col, stats.invweibull(1).cdf).statistic for col in zmax.T)
    record_property("detail", f"margin KS {ks:.4f}, max |theta dev| {dev:.4f}, "
                              f"max-stability KS {ks_max:.4f}")
    assert ks < 0.01
    assert dev < 0.03
    assert ks_max < 0.02


# ------------------------------------------------------------------ 4

@pytest.mark.criterion(4)
def test_madogram_relation(record_property):
    # regular line of sites; every pair at the same lag is averaged
    spacing, n_sites = 0.25, 41
    d = SpatialDesign(np.c_[np.arange(n_sites) * spacing, np.zeros(n_sites)])
    g = np.log(simulate_schlather(d, MODEL_B, 5000, (STUDY_SEED, 4)).values)
    worst = 0.0
    for k in (1, 2, 4, 8, 12, 20):
        pairs = np.array([(i, i + k) for i in range(n_sites - k)], dtype=np.intp)
        m_hat = madograms(g, pairs).mean()
        worst = max(worst, abs(m_hat - math.log(_theta(MODEL_B(k * spacing)))))
    record_property("detail", f"max |m - log theta| {worst:.4f}")
    assert worst < 0.02


# ------------------------------------------------------------------ 5 and 6

@pytest.fixture(scope="module")
def small_problem():
    d = SpatialDesign.uniform_square(5, np.random.default_rng(STUDY_SEED))
    summ = Summarizer("triplet", d, K=3)
    observed = summ(simulate_schlather(d, MODEL_B, 20, (STUDY_SEED, 5)))
    return d, summ, observed


@pytest.mark.criterion(5)
def test_prior_recovered_when_everything_is_accepted(small_problem, record_property):
    d, summ, observed = small_problem
    post = abc_rejection(observed, d, 20, iterations=10_000, percentile=1.0, seed=STUDY_SEED,
                         summarizer=summ)
    ks = [stats.kstest(post.phi[:, j], "uniform", args=(0.0, 10.0)).statistic for j in (0, 1)]
    record_property("detail", f"KS c2 {ks[0]:.4f}, nu {ks[1]:.4f}")
    assert len(post) == 10_000
    assert max(ks) < 0.02


@pytest.mark.criterion(6)
def test_exact_acceptance_counts(small_problem, record_property):
    d, summ, observed = small_problem
    rej = abc_rejection(observed, d, 20, iterations=10_000, percentile=0.02, seed=STUDY_SEED,
                        summarizer=summ)
    ada = abc_adaptive(observed, d, 20, iterations1=10_000, iterations2=1000, percentile=0.05,
                       seed=STUDY_SEED, summarizer=summ)
    record_property("detail", f"rejection {len(rej)}, adaptive stage 1 {len(ada.stage1)}")
    assert len(rej) == 200
    assert len(ada.stage1) == 500


# ------------------------------------------------------------------ 7 and 8

@pytest.fixture(scope="module")
def desk_study():
    config = StudyConfig(
        models=(ModelSpec("B", "whittle-matern", 1.0, 1.0),
                ModelSpec("C", "whittle-matern", 1.0, 3.0)),
        seed=STUDY_SEED, n_blocks=100, sites=10, side=10.0, replicates=3,
        estimators=("aabc", "mcle"),
        abc=AbcSettings(iterations=20_000, stage2_iterations=20_000, percentile=0.005,
                        clusters=50))
    return run_simulation_study(config)


def _rows(report, model, estimator):
    return [r for r in report.rows if r["model"] == model and r["estimator"] == estimator]


@pytest.mark.slow
@pytest.mark.criterion(7)
def test_desk_scale_posterior_recovery(desk_study, record_property):
    rows = _rows(desk_study, "C", "aabc")
    mses = [r["mse"] for r in rows]
    cover = [r.get("coverage") for r in rows]
    assert all(m is not None for m in mses), [r["error"] for r in rows]
    mean = float(np.mean(mses))
    record_property("detail", "model C AABC MSE " + ", ".join(f"{m:.4f}" for m in mses)
                    + f" (mean {mean:.4f}); band coverage "
                    + ", ".join(f"{c:.2f}" for c in cover))
    assert mean <= 0.05
    assert all(c >= 0.9 for c in cover)


@pytest.mark.slow
@pytest.mark.criterion(8)
@pytest.mark.parametrize("model", ["B", "C"])
def test_adaptive_abc_beats_composite_likelihood(desk_study, model, record_property):
    aabc = [r["mse"] for r in _rows(desk_study, model, "aabc")]
    mcle = [r["mse"] for r in _rows(desk_study, model, "mcle")]
    assert None not in aabc and None not in mcle
    record_property("detail", f"model {model}: AABC mean {np.mean(aabc):.4f} "
                              f"vs MCLE mean {np.mean(mcle):.4f}")
    assert np.mean(aabc) < np.mean(mcle)


# ------------------------------------------------------------------ 9

@pytest.mark.criterion(9)
def test_study_reports_do_not_depend_on_threads(record_property):
    config = StudyConfig(
        models=(ModelSpec("B", "whittle-matern", 1.0, 1.0),), seed=STUDY_SEED, n_blocks=30,
        sites=5, replicates=2, estimators=("madogram", "pairwise", "triplet", "aabc", "mcle"),
        abc=AbcSettings(iterations=400, stage2_iterations=400, percentile=0.1, clusters=5))
    one = json.dumps(run_simulation_study(config, threads=1).as_dict(), sort_keys=True)
    four = json.dumps(run_simulation_study(config, threads=4).as_dict(), sort_keys=True)
    record_property("detail", f"{len(one)}-byte reports identical: {one == four}")
    assert one == four


# ------------------------------------------------------------------ 10

@pytest.mark.criterion(10)
def test_clustering_geometry(record_property):
    d = SpatialDesign.uniform_square(20, np.random.default_rng(STUDY_SEED))
    assert len(d.triplets) == 1140
    base = ward_cluster(d, 100)
    a = 1.1
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    reflect = np.diag([1.0, -1.0])
    moved = SpatialDesign(d.coords @ (reflect @ rot).T + [17.0, -4.0])
    assert oracles.partition(ward_cluster(moved, 100).labels) == oracles.partition(base.labels)
    tri = SpatialDesign([[0, 0], [3, 0], [0, 4]]).triangle_sides[0]
    shifted = SpatialDesign([[10, 7], [13, 7], [10, 11]]).triangle_sides[0]
    turned = SpatialDesign([[0, 0], [0, 3], [-4, 0]]).triangle_sides[0]
    assert triangle_distance(tri, shifted) == 0.0
    assert triangle_distance(tri, turned) == 0.0
    assert triangle_distance((3, 4, 5), (5, 3, 4)) == 0.0
    record_property("detail", "1140 triplets; partition unchanged under rigid motion")
