import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from extremeabc.corrfuncs import CorrelationModel, Family
from extremeabc.design import BlockMaximaPanel, MarginScale, SpatialDesign
from extremeabc.errors import FeasibilityError, ParameterDomainError, ScaleError, SchemaError
from extremeabc.maxstable import simulate_schlather
from extremeabc.summaries import (Summarizer, SummaryMethod, SummaryVector, distance_curve,
                                  distance_vector, fit_curve_values, madogram_estimate,
                                  ols_fit_curve, pairwise_theta_hat, summary_distance,
                                  triangle_dissimilarities, triangle_distance,
                                  triplet_theta_hat, ward_cluster, _theta_curves)


def _line(n):
    return SpatialDesign(np.c_[np.arange(n, dtype=float), np.zeros(n)])


def test_madogram_hand_value():
    p = BlockMaximaPanel([[0.0, 1.0], [2.0, 0.0]], MarginScale.UNIT_GUMBEL, _line(2))
    assert madogram_estimate(p, (0, 1)) == pytest.approx(0.75, abs=1e-15)


def test_pairwise_hand_value(backend):
    p = BlockMaximaPanel([[1.0, 2.0], [4.0, 1.0]], MarginScale.UNIT_FRECHET, _line(2))
    assert pairwise_theta_hat(p, (0, 1)) == pytest.approx(8 / 3, abs=1e-14)


def test_triplet_hand_value(backend):
    p = BlockMaximaPanel([[1.0, 2.0, 3.0], [4.0, 1.0, 1.0]], MarginScale.UNIT_FRECHET, _line(3))
    assert triplet_theta_hat(p, (0, 1, 2)) == pytest.approx(24 / 7, abs=1e-14)


def test_estimators_check_scale():
    p = BlockMaximaPanel([[1.0, 2.0], [4.0, 1.0]], MarginScale.UNIT_FRECHET, _line(2))
    with pytest.raises(ScaleError):
        madogram_estimate(p, (0, 1))
    with pytest.raises(ParameterDomainError):
        pairwise_theta_hat(p, (0, 5))


def test_identical_columns_reduce_to_one_site():
    z = 1 / -np.log(np.random.default_rng(0).random(50))
    p = BlockMaximaPanel(np.c_[z, z, z], MarginScale.UNIT_FRECHET, _line(3))
    single = 50 / np.sum(1 / z)
    assert pairwise_theta_hat(p, (0, 1)) == pytest.approx(single, rel=1e-14)
    assert triplet_theta_hat(p, (0, 1, 2)) == pytest.approx(single, rel=1e-14)


def test_triangle_distance_examples():
    assert triangle_distance((3, 4, 5), (5, 3, 4)) == 0.0
    assert triangle_distance((3, 4, 5), (1, 1, 1)) == 9.0
    assert triangle_distance((1, 2, 2.5), (2, 1, 2)) == pytest.approx(0.5)
    with pytest.raises(ParameterDomainError):
        triangle_distance((0, 1, 1), (1, 1, 1))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(*[st.floats(0.1, 20)] * 3), min_size=2, max_size=8))
def test_sorted_matching_equals_permutation_search(sides):
    np.testing.assert_allclose(triangle_dissimilarities(sides), oracles.triangle_matrix(sides),
                               atol=1e-12)


def test_triplet_count():
    d = SpatialDesign.uniform_square(20, np.random.default_rng(3))
    assert len(d.triplets) == 1140
    c = ward_cluster(d, 100)
    assert c.labels.shape == (1140,) and set(c.labels) == set(range(1, 101))
    assert c.counts.sum() == 1140


@pytest.mark.parametrize("D,K", [(8, 10), (10, 50), (12, 30), (20, 100)])
def test_ward_matches_scipy(D, K, backend):
    d = SpatialDesign.uniform_square(D, np.random.default_rng(D * 7 + K))
    ours = ward_cluster(d, K)
    ref = oracles.ward_partition(oracles.triangle_matrix(d.triangle_sides), K)
    assert oracles.partition(ours.labels) == ref


def test_labels_ordered_by_first_triplet():
    d = SpatialDesign.uniform_square(9, np.random.default_rng(4))
    labels = ward_cluster(d, 12).labels
    firsts = [labels.tolist().index(k) for k in range(1, 13)]
    assert firsts == sorted(firsts)


def test_clustering_invariant_under_rigid_motion():
    d = SpatialDesign.uniform_square(10, np.random.default_rng(5))
    a = 0.7
    rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    moved = SpatialDesign(d.coords @ rot.T + [3.0, -8.0])
    assert oracles.partition(ward_cluster(d, 20).labels) == \
        oracles.partition(ward_cluster(moved, 20).labels)


def test_cluster_lookup_and_perimeter():
    d = SpatialDesign.uniform_square(6, np.random.default_rng(6))
    c = ward_cluster(d, 4)
    assert c.cluster_of((0, 1, 2)) == c.labels[0]
    with pytest.raises(ParameterDomainError):
        c.cluster_of((2, 1, 0))
    assert c.mean_perimeter.shape == (4,)


def test_cluster_guards():
    d = SpatialDesign.uniform_square(6, np.random.default_rng(6))
    for K in (0, 21):
        with pytest.raises(ParameterDomainError):
            ward_cluster(d, K)
    big = SpatialDesign.uniform_square(26, np.random.default_rng(6))
    with pytest.raises(FeasibilityError):
        ward_cluster(big, 10)


def test_fit_recovers_exact_curve():
    d = SpatialDesign.uniform_square(10, np.random.default_rng(7))
    h = d.pair_distances
    for method in (SummaryMethod.PAIRWISE, SummaryMethod.MADOGRAM):
        th = _theta_curves(Family.WHITTLE_MATERN, np.array([2.0]), np.array([1.5]), h)[0]
        vals = np.log(th) if method is SummaryMethod.MADOGRAM else th
        phi, sse, _ = fit_curve_values(method, "whittle-matern", h, vals)
        assert sse < 1e-12
        assert phi.c2 == pytest.approx(2.0, rel=1e-3) and phi.nu == pytest.approx(1.5, rel=1e-3)


def test_curve_fit_is_idempotent():
    d = SpatialDesign.uniform_square(10, np.random.default_rng(8))
    z = simulate_schlather(d, CorrelationModel("cauchy", 2.0, 1.0), 100, 8)
    first = ols_fit_curve("pairwise", z, "cauchy")
    h = d.pair_distances
    refit_vals = _theta_curves(Family.CAUCHY, np.array([first.phi.c2]),
                               np.array([first.phi.nu]), h)[0]
    again, _, _ = fit_curve_values("pairwise", "cauchy", h, refit_vals)
    assert again.c2 == pytest.approx(first.phi.c2, rel=1e-6)
    assert again.nu == pytest.approx(first.phi.nu, rel=1e-6)


@pytest.mark.parametrize("method", list(SummaryMethod))
def test_row_order_does_not_matter(method):
    d = SpatialDesign.uniform_square(7, np.random.default_rng(9))
    p = simulate_schlather(d, CorrelationModel("whittle-matern", 1.0, 1.0), 80, 9)
    shuffled = BlockMaximaPanel(p.values[np.random.default_rng(1).permutation(80)],
                                MarginScale.UNIT_FRECHET, d)
    s = Summarizer(method, d, K=6)
    a, b = s(p), s(shuffled)
    # curve fits see the estimates only through rounding-level differences
    tol = 1e-12 if method is SummaryMethod.TRIPLET else 1e-6
    np.testing.assert_allclose(a.values, b.values, rtol=tol)


def test_summarizer_accepts_gumbel_panels():
    d = SpatialDesign.uniform_square(5, np.random.default_rng(10))
    p = simulate_schlather(d, CorrelationModel("cauchy", 1.0, 1.0), 40, 10)
    s = Summarizer("triplet", d, K=3)
    g = BlockMaximaPanel(np.log(p.values), MarginScale.UNIT_GUMBEL, d)
    np.testing.assert_allclose(s(g).values, s(p).values, rtol=1e-12)


def test_distance_examples():
    grid = np.linspace(0, 10, 11)
    a = SummaryVector(SummaryMethod.PAIRWISE, np.ones(11), grid=grid)
    b = SummaryVector(SummaryMethod.PAIRWISE, np.full(11, 2.0), grid=grid)
    assert distance_curve(a, b) == pytest.approx(10.0)
    assert summary_distance(a, b) == pytest.approx(10.0)
    assert distance_vector([1.0, 2.0], [2.0, 0.0]) == 3.0
    c = SummaryVector(SummaryMethod.PAIRWISE, np.ones(5), grid=np.linspace(0, 10, 5))
    with pytest.raises(SchemaError):
        distance_curve(a, c)
    with pytest.raises(SchemaError):
        distance_vector([1.0], [1.0, 2.0])
    t = SummaryVector(SummaryMethod.TRIPLET, np.ones(11))
    with pytest.raises(SchemaError):
        summary_distance(a, t)


def test_compatibility_check():
    d = SpatialDesign.uniform_square(6, np.random.default_rng(11))
    s = Summarizer("triplet", d, K=4)
    with pytest.raises(SchemaError):
        s.check_compatible(SummaryVector(SummaryMethod.TRIPLET, np.ones(5)))
    with pytest.raises(ParameterDomainError):
        Summarizer("triplet", d)
    with pytest.raises(ParameterDomainError):
        SummaryMethod.parse("variogram")
