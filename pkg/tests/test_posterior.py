import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from sklearn.metrics import silhouette_samples

from bayeswarp.basis import identity_basis
from bayeswarp.dp import dp_align
from bayeswarp.exceptions import InvalidInputError, UndefinedDPDError
from bayeswarp.functions import compute_srsf, uniform_grid, warp_function, warp_srsf
from bayeswarp.model import PriorConfig, log_integrated_likelihood, prior_log_density
from bayeswarp.posterior import (
    credible_band,
    dpd,
    hierarchical_init,
    kmeans,
    pairwise_distance_matrix,
    pooled_variance,
    select_num_modes,
    silhouette,
    summarize,
)
from bayeswarp.sphere import exp_map, karcher_mean, sphere_distance, srd_to_warping

from conftest import smooth_function, smooth_warp

N = 100
T = uniform_grid(N)
BASIS = identity_basis(N, 9)


def groups(rng, n_groups=3, per_group=20, spread=0.02, separation=0.4):
    """Clusters around points exp_1(separation * b_g); within-group scale ``spread``."""
    labels, pts = [], []
    for g in range(n_groups):
        centre = exp_map(np.ones(N), separation * BASIS.elements[g])
        for _ in range(per_group):
            v = spread * (rng.normal(size=BASIS.size) @ BASIS.elements) / np.sqrt(BASIS.size)
            pts.append(exp_map(centre, v - np.sum(v * centre) / np.sum(centre**2) * centre))
            labels.append(g)
    return np.array(pts), np.array(labels)


def same_partition(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return np.array_equal(a[:, None] == a[None, :], b[:, None] == b[None, :])


def test_separation_of_fixture():
    pts, labels = groups(np.random.default_rng(0))
    d = pairwise_distance_matrix(pts)
    within = d[labels[:, None] == labels[None, :]].max()
    between = d[labels[:, None] != labels[None, :]].min()
    assert between > 10 * within


# distance matrix


def test_distance_matrix_properties():
    pts, _ = groups(np.random.default_rng(1), per_group=5)
    d = pairwise_distance_matrix(pts)
    assert np.all(np.diag(d) == 0.0)
    assert np.max(np.abs(d - d.T)) < 1e-12
    for i in (0, 3, 7):
        for j in (1, 9, 14):
            assert d[i, j] == pytest.approx(sphere_distance(pts[i], pts[j]), abs=1e-7)


# hierarchical init


def test_hierarchical_k_equals_s():
    pts, _ = groups(np.random.default_rng(2), per_group=3)
    labels = hierarchical_init(pairwise_distance_matrix(pts), pts.shape[0])
    assert np.unique(labels).size == pts.shape[0]


def test_hierarchical_recovers_two_groups_and_is_deterministic():
    pts, truth = groups(np.random.default_rng(3), n_groups=2)
    d = pairwise_distance_matrix(pts)
    labels, centers = hierarchical_init(d, 2, pts)
    assert same_partition(labels, truth)
    np.testing.assert_array_equal(labels, hierarchical_init(d, 2))
    assert centers.shape == (2, N)


def test_hierarchical_k_too_large():
    with pytest.raises(InvalidInputError):
        hierarchical_init(np.zeros((3, 3)), 4)


# k-means


def test_kmeans_single_cluster_is_karcher_mean():
    pts, _ = groups(np.random.default_rng(4), per_group=6)
    res = kmeans(pts, 1)
    assert np.all(res.labels == 0)
    assert sphere_distance(res.centers[0], karcher_mean(pts)) < 1e-8


def test_kmeans_recovers_three_groups():
    pts, truth = groups(np.random.default_rng(5))
    res = kmeans(pts, 3)
    assert same_partition(res.labels, truth)
    assert np.all(np.diff(res.objective_history) <= 1e-12)


def test_kmeans_objective_monotone_from_bad_start():
    rng = np.random.default_rng(6)
    pts, _ = groups(rng, spread=0.3, separation=0.3)
    res = kmeans(pts, 3, init=pts[:3])
    hist = np.array(res.objective_history)
    assert np.all(np.diff(hist) <= 1e-12)
    assert hist[-1] <= hist[0]
    # labels consistent with nearest centre at convergence
    d = np.array([[sphere_distance(p, c) for c in res.centers] for p in pts])
    np.testing.assert_array_equal(res.labels, np.argmin(d, axis=1))
    assert np.all(res.sizes > 0)


def test_kmeans_reseeds_empty_cluster():
    pts, _ = groups(np.random.default_rng(7), n_groups=2, per_group=5)
    # two identical initial centres leave one cluster empty after assignment
    res = kmeans(pts, 2, init=np.array([pts[0], pts[0]]))
    assert np.all(res.sizes > 0)


# silhouette


def test_silhouette_matches_sklearn():
    pts, truth = groups(np.random.default_rng(8), spread=0.2, separation=0.2)
    d = pairwise_distance_matrix(pts)
    s, avg = silhouette(truth, d)
    np.testing.assert_allclose(s, silhouette_samples(d, truth, metric="precomputed"), atol=1e-12)
    assert np.all((s >= -1) & (s <= 1))
    assert avg == pytest.approx(s.mean())


def test_silhouette_far_groups_high():
    pts, truth = groups(np.random.default_rng(9), n_groups=2)
    assert silhouette(truth, pairwise_distance_matrix(pts))[1] > 0.9


def test_silhouette_conventions():
    d = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    s, _ = silhouette(np.array([0, 0, 1]), d)
    assert s[0] == 0.0  # a = b
    assert s[2] == 0.0  # singleton


@given(st.permutations([0, 1, 2]))
def test_silhouette_label_permutation(perm):
    pts, truth = groups(np.random.default_rng(10), per_group=6, spread=0.1)
    d = pairwise_distance_matrix(pts)
    relabeled = np.array(perm)[truth]
    assert silhouette(relabeled, d)[1] == pytest.approx(silhouette(truth, d)[1], abs=1e-14)


# mode selection


def test_select_unimodal():
    pts, _ = groups(np.random.default_rng(11), n_groups=1, per_group=60, spread=0.1)
    assert select_num_modes(pts).k == 1


def test_select_bimodal():
    pts, truth = groups(np.random.default_rng(12), n_groups=2, per_group=40)
    res = select_num_modes(pts)
    assert res.k == 2 and same_partition(res.labels, truth)
    v1, v2 = res.pooled_variance_curve[1], res.pooled_variance_curve[2]
    assert (v1 - v2) / v1 > 0.3


def test_select_tight_cloud():
    pts, _ = groups(np.random.default_rng(13), n_groups=2, per_group=10, spread=1e-6,
                    separation=1e-4)
    assert select_num_modes(pts).k == 1


def test_select_threshold_is_strict(monkeypatch):
    pts, _ = groups(np.random.default_rng(14), n_groups=2, per_group=20)
    res = select_num_modes(pts)
    v1, v2 = res.pooled_variance_curve[1], res.pooled_variance_curve[2]
    exact = (v1 - v2) / v1
    assert select_num_modes(pts, threshold=exact).k == 1
    assert select_num_modes(pts, threshold=exact - 1e-9).k == 2


def test_pooled_variance_is_kmeans_objective():
    pts, truth = groups(np.random.default_rng(15), n_groups=2, per_group=8)
    res = kmeans(pts, 2)
    assert pooled_variance(pts, res.labels, res.centers) == pytest.approx(
        res.objective_history[-1], rel=1e-10)


# DPD


def test_dpd_identity_and_exact():
    rng = np.random.default_rng(16)
    q1 = smooth_function(rng)
    gam = smooth_warp(rng)
    q2 = warp_srsf(q1, gam)
    assert dpd(q1, q2, T) == pytest.approx(0.0, abs=1e-12)
    assert dpd(q1, q1 + 1.0, T) == 0.0
    with pytest.raises(UndefinedDPDError):
        dpd(q1, q1, T)


def test_dpd_exact_alignment_is_100():
    rng = np.random.default_rng(21)
    q2 = smooth_function(rng)
    gam = smooth_warp(rng)
    q1 = warp_srsf(q2, gam)
    assert dpd(q1, q2, gam) == pytest.approx(100.0, abs=1e-12)


def test_dpd_of_dp_warp_nonnegative():
    rng = np.random.default_rng(17)
    for _ in range(3):
        q1, q2 = smooth_function(rng, 60), smooth_function(rng, 60)
        assert dpd(q1, q2, dp_align(q1, q2)) >= 0.0


def test_dpd_simulation_style_recovery():
    f = np.exp(-((T - 0.3) ** 2) / 0.005) + 0.8 * np.exp(-((T - 0.7) ** 2) / 0.005)
    gam = T + 0.15 * T * (1 - T)
    q1, q2 = compute_srsf(warp_function(f, gam)), compute_srsf(f)
    assert dpd(q1, q2, gam) > 95.0


# summaries


def test_summary_of_identical_samples():
    psi = exp_map(np.ones(N), 0.2 * BASIS.elements[1])
    f = np.exp(-((T - 0.4) ** 2) / 0.01)
    q1, q2 = compute_srsf(f), compute_srsf(f + T)
    summ = summarize(np.array([psi] * 5), q1, q2)
    gam = srd_to_warping(psi)
    for w in (summ.mean_warp, summ.median_warp, summ.map_warp):
        np.testing.assert_allclose(w, gam, atol=1e-12)
    np.testing.assert_allclose(summ.pointwise_sd, 0.0, atol=1e-15)
    np.testing.assert_allclose(summ.band_upper - summ.band_lower, 0.0, atol=1e-15)


def test_summary_single_element():
    psi = exp_map(np.ones(N), 0.1 * BASIS.elements[0])
    q = compute_srsf(np.sin(2 * np.pi * T))
    summ = summarize(psi[None], q, q + 0.1)
    np.testing.assert_allclose(summ.map_warp, srd_to_warping(psi))
    assert summ.size == 1


def test_summary_map_uses_log_posterior():
    rng = np.random.default_rng(18)
    pts, _ = groups(rng, n_groups=1, per_group=30, spread=0.2)
    f = np.exp(-((T - 0.4) ** 2) / 0.01)
    q1, q2 = compute_srsf(f), compute_srsf(warp_function(f, T + 0.2 * T * (1 - T)))
    prior = PriorConfig()
    lp = log_integrated_likelihood(q1, q2, pts) + prior_log_density(pts, prior)
    summ = summarize(pts, q1, q2, prior=prior)
    np.testing.assert_allclose(summ.map_warp, srd_to_warping(pts[np.argmax(lp)]))
    assert np.all(summ.band_lower <= summ.pointwise_median)
    assert np.all(summ.pointwise_median <= summ.band_upper)
    assert np.all(summ.pointwise_sd >= 0)
    assert summ.distance_map <= max(summ.distance_mean, summ.distance_median) + 10


def test_band_coverage_of_generator_quantiles():
    # Monte Carlo oracle: bands from s=2000 draws vs the generator's quantiles
    rng = np.random.default_rng(19)
    k = np.array([0.04, 0.01, 0.01])

    def draw(n):
        c = rng.normal(size=(n, 3)) * np.sqrt(k)
        psis = exp_map(np.ones(N), c @ BASIS.elements[:3])
        return np.array([srd_to_warping(p) for p in psis])

    lower, med, upper, sd = credible_band(draw(2000))
    ref = draw(20_000)
    inside = (ref >= lower) & (ref <= upper)
    coverage = inside[:, 1:-1].mean(axis=0)
    assert np.all(np.abs(coverage - 0.95) < 0.03)


def test_weighted_band_matches_repeated_samples():
    rng = np.random.default_rng(20)
    g = rng.random((50, 7))
    w = rng.integers(1, 4, size=50)
    rep = np.repeat(g, w, axis=0)
    _, _, _, sd_w = credible_band(g, w.astype(float))
    _, _, _, sd_r = credible_band(rep)
    np.testing.assert_allclose(sd_w, sd_r, atol=1e-12)
