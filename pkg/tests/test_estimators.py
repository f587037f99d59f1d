import numpy as np
import pytest
from sklearn.base import clone

from bayeswarp import BayesianWarpRegistration, DPRegistration, TemplateRegistration
from bayeswarp.exceptions import InvalidInputError
from bayeswarp.functions import as_warping, uniform_grid, warp_function
from bayeswarp.simulation import sim1_base_function, sim1_warps


@pytest.fixture(scope="module")
def pair():
    f = sim1_base_function(60)
    return warp_function(f, sim1_warps(60)["gamma1"]), f


@pytest.fixture(scope="module")
def fitted(pair):
    est = BayesianWarpRegistration(n_samples=4000, n_resample=100, random_state=0)
    return est.fit(*pair)


def test_params_and_clone():
    est = BayesianWarpRegistration(n_samples=10, sigma2=5.0)
    params = est.get_params()
    assert params["n_samples"] == 10 and params["sigma2"] == 5.0
    est.set_params(k_max=3)
    c = clone(est)
    assert c.get_params() == est.get_params()
    assert c is not est


def test_fit_attributes(fitted):
    n = 100
    assert fitted.psi_.shape == (n, 60)
    assert fitted.warps_.shape == (n, 60)
    for g in fitted.warps_[:5]:
        as_warping(g)
    assert np.isclose(fitted.weights_.sum(), 1.0)
    assert fitted.clusters_.labels.shape == (n,)
    sizes = fitted.clusters_.sizes
    assert np.all(np.diff(sizes) <= 0)  # largest cluster first
    assert len(fitted.summaries_) == fitted.clusters_.k
    assert fitted.n_valid_ > 0


def test_transform_uses_estimate(fitted, pair):
    f1, f2 = pair
    out = fitted.transform(f2)
    assert np.allclose(out, warp_function(f2, fitted.warp(0, "mean")))
    assert np.linalg.norm(out - f1) < np.linalg.norm(f2 - f1)
    with pytest.raises(InvalidInputError):
        fitted.warp(0, "mode")


def test_fit_is_deterministic(pair, fitted):
    again = BayesianWarpRegistration(n_samples=4000, n_resample=100, random_state=0,
                                     n_jobs=2).fit(*pair)
    assert np.array_equal(again.psi_, fitted.psi_)


def test_dp_solution_importance_mean(pair):
    est = BayesianWarpRegistration(n_samples=2000, n_resample=50, random_state=1,
                                   importance_mean="dp-solution", n_clusters=1).fit(*pair)
    assert est.clusters_.k == 1


@pytest.mark.parametrize("kw", [dict(mode_threshold=1.5), dict(level=0.0),
                                dict(n_resample=10, n_samples=5), dict(n_basis=61),
                                dict(importance_mean="mode")])
def test_invalid_settings(pair, kw):
    with pytest.raises(InvalidInputError):
        BayesianWarpRegistration(**{"n_samples": 100, "n_resample": 10, **kw}).fit(*pair)


def test_length_mismatch():
    with pytest.raises(InvalidInputError):
        BayesianWarpRegistration().fit(np.ones(10), np.ones(12))


def test_dp_registration(pair):
    f1, f2 = pair
    dp = DPRegistration().fit(f1, f2)
    assert dp.distance_ < 0.1
    assert np.linalg.norm(dp.transform(f2) - f1) < 0.2 * np.linalg.norm(f2 - f1)
    assert 90 < dp.dpd_ <= 100


def test_template_registration():
    t = uniform_grid(50)
    X = np.array([np.exp(-((t - c) ** 2) / 0.01) for c in (0.5, 0.55, 0.45)])
    tr = TemplateRegistration(n_samples=3000, random_state=0)
    out = tr.fit_transform(X)
    assert out.shape == X.shape
    assert np.allclose(out, tr.aligned_)
    assert np.linalg.norm(tr.mean_after_ - X[0]) < np.linalg.norm(tr.mean_before_ - X[0])
    with pytest.raises(InvalidInputError):
        tr.transform(X[:2])
