"""Estimator-style front ends (``fit`` / ``transform``) for pairwise and template registration."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .basis import default_basis_size, identity_basis
from .dp import DpConfig, dp_align
from .exceptions import InvalidInputError
from .functions import compute_srsf, l2_distance, warp_function, warp_srsf
from .model import ImportanceConfig, PriorConfig, importance_sample, sir_resample
from .posterior import dpd_or_nan, kmeans, select_num_modes, summarize
from .simulation import replicate_seeds, run_template_alignment
from .sphere import normalize, srd_to_warping, to_srd

IMPORTANCE_MEANS = ("identity", "dp-solution")


def _check_function(f):
    arr = check_array(np.asarray(f, dtype=float).reshape(1, -1), ensure_min_features=3)
    return arr[0]


def _check_pair(f1, f2):
    f1 = _check_function(f1)
    f2 = _check_function(f2)
    if f1.size != f2.size:
        raise InvalidInputError(f"f1 and f2 have different lengths ({f1.size}, {f2.size})")
    return f1, f2


class BayesianWarpRegistration(BaseEstimator):
    """Posterior inference for the warp that registers ``f2`` onto ``f1``.

    Parameters
    ----------
    n_samples : int
        Importance draws S.
    n_resample : int
        Resample size s (without replacement).
    sigma2 : float
        Prior and importance-function variance scale.
    decay : {"quadratic", "linear", "none"}
        Decay of the coefficient variances.
    n_basis : int, optional
        Basis size m (odd); ``N - 1`` rounded down to odd when omitted.
    gamma_alpha, gamma_beta : float
        Gamma prior on the likelihood concentration.
    k_max : int
        Largest number of posterior modes considered.
    mode_threshold : float
        Required relative pooled-variance decrease from one to two modes.
    n_clusters : int, optional
        Fix the number of modes instead of selecting it.
    importance_mean : {"identity", "dp-solution"} or ndarray
        Centre of the wrapped normal importance function; an array is read
        as a warping function.
    level : float
        Pointwise credible level of the bands.
    random_state : int, optional
    n_jobs : int

    Attributes
    ----------
    psi_ : ndarray, shape (s, N)
        Resampled posterior SRDs.
    warps_ : ndarray, shape (s, N)
        The corresponding warping functions.
    log_posterior_ : ndarray, shape (s,)
    clusters_ : ClusterResult
    summaries_ : list of PosteriorSummary
        One per cluster, largest cluster first.
    dp_warp_ : ndarray, shape (N,)
        Dynamic-programming baseline.
    """

    def __init__(
        self,
        n_samples=50_000,
        n_resample=200,
        sigma2=1000.0,
        decay="quadratic",
        n_basis=None,
        gamma_alpha=1.0,
        gamma_beta=0.01,
        k_max=5,
        mode_threshold=0.30,
        n_clusters=None,
        importance_mean="identity",
        level=0.95,
        random_state=None,
        n_jobs=1,
    ):
        self.n_samples = n_samples
        self.n_resample = n_resample
        self.sigma2 = sigma2
        self.decay = decay
        self.n_basis = n_basis
        self.gamma_alpha = gamma_alpha
        self.gamma_beta = gamma_beta
        self.k_max = k_max
        self.mode_threshold = mode_threshold
        self.n_clusters = n_clusters
        self.importance_mean = importance_mean
        self.level = level
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _prior(self):
        return PriorConfig(self.sigma2, self.decay, self.n_basis, self.gamma_alpha,
                           self.gamma_beta)

    def _importance(self, prior):
        mean = self.importance_mean
        if isinstance(mean, str):
            if mean not in IMPORTANCE_MEANS:
                raise InvalidInputError(
                    f"importance_mean must be one of {IMPORTANCE_MEANS} or a warp"
                )
            if mean == "identity":
                return ImportanceConfig.like_prior(prior)
            mean = self.dp_warp_
        return ImportanceConfig.like_prior(prior, mean=to_srd(np.asarray(mean, dtype=float)))

    def fit(self, f1, f2):
        """Sample the posterior of the warp registering ``f2`` onto ``f1``."""
        f1, f2 = _check_pair(f1, f2)
        if not 0.0 < self.mode_threshold < 1.0:
            raise InvalidInputError("mode_threshold must lie in (0, 1)")
        if not 0.0 < self.level < 1.0:
            raise InvalidInputError("level must lie in (0, 1)")
        if self.n_resample < 1 or self.n_samples < self.n_resample:
            raise InvalidInputError("need 1 <= n_resample <= n_samples")
        prior = self._prior()
        n_points = f1.size
        m = prior.m or default_basis_size(n_points)
        if m > n_points - 1:
            raise InvalidInputError(
                f"basis size {m} exceeds N - 1 = {n_points - 1}; lower n_basis"
            )
        basis = identity_basis(n_points, m)
        q1, q2 = compute_srsf(f1), compute_srsf(f2)
        self.q1_, self.q2_ = q1, q2
        self.dp_warp_ = dp_align(q1, q2, DpConfig())
        imp = self._importance(prior)

        seeds = replicate_seeds(self.random_state, 1)[0]
        samples = importance_sample(q1, q2, self.n_samples, prior, imp, seeds[0], basis,
                                    self.n_jobs, keep_coefficients=False)
        idx = sir_resample(samples.log_weight, self.n_resample, seeds[1])
        self.psi_ = normalize(np.maximum(samples.psi[idx], 0.0))
        self.warps_ = np.array([srd_to_warping(p) for p in self.psi_])
        self.log_posterior_ = samples.log_posterior[idx]
        self.weights_ = np.full(self.n_resample, 1.0 / self.n_resample)
        self.effective_sample_size_ = float(samples.effective_sample_size())
        self.n_valid_ = int(samples.valid.sum())

        if self.n_clusters is None:
            clusters = select_num_modes(self.psi_, self.k_max, self.mode_threshold)
        else:
            clusters = kmeans(self.psi_, self.n_clusters)
        order = np.lexsort((np.arange(clusters.k), -clusters.sizes))
        remap = np.empty(clusters.k, dtype=int)
        remap[order] = np.arange(clusters.k)
        clusters.labels = remap[clusters.labels]
        clusters.centers = clusters.centers[order]
        self.clusters_ = clusters
        self.summaries_ = [
            summarize(self.psi_[clusters.labels == c], q1, q2,
                      log_posterior=self.log_posterior_[clusters.labels == c],
                      level=self.level)
            for c in range(clusters.k)
        ]
        self.no_warp_distance_ = float(l2_distance(q1, q2))
        self.dp_distance_ = float(l2_distance(q1, warp_srsf(q2, self.dp_warp_)))
        self.dpd_dp_ = dpd_or_nan(q1, q2, self.dp_warp_)
        return self

    def warp(self, cluster=0, estimate="mean"):
        """Point estimate (``"mean"``, ``"median"`` or ``"map"``) of one cluster."""
        check_is_fitted(self, "summaries_")
        summ = self.summaries_[cluster]
        try:
            return getattr(summ, f"{estimate}_warp")
        except AttributeError:
            raise InvalidInputError(f"unknown estimate {estimate!r}") from None

    def transform(self, f, cluster=0, estimate="mean"):
        """Apply a posterior point-estimate warp to a function (``f o gamma``)."""
        gamma = self.warp(cluster, estimate)
        return warp_function(_check_function(f), gamma)


class DPRegistration(BaseEstimator):
    """Dynamic-programming registration of ``f2`` onto ``f1``.

    Parameters
    ----------
    grid_size : int, optional
        Lattice points in ``t`` (the data grid by default).
    refine : int
        Lattice refinement in ``gamma``.
    """

    def __init__(self, grid_size=None, refine=8):
        self.grid_size = grid_size
        self.refine = refine

    def fit(self, f1, f2):
        f1, f2 = _check_pair(f1, f2)
        q1, q2 = compute_srsf(f1), compute_srsf(f2)
        cfg = DpConfig(grid_size=self.grid_size, refine=self.refine)
        self.warp_ = dp_align(q1, q2, cfg)
        self.distance_ = float(l2_distance(q1, warp_srsf(q2, self.warp_)))
        self.dpd_ = dpd_or_nan(q1, q2, self.warp_)
        return self

    def transform(self, f):
        check_is_fitted(self, "warp_")
        return warp_function(_check_function(f), self.warp_)


class TemplateRegistration(TransformerMixin, BaseEstimator):
    """Register every row of ``X`` onto a template row with its MAP warp.

    Parameters
    ----------
    template_index : int
    n_samples : int
        Importance draws per function.
    sigma2, decay, n_basis, gamma_alpha, gamma_beta
        Prior settings as in :class:`BayesianWarpRegistration`.
    random_state : int, optional
    n_jobs : int

    Attributes
    ----------
    warps_ : ndarray, shape (n, N)
    mean_before_, mean_after_ : ndarray, shape (N,)
        Pointwise averages before and after alignment.
    """

    def __init__(self, template_index=0, n_samples=50_000, sigma2=1000.0,
                 decay="quadratic", n_basis=None, gamma_alpha=1.0, gamma_beta=0.01,
                 random_state=None, n_jobs=1):
        self.template_index = template_index
        self.n_samples = n_samples
        self.sigma2 = sigma2
        self.decay = decay
        self.n_basis = n_basis
        self.gamma_alpha = gamma_alpha
        self.gamma_beta = gamma_beta
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2, ensure_min_features=3)
        prior = PriorConfig(self.sigma2, self.decay, self.n_basis, self.gamma_alpha,
                            self.gamma_beta)
        res = run_template_alignment(X, self.template_index, self.n_samples, prior,
                                     self.random_state, self.n_jobs)
        self.template_ = X[self.template_index].copy()
        self.warps_ = res.warps
        self.aligned_ = res.aligned
        self.mean_before_ = res.mean_before
        self.mean_after_ = res.mean_after
        return self

    def transform(self, X):
        """Warp the rows of ``X`` with the fitted warps (row ``i`` by ``warps_[i]``)."""
        check_is_fitted(self, "warps_")
        X = check_array(X, ensure_min_features=3)
        if X.shape != self.warps_.shape:
            raise InvalidInputError(
                f"expected shape {self.warps_.shape}, got {X.shape}"
            )
        return np.array([warp_function(f, g) for f, g in zip(X, self.warps_)])
