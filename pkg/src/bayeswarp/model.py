"""Bayesian registration model: priors, importance sampler, weights and SIR.

The posterior of the SRD ``psi`` given two SRSFs is, after integrating out
the likelihood concentration under a Gamma(alpha, beta) prior,

    p(psi | q1, q2) ~ Gamma(N/2 + alpha) / (beta + SS(psi))^(N/2 + alpha) * prior(psi)

with ``SS`` the plain sum of squared pointwise differences between ``q1``
and ``(q2, gamma_psi)``.  Samples are drawn from a wrapped normal
importance function on a tangent space and reweighted.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .basis import OrthonormalBasis, identity_basis, project, transport_basis
from .exceptions import InsufficientSupportError, InvalidInputError
from .functions import as_function, check_same_length, l2_norm, warp_srsf
from .sphere import exp_map, from_srd

DECAYS = ("none", "linear", "quadratic")
#: Samples with an SRD value below this are outside the truncated support.
MIN_SRD_VALUE = 1e-6
#: Samples are generated in fixed-size blocks with one RNG stream each.
BLOCK_SIZE = 4096


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the truncated wrapped normal prior and the Gamma prior."""

    sigma2: float = 1000.0
    decay: str = "quadratic"
    m: int | None = None
    gamma_alpha: float = 1.0
    gamma_beta: float = 0.01

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidInputError("sigma2 must be positive")
        if self.decay not in DECAYS:
            raise InvalidInputError(f"decay must be one of {DECAYS}, got {self.decay!r}")
        if not (self.gamma_alpha > 0 and self.gamma_beta > 0):
            raise InvalidInputError("gamma prior parameters must be positive")
        if self.m is not None and self.m < 1:
            raise InvalidInputError("basis size must be positive")


@dataclass(frozen=True)
class ImportanceConfig:
    """Wrapped normal importance function.

    ``mean`` is the SRD at which the tangent space is taken (identity when
    ``None``); the diagonal covariance follows the same recipe as the prior.
    With ``reject_wrapped`` draws whose tangent vector is longer than pi are
    dropped; otherwise they are kept and evaluated at the coordinates of
    their inverse exponential map.
    """

    mean: np.ndarray | None = None
    sigma2: float = 1000.0
    decay: str = "quadratic"
    reject_wrapped: bool = False

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise InvalidInputError("sigma2 must be positive")
        if self.decay not in DECAYS:
            raise InvalidInputError(f"decay must be one of {DECAYS}, got {self.decay!r}")
        if self.mean is not None:
            mean = np.asarray(self.mean, dtype=float)
            if mean.ndim != 1 or np.any(mean < 0) or abs(l2_norm(mean) - 1.0) > 1e-6:
                raise InvalidInputError("importance mean must be a unit-norm nonnegative SRD")

    @classmethod
    def like_prior(cls, prior, mean=None, reject_wrapped=False):
        return cls(mean=mean, sigma2=prior.sigma2, decay=prior.decay,
                   reject_wrapped=reject_wrapped)


@dataclass
class ImportanceSamples:
    """A batch of S importance samples and their weights.

    Attributes
    ----------
    psi : ndarray, shape (S, N)
        Sampled SRDs as produced by the exponential map (no clamping).
    log_weight : ndarray, shape (S,)
        Unnormalized log importance weights; ``-inf`` outside the support.
    log_likelihood, log_prior : ndarray, shape (S,)
        Integrated log likelihood and prior log density (up to constants).
    coeffs_prior, coeffs_importance : ndarray, shape (S, m) or None
        Coordinates at the identity and at the importance mean.
    """

    psi: np.ndarray
    log_weight: np.ndarray
    log_likelihood: np.ndarray
    log_prior: np.ndarray
    coeffs_prior: np.ndarray | None = None
    coeffs_importance: np.ndarray | None = None
    seed: int | None = field(default=None, repr=False)

    def __len__(self):
        return self.psi.shape[0]

    @property
    def log_posterior(self):
        return self.log_likelihood + self.log_prior

    @property
    def valid(self):
        return np.isfinite(self.log_weight)

    def normalized_weights(self):
        return normalize_log_weights(self.log_weight)

    def effective_sample_size(self):
        w = self.normalized_weights()
        return 1.0 / np.sum(w * w)


def build_covariance(sigma2=1000.0, decay="quadratic", m=99):
    """Diagonal covariance ``sigma2 / j**p`` for ``j = 1..m``.

    ``p`` is 4 for quadratic decay of the standard deviations, 1 for linear
    decay of the variances and 0 for no decay.
    """
    if isinstance(sigma2, (PriorConfig, ImportanceConfig)):
        cfg = sigma2
        sigma2, decay = cfg.sigma2, cfg.decay
        if isinstance(cfg, PriorConfig) and cfg.m is not None:
            m = cfg.m
    power = {"none": 0, "linear": 1, "quadratic": 4}[decay]
    j = np.arange(1, m + 1, dtype=float)
    return sigma2 / j**power


def is_supported(psi, v_norm=None):
    """Membership in the truncated support: positive SRD and ``|v| < pi``."""
    psi = np.asarray(psi, dtype=float)
    ok = psi.min(axis=-1) >= MIN_SRD_VALUE
    if v_norm is not None:
        ok &= np.asarray(v_norm) < np.pi
    return ok


def prior_log_density(psi, prior=None, basis=None):
    """Log density of the truncated wrapped normal prior, up to a constant.

    ``-0.5 c^T K^{-1} c`` where ``c`` are the identity-basis coordinates of
    ``log_1(psi)``; ``-inf`` outside the support.
    """
    prior = prior or PriorConfig()
    psi = np.asarray(psi, dtype=float)
    if basis is None:
        basis = identity_basis(psi.shape[-1], prior.m)
    coeffs = project(psi, basis)
    k = build_covariance(prior.sigma2, prior.decay, basis.size)
    quad = -0.5 * np.sum(coeffs * coeffs / k, axis=-1)
    return np.where(is_supported(psi), quad, -np.inf)


def warped_residual_ss(q1, q2, psi):
    """Plain sum over grid points of ``(q1 - (q2, gamma_psi))**2``."""
    q1 = as_function(q1, "q1")
    q2 = as_function(q2, "q2")
    check_same_length(q1, q2)
    psi = np.asarray(psi, dtype=float)
    q2_star = warp_srsf(q2, from_srd(np.maximum(psi, 0.0)))
    return np.sum((q1 - q2_star) ** 2, axis=-1)


def log_integrated_likelihood_ss(ss, n_points, alpha=1.0, beta=0.01):
    """``log Gamma(N/2 + alpha) - (N/2 + alpha) log(beta + SS)``."""
    ss = np.asarray(ss, dtype=float)
    if not np.all(np.isfinite(ss)):
        raise InvalidInputError("residual sum of squares is not finite")
    shape = n_points / 2.0 + alpha
    return gammaln(shape) - shape * np.log(beta + ss)


def log_integrated_likelihood(q1, q2, psi, alpha=1.0, beta=0.01):
    """Log of the likelihood with the concentration integrated out."""
    ss = warped_residual_ss(q1, q2, psi)
    return log_integrated_likelihood_ss(ss, np.shape(q1)[-1], alpha, beta)


def normalize_log_weights(log_weight):
    """Normalized weights via log-sum-exp; all ``-inf`` gives all zeros."""
    lw = np.asarray(log_weight, dtype=float)
    finite = np.isfinite(lw)
    if not finite.any():
        return np.zeros_like(lw)
    # shift by the maximum first so that huge log weights keep their precision
    shifted = np.where(finite, lw - lw[finite].max(), -np.inf)
    return np.where(finite, np.exp(shifted - logsumexp(shifted[finite])), 0.0)


def _block_seeds(seed, n_blocks):
    return np.random.SeedSequence(seed).spawn(n_blocks)


def _sample_block(seq, count, k_h, basis, mu):
    rng = np.random.default_rng(seq)
    z = rng.standard_normal((count, k_h.size))
    d = z * np.sqrt(k_h)
    v = d @ basis.elements
    return exp_map(mu, v), d, np.sqrt(np.sum(d * d, axis=1))


def sample_importance(cfg, basis, n_samples, seed=None, n_jobs=1):
    """Draw from the wrapped normal importance function.

    Steps: standard normals ``z``, coefficients ``d = z sqrt(K_h)``, tangent
    vector ``v = sum d_k b_k``, SRD ``exp_mu(v)``.  Random numbers come in
    blocks of ``BLOCK_SIZE`` with independent child seeds, so the output
    does not depend on ``n_jobs``.

    Returns
    -------
    psi : ndarray, shape (S, N)
    d : ndarray, shape (S, m)
        Coefficients in ``basis`` (the basis at the importance mean).
    v_norm : ndarray, shape (S,)
    """
    if not isinstance(basis, OrthonormalBasis):
        raise InvalidInputError("basis must be an OrthonormalBasis")
    mu = basis.basepoint
    if cfg.mean is not None and np.max(np.abs(np.asarray(cfg.mean) - mu)) > 1e-8:
        raise InvalidInputError("basis is not at the importance mean")
    k_h = build_covariance(cfg.sigma2, cfg.decay, basis.size)
    sizes = _block_sizes(n_samples)
    seqs = _block_seeds(seed, len(sizes))
    jobs = [(seq, size, k_h, basis, mu) for seq, size in zip(seqs, sizes)]
    parts = _map(lambda args: _sample_block(*args), jobs, n_jobs)
    psi = np.concatenate([p[0] for p in parts])
    d = np.concatenate([p[1] for p in parts])
    v_norm = np.concatenate([p[2] for p in parts])
    return psi, d, v_norm


def _block_sizes(n_samples):
    if n_samples < 1:
        raise InvalidInputError("need at least one sample")
    full, rest = divmod(int(n_samples), BLOCK_SIZE)
    return [BLOCK_SIZE] * full + ([rest] if rest else [])


def _map(fn, items, n_jobs):
    if n_jobs == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as pool:
        return list(pool.map(fn, items))


def log_weight(psi, coeffs_prior, coeffs_importance, v_norm, q1, q2, prior, imp, m=None):
    """Log importance weight of one sample or a batch.

    ``log L - 0.5 c^T K^{-1} c + 0.5 d^T K_h^{-1} d``, or ``-inf`` outside
    the support.  Returns ``(log_weight, log_likelihood, log_prior)``.
    """
    coeffs_prior = np.asarray(coeffs_prior, dtype=float)
    coeffs_importance = np.asarray(coeffs_importance, dtype=float)
    m = coeffs_prior.shape[-1] if m is None else m
    k = build_covariance(prior.sigma2, prior.decay, m)
    k_h = build_covariance(imp.sigma2, imp.decay, coeffs_importance.shape[-1])
    psi = np.asarray(psi, dtype=float)
    ok = is_supported(psi, v_norm)
    loglik = np.full(ok.shape, -np.inf)
    if np.any(ok):
        loglik[ok] = log_integrated_likelihood(
            q1, q2, psi[ok], prior.gamma_alpha, prior.gamma_beta
        )
    logprior = -0.5 * np.sum(coeffs_prior**2 / k, axis=-1)
    logh = -0.5 * np.sum(coeffs_importance**2 / k_h, axis=-1)
    lw = np.where(ok, loglik + logprior - logh, -np.inf)
    return lw, loglik, np.where(ok, logprior, -np.inf)


def _weigh_block(args):
    seq, size, q1, q2, prior, imp, basis_id, basis_mu, same, keep = args
    k_h = build_covariance(imp.sigma2, imp.decay, basis_mu.size)
    psi, d, v_norm = _sample_block(seq, size, k_h, basis_mu, basis_mu.basepoint)
    ok = is_supported(psi, v_norm if imp.reject_wrapped else None)
    # draws that wrapped past the antipode get the coordinates of log_mu(psi)
    wrapped = ok & (v_norm >= np.pi)
    if wrapped.any():
        d[wrapped] = project(psi[wrapped], basis_mu)
    if same:
        c = d.copy()
    else:
        c = np.zeros((size, basis_id.size))
        if ok.any():
            c[ok] = project(psi[ok], basis_id)
    lw, loglik, logprior = log_weight(
        psi, c, d, v_norm if imp.reject_wrapped else None, q1, q2, prior, imp
    )
    return psi, lw, loglik, logprior, (c if keep else None), (d if keep else None)


def importance_sample(
    q1,
    q2,
    n_samples,
    prior=None,
    imp=None,
    seed=None,
    basis=None,
    n_jobs=1,
    keep_coefficients=True,
):
    """Sample the importance function and weight every draw.

    Parameters
    ----------
    q1, q2 : ndarray, shape (N,)
        SRSFs of the template and of the function being warped.
    n_samples : int
        Number S of importance draws.
    prior : PriorConfig, optional
    imp : ImportanceConfig, optional
        Defaults to the prior's covariance recipe centred at the identity.
    seed : int, optional
    basis : OrthonormalBasis, optional
        Basis at the identity; built from ``prior.m`` when omitted.
    n_jobs : int
        Worker threads; results do not depend on it.
    keep_coefficients : bool
        Keep the (S, m) coefficient arrays (memory heavy for large S).

    Returns
    -------
    ImportanceSamples
    """
    q1 = as_function(q1, "q1")
    q2 = as_function(q2, "q2")
    check_same_length(q1, q2)
    prior = prior or PriorConfig()
    imp = imp or ImportanceConfig.like_prior(prior)
    n_points = q1.size
    if basis is None:
        basis = identity_basis(n_points, prior.m)
    if basis.n_points != n_points:
        raise InvalidInputError("basis grid does not match the SRSF grid")
    same = imp.mean is None or np.max(np.abs(np.asarray(imp.mean) - 1.0)) < 1e-12
    basis_mu = basis if same else transport_basis(basis, imp.mean)

    sizes = _block_sizes(n_samples)
    seqs = _block_seeds(seed, len(sizes))
    jobs = [
        (seq, size, q1, q2, prior, imp, basis, basis_mu, same, keep_coefficients)
        for seq, size in zip(seqs, sizes)
    ]
    parts = _map(_weigh_block, jobs, n_jobs)
    cat = [np.concatenate([p[i] for p in parts]) for i in range(4)]
    coeffs = [
        np.concatenate([p[i] for p in parts]) if keep_coefficients else None
        for i in (4, 5)
    ]
    return ImportanceSamples(*cat, *coeffs, seed=seed)


def _systematic(weights, count, rng):
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    u = (rng.random() + np.arange(count)) / count
    return np.searchsorted(cdf, u, side="right")


def sir_resample(log_weights, s, seed=None):
    """Resample ``s`` distinct indices, without replacement, by weight.

    Rounds of systematic resampling on the normalized weights of the
    not-yet-chosen samples; duplicates are skipped and the missing count is
    redrawn.  When ``s`` exceeds the effective sample size, exact
    sequential weighted draws without replacement are used instead
    (implemented with Gumbel keys).

    Returns
    -------
    ndarray of int, shape (s,)
        Chosen indices, in the order they were drawn.

    Raises
    ------
    InsufficientSupportError
        If fewer than ``s`` samples have a finite log weight.
    """
    lw = np.asarray(
        log_weights.log_weight if isinstance(log_weights, ImportanceSamples) else log_weights,
        dtype=float,
    )
    finite = np.flatnonzero(np.isfinite(lw))
    if finite.size < s:
        raise InsufficientSupportError(
            f"only {finite.size} importance samples have positive weight but "
            f"{s} resamples were requested; increase the number of samples S"
        )
    rng = np.random.default_rng(seed)
    w = normalize_log_weights(lw[finite])
    ess = 1.0 / np.sum(w * w)
    if s > ess:
        keys = np.log(w, where=w > 0, out=np.full_like(w, -np.inf)) + rng.gumbel(size=w.size)
        order = np.argsort(-keys, kind="stable")[:s]
        return finite[order]

    chosen = []
    taken = np.zeros(finite.size, dtype=bool)
    while len(chosen) < s:
        remaining = np.where(taken, 0.0, w)
        total = remaining.sum()
        if total <= 0:
            # leftover mass underflowed; take the rest uniformly
            rest = np.flatnonzero(~taken)
            pick = rng.choice(rest, size=s - len(chosen), replace=False)
            chosen.extend(pick.tolist())
            break
        idx = _systematic(remaining / total, s - len(chosen), rng)
        for i in idx:
            if not taken[i]:
                taken[i] = True
                chosen.append(i)
    return finite[np.asarray(chosen[:s], dtype=np.intp)]
