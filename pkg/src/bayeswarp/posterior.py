"""Posterior summaries, credible bands and mode detection on the SRD sphere."""

from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage
from scipy.spatial.distance import squareform

from .exceptions import InvalidInputError, UndefinedDPDError
from .functions import inner_matrix, l2_distance, warp_srsf
from .model import PriorConfig, log_integrated_likelihood, prior_log_density
from .sphere import (
    from_srd,
    geometric_median,
    inner,
    karcher_mean,
    normalize,
    sphere_distance,
    srd_to_warping,
)


@dataclass
class ClusterResult:
    """Outcome of k-means on the sphere.

    ``objective_history`` holds the within-cluster sum of squared distances
    after every assignment step; it never increases.
    """

    k: int
    labels: np.ndarray
    centers: np.ndarray
    avg_silhouette: float = 0.0
    pooled_variance_curve: dict = field(default_factory=dict)
    objective_history: list = field(default_factory=list)
    n_iter: int = 0

    @property
    def sizes(self):
        return np.bincount(self.labels, minlength=self.k)


@dataclass
class PosteriorSummary:
    """Mean, median and MAP warps of a set of posterior samples plus pointwise spread.

    Bands and standard deviations are pointwise over the warping-function
    values ``gamma(t_i)`` of the samples.
    """

    mean_warp: np.ndarray
    median_warp: np.ndarray
    map_warp: np.ndarray
    pointwise_median: np.ndarray
    pointwise_sd: np.ndarray
    band_lower: np.ndarray
    band_upper: np.ndarray
    level: float
    dpd_mean: float
    dpd_median: float
    dpd_map: float
    distance_mean: float
    distance_median: float
    distance_map: float
    size: int


def _as_srds(psis):
    pts = np.atleast_2d(np.asarray(psis, dtype=float))
    if pts.shape[0] == 0:
        raise InvalidInputError("empty sample")
    return normalize(np.maximum(pts, 0.0))


def pairwise_distance_matrix(psis):
    """Symmetric matrix of arc-length distances with an exact zero diagonal."""
    pts = _as_srds(psis)
    gram = inner_matrix(pts, pts)
    gram = 0.5 * (gram + gram.T)
    dist = np.arccos(np.clip(gram, -1.0, 1.0))
    np.fill_diagonal(dist, 0.0)
    return dist


def hierarchical_init(dist, k, psis=None):
    """Complete-linkage clustering of a distance matrix, cut into ``k`` groups.

    Returns the labels and, when the points are given, the Karcher mean of
    every group (the initial k-means centres).
    """
    dist = np.asarray(dist, dtype=float)
    n = dist.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"cannot cut {n} points into {k} clusters")
    if k == n:
        labels = np.arange(n)
    elif k == 1:
        labels = np.zeros(n, dtype=int)
    else:
        tree = linkage(squareform(dist, checks=False), method="complete")
        labels = cut_tree(tree, n_clusters=k).ravel()
    labels = _relabel_by_first_occurrence(labels)
    if psis is None:
        return labels
    pts = _as_srds(psis)
    centers = np.array([karcher_mean(pts[labels == c]) for c in range(k)])
    return labels, centers


def _relabel_by_first_occurrence(labels):
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(order.size, dtype=int)
    remap[np.unique(labels)[order]] = np.arange(order.size)
    return remap[np.searchsorted(np.unique(labels), labels)]


def _assign(pts, centers):
    dist = np.arccos(np.clip(inner_matrix(pts, centers), -1.0, 1.0))
    labels = np.argmin(dist, axis=1)
    return labels, dist[np.arange(pts.shape[0]), labels]


def kmeans(psis, k, init=None, max_iter=100):
    """k-means on the sphere with Karcher-mean centre updates.

    Parameters
    ----------
    psis : ndarray, shape (s, N)
    k : int
    init : ndarray, shape (k, N), optional
        Initial centres; complete-linkage initialization when omitted.
    max_iter : int

    Notes
    -----
    A cluster that becomes empty is re-seeded at the point farthest from
    its currently assigned centre.  Iteration stops when the assignments no
    longer change.
    """
    pts = _as_srds(psis)
    n = pts.shape[0]
    if not 1 <= k <= n:
        raise InvalidInputError(f"cannot form {k} clusters from {n} points")
    if init is None:
        _, centers = hierarchical_init(pairwise_distance_matrix(pts), k, pts)
    else:
        centers = _as_srds(init)
        if centers.shape[0] != k:
            raise InvalidInputError("need exactly k initial centres")

    labels, dmin = _assign(pts, centers)
    history = [float(np.sum(dmin**2))]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        for c in range(k):
            if not np.any(labels == c):
                far = int(np.argmax(dmin))
                labels[far] = c
                dmin[far] = 0.0
        centers = np.array([karcher_mean(pts[labels == c]) for c in range(k)])
        new_labels, dmin = _assign(pts, centers)
        history.append(float(np.sum(dmin**2)))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return ClusterResult(
        k=k,
        labels=labels,
        centers=centers,
        objective_history=history,
        n_iter=n_iter,
    )


def silhouette(labels, dist):
    """Per-point silhouette ``(b - a) / max(a, b)`` and its average.

    Points in singleton clusters get 0.
    """
    labels = np.asarray(labels)
    dist = np.asarray(dist, dtype=float)
    n = labels.size
    ids = np.unique(labels)
    if ids.size < 2:
        return np.zeros(n), 0.0
    onehot = (labels[:, None] == ids[None, :]).astype(float)
    counts = onehot.sum(axis=0)
    sums = dist @ onehot
    own = np.searchsorted(ids, labels)
    own_count = counts[own]
    a = np.where(own_count > 1, sums[np.arange(n), own] / np.maximum(own_count - 1, 1), 0.0)
    means = sums / counts
    means[np.arange(n), own] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where((own_count > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    return s, float(s.mean())


def pooled_variance(psis, labels, centers):
    """Sum over clusters of squared distances to the cluster centre."""
    pts = _as_srds(psis)
    c = np.asarray(centers)[np.asarray(labels)]
    return float(np.sum(np.arccos(np.clip(inner(pts, c), -1.0, 1.0)) ** 2))


def select_num_modes(psis, k_max=5, threshold=0.30, tight=1e-3):
    """Decide how many posterior modes the sample has.

    k = 2 is considered only if going from one to two clusters reduces the
    pooled variance by strictly more than ``threshold``; the final k in
    ``2..k_max`` maximizes the average silhouette.
    """
    pts = _as_srds(psis)
    n = pts.shape[0]
    dist = pairwise_distance_matrix(pts)
    one = kmeans(pts, 1)
    v1 = pooled_variance(pts, one.labels, one.centers)
    one.pooled_variance_curve = {1: v1}
    if n < 4 or dist.max() < tight or v1 <= 0.0:
        return one

    results = {}
    curve = {1: v1}
    for k in range(2, min(k_max, n - 1) + 1):
        res = kmeans(pts, k)
        res.avg_silhouette = silhouette(res.labels, dist)[1]
        curve[k] = pooled_variance(pts, res.labels, res.centers)
        results[k] = res
    if 2 not in results:
        return one
    decrease = (v1 - curve[2]) / v1
    if not decrease > threshold:
        one.pooled_variance_curve = curve
        return one
    best = max(results, key=lambda k: (results[k].avg_silhouette, -k))
    out = results[best]
    out.pooled_variance_curve = curve
    return out


#: SRSFs closer than this (relative to their norms) count as identical for DPD.
DPD_TOL = 1e-10


def dpd(q1, q2, gamma):
    """Percentage decrease of the SRSF distance achieved by warping ``q2`` with ``gamma``."""
    before = l2_distance(q1, q2)
    scale = max(l2_distance(q1, 0.0 * q1), l2_distance(q2, 0.0 * q2), 1.0)
    if before <= DPD_TOL * scale:
        raise UndefinedDPDError("DPD is undefined for identical SRSFs")
    after = l2_distance(q1, warp_srsf(q2, gamma))
    return float(100.0 * (before - after) / before)


def dpd_or_nan(q1, q2, gamma):
    try:
        return dpd(q1, q2, gamma)
    except UndefinedDPDError:
        return float("nan")


def _weighted_quantile(values, weights, q):
    """Pointwise weighted quantile along axis 0 (values shape (s, N))."""
    order = np.argsort(values, axis=0, kind="stable")
    v = np.take_along_axis(values, order, axis=0)
    w = weights[order]
    cw = np.cumsum(w, axis=0) - 0.5 * w
    out = np.empty(values.shape[1])
    for j in range(values.shape[1]):
        out[j] = np.interp(q, cw[:, j], v[:, j])
    return out


def credible_band(gammas, weights=None, level=0.95):
    """Pointwise percentile band, median and standard deviation of warps."""
    g = np.atleast_2d(np.asarray(gammas, dtype=float))
    lo_q, hi_q = (1.0 - level) / 2.0, (1.0 + level) / 2.0
    if weights is None:
        lower, med, upper = np.percentile(g, [100 * lo_q, 50.0, 100 * hi_q], axis=0)
        sd = g.std(axis=0)
    else:
        w = np.asarray(weights, dtype=float)
        w = w / w.sum()
        lower = _weighted_quantile(g, w, lo_q)
        med = _weighted_quantile(g, w, 0.5)
        upper = _weighted_quantile(g, w, hi_q)
        mean = w @ g
        sd = np.sqrt(np.maximum(w @ (g - mean) ** 2, 0.0))
    return lower, med, upper, sd


def summarize(
    psis,
    q1,
    q2,
    weights=None,
    log_posterior=None,
    prior=None,
    basis=None,
    level=0.95,
):
    """Summaries of one cluster of posterior SRD samples.

    Parameters
    ----------
    psis : ndarray, shape (s, N)
    q1, q2 : ndarray, shape (N,)
        The SRSFs that were registered.
    weights : ndarray, shape (s,), optional
        Sample weights; uniform when omitted (the usual case after SIR).
    log_posterior : ndarray, shape (s,), optional
        Unnormalized log posterior of every sample; recomputed when omitted.
    level : float
        Credible level of the pointwise band.

    Returns
    -------
    PosteriorSummary
    """
    pts = _as_srds(psis)
    n = pts.shape[0]
    if log_posterior is None:
        prior = prior or PriorConfig()
        log_posterior = log_integrated_likelihood(
            q1, q2, pts, prior.gamma_alpha, prior.gamma_beta
        ) + prior_log_density(pts, prior, basis)
    log_posterior = np.asarray(log_posterior, dtype=float)
    if log_posterior.shape != (n,):
        raise InvalidInputError("need one log posterior value per sample")

    if n == 1 or np.all(np.abs(pts - pts[0]).max(axis=1) == 0.0):
        mean_psi = median_psi = pts[0]
    else:
        mean_psi = karcher_mean(pts, weights)
        median_psi = geometric_median(pts, weights)
    map_psi = pts[int(np.argmax(log_posterior))]

    warps = [srd_to_warping(p) for p in (mean_psi, median_psi, map_psi)]
    lower, med, upper, sd = credible_band(from_srd(pts), weights, level)
    dists = [float(l2_distance(q1, warp_srsf(q2, g))) for g in warps]
    dpds = [dpd_or_nan(q1, q2, g) for g in warps]
    return PosteriorSummary(
        mean_warp=warps[0],
        median_warp=warps[1],
        map_warp=warps[2],
        pointwise_median=med,
        pointwise_sd=sd,
        band_lower=lower,
        band_upper=upper,
        level=level,
        dpd_mean=dpds[0],
        dpd_median=dpds[1],
        dpd_map=dpds[2],
        distance_mean=dists[0],
        distance_median=dists[1],
        distance_map=dists[2],
        size=n,
    )


__all__ = [
    "ClusterResult",
    "PosteriorSummary",
    "credible_band",
    "dpd",
    "hierarchical_init",
    "kmeans",
    "pairwise_distance_matrix",
    "pooled_variance",
    "select_num_modes",
    "silhouette",
    "sphere_distance",
    "summarize",
]
