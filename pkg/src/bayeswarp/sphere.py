"""Square-root densities of warping functions and geometry of the unit sphere.

A warping function ``gamma`` is represented by ``psi = sqrt(gamma')``, a
unit-norm element of L2[0, 1].  The Fisher-Rao geometry of warps becomes the
great-circle geometry of the sphere, so distances, geodesics, exponential
and log maps and parallel transport all have closed forms.

Functions that take a single base point accept a batch (2-D array, one
point per row) for the other argument.
"""

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import ConvergenceError, DegeneratePairError, InvalidInputError
from .functions import (
    as_function,
    check_same_length,
    derivative,
    inner,
    l2_norm,
    make_warping,
)

#: Below this tangent-vector norm the sinc-type factors use Taylor series.
SMALL_NORM = 1e-9
#: Pairs closer than this to antipodal are rejected by log map and geodesic.
ANTIPODAL_MARGIN = 1e-6


def normalize(psi):
    psi = np.asarray(psi, dtype=float)
    norm = l2_norm(psi)
    return psi / np.expand_dims(norm, -1) if psi.ndim > 1 else psi / norm


def to_srd(gamma):
    """SRD ``sqrt(gamma')`` of a warping function, renormalized to unit norm."""
    gamma = as_function(gamma, "gamma")
    if np.any(np.diff(gamma) <= 0):
        raise InvalidInputError("gamma must be strictly increasing")
    slope = np.maximum(derivative(gamma), 0.0)
    return normalize(np.sqrt(slope))


def from_srd(psi):
    """Warping function ``int_0^t psi(s)^2 ds``, rescaled to end at exactly 1.

    Accepts a batch of SRDs (one per row) as well.
    """
    psi = np.asarray(psi, dtype=float)
    h = 1.0 / (psi.shape[-1] - 1)
    gam = cumulative_trapezoid(psi * psi, dx=h, axis=-1, initial=0.0)
    gam /= gam[..., -1:]
    gam[..., -1] = 1.0
    return gam


def srd_to_warping(psi):
    """Like :func:`from_srd` but also repairs flat stretches (single SRD)."""
    return make_warping(from_srd(psi))


def _cos_sinc(x):
    """Return ``cos(x)`` and ``sin(x) / x`` with a series near zero."""
    x = np.asarray(x, dtype=float)
    small = x < SMALL_NORM
    safe = np.where(small, 1.0, x)
    cos = np.where(small, 1.0 - 0.5 * x * x, np.cos(x))
    sinc = np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)
    return cos, sinc


def sphere_distance(psi1, psi2):
    """Arc length ``arccos <psi1, psi2>`` (Fisher-Rao distance of the warps)."""
    check_same_length(psi1, psi2)
    return np.arccos(np.clip(inner(psi1, psi2), -1.0, 1.0))


def fisher_rao_distance(gamma1, gamma2):
    """Fisher-Rao distance between two warping functions."""
    return sphere_distance(to_srd(gamma1), to_srd(gamma2))


def exp_map(psi, v):
    """Exponential map ``cos|v| psi + sin|v| v / |v|``, output renormalized."""
    psi = np.asarray(psi, dtype=float)
    v = np.asarray(v, dtype=float)
    check_same_length(psi, v)
    nv = l2_norm(v)
    cos, sinc = _cos_sinc(nv)
    out = np.expand_dims(cos, -1) * psi + np.expand_dims(sinc, -1) * v
    return normalize(out)


def log_map(psi1, psi2):
    """Inverse exponential map at ``psi1``: ``theta/sin(theta) (psi2 - cos(theta) psi1)``.

    Raises
    ------
    DegeneratePairError
        If ``theta >= pi - 1e-6`` for any pair.
    """
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.asarray(psi2, dtype=float)
    check_same_length(psi1, psi2)
    cos_t = np.clip(inner(psi1, psi2), -1.0, 1.0)
    theta = np.arccos(cos_t)
    if np.any(theta >= np.pi - ANTIPODAL_MARGIN):
        raise DegeneratePairError("log map undefined for antipodal points")
    _, sinc = _cos_sinc(theta)
    return (psi2 - np.expand_dims(cos_t, -1) * psi1) / np.expand_dims(sinc, -1)


def parallel_transport(v, psi1, psi2):
    """Transport ``v`` in the tangent space at ``psi1`` to the one at ``psi2``.

    ``v`` may be a batch of tangent vectors sharing the base point ``psi1``.
    """
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.asarray(psi2, dtype=float)
    v = np.asarray(v, dtype=float)
    s = psi1 + psi2
    ss = inner(s, s)
    if ss < (ANTIPODAL_MARGIN) ** 2:
        raise DegeneratePairError("parallel transport undefined for antipodal points")
    coef = 2.0 * inner(v, psi2) / ss
    return v - np.expand_dims(coef, -1) * s


def project_tangent(psi, v):
    """Orthogonal projection of ``v`` onto the tangent space at unit ``psi``."""
    v = np.asarray(v, dtype=float)
    return v - np.expand_dims(inner(v, psi), -1) * psi


def geodesic(psi1, psi2, tau):
    """Point at fraction ``tau`` of the great-circle arc from psi1 to psi2."""
    psi1 = np.asarray(psi1, dtype=float)
    psi2 = np.asarray(psi2, dtype=float)
    theta = float(sphere_distance(psi1, psi2))
    if theta >= np.pi - ANTIPODAL_MARGIN:
        raise DegeneratePairError("geodesic undefined for antipodal points")
    if theta == 0.0:
        return psi1.copy()
    out = (np.sin(theta - theta * tau) * psi1 + np.sin(theta * tau) * psi2) / np.sin(theta)
    return normalize(out)


# -- summary statistics --------------------------------------------------


def _as_points(psis):
    pts = np.asarray(psis, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise InvalidInputError("expected a non-empty list of SRDs")
    return pts


def _as_weights(weights, n):
    if weights is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,) or np.any(w < 0) or w.sum() <= 0:
        raise InvalidInputError("weights must be nonnegative, one per point, not all 0")
    return w / w.sum()


def _extrinsic_start(pts, w):
    # weights summed in sorted order so that the start ignores input order
    order = np.lexsort(pts.T[::-1])
    start = (w[order, None] * pts[order]).sum(axis=0)
    if l2_norm(start) < 1e-12:
        start = pts[order[0]]
    return normalize(start)


def karcher_mean(psis, weights=None, tol=1e-8, max_iter=200):
    """Intrinsic (Karcher) mean on the sphere by gradient descent, step 1.

    Starts at the normalized extrinsic average.  Iterates until the norm of
    the averaged log maps drops below ``tol``.

    Raises
    ------
    ConvergenceError
        If the gradient norm is still above ``max(tol, 1e-6)`` after
        ``max_iter`` steps.
    """
    pts = _as_points(psis)
    w = _as_weights(weights, pts.shape[0])
    mu = _extrinsic_start(pts, w)
    grad_norm = np.inf
    for _ in range(max_iter):
        grad = w @ log_map(mu, pts)
        grad_norm = float(l2_norm(grad))
        if grad_norm < tol:
            return mu
        mu = exp_map(mu, grad)
    if grad_norm < max(tol, 1e-6):
        return mu
    raise ConvergenceError(
        f"Karcher mean did not converge in {max_iter} iterations "
        f"(gradient norm {grad_norm:.3g})",
        last_iterate=mu,
    )


def _first_tangent_direction(psi):
    # first raw tangent direction at psi (linear element), made tangent
    n = psi.shape[-1]
    t = np.linspace(0.0, 1.0, n)
    d = project_tangent(psi, np.sqrt(3.0) * (1.0 - 2.0 * t))
    return d / l2_norm(d)


def geometric_median(psis, weights=None, tol=1e-6, max_iter=1000):
    """Geometric median on the sphere by a Weiszfeld-type iteration.

    When an iterate lands within 1e-12 of a data point the subdifferential
    there is checked: if it contains zero the data point is the median,
    otherwise the iterate is nudged by 1e-8 along the first tangent basis
    direction and the iteration continues.  For two points every point of
    the connecting arc is a minimizer; whichever fixed point the iteration
    reaches is returned.
    """
    pts = _as_points(psis)
    w = _as_weights(weights, pts.shape[0])
    mu = _extrinsic_start(pts, w)
    sub_norm = np.inf
    for _ in range(max_iter):
        logs = log_map(mu, pts)
        dist = l2_norm(logs)
        at_point = dist < 1e-12
        if at_point.any():
            others = ~at_point
            pull = (w[others, None] * logs[others] / dist[others, None]).sum(axis=0)
            if l2_norm(pull) <= w[at_point].sum() + 1e-12:
                return mu
            mu = exp_map(mu, 1e-8 * _first_tangent_direction(mu))
            continue
        inv = w / dist
        sub = inv @ logs
        sub_norm = float(l2_norm(sub))
        if sub_norm < tol:
            return mu
        mu = exp_map(mu, sub / inv.sum())
    raise ConvergenceError(
        f"geometric median did not converge in {max_iter} iterations "
        f"(subgradient norm {sub_norm:.3g})",
        last_iterate=mu,
    )
