"""Sampled functions on [0, 1], SRSFs and the action of warping functions.

All objects are plain 1-D ``numpy`` arrays holding values on the uniform
grid ``t_i = i / (N - 1)``.  Batched helpers accept 2-D arrays whose last
axis is the grid axis.
"""

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .exceptions import InvalidInputError

#: Warping increments below this are clamped by :func:`make_warping`.
MIN_INCREMENT = 1e-10


def uniform_grid(n_points):
    """Return the uniform grid of ``n_points`` points on [0, 1]."""
    if n_points < 3:
        raise InvalidInputError(f"grid needs at least 3 points, got {n_points}")
    return np.linspace(0.0, 1.0, int(n_points))


def trapz_weights(n_points):
    """Trapezoidal quadrature weights for the uniform grid on [0, 1]."""
    w = np.full(n_points, 1.0 / (n_points - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def inner(a, b):
    """L2 inner product by the trapezoidal rule, along the last axis."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (a * b) @ trapz_weights(np.shape(a)[-1])


def inner_matrix(a, b):
    """Matrix of trapezoidal inner products between the rows of ``a`` and ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return (a * trapz_weights(a.shape[-1])) @ b.T


def l2_norm(a):
    return np.sqrt(np.maximum(inner(a, a), 0.0))


def derivative(values):
    """Finite-difference derivative along the last axis.

    Central differences inside, second-order one-sided differences at the
    two endpoints.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    h = 1.0 / (n - 1)
    out = np.empty_like(values)
    out[..., 1:-1] = (values[..., 2:] - values[..., :-2]) / (2.0 * h)
    out[..., 0] = (-3.0 * values[..., 0] + 4.0 * values[..., 1] - values[..., 2]) / (2.0 * h)
    out[..., -1] = (3.0 * values[..., -1] - 4.0 * values[..., -2] + values[..., -3]) / (2.0 * h)
    return out


def interp_uniform(values, x):
    """Piecewise-linear interpolation of grid ``values`` at points ``x``.

    Equivalent to ``np.interp(x, grid, values)`` but broadcasts over a
    leading batch axis of ``x`` (``values`` stays 1-D).
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    pos = np.clip(np.asarray(x, dtype=float), 0.0, 1.0) * (n - 1)
    # snap round-off so that grid points reproduce the grid values exactly
    near = np.rint(pos)
    pos = np.where(np.abs(pos - near) < 1e-9, near, pos)
    left = np.minimum(np.floor(pos).astype(np.intp), n - 2)
    frac = pos - left
    return values[left] * (1.0 - frac) + values[left + 1] * frac


# -- validation ----------------------------------------------------------


def as_function(values, name="f"):
    """Validate a sampled function and return it as a float array."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < 3:
        raise InvalidInputError(f"{name} needs at least 3 grid points, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def as_warping(values, name="gamma", atol=1e-12):
    """Validate a warping function: fixed endpoints, strictly increasing."""
    gam = as_function(values, name)
    if abs(gam[0]) > atol or abs(gam[-1] - 1.0) > atol:
        raise InvalidInputError(f"{name} must satisfy {name}(0)=0 and {name}(1)=1")
    if np.any(np.diff(gam) <= 0):
        raise InvalidInputError(f"{name} must be strictly increasing")
    return gam


def check_same_length(a, b):
    if np.shape(a)[-1] != np.shape(b)[-1]:
        raise InvalidInputError(
            f"grid length mismatch: {np.shape(a)[-1]} != {np.shape(b)[-1]}"
        )


def make_warping(values, return_clamps=False):
    """Turn a numerically noisy increasing sequence into a valid warp.

    Increments below ``MIN_INCREMENT`` are raised to it and the result is
    rescaled so that it runs from exactly 0 to exactly 1.

    Parameters
    ----------
    values : array_like, shape (N,)
        Approximate warping function values.
    return_clamps : bool
        Also return the number of clamped increments.
    """
    arr = as_function(values, "gamma")
    inc = np.diff(arr)
    clamped = inc < MIN_INCREMENT
    inc = np.where(clamped, MIN_INCREMENT, inc)
    gam = np.concatenate(([0.0], np.cumsum(inc)))
    gam /= gam[-1]
    gam[-1] = 1.0
    if return_clamps:
        return gam, int(clamped.sum())
    return gam


def identity_warp(n_points):
    return uniform_grid(n_points)


def invert_warp(gamma):
    """Inverse warp on the same grid, by swapping the axes of the graph."""
    gam = as_warping(gamma)
    t = uniform_grid(gam.size)
    return make_warping(np.interp(t, gam, t))


def compose_warps(gamma1, gamma2):
    """Return ``gamma1 o gamma2``."""
    check_same_length(gamma1, gamma2)
    return make_warping(interp_uniform(gamma1, gamma2))


# -- SRSF ----------------------------------------------------------------


def compute_srsf(f):
    """Square-root slope function ``sign(f') sqrt(|f'|)`` of a sampled function."""
    f = as_function(f)
    df = derivative(f)
    return np.sign(df) * np.sqrt(np.abs(df))


def srsf_to_function(q, f0=0.0):
    """Reconstruct ``f(t) = f0 + int_0^t q|q| ds`` by cumulative trapezoid."""
    q = as_function(q, "q")
    h = 1.0 / (q.size - 1)
    return f0 + cumulative_trapezoid(q * np.abs(q), dx=h, initial=0.0)


def warp_function(f, gamma):
    """Composition ``f o gamma`` by linear interpolation."""
    f = as_function(f)
    gamma = as_function(gamma, "gamma")
    check_same_length(f, gamma)
    if gamma.min() < 0.0 or gamma.max() > 1.0:
        raise InvalidInputError("gamma takes values outside [0, 1]")
    return interp_uniform(f, gamma)


def warp_srsf(q, gamma):
    """Group action ``(q o gamma) sqrt(gamma')`` on an SRSF.

    ``gamma`` may also be a 2-D batch of warps (one per row); the result
    then has the same shape.
    """
    q = as_function(q, "q")
    gamma = np.asarray(gamma, dtype=float)
    check_same_length(q, gamma)
    if not np.all(np.isfinite(gamma)):
        raise InvalidInputError("gamma contains non-finite values")
    if gamma.min() < 0.0 or gamma.max() > 1.0:
        raise InvalidInputError("gamma takes values outside [0, 1]")
    slope = np.maximum(derivative(gamma), 0.0)
    return interp_uniform(q, gamma) * np.sqrt(slope)


def l2_distance(q1, q2):
    """Trapezoidal L2 distance between two functions on the same grid."""
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    check_same_length(q1, q2)
    return l2_norm(q1 - q2)
