"""Orthonormal Fourier-type bases of tangent spaces of the SRD sphere."""

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateBasisError, InvalidInputError
from .functions import check_same_length, inner, inner_matrix, l2_norm
from .sphere import log_map, parallel_transport


@dataclass(frozen=True)
class OrthonormalBasis:
    """``m`` orthonormal tangent vectors (rows of ``elements``) at ``basepoint``."""

    elements: np.ndarray
    basepoint: np.ndarray

    @property
    def size(self):
        return self.elements.shape[0]

    @property
    def n_points(self):
        return self.elements.shape[1]

    def gram(self):
        return inner_matrix(self.elements, self.elements)


def order_for_size(m):
    """Fourier order ``n`` such that ``2n + 1 == m`` (``m`` must be odd)."""
    if m < 1 or m % 2 == 0:
        raise InvalidInputError(f"basis size must be a positive odd number, got {m}")
    return (m - 1) // 2


def default_basis_size(n_points):
    """``N - 1`` elements, or ``N - 2`` when that is needed to keep the size odd."""
    m = n_points - 1
    return m if m % 2 == 1 else m - 1


def raw_basis(n, n_points):
    """Unorthogonalized tangent directions at the identity SRD.

    Rows are ordered as ``[sqrt(3)(1-2t), sqrt(2)sin(2 pi t), sqrt(2)cos(2 pi t),
    ..., sqrt(2)sin(2 pi n t), sqrt(2)cos(2 pi n t)]``.
    """
    if n < 0 or 2 * n + 1 > n_points - 1:
        raise InvalidInputError(
            f"Fourier order {n} too large for a grid of {n_points} points"
        )
    t = np.linspace(0.0, 1.0, n_points)
    rows = [np.sqrt(3.0) * (1.0 - 2.0 * t)]
    for ell in range(1, n + 1):
        rows.append(np.sqrt(2.0) * np.sin(2.0 * np.pi * ell * t))
        rows.append(np.sqrt(2.0) * np.cos(2.0 * np.pi * ell * t))
    return np.array(rows)


def gram_schmidt(raw, basepoint=None, pivot_tol=1e-10):
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    The inner product is the trapezoidal L2 product on the grid.  Every
    output row is also made orthogonal to ``basepoint`` (the constant SRD by
    default), so the result spans a subspace of its tangent space.

    Raises
    ------
    DegenerateBasisError
        If a pivot norm falls below ``pivot_tol``.
    """
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    n_points = raw.shape[1]
    if basepoint is None:
        basepoint = np.ones(n_points)
    basepoint = np.asarray(basepoint, dtype=float)
    check_same_length(raw, basepoint)
    basepoint = basepoint / l2_norm(basepoint)

    out = []
    for j, row in enumerate(raw):
        u = row.copy()
        for _ in range(2):
            u -= inner(u, basepoint) * basepoint
            for e in out:
                u -= inner(u, e) * e
        norm = l2_norm(u)
        if norm < pivot_tol:
            raise DegenerateBasisError(f"raw element {j} is linearly dependent")
        out.append(u / norm)
    return OrthonormalBasis(np.array(out), basepoint)


def identity_basis(n_points, m=None):
    """Orthonormal basis of size ``m`` at the identity SRD (default ``N - 1``)."""
    if m is None:
        m = default_basis_size(n_points)
    return gram_schmidt(raw_basis(order_for_size(m), n_points))


def transport_basis(basis, mu):
    """Parallel transport every element of ``basis`` to the SRD ``mu``."""
    mu = np.asarray(mu, dtype=float)
    check_same_length(basis.elements, mu)
    moved = parallel_transport(basis.elements, basis.basepoint, mu)
    return OrthonormalBasis(moved, mu)


def project(psi, basis):
    """Coefficients ``<log_mu(psi), b_k>`` of one SRD or a batch of them."""
    logs = log_map(basis.basepoint, psi)
    coeffs = inner_matrix(logs, basis.elements)
    return coeffs[0] if np.ndim(psi) == 1 else coeffs


def reconstruct(coeffs, basis):
    """Tangent vector ``sum_k c_k b_k`` (batched over leading axes of ``coeffs``)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[-1] != basis.size:
        raise InvalidInputError(
            f"expected {basis.size} coefficients, got {coeffs.shape[-1]}"
        )
    return coeffs @ basis.elements
