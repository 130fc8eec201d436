"""Matrix of cos^2(theta) in the |J, M> basis.

The production path uses the closed-form elements obtained from
cos^2(theta) = 1/3 + (2/3) P_2(cos theta) and the standard P_2 matrix
elements between spherical harmonics.  An independent Gauss-Legendre
quadrature over normalized associated Legendre functions serves as the
validation oracle (test-suite only).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSpec


@dataclass(frozen=True)
class CouplingMatrix:
    """Banded symmetric representation of cos^2(theta) on a parity grid.

    diag[i]    = <J_i, M| cos^2 |J_i, M>
    offdiag[i] = <J_i + 2, M| cos^2 |J_i, M>   (length dim - 1)
    """

    diag: np.ndarray
    offdiag: np.ndarray
    basis: BasisSpec

    def dense(self) -> np.ndarray:
        a = np.diag(self.diag)
        i = np.arange(self.basis.dim - 1)
        a[i, i + 1] = self.offdiag
        a[i + 1, i] = self.offdiag
        return a

    def expectation(self, coeffs: np.ndarray) -> float:
        """<psi| cos^2 |psi> using the banded structure."""
        c = np.asarray(coeffs)
        val = np.sum(self.diag * np.abs(c) ** 2)
        val += 2.0 * np.real(np.sum(self.offdiag * np.conj(c[:-1]) * c[1:]))
        return float(val)


def diagonal_element(J, M):
    """<J,M| cos^2 |J,M> = 1/3 + (2/3) [J(J+1) - 3M^2] / [(2J-1)(2J+3)]."""
    J = np.asarray(J, dtype=float)
    M = float(M)
    num = J * (J + 1.0) - 3.0 * M * M
    den = (2.0 * J - 1.0) * (2.0 * J + 3.0)
    return 1.0 / 3.0 + (2.0 / 3.0) * num / den


def offdiagonal_element(J, M):
    """<J+2,M| cos^2 |J,M>; vanishing unless J, J+2 >= |M|."""
    J = np.asarray(J, dtype=float)
    M = float(M)
    num = ((J + 1.0) ** 2 - M * M) * ((J + 2.0) ** 2 - M * M)
    den = (2.0 * J + 1.0) * (2.0 * J + 5.0)
    return np.sqrt(np.maximum(num, 0.0) / den) / (2.0 * J + 3.0)


def cos2_matrix(basis: BasisSpec) -> CouplingMatrix:
    """Analytic banded cos^2(theta) matrix on the basis grid."""
    J = basis.J_values
    diag = diagonal_element(J, basis.M)
    offdiag = offdiagonal_element(J[:-1], basis.M)
    return CouplingMatrix(diag=diag, offdiag=offdiag, basis=basis)


def _normalized_legendre(J_top: int, M: int, x: np.ndarray) -> np.ndarray:
    """Table P[J, k] of normalized associated Legendre P-bar_J^M(x_k).

    Normalized so that integral over [-1, 1] of P-bar^2 dx = 1.  Stable
    upward three-term recurrence in J at fixed M.
    """
    M = abs(M)
    n = len(x)
    table = np.zeros((J_top + 1, n))
    if J_top < M:
        return table
    # seed: P-bar_M^M, built as a running product to avoid overflow
    pmm = np.full(n, np.sqrt((2.0 * M + 1.0) / 2.0))
    sx = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    for k in range(1, M + 1):
        pmm *= sx * np.sqrt((2.0 * k - 1.0) / (2.0 * k))
    table[M] = pmm
    if J_top > M:
        table[M + 1] = x * np.sqrt(2.0 * M + 3.0) * pmm
    for J in range(M + 2, J_top + 1):
        a = np.sqrt((4.0 * J * J - 1.0) / (J * J - M * M))
        b = np.sqrt(((J - 1.0) ** 2 - M * M) / (4.0 * (J - 1.0) ** 2 - 1.0))
        table[J] = a * (x * table[J - 1] - b * table[J - 2])
    return table


def quadrature_element(J1: int, J2: int, M: int, order: int | None = None) -> float:
    """Oracle: <J1,M| cos^2 |J2,M> by Gauss-Legendre quadrature.

    The integrand is a polynomial of degree J1 + J2 + 2 in cos(theta), so an
    order-n rule is exact for 2n - 1 >= J1 + J2 + 2.
    """
    if J1 < abs(M) or J2 < abs(M):
        raise ValueError("J1 and J2 must both be >= |M|")
    needed = (J1 + J2 + 2) // 2 + 1
    if order is None:
        order = needed + 2
    elif order < needed:
        raise ValueError(f"quadrature order {order} too low; need >= {needed}")
    x, w = np.polynomial.legendre.leggauss(order)
    table = _normalized_legendre(max(J1, J2), M, x)
    return float(np.sum(w * x * x * table[J1] * table[J2]))


def quadrature_band(basis: BasisSpec) -> tuple[np.ndarray, np.ndarray]:
    """Oracle diag/offdiag over a full grid, sharing one node table."""
    J = basis.J_values
    top = int(J[-1]) + 2
    order = top + 3
    x, w = np.polynomial.legendre.leggauss(order)
    table = _normalized_legendre(top, basis.M, x)
    wx2 = w * x * x
    diag = np.array([np.sum(wx2 * table[j] * table[j]) for j in J])
    offdiag = np.array([np.sum(wx2 * table[j] * table[j + 2]) for j in J[:-1]])
    return diag, offdiag
