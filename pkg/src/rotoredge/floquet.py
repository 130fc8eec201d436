"""Quasienergy analysis of the one-cycle operator.

Diagonalizes U, maps eigenvalue phases to quasienergies in [-pi, pi),
classifies states as extended / edge / truncation artifact, computes edge
overlaps, and scans the spectrum over kick strength.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import schur

from .basis import BasisSpec, RotorSpectrum
from .coupling import cos2_matrix
from .propagation import (
    KickBuilder,
    OneCycleOperator,
    PulseTrainSpec,
    WaveFunction,
    one_cycle_operator,
)

#: Width of the classification windows, in units of J.
EDGE_WINDOW_J = 40
#: Lower-window weight above which a state counts as localized at the edge.
EDGE_WEIGHT_MIN = 0.1
#: Upper-window weight above which a state is trusted as physical.
ARTIFACT_WEIGHT_MAX = 1e-6
#: Quasienergy degeneracy threshold.
DEGENERACY_GAP = 1e-10
#: Default gap separating a discrete level from the quasienergy bands.
DISCRETE_ISOLATION_GAP = 1e-3 * 2.0 * np.pi
#: Default gap below which neighboring quasienergies belong to one band.
BAND_GAP = 1e-4 * 2.0 * np.pi

EXTENDED, EDGE, ARTIFACT = "extended", "edge", "artifact"


@dataclass(frozen=True)
class QuasienergySet:
    """Quasienergies, eigenvectors (columns), and per-state classes.

    omegas is sorted ascending in [-pi, pi); classes is None until
    classify_edge_states has run.
    """

    omegas: np.ndarray
    vectors: np.ndarray
    basis: BasisSpec
    spectrum: RotorSpectrum
    train: PulseTrainSpec
    classes: tuple[str, ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.omegas)

    def select(self, cls: str) -> np.ndarray:
        if self.classes is None:
            raise ValueError("set is not classified yet")
        return np.array([c == cls for c in self.classes])

    def lower_window_weights(self) -> np.ndarray:
        idx = self.basis.J_values <= self.basis.J_min + (EDGE_WINDOW_J - 1)
        return np.sum(np.abs(self.vectors[idx, :]) ** 2, axis=0)

    def upper_window_weights(self) -> np.ndarray:
        idx = self.basis.J_values >= self.basis.J_max - (EDGE_WINDOW_J - 1)
        return np.sum(np.abs(self.vectors[idx, :]) ** 2, axis=0)


@dataclass(frozen=True)
class OverlapReport:
    """Total overlap of an initial state with the edge states."""

    initial_J: int
    P: float
    total: float
    contributions: tuple[tuple[float, float], ...]  # (omega, |<v|psi>|^2)


def _wrap_to_branch(phi: np.ndarray) -> np.ndarray:
    """Map angles to the branch [-pi, pi)."""
    return np.mod(phi + np.pi, 2.0 * np.pi) - np.pi


def quasienergy_decomposition(op: OneCycleOperator) -> QuasienergySet:
    """Full eigendecomposition of the one-cycle operator.

    U is unitary (normal), so its complex Schur form is diagonal and the
    Schur vectors are an orthonormal eigenbasis; degenerate clusters come
    out orthonormal automatically.
    """
    T, Z = schur(op.U, output="complex")
    lam = np.diag(T)
    omegas = _wrap_to_branch(-np.angle(lam))
    order = np.argsort(omegas, kind="stable")
    omegas = omegas[order]
    vectors = Z[:, order]
    lam = lam[order]
    residual = np.max(np.linalg.norm(op.U @ vectors - lam[None, :] * vectors, axis=0))
    if residual > 1e-8:
        worst = int(np.argmax(np.linalg.norm(op.U @ vectors - lam * vectors, axis=0)))
        raise RuntimeError(
            f"eigenvector residual {residual:.3e} > 1e-8 (worst state {worst}, "
            f"P={op.train.P}, tau={op.train.tau_fraction})"
        )
    return QuasienergySet(
        omegas=omegas,
        vectors=vectors,
        basis=op.basis,
        spectrum=op.spectrum,
        train=op.train,
    )


def classify_edge_states(qset: QuasienergySet) -> QuasienergySet:
    """Label every state as extended, edge, or truncation artifact.

    edge: lower-window weight > 0.1 and upper-window weight < 1e-6;
    artifact: upper-window weight > 0.1; everything else extended.
    """
    b = qset.basis
    if b.J_min + (EDGE_WINDOW_J - 1) >= b.J_max - (EDGE_WINDOW_J - 1):
        raise ValueError("classification windows overlap; enlarge J_max")
    lo = qset.lower_window_weights()
    hi = qset.upper_window_weights()
    classes = []
    for wl, wh in zip(lo, hi):
        if wh > EDGE_WEIGHT_MIN:
            classes.append(ARTIFACT)
        elif wl > EDGE_WEIGHT_MIN and wh < ARTIFACT_WEIGHT_MAX:
            classes.append(EDGE)
        else:
            classes.append(EXTENDED)
    return QuasienergySet(
        omegas=qset.omegas,
        vectors=qset.vectors,
        basis=qset.basis,
        spectrum=qset.spectrum,
        train=qset.train,
        classes=tuple(classes),
    )


def quasienergy_states(
    train: PulseTrainSpec,
    basis: BasisSpec,
    spectrum: RotorSpectrum,
    kick_builder: KickBuilder | None = None,
) -> QuasienergySet:
    """Convenience: build U, decompose, classify."""
    op = one_cycle_operator(train, basis, spectrum, kick_builder=kick_builder)
    return classify_edge_states(quasienergy_decomposition(op))


def edge_overlap(psi0: WaveFunction, qset: QuasienergySet) -> OverlapReport:
    """O = sum over edge states of |<v_alpha|psi0>|^2, Eq.-style overlap."""
    if qset.classes is None:
        raise ValueError("classify the quasienergy set first")
    amps = np.abs(qset.vectors.conj().T @ psi0.coeffs) ** 2
    mask = qset.select(EDGE)
    contributions = tuple(
        (float(w), float(a)) for w, a in zip(qset.omegas[mask], amps[mask])
    )
    j0 = int(qset.basis.J_values[int(np.argmax(np.abs(psi0.coeffs) ** 2))])
    return OverlapReport(
        initial_J=j0,
        P=qset.train.P,
        total=float(np.sum(amps[mask])),
        contributions=contributions,
    )


def discrete_edge_levels(
    qset: QuasienergySet, isolation_gap: float = DISCRETE_ISOLATION_GAP
) -> np.ndarray:
    """Quasienergies of edge states isolated from every extended state.

    A level is discrete when its circular distance to all extended-state
    quasienergies exceeds isolation_gap; edge states sitting at the rim of
    a band are excluded.
    """
    if qset.classes is None:
        raise ValueError("classify the quasienergy set first")
    edge_w = qset.omegas[qset.select(EDGE)]
    ext_w = qset.omegas[qset.select(EXTENDED)]
    if len(ext_w) == 0:
        return edge_w
    out = []
    for w in edge_w:
        d = np.abs(_wrap_to_branch(ext_w - w))
        if np.min(d) > isolation_gap:
            out.append(w)
    return np.array(out)


def band_structure(
    omegas: np.ndarray, gap: float = BAND_GAP
) -> list[tuple[float, float, int]]:
    """Group sorted quasienergies into bands split at gaps >= gap.

    Returns (low, high, count) per band; the first and last run are merged
    when they connect across the -pi/pi branch cut.
    """
    w = np.sort(np.asarray(omegas))
    if len(w) == 0:
        return []
    splits = np.nonzero(np.diff(w) >= gap)[0]
    starts = np.concatenate(([0], splits + 1))
    stops = np.concatenate((splits, [len(w) - 1]))
    bands = [(float(w[a]), float(w[b]), int(b - a + 1)) for a, b in zip(starts, stops)]
    if len(bands) > 1 and (w[0] + 2.0 * np.pi) - w[-1] < gap:
        lo0, hi0, n0 = bands[0]
        lon, hin, nn = bands[-1]
        bands = [(lon, hi0 + 2.0 * np.pi, n0 + nn)] + bands[1:-1]
    return bands


@dataclass(frozen=True)
class ScanPoint:
    P: float
    qset: QuasienergySet | None
    error: str | None = None


@dataclass(frozen=True)
class ScanResult:
    """Quasienergy spectrum over a kick-strength grid, plus a 2D histogram."""

    P_grid: np.ndarray
    points: tuple[ScanPoint, ...]
    omega_edges: np.ndarray
    histogram: np.ndarray  # shape (len(P_grid), omega_bins); artifacts excluded


def spectrum_scan(
    P_grid,
    tau_fraction: Fraction,
    basis: BasisSpec,
    spectrum: RotorSpectrum,
    omega_bins: int = 256,
    threads: int = 1,
) -> ScanResult:
    """Classified quasienergies for each P in an ascending grid.

    The coupling eigendecomposition is shared across all scan points; points
    are independent and may run in parallel.  A failing point is recorded and
    the scan continues.
    """
    P_grid = np.asarray(P_grid, dtype=float)
    if len(P_grid) < 2:
        raise ValueError("P_grid needs at least 2 points")
    if np.any(np.diff(P_grid) <= 0):
        raise ValueError("P_grid must be strictly ascending")
    builder = KickBuilder(cos2_matrix(basis))

    def solve(P: float) -> ScanPoint:
        try:
            train = PulseTrainSpec(P=float(P), tau_fraction=tau_fraction, N=1)
            qset = quasienergy_states(train, basis, spectrum, kick_builder=builder)
            return ScanPoint(P=float(P), qset=qset)
        except Exception as exc:  # per-point failure must not kill the scan
            return ScanPoint(P=float(P), qset=None, error=str(exc))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = tuple(pool.map(solve, P_grid))
    else:
        points = tuple(solve(P) for P in P_grid)

    omega_edges = np.linspace(-np.pi, np.pi, omega_bins + 1)
    hist = np.zeros((len(P_grid), omega_bins), dtype=int)
    for i, pt in enumerate(points):
        if pt.qset is None:
            continue
        keep = ~pt.qset.select(ARTIFACT)
        hist[i], _ = np.histogram(pt.qset.omegas[keep], bins=omega_edges)
    return ScanResult(
        P_grid=P_grid, points=points, omega_edges=omega_edges, histogram=hist
    )


def reconstruct(psi0: WaveFunction, qset: QuasienergySet, n_cycles: int) -> np.ndarray:
    """State after n cycles from the quasienergy expansion.

    psi(n tau) = sum_alpha C_alpha exp(-i omega_alpha n) v_alpha with
    C_alpha = <v_alpha|psi(0)>.
    """
    c_alpha = qset.vectors.conj().T @ psi0.coeffs
    return qset.vectors @ (np.exp(-1j * qset.omegas * n_cycles) * c_alpha)


def planar_reference_spectrum(
    P: float, tau_fraction: Fraction, grid_size: int
) -> np.ndarray:
    """Quasienergies of the kicked planar (2D) rotor, for contrast tests.

    Levels E_J = J^2/2 on J in [-grid_size, grid_size], revival time 4*pi,
    standard cos(phi) kick (elements 1/2 between J and J +- 1).  The planar
    angular momentum is unbounded, so the spectrum has no edge effects; at
    tau = t_rev/2 it collapses to two values differing by pi.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    J = np.arange(-grid_size, grid_size + 1)
    dim = len(J)
    tau = float(tau_fraction) * 4.0 * np.pi
    C = np.zeros((dim, dim))
    i = np.arange(dim - 1)
    C[i, i + 1] = 0.5
    C[i + 1, i] = 0.5
    w, V = np.linalg.eigh(C)
    K = (V * np.exp(1j * P * w)) @ V.T
    d = np.exp(-1j * (J * J / 2.0) * tau / 2.0)
    U = d[:, None] * K * d[None, :]
    return np.sort(_wrap_to_branch(-np.angle(np.linalg.eigvals(U))))
