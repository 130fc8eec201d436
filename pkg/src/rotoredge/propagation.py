"""Kick and free-evolution propagators for periodic pulse trains.

The one-cycle operator is U = D K D with D = diag(exp(-i E_J tau/2)) and
K = exp(i P cos^2 theta), i.e. symmetric splitting with half a period of free
evolution on each side of the kick.  K is built from the eigendecomposition
of the banded coupling matrix, so U is exactly unitary.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .basis import T_REV, BasisSpec, RotorSpectrum, UnitBridge, energies
from .basis import C_M_PER_S, EPSILON_0, HBAR
from .coupling import CouplingMatrix, cos2_matrix

#: Number of top grid sites watched by the truncation guard.
GUARD_SITES = 40
#: Maximum tolerated population in the guard window during propagation.
GUARD_THRESHOLD = 1e-8


class TruncationError(RuntimeError):
    """Population reached the artificial upper edge of the J grid."""

    def __init__(self, cycle: int, leak: float):
        super().__init__(
            f"truncation guard violated at cycle {cycle}: top-edge population "
            f"{leak:.3e} > {GUARD_THRESHOLD:.0e}; enlarge J_max"
        )
        self.cycle = cycle
        self.leak = leak


@dataclass(frozen=True)
class WaveFunction:
    """State coefficients C_J over a basis grid at a given reduced time."""

    coeffs: np.ndarray
    basis: BasisSpec
    time: float = 0.0

    @classmethod
    def basis_state(cls, basis: BasisSpec, J0: int) -> "WaveFunction":
        c = np.zeros(basis.dim, dtype=complex)
        c[basis.index_of(J0)] = 1.0
        return cls(coeffs=c, basis=basis)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def fidelity(self, other: "WaveFunction") -> float:
        """|<self|other>|^2."""
        return float(np.abs(np.vdot(self.coeffs, other.coeffs)) ** 2)

    def edge_leak(self) -> float:
        """Population in the top guard window of the grid.

        The window is 40 sites, capped at half the grid so the guard stays
        meaningful on small test grids.
        """
        g = min(GUARD_SITES, self.basis.dim // 2)
        return float(np.sum(np.abs(self.coeffs[-g:]) ** 2))


@dataclass(frozen=True)
class PulseTrainSpec:
    """Periodic pulse train: strength P, period (p/q) t_rev, N pulses.

    shape is "delta" for instantaneous kicks or "gaussian" for finite pulses
    with the given intensity FWHM (reduced time); in the gaussian case P is
    the effective integrated kick strength.
    """

    P: float
    tau_fraction: Fraction
    N: int
    shape: str = "delta"
    fwhm: float | None = None

    def __post_init__(self):
        if self.P < 0:
            raise ValueError("P must be >= 0")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.tau_fraction <= 0:
            raise ValueError("tau_fraction must be positive")
        if self.shape not in ("delta", "gaussian"):
            raise ValueError(f"unknown pulse shape {self.shape!r}")
        if self.shape == "gaussian" and (self.fwhm is None or self.fwhm <= 0):
            raise ValueError("gaussian shape requires a positive fwhm")

    @property
    def tau(self) -> float:
        """Kicking period in reduced time."""
        return float(self.tau_fraction) * T_REV


class KickBuilder:
    """Eigendecomposition of the coupling matrix, reused across P values."""

    def __init__(self, coupling: CouplingMatrix):
        if len(coupling.offdiag) > 0:
            self.eigvals, self.eigvecs = eigh_tridiagonal(
                coupling.diag, coupling.offdiag
            )
        else:
            self.eigvals = coupling.diag.copy()
            self.eigvecs = np.eye(1)
        self.coupling = coupling

    def kick(self, P: float) -> np.ndarray:
        """exp(i P cos^2 theta) as a dense unitary matrix."""
        return (self.eigvecs * np.exp(1j * P * self.eigvals)) @ self.eigvecs.T

    def apply_kick(self, P: float, coeffs: np.ndarray) -> np.ndarray:
        """Kick applied to a coefficient vector (or a stack of columns)."""
        phases = np.exp(1j * P * self.eigvals)
        proj = self.eigvecs.T @ coeffs
        if proj.ndim == 1:
            return self.eigvecs @ (phases * proj)
        return self.eigvecs @ (phases[:, None] * proj)


def kick_operator(P: float, coupling: CouplingMatrix) -> np.ndarray:
    """exp(i P cos^2 theta) on the grid of the coupling matrix."""
    return KickBuilder(coupling).kick(P)


@dataclass(frozen=True)
class OneCycleOperator:
    """Pulse-to-pulse evolution operator on the truncated grid."""

    U: np.ndarray
    basis: BasisSpec
    spectrum: RotorSpectrum
    train: PulseTrainSpec

    def interior_unitarity_residual(self) -> float:
        """max over interior columns of ||(U^dag U - I) e_J||."""
        r = self.U.conj().T @ self.U - np.eye(self.basis.dim)
        interior = self.basis.dim - GUARD_SITES // 2
        return float(np.max(np.linalg.norm(r[:, :interior], axis=0)))


def free_phases(basis: BasisSpec, spectrum: RotorSpectrum, t: float) -> np.ndarray:
    """diag(exp(-i E_J t)) as a phase vector."""
    return np.exp(-1j * energies(basis, spectrum) * t)


def one_cycle_operator(
    train: PulseTrainSpec,
    basis: BasisSpec,
    spectrum: RotorSpectrum,
    kick_builder: KickBuilder | None = None,
) -> OneCycleOperator:
    """U = D K D for a delta-kick train (D = half-period free phases)."""
    if train.shape != "delta":
        raise ValueError("one_cycle_operator requires delta kicks; "
                         "use finite_pulse_cycle for finite pulses")
    if kick_builder is None:
        kick_builder = KickBuilder(cos2_matrix(basis))
    d = free_phases(basis, spectrum, train.tau / 2.0)
    K = kick_builder.kick(train.P)
    U = d[:, None] * K * d[None, :]
    return OneCycleOperator(U=U, basis=basis, spectrum=spectrum, train=train)


def propagate_train(
    psi0: WaveFunction,
    train: PulseTrainSpec,
    spectrum: RotorSpectrum,
    check_guard: bool = True,
    cycle_op: OneCycleOperator | None = None,
) -> list[WaveFunction]:
    """Snapshots at cycle boundaries: [psi(0), psi(tau), ..., psi(N tau)].

    Raises TruncationError when population reaches the top of the grid
    (only trustworthy dynamics are returned).
    """
    if abs(psi0.norm() - 1.0) > 1e-8:
        raise ValueError("initial state must be normalized")
    if check_guard and psi0.edge_leak() > GUARD_THRESHOLD:
        raise TruncationError(0, psi0.edge_leak())
    if cycle_op is None:
        cycle_op = one_cycle_operator(train, psi0.basis, spectrum)
    out = [psi0]
    c = psi0.coeffs
    for n in range(1, train.N + 1):
        c = cycle_op.U @ c
        psi = WaveFunction(coeffs=c, basis=psi0.basis, time=psi0.time + n * train.tau)
        if check_guard and psi.edge_leak() > GUARD_THRESHOLD:
            raise TruncationError(n, psi.edge_leak())
        out.append(psi)
    return out


def finite_pulse_cycle(
    psi: WaveFunction,
    train: PulseTrainSpec,
    spectrum: RotorSpectrum,
    dt: float,
    kick_builder: KickBuilder | None = None,
) -> WaveFunction:
    """One period with a finite Gaussian pulse, split-operator integration.

    The pulse is centered at tau/2 and truncated at +-3 FWHM; the discrete
    envelope weights are renormalized so the integrated kick strength equals
    train.P exactly.  Each step is half-step free phases, envelope-weighted
    kick increment, half-step free phases.
    """
    if train.shape != "gaussian":
        raise ValueError("finite_pulse_cycle requires a gaussian pulse shape")
    basis = psi.basis
    E = energies(basis, spectrum)
    e_max = float(np.max(np.abs(E)))
    if dt > train.fwhm / 64.0:
        raise ValueError(
            f"dt={dt:g} too coarse for the envelope; need dt <= fwhm/64 = "
            f"{train.fwhm / 64.0:g}"
        )
    if dt * e_max >= 0.1:
        raise ValueError(
            f"dt={dt:g} too coarse for the fastest phase; need dt < "
            f"{0.1 / e_max:g} (0.1 / E_Jmax)"
        )
    half_window = 3.0 * train.fwhm
    if 2.0 * half_window > train.tau:
        raise ValueError("pulse window exceeds the kicking period")
    if kick_builder is None:
        kick_builder = KickBuilder(cos2_matrix(basis))

    n_steps = int(np.ceil(2.0 * half_window / dt))
    step = 2.0 * half_window / n_steps
    # midpoint envelope samples, renormalized to unit integral
    t_mid = -half_window + (np.arange(n_steps) + 0.5) * step
    env = np.exp(-4.0 * np.log(2.0) * (t_mid / train.fwhm) ** 2)
    env /= env.sum()

    c = psi.coeffs.copy()
    c = c * np.exp(-1j * E * (train.tau / 2.0 - half_window))
    half = np.exp(-1j * E * step / 2.0)
    for g in env:
        c = half * c
        c = kick_builder.apply_kick(train.P * g, c)
        c = half * c
    c = c * np.exp(-1j * E * (train.tau / 2.0 - half_window))
    return WaveFunction(coeffs=c, basis=basis, time=psi.time + train.tau)


def kick_strength_from_pulse(
    bridge: UnitBridge, peak_intensity: float, fwhm: float
) -> float:
    """Effective kick strength P of a Gaussian laser pulse.

    P = (delta_alpha / 4 hbar) * integral of E^2(t) dt, with peak_intensity
    in W/cm^2 and fwhm (of the intensity envelope) in seconds.
    """
    if peak_intensity < 0 or fwhm <= 0:
        raise ValueError("need peak_intensity >= 0 and fwhm > 0")
    if bridge.polarizability_anisotropy <= 0 and peak_intensity > 0:
        raise ValueError("polarizability_anisotropy missing from unit bridge")
    i0 = peak_intensity * 1e4  # W/cm^2 -> W/m^2
    t_eff = fwhm * np.sqrt(np.pi / (4.0 * np.log(2.0)))
    field_sq_integral = 2.0 * i0 * t_eff / (C_M_PER_S * EPSILON_0)
    delta_alpha_si = 4.0 * np.pi * EPSILON_0 * bridge.polarizability_anisotropy
    return delta_alpha_si * field_sq_integral / (4.0 * HBAR)
