"""Angular-momentum basis, rotor energy levels, and physical-unit conversions.

Reduced units are used throughout the numerical core: energy in hbar^2/I and
time in I/hbar, so that the rigid-rotor levels are E_J = J(J+1)/2 and the
revival time is 2*pi.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# CODATA 2018
HBAR = 1.054571817e-34      # J s
PLANCK_H = 6.62607015e-34   # J s
C_CM_PER_S = 2.99792458e10  # speed of light, cm/s
C_M_PER_S = 2.99792458e8    # speed of light, m/s
EPSILON_0 = 8.8541878128e-12  # F/m
K_BOLTZMANN = 1.380649e-23  # J/K

#: Rigid-rotor revival time in reduced units.
T_REV = 2.0 * np.pi


@dataclass(frozen=True)
class BasisSpec:
    """Truncated |J, M> grid of fixed parity.

    The grid holds all J of the given parity with J_min <= J <= J_max, where
    J_min is |M| rounded up to the requested parity.  Kicks conserve both M
    and the parity of J, so a single computation never leaves this grid.
    """

    M: int
    parity: str  # "even" or "odd"
    J_max: int

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.J_max < self.J_min:
            raise ValueError(f"J_max={self.J_max} below J_min={self.J_min}")
        if self.dim < 21:
            raise ValueError(
                f"basis dimension {self.dim} too small; need >= 21 states so the "
                f"40-J edge windows fit inside the grid"
            )

    @property
    def parity_bit(self) -> int:
        return 0 if self.parity == "even" else 1

    @property
    def J_min(self) -> int:
        m = abs(self.M)
        return m if m % 2 == self.parity_bit else m + 1

    @property
    def J_values(self) -> np.ndarray:
        return np.arange(self.J_min, self.J_max + 1, 2)

    @property
    def dim(self) -> int:
        return (self.J_max - self.J_min) // 2 + 1

    def index_of(self, J: int) -> int:
        """Grid index of angular momentum J; raises if J is off the grid."""
        if J < self.J_min or J > self.J_max or (J - self.J_min) % 2 != 0:
            raise ValueError(f"J={J} not on grid of {self}")
        return (J - self.J_min) // 2


@dataclass(frozen=True)
class RotorSpectrum:
    """Rotational level structure, rigid or centrifugally distorted.

    Levels are E_J = J(J+1)/2 - eps * J^2 (J+1)^2 in reduced units; eps = 0
    recovers the rigid rotor with exact revivals at t_rev = 2*pi.
    """

    centrifugal_eps: float = 0.0

    def __post_init__(self):
        if self.centrifugal_eps < 0:
            raise ValueError("centrifugal_eps must be >= 0")

    def validate_truncation(self, J_max: int) -> None:
        """Reject spectra whose levels turn over within the grid.

        dE/dJ = (2J+1) * (1/2 - 2 eps J(J+1)); monotonicity on the grid
        requires 4 eps J(J+1) < 1 at J = J_max.
        """
        J = float(J_max)
        if 4.0 * self.centrifugal_eps * J * (J + 1.0) >= 1.0:
            raise ValueError(
                f"energy levels non-monotone within grid (J_max={J_max}, "
                f"eps={self.centrifugal_eps}); reduce eps or J_max"
            )


def energy_level(J, spectrum: RotorSpectrum):
    """Reduced rotational energy E_J = J(J+1)/2 - eps J^2 (J+1)^2."""
    J = np.asarray(J, dtype=float)
    x = J * (J + 1.0)
    e = 0.5 * x - spectrum.centrifugal_eps * x * x
    if np.any(J < 0):
        raise ValueError("J must be >= 0")
    return e if e.ndim else float(e)


def energies(basis: BasisSpec, spectrum: RotorSpectrum) -> np.ndarray:
    """Energies of all grid states, after checking truncation validity."""
    spectrum.validate_truncation(basis.J_max)
    return energy_level(basis.J_values, spectrum)


@dataclass(frozen=True)
class UnitBridge:
    """Conversion between reduced units and laboratory units of a molecule.

    rotational_constant_B and centrifugal_constant_D are in cm^-1;
    polarizability_anisotropy is a volume in m^3 (1 Angstrom^3 = 1e-30 m^3).
    """

    rotational_constant_B: float
    centrifugal_constant_D: float = 0.0
    polarizability_anisotropy: float = 0.0

    def __post_init__(self):
        if self.rotational_constant_B <= 0:
            raise ValueError("rotational_constant_B must be > 0")
        if self.centrifugal_constant_D < 0:
            raise ValueError("centrifugal_constant_D must be >= 0")

    @property
    def centrifugal_eps(self) -> float:
        """Reduced centrifugal coefficient: eps = D / (2B)."""
        return self.centrifugal_constant_D / (2.0 * self.rotational_constant_B)

    def spectrum(self) -> RotorSpectrum:
        return RotorSpectrum(centrifugal_eps=self.centrifugal_eps)

    @property
    def energy_unit_wavenumber(self) -> float:
        """One reduced energy unit (hbar^2/I) expressed in cm^-1 (equals 2B)."""
        return 2.0 * self.rotational_constant_B

    @property
    def time_unit_s(self) -> float:
        """One reduced time unit (I/hbar) in seconds."""
        return 1.0 / (4.0 * np.pi * C_CM_PER_S * self.rotational_constant_B)

    def time_to_SI(self, t_reduced: float) -> float:
        return t_reduced * self.time_unit_s

    def time_from_SI(self, t_seconds: float) -> float:
        return t_seconds / self.time_unit_s

    def frequency_to_wavenumber(self, omega_reduced: float) -> float:
        """Reduced angular frequency (= reduced energy) to cm^-1."""
        return omega_reduced * self.energy_unit_wavenumber

    def wavenumber_to_frequency(self, nu_cm: float) -> float:
        return nu_cm / self.energy_unit_wavenumber

    def level_energy_joule(self, J: int) -> float:
        """Laboratory energy of level J (B J(J+1) - D J^2(J+1)^2), in joules."""
        x = float(J) * (J + 1.0)
        nu = self.rotational_constant_B * x - self.centrifugal_constant_D * x * x
        return PLANCK_H * C_CM_PER_S * nu


def revival_time_SI(bridge: UnitBridge) -> float:
    """Rotational revival time 1/(2 B c) in seconds."""
    return 1.0 / (2.0 * bridge.rotational_constant_B * C_CM_PER_S)
