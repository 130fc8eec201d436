"""Populations, rotational energy, alignment, thermal ensembles, and the
Fourier spectrum of the alignment signal."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import (
    BasisSpec,
    K_BOLTZMANN,
    RotorSpectrum,
    UnitBridge,
    energies,
)
from .coupling import CouplingMatrix, cos2_matrix
from .propagation import (
    GUARD_SITES,
    GUARD_THRESHOLD,
    PulseTrainSpec,
    TruncationError,
    WaveFunction,
    one_cycle_operator,
)

#: Members below this fraction of the total Boltzmann weight are dropped.
THERMAL_CUTOFF = 1e-6


def populations(psi: WaveFunction) -> np.ndarray:
    """|C_J|^2 over the basis grid."""
    p = np.abs(psi.coeffs) ** 2
    if abs(p.sum() - 1.0) > 1e-8:
        raise ValueError("state is not normalized")
    return p


def rotational_energy(psi: WaveFunction, spectrum: RotorSpectrum) -> float:
    """Reduced rotational energy sum_J E_J |C_J|^2."""
    return float(np.sum(energies(psi.basis, spectrum) * np.abs(psi.coeffs) ** 2))


def alignment_expectation(psi: WaveFunction, coupling: CouplingMatrix) -> float:
    """<cos^2 theta> of the state; 1/3 for an isotropic state."""
    return coupling.expectation(psi.coeffs)


@dataclass(frozen=True)
class AlignmentTrace:
    """Uniformly sampled <cos^2 theta>(t) during free evolution."""

    times: np.ndarray
    values: np.ndarray
    pulses_applied: int = 0

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def window(self) -> float:
        return float(len(self.times) * self.dt)


def required_alignment_samples(
    psi: WaveFunction, spectrum: RotorSpectrum, window: float,
    population_floor: float = 1e-12,
) -> int:
    """Minimum sample count resolving the fastest populated beat (Nyquist)."""
    pops = np.abs(psi.coeffs) ** 2
    populated = np.nonzero(pops > population_floor)[0]
    if len(populated) == 0:
        return 2
    E = energies(psi.basis, spectrum)
    j_top = populated[-1]
    beat = abs(E[min(j_top + 1, len(E) - 1)] - E[j_top]) if len(E) > 1 else 0.0
    if j_top >= 1:
        beat = max(beat, abs(E[j_top] - E[j_top - 1]))
    return max(2, int(np.ceil(window * beat / np.pi)) + 1)


def alignment_trace(
    psi: WaveFunction,
    spectrum: RotorSpectrum,
    coupling: CouplingMatrix,
    window: float,
    samples: int,
    pulses_applied: int = 0,
) -> AlignmentTrace:
    """<cos^2 theta> sampled uniformly over free evolution of length window."""
    needed = required_alignment_samples(psi, spectrum, window)
    if samples < needed:
        raise ValueError(
            f"samples={samples} below Nyquist for the populated beats; "
            f"need >= {needed}"
        )
    E = energies(psi.basis, spectrum)
    times = np.arange(samples) * (window / samples)
    phases = np.exp(-1j * np.outer(times, E))  # (samples, dim)
    ct = phases * psi.coeffs[None, :]
    diag_part = (np.abs(ct) ** 2) @ coupling.diag
    cross = np.conj(ct[:, :-1]) * ct[:, 1:]
    off_part = 2.0 * np.real(cross @ coupling.offdiag)
    return AlignmentTrace(
        times=times, values=diag_part + off_part, pulses_applied=pulses_applied
    )


@dataclass(frozen=True)
class AlignmentSpectrum:
    """Magnitude spectrum of a DC-removed, Gaussian-windowed alignment trace.

    frequencies are in cm^-1 when built with a UnitBridge, otherwise in
    reduced angular frequency.
    """

    frequencies: np.ndarray
    magnitudes: np.ndarray
    broadening: float


def alignment_spectrum(
    trace: AlignmentTrace,
    broadening: float,
    bridge: UnitBridge | None = None,
    pad_factor: int = 8,
) -> AlignmentSpectrum:
    """Fourier magnitude of the alignment signal with Gaussian broadening.

    The mean is subtracted, the trace is multiplied by a Gaussian window
    centered mid-trace whose transform has FWHM equal to the requested
    broadening, and the FFT magnitude is returned on a physical axis.
    broadening is in cm^-1 when a bridge is given, reduced units otherwise.
    """
    omega_b = bridge.wavenumber_to_frequency(broadening) if bridge else broadening
    if omega_b <= 0:
        raise ValueError("broadening must be > 0")
    if omega_b < 2.0 / trace.window:
        raise ValueError(
            f"broadening {omega_b:g} (reduced) unresolvable within the trace "
            f"window; need >= {2.0 / trace.window:g}"
        )
    # window exp(-a t^2) has transform magnitude with FWHM 4 sqrt(a ln 2)
    a = (omega_b / 4.0) ** 2 / np.log(2.0)
    t = trace.times - trace.times[len(trace.times) // 2]
    signal = (trace.values - np.mean(trace.values)) * np.exp(-a * t * t)
    n = pad_factor * len(signal)
    mags = np.abs(np.fft.rfft(signal, n=n)) * trace.dt
    freqs = 2.0 * np.pi * np.fft.rfftfreq(n, d=trace.dt)
    if bridge is not None:
        freqs = bridge.frequency_to_wavenumber(freqs)
    return AlignmentSpectrum(frequencies=freqs, magnitudes=mags, broadening=broadening)


def spectrum_centroid(spec: AlignmentSpectrum, lo: float, hi: float) -> float:
    """Magnitude-weighted mean frequency over [lo, hi]."""
    m = (spec.frequencies >= lo) & (spec.frequencies <= hi)
    w = spec.magnitudes[m]
    if w.sum() == 0:
        raise ValueError(f"no spectral weight in [{lo}, {hi}]")
    return float(np.sum(spec.frequencies[m] * w) / np.sum(w))


@dataclass(frozen=True)
class ThermalEnsemble:
    """Boltzmann-weighted set of initial basis states (J0, M)."""

    members: tuple[tuple[int, int, str, float], ...]  # (J0, M, parity, weight)
    temperature: float
    spectrum: RotorSpectrum

    def weights(self) -> np.ndarray:
        return np.array([m[3] for m in self.members])


def thermal_ensemble(
    T: float, bridge: UnitBridge, spectrum: RotorSpectrum | None = None
) -> ThermalEnsemble:
    """Boltzmann ensemble over (J0, M) at temperature T (kelvin).

    Heteronuclear molecule: no nuclear-spin parity alternation.  Members
    whose relative weight falls below 1e-6 of the total are dropped and the
    rest renormalized to unit sum.
    """
    if T < 0:
        raise ValueError("temperature must be >= 0")
    if spectrum is None:
        spectrum = bridge.spectrum()
    if T == 0:
        return ThermalEnsemble(
            members=((0, 0, "even", 1.0),), temperature=0.0, spectrum=spectrum
        )
    kt = K_BOLTZMANN * T
    members = []
    J = 0
    total = 0.0
    while True:
        w = np.exp(-bridge.level_energy_joule(J) / kt)
        if J > 0 and w * (2 * J + 1) < THERMAL_CUTOFF * total:
            break
        total += w * (2 * J + 1)
        parity = "even" if J % 2 == 0 else "odd"
        for M in range(-J, J + 1):
            members.append((J, M, parity, w))
        J += 1
        if J > 10_000:
            raise RuntimeError("thermal ensemble failed to converge")
    kept = [(j, m, p, w) for (j, m, p, w) in members if w / total >= THERMAL_CUTOFF]
    norm = sum(w for *_x, w in kept)
    members = tuple((j, m, p, w / norm) for (j, m, p, w) in kept)
    return ThermalEnsemble(members=members, temperature=T, spectrum=spectrum)


def mean_initial_J(ensemble: ThermalEnsemble) -> float:
    return float(sum(j * w for (j, _m, _p, w) in ensemble.members))


def _thermal_blocks(ensemble: ThermalEnsemble):
    """Group ensemble members by (|M|, parity): dynamics in a block share one
    one-cycle operator, and +-M members share the same trajectory."""
    blocks: dict[tuple[int, str], dict[int, float]] = {}
    for J0, M, parity, w in ensemble.members:
        j0w = blocks.setdefault((abs(M), parity), {})
        j0w[J0] = j0w.get(J0, 0.0) + w
    return {k: sorted(v.items()) for k, v in sorted(blocks.items())}


def _propagate_block(basis, train, spectrum, j0_list, check_guard=True):
    """Columns |C_J(n tau)|-amplitudes for every J0 in one block.

    Returns (snapshots, weights-independent coeff history): a list of
    (dim, n_members) arrays, one per cycle boundary 0..N.
    """
    op = one_cycle_operator(train, basis, spectrum)
    C = np.zeros((basis.dim, len(j0_list)), dtype=complex)
    for k, J0 in enumerate(j0_list):
        C[basis.index_of(J0), k] = 1.0
    history = [C]
    for n in range(1, train.N + 1):
        C = op.U @ C
        if check_guard:
            g = min(GUARD_SITES, basis.dim // 2)
            leak = float(np.max(np.sum(np.abs(C[-g:, :]) ** 2, axis=0)))
            if leak > GUARD_THRESHOLD:
                raise TruncationError(n, leak)
        history.append(C)
    return history


def thermal_population_dynamics(
    ensemble: ThermalEnsemble,
    train: PulseTrainSpec,
    J_max: int,
    check_guard: bool = True,
):
    """Ensemble-averaged |C_J|^2 heatmap and rotational energy per pulse.

    Returns (populations, energy): populations has shape (N+1, J_max+1) on
    the common J axis, energy has shape (N+1,).  Blocks are visited in a
    fixed order so the weighted reduction is deterministic.
    """
    pops = np.zeros((train.N + 1, J_max + 1))
    energy = np.zeros(train.N + 1)
    for (absM, parity), j0w in _thermal_blocks(ensemble).items():
        basis = BasisSpec(M=absM, parity=parity, J_max=J_max)
        j0_list = [j for j, _w in j0w]
        w = np.array([wt for _j, wt in j0w])
        E = energies(basis, ensemble.spectrum)
        history = _propagate_block(
            basis, train, ensemble.spectrum, j0_list, check_guard
        )
        for n, C in enumerate(history):
            p = np.abs(C) ** 2
            pops[n, basis.J_values] += p @ w
            energy[n] += float(w @ (E @ p))
    return pops, energy


def thermal_alignment_trace(
    ensemble: ThermalEnsemble,
    train: PulseTrainSpec,
    J_max: int,
    window: float,
    samples: int,
    check_guard: bool = True,
) -> AlignmentTrace:
    """Ensemble-averaged <cos^2 theta>(t) during free evolution after the
    pulse train ends."""
    values = np.zeros(samples)
    times = None
    for (absM, parity), j0w in _thermal_blocks(ensemble).items():
        basis = BasisSpec(M=absM, parity=parity, J_max=J_max)
        coupling = cos2_matrix(basis)
        j0_list = [j for j, _w in j0w]
        final = _propagate_block(
            basis, train, ensemble.spectrum, j0_list, check_guard
        )[-1]
        for k, (_j0, w) in enumerate(j0w):
            psi = WaveFunction(
                coeffs=final[:, k], basis=basis, time=train.N * train.tau
            )
            tr = alignment_trace(
                psi, ensemble.spectrum, coupling, window, samples,
                pulses_applied=train.N,
            )
            values += w * tr.values
            times = tr.times
    return AlignmentTrace(times=times, values=values, pulses_applied=train.N)


def ensemble_average(
    ensemble: ThermalEnsemble,
    member_values: list[np.ndarray],
    member_bases: list[BasisSpec] | None = None,
    J_max: int | None = None,
) -> np.ndarray:
    """Weight-linear combination of per-member observable arrays.

    Without bases, all arrays must share one shape and are combined as-is.
    With bases, each array's last axis runs over its member's parity grid and
    the result is merged onto the common axis J = 0..J_max.
    """
    if len(member_values) != len(ensemble.members):
        raise ValueError("one value array per ensemble member required")
    weights = ensemble.weights()
    if member_bases is None:
        shape = np.shape(member_values[0])
        if any(np.shape(v) != shape for v in member_values):
            raise ValueError("incompatible member grids")
        out = np.zeros(shape)
        for w, v in zip(weights, member_values):
            out += w * np.asarray(v)
        return out
    if J_max is None:
        J_max = max(b.J_max for b in member_bases)
    lead = np.shape(member_values[0])[:-1]
    out = np.zeros(lead + (J_max + 1,))
    for w, v, b in zip(weights, member_values, member_bases):
        v = np.asarray(v)
        if v.shape[-1] != b.dim:
            raise ValueError("value array does not match its basis grid")
        out[..., b.J_values] += w * v
    return out
