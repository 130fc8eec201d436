"""Quasienergy decomposition, classification, bands, scans, planar contrast."""
from fractions import Fraction

import numpy as np
import pytest

from rotoredge import (
    BasisSpec,
    PulseTrainSpec,
    RotorSpectrum,
    WaveFunction,
    band_structure,
    classify_edge_states,
    discrete_edge_levels,
    edge_overlap,
    one_cycle_operator,
    planar_reference_spectrum,
    quasienergy_decomposition,
    quasienergy_states,
    reconstruct,
    spectrum_scan,
)
from rotoredge.floquet import ARTIFACT, EDGE, EXTENDED

SP = RotorSpectrum()


@pytest.fixture(scope="module")
def qset128():
    b = BasisSpec(M=0, parity="even", J_max=128)
    return quasienergy_states(
        PulseTrainSpec(P=3.0, tau_fraction=Fraction(1, 3), N=1), b, SP
    )


@pytest.fixture(scope="module")
def qset512():
    b = BasisSpec(M=0, parity="even", J_max=512)
    return quasienergy_states(
        PulseTrainSpec(P=3.0, tau_fraction=Fraction(1, 3), N=1), b, SP
    )


class TestDecomposition:
    def test_free_rotor_quasienergies(self):
        # at P = 0 the one-cycle operator is diagonal and each quasienergy is
        # the free phase E_J tau folded into [-pi, pi)
        b = BasisSpec(M=0, parity="even", J_max=80)
        train = PulseTrainSpec(P=0.0, tau_fraction=Fraction(1, 3), N=1)
        qset = quasienergy_decomposition(one_cycle_operator(train, b, SP))
        from rotoredge.basis import energies

        expected = np.sort(
            np.mod(energies(b, SP) * train.tau + np.pi, 2 * np.pi) - np.pi
        )
        assert np.allclose(qset.omegas, expected, atol=1e-10)

    def test_branch_is_half_open(self, qset128):
        assert np.all(qset128.omegas >= -np.pi)
        assert np.all(qset128.omegas < np.pi)
        assert np.all(np.diff(qset128.omegas) >= 0)

    def test_eigenbasis_orthonormal_and_complete(self, qset128):
        V = qset128.vectors
        assert np.max(np.abs(V.conj().T @ V - np.eye(V.shape[1]))) < 1e-12

    def test_reconstruction_matches_propagation(self, qset128):
        b = qset128.basis
        psi0 = WaveFunction.basis_state(b, 0)
        from rotoredge import propagate_train

        train = PulseTrainSpec(P=3.0, tau_fraction=Fraction(1, 3), N=10)
        snaps = propagate_train(psi0, train, SP)
        approx = reconstruct(psi0, qset128, 10)
        assert np.linalg.norm(snaps[-1].coeffs - approx) < 1e-10


class TestClassification:
    def test_window_overlap_rejected(self):
        b = BasisSpec(M=0, parity="even", J_max=64)
        train = PulseTrainSpec(P=3.0, tau_fraction=Fraction(1, 3), N=1)
        qset = quasienergy_decomposition(one_cycle_operator(train, b, SP))
        with pytest.raises(ValueError, match="window"):
            classify_edge_states(qset)

    def test_classes_cover_all_states(self, qset128):
        assert len(qset128.classes) == qset128.dim
        assert set(qset128.classes) <= {EXTENDED, EDGE, ARTIFACT}

    def test_window_weights_are_probabilities(self, qset128):
        for w in (qset128.lower_window_weights(), qset128.upper_window_weights()):
            assert np.all(w >= 0) and np.all(w <= 1 + 1e-12)

    def test_full_resonance_has_no_edge_states(self):
        # at tau = t_rev every state is extended: free evolution is trivial
        # and the kick alone has no localized quasienergy states
        b = BasisSpec(M=0, parity="even", J_max=128)
        qset = quasienergy_states(
            PulseTrainSpec(P=3.0, tau_fraction=Fraction(1, 1), N=1), b, SP
        )
        assert int(qset.select(EDGE).sum()) == 0

    def test_fractional_resonance_edge_states(self, qset512):
        assert int(qset512.select(EDGE).sum()) == 2

    def test_edge_profiles_peak_at_lower_edge(self, qset512):
        # every edge state peaks within the lowest grid sites and its
        # 5-site block maxima decay away from the edge
        for i in np.nonzero(qset512.select(EDGE))[0]:
            p = np.abs(qset512.vectors[:, i]) ** 2
            assert int(np.argmax(p)) < 5
            blocks = [p[k : k + 5].max() for k in range(0, 40, 5)]
            assert np.all(np.diff(blocks) < 0)

    def test_unclassified_set_raises(self):
        b = BasisSpec(M=0, parity="even", J_max=128)
        train = PulseTrainSpec(P=3.0, tau_fraction=Fraction(1, 3), N=1)
        qset = quasienergy_decomposition(one_cycle_operator(train, b, SP))
        with pytest.raises(ValueError):
            qset.select(EDGE)
        with pytest.raises(ValueError):
            discrete_edge_levels(qset)


class TestOverlapAndLevels:
    def test_overlap_total_is_sum_of_contributions(self, qset128):
        rep = edge_overlap(WaveFunction.basis_state(qset128.basis, 0), qset128)
        assert 0.0 <= rep.total <= 1.0
        assert rep.total == pytest.approx(sum(c for _w, c in rep.contributions))
        assert rep.initial_J == 0

    def test_discrete_levels_subset_of_edge_levels(self, qset512):
        edge_w = set(np.round(qset512.omegas[qset512.select(EDGE)], 12))
        for w in discrete_edge_levels(qset512, isolation_gap=0.03):
            assert round(float(w), 12) in edge_w


class TestBandStructure:
    def test_grouping(self):
        om = np.array([0.0, 0.001, 0.002, 1.0, 1.001])
        bands = band_structure(om, gap=0.1)
        assert [n for _lo, _hi, n in bands] == [3, 2]
        assert bands[0][0] == 0.0 and bands[0][1] == pytest.approx(0.002)

    def test_wraparound_merge(self):
        om = np.array([-3.141, -3.140, 3.140, 3.141])
        bands = band_structure(om, gap=0.1)
        assert len(bands) == 1
        assert bands[0][2] == 4

    def test_empty(self):
        assert band_structure(np.array([])) == []


class TestSpectrumScan:
    def test_grid_validation(self):
        b = BasisSpec(M=0, parity="even", J_max=128)
        with pytest.raises(ValueError):
            spectrum_scan([1.0], Fraction(1, 3), b, SP)
        with pytest.raises(ValueError):
            spectrum_scan([2.0, 1.0], Fraction(1, 3), b, SP)

    def test_small_scan(self):
        b = BasisSpec(M=0, parity="even", J_max=128)
        res = spectrum_scan([1.0, 2.0], Fraction(1, 3), b, SP, omega_bins=64)
        assert len(res.points) == 2
        assert res.histogram.shape == (2, 64)
        for i, pt in enumerate(res.points):
            assert pt.error is None
            n_artifacts = int(pt.qset.select(ARTIFACT).sum())
            assert res.histogram[i].sum() == b.dim - n_artifacts

    def test_threaded_scan_matches_serial(self):
        b = BasisSpec(M=0, parity="even", J_max=128)
        serial = spectrum_scan([1.0, 2.0], Fraction(1, 3), b, SP)
        threaded = spectrum_scan([1.0, 2.0], Fraction(1, 3), b, SP, threads=2)
        for s, t in zip(serial.points, threaded.points):
            assert np.allclose(s.qset.omegas, t.qset.omegas, atol=1e-12)


class TestPlanarReference:
    def test_grid_validation(self):
        with pytest.raises(ValueError):
            planar_reference_spectrum(1.0, Fraction(1, 2), 1)

    def test_generic_period_is_not_degenerate(self):
        om = planar_reference_spectrum(2.0, Fraction(1, 5), 32)
        assert len(np.unique(np.round(om, 6))) > 2
