# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest

from qretrieve.exceptions import OpticsError
from qretrieve.fock import (
    QuantumState,
    basis_state,
    enumerate_basis,
    random_state,
)
from qretrieve.optics import (
    PhaseVector,
    apply_phase_object,
    back_propagate_field,
    brute_force_transform,
    build_submatrix,
    check_unitary,
    dft_matrix,
    inverse_transform,
    multiphoton_transform,
    permanent,
    propagate_field,
    transfer_matrix,
    wrap_angles,
)
from tests.conftest import THETA_OBJ, naive_permanent, random_unitary


class TestPhaseVector(object):
    def test_gauge(self):
        p = PhaseVector([1.0, 1.5, 1.0])
        assert p.tolist() == [0.0, 0.5, 0.0]
        assert p[0] == 0.0
        assert len(p) == 3

    def test_wrapping(self):
        p = PhaseVector([0, -0.5, 2 * math.pi + 0.25])
        assert p.tolist() == pytest.approx([0, 2 * math.pi - 0.5, 0.25])
        assert all(0 <= x < 2 * math.pi for x in p)

    def test_uniform_offset(self):
        a = PhaseVector(THETA_OBJ)
        b = PhaseVector(np.array(THETA_OBJ) + 1.7)
        assert np.allclose(a.thetas, b.thetas, atol=1e-12)

    def test_errors(self):
        with pytest.raises(OpticsError):
            PhaseVector([])
        with pytest.raises(OpticsError):
            PhaseVector([0, np.inf])

    def test_wrap_angles(self):
        assert wrap_angles([-1e-20])[0] < 2 * math.pi
        assert wrap_angles([3 * math.pi]).tolist() == pytest.approx([math.pi])


class TestDft(object):
    def test_unitary(self):
        for m in range(2, 31):
            u = dft_matrix(m)
            assert np.abs(u @ u.conj().T - np.eye(m)).max() < 1e-12

    def test_entries(self):
        u = dft_matrix(4)
        assert u[0].tolist() == pytest.approx([0.5] * 4)
        assert u[1, 1] == pytest.approx(0.5j)
        assert u[2, 3] == pytest.approx(0.5 * np.exp(2j * math.pi * 6 / 4))

    def test_single_mode(self):
        assert dft_matrix(1).tolist() == [[1 + 0j]]

    def test_errors(self):
        with pytest.raises(OpticsError):
            dft_matrix(0)


def test_check_unitary():
    check_unitary(dft_matrix(3))
    with pytest.raises(OpticsError):
        check_unitary(np.ones((2, 3)))
    with pytest.raises(OpticsError):
        check_unitary([[1, 1], [0, 1]])
    check_unitary(np.eye(4) * (1 + 4e-13))
    with pytest.raises(OpticsError):
        check_unitary(np.eye(6) * (1 + 2e-11))


def test_apply_phase_object():
    s = QuantumState.from_terms(3, 2, {(2, 0, 0): 1, (0, 1, 1): 1})
    out = apply_phase_object(s, [0.1, 0.2, 0.3])
    k = s.basis.index_of((0, 1, 1))
    assert np.angle(out.amplitudes[0]) == pytest.approx(0.2)
    assert np.angle(out.amplitudes[k]) == pytest.approx(0.5)
    assert np.allclose(np.abs(out.amplitudes), np.abs(s.amplitudes))
    with pytest.raises(OpticsError):
        apply_phase_object(s, [0.1, 0.2])


class TestPermanent(object):
    def test_small(self):
        assert permanent([[3]]) == 3
        assert permanent([[1, 2], [3, 4]]) == 10
        assert permanent(np.ones((4, 4))) == pytest.approx(24)
        assert permanent(np.eye(5)) == pytest.approx(1)

    def test_against_permutation_sum(self, rng):
        for n in range(1, 7):
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            assert permanent(a) == pytest.approx(naive_permanent(a))

    def test_errors(self):
        with pytest.raises(OpticsError):
            permanent(np.ones((2, 3)))
        with pytest.raises(OpticsError):
            permanent(np.zeros((0, 0)))


def test_build_submatrix():
    u = np.arange(9).reshape(3, 3)
    v = build_submatrix(u, (2, 0, 0), (0, 1, 1))
    assert v.tolist() == [[1, 2], [1, 2]]
    with pytest.raises(OpticsError):
        build_submatrix(u, (2, 0, 0), (1, 0, 0))


class TestMultiphotonTransform(object):
    def test_hong_ou_mandel(self):
        s = basis_state(2, (1, 1))
        out = multiphoton_transform(s, dft_matrix(2))
        k = s.basis.index_of((1, 1))
        assert abs(out.amplitudes[k]) < 1e-14
        assert out.probabilities[0] == pytest.approx(0.5)
        assert out.probabilities[2] == pytest.approx(0.5)

    def test_identity(self, rng):
        s = random_state(4, 3, rng)
        out = multiphoton_transform(s, np.eye(4))
        assert np.allclose(out.amplitudes, s.amplitudes, atol=1e-14)

    def test_matches_brute_force(self, rng):
        for _ in range(50):
            m = int(rng.integers(2, 6))
            n = int(rng.integers(1, 4))
            s = random_state(m, n, rng)
            u = random_unitary(m, rng)
            a = multiphoton_transform(s, u).amplitudes
            b = brute_force_transform(s, u).amplitudes
            assert np.abs(a - b).max() < 1e-10

    def test_psi6_matches_brute_force(self, state6, u6):
        a = multiphoton_transform(state6, u6).amplitudes
        b = brute_force_transform(state6, u6).amplitudes
        assert np.abs(a - b).max() < 1e-10

    def test_normalization(self, rng):
        for m, n in [(3, 2), (5, 3), (6, 2)]:
            s = random_state(m, n, rng)
            out = multiphoton_transform(s, random_unitary(m, rng))
            assert np.sum(out.probabilities) == pytest.approx(1, abs=1e-10)

    def test_near_unitary_output_is_normalized(self, state6):
        # U·U† deviates from I by 8e-13, inside the unitary tolerance
        u = np.eye(6) * (1 + 4e-13)
        out = multiphoton_transform(state6, u)
        assert abs(np.sum(out.probabilities) - 1) <= 1e-12
        assert np.allclose(out.amplitudes, state6.amplitudes, atol=1e-12)
        brute = brute_force_transform(state6, u)
        assert abs(np.sum(brute.probabilities) - 1) <= 1e-12

    def test_global_phase_invariance(self, state6, u6, theta_obj):
        base = apply_phase_object(state6, theta_obj)
        shifted = apply_phase_object(
            state6, np.asarray(theta_obj) + 0.83
        )
        p = multiphoton_transform(base, u6).probabilities
        q = multiphoton_transform(shifted, u6).probabilities
        assert np.abs(p - q).max() < 1e-12

    def test_inverse(self, rng):
        s = random_state(4, 2, rng)
        u = random_unitary(4, rng)
        back = inverse_transform(multiphoton_transform(s, u), u)
        assert np.allclose(back.amplitudes, s.amplitudes, atol=1e-12)

    def test_errors(self, state6):
        with pytest.raises(OpticsError):
            multiphoton_transform(state6, dft_matrix(5))
        with pytest.raises(OpticsError):
            multiphoton_transform(state6, np.ones((6, 6)))


def test_transfer_matrix(rng):
    s = random_state(3, 2, rng)
    u = random_unitary(3, rng)
    t = transfer_matrix(s.basis, u)
    assert np.allclose(t.conj().T @ t, np.eye(6), atol=1e-12)
    assert np.allclose(
        t @ s.amplitudes, multiphoton_transform(s, u).amplitudes
    )
    cols = transfer_matrix(s.basis, u, [1, 4])
    assert np.allclose(cols, t[:, [1, 4]])


def test_single_photon_matches_classical_field(rng):
    u = random_unitary(4, rng)
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    amps /= np.linalg.norm(amps)
    s = QuantumState(enumerate_basis(4, 1), amps)
    out = multiphoton_transform(s, u)
    assert np.allclose(out.amplitudes, propagate_field(amps, u), atol=1e-12)
    assert np.allclose(
        back_propagate_field(propagate_field(amps, u), u), amps, atol=1e-12
    )
