# -*- coding: utf-8 -*-

import math

import numpy as np
import pytest

from qretrieve.exceptions import OpticsError, RetrievalError
from qretrieve.fock import QuantumState, enumerate_basis
from qretrieve.optics import TWO_PI, PhaseVector
from qretrieve.retrieval import (
    Ambiguity,
    ClassicalField,
    ClassicalGS,
    GsOptions,
    GsResult,
    MeasuredDistribution,
    PhaseExtractor,
    QuantumGS,
    classical_fourier_error,
    classical_gs,
    classify_ambiguity,
    closest_representative,
    cluster_solutions,
    extract_phases,
    far_field_intensities,
    fourier_error,
    mean_fourier_trace,
    measure,
    median_iterations,
    phase_error,
    quantum_gs,
    random_initial_theta,
    run_restarts,
    success_fraction,
    wrap_phase_distance,
)
from qretrieve.statekit import (
    PSI6_CONFIGS,
    matched_classical_field,
    uniform_state,
    validate_state,
)


@pytest.fixture(scope='module')
def extractor6(state6):
    return validate_state(state6).extractor


@pytest.fixture(scope='module')
def quantum6(state6, u6, theta_obj, extractor6):
    return QuantumGS(state6, u6, measure(state6, theta_obj, u6), extractor6)


@pytest.fixture(scope='module')
def classical6(state6, u6, theta_obj):
    field = matched_classical_field(state6)
    return ClassicalGS(
        field.magnitudes, u6, far_field_intensities(field, theta_obj, u6)
    )


def _result(theta, converged=True, trace=(0.0,)):
    return GsResult(
        retrieved_theta=PhaseVector(theta),
        fourier_error_trace=tuple(trace),
        phase_error_trace=(),
        iterations=len(trace),
        converged=converged,
        initial_theta=PhaseVector.zeros(len(theta)),
    )


class TestErrorMetrics(object):
    def test_wrap_phase_distance(self):
        assert wrap_phase_distance(0.0) == 0.0
        assert wrap_phase_distance(TWO_PI) == 0.0
        assert wrap_phase_distance(-0.3) == pytest.approx(0.3)
        assert wrap_phase_distance(TWO_PI - 0.3) == pytest.approx(0.3)
        assert wrap_phase_distance(math.pi) == pytest.approx(math.pi)
        d = wrap_phase_distance(np.array([0.1, 7.0]))
        assert d.tolist() == pytest.approx([0.1, 7.0 - TWO_PI])

    def test_phase_error(self, theta_obj):
        assert phase_error(theta_obj, theta_obj) == 0
        shifted = np.asarray(theta_obj).copy()
        shifted[3] += TWO_PI
        assert phase_error(shifted, theta_obj) == pytest.approx(0, abs=1e-12)
        assert phase_error([0, 1.1], [0, 1.0]) == pytest.approx(0.1)
        with pytest.raises(RetrievalError):
            phase_error([0, 1], [0, 1, 2])

    def test_fourier_error(self):
        d = 21
        uniform = np.full(d, 1 / d)
        assert fourier_error(np.zeros(d), uniform) == pytest.approx(
            1 / math.sqrt(d)
        )
        assert fourier_error(np.sqrt(uniform), uniform) == pytest.approx(
            0, abs=1e-15
        )
        with pytest.raises(RetrievalError):
            fourier_error(np.zeros(3), uniform)

    def test_fourier_error_true_phases(self, state6, u6, theta_obj, quantum6):
        beta, err = quantum6.forward(np.asarray(theta_obj))
        assert err < 1e-12
        assert fourier_error(beta, measure(state6, theta_obj, u6)) < 1e-12

    def test_classical_fourier_error(self):
        assert classical_fourier_error(np.zeros(6), np.ones(6)) == 1.0
        assert classical_fourier_error(np.ones(6), np.ones(6)) == 0.0
        with pytest.raises(RetrievalError):
            classical_fourier_error(np.ones(6), np.zeros(6))
        with pytest.raises(RetrievalError):
            classical_fourier_error(np.ones(5), np.ones(6))


class TestMeasuredDistribution(object):
    def test_from_counts(self):
        basis = enumerate_basis(2, 1)
        md = MeasuredDistribution.from_counts(basis, [3, 1])
        assert md.probabilities.tolist() == [0.75, 0.25]
        assert md.counts.tolist() == [3, 1]

    def test_errors(self):
        basis = enumerate_basis(2, 1)
        with pytest.raises(RetrievalError):
            MeasuredDistribution(basis, [0.5, 0.6])
        with pytest.raises(RetrievalError):
            MeasuredDistribution(basis, [1.5, -0.5])
        with pytest.raises(RetrievalError):
            MeasuredDistribution(basis, [1.0])
        with pytest.raises(RetrievalError):
            MeasuredDistribution.from_counts(basis, [0, 0])
        with pytest.raises(RetrievalError):
            MeasuredDistribution(basis, [0.5, 0.5], counts=[3, 1])

    def test_from_state(self, state6, u6, theta_obj):
        md = measure(state6, theta_obj, u6)
        assert md.probabilities.sum() == pytest.approx(1, abs=1e-12)
        assert md.counts is None
        assert md.to_dict()['N'] == 2


def test_classical_field():
    field = ClassicalField([2, 0, 1j])
    assert field.m == 3
    assert field.intensities.tolist() == [4.0, 0.0, 1.0]
    assert field.magnitudes.tolist() == [2.0, 0.0, 1.0]
    with pytest.raises(RetrievalError):
        ClassicalField([0, 0])


class TestPhaseExtractor(object):
    def test_psi6(self, state6, extractor6):
        assert extractor6.subset_indices == state6.support
        assert extractor6.reduced_inverse.shape == (5, 5)

    def test_round_trip(self, state6, extractor6, rng):
        occupations = state6.basis.occupations
        for _ in range(20):
            theta = random_initial_theta(6, int(rng.integers(1 << 30)))
            phis = occupations @ theta.thetas
            out = extract_phases(phis, extractor6)
            assert phase_error(out, theta) < 1e-12

    def test_zero_phases(self, extractor6):
        out = extract_phases(np.zeros(21), extractor6)
        assert out.tolist() == [0.0] * 6

    def test_two_pi_shifts(self, state6, extractor6, theta_obj, rng):
        phis = state6.basis.occupations @ theta_obj.thetas
        shifts = TWO_PI * rng.integers(-3, 4, size=phis.size)
        out = extract_phases(phis + shifts, extractor6)
        assert phase_error(out, theta_obj) < 1e-12

    def test_not_unimodular(self):
        basis = enumerate_basis(3, 2)
        configs = [(2, 0, 0), (0, 2, 0), (0, 0, 2)]
        subset = [basis.index_of(c) for c in configs]
        with pytest.raises(RetrievalError):
            PhaseExtractor(basis, subset)

    def test_wrong_size(self):
        basis = enumerate_basis(3, 2)
        with pytest.raises(RetrievalError):
            PhaseExtractor(basis, [0, 1])
        with pytest.raises(RetrievalError):
            PhaseExtractor(basis, [0, 0, 1])

    def test_check_support(self, extractor6):
        partial = QuantumState.from_terms(
            6, 2, {c: 1.0 for c in PSI6_CONFIGS[:5]}
        )
        with pytest.raises(RetrievalError):
            extractor6.check_support(partial)
        with pytest.raises(RetrievalError):
            extractor6.check_support(uniform_state(5, 2))
        with pytest.raises(RetrievalError):
            extractor6.extract(np.zeros(20))


class TestQuantumGS(object):
    def test_fixed_point_at_zero(self, state6, u6, extractor6):
        zeros = PhaseVector.zeros(6)
        measured = measure(state6, zeros, u6)
        result = quantum_gs(
            state6, u6, measured, extractor6, initial_theta=zeros, truth=zeros
        )
        assert result.converged
        assert result.iterations == 1
        assert result.final_fourier_error < 1e-10
        assert result.final_phase_error == 0

    def test_truth_is_fixed_point(self, quantum6, theta_obj):
        step = quantum6.step(theta_obj)
        assert phase_error(step, theta_obj) < 1e-10

    def test_trace_consistency(self, quantum6, theta_obj):
        options = GsOptions(max_iterations=50, rng_seed=7)
        result = quantum6.run(options, truth=theta_obj)
        _, err = quantum6.forward(result.retrieved_theta.thetas)
        assert result.final_fourier_error == err
        assert result.final_phase_error == phase_error(
            result.retrieved_theta, theta_obj
        )
        assert result.iterations == len(result.fourier_error_trace)
        assert len(result.phase_error_trace) == result.iterations
        assert result.retrieved_theta[0] == 0
        assert all(
            math.isfinite(e) and e >= 0 for e in result.fourier_error_trace
        )

    def test_determinism(self, quantum6, theta_obj):
        options = GsOptions(max_iterations=200, rng_seed=99)
        a = quantum6.run(options, truth=theta_obj)
        b = quantum6.run(options, truth=theta_obj)
        assert a.fourier_error_trace == b.fourier_error_trace
        assert a.retrieved_theta == b.retrieved_theta
        assert a.initial_theta == random_initial_theta(6, 99)

    def test_converges_to_truth(self, quantum6, theta_obj):
        results = run_restarts(quantum6, 100, 2024, truth=theta_obj)
        assert success_fraction(results, theta_obj) == 1.0
        for r in results:
            assert r.converged
            assert r.stop_reason == 'tolerance'
            assert r.retrieved_theta[0] == 0
            assert r.final_phase_error < 1e-3

    def test_single_attempts_stagnate(self, quantum6, theta_obj):
        options = GsOptions(restarts=0)
        results = run_restarts(quantum6, 30, 2024, options, theta_obj)
        stalled = [r for r in results if not r.converged]
        assert stalled
        for r in stalled:
            assert r.stop_reason == 'stalled'
            assert r.restarts == 0
            assert r.iterations < options.max_iterations
            assert r.final_fourier_error > 1e-3
        restarted = run_restarts(quantum6, 30, 2024, truth=theta_obj)
        for single, full in zip(results, restarted):
            assert full.converged
            assert full.initial_theta == single.initial_theta
            if not single.converged:
                assert full.restarts > 0
                assert full.total_iterations > full.iterations

    def test_restart_bookkeeping(self, quantum6, theta_obj):
        result = quantum6.run(GsOptions(rng_seed=2024), truth=theta_obj)
        assert result.total_iterations >= result.iterations
        assert result.total_iterations <= GsOptions().max_iterations
        assert result.to_dict()['restarts'] == result.restarts

    def test_noisy_data_keeps_best_attempt(
        self, state6, u6, theta_obj, quantum6
    ):
        rng = np.random.default_rng(31)
        exact = measure(state6, theta_obj, u6)
        counts = rng.multinomial(50_000, exact.probabilities)
        noisy = quantum6.with_measurement(
            MeasuredDistribution.from_counts(exact.basis, counts)
        )
        for seed in range(4):
            result = noisy.run(GsOptions(rng_seed=seed), truth=theta_obj)
            assert not result.converged
            assert result.restarts > 0
            assert result.final_phase_error < 0.2

    def test_max_iterations(self, quantum6):
        result = quantum6.run(GsOptions(max_iterations=3, rng_seed=1))
        assert result.iterations <= 3
        if not result.converged:
            assert result.stop_reason in ('max_iterations', 'stalled')

    def test_errors(self, state6, u6, extractor6, theta_obj):
        measured = measure(state6, theta_obj, u6)
        with pytest.raises(RetrievalError):
            quantum_gs(
                state6, u6, measured, extractor6, GsOptions(max_iterations=0)
            )
        with pytest.raises(RetrievalError):
            quantum_gs(
                state6, u6, measured, extractor6,
                initial_theta=PhaseVector.zeros(5),
            )
        with pytest.raises(RetrievalError):
            quantum_gs(
                state6, u6, measured, extractor6, GsOptions(restarts=-1)
            )
        other = MeasuredDistribution.from_state(uniform_state(5, 2))
        with pytest.raises(RetrievalError):
            QuantumGS(state6, u6, other, extractor6)
        with pytest.raises(OpticsError):
            QuantumGS(state6, np.ones((6, 6)), measured, extractor6)


class TestClassicalGS(object):
    def test_fixed_point_at_zero(self, u6):
        mags = np.array([math.sqrt(6), math.sqrt(2), 1, 1, 1, 1])
        zeros = PhaseVector.zeros(6)
        intensities = far_field_intensities(mags, zeros, u6)
        result = classical_gs(mags, u6, intensities, initial_theta=zeros)
        assert result.converged
        assert result.iterations == 1
        assert result.retrieved_theta == zeros

    def test_truth_is_fixed_point(self, classical6, theta_obj):
        assert phase_error(classical6.step(theta_obj), theta_obj) < 1e-10

    def test_trace_consistency(self, classical6, theta_obj):
        result = classical6.run(GsOptions(max_iterations=40, rng_seed=3))
        _, err = classical6.forward(result.retrieved_theta.thetas)
        assert result.final_fourier_error == err
        assert result.retrieved_theta[0] == 0
        assert result.phase_error_trace == ()

    def test_determinism(self, classical6):
        options = GsOptions(max_iterations=100, rng_seed=5)
        assert (
            classical6.run(options).fourier_error_trace
            == classical6.run(options).fourier_error_trace
        )

    def test_errors(self, u6):
        with pytest.raises(RetrievalError):
            ClassicalGS(np.zeros(6), u6, np.ones(6))
        with pytest.raises(RetrievalError):
            ClassicalGS(np.ones(5), u6, np.ones(5))
        with pytest.raises(RetrievalError):
            ClassicalGS(np.ones(6), u6, -np.ones(6))

    def test_with_measurement(self, classical6):
        other = classical6.with_measurement(np.ones(6))
        assert other.intensities.tolist() == [1.0] * 6
        assert np.array_equal(other.magnitudes, classical6.magnitudes)


class TestRestarts(object):
    def test_seeds_and_order(self, classical6):
        options = GsOptions(max_iterations=20)
        results = run_restarts(classical6, 5, 17, options)
        assert [r.seed for r in results] == [17 ^ i for i in range(5)]
        for r in results:
            single = classical6.run(options._replace(rng_seed=r.seed))
            assert single.fourier_error_trace == r.fourier_error_trace

    def test_parallel_matches_serial(self, classical6):
        options = GsOptions(max_iterations=20)
        serial = run_restarts(classical6, 4, 3, options, jobs=1)
        parallel = run_restarts(classical6, 4, 3, options, jobs=2)
        assert [r.fourier_error_trace for r in serial] == [
            r.fourier_error_trace for r in parallel
        ]

    def test_zero_runs(self, classical6):
        assert run_restarts(classical6, 0) == []
        with pytest.raises(RetrievalError):
            run_restarts(classical6, -1)


class TestClustering(object):
    def test_identical(self, theta_obj):
        results = [_result(theta_obj) for _ in range(7)]
        clusters = cluster_solutions(results, truth=theta_obj)
        assert len(clusters) == 1
        assert clusters[0].count == 7
        assert clusters[0].is_correct is True
        assert clusters[0].members == tuple(range(7))

    def test_sorted_by_count(self, theta_obj):
        other = np.asarray(theta_obj) + np.array([0, 1, 0, 0, 0, 0])
        results = [
            _result(other),
            _result(theta_obj),
            _result(theta_obj),
            _result(np.asarray(theta_obj) + 0.001),
        ]
        clusters = cluster_solutions(results, truth=theta_obj)
        assert [c.count for c in clusters] == [3, 1]
        assert clusters[0].members == (1, 2, 3)
        assert clusters[0].is_correct
        assert not clusters[1].is_correct

    def test_converged_only(self, theta_obj):
        results = [_result(theta_obj), _result(theta_obj, converged=False)]
        assert cluster_solutions(results)[0].count == 1
        clusters = cluster_solutions(results, converged_only=False)
        assert clusters[0].count == 2
        assert clusters[0].is_correct is None

    def test_empty(self):
        with pytest.raises(RetrievalError):
            cluster_solutions([])

    def test_closest_representative(self, theta_obj):
        reps = [theta_obj, PhaseVector(np.roll(theta_obj.thetas, 1))]
        assert closest_representative(theta_obj, reps) == 0
        assert closest_representative(reps[1], reps) == 1
        with pytest.raises(RetrievalError):
            closest_representative(theta_obj, [])


class TestClassifyAmbiguity(object):
    def test_correct(self, theta_obj):
        assert classify_ambiguity(theta_obj, theta_obj) is Ambiguity.CORRECT

    def test_translation(self, theta_obj):
        for shift in (1, 2, 5):
            candidate = PhaseVector(np.roll(theta_obj.thetas, shift))
            assert (
                classify_ambiguity(candidate, theta_obj)
                is Ambiguity.TRANSLATION
            )

    def test_reflection(self, theta_obj):
        candidate = PhaseVector(-theta_obj.thetas[::-1])
        assert classify_ambiguity(candidate, theta_obj) is Ambiguity.REFLECTION
        candidate = PhaseVector(-np.roll(theta_obj.thetas[::-1], 2))
        assert classify_ambiguity(candidate, theta_obj) is Ambiguity.REFLECTION

    def test_nontrivial(self, theta_obj):
        candidate = PhaseVector([0, 1, 2, 3, 4, 5])
        assert classify_ambiguity(candidate, theta_obj) is Ambiguity.NONTRIVIAL


class TestBatchStatistics(object):
    def test_success_fraction(self, theta_obj):
        results = [_result(theta_obj), _result(PhaseVector.zeros(6))]
        assert success_fraction(results, theta_obj) == 0.5
        assert success_fraction([], theta_obj) == 0.0

    def test_median_iterations(self, theta_obj):
        results = [
            _result(theta_obj, trace=(1.0, 0.0)),
            _result(theta_obj, trace=(1.0, 0.5, 0.0, 0.0)),
            _result(PhaseVector.zeros(6), trace=(1.0,) * 6),
            _result(theta_obj, converged=False, trace=(1.0,) * 9),
        ]
        assert median_iterations(results) == 4
        assert median_iterations(results, theta_obj) == 3
        assert math.isnan(median_iterations([]))

    def test_mean_fourier_trace(self, theta_obj):
        results = [
            _result(theta_obj, trace=(1.0, 0.0)),
            _result(theta_obj, trace=(3.0, 2.0, 1.0)),
        ]
        assert mean_fourier_trace(results).tolist() == [2.0, 1.0, 0.5]
        assert mean_fourier_trace([]).size == 0


@pytest.mark.slow
class TestFullScale(object):
    def test_quantum_always_correct(self, quantum6, theta_obj):
        results = run_restarts(quantum6, 1000, 1, truth=theta_obj, jobs=-1)
        assert success_fraction(results, theta_obj) == 1.0
        clusters = cluster_solutions(results, truth=theta_obj)
        assert len(clusters) == 1 and clusters[0].is_correct

    def test_classical_ambiguity(self, classical6, theta_obj):
        results = run_restarts(classical6, 1000, 1, truth=theta_obj, jobs=-1)
        assert 0.08 <= success_fraction(results, theta_obj) <= 0.24
        clusters = cluster_solutions(results, truth=theta_obj)
        assert 6 <= len(clusters) <= 10
        assert sum(c.is_correct for c in clusters) == 1

    def test_quantum_converges_faster(self, quantum6, classical6, theta_obj):
        q = run_restarts(quantum6, 200, 2, truth=theta_obj, jobs=-1)
        c = run_restarts(classical6, 1000, 2, truth=theta_obj, jobs=-1)
        assert median_iterations(q, theta_obj) < median_iterations(
            c, theta_obj
        )

    def test_median_trace_decreases(self, quantum6, theta_obj):
        results = run_restarts(quantum6, 100, 3, truth=theta_obj, jobs=-1)
        trace = mean_fourier_trace(results)
        assert trace[-1] < trace[0]
