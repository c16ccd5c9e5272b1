# -*- coding: utf-8 -*-

"""
Shot-noise simulation and sensitivity sweeps.

A measurement with a total budget of N_T photons is simulated by
drawing detection events from the exact output statistics. For
N-photon probes a budget buys ⌊N_T/N⌋ coincidence events; classical
light spends every photon as a single-photon detection.
"""

import logging
import math
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from qretrieve.exceptions import NoiseError, StateError
from qretrieve.fock import QuantumState
from qretrieve.optics import PhaseVector
from qretrieve.retrieval import (
    ClassicalGS,
    GsOptions,
    MeasuredDistribution,
    PhaseExtractor,
    QuantumGS,
    closest_representative,
    cluster_solutions,
    clusters_with_truth,
    far_field_intensities,
    measure,
    phase_error,
    run_restarts,
)
from qretrieve.statekit import matched_classical_field, validate_state
from qretrieve.types import Matrix

logger = logging.getLogger(__name__)

#: Coefficient of the best achievable classical error c/√N_T for the
#: six-mode example.
ULTIMATE_CLASSICAL_COEFFICIENT = 5.0

#: Noiseless classical restarts used to find the competing solutions.
DEFAULT_REFERENCE_RUNS = 200


def sample_quantum_distribution(
    true_probs: MeasuredDistribution,
    total_photons: int,
    photon_number: int,
    rng: Optional[np.random.Generator] = None,
) -> MeasuredDistribution:
    """
    Return the statistics of ⌊N_T/N⌋ sampled N-photon events.

    Raises:
        NoiseError: if the budget is smaller than one event
    """
    if photon_number < 1:
        raise NoiseError(f'photon number must be positive: {photon_number}')
    if total_photons < photon_number:
        raise NoiseError(
            f'a budget of {total_photons} photons is less than one '
            f'{photon_number}-photon event'
        )
    rng = np.random.default_rng(rng)
    probs = true_probs.probabilities
    events = total_photons // photon_number
    counts = rng.multinomial(events, probs / probs.sum())
    return MeasuredDistribution.from_counts(true_probs.basis, counts)


def sample_classical_counts(
    true_intensities: Sequence[float],
    total_photons: int,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Return per-mode counts of *total_photons* single detections."""
    intensities = np.asarray(true_intensities, dtype=float).ravel()
    if total_photons < 1:
        raise NoiseError(f'photon budget must be positive: {total_photons}')
    if np.any(intensities < 0) or not np.any(intensities):
        raise NoiseError('intensities must be >= 0 and not all zero')
    rng = np.random.default_rng(rng)
    return rng.multinomial(total_photons, intensities / intensities.sum())


def sample_classical_intensities(
    true_intensities: Sequence[float],
    total_photons: int,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    Return intensities estimated from *total_photons* detections.

    The estimate keeps the total intensity of *true_intensities*.
    """
    counts = sample_classical_counts(true_intensities, total_photons, rng)
    total = float(np.sum(true_intensities))
    return counts * (total / total_photons)


def classical_minimum_bound(m: int, total_photons: float) -> float:
    """
    Return the minimal classical phase error (m − 1)/√N_T.

    Example:
        >>> classical_minimum_bound(6, 10_000)
        0.05
    """
    if m < 2:
        raise NoiseError(f'the bound needs at least 2 modes: {m}')
    if total_photons < 1:
        raise NoiseError(f'photon budget must be positive: {total_photons}')
    return (m - 1) / math.sqrt(total_photons)


def _finite_rows(
    rows: Sequence[Tuple[float, float]],
) -> Tuple[np.ndarray, np.ndarray]:
    data = np.array([(n, e) for n, e in rows if np.isfinite(e)], dtype=float)
    if data.shape[0] < 2:
        raise NoiseError('at least two finite data points are required')
    n_total, errors = data[:, 0], data[:, 1]
    if np.any(n_total <= 0) or np.any(errors <= 0):
        raise NoiseError('budgets and errors must be positive')
    return n_total, errors


def fit_inverse_sqrt(rows: Sequence[Tuple[float, float]]) -> float:
    """
    Return the least-squares *c* of error = c/√N_T.

    Rows whose error is not finite are skipped.

    Example:
        >>> fit_inverse_sqrt([(1, 5.0), (4, 2.5)])
        5.0
    """
    n_total, errors = _finite_rows(rows)
    x = 1.0 / np.sqrt(n_total)
    return float(np.sum(x * errors) / np.sum(x * x))


def log_log_slope(rows: Sequence[Tuple[float, float]]) -> float:
    """Return the slope of log(error) against log(N_T)."""
    n_total, errors = _finite_rows(rows)
    slope, _ = np.polyfit(np.log(n_total), np.log(errors), 1)
    return float(slope)


class SensitivityRow(NamedTuple):
    """Aggregated errors at one photon budget."""

    n_total: int
    q_mean_err: float
    q_std_err: float
    cl_mean_err_correct: float
    cl_success_frac: float
    cl_min_bound: float


class SensitivitySweep(object):
    """
    Phase errors of both algorithms over a range of photon budgets.

    Args:
        m: the number of modes
        photon_budgets: the budgets N_T, ascending
        trials_per_budget: noisy retrievals per budget and algorithm
        rows: one :class:`SensitivityRow` per budget
    """

    __slots__ = 'm', 'photon_budgets', 'trials_per_budget', 'rows'

    def __init__(
        self,
        m: int,
        photon_budgets: Sequence[int],
        trials_per_budget: int,
        rows: Sequence[SensitivityRow],
    ):
        if len(rows) != len(photon_budgets):
            raise NoiseError('one row is required per photon budget')
        self.m = m
        self.photon_budgets = tuple(int(n) for n in photon_budgets)
        self.trials_per_budget = trials_per_budget
        self.rows = tuple(rows)

    def __repr__(self):
        name = self.__class__.__name__
        return (
            f'<{name} object (budgets={len(self.photon_budgets)}, '
            f'trials={self.trials_per_budget}) at {id(self)}>'
        )

    def __eq__(self, other):
        if not isinstance(other, SensitivitySweep):
            return NotImplemented
        return (
            self.m == other.m
            and self.photon_budgets == other.photon_budgets
            and self.trials_per_budget == other.trials_per_budget
            and _rows_equal(self.rows, other.rows)
        )

    def _quantum(self):
        return [(r.n_total, r.q_mean_err) for r in self.rows]

    def _classical(self):
        return [(r.n_total, r.cl_mean_err_correct) for r in self.rows]

    def quantum_coefficient(self) -> float:
        return fit_inverse_sqrt(self._quantum())

    def classical_coefficient(self) -> float:
        return fit_inverse_sqrt(self._classical())

    def quantum_slope(self) -> float:
        return log_log_slope(self._quantum())

    def classical_slope(self) -> float:
        return log_log_slope(self._classical())

    def summary(self) -> Dict[str, Any]:
        """
        Return the fitted coefficients and slopes.

        Fits that lack two usable budgets are reported as ``None``.
        """
        summary: Dict[str, Any] = {
            'm': self.m,
            'photon_budgets': list(self.photon_budgets),
            'trials_per_budget': self.trials_per_budget,
            'minimum_bound_coefficient': self.m - 1,
            'ultimate_classical_coefficient': ULTIMATE_CLASSICAL_COEFFICIENT,
        }
        for key, fit in (
            ('quantum_coefficient', self.quantum_coefficient),
            ('classical_coefficient', self.classical_coefficient),
            ('quantum_slope', self.quantum_slope),
            ('classical_slope', self.classical_slope),
        ):
            try:
                summary[key] = fit()
            except NoiseError as exc:
                logger.warning('Cannot compute %s: %s', key, exc)
                summary[key] = None
        return summary


def _rows_equal(a: Sequence[SensitivityRow], b: Sequence[SensitivityRow]):
    # nan != nan, so compare through numpy
    return len(a) == len(b) and all(
        np.array_equal(np.array(x), np.array(y), equal_nan=True)
        for x, y in zip(a, b)
    )


def _trial(
    quantum: QuantumGS,
    classical: ClassicalGS,
    budget: int,
    seed: Sequence[int],
    options: GsOptions,
    truth: PhaseVector,
    references: Sequence[PhaseVector],
) -> Tuple[float, float, bool]:
    rng = np.random.default_rng(seed)
    q_measured = sample_quantum_distribution(
        quantum.measured, budget, quantum.input_state.n, rng
    )
    c_measured = sample_classical_intensities(
        classical.intensities, budget, rng
    )
    q_seed, c_seed = (int(s) for s in rng.integers(2**32, size=2))
    q_result = quantum.with_measurement(q_measured).run(
        options._replace(rng_seed=q_seed)
    )
    c_result = classical.with_measurement(c_measured).run(
        options._replace(rng_seed=c_seed)
    )
    c_theta = c_result.retrieved_theta
    return (
        phase_error(q_result.retrieved_theta, truth),
        phase_error(c_theta, truth),
        closest_representative(c_theta, references) == 0,
    )


def run_sensitivity_sweep(
    state: QuantumState,
    theta_obj: PhaseVector,
    u: Matrix,
    budgets: Sequence[int],
    trials: int,
    options: Optional[GsOptions] = None,
    master_seed: int = 0,
    extractor: Optional[PhaseExtractor] = None,
    reference_runs: int = DEFAULT_REFERENCE_RUNS,
    jobs: Optional[int] = 1,
) -> SensitivitySweep:
    """
    Compare quantum and classical retrieval under shot noise.

    For every budget and trial the exact statistics of *state* and of
    its matched classical field are resampled and both algorithms are
    run once from a random start. A classical result counts as correct
    when *theta_obj* is the nearest of the solutions found by
    *reference_runs* noiseless classical restarts; the classical mean
    error is taken over correct results only.

    Trial j at budget index i draws from the seed sequence
    ``(master_seed, i, j)`` so sweeps are reproducible for any *jobs*.

    Raises:
        StateError: if *state* is not a valid probe and no *extractor*
            is given
        NoiseError: on invalid budgets or trial counts
    """
    budgets = [int(b) for b in budgets]
    if not budgets:
        raise NoiseError('at least one photon budget is required')
    if any(b < state.n for b in budgets):
        raise NoiseError(
            f'every budget must hold at least one {state.n}-photon event'
        )
    if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
        raise NoiseError(f'budgets must be strictly ascending: {budgets}')
    if trials < 1:
        raise NoiseError(f'trials must be positive: {trials}')
    if options is None:
        options = GsOptions()
    truth = PhaseVector(theta_obj)
    if extractor is None:
        report = validate_state(state)
        if not report.valid:
            raise StateError(
                f'invalid probe state: {report.failure_reason}', report=report
            )
        extractor = report.extractor
    assert extractor is not None

    quantum = QuantumGS(state, u, measure(state, truth, u), extractor)
    field = matched_classical_field(state)
    classical = ClassicalGS(
        field.magnitudes, u, far_field_intensities(field, truth, u)
    )

    references = [truth]
    if reference_runs > 0:
        noiseless = run_restarts(
            classical, reference_runs, master_seed, options, truth, jobs
        )
        clusters = cluster_solutions(
            noiseless, truth=truth, converged_only=False
        )
        references = clusters_with_truth(clusters, truth)
    logger.info(
        'Noise sweep over %d budgets with %d competing solutions',
        len(budgets), len(references) - 1,
    )

    tasks = [
        (i, budget, j)
        for i, budget in enumerate(budgets)
        for j in range(trials)
    ]
    outcomes = Parallel(n_jobs=jobs)(
        delayed(_trial)(
            quantum, classical, budget, (master_seed, i, j),
            options, truth, references,
        )
        for i, budget, j in tasks
    )

    rows: List[SensitivityRow] = []
    for i, budget in enumerate(budgets):
        chunk = outcomes[i * trials:(i + 1) * trials]
        q_err = np.array([o[0] for o in chunk])
        c_correct = np.array([o[1] for o in chunk if o[2]])
        row = SensitivityRow(
            n_total=budget,
            q_mean_err=float(q_err.mean()),
            q_std_err=float(q_err.std(ddof=1)) if trials > 1 else 0.0,
            cl_mean_err_correct=(
                float(c_correct.mean()) if c_correct.size else math.nan
            ),
            cl_success_frac=c_correct.size / trials,
            cl_min_bound=classical_minimum_bound(state.m, budget),
        )
        logger.info(
            'N_T=%d: quantum %.4g, classical %.4g (%.0f%% correct)',
            budget, row.q_mean_err, row.cl_mean_err_correct,
            100 * row.cl_success_frac,
        )
        rows.append(row)
    return SensitivitySweep(state.m, budgets, trials, rows)


__all__ = [
    'SensitivityRow',
    'SensitivitySweep',
    'classical_minimum_bound',
    'fit_inverse_sqrt',
    'log_log_slope',
    'run_sensitivity_sweep',
    'sample_classical_intensities',
    'sample_quantum_distribution',
]
