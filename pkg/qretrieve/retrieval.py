# -*- coding: utf-8 -*-

"""
Gerchberg-Saxton phase retrieval with quantum and classical light.

Both algorithms alternate between the object plane, where the input
magnitudes are known, and the Fourier plane, where the measured
statistics are imposed. The quantum variant works on the D
configuration amplitudes of an N-photon state and recovers the mode
phases θ from the configuration phases φ_k = θ·n^(k) through a
:class:`PhaseExtractor`; the classical variant works directly on the
m field amplitudes.

Example:
    >>> from qretrieve.retrieval import wrap_phase_distance
    >>> wrap_phase_distance(0.25)
    0.25
"""

import logging
import math
from enum import Enum
from typing import (
    Any,
    Dict,
    Iterable,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
from joblib import Parallel, delayed

from qretrieve.exceptions import RetrievalError
from qretrieve.fock import FockBasis, QuantumState
from qretrieve.optics import (
    TWO_PI,
    PhaseVector,
    apply_phase_object,
    back_propagate_field,
    check_unitary,
    multiphoton_transform,
    propagate_field,
    transfer_matrix,
)
from qretrieve.types import Amplitudes, Angles, Matrix

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 5000
DEFAULT_FOURIER_TOLERANCE = 1e-10
DEFAULT_STEP_TOLERANCE = 1e-13
DEFAULT_RESTARTS = 50
DEFAULT_STAGNATION_WINDOW = 50
DEFAULT_STAGNATION_TOLERANCE = 1e-3

#: Phase error below which a noiseless retrieval counts as correct.
CORRECT_THRESHOLD = 1e-3

#: Phase-error radius used to group retrieved solutions.
CLUSTER_TOLERANCE = 0.05

#: Tolerance on Σ P_t = 1 for measured distributions.
PROBABILITY_TOLERANCE = 1e-9


class MeasuredDistribution(object):
    """
    Output-configuration probabilities, exact or estimated from counts.

    Args:
        basis: the Fock basis of the output configurations
        probabilities: D nonnegative probabilities summing to 1
        counts: the detection counts the probabilities came from, if
            they were sampled
    """

    __slots__ = 'basis', 'probabilities', 'counts'

    def __init__(
        self,
        basis: FockBasis,
        probabilities: Sequence[float],
        counts: Optional[Sequence[int]] = None,
    ):
        probs = np.array(probabilities, dtype=float).ravel()
        if probs.shape != (len(basis),):
            raise RetrievalError(
                f'expected {len(basis)} probabilities, got {probs.size}'
            )
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise RetrievalError('probabilities must be finite and >= 0')
        total = probs.sum()
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise RetrievalError(f'probabilities sum to {total!r}, not 1')
        probs.setflags(write=False)
        cnts = None
        if counts is not None:
            cnts = np.array(counts, dtype=np.int64).ravel()
            if cnts.shape != probs.shape or np.any(cnts < 0):
                raise RetrievalError('counts must be D nonnegative integers')
            if cnts.sum() == 0 or not np.allclose(
                probs, cnts / cnts.sum(), rtol=0, atol=1e-12
            ):
                raise RetrievalError('counts do not match probabilities')
            cnts.setflags(write=False)
        self.basis = basis
        self.probabilities = probs
        self.counts = cnts

    @classmethod
    def from_counts(
        cls, basis: FockBasis, counts: Sequence[int]
    ) -> 'MeasuredDistribution':
        """Return the empirical distribution of detection *counts*."""
        cnts = np.asarray(counts, dtype=np.int64)
        total = int(cnts.sum())
        if total <= 0:
            raise RetrievalError('at least one count is required')
        return cls(basis, cnts / total, counts=cnts)

    @classmethod
    def from_state(cls, state: QuantumState) -> 'MeasuredDistribution':
        """Return the exact output statistics |β_t|² of *state*."""
        probs = state.probabilities
        return cls(state.basis, probs / probs.sum())

    def __repr__(self):
        name = self.__class__.__name__
        kind = 'exact' if self.counts is None else 'sampled'
        return f'<{name} object ({kind}, D={len(self.basis)}) at {id(self)}>'

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            'm': self.basis.m,
            'N': self.basis.n,
            'probabilities': self.probabilities.tolist(),
        }
        if self.counts is not None:
            d['counts'] = self.counts.tolist()
        return d


class ClassicalField(object):
    """
    Complex amplitudes of a classical field over *m* modes.

    Example:
        >>> from qretrieve.retrieval import ClassicalField
        >>> ClassicalField([2, 0, 1]).intensities.tolist()
        [4.0, 0.0, 1.0]
    """

    __slots__ = ('amplitudes',)

    def __init__(self, amplitudes: Amplitudes):
        amps = np.array(amplitudes, dtype=complex).ravel()
        if amps.size == 0 or not np.any(amps):
            raise RetrievalError('field amplitudes are all zero')
        amps.setflags(write=False)
        self.amplitudes = amps

    def __repr__(self):
        values = ', '.join(f'{a:.4g}' for a in self.amplitudes)
        return f'ClassicalField([{values}])'

    def __eq__(self, other):
        if not isinstance(other, ClassicalField):
            return NotImplemented
        return np.array_equal(self.amplitudes, other.amplitudes)

    @property
    def m(self) -> int:
        return self.amplitudes.size

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    @property
    def intensities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


class PhaseExtractor(object):
    """
    Recovers mode phases θ from configuration phases φ.

    The extractor uses *m* configurations of the basis. The first is
    the reference; subtracting its phase removes the unobservable
    global phase, and fixing θ₁ = 0 leaves the (m−1)×(m−1) integer
    system (n^(k) − n^(ref))[2..m]·θ[2..m] = φ_k − φ_ref. That reduced
    matrix must be unimodular so that shifting any φ_k by 2π shifts θ
    by integer multiples of 2π only.

    Args:
        basis: the Fock basis of the input state
        subset_indices: *m* basis indices, reference first
    Raises:
        RetrievalError: if the subset has the wrong size or its
            reduced matrix is not unimodular
    """

    __slots__ = 'basis', 'subset_indices', 'matrix', 'reduced_inverse'

    def __init__(self, basis: FockBasis, subset_indices: Sequence[int]):
        subset = tuple(int(i) for i in subset_indices)
        m = basis.m
        if len(subset) != m or len(set(subset)) != m:
            raise RetrievalError(
                f'extractor needs {m} distinct configurations, '
                f'got {len(subset)}'
            )
        if any(not 0 <= i < len(basis) for i in subset):
            raise RetrievalError('extractor index outside the basis')
        matrix = basis.occupations[list(subset)]
        inverse = unimodular_inverse(reduced_matrix(matrix))
        if inverse is None:
            raise RetrievalError(
                'configuration subset is not unimodular after gauge '
                'reduction'
            )
        inverse.setflags(write=False)
        self.basis = basis
        self.subset_indices = subset
        self.matrix = matrix
        self.reduced_inverse = inverse

    def __repr__(self):
        name = self.__class__.__name__
        return f'<{name} object (subset={self.subset_indices}) at {id(self)}>'

    def __eq__(self, other):
        if not isinstance(other, PhaseExtractor):
            return NotImplemented
        return (
            self.basis == other.basis
            and self.subset_indices == other.subset_indices
        )

    def check_support(self, state: QuantumState) -> None:
        """Raise :exc:`RetrievalError` unless *state* fits the extractor."""
        if state.basis != self.basis:
            raise RetrievalError('extractor and state bases differ')
        missing = [
            i for i in self.subset_indices if state.amplitudes[i] == 0
        ]
        if missing:
            configs = [self.basis.configs[i] for i in missing]
            raise RetrievalError(
                f'extractor uses configurations absent from the state: '
                f'{configs}'
            )

    def extract(self, config_phases: Sequence[float]) -> PhaseVector:
        """Return θ (gauge θ₁ = 0) from the D configuration phases."""
        phis = np.asarray(config_phases, dtype=float).ravel()
        if phis.shape != (len(self.basis),):
            raise RetrievalError(
                f'expected {len(self.basis)} configuration phases, '
                f'got {phis.size}'
            )
        selected = phis[list(self.subset_indices)]
        rest = self.reduced_inverse @ (selected[1:] - selected[0])
        return PhaseVector(np.concatenate(([0.0], rest)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'subset_indices': list(self.subset_indices),
            'configs': [
                list(self.basis.configs[i]) for i in self.subset_indices
            ],
            'reduced_inverse': self.reduced_inverse.tolist(),
        }


def reduced_matrix(matrix: np.ndarray) -> np.ndarray:
    """
    Return the gauge-reduced matrix of an m×m occupation matrix.

    Rows are the occupations minus the first (reference) row, columns
    are modes 2..m.
    """
    matrix = np.asarray(matrix, dtype=np.int64)
    return (matrix[1:] - matrix[0])[:, 1:]


def unimodular_inverse(reduced: np.ndarray) -> Optional[np.ndarray]:
    """
    Return the integer inverse of *reduced*, or ``None`` if it has none.

    An integer matrix has an integer inverse exactly when its
    determinant is ±1; the candidate inverse is verified by exact
    integer multiplication.
    """
    reduced = np.asarray(reduced, dtype=np.int64)
    size = reduced.shape[0]
    if size == 0:
        return np.zeros((0, 0), dtype=np.int64)
    if round(abs(np.linalg.det(reduced))) != 1:
        return None
    inverse = np.rint(np.linalg.inv(reduced)).astype(np.int64)
    if not np.array_equal(reduced @ inverse, np.eye(size, dtype=np.int64)):
        return None
    return inverse


def extract_phases(
    config_phases: Sequence[float], extractor: PhaseExtractor
) -> PhaseVector:
    """Return the mode phases θ encoded by the configuration phases."""
    return extractor.extract(config_phases)


class Ambiguity(Enum):
    """
    How a retrieved phase vector relates to the true one.
    """

    CORRECT = 'correct'
    TRANSLATION = 'translation'
    REFLECTION = 'reflection'
    NONTRIVIAL = 'nontrivial'


class GsOptions(NamedTuple):
    """
    Stopping rules and seeding for a Gerchberg-Saxton run.

    A run succeeds when the Fourier error drops below
    *fourier_tolerance*. It stagnates when the largest wrapped phase
    update is below *step_tolerance*, or when the Fourier error has
    fallen by less than the fraction *stagnation_tolerance* over the
    last *stagnation_window* iterations (a window of 0 disables this
    test). A stagnated run starts over from new random phases, at most
    *restarts* times. *max_iterations* bounds the iterations of all
    attempts together.
    """

    max_iterations: int = DEFAULT_MAX_ITERATIONS
    fourier_tolerance: float = DEFAULT_FOURIER_TOLERANCE
    step_tolerance: float = DEFAULT_STEP_TOLERANCE
    restarts: int = DEFAULT_RESTARTS
    stagnation_window: int = DEFAULT_STAGNATION_WINDOW
    stagnation_tolerance: float = DEFAULT_STAGNATION_TOLERANCE
    rng_seed: Optional[int] = None


class GsResult(NamedTuple):
    """
    The outcome of one Gerchberg-Saxton run.

    The traces cover the attempt that produced :attr:`retrieved_theta`:
    entry i is evaluated on the phases that entered its iteration i and
    the last entries belong to :attr:`retrieved_theta`.
    :attr:`initial_theta` is the first start of the run; later attempts
    draw their starts from the same seeded generator.
    """

    retrieved_theta: PhaseVector
    fourier_error_trace: Tuple[float, ...]
    phase_error_trace: Tuple[float, ...]
    iterations: int
    converged: bool
    initial_theta: PhaseVector
    seed: Optional[int] = None
    stop_reason: str = 'tolerance'
    restarts: int = 0
    total_iterations: Optional[int] = None

    @property
    def final_fourier_error(self) -> float:
        return self.fourier_error_trace[-1]

    @property
    def final_phase_error(self) -> Optional[float]:
        if not self.phase_error_trace:
            return None
        return self.phase_error_trace[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'converged': self.converged,
            'stop_reason': self.stop_reason,
            'iterations': self.iterations,
            'restarts': self.restarts,
            'total_iterations': self.total_iterations,
            'initial_theta': self.initial_theta.tolist(),
            'retrieved_theta': self.retrieved_theta.tolist(),
            'fourier_error_trace': list(self.fourier_error_trace),
            'phase_error_trace': list(self.phase_error_trace),
        }


class SolutionCluster(NamedTuple):
    """A group of runs that retrieved (nearly) the same phases."""

    representative: PhaseVector
    count: int
    is_correct: Optional[bool]
    members: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'representative': self.representative.tolist(),
            'count': self.count,
            'is_correct': self.is_correct,
            'members': list(self.members),
        }


# Error metrics ###############################################################

def wrap_phase_distance(a: Union[float, np.ndarray]) -> Any:
    """
    Return the distance from *a* to the nearest multiple of 2π.

    Example:
        >>> import math
        >>> round(wrap_phase_distance(1.5 * math.pi), 12) == round(
        ...     math.pi / 2, 12)
        True
    """
    values = np.asarray(a, dtype=float)
    dist = np.abs(values - TWO_PI * np.round(values / TWO_PI))
    if dist.ndim == 0:
        return float(dist)
    return dist


def phase_error(
    estimate: Union[PhaseVector, Angles], truth: Union[PhaseVector, Angles]
) -> float:
    """
    Return the wrapped Euclidean distance between two phase vectors.

    The first mode is the gauge reference and is excluded.
    """
    est = np.asarray(estimate, dtype=float).ravel()
    tru = np.asarray(truth, dtype=float).ravel()
    if est.shape != tru.shape:
        raise RetrievalError(
            f'phase vectors differ in length: {est.size} != {tru.size}'
        )
    d = wrap_phase_distance(est[1:] - tru[1:])
    return float(math.sqrt(np.sum(np.square(d))))


def fourier_error(
    beta_iter: Amplitudes,
    measured: Union[MeasuredDistribution, Sequence[float]],
) -> float:
    """Return √Σ_t (|β_t|² − P_t)²."""
    probs = _probabilities(measured)
    beta = np.asarray(beta_iter, dtype=complex).ravel()
    if beta.shape != probs.shape:
        raise RetrievalError(
            f'dimension mismatch: {beta.size} amplitudes vs '
            f'{probs.size} probabilities'
        )
    return float(math.sqrt(np.sum((np.abs(beta) ** 2 - probs) ** 2)))


def classical_fourier_error(
    e_iter: Amplitudes, measured_intensities: Sequence[float]
) -> float:
    """
    Return √(Σ_x (|Ẽ_x|² − I_x)² / Σ_x I_x) for far-field amplitudes.
    """
    far = np.asarray(e_iter, dtype=complex).ravel()
    intensities = np.asarray(measured_intensities, dtype=float).ravel()
    if far.shape != intensities.shape:
        raise RetrievalError(
            f'dimension mismatch: {far.size} amplitudes vs '
            f'{intensities.size} intensities'
        )
    total = intensities.sum()
    if total <= 0:
        raise RetrievalError('measured intensities are all zero')
    residual = np.sum((np.abs(far) ** 2 - intensities) ** 2)
    return float(math.sqrt(residual / total))


def _probabilities(
    measured: Union[MeasuredDistribution, Sequence[float]],
) -> np.ndarray:
    if isinstance(measured, MeasuredDistribution):
        return measured.probabilities
    return np.asarray(measured, dtype=float).ravel()


# Forward models ##############################################################

def measure(
    state: QuantumState,
    theta: Union[PhaseVector, Angles],
    u: Matrix,
) -> MeasuredDistribution:
    """Return the exact output statistics of *state* through θ and *u*."""
    out = multiphoton_transform(apply_phase_object(state, theta), u)
    return MeasuredDistribution.from_state(out)


def far_field_intensities(
    field: Union[ClassicalField, Amplitudes],
    theta: Union[PhaseVector, Angles],
    u: Matrix,
) -> np.ndarray:
    """Return the far-field intensities of *field* through θ and *u*."""
    amps = (
        field.amplitudes
        if isinstance(field, ClassicalField)
        else np.asarray(field, dtype=complex)
    )
    angles = np.asarray(theta, dtype=float)
    return np.abs(propagate_field(amps * np.exp(1j * angles), u)) ** 2


# Gerchberg-Saxton ############################################################

def random_initial_theta(m: int, seed: Optional[int] = None) -> PhaseVector:
    """
    Return θ₁ = 0 and θ₂..θ_m drawn uniformly from [0, 2π).
    """
    return _draw_theta(np.random.default_rng(seed), m)


def _draw_theta(rng: np.random.Generator, m: int) -> PhaseVector:
    return PhaseVector(np.concatenate(([0.0], rng.uniform(0, TWO_PI, m - 1))))


class _Attempt(NamedTuple):
    theta: PhaseVector
    fourier_trace: List[float]
    phase_trace: List[float]
    stop_reason: str


class _GerchbergSaxton(object):
    """Shared iteration loop; subclasses define the two planes."""

    m: int

    def forward(self, theta: np.ndarray) -> Tuple[np.ndarray, float]:
        """Return the Fourier-plane amplitudes for *theta* and their error."""
        raise NotImplementedError()

    def update(self, far: np.ndarray) -> PhaseVector:
        """Impose the measurement on *far* and return the new phases."""
        raise NotImplementedError()

    def step(self, theta: Union[PhaseVector, Angles]) -> PhaseVector:
        """Return the phases after one iteration starting from *theta*."""
        far, _ = self.forward(np.asarray(theta, dtype=float))
        return self.update(far)

    def run(
        self,
        options: Optional[GsOptions] = None,
        truth: Optional[PhaseVector] = None,
        initial_theta: Optional[PhaseVector] = None,
    ) -> GsResult:
        """
        Iterate from *initial_theta* (random if not given).

        An attempt that stagnates above the Fourier tolerance is
        abandoned for new random phases while restarts and iterations
        remain. If no attempt reaches the tolerance, the one with the
        lowest final Fourier error is returned. If *truth* is given,
        the phase error of every iterate is recorded as well.
        """
        if options is None:
            options = GsOptions()
        if options.max_iterations < 1:
            raise RetrievalError('max_iterations must be at least 1')
        if options.restarts < 0 or options.stagnation_window < 0:
            raise RetrievalError(
                'restarts and stagnation_window must be nonnegative'
            )
        rng = np.random.default_rng(options.rng_seed)
        if initial_theta is None:
            initial_theta = _draw_theta(rng, self.m)
        elif len(initial_theta) != self.m:
            raise RetrievalError(
                f'expected {self.m} initial phases, got {len(initial_theta)}'
            )
        if truth is not None and len(truth) != self.m:
            raise RetrievalError(
                f'expected {self.m} true phases, got {len(truth)}'
            )
        budget = options.max_iterations
        start = PhaseVector(initial_theta)
        best: Optional[_Attempt] = None
        restarts = 0
        while True:
            attempt = self._descend(start, budget, options, truth)
            budget -= len(attempt.fourier_trace)
            if (
                best is None
                or attempt.fourier_trace[-1] < best.fourier_trace[-1]
            ):
                best = attempt
            if (
                attempt.stop_reason != 'stalled'
                or budget < 1
                or restarts == options.restarts
            ):
                break
            restarts += 1
            logger.debug(
                'Run with seed %s stagnated at Fourier error %.3g; '
                'restart %d',
                options.rng_seed, attempt.fourier_trace[-1], restarts,
            )
            start = _draw_theta(rng, self.m)
        assert best is not None
        result = GsResult(
            retrieved_theta=best.theta,
            fourier_error_trace=tuple(best.fourier_trace),
            phase_error_trace=tuple(best.phase_trace),
            iterations=len(best.fourier_trace),
            converged=best.stop_reason == 'tolerance',
            initial_theta=PhaseVector(initial_theta),
            seed=options.rng_seed,
            stop_reason=best.stop_reason,
            restarts=restarts,
            total_iterations=options.max_iterations - budget,
        )
        if result.stop_reason == 'max_iterations':
            logger.warning(
                'Run with seed %s did not converge after %d iterations '
                '(Fourier error %.3g)',
                options.rng_seed, result.total_iterations,
                result.final_fourier_error,
            )
        else:
            logger.info(
                'Run with seed %s stopped (%s) after %d iterations and '
                '%d restarts',
                options.rng_seed, result.stop_reason,
                result.total_iterations, restarts,
            )
        return result

    def _descend(
        self,
        theta: PhaseVector,
        budget: int,
        options: GsOptions,
        truth: Optional[PhaseVector],
    ) -> _Attempt:
        window = options.stagnation_window
        keep = 1.0 - options.stagnation_tolerance
        fourier_trace: List[float] = []
        phase_trace: List[float] = []
        stop_reason = 'max_iterations'
        for i in range(1, budget + 1):
            far, err = self.forward(theta.thetas)
            fourier_trace.append(err)
            if truth is not None:
                phase_trace.append(phase_error(theta, truth))
            if err < options.fourier_tolerance:
                stop_reason = 'tolerance'
                break
            if i == budget:
                break
            if (
                window
                and i > window
                and err >= keep * fourier_trace[-1 - window]
            ):
                stop_reason = 'stalled'
                break
            new = self.update(far)
            step = np.max(wrap_phase_distance(new.thetas - theta.thetas))
            if step < options.step_tolerance:
                stop_reason = 'stalled'
                break
            theta = new
        return _Attempt(theta, fourier_trace, phase_trace, stop_reason)


class QuantumGS(_GerchbergSaxton):
    """
    Gerchberg-Saxton retrieval with an N-photon probe state.

    The transfer coefficients of *u* on the support of *input_state*
    are computed once; each iteration is then two matrix-vector
    products.

    Args:
        input_state: the known probe state (its magnitudes |α_k| are
            the object-plane constraint)
        u: the multiport unitary
        measured: the measured output statistics
        extractor: maps configuration phases back to mode phases
    """

    def __init__(
        self,
        input_state: QuantumState,
        u: Matrix,
        measured: MeasuredDistribution,
        extractor: PhaseExtractor,
        transfer: Optional[np.ndarray] = None,
    ):
        mat = check_unitary(u)
        if mat.shape[0] != input_state.m:
            raise RetrievalError(
                f'expected a {input_state.m}-mode unitary, '
                f'got {mat.shape[0]} modes'
            )
        if measured.basis != input_state.basis:
            raise RetrievalError('measured distribution is over another basis')
        extractor.check_support(input_state)
        self.m = input_state.m
        self.input_state = input_state
        self.u = mat
        self.measured = measured
        self.extractor = extractor
        self._support = list(input_state.support)
        self._magnitudes = np.abs(input_state.amplitudes[self._support])
        self._occupations = input_state.basis.occupations[self._support]
        if transfer is None:
            transfer = transfer_matrix(input_state.basis, mat, self._support)
        self._transfer = transfer
        self._adjoint = transfer.conj().T
        self._sqrt_probs = np.sqrt(measured.probabilities)

    def with_measurement(self, measured: MeasuredDistribution) -> 'QuantumGS':
        """Return a retriever for other data, reusing the transfer matrix."""
        return QuantumGS(
            self.input_state,
            self.u,
            measured,
            self.extractor,
            transfer=self._transfer,
        )

    def forward(self, theta: np.ndarray) -> Tuple[np.ndarray, float]:
        amps = self._magnitudes * np.exp(1j * (self._occupations @ theta))
        beta = self._transfer @ amps
        return beta, fourier_error(beta, self.measured.probabilities)

    def update(self, far: np.ndarray) -> PhaseVector:
        # arg(0) is undefined; such components get phase 0
        phases = np.where(far == 0, 0.0, np.angle(far))
        imposed = self._sqrt_probs * np.exp(1j * phases)
        back = self._adjoint @ imposed
        phis = np.zeros(len(self.input_state.basis))
        phis[self._support] = np.angle(back)
        return self.extractor.extract(phis)


class ClassicalGS(_GerchbergSaxton):
    """
    Gerchberg-Saxton retrieval with a coherent classical field.

    Args:
        e_in_magnitudes: the known input magnitudes |E_in(x)|
        u: the multiport unitary
        measured_intensities: the far-field intensities I_out
    """

    def __init__(
        self,
        e_in_magnitudes: Sequence[float],
        u: Matrix,
        measured_intensities: Sequence[float],
    ):
        mags = np.abs(np.asarray(e_in_magnitudes, dtype=float).ravel())
        if not np.any(mags):
            raise RetrievalError('input magnitudes are all zero')
        mat = check_unitary(u)
        intensities = np.asarray(measured_intensities, dtype=float).ravel()
        if mat.shape[0] != mags.size or intensities.size != mags.size:
            raise RetrievalError(
                f'dimension mismatch: {mags.size} magnitudes, '
                f'{mat.shape[0]}-mode unitary, {intensities.size} intensities'
            )
        if np.any(intensities < 0) or intensities.sum() <= 0:
            raise RetrievalError('intensities must be >= 0, not all zero')
        self.m = mags.size
        self.magnitudes = mags
        self.u = mat
        self.intensities = intensities
        self._sqrt_intensities = np.sqrt(intensities)

    def with_measurement(
        self, measured_intensities: Sequence[float]
    ) -> 'ClassicalGS':
        """Return a retriever for other far-field data."""
        return ClassicalGS(self.magnitudes, self.u, measured_intensities)

    def forward(self, theta: np.ndarray) -> Tuple[np.ndarray, float]:
        far = propagate_field(self.magnitudes * np.exp(1j * theta), self.u)
        return far, classical_fourier_error(far, self.intensities)

    def update(self, far: np.ndarray) -> PhaseVector:
        phases = np.where(far == 0, 0.0, np.angle(far))
        imposed = self._sqrt_intensities * np.exp(1j * phases)
        field = back_propagate_field(imposed, self.u)
        return PhaseVector(np.angle(field))


def quantum_gs(
    input_state: QuantumState,
    u: Matrix,
    measured: MeasuredDistribution,
    extractor: PhaseExtractor,
    options: Optional[GsOptions] = None,
    truth: Optional[PhaseVector] = None,
    initial_theta: Optional[PhaseVector] = None,
) -> GsResult:
    """
    Retrieve the object phases from photon-correlation statistics.

    Each iteration (1) builds Σ|α_k| exp(iθ·n^(k))|n^(k)⟩ from the
    current phases, (2) propagates it through *u*, (3) keeps the
    arguments of the output amplitudes with magnitudes √P_t, (4)
    propagates back through U†, and (5) extracts new phases from the
    arguments of the recovered amplitudes.
    """
    gs = QuantumGS(input_state, u, measured, extractor)
    return gs.run(options, truth=truth, initial_theta=initial_theta)


def classical_gs(
    e_in_magnitudes: Sequence[float],
    u: Matrix,
    measured_intensities: Sequence[float],
    options: Optional[GsOptions] = None,
    truth: Optional[PhaseVector] = None,
    initial_theta: Optional[PhaseVector] = None,
) -> GsResult:
    """
    Retrieve the object phases from far-field intensities.
    """
    gs = ClassicalGS(e_in_magnitudes, u, measured_intensities)
    return gs.run(options, truth=truth, initial_theta=initial_theta)


def derive_seed(master_seed: int, index: int) -> int:
    """Return the seed of run *index* in a batch: master ⊕ index."""
    return int(master_seed) ^ int(index)


def run_restarts(
    gs: _GerchbergSaxton,
    runs: int,
    master_seed: int = 0,
    options: Optional[GsOptions] = None,
    truth: Optional[PhaseVector] = None,
    jobs: Optional[int] = 1,
) -> List[GsResult]:
    """
    Run *gs* from *runs* random starts, in parallel over *jobs* workers.

    Run i uses the seed ``master_seed ^ i``. Results are returned in run
    order regardless of which worker finished first.
    """
    if runs < 0:
        raise RetrievalError(f'number of runs must be >= 0: {runs}')
    if options is None:
        options = GsOptions()
    seeds = [derive_seed(master_seed, i) for i in range(runs)]
    logger.info('Starting %d restarts on %s workers', runs, jobs)
    results = Parallel(n_jobs=jobs)(
        delayed(gs.run)(options._replace(rng_seed=seed), truth)
        for seed in seeds
    )
    return list(results)


# Analysis ####################################################################

def cluster_solutions(
    results: Sequence[GsResult],
    tolerance: float = CLUSTER_TOLERANCE,
    truth: Optional[PhaseVector] = None,
    converged_only: bool = True,
) -> List[SolutionCluster]:
    """
    Group runs whose retrieved phases are within *tolerance*.

    Each run joins the first cluster whose representative (its first
    member) is closer than *tolerance*. Clusters are sorted by size,
    largest first; ties keep discovery order. With *truth*, a cluster
    is correct if its representative is within *tolerance* of it.

    Raises:
        RetrievalError: if *results* is empty
    """
    if not results:
        raise RetrievalError('no results to cluster')
    reps: List[PhaseVector] = []
    members: List[List[int]] = []
    for i, result in enumerate(results):
        if converged_only and not result.converged:
            continue
        theta = result.retrieved_theta
        for j, rep in enumerate(reps):
            if phase_error(theta, rep) < tolerance:
                members[j].append(i)
                break
        else:
            reps.append(theta)
            members.append([i])
    order = sorted(range(len(reps)), key=lambda j: -len(members[j]))
    return [
        SolutionCluster(
            representative=reps[j],
            count=len(members[j]),
            is_correct=(
                None if truth is None
                else phase_error(reps[j], truth) < tolerance
            ),
            members=tuple(members[j]),
        )
        for j in order
    ]


def classify_ambiguity(
    candidate: Union[PhaseVector, Angles],
    truth: Union[PhaseVector, Angles],
    tolerance: float = CORRECT_THRESHOLD,
) -> Ambiguity:
    """
    Relate *candidate* to *truth* through the trivial ambiguities.

    The truth is compared as is, under every cyclic translation of
    the modes, and under every conjugate reflection
    θ'_x = −θ_{(s−x) mod m} (plain reversal included), each
    re-gauged to θ₁ = 0.
    """
    cand = PhaseVector(candidate)
    tru = np.asarray(PhaseVector(truth), dtype=float)
    m = tru.size
    if cand.m != m:
        raise RetrievalError(
            f'phase vectors differ in length: {cand.m} != {m}'
        )
    if phase_error(cand, tru) < tolerance:
        return Ambiguity.CORRECT
    for shift in range(1, m):
        if phase_error(cand, PhaseVector(np.roll(tru, -shift))) < tolerance:
            return Ambiguity.TRANSLATION
    x = np.arange(m)
    for s in range(m):
        reflected = PhaseVector(-tru[(s - x) % m])
        if phase_error(cand, reflected) < tolerance:
            return Ambiguity.REFLECTION
    return Ambiguity.NONTRIVIAL


def is_correct(
    result: GsResult,
    truth: Union[PhaseVector, Angles],
    threshold: float = CORRECT_THRESHOLD,
) -> bool:
    """Return ``True`` if *result* retrieved *truth* within *threshold*."""
    return phase_error(result.retrieved_theta, truth) < threshold


def success_fraction(
    results: Sequence[GsResult],
    truth: Union[PhaseVector, Angles],
    threshold: float = CORRECT_THRESHOLD,
) -> float:
    """Return the fraction of *results* that retrieved *truth*."""
    if not results:
        return 0.0
    hits = sum(is_correct(r, truth, threshold) for r in results)
    return hits / len(results)


def median_iterations(
    results: Iterable[GsResult],
    truth: Optional[Union[PhaseVector, Angles]] = None,
    threshold: float = CORRECT_THRESHOLD,
) -> float:
    """
    Return the median iteration count of converged runs.

    With *truth*, only runs that retrieved it are counted. Returns
    ``nan`` if no run qualifies.
    """
    counts = [
        r.iterations
        for r in results
        if r.converged
        and (truth is None or is_correct(r, truth, threshold))
    ]
    if not counts:
        return math.nan
    return float(np.median(counts))


def mean_fourier_trace(results: Sequence[GsResult]) -> np.ndarray:
    """
    Return the Fourier error averaged over runs at each iteration.

    Runs that stopped early contribute their final value to later
    iterations.
    """
    if not results:
        return np.zeros(0)
    length = max(len(r.fourier_error_trace) for r in results)
    padded = np.array([
        np.pad(
            r.fourier_error_trace,
            (0, length - len(r.fourier_error_trace)),
            mode='edge',
        )
        for r in results
    ])
    return padded.mean(axis=0)


def clusters_with_truth(
    clusters: Sequence[SolutionCluster], truth: PhaseVector
) -> List[PhaseVector]:
    """
    Return cluster representatives with *truth* first.

    The truth replaces the correct cluster's representative, or is
    added if no cluster is correct.
    """
    reps = [truth]
    reps.extend(c.representative for c in clusters if not c.is_correct)
    return reps


def closest_representative(
    theta: Union[PhaseVector, Angles], representatives: Sequence[PhaseVector]
) -> int:
    """Return the index of the representative nearest to *theta*."""
    if not representatives:
        raise RetrievalError('no representatives given')
    errors = [phase_error(theta, rep) for rep in representatives]
    return int(np.argmin(errors))


def summarize(
    results: Sequence[GsResult], truth: Optional[PhaseVector] = None
) -> Mapping[str, Any]:
    """Return batch statistics for logging and JSON summaries."""
    summary: Dict[str, Any] = {
        'runs': len(results),
        'converged': sum(r.converged for r in results),
        'median_iterations': median_iterations(results),
    }
    if truth is not None:
        summary['success_fraction'] = success_fraction(results, truth)
        summary['median_iterations_correct'] = median_iterations(
            results, truth
        )
    return summary


__all__ = [
    'Ambiguity',
    'ClassicalField',
    'ClassicalGS',
    'GsOptions',
    'GsResult',
    'MeasuredDistribution',
    'PhaseExtractor',
    'QuantumGS',
    'SolutionCluster',
    'classical_fourier_error',
    'classical_gs',
    'classify_ambiguity',
    'cluster_solutions',
    'extract_phases',
    'far_field_intensities',
    'fourier_error',
    'measure',
    'phase_error',
    'quantum_gs',
    'random_initial_theta',
    'run_restarts',
    'success_fraction',
    'wrap_phase_distance',
]
