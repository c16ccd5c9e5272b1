# -*- coding: utf-8 -*-

"""
Experiment configuration and drivers.

An :class:`ExperimentConfig` describes one numerical experiment: the
probe state, the object phases, the algorithms to run and their
options. The drivers in this module run the experiment and return
report objects; :mod:`qretrieve.codec` writes them to disk.
"""

import logging
import math
from pathlib import Path
from typing import (
    Any,
    Dict,
    List,
    Mapping,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from qretrieve import codec
from qretrieve.exceptions import ConfigError, QRetrieveError, StateError
from qretrieve.fock import QuantumState, enumerate_basis
from qretrieve.noise import (
    DEFAULT_REFERENCE_RUNS,
    SensitivitySweep,
    run_sensitivity_sweep,
)
from qretrieve.optics import TWO_PI, PhaseVector, dft_matrix
from qretrieve.retrieval import (
    CLUSTER_TOLERANCE,
    CORRECT_THRESHOLD,
    Ambiguity,
    ClassicalGS,
    GsOptions,
    GsResult,
    QuantumGS,
    SolutionCluster,
    classify_ambiguity,
    cluster_solutions,
    far_field_intensities,
    mean_fourier_trace,
    measure,
    median_iterations,
    run_restarts,
    success_fraction,
)
from qretrieve.statekit import (
    StateReport,
    generalized_state,
    matched_classical_field,
    psi6,
    validate_state,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ('quantum', 'classical', 'both')
STATE_BUILDERS = ('psi6', 'generalized')
BUNDLED_CONFIG = Path(__file__).parent / 'configs' / 'psi6.json'

_TOP_KEYS = frozenset([
    'mode_count', 'photon_number', 'state', 'theta_obj', 'algorithm',
    'runs', 'seed', 'gs', 'analysis', 'noise', 'output_dir',
])
_GS_KEYS = frozenset([
    'max_iterations', 'fourier_tolerance', 'step_tolerance', 'restarts',
    'stagnation_window', 'stagnation_tolerance',
])
_ANALYSIS_KEYS = frozenset(['cluster_tolerance', 'correct_threshold'])
_NOISE_KEYS = frozenset(['budgets', 'trials', 'reference_runs'])
_STATE_KEYS = frozenset(['builder', 'amplitudes'])

#: Largest accepted master seed (unsigned 64-bit).
MAX_SEED = 2**64 - 1


class NoiseSettings(NamedTuple):
    """The optional noise block of an experiment."""

    budgets: Tuple[int, ...]
    trials: int
    reference_runs: int = DEFAULT_REFERENCE_RUNS


class ExperimentConfig(object):
    """
    A validated experiment configuration.

    Use :meth:`from_dict` or :func:`load_config` to build one from
    JSON data; the constructor takes already-typed values.
    """

    __slots__ = (
        'mode_count', 'photon_number', 'state', 'theta_obj', 'algorithm',
        'runs', 'seed', 'gs', 'cluster_tolerance', 'correct_threshold',
        'noise', 'output_dir', 'filename',
    )

    def __init__(
        self,
        mode_count: int,
        photon_number: int,
        state: Mapping[str, Any],
        theta_obj: Sequence[float],
        algorithm: str = 'both',
        runs: int = 1000,
        seed: int = 0,
        gs: Optional[GsOptions] = None,
        cluster_tolerance: float = CLUSTER_TOLERANCE,
        correct_threshold: float = CORRECT_THRESHOLD,
        noise: Optional[NoiseSettings] = None,
        output_dir: Optional[str] = None,
        filename: Optional[str] = None,
    ):
        self.filename = filename
        self.mode_count = mode_count
        self.photon_number = photon_number
        self.state = dict(state)
        self.theta_obj = tuple(float(x) for x in theta_obj)
        self.algorithm = algorithm
        self.runs = runs
        self.seed = seed
        self.gs = GsOptions() if gs is None else gs
        self.cluster_tolerance = cluster_tolerance
        self.correct_threshold = correct_threshold
        self.noise = noise
        self.output_dir = output_dir
        self._validate()

    def __repr__(self):
        name = self.__class__.__name__
        return (
            f'<{name} object (m={self.mode_count}, N={self.photon_number}, '
            f'algorithm={self.algorithm!r}) at {id(self)}>'
        )

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def _error(self, message: str, key: Optional[str] = None) -> ConfigError:
        return ConfigError(message, filename=self.filename, key=key)

    def _validate(self) -> None:
        m = self.mode_count
        if not _is_int(m) or m < 1:
            raise self._error(
                f'must be a positive integer: {m!r}', 'mode_count'
            )
        n = self.photon_number
        if not _is_int(n) or n < 1:
            raise self._error(
                f'must be a positive integer: {n!r}', 'photon_number'
            )
        if len(self.theta_obj) != m:
            raise self._error(
                f'expected {m} phases, got {len(self.theta_obj)}', 'theta_obj'
            )
        if not all(math.isfinite(x) for x in self.theta_obj):
            raise self._error('phases must be finite', 'theta_obj')
        if self.theta_obj[0] != 0:
            raise self._error(
                f'the first phase is the reference and must be 0, '
                f'got {self.theta_obj[0]!r}',
                'theta_obj',
            )
        if self.algorithm not in ALGORITHMS:
            raise self._error(
                f'must be one of {", ".join(ALGORITHMS)}: {self.algorithm!r}',
                'algorithm',
            )
        if not _is_int(self.runs) or self.runs < 0:
            raise self._error(
                f'must be a nonnegative integer: {self.runs!r}', 'runs'
            )
        if not _is_int(self.seed) or not 0 <= self.seed <= MAX_SEED:
            raise self._error(
                f'must be an unsigned 64-bit integer: {self.seed!r}', 'seed'
            )
        self._validate_state()
        gs = self.gs
        if not _is_int(gs.max_iterations) or gs.max_iterations < 1:
            raise self._error(
                f'must be a positive integer: {gs.max_iterations!r}',
                'gs.max_iterations',
            )
        for key in ('restarts', 'stagnation_window'):
            value = getattr(gs, key)
            if not _is_int(value) or value < 0:
                raise self._error(
                    f'must be a nonnegative integer: {value!r}', f'gs.{key}'
                )
        for key in ('fourier_tolerance', 'step_tolerance'):
            value = getattr(gs, key)
            if not _is_number(value) or value < 0:
                raise self._error(
                    f'must be a nonnegative number: {value!r}', f'gs.{key}'
                )
        if (
            not _is_number(gs.stagnation_tolerance)
            or not 0 <= gs.stagnation_tolerance < 1
        ):
            raise self._error(
                f'must be a number in [0, 1): {gs.stagnation_tolerance!r}',
                'gs.stagnation_tolerance',
            )
        for key in ('cluster_tolerance', 'correct_threshold'):
            value = getattr(self, key)
            if not _is_number(value) or value <= 0:
                raise self._error(
                    f'must be a positive number: {value!r}', f'analysis.{key}'
                )
        if self.noise is not None:
            self._validate_noise(self.noise)

    def _validate_state(self) -> None:
        state = self.state
        unknown = set(state) - _STATE_KEYS
        if unknown:
            raise self._error(
                f'unknown keys: {", ".join(sorted(unknown))}', 'state'
            )
        if ('builder' in state) == ('amplitudes' in state):
            raise self._error(
                'give exactly one of "builder" or "amplitudes"', 'state'
            )
        builder = state.get('builder')
        if builder is not None and builder not in STATE_BUILDERS:
            raise self._error(
                f'must be one of {", ".join(STATE_BUILDERS)}: {builder!r}',
                'state.builder',
            )
        m, n = self.mode_count, self.photon_number
        if builder == 'psi6' and (m, n) != (6, 2):
            raise self._error(
                f'psi6 has 6 modes and 2 photons, not m={m}, N={n}',
                'state.builder',
            )
        if builder == 'generalized' and (n != 2 or m < 6):
            raise self._error(
                f'generalized states have 2 photons and at least 6 modes, '
                f'not m={m}, N={n}',
                'state.builder',
            )

    def _validate_noise(self, noise: NoiseSettings) -> None:
        budgets = noise.budgets
        if not budgets or not all(_is_int(b) and b >= 1 for b in budgets):
            raise self._error(
                f'must be a list of positive integers: {list(budgets)!r}',
                'noise.budgets',
            )
        if any(b2 <= b1 for b1, b2 in zip(budgets, budgets[1:])):
            raise self._error(
                f'must be strictly ascending: {list(budgets)!r}',
                'noise.budgets',
            )
        if not _is_int(noise.trials) or noise.trials < 1:
            raise self._error(
                f'must be a positive integer: {noise.trials!r}', 'noise.trials'
            )
        if not _is_int(noise.reference_runs) or noise.reference_runs < 0:
            raise self._error(
                f'must be a nonnegative integer: {noise.reference_runs!r}',
                'noise.reference_runs',
            )

    @classmethod
    def from_dict(
        cls, d: Mapping[str, Any], filename: Optional[str] = None
    ) -> 'ExperimentConfig':
        """
        Instantiate a configuration from a JSON-style dictionary.

        Raises:
            ConfigError: on unknown, missing or invalid keys
        """
        if not isinstance(d, Mapping):
            raise ConfigError('configuration must be a JSON object', filename)
        _check_keys(d, _TOP_KEYS, None, filename)
        for key in ('mode_count', 'photon_number', 'state', 'theta_obj'):
            if key not in d:
                raise ConfigError('missing required key', filename, key)
        gs_block = _block(d, 'gs', _GS_KEYS, filename)
        analysis = _block(d, 'analysis', _ANALYSIS_KEYS, filename)
        noise = None
        if d.get('noise') is not None:
            noise_block = _block(d, 'noise', _NOISE_KEYS, filename)
            for key in ('budgets', 'trials'):
                if key not in noise_block:
                    raise ConfigError(
                        'missing required key', filename, f'noise.{key}'
                    )
            budgets = noise_block['budgets']
            if not isinstance(budgets, list):
                raise ConfigError(
                    f'must be a list: {budgets!r}', filename, 'noise.budgets'
                )
            noise = NoiseSettings(
                budgets=tuple(_as_int(b) for b in budgets),
                trials=noise_block['trials'],
                reference_runs=noise_block.get(
                    'reference_runs', DEFAULT_REFERENCE_RUNS
                ),
            )
        state = d['state']
        if not isinstance(state, Mapping):
            raise ConfigError('must be a JSON object', filename, 'state')
        theta = d['theta_obj']
        if not isinstance(theta, list) or not all(
            _is_number(x) for x in theta
        ):
            raise ConfigError(
                f'must be a list of numbers: {theta!r}', filename, 'theta_obj'
            )
        return cls(
            mode_count=d['mode_count'],
            photon_number=d['photon_number'],
            state=state,
            theta_obj=theta,
            algorithm=d.get('algorithm', 'both'),
            runs=d.get('runs', 1000),
            seed=d.get('seed', 0),
            gs=GsOptions()._replace(**gs_block),
            cluster_tolerance=analysis.get(
                'cluster_tolerance', CLUSTER_TOLERANCE
            ),
            correct_threshold=analysis.get(
                'correct_threshold', CORRECT_THRESHOLD
            ),
            noise=noise,
            output_dir=d.get('output_dir'),
            filename=filename,
        )

    def to_dict(self) -> Dict[str, Any]:
        """Return the effective configuration as a JSON-style dictionary."""
        d: Dict[str, Any] = {
            'mode_count': self.mode_count,
            'photon_number': self.photon_number,
            'state': self.state,
            'theta_obj': list(self.theta_obj),
            'algorithm': self.algorithm,
            'runs': self.runs,
            'seed': self.seed,
            'gs': {
                'max_iterations': self.gs.max_iterations,
                'fourier_tolerance': self.gs.fourier_tolerance,
                'step_tolerance': self.gs.step_tolerance,
                'restarts': self.gs.restarts,
                'stagnation_window': self.gs.stagnation_window,
                'stagnation_tolerance': self.gs.stagnation_tolerance,
            },
            'analysis': {
                'cluster_tolerance': self.cluster_tolerance,
                'correct_threshold': self.correct_threshold,
            },
        }
        if self.noise is not None:
            d['noise'] = {
                'budgets': list(self.noise.budgets),
                'trials': self.noise.trials,
                'reference_runs': self.noise.reference_runs,
            }
        if self.output_dir is not None:
            d['output_dir'] = self.output_dir
        return d

    def replace(self, **kwargs) -> 'ExperimentConfig':
        """Return a copy with the given fields replaced."""
        fields = {
            name: getattr(self, name)
            for name in self.__slots__
        }
        fields.update(kwargs)
        return ExperimentConfig(**fields)

    @property
    def theta(self) -> PhaseVector:
        return PhaseVector(self.theta_obj)

    @property
    def algorithms(self) -> Tuple[str, ...]:
        if self.algorithm == 'both':
            return ('quantum', 'classical')
        return (self.algorithm,)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _as_int(value: Any) -> Any:
    # budgets such as 1e4 arrive as floats
    if isinstance(value, float) and value.is_integer():
        return int(value)
    return value


def _check_keys(
    d: Mapping[str, Any],
    allowed: frozenset,
    prefix: Optional[str],
    filename: Optional[str],
) -> None:
    for key in d:
        if key not in allowed:
            name = key if prefix is None else f'{prefix}.{key}'
            raise ConfigError('unknown key', filename, name)


def _block(
    d: Mapping[str, Any],
    key: str,
    allowed: frozenset,
    filename: Optional[str],
) -> Mapping[str, Any]:
    block = d.get(key)
    if block is None:
        return {}
    if not isinstance(block, Mapping):
        raise ConfigError('must be a JSON object', filename, key)
    _check_keys(block, allowed, key, filename)
    return block


def load_config(source: codec.FileOrFilename) -> ExperimentConfig:
    """
    Read an experiment configuration from JSON.

    Raises:
        ConfigError: if the file cannot be read or parsed, or if the
            configuration is invalid
    """
    filename = str(source) if isinstance(source, (str, Path)) else None
    try:
        data = codec.load(source)
    except OSError as exc:
        raise ConfigError(str(exc), filename) from exc
    except ValueError as exc:
        raise ConfigError(f'invalid JSON: {exc}', filename) from exc
    return ExperimentConfig.from_dict(data, filename=filename)


def build_state(config: ExperimentConfig) -> QuantumState:
    """Return the probe state described by *config*."""
    builder = config.state.get('builder')
    if builder == 'psi6':
        return psi6()
    if builder == 'generalized':
        return generalized_state(config.mode_count)
    basis = enumerate_basis(config.mode_count, config.photon_number)
    try:
        amps = [complex(re, im) for re, im in config.state['amplitudes']]
        return QuantumState(basis, amps, normalize=True)
    except (TypeError, ValueError) as exc:
        raise ConfigError(
            f'invalid amplitudes: {exc}', config.filename, 'state.amplitudes'
        ) from exc
    except StateError as exc:
        raise ConfigError(
            str(exc), config.filename, 'state.amplitudes'
        ) from exc


def check_state(config: ExperimentConfig) -> StateReport:
    """Build the probe state of *config* and validate it."""
    return validate_state(build_state(config))


class RunRow(NamedTuple):
    """One line of a batch summary."""

    run_id: int
    seed: Optional[int]
    converged: bool
    iterations: int
    final_fourier_error: float
    final_phase_error: Optional[float]
    cluster_id: Optional[int]
    ambiguity_class: str


class AlgorithmReport(NamedTuple):
    """The restarts of one algorithm and their analysis."""

    algorithm: str
    results: Tuple[GsResult, ...]
    clusters: Tuple[SolutionCluster, ...]
    cluster_ambiguities: Tuple[Ambiguity, ...]
    rows: Tuple[RunRow, ...]
    success_fraction: float
    median_iterations: float
    median_iterations_correct: float
    mean_fourier_trace: np.ndarray

    def summary(self) -> Dict[str, Any]:
        return {
            'algorithm': self.algorithm,
            'runs': len(self.results),
            'converged': sum(r.converged for r in self.results),
            'success_fraction': self.success_fraction,
            'median_iterations': self.median_iterations,
            'median_iterations_correct': self.median_iterations_correct,
            'cluster_count': len(self.clusters),
            'clusters': [
                dict(c.to_dict(), ambiguity_class=a.value)
                for c, a in zip(self.clusters, self.cluster_ambiguities)
            ],
        }


class RetrievalReport(NamedTuple):
    """The outcome of :func:`run_retrieval`."""

    config: ExperimentConfig
    state_report: StateReport
    algorithms: Dict[str, AlgorithmReport]

    def summary(self) -> Dict[str, Any]:
        return {
            'theta_obj': list(self.config.theta_obj),
            'state': self.state_report.to_dict(),
            'algorithms': {
                name: report.summary()
                for name, report in self.algorithms.items()
            },
        }


def _require_valid(state: QuantumState) -> StateReport:
    report = validate_state(state)
    if not report.valid:
        raise StateError(
            f'invalid probe state: {report.failure_reason}', report=report
        )
    return report


def _analyze(
    algorithm: str,
    results: Sequence[GsResult],
    truth: PhaseVector,
    cluster_tolerance: float,
    correct_threshold: float,
) -> AlgorithmReport:
    clusters: List[SolutionCluster] = []
    if results:
        clusters = cluster_solutions(results, cluster_tolerance, truth)
    cluster_of: Dict[int, int] = {}
    for cid, cluster in enumerate(clusters):
        for member in cluster.members:
            cluster_of[member] = cid
    ambiguities = tuple(
        classify_ambiguity(c.representative, truth, cluster_tolerance)
        for c in clusters
    )
    rows = tuple(
        RunRow(
            run_id=i,
            seed=r.seed,
            converged=r.converged,
            iterations=r.iterations,
            final_fourier_error=r.final_fourier_error,
            final_phase_error=r.final_phase_error,
            cluster_id=cluster_of.get(i),
            ambiguity_class=(
                classify_ambiguity(
                    r.retrieved_theta, truth, correct_threshold
                ).value
                if r.converged
                else r.stop_reason
            ),
        )
        for i, r in enumerate(results)
    )
    return AlgorithmReport(
        algorithm=algorithm,
        results=tuple(results),
        clusters=tuple(clusters),
        cluster_ambiguities=ambiguities,
        rows=rows,
        success_fraction=success_fraction(results, truth, correct_threshold),
        median_iterations=median_iterations(results),
        median_iterations_correct=median_iterations(
            results, truth, correct_threshold
        ),
        mean_fourier_trace=mean_fourier_trace(results),
    )


def run_retrieval(
    config: ExperimentConfig, jobs: Optional[int] = 1
) -> RetrievalReport:
    """
    Run the restarts of every configured algorithm.

    Both algorithms use the same master seed, so run *i* of each
    starts from the same random phases.

    Raises:
        StateError: if the probe state fails validation
    """
    state = build_state(config)
    report = _require_valid(state)
    assert report.extractor is not None
    u = dft_matrix(config.mode_count)
    truth = config.theta
    reports: Dict[str, AlgorithmReport] = {}
    for algorithm in config.algorithms:
        gs: Union[QuantumGS, ClassicalGS]
        if algorithm == 'quantum':
            gs = QuantumGS(
                state, u, measure(state, truth, u), report.extractor
            )
        else:
            field = matched_classical_field(state)
            gs = ClassicalGS(
                field.magnitudes, u, far_field_intensities(field, truth, u)
            )
        logger.info('Running %d %s restarts', config.runs, algorithm)
        results = run_restarts(
            gs, config.runs, config.seed, config.gs, truth, jobs
        )
        reports[algorithm] = _analyze(
            algorithm,
            results,
            truth,
            config.cluster_tolerance,
            config.correct_threshold,
        )
        logger.info(
            '%s: success fraction %.3f, %d clusters',
            algorithm,
            reports[algorithm].success_fraction,
            len(reports[algorithm].clusters),
        )
    return RetrievalReport(config, report, reports)


def run_noise_sweep(
    config: ExperimentConfig, jobs: Optional[int] = 1
) -> SensitivitySweep:
    """
    Run the shot-noise sweep of *config*.

    Raises:
        ConfigError: if *config* has no noise block
    """
    if config.noise is None:
        raise ConfigError(
            'a noise block is required for the sweep', config.filename, 'noise'
        )
    state = build_state(config)
    report = _require_valid(state)
    return run_sensitivity_sweep(
        state,
        config.theta,
        dft_matrix(config.mode_count),
        config.noise.budgets,
        config.noise.trials,
        options=config.gs,
        master_seed=config.seed,
        extractor=report.extractor,
        reference_runs=config.noise.reference_runs,
        jobs=jobs,
    )


def random_object(m: int, seed: int) -> PhaseVector:
    """Return random object phases for *m* modes, drawn from *seed*."""
    rng = np.random.default_rng([seed, m])
    return PhaseVector(np.concatenate(([0.0], rng.uniform(0, TWO_PI, m - 1))))


class GeneralizationReport(NamedTuple):
    """Success of both algorithms on a generalized probe state."""

    m: int
    runs: int
    seed: int
    theta_obj: PhaseVector
    quantum: AlgorithmReport
    classical: AlgorithmReport

    def summary(self) -> Dict[str, Any]:
        return {
            'm': self.m,
            'runs': self.runs,
            'seed': self.seed,
            'theta_obj': self.theta_obj.tolist(),
            'quantum_success_fraction': self.quantum.success_fraction,
            'classical_success_fraction': self.classical.success_fraction,
            'quantum_median_iterations': self.quantum.median_iterations,
            'classical_median_iterations': self.classical.median_iterations,
            'classical_cluster_count': len(self.classical.clusters),
        }


def run_generalization(
    m: int,
    runs: int,
    seed: int = 0,
    jobs: Optional[int] = 1,
    options: Optional[GsOptions] = None,
) -> GeneralizationReport:
    """
    Compare both algorithms on the *m*-mode generalized probe state.

    The object phases are drawn at random from *seed*.

    Raises:
        StateError: if *m* < 6 or the generalized state is invalid
    """
    if runs < 0:
        raise QRetrieveError(f'number of runs must be >= 0: {runs}')
    state = generalized_state(m)
    config = ExperimentConfig(
        mode_count=m,
        photon_number=2,
        state={'builder': 'generalized'},
        theta_obj=random_object(m, seed).tolist(),
        algorithm='both',
        runs=runs,
        seed=seed,
        gs=options,
    )
    logger.info(
        'Generalized state for m=%d has %d terms', m, len(state.support)
    )
    report = run_retrieval(config, jobs)
    return GeneralizationReport(
        m=m,
        runs=runs,
        seed=seed,
        theta_obj=config.theta,
        quantum=report.algorithms['quantum'],
        classical=report.algorithms['classical'],
    )
