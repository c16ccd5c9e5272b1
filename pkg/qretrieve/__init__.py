# -*- coding: utf-8 -*-

"""
Phase retrieval with quantum and classical light.
"""

__all__ = [
    '__version__',
    '__version_info__',
    'QRetrieveError',
    'BasisError',
    'StateError',
    'OpticsError',
    'RetrievalError',
    'NoiseError',
    'ConfigError',
    'FockBasis',
    'QuantumState',
    'enumerate_basis',
    'PhaseVector',
    'dft_matrix',
    'permanent',
    'multiphoton_transform',
    'inverse_transform',
    'MeasuredDistribution',
    'PhaseExtractor',
    'GsOptions',
    'GsResult',
    'Ambiguity',
    'quantum_gs',
    'classical_gs',
    'phase_error',
    'psi6',
    'generalized_state',
    'validate_state',
    'matched_classical_field',
    'run_sensitivity_sweep',
    'ExperimentConfig',
    'load_config',
]

from qretrieve.__about__ import (
    __version__,
    __version_info__,
)
from qretrieve.exceptions import (
    BasisError,
    ConfigError,
    NoiseError,
    OpticsError,
    QRetrieveError,
    RetrievalError,
    StateError,
)
from qretrieve.experiment import (
    ExperimentConfig,
    load_config,
)
from qretrieve.fock import (
    FockBasis,
    QuantumState,
    enumerate_basis,
)
from qretrieve.noise import run_sensitivity_sweep
from qretrieve.optics import (
    PhaseVector,
    dft_matrix,
    inverse_transform,
    multiphoton_transform,
    permanent,
)
from qretrieve.retrieval import (
    Ambiguity,
    GsOptions,
    GsResult,
    MeasuredDistribution,
    PhaseExtractor,
    classical_gs,
    phase_error,
    quantum_gs,
)
from qretrieve.statekit import (
    generalized_state,
    matched_classical_field,
    psi6,
    validate_state,
)
