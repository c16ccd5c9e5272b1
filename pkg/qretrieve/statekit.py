# -*- coding: utf-8 -*-

"""
Probe states for quantum phase retrieval and their validation.

A probe state can identify the phases of an object uniquely only if
(1) its mean photon numbers break every translation and reflection
symmetry of the mode axis, and (2) at least *m* of its configurations
form an occupation matrix that can be inverted over the integers once
the global phase is fixed. :func:`validate_state` checks both and
returns the :class:`~qretrieve.retrieval.PhaseExtractor` that
retrieval needs.
"""

import itertools
import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from qretrieve.exceptions import RetrievalError, StateError
from qretrieve.fock import QuantumState, enumerate_basis
from qretrieve.retrieval import (
    ClassicalField,
    PhaseExtractor,
    reduced_matrix,
    unimodular_inverse,
)
from qretrieve.types import FockConfig

logger = logging.getLogger(__name__)

#: Tolerance when comparing mean occupations for symmetries.
SYMMETRY_TOLERANCE = 1e-12

#: Largest number of configuration subsets tried by the extractor search.
MAX_EXTRACTOR_CANDIDATES = 200_000

#: Largest denominator when snapping intensity ratios to fractions.
RATIO_DENOMINATOR = 1000

PSI6_CONFIGS: Tuple[FockConfig, ...] = (
    (2, 0, 0, 0, 0, 0),
    (1, 1, 0, 0, 0, 0),
    (1, 0, 1, 0, 0, 0),
    (1, 0, 0, 1, 0, 0),
    (1, 0, 0, 0, 1, 0),
    (0, 1, 0, 0, 0, 1),
)


class StateReport(NamedTuple):
    """
    The outcome of :func:`validate_state`.

    The extractor is set only when neither symmetry is present and a
    suitable configuration subset was found.
    """

    translation_symmetric: bool
    reflection_symmetric: bool
    extractor: Optional[PhaseExtractor] = None
    failure_reason: Optional[str] = None
    mean_occupation: Tuple[float, ...] = ()

    @property
    def valid(self) -> bool:
        return self.extractor is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'valid': self.valid,
            'translation_symmetric': self.translation_symmetric,
            'reflection_symmetric': self.reflection_symmetric,
            'mean_occupation': list(self.mean_occupation),
            'extractor': (
                None if self.extractor is None else self.extractor.to_dict()
            ),
            'failure_reason': self.failure_reason,
        }


def psi6() -> QuantumState:
    """
    Return the six-mode, two-photon probe state.

    It has equal amplitudes 1/√6 on six of the 21 configurations.

    Example:
        >>> from qretrieve.statekit import psi6
        >>> len(psi6().support)
        6
    """
    return QuantumState.from_terms(6, 2, {c: 1.0 for c in PSI6_CONFIGS})


def _generalized_configs(m: int) -> List[FockConfig]:
    def config(*modes: int) -> FockConfig:
        occ = [0] * m
        for x in modes:
            occ[x] += 1
        return tuple(occ)

    configs = [config(0, 0), config(0, 1)]
    configs.extend(config(0, x) for x in range(2, m - 1))
    configs.append(config(1, m - 1))
    return configs


def generalized_state(m: int) -> QuantumState:
    """
    Return the *m*-mode extension of :func:`psi6`.

    The state holds two photons in *m* equally weighted terms: both in
    mode 1, one each in modes 1 and 2, one in mode 1 and one in each of
    modes 3 to m−1 in turn, and one each in modes 2 and *m*.

    Raises:
        StateError: if *m* < 6 or the state fails :func:`validate_state`
    """
    if m < 6:
        raise StateError(f'generalized states need at least 6 modes: {m}')
    terms = {c: 1.0 for c in _generalized_configs(m)}
    state = QuantumState.from_terms(m, 2, terms)
    report = validate_state(state)
    if not report.valid:
        raise StateError(
            f'generalized state for m={m} is not a valid probe: '
            f'{report.failure_reason}',
            report=report,
        )
    return state


def uniform_state(m: int, n: int) -> QuantumState:
    """Return the state with equal amplitudes on every configuration."""
    basis = enumerate_basis(m, n)
    return QuantumState(basis, np.ones(len(basis)), normalize=True)


def translation_symmetric(occupation: np.ndarray) -> bool:
    """Return ``True`` if a nontrivial cyclic shift leaves it."""
    occ = np.asarray(occupation, dtype=float)
    return any(
        np.allclose(occ, np.roll(occ, s), rtol=0, atol=SYMMETRY_TOLERANCE)
        for s in range(1, occ.size)
    )


def reflection_symmetric(occupation: np.ndarray) -> bool:
    """Return ``True`` if a reflection x ↦ (s − x) mod m leaves it."""
    occ = np.asarray(occupation, dtype=float)
    x = np.arange(occ.size)
    return any(
        np.allclose(occ, occ[(s - x) % occ.size], rtol=0,
                    atol=SYMMETRY_TOLERANCE)
        for s in range(occ.size)
    )


def find_extractor(state: QuantumState) -> Optional[PhaseExtractor]:
    """
    Return the first unimodular configuration subset of *state*.

    Subsets of *m* support configurations are scanned in canonical
    order. ``None`` is returned if none qualifies or the search limit
    is reached.
    """
    basis = state.basis
    m = basis.m
    for tried, subset in enumerate(itertools.combinations(state.support, m)):
        if tried >= MAX_EXTRACTOR_CANDIDATES:
            logger.warning(
                'Extractor search stopped after %d subsets', tried
            )
            return None
        matrix = basis.occupations[list(subset)]
        if unimodular_inverse(reduced_matrix(matrix)) is not None:
            logger.debug('Found extractor %s after %d subsets', subset, tried)
            return PhaseExtractor(basis, subset)
    return None


def validate_state(state: QuantumState) -> StateReport:
    """
    Check whether *state* can identify an object's phases uniquely.

    Failures are described in the report rather than raised.
    """
    occupation = state.mean_occupation()
    mean = tuple(float(x) for x in occupation)
    t_sym = translation_symmetric(occupation)
    r_sym = reflection_symmetric(occupation)
    if t_sym or r_sym:
        kinds = [
            name for name, flag in
            (('translation', t_sym), ('reflection', r_sym)) if flag
        ]
        reason = f'mean occupations have {" and ".join(kinds)} symmetry'
        return StateReport(t_sym, r_sym, None, reason, mean)
    support = state.support
    if len(support) < state.m:
        reason = (
            f'state has {len(support)} populated configurations; '
            f'at least {state.m} are required'
        )
        return StateReport(False, False, None, reason, mean)
    try:
        extractor = find_extractor(state)
    except RetrievalError as exc:
        return StateReport(False, False, None, str(exc), mean)
    if extractor is None:
        reason = 'no unimodular configuration subset in the support'
        return StateReport(False, False, None, reason, mean)
    return StateReport(False, False, extractor, None, mean)


def matched_classical_field(state: QuantumState) -> ClassicalField:
    """
    Return the classical field with the intensity ratios of *state*.

    The amplitudes are √(⟨n_x⟩ / min⟨n⟩), the minimum taken over
    populated modes, so the dimmest populated mode has intensity 1.
    Ratios within 1e-9 of a simple fraction are taken exactly.

    Example:
        >>> from qretrieve.statekit import matched_classical_field, psi6
        >>> field = matched_classical_field(psi6())
        >>> field.intensities.round(12).tolist()
        [6.0, 2.0, 1.0, 1.0, 1.0, 1.0]
    """
    occupation = state.mean_occupation()
    smallest = occupation[occupation > 0].min()
    ratios = []
    for value in occupation / smallest:
        frac = Fraction(float(value)).limit_denominator(RATIO_DENOMINATOR)
        ratios.append(float(frac) if abs(frac - value) < 1e-9 else value)
    return ClassicalField([math.sqrt(r) for r in ratios])


__all__ = [
    'PSI6_CONFIGS',
    'StateReport',
    'find_extractor',
    'generalized_state',
    'matched_classical_field',
    'psi6',
    'uniform_state',
    'validate_state',
]
