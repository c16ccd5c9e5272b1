# -*- coding: utf-8 -*-

"""
Fock spaces of N photons in m modes.

A :class:`FockBasis` enumerates every occupation configuration of *N*
photons over *m* modes in a fixed canonical order (lexicographically
descending on the occupation vector), and a :class:`QuantumState`
holds a dense vector of complex amplitudes over such a basis.

Example:
    >>> from qretrieve.fock import enumerate_basis
    >>> basis = enumerate_basis(3, 2)
    >>> len(basis)
    6
    >>> basis.configs[:3]
    ((2, 0, 0), (1, 1, 0), (1, 0, 1))
    >>> basis.index_of((0, 1, 1))
    4
"""

import logging
import math
from functools import lru_cache
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from qretrieve.exceptions import BasisError, StateError
from qretrieve.types import Amplitudes, FockConfig

logger = logging.getLogger(__name__)

#: Largest basis dimension D that will be enumerated.
MAX_DIMENSION = 10**6

#: Normalization tolerance for quantum states.
NORM_TOLERANCE = 1e-12


def basis_size(m: int, n: int) -> int:
    """
    Return the number of configurations D of *n* photons in *m* modes.

    Raises:
        BasisError: if *m* or *n* is not positive or if D exceeds
            :data:`MAX_DIMENSION`
    Example:
        >>> basis_size(6, 2)
        21
    """
    if m < 1:
        raise BasisError(f'mode count must be positive: {m}')
    if n < 1:
        raise BasisError(f'photon number must be positive: {n}')
    d = math.comb(n + m - 1, n)
    if d > MAX_DIMENSION:
        raise BasisError(
            f'basis for m={m}, N={n} has {d} configurations '
            f'(limit {MAX_DIMENSION})'
        )
    return d


class FockBasis(object):
    """
    The ordered set of occupation configurations of *n* photons in *m*
    modes.

    Bases are immutable; use :func:`enumerate_basis` to obtain a shared
    instance.

    Args:
        m: the number of modes
        n: the number of photons
    """

    __slots__ = 'm', 'n', 'configs', 'occupations', 'norms', '_index'

    def __init__(self, m: int, n: int):
        d = basis_size(m, n)
        configs = tuple(_compositions(n, m))
        assert len(configs) == d
        occupations = np.array(configs, dtype=int).reshape(d, m)
        occupations.setflags(write=False)
        norms = np.array(
            [math.prod(map(math.factorial, c)) for c in configs],
            dtype=float,
        )
        norms.setflags(write=False)

        self.m = m
        self.n = n
        self.configs: Tuple[FockConfig, ...] = configs
        #: D×m integer array of the occupations, one row per config
        self.occupations = occupations
        #: ∏ n_x! for each config
        self.norms = norms
        self._index: Dict[FockConfig, int] = {
            c: i for i, c in enumerate(configs)
        }
        logger.debug('Enumerated Fock basis m=%d N=%d (D=%d)', m, n, d)

    def __repr__(self):
        name = self.__class__.__name__
        return (
            f'<{name} object (m={self.m}, N={self.n}, D={len(self)}) '
            f'at {id(self)}>'
        )

    def __eq__(self, other):
        if not isinstance(other, FockBasis):
            return NotImplemented
        return self.m == other.m and self.n == other.n

    def __hash__(self):
        return hash((self.m, self.n))

    def __len__(self) -> int:
        return len(self.configs)

    def __iter__(self) -> Iterator[FockConfig]:
        return iter(self.configs)

    def __getitem__(self, i: int) -> FockConfig:
        return self.configs[i]

    def __reduce__(self):
        return (enumerate_basis, (self.m, self.n))

    def index_of(self, config: FockConfig) -> int:
        """
        Return the position of *config* in the canonical ordering.

        Raises:
            BasisError: if *config* does not have length *m* or does
                not hold exactly *n* photons
        """
        key = tuple(int(x) for x in config)
        if len(key) != self.m:
            raise BasisError(
                f'configuration {key} does not have {self.m} modes'
            )
        if any(x < 0 for x in key) or sum(key) != self.n:
            raise BasisError(
                f'configuration {key} does not hold {self.n} photons'
            )
        return self._index[key]


def _compositions(n: int, m: int) -> Iterator[FockConfig]:
    """Yield weak compositions of *n* into *m* parts, descending."""
    if m == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, m - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def enumerate_basis(m: int, n: int) -> FockBasis:
    """
    Return the canonical Fock basis of *n* photons in *m* modes.

    The basis has D = C(n+m-1, n) configurations. Results are cached
    and shared since bases are immutable.

    Example:
        >>> enumerate_basis(1, 5).configs
        ((5,),)
    """
    return FockBasis(m, n)


def index_of(basis: FockBasis, config: FockConfig) -> int:
    """Return the index of *config* in *basis*."""
    return basis.index_of(config)


class QuantumState(object):
    """
    A pure state of a fixed number of photons over a :class:`FockBasis`.

    Args:
        basis: the Fock basis of the state
        amplitudes: D complex amplitudes in canonical basis order
        normalize: if ``True``, rescale the amplitudes to unit norm
            instead of requiring it
    Raises:
        StateError: if the amplitudes have the wrong length, are all
            zero, or (without *normalize*) are not normalized
    """

    __slots__ = 'basis', 'amplitudes'

    def __init__(
        self,
        basis: FockBasis,
        amplitudes: Amplitudes,
        normalize: bool = False,
    ):
        amps = np.array(amplitudes, dtype=complex).ravel()
        if amps.shape != (len(basis),):
            raise StateError(
                f'expected {len(basis)} amplitudes, got {amps.size}'
            )
        if not np.all(np.isfinite(amps)):
            raise StateError('amplitudes must be finite')
        norm = float(np.sum(np.abs(amps) ** 2))
        if norm == 0.0:
            raise StateError('amplitudes are all zero')
        if normalize:
            amps /= math.sqrt(norm)
        elif abs(norm - 1.0) > NORM_TOLERANCE:
            raise StateError(f'state is not normalized (norm² = {norm!r})')
        amps.setflags(write=False)
        self.basis = basis
        self.amplitudes = amps

    @classmethod
    def from_terms(
        cls,
        m: int,
        n: int,
        terms: Mapping[FockConfig, complex],
        normalize: bool = True,
    ) -> 'QuantumState':
        """
        Build a state from a mapping of configurations to amplitudes.

        Example:
            >>> from qretrieve.fock import QuantumState
            >>> s = QuantumState.from_terms(2, 2, {(2, 0): 1, (0, 2): 1})
            >>> s.support
            (0, 2)
        """
        basis = enumerate_basis(m, n)
        amps = np.zeros(len(basis), dtype=complex)
        for config, value in terms.items():
            amps[basis.index_of(config)] += value
        return cls(basis, amps, normalize=normalize)

    def __repr__(self):
        name = self.__class__.__name__
        b = self.basis
        return (
            f'<{name} object (m={b.m}, N={b.n}, '
            f'support={len(self.support)}) at {id(self)}>'
        )

    def __eq__(self, other):
        if not isinstance(other, QuantumState):
            return NotImplemented
        return self.basis == other.basis and np.array_equal(
            self.amplitudes, other.amplitudes
        )

    @property
    def m(self) -> int:
        return self.basis.m

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def probabilities(self) -> np.ndarray:
        """The probabilities |α_k|² in canonical order."""
        return np.abs(self.amplitudes) ** 2

    @property
    def support(self) -> Tuple[int, ...]:
        """Indices of configurations with nonzero amplitude."""
        return tuple(int(i) for i in np.flatnonzero(self.amplitudes))

    def mean_occupation(self) -> np.ndarray:
        """Return the mean photon number of each mode."""
        return self.probabilities @ self.basis.occupations

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON-compatible dictionary for the state."""
        return {
            'm': self.m,
            'N': self.n,
            'amplitudes': [[a.real, a.imag] for a in self.amplitudes],
        }

    @classmethod
    def from_dict(
        cls, d: Mapping[str, Any], normalize: bool = False
    ) -> 'QuantumState':
        """Instantiate a state from a dictionary (see :meth:`to_dict`)."""
        try:
            basis = enumerate_basis(int(d['m']), int(d['N']))
            amps = [complex(re, im) for re, im in d['amplitudes']]
        except (KeyError, TypeError, ValueError) as exc:
            raise StateError(f'invalid state description: {exc}') from exc
        return cls(basis, amps, normalize=normalize)


def mean_occupation(state: QuantumState) -> np.ndarray:
    """
    Return the mean photon number ⟨n_x⟩ of each mode of *state*.

    The entries are nonnegative and sum to the photon number.
    """
    return state.mean_occupation()


def basis_state(
    m: int, config: FockConfig, phase: Optional[float] = None
) -> QuantumState:
    """Return the single-configuration state |*config*⟩."""
    n = sum(config)
    amp: complex = 1.0 if phase is None else complex(np.exp(1j * phase))
    return QuantumState.from_terms(m, n, {tuple(config): amp})


def random_state(
    m: int,
    n: int,
    rng: Optional[np.random.Generator] = None,
    support: Optional[List[int]] = None,
) -> QuantumState:
    """
    Return a random normalized state with Gaussian amplitudes.

    If *support* is given, only those basis indices are populated.
    """
    rng = np.random.default_rng(rng)
    basis = enumerate_basis(m, n)
    amps = np.zeros(len(basis), dtype=complex)
    idx = np.arange(len(basis)) if support is None else np.asarray(support)
    amps[idx] = rng.normal(size=idx.size) + 1j * rng.normal(size=idx.size)
    return QuantumState(basis, amps, normalize=True)
