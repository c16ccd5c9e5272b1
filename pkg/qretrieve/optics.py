# -*- coding: utf-8 -*-

"""
Linear optics on Fock states.

The phase object imprints φ_k = θ·n^(k) on each configuration; a
multiport described by the unitary *U* maps creation operators as
a†_x → Σ_y U[x, y] a†_y. Multiphoton amplitudes follow from matrix
permanents of repeated-row, repeated-column submatrices of *U*.
"""

import logging
import math
from collections import defaultdict
from typing import Dict, Iterator, Optional, Sequence, Union

import numpy as np

from qretrieve.exceptions import OpticsError
from qretrieve.fock import FockBasis, QuantumState
from qretrieve.types import Amplitudes, Angles, FockConfig, Matrix

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi

#: Elementwise tolerance for U·U† = I.
UNITARY_TOLERANCE = 1e-12

#: Largest drift of the norm² that a transform may accumulate before
#: its output is renormalized.
OUTPUT_NORM_TOLERANCE = 1e-10


class PhaseVector(object):
    """
    The phases θ of an *m*-mode phase object.

    Phases are stored in the gauge θ₁ = 0: the first value is
    subtracted from every entry and all entries are reduced to
    [0, 2π). Any uniform offset of the input is therefore discarded.

    Example:
        >>> from qretrieve.optics import PhaseVector
        >>> PhaseVector([1.0, 1.5, 1.0]).tolist()
        [0.0, 0.5, 0.0]
    """

    __slots__ = ('thetas',)

    def __init__(self, thetas: Angles):
        values = np.array(thetas, dtype=float).ravel()
        if values.size == 0:
            raise OpticsError('phase vector must not be empty')
        if not np.all(np.isfinite(values)):
            raise OpticsError('phases must be finite')
        self.thetas = _gauge(values)
        self.thetas.setflags(write=False)

    @classmethod
    def zeros(cls, m: int) -> 'PhaseVector':
        return cls(np.zeros(m))

    def __repr__(self):
        values = ', '.join(f'{x:.4f}' for x in self.thetas)
        return f'PhaseVector([{values}])'

    def __eq__(self, other):
        if not isinstance(other, PhaseVector):
            return NotImplemented
        return np.array_equal(self.thetas, other.thetas)

    def __hash__(self):
        return hash(self.thetas.tobytes())

    def __len__(self) -> int:
        return self.thetas.size

    def __iter__(self) -> Iterator[float]:
        return iter(self.thetas.tolist())

    def __getitem__(self, i):
        return self.thetas[i]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.thetas.copy()
        return self.thetas.astype(dtype)

    @property
    def m(self) -> int:
        return self.thetas.size

    def tolist(self):
        return self.thetas.tolist()


def wrap_angles(values: Angles) -> np.ndarray:
    """Reduce *values* to [0, 2π)."""
    wrapped = np.mod(np.asarray(values, dtype=float), TWO_PI)
    # np.mod may round tiny negative values up to exactly 2π
    wrapped[wrapped >= TWO_PI] = 0.0
    return wrapped


def _gauge(values: np.ndarray) -> np.ndarray:
    gauged = wrap_angles(values - values[0])
    gauged[0] = 0.0
    return gauged


def _angles(theta: Union[PhaseVector, Angles]) -> np.ndarray:
    if isinstance(theta, PhaseVector):
        return theta.thetas
    return np.asarray(theta, dtype=float).ravel()


def dft_matrix(m: int) -> Matrix:
    """
    Return the *m*-mode discrete-Fourier multiport matrix.

    Entries are U[x, y] = exp(2πi·xy/m)/√m with 0-based indices.

    Example:
        >>> from qretrieve.optics import dft_matrix
        >>> dft_matrix(1)
        array([[1.+0.j]])
    """
    if m < 1:
        raise OpticsError(f'mode count must be positive: {m}')
    k = np.arange(m)
    # reducing the exponent modulo m keeps the entries exact roots of unity
    exponent = np.outer(k, k) % m
    return np.exp(2j * math.pi * exponent / m) / math.sqrt(m)


def check_unitary(u: Matrix, atol: float = UNITARY_TOLERANCE) -> Matrix:
    """
    Return *u* as a complex array if it is square and unitary.

    Raises:
        OpticsError: if *u* is not square or U·U† deviates from the
            identity by more than *atol* in any element
    """
    mat = np.asarray(u, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise OpticsError(f'expected a square matrix, got shape {mat.shape}')
    deviation = np.abs(mat @ mat.conj().T - np.eye(mat.shape[0])).max()
    if deviation > atol:
        raise OpticsError(f'matrix is not unitary (deviation {deviation:g})')
    return mat


def apply_phase_object(
    state: QuantumState, theta: Union[PhaseVector, Angles]
) -> QuantumState:
    """
    Imprint the phases *theta* on *state*.

    Amplitude k is multiplied by exp(iφ_k) with φ_k = θ·n^(k).

    Raises:
        OpticsError: if *theta* does not have one phase per mode
    """
    angles = _angles(theta)
    if angles.size != state.m:
        raise OpticsError(
            f'expected {state.m} phases, got {angles.size}'
        )
    phis = state.basis.occupations @ angles
    return QuantumState(state.basis, state.amplitudes * np.exp(1j * phis))


def permanent(mat: Matrix) -> complex:
    """
    Return the permanent of the square matrix *mat*.

    Uses Ryser's formula, visiting column subsets in Gray-code order
    so each step adds or removes a single column from the row sums.

    Example:
        >>> from qretrieve.optics import permanent
        >>> permanent([[1, 2], [3, 4]])
        (10+0j)
    """
    a = np.asarray(mat, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise OpticsError(f'expected a square matrix, got shape {a.shape}')
    n = a.shape[0]
    if n == 0:
        raise OpticsError('permanent of an empty matrix is undefined')
    rowsums = np.zeros(n, dtype=complex)
    subset = 0
    sign = -1 if n % 2 else 1  # (-1)^(n - |S|), flipped on every step
    total = 0j
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        subset ^= 1 << j
        if subset >> j & 1:
            rowsums += a[:, j]
        else:
            rowsums -= a[:, j]
        sign = -sign
        total += sign * np.prod(rowsums)
    return complex(total)


def build_submatrix(
    u: Matrix, config_in: FockConfig, config_out: FockConfig
) -> Matrix:
    """
    Return the N×N matrix V for the transition *config_in* → *config_out*.

    Row x of *u* is repeated n_x times for the input occupations, then
    column y is repeated n_y times for the output occupations.
    """
    mat = np.asarray(u, dtype=complex)
    if len(config_in) != mat.shape[0] or len(config_out) != mat.shape[1]:
        raise OpticsError('configuration length does not match the matrix')
    if sum(config_in) != sum(config_out):
        raise OpticsError(
            f'photon numbers differ: {sum(config_in)} != {sum(config_out)}'
        )
    rows = np.repeat(np.arange(mat.shape[0]), config_in)
    cols = np.repeat(np.arange(mat.shape[1]), config_out)
    return mat[np.ix_(rows, cols)]


def transfer_matrix(
    basis: FockBasis,
    u: Matrix,
    inputs: Optional[Sequence[int]] = None,
) -> Matrix:
    """
    Return the multiphoton transfer coefficients of *u* on *basis*.

    Column j holds the output amplitudes of the input configuration
    ``inputs[j]`` (all configurations if *inputs* is ``None``):
    T[t, j] = Per(V) / √(∏n_x^(k)! ∏n_y^(t)!). Because the
    multiphoton representation is unitary, ``T.conj().T`` maps output
    amplitudes back onto the same input configurations under U†.
    """
    mat = np.asarray(u, dtype=complex)
    if mat.shape != (basis.m, basis.m):
        raise OpticsError(
            f'expected a {basis.m}×{basis.m} matrix, got {mat.shape}'
        )
    if inputs is None:
        inputs = range(len(basis))
    inputs = list(inputs)
    out = np.empty((len(basis), len(inputs)), dtype=complex)
    for j, k in enumerate(inputs):
        rows = mat[np.repeat(np.arange(basis.m), basis.configs[k])]
        for t, config_out in enumerate(basis.configs):
            v = rows[:, np.repeat(np.arange(basis.m), config_out)]
            out[t, j] = permanent(v)
        out[:, j] /= np.sqrt(basis.norms[k] * basis.norms)
    logger.debug(
        'Built %d×%d transfer matrix (m=%d, N=%d)',
        out.shape[0], out.shape[1], basis.m, basis.n,
    )
    return out


def multiphoton_transform(state: QuantumState, u: Matrix) -> QuantumState:
    """
    Propagate *state* through the multiport *u*.

    Only configurations with nonzero amplitude contribute.

    Raises:
        OpticsError: if *u* is not an m×m unitary
    """
    mat = check_unitary(u)
    if mat.shape[0] != state.m:
        raise OpticsError(
            f'expected a {state.m}-mode unitary, got {mat.shape[0]} modes'
        )
    support = state.support
    t = transfer_matrix(state.basis, mat, support)
    beta = t @ state.amplitudes[list(support)]
    return _output_state(state.basis, beta)


def inverse_transform(state: QuantumState, u: Matrix) -> QuantumState:
    """Propagate *state* backwards through *u*, i.e., through U†."""
    mat = np.asarray(u, dtype=complex)
    return multiphoton_transform(state, mat.conj().T)


def brute_force_transform(state: QuantumState, u: Matrix) -> QuantumState:
    """
    Propagate *state* through *u* by expanding creation operators.

    Each input configuration is written as a product of creation
    operators, every a†_x is replaced by Σ_y U[x, y] a†_y, and the
    resulting polynomial is collected monomial by monomial. This is an
    independent check of :func:`multiphoton_transform` and is much
    slower.
    """
    mat = check_unitary(u)
    if mat.shape[0] != state.m:
        raise OpticsError(
            f'expected a {state.m}-mode unitary, got {mat.shape[0]} modes'
        )
    basis = state.basis
    m = basis.m
    collected: Dict[FockConfig, complex] = defaultdict(complex)
    for k in state.support:
        poly: Dict[FockConfig, complex] = {
            (0,) * m: state.amplitudes[k] / math.sqrt(basis.norms[k])
        }
        for x, count in enumerate(basis.configs[k]):
            for _ in range(count):
                poly = _multiply_creation(poly, mat[x])
        for monomial, coeff in poly.items():
            collected[monomial] += coeff
    beta = np.zeros(len(basis), dtype=complex)
    for monomial, coeff in collected.items():
        i = basis.index_of(monomial)
        beta[i] = coeff * math.sqrt(basis.norms[i])
    return _output_state(basis, beta)


def _output_state(basis: FockBasis, beta: np.ndarray) -> QuantumState:
    norm = float(np.sum(np.abs(beta) ** 2))
    if abs(norm - 1.0) > OUTPUT_NORM_TOLERANCE:
        raise OpticsError(
            f'transform did not preserve the norm (norm² = {norm!r})'
        )
    return QuantumState(basis, beta, normalize=True)


def _multiply_creation(
    poly: Dict[FockConfig, complex], row: np.ndarray
) -> Dict[FockConfig, complex]:
    """Multiply *poly* by Σ_y row[y] a†_y."""
    product: Dict[FockConfig, complex] = defaultdict(complex)
    for monomial, coeff in poly.items():
        for y, weight in enumerate(row):
            if weight == 0:
                continue
            raised = list(monomial)
            raised[y] += 1
            product[tuple(raised)] += coeff * weight
    return product


def propagate_field(field: Amplitudes, u: Matrix) -> Amplitudes:
    """
    Propagate a classical field through *u*.

    Follows the creation-operator convention, so the far field is
    Uᵀ·E; a single photon transformed by :func:`multiphoton_transform`
    has exactly these amplitudes.
    """
    mat = np.asarray(u, dtype=complex)
    vec = np.asarray(field, dtype=complex)
    if vec.shape != (mat.shape[0],):
        raise OpticsError(
            f'expected a field over {mat.shape[0]} modes, got {vec.shape}'
        )
    return mat.T @ vec


def back_propagate_field(field: Amplitudes, u: Matrix) -> Amplitudes:
    """Invert :func:`propagate_field` for unitary *u*."""
    mat = np.asarray(u, dtype=complex)
    vec = np.asarray(field, dtype=complex)
    if vec.shape != (mat.shape[0],):
        raise OpticsError(
            f'expected a field over {mat.shape[0]} modes, got {vec.shape}'
        )
    return mat.conj() @ vec
