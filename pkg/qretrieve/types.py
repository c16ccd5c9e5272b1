"""
Basic types used by various QRetrieve modules.
"""

from typing import Sequence, Tuple, Union

import numpy as np

FockConfig = Tuple[int, ...]  # photons per mode
Amplitudes = np.ndarray  # complex vector over a basis
Matrix = np.ndarray  # dense complex matrix, row-major
Angles = Union[Sequence[float], np.ndarray]  # radians, one per mode
