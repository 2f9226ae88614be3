# License: MIT
# Copyright © 2024 Frequenz Energy-as-a-Service GmbH

"""Generic type aliases."""

from collections.abc import Callable
from typing import TypeAlias

import numpy as np
import numpy.typing as npt

FloatArray: TypeAlias = npt.NDArray[np.float64]
"""A dense array of double precision floats."""

IntArray: TypeAlias = npt.NDArray[np.int64]
"""A dense array of 64-bit integers."""

ScalarFunction: TypeAlias = Callable[[FloatArray], float]
"""A real valued function of a point."""

GradientFunction: TypeAlias = Callable[[FloatArray], FloatArray]
"""A function returning the gradient at a point."""

CellKey: TypeAlias = tuple[int, int]
"""A panel cell, as a `(hour, day class)` pair."""
