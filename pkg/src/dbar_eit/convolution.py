"""Aperiodic discrete convolution on uniform square grids.

Used for the Lippmann-Schwinger operator (Faddeev kernel), the solid
Cauchy transform in the D-bar solver and the Cauchy/Beurling transforms of
the Beltrami solver.  Grids have ``n`` points per side at
``c_j = -L + j h`` with ``h = 2L / n``, so the origin is the node
``j = n/2`` when ``n`` is even.  Convolutions are exact discrete sums
``sum_y K(x - y) f(y) h^2`` evaluated by FFT on a ``2n x 2n`` zero-padded
grid (no periodisation error).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft

# mean of log|x| over the square [-1, 1]^2
LOG_MEAN_UNIT_SQUARE = 0.5 * np.log(2.0) - 1.5 + 0.25 * np.pi


@dataclass(frozen=True, eq=False)
class SquareGrid:
    n: int
    L: float

    def __post_init__(self):
        if self.n % 2:
            raise ValueError("grid size must be even so that the origin is a node")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.n)

    @cached_property
    def z(self) -> np.ndarray:
        """Complex node coordinates, ``z[i, j] = axis[i] + 1j * axis[j]``."""
        a = self.axis
        return a[:, None] + 1j * a[None, :]

    @property
    def origin(self) -> tuple[int, int]:
        return self.n // 2, self.n // 2

    @cached_property
    def offsets(self) -> np.ndarray:
        """Offsets ``x - y`` laid out for a ``2n`` circular FFT."""
        j = np.arange(2 * self.n)
        j = np.where(j < self.n, j, j - 2 * self.n) * self.h
        return j[:, None] + 1j * j[None, :]


class Convolver:
    """Precomputed FFT of a kernel sampled at grid offsets.

    ``kernel`` is a callable of complex offsets (never called at 0);
    ``center`` is the value used at offset 0 (e.g. a cell average of a
    singular kernel, or 0 for odd kernels).
    """

    def __init__(self, grid: SquareGrid, kernel, center: complex = 0.0):
        self.grid = grid
        d = grid.offsets.copy()
        d[0, 0] = 1.0
        K = np.asarray(kernel(d), dtype=complex)
        K[0, 0] = center
        self._Khat = fft.fft2(K * grid.h**2)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        n = self.grid.n
        pad = np.zeros((2 * n, 2 * n), dtype=complex)
        pad[:n, :n] = f
        out = fft.ifft2(fft.fft2(pad, workers=-1) * self._Khat, workers=-1)
        return out[:n, :n]


def cauchy_kernel(z):
    return 1.0 / (np.pi * z)


def beurling_kernel(z):
    return -1.0 / (np.pi * z**2)


def log_cell_average(h: float) -> float:
    """Mean of ``-log|x| / (2 pi)`` over the square cell of side ``h`` centred at 0."""
    return -(np.log(h / 2.0) + LOG_MEAN_UNIT_SQUARE) / (2.0 * np.pi)
