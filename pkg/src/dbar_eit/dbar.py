"""D-bar inversion of the scattering transform.

For each spatial point ``x`` the CGO normalisation ``m(x, .)`` solves the
real-linear equation

    m(k) = 1 + C[ T_x conj(m) ](k),   T_x(k) = t_R(k) / (4 pi conj k) * e_{-k}(x),

where ``C`` is the solid Cauchy transform ``(1/pi) int f(k') / (k - k') dk'``
and ``e_{-k}(x) = exp(-2i Re(kx))``.  The conductivity is ``sigma(x) = m(x, 0)^2``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .bie import ConvergenceError, ScatteringTransform
from .convolution import Convolver, SquareGrid, cauchy_kernel


def dbar_grid(R: float, points_per_unit: float = 16.0, K_factor: float = 1.05, n: int | None = None) -> SquareGrid:
    """Uniform k-grid on ``[-K, K]^2`` with ``K = K_factor R``.

    Without an explicit ``n`` the side count is the smallest power of two
    giving at least ``points_per_unit`` points per unit length.
    """
    if R <= 0:
        raise ValueError("cutoff R must be positive")
    K = K_factor * R
    if n is None:
        n = 2 ** max(3, math.ceil(math.log2(points_per_unit * 2 * K)))
    grid = SquareGrid(int(n), K)
    if 1.0 / grid.h < points_per_unit - 1e-9:
        raise ValueError(f"k-grid with {n} points per side resolves only {1 / grid.h:.1f} points per unit")
    return grid


@dataclass(frozen=True, eq=False)
class DbarSolution:
    x: complex
    m: np.ndarray
    m0: complex
    iterations: int
    residual: float


class DbarSolver:
    """Reusable D-bar solver for one truncated transform on one k-grid."""

    def __init__(self, tR: ScatteringTransform, grid: SquareGrid | None = None, tol: float = 1e-9, max_iter: int = 200):
        self.R = tR.R
        self.grid = grid if grid is not None else dbar_grid(tR.R)
        if self.grid.L <= self.R:
            raise ValueError("k-grid half-width must exceed the cutoff R")
        k = self.grid.z
        t = tR.interpolant()(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = t / (4.0 * np.pi * np.conj(k))
        self.support = (np.abs(k) <= self.R) & (k != 0)
        self.weight = np.where(self.support, w, 0.0)
        self.k_support = k[self.support]
        self.cauchy = Convolver(self.grid, cauchy_kernel)
        self.tol, self.max_iter = tol, max_iter
        self._origin_kernel = (-1.0 / (np.pi * self.k_support)) * self.grid.h**2

    def _T(self, x: complex) -> np.ndarray:
        return self.weight[self.support] * np.exp(-2j * (self.k_support * x).real)

    def solve(self, x: complex) -> DbarSolution:
        x = complex(x)
        n = self.grid.n
        S = self.support
        T = self._T(x)
        size = T.size
        if not np.any(T):
            return DbarSolution(x, np.ones((n, n), dtype=complex), 1.0 + 0j, 0, 0.0)
        buf = np.zeros((n, n), dtype=complex)

        def apply_C(u):
            buf[S] = T * np.conj(u)
            return self.cauchy(buf)

        def matvec(v):
            u = v[:size] + 1j * v[size:]
            r = u - apply_C(u)[S]
            return np.concatenate([r.real, r.imag])

        op = LinearOperator((2 * size, 2 * size), matvec=matvec, dtype=float)
        b = np.concatenate([np.ones(size), np.zeros(size)])
        count = [0]

        def cb(_):
            count[0] += 1

        sol, info = gmres(op, b, rtol=self.tol, atol=0.0, restart=40, maxiter=self.max_iter, callback=cb, callback_type="pr_norm")
        res = float(np.linalg.norm(matvec(sol) - b) / np.linalg.norm(b))
        if info != 0 and res > 10 * self.tol:
            raise ConvergenceError(f"D-bar solve did not converge at x={x}: residual {res:.2e}")
        u = sol[:size] + 1j * sol[size:]
        m = 1.0 + apply_C(u)
        m0 = 1.0 + complex(np.sum(self._origin_kernel * T * np.conj(u)))
        return DbarSolution(x, m, m0, count[0], res)


def solve_dbar(x: complex, tR: ScatteringTransform, grid: SquareGrid | None = None) -> DbarSolution:
    return DbarSolver(tR, grid).solve(x)


def disc_xgrid(n: int = 32) -> np.ndarray:
    """Cell centres of an ``n x n`` grid on ``[-1, 1]^2`` lying inside the unit disc."""
    a = -1.0 + (np.arange(n) + 0.5) * 2.0 / n
    z = (a[:, None] + 1j * a[None, :]).ravel()
    return z[np.abs(z) < 1.0]


@dataclass(frozen=True, eq=False)
class Reconstruction:
    x: np.ndarray
    sigma: np.ndarray
    R: float
    imag_max: float
    metrics: dict = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return bool(np.all(self.sigma > 0))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x1", "x2", "sigma_rec"])
        for z, s in zip(self.x, self.sigma):
            w.writerow([f"{z.real:.10g}", f"{z.imag:.10g}", f"{s:.12g}"])
        return buf.getvalue()

    def metrics_json(self) -> str:
        return json.dumps({"R": self.R, "imag_max": self.imag_max, "positive": self.positive, **self.metrics}, indent=2)


def relative_l2_error(rec, truth) -> float:
    rec, truth = np.asarray(rec, dtype=float), np.asarray(truth, dtype=float)
    return float(np.linalg.norm(rec - truth) / np.linalg.norm(truth))


def reconstruct_sigma(tR: ScatteringTransform, xgrid, grid: SquareGrid | None = None, truth=None, tol_im: float = 1e-3) -> Reconstruction:
    """``m(x, 0)^2`` at each point of ``xgrid``.

    ``truth`` may be a callable conductivity; its relative L2 error is
    attached to the metrics.  Imaginary parts above ``tol_im`` and
    nonpositive values are recorded, not corrected.
    """
    solver = DbarSolver(tR, grid)
    x = np.asarray(xgrid, dtype=complex).ravel()
    m0 = np.empty(x.size, dtype=complex)
    iters = 0
    for i, xi in enumerate(x):
        sol = solver.solve(xi)
        m0[i] = sol.m0
        iters = max(iters, sol.iterations)
    s = m0**2
    imag_max = float(np.abs(m0.imag).max(initial=0.0))
    sigma = s.real
    metrics = {
        "n_points": int(x.size),
        "k_grid_n": solver.grid.n,
        "k_grid_K": solver.grid.L,
        "max_iterations": iters,
        "imag_exceeds_tol": imag_max > tol_im,
        "nonpositive_points": int(np.sum(sigma <= 0)),
        "min": float(sigma.min(initial=np.inf)),
        "max": float(sigma.max(initial=-np.inf)),
    }
    if truth is not None:
        ref = np.asarray(truth(x), dtype=float)
        metrics["relative_l2_error"] = relative_l2_error(sigma, ref)
    return Reconstruction(x, sigma, tR.R, imag_max, metrics)
