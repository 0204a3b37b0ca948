"""CGO traces and the scattering transform.

Two independent routes to ``t(k)``:

* boundary route: solve ``(I + S_k A) g = exp(ikx)|_circle`` with
  ``A = Lambda_sigma - Lambda_1`` and pair ``A g`` with the conjugate
  exponential;
* direct route (smooth conductivities only): solve the Lippmann-Schwinger
  equation ``m = 1 - g_k * (q m)`` for the Schroedinger potential
  ``q = Laplace(sqrt sigma) / sqrt sigma`` and integrate ``e_k q m``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CloughTocher2DInterpolator
from scipy.spatial import QhullError
from scipy.sparse.linalg import LinearOperator, gmres

from .boundary import SQRT_2PI, BoundaryField, DNMatrix, pairing, sobolev_weights
from .convolution import Convolver, SquareGrid, log_cell_average
from .faddeev import EULER_GAMMA, SingleLayer, faddeev_g, single_layer
from .phantoms import Conductivity, UnsupportedPhantomError

NEAR_SINGULAR = 1e8


class TruncationWarning(UserWarning):
    pass


class ConvergenceError(RuntimeError):
    pass


def _exp_coeffs(k: complex, N: int) -> np.ndarray:
    c = np.empty(N + 1, dtype=complex)
    c[0] = SQRT_2PI
    for j in range(1, N + 1):
        c[j] = c[j - 1] * 1j * k / j
    if N > 0 and abs(c[N]) / SQRT_2PI > 1e-12:
        warnings.warn(
            f"exp trace at |k|={abs(k):.3g} truncated at N={N}: last term {abs(c[N]) / SQRT_2PI:.2e}",
            TruncationWarning,
            stacklevel=3,
        )
    return c


def exp_trace(k: complex, N: int) -> BoundaryField:
    """Fourier coefficients of ``exp(ikx)`` on the unit circle (``x`` complex)."""
    out = np.zeros(2 * N + 1, dtype=complex)
    out[N:] = _exp_coeffs(complex(k), N)
    return BoundaryField(out)


def conj_exp_trace(k: complex, N: int) -> BoundaryField:
    """Coefficients of ``exp(i conj(k) conj(x))``; only orders ``n <= 0`` are nonzero."""
    out = np.zeros(2 * N + 1, dtype=complex)
    out[: N + 1] = _exp_coeffs(np.conj(complex(k)), N)[::-1]
    return BoundaryField(out)


@dataclass(frozen=True)
class CgoTrace:
    """Boundary trace ``g`` of the CGO solution at ``k`` with solver diagnostics."""

    k: complex
    g: BoundaryField
    condition: float
    residual: float
    near_singular: bool = False


def solve_bie(k: complex, A: DNMatrix, Sk: SingleLayer | None = None, M: int = 128) -> CgoTrace:
    """Solve ``(I + S_k A) g = exp(ikx)`` in ``H^{1/2}``-weighted coefficients.

    The system is conjugated by ``W = diag((1+|n|)^{1/2})`` before the dense
    solve, so the reported 2-norm condition number is that of ``I + S_k A``
    on ``H^{1/2}``.  The residual is measured in ``H^{1/2}`` too.
    """
    if A.tag != "difference":
        raise ValueError("solve_bie expects a DN difference (tag 'difference')")
    N = A.N
    if Sk is None:
        Sk = single_layer(k, N, M)
    elif Sk.N != N or Sk.k != complex(k):
        raise ValueError("single layer was built for a different k or order")
    T = np.eye(2 * N + 1) + Sk.matrix @ A.entries
    w = sobolev_weights(N, 0.5)
    B = w[:, None] * T / w[None, :]
    rhs = exp_trace(k, N).coeffs
    y = np.linalg.solve(B, w * rhs)
    g = y / w
    cond = float(np.linalg.cond(B))
    res = float(np.linalg.norm(w * (T @ g - rhs)))
    flag = cond > NEAR_SINGULAR
    if flag:
        warnings.warn(f"I + T_k near-singular at k={k}: condition {cond:.2e}", RuntimeWarning, stacklevel=2)
    return CgoTrace(complex(k), BoundaryField(g), cond, res, flag)


def scattering_transform_boundary(k: complex, A: DNMatrix, g: CgoTrace) -> complex:
    """``int exp(i conj(k) conj(x)) (A g)(x) ds``."""
    if complex(k) != g.k:
        raise ValueError("CGO trace was solved at a different k")
    return pairing(conj_exp_trace(k, A.N), A.apply(g.g))


# ----------------------------------------------------------------------------
# Lippmann-Schwinger route


@dataclass(frozen=True, eq=False)
class CgoField:
    """``m(x, k)`` on a square grid together with the potential it was solved for."""

    k: complex
    grid: SquareGrid
    q: np.ndarray
    m: np.ndarray
    iterations: int
    residual: float

    def boundary_trace(self, N: int, Q: int = 128) -> BoundaryField:
        """Trace of ``psi = exp(ikx) m`` on the unit circle (requires ``supp q`` inside the disc)."""
        t = 2.0 * np.pi * np.arange(Q) / Q
        x = np.exp(1j * t)
        supp = self.q != 0
        y = self.grid.z[supp]
        qm = (self.q * self.m)[supp] * self.grid.h**2
        vals = np.empty(Q, dtype=complex)
        for i in range(Q):
            vals[i] = 1.0 - faddeev_g(self.k, x[i] - y) @ qm
        return BoundaryField.from_samples(np.exp(1j * self.k * x) * vals, N)


def potential_grid(sigma: Conductivity, n: int = 256, L: float = 1.0):
    """Sample the Schroedinger potential of an analytic smooth phantom on a grid."""
    if not hasattr(sigma, "potential"):
        raise UnsupportedPhantomError(
            f"{type(sigma).__name__} has no closed-form potential; the direct route needs a smooth analytic phantom"
        )
    grid = SquareGrid(n, L)
    return grid, np.asarray(sigma.potential(grid.z), dtype=float)


def _faddeev_convolver(k: complex, grid: SquareGrid) -> Convolver:
    center = log_cell_average(grid.h)
    if k != 0:
        center += (-EULER_GAMMA - math.log(abs(k))) / (2.0 * math.pi)
    return Convolver(grid, lambda d: faddeev_g(k, d), center)


def solve_lippmann_schwinger(k: complex, q: np.ndarray, grid: SquareGrid, tol: float = 1e-10, max_iter: int = 200) -> CgoField:
    """Solve ``m + g_k * (q m) = 1`` on the grid by GMRES with FFT matvecs."""
    k = complex(k)
    q = np.asarray(q, dtype=float)
    n = grid.n
    if not np.any(q):
        return CgoField(k, grid, q, np.ones((n, n), dtype=complex), 0, 0.0)
    conv = _faddeev_convolver(k, grid)

    def matvec(v):
        m = v.reshape(n, n)
        return (m + conv(q * m)).ravel()

    op = LinearOperator((n * n, n * n), matvec=matvec, dtype=complex)
    b = np.ones(n * n, dtype=complex)
    count = [0]

    def cb(_):
        count[0] += 1

    sol, info = gmres(op, b, rtol=tol, atol=0.0, restart=60, maxiter=max_iter, callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(matvec(sol) - b) / np.linalg.norm(b))
    if info != 0 and res > 10 * tol:
        raise ConvergenceError(f"Lippmann-Schwinger solve did not converge at k={k}: residual {res:.2e}")
    return CgoField(k, grid, q, sol.reshape(n, n), count[0], res)


def scattering_transform_direct(k: complex, field: CgoField) -> complex:
    """``int e_k(x) q(x) m(x, k) dx`` with ``e_k = exp(2i Re(kx))``."""
    k = complex(k)
    if k != field.k:
        raise ValueError("CGO field was solved at a different k")
    ek = np.exp(2j * (k * field.grid.z).real)
    return complex(np.sum(ek * field.q * field.m) * field.grid.h**2)


# ----------------------------------------------------------------------------
# sampled transforms


def polar_kgrid(R: float, n_radii: int = 8, n_angles: int = 8) -> np.ndarray:
    """Samples ``R j / n_radii * exp(2 pi i l / n_angles)``, ``j = 1..n_radii``."""
    r = R * np.arange(1, n_radii + 1) / n_radii
    a = np.exp(2j * np.pi * np.arange(n_angles) / n_angles)
    return (r[:, None] * a[None, :]).ravel()


def parse_grid_spec(spec: str) -> tuple[int, int]:
    """``"8x8"`` -> ``(8, 8)``."""
    a, b = spec.lower().split("x")
    return int(a), int(b)


@dataclass(frozen=True, eq=False)
class ScatteringTransform:
    """Samples of ``t`` (or of a related transform) at points of the k-plane."""

    kgrid: np.ndarray
    values: np.ndarray
    R: float
    provenance: str = "boundary"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in ("boundary", "direct", "beltrami"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        k = np.asarray(self.kgrid, dtype=complex).ravel()
        v = np.asarray(self.values, dtype=complex).ravel()
        if k.shape != v.shape:
            raise ValueError("kgrid and values differ in length")
        inside = np.abs(k) <= self.R
        if not np.all(np.isfinite(v[inside])):
            raise ValueError("non-finite transform values inside the cutoff")
        object.__setattr__(self, "kgrid", k)
        object.__setattr__(self, "values", v)

    def cutoff(self, R: float | None = None) -> "ScatteringTransform":
        R = self.R if R is None else R
        v = np.where(np.abs(self.kgrid) <= R, self.values, 0.0)
        return ScatteringTransform(self.kgrid, v, R, self.provenance, dict(self.meta))

    def interpolant(self):
        """Piecewise-cubic interpolant of ``t`` on ``|k| <= R``; zero beyond ``R``.

        ``t(0) = 0`` is added as a sample when the origin is missing.
        """
        k, v = self.kgrid, self.values
        if not np.any(k == 0):
            k = np.append(k, 0.0)
            v = np.append(v, 0.0)
        pts = np.column_stack([k.real, k.imag])
        try:
            ip = CloughTocher2DInterpolator(pts, v, fill_value=0.0)
        except QhullError:
            warnings.warn("k samples do not span the plane; interpolating in |k| only", RuntimeWarning, stacklevel=2)
            ip = _radial_interpolant(k, v)
        R = self.R

        def t(kq):
            kq = np.asarray(kq, dtype=complex)
            out = ip(kq.real, kq.imag)
            return np.where(np.abs(kq) <= R, out, 0.0)

        return t

    def symmetry_defect(self) -> float:
        """``max |t(k) - conj(t(-conj k))|`` over sample pairs present in the grid."""
        lookup = {(round(z.real, 9), round(z.imag, 9)): v for z, v in zip(self.kgrid, self.values)}
        worst = 0.0
        for z, v in zip(self.kgrid, self.values):
            w = -np.conj(z)
            key = (round(w.real, 9), round(w.imag, 9))
            if key in lookup:
                worst = max(worst, abs(v - np.conj(lookup[key])))
        return worst

    # serialization ------------------------------------------------------
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re_k", "im_k", "re_t", "im_t"])
        for z, v in zip(self.kgrid, self.values):
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, R: float | None = None, provenance: str = "boundary") -> "ScatteringTransform":
        rows = list(csv.reader(io.StringIO(text)))
        if rows and rows[0] and not _is_number(rows[0][0]):
            rows = rows[1:]
        data = np.array([[float(x) for x in r] for r in rows if r], dtype=float).reshape(-1, 4)
        k = data[:, 0] + 1j * data[:, 1]
        v = data[:, 2] + 1j * data[:, 3]
        if R is None:
            R = float(np.abs(k).max()) if k.size else 0.0
        return cls(k, v, R, provenance)

    def to_json(self) -> str:
        return json.dumps(
            {
                "R": self.R,
                "provenance": self.provenance,
                "k": [[float(z.real), float(z.imag)] for z in self.kgrid],
                "t": [[float(z.real), float(z.imag)] for z in self.values],
                "meta": self.meta,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ScatteringTransform":
        d = json.loads(text)
        k = np.asarray(d["k"], dtype=float).reshape(-1, 2)
        t = np.asarray(d["t"], dtype=float).reshape(-1, 2)
        return cls(k[:, 0] + 1j * k[:, 1], t[:, 0] + 1j * t[:, 1], d["R"], d.get("provenance", "boundary"), d.get("meta", {}))


def _radial_interpolant(k, v):
    r = np.round(np.abs(k), 12)
    radii = np.unique(r)
    means = np.array([v[r == q].mean() for q in radii])

    def ip(x, y):
        rr = np.hypot(x, y)
        out = np.interp(rr, radii, means.real) + 1j * np.interp(rr, radii, means.imag)
        return np.where(rr <= radii[-1], out, 0.0)

    return ip


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def transform_boundary(sigma: Conductivity, kgrid, R: float, N: int = 32, mesh=None, M: int = 128) -> ScatteringTransform:
    """``t`` at each sample of ``kgrid`` via FEM data and the boundary integral equation."""
    from .fem import dn_difference, mesh_for

    kgrid = np.asarray(kgrid, dtype=complex).ravel()
    if mesh is None:
        mesh = mesh_for(sigma, max(256, 8 * N))
    A = dn_difference(sigma, N, mesh)
    vals = np.empty(kgrid.size, dtype=complex)
    conds = np.empty(kgrid.size)
    for i, k in enumerate(kgrid):
        if k == 0:
            vals[i], conds[i] = 0.0, 1.0
            continue
        trace = solve_bie(k, A, single_layer(k, N, M))
        vals[i] = scattering_transform_boundary(k, A, trace)
        conds[i] = trace.condition
    meta = {"N": N, "n_boundary": mesh.n_boundary, "max_condition": float(conds.max(initial=1.0))}
    return ScatteringTransform(kgrid, vals, R, "boundary", meta)


def transform_direct(sigma: Conductivity, kgrid, R: float, n: int = 256) -> ScatteringTransform:
    """``t`` at each sample of ``kgrid`` via the Lippmann-Schwinger equation."""
    grid, q = potential_grid(sigma, n)
    kgrid = np.asarray(kgrid, dtype=complex).ravel()
    vals = np.array([scattering_transform_direct(k, solve_lippmann_schwinger(k, q, grid)) for k in kgrid])
    return ScatteringTransform(kgrid, vals, R, "direct", {"n": n})
