"""Complex geometric optics solutions of the Beltrami equation.

For real ``mu`` with ``|mu| <= kappa < 1`` we seek ``f = exp(ikz) M`` with
``M - 1`` decaying and

    d-bar f = mu * conj(d f).

(The real part of such ``f`` solves ``div(sigma grad u) = 0`` with
``sigma = (1 - mu) / (1 + mu)``.)  Writing ``M = 1 + C omega`` with ``C`` the
solid Cauchy transform and ``S`` the Beurling transform, ``omega = d-bar M``
solves the real-linear equation

    omega = mu e_{-k} conj(S omega + i k (1 + C omega)),

``e_{-k}(z) = exp(-2i Re(kz))``.  ``omega`` vanishes off ``supp mu``, so only
those nodes are unknowns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import LinearOperator, gmres

from .bie import ConvergenceError, ScatteringTransform
from .convolution import Convolver, SquareGrid, beurling_kernel, cauchy_kernel
from .phantoms import Conductivity


@dataclass(frozen=True, eq=False)
class BeltramiCoefficient:
    """Real Beltrami coefficient sampled on a square grid."""

    grid: SquareGrid
    mu: np.ndarray
    r1: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.grid.n, self.grid.n):
            raise ValueError("mu must be sampled on the grid")
        if np.abs(mu).max(initial=0.0) >= 1.0:
            raise ValueError(f"Beltrami coefficient must satisfy |mu| < 1, got {np.abs(mu).max():.4f}")
        outside = np.abs(self.grid.z) > self.r1
        if np.any(mu[outside] != 0):
            raise ValueError("mu must vanish outside |x| <= r1")
        object.__setattr__(self, "mu", mu)

    @property
    def kappa(self) -> float:
        return float(np.abs(self.mu).max(initial=0.0))

    @classmethod
    def from_conductivity(cls, sigma: Conductivity, n: int = 256, L: float = 1.1) -> "BeltramiCoefficient":
        grid = SquareGrid(n, L)
        s = np.asarray(sigma(grid.z), dtype=float)
        mu = (1.0 - s) / (1.0 + s)
        mu[np.abs(mu) < 1e-15] = 0.0
        return cls(grid, mu, float(getattr(sigma, "r1", 1.0)))

    def __neg__(self) -> "BeltramiCoefficient":
        return BeltramiCoefficient(self.grid, -self.mu, self.r1)

    def conductivity(self) -> np.ndarray:
        return (1.0 - self.mu) / (1.0 + self.mu)


class _Transforms:
    """Cauchy and Beurling convolvers, cached per grid."""

    _cache: dict = {}

    @classmethod
    def get(cls, grid: SquareGrid):
        key = (grid.n, grid.L)
        if key not in cls._cache:
            cls._cache.clear()
            cls._cache[key] = (Convolver(grid, cauchy_kernel), Convolver(grid, beurling_kernel))
        return cls._cache[key]


@dataclass(frozen=True, eq=False)
class BeltramiCgo:
    """Normalised CGO ``M`` for one coefficient and one ``k``.

    ``omega = d-bar M`` and ``dM = d M`` are kept on the grid, so
    ``d-bar f = exp(ikz) omega`` and ``d f = exp(ikz) (ik M + dM)``.
    """

    k: complex
    coefficient: BeltramiCoefficient
    M: np.ndarray
    omega: np.ndarray
    dM: np.ndarray
    iterations: int
    residual: float

    @property
    def f(self) -> np.ndarray:
        return np.exp(1j * self.k * self.coefficient.grid.z) * self.M

    def distortion_defect(self) -> float:
        """``max(|d-bar f| - kappa |d f|, 0)`` relative to ``max |d f|``."""
        df = np.abs(1j * self.k * self.M + self.dM)
        excess = np.abs(self.omega) - self.coefficient.kappa * df
        return float(max(excess.max(), 0.0) / max(df.max(), 1e-300))


def solve_beltrami_cgo(mu: BeltramiCoefficient, k: complex, sign: int = 1, tol: float = 1e-10, max_iter: int = 300) -> BeltramiCgo:
    """Solve for ``M_{sign * mu}(., k)`` by GMRES on the doubled real system."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    coef = mu if sign == 1 else -mu
    grid = coef.grid
    n = grid.n
    k = complex(k)
    supp = coef.mu != 0
    if k == 0 or not np.any(supp):
        zero = np.zeros((n, n), dtype=complex)
        return BeltramiCgo(k, coef, np.ones((n, n), dtype=complex), zero, zero.copy(), 0, 0.0)
    C, S = _Transforms.get(grid)
    a = coef.mu[supp] * np.exp(-2j * (k * grid.z[supp]).real)
    size = a.size
    buf = np.zeros((n, n), dtype=complex)
    cb_ = np.conj(1j * k)

    def images(w):
        buf[supp] = w
        return C(buf), S(buf)

    def op(w):
        Cw, Sw = images(w)
        return w - a * (np.conj(Sw[supp]) + cb_ * np.conj(Cw[supp]))

    def matvec(v):
        r = op(v[:size] + 1j * v[size:])
        return np.concatenate([r.real, r.imag])

    rhs = a * cb_
    b = np.concatenate([rhs.real, rhs.imag])
    count = [0]

    def cb(_):
        count[0] += 1

    A = LinearOperator((2 * size, 2 * size), matvec=matvec, dtype=float)
    sol, info = gmres(A, b, rtol=tol, atol=0.0, restart=60, maxiter=max_iter, callback=cb, callback_type="pr_norm")
    res = float(np.linalg.norm(matvec(sol) - b) / np.linalg.norm(b))
    if info != 0 and res > 10 * tol:
        raise ConvergenceError(f"Beltrami solve did not converge at k={k}: residual {res:.2e}")
    w = sol[:size] + 1j * sol[size:]
    Cw, Sw = images(w)
    omega = np.zeros((n, n), dtype=complex)
    omega[supp] = w
    return BeltramiCgo(k, coef, 1.0 + Cw, omega, Sw, count[0], res)


def ap_transform(mu: BeltramiCoefficient, k: complex, solutions: tuple | None = None) -> complex:
    """``tau(k)`` from ``conj(tau) = (1/2pi) int d-bar(M_mu - M_{-mu}) dx``."""
    k = complex(k)
    if solutions is None:
        solutions = (solve_beltrami_cgo(mu, k, 1), solve_beltrami_cgo(mu, k, -1))
    plus, minus = solutions
    h2 = mu.grid.h**2
    return complex(np.conj(np.sum(plus.omega - minus.omega) * h2 / (2.0 * np.pi)))


def t_from_tau(k: complex, tau: complex) -> complex:
    """Scattering transform of a smooth conductivity from ``tau``: ``-4 pi i conj(k) tau``."""
    return -4j * np.pi * np.conj(complex(k)) * tau


def dbar_support_radius(plus: BeltramiCgo, minus: BeltramiCgo, rel: float = 1e-12) -> float:
    """Largest ``|x|`` at which ``d-bar(M_mu - M_{-mu})`` is non-negligible."""
    d = np.abs(plus.omega - minus.omega)
    big = d > rel * max(d.max(), 1e-300)
    return float(np.abs(plus.coefficient.grid.z[big]).max(initial=0.0))


def tau_transform(sigma: Conductivity, kgrid, R: float, n: int = 256, L: float = 1.1) -> ScatteringTransform:
    """``tau`` samples over ``kgrid`` (stored with provenance ``beltrami``)."""
    mu = BeltramiCoefficient.from_conductivity(sigma, n, L)
    kgrid = np.asarray(kgrid, dtype=complex).ravel()
    vals = np.array([ap_transform(mu, k) for k in kgrid])
    return ScatteringTransform(kgrid, vals, R, "beltrami", {"quantity": "tau", "n": n, "L": L})


# ----------------------------------------------------------------------------
# weak convergence diagnostics


@dataclass(frozen=True)
class BumpFunction:
    """``exp(1 - 1/(1 - s))`` with ``s = |x - c|^2 / rho^2``, zero for ``s >= 1``."""

    center: complex
    radius: float

    def __call__(self, z) -> np.ndarray:
        s = np.abs(np.asarray(z) - self.center) ** 2 / self.radius**2
        out = np.zeros(s.shape)
        inside = s < 1
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
        return out

    def dbar(self, z) -> np.ndarray:
        """``(1/2)(d_1 + i d_2) phi`` in closed form."""
        z = np.asarray(z, dtype=complex)
        d = z - self.center
        s = np.abs(d) ** 2 / self.radius**2
        out = np.zeros(s.shape, dtype=complex)
        inside = s < 1
        si = s[inside]
        # d-bar s = d / rho^2
        out[inside] = -np.exp(1.0 - 1.0 / (1.0 - si)) / (1.0 - si) ** 2 * d[inside] / self.radius**2
        return out


def weak_convergence_probe(mus, k: complex, tests) -> dict:
    """Pairings ``(phi, M - 1)`` and ``(d-bar phi, M - 1)`` plus ``tau`` for each coefficient."""
    pair = []
    dpair = []
    taus = []
    for mu in mus:
        plus = solve_beltrami_cgo(mu, k, 1)
        minus = solve_beltrami_cgo(mu, k, -1)
        z = mu.grid.z
        h2 = mu.grid.h**2
        w = plus.M - 1.0
        pair.append([complex(np.sum(phi(z) * w) * h2) for phi in tests])
        dpair.append([complex(np.sum(phi.dbar(z) * w) * h2) for phi in tests])
        taus.append(ap_transform(mu, k, (plus, minus)))
    return {"pairings": np.array(pair), "dbar_pairings": np.array(dpair), "tau": np.array(taus)}


def sigma_harmonic_defect(cgo: BeltramiCgo, sigma: Conductivity, mesh=None) -> dict:
    """Compare ``u = Re f`` with the FEM solution having the same boundary values.

    Returns the relative energy-norm difference on the disc and, as a
    baseline, the same quantity for ``Re exp(ikz)`` (harmonic, but not
    ``sigma``-harmonic).
    """
    from .fem import DirichletSolver, mesh_for

    if mesh is None:
        mesh = mesh_for(sigma, 256)
    grid = cgo.coefficient.grid
    if grid.axis[0] > -1.0 or grid.axis[-1] < 1.0:
        raise ValueError("Beltrami grid must cover the closed unit disc")
    solver = DirichletSolver(sigma, mesh)
    pts = np.column_stack([mesh.nodes[:, 0], mesh.nodes[:, 1]])

    def compare(field):
        ip = RegularGridInterpolator((grid.axis, grid.axis), field, method="cubic")
        u = ip(pts)
        ufem = solver.solve_nodal(u[mesh.boundary])
        return mesh.gradient_l2_norm(u - ufem) / mesh.gradient_l2_norm(ufem)

    return {
        "defect": float(compare(cgo.f.real)),
        "baseline": float(compare(np.exp(1j * cgo.k * grid.z).real)),
    }
