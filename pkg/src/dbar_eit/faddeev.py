"""Faddeev's Green's function and the single-layer operator on the unit circle.

For complex ``k`` the Faddeev kernel is ``G_k(x) = exp(i k x) g_k(x)`` where
``g_k`` is the inverse Fourier transform of ``1 / (|xi|^2 + 2 k (xi_1 + i xi_2))``.
The substitution ``xi -> conj(k) eta`` gives ``g_k(x) = g_1(k x)``, and a
partial-fraction/residue evaluation of the ``xi_2`` integral gives

    g_1(z) = exp(-i z) Re E1(-i z) / (2 pi),

so that ``G_k(x) = Re E1(-i k x) / (2 pi)`` is real.  ``E1`` is the
exponential integral; ``Re E1`` is continuous across its branch cut.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import exp1

from .boundary import SQRT_2PI, BoundaryField, orders

EULER_GAMMA = 0.57721566490153286061
TABLE_VERSION = 1


def _ein(w: np.ndarray) -> np.ndarray:
    """Entire function ``Ein(w) = E1(w) + gamma + log(w)``."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) < 2.0
    ws = w[small]
    term = ws.copy()
    acc = ws.copy()
    for n in range(2, 40):
        term = -term * ws / n
        acc = acc + term / n
    out[small] = acc
    wl = w[~small]
    out[~small] = exp1(wl) + EULER_GAMMA + np.log(wl)
    return out


def faddeev_g1(z) -> np.ndarray:
    """``g_1(z)`` at complex points ``z != 0``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("g_1 has a logarithmic singularity at 0")
    w = -1j * z
    return np.exp(w) * exp1(w).real / (2.0 * np.pi)


def faddeev_g(k: complex, x) -> np.ndarray:
    """Exponentially normalised Faddeev kernel ``g_k(x)``; ``k = 0`` gives ``G_0``."""
    x = np.asarray(x, dtype=complex)
    if np.any(x == 0):
        raise ValueError("g_k has a logarithmic singularity at x = 0")
    if k == 0:
        return log_kernel(x)
    return faddeev_g1(k * x)


def faddeev_G(k: complex, x) -> np.ndarray:
    """Faddeev Green's function ``G_k(x) = Re E1(-i k x) / (2 pi)``."""
    x = np.asarray(x, dtype=complex)
    if np.any(x == 0):
        raise ValueError("G_k has a logarithmic singularity at x = 0")
    if k == 0:
        return log_kernel(x)
    return exp1(-1j * k * x).real / (2.0 * np.pi)


def faddeev_G_via_g(k: complex, x) -> np.ndarray:
    """``exp(i k x) g_k(x)``; an independent evaluation path for ``G_k``."""
    x = np.asarray(x, dtype=complex)
    return np.exp(1j * k * x) * faddeev_g(k, x)


def faddeev_G_smooth(k: complex, x) -> np.ndarray:
    """``G_k(x) - G_0(x)``, smooth (real-analytic) across ``x = 0``."""
    x = np.asarray(x, dtype=complex)
    if k == 0:
        return np.zeros(x.shape)
    return (_ein(-1j * k * x).real - EULER_GAMMA - np.log(abs(k))) / (2.0 * np.pi)


def faddeev_G_derivative(k: complex, x) -> np.ndarray:
    """Complex derivative ``H'(x)`` of the holomorphic ``H`` with ``G_k = Re H``.

    The gradient of ``G_k`` is ``(Re H', -Im H')``, and the derivative in a
    unit direction ``nu`` (complex) is ``Re(nu H')``.
    """
    x = np.asarray(x, dtype=complex)
    return -np.exp(1j * k * x) / (2.0 * np.pi * x)


def log_kernel(x) -> np.ndarray:
    """Newtonian kernel ``G_0(x) = -log|x| / (2 pi)``."""
    return -np.log(np.abs(x)) / (2.0 * np.pi)


# ----------------------------------------------------------------------------
# tabulated g_1


@dataclass(frozen=True, eq=False)
class FaddeevTable:
    """Tabulated smooth part ``h_1 = g_1 - G_0`` on a polar grid.

    Radii are log-spaced over ``[r_min, r_max]``; the table is interpolated
    by cubic splines in ``(log r, theta)``.
    """

    r_min: float
    r_max: float
    log_r: np.ndarray
    theta: np.ndarray
    values: np.ndarray

    @classmethod
    def build(cls, r_min: float = 1e-4, r_max: float = 8.0, nr: int = 800, ntheta: int = 512) -> "FaddeevTable":
        log_r = np.linspace(np.log(r_min), np.log(r_max), nr)
        theta = 2.0 * np.pi * np.arange(ntheta) / ntheta
        z = np.exp(log_r)[:, None] * np.exp(1j * theta)[None, :]
        vals = faddeev_g1(z) - log_kernel(z)
        return cls(r_min, r_max, log_r, theta, vals)

    @property
    def header(self) -> dict:
        return {
            "version": TABLE_VERSION,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "nr": int(self.log_r.size),
            "ntheta": int(self.theta.size),
            "sha256": hashlib.sha256(np.ascontiguousarray(self.values).tobytes()).hexdigest(),
        }

    def save(self, path) -> None:
        np.savez(path, header=json.dumps(self.header), values=self.values)

    @classmethod
    def load(cls, path) -> "FaddeevTable":
        with np.load(path) as data:
            header = json.loads(str(data["header"]))
            values = data["values"]
        if header.get("version") != TABLE_VERSION:
            raise ValueError(f"table version {header.get('version')} != {TABLE_VERSION}")
        if hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest() != header["sha256"]:
            raise ValueError("table checksum mismatch")
        log_r = np.linspace(np.log(header["r_min"]), np.log(header["r_max"]), header["nr"])
        theta = 2.0 * np.pi * np.arange(header["ntheta"]) / header["ntheta"]
        return cls(header["r_min"], header["r_max"], log_r, theta, values)

    @classmethod
    def cached(cls, path, rebuild: bool = False, **grid) -> "FaddeevTable":
        path = Path(path)
        if path.exists() and not rebuild:
            try:
                return cls.load(path)
            except (ValueError, KeyError, OSError):
                pass
        table = cls.build(**grid)
        table.save(path)
        return table

    def _interp(self):
        th = np.concatenate([self.theta[-3:] - 2 * np.pi, self.theta, self.theta[:3] + 2 * np.pi])
        v = np.concatenate([self.values[:, -3:], self.values, self.values[:, :3]], axis=1)
        re = RegularGridInterpolator((self.log_r, th), v.real, method="cubic")
        im = RegularGridInterpolator((self.log_r, th), v.imag, method="cubic")
        return re, im

    def g1(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        r = np.abs(z)
        if np.any((r < self.r_min) | (r > self.r_max)):
            raise ValueError("point outside the tabulated range")
        if not hasattr(self, "_cache"):
            object.__setattr__(self, "_cache", self._interp())
        re, im = self._cache
        pts = np.column_stack([np.log(r).ravel(), np.mod(np.angle(z), 2 * np.pi).ravel()])
        h = (re(pts) + 1j * im(pts)).reshape(z.shape)
        return h + log_kernel(z)


# ----------------------------------------------------------------------------
# single layer on the unit circle


@dataclass(frozen=True, eq=False)
class SingleLayer:
    """Matrix of ``S_k`` on the Fourier basis of orders ``|n| <= N``.

    The kernel is split as ``G_k = G_0 + (G_k - G_0)``.  On the unit circle
    ``G_0(x - y) = -log(4 sin^2((t - s)/2)) / (4 pi)`` acts diagonally with
    multiplier ``1 / (2|n|)`` (and 0 on constants); the smooth remainder is
    integrated by the trapezoidal rule on ``2M`` nodes.
    """

    k: complex
    N: int
    M: int
    matrix: np.ndarray

    def apply(self, f: BoundaryField) -> BoundaryField:
        return BoundaryField(self.matrix @ f.resize(self.N).coeffs)

    def weighted_norm(self, s: float = -0.5) -> float:
        """Norm of ``S_k`` as a map ``H^s -> H^{s+1}`` on the truncated basis."""
        w = 1.0 + np.abs(orders(self.N))
        B = (w ** (s + 1))[:, None] * self.matrix * (w ** (-s))[None, :]
        return float(np.linalg.norm(B, 2))


def log_multiplier(N: int) -> np.ndarray:
    n = np.abs(orders(N)).astype(float)
    out = np.zeros_like(n)
    out[n > 0] = 1.0 / (2.0 * n[n > 0])
    return out


def single_layer(k: complex, N: int, M: int = 128) -> SingleLayer:
    """Assemble ``S_k`` on orders ``|n| <= N`` with ``2M`` quadrature nodes."""
    k = complex(k)
    S = np.diag(log_multiplier(N)).astype(complex)
    if k != 0:
        Q = 2 * M
        if Q <= 2 * N:
            raise ValueError("quadrature too coarse for the requested order")
        t = 2.0 * np.pi * np.arange(Q) / Q
        x = np.exp(1j * t)
        R = faddeev_G_smooth(k, x[:, None] - x[None, :])
        F = np.exp(1j * np.outer(t, orders(N))) / SQRT_2PI
        S += (2.0 * np.pi / Q) ** 2 * (F.conj().T @ R @ F)
    return SingleLayer(k, N, M, S)


def single_layer_apply(k: complex, density: BoundaryField, M: int = 128) -> BoundaryField:
    """Trace on the unit circle of ``int G_k(x - y) density(y) ds(y)``."""
    return single_layer(k, density.N, M).apply(density)


class ExtrapolationWarning(UserWarning):
    pass


def single_layer_potential(k: complex, density: BoundaryField, z, Q: int = 4096):
    """Potential and normal-direction derivative of the single layer at ``z`` off the circle.

    Returns ``(V, dV)`` with ``dV = nu . grad V`` for ``nu = z / |z|``.
    """
    z = np.asarray(z, dtype=complex)
    t = 2.0 * np.pi * np.arange(Q) / Q
    y = np.exp(1j * t)
    f = density(t) * (2.0 * np.pi / Q)
    d = z[..., None] - y
    V = faddeev_G(k, d) @ f
    nu = z / np.abs(z)
    dV = (nu[..., None] * faddeev_G_derivative(k, d)).real @ f
    return V, dV


def adjoint_double_layer(k: complex, density: BoundaryField, theta, Q: int = 1024) -> np.ndarray:
    """``int d/dnu_x G_k(x - y) density(y) ds(y)`` on the unit circle (smooth kernel)."""
    theta = np.asarray(theta, dtype=float)
    t = 2.0 * np.pi * np.arange(Q) / Q
    x = np.exp(1j * theta)[:, None]
    y = np.exp(1j * t)[None, :]
    d = x - y
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.abs(d) > 1e-14, (np.exp(1j * k * d) - 1.0) / d, 1j * k)
    kern = -0.25 / np.pi - (x * ratio).real / (2.0 * np.pi)
    return kern @ (density(t) * (2.0 * np.pi / Q))


def single_layer_gradient_jump_check(k: complex, density: BoundaryField, theta, delta: float = 0.005, Q: int = 8192) -> dict:
    """Defects of the single-layer normal-derivative limits at angles ``theta``.

    One-sided normal derivatives are sampled at distances ``delta``,
    ``2 delta`` and ``3 delta`` from the circle and extrapolated
    quadratically to the circle.
    They are compared with ``(+-1/2 I + K'_k) density``, ``K'_k`` being the
    adjoint double layer; their difference is compared with ``-density``.
    """
    theta = np.asarray(theta, dtype=float)
    if delta < 5 * 2 * np.pi / Q:
        warnings.warn("evaluation points too close to the circle for the quadrature", ExtrapolationWarning)
    e = np.exp(1j * theta)

    def limit(sign):
        d = [single_layer_potential(k, density, (1 + j * sign * delta) * e, Q)[1] for j in (1, 2, 3)]
        return 3 * d[0] - 3 * d[1] + d[2]

    out, inn = limit(+1), limit(-1)
    f = density(theta)
    kp = adjoint_double_layer(k, density, theta)
    return {
        "jump": float(np.abs(out - inn + f).max()),
        "exterior": float(np.abs(out - (-0.5 * f + kp)).max()),
        "interior": float(np.abs(inn - (0.5 * f + kp)).max()),
        "scale": float(max(np.abs(f).max(), 1e-300)),
    }
