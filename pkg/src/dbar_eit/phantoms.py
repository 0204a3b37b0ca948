"""Conductivity phantoms on the unit disc.

Every phantom equals 1 for ``|x| >= r1`` with ``0 < r1 < 1``.  Points are
passed as complex numbers ``x1 + i x2`` throughout the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def smooth_step(t):
    """C-infinity nondecreasing step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


class UnsupportedPhantomError(ValueError):
    pass


class Conductivity:
    """Base class.  Subclasses implement ``__call__(z)`` and ``to_dict``."""

    kind: str = ""
    r1: float

    def __call__(self, z) -> np.ndarray:
        raise NotImplementedError

    #: radii of circular interfaces centred at the origin (mesh fitting)
    def radial_interfaces(self) -> tuple:
        return ()

    #: off-centre circular interfaces as (centre, radius) pairs
    def circle_interfaces(self) -> tuple:
        return ()

    def ess_bounds(self, n: int = 512) -> tuple[float, float]:
        """Essential infimum and supremum, sampled on an ``n x n`` grid."""
        s = np.linspace(-1, 1, n)
        z = s[:, None] + 1j * s[None, :]
        v = self(z[np.abs(z) <= 1])
        return float(min(v.min(), 1.0)), float(max(v.max(), 1.0))

    @property
    def ess_inf(self) -> float:
        return self.ess_bounds()[0]

    @property
    def ess_sup(self) -> float:
        return self.ess_bounds()[1]

    def is_trivial(self) -> bool:
        return False

    def _check_r1(self):
        if not 0.0 < self.r1 < 1.0:
            raise ValueError(f"r1 must lie in (0, 1), got {self.r1}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class PiecewiseRadial(Conductivity):
    """Concentric layers.

    ``values[j]`` is the conductivity on ``radii[j-1] <= |x| < radii[j]``
    (with ``radii[-1] = 0``); the conductivity is 1 beyond ``radii[-1]``.
    A positive ``ramp_width`` replaces each jump by a C-infinity ramp that
    lies on the high side of the jump, so the smoothed profile never
    exceeds the sharp one.
    """

    radii: tuple = ()
    values: tuple = ()
    r1: float = 0.0
    ramp_width: float = 0.0
    kind: str = field(default="piecewise_radial", init=False)

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)
        if len(radii) != len(values):
            raise ValueError("radii and values must have equal length")
        if any(b <= a for a, b in zip(radii, radii[1:])) or any(r <= 0 for r in radii):
            raise ValueError("radii must be positive and increasing")
        if any(v <= 0 for v in values):
            raise ValueError("conductivity values must be positive")
        if not self.r1:
            object.__setattr__(self, "r1", radii[-1] if radii else 0.5)
        self._check_r1()
        if radii and radii[-1] > self.r1:
            raise ValueError("outermost interface lies beyond r1")
        if self.ramp_width > 0:
            for rho, d in zip(radii, self.jumps()):
                if d < 0 and rho + self.ramp_width > self.r1 + 1e-12:
                    raise ValueError("outward ramp would cross r1")
        if self.ramp_width > 0:
            object.__setattr__(self, "kind", "smooth_radial")

    def jumps(self) -> list[float]:
        outer = list(self.values[1:]) + [1.0]
        return [a - b for a, b in zip(self.values, outer)]

    def profile(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.ones_like(r)
        w = self.ramp_width
        for rho, d in zip(self.radii, self.jumps()):
            if w <= 0:
                out = out + d * (r < rho)
            elif d > 0:
                out = out + d * smooth_step((rho - r) / w)
            else:
                out = out + d * (1.0 - smooth_step((r - rho) / w))
        return out

    def __call__(self, z) -> np.ndarray:
        return self.profile(np.abs(np.asarray(z)))

    def radial_interfaces(self) -> tuple:
        return self.radii if self.ramp_width <= 0 else ()

    def ess_bounds(self, n: int = 4097) -> tuple[float, float]:
        v = self.profile(np.linspace(0, 1, n))
        return float(v.min()), float(v.max())

    def is_trivial(self) -> bool:
        return all(v == 1.0 for v in self.values)

    def smoothed(self, width: float) -> "PiecewiseRadial":
        return PiecewiseRadial(self.radii, self.values, self.r1, width)

    def to_dict(self) -> dict:
        return {
            "kind": "piecewise_radial",
            "radii": list(self.radii),
            "values": list(self.values),
            "r1": self.r1,
            "ramp_width": self.ramp_width,
        }


@dataclass(frozen=True)
class SmoothRadialBump(Conductivity):
    """``sqrt(sigma) = 1 + a (1 - |x|^2 / r1^2)^4`` inside ``r1``.

    ``peak`` is ``sigma(0) = (1 + a)^2``.  The Schrodinger potential
    ``q = Laplacian(sqrt(sigma)) / sqrt(sigma)`` is available in closed form.
    """

    peak: float = 2.0
    r1: float = 0.8
    kind: str = field(default="smooth_radial", init=False)

    def __post_init__(self):
        if self.peak <= 0:
            raise ValueError("peak conductivity must be positive")
        self._check_r1()

    @property
    def amplitude(self) -> float:
        return float(np.sqrt(self.peak) - 1.0)

    def sqrt_sigma(self, z) -> np.ndarray:
        s = np.abs(np.asarray(z)) ** 2 / self.r1**2
        return 1.0 + self.amplitude * np.where(s < 1, (1 - s) ** 4, 0.0)

    def __call__(self, z) -> np.ndarray:
        return self.sqrt_sigma(z) ** 2

    def potential(self, z) -> np.ndarray:
        """Closed-form ``q = Laplacian(sqrt(sigma)) / sqrt(sigma)``."""
        s = np.abs(np.asarray(z)) ** 2 / self.r1**2
        lap = np.where(s < 1, 16.0 / self.r1**2 * (1 - s) ** 2 * (4 * s - 1), 0.0)
        return self.amplitude * lap / self.sqrt_sigma(z)

    def ess_bounds(self, n: int = 0) -> tuple[float, float]:
        return min(1.0, self.peak), max(1.0, self.peak)

    def is_trivial(self) -> bool:
        return self.peak == 1.0

    def to_dict(self) -> dict:
        return {"kind": "smooth_radial", "peak": self.peak, "r1": self.r1}


@dataclass(frozen=True)
class Inclusions(Conductivity):
    """Disjoint discs ``|x - c_j| < rho_j`` of conductivity ``values[j]``."""

    centers: tuple = ()
    radii: tuple = ()
    values: tuple = ()
    r1: float = 0.0
    ramp_width: float = 0.0
    kind: str = field(default="inclusion", init=False)

    def __post_init__(self):
        centers = tuple(complex(*c) if np.ndim(c) else complex(c) for c in self.centers)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not len(centers) == len(self.radii) == len(self.values):
            raise ValueError("centers, radii and values must have equal length")
        if any(v <= 0 for v in self.values) or any(r <= 0 for r in self.radii):
            raise ValueError("radii and values must be positive")
        w = max(self.ramp_width, 0.0)
        reach = [abs(c) + r + (w if v < 1 else 0.0) for c, r, v in zip(centers, self.radii, self.values)]
        if not self.r1:
            object.__setattr__(self, "r1", max(reach) if reach else 0.5)
        self._check_r1()
        if reach and max(reach) > self.r1 + 1e-12:
            raise ValueError("inclusion (with ramp) extends beyond r1")
        for i in range(len(centers)):
            for j in range(i):
                if abs(centers[i] - centers[j]) < self.radii[i] + self.radii[j] + 2 * w:
                    raise ValueError("inclusions overlap")

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape)
        w = self.ramp_width
        for c, rho, v in zip(self.centers, self.radii, self.values):
            d = np.abs(z - c)
            if w <= 0:
                out = out + (v - 1.0) * (d < rho)
            elif v > 1:
                out = out + (v - 1.0) * smooth_step((rho - d) / w)
            else:
                out = out + (v - 1.0) * (1.0 - smooth_step((d - rho) / w))
        return out

    def circle_interfaces(self) -> tuple:
        if self.ramp_width > 0:
            return ()
        return tuple(zip(self.centers, self.radii))

    def is_trivial(self) -> bool:
        return all(v == 1.0 for v in self.values)

    def smoothed(self, width: float) -> "Inclusions":
        return Inclusions(self.centers, self.radii, self.values, self.r1, width)

    def to_dict(self) -> dict:
        return {
            "kind": "inclusion",
            "centers": [[c.real, c.imag] for c in self.centers],
            "radii": list(self.radii),
            "values": list(self.values),
            "r1": self.r1,
            "ramp_width": self.ramp_width,
        }


@dataclass(frozen=True, eq=False)
class GridConductivity(Conductivity):
    """Pixel values on a uniform grid over ``[-1, 1]^2`` (nearest-pixel lookup).

    ``values[i, j]`` is the conductivity at ``x1 = s_i, x2 = s_j``.
    Values at ``|x| >= r1`` are forced to 1.
    """

    values: np.ndarray = None
    r1: float = 0.9
    kind: str = field(default="grid", init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("grid values must be a square array")
        if np.any(v <= 0):
            raise ValueError("conductivity values must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        self._check_r1()

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        n = self.values.shape[0]
        i = np.clip(np.rint((z.real + 1) / 2 * (n - 1)).astype(int), 0, n - 1)
        j = np.clip(np.rint((z.imag + 1) / 2 * (n - 1)).astype(int), 0, n - 1)
        return np.where(np.abs(z) < self.r1, self.values[i, j], 1.0)

    def is_trivial(self) -> bool:
        return bool(np.all(self.values == 1.0))

    def to_dict(self) -> dict:
        return {"kind": "grid", "values": self.values.tolist(), "r1": self.r1}


def unit_conductivity() -> PiecewiseRadial:
    return PiecewiseRadial((), (), r1=0.5)


def two_layer(inner: float = 2.0, rho: float = 0.5, r1: float = 0.6) -> PiecewiseRadial:
    """Disc of conductivity ``inner`` and radius ``rho`` in unit background."""
    return PiecewiseRadial((rho,), (inner,), r1=r1)


def smooth_bump(peak: float = 2.0, r1: float = 0.8) -> SmoothRadialBump:
    return SmoothRadialBump(peak, r1)


def from_dict(d: dict) -> Conductivity:
    kind = d.get("kind")
    if kind in ("piecewise_radial", "smooth_radial") and "radii" in d:
        return PiecewiseRadial(d["radii"], d["values"], d.get("r1", 0.0), d.get("ramp_width", 0.0))
    if kind in ("smooth_radial", "smooth_bump"):
        return SmoothRadialBump(d.get("peak", 2.0), d.get("r1", 0.8))
    if kind == "inclusion":
        centers = [complex(*c) for c in d["centers"]]
        return Inclusions(centers, d["radii"], d["values"], d.get("r1", 0.0), d.get("ramp_width", 0.0))
    if kind == "grid":
        return GridConductivity(np.asarray(d["values"]), d.get("r1", 0.9))
    raise UnsupportedPhantomError(f"unknown phantom kind {kind!r}")


def load(path) -> Conductivity:
    with open(path) as fh:
        return from_dict(json.load(fh))
