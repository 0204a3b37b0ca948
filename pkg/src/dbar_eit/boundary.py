"""Fourier calculus on the unit circle.

Boundary functions are stored by their coefficients ``b_n`` in the
orthonormal basis ``phi_n(theta) = exp(i n theta) / sqrt(2 pi)`` for
``n = -N..N``.  Operators on such functions (Dirichlet-to-Neumann maps and
their differences) are stored as ``(2N+1) x (2N+1)`` matrices acting on the
coefficient vector.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)


def orders(N: int) -> np.ndarray:
    """Fourier orders ``-N..N`` in storage order."""
    return np.arange(-N, N + 1)


@dataclass(frozen=True)
class BoundaryField:
    """Trigonometric polynomial on the unit circle.

    Parameters
    ----------
    coeffs : array_like of complex, shape (2N+1,)
        Coefficients ``b_n`` ordered ``n = -N..N``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).ravel()
        if c.size % 2 != 1:
            raise ValueError("coefficient vector must have odd length 2N+1")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        return orders(self.N)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoundaryField):
            return NotImplemented
        return bool(np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def coeff(self, n: int) -> complex:
        if abs(n) > self.N:
            return 0j
        return complex(self.coeffs[n + self.N])

    # constructors -------------------------------------------------------
    @classmethod
    def zeros(cls, N: int) -> "BoundaryField":
        return cls(np.zeros(2 * N + 1, dtype=complex))

    @classmethod
    def basis(cls, n: int, N: int) -> "BoundaryField":
        """The basis function ``phi_n`` truncated at order ``N``."""
        if abs(n) > N:
            raise ValueError(f"order {n} exceeds truncation N={N}")
        c = np.zeros(2 * N + 1, dtype=complex)
        c[n + N] = 1.0
        return cls(c)

    @classmethod
    def from_samples(cls, values, N: int) -> "BoundaryField":
        """Project equispaced samples ``f(2 pi j / M)`` onto orders ``|n| <= N``.

        Uses the trapezoidal rule, exact for trigonometric polynomials of
        degree below ``M - N``.
        """
        values = np.asarray(values, dtype=complex)
        M = values.size
        if M <= 2 * N:
            raise ValueError("need more than 2N samples")
        fhat = np.fft.fft(values) / M
        n = orders(N)
        return cls(SQRT_2PI * fhat[n % M])

    @classmethod
    def from_function(cls, func, N: int, M: int | None = None) -> "BoundaryField":
        M = M or max(4 * N + 4, 256)
        theta = 2.0 * np.pi * np.arange(M) / M
        return cls.from_samples(func(theta), N)

    # evaluation / arithmetic -------------------------------------------
    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        E = np.exp(1j * np.multiply.outer(theta, self.orders)) / SQRT_2PI
        return E @ self.coeffs

    def __add__(self, other: "BoundaryField") -> "BoundaryField":
        return BoundaryField(self.coeffs + _match(other, self.N).coeffs)

    def __sub__(self, other: "BoundaryField") -> "BoundaryField":
        return BoundaryField(self.coeffs - _match(other, self.N).coeffs)

    def __mul__(self, scalar) -> "BoundaryField":
        return BoundaryField(self.coeffs * scalar)

    __rmul__ = __mul__

    def conj(self) -> "BoundaryField":
        """Coefficients of the complex conjugate function."""
        return BoundaryField(np.conj(self.coeffs[::-1]))

    def is_real(self, tol: float = 1e-12) -> bool:
        c = self.coeffs
        return bool(np.all(np.abs(c - np.conj(c[::-1])) <= tol * max(1.0, np.abs(c).max())))

    def resize(self, N: int) -> "BoundaryField":
        """Zero-pad or truncate to order ``N``."""
        out = np.zeros(2 * N + 1, dtype=complex)
        m = min(N, self.N)
        out[N - m : N + m + 1] = self.coeffs[self.N - m : self.N + m + 1]
        return BoundaryField(out)

    # serialization ------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps([[float(c.real), float(c.imag)] for c in self.coeffs])

    @classmethod
    def from_json(cls, text: str) -> "BoundaryField":
        pairs = np.asarray(json.loads(text), dtype=float)
        return cls(pairs[:, 0] + 1j * pairs[:, 1])


def _match(f: BoundaryField, N: int) -> BoundaryField:
    if f.N != N:
        raise ValueError(f"truncation mismatch: {f.N} != {N}")
    return f


def project(f: BoundaryField, j: int) -> BoundaryField:
    """Finite-rank projection keeping orders ``|n| <= j``."""
    if not 0 <= j <= f.N:
        raise ValueError(f"projection order must lie in [0, {f.N}], got {j}")
    c = f.coeffs.copy()
    c[np.abs(f.orders) > j] = 0.0
    return BoundaryField(c)


def sobolev_weights(N: int, s: float) -> np.ndarray:
    """Diagonal ``(1 + |n|)^s`` for ``n = -N..N``."""
    return (1.0 + np.abs(orders(N))) ** float(s)


def hs_norm(f: BoundaryField, s: float) -> float:
    """H^s norm ``(sum (1+|n|)^{2s} |b_n|^2)^{1/2}``."""
    return float(np.linalg.norm(sobolev_weights(f.N, s) * f.coeffs))


def pairing(g: BoundaryField, h: BoundaryField) -> complex:
    """Bilinear boundary pairing ``int g h ds = sum_n b_n(g) c_{-n}(h)``."""
    N = min(g.N, h.N)
    gb = g.resize(N).coeffs
    hc = h.resize(N).coeffs
    return complex(np.sum(gb * hc[::-1]))


def harmonic_extend(f: BoundaryField, r, theta) -> np.ndarray:
    """Evaluate ``sum r^{|n|} b_n phi_n(theta)`` at polar points.

    ``r`` and ``theta`` broadcast against each other.
    """
    r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
    if np.any(r < 0) or np.any(r > 1.0 + 1e-14):
        raise ValueError("harmonic extension is defined for 0 <= r <= 1")
    n = f.orders
    out = np.zeros(r.shape, dtype=complex)
    for nn, b in zip(n, f.coeffs):
        if b != 0:
            out += b * r ** abs(nn) * np.exp(1j * nn * theta)
    return out / SQRT_2PI


def harmonic_extend_xy(f: BoundaryField, z) -> np.ndarray:
    """Harmonic extension at complex points ``z = x1 + i x2``."""
    z = np.asarray(z, dtype=complex)
    return harmonic_extend(f, np.abs(z), np.angle(z))


@dataclass(frozen=True)
class DNMatrix:
    """Operator on the truncated Fourier basis.

    ``entries[m + N, n + N]`` is the ``phi_m`` coefficient of the image of
    ``phi_n``.  ``tag`` is ``"full_map"`` for a Dirichlet-to-Neumann map and
    ``"difference"`` for ``Lambda_sigma - Lambda_1``.
    """

    entries: np.ndarray
    tag: str = "full_map"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = np.array(self.entries, dtype=complex)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2 != 1:
            raise ValueError("DN matrix must be square of odd size 2N+1")
        if self.tag not in ("full_map", "difference"):
            raise ValueError(f"unknown tag {self.tag!r}")
        A.setflags(write=False)
        object.__setattr__(self, "entries", A)

    @property
    def N(self) -> int:
        return (self.entries.shape[0] - 1) // 2

    def entry(self, m: int, n: int) -> complex:
        return complex(self.entries[m + self.N, n + self.N])

    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).copy()

    def apply(self, f: BoundaryField) -> BoundaryField:
        return BoundaryField(self.entries @ f.resize(self.N).coeffs)

    def truncate(self, N: int) -> "DNMatrix":
        if N > self.N:
            raise ValueError(f"cannot extend a DN matrix from N={self.N} to N={N}")
        s = slice(self.N - N, self.N + N + 1)
        return DNMatrix(self.entries[s, s], self.tag, dict(self.meta))

    def __sub__(self, other: "DNMatrix") -> "DNMatrix":
        N = min(self.N, other.N)
        tag = "difference"
        return DNMatrix(self.truncate(N).entries - other.truncate(N).entries, tag)

    def hermitian_defect(self) -> float:
        """Relative size of ``A - A^H``."""
        A = self.entries
        scale = max(np.abs(A).max(), 1e-300)
        return float(np.abs(A - A.conj().T).max() / scale)

    def to_json(self) -> str:
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.entries]
        return json.dumps({"N": self.N, "tag": self.tag, "entries": rows})

    @classmethod
    def from_json(cls, text: str) -> "DNMatrix":
        d = json.loads(text)
        E = np.asarray(d["entries"], dtype=float)
        return cls(E[..., 0] + 1j * E[..., 1], d.get("tag", "full_map"))

    def diagonal_csv(self) -> str:
        lines = ["n,re,im"]
        for n, z in zip(orders(self.N), self.diagonal()):
            lines.append(f"{n},{z.real:.17g},{z.imag:.17g}")
        return "\n".join(lines) + "\n"


def dn_map_identity(N: int) -> DNMatrix:
    """Dirichlet-to-Neumann map of the unit disc for unit conductivity."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    return DNMatrix(np.diag(np.abs(orders(N)).astype(complex)), "full_map")
