"""Piecewise-linear finite elements on the unit disc.

The mesh is built from concentric rings of nodes.  Ring radii include every
radial interface of the phantom, so layered conductivities are resolved
exactly; off-centre circular interfaces are fitted by snapping nearby nodes
onto the circle.  Each ring carries a multiple of ``P = n_boundary / 4``
equally spaced nodes, which makes the mesh invariant under rotation by
``2 pi / P``: a radial conductivity then yields a DN matrix whose entries
``(m, n)`` vanish unless ``m - n`` is a multiple of ``P``.

Dirichlet-to-Neumann entries are never obtained by differentiating the
discrete solution on the boundary.  They come from the energy form
``int sigma grad u . grad v``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .boundary import SQRT_2PI, BoundaryField, DNMatrix, orders
from .phantoms import Conductivity, PiecewiseRadial

logger = logging.getLogger(__name__)

MIN_NODES_PER_WAVELENGTH = 8


class MeshResolutionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FemMesh:
    """Conforming triangulation of the unit disc.

    ``boundary`` lists the boundary node indices in order of increasing
    angle, starting at angle 0 with uniform spacing.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    h: float

    @property
    def n_boundary(self) -> int:
        return int(self.boundary.size)

    @property
    def z(self) -> np.ndarray:
        return self.nodes[:, 0] + 1j * self.nodes[:, 1]

    @cached_property
    def interior(self) -> np.ndarray:
        mask = np.ones(len(self.nodes), dtype=bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def barycenters(self) -> np.ndarray:
        p = self.nodes[self.triangles].mean(axis=1)
        return p[:, 0] + 1j * p[:, 1]

    @cached_property
    def _local_stiffness(self) -> np.ndarray:
        # (m, 3, 3) matrices of grad(l_i) . grad(l_j) * area
        p = self.nodes[self.triangles]
        b = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
        c = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
        A = self.areas
        return (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * A)[:, None, None]

    def stiffness(self, coef) -> sp.csr_matrix:
        """Assemble ``int coef grad u . grad v`` with one value per triangle."""
        coef = np.broadcast_to(np.asarray(coef, dtype=float), (len(self.triangles),))
        vals = (self._local_stiffness * coef[:, None, None]).ravel()
        rows = np.repeat(self.triangles, 3, axis=1).ravel()
        cols = np.tile(self.triangles, (1, 3)).ravel()
        n = len(self.nodes)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def mass(self) -> sp.csr_matrix:
        loc = (np.ones((3, 3)) + np.eye(3)) / 12.0
        vals = (self.areas[:, None, None] * loc[None]).ravel()
        rows = np.repeat(self.triangles, 3, axis=1).ravel()
        cols = np.tile(self.triangles, (1, 3)).ravel()
        n = len(self.nodes)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def l2_norm(self, values, mask=None) -> float:
        """L2 norm of a nodal P1 field, optionally restricted to triangles in ``mask``."""
        v = np.asarray(values)
        if mask is None:
            return float(np.sqrt(abs(np.vdot(v, self.mass @ v))))
        loc = (np.ones((3, 3)) + np.eye(3)) / 12.0
        vt = v[self.triangles[mask]]
        e = np.einsum("ti,ij,tj->t", vt.conj(), loc, vt).real * self.areas[mask]
        return float(np.sqrt(e.sum()))

    def gradient_l2_norm(self, values, mask=None) -> float:
        v = np.asarray(values)
        K = self._local_stiffness if mask is None else self._local_stiffness[mask]
        tri = self.triangles if mask is None else self.triangles[mask]
        vt = v[tri]
        return float(np.sqrt(np.einsum("ti,tij,tj->t", vt.conj(), K, vt).real.sum()))

    def boundary_matrix(self, N: int) -> np.ndarray:
        """Nodal values of ``phi_n``, ``n = -N..N``, at the boundary nodes."""
        theta = 2.0 * np.pi * np.arange(self.n_boundary) / self.n_boundary
        return np.exp(1j * np.outer(theta, orders(N))) / SQRT_2PI

    def check_resolution(self, N: int):
        if N > 0 and self.n_boundary / N < MIN_NODES_PER_WAVELENGTH:
            raise MeshResolutionError(
                f"order N={N} is unresolved: {self.n_boundary} boundary nodes give "
                f"{self.n_boundary / N:.1f} < {MIN_NODES_PER_WAVELENGTH} nodes per wavelength"
            )


def _ring_radii(h: float, breaks) -> np.ndarray:
    pts = sorted({0.0, 1.0, *[float(b) for b in breaks if 0 < b < 1]})
    radii = [0.0]
    for a, b in zip(pts, pts[1:]):
        m = max(1, int(np.ceil((b - a) / h - 1e-9)))
        radii.extend(a + (b - a) * np.arange(1, m + 1) / m)
    return np.array(radii)


def disc_mesh(n_boundary: int = 256, radii=(), circles=()) -> FemMesh:
    """Ring mesh of the unit disc.

    Parameters
    ----------
    n_boundary : int
        Number of boundary nodes; must be a multiple of 4.
    radii : sequence of float
        Radial interfaces to be fitted exactly by rings.
    circles : sequence of (complex, float)
        Off-centre circular interfaces fitted by node snapping.
    """
    if n_boundary % 4 or n_boundary < 16:
        raise ValueError("n_boundary must be a multiple of 4 and at least 16")
    P = n_boundary // 4
    h = 2.0 * np.pi / n_boundary
    R = _ring_radii(h, radii)
    counts = [1]
    for r in R[1:]:
        target = n_boundary * r
        j = int(np.clip(np.ceil(np.log2(max(target, 1.0) / P) - 0.3), 0, 2))
        counts.append(P * 2**j)
    counts[-1] = n_boundary
    # node counts may at most double from one ring to the next
    for i in range(len(counts) - 2, 0, -1):
        counts[i] = max(counts[i], counts[i + 1] // 2)
    for i in range(2, len(counts)):
        counts[i] = max(counts[i], counts[i - 1])

    nodes = [np.zeros((1, 2))]
    start = [0]
    offset = 1
    for r, n in zip(R[1:], counts[1:]):
        t = 2.0 * np.pi * np.arange(n) / n
        nodes.append(np.column_stack([r * np.cos(t), r * np.sin(t)]))
        start.append(offset)
        offset += n
    nodes = np.vstack(nodes)

    tris = []
    n1 = counts[1]
    j = np.arange(n1)
    tris.append(np.column_stack([np.zeros(n1, int), start[1] + j, start[1] + (j + 1) % n1]))
    for i in range(1, len(R) - 1):
        a0, na = start[i], counts[i]
        b0, nb = start[i + 1], counts[i + 1]
        j = np.arange(na)
        a = a0 + j
        b = a0 + (j + 1) % na
        if nb == na:
            A = b0 + j
            B = b0 + (j + 1) % nb
            tris.append(np.column_stack([a, A, B]))
            tris.append(np.column_stack([a, B, b]))
        else:
            A = b0 + 2 * j
            M = b0 + 2 * j + 1
            B = b0 + (2 * j + 2) % nb
            tris.append(np.column_stack([a, A, M]))
            tris.append(np.column_stack([a, M, b]))
            tris.append(np.column_stack([b, M, B]))
    tris = np.vstack(tris)
    boundary = start[-1] + np.arange(n_boundary)

    for c, rho in circles:
        nodes = _snap_to_circle(nodes, tris, boundary, complex(c), float(rho))

    mesh = FemMesh(nodes, _orient(nodes, tris), boundary, h)
    if np.any(mesh.areas <= 0):
        raise RuntimeError("mesh generation produced inverted triangles")
    return mesh


def _orient(nodes, tris):
    p = nodes[tris]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    flip = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    tris = tris.copy()
    tris[flip, 1], tris[flip, 2] = tris[flip, 2].copy(), tris[flip, 1].copy()
    return tris


def _snap_to_circle(nodes, tris, boundary, c, rho):
    z = nodes[:, 0] + 1j * nodes[:, 1]
    dist = np.abs(z - c) - rho
    fixed = np.zeros(len(nodes), bool)
    fixed[boundary] = True
    edges = np.vstack([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    snapped = np.abs(dist) < 1e-12
    crossing = edges[(np.sign(dist[edges[:, 0]]) * np.sign(dist[edges[:, 1]]) < 0)]
    # snap the endpoint closer to the circle, nearest edges first
    order = np.argsort(np.minimum(np.abs(dist[crossing[:, 0]]), np.abs(dist[crossing[:, 1]])))
    for a, b in crossing[order]:
        if snapped[a] or snapped[b]:
            continue
        v = a if abs(dist[a]) <= abs(dist[b]) else b
        if fixed[v]:
            v = b if v == a else a
        d = z[v] - c
        z[v] = c + rho * d / abs(d)
        snapped[v] = True
    return np.column_stack([z.real, z.imag])


def mesh_for(sigma: Conductivity, n_boundary: int = 256) -> FemMesh:
    """Interface-fitted mesh for a phantom."""
    return disc_mesh(n_boundary, sigma.radial_interfaces(), sigma.circle_interfaces())


class DirichletSolver:
    """Factorized stiffness system for one conductivity on one mesh.

    The conductivity is sampled at triangle barycentres.
    """

    def __init__(self, sigma: Conductivity, mesh: FemMesh):
        self.sigma = sigma
        self.mesh = mesh
        self.coef = np.asarray(sigma(mesh.barycenters), dtype=float)
        if np.any(self.coef <= 0):
            raise ValueError("conductivity must be positive")
        self.K = mesh.stiffness(self.coef)
        I, B = mesh.interior, mesh.boundary
        self._KII = self.K[I][:, I].tocsc()
        self._KIB = self.K[I][:, B]
        try:
            self._lu = splu(self._KII)
        except RuntimeError as exc:  # pragma: no cover - positive sigma is always nonsingular
            raise RuntimeError("singular stiffness matrix") from exc

    def solve_nodal(self, gB: np.ndarray) -> np.ndarray:
        """Discrete sigma-harmonic fields for boundary nodal values ``gB``.

        ``gB`` has shape ``(n_boundary,)`` or ``(n_boundary, k)``.
        """
        gB = np.asarray(gB)
        rhs = -(self._KIB @ gB)
        if np.iscomplexobj(rhs):
            uI = self._lu.solve(np.ascontiguousarray(rhs.real)) + 1j * self._lu.solve(np.ascontiguousarray(rhs.imag))
        else:
            uI = self._lu.solve(np.ascontiguousarray(rhs))
        u = np.zeros((len(self.mesh.nodes),) + gB.shape[1:], dtype=np.result_type(gB, float))
        u[self.mesh.interior] = uI
        u[self.mesh.boundary] = gB
        return u

    def solve(self, f: BoundaryField) -> np.ndarray:
        theta = 2.0 * np.pi * np.arange(self.mesh.n_boundary) / self.mesh.n_boundary
        return self.solve_nodal(f(theta))

    def fourier_solutions(self, N: int) -> np.ndarray:
        """Columns: solutions for boundary data ``phi_n``, ``n = -N..N``."""
        return self.solve_nodal(self.mesh.boundary_matrix(N))

    def residual(self, u: np.ndarray) -> float:
        """Relative weak-form residual on interior nodes."""
        r = (self.K @ u)[self.mesh.interior]
        scale = abs(self.K).max() * np.abs(u).max()
        return float(np.abs(r).max() / max(scale, 1e-300))


@lru_cache(maxsize=32)
def _solver(sigma: Conductivity, mesh: FemMesh) -> DirichletSolver:
    return DirichletSolver(sigma, mesh)


def solve_dirichlet(sigma: Conductivity, f: BoundaryField, mesh: FemMesh) -> np.ndarray:
    """Nodal values of the finite-element solution of ``div(sigma grad u) = 0, u = f``."""
    return _solver(sigma, mesh).solve(f)


def _unit(mesh: FemMesh) -> DirichletSolver:
    return _solver(PiecewiseRadial((), (), r1=0.5), mesh)


def dn_difference(sigma: Conductivity, N: int, mesh: FemMesh) -> DNMatrix:
    """``Lambda_sigma - Lambda_1`` on orders ``|n| <= N``.

    Computed as ``int (sigma - 1) grad u_n . grad v_m`` over the triangles
    where ``sigma != 1`` (``u_n`` sigma-harmonic, ``v_m`` harmonic), which is
    algebraically identical to the difference of the two discrete maps but
    free of cancellation.
    """
    mesh.check_resolution(N)
    s = _solver(sigma, mesh)
    one = _unit(mesh)
    active = np.flatnonzero(s.coef != 1.0)
    if active.size == 0:
        return DNMatrix(np.zeros((2 * N + 1, 2 * N + 1)), "difference", {"n_boundary": mesh.n_boundary})
    Us = s.fourier_solutions(N)
    U1 = one.fourier_solutions(N)
    tri = mesh.triangles[active]
    Kloc = mesh._local_stiffness[active] * (s.coef[active] - 1.0)[:, None, None]
    us = Us[tri]  # (t, 3, 2N+1)
    v1 = U1[tri].conj()
    D = np.einsum("tim,tij,tjn->mn", v1, Kloc, us)
    return DNMatrix(D, "difference", {"n_boundary": mesh.n_boundary})


def assemble_dn_map(sigma: Conductivity, N: int, mesh: FemMesh, corrected: bool = True) -> DNMatrix:
    """Dirichlet-to-Neumann matrix of ``sigma`` on orders ``|n| <= N``.

    With ``corrected=True`` (default) the result is
    ``diag(|n|) + (Lambda_sigma^h - Lambda_1^h)``: the exact unit-conductivity
    map plus the discrete difference on the same mesh, which removes the
    polygonal-boundary error common to both discrete maps.  With
    ``corrected=False`` the raw Galerkin matrix ``Phi^H S_sigma Phi`` is
    returned, ``S_sigma`` being the boundary Schur complement of the
    stiffness matrix.
    """
    mesh.check_resolution(N)
    if corrected:
        D = dn_difference(sigma, N, mesh)
        return DNMatrix(np.diag(np.abs(orders(N))) + D.entries, "full_map", dict(D.meta))
    s = _solver(sigma, mesh)
    U = s.fourier_solutions(N)
    Phi = mesh.boundary_matrix(N)
    flux = (s.K @ U)[mesh.boundary]
    return DNMatrix(Phi.conj().T @ flux, "full_map", {"n_boundary": mesh.n_boundary})


def alessandrini_pairing(g: BoundaryField, f: BoundaryField, sigma: Conductivity, mesh: FemMesh) -> complex:
    """``int sigma grad u_f . grad v_g`` (bilinear) with ``v_g`` the harmonic extension of ``g``."""
    s = _solver(sigma, mesh)
    u = s.solve(f)
    v = _unit(mesh).solve(g)
    return complex(v @ (s.K @ u))


def radial_dn_eigenvalue(radii, values, n: int) -> float:
    """Eigenvalue of ``Lambda_sigma`` on ``phi_n`` for a layered conductivity.

    ``radii``/``values`` follow :class:`PiecewiseRadial` (outer value 1).
    In each layer ``u = c r^|n| + d r^-|n|``; the coefficients are carried
    outward by matching ``u`` and ``sigma du/dr`` at every interface.
    """
    n = abs(int(n))
    if n == 0:
        return 0.0
    vals = list(values) + [1.0]
    c, d = 1.0, 0.0
    for rho, sa, sb in zip(radii, vals[:-1], vals[1:]):
        p, m = rho**n, rho ** (-n)
        u = c * p + d * m
        flux = sa * (c * p - d * m)  # rho/n * sigma du/dr
        # solve cb p + db m = u ; sb (cb p - db m) = flux
        cb = 0.5 * (u + flux / sb) / p
        db = 0.5 * (u - flux / sb) / m
        c, d = cb, db
    return float(n * (c - d) / (c + d))


def estimate_tol_fem(sigma: Conductivity, N: int = 8, n_boundary: int = 256) -> float:
    """Richardson-style error estimate of the DN matrix at a mesh level.

    Compares meshes with ``n_boundary`` and ``2 n_boundary`` boundary nodes;
    for an O(h^2) method the coarse error is about 4/3 of the difference.
    """
    A = assemble_dn_map(sigma, N, mesh_for(sigma, n_boundary)).entries
    B = assemble_dn_map(sigma, N, mesh_for(sigma, 2 * n_boundary)).entries
    scale = max(np.abs(B).max(), 1.0)
    return float(4.0 / 3.0 * np.abs(A - B).max() / scale)
