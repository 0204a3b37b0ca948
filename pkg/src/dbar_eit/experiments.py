"""Monotone smooth approximation of discontinuous conductivities and the
convergence diagnostics built on it.

Each discontinuity of a piecewise-constant phantom is replaced by a
C-infinity ramp of width ``w_n`` placed on the high side of the jump.  With
``w_n`` nonincreasing in ``n`` every ramp term is pointwise nondecreasing in
``n``, so ``sigma_n <= sigma_{n+1} <= sigma`` holds exactly, not up to a
tolerance.
"""

from __future__ import annotations

import io
import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bie import TruncationWarning, scattering_transform_boundary, solve_bie
from .boundary import SQRT_2PI, BoundaryField, DNMatrix, hs_norm, pairing
from .faddeev import single_layer
from .fem import dn_difference, mesh_for
from .phantoms import Conductivity, Inclusions, PiecewiseRadial, UnsupportedPhantomError

DEFAULT_N = (2, 4, 8, 16, 32)


# ----------------------------------------------------------------------------
# monotone sequences


def _ramp_cap(base: Conductivity) -> float:
    """Largest ramp width keeping every outward ramp inside ``r1``."""
    if isinstance(base, PiecewiseRadial):
        out = [base.r1 - rho for rho, d in zip(base.radii, base.jumps()) if d < 0]
    else:
        out = [base.r1 - abs(c) - r for c, r, v in zip(base.centers, base.radii, base.values) if v < 1]
    gaps = []
    if isinstance(base, Inclusions):
        for i in range(len(base.centers)):
            for j in range(i):
                gaps.append((abs(base.centers[i] - base.centers[j]) - base.radii[i] - base.radii[j]) / 2)
    return min(out + gaps, default=np.inf)


@dataclass(frozen=True, eq=False)
class ApproximationSequence:
    base: Conductivity
    n_values: tuple
    members: tuple
    r1: float
    lower_bound: float
    checks: dict = field(default_factory=dict)

    def __iter__(self):
        return iter(zip(self.n_values, self.members))


def verify_sequence(base: Conductivity, members, r1: float, n_grid: int = 512) -> dict:
    """Check conditions (i)-(iii) exactly on an ``n_grid x n_grid`` grid over the disc.

    (i) ``sigma_n = 1`` for ``|x| >= r1``; (ii) ``sigma_n >= c``; (iii)
    ``sigma_n <= sigma_{n+1} <= sigma``.  Also returns the L1 gaps
    ``||sigma - sigma_n||_1`` (grid quadrature).
    """
    a = np.linspace(-1, 1, n_grid)
    z = (a[:, None] + 1j * a[None, :]).ravel()
    z = z[np.abs(z) <= 1]
    h2 = (a[1] - a[0]) ** 2
    s = base(z)
    c = min(float(s.min()), 1.0)
    vals = [m(z) for m in members]
    outside = np.abs(z) >= r1
    cond_i = all(np.all(v[outside] == 1.0) for v in vals)
    cond_ii = all(np.all(v >= c) for v in vals)
    chain = vals + [s]
    cond_iii = all(np.all(lo <= hi) for lo, hi in zip(chain, chain[1:]))
    gaps = [float(np.sum(np.abs(s - v)) * h2) for v in vals]
    return {"i": bool(cond_i), "ii": bool(cond_ii), "iii": bool(cond_iii), "lower_bound": c, "l1_gaps": gaps}


def monotone_sequence(base: Conductivity, n_values=DEFAULT_N, verify: bool = True, n_grid: int = 512) -> ApproximationSequence:
    """Smooth phantoms ``sigma_n`` with ramps of width ``min(1/n, cap)``.

    ``base`` must be a sharp piecewise-radial or inclusion phantom.
    """
    n_values = tuple(int(n) for n in n_values)
    if any(n <= 0 for n in n_values) or list(n_values) != sorted(set(n_values)):
        raise ValueError("n values must be positive and strictly increasing")
    if not isinstance(base, (PiecewiseRadial, Inclusions)) or base.ramp_width > 0:
        raise UnsupportedPhantomError(f"no monotone smoothing recipe for kind {base.kind!r}")
    if base.is_trivial():
        members = tuple(base for _ in n_values)
    else:
        cap = _ramp_cap(base)
        members = tuple(base.smoothed(min(1.0 / n, cap)) for n in n_values)
    checks = verify_sequence(base, members, base.r1, n_grid) if verify else {}
    if verify and not (checks["i"] and checks["ii"] and checks["iii"]):
        raise AssertionError(f"monotone sequence violates its defining conditions: {checks}")
    lower = checks.get("lower_bound", min(min(base.values, default=1.0), 1.0))
    return ApproximationSequence(base, n_values, members, base.r1, lower, checks)


# ----------------------------------------------------------------------------
# weighted operator norms


def _entries(A) -> np.ndarray:
    return A.entries if isinstance(A, DNMatrix) else np.asarray(A, dtype=complex)


def operator_norm_h12(A) -> float:
    """Spectral norm of ``W^{-1/2} A W^{-1/2}``, ``W = diag(1 + |n|)``."""
    E = _entries(A)
    N = (E.shape[0] - 1) // 2
    w = 1.0 / np.sqrt(1.0 + np.abs(np.arange(-N, N + 1)))
    if not E.size:
        return 0.0
    return float(np.linalg.norm(w[:, None] * E * w[None, :], 2))


def projector(N: int, j: int) -> np.ndarray:
    """Diagonal 0/1 mask of the projection onto orders ``|n| <= j``."""
    if not 0 <= j <= N:
        raise ValueError(f"projection order must lie in [0, {N}], got {j}")
    return (np.abs(np.arange(-N, N + 1)) <= j).astype(float)


def tail_bound(A, j: int) -> tuple[float, float]:
    """``(||(I - P_j) A||, ||A (I - P_j)||)`` in the weighted norm."""
    E = _entries(A)
    N = (E.shape[0] - 1) // 2
    q = 1.0 - projector(N, j)
    return operator_norm_h12(q[:, None] * E), operator_norm_h12(E * q[None, :])


def decomposition_row(D, j: int) -> dict:
    """Three-term splitting ``D = P D P + (I - P) D + P D (I - P)`` with norms."""
    E = _entries(D)
    N = (E.shape[0] - 1) // 2
    p = projector(N, j)
    q = 1.0 - p
    full = operator_norm_h12(E)
    block = operator_norm_h12(p[:, None] * E * p[None, :])
    left = operator_norm_h12(q[:, None] * E)
    right = operator_norm_h12(p[:, None] * E * q[None, :])
    return {"full": full, "block": block, "tail_left": left, "tail_right": right, "slack": block + left + right - full}


def weak_to_norm_decomposition_check(A_members, A_base, j: int) -> list[dict]:
    """Splitting of ``A_n - A`` at order ``j`` for each member of a sequence."""
    Ab = _entries(A_base)
    return [decomposition_row(_entries(An) - Ab, j) for An in A_members]


def geometric_ratio(js, values) -> float:
    """Least-squares per-unit decay ratio ``exp(slope)`` of ``log values`` against ``js``."""
    js = np.asarray(js, dtype=float)
    v = np.asarray(values, dtype=float)
    slope = np.polyfit(js, np.log(v), 1)[0]
    return float(np.exp(slope))


def cos_field(N: int) -> BoundaryField:
    """``cos(theta)`` on orders ``|n| <= N``."""
    c = np.zeros(2 * N + 1, dtype=complex)
    c[N - 1] = c[N + 1] = SQRT_2PI / 2.0
    return BoundaryField(c)


# ----------------------------------------------------------------------------
# convergence study


@dataclass
class ConvergenceReport:
    """Per-``n`` and per-``(n, k)`` diagnostics of a monotone sequence.

    ``rows`` hold one dict per ``n``; ``kdata`` one dict per ``(n, k)``
    ordered by ``n`` then by the order of ``kset``; ``floor`` holds
    the discretisation floors measured by mesh refinement.
    """

    meta: dict
    rows: list
    kdata: list
    base: dict
    floor: dict

    def to_dict(self) -> dict:
        return _jsonable({"meta": self.meta, "rows": self.rows, "kdata": self.kdata, "base": self.base, "floor": self.floor})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def is_finite(self) -> bool:
        def walk(x):
            if isinstance(x, dict):
                return all(walk(v) for v in x.values())
            if isinstance(x, (list, tuple)):
                return all(walk(v) for v in x)
            if isinstance(x, (float, int)) and not isinstance(x, bool):
                return bool(np.isfinite(x))
            return True

        return walk(self.to_dict())

    def norm_table(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        tail_js = self.meta["tail_js"]
        w.writerow(["n", "norm_diff", "form_cos"] + [f"tail_{j}" for j in tail_js] + [f"block_{self.meta['block_j']}"])
        for r in self.rows:
            w.writerow([r["n"], f"{r['norm_diff']:.10g}", f"{r['form_cos']:.10g}"] + [f"{max(t):.10g}" for t in r["tails"]] + [f"{r['split']['block']:.10g}"])
        return buf.getvalue()

    def transform_table(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "re_k", "im_k", "re_t", "im_t", "t_err", "g_dist_h12", "condition"])
        for r in self.kdata:
            k, t = r["k"], r["t"]
            w.writerow([r["n"], k.real, k.imag, f"{t.real:.12g}", f"{t.imag:.12g}", f"{r['t_err']:.10g}", f"{r['g_dist']:.10g}", f"{r['condition']:.6g}"])
        return buf.getvalue()

    def gnuplot_script(self, norm_csv: str = "norms.csv", transform_csv: str = "transform.csv") -> str:
        return "\n".join(
            [
                "set datafile separator ','",
                "set logscale xy",
                "set xlabel 'n'",
                "set key top right",
                "set terminal pngcairo size 900,600",
                "set output 'decay.png'",
                f"plot '{norm_csv}' every ::1 using 1:2 with linespoints title '||A_n - A||', \\",
                f"     '{transform_csv}' every ::1 using 1:6 with points title '|t_n(k) - t(k)|'",
                "",
            ]
        )


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _transforms(A: DNMatrix, kset, layers):
    out = []
    for k in kset:
        g = solve_bie(k, A, layers[k])
        out.append((g, scattering_transform_boundary(k, A, g)))
    return out


def convergence_study(seq: ApproximationSequence, kset=(1.0,), N: int = 16, n_boundary: int = 256, tail_js=(4, 8, 12), block_j: int = 8, refine: bool = True) -> ConvergenceReport:
    """Assemble ``A_n``, solve the BIE and compare against the sharp phantom.

    All members share the mesh fitted to the sharp phantom's interfaces.
    With ``refine`` the sharp-phantom quantities are recomputed on a mesh
    with twice the boundary resolution; the differences are reported as
    discretisation floors.
    """
    kset = [complex(k) for k in kset]
    if max(*tail_js, block_j) > N:
        raise ValueError(f"tail and block orders must not exceed N={N}")
    mesh = mesh_for(seq.base, n_boundary)
    mesh.check_resolution(N)
    layers = {k: single_layer(k, N) for k in kset}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        A = dn_difference(seq.base, N, mesh)
        base_t = _transforms(A, kset, layers)
        rows, kdata = [], []
        A_members = []
        f = cos_field(N)
        for n, member in seq:
            An = dn_difference(member, N, mesh)
            A_members.append(An)
            D = An - A
            rows.append(
                {
                    "n": n,
                    "norm_diff": operator_norm_h12(D),
                    "form_cos": float(pairing(f, (A - An).apply(f)).real),
                    "tails": [tail_bound(An, j) for j in tail_js],
                    "split": decomposition_row(D, block_j),
                }
            )
            for k, (g, t), (gb, tb) in zip(kset, _transforms(An, kset, layers), base_t):
                kdata.append(
                    {
                        "n": n,
                        "k": k,
                        "t": t,
                        "t_err": abs(t - tb),
                        "g_dist": hs_norm(g.g - gb.g, 0.5),
                        "condition": g.condition,
                    }
                )
        floor = {}
        if refine:
            fine = mesh_for(seq.base, 2 * n_boundary)
            Af = dn_difference(seq.base, N, fine)
            fine_t = _transforms(Af, kset, layers)
            floor = {
                "n_boundary_fine": fine.n_boundary,
                "norm": operator_norm_h12(Af - A),
                "t": [abs(a[1] - b[1]) for a, b in zip(base_t, fine_t)],
            }
    base = {
        "t": [t for _, t in base_t],
        "tails": [tail_bound(A, j) for j in tail_js],
        "norm": operator_norm_h12(A),
    }
    meta = {
        "phantom": seq.base.to_dict(),
        "n_values": list(seq.n_values),
        "k": kset,
        "N": N,
        "n_boundary": n_boundary,
        "tail_js": list(tail_js),
        "block_j": block_j,
        "sequence_checks": seq.checks,
    }
    return ConvergenceReport(meta, rows, kdata, base, floor)


def nonincreasing_above_floor(values, floor: float) -> bool:
    """``v[i+1] <= v[i] + floor`` for consecutive entries."""
    v = list(values)
    return all(b <= a + floor for a, b in zip(v, v[1:]))
