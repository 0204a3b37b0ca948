"""Command-line entry point ``dbar-eit``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

log = logging.getLogger("dbar_eit")


def parse_complex(text: str) -> complex:
    """Accept ``1+0i``, ``2j``, ``-1.5`` and similar."""
    return complex(text.strip().replace("i", "j").replace(" ", ""))


def parse_list(text: str, kind=int) -> list:
    return [kind(t) for t in text.split(",") if t.strip()]


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).write_text(text)
        log.info("wrote %s", path)


def cmd_tks(args):
    from .bie import parse_grid_spec, polar_kgrid, transform_boundary, transform_direct
    from .phantoms import load

    sigma = load(args.phantom)
    nr, na = parse_grid_spec(args.grid)
    ks = polar_kgrid(args.R, nr, na)
    t0 = time.time()
    if args.method == "boundary":
        t = transform_boundary(sigma, ks, args.R, N=args.N)
    else:
        t = transform_direct(sigma, ks, args.R, n=args.ls_grid)
    log.info("computed %d samples in %.1fs", ks.size, time.time() - t0)
    _write(t.to_csv(), args.out)
    if args.json:
        _write(t.to_json(), args.json)


def cmd_recon(args):
    from .bie import ScatteringTransform
    from .dbar import dbar_grid, disc_xgrid, reconstruct_sigma
    from .phantoms import load

    t = ScatteringTransform.from_csv(Path(args.t).read_text(), R=args.R).cutoff(args.R)
    grid = dbar_grid(args.R, n=args.kgrid)
    truth = load(args.phantom) if args.phantom else None
    rec = reconstruct_sigma(t, disc_xgrid(args.xgrid), grid, truth=truth)
    _write(rec.to_csv(), args.out)
    _write(rec.metrics_json(), args.metrics)
    if not rec.positive:
        log.warning("reconstruction has %d nonpositive samples", rec.metrics["nonpositive_points"])


def cmd_tau(args):
    from .beltrami import tau_transform
    from .bie import parse_grid_spec, polar_kgrid
    from .phantoms import load

    nr, na = parse_grid_spec(args.k_grid)
    ks = polar_kgrid(args.R, nr, na)
    tau = tau_transform(load(args.phantom), ks, args.R, n=args.n)
    _write(tau.to_csv(), args.out)


def cmd_study(args):
    from .experiments import convergence_study, monotone_sequence
    from .phantoms import load

    seq = monotone_sequence(load(args.phantom), parse_list(args.n))
    report = convergence_study(seq, parse_list(args.k, parse_complex), N=args.N, n_boundary=args.n_boundary)
    out = Path(args.out)
    out.write_text(report.to_json())
    stem = out.with_suffix("")
    norms, transform = f"{stem}_norms.csv", f"{stem}_transform.csv"
    Path(norms).write_text(report.norm_table())
    Path(transform).write_text(report.transform_table())
    Path(f"{stem}_decay.gp").write_text(report.gnuplot_script(Path(norms).name, Path(transform).name))
    log.info("wrote %s and companion tables", out)


def cmd_dn(args):
    from .fem import assemble_dn_map, dn_difference, mesh_for
    from .phantoms import load

    sigma = load(args.phantom)
    mesh = mesh_for(sigma, args.n_boundary)
    mesh.check_resolution(args.N)
    if args.difference:
        A = dn_difference(sigma, args.N, mesh)
    else:
        A = assemble_dn_map(sigma, args.N, mesh, corrected=not args.raw)
    if args.json:
        _write(A.to_json(), args.json)
    if args.csv or not args.json:
        _write(A.diagonal_csv(), args.csv)


def cmd_trace(args):
    from .bie import solve_bie
    from .fem import dn_difference, mesh_for
    from .phantoms import load

    sigma = load(args.phantom)
    k = parse_complex(args.k)
    A = dn_difference(sigma, args.N, mesh_for(sigma, args.n_boundary))
    tr = solve_bie(k, A)
    log.info("condition %.3g, residual %.2e", tr.condition, tr.residual)
    _write(tr.g.to_json(), args.out)


def cmd_kernel_table(args):
    from .faddeev import FaddeevTable

    table = FaddeevTable.cached(args.path, rebuild=args.rebuild)
    print(json.dumps(table.header, indent=2))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbar-eit", description="D-bar reconstruction toolkit for the unit disc")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("tks", help="scattering transform samples on a polar k-grid")
    s.add_argument("--phantom", required=True)
    s.add_argument("--R", type=float, default=6.0)
    s.add_argument("--grid", default="8x8", help="radii x angles")
    s.add_argument("--method", choices=("boundary", "direct"), default="boundary")
    s.add_argument("--N", type=int, default=32, help="Fourier truncation order")
    s.add_argument("--ls-grid", type=int, default=256, help="Lippmann-Schwinger grid size")
    s.add_argument("--out", default="-")
    s.add_argument("--json")
    s.set_defaults(func=cmd_tks)

    s = sub.add_parser("recon", help="D-bar reconstruction from scattering data")
    s.add_argument("--t", required=True, help="CSV with columns re_k, im_k, re_t, im_t")
    s.add_argument("--R", type=float, required=True)
    s.add_argument("--xgrid", type=int, default=32)
    s.add_argument("--kgrid", type=int, help="k-grid points per side (default: automatic)")
    s.add_argument("--phantom", help="ground truth for error metrics")
    s.add_argument("--out", default="-")
    s.add_argument("--metrics", default="-")
    s.set_defaults(func=cmd_recon)

    s = sub.add_parser("tau", help="Beltrami-based transform samples")
    s.add_argument("--phantom", required=True)
    s.add_argument("--k-grid", default="8x8")
    s.add_argument("--R", type=float, default=6.0)
    s.add_argument("--n", type=int, default=256, help="spatial grid size")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_tau)

    s = sub.add_parser("study", help="convergence study along a monotone smoothing sequence")
    s.add_argument("--phantom", required=True)
    s.add_argument("--n", default="2,4,8,16,32")
    s.add_argument("--k", default="1+0i,0+1i,2+0i")
    s.add_argument("--N", type=int, default=16)
    s.add_argument("--n-boundary", type=int, default=256)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_study)

    s = sub.add_parser("dn", help="Dirichlet-to-Neumann matrix")
    s.add_argument("--phantom", required=True)
    s.add_argument("--N", type=int, default=8)
    s.add_argument("--n-boundary", type=int, default=256)
    s.add_argument("--difference", action="store_true", help="emit Lambda_sigma - Lambda_1")
    s.add_argument("--raw", action="store_true", help="uncorrected full map")
    s.add_argument("--json")
    s.add_argument("--csv", help="diagonal CSV (stdout when neither output is given)")
    s.set_defaults(func=cmd_dn)

    s = sub.add_parser("trace", help="CGO boundary trace as [re, im] pairs for n = -N..N")
    s.add_argument("--phantom", required=True)
    s.add_argument("--k", default="1+0i")
    s.add_argument("--N", type=int, default=16)
    s.add_argument("--n-boundary", type=int, default=256)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("kernel-table", help="build or load the cached g_1 table")
    s.add_argument("--path", default="g1_table.npz")
    s.add_argument("--rebuild", action="store_true")
    s.set_defaults(func=cmd_kernel_table)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    np.seterr(all="ignore")
    args.func(args)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
