"""``atlas`` command line: sweeps, boundaries, slicing, Morse/Reeb/fold/cusp reports, gallery.

Every command builds its outputs in memory first and then writes them with
atomic renames, so a failed run leaves no partial files behind.

Exit codes: 0 success, 2 usage/config/parse error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .config import ConfigError, config_from_file, parse_fixed
from .io import atomic_write_bytes, atomic_write_text, json_text

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


class NumericFailure(RuntimeError):
    pass


def _out_path(out, default) -> Path:
    return Path(out) if out else Path(default)


def _commit(files: dict) -> None:
    """Write ``{path: bytes}`` once everything has been computed."""
    for path, data in files.items():
        if isinstance(data, str):
            atomic_write_text(path, data)
        else:
            atomic_write_bytes(path, data)


def _svg(fig) -> bytes:
    from .plotting import _svg_bytes

    return _svg_bytes(fig)


def _read_mesh(path):
    from .geom.mesh import SurfaceMesh

    return SurfaceMesh.read_obj(path)


# -- commands ---------------------------------------------------------------


def cmd_sweep(args) -> int:
    from .plotting import grid_figure
    from .sweep.boundary import find_sc_boundary
    from .sweep.export import grid_metadata, grid_rgb, grid_to_csv, ppm_bytes
    from .sweep.grid import default_workers, sc_sweep

    overrides = {
        "model": args.model, "p1": args.p1, "p2": args.p2,
        "fixed": parse_fixed(args.fix) if args.fix else None,
        "rtol": args.rtol, "atol": args.atol, "max_step": args.max_step,
        "initial_policy": args.initial_policy, "workers": args.workers, "out": args.out,
        "t_transient": args.t_transient, "t_observe": args.t_observe,
    }
    cfg = config_from_file(args.config, overrides)
    workers = args.workers
    if workers is None:
        workers = default_workers() if os.environ.get("ATLAS_WORKERS") else cfg.workers
    grid = sc_sweep(cfg.model, cfg.p1, cfg.p2, cfg.fixed, cfg.sc, workers=workers)
    out = Path(cfg.out)
    per = grid.periodic
    top = int(grid.spikes[per].max()) if per.any() else 0
    lines = [ln for n in range(top) for ln in find_sc_boundary(grid, n)]
    meta = grid_metadata(grid)
    _commit({
        out / "grid.csv": grid_to_csv(grid),
        out / "grid.json": json_text(meta),
        out / "grid.ppm": ppm_bytes(grid_rgb(grid)),
        out / "grid.svg": _svg(grid_figure(grid, lines)),
    })
    print(f"sweep: {grid.shape[1]}x{grid.shape[0]} cells, {int(per.sum())} periodic, "
          f"max spikes {top}, {len(lines)} boundary curves -> {out}")
    return EXIT_OK


def cmd_boundary(args) -> int:
    from .geom.mesh import polylines_to_csv
    from .plotting import grid_figure
    from .sweep.boundary import find_sc_boundary
    from .sweep.export import read_grid

    grid = read_grid(args.grid)
    per = grid.periodic
    if args.n is not None:
        ns = [args.n]
    else:
        ns = range(int(grid.spikes[per].max()) if per.any() else 0)
    lines = [ln for n in ns for ln in find_sc_boundary(grid, n)]
    out = _out_path(args.out, Path(args.grid).with_name("boundary.csv"))
    files = {out: polylines_to_csv(lines, [f"n={','.join(str(n) for n in ns)}"])}
    files[out.with_suffix(".json")] = json_text(
        {"curves": [{"id": k, "n": ln.meta["n"], "closed": ln.closed,
                     "length": ln.length, "vertices": len(ln.points)}
                    for k, ln in enumerate(lines)]})
    if args.svg:
        files[out.with_suffix(".svg")] = _svg(grid_figure(grid, lines))
    _commit(files)
    print(f"boundary: {len(lines)} curves -> {out}")
    return EXIT_OK


def cmd_slice(args) -> int:
    from .geom.mesh import polylines_to_csv
    from .geom.slicing import slice_level
    from .plotting import polylines_figure

    mesh = _read_mesh(args.mesh)
    curves, rows = [], []
    for eps in args.eps:
        cs = slice_level(mesh, eps, axis=args.axis)
        rows.append({"eps": eps, "components": len(cs),
                     "closed": [c.closed for c in cs]})
        curves.extend(cs)
    out = _out_path(args.out, "slices.csv")
    files = {out: polylines_to_csv(curves, [f"eps={','.join(repr(e) for e in args.eps)}"]),
             out.with_suffix(".json"): json_text({"levels": rows})}
    if args.svg:
        axes = tuple(k for k in range(3) if k != args.axis)
        files[out.with_suffix(".svg")] = _svg(polylines_figure(curves, axes, "level sets"))
    _commit(files)
    print(f"slice: {len(curves)} components at {len(args.eps)} levels -> {out}")
    return EXIT_OK


def cmd_morse(args) -> int:
    from .geom.morse import degenerate_vertices, morse_counts, morse_sum, pl_critical_points

    mesh = _read_mesh(args.mesh)
    pts = pl_critical_points(mesh, axis=args.axis)
    report = {
        "mesh": {"vertices": len(mesh.vertices), "faces": mesh.n_faces,
                 "euler_characteristic": mesh.euler_characteristic(),
                 "median_edge": mesh.median_edge_length()},
        "critical_points": [p.to_dict() for p in sorted(pts, key=lambda p: p.height)],
        "counts": morse_counts(pts),
        "morse_sum": morse_sum(pts),
        "degenerate_vertices": [int(v) for v in degenerate_vertices(mesh, args.axis)],
    }
    out = _out_path(args.out, "morse.json")
    _commit({out: json_text(report)})
    c = report["counts"]
    print(f"morse: {c['min']} min, {c['saddle']} saddle, {c['max']} max "
          f"(sum {report['morse_sum']}) -> {out}")
    return EXIT_OK


def cmd_reeb(args) -> int:
    from .geom.mesh import read_polylines
    from .geom.reeb import build_reeb, classify_topology, default_samples

    mesh = _read_mesh(args.mesh)
    codim2 = read_polylines(args.codim2) if args.codim2 else None
    samples = default_samples(mesh, args.samples, axis=args.axis)
    g = build_reeb(mesh, samples, axis=args.axis, refine=args.refine)
    topo = classify_topology(g, codim2)
    report = {"graph": g.to_dict(), "topology": topo.to_dict(),
              "events": {k: [n.eps for n in g.events(k)]
                         for k in ("birth", "death", "merge", "split")}}
    out = _out_path(args.out, "reeb.json")
    _commit({out: json_text(report)})
    print(f"reeb: {len(g.nodes)} events, topology {topo.name} -> {out}")
    return EXIT_OK


def cmd_folds(args) -> int:
    from .geom.folds import classify_folds, curve_folds
    from .geom.mesh import read_polylines

    curves = read_polylines(args.curves)
    mesh = _read_mesh(args.mesh) if args.mesh else None
    rows = []
    for k, c in enumerate(curves):
        fs = curve_folds(c, axis=args.axis)
        if mesh is not None:
            fs = classify_folds(fs, mesh, args.delta_vis)
        rows.append({"curve_id": k, "folds": [f.to_dict() for f in fs]})
    out = _out_path(args.out, "folds.json")
    _commit({out: json_text({"curves": rows})})
    print(f"folds: {sum(len(r['folds']) for r in rows)} folds on {len(rows)} curves -> {out}")
    return EXIT_OK


def cmd_cusp(args) -> int:
    from .gallery.surfaces import AnalyticSurface
    from .geom.implicit import count_roots_line, cusp_discriminant, fold_set_implicit
    from .geom.mesh import polylines_to_csv
    from .plotting import polylines_figure

    surf = AnalyticSurface("cusp")
    fs = fold_set_implicit(surf, surf.box, resolution=args.resolution, grad=surf.gradient)
    disc = [float(np.max(np.abs(cusp_discriminant(p[:, 0], p[:, 1], surf.box))))
            for p in fs.projected]
    report = {"fold_set": fs.to_dict(), "max_discriminant": max(disc, default=0.0)}
    if args.roots:
        e1, e2 = args.roots
        report["roots"] = count_roots_line(surf, e1, e2).to_dict()
    out = _out_path(args.out, "cusp.json")
    files = {out: json_text(report),
             out.with_suffix(".csv"): polylines_to_csv(fs.curves, ["fold curves of the cusp"])}
    if args.svg:
        files[out.with_suffix(".svg")] = _svg(polylines_figure(fs.curves, (1, 2), "fold set"))
    _commit(files)
    print(f"cusp: {len(fs.curves)} fold curves, {len(fs.cusps)} cusps -> {out}")
    return EXIT_OK


def cmd_gallery(args) -> int:
    from .gallery.catalog import gallery_mesh
    from .gallery.curves import CURVE_KINDS, synthetic_codim2
    from .geom.mesh import polylines_to_csv

    if args.curve:
        if args.curve not in CURVE_KINDS:
            raise ConfigError(f"unknown curve kind {args.curve!r}")
        c = synthetic_codim2(args.curve)
        out = _out_path(args.out, f"{args.curve}.csv")
        _commit({out: polylines_to_csv([c], [f"kind={args.curve}"])})
        print(f"gallery: curve {args.curve}, {len(c.points)} vertices -> {out}")
        return EXIT_OK
    if not args.kind:
        raise ConfigError("gallery needs a surface KIND or --curve KIND")
    mesh = gallery_mesh(args.kind, args.resolution)
    out = _out_path(args.out, f"{args.kind}.obj")
    _commit({out: mesh.to_obj_text()})
    print(f"gallery: {args.kind}, {len(mesh.vertices)} vertices, {mesh.n_faces} faces, "
          f"area {mesh.area():.6g} -> {out}")
    return EXIT_OK


def cmd_models(args) -> int:
    from .localbif.equilibria import fhn_equilibria, hr_equilibria
    from .odecore.models import PARAM_TYPES

    if args.model is None:
        for name, cls in PARAM_TYPES.items():
            defaults = ", ".join(f"{f.name}={f.default!r}" for f in fields(cls))
            print(f"{name}: {defaults}")
        return EXIT_OK
    if args.model not in ("hr", "fhn"):
        raise ConfigError("equilibria are available for 'hr' and 'fhn'")
    p = PARAM_TYPES[args.model](**parse_fixed(args.fix))
    eq = hr_equilibria(p) if args.model == "hr" else fhn_equilibria(p)
    text = json_text({"model": args.model, "params": asdict(p),
                      "equilibria": [e.to_dict() for e in eq]})
    if args.out:
        _commit({Path(args.out): text})
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="atlas", description=(
        "Spike-counting sweeps of slow-fast models and geometric analysis of "
        "bifurcation surfaces."))
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="spike-counting sweep over a parameter slice")
    s.add_argument("--config", help="TOML file with [sweep], [integrator], [analysis]")
    s.add_argument("--model", choices=("hr", "fhn"))
    s.add_argument("--p1", help="first axis name:lo:hi:n (varies fastest)")
    s.add_argument("--p2", help="second axis name:lo:hi:n")
    s.add_argument("--fix", action="append", metavar="NAME=VALUE", help="fixed parameter")
    s.add_argument("--rtol", type=float)
    s.add_argument("--atol", type=float)
    s.add_argument("--max-step", type=float)
    s.add_argument("--t-transient", type=float)
    s.add_argument("--t-observe", type=float)
    s.add_argument("--initial-policy", choices=("fixed", "continuation"))
    s.add_argument("--workers", type=int, help="thread count (default: ATLAS_WORKERS or all cores)")
    s.add_argument("--out", help="output directory")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("boundary", help="n|n+1 spike-count boundaries of a grid CSV")
    b.add_argument("grid")
    b.add_argument("--n", type=int, help="only the n|n+1 boundary (default: all)")
    b.add_argument("--out")
    b.add_argument("--svg", action="store_true", help="also render the grid with boundaries")
    b.set_defaults(func=cmd_boundary)

    sl = sub.add_parser("slice", help="level sets of an OBJ mesh")
    sl.add_argument("mesh")
    sl.add_argument("--eps", type=float, nargs="+", required=True)
    sl.add_argument("--axis", type=int, default=2, choices=(0, 1, 2))
    sl.add_argument("--out")
    sl.add_argument("--svg", action="store_true")
    sl.set_defaults(func=cmd_slice)

    m = sub.add_parser("morse", help="PL Morse critical points of the height")
    m.add_argument("mesh")
    m.add_argument("--axis", type=int, default=2, choices=(0, 1, 2))
    m.add_argument("--out")
    m.set_defaults(func=cmd_morse)

    r = sub.add_parser("reeb", help="Reeb graph of the height and its topology class")
    r.add_argument("mesh")
    r.add_argument("--samples", type=int, default=41)
    r.add_argument("--refine", type=float, default=1e-3)
    r.add_argument("--codim2", help="polyline CSV of codimension-two curves")
    r.add_argument("--axis", type=int, default=2, choices=(0, 1, 2))
    r.add_argument("--out")
    r.set_defaults(func=cmd_reeb)

    f = sub.add_parser("folds", help="height extrema along polylines")
    f.add_argument("curves")
    f.add_argument("--mesh", help="OBJ with sharp-fold lines, for visibility")
    f.add_argument("--delta-vis", type=float)
    f.add_argument("--axis", type=int, default=2, choices=(0, 1, 2))
    f.add_argument("--out")
    f.set_defaults(func=cmd_folds)

    c = sub.add_parser("cusp", help="fold set and cusps of the cusp normal form")
    c.add_argument("--resolution", type=int, default=40)
    c.add_argument("--roots", type=float, nargs=2, metavar=("EPS1", "EPS2"))
    c.add_argument("--out")
    c.add_argument("--svg", action="store_true")
    c.set_defaults(func=cmd_cusp)

    g = sub.add_parser("gallery", help="write a gallery mesh (OBJ) or curve (CSV)")
    g.add_argument("kind", nargs="?")
    g.add_argument("--curve", help="synthetic codimension-two curve kind")
    g.add_argument("--resolution", type=int)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gallery)

    mo = sub.add_parser("models", help="list models, or equilibria of one model")
    mo.add_argument("--model")
    mo.add_argument("--fix", action="append", metavar="NAME=VALUE")
    mo.add_argument("--out")
    mo.set_defaults(func=cmd_models)
    return ap


def main(argv=None) -> int:
    from .geom.mesh import MeshFormatError
    from .geom.morse import TiePerturbationError
    from .localbif.continuation import ContinuationError
    from .odecore.integrator import IntegrationError

    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MeshFormatError) as exc:
        print(f"atlas: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"atlas: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (IntegrationError, TiePerturbationError, ContinuationError, FloatingPointError,
            np.linalg.LinAlgError, NumericFailure) as exc:
        print(f"atlas: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"atlas: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
