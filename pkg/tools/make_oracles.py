"""Regenerate the frozen reference values in tests/data/oracles.json.

The orbit references use scipy's DOP853 with a hand-written vector field, so
they share no code with atlas.odecore.  Sweep facts are read from reference
sweeps saved as .npz files (``--sweep-dir``), produced by ``sc_sweep`` at
rtol 1e-12 and at the default tolerance for the two eps values.

    python tools/make_oracles.py --sweep-dir /tmp
"""

import argparse
import json
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp


def hr(t, u, b, I, eps, a=1.0, c=1.0, d=5.0, s=4.0, x0=-1.6):
    x, y, z = u
    return [y - a * x**3 + b * x**2 - z + I, c - d * x**2 - y, eps * (s * (x - x0) - z)]


def hr_orbit(b, I, eps, y0, t1, dense=False):
    return solve_ivp(hr, (0.0, t1), y0, method="DOP853", rtol=1e-13, atol=1e-14,
                     args=(b, I, eps), dense_output=dense, max_step=0.1)


def upcrossings(sol, t_lo, t_hi, n=400_000):
    t = np.linspace(t_lo, t_hi, n)
    x = sol.sol(t)[0]
    return int(np.sum((x[:-1] < 0) & (x[1:] >= 0)))


def sweep_facts(sweep_dir):
    from atlas.sweep.boundary import count_boundary_components
    from atlas.sweep.export import grid_rgb
    from atlas.sweep.grid import Axis, SpikeGrid

    out = {}
    a1, a2 = Axis("b", 2.5, 3.5, 101), Axis("I", 1.0, 6.0, 101)
    for name, eps in (("grid_0.018_101_tol1e-12.npz", 0.018), ("grid_0.018_101.npz", 0.018),
                      ("grid_0.08_101.npz", 0.08)):
        path = Path(sweep_dir) / name
        if not path.exists():
            continue
        d = np.load(path)
        g = SpikeGrid("hr", a1, a2, {"eps": eps}, d["c"], d["s"], d["p"])
        per = g.periodic
        counts = sorted(int(v) for v in np.unique(g.spikes[per]) if v > 0)
        img = grid_rgb(g).reshape(-1, 3)
        out[name.removesuffix(".npz")] = {
            "eps": eps,
            "periodic_cells": int(per.sum()),
            "distinct_positive_counts": len(counts),
            "ppm_colors": len({tuple(c) for c in img}),
            "boundary_components": count_boundary_components(g),
        }
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sweep-dir", default=None)
    ap.add_argument("--out", default=str(Path(__file__).parents[1] / "tests/data/oracles.json"))
    args = ap.parse_args()

    ref = {}
    sol = hr_orbit(3.0, 2.0, 0.018, [0.0, 0.0, 0.0], 2000.0)
    ref["hr_final_state"] = {"b": 3.0, "I": 2.0, "eps": 0.018, "initial": [0, 0, 0],
                             "t": 2000.0, "state": sol.y[:, -1].tolist()}

    # spike count: up-crossings per period after a doubled transient
    sol = hr_orbit(3.0, 2.0, 0.018, [-1.6, 4.0, 0.0], 6000.0, dense=True)
    t = np.linspace(2000.0, 6000.0, 2_000_001)
    x = sol.sol(t)[0]
    i = np.nonzero((x[:-1] < 0) & (x[1:] >= 0))[0]
    ups = t[i] - x[i] * (t[i + 1] - t[i]) / (x[i + 1] - x[i])
    # a period is the smallest lag after which the crossing-time sequence repeats
    gaps = np.diff(ups)
    for k in range(1, 65):
        if np.allclose(gaps[k:], gaps[:-k], atol=1e-3):
            break
    else:
        raise RuntimeError("reference orbit is not periodic within 64 spikes")
    ref["hr_reference_cell"] = {"b": 3.0, "I": 2.0, "eps": 0.018, "class": "periodic",
                                "spikes": k, "period": float(np.sum(gaps[-k:]))}

    burst = {}
    for b, I in ((3.0, 3.0), (2.8, 3.2), (3.2, 4.0)):
        s = hr_orbit(b, I, 0.018, [-1.6, 4.0, 0.0], 1500.0, dense=True)
        burst[f"{b},{I}"] = upcrossings(s, 1000.0, 1500.0)
    ref["hr_burst_upcrossings"] = {"eps": 0.018, "initial": [-1.6, 4.0, 0.0],
                                   "window": [1000.0, 1500.0], "counts": burst}
    if args.sweep_dir:
        ref["sweeps"] = sweep_facts(args.sweep_dir)
        pinned = Path(args.sweep_dir) / "grid_0.018_101_tol1e-12.npz"
        if pinned.exists():
            d = np.load(pinned)
            np.savez_compressed(Path(args.out).with_name("hr_ref_tol1e-12.npz"),
                                classes=d["c"], spikes=d["s"])
    Path(args.out).write_text(json.dumps(ref, indent=2, sort_keys=True) + "\n")
    print(json.dumps(ref, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
