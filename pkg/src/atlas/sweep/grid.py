"""Spike-counting sweeps over a two-parameter slice."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..odecore.models import PARAM_TYPES, _params_array, model_code
from .spikes import SCConfig, SpikeClass, SpikeCountResult, spike_kernel


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or self.hi <= self.lo:
            raise ValueError(f"axis {self.name!r}: need finite lo < hi")
        if self.n < 2:
            raise ValueError(f"axis {self.name!r}: need at least 2 cells")

    @property
    def centers(self) -> np.ndarray:
        """Cell-centre sample positions."""
        step = (self.hi - self.lo) / self.n
        return self.lo + (np.arange(self.n) + 0.5) * step


@dataclass(frozen=True)
class SpikeGrid:
    """Immutable per-cell results of a sweep.

    Arrays are indexed ``[j, i]`` with ``j`` along ``axis2`` and ``i`` along
    ``axis1``; row-major order means ``axis1`` varies fastest.
    """

    model: str
    axis1: Axis
    axis2: Axis
    fixed: dict
    classes: np.ndarray
    spikes: np.ndarray
    periods: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = (self.axis2.n, self.axis1.n)
        for arr in (self.classes, self.spikes, self.periods):
            if arr.shape != shape:
                raise ValueError(f"grid arrays must have shape {shape}")
            arr.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.classes.shape

    @property
    def eps(self) -> float:
        return float(self.fixed.get("eps", 0.0))

    def cell(self, j: int, i: int) -> SpikeCountResult:
        return SpikeCountResult(
            SpikeClass.from_code(self.classes[j, i]),
            int(self.spikes[j, i]),
            float(self.periods[j, i]),
        )

    def cell_params(self, j: int, i: int):
        return _cell_params(self.model, self.fixed, self.axis1, self.axis2, j, i)

    @property
    def periodic(self) -> np.ndarray:
        return self.classes == SpikeClass.PERIODIC.code

    def equals(self, other: "SpikeGrid") -> bool:
        """Bit-level equality of all cell data."""
        return (
            self.axis1 == other.axis1
            and self.axis2 == other.axis2
            and np.array_equal(self.classes, other.classes)
            and np.array_equal(self.spikes, other.spikes)
            and self.periods.tobytes() == other.periods.tobytes()
        )


def _cell_params(model, fixed, axis1, axis2, j, i):
    kw = dict(fixed)
    kw[axis1.name] = float(axis1.centers[i])
    kw[axis2.name] = float(axis2.centers[j])
    return PARAM_TYPES[model](**kw)


@njit(cache=True, nogil=True)
def _run_cells(code, P, Y0, idx, t_tr, t_obs, x_th, dret, nmax, rtol, atol, hmax,
               chain, out_cls, out_spk, out_per):
    y = Y0[idx[0]].copy()
    for c in idx:
        if not chain:
            y = Y0[c].copy()
        cls, spk, per, yend = spike_kernel(
            code, P[c], y, t_tr, t_obs, x_th, dret, nmax, rtol, atol, hmax
        )
        out_cls[c] = cls
        out_spk[c] = spk
        out_per[c] = per
        if chain:
            if cls == 3:
                y = Y0[c].copy()
            else:
                y = yend.copy()


def default_workers() -> int:
    env = os.environ.get("ATLAS_WORKERS")
    if env:
        w = int(env)
        if w < 1:
            raise ValueError("ATLAS_WORKERS must be >= 1")
        return w
    return os.cpu_count() or 1


def sc_sweep(model: str, axis1: Axis, axis2: Axis, fixed: dict | None = None,
             cfg: SCConfig | None = None, workers: int | None = None,
             order: np.ndarray | None = None) -> SpikeGrid:
    """Count spikes at every cell centre of the ``axis1 x axis2`` slice.

    Cells are independent tasks (rows are, under the ``continuation`` initial
    policy) and results are stored positionally, so the grid does not depend
    on ``workers`` or on ``order``, an optional permutation of cell (or row)
    evaluation order.
    """
    cfg = cfg or SCConfig()
    fixed = dict(fixed or {})
    for name in (axis1.name, axis2.name):
        fixed.pop(name, None)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    code = model_code(model)
    n1, n2 = axis1.n, axis2.n
    ncell = n1 * n2
    P = np.stack(
        [_params_array(_cell_params(model, fixed, axis1, axis2, j, i))
         for j in range(n2) for i in range(n1)]
    )
    Y0 = np.tile(np.asarray(cfg.initial, dtype=np.float64), (ncell, 1))
    out_cls = np.zeros(ncell, dtype=np.int64)
    out_spk = np.zeros(ncell, dtype=np.int64)
    out_per = np.zeros(ncell, dtype=np.float64)
    ic = cfg.integrator
    chain = cfg.initial_policy == "continuation"

    if chain:
        tasks = [np.arange(j * n1, (j + 1) * n1) for j in range(n2)]
    else:
        tasks = [np.array([c]) for c in range(ncell)]
    if order is not None:
        tasks = [tasks[k] for k in np.asarray(order)]
    if not chain:
        # batch single cells to keep per-call overhead small
        flat = np.concatenate(tasks)
        nb = max(1, min(len(flat), 4 * workers))
        tasks = [b for b in np.array_split(flat, nb) if b.size]

    def run(idx):
        _run_cells(code, P, Y0, idx, cfg.t_transient, cfg.t_observe, cfg.threshold,
                   cfg.delta_ret, cfg.n_max, ic.rtol, ic.atol, ic.max_step, chain,
                   out_cls, out_spk, out_per)

    if workers == 1:
        for idx in tasks:
            run(idx)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, tasks))

    return SpikeGrid(
        model=model, axis1=axis1, axis2=axis2, fixed=fixed,
        classes=out_cls.reshape(n2, n1), spikes=out_spk.reshape(n2, n1),
        periods=out_per.reshape(n2, n1),
        meta={"rtol": ic.rtol, "atol": ic.atol, "t_transient": cfg.t_transient,
              "t_observe": cfg.t_observe, "initial_policy": cfg.initial_policy},
    )
