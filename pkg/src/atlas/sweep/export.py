"""Sweep exports: grid CSV (+ JSON sidecar), binary PPM, colour palette."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..io import atomic_write_bytes, atomic_write_text
from .grid import Axis, SpikeGrid
from .spikes import SpikeClass

# blue (0 spikes) -> cyan -> green -> yellow -> orange -> brown (many spikes)
_ANCHORS = np.array(
    [
        [20, 40, 160],
        [40, 150, 220],
        [60, 180, 90],
        [230, 220, 60],
        [235, 140, 40],
        [150, 80, 30],
    ],
    dtype=float,
)
UNRESOLVED_RGB = (60, 30, 10)
BLOWUP_RGB = (0, 0, 0)


def spike_color(spikes: int, top: int) -> tuple[int, int, int]:
    frac = 0.0 if top <= 0 else min(max(spikes, 0), top) / top
    pos = frac * (len(_ANCHORS) - 1)
    k = min(int(pos), len(_ANCHORS) - 2)
    w = pos - k
    rgb = (1 - w) * _ANCHORS[k] + w * _ANCHORS[k + 1]
    return tuple(int(round(c)) for c in rgb)


def grid_rgb(grid: SpikeGrid) -> np.ndarray:
    """RGB image, row 0 at the top (largest axis2 value)."""
    per = grid.periodic
    top = int(grid.spikes[per].max()) if per.any() else 1
    n2, n1 = grid.shape
    img = np.zeros((n2, n1, 3), dtype=np.uint8)
    for j in range(n2):
        for i in range(n1):
            cls = grid.classes[j, i]
            if cls == SpikeClass.UNRESOLVED.code:
                rgb = UNRESOLVED_RGB
            elif cls == SpikeClass.BLOWUP.code:
                rgb = BLOWUP_RGB
            else:
                rgb = spike_color(int(grid.spikes[j, i]), top)
            img[n2 - 1 - j, i] = rgb
    return img


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img, np.uint8).tobytes()


def write_ppm(path, grid: SpikeGrid) -> None:
    atomic_write_bytes(path, ppm_bytes(grid_rgb(grid)))


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not a binary 8-bit PPM")
    w, h = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


def grid_to_csv(grid: SpikeGrid) -> str:
    buf = io.StringIO()
    buf.write("p1,p2,class,spikes,period\n")
    x, y = grid.axis1.centers, grid.axis2.centers
    for j in range(grid.shape[0]):
        for i in range(grid.shape[1]):
            token = SpikeClass.from_code(grid.classes[j, i]).token
            buf.write(
                f"{x[i]:.17g},{y[j]:.17g},{token},{int(grid.spikes[j, i])},"
                f"{float(grid.periods[j, i]):.17g}\n"
            )
    return buf.getvalue()


def grid_metadata(grid: SpikeGrid) -> dict:
    ax = lambda a: {"name": a.name, "lo": a.lo, "hi": a.hi, "n": a.n}  # noqa: E731
    return {"model": grid.model, "axis1": ax(grid.axis1), "axis2": ax(grid.axis2),
            "fixed": grid.fixed, "meta": grid.meta}


def write_grid(path, grid: SpikeGrid) -> None:
    """Write ``path`` (CSV) and ``path`` with suffix ``.json`` (axes, fixed params)."""
    path = Path(path)
    atomic_write_text(path, grid_to_csv(grid))
    atomic_write_text(path.with_suffix(".json"),
                      json.dumps(grid_metadata(grid), indent=2, sort_keys=True) + "\n")


def _infer_axis(name: str, centers: np.ndarray) -> Axis:
    step = (centers[-1] - centers[0]) / (len(centers) - 1)
    return Axis(name, float(centers[0] - step / 2), float(centers[-1] + step / 2), len(centers))


def read_grid(path, eps: float | None = None) -> SpikeGrid:
    """Read a grid CSV; axis metadata comes from the JSON sidecar when present."""
    path = Path(path)
    rows = list(csv.DictReader(path.read_text(encoding="utf-8").splitlines()))
    if not rows or set(rows[0]) != {"p1", "p2", "class", "spikes", "period"}:
        raise ValueError(f"{path}: not a sweep grid CSV")
    p1 = np.array([float(r["p1"]) for r in rows])
    p2 = np.array([float(r["p2"]) for r in rows])
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        a1 = Axis(**meta["axis1"])
        a2 = Axis(**meta["axis2"])
        model, fixed, extra = meta["model"], meta["fixed"], meta.get("meta", {})
    else:
        a1 = _infer_axis("p1", np.unique(p1))
        a2 = _infer_axis("p2", np.unique(p2))
        model, fixed, extra = "hr", {}, {}
    if eps is not None:
        fixed = {**fixed, "eps": eps}
    if len(rows) != a1.n * a2.n:
        raise ValueError(f"{path}: expected {a1.n * a2.n} rows, found {len(rows)}")
    cls = np.array([SpikeClass.from_token(r["class"]).code for r in rows]).reshape(a2.n, a1.n)
    spk = np.array([int(r["spikes"]) for r in rows]).reshape(a2.n, a1.n)
    per = np.array([float(r["period"]) for r in rows]).reshape(a2.n, a1.n)
    return SpikeGrid(model, a1, a2, fixed, cls, spk, per, meta=extra)
