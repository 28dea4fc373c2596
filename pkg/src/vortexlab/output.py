"""Artifact writers: trajectory and conserved-quantity CSV, classification JSON, SVG figures.

Floats are written with 17 significant digits so that every value round-trips
exactly; lines end in LF.  All files are written atomically (temporary file in
the target directory, then ``os.replace``).
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from html import escape
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .conserved import momentum_columns
from .geometry import TWO_PI, Geometry, canonicalize_torus, poincare_disk, spherical_coordinates
from .integrators import Trajectory

# one color per vortex, cycled for large N
PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#ff7f0e",
    "#9467bd",
    "#8c564b",
    "#e377c2",
    "#17becf",
    "#7f7f7f",
    "#bcbd22",
)
MAX_POINTS_PER_VORTEX = 4000


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def atomic_write(path, data: str | bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    raw = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _coordinate_names(geometry: Geometry, n: int) -> list[str]:
    axes = ("x", "y", "z")[: geometry.dim]
    return [f"{a}{i + 1}" for i in range(n) for a in axes]


def trajectory_csv(traj: Trajectory) -> str:
    """``t, x1, y1[, z1], ...`` with one row per recorded sample; torus rows are canonicalized."""
    pos = traj.positions
    if traj.geometry is Geometry.TORUS:
        pos = canonicalize_torus(pos)
    n = pos.shape[1]
    lines = [",".join(["t"] + _coordinate_names(traj.geometry, n))]
    flat = pos.reshape(len(traj), -1)
    for t, row in zip(traj.times, flat):
        lines.append(",".join([fmt(t)] + [fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def conserved_csv(traj: Trajectory) -> str:
    lines = [",".join(["t", "H"] + momentum_columns(traj.geometry) + ["circulation"])]
    for t, d in zip(traj.times, traj.diagnostics):
        lines.append(",".join([fmt(t), fmt(d.energy)] + [fmt(v) for v in d.momentum] + [fmt(d.circulation)]))
    return "\n".join(lines) + "\n"


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    if hasattr(value, "value") and not isinstance(value, (int, str)):
        return value.value
    return value


def classification_json(report, **context) -> str:
    """Classification report with its thresholds, plus any run context."""
    doc = report.to_dict()
    doc.update(context)
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------


def project_for_plot(geometry: Geometry, positions: NDArray) -> tuple[NDArray, NDArray]:
    """2-D plot coordinates ``(n_samples, N, 2)`` and a mask of segments to draw.

    ``keep[k, i]`` is False when the segment from sample ``k`` to ``k + 1`` of
    vortex ``i`` crosses the azimuth branch cut (sphere) or a periodic
    boundary (torus); the renderer starts a new polyline there.
    """
    geometry = Geometry.parse(geometry)
    if geometry is Geometry.SPHERE:
        xy = spherical_coordinates(positions)
        jump = np.abs(np.diff(xy[..., 0], axis=0)) > np.pi
    elif geometry is Geometry.HYPERBOLIC:
        xy = poincare_disk(positions)
        r = np.linalg.norm(xy, axis=-1)
        if not np.all(r < 1.0):
            raise ValueError("Poincare disk image left the unit disk")
        jump = np.zeros(xy.shape[:-1], dtype=bool)[:-1]
    elif geometry is Geometry.TORUS:
        xy = canonicalize_torus(positions)
        jump = np.any(np.abs(np.diff(xy, axis=0)) > np.pi, axis=-1)
    else:
        xy = np.asarray(positions, dtype=float)
        jump = np.zeros(xy.shape[:-1], dtype=bool)[:-1]
    return xy, ~jump


def _frame(geometry: Geometry, xy: NDArray) -> tuple[float, float, float, float]:
    if geometry is Geometry.SPHERE:
        return -np.pi, np.pi, 0.0, np.pi
    if geometry is Geometry.HYPERBOLIC:
        return -1.0, 1.0, -1.0, 1.0
    if geometry is Geometry.TORUS:
        return 0.0, TWO_PI, 0.0, TWO_PI
    lo = xy.reshape(-1, 2).min(axis=0)
    hi = xy.reshape(-1, 2).max(axis=0)
    span = max(float(np.max(hi - lo)), 1e-9)
    mid = 0.5 * (lo + hi)
    half = 0.55 * span
    return mid[0] - half, mid[0] + half, mid[1] - half, mid[1] + half


def _runs(mask: NDArray) -> list[tuple[int, int]]:
    """Index ranges ``[a, b]`` of samples joined by drawable segments."""
    runs, start = [], 0
    for k, ok in enumerate(mask):
        if not ok:
            runs.append((start, k))
            start = k + 1
    runs.append((start, len(mask)))
    return runs


def render_svg(
    traj: Trajectory,
    *,
    title: str = "",
    metadata: dict | None = None,
    size: int = 480,
) -> str:
    """Static SVG 1.1 figure with one colored polyline per vortex trajectory.

    Sphere trajectories are drawn in (azimuth, colatitude) with azimuth in
    ``(-pi, pi]`` along the horizontal axis and colatitude increasing
    downwards; hyperbolic ones in the Poincaré disk; torus ones on the square
    ``[0, 2 pi)^2``; planar ones in an autoscaled square.  A dot marks each
    vortex's initial position.
    """
    geometry = traj.geometry
    stride = max(1, int(math.ceil(len(traj) / MAX_POINTS_PER_VORTEX)))
    idx = np.arange(0, len(traj), stride)
    if idx[-1] != len(traj) - 1:
        idx = np.append(idx, len(traj) - 1)
    xy, keep = project_for_plot(geometry, traj.positions[idx])
    x0, x1, y0, y1 = _frame(geometry, xy)
    pad = 24
    scale = (size - 2 * pad) / max(x1 - x0, y1 - y0)

    def sx(x):
        return pad + (x - x0) * scale

    def sy(y):
        # sphere colatitude grows downwards, everything else upwards
        if geometry is Geometry.SPHERE:
            return pad + (y - y0) * scale
        return size - pad - (y - y0) * scale

    out = [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f"<title>{escape(title or geometry.value)}</title>",
    ]
    meta = {"geometry": geometry.value, "n": int(traj.positions.shape[1]), "status": traj.status.value}
    meta.update(metadata or {})
    out.append(f"<metadata>{escape(json.dumps(_jsonable(meta), sort_keys=True))}</metadata>")
    out.append(f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>')
    if geometry is Geometry.HYPERBOLIC:
        c = sx(0.0)
        out.append(f'<circle cx="{c:.2f}" cy="{sy(0.0):.2f}" r="{scale:.2f}" fill="none" stroke="black" stroke-width="1"/>')
    else:
        out.append(
            f'<rect x="{sx(x0):.2f}" y="{min(sy(y0), sy(y1)):.2f}" width="{(x1 - x0) * scale:.2f}" '
            f'height="{(y1 - y0) * scale:.2f}" fill="none" stroke="black" stroke-width="1"/>'
        )
    for i in range(xy.shape[1]):
        color = PALETTE[i % len(PALETTE)]
        for a, b in _runs(keep[:, i]):
            if b <= a:
                continue
            pts = " ".join(f"{sx(p[0]):.2f},{sy(p[1]):.2f}" for p in xy[a : b + 1, i])
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1"/>')
        out.append(f'<circle cx="{sx(xy[0, i, 0]):.2f}" cy="{sy(xy[0, i, 1]):.2f}" r="3" fill="{color}"/>')
    if title:
        out.append(f'<text x="{pad}" y="{pad - 8}" font-family="sans-serif" font-size="12">{escape(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
