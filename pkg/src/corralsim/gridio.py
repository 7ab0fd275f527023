"""Rectangular data grids over the corral bounding box, with CSV and PGM export.

A HistogramGrid partitions [x0, x1] x [y0, y1] into nx * ny equal cells.
Cells are half-open [lo, hi) in each axis except the last cell, which is
closed, so a point on an interior edge lands in exactly one cell.  values is
indexed [iy, ix] with iy counting up from y0; `kind` distinguishes occupancy
counts, per-cell mean displacement (NaN marks never-visited cells, which is
not the same as a measured zero), and sampled field values.

CSV layout: two comment lines (format tag, then grid metadata), a column
header, then one row per cell in row-major order (iy outer, ix inner) with
x,y at the cell center.  NaN values are written as empty fields.  All floats
use 17 significant digits so identical grids produce byte-identical files.

PGM export is binary P5 with an affine value-to-gray map recorded in a
sidecar text file.  Count grids clip at a saturation level before mapping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

GRID_FORMAT_TAG = "corralsim grid v1"

KINDS = ("counts", "mean_displacement", "field")


class GridFormatError(ValueError):
    """Malformed grid CSV; carries the 1-based offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _fmt(v: float) -> str:
    return f"{v:.17g}"


@dataclass
class HistogramGrid:
    nx: int
    ny: int
    bounds: tuple[float, float, float, float]   # (x0, x1, y0, y1)
    values: np.ndarray                          # shape (ny, nx)
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        self.values = np.asarray(self.values)
        if self.values.shape != (self.ny, self.nx):
            raise ValueError(
                f"values shape {self.values.shape} != (ny={self.ny}, nx={self.nx})"
            )
        x0, x1, y0, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate bounds {self.bounds}")

    @property
    def cell_width(self) -> float:
        return (self.bounds[1] - self.bounds[0]) / self.nx

    @property
    def cell_height(self) -> float:
        return (self.bounds[3] - self.bounds[2]) / self.ny

    def centers_x(self) -> np.ndarray:
        x0 = self.bounds[0]
        return x0 + (np.arange(self.nx) + 0.5) * self.cell_width

    def centers_y(self) -> np.ndarray:
        y0 = self.bounds[2]
        return y0 + (np.arange(self.ny) + 0.5) * self.cell_height

    def bin_index(self, x: float, y: float) -> tuple[int, int]:
        """Cell (ix, iy) containing the point; last cell closed on top."""
        x0, x1, y0, y1 = self.bounds
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            raise ValueError(f"point ({x}, {y}) outside grid bounds {self.bounds}")
        ix = min(int((x - x0) / self.cell_width), self.nx - 1)
        iy = min(int((y - y0) / self.cell_height), self.ny - 1)
        return ix, iy


def bin_indices(grid: HistogramGrid, x: np.ndarray, y: np.ndarray):
    """Vectorized bin_index for points known to lie inside the bounds."""
    x0, _, y0, _ = grid.bounds
    ix = np.minimum(((x - x0) / grid.cell_width).astype(np.int64), grid.nx - 1)
    iy = np.minimum(((y - y0) / grid.cell_height).astype(np.int64), grid.ny - 1)
    return ix, iy


def write_grid_csv(grid: HistogramGrid, path) -> None:
    x0, x1, y0, y1 = grid.bounds
    xs = grid.centers_x()
    ys = grid.centers_y()
    lines = [
        f"# {GRID_FORMAT_TAG}",
        f"# kind={grid.kind} nx={grid.nx} ny={grid.ny} "
        f"x0={_fmt(x0)} x1={_fmt(x1)} y0={_fmt(y0)} y1={_fmt(y1)}",
        "x,y,value",
    ]
    vals = grid.values
    is_float = vals.dtype.kind == "f"
    for iy in range(grid.ny):
        ystr = _fmt(ys[iy])
        row = vals[iy]
        for ix in range(grid.nx):
            v = float(row[ix])
            cell = "" if is_float and math.isnan(v) else _fmt(v)
            lines.append(f"{_fmt(xs[ix])},{ystr},{cell}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_csv(path) -> HistogramGrid:
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# {GRID_FORMAT_TAG}":
        raise GridFormatError(f"missing format tag '# {GRID_FORMAT_TAG}'", 1)
    if len(lines) < 3:
        raise GridFormatError("truncated header", len(lines))
    meta: dict[str, str] = {}
    for tok in lines[1].lstrip("# ").split():
        if "=" not in tok:
            raise GridFormatError(f"bad metadata token {tok!r}", 2)
        k, v = tok.split("=", 1)
        meta[k] = v
    try:
        kind = meta["kind"]
        nx, ny = int(meta["nx"]), int(meta["ny"])
        bounds = (float(meta["x0"]), float(meta["x1"]),
                  float(meta["y0"]), float(meta["y1"]))
    except (KeyError, ValueError) as exc:
        raise GridFormatError(f"incomplete metadata: {exc}", 2) from None
    if lines[2].strip() != "x,y,value":
        raise GridFormatError("expected column header 'x,y,value'", 3)
    expected = nx * ny
    body = lines[3:]
    if len(body) < expected:
        raise GridFormatError(
            f"expected {expected} data rows, found {len(body)}", len(lines)
        )
    values = np.empty((ny, nx))
    for i in range(expected):
        lineno = i + 4
        parts = body[i].split(",")
        if len(parts) != 3:
            raise GridFormatError(f"expected 3 fields, found {len(parts)}", lineno)
        cell = parts[2].strip()
        try:
            values[i // nx, i % nx] = math.nan if cell == "" else float(cell)
        except ValueError:
            raise GridFormatError(f"bad value {cell!r}", lineno) from None
    if kind == "counts":
        values = values.astype(np.int64)
    return HistogramGrid(nx=nx, ny=ny, bounds=bounds, values=values, kind=kind)


def _gray_map(grid: HistogramGrid, saturation: int):
    """Affine value -> 0..255 map per grid kind; returns (pixels, vmin, vmax)."""
    vals = grid.values.astype(float)
    if grid.kind == "counts":
        vmin, vmax = 0.0, float(saturation)
        clipped = np.minimum(vals, vmax)
        gray = np.rint(255.0 * clipped / vmax) if vmax > 0 else np.zeros_like(vals)
    elif grid.kind == "mean_displacement":
        finite = vals[np.isfinite(vals)]
        vmin = 0.0
        vmax = float(finite.max()) if finite.size and finite.max() > 0 else 1.0
        gray = np.rint(255.0 * np.nan_to_num(vals, nan=0.0) / vmax)
    else:
        finite = vals[np.isfinite(vals)]
        vmin = float(finite.min()) if finite.size else 0.0
        vmax = float(finite.max()) if finite.size else 1.0
        if vmax == vmin:
            gray = np.full_like(vals, 128.0)
        else:
            gray = np.rint(255.0 * (np.nan_to_num(vals, nan=vmin) - vmin) / (vmax - vmin))
    return np.clip(gray, 0, 255).astype(np.uint8), vmin, vmax


def write_grid_pgm(grid: HistogramGrid, path, saturation: int = 220) -> None:
    """Binary P5 heatmap; top image row is the grid row with the largest y.

    Lighter pixels mean larger values.  The affine mapping, saturation level,
    and NaN handling are recorded in '<path>.meta.txt'.
    """
    pixels, vmin, vmax = _gray_map(grid, saturation)
    img = pixels[::-1]                            # image rows top-down
    header = f"P5\n{grid.nx} {grid.ny}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.tobytes())
    meta = [
        f"source kind: {grid.kind}",
        f"grid: nx={grid.nx} ny={grid.ny}",
        "bounds: x0={} x1={} y0={} y1={}".format(*(_fmt(v) for v in grid.bounds)),
        f"mapping: gray = round(255 * (clip(value) - vmin) / (vmax - vmin))",
        f"vmin: {_fmt(vmin)}",
        f"vmax: {_fmt(vmax)}",
        f"saturation: {saturation} (counts at or above this level render as 255)"
        if grid.kind == "counts" else "saturation: n/a",
        "empty cells (NaN): rendered as gray for value "
        + ("0" if grid.kind != "field" else "vmin"),
        "orientation: top image row = largest y",
    ]
    Path(str(path) + ".meta.txt").write_text("\n".join(meta) + "\n")
