"""Long-time statistics: occupancy histograms, displacement maps, averaged fields.

Histograms live on a 90 x 90 (by default) partition of the corral bounding
box; cells wholly outside the ellipse simply stay empty.  Displacement maps
bin each step by the cell of its STARTING state and exclude transitions
across run boundaries.  The time-averaged field is the expectation of the
instantaneous two-mode field over p ~ U[0, 0.5],

    E[field] = 0.25 * alpha * mode1 + 0.25 * beta * mode2,

normalized to unit maximum magnitude; a Monte Carlo version cross-checks
that reading of "time averaged" by literally averaging sampled fields.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import spearmanr

from .dynamics import Trajectory
from .geometry import EllipseGeometry, contains_mask
from .gridio import HistogramGrid, bin_indices
from .modes import Eigenmode, mode_grid

DEFAULT_BINS = 90


def _empty_grid(geom: EllipseGeometry, nx: int, ny: int, kind: str, dtype=float) -> HistogramGrid:
    return HistogramGrid(
        nx=nx, ny=ny, bounds=geom.bounds, values=np.zeros((ny, nx), dtype=dtype), kind=kind
    )


def position_histogram(
    trajs: Sequence[Trajectory] | Trajectory,
    geom: EllipseGeometry,
    nx: int = DEFAULT_BINS,
    ny: int = DEFAULT_BINS,
) -> HistogramGrid:
    """Occupancy counts accumulated over all trajectories and runs."""
    if isinstance(trajs, Trajectory):
        trajs = [trajs]
    if not trajs:
        raise ValueError("need at least one trajectory")
    grid = _empty_grid(geom, nx, ny, "counts", dtype=np.int64)
    for traj in trajs:
        ix, iy = bin_indices(grid, traj.xs, traj.ys)
        np.add.at(grid.values, (iy, ix), 1)
    return grid


def displacement_histogram(
    trajs: Sequence[Trajectory] | Trajectory,
    geom: EllipseGeometry,
    nx: int = DEFAULT_BINS,
    ny: int = DEFAULT_BINS,
) -> HistogramGrid:
    """Mean step length per cell of the step's starting state.

    Cells never visited by a step start are NaN (empty), distinct from a
    genuine mean of zero.
    """
    if isinstance(trajs, Trajectory):
        trajs = [trajs]
    sums = np.zeros((ny, nx))
    counts = np.zeros((ny, nx), dtype=np.int64)
    grid = _empty_grid(geom, nx, ny, "mean_displacement")
    for traj in trajs:
        for sl in traj.run_slices():
            if sl.stop - sl.start < 2:
                continue
            x = traj.xs[sl]
            y = traj.ys[sl]
            d = np.hypot(np.diff(x), np.diff(y))
            ix, iy = bin_indices(grid, x[:-1], y[:-1])
            np.add.at(sums, (iy, ix), d)
            np.add.at(counts, (iy, ix), 1)
    with np.errstate(invalid="ignore"):
        grid.values = np.where(counts > 0, sums / np.maximum(counts, 1), math.nan)
    return grid


def merge_counts(parts: Iterable[HistogramGrid]) -> HistogramGrid:
    """Elementwise sum of partial occupancy histograms."""
    parts = list(parts)
    out = parts[0]
    merged = out.values.copy()
    for g in parts[1:]:
        if g.kind != "counts" or g.bounds != out.bounds or (g.nx, g.ny) != (out.nx, out.ny):
            raise ValueError("incompatible partial histograms")
        merged += g.values
    return HistogramGrid(out.nx, out.ny, out.bounds, merged, "counts")


def averaged_field_analytic(
    modes: tuple[Eigenmode, Eigenmode],
    alpha: float,
    beta: float,
    nx: int = DEFAULT_BINS,
    ny: int = DEFAULT_BINS,
) -> HistogramGrid:
    """Expected field over p ~ U[0, 0.5], unit-max normalized."""
    if alpha == 0.0 and beta == 0.0:
        raise ValueError("degenerate field: both mode weights are zero")
    m1, m2 = modes
    g1 = mode_grid(m1, nx, ny)
    g2 = mode_grid(m2, nx, ny)
    vals = 0.25 * alpha * g1.values + 0.25 * beta * g2.values
    return _normalized_field(vals, g1)


def averaged_field_mc(
    modes: tuple[Eigenmode, Eigenmode],
    alpha: float,
    beta: float,
    n_draws: int,
    seed: int,
    nx: int = DEFAULT_BINS,
    ny: int = DEFAULT_BINS,
) -> HistogramGrid:
    """Nodewise average of n_draws sampled instantaneous fields."""
    if alpha == 0.0 and beta == 0.0:
        raise ValueError("degenerate field: both mode weights are zero")
    if n_draws < 1:
        raise ValueError("need at least one draw")
    m1, m2 = modes
    g1 = mode_grid(m1, nx, ny)
    g2 = mode_grid(m2, nx, ny)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    acc = np.zeros_like(g1.values)
    for _ in range(n_draws):
        p = 0.5 * rng.random()
        acc += p * alpha * g1.values + (0.5 - p) * beta * g2.values
    return _normalized_field(acc / n_draws, g1)


def _normalized_field(vals: np.ndarray, template: HistogramGrid) -> HistogramGrid:
    peak = float(np.max(np.abs(vals)))
    if peak == 0.0:
        raise ValueError("field is identically zero on the grid")
    return HistogramGrid(
        nx=template.nx,
        ny=template.ny,
        bounds=template.bounds,
        values=vals / peak,
        kind="field",
    )


def field_correlation(a: HistogramGrid, b: HistogramGrid, geom: EllipseGeometry) -> float:
    """Pearson correlation of two field grids over in-ellipse cells."""
    gx, gy = np.meshgrid(a.centers_x(), a.centers_y())
    inside = contains_mask(geom, gx, gy)
    va = a.values[inside]
    vb = b.values[inside]
    va = va - va.mean()
    vb = vb - vb.mean()
    return float(np.dot(va, vb) / math.sqrt(np.dot(va, va) * np.dot(vb, vb)))


def occupancy_displacement_spearman(
    counts: HistogramGrid, displacement: HistogramGrid, min_visits: int = 20
) -> float:
    """Spearman rank correlation between cell occupancy and mean displacement,
    over cells with at least min_visits occupancy counts."""
    mask = (counts.values >= min_visits) & np.isfinite(displacement.values)
    if mask.sum() < 3:
        raise ValueError(f"too few cells with >= {min_visits} visits")
    rho, _ = spearmanr(counts.values[mask].ravel(), displacement.values[mask].ravel())
    return float(rho)


def interior_cell_mask(grid: HistogramGrid, geom: EllipseGeometry) -> np.ndarray:
    """Cells whose center lies inside the ellipse."""
    gx, gy = np.meshgrid(grid.centers_x(), grid.centers_y())
    return contains_mask(geom, gx, gy)


def occupied_interior_fraction(counts: HistogramGrid, geom: EllipseGeometry) -> float:
    """Fraction of interior cells visited at least once."""
    interior = interior_cell_mask(counts, geom)
    return float((counts.values[interior] > 0).sum() / interior.sum())
