"""Corral eigenmodes: boundary-condition roots in q, assembly, evaluation, caching.

An eigenmode is the product of a radial and an angular Mathieu function
sharing one parameter value q.  The Dirichlet condition at the corral
boundary quantizes q: for a mode family (order, parity), q_j is the j-th
zero of xi -> radial(xi0) as q increases.  Assembled modes are scaled to
unit maximum amplitude over the ellipse so that static mode weights are
comparable across modes.

Evaluation cost is dominated by the Bessel series, so a mode can carry an
optional uniform grid cache over a padded bounding box; cached lookups are
bilinear.  Gradients always use the same second-order centered differences
on top of either evaluation path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    EllipseGeometry,
    Point,
    cartesian_to_elliptical_arrays,
    contains_mask,
)
from .gridio import HistogramGrid
from .mathieu import AngularSolution, DomainError, ModeSpec, angular_eval, angular_solve, radial_eval

# Defaults: scan window and step for the q root search, FD step for gradients,
# padding of the cache box so boundary-adjacent stencils stay on the grid.
Q_WINDOW = (0.0, 50.0)
Q_SCAN_STEP = 0.05
Q_BISECT_TOL = 1e-9
DEFAULT_FD_STEP = 1e-2      # mm
CACHE_PAD = 0.25            # mm
XI_SLACK = 0.5              # evaluations flagged beyond xi0 + XI_SLACK


class QRootNotFoundError(RuntimeError):
    """The scan window contained fewer boundary-condition roots than requested."""

    def __init__(self, spec: ModeSpec, found: int):
        super().__init__(
            f"only {found} root(s) of the boundary condition found in "
            f"q window {Q_WINDOW} for {spec.parity} order {spec.order}; "
            f"needed j = {spec.radial_index}"
        )
        self.found = found


@dataclass(frozen=True)
class GridCache:
    """Uniform node grid of mode values over a padded bounding box."""

    x0: float
    y0: float
    dx: float
    dy: float
    values: np.ndarray          # shape (ny_nodes, nx_nodes)

    def lookup(self, x: float, y: float) -> float:
        """Bilinear interpolation; raises if the point leaves the cache box."""
        fx = (x - self.x0) / self.dx
        fy = (y - self.y0) / self.dy
        ny, nx = self.values.shape
        if not (0.0 <= fx <= nx - 1 and 0.0 <= fy <= ny - 1):
            raise DomainError(f"point ({x}, {y}) outside cache box")
        ix = min(int(fx), nx - 2)
        iy = min(int(fy), ny - 2)
        tx = fx - ix
        ty = fy - iy
        v = self.values
        return (
            v[iy, ix] * (1.0 - tx) * (1.0 - ty)
            + v[iy, ix + 1] * tx * (1.0 - ty)
            + v[iy + 1, ix] * (1.0 - tx) * ty
            + v[iy + 1, ix + 1] * tx * ty
        )

    def lookup_arrays(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        ny, nx = self.values.shape
        fx = (x - self.x0) / self.dx
        fy = (y - self.y0) / self.dy
        if np.any(fx < 0) or np.any(fy < 0) or np.any(fx > nx - 1) or np.any(fy > ny - 1):
            raise DomainError("points outside cache box")
        ix = np.minimum(fx.astype(np.int64), nx - 2)
        iy = np.minimum(fy.astype(np.int64), ny - 2)
        tx = fx - ix
        ty = fy - iy
        v = self.values
        return (
            v[iy, ix] * (1 - tx) * (1 - ty)
            + v[iy, ix + 1] * tx * (1 - ty)
            + v[iy + 1, ix] * (1 - tx) * ty
            + v[iy + 1, ix + 1] * tx * ty
        )


@dataclass(frozen=True)
class Eigenmode:
    spec: ModeSpec
    geom: EllipseGeometry
    q: float
    angular: AngularSolution
    norm: float                      # scale making max |mode| over the ellipse = 1
    cache: GridCache | None = None

    def values(self, x, y, use_cache: bool = True):
        """Mode values at Cartesian points (arrays or scalars)."""
        x_arr = np.asarray(x, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        if use_cache and self.cache is not None:
            out = self.cache.lookup_arrays(np.atleast_1d(x_arr), np.atleast_1d(y_arr))
        else:
            out = self.norm * _raw_values(
                self.angular, self.geom, np.atleast_1d(x_arr), np.atleast_1d(y_arr)
            )
        if x_arr.ndim == 0:
            return float(out[0])
        return out.reshape(x_arr.shape)

    def value_and_gradient(
        self,
        x: float,
        y: float,
        h: float = DEFAULT_FD_STEP,
        k: float = DEFAULT_FD_STEP,
        use_cache: bool = True,
    ) -> tuple[float, float, float]:
        """(value, d/dx, d/dy) with centered differences on the chosen path."""
        if use_cache and self.cache is not None:
            c = self.cache
            v0 = c.lookup(x, y)
            gx = (c.lookup(x + h, y) - c.lookup(x - h, y)) / (2.0 * h)
            gy = (c.lookup(x, y + k) - c.lookup(x, y - k)) / (2.0 * k)
            return v0, gx, gy
        xs = np.array([x, x + h, x - h, x, x])
        ys = np.array([y, y, y, y + k, y - k])
        v = self.norm * _raw_values(self.angular, self.geom, xs, ys)
        return (
            float(v[0]),
            float((v[1] - v[2]) / (2.0 * h)),
            float((v[3] - v[4]) / (2.0 * k)),
        )


def _raw_values(
    sol: AngularSolution, geom: EllipseGeometry, x: np.ndarray, y: np.ndarray
) -> np.ndarray:
    """Unnormalized product radial(xi) * angular(eta); flags far-out points."""
    xi, eta = cartesian_to_elliptical_arrays(geom, x, y)
    xi_max = float(np.max(xi)) if xi.size else 0.0
    if xi_max > geom.xi0 + XI_SLACK:
        raise DomainError(
            f"evaluation at xi = {xi_max:.4f} exceeds xi0 + {XI_SLACK} = "
            f"{geom.xi0 + XI_SLACK:.4f}; point too far outside the corral"
        )
    return radial_eval(sol, xi) * angular_eval(sol, eta)


def _boundary_residual(spec: ModeSpec, geom: EllipseGeometry, q: float, M: int) -> float:
    return radial_eval(angular_solve(spec, q, M), geom.xi0)


def find_q(
    spec: ModeSpec,
    geom: EllipseGeometry,
    M: int = 50,
    scan_step: float = Q_SCAN_STEP,
    tol: float = Q_BISECT_TOL,
) -> float:
    """Locate the j-th zero of q -> radial(xi0; q) by scan plus bisection.

    The scan walks the window in fixed steps and brackets sign changes;
    each bracket is bisected to |dq| <= tol.  Raises QRootNotFoundError
    (reporting how many roots were located) if the window holds fewer
    than j sign changes.
    """
    if spec.radial_index > 8:
        raise ValueError("radial index beyond the supported search window (j <= 8)")
    f = lambda q: _boundary_residual(spec, geom, q, M)
    found = 0
    q_lo = scan_step
    f_lo = f(q_lo)
    q = q_lo
    while q < Q_WINDOW[1] - 1e-12:
        q_hi = min(q + scan_step, Q_WINDOW[1])
        f_hi = f(q_hi)
        if f_lo == 0.0 or f_lo * f_hi < 0.0:
            found += 1
            if found == spec.radial_index:
                lo, hi, flo = q, q_hi, f_lo
                if flo == 0.0:
                    return lo
                while hi - lo > tol:
                    mid = 0.5 * (lo + hi)
                    fm = f(mid)
                    if fm == 0.0:
                        return mid
                    if flo * fm < 0.0:
                        hi = mid
                    else:
                        lo, flo = mid, fm
                return 0.5 * (lo + hi)
        q, f_lo = q_hi, f_hi
    raise QRootNotFoundError(spec, found)


def _refine_max(sol, geom, x0, y0, half_span, levels=4, grid=11):
    """Zoom-in scan polishing the location/value of max |raw mode|."""
    best = (abs(float(_raw_values(sol, geom, np.array([x0]), np.array([y0]))[0])), x0, y0)
    span = half_span
    for _ in range(levels):
        xs = np.linspace(best[1] - span, best[1] + span, grid)
        ys = np.linspace(best[2] - span, best[2] + span, grid)
        gx, gy = np.meshgrid(xs, ys)
        inside = contains_mask(geom, gx, gy)
        if not np.any(inside):
            break
        vals = np.zeros_like(gx)
        vals[inside] = np.abs(_raw_values(sol, geom, gx[inside], gy[inside]))
        i = np.unravel_index(np.argmax(vals), vals.shape)
        best = (float(vals[i]), float(gx[i]), float(gy[i]))
        span /= grid - 1.0
    return best[0]


def _max_abs_interior(sol: AngularSolution, geom: EllipseGeometry, n: int = 512) -> float:
    """Max |raw mode| over an n x n interior sample, polished locally."""
    xs = np.linspace(-geom.a, geom.a, n)
    ys = np.linspace(-geom.b, geom.b, n)
    gx, gy = np.meshgrid(xs, ys)
    inside = contains_mask(geom, gx, gy)
    vals = np.zeros_like(gx)
    flat_in = inside.ravel()
    pts_x = gx.ravel()[flat_in]
    pts_y = gy.ravel()[flat_in]
    out = np.abs(_raw_values(sol, geom, pts_x, pts_y))
    vals.ravel()[np.flatnonzero(flat_in)] = out
    i = np.unravel_index(np.argmax(vals), vals.shape)
    cell = max(2.0 * geom.a / (n - 1), 2.0 * geom.b / (n - 1))
    return _refine_max(sol, geom, float(gx[i]), float(gy[i]), cell)


def _fill_cache(
    sol: AngularSolution, geom: EllipseGeometry, norm: float, resolution: int
) -> GridCache:
    x0, x1 = -geom.a - CACHE_PAD, geom.a + CACHE_PAD
    y0, y1 = -geom.b - CACHE_PAD, geom.b + CACHE_PAD
    nx = ny = int(resolution)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    values = np.empty((ny, nx))
    block = max(1, (1 << 22) // nx)       # cap scratch memory per row block
    for start in range(0, ny, block):
        stop = min(start + block, ny)
        gx, gy = np.meshgrid(xs, ys[start:stop])
        values[start:stop] = norm * _raw_values(sol, geom, gx.ravel(), gy.ravel()).reshape(gx.shape)
    return GridCache(
        x0=x0, y0=y0, dx=(x1 - x0) / (nx - 1), dy=(y1 - y0) / (ny - 1), values=values
    )


def build_mode(
    spec: ModeSpec,
    geom: EllipseGeometry,
    M: int = 50,
    cache_resolution: int | None = None,
) -> Eigenmode:
    """Assemble one eigenmode: root in q, angular solution, unit-max scaling,
    and an optional evaluation cache."""
    q = find_q(spec, geom, M=M)
    sol = angular_solve(spec, q, M)
    peak = _max_abs_interior(sol, geom)
    if peak == 0.0:
        raise ArithmeticError(f"mode {spec} evaluated to zero everywhere")
    norm = 1.0 / peak
    cache = None
    if cache_resolution is not None:
        cache = _fill_cache(sol, geom, norm, cache_resolution)
    return Eigenmode(spec=spec, geom=geom, q=q, angular=sol, norm=norm, cache=cache)


def mode_value(mode: Eigenmode, p: Point, use_cache: bool = True) -> float:
    """Mode amplitude at a Cartesian point."""
    return mode.values(p.x, p.y, use_cache=use_cache)


def mode_gradient(
    mode: Eigenmode,
    p: Point,
    h: float = DEFAULT_FD_STEP,
    k: float = DEFAULT_FD_STEP,
    use_cache: bool = True,
) -> tuple[float, float]:
    """Second-order centered-difference gradient at a Cartesian point."""
    _, gx, gy = mode.value_and_gradient(p.x, p.y, h, k, use_cache=use_cache)
    return gx, gy


def mode_grid(
    mode: Eigenmode,
    nx: int,
    ny: int,
    bounds: tuple[float, float, float, float] | None = None,
    mask_outside: bool = True,
) -> HistogramGrid:
    """Mode sampled at cell centers of an nx x ny partition of the bounding box.

    Cells whose center falls outside the ellipse read 0 when masked (the
    corral has no field there); direct evaluation is used, not the cache.
    """
    if bounds is None:
        bounds = mode.geom.bounds
    grid = HistogramGrid(nx=nx, ny=ny, bounds=bounds, values=np.zeros((ny, nx)), kind="field")
    gx, gy = np.meshgrid(grid.centers_x(), grid.centers_y())
    if mask_outside:
        inside = contains_mask(mode.geom, gx, gy)
        vals = np.zeros_like(gx)
        vals[inside] = mode.values(gx[inside], gy[inside], use_cache=False)
    else:
        vals = mode.values(gx, gy, use_cache=False)
    grid.values = vals
    return grid


# The two mode families shipped as presets.
ODD_15 = ModeSpec(order=1, parity="odd", radial_index=5)
EVEN_44 = ModeSpec(order=4, parity="even", radial_index=4)


def build_default_modes(
    geom: EllipseGeometry, cache_resolution: int | None = None
) -> tuple[Eigenmode, Eigenmode]:
    """The (odd n=1, j=5) and (even n=4, j=4) pair used by the simulator."""
    return (
        build_mode(ODD_15, geom, cache_resolution=cache_resolution),
        build_mode(EVEN_44, geom, cache_resolution=cache_resolution),
    )
