"""Stochastic walking-droplet simulator on an elliptical corral.

Builds the two dominant Mathieu-function eigenmodes of the corral from
scratch (tridiagonal angular solve, Bessel-product radial series), iterates
a stochastic perpendicular-propulsion map on top of them, and accumulates
the long-time position and displacement statistics as exportable heatmaps.
"""

__version__ = "0.1.0"

from .geometry import EllipseGeometry, Point, cartesian_to_elliptical, contains, elliptical_to_cartesian, sample_interior
from .mathieu import AngularSolution, DomainError, ModeSpec, angular_eval, angular_solve, bessel_j, radial_eval
from .modes import (
    EVEN_44,
    ODD_15,
    Eigenmode,
    QRootNotFoundError,
    build_default_modes,
    build_mode,
    find_q,
    mode_gradient,
    mode_grid,
    mode_value,
)
from .dynamics import (
    SimParams,
    SimulationError,
    Trajectory,
    WalkerState,
    calibrate_coupling,
    instantaneous_field,
    run,
    step,
    step_with_p,
    wavefield,
    write_trajectory_csv,
)
from .gridio import GridFormatError, HistogramGrid, read_grid_csv, write_grid_csv, write_grid_pgm
from .stats import (
    averaged_field_analytic,
    averaged_field_mc,
    displacement_histogram,
    field_correlation,
    occupancy_displacement_spearman,
    occupied_interior_fraction,
    position_histogram,
)
