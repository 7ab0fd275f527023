"""Command-line front end: modes | simulate | avgfield | render.

Configuration comes from a JSON file with the same shape as DEFAULTS below;
every field has a default, unknown keys are rejected (typo protection), and
a handful of flags override the file.  Each command writes its artifacts
plus a metadata.json sufficient to reproduce the outputs exactly (config
echo, seed, random-generator identity, mode parameters, tool version).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import (
    SimParams,
    SimulationError,
    calibrate_coupling,
    run,
    write_trajectory_csv,
)
from .geometry import EllipseGeometry
from .gridio import GridFormatError, read_grid_csv, write_grid_csv, write_grid_pgm
from .mathieu import DomainError
from .modes import QRootNotFoundError, build_default_modes, mode_grid
from .stats import (
    averaged_field_analytic,
    averaged_field_mc,
    displacement_histogram,
    occupancy_displacement_spearman,
    position_histogram,
)

# Coupling produced by calibrate_coupling on the shipped geometry/modes
# (equal weights, 10^4-step pilot, 0.3 mm mean step target).
DEFAULT_COUPLING = 1.0

RNG_IDENTITY = f"numpy.random.PCG64 (numpy {np.__version__})"


class ConfigError(ValueError):
    pass


@dataclass
class GeometryConfig:
    semi_major_mm: float = 14.25
    eccentricity: float = 0.5


@dataclass
class ModesConfig:
    cache_resolution: int = 1024
    fd_step_mm: float = 0.01
    truncation: int = 50


@dataclass
class SimConfig:
    coupling: float = DEFAULT_COUPLING
    damping: float = 0.9
    alpha: float = 0.5
    beta: float = 0.5
    iterations: int = 100_000
    max_runs: int = 100
    propulsion: str = "perpendicular"
    seed: int = 7
    w0: float = 0.0


@dataclass
class StatsConfig:
    bins: int = 90
    saturation: int = 220


@dataclass
class OutputConfig:
    directory: str = "out"
    grid_resolution: int = 256
    mc_draws: int = 0


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    modes: ModesConfig = field(default_factory=ModesConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    stats: StatsConfig = field(default_factory=StatsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def echo(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "geometry": GeometryConfig,
    "modes": ModesConfig,
    "sim": SimConfig,
    "stats": StatsConfig,
    "output": OutputConfig,
}


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a JSON object")
    cfg = RunConfig()
    for section, payload in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(payload, dict):
            raise ConfigError(f"section {section!r} must be an object")
        base = getattr(cfg, section)
        known = set(base.__dataclass_fields__)
        for key, value in payload.items():
            if key not in known:
                raise ConfigError(f"unknown key {section}.{key!r}")
            setattr(base, key, value)
    return cfg


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data)


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if getattr(args, "seed", None) is not None:
        cfg.sim.seed = args.seed
    if getattr(args, "weights", None) is not None:
        cfg.sim.alpha, cfg.sim.beta = args.weights
    if getattr(args, "propulsion", None) is not None:
        cfg.sim.propulsion = args.propulsion
    if getattr(args, "coupling", None) is not None:
        cfg.sim.coupling = args.coupling
    if getattr(args, "bins", None) is not None:
        cfg.stats.bins = args.bins
    if getattr(args, "grid", None) is not None:
        cfg.output.grid_resolution = args.grid
    if getattr(args, "mc", None) is not None:
        cfg.output.mc_draws = args.mc
    if getattr(args, "out", None) is not None:
        cfg.output.directory = args.out
    return cfg


def _geometry(cfg: RunConfig) -> EllipseGeometry:
    return EllipseGeometry(cfg.geometry.semi_major_mm, cfg.geometry.eccentricity)


def _sim_params(cfg: RunConfig) -> SimParams:
    return SimParams(
        coupling=cfg.sim.coupling,
        damping=cfg.sim.damping,
        alpha=cfg.sim.alpha,
        beta=cfg.sim.beta,
        fd_step_x=cfg.modes.fd_step_mm,
        fd_step_y=cfg.modes.fd_step_mm,
        max_total_iters=cfg.sim.iterations,
        max_runs=cfg.sim.max_runs,
        propulsion=cfg.sim.propulsion,
        seed=cfg.sim.seed,
        w0=cfg.sim.w0,
    )


def _write_metadata(outdir: Path, command: str, cfg: RunConfig, extra: dict) -> None:
    meta = {
        "tool": "corralsim",
        "version": __version__,
        "command": command,
        "rng": RNG_IDENTITY,
        "config": cfg.echo(),
    }
    meta.update(extra)
    (outdir / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_modes(cfg: RunConfig, args: argparse.Namespace) -> int:
    geom = _geometry(cfg)
    outdir = _outdir(cfg)
    res = cfg.output.grid_resolution
    mode_odd, mode_even = build_default_modes(geom)
    written = []
    for mode, tag in ((mode_odd, "mode_odd_n1_j5"), (mode_even, "mode_even_n4_j4")):
        grid = mode_grid(mode, res, res)
        write_grid_csv(grid, outdir / f"{tag}.csv")
        write_grid_pgm(grid, outdir / f"{tag}.pgm", saturation=cfg.stats.saturation)
        written += [f"{tag}.csv", f"{tag}.pgm"]
    print(f"q(odd n=1, j=5)  = {mode_odd.q:.6f}")
    print(f"q(even n=4, j=4) = {mode_even.q:.6f}")
    _write_metadata(
        outdir,
        "modes",
        cfg,
        {
            "mode_parameters": {"odd_n1_j5": mode_odd.q, "even_n4_j4": mode_even.q},
            "outputs": written,
        },
    )
    return 0


def cmd_simulate(cfg: RunConfig, args: argparse.Namespace) -> int:
    geom = _geometry(cfg)
    outdir = _outdir(cfg)
    params = _sim_params(cfg)
    modes = build_default_modes(geom, cache_resolution=cfg.modes.cache_resolution)
    traj = run(modes, params, geom)
    bins = cfg.stats.bins
    pos_hist = position_histogram(traj, geom, bins, bins)
    disp_hist = displacement_histogram(traj, geom, bins, bins)

    write_trajectory_csv(traj, outdir / "trajectory.csv")
    write_grid_csv(pos_hist, outdir / "position_histogram.csv")
    write_grid_pgm(pos_hist, outdir / "position_histogram.pgm", saturation=cfg.stats.saturation)
    write_grid_csv(disp_hist, outdir / "displacement_histogram.csv")
    write_grid_pgm(disp_hist, outdir / "displacement_histogram.pgm")

    try:
        rho = occupancy_displacement_spearman(pos_hist, disp_hist)
        rho_note = f"{rho:.4f}"
    except ValueError:
        rho_note = "n/a (too few well-visited cells)"
    print(
        f"retained {len(traj)} states over {traj.run_ids[-1] + 1} run(s), "
        f"{traj.escape_count} escape(s); occupancy/displacement Spearman rho = {rho_note}"
    )
    _write_metadata(
        outdir,
        "simulate",
        cfg,
        {
            "seed": params.seed,
            "coupling": params.coupling,
            "mode_parameters": {"odd_n1_j5": modes[0].q, "even_n4_j4": modes[1].q},
            "retained_states": len(traj),
            "escapes": traj.escape_count,
            "outputs": [
                "trajectory.csv",
                "position_histogram.csv",
                "position_histogram.pgm",
                "displacement_histogram.csv",
                "displacement_histogram.pgm",
            ],
        },
    )
    return 0


def cmd_avgfield(cfg: RunConfig, args: argparse.Namespace) -> int:
    geom = _geometry(cfg)
    outdir = _outdir(cfg)
    res = cfg.output.grid_resolution
    modes = build_default_modes(geom)
    analytic = averaged_field_analytic(modes, cfg.sim.alpha, cfg.sim.beta, res, res)
    write_grid_csv(analytic, outdir / "avgfield_analytic.csv")
    write_grid_pgm(analytic, outdir / "avgfield_analytic.pgm")
    written = ["avgfield_analytic.csv", "avgfield_analytic.pgm"]
    extra: dict = {
        "weights": {"alpha": cfg.sim.alpha, "beta": cfg.sim.beta},
        "mode_parameters": {"odd_n1_j5": modes[0].q, "even_n4_j4": modes[1].q},
    }
    if cfg.output.mc_draws > 0:
        mc = averaged_field_mc(
            modes, cfg.sim.alpha, cfg.sim.beta, cfg.output.mc_draws, cfg.sim.seed, res, res
        )
        write_grid_csv(mc, outdir / "avgfield_mc.csv")
        write_grid_pgm(mc, outdir / "avgfield_mc.pgm")
        written += ["avgfield_mc.csv", "avgfield_mc.pgm"]
        deviation = float(np.max(np.abs(mc.values - analytic.values)))
        print(f"max nodewise |MC - analytic| = {deviation:.6g} (fields unit-max)")
        extra["mc"] = {"draws": cfg.output.mc_draws, "max_deviation": deviation}
    extra["outputs"] = written
    _write_metadata(outdir, "avgfield", cfg, extra)
    return 0


def cmd_render(cfg: RunConfig, args: argparse.Namespace) -> int:
    src = Path(args.grid_csv)
    grid = read_grid_csv(src)
    outdir = _outdir(cfg)
    dest = outdir / (src.stem + ".pgm")
    write_grid_pgm(grid, dest, saturation=cfg.stats.saturation)
    print(f"wrote {dest}")
    _write_metadata(
        outdir, "render", cfg, {"input": str(src), "outputs": [dest.name]}
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corralsim",
        description="Walking-droplet simulator on an elliptical corral "
        "with two Mathieu eigenmodes.",
    )
    parser.add_argument("--version", action="version", version=f"corralsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="PATH", help="JSON configuration file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, help="random seed override")

    p_modes = sub.add_parser("modes", help="compute both eigenmodes, export grids")
    common(p_modes)
    p_modes.add_argument("--grid", type=int, help="export grid resolution")
    p_modes.set_defaults(func=cmd_modes)

    p_sim = sub.add_parser("simulate", help="run trajectories and histogram them")
    common(p_sim)
    p_sim.add_argument("--weights", nargs=2, type=float, metavar=("A", "B"),
                       help="static mode weights alpha beta")
    p_sim.add_argument("--propulsion", choices=("perpendicular", "anti_gradient"))
    p_sim.add_argument("--coupling", type=float, help="wave-particle coupling override")
    p_sim.add_argument("--bins", type=int, help="histogram bins per axis")
    p_sim.set_defaults(func=cmd_simulate)

    p_avg = sub.add_parser("avgfield", help="time-averaged wavefield (analytic, optional MC)")
    common(p_avg)
    p_avg.add_argument("--weights", nargs=2, type=float, metavar=("A", "B"))
    p_avg.add_argument("--grid", type=int, help="field grid resolution")
    p_avg.add_argument("--mc", type=int, help="Monte Carlo draws (0 = analytic only)")
    p_avg.set_defaults(func=cmd_avgfield)

    p_render = sub.add_parser("render", help="render a grid CSV to a PGM heatmap")
    common(p_render)
    p_render.add_argument("grid_csv", help="grid CSV produced by this tool")
    p_render.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        return args.func(cfg, args)
    except (
        ConfigError,
        GridFormatError,
        QRootNotFoundError,
        SimulationError,
        DomainError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
