"""``aloha-diffusion`` command-line interface.

Exit codes: 0 success, 1 runtime/numeric failure, 2 configuration or usage
error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    SCHEMA_VERSION,
    SWEEP_PARAMETERS,
    ExperimentConfig,
    load_config,
    parse_number,
    with_sweep_value,
)
from .diffusion import RegionSpec, SimConfig, simulate
from .errors import AlohaDiffusionError, ConfigError
from .game import (
    GameConfig,
    Stability,
    classify_equilibrium,
    deadlock,
    drift_jacobian,
    drift_vector,
    interior_equilibria,
)
from .gibbs import density_surface, estimate_region, normalize, write_surface_csv

log = logging.getLogger("aloha_diffusion")


class UsageError(Exception):
    pass


def _regions(exp: ExperimentConfig, game: GameConfig) -> list[RegionSpec]:
    return list(exp.regions) or [RegionSpec.full(game)]


def _out_dir(args, exp: ExperimentConfig) -> Path | None:
    d = args.out or exp.output_dir
    if d is None:
        return None
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _header(command: str, exp: ExperimentConfig) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "version": __version__, "config": exp.raw}


def _write_json(obj: dict, path: Path | None) -> None:
    text = json.dumps(obj, indent=2)
    if path is not None:
        path.write_text(text + "\n")
    print(text)


# -- equilibria ---------------------------------------------------------------

def equilibria_report(exp: ExperimentConfig) -> dict:
    game = exp.game
    interior = []
    for v in interior_equilibria(game):
        entry = {
            "v": v.tolist(),
            "throughput": (v * np.prod(1.0 - v) / (1.0 - v)).tolist(),
            "max_drift_residual": float(np.max(np.abs(drift_vector(v, game)))),
            "jacobian_eigenvalues": sorted(np.linalg.eigvals(drift_jacobian(v, game)).real.tolist()),
            "inside_play_box": bool(np.all(v > game.lower) and np.all(v < game.upper)),
        }
        try:
            entry["classification"] = classify_equilibrium(v, game).value
        except AlohaDiffusionError as exc:
            entry["classification"] = "indeterminate"
            entry["note"] = str(exc)
        interior.append(entry)
    report = _header("equilibria", exp)
    report["interior"] = interior
    report["infeasible_demands"] = not interior
    report["boundary"] = [
        {
            "kind": "deadlock",
            "v": deadlock(game.n).tolist(),
            "throughput": [0.0] * game.n,
            "classification": Stability.STABLE.value,
            "source": "analytic",
        }
    ]
    return report


def cmd_equilibria(args, exp: ExperimentConfig) -> int:
    report = equilibria_report(exp)
    out = _out_dir(args, exp)
    _write_json(report, out / "equilibria.json" if out else None)
    return 0


# -- density ------------------------------------------------------------------

def density_report(exp: ExperimentConfig, game: GameConfig | None = None, resolution: int | None = None):
    game = exp.game if game is None else game
    grid = normalize(game, resolution or exp.resolution)
    ests = {r.name: estimate_region(grid, r) for r in _regions(exp, game)}
    report = _header("density", exp)
    report.update(
        variant=game.variant.value,
        eta=game.eta,
        lower=game.lower.tolist(),
        upper=game.upper.tolist(),
        resolution=grid.resolution,
        log_z=grid.log_z,
        log_z_refinement_delta=grid.log_z_error,
        regions={k: e.as_dict() for k, e in ests.items()},
    )
    return report, grid


def cmd_density(args, exp: ExperimentConfig) -> int:
    if exp.game.n != 2:
        raise UsageError(f"density surfaces need exactly 2 players, config has {exp.game.n}")
    report, grid = density_report(exp, resolution=args.resolution)
    out = _out_dir(args, exp)
    if out is not None:
        write_surface_csv(density_surface(exp.game, grid=grid), out / "surface.csv")
    _write_json(report, out / "density_report.json" if out else None)
    return 0


# -- simulate -----------------------------------------------------------------

def _sim_config(args, exp: ExperimentConfig) -> SimConfig:
    if exp.sim is None:
        raise ConfigError("simulation", "section required for this command")
    sim = exp.sim
    if getattr(args, "seed", None) is not None:
        sim = dataclasses.replace(sim, seed=args.seed)
    return sim


def cmd_simulate(args, exp: ExperimentConfig) -> int:
    sim = _sim_config(args, exp)
    traj = simulate(exp.game, sim, exp.init, _regions(exp, exp.game))
    report = _header("simulate", exp)
    report.update(traj.summary())
    report.update(epsilon=sim.epsilon, steps=sim.steps, burn_in=sim.burn_in)
    out = _out_dir(args, exp)
    if out is not None:
        traj.to_csv(out / "trajectory.csv")
    _write_json(report, out / "occupancy.json" if out else None)
    return 0


# -- sweep --------------------------------------------------------------------

def sweep_rows(exp: ExperimentConfig, parameter: str, values, resolution=None,
               sim: SimConfig | None = None, jobs: int = 1) -> list[dict]:
    if not values:
        raise UsageError("sweep needs at least one value")

    def one(value):
        game = with_sweep_value(exp, parameter, value)
        regions = _regions(exp, game)
        row = {"parameter": parameter, "value": value}
        if game.eta > 0.0:
            grid = normalize(game, resolution or exp.resolution)
            for r in regions:
                e = estimate_region(grid, r)
                row[f"{r.name}_probability"] = e.probability
                row[f"{r.name}_log10_probability"] = e.log10_probability
                row[f"{r.name}_refinement_delta"] = e.refinement_delta
        if sim is not None:
            traj = simulate(game, sim, None, regions)
            for r in regions:
                row[f"{r.name}_occupancy"] = traj.occupancy[r.name]
        return row

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, values))
    return [one(v) for v in values]


def cmd_sweep(args, exp: ExperimentConfig) -> int:
    parameter = args.param or (exp.sweep.parameter if exp.sweep else None)
    if parameter is None:
        raise UsageError("sweep parameter missing (use --param or a sweep section)")
    if args.values is not None:
        items = [x for x in args.values.split(",") if x.strip()]
        values = [parse_number(x, "--values") for x in items]
    else:
        values = list(exp.sweep.values) if exp.sweep else []
    do_sim = args.simulate or (exp.sweep.simulate if exp.sweep else False)
    sim = _sim_config(args, exp) if do_sim else None
    rows = sweep_rows(exp, parameter, values, args.resolution, sim, args.jobs)
    out = _out_dir(args, exp)
    target = open(out / "sweep.csv", "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(target, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    finally:
        if out:
            target.close()
            print(out / "sweep.csv")
    return 0


COMMANDS = {
    "equilibria": cmd_equilibria,
    "density": cmd_density,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aloha-diffusion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON config path or shipped config name")
        s.add_argument("--out", help="output directory (default: config output.dir, else stdout only)")
        s.add_argument("--seed", type=int, help="override simulation.seed")
        s.add_argument("--resolution", type=int, help="quadrature nodes per axis")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            s.add_argument("--param", choices=SWEEP_PARAMETERS)
            s.add_argument("--values", help="comma-separated values, rationals allowed")
            s.add_argument("--simulate", action="store_true", help="also simulate each value")
            s.add_argument("--jobs", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.resolution is not None and args.resolution < 32:
            raise UsageError("--resolution must be >= 32")
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        exp = load_config(args.config)
        return COMMANDS[args.command](args, exp)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (AlohaDiffusionError, ValueError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
