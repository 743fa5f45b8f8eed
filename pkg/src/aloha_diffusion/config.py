"""Experiment configuration files.

A config is a JSON object stamped with ``schema_version``. Demands (and
``eta``) may be written as decimals or as exact rationals such as ``"8/15"``.
Every field is validated before any computation starts; failures raise
:class:`~aloha_diffusion.errors.ConfigError` naming the offending field.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .diffusion import RegionSpec, SimConfig
from .errors import ConfigError
from .game import GameConfig, PlayerParams, Variant

SCHEMA_VERSION = 1
SWEEP_PARAMETERS = ("eta", "sup-range")

_TOP_KEYS = {
    "schema_version", "name", "variant", "eta", "sigmoid", "players", "regions",
    "quadrature", "simulation", "sweep", "output",
}
_SIGMOID_KEYS = {"range", "gamma", "delta", "w"}
_SIM_KEYS = {"epsilon", "steps", "burn_in", "seed", "record_stride", "u_clamp", "init"}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    simulate: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    game: GameConfig
    regions: tuple[RegionSpec, ...] = ()
    resolution: int | None = None
    sim: SimConfig | None = None
    init: np.ndarray | None = None
    sweep: SweepSpec | None = None
    output_dir: str | None = None
    raw: dict = field(default_factory=dict, compare=False)


def parse_number(value: Any, where: str) -> float:
    """Float from a JSON number or a string such as ``"8/15"`` or ``"0.3"``."""
    if isinstance(value, bool):
        raise ConfigError(where, f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            pass
    raise ConfigError(where, f"expected a number or rational string, got {value!r}")


def _int(value: Any, where: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ConfigError(where, f"expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(where, f"must be >= {minimum}, got {value}")
    return value


def _object(value: Any, where: str, allowed: set[str]) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(where, f"expected an object, got {type(value).__name__}")
    extra = set(value) - allowed
    if extra:
        raise ConfigError(f"{where}.{sorted(extra)[0]}" if where else sorted(extra)[0], "unknown field")
    return value


def _interval(value: Any, where: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(where, "expected a [lower, upper] pair")
    lo, hi = parse_number(value[0], f"{where}[0]"), parse_number(value[1], f"{where}[1]")
    if not lo < hi:
        raise ConfigError(where, f"need lower < upper, got [{lo}, {hi}]")
    return lo, hi


def _sigmoid_fields(spec: dict, where: str) -> dict:
    spec = _object(spec, where, _SIGMOID_KEYS)
    out: dict[str, float] = {}
    if "w" in spec:
        out["w"] = parse_number(spec["w"], f"{where}.w")
    if "range" in spec:
        if "gamma" in spec or "delta" in spec:
            raise ConfigError(f"{where}.range", "give either range or gamma/delta, not both")
        lo, hi = _interval(spec["range"], f"{where}.range")
        if not (0.0 <= lo and hi <= 1.0):
            raise ConfigError(f"{where}.range", "play range must lie inside [0, 1]")
        out["gamma"] = (hi - lo) / 2.0
        out["delta"] = (hi + lo) / (hi - lo)
    for k in ("gamma", "delta"):
        if k in spec:
            out[k] = parse_number(spec[k], f"{where}.{k}")
    return out


def _player(spec: Any, defaults: dict, where: str) -> PlayerParams:
    spec = _object(spec, where, {"y"} | _SIGMOID_KEYS)
    if "y" not in spec:
        raise ConfigError(f"{where}.y", "missing demand")
    y = parse_number(spec["y"], f"{where}.y")
    if not 0.0 < y < 1.0:
        raise ConfigError(f"{where}.y", f"demand must lie in (0, 1), got {y}")
    sig = dict(defaults)
    sig.update(_sigmoid_fields({k: v for k, v in spec.items() if k != "y"}, where))
    for k in ("gamma", "delta"):
        if k not in sig:
            raise ConfigError(f"{where}.{k}", "missing sigmoid parameter (give range or gamma/delta)")
    try:
        return PlayerParams(y=y, gamma=sig["gamma"], delta=sig["delta"], w=sig.get("w", 1.0))
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from None


def parse_config(data: Any, source: str = "<config>") -> ExperimentConfig:
    data = _object(data, "", _TOP_KEYS)
    if "schema_version" not in data:
        raise ConfigError("schema_version", "missing")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {data['schema_version']!r}")

    variant = data.get("variant", Variant.THROUGHPUT_DECREASING.value)
    try:
        variant = Variant(variant)
    except ValueError:
        choices = ", ".join(v.value for v in Variant)
        raise ConfigError("variant", f"expected one of {choices}, got {variant!r}") from None
    if "eta" not in data:
        raise ConfigError("eta", "missing")
    eta = parse_number(data["eta"], "eta")
    if eta < 0.0:
        raise ConfigError("eta", f"must be nonnegative, got {eta}")

    defaults = _sigmoid_fields(data.get("sigmoid", {}), "sigmoid")
    players = data.get("players")
    if not isinstance(players, list) or len(players) < 2:
        raise ConfigError("players", "expected a list of at least 2 players")
    pp = tuple(_player(p, defaults, f"players[{i}]") for i, p in enumerate(players))
    game = GameConfig(pp, eta, variant)

    regions = []
    reg = data.get("regions", {})
    if not isinstance(reg, dict):
        raise ConfigError("regions", "expected an object mapping names to boxes")
    for name, box in reg.items():
        where = f"regions.{name}"
        if not isinstance(box, list) or len(box) != game.n:
            raise ConfigError(where, f"expected {game.n} [lower, upper] intervals")
        r = RegionSpec(tuple(_interval(b, f"{where}[{i}]") for i, b in enumerate(box)), name)
        if r.intersect(game.lower, game.upper) is None:
            raise ConfigError(where, "region does not meet the feasible box")
        regions.append(r)

    resolution = None
    if "quadrature" in data:
        q = _object(data["quadrature"], "quadrature", {"resolution"})
        if "resolution" in q:
            resolution = _int(q["resolution"], "quadrature.resolution", minimum=32)

    sim = init = None
    if "simulation" in data:
        s = _object(data["simulation"], "simulation", _SIM_KEYS)
        kw: dict[str, Any] = {}
        if "epsilon" in s:
            kw["epsilon"] = parse_number(s["epsilon"], "simulation.epsilon")
        for k, m in (("steps", 1), ("burn_in", 0), ("seed", 0), ("record_stride", 1)):
            if k in s:
                kw[k] = _int(s[k], f"simulation.{k}", minimum=m)
        if s.get("u_clamp") is not None:
            kw["u_clamp"] = parse_number(s["u_clamp"], "simulation.u_clamp")
        try:
            sim = SimConfig(**kw)
        except ValueError as exc:
            raise ConfigError("simulation", str(exc)) from None
        if s.get("init") is not None:
            iv = s["init"]
            if not isinstance(iv, list) or len(iv) != game.n:
                raise ConfigError("simulation.init", f"expected {game.n} numbers")
            init = np.array([parse_number(x, f"simulation.init[{i}]") for i, x in enumerate(iv)])
            if np.any(init <= game.lower) or np.any(init >= game.upper):
                raise ConfigError("simulation.init", "initial play must lie strictly inside the feasible box")

    sweep = None
    if "sweep" in data:
        sw = _object(data["sweep"], "sweep", {"parameter", "values", "simulate"})
        param = sw.get("parameter")
        if param not in SWEEP_PARAMETERS:
            raise ConfigError("sweep.parameter", f"expected one of {', '.join(SWEEP_PARAMETERS)}")
        vals = sw.get("values")
        if not isinstance(vals, list) or not vals:
            raise ConfigError("sweep.values", "expected a nonempty list")
        sweep = SweepSpec(
            param,
            tuple(parse_number(x, f"sweep.values[{i}]") for i, x in enumerate(vals)),
            bool(sw.get("simulate", False)),
        )

    out_dir = None
    if "output" in data:
        o = _object(data["output"], "output", {"dir"})
        out_dir = o.get("dir")

    return ExperimentConfig(
        name=str(data.get("name", Path(source).stem)),
        game=game,
        regions=tuple(regions),
        resolution=resolution,
        sim=sim,
        init=init,
        sweep=sweep,
        output_dir=out_dir,
        raw=copy.deepcopy(data),
    )


def builtin_configs() -> list[str]:
    root = resources.files("aloha_diffusion") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_path(path: str | Path) -> Path | Any:
    """``path`` itself if it exists, else a shipped config with that name."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    candidate = resources.files("aloha_diffusion") / "configs" / f"{name}.json"
    if candidate.is_file():
        return candidate
    raise ConfigError("--config", f"no such file or shipped config: {path}")


def load_config(path: str | Path) -> ExperimentConfig:
    p = resolve_path(path)
    text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return parse_config(data, source=str(path))


def with_sweep_value(exp: ExperimentConfig, parameter: str, value: float) -> GameConfig:
    """The game with one sweep parameter replaced.

    ``sup-range`` moves every player's upper play bound to ``value`` while
    keeping its lower bound.
    """
    game = exp.game
    if parameter == "eta":
        return game.replace(eta=value)
    if parameter == "sup-range":
        players = tuple(
            PlayerParams.from_range(p.y, p.sigmoid.lower, value, p.w) for p in game.players
        )
        return game.replace(players=players)
    raise ValueError(f"unknown sweep parameter {parameter!r}")
