"""Discrete-time loss-averse play dynamics.

Each player updates its unconstrained coordinate with an Euler-Maruyama step

    u_i <- u_i + drift_i(v) * eps + sigma_i(v) * sqrt(eps) * N(0, 1)

and plays ``v_i = g_i(u_i)``. The noise amplitude is ``sqrt(2 h_i / f_i)``,
where ``h_i`` is one of the two loss-aversion modulations below and ``f_i`` is
the slope of the play-map at the current play.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from . import playmap
from .errors import DomainError, SimulationDivergedError, SingularConfigurationError
from .game import GameConfig, Variant, _others_idle, drift_vector

log = logging.getLogger(__name__)

DEFAULT_CLAMP_WIDTHS = 8.0
_CHUNK = 1 << 16


# -- noise modulation ---------------------------------------------------------

def h_vector(v, cfg: GameConfig) -> np.ndarray:
    """Loss-aversion modulation for every player at play ``v``.

    ``THROUGHPUT_DECREASING``: ``eta * y_i * (1 - v_i)**2``.
    ``IDLE_TIME``: ``eta * v_i / prod_{j != i}(1 - v_j)``.
    """
    v = np.asarray(v, dtype=float)
    if cfg.variant is Variant.THROUGHPUT_DECREASING:
        return cfg.eta * cfg.demands * (1.0 - v) ** 2
    idle = _others_idle(v)
    if np.any(idle <= 0.0):
        raise SingularConfigurationError("idle-time modulation is singular when another v_j = 1")
    return cfg.eta * v / idle


def h(v, cfg: GameConfig, i: int) -> float:
    v = np.asarray(v, dtype=float)
    if not 0 <= i < cfg.n:
        raise IndexError(f"player index {i} out of range")
    return float(h_vector(v, cfg)[i])


def dlog_h_vector(v, cfg: GameConfig) -> np.ndarray:
    """``d log h_i / d v_i`` for each player (own coordinate only)."""
    v = np.asarray(v, dtype=float)
    if cfg.variant is Variant.THROUGHPUT_DECREASING:
        return -2.0 / (1.0 - v)
    return 1.0 / v


def f_vector(v, cfg: GameConfig) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.array([playmap.f(v[..., i], s) for i, s in enumerate(cfg.sigmoids)]).T


def sigma_vector(v, cfg: GameConfig) -> np.ndarray:
    hv = h_vector(v, cfg)
    fv = f_vector(v, cfg)
    if np.any(fv <= 0.0):
        raise DomainError("play-map slope vanishes; noise amplitude is unbounded")
    return np.sqrt(2.0 * hv / fv)


def sigma(v, cfg: GameConfig, i: int) -> float:
    if not 0 <= i < cfg.n:
        raise IndexError(f"player index {i} out of range")
    return float(sigma_vector(v, cfg)[i])


# -- configuration and results ------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``burn_in`` defaults to 10% of ``steps``; ``u_clamp`` defaults to eight
    sigmoid widths per player.
    """

    epsilon: float = 1e-3
    steps: int = 100_000
    burn_in: int | None = None
    seed: int = 0
    record_stride: int = 1
    u_clamp: float | None = None

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.steps // 10)
        if not 0 <= self.burn_in < self.steps:
            raise ValueError(f"burn_in must lie in [0, steps), got {self.burn_in}")
        if self.record_stride < 1:
            raise ValueError(f"record_stride must be >= 1, got {self.record_stride}")
        if self.u_clamp is not None and not self.u_clamp > 0.0:
            raise ValueError(f"u_clamp must be positive, got {self.u_clamp}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def clamp_for(self, cfg: GameConfig) -> np.ndarray:
        if self.u_clamp is None:
            return DEFAULT_CLAMP_WIDTHS * np.array([p.w for p in cfg.players])
        return np.full(cfg.n, float(self.u_clamp))


@dataclass(frozen=True)
class RegionSpec:
    """Closed box ``prod_i [lo_i, hi_i]`` in play-space."""

    bounds: tuple[tuple[float, float], ...]
    name: str = "region"

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", b)
        for lo, hi in b:
            if not lo < hi:
                raise ValueError(f"region {self.name!r}: need lo < hi, got [{lo}, {hi}]")

    @classmethod
    def full(cls, cfg: GameConfig, name: str = "D") -> "RegionSpec":
        return cls(tuple(zip(cfg.lower, cfg.upper)), name)

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    def intersect(self, lower, upper) -> tuple[np.ndarray, np.ndarray] | None:
        lo = np.maximum(self.lo, lower)
        hi = np.minimum(self.hi, upper)
        if np.any(lo >= hi):
            return None
        return lo, hi

    def contains(self, v) -> np.ndarray:
        v = np.asarray(v)
        return np.all((v >= self.lo) & (v <= self.hi), axis=-1)


@dataclass(frozen=True)
class Trajectory:
    steps: np.ndarray
    v: np.ndarray
    occupancy: dict[str, float]
    mean: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray
    seed: int
    n_samples: int
    clamp_hits: int = 0
    last: np.ndarray | None = None

    @property
    def final(self) -> np.ndarray:
        """Play after the last step, recorded or not."""
        return self.v[-1] if self.last is None else self.last

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "samples": self.n_samples,
            "clamp_hits": self.clamp_hits,
            "occupancy": dict(self.occupancy),
            "mean": self.mean.tolist(),
            "min": self.vmin.tolist(),
            "max": self.vmax.tolist(),
            "final": self.final.tolist(),
        }

    def to_csv(self, path) -> None:
        n = self.v.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step"] + [f"v{i + 1}" for i in range(n)])
            for k, row in zip(self.steps, self.v):
                w.writerow([int(k)] + [repr(float(x)) for x in row])

    def write_summary(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2) + "\n")


# -- stepping -----------------------------------------------------------------

def _play(u, cfg: GameConfig) -> np.ndarray:
    return np.array([playmap.g(u[i], s) for i, s in enumerate(cfg.sigmoids)])


def step(u, cfg: GameConfig, sim: SimConfig, noise) -> np.ndarray:
    """One Euler-Maruyama update of the unconstrained state ``u``.

    ``noise`` holds one standard normal per player; it is scaled by
    ``sqrt(epsilon)`` here.
    """
    u = np.asarray(u, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (cfg.n,):
        raise ValueError(f"need {cfg.n} noise values, got shape {noise.shape}")
    if not np.all(np.isfinite(u)):
        raise SimulationDivergedError(0, "non-finite input state")
    v = _play(u, cfg)
    eps = sim.epsilon
    un = u + drift_vector(v, cfg) * eps + sigma_vector(v, cfg) * np.sqrt(eps) * noise
    if not np.all(np.isfinite(un)):
        raise SimulationDivergedError(0)
    c = sim.clamp_for(cfg)
    return np.clip(un, -c, c)


@numba.njit(cache=True, error_model="numpy")
def _run_chunk(u, v, y, gam, dlt, w, eta, variant, eps, noise, clamp,
               reg_lo, reg_hi, k0, burn_in, stride, rec_v, rec_k, rec_n,
               inside, vsum, vmin, vmax, clamp_hits):
    n = u.shape[0]
    se = np.sqrt(eps)
    un = np.empty(n)
    for c in range(noise.shape[0]):
        k = k0 + c + 1
        for i in range(n):
            idle = 1.0
            for j in range(n):
                if j != i:
                    idle *= 1.0 - v[j]
            d = y[i] / idle - v[i]
            if variant == 0:
                hv = eta * y[i] * (1.0 - v[i]) ** 2
            else:
                hv = eta * v[i] / idle
            t = v[i] / gam[i] - dlt[i]
            fv = gam[i] / w[i] * (1.0 - t * t)
            x = u[i] + d * eps + np.sqrt(2.0 * hv / fv) * se * noise[c, i]
            if not np.isfinite(x):
                return 1, k, rec_n
            if x > clamp[i]:
                x = clamp[i]
                clamp_hits[0] += 1
            elif x < -clamp[i]:
                x = -clamp[i]
                clamp_hits[0] += 1
            un[i] = x
        for i in range(n):
            u[i] = un[i]
            v[i] = gam[i] * (np.tanh(u[i] / w[i]) + dlt[i])
        if k % stride == 0:
            for i in range(n):
                rec_v[rec_n, i] = v[i]
            rec_k[rec_n] = k
            rec_n += 1
        if k > burn_in:
            for i in range(n):
                vsum[i] += v[i]
                if v[i] < vmin[i]:
                    vmin[i] = v[i]
                if v[i] > vmax[i]:
                    vmax[i] = v[i]
            for r in range(reg_lo.shape[0]):
                ok = True
                for i in range(n):
                    if v[i] < reg_lo[r, i] or v[i] > reg_hi[r, i]:
                        ok = False
                        break
                if ok:
                    inside[r] += 1
    return 0, k0 + noise.shape[0], rec_n


def simulate(
    cfg: GameConfig,
    sim: SimConfig,
    init=None,
    regions: Sequence[RegionSpec] = (),
) -> Trajectory:
    """Run ``sim.steps`` updates from ``init`` (default: centre of D).

    Occupancy fractions, means and extremes are computed over the steps after
    ``sim.burn_in``; the recorded path includes the initial play (step 0) and
    every ``record_stride``-th step.
    """
    init = cfg.center if init is None else cfg.check_interior(init)
    u = np.array([playmap.g_inverse(init[i], s) for i, s in enumerate(cfg.sigmoids)])
    c = sim.clamp_for(cfg)
    u = np.clip(u, -c, c)
    v = _play(u, cfg)

    regions = list(regions)
    names = [r.name for r in regions]
    if len(set(names)) != len(names):
        raise ValueError(f"region names must be unique, got {names}")
    reg_lo = np.array([r.lo for r in regions]).reshape(len(regions), cfg.n)
    reg_hi = np.array([r.hi for r in regions]).reshape(len(regions), cfg.n)

    n_rec = sim.steps // sim.record_stride + 1
    rec_v = np.empty((n_rec, cfg.n))
    rec_k = np.empty(n_rec, dtype=np.int64)
    rec_v[0], rec_k[0] = v, 0
    rec_n = 1
    inside = np.zeros(len(regions), dtype=np.int64)
    vsum = np.zeros(cfg.n)
    vmin = np.full(cfg.n, np.inf)
    vmax = np.full(cfg.n, -np.inf)
    hits = np.zeros(1, dtype=np.int64)

    y = cfg.demands
    gam = np.array([p.gamma for p in cfg.players])
    dlt = np.array([p.delta for p in cfg.players])
    w = np.array([p.w for p in cfg.players])
    variant = 0 if cfg.variant is Variant.THROUGHPUT_DECREASING else 1

    rng = np.random.default_rng(sim.seed)
    done = 0
    while done < sim.steps:
        m = min(_CHUNK, sim.steps - done)
        noise = rng.standard_normal((m, cfg.n))
        status, k, rec_n = _run_chunk(
            u, v, y, gam, dlt, w, float(cfg.eta), variant, sim.epsilon, noise, c,
            reg_lo, reg_hi, done, sim.burn_in, sim.record_stride, rec_v, rec_k, rec_n,
            inside, vsum, vmin, vmax, hits,
        )
        if status != 0:
            raise SimulationDivergedError(int(k))
        done += m

    n_samples = sim.steps - sim.burn_in
    if hits[0]:
        log.info("u clamp active on %d player-steps (seed %d)", hits[0], sim.seed)
    return Trajectory(
        steps=rec_k[:rec_n].copy(),
        v=rec_v[:rec_n].copy(),
        occupancy={r.name: float(inside[j]) / n_samples for j, r in enumerate(regions)},
        mean=vsum / n_samples,
        vmin=vmin,
        vmax=vmax,
        seed=sim.seed,
        n_samples=n_samples,
        clamp_hits=int(hits[0]),
        last=v.copy(),
    )
