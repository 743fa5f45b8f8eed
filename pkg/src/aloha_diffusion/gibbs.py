"""Stationary Gibbs densities of the play diffusion.

Under the throughput-decreasing modulation the stationary log-density is, up
to a constant, ``Lambda(v) / (eta * Y) - log H(v)`` with ``Lambda`` the
Lyapunov function of the noiseless dynamics, ``Y = prod y_i`` and
``H = prod (1 - v_i)**2``. Under the idle-time modulation it is

    Delta(v) = sum_i (y_i / eta - 1) log v_i + prod_i (1 - v_i) / eta.

Normalizers are computed by open midpoint quadrature on a tensor grid,
accumulated with log-sum-exp because region probabilities range over many
orders of magnitude.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .diffusion import RegionSpec, dlog_h_vector, h_vector
from .errors import DomainError
from .game import GameConfig, Variant, drift_vector, lyapunov

DEFAULT_RESOLUTION = {2: 512, 3: 128, 4: 48}
MIN_RESOLUTION = 32
MAX_DIM = 4

LogDensity = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ExponentParts:
    Lambda: np.ndarray | float
    logH: np.ndarray | float
    Y: float
    Delta: np.ndarray | float


def _require_eta(cfg: GameConfig) -> None:
    if not cfg.eta > 0.0:
        raise DomainError("the stationary density needs eta > 0")


def exponent_parts(v, cfg: GameConfig) -> ExponentParts:
    _require_eta(cfg)
    v = cfg.check_interior(v)
    y = cfg.demands
    lam = lyapunov(v, y)
    log_h = 2.0 * np.sum(np.log1p(-v), axis=-1)
    delta = np.sum((y / cfg.eta - 1.0) * np.log(v), axis=-1) + np.prod(1.0 - v, axis=-1) / cfg.eta
    return ExponentParts(lam, log_h, float(np.prod(y)), delta)


def _log_density(cfg: GameConfig) -> LogDensity:
    y = cfg.demands
    eta = cfg.eta
    if cfg.variant is Variant.THROUGHPUT_DECREASING:
        scale = eta * float(np.prod(y))

        def fn(v):
            return lyapunov(v, y) / scale - 2.0 * np.sum(np.log1p(-v), axis=-1)
    else:
        c = y / eta - 1.0

        def fn(v):
            return np.sum(c * np.log(v), axis=-1) + np.prod(1.0 - v, axis=-1) / eta
    return fn


def exponent(v, cfg: GameConfig):
    """Log of the unnormalized stationary density at ``v`` (strictly inside D)."""
    _require_eta(cfg)
    v = cfg.check_interior(v)
    out = _log_density(cfg)(v)
    return float(out) if np.ndim(out) == 0 else out


def logp_gradient_identity(v, cfg: GameConfig, step: float = 1e-6, relative: bool = True) -> float:
    """Largest relative mismatch between the finite-difference gradient of
    :func:`exponent` and ``drift_i / h_i - d log h_i / d v_i``.

    The closed form is what the stationary Fokker-Planck equation demands of
    ``d log p / d v_i``; a small residual certifies the density. Each
    component is measured relative to ``|drift_i / h_i| + |d log h_i / d v_i|``
    because the two terms cancel along curves inside D.

    With ``relative`` the difference step for coordinate ``i`` is
    ``step * min(1, v_i, 1 - v_i)``, keeping the stencil well away from the
    log singularities at ``v_i = 0`` and ``v_i = 1``.
    """
    _require_eta(cfg)
    v = cfg.check_interior(v)
    hv = h_vector(v, cfg)
    if np.any(hv <= 0.0):
        raise DomainError(f"modulation vanishes at {v}")
    drift_term = drift_vector(v, cfg) / hv
    h_term = dlog_h_vector(v, cfg)
    closed = drift_term - h_term
    fn = _log_density(cfg)
    hs = step * np.minimum(1.0, np.minimum(v, 1.0 - v)) if relative else np.full(cfg.n, step)
    e = np.diag(hs)
    plus, minus = v + e, v - e
    cfg.check_interior(plus)
    cfg.check_interior(minus)
    fd = (fn(plus) - fn(minus)) / (2.0 * hs)
    return float(np.max(np.abs(fd - closed) / (np.abs(drift_term) + np.abs(h_term))))


# -- quadrature ---------------------------------------------------------------

UPPER_GRADING = 3.0


def _axis_grading(cfg: GameConfig, lo: np.ndarray, grade: bool) -> tuple[tuple[float, bool], ...]:
    """Per-axis ``(q, toward_upper)`` node-clustering rules.

    The idle-time density behaves like ``v_i ** (y_i/eta - 1)`` near
    ``v_i = 0``; substituting ``v = lo + L * s**q`` with ``q = eta / y_i``
    turns that integrable singularity into a smooth integrand in ``s``.
    The throughput-decreasing exponent grows like ``1/prod(1 - v_i)`` toward
    the upper corner, so nodes are clustered toward the upper face instead.
    """
    if not grade or not cfg.eta > 0.0:
        return tuple((1.0, False) for _ in range(cfg.n))
    if cfg.variant is Variant.THROUGHPUT_DECREASING:
        return tuple((UPPER_GRADING, True) for _ in range(cfg.n))
    y = cfg.demands
    return tuple(
        (cfg.eta / y[i], False) if lo[i] <= 0.0 and y[i] < cfg.eta else (1.0, False)
        for i in range(cfg.n)
    )


def _axis(lo: float, hi: float, res: int, q: float = 1.0, upper: bool = False) -> tuple[np.ndarray, np.ndarray]:
    s = (np.arange(res) + 0.5) / res
    L = hi - lo
    if upper:
        nodes = hi - L * (1.0 - s) ** q
        log_w = np.log(L * q / res) + (q - 1.0) * np.log1p(-s)
    else:
        nodes = lo + L * s**q
        log_w = np.log(L * q / res) + (q - 1.0) * np.log(s)
    return nodes, log_w


def _tensor_log_integral(fn: LogDensity, lo, hi, res: int, grading) -> tuple[float, tuple, tuple, np.ndarray]:
    axes, weights = zip(*(_axis(a, b, res, *gq) for a, b, gq in zip(lo, hi, grading)))
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    vals = fn(mesh)
    lw = sum(np.ix_(*weights))
    total = vals + lw
    if not np.all(np.isfinite(total)):
        bad = np.argwhere(~np.isfinite(total))[0]
        raise DomainError(f"non-finite log-density at node {mesh[tuple(bad)]}")
    return float(logsumexp(total)), axes, weights, vals


@dataclass(frozen=True)
class DensityGrid:
    """Normalized stationary density on a quadrature grid.

    ``log_z_coarse`` is the same normalizer at half the resolution; its
    distance to ``log_z`` serves as the quadrature error estimate.
    """

    cfg: GameConfig
    resolution: int
    lower: np.ndarray
    upper: np.ndarray
    axes: tuple[np.ndarray, ...]
    log_weights: tuple[np.ndarray, ...]
    exponent: np.ndarray
    log_z: float
    log_z_coarse: float
    grading: tuple[tuple[float, bool], ...]
    log_density: LogDensity
    grade: bool = True

    @property
    def log_z_error(self) -> float:
        return abs(self.log_z - self.log_z_coarse)

    def density(self) -> np.ndarray:
        return np.exp(self.exponent - self.log_z)


@dataclass(frozen=True)
class RegionEstimate:
    name: str
    probability: float
    log10_probability: float
    refinement_delta: float

    def as_dict(self) -> dict:
        return {
            "probability": self.probability,
            "log10_probability": self.log10_probability,
            "refinement_delta": self.refinement_delta,
        }


def normalize(
    cfg: GameConfig,
    resolution: int | None = None,
    log_density: LogDensity | None = None,
    grade: bool = True,
) -> DensityGrid:
    """Evaluate and normalize the stationary density over the feasible box.

    Parameters
    ----------
    cfg : GameConfig
    resolution : int, optional
        Nodes per axis (default 512 for two players, less for more).
    log_density : callable, optional
        Replacement log-density, mapping an ``(..., n)`` array of plays to
        ``(...)`` values. Intended for testing the quadrature itself.
    grade : bool
        Cluster nodes where the density is singular or sharply peaked.
    """
    n = cfg.n
    if n > MAX_DIM:
        raise ValueError(f"tensor quadrature supports at most {MAX_DIM} players, got {n}")
    if resolution is None:
        resolution = DEFAULT_RESOLUTION[n]
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be >= {MIN_RESOLUTION}, got {resolution}")
    if log_density is None:
        _require_eta(cfg)
        log_density = _log_density(cfg)
    lo, hi = cfg.lower, cfg.upper
    q = _axis_grading(cfg, lo, grade)
    log_z, axes, weights, vals = _tensor_log_integral(log_density, lo, hi, resolution, q)
    log_zc = _tensor_log_integral(log_density, lo, hi, resolution // 2, q)[0]
    return DensityGrid(cfg, resolution, lo, hi, axes, weights, vals, log_z, log_zc, q, log_density, grade)


def estimate_region(grid: DensityGrid, region: RegionSpec) -> RegionEstimate:
    """Stationary probability of ``region`` with a refinement error estimate.

    The region box is intersected with the domain and integrated on its own
    grid, so the region edges need not align with the normalization grid.
    """
    box = region.intersect(grid.lower, grid.upper)
    if box is None:
        warnings.warn(f"region {region.name!r} does not meet the domain", stacklevel=2)
        return RegionEstimate(region.name, 0.0, -np.inf, 0.0)
    lo, hi = box
    q = _axis_grading(grid.cfg, lo, grid.grade)
    fine = _tensor_log_integral(grid.log_density, lo, hi, grid.resolution, q)[0] - grid.log_z
    coarse = _tensor_log_integral(grid.log_density, lo, hi, grid.resolution // 2, q)[0] - grid.log_z_coarse
    fine, coarse = min(fine, 0.0), min(coarse, 0.0)
    p, pc = np.exp(fine), np.exp(coarse)
    return RegionEstimate(region.name, float(p), float(fine / np.log(10.0)), float(abs(p - pc)))


def region_probability(grid: DensityGrid, region: RegionSpec) -> float:
    return estimate_region(grid, region).probability


def density_surface(cfg: GameConfig, resolution: int | None = None, grid: DensityGrid | None = None) -> np.ndarray:
    """Rows ``(v1, v2, exponent, density)`` on a uniform midpoint grid of D.

    ``density`` is normalized with the quadrature normalizer, so it is a
    proper density in ``v`` even where the uniform grid under-resolves a
    boundary singularity.
    """
    if cfg.n != 2:
        raise ValueError(f"density surfaces are two-dimensional; got {cfg.n} players")
    if grid is None:
        grid = normalize(cfg, resolution)
    res = grid.resolution if resolution is None else resolution
    axes = [_axis(a, b, res)[0] for a, b in zip(grid.lower, grid.upper)]
    rows = np.array(list(itertools.product(*axes)))
    ex = grid.log_density(rows)
    return np.column_stack([rows, ex, np.exp(ex - grid.log_z)])


def write_surface_csv(rows: np.ndarray, path) -> None:
    np.savetxt(path, rows, delimiter=",", header="v1,v2,exponent,density", comments="", fmt="%.17g")
