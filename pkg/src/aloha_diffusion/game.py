"""Deterministic slotted-ALOHA game quantities.

Player ``i`` transmits in a slot with probability ``v[i]`` and succeeds when
nobody else transmits, so its throughput is ``v[i] * prod_{j != i}(1 - v[j])``.
Each player pushes ``v[i]`` toward the play that would meet its throughput
demand ``y[i]`` if the others held still (the Jacobi better-response
dynamics). Indices are zero based throughout.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, IndeterminateStabilityError, SingularConfigurationError
from .playmap import SigmoidParams


class Variant(str, enum.Enum):
    """Which noise modulation the players use."""

    THROUGHPUT_DECREASING = "throughput_decreasing"
    IDLE_TIME = "idle_time"


class Stability(str, enum.Enum):
    STABLE = "stable"
    SADDLE = "saddle"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class PlayerParams:
    y: float
    gamma: float
    delta: float
    w: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.y < 1.0:
            raise ValueError(f"demand y must lie in (0, 1), got {self.y}")
        # validates gamma/delta/w
        self.sigmoid

    @classmethod
    def from_range(cls, y: float, lower: float, upper: float, w: float = 1.0) -> "PlayerParams":
        s = SigmoidParams.from_range(lower, upper, w)
        return cls(y=y, gamma=s.gamma, delta=s.delta, w=w)

    @property
    def sigmoid(self) -> SigmoidParams:
        return SigmoidParams(self.gamma, self.delta, self.w)


@dataclass(frozen=True)
class GameConfig:
    """Full game description.

    ``eta`` is the loss-aversion meta-parameter shared by every player.
    ``eta == 0`` is admitted and switches the noise off entirely; the Gibbs
    densities need ``eta > 0``.
    """

    players: tuple[PlayerParams, ...]
    eta: float
    variant: Variant = Variant.THROUGHPUT_DECREASING

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "variant", Variant(self.variant))
        if len(self.players) < 2:
            raise ValueError(f"need at least 2 players, got {len(self.players)}")
        if not self.eta >= 0.0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")

    @classmethod
    def symmetric_range(
        cls,
        demands: Sequence[float],
        lower: float,
        upper: float,
        eta: float,
        variant: Variant | str = Variant.THROUGHPUT_DECREASING,
        w: float = 1.0,
    ) -> "GameConfig":
        """Every player shares the play range ``(lower, upper)``."""
        players = tuple(PlayerParams.from_range(y, lower, upper, w) for y in demands)
        return cls(players, eta, Variant(variant))

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def demands(self) -> np.ndarray:
        return np.array([p.y for p in self.players])

    @property
    def sigmoids(self) -> tuple[SigmoidParams, ...]:
        return tuple(p.sigmoid for p in self.players)

    @property
    def lower(self) -> np.ndarray:
        return np.array([s.lower for s in self.sigmoids])

    @property
    def upper(self) -> np.ndarray:
        return np.array([s.upper for s in self.sigmoids])

    @property
    def center(self) -> np.ndarray:
        return np.array([s.center for s in self.sigmoids])

    def replace(self, **changes) -> "GameConfig":
        kw = dict(players=self.players, eta=self.eta, variant=self.variant)
        kw.update(changes)
        return GameConfig(**kw)

    def check_interior(self, v) -> np.ndarray:
        """Return ``v`` as an array, raising if it is not strictly inside D."""
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.n:
            raise ValueError(f"expected {self.n} coordinates, got shape {v.shape}")
        if np.any(v <= self.lower) or np.any(v >= self.upper):
            raise DomainError(f"play {v} is not strictly inside the feasible box")
        return v


def _demands(game) -> np.ndarray:
    if isinstance(game, GameConfig):
        return game.demands
    return np.asarray(game, dtype=float)


def _others_idle(v: np.ndarray) -> np.ndarray:
    """``prod_{j != i}(1 - v[j])`` for each ``i`` along the last axis."""
    q = 1.0 - v
    n = v.shape[-1]
    out = np.empty_like(v)
    for i in range(n):
        out[..., i] = np.prod(np.delete(q, i, axis=-1), axis=-1)
    return out


def _check_index(v: np.ndarray, i: int) -> None:
    if not 0 <= i < v.shape[-1]:
        raise IndexError(f"player index {i} out of range for {v.shape[-1]} players")


def throughput(v, i: int) -> float:
    v = np.asarray(v, dtype=float)
    _check_index(v, i)
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise DomainError(f"transmission probabilities must lie in [0, 1], got {v}")
    return float(v[i] * np.prod(np.delete(1.0 - v, i)))


def drift_vector(v, game) -> np.ndarray:
    """The signed Jacobi drift ``y_i / prod_{j != i}(1 - v_j) - v_i``.

    Works on a single play or on a stack of plays (last axis = players).
    """
    v = np.asarray(v, dtype=float)
    y = _demands(game)
    idle = _others_idle(v)
    if np.any(idle <= 0.0):
        raise SingularConfigurationError(
            "another player transmits with probability 1; drift is singular"
        )
    return y / idle - v


def drift(v, game, i: int) -> float:
    v = np.asarray(v, dtype=float)
    _check_index(v, i)
    return float(drift_vector(v, game)[i])


def drift_jacobian(v, game) -> np.ndarray:
    """Analytic Jacobian of :func:`drift_vector`; ``J[..., i, k] = dF_i/dv_k``."""
    v = np.asarray(v, dtype=float)
    y = _demands(game)
    n = v.shape[-1]
    idle = _others_idle(v)
    if np.any(idle <= 0.0):
        raise SingularConfigurationError("drift Jacobian is singular at this play")
    # dF_i/dv_k = y_i / (idle_i * (1 - v_k)) for k != i, and -1 on the diagonal
    J = (y / idle)[..., :, None] / (1.0 - v)[..., None, :]
    idx = np.arange(n)
    J[..., idx, idx] = -1.0
    return J


def lyapunov(v, demands) -> np.ndarray | float:
    """Lyapunov function of the noiseless Jacobi dynamics.

    ``prod_i y_i/(1-v_i) - sum_j (v_j/(1-v_j) + log(1-v_j)) prod_{i != j} y_i``
    """
    v = np.asarray(v, dtype=float)
    y = _demands(demands)
    if np.any(v >= 1.0):
        raise DomainError("lyapunov function is undefined for v_i >= 1")
    q = 1.0 - v
    first = np.prod(y / q, axis=-1)
    others = np.array([np.prod(np.delete(y, j)) for j in range(y.size)])
    second = np.sum((v / q + np.log1p(-v)) * others, axis=-1)
    out = first - second
    return float(out) if np.ndim(out) == 0 else out


def deadlock(n: int) -> np.ndarray:
    """The all-transmit boundary equilibrium, where every throughput is zero."""
    return np.ones(n)


# -- equilibria ---------------------------------------------------------------

NEWTON_MAX_ITER = 200
NEWTON_DAMPING = 0.5
NEWTON_MAX_HALVINGS = 30
NEWTON_TOL = 1e-13
DEDUP_RADIUS = 1e-6
MAX_START_POINTS = 16**4


def _interior_closed_form(y: np.ndarray) -> list[np.ndarray]:
    # eliminate v1 = y1/(1-v2): v2^2 - (1 - y1 + y2) v2 + y2 = 0
    y1, y2 = y
    b = 1.0 - y1 + y2
    disc = b * b - 4.0 * y2
    if disc < 0.0:
        return []
    # b > 0 always; the small root comes from the product of roots (= y2)
    r_big = (b + np.sqrt(disc)) / 2.0
    roots = sorted({r_big, y2 / r_big})
    out = []
    for v2 in roots:
        if not 0.0 < v2 < 1.0:
            continue
        v1 = y1 / (1.0 - v2)
        if 0.0 < v1 < 1.0:
            out.append(np.array([v1, v2]))
    return out


def _start_grid(n: int, per_axis: int) -> np.ndarray:
    while per_axis > 2 and per_axis**n > MAX_START_POINTS:
        per_axis -= 1
    nodes = (np.arange(per_axis) + 0.5) / per_axis
    return np.array(list(itertools.product(nodes, repeat=n)))


def _solve(J: np.ndarray, F: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(J, F[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.array([np.linalg.lstsq(a, b, rcond=None)[0] for a, b in zip(J, F)])


def _newton(y: np.ndarray, starts: np.ndarray) -> np.ndarray:
    """Damped Newton on the drift field from many starts at once.

    Returns the converged points (rows); non-converged starts are dropped.
    """
    v = starts.copy()
    active = np.ones(len(v), dtype=bool)
    converged = np.zeros(len(v), dtype=bool)

    def resid(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            F = y / _others_idle(x) - x
        return F, np.max(np.abs(F), axis=-1)

    F, norm = resid(v)
    for _ in range(NEWTON_MAX_ITER):
        converged |= active & (norm <= NEWTON_TOL)
        active &= ~converged & np.isfinite(norm)
        if not active.any():
            break
        idx = np.flatnonzero(active)
        J = drift_jacobian(v[idx], y)
        dx = -_solve(J, F[idx])
        lam = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        for _ in range(NEWTON_MAX_HALVINGS):
            trial = v[idx] + lam[:, None] * dx
            inside = np.all((trial > 0.0) & (trial < 1.0), axis=-1)
            Ft, nt = resid(np.where(inside[:, None], trial, 0.5))
            ok = pending & inside & (nt < norm[idx])
            sel = idx[ok]
            v[sel], F[sel], norm[sel] = trial[ok], Ft[ok], nt[ok]
            pending &= ~ok
            if not pending.any():
                break
            lam[pending] *= NEWTON_DAMPING
        # starts whose step could not be accepted are stuck
        stuck = idx[pending]
        converged[stuck] |= norm[stuck] <= 1e-12
        active[stuck] = False
    converged |= norm <= NEWTON_TOL
    return v[converged]


def _dedup(points: Sequence[np.ndarray], radius: float = DEDUP_RADIUS) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.max(np.abs(p - q)) > radius for q in kept):
            kept.append(p)
    return sorted(kept, key=tuple)


def interior_equilibria(game, method: str = "auto", grid_per_axis: int = 16) -> list[np.ndarray]:
    """Interior Nash equilibria in the open unit cube.

    Parameters
    ----------
    game : GameConfig or sequence of demands
    method : {"auto", "closed_form", "newton"}
        ``auto`` uses the quadratic for two players and Newton otherwise.
    grid_per_axis : int
        Newton start points per axis; the total is capped at ``16**4``.

    Returns
    -------
    list of ndarray
        Sorted lexicographically. An empty list means the demands admit no
        interior equilibrium (only deadlock remains).
    """
    y = _demands(game)
    n = y.size
    if method == "auto":
        method = "closed_form" if n == 2 else "newton"
    if method == "closed_form":
        if n != 2:
            raise ValueError("closed-form equilibria exist only for two players")
        return _interior_closed_form(y)
    if method != "newton":
        raise ValueError(f"unknown method {method!r}")
    roots = _newton(y, _start_grid(n, grid_per_axis))
    return _dedup(list(roots))


def classify_equilibrium(v, game, tol: float = 1e-8) -> Stability:
    """Linear stability of an equilibrium of the noiseless dynamics."""
    v = np.asarray(v, dtype=float)
    F = drift_vector(v, game)
    if np.max(np.abs(F)) > 1e-9:
        raise DomainError(f"{v} is not an equilibrium (max |drift| = {np.max(np.abs(F)):.3g})")
    re = np.linalg.eigvals(drift_jacobian(v, game)).real
    if np.any(np.abs(re) <= tol):
        raise IndeterminateStabilityError(f"eigenvalue real parts {re} too close to zero")
    if np.all(re < 0.0):
        return Stability.STABLE
    if np.all(re > 0.0):
        return Stability.UNSTABLE
    return Stability.SADDLE
