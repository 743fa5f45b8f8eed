"""Sigmoid play-map ``g(u) = gamma * (tanh(u / w) + delta)``.

Players adjust an unconstrained coordinate ``u``; the transmission
probability they actually use is ``v = g(u)``, which always stays inside the
open interval ``(gamma * (delta - 1), gamma * (delta + 1))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# Points whose normalised coordinate |v/gamma - delta| is within this distance
# of 1 are treated as lying on the boundary.
BOUNDARY_TOL = 1e-12

_RANGE_SLACK = 1e-12


@dataclass(frozen=True)
class SigmoidParams:
    gamma: float
    delta: float
    w: float = 1.0

    def __post_init__(self):
        if not 1.0 <= self.delta < 2.0:
            raise ValueError(f"delta must satisfy 1 <= delta < 2, got {self.delta}")
        if not 0.0 < self.gamma <= 1.0 / (1.0 + self.delta) + _RANGE_SLACK:
            raise ValueError(
                f"gamma must satisfy 0 < gamma <= 1/(1+delta), got {self.gamma}"
            )
        if not self.w > 0.0:
            raise ValueError(f"w must be positive, got {self.w}")

    @classmethod
    def from_range(cls, lower: float, upper: float, w: float = 1.0) -> "SigmoidParams":
        """Parameters whose open range is ``(lower, upper)``."""
        if not 0.0 <= lower < upper <= 1.0:
            raise ValueError(f"need 0 <= lower < upper <= 1, got ({lower}, {upper})")
        gamma = (upper - lower) / 2.0
        delta = (upper + lower) / (upper - lower)
        return cls(gamma=gamma, delta=delta, w=w)

    @property
    def lower(self) -> float:
        return self.gamma * (self.delta - 1.0)

    @property
    def upper(self) -> float:
        return self.gamma * (self.delta + 1.0)

    @property
    def center(self) -> float:
        return self.gamma * self.delta


def g(u, p: SigmoidParams):
    return p.gamma * (np.tanh(np.asarray(u, dtype=float) / p.w) + p.delta)


def g_prime(u, p: SigmoidParams):
    """Analytic slope of ``g`` in ``u``."""
    t = np.tanh(np.asarray(u, dtype=float) / p.w)
    return p.gamma / p.w * (1.0 - t * t)


def _normalised(v, p: SigmoidParams):
    t = np.asarray(v, dtype=float) / p.gamma - p.delta
    if np.any(~np.isfinite(t)) or np.any(np.abs(t) >= 1.0 - BOUNDARY_TOL):
        raise DomainError(
            f"v={v!r} is not strictly inside ({p.lower}, {p.upper})"
        )
    return t


def g_inverse(v, p: SigmoidParams):
    """Unconstrained coordinate ``u`` with ``g(u) = v``.

    Raises
    ------
    DomainError
        If ``v`` is on or outside the open range of ``g``.
    """
    return p.w * np.arctanh(_normalised(v, p))


def f(v, p: SigmoidParams):
    """``g'(g^{-1}(v))`` written directly in ``v``.

    The value vanishes at the range bounds, which would make the noise
    amplitude infinite, so boundary points raise :class:`DomainError`.
    """
    t = _normalised(v, p)
    return p.gamma / p.w * (1.0 - t * t)
