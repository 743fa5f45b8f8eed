"""Diffusion model of probabilistic loss aversion in a slotted-ALOHA game."""

from .errors import (
    AlohaDiffusionError,
    ConfigError,
    DomainError,
    IndeterminateStabilityError,
    SimulationDivergedError,
    SingularConfigurationError,
)
from .game import (
    GameConfig,
    PlayerParams,
    Stability,
    Variant,
    classify_equilibrium,
    deadlock,
    drift,
    drift_jacobian,
    drift_vector,
    interior_equilibria,
    lyapunov,
    throughput,
)
from .playmap import SigmoidParams, f, g, g_inverse, g_prime
from .diffusion import RegionSpec, SimConfig, Trajectory, h, sigma, simulate, step
from .gibbs import (
    DensityGrid,
    RegionEstimate,
    density_surface,
    estimate_region,
    exponent,
    exponent_parts,
    logp_gradient_identity,
    normalize,
    region_probability,
)

__version__ = "0.1.0"
