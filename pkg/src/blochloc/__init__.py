"""Stochastic Bloch-vector dynamics of a noisy two-configuration system.

The state of a two-level system is carried as a Bloch vector (x, y, z); the
environment enters as a white-noise modulation of the energy asymmetry and,
optionally, as a state-dependent tunnelling amplitude alpha(z).
"""

__version__ = "0.1.0"

from .core import (
    BlochVector,
    TimeGrid,
    UnphysicalStateError,
    bloch_from_density,
    density_from_bloch,
    purity,
)
from .dynamics import (
    AlphaModel,
    ConstantAlpha,
    CustomAlpha,
    PolynomialEvenAlpha,
    eval_alpha,
    ito_diffusion,
    ito_drift,
    register_alpha,
)
from .integrators import (
    DegenerateStateError,
    Scheme,
    Trajectory,
    integrate_batch,
    integrate_path,
    renormalize,
    step_euler_maruyama,
    step_rotation_splitting,
)
from .ensemble import (
    EnsembleStats,
    NoisePath,
    RunConfig,
    brownian_path,
    compare_to_analytic,
    derive_path_seed,
    merge_stats,
    run_ensemble,
)
