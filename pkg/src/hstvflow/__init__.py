"""Total variation gradient flow in H^{-s} on periodic 1D grids.

Each implicit Euler step is solved through its dual by a projected gradient
(forward-backward) iteration on a bounded vector field, with fractional
Laplacians applied spectrally.
"""

from .diffops import div, grad, project_ball, tv, tv_phys
from .errors import (
    ConfigurationError,
    ConsistencyError,
    ContractViolation,
    DivergenceError,
    HSTVError,
)
from .flow import FlowParams, Trajectory, detect_extinction, discrete_speed, evolve
from .kernels import DEFAULT_BACKEND
from .solver import (
    AUTO,
    ProxResult,
    ProxSolver,
    SolverParams,
    dual_energy,
    dual_step,
    duality_gap,
    ergodic_average,
    primal_energy,
    solve_prox,
    stability_max_lambda,
)
from .spectral import (
    Grid,
    SpectralCache,
    apply_frac_power,
    dft,
    hs_inner,
    hs_norm,
    idft,
    laplacian_eigenvalues,
)

__version__ = "0.1.0"
