"""Point-vortex dynamics on the sphere, plane, hyperbolic plane and flat torus."""

from .analysis import (
    THRESHOLDS,
    ClassificationReport,
    Verdict,
    classify,
    conservation_drift,
    convergence_order,
    pairwise_invariant_drift,
    regime_exponent,
    separation_exponent,
)
from .conserved import conserved_set, project_constraints
from .errors import (
    Collision,
    ConfigError,
    IncompatibleMethod,
    Infeasible,
    NonTimelike,
    NotARotation,
    SolverDiverged,
    VortexError,
    ZeroVector,
)
from .geometry import Geometry
from .integrators import IntegratorSpec, Method, Status, Trajectory, final_state, integrate
from .models import TorusKernel, VortexState, hamiltonian, rhs
from .scenario import ScenarioSpec, build_initial_state, load_scenario, parse_scenario

__version__ = "0.1.0"
