"""Semi-discretizations, time integration, exact solutions and norms."""

from .advection import (
    DEFAULT_ALPHA,
    AdvectionSystem,
    EquivalenceRun,
    SpectrumReport,
    advect_equivalence,
    advection_system,
    dg_reduce,
    energy_matrix,
    exact_advection,
    spectrum,
)
from .burgers import (
    VARIANTS,
    BurgersRun,
    BurgersScheme,
    build_scheme,
    burgers_rhs,
    burgers_run,
    convergence_rates,
    dg_rhs_from_nodal,
    ec_rhs_hadamard,
    exact_burgers,
    l2_diff,
    project_field,
    total_entropy,
)
from .timestep import SolutionBlowup, lsrk45_integrate
