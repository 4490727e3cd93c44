"""P1 finite elements and Picard iteration for nonlinear Biot poroelasticity."""

from .assembly import (assemble_coupling, assemble_elasticity, assemble_load, assemble_mass,
                       assemble_stiffness, assemble_weighted_stiffness)
from .diagnostics import (MMSCase, incompressible_limit, mms_convergence, postprocess_fields,
                          solution_estimates, uniqueness_monitor, uniqueness_probe)
from .errors import ConfigurationError, PicardNonConvergence, PreconditionError, SolverBreakdown
from .evolution import (TrajectoryRecord, energy_audit_linear, solve_direct_trajectory,
                        solve_linear_trajectory, step_linear, translate_problem)
from .fixedpoint import picard_solve, verify_fixed_point
from .mesh import DofMap, Mesh, build_dofmap, build_unit_mesh
from .operators import BiotOperators
from .permeability import PermeabilityLaw
from .scenario import Scenario, parse_scenario, scenario_from_dict

__version__ = "0.1.0"

__all__ = [
    "BiotOperators", "ConfigurationError", "DofMap", "MMSCase", "Mesh", "PermeabilityLaw",
    "PicardNonConvergence", "PreconditionError", "Scenario", "SolverBreakdown", "TrajectoryRecord",
    "assemble_coupling", "assemble_elasticity", "assemble_load", "assemble_mass", "assemble_stiffness",
    "assemble_weighted_stiffness", "build_dofmap", "build_unit_mesh", "energy_audit_linear",
    "incompressible_limit", "mms_convergence", "parse_scenario", "picard_solve", "postprocess_fields",
    "scenario_from_dict", "solution_estimates", "solve_direct_trajectory", "solve_linear_trajectory",
    "step_linear", "translate_problem", "uniqueness_monitor", "uniqueness_probe", "verify_fixed_point",
]
