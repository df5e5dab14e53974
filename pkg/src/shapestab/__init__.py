"""Energy shaping and Lyapunov-constraint stabilization of simple Hamiltonian systems."""

__version__ = "0.1.0"

from .errors import (ConfigError, DimensionError, DomainError, MatchingError,  # noqa: F401
                     RankDeficiencyError, ShapestabError, UnknownModelError)
from .matching import (WhatBasis, count_equations, kinetic_residual, matching_report,  # noqa: F401
                       potential_residual, what_basis)
from .model import (Equilibrium, MechanicalModel, ShapingCandidate, consistency_check,  # noqa: F401
                    default_candidate, derived_quadratic_shaping, list_models, registry_get,
                    trivial_candidate, validate_equilibrium)
from .sampling import Box, Sampler  # noqa: F401
from .simulator import (TrajectoryRecord, closed_loop_field, convergence_check, integrate,  # noqa: F401
                        lyapunov_monitor, write_csv)
from .synthesis import (ControlLaw, DissipationSpec, GyroSpec, ShapingProblem, control_CH,  # noqa: F401
                        control_LCB, dissipative_force, gyro_eval, gyro_force, lcb_feasibility,
                        project_W, single_actuator_control, upsilon, verify_equivalence, zero_law)
from .tensor_core import (Connection, CotangentState, QuadBasicFn, base_derivative,  # noqa: F401
                          constant_connection, fiber_derivative, flat_connection, levi_civita,
                          poisson_bracket_simple)
