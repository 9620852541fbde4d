"""Fourth-order semi-explicit compact finite-difference solver for the
multidimensional acoustic wave equation, with a classical explicit
second-order reference scheme, exact-solution oracles and a convergence
harness."""

from .backends import BACKEND, USE_NUMBA, max_workers, set_workers
from .compact import (Medium, RunResult, SchemeState, StabilityReport,
                      WaveProblem, check_stability, first_step, main_step,
                      run)
from .explicit import explicit_first_step, explicit_step
from .grid import (AxisMesh, GridField, TensorMesh, inner_l2, laplacian,
                   make_mesh, norm_energy, norm_l2, numerov_average,
                   second_difference, seminorm_h1)
from .numerov import (AuxFieldSet, NumerovLineSystem, compact_laplacian,
                      fill_boundary, solve_direction, solve_numerov_line)

__version__ = "0.1.0"
