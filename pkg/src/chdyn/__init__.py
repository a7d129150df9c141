"""Cahn-Hilliard equation with dynamic boundary conditions: coupled
bulk-surface P1 finite elements in space, linearly implicit BDF methods
of order 1 to 5 in time, plus convergence and simulation experiments."""

from .bdf import (
    BdfScheme,
    DivergenceError,
    StartingMode,
    StateHistory,
    bdf_coefficients,
    extrapolate,
    run,
    starting_values,
    step,
)
from .fem import (
    AssemblyError,
    FemMatrices,
    assemble,
    dual_norm,
    energy,
    interpolate,
    nonlinear_load,
    norm_K,
    norm_M,
    ritz_project,
    seminorm_A,
    total_mass,
)
from .harness import (
    ConfigError,
    ConvergenceRecord,
    ExperimentKind,
    RunConfig,
    converge_space,
    converge_time,
    eoc,
    load_config,
    measure_errors,
    simulate,
)
from .linsolve import BlockSystem, SolverError, build_block_system, solve, spd_solve
from .mesh import (
    DomainKind,
    Mesh,
    MeshError,
    mesh_width,
    prolong,
    refine,
    unit_disk_mesh,
    unit_square_mesh,
    validate,
)
from .model import (
    InitialData,
    InitialKind,
    Potential,
    Problem,
    double_well,
    initial_field,
    manufactured_disk_problem,
)

__version__ = "0.1.0"
