"""Adaptive 2D finite elements with explicit recovery-based error estimators.

Library layout:

* :mod:`afemrec.mesh` - oriented triangulations, newest-vertex bisection,
  mesh text I/O
* :mod:`afemrec.basis` - local RT / BDM / NE / ND / P1 / CR bases and exact
  local integration
* :mod:`afemrec.solvers` - conforming, mixed, and nonconforming solvers plus
  edge traces
* :mod:`afemrec.recovery` - explicit edge-patch flux / gradient recovery
  with its independent patch-minimization oracle
* :mod:`afemrec.estimators` - recovery indicators, residual references,
  oscillation, true energy error
* :mod:`afemrec.problems` - checkerboard interface benchmark and
  manufactured problems
* :mod:`afemrec.driver` - the solve / estimate / mark / refine loop
* :mod:`afemrec.io`, :mod:`afemrec.cli` - serialization and command line
"""

from .driver import AfemConfig, ConvergenceHistory, dorfler_mark, run_afem
from .estimators import (
    IndicatorSet,
    indicators,
    oscillation,
    residual_edge_estimator,
    true_energy_error,
)
from .mesh import (
    Mesh,
    build_mesh,
    edge_patch,
    initial_kellogg_mesh,
    read_mesh_text,
    refine,
    unit_square_mesh,
    write_mesh_text,
)
from .problems import (
    BenchmarkProblem,
    get_problem,
    kellogg_problem,
    manufactured_affine,
    manufactured_smooth,
    verify_exact,
)
from .recovery import (
    RecoveredField,
    compute_jumps,
    local_oracle,
    patch_weights,
    recover,
)
from .solvers import (
    CoefficientField,
    DiscreteSolution,
    ProblemData,
    edge_traces,
    solve_conforming,
    solve_mixed,
    solve_nonconforming,
)

__version__ = "0.1.0"
