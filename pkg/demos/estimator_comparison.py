"""Estimator comparison across the three discretizations.

Runs the smooth manufactured problem under uniform refinement with every
method / recovery pairing and tabulates estimator, true energy error, and
effectivity per level, together with the residual-type reference estimator.

Run:  python3 demos/estimator_comparison.py
"""

import numpy as np

from afemrec import manufactured_smooth, refine
from afemrec.estimators import indicators, residual_edge_estimator, true_energy_error
from afemrec.recovery import recover
from afemrec.solvers import (
    edge_traces,
    solve_conforming,
    solve_mixed,
    solve_nonconforming,
)

SOLVERS = {
    "conforming": solve_conforming,
    "mixed": solve_mixed,
    "nonconforming": solve_nonconforming,
}
SETUPS = [
    ("conforming", ("rt",)),
    ("conforming", ("bdm",)),
    ("mixed", ("nd",)),
    ("nonconforming", ("rt", "ne")),
    ("nonconforming", ("bdm", "nd")),
]

problem = manufactured_smooth()

print(f"{'method':>14} {'recovery':>9} {'level':>5} {'dofs':>6} "
      f"{'estimator':>11} {'error':>11} {'eff':>6} {'residual':>11}")
for method, fams in SETUPS:
    mesh = problem.mesh_factory(4)
    for level in range(4):
        A = problem.coefficient(mesh)
        sol = SOLVERS[method](mesh, A, problem.data)
        tr = edge_traces(mesh, A, sol, problem.data)
        fields = tuple(
            recover(mesh, A, tr, method, fam, validate=False) for fam in fams
        )
        ind = indicators(mesh, A, fields if len(fields) > 1 else fields[0], method)
        err = true_energy_error(mesh, A, sol, problem.data.exact_grad)
        res = residual_edge_estimator(mesh, A, tr, method)
        dofs = {
            "conforming": mesh.n_vertices - len(mesh.dirichlet_vertices),
            "nonconforming": mesh.n_edges - len(mesh.dirichlet_edges),
            "mixed": mesh.n_edges + mesh.n_triangles,
        }[method]
        print(
            f"{method:>14} {'-'.join(fams):>9} {level:>5} {dofs:>6} "
            f"{ind.eta_global:>11.4e} {err:>11.4e} {ind.eta_global/err:>6.3f} "
            f"{res.eta_global:>11.4e}"
        )
        mesh = refine(mesh, np.arange(mesh.n_triangles))
    print()
