"""The adaptive solve - estimate - mark - refine loop.

Runs one of the three discretizations with its recovery-based estimator,
marks elements by Doerfler bulk criterion on the element indicators, and
bisects until a degree-of-freedom or iteration budget is reached.  Given
the same configuration the loop is fully deterministic (sparse direct
solves, ordered marking with id tie-breaks, deterministic refinement).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimators import indicators, oscillation, true_energy_error
from .mesh import Mesh, refine
from .problems import BenchmarkProblem, get_problem
from .recovery import recover
from .solvers import (
    edge_traces,
    solve_conforming,
    solve_mixed,
    solve_nonconforming,
)

__all__ = [
    "AfemConfig",
    "IterationRecord",
    "ConvergenceHistory",
    "FAMILY_CHOICES",
    "dorfler_mark",
    "count_dofs",
    "run_afem",
]

FAMILY_CHOICES = {
    "conforming": ("rt", "bdm"),
    "mixed": ("nd",),
    "nonconforming": ("rt-ne", "bdm-nd"),
}

_SOLVERS = {
    "conforming": solve_conforming,
    "mixed": solve_mixed,
    "nonconforming": solve_nonconforming,
}


@dataclass
class AfemConfig:
    """Configuration of one adaptive run.

    ``family`` names the recovery: ``rt`` / ``bdm`` for the conforming
    method, ``nd`` for mixed, and the pairs ``rt-ne`` / ``bdm-nd`` for the
    nonconforming method.  ``theta`` is the bulk-marking parameter in
    (0, 1); ``uniform=True`` disables marking and refines every element.
    """

    problem: BenchmarkProblem | str = "kellogg"
    method: str = "conforming"
    family: str = "rt"
    theta: float = 0.5
    max_dof: int = 100_000
    max_iter: int = 200
    c1: float = 0.5
    initial_n: int = 8
    uniform: bool = False

    def __post_init__(self):
        if self.method not in FAMILY_CHOICES:
            raise ValueError(f"unknown method {self.method!r}")
        if self.family not in FAMILY_CHOICES[self.method]:
            raise ValueError(
                f"recovery {self.family!r} is not defined for the "
                f"{self.method} method; valid: {FAMILY_CHOICES[self.method]}"
            )
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        if not 0.0 < self.c1 < 1.0:
            raise ValueError("c1 must lie in (0, 1)")
        if self.max_dof < 1 or self.max_iter < 1:
            raise ValueError("budgets must be positive")


@dataclass
class IterationRecord:
    iteration: int
    dofs: int
    eta: float
    true_error: float | None
    effectivity: float | None
    h_f: float | None
    min_indicator: float
    max_indicator: float
    n_triangles: int
    min_diam: float
    max_diam: float


@dataclass
class ConvergenceHistory:
    """Per-iteration convergence data plus the final mesh and indicators."""

    config: AfemConfig
    records: list = field(default_factory=list)
    final_mesh: Mesh = None
    final_indicators: np.ndarray = None

    def column(self, name: str) -> np.ndarray:
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def slope(self, what: str = "true_error", window: int = 10) -> float:
        """Least-squares slope of log(column) against log(dofs) over the
        trailing ``window`` iterations."""
        dofs = self.column("dofs")
        vals = self.column(what)
        keep = np.isfinite(vals) & (vals > 0)
        dofs, vals = dofs[keep], vals[keep]
        if len(vals) < 2:
            return float("nan")
        dofs, vals = dofs[-window:], vals[-window:]
        coef = np.polyfit(np.log(dofs), np.log(vals), 1)
        return float(coef[0])


def dorfler_mark(eta_elements: np.ndarray, theta: float) -> np.ndarray:
    """Smallest prefix of elements (by descending indicator, id tie-break)
    whose squared indicators reach ``theta^2`` of the total.  All-zero
    indicators yield an empty set."""
    eta_sq = np.asarray(eta_elements, dtype=float) ** 2
    total = eta_sq.sum()
    if total <= 0.0:
        return np.array([], dtype=np.int64)
    order = np.lexsort((np.arange(len(eta_sq)), -eta_sq))
    csum = np.cumsum(eta_sq[order])
    k = int(np.searchsorted(csum, theta**2 * total - 1e-14 * total)) + 1
    return np.sort(order[:k])


def count_dofs(mesh: Mesh, method: str) -> int:
    """Number of unknowns of the linear system actually solved."""
    if method == "conforming":
        return int(mesh.n_vertices - len(mesh.dirichlet_vertices))
    if method == "nonconforming":
        return int(mesh.n_edges - len(mesh.dirichlet_edges))
    if method == "mixed":
        return int(mesh.n_edges - len(mesh.neumann_edges) + mesh.n_triangles)
    raise ValueError(f"unknown method {method!r}")


def _estimate(mesh, A, config, data):
    sol = _SOLVERS[config.method](mesh, A, data)
    traces = edge_traces(mesh, A, sol, data)
    if config.method == "nonconforming":
        fam_flux, fam_grad = config.family.split("-")
        fields = (
            recover(mesh, A, traces, "nonconforming", fam_flux),
            recover(mesh, A, traces, "nonconforming", fam_grad),
        )
        ind = indicators(
            mesh, A, fields, "nonconforming", c=(config.c1, 1.0 - config.c1)
        )
    else:
        fld = recover(mesh, A, traces, config.method, config.family)
        ind = indicators(mesh, A, fld, config.method)
    return sol, ind


def run_afem(config: AfemConfig) -> ConvergenceHistory:
    """Execute the adaptive loop until the dof or iteration budget.

    Each iteration solves, estimates, and records; refinement follows unless
    a budget is hit or the estimator vanishes.  The true energy error and
    effectivity index are recorded whenever the problem carries an exact
    solution.
    """
    problem = (
        get_problem(config.problem) if isinstance(config.problem, str) else config.problem
    )
    data = problem.data
    mesh = problem.mesh_factory(config.initial_n)
    history = ConvergenceHistory(config=config)

    for iteration in range(1, config.max_iter + 1):
        A = problem.coefficient(mesh)
        sol, ind = _estimate(mesh, A, config, data)

        err = eff = None
        if data.has_exact:
            err = true_energy_error(
                mesh, A, sol, data.exact_grad, data.singular_points
            )
            eff = ind.eta_global / err if err > 0 else None
        try:
            h_f = oscillation(mesh, A, data.f)[0]
        except ValueError:
            h_f = None

        dofs = count_dofs(mesh, config.method)
        history.records.append(
            IterationRecord(
                iteration=iteration,
                dofs=dofs,
                eta=ind.eta_global,
                true_error=err,
                effectivity=eff,
                h_f=h_f,
                min_indicator=float(ind.eta_elements.min()),
                max_indicator=float(ind.eta_elements.max()),
                n_triangles=mesh.n_triangles,
                min_diam=float(mesh.tri_diam.min()),
                max_diam=float(mesh.tri_diam.max()),
            )
        )
        history.final_mesh = mesh
        history.final_indicators = ind.eta_elements

        if dofs >= config.max_dof or iteration >= config.max_iter:
            break
        if config.uniform:
            marked = np.arange(mesh.n_triangles)
        else:
            marked = dorfler_mark(ind.eta_elements, config.theta)
        if marked.size == 0:
            break
        mesh = refine(mesh, marked)

    return history
