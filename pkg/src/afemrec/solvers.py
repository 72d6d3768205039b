"""The three discretizations of the diffusion problem and their edge traces.

* P1 conforming Galerkin (`solve_conforming`),
* lowest-order Raviart-Thomas / P0 mixed saddle point (`solve_mixed`),
* Crouzeix-Raviart nonconforming (`solve_nonconforming`).

All data callables (``f``, ``g_D``, ``g_N``, exact solution and gradient)
take coordinate arrays ``(x, y)`` and must broadcast.  Dirichlet data is
imposed by interpolation at vertices (P1) and edge midpoints (CR / RT
right-hand sides), which is exact for the piecewise-affine boundary data the
formulas assume.  Right-hand sides use the 3-point edge-midpoint rule, exact
for quadratic integrands.

Assembly is vectorized over elements; outputs are immutable arrays, so all
post-solve queries are safe for concurrent use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh

__all__ = [
    "CoefficientField",
    "ProblemData",
    "DiscreteSolution",
    "EdgeTraces",
    "SolverError",
    "solve_conforming",
    "solve_mixed",
    "solve_nonconforming",
    "edge_traces",
    "mixed_flux_at",
    "mixed_divergence",
]


class SolverError(RuntimeError):
    """Linear solve failed or violated its accuracy contract."""


class CoefficientField:
    """Per-element constant SPD 2x2 diffusion tensor.

    ``tensor`` is (nt, 2, 2); ``inv`` its elementwise inverse; ``scalar`` is
    the (nt,) isotropic view when every ``A_K = alpha_K * I``, else None.
    """

    def __init__(self, tensor: np.ndarray):
        tensor = np.asarray(tensor, dtype=float)
        if tensor.ndim != 3 or tensor.shape[1:] != (2, 2):
            raise ValueError("coefficient tensor must have shape (nt, 2, 2)")
        scale = max(np.abs(tensor).max(), 1.0)
        if np.abs(tensor[:, 0, 1] - tensor[:, 1, 0]).max() > 1e-14 * scale:
            raise ValueError("coefficient tensor is not symmetric")
        det = tensor[:, 0, 0] * tensor[:, 1, 1] - tensor[:, 0, 1] * tensor[:, 1, 0]
        if np.any(tensor[:, 0, 0] <= 0) or np.any(det <= 0):
            raise ValueError("coefficient tensor is not positive definite")
        self.tensor = tensor
        self.inv = np.linalg.inv(tensor)
        iso = (
            np.abs(tensor[:, 0, 1]).max() <= 1e-14 * scale
            and np.abs(tensor[:, 0, 0] - tensor[:, 1, 1]).max() <= 1e-14 * scale
        )
        self.scalar = tensor[:, 0, 0].copy() if iso else None

    @classmethod
    def isotropic(cls, mesh: Mesh, alpha) -> "CoefficientField":
        """Scalar coefficient: constant, per-element array, or callable of
        the barycenter coordinates."""
        if callable(alpha):
            b = mesh.tri_barycenters()
            vals = np.asarray(alpha(b[:, 0], b[:, 1]), dtype=float)
        else:
            vals = np.broadcast_to(
                np.asarray(alpha, dtype=float), (mesh.n_triangles,)
            ).astype(float)
        tensor = np.zeros((mesh.n_triangles, 2, 2))
        tensor[:, 0, 0] = vals
        tensor[:, 1, 1] = vals
        return cls(tensor)

    @classmethod
    def from_tensor(cls, mesh: Mesh, A) -> "CoefficientField":
        """Full tensor coefficient: one 2x2 for all, per-element (nt, 2, 2),
        or callable of the barycenter coordinates returning (nt, 2, 2)."""
        if callable(A):
            b = mesh.tri_barycenters()
            tensor = np.asarray(A(b[:, 0], b[:, 1]), dtype=float)
        else:
            A = np.asarray(A, dtype=float)
            if A.shape == (2, 2):
                tensor = np.broadcast_to(A, (mesh.n_triangles, 2, 2)).copy()
            else:
                tensor = A
        return cls(tensor)

    def require_scalar(self) -> np.ndarray:
        if self.scalar is None:
            raise ValueError("operation requires a scalar (isotropic) coefficient")
        return self.scalar


@dataclass
class ProblemData:
    """Source, boundary data, and (optionally) the exact solution.

    ``g_D`` should be piecewise affine and ``g_N`` piecewise constant per
    boundary edge for the boundary treatment to be exact; non-affine ``g_D``
    (as in the checkerboard benchmark) is imposed by interpolation.
    """

    f: callable
    g_D: callable
    g_N: callable | None = None
    exact_u: callable | None = None
    exact_grad: callable | None = None
    singular_points: tuple = ()

    @property
    def has_exact(self) -> bool:
        return self.exact_u is not None and self.exact_grad is not None


@dataclass
class DiscreteSolution:
    """Tagged union over the three methods.

    conforming      -> ``u_vertex`` (nv,)
    mixed           -> ``flux_edge`` (ne,) RT coefficients + ``u_tri`` (nt,)
    nonconforming   -> ``u_edge`` (ne,) midpoint values
    """

    method: str
    mesh: Mesh
    u_vertex: np.ndarray | None = None
    u_edge: np.ndarray | None = None
    flux_edge: np.ndarray | None = None
    u_tri: np.ndarray | None = None

    def element_gradients(self) -> np.ndarray:
        """(nt, 2) broken gradient for the P1 / CR fields."""
        mesh = self.mesh
        if self.method == "conforming":
            vals = self.u_vertex[mesh.triangles]  # (nt, 3)
            return np.einsum("tl,tld->td", vals, mesh.grad_lambda)
        if self.method == "nonconforming":
            vals = self.u_edge[mesh.tri_edges]
            return np.einsum("tl,tld->td", vals, -2.0 * mesh.grad_lambda)
        raise ValueError("element_gradients needs a P1 or CR solution")


@dataclass
class EdgeTraces:
    """Per-edge traces of the numerical flux / gradient plus boundary data.

    Constant normal-flux traces ``flux_minus/plus`` exist for the conforming
    and nonconforming methods; constant tangential traces ``rho_minus/plus``
    for the nonconforming method; affine tangential traces with endpoint
    values ``d_s/e_minus/plus`` for the mixed method.  Entries are NaN where
    a side or quantity does not exist.  ``g_neumann`` holds the Neumann data
    per Neumann edge and ``dgD_dt`` the tangential slope of the interpolated
    Dirichlet data per Dirichlet edge.
    """

    method: str
    flux_minus: np.ndarray | None = None
    flux_plus: np.ndarray | None = None
    rho_minus: np.ndarray | None = None
    rho_plus: np.ndarray | None = None
    d_s_minus: np.ndarray | None = None
    d_e_minus: np.ndarray | None = None
    d_s_plus: np.ndarray | None = None
    d_e_plus: np.ndarray | None = None
    g_neumann: np.ndarray | None = None
    dgD_dt: np.ndarray | None = None


# ----------------------------------------------------------------------
# assembly helpers


def _eval(fun, pts):
    return np.asarray(fun(pts[..., 0], pts[..., 1]), dtype=float)


def _rhs_midpoint_rule(mesh: Mesh, f) -> np.ndarray:
    """(nt, 3) values of f at the edge midpoints (opposite-vertex order)."""
    return _eval(f, mesh.tri_edge_midpoints())


def _neumann_values(mesh: Mesh, data: ProblemData) -> np.ndarray:
    g = np.full(mesh.n_edges, np.nan)
    idx = mesh.neumann_edges
    if idx.size:
        if data.g_N is None:
            raise SolverError("problem has Neumann edges but no g_N data")
        mid = mesh.edge_midpoints()[idx]
        g[idx] = _eval(data.g_N, mid)
    return g


def _dirichlet_tangential_slope(mesh: Mesh, data: ProblemData) -> np.ndarray:
    dg = np.full(mesh.n_edges, np.nan)
    idx = mesh.dirichlet_edges
    if idx.size:
        ps = mesh.vertices[mesh.edges[idx, 0]]
        pe = mesh.vertices[mesh.edges[idx, 1]]
        dg[idx] = (_eval(data.g_D, pe) - _eval(data.g_D, ps)) / mesh.edge_length[idx]
    return dg


def _check_residual(mat, x, rhs, what):
    res = mat @ x - rhs
    scale = max(np.linalg.norm(rhs), 1e-30)
    rel = np.linalg.norm(res) / scale
    if not np.isfinite(rel) or rel > 1e-10:
        raise SolverError(f"{what} residual {rel:.3e} exceeds 1e-10")


def solve_conforming(mesh: Mesh, A: CoefficientField, data: ProblemData) -> DiscreteSolution:
    """P1 Galerkin solution with Dirichlet interpolation at vertices."""
    nt, nv = mesh.n_triangles, mesh.n_vertices
    g = mesh.grad_lambda  # (nt, 3, 2)
    Ag = np.einsum("tij,tlj->tli", A.tensor, g)
    local = np.einsum("tli,tmi->tlm", Ag, g) * mesh.tri_area[:, None, None]

    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    K = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nv, nv)).tocsr()

    b = np.zeros(nv)
    fm = _rhs_midpoint_rule(mesh, data.f)  # (nt, 3)
    w = mesh.tri_area / 3.0
    # lambda_l vanishes at the midpoint opposite vertex l, equals 1/2 at the rest
    for l in range(3):
        contrib = 0.5 * w * (fm.sum(axis=1) - fm[:, l])
        np.add.at(b, mesh.triangles[:, l], contrib)

    gN = _neumann_values(mesh, data)
    for e in mesh.neumann_edges:
        h = mesh.edge_length[e]
        b[mesh.edges[e, 0]] -= gN[e] * h / 2.0
        b[mesh.edges[e, 1]] -= gN[e] * h / 2.0

    u = np.zeros(nv)
    fixed = mesh.dirichlet_vertices
    u[fixed] = _eval(data.g_D, mesh.vertices[fixed])
    free = np.setdiff1d(np.arange(nv), fixed)
    if free.size:
        Kff = K[free][:, free].tocsc()
        rhs = b[free] - K[free][:, fixed] @ u[fixed]
        uf = spla.spsolve(Kff, rhs)
        if not np.all(np.isfinite(uf)):
            raise SolverError("conforming solve returned non-finite values")
        _check_residual(Kff, uf, rhs, "conforming")
        u[free] = uf
    return DiscreteSolution(method="conforming", mesh=mesh, u_vertex=u)


def solve_nonconforming(mesh: Mesh, A: CoefficientField, data: ProblemData) -> DiscreteSolution:
    """Crouzeix-Raviart solution with midpoint Dirichlet interpolation."""
    nt, ne = mesh.n_triangles, mesh.n_edges
    g = mesh.grad_lambda
    Ag = np.einsum("tij,tlj->tli", A.tensor, g)
    local = 4.0 * np.einsum("tli,tmi->tlm", Ag, g) * mesh.tri_area[:, None, None]

    rows = np.repeat(mesh.tri_edges, 3, axis=1).ravel()
    cols = np.tile(mesh.tri_edges, (1, 3)).ravel()
    K = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(ne, ne)).tocsr()

    b = np.zeros(ne)
    fm = _rhs_midpoint_rule(mesh, data.f)
    w = mesh.tri_area / 3.0
    for l in range(3):
        np.add.at(b, mesh.tri_edges[:, l], w * fm[:, l])

    gN = _neumann_values(mesh, data)
    for e in mesh.neumann_edges:
        b[e] -= gN[e] * mesh.edge_length[e]

    u = np.zeros(ne)
    fixed = mesh.dirichlet_edges
    u[fixed] = _eval(data.g_D, mesh.edge_midpoints()[fixed])
    free = np.setdiff1d(np.arange(ne), fixed)
    if free.size:
        Kff = K[free][:, free].tocsc()
        rhs = b[free] - K[free][:, fixed] @ u[fixed]
        uf = spla.spsolve(Kff, rhs)
        if not np.all(np.isfinite(uf)):
            raise SolverError("nonconforming solve returned non-finite values")
        _check_residual(Kff, uf, rhs, "nonconforming")
        u[free] = uf
    return DiscreteSolution(method="nonconforming", mesh=mesh, u_edge=u)


def _rt_vertex_vectors(mesh: Mesh) -> np.ndarray:
    """(nt, 3, 3, 2): RT basis of local edge l as sum_v lambda_v c[l, v]."""
    coords = mesh.tri_coords()
    h = mesh.edge_length[mesh.tri_edges]  # (nt, 3)
    H = 2.0 * mesh.tri_area[:, None] / h  # (nt, 3)
    c = (coords[:, None, :, :] - coords[:, :, None, :]) / H[:, :, None, None]
    # zero out v == l (the opposite vertex itself)
    eye = np.eye(3, dtype=bool)
    c[:, eye] = 0.0
    return c


def solve_mixed(mesh: Mesh, A: CoefficientField, data: ProblemData) -> DiscreteSolution:
    """RT0 x P0 mixed saddle-point solution.

    Neumann edges carry fixed flux coefficients ``g_N``; the second block
    equation enforces elementwise ``div sigma = mean(f)`` exactly.
    """
    nt, ne = mesh.n_triangles, mesh.n_edges
    c = _rt_vertex_vectors(mesh) * mesh.tri_edge_sign[:, :, None, None]
    mass = (np.ones((3, 3)) + np.eye(3)) / 12.0
    Wc = np.einsum("tij,tlvj->tlvi", A.inv, c, optimize=True)
    Mloc = np.einsum("tlvi,vw,tmwi->tlm", Wc, mass, c, optimize=True)
    Mloc *= mesh.tri_area[:, None, None]

    rows = np.repeat(mesh.tri_edges, 3, axis=1).ravel()
    cols = np.tile(mesh.tri_edges, (1, 3)).ravel()
    M = sp.coo_matrix((Mloc.ravel(), (rows, cols)), shape=(ne, ne)).tocsr()

    div = mesh.tri_edge_sign * mesh.edge_length[mesh.tri_edges]  # (nt,3) * h
    B = sp.coo_matrix(
        (
            div.ravel(),
            (np.repeat(np.arange(nt), 3), mesh.tri_edges.ravel()),
        ),
        shape=(nt, ne),
    ).tocsr()

    G = np.zeros(ne)
    dmid = mesh.edge_midpoints()
    for e in mesh.dirichlet_edges:
        G[e] = -_eval(data.g_D, dmid[e]) * mesh.edge_length[e]

    fm = _rhs_midpoint_rule(mesh, data.f)
    Fv = mesh.tri_area * fm.mean(axis=1)

    sigma = np.zeros(ne)
    fixed = mesh.neumann_edges
    gN = _neumann_values(mesh, data)
    sigma[fixed] = np.where(np.isnan(gN[fixed]), 0.0, gN[fixed])
    free = np.setdiff1d(np.arange(ne), fixed)

    Mf = M[free][:, free]
    Bf = B[:, free]
    rhs1 = G[free] - (M[free][:, fixed] @ sigma[fixed] if fixed.size else 0.0)
    rhs2 = Fv - (B[:, fixed] @ sigma[fixed] if fixed.size else 0.0)
    S = sp.bmat([[Mf, -Bf.T], [Bf, None]], format="csc")
    rhs = np.concatenate([rhs1, rhs2])
    x = spla.spsolve(S, rhs)
    if not np.all(np.isfinite(x)):
        raise SolverError("mixed solve returned non-finite values")
    _check_residual(S, x, rhs, "mixed")
    sigma[free] = x[: free.size]
    u = x[free.size:]
    return DiscreteSolution(method="mixed", mesh=mesh, flux_edge=sigma, u_tri=u)


def mixed_flux_at(mesh: Mesh, coef: np.ndarray, tris: np.ndarray, points: np.ndarray):
    """Evaluate the RT0 field with edge coefficients ``coef`` on the given
    triangles at the given physical points.  ``tris`` (m,), ``points`` (m, 2);
    returns (m, 2)."""
    coords = mesh.vertices[mesh.triangles[tris]]  # (m, 3, 2)
    h = mesh.edge_length[mesh.tri_edges[tris]]  # (m, 3)
    H = 2.0 * mesh.tri_area[tris, None] / h
    sgn = mesh.tri_edge_sign[tris]
    w = coef[mesh.tri_edges[tris]] * sgn / H  # (m, 3)
    diff = points[:, None, :] - coords  # (m, 3, 2): x - x_opp(l)
    return np.einsum("ml,mld->md", w, diff)


def mixed_divergence(mesh: Mesh, coef: np.ndarray) -> np.ndarray:
    """(nt,) elementwise divergence of an RT0 field."""
    h = mesh.edge_length[mesh.tri_edges]
    return (coef[mesh.tri_edges] * mesh.tri_edge_sign * h).sum(axis=1) / mesh.tri_area


def edge_traces(
    mesh: Mesh, A: CoefficientField, solution: DiscreteSolution, data: ProblemData
) -> EdgeTraces:
    """Side traces on every edge for the given discrete solution.

    Conforming / nonconforming: constant normal traces of the numerical flux
    ``-A grad_h u`` per side (plus constant tangential gradient traces for
    CR).  Mixed: affine tangential traces of ``-A^{-1} sigma_m`` recorded by
    their endpoint values.
    """
    if solution.mesh is not mesh:
        raise ValueError("solution belongs to a different mesh")
    tr = EdgeTraces(method=solution.method)
    tr.g_neumann = _neumann_values(mesh, data)
    tr.dgD_dt = _dirichlet_tangential_slope(mesh, data)

    if solution.method in ("conforming", "nonconforming"):
        grad = solution.element_gradients()
        sigma_el = -np.einsum("tij,tj->ti", A.tensor, grad)
        for name, side in (("flux_minus", 0), ("flux_plus", 1)):
            vals = np.full(mesh.n_edges, np.nan)
            has = mesh.edge_tris[:, side] >= 0
            t = mesh.edge_tris[has, side]
            vals[has] = (sigma_el[t] * mesh.edge_normal[has]).sum(axis=1)
            setattr(tr, name, vals)
        if solution.method == "nonconforming":
            for name, side in (("rho_minus", 0), ("rho_plus", 1)):
                vals = np.full(mesh.n_edges, np.nan)
                has = mesh.edge_tris[:, side] >= 0
                t = mesh.edge_tris[has, side]
                vals[has] = (grad[t] * mesh.edge_tangent[has]).sum(axis=1)
                setattr(tr, name, vals)
        return tr

    if solution.method == "mixed":
        ps = mesh.vertices[mesh.edges[:, 0]]
        pe = mesh.vertices[mesh.edges[:, 1]]
        for sname, ename, side in (
            ("d_s_minus", "d_e_minus", 0),
            ("d_s_plus", "d_e_plus", 1),
        ):
            vs = np.full(mesh.n_edges, np.nan)
            ve = np.full(mesh.n_edges, np.nan)
            has = np.flatnonzero(mesh.edge_tris[:, side] >= 0)
            t = mesh.edge_tris[has, side]
            sig_s = mixed_flux_at(mesh, solution.flux_edge, t, ps[has])
            sig_e = mixed_flux_at(mesh, solution.flux_edge, t, pe[has])
            rho_s = -np.einsum("mij,mj->mi", A.inv[t], sig_s)
            rho_e = -np.einsum("mij,mj->mi", A.inv[t], sig_e)
            vs[has] = (rho_s * mesh.edge_tangent[has]).sum(axis=1)
            ve[has] = (rho_e * mesh.edge_tangent[has]).sum(axis=1)
            setattr(tr, sname, vs)
            setattr(tr, ename, ve)
        return tr

    raise ValueError(f"unknown method {solution.method!r}")
