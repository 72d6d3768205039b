"""Error indicators and estimators built from the recovered fields.

The primary estimators are weighted L2 norms of the recovery corrections:
``A^{-1/2}``-weighted for flux corrections and ``A^{1/2}``-weighted for
gradient corrections.  The nonconforming method combines one of each with
convex weights ``c1 + c2 = 1``.  Element indicators restrict the global
correction field to the element (each element sees contributions from its
three edges); edge indicators take the patch norm of the single-edge
correction and overlap between neighbouring edges, so marking uses the
element values and the edge values are reported for analysis only.

Also provided: classical residual-type edge estimators (scalar coefficients
only) used as empirical efficiency references, the data-oscillation term,
and the true energy error against a known exact gradient.

All integrals of the piecewise-linear correction fields are exact; the true
energy error uses a degree-5 quadrature with recursive subdivision of
elements touching singular points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import TRI_QUAD_BARY, TRI_QUAD_WEIGHTS
from .mesh import DIRICHLET, INTERIOR, NEUMANN, Mesh
from .recovery import RecoveredField
from .solvers import CoefficientField, DiscreteSolution, EdgeTraces, mixed_flux_at

__all__ = [
    "IndicatorSet",
    "indicators",
    "residual_edge_estimator",
    "oscillation",
    "true_energy_error",
]

_MASS = (np.ones((3, 3)) + np.eye(3)) / 12.0


@dataclass
class IndicatorSet:
    """Per-element and per-edge indicator values with their global total.

    ``eta_global ** 2 == sum(eta_elements ** 2)`` by construction; the edge
    values follow a different (overlapping) localization and do not sum to
    the global value.
    """

    method: str
    family: str
    eta_elements: np.ndarray
    eta_edges: np.ndarray
    eta_global: float
    c1: float | None = None
    c2: float | None = None

    @property
    def eta(self) -> float:
        return self.eta_global


def _element_quadratic_norms(mesh: Mesh, W: np.ndarray, C: np.ndarray) -> np.ndarray:
    """(nt,) exact values of ``int_K (W v) . v`` for ``v = sum lambda_v C_v``."""
    q = np.einsum("tij,tvj,twi->tvw", W, C, C)
    return np.einsum("tvw,vw->t", q, _MASS) * mesh.tri_area


def _field_element_sq(mesh: Mesh, A: CoefficientField, fld: RecoveredField):
    W = A.inv if fld.kind == "flux" else A.tensor
    return _element_quadratic_norms(mesh, W, fld.correction_vertex_vectors())


def _field_edge_sq(fld: RecoveredField) -> np.ndarray:
    """(ne,) squared patch norms of the single-edge corrections."""
    gram = fld.weights.gram  # (ne, 2, d, d)
    corr = fld.correction_side
    if corr.ndim == 2:
        corr = corr[:, :, None]
    vals = np.einsum("nsd,nsde,nse->n", corr, gram, corr)
    return vals


def indicators(
    mesh: Mesh,
    A: CoefficientField,
    fields,
    method: str,
    family: str | None = None,
    c: tuple[float, float] = (0.5, 0.5),
) -> IndicatorSet:
    """Indicator set of one recovered field, or of a (flux, gradient) pair
    for the nonconforming method with convex combination weights ``c``."""
    if isinstance(fields, RecoveredField):
        fields = (fields,)
    for fld in fields:
        if fld.method != method:
            raise ValueError(f"field was recovered for {fld.method!r}, not {method!r}")
        if fld.mesh is not mesh:
            raise ValueError("field belongs to a different mesh")

    if len(fields) == 1:
        fld = fields[0]
        if family is not None and family != fld.family:
            raise ValueError(f"field family {fld.family!r} does not match {family!r}")
        el_sq = _field_element_sq(mesh, A, fld)
        ed_sq = _field_edge_sq(fld)
        return IndicatorSet(
            method=method,
            family=fld.family,
            eta_elements=np.sqrt(np.maximum(el_sq, 0.0)),
            eta_edges=np.sqrt(np.maximum(ed_sq, 0.0)),
            eta_global=float(np.sqrt(max(el_sq.sum(), 0.0))),
        )

    if len(fields) != 2 or method != "nonconforming":
        raise ValueError("a field pair is only defined for the nonconforming method")
    flux = next((f for f in fields if f.kind == "flux"), None)
    grad = next((f for f in fields if f.kind == "gradient"), None)
    if flux is None or grad is None:
        raise ValueError("the pair must hold one flux and one gradient recovery")
    c1, c2 = float(c[0]), float(c[1])
    if not (0.0 < c1 < 1.0 and 0.0 < c2 < 1.0 and abs(c1 + c2 - 1.0) < 1e-14):
        raise ValueError("combination weights must lie in (0,1) and sum to 1")
    el_sq = c1 * _field_element_sq(mesh, A, flux) + c2 * _field_element_sq(mesh, A, grad)
    ed_sq = c1 * _field_edge_sq(flux) + c2 * _field_edge_sq(grad)
    return IndicatorSet(
        method=method,
        family=f"{flux.family}-{grad.family}",
        eta_elements=np.sqrt(np.maximum(el_sq, 0.0)),
        eta_edges=np.sqrt(np.maximum(ed_sq, 0.0)),
        eta_global=float(np.sqrt(max(el_sq.sum(), 0.0))),
        c1=c1,
        c2=c2,
    )


def residual_edge_estimator(
    mesh: Mesh, A: CoefficientField, traces: EdgeTraces, method: str
) -> IndicatorSet:
    """Classical residual-type edge estimator (reference, scalar alpha only).

    conforming:     eta_F = h_F j_f / sqrt(alpha- + alpha+)   on interior,
                    h_F j_f / sqrt(alpha-)                    on Neumann;
    mixed:          eta_F^2 = (alpha- + alpha+)/2 * h_F * int_F j_g^2
                    (interior and Dirichlet; alpha+ := alpha- on the boundary);
    nonconforming:  eta_F^2 = 2 h^2/(a- + a+) j_f^2 + h^2 a- a+/(a- + a+) j_g^2
                    on interior, h^2/a- j_f^2 on Neumann, h^2 a- j_g^2 on
                    Dirichlet.

    Element values split each interior edge square evenly between its two
    elements (reported for analysis; the global value is the edge sum).
    """
    alpha = A.require_scalar()
    if traces.method != method:
        raise ValueError(f"traces are for {traces.method!r}, not {method!r}")
    lab = mesh.edge_label
    h = mesh.edge_length
    am = alpha[mesh.edge_tris[:, 0]]
    has_plus = mesh.edge_tris[:, 1] >= 0
    ap = np.where(has_plus, alpha[np.maximum(mesh.edge_tris[:, 1], 0)], am)
    sq = np.zeros(mesh.n_edges)

    if method == "conforming":
        jf = np.where(
            lab == INTERIOR,
            traces.flux_minus - np.where(has_plus, traces.flux_plus, 0.0),
            np.where(lab == NEUMANN, traces.flux_minus - traces.g_neumann, 0.0),
        )
        denom = np.where(lab == INTERIOR, am + ap, am)
        val = np.where(lab == DIRICHLET, 0.0, h * jf / np.sqrt(denom))
        sq = val**2
    elif method == "mixed":
        cs = np.where(
            lab == INTERIOR,
            traces.d_s_minus - np.where(has_plus, traces.d_s_plus, 0.0),
            np.where(lab == DIRICHLET, traces.d_s_minus - traces.dgD_dt, 0.0),
        )
        ce = np.where(
            lab == INTERIOR,
            traces.d_e_minus - np.where(has_plus, traces.d_e_plus, 0.0),
            np.where(lab == DIRICHLET, traces.d_e_minus - traces.dgD_dt, 0.0),
        )
        # int_F j^2 for the affine jump with endpoint values (cs, ce)
        int_j2 = h * (cs**2 + cs * ce + ce**2) / 3.0
        sq = np.where(lab == NEUMANN, 0.0, 0.5 * (am + ap) * h * int_j2)
    elif method == "nonconforming":
        jf = np.where(
            lab == INTERIOR,
            traces.flux_minus - np.where(has_plus, traces.flux_plus, 0.0),
            np.where(lab == NEUMANN, traces.flux_minus - traces.g_neumann, 0.0),
        )
        jg = np.where(
            lab == INTERIOR,
            traces.rho_minus - np.where(has_plus, traces.rho_plus, 0.0),
            np.where(lab == DIRICHLET, traces.rho_minus - traces.dgD_dt, 0.0),
        )
        sq = np.where(
            lab == INTERIOR,
            2.0 * h**2 / (am + ap) * jf**2 + h**2 * am * ap / (am + ap) * jg**2,
            np.where(
                lab == NEUMANN,
                h**2 / am * jf**2,
                h**2 * am * jg**2,
            ),
        )
    else:
        raise ValueError(f"unknown method {method!r}")

    el_sq = np.zeros(mesh.n_triangles)
    share = np.where(lab == INTERIOR, 0.5, 1.0) * sq
    np.add.at(el_sq, mesh.edge_tris[:, 0], share)
    ie = np.flatnonzero(lab == INTERIOR)
    np.add.at(el_sq, mesh.edge_tris[ie, 1], share[ie])
    return IndicatorSet(
        method=method,
        family="residual",
        eta_elements=np.sqrt(el_sq),
        eta_edges=np.sqrt(sq),
        eta_global=float(np.sqrt(sq.sum())),
    )


def _quad_points(mesh: Mesh, tris=None):
    coords = mesh.tri_coords() if tris is None else mesh.vertices[mesh.triangles[tris]]
    return np.einsum("qv,tvx->tqx", TRI_QUAD_BARY, coords)


def oscillation(mesh: Mesh, A: CoefficientField, f):
    """Data oscillation ``H_f`` and its per-element parts.

    ``H_{f,K} = h_K / sqrt(alpha_K) * ||f - mean_K f||_{0,K}`` with the mean
    (P0 projection) and norm both from the 7-point degree-5 rule.
    """
    alpha = A.require_scalar()
    pts = _quad_points(mesh)
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    mean = vals @ TRI_QUAD_WEIGHTS
    dev_sq = ((vals - mean[:, None]) ** 2) @ TRI_QUAD_WEIGHTS * mesh.tri_area
    h_fk = mesh.tri_diam / np.sqrt(alpha) * np.sqrt(np.maximum(dev_sq, 0.0))
    return float(np.sqrt((h_fk**2).sum())), h_fk


def _subdivide(coords: np.ndarray, levels: int) -> np.ndarray:
    """Recursive 4-way (edge-midpoint) subdivision of triangles.

    ``coords`` (m, 3, 2) -> (m * 4**levels, 3, 2).
    """
    out = coords
    for _ in range(levels):
        a, b, c = out[:, 0], out[:, 1], out[:, 2]
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        out = np.concatenate(
            [
                np.stack([a, ab, ca], axis=1),
                np.stack([ab, b, bc], axis=1),
                np.stack([ca, bc, c], axis=1),
                np.stack([ab, bc, ca], axis=1),
            ]
        )
    return out


def _touches_point(mesh: Mesh, p, tol=1e-12) -> np.ndarray:
    """Elements having ``p`` as a vertex or containing it."""
    coords = mesh.tri_coords()
    close = (np.linalg.norm(coords - np.asarray(p), axis=2) < tol).any(axis=1)
    lam = np.empty((mesh.n_triangles, 3))
    for l in range(3):
        lam[:, l] = 1.0 + np.einsum(
            "td,td->t", mesh.grad_lambda[:, l], np.asarray(p) - coords[:, l]
        )
    inside = (lam > -1e-12).all(axis=1)
    return close | inside


def true_energy_error(
    mesh: Mesh,
    A: CoefficientField,
    solution: DiscreteSolution,
    exact_grad,
    singular_points=(),
) -> float:
    """Energy norm of the discretization error against the exact gradient.

    ``||A^{1/2}(grad u - grad_h u_h)||`` for the conforming and
    nonconforming methods, ``||A^{-1/2}(sigma - sigma_m)||`` with
    ``sigma = -A grad u`` for the mixed method.  Uses the 7-point degree-5
    rule; elements touching a singular point are subdivided dyadically four
    levels first.
    """
    if exact_grad is None:
        raise ValueError("true_energy_error requires the exact gradient")

    singular = np.zeros(mesh.n_triangles, dtype=bool)
    for p in singular_points:
        singular |= _touches_point(mesh, p)
    regular = np.flatnonzero(~singular)
    singular = np.flatnonzero(singular)

    def integrate(tris, coords):
        """Quadrature over given sub-triangles belonging to elements ``tris``."""
        areas = 0.5 * np.abs(
            (coords[:, 1, 0] - coords[:, 0, 0]) * (coords[:, 2, 1] - coords[:, 0, 1])
            - (coords[:, 1, 1] - coords[:, 0, 1]) * (coords[:, 2, 0] - coords[:, 0, 0])
        )
        pts = np.einsum("qv,tvx->tqx", TRI_QUAD_BARY, coords)
        gx, gy = exact_grad(pts[..., 0], pts[..., 1])
        g = np.stack([np.asarray(gx), np.asarray(gy)], axis=-1)  # (m, q, 2)
        if solution.method in ("conforming", "nonconforming"):
            gh = solution.element_gradients()[tris]  # (m, 2)
            diff = g - gh[:, None, :]
            integ = np.einsum("mij,mqj,mqi->mq", A.tensor[tris], diff, diff)
        else:
            sig = -np.einsum("mij,mqj->mqi", A.tensor[tris], g)
            m, q = pts.shape[:2]
            flat_tris = np.repeat(tris, q)
            sig_m = mixed_flux_at(
                mesh, solution.flux_edge, flat_tris, pts.reshape(-1, 2)
            ).reshape(m, q, 2)
            diff = sig - sig_m
            integ = np.einsum("mij,mqj,mqi->mq", A.inv[tris], diff, diff)
        return float((integ @ TRI_QUAD_WEIGHTS * areas).sum())

    total = 0.0
    if regular.size:
        total += integrate(regular, mesh.vertices[mesh.triangles[regular]])
    if singular.size:
        coords = _subdivide(mesh.vertices[mesh.triangles[singular]], 4)
        reps = np.tile(singular, 4**4)
        total += integrate(reps, coords)
    return float(np.sqrt(max(total, 0.0)))
