"""Local triangle bases and exact local integration.

Provides the lowest-order edge-based vector elements used by the flux and
gradient recoveries (RT, BDM first kind in H(div); NE, ND Nedelec first and
second kind in H(curl)), together with the scalar P1 and Crouzeix-Raviart
bases, exact integration of barycentric monomials, and exact weighted mass
entries for piecewise-constant coefficient tensors.

Conventions on a counterclockwise triangle with vertices ``x0, x1, x2``:

* edge ``k`` is opposite vertex ``k`` and runs from vertex ``(k+1) % 3``
  (its *start*, 's') to vertex ``(k+2) % 3`` (its *end*, 'e'),
* ``n_k`` is the unit outward normal on edge ``k`` and ``t_k = rot90(n_k)``
  points from start to end,
* ``H_k = 2|K| / h_k`` is the height over edge ``k``.

With these conventions the vector bases satisfy the duality relations

* ``rt_k . n_l = delta_kl`` on edge ``l``,
* ``bdm_{v,k} . n_k = lambda_v`` on edge ``k`` (zero normal trace elsewhere),
* ``ne_k . t_l = delta_kl`` on edge ``l``,
* ``nd_{s,k} . t_k = lambda_s`` and ``nd_{e,k} . t_k = -lambda_e`` on edge
  ``k`` (zero tangential trace elsewhere),

and the decompositions ``rt_k = bdm_{s,k} + bdm_{e,k}`` and
``ne_k = nd_{s,k} - nd_{e,k}`` hold pointwise.

All functions here are pure and safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LocalTriangleFrame",
    "LocalBasisId",
    "eval_local_basis",
    "barycentric_integral",
    "weighted_mass_entry",
    "basis_vertex_vectors",
    "TRI_QUAD_BARY",
    "TRI_QUAD_WEIGHTS",
]

VECTOR_FAMILIES = ("rt", "bdm", "ne", "nd")
SCALAR_FAMILIES = ("p1", "cr")

# 7-point, degree-5 triangle rule (barycentric points, weights sum to 1).
_A = (6.0 + math.sqrt(15.0)) / 21.0
_B = (6.0 - math.sqrt(15.0)) / 21.0
_WA = (155.0 + math.sqrt(15.0)) / 1200.0
_WB = (155.0 - math.sqrt(15.0)) / 1200.0
TRI_QUAD_BARY = np.array(
    [
        [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
        [1.0 - 2.0 * _A, _A, _A],
        [_A, 1.0 - 2.0 * _A, _A],
        [_A, _A, 1.0 - 2.0 * _A],
        [1.0 - 2.0 * _B, _B, _B],
        [_B, 1.0 - 2.0 * _B, _B],
        [_B, _B, 1.0 - 2.0 * _B],
    ]
)
TRI_QUAD_WEIGHTS = np.array([9.0 / 40.0, _WA, _WA, _WA, _WB, _WB, _WB])


class BasisError(ValueError):
    """Invalid basis request (bad id, point outside triangle, bad weight)."""


@dataclass(frozen=True)
class LocalTriangleFrame:
    """Geometry of one counterclockwise triangle.

    Attributes
    ----------
    x : (3, 2) vertex coordinates.
    grad_lambda : (3, 2) gradients of the barycentric coordinates.
    area : triangle area (strictly positive).
    edge_length : (3,) lengths ``h_k`` of the edges opposite each vertex.
    height : (3,) heights ``H_k = 2 * area / h_k``.
    normal : (3, 2) unit outward normals ``n_k``.
    tangent : (3, 2) unit tangents ``t_k = rot90(n_k)`` (start to end).
    """

    x: np.ndarray
    grad_lambda: np.ndarray = field(repr=False)
    area: float = 0.0
    edge_length: np.ndarray = field(default=None, repr=False)
    height: np.ndarray = field(default=None, repr=False)
    normal: np.ndarray = field(default=None, repr=False)
    tangent: np.ndarray = field(default=None, repr=False)

    @staticmethod
    def from_vertices(p0, p1, p2) -> "LocalTriangleFrame":
        x = np.array([p0, p1, p2], dtype=float)
        e = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]])  # e_k = end-start
        area = 0.5 * (x[1, 0] - x[0, 0]) * (x[2, 1] - x[0, 1]) - 0.5 * (
            x[1, 1] - x[0, 1]
        ) * (x[2, 0] - x[0, 0])
        if area <= 0.0:
            raise BasisError("triangle is not counterclockwise or is degenerate")
        # grad(lambda_k) = rot90(e_k) / (2 area), rot90(v) = (-v2, v1)
        grad = np.column_stack([-e[:, 1], e[:, 0]]) / (2.0 * area)
        h = np.linalg.norm(e, axis=1)
        height = 2.0 * area / h
        normal = -grad / np.linalg.norm(grad, axis=1)[:, None]
        tangent = np.column_stack([-normal[:, 1], normal[:, 0]])
        return LocalTriangleFrame(
            x=x,
            grad_lambda=grad,
            area=float(area),
            edge_length=h,
            height=height,
            normal=normal,
            tangent=tangent,
        )

    def barycentric(self, point) -> np.ndarray:
        """Barycentric coordinates of a point (affine, exact)."""
        p = np.asarray(point, dtype=float)
        lam0 = 1.0 + self.grad_lambda[0] @ (p - self.x[0])
        lam1 = 1.0 + self.grad_lambda[1] @ (p - self.x[1])
        return np.array([lam0, lam1, 1.0 - lam0 - lam1])

    def edge_start(self, k: int) -> int:
        return (k + 1) % 3

    def edge_end(self, k: int) -> int:
        return (k + 2) % 3


@dataclass(frozen=True)
class LocalBasisId:
    """Identifies one local basis function.

    ``family`` is one of ``rt, bdm, ne, nd, p1, cr``; ``edge`` is the local
    edge index (for p1 it is the vertex index).  BDM and ND carry an
    ``endpoint`` tag ('s' or 'e'); the other families must not.
    """

    family: str
    edge: int
    endpoint: str | None = None

    def __post_init__(self):
        fam = self.family
        if fam not in VECTOR_FAMILIES + SCALAR_FAMILIES:
            raise BasisError(f"unknown family {fam!r}")
        if self.edge not in (0, 1, 2):
            raise BasisError("local edge index must be 0, 1 or 2")
        if fam in ("bdm", "nd"):
            if self.endpoint not in ("s", "e"):
                raise BasisError(f"{fam} basis needs endpoint 's' or 'e'")
        elif self.endpoint is not None:
            raise BasisError(f"{fam} basis carries no endpoint")


def basis_vertex_vectors(frame: LocalTriangleFrame, basis: LocalBasisId) -> np.ndarray:
    """Vertex-coefficient form of a vector basis function.

    Every lowest-order vector basis here can be written as
    ``phi(x) = sum_v lambda_v(x) c_v`` with constant vectors ``c_v``; returns
    the (3, 2) array of those vectors.  Raises for scalar families.
    """
    if basis.family not in VECTOR_FAMILIES:
        raise BasisError("vertex-vector form only exists for vector families")
    k = basis.edge
    s, e = frame.edge_start(k), frame.edge_end(k)
    c = np.zeros((3, 2))
    if basis.family == "rt":
        # (x - x_k) / H_k
        for v in (s, e):
            c[v] = (frame.x[v] - frame.x[k]) / frame.height[k]
    elif basis.family == "bdm":
        v = s if basis.endpoint == "s" else e
        c[v] = (frame.x[v] - frame.x[k]) / frame.height[k]
    elif basis.family == "ne":
        c[s] = frame.edge_length[k] * frame.grad_lambda[e]
        c[e] = -frame.edge_length[k] * frame.grad_lambda[s]
    else:  # nd
        if basis.endpoint == "s":
            c[s] = frame.edge_length[k] * frame.grad_lambda[e]
        else:
            c[e] = frame.edge_length[k] * frame.grad_lambda[s]
    return c


def eval_local_basis(frame: LocalTriangleFrame, basis: LocalBasisId, point):
    """Evaluate a local basis function at a point of the (closed) triangle.

    Returns a length-2 vector for the vector families and a float for the
    scalar ones.  Points outside the triangle (barycentric coordinate below
    -1e-12 relative) are rejected.
    """
    lam = frame.barycentric(point)
    if lam.min() < -1e-12:
        raise BasisError(f"point {point} lies outside the triangle")
    if basis.family in VECTOR_FAMILIES:
        c = basis_vertex_vectors(frame, basis)
        return lam @ c
    if basis.family == "p1":
        return float(lam[basis.edge])
    # cr: 1 - 2 lambda_opposite
    return float(1.0 - 2.0 * lam[basis.edge])


_FACT = [math.factorial(n) for n in range(8)]


def barycentric_integral(frame: LocalTriangleFrame, exponents) -> float:
    """Exact integral of ``lambda_0^a lambda_1^b lambda_2^c`` over the triangle.

    Uses ``2|K| a! b! c! / (a+b+c+2)!``; exponents must be nonnegative
    integers with total degree at most 4.
    """
    a, b, c = (int(v) for v in exponents)
    if min(a, b, c) < 0:
        raise BasisError("exponents must be nonnegative")
    if a + b + c > 4:
        raise BasisError("total degree above 4 is not supported")
    return 2.0 * frame.area * _FACT[a] * _FACT[b] * _FACT[c] / _FACT[a + b + c + 2]


def _check_spd_2x2(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2):
        raise BasisError("weight must be a 2x2 matrix")
    scale = max(abs(M).max(), 1.0)
    if abs(M[0, 1] - M[1, 0]) > 1e-14 * scale:
        raise BasisError("weight matrix is not symmetric")
    if M[0, 0] <= 0.0 or np.linalg.det(M) <= 0.0:
        raise BasisError("weight matrix is not positive definite")
    return M


def weighted_mass_entry(
    frame: LocalTriangleFrame,
    M,
    id_a: LocalBasisId,
    id_b: LocalBasisId,
) -> float:
    """Exact ``integral_K (M phi_a) . phi_b dx`` for constant SPD ``M``.

    The integrand is quadratic, so the vertex-coefficient expansion with
    ``int lambda_v lambda_w = |K| (1 + delta_vw) / 12`` integrates it exactly.
    """
    M = _check_spd_2x2(M)
    ca = basis_vertex_vectors(frame, id_a)
    cb = basis_vertex_vectors(frame, id_b)
    q = (M @ ca.T).T @ cb.T  # q[v, w] = (M ca_v) . cb_w
    mass = frame.area * (np.ones((3, 3)) + np.eye(3)) / 12.0
    return float((q * mass).sum())
