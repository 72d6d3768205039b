import numpy as np
import pytest

from afemrec.mesh import build_mesh, unit_square_mesh
from afemrec.solvers import (
    CoefficientField,
    DiscreteSolution,
    ProblemData,
    SolverError,
    edge_traces,
    mixed_divergence,
    solve_conforming,
    solve_mixed,
    solve_nonconforming,
)

TENSOR = np.array([[2.0, 0.5], [0.5, 1.0]])


def affine_data(A):
    """u = 1 + 2x - y with matching flux data; f = 0 for constant A."""
    grad = np.array([2.0, -1.0])
    sigma = -A @ grad

    def u(x, y):
        return 1.0 + 2.0 * np.asarray(x, float) - np.asarray(y, float)

    return u, grad, sigma


def right_edge_neumann(A):
    """Labeler putting Neumann data on the x = 1 side of the unit square."""
    sigma = -A @ np.array([2.0, -1.0])

    def labeler(a, b):
        return "N" if 0.5 * (a + b)[0] > 0.999 else "D"

    def g_N(x, y):
        return np.full_like(np.asarray(x, float), sigma @ np.array([1.0, 0.0]))

    return labeler, g_N


@pytest.mark.parametrize("tensor", [np.eye(2), TENSOR])
@pytest.mark.parametrize("method", ["conforming", "mixed", "nonconforming"])
def test_affine_exactness(tensor, method):
    mesh = unit_square_mesh(3)
    A = CoefficientField.from_tensor(mesh, tensor)
    u, grad, sigma = affine_data(tensor)
    data = ProblemData(f=lambda x, y: np.zeros_like(np.asarray(x, float)), g_D=u)
    if method == "conforming":
        sol = solve_conforming(mesh, A, data)
        vals = u(mesh.vertices[:, 0], mesh.vertices[:, 1])
        assert np.abs(sol.u_vertex - vals).max() < 1e-10
    elif method == "nonconforming":
        sol = solve_nonconforming(mesh, A, data)
        mid = mesh.edge_midpoints()
        assert np.abs(sol.u_edge - u(mid[:, 0], mid[:, 1])).max() < 1e-10
    else:
        sol = solve_mixed(mesh, A, data)
        exact_coef = mesh.edge_normal @ sigma
        assert np.abs(sol.flux_edge - exact_coef).max() < 1e-10
        bary = mesh.tri_barycenters()
        assert np.abs(sol.u_tri - u(bary[:, 0], bary[:, 1])).max() < 1e-10


@pytest.mark.parametrize("method", ["conforming", "mixed", "nonconforming"])
def test_affine_exactness_with_neumann(method):
    labeler, g_N = right_edge_neumann(TENSOR)
    mesh = build_mesh(
        unit_square_mesh(3).vertices,
        unit_square_mesh(3).triangles,
        boundary_labeler=labeler,
    )
    A = CoefficientField.from_tensor(mesh, TENSOR)
    u, grad, sigma = affine_data(TENSOR)
    data = ProblemData(
        f=lambda x, y: np.zeros_like(np.asarray(x, float)), g_D=u, g_N=g_N
    )
    if method == "conforming":
        sol = solve_conforming(mesh, A, data)
        vals = u(mesh.vertices[:, 0], mesh.vertices[:, 1])
        assert np.abs(sol.u_vertex - vals).max() < 1e-10
    elif method == "nonconforming":
        sol = solve_nonconforming(mesh, A, data)
        mid = mesh.edge_midpoints()
        assert np.abs(sol.u_edge - u(mid[:, 0], mid[:, 1])).max() < 1e-10
    else:
        sol = solve_mixed(mesh, A, data)
        assert np.abs(sol.flux_edge - mesh.edge_normal @ sigma).max() < 1e-10


def test_zero_data_gives_zero():
    mesh = unit_square_mesh(2)
    A = CoefficientField.isotropic(mesh, 3.0)
    zero = lambda x, y: np.zeros_like(np.asarray(x, float))
    data = ProblemData(f=zero, g_D=zero)
    assert np.abs(solve_conforming(mesh, A, data).u_vertex).max() < 1e-14
    assert np.abs(solve_nonconforming(mesh, A, data).u_edge).max() < 1e-14
    sol = solve_mixed(mesh, A, data)
    assert np.abs(sol.flux_edge).max() < 1e-14
    assert np.abs(sol.u_tri).max() < 1e-14


def test_mixed_constant_flux_coefficients():
    # exact u = x with A = I: flux coefficient on each edge equals -n_1
    mesh = unit_square_mesh(3)
    A = CoefficientField.isotropic(mesh, 1.0)
    data = ProblemData(
        f=lambda x, y: np.zeros_like(np.asarray(x, float)),
        g_D=lambda x, y: np.asarray(x, float),
    )
    sol = solve_mixed(mesh, A, data)
    assert np.abs(sol.flux_edge + mesh.edge_normal[:, 0]).max() < 1e-10


def test_mixed_local_conservation_f_one():
    mesh = unit_square_mesh(4)
    A = CoefficientField.isotropic(mesh, 1.0)
    data = ProblemData(
        f=lambda x, y: np.ones_like(np.asarray(x, float)),
        g_D=lambda x, y: np.zeros_like(np.asarray(x, float)),
    )
    sol = solve_mixed(mesh, A, data)
    assert np.abs(mixed_divergence(mesh, sol.flux_edge) - 1.0).max() < 1e-11


def test_mixed_local_conservation_smooth():
    # div sigma_m = elementwise mean of f, exactly
    mesh = unit_square_mesh(5)
    A = CoefficientField.isotropic(mesh, 1.0)
    f = lambda x, y: np.sin(3 * np.asarray(x, float)) + np.asarray(y, float) ** 2
    data = ProblemData(f=f, g_D=lambda x, y: np.zeros_like(np.asarray(x, float)))
    sol = solve_mixed(mesh, A, data)
    mids = mesh.tri_edge_midpoints()
    fbar = f(mids[..., 0], mids[..., 1]).mean(axis=1)
    div = mixed_divergence(mesh, sol.flux_edge)
    assert np.abs(div - fbar).max() < 1e-10 * max(1.0, np.abs(fbar).max())


def test_galerkin_orthogonality():
    mesh = unit_square_mesh(4)
    A = CoefficientField.from_tensor(mesh, TENSOR)
    f = lambda x, y: np.cos(np.asarray(x, float)) * np.asarray(y, float)
    data = ProblemData(f=f, g_D=lambda x, y: np.asarray(x, float) ** 2 * 0.0)
    sol = solve_conforming(mesh, A, data)

    # rebuild the bilinear and linear forms and test 20 random v_h in S_D
    g = mesh.grad_lambda
    Ag = np.einsum("tij,tlj->tli", A.tensor, g)
    local = np.einsum("tli,tmi->tlm", Ag, g) * mesh.tri_area[:, None, None]
    free = np.setdiff1d(np.arange(mesh.n_vertices), mesh.dirichlet_vertices)
    rng = np.random.default_rng(42)
    mids = mesh.tri_edge_midpoints()
    fm = f(mids[..., 0], mids[..., 1])
    scale = np.abs(sol.u_vertex).max() + 1.0
    for _ in range(20):
        v = np.zeros(mesh.n_vertices)
        v[free] = rng.normal(size=free.size)
        uv = sol.u_vertex[mesh.triangles]
        vv = v[mesh.triangles]
        a_uv = np.einsum("tl,tlm,tm->", uv, local, vv)
        rhs = 0.0
        w = mesh.tri_area / 3.0
        for l in range(3):
            rhs += (0.5 * w * (fm.sum(axis=1) - fm[:, l]) * vv[:, l]).sum()
        assert abs(a_uv - rhs) < 1e-10 * scale * np.abs(v).max() * 10


def test_cr_midpoint_continuity_and_dirichlet():
    mesh = unit_square_mesh(4)
    A = CoefficientField.isotropic(mesh, 2.0)
    g_D = lambda x, y: 1.0 + np.asarray(x, float) - 2.0 * np.asarray(y, float)
    data = ProblemData(f=lambda x, y: np.ones_like(np.asarray(x, float)), g_D=g_D)
    sol = solve_nonconforming(mesh, A, data)

    # evaluate the CR field elementwise at each interior edge midpoint from
    # both sides: the jump must vanish (midpoint continuity)
    mid = mesh.edge_midpoints()
    grads = sol.element_gradients()
    for e in mesh.interior_edges:
        vals = []
        for side in (0, 1):
            t = mesh.edge_tris[e, side]
            # CR value at a point: u(bary) + grad . (x - bary) with
            # u(bary) = mean of the three edge dofs
            ub = sol.u_edge[mesh.tri_edges[t]].mean()
            b = mesh.tri_barycenters()[t]
            vals.append(ub + grads[t] @ (mid[e] - b))
        assert abs(vals[0] - vals[1]) < 1e-11
    dir_ = mesh.dirichlet_edges
    assert np.abs(sol.u_edge[dir_] - g_D(mid[dir_, 0], mid[dir_, 1])).max() < 1e-11


def test_conforming_traces_two_triangle_patch(square2):
    # nodal values (0, 1, 1, 1) at the square corners: u = x below the
    # diagonal and u = y above; verify the stored traces against a plane fit
    A = CoefficientField.isotropic(square2, 1.0)
    u = np.array([0.0, 1.0, 1.0, 1.0])
    sol = DiscreteSolution(method="conforming", mesh=square2, u_vertex=u)
    data = ProblemData(
        f=lambda x, y: np.zeros_like(np.asarray(x, float)),
        g_D=lambda x, y: np.zeros_like(np.asarray(x, float)),
    )
    tr = edge_traces(square2, A, sol, data)
    F = int(square2.interior_edges[0])
    for side in (0, 1):
        t = square2.edge_tris[F, side]
        coords = square2.vertices[square2.triangles[t]]
        vals = u[square2.triangles[t]]
        plane = np.linalg.solve(
            np.column_stack([np.ones(3), coords]), vals
        )  # u = a + b x + c y
        grad = plane[1:]
        expected = (-grad) @ square2.edge_normal[F]
        got = tr.flux_minus[F] if side == 0 else tr.flux_plus[F]
        assert got == pytest.approx(expected, abs=1e-13)
    # |jump| = sqrt(2) for this configuration
    assert abs(tr.flux_minus[F] - tr.flux_plus[F]) == pytest.approx(
        np.sqrt(2.0), abs=1e-13
    )


def test_traces_continuous_for_affine():
    mesh = unit_square_mesh(3)
    A = CoefficientField.from_tensor(mesh, TENSOR)
    u, grad, sigma = affine_data(TENSOR)
    data = ProblemData(f=lambda x, y: np.zeros_like(np.asarray(x, float)), g_D=u)
    sol = solve_conforming(mesh, A, data)
    tr = edge_traces(mesh, A, sol, data)
    ie = mesh.interior_edges
    assert np.abs(tr.flux_minus[ie] - tr.flux_plus[ie]).max() < 1e-11

    solm = solve_mixed(mesh, A, data)
    trm = edge_traces(mesh, A, solm, data)
    assert np.abs(trm.d_s_minus[ie] - trm.d_s_plus[ie]).max() < 1e-11
    assert np.abs(trm.d_e_minus[ie] - trm.d_e_plus[ie]).max() < 1e-11
    # mixed tangential traces reproduce the constant exact gradient
    tang = mesh.edge_tangent @ grad
    assert np.abs(trm.d_s_minus[ie] - tang[ie]).max() < 1e-10


def test_mixed_zero_flux_traces():
    mesh = unit_square_mesh(2)
    A = CoefficientField.isotropic(mesh, 1.0)
    zero = lambda x, y: np.zeros_like(np.asarray(x, float))
    data = ProblemData(f=zero, g_D=zero)
    sol = solve_mixed(mesh, A, data)
    tr = edge_traces(mesh, A, sol, data)
    for arr in (tr.d_s_minus, tr.d_e_minus):
        assert np.nanmax(np.abs(arr)) < 1e-12


def test_coefficient_field_validation():
    mesh = unit_square_mesh(2)
    with pytest.raises(ValueError):
        CoefficientField.from_tensor(mesh, np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        CoefficientField.isotropic(mesh, -1.0)
    A = CoefficientField.from_tensor(mesh, TENSOR)
    with pytest.raises(ValueError):
        A.require_scalar()
    B = CoefficientField.isotropic(mesh, 2.5)
    assert np.all(B.require_scalar() == 2.5)


def test_missing_neumann_data_raises():
    labeler, _ = right_edge_neumann(np.eye(2))
    mesh = build_mesh(
        unit_square_mesh(2).vertices,
        unit_square_mesh(2).triangles,
        boundary_labeler=labeler,
    )
    A = CoefficientField.isotropic(mesh, 1.0)
    zero = lambda x, y: np.zeros_like(np.asarray(x, float))
    data = ProblemData(f=zero, g_D=zero)  # no g_N
    with pytest.raises(SolverError):
        solve_conforming(mesh, A, data)
