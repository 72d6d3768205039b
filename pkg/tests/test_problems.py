import numpy as np
import pytest

from afemrec.problems import (
    ProblemError,
    get_problem,
    kellogg_problem,
    manufactured_affine,
    manufactured_smooth,
    verify_exact,
)

R_PUBLISHED = 161.4476387975881


def test_kellogg_coefficient_value(kellogg):
    assert kellogg.params["gamma"] == 0.1
    assert kellogg.params["R"] == pytest.approx(R_PUBLISHED, rel=1e-10)
    assert kellogg.alpha_at(0.5, 0.5) == pytest.approx(R_PUBLISHED, rel=1e-10)
    assert kellogg.alpha_at(-0.5, -0.5) == pytest.approx(R_PUBLISHED, rel=1e-10)
    assert kellogg.alpha_at(-0.5, 0.5) == 1.0
    assert kellogg.alpha_at(0.5, -0.5) == 1.0


def test_kellogg_coefficient_on_mesh(kellogg):
    from afemrec.mesh import initial_kellogg_mesh

    mesh = initial_kellogg_mesh(2)
    A = kellogg.coefficient(mesh)
    # the element containing (0.5, 0.5) carries the large coefficient
    containing = None
    for t in range(mesh.n_triangles):
        c = mesh.vertices[mesh.triangles[t]]
        M = np.column_stack([np.ones(3), c])
        w = np.linalg.solve(M.T, np.array([1.0, 0.5, 0.5]))
        if w.min() > -1e-12:
            containing = t
            break
    assert containing is not None
    assert A.scalar[containing] == pytest.approx(R_PUBLISHED, rel=1e-10)


def test_kellogg_vanishes_at_origin(kellogg):
    assert kellogg.data.exact_u(0.0, 0.0) == 0.0
    gx, gy = kellogg.data.exact_grad(0.0, 0.0)
    assert gx == 0.0 and gy == 0.0


def test_kellogg_verifies(kellogg):
    report = verify_exact(kellogg)
    assert report["u_interface"] <= 1e-8
    assert report["flux_interface"] <= 1e-8
    assert report["pde_residual"] <= 1e-4


def test_kellogg_angular_form(kellogg):
    # u / r^gamma depends only on the angle
    gamma = kellogg.params["gamma"]
    th = np.linspace(0.01, 2 * np.pi - 0.01, 37)
    v1 = kellogg.data.exact_u(0.3 * np.cos(th), 0.3 * np.sin(th)) / 0.3**gamma
    v2 = kellogg.data.exact_u(0.7 * np.cos(th), 0.7 * np.sin(th)) / 0.7**gamma
    assert np.abs(v1 - v2).max() < 1e-10


def test_kellogg_interface_continuity_pointwise(kellogg):
    # evaluate u on both sides of each interface ray at r = 0.7
    u = kellogg.data.exact_u
    eps = 1e-12
    for th in (0.0, np.pi / 2, np.pi, 1.5 * np.pi):
        pa = 0.7 * np.array([np.cos(th + eps), np.sin(th + eps)])
        pb = 0.7 * np.array([np.cos(th - eps), np.sin(th - eps)])
        assert abs(float(u(*pa)) - float(u(*pb))) < 1e-8


def test_kellogg_perturbed_sigma_rejected():
    with pytest.raises(ProblemError):
        kellogg_problem(_sigma_shift=1e-3)


def test_kellogg_from_ratio():
    p = kellogg_problem(R=1e4)
    assert p.params["R"] == pytest.approx(1e4, rel=1e-10)
    assert 0.0 < p.params["gamma"] < 0.1
    # round trip: the default pair is reproduced from its ratio
    q = kellogg_problem(R=R_PUBLISHED)
    assert q.params["gamma"] == pytest.approx(0.1, rel=1e-10)


def test_kellogg_bad_ratio():
    with pytest.raises(ProblemError):
        kellogg_problem(R=0.5)


def test_affine_problem():
    p = manufactured_affine()
    assert p.data.f(0.3, 0.4) == 0.0
    assert p.data.exact_u(0.0, 0.0) == 1.0
    mesh = p.mesh_factory(2)
    A = p.coefficient(mesh)
    assert np.all(A.scalar == 1.0)
    pt = manufactured_affine(tensor=[[2.0, 0.5], [0.5, 1.0]])
    mesh = pt.mesh_factory(2)
    assert pt.coefficient(mesh).scalar is None


def test_smooth_problem():
    p = manufactured_smooth()
    assert p.data.f(0.5, 0.5) == pytest.approx(2 * np.pi**2)
    # homogeneous Dirichlet trace on the unit square boundary
    t = np.linspace(0.0, 1.0, 11)
    for xs, ys in (
        (t, np.zeros_like(t)),
        (t, np.ones_like(t)),
        (np.zeros_like(t), t),
        (np.ones_like(t), t),
    ):
        assert np.abs(p.data.exact_u(xs, ys)).max() < 1e-14


def test_get_problem_ids(kellogg):
    assert get_problem("affine").name == "affine"
    assert get_problem("smooth").name == "smooth"
    with pytest.raises(ValueError):
        get_problem("nonsense")


def test_verify_requires_exact():
    from afemrec.mesh import unit_square_mesh
    from afemrec.problems import BenchmarkProblem
    from afemrec.solvers import CoefficientField, ProblemData

    zero = lambda x, y: np.zeros_like(np.asarray(x, float))
    p = BenchmarkProblem(
        name="noexact",
        mesh_factory=lambda n=2: unit_square_mesh(n),
        coefficient=lambda m: CoefficientField.isotropic(m, 1.0),
        data=ProblemData(f=zero, g_D=zero),
    )
    with pytest.raises(ProblemError):
        verify_exact(p)
