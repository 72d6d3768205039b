import math

import numpy as np
import pytest

from afemrec.basis import (
    BasisError,
    LocalBasisId,
    LocalTriangleFrame,
    barycentric_integral,
    basis_vertex_vectors,
    eval_local_basis,
    weighted_mass_entry,
)

# Dunavant degree-4 rule (6 points), used as the independent quadrature
# oracle in this module; the package itself integrates in closed form.
_QW = np.array([0.223381589678011] * 3 + [0.109951743655322] * 3)
_QA = 0.445948490915965
_QB = 0.091576213509771
_QBARY = np.array(
    [
        [1 - 2 * _QA, _QA, _QA],
        [_QA, 1 - 2 * _QA, _QA],
        [_QA, _QA, 1 - 2 * _QA],
        [1 - 2 * _QB, _QB, _QB],
        [_QB, 1 - 2 * _QB, _QB],
        [_QB, _QB, 1 - 2 * _QB],
    ]
)


def quad(frame, fun):
    """Degree-4 quadrature of fun(x) over the frame's triangle."""
    pts = _QBARY @ frame.x
    vals = np.array([fun(p) for p in pts])
    return frame.area * (_QW * vals).sum()


def random_frame(rng):
    for _ in range(100):
        x = rng.uniform(-2.0, 2.0, (3, 2))
        d1, d2 = x[1] - x[0], x[2] - x[0]
        area2 = d1[0] * d2[1] - d1[1] * d2[0]
        if area2 < 0:
            x[[1, 2]] = x[[2, 1]]
            area2 = -area2
        if area2 > 0.3:
            return LocalTriangleFrame.from_vertices(*x)
    raise RuntimeError("no usable random triangle")


def reference_frame():
    return LocalTriangleFrame.from_vertices((0, 0), (1, 0), (0, 1))


def test_frame_geometry():
    fr = reference_frame()
    assert fr.area == pytest.approx(0.5)
    assert np.abs(fr.grad_lambda.sum(axis=0)).max() < 1e-14
    assert np.abs(fr.height * fr.edge_length - 2 * fr.area).max() < 1e-14
    assert np.abs((fr.normal * fr.tangent).sum(axis=1)).max() < 1e-15


def test_frame_rejects_clockwise():
    with pytest.raises(BasisError):
        LocalTriangleFrame.from_vertices((0, 0), (0, 1), (1, 0))


def test_rt_value_on_reference():
    # hypotenuse is edge 0 (opposite vertex (0,0)); H_0 = 1/sqrt(2)
    fr = reference_frame()
    val = eval_local_basis(fr, LocalBasisId("rt", 0), (0.5, 0.5))
    assert val == pytest.approx([math.sqrt(2) * 0.5, math.sqrt(2) * 0.5], abs=1e-14)


def test_point_outside_rejected():
    fr = reference_frame()
    with pytest.raises(BasisError):
        eval_local_basis(fr, LocalBasisId("rt", 0), (0.8, 0.8))


def test_basis_id_validation():
    with pytest.raises(BasisError):
        LocalBasisId("rt", 0, endpoint="s")
    with pytest.raises(BasisError):
        LocalBasisId("bdm", 1)
    with pytest.raises(BasisError):
        LocalBasisId("unknown", 0)
    with pytest.raises(BasisError):
        LocalBasisId("nd", 3, endpoint="s")


def _edge_points(fr, k, n=5):
    s, e = fr.x[fr.edge_start(k)], fr.x[fr.edge_end(k)]
    ts = np.linspace(0.05, 0.95, n)
    return [(1 - t) * s + t * e for t in ts]


def test_trace_identities_random_triangles():
    rng = np.random.default_rng(7)
    for _ in range(25):
        fr = random_frame(rng)
        for k in range(3):
            s, e = fr.edge_start(k), fr.edge_end(k)
            for ell in range(3):
                for p in _edge_points(fr, ell):
                    lam = fr.barycentric(p)
                    rt = eval_local_basis(fr, LocalBasisId("rt", k), p)
                    assert rt @ fr.normal[ell] == pytest.approx(
                        1.0 if ell == k else 0.0, abs=1e-12
                    )
                    ne = eval_local_basis(fr, LocalBasisId("ne", k), p)
                    assert ne @ fr.tangent[ell] == pytest.approx(
                        1.0 if ell == k else 0.0, abs=1e-12
                    )
                    bs = eval_local_basis(fr, LocalBasisId("bdm", k, "s"), p)
                    be = eval_local_basis(fr, LocalBasisId("bdm", k, "e"), p)
                    nds = eval_local_basis(fr, LocalBasisId("nd", k, "s"), p)
                    nde = eval_local_basis(fr, LocalBasisId("nd", k, "e"), p)
                    if ell == k:
                        assert bs @ fr.normal[k] == pytest.approx(lam[s], abs=1e-12)
                        assert be @ fr.normal[k] == pytest.approx(lam[e], abs=1e-12)
                        assert nds @ fr.tangent[k] == pytest.approx(lam[s], abs=1e-12)
                        assert nde @ fr.tangent[k] == pytest.approx(-lam[e], abs=1e-12)
                    else:
                        assert abs(bs @ fr.normal[ell]) < 1e-12
                        assert abs(be @ fr.normal[ell]) < 1e-12
                        assert abs(nds @ fr.tangent[ell]) < 1e-12
                        assert abs(nde @ fr.tangent[ell]) < 1e-12


def test_affine_edge_reproduction():
    # an affine p on edge k is reproduced by the BDM / ND endpoint pairs
    rng = np.random.default_rng(11)
    for _ in range(10):
        fr = random_frame(rng)
        a, b, c = rng.normal(size=3)
        p_aff = lambda x: a + b * x[0] + c * x[1]
        for k in range(3):
            s, e = fr.edge_start(k), fr.edge_end(k)
            for p in _edge_points(fr, k):
                bs = eval_local_basis(fr, LocalBasisId("bdm", k, "s"), p)
                be = eval_local_basis(fr, LocalBasisId("bdm", k, "e"), p)
                val = p_aff(fr.x[s]) * (bs @ fr.normal[k]) + p_aff(fr.x[e]) * (
                    be @ fr.normal[k]
                )
                assert val == pytest.approx(p_aff(p), abs=1e-12)
                nds = eval_local_basis(fr, LocalBasisId("nd", k, "s"), p)
                nde = eval_local_basis(fr, LocalBasisId("nd", k, "e"), p)
                val = p_aff(fr.x[s]) * (nds @ fr.tangent[k]) - p_aff(fr.x[e]) * (
                    nde @ fr.tangent[k]
                )
                assert val == pytest.approx(p_aff(p), abs=1e-12)


def test_decompositions_pointwise():
    rng = np.random.default_rng(13)
    for _ in range(10):
        fr = random_frame(rng)
        pts = rng.dirichlet(np.ones(3), size=8) @ fr.x
        for k in range(3):
            for p in pts:
                rt = eval_local_basis(fr, LocalBasisId("rt", k), p)
                bs = eval_local_basis(fr, LocalBasisId("bdm", k, "s"), p)
                be = eval_local_basis(fr, LocalBasisId("bdm", k, "e"), p)
                assert np.abs(rt - bs - be).max() < 1e-13
                ne = eval_local_basis(fr, LocalBasisId("ne", k), p)
                nds = eval_local_basis(fr, LocalBasisId("nd", k, "s"), p)
                nde = eval_local_basis(fr, LocalBasisId("nd", k, "e"), p)
                assert np.abs(ne - nds + nde).max() < 1e-13


def test_scalar_bases():
    fr = reference_frame()
    assert eval_local_basis(fr, LocalBasisId("p1", 0), (0.0, 0.0)) == pytest.approx(1.0)
    assert eval_local_basis(fr, LocalBasisId("p1", 1), (0.0, 0.0)) == pytest.approx(0.0)
    # CR basis of edge 0 (the hypotenuse): 1 - 2 lambda_0
    mid = (0.5, 0.5)
    assert eval_local_basis(fr, LocalBasisId("cr", 0), mid) == pytest.approx(1.0)
    assert eval_local_basis(fr, LocalBasisId("cr", 1), mid) == pytest.approx(0.0)


def test_barycentric_integral_values():
    fr = reference_frame()
    assert barycentric_integral(fr, (0, 0, 0)) == pytest.approx(0.5)
    assert barycentric_integral(fr, (1, 0, 0)) == pytest.approx(1.0 / 6.0)
    assert barycentric_integral(fr, (1, 1, 0)) == pytest.approx(1.0 / 24.0)


def test_barycentric_integral_vs_quadrature():
    rng = np.random.default_rng(5)
    for _ in range(5):
        fr = random_frame(rng)
        for a in range(5):
            for b in range(5 - a):
                for c in range(5 - a - b):
                    def fun(p, a=a, b=b, c=c):
                        lam = fr.barycentric(p)
                        return lam[0] ** a * lam[1] ** b * lam[2] ** c

                    exact = barycentric_integral(fr, (a, b, c))
                    assert exact == pytest.approx(quad(fr, fun), rel=1e-12, abs=1e-14)


def test_barycentric_integral_guards():
    fr = reference_frame()
    with pytest.raises(BasisError):
        barycentric_integral(fr, (3, 2, 0))
    with pytest.raises(BasisError):
        barycentric_integral(fr, (-1, 0, 0))


def test_mass_entry_reference_value():
    fr = reference_frame()
    rt0 = LocalBasisId("rt", 0)
    assert weighted_mass_entry(fr, np.eye(2), rt0, rt0) == pytest.approx(1.0 / 3.0)


def test_mass_entry_scaling_and_inverse():
    fr = reference_frame()
    ida = LocalBasisId("bdm", 1, "s")
    idb = LocalBasisId("rt", 2)
    base = weighted_mass_entry(fr, np.eye(2), ida, idb)
    assert weighted_mass_entry(fr, 3.0 * np.eye(2), ida, idb) == pytest.approx(3 * base)
    # closed-form 2x2 inverse and the numerical inverse give the same entry
    M = np.array([[2.0, 0.4], [0.4, 1.0]])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    M_inv_closed = np.array([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]]) / det
    a = weighted_mass_entry(fr, M_inv_closed, ida, idb)
    b = weighted_mass_entry(fr, np.linalg.inv(M), ida, idb)
    assert a == pytest.approx(b, abs=1e-14)
    assert abs(a - weighted_mass_entry(fr, M, ida, idb)) > 1e-6


def test_mass_entry_vs_quadrature_random_spd():
    rng = np.random.default_rng(3)
    ids = [
        LocalBasisId("rt", 0),
        LocalBasisId("bdm", 1, "e"),
        LocalBasisId("ne", 2),
        LocalBasisId("nd", 0, "s"),
    ]
    for _ in range(8):
        fr = random_frame(rng)
        th = rng.uniform(0, np.pi)
        Q = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        M = Q @ np.diag(rng.uniform(0.2, 5.0, 2)) @ Q.T
        for ida in ids:
            for idb in ids:
                def fun(p, ida=ida, idb=idb):
                    va = eval_local_basis(fr, ida, p)
                    vb = eval_local_basis(fr, idb, p)
                    return (M @ va) @ vb

                assert weighted_mass_entry(fr, M, ida, idb) == pytest.approx(
                    quad(fr, fun), rel=1e-13, abs=1e-14
                )


def test_mass_entry_rejects_bad_weight():
    fr = reference_frame()
    rt0 = LocalBasisId("rt", 0)
    with pytest.raises(BasisError):
        weighted_mass_entry(fr, np.array([[1.0, 0.2], [0.0, 1.0]]), rt0, rt0)
    with pytest.raises(BasisError):
        weighted_mass_entry(fr, -np.eye(2), rt0, rt0)
    with pytest.raises(BasisError):
        weighted_mass_entry(fr, np.eye(2), LocalBasisId("p1", 0), rt0)


def test_vertex_vector_form_matches_eval():
    rng = np.random.default_rng(17)
    fr = random_frame(rng)
    for bid in [
        LocalBasisId("rt", 1),
        LocalBasisId("bdm", 0, "s"),
        LocalBasisId("ne", 2),
        LocalBasisId("nd", 1, "e"),
    ]:
        c = basis_vertex_vectors(fr, bid)
        p = rng.dirichlet(np.ones(3)) @ fr.x
        assert np.abs(fr.barycentric(p) @ c - eval_local_basis(fr, bid, p)).max() < 1e-13
