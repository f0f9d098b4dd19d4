import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vemlab.errors import UnsupportedLayout
from vemlab.geometry import polygon_geometry, triangulate_polygon
from vemlab.lab.shapes import shape_vertices
from vemlab.polynomials import eval_basis, eval_poly, monomial_basis, stiffness_matrix
from vemlab.vemcore import (
    dof_layout,
    edge_trace_inverse,
    edge_trace_operator,
    element_matrices,
    evaluate_dofs,
    pi_zero,
    projector_pack,
    stabilization,
)

SQUARE = [(0, 0), (1, 0), (1, 1), (0, 1)]
LAYOUTS = [(1, -1), (2, 0), (3, 1), (4, 2), (1, 1), (2, 2), (3, 3), (4, 4)]


def _element(v):
    v = np.asarray(v, float)
    return polygon_geometry(v), triangulate_polygon(v)


def _pack(v, k, l):
    geom, tri = _element(v)
    return projector_pack(geom, tri, dof_layout(geom, k, l))


def test_layout_counts():
    pent = polygon_geometry(shape_vertices("pentagon"))
    sq = polygon_geometry(SQUARE)
    assert dof_layout(pent, 2, 0).N == 11
    assert dof_layout(sq, 1, -1).N == 4
    lay = dof_layout(sq, 3, 1)
    assert lay.N == 15 and lay.n_boundary == 12 and lay.n_cell == 3
    np.testing.assert_array_equal(lay.edge_dofs(3), [3, 0, 10, 11])


def test_edge_trace_reconstruction():
    # any degree-k polynomial on [0,1] is recovered from its endpoint values and moments
    rng = np.random.default_rng(3)
    for k in (1, 2, 3, 4):
        c = rng.normal(size=k + 1)
        p = np.polynomial.Polynomial(c)
        data = [p(0.0), p(1.0)]
        for j in range(k - 1):
            q = p * np.polynomial.Polynomial([-0.5, 1.0]) ** j
            data.append(q.integ()(1.0) - q.integ()(0.0))
        s = np.linspace(0, 1, 7)
        np.testing.assert_allclose(edge_trace_operator(k, s) @ data, p(s), atol=1e-12)
        assert np.linalg.cond(edge_trace_inverse(k)) < 1e4


def test_dof_examples():
    geom, tri = _element(SQUARE)
    lay = dof_layout(geom, 3, 1)
    one = evaluate_dofs(lambda p: np.ones(len(p)), geom, tri, lay)
    np.testing.assert_allclose(one[:4], 1)
    np.testing.assert_allclose(one[lay.edge_moment_dofs(0)], [1.0, 0.0], atol=1e-15)
    assert one[lay.cell_dofs[0]] == pytest.approx(1.0)
    x = evaluate_dofs(lambda p: p[:, 0], geom, tri, lay)
    assert x[lay.edge_moment_dofs(0)[0]] == pytest.approx(0.5)
    xy = evaluate_dofs(lambda p: p[:, 0] * p[:, 1], geom, tri, lay)
    assert xy[2] == pytest.approx(1.0)


def test_pi_star_square_k1():
    pack = _pack(SQUARE, 1, -1)
    # hand-assembled: boundary-mean row, then the exact edge integrals of n . grad m
    r = math.sqrt(2) / 2
    expected = np.array([[0.25] * 4, [-r, r, r, -r], [-r, -r, r, r]])
    np.testing.assert_allclose(pack.pi_star, expected, atol=1e-14)
    np.testing.assert_allclose(pack.pi_star @ np.ones(4), [1, 0, 0], atol=1e-15)


def test_pi_star_square_k1_dense_oracle():
    pack = _pack(SQUARE, 1, -1)
    h = math.sqrt(2)
    xs = np.array([0.0, 1.0, 1.0, 0.0]) - 0.5
    ys = np.array([0.0, 0.0, 1.0, 1.0]) - 0.5
    D = np.column_stack([np.ones(4), xs / h, ys / h])
    # int over edge of v n_x: right edge gives (v1+v2)/2, left edge -(v0+v3)/2
    B = np.array([[0.25] * 4, [-0.5, 0.5, 0.5, -0.5], [-0.5, -0.5, 0.5, 0.5]])
    B[1:] /= h
    np.testing.assert_allclose(pack.pi_star, np.linalg.solve(B @ D, B), atol=1e-14)


@pytest.mark.parametrize("k,l", LAYOUTS)
def test_projector_reproduces_polynomials(shape, k, l):
    pack = _pack(shape_vertices(shape), k, l)
    np.testing.assert_allclose(pack.pi_star @ pack.D, np.eye(pack.basis.dim), atol=1e-10)
    # Π0 goes through the monomial mass matrix, which is worse conditioned on thin cells
    np.testing.assert_allclose(pack.pi_zero_star @ pack.D, np.eye(pack.basis.dim), atol=1e-9)
    assert np.linalg.matrix_rank(pack.D) == pack.basis.dim
    # the stiffness part of G is the monomial stiffness matrix (independent quadrature)
    A = stiffness_matrix(pack.basis, pack.tri)
    A[0] = 0.0
    np.testing.assert_allclose(pack.G_hat, A, atol=1e-10 * np.abs(A).max())
    np.testing.assert_allclose(pack.G_hat, pack.G_hat.T)
    assert np.linalg.eigvalsh(pack.G_hat).min() > -1e-12


@pytest.mark.parametrize("k,l", LAYOUTS)
@pytest.mark.parametrize("variant", ["dof_full", "dof_boundary"])
def test_stabilization_properties(shape, k, l, variant):
    pack = _pack(shape_vertices(shape), k, l)
    S = stabilization(pack, variant)
    np.testing.assert_allclose(S, S.T)
    ev = np.linalg.eigvalsh(S)
    assert ev.min() > -1e-12 * ev.max()
    assert np.abs(S @ pack.D).max() <= 1e-10 * max(1.0, np.abs(S).max())


def test_stabilization_rank_square_k1():
    S = stabilization(_pack(SQUARE, 1, -1), "dof_full")
    ev = np.linalg.eigvalsh(S)
    assert int(np.sum(ev > 1e-12)) == 1


def test_unknown_stabilization():
    with pytest.raises(ValueError):
        stabilization(_pack(SQUARE, 1, -1), "tau")


@pytest.mark.parametrize("k,l", [(2, -1), (3, 0), (5, 3), (0, -1)])
def test_unsupported_layouts(k, l):
    with pytest.raises(UnsupportedLayout):
        _pack(SQUARE, k, l)


def test_triangle_k1_matches_linear_fem():
    v = np.array([(0.1, 0.0), (1.3, 0.2), (0.4, 0.9)])
    geom, tri = _element(v)
    em = element_matrices(geom, tri, 1, -1)
    area = geom.area
    # gradients of barycentric coordinates
    T = np.array([[v[1, 0] - v[0, 0], v[2, 0] - v[0, 0]], [v[1, 1] - v[0, 1], v[2, 1] - v[0, 1]]])
    grads = np.vstack([[-1, -1], [1, 0], [0, 1]]) @ np.linalg.inv(T)
    np.testing.assert_allclose(em.A, area * grads @ grads.T, atol=1e-14)
    assert np.abs(em.S).max() < 1e-14


@pytest.mark.parametrize("k,l", LAYOUTS)
def test_element_matrix_properties(shape, k, l):
    geom, tri = _element(shape_vertices(shape))
    em = element_matrices(geom, tri, k, l, f=lambda p: np.ones(len(p)))
    np.testing.assert_allclose(em.A, em.A.T, atol=1e-13)
    ev = np.linalg.eigvalsh(em.A)
    assert ev.min() > -1e-12 * ev.max()
    one = em.pack.D[:, 0]
    assert np.abs(em.A @ one).max() < 1e-12 * ev.max()
    assert em.b @ one == pytest.approx(geom.area, rel=1e-12)
    # patch-test precursor: on polynomials only the consistency part acts
    np.testing.assert_allclose(em.A @ em.pack.D, em.consistency @ em.pack.D, atol=1e-10)


def test_zero_load_and_unit_load_sum():
    geom, tri = _element(shape_vertices("pentagon"))
    assert not element_matrices(geom, tri, 2, 0, f=lambda p: 0 * p[:, 0]).b.any()
    for k, l in [(1, -1), (2, 0)]:
        b = element_matrices(geom, tri, k, l, f=lambda p: np.ones(len(p))).b
        assert b.sum() == pytest.approx(geom.area, rel=1e-12)


def test_pi_zero_load_option():
    geom, tri = _element(shape_vertices("lhex"))
    em = element_matrices(geom, tri, 2, 0, f=lambda p: p[:, 0], load="pi_zero")
    assert em.b @ em.pack.D[:, 0] == pytest.approx(
        float(np.sum(evaluate_dofs(lambda p: p[:, 0], geom, tri, dof_layout(geom, 2, 0))[-1:]) * geom.area)
    )
    with pytest.raises(ValueError):
        element_matrices(geom, tri, 2, 0, f=lambda p: p[:, 0], load="other")


def test_pi_zero_k1_constant():
    pack = _pack(SQUARE, 1, -1)
    np.testing.assert_allclose(pi_zero(pack) @ np.ones(4), [1, 0, 0], atol=1e-15)


def test_pi_zero_matches_cell_moments():
    # low moments of Π0 v equal the cell d.o.f. for any d.o.f. vector
    pack = _pack(shape_vertices("pentagon"), 3, 1)
    w = np.random.default_rng(4).normal(size=pack.layout.N)
    mom = pack.H @ (pack.pi_zero_star @ w)
    np.testing.assert_allclose(mom[:3], pack.geom.area * w[pack.layout.cell_dofs], atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(1e-3, 1e3), st.sampled_from(LAYOUTS))
def test_scale_invariance(scale, kl):
    k, l = kl
    v = shape_vertices("lhex")
    ref = element_matrices(*_element(v), k, l)
    got = element_matrices(*_element(v * scale), k, l)
    for a, b in ((ref.A, got.A), (ref.pack.pi_star, got.pack.pi_star), (ref.S, got.S)):
        np.testing.assert_allclose(b, a, rtol=1e-10, atol=1e-10 * np.abs(a).max())


def test_dofs_of_monomials_match_basis():
    geom, tri = _element(shape_vertices("pentagon"))
    lay = dof_layout(geom, 3, 1)
    basis = monomial_basis(3, geom)
    c = np.random.default_rng(5).normal(size=basis.dim)
    pack = projector_pack(geom, tri, lay)
    direct = evaluate_dofs(lambda p: eval_poly(c, basis, p), geom, tri, lay)
    np.testing.assert_allclose(pack.D @ c, direct, atol=1e-13)
    assert eval_basis(basis, geom.vertices).shape == (5, basis.dim)
