import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from vemlab.errors import ElementError, MaxIterations, MissingExact
from vemlab.geometry import MESH_FAMILIES, make_mesh_family, polygon_geometry, triangulate_polygon
from vemlab.solver import (
    Problem,
    apply_dirichlet,
    assemble,
    cg_solve,
    dof_map,
    error_norms,
    exact_dofs,
    poly_problem,
    problem_from_name,
    sinsin_problem,
    solve_poisson,
    write_solution_csv,
)
from vemlab.vemcore import dof_layout, evaluate_dofs


def _zero(x):
    return np.zeros(len(x))


def test_single_square_k1():
    sys = assemble(make_mesh_family("squares", 1), 1)
    A = sys.matrix.toarray()
    assert A.shape == (4, 4)
    np.testing.assert_allclose(A.sum(axis=1), 0, atol=1e-14)


def test_global_count():
    assert dof_map(make_mesh_family("squares", 2), 2, 0).n_dofs == 25
    assert dof_map(make_mesh_family("squares", 2), 3, 1).n_dofs == 9 + 12 * 2 + 4 * 3


@pytest.mark.parametrize("kind", MESH_FAMILIES)
@pytest.mark.parametrize("k,l", [(1, -1), (2, 0), (3, 1), (2, 2)])
def test_matrix_symmetric_psd_with_constant_kernel(kind, k, l):
    sys = assemble(make_mesh_family(kind, 2), k, l)
    A = sys.matrix.toarray()
    np.testing.assert_allclose(A, A.T, atol=1e-12)
    one = exact_dofs(sys.dofmap.mesh, sys.dofmap, lambda p: np.ones(len(p)))
    assert np.abs(A @ one).max() < 1e-12 * np.abs(A).max()
    ev = np.linalg.eigvalsh(A)
    assert ev[0] >= -1e-10
    # exactly one zero mode: the constants
    assert ev[1] > 1e-8 * ev[-1]


@pytest.mark.parametrize("kind", ["distorted_quads", "ltromino"])
def test_edge_orientation_consistent(kind):
    # the global χ(u) restricted to a cell must equal the cell's own χ(u)
    mesh = make_mesh_family(kind, 2)
    k = 4
    dm = dof_map(mesh, k, k - 2)
    u = lambda p: np.exp(p[:, 0]) * (1 + p[:, 1] ** 3)  # noqa: E731
    glob = exact_dofs(mesh, dm, u)
    for c in range(mesh.n_cells):
        v = mesh.cell_vertices(c)
        geom = polygon_geometry(v)
        loc = evaluate_dofs(u, geom, triangulate_polygon(v), dof_layout(geom, k, k - 2))
        np.testing.assert_allclose(dm.cell_signs[c] * glob[dm.cell_dofs[c]], loc, atol=1e-13)


def test_dirichlet_zero_keeps_rhs():
    prob = Problem(f=lambda p: p[:, 0] + 1.0, g=_zero)
    sys = assemble(make_mesh_family("squares", 3), 2, problem=prob)
    red = apply_dirichlet(sys)
    np.testing.assert_allclose(red.rhs, sys.rhs[red.free])


@pytest.mark.parametrize("k", [1, 2, 3])
def test_constants_reproduced(k):
    prob = Problem(f=None, g=lambda p: np.ones(len(p)))
    mesh = make_mesh_family("ltromino", 2)
    sol = solve_poisson(mesh, k, problem=prob)
    expected = exact_dofs(mesh, sol.dofmap, lambda p: np.ones(len(p)))
    np.testing.assert_allclose(sol.dofs, expected, atol=1e-10)


def test_reduced_matrix_spd():
    sys = assemble(make_mesh_family("distorted_quads", 3), 2, problem=Problem(f=None, g=_zero))
    red = apply_dirichlet(sys)
    assert np.linalg.eigvalsh(red.matrix.toarray()).min() > 0
    b = np.random.default_rng(0).normal(size=len(red.free))
    x = cg_solve(red.matrix, b)
    assert np.linalg.norm(b - red.matrix @ x) <= 1e-10 * np.linalg.norm(b)


def test_cg_examples():
    b = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(cg_solve(sp.identity(3, format="csr"), b), b)
    np.testing.assert_allclose(cg_solve(np.array([[2.0, 1.0], [1.0, 2.0]]), [3.0, 3.0]), [1.0, 1.0])
    assert not cg_solve(np.eye(2), np.zeros(2)).any()


def test_cg_max_iterations():
    n = 200
    A = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")
    with pytest.raises(MaxIterations) as info:
        cg_solve(A, np.ones(n), maxit=3)
    assert len(info.value.residuals) == 4
    assert info.value.residuals[0] == pytest.approx(1.0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 30), st.integers(0, 2**31 - 1))
def test_cg_residual_contract(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, n))
    A = X @ X.T + n * np.eye(n)
    b = rng.normal(size=n)
    x = cg_solve(A, b, tol=1e-10)
    assert np.linalg.norm(b - A @ x) <= 1e-10 * np.linalg.norm(b)


@pytest.mark.parametrize("kind", MESH_FAMILIES)
@pytest.mark.parametrize("stab", ["dof_full", "dof_boundary"])
def test_linear_patch(kind, stab):
    u = lambda p: p[:, 0] + 2 * p[:, 1] - 0.3  # noqa: E731
    mesh = make_mesh_family(kind, 3)
    sol = solve_poisson(mesh, 1, stab_variant=stab, problem=Problem(f=_zero, g=u))
    np.testing.assert_allclose(sol.dofs, exact_dofs(mesh, sol.dofmap, u), atol=1e-9)


@pytest.mark.parametrize(
    "k,expr",
    [(2, lambda p: p[:, 0] ** 2 - p[:, 1] ** 2), (3, lambda p: p[:, 0] ** 3 - 3 * p[:, 0] * p[:, 1] ** 2)],
)
@pytest.mark.parametrize("kind", ["distorted_quads", "ltromino"])
def test_interior_residual_of_harmonic_polynomials(k, expr, kind):
    mesh = make_mesh_family(kind, 2)
    sys = assemble(mesh, k)
    chi = exact_dofs(mesh, sys.dofmap, expr)
    res = (sys.matrix @ chi)[~sys.dirichlet_mask]
    assert np.abs(res).max() <= 1e-9 * abs(sys.matrix).max()


def test_zero_problem():
    sol = solve_poisson(make_mesh_family("squares", 2), 2, problem=Problem(f=_zero, g=_zero))
    assert not sol.dofs.any()


def test_error_norms_need_exact():
    mesh = make_mesh_family("squares", 2)
    sol = solve_poisson(mesh, 1, problem=Problem(f=_zero, g=_zero))
    with pytest.raises(MissingExact):
        error_norms(sol, Problem(f=_zero, g=_zero), mesh)


def test_polynomial_solution_errors_vanish():
    prob = poly_problem("x**2 - x*y + y")
    mesh = make_mesh_family("ltromino", 2)
    sol = solve_poisson(mesh, 2, problem=prob, load="moments")
    e0, e1 = error_norms(sol, prob, mesh)
    assert 0 <= e0 <= 1e-8 and 0 <= e1 <= 1e-8


def test_error_ratio_grows_like_inverse_h():
    prob = sinsin_problem()
    ratios = []
    for n in (8, 16):
        mesh = make_mesh_family("squares", n)
        e0, e1 = error_norms(solve_poisson(mesh, 1, problem=prob), prob, mesh)
        ratios.append(e1 / e0)
    assert 1.6 < ratios[1] / ratios[0] < 2.4


@pytest.mark.parametrize("k", [1, 2])
def test_stabilization_variants_comparable(k):
    prob = sinsin_problem()
    mesh = make_mesh_family("distorted_quads", 8)
    a = error_norms(solve_poisson(mesh, k, stab_variant="dof_full", problem=prob), prob, mesh)
    b = error_norms(solve_poisson(mesh, k, stab_variant="dof_boundary", problem=prob), prob, mesh)
    for x, y in zip(a, b):
        assert 1 / 3 < x / y < 3


def test_assembly_is_deterministic():
    mesh = make_mesh_family("ltromino", 3)
    a = assemble(mesh, 2, problem=sinsin_problem())
    b = assemble(mesh, 2, problem=sinsin_problem())
    assert a.matrix.data.tobytes() == b.matrix.data.tobytes()
    assert a.matrix.indices.tobytes() == b.matrix.indices.tobytes()
    assert a.rhs.tobytes() == b.rhs.tobytes()


def test_w_space_and_options():
    mesh = make_mesh_family("squares", 2)
    prob = poly_problem("x**2 + y**2")
    sol = solve_poisson(mesh, 2, problem=prob, space="W")
    np.testing.assert_allclose(sol.dofs, exact_dofs(mesh, sol.dofmap, prob.u), atol=1e-9)
    with pytest.raises(ValueError):
        assemble(mesh, 2, 2, space="W")
    with pytest.raises(ValueError):
        assemble(mesh, 2, space="Z")
    with pytest.raises(ValueError):
        assemble(mesh, 2, load="other")


def test_element_errors_carry_the_cell():
    with pytest.raises(ElementError) as info:
        assemble(make_mesh_family("squares", 1), 5)
    assert info.value.element == 0


def test_poly_problem():
    prob = poly_problem("x**3*y - y**2")
    p = np.array([[0.3, 0.7], [1.0, -2.0]])
    np.testing.assert_allclose(prob.u(p), p[:, 0] ** 3 * p[:, 1] - p[:, 1] ** 2)
    # f = -Δu = -(6xy - 2)
    np.testing.assert_allclose(prob.f(p), -(6 * p[:, 0] * p[:, 1] - 2))
    np.testing.assert_allclose(prob.grad_u(p), np.column_stack([3 * p[:, 0] ** 2 * p[:, 1], p[:, 0] ** 3 - 2 * p[:, 1]]))
    # constants still evaluate pointwise
    assert poly_problem("2").f(p).shape == (2,)
    for bad in ("x +* y", "x*z"):
        with pytest.raises(ValueError):
            poly_problem(bad)
    assert problem_from_name("sinsin").name == "sinsin"
    with pytest.raises(ValueError):
        problem_from_name("other")


def test_solution_csv(tmp_path):
    mesh = make_mesh_family("squares", 1)
    sol = solve_poisson(mesh, 1, problem=poly_problem("x + y / 3"))
    path = tmp_path / "sol.csv"
    write_solution_csv(sol, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "dof_id,value"
    assert len(lines) == 5
    ids, vals = zip(*(line.split(",") for line in lines[1:]))
    assert ids == ("0", "1", "2", "3")
    v = mesh.vertices
    # all d.o.f. are Dirichlet vertex values, written with full precision
    assert [float(x) for x in vals] == list(v[:, 0] + v[:, 1] / 3)
