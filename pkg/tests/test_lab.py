import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vemlab.cli import main
from vemlab.errors import NoConvergence, NotSPD
from vemlab.geometry import make_mesh_family, polygon_geometry, save_mesh, triangulate_polygon
from vemlab.lab.constants import QUANTITIES, complement_basis, constant_estimate
from vemlab.lab.eig import generalized_eig_sym, jacobi_eigenvalues
from vemlab.lab.report import CONSTANTS_HEADER, CONVERGENCE_HEADER, write_constants_csv, write_convergence_csv
from vemlab.lab.shapes import SHAPES, shape_vertices
from vemlab.lab.studies import build_report, convergence_study, fit_rate, interpolation_study, patch_test
from vemlab.realization import lagrange_space, realize_vem_basis
from vemlab.solver import poly_problem
from vemlab.vemcore import dof_layout, projector_pack, stabilization

# ---------------------------------------------------------------------------
# eigen solver


def test_eig_examples():
    B = np.array([[2.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(generalized_eig_sym(B, B), [1.0, 1.0], atol=1e-13)
    np.testing.assert_allclose(generalized_eig_sym(np.diag([2.0, 1.0]), np.eye(2)), [1.0, 2.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_eig_2x2_against_quadratic_formula(seed):
    rng = np.random.default_rng(seed)
    X, Y = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    A = X + X.T
    B = Y @ Y.T + 0.5 * np.eye(2)
    # det(A - λB) = a λ² + b λ + c
    a = np.linalg.det(B)
    b = -(A[0, 0] * B[1, 1] + A[1, 1] * B[0, 0] - 2 * A[0, 1] * B[0, 1])
    c = np.linalg.det(A)
    disc = math.sqrt(max(b * b - 4 * a * c, 0.0))
    roots = sorted([(-b - disc) / (2 * a), (-b + disc) / (2 * a)])
    np.testing.assert_allclose(generalized_eig_sym(A, B), roots, rtol=1e-9, atol=1e-10)


def test_eig_matches_lapack():
    from scipy.linalg import eigh

    rng = np.random.default_rng(1)
    X, Y = rng.normal(size=(12, 12)), rng.normal(size=(12, 12))
    A, B = X + X.T, Y @ Y.T + np.eye(12)
    np.testing.assert_allclose(generalized_eig_sym(A, B), eigh(A, B, eigvals_only=True), rtol=1e-10, atol=1e-12)


def test_eig_errors():
    with pytest.raises(NotSPD):
        generalized_eig_sym(np.eye(2), np.diag([1.0, -1.0]))
    with pytest.raises(NoConvergence):
        jacobi_eigenvalues(np.random.default_rng(0).normal(size=(8, 8)) + np.eye(8) * 0, max_sweeps=0)
    with pytest.raises(ValueError):
        generalized_eig_sym(np.eye(2), np.eye(3))


def test_complement_basis():
    V = np.array([[1.0], [1.0], [0.0]])
    Z = complement_basis(V)
    assert Z.shape == (3, 2)
    np.testing.assert_allclose(Z.T @ V, 0, atol=1e-15)
    np.testing.assert_allclose(Z.T @ Z, np.eye(2), atol=1e-15)


# ---------------------------------------------------------------------------
# constants


def test_norm_equiv_triangle_closed_form():
    est = constant_estimate("triangle", 1, -1, quantity="norm_equiv")
    v = shape_vertices("triangle")
    geom = polygon_geometry(v)
    M = geom.area / 12 * np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]])
    lam = np.linalg.eigvalsh(M / geom.h**2)
    assert est.lambda_min == pytest.approx(lam[0], rel=1e-10)
    assert est.lambda_max == pytest.approx(lam[-1], rel=1e-10)
    assert est.c_lower == pytest.approx(math.sqrt(lam[0]), rel=1e-10)
    assert est.c_upper == pytest.approx(math.sqrt(lam[-1]), rel=1e-10)


@pytest.mark.parametrize("variant,stab", [("V", "dof_full"), ("W", "dof_boundary")])
@pytest.mark.parametrize("k", [1, 2])
def test_stabilized_form_exact_on_polynomials(shape, k, variant, stab):
    v = shape_vertices(shape)
    geom, tri = polygon_geometry(v), triangulate_polygon(v)
    pack = projector_pack(geom, tri, dof_layout(geom, k, k - 2))
    real = realize_vem_basis(lagrange_space(tri, k, 2), geom, k, k - 2, variant, pack=pack)
    form = pack.pi_star.T @ pack.G_hat @ pack.pi_star + stabilization(pack, stab)
    D = pack.D[:, 1:]
    lam = generalized_eig_sym(D.T @ form @ D, D.T @ real.A_fe @ D)
    np.testing.assert_allclose(lam, 1.0, atol=1e-9)


def test_unknown_quantity():
    with pytest.raises(ValueError):
        constant_estimate("square", 1, quantity="other")


@pytest.mark.parametrize("quantity", QUANTITIES)
def test_estimates_are_positive_and_dilation_invariant(quantity):
    ref = constant_estimate("lhex", 2, quantity=quantity)
    assert 0 < ref.lambda_min <= ref.lambda_max < np.inf
    assert 0 < ref.constant < np.inf
    for s in (0.5, 2.0, 10.0):
        got = constant_estimate("lhex", 2, quantity=quantity, scale=s)
        assert got.constant == pytest.approx(ref.constant, rel=1e-8)


def test_poincare_trivial_on_triangle_k1():
    # V_1 on a triangle is P_1 itself, so (I - Π) vanishes
    assert constant_estimate("triangle", 1, quantity="poincare").constant == 0.0


def test_aspect_ratio_growth_is_recorded():
    vals = [constant_estimate("thin", 1, quantity="inverse", aspect=a).constant for a in (1, 4, 16)]
    assert np.all(np.isfinite(vals))
    assert vals[0] < vals[1] < vals[2]


def test_thin_label():
    assert constant_estimate("thin", 1, quantity="norm_equiv", aspect=16).element == "thin(aspect=16)"


def test_custom_element():
    est = constant_estimate(np.array([(0, 0), (2, 0), (2, 1), (0, 1)], float), 1, quantity="inverse")
    assert est.element == "cell" and est.constant > 0


# ---------------------------------------------------------------------------
# studies


def test_fit_rate_and_report():
    h = np.array([1.0, 0.5, 0.25, 0.125])
    assert fit_rate(h, 3 * h**2) == pytest.approx(2.0)
    assert fit_rate(h, 1e-14 * h) is None
    rep = build_report(h, [1, 2, 3, 4], 3 * h**2, h)
    assert rep.rows[0].rateL2 is None
    assert rep.rows[2].rateL2 == pytest.approx(2.0)
    assert not rep.exact
    with pytest.raises(ValueError):
        build_report([1.0, 1.0, 0.5], [1, 1, 1], [1, 1, 1], [1, 1, 1])


@pytest.mark.parametrize("which", ["v_pi", "v_c", "I_K", "I_K_W"])
def test_interpolation_polynomial_input_exact(which):
    prob = poly_problem("x**2 - 2*x*y + 0.5")
    rep = interpolation_study("pentagon", 2, which, prob.u, prob.grad_u, levels=3)
    assert rep.exact and rep.fitted_L2 is None
    assert all(r.errL2 <= 1e-9 for r in rep.rows)


def test_interpolation_rate_I_K_k1():
    rep = interpolation_study("square", 1, "I_K", levels=5)
    assert 1.8 <= rep.fitted_L2 <= 2.2
    assert 0.85 <= rep.fitted_H1 <= 1.15
    assert all(a.h > b.h for a, b in zip(rep.rows, rep.rows[1:]))


def test_convergence_polynomial_exact():
    rep = convergence_study("squares", 1, problem=poly_problem("x - 3*y"), levels=3, n0=2)
    assert rep.exact
    assert all(r.rateL2 is None for r in rep.rows)
    with pytest.raises(ValueError):
        convergence_study("squares", 1, levels=2)


def test_convergence_sinsin_squares_k1():
    rep = convergence_study("squares", 1, levels=3)
    assert abs(rep.fitted_H1 - 1) <= 0.15
    assert abs(rep.fitted_L2 - 2) <= 0.2
    assert rep.rows[-1].n_dof == 17**2


def test_patch_examples():
    assert patch_test(make_mesh_family("squares", 2), 1, expr="3*x - y + 0.5") <= 1e-9
    assert patch_test(make_mesh_family("distorted_quads", 2), 2, expr="x**2 - x*y") <= 1e-8
    for stab in ("dof_full", "dof_boundary"):
        assert patch_test(make_mesh_family("ltromino", 2), 2, stab_variant=stab) <= 1e-8
    assert patch_test(make_mesh_family("distorted_quads", 2), 3, space="W") <= 1e-8


# ---------------------------------------------------------------------------
# reports and CLI


def test_convergence_csv(tmp_path):
    h = np.array([0.5, 0.25, 0.125])
    rep = build_report(h, [9, 25, 81], h**2, np.array([1e-12, 1e-13, 1e-14]))
    path = tmp_path / "c.csv"
    write_convergence_csv(rep, path)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == CONVERGENCE_HEADER
    assert rows[1][5:] == ["", ""]
    assert rows[2][6] == "exact"
    assert float(rows[2][5]) == pytest.approx(2.0)
    assert rows[1][1] == "0.5" and float(rows[3][3]) == 0.015625


def test_constants_csv(tmp_path):
    est = constant_estimate("square", 1, quantity="inverse")
    path = tmp_path / "k.csv"
    write_constants_csv(est, path)
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == CONSTANTS_HEADER
    assert rows[1][:5] == ["inverse", "square", "1", "-1", "2"]
    assert float(rows[1][7]) == est.constant


def _run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_cli_check(tmp_path, capsys):
    path = tmp_path / "m.json"
    save_mesh(make_mesh_family("ltromino", 1), path)
    code, out = _run(["check", "--mesh", str(path)], capsys)
    assert code == 0 and "2 cells" in out.out
    code, out = _run(["check", "--mesh", str(path), "--json"], capsys)
    data = json.loads(out.out)
    assert len(data["cells"]) == 2
    assert data["cells"][0]["theta_min_deg"] == pytest.approx(45.0)


def test_cli_solve(tmp_path, capsys):
    mesh = tmp_path / "m.json"
    save_mesh(make_mesh_family("squares", 2), mesh)
    out = tmp_path / "sol.csv"
    code, res = _run(["solve", "--mesh", str(mesh), "--degree", "2", "--problem", "poly:x*y", "--out", str(out)], capsys)
    assert code == 0 and "ndof=25" in res.out
    assert out.read_text().startswith("dof_id,value\n")
    code, res = _run(["solve", "--mesh", str(mesh), "--degree", "2", "--problem", "poly:x*q", "--out", str(out)], capsys)
    assert code == 2 and "error" in res.err


def test_cli_patch(capsys):
    code, res = _run(["patch", "--family", "ltromino", "--n", "2", "--degree", "2", "--stab", "boundary"], capsys)
    assert code == 0 and "pass" in res.out
    code, res = _run(["patch", "--family", "squares", "--n", "1", "--degree", "5"], capsys)
    assert code == 2


def test_cli_converge_and_interp(tmp_path, capsys):
    out = tmp_path / "c.csv"
    code, res = _run(["converge", "--family", "squares", "--degree", "1", "--levels", "3", "--out", str(out)], capsys)
    assert code == 0 and "fitted rates" in res.out
    assert len(out.read_text().splitlines()) == 4
    code, _ = _run(["interp", "--shape", "square", "--degree", "1", "--which", "v_c", "--levels", "3", "--out", str(out)], capsys)
    assert code == 0
    assert out.read_text().splitlines()[0] == ",".join(CONVERGENCE_HEADER)


def test_cli_constants(tmp_path, capsys):
    out = tmp_path / "k.csv"
    argv = ["constants", "--shape", "thin", "--degree", "1", "--quantity", "norm_equiv", "--aspect", "16", "--out", str(out)]
    code, _ = _run(argv, capsys)
    assert code == 0
    assert out.read_text().splitlines()[1].startswith("norm_equiv,thin(aspect=16),1,-1,2,")


def test_cli_rejects_unknown_choice(capsys):
    with pytest.raises(SystemExit):
        main(["constants", "--shape", "circle", "--degree", "1", "--quantity", "inverse", "--out", "x"])


def test_shapes_are_ccw():
    from vemlab.geometry import signed_area

    for s in SHAPES:
        assert signed_area(shape_vertices(s)) > 0
    with pytest.raises(ValueError):
        shape_vertices("circle")


def _r_stability_cases():
    for quantity in ("inverse", "norm_equiv", "stab_pi_nabla", "stab_pi_zero"):
        for shape in SHAPES:
            for k in (1, 2, 3):
                marks = []
                if (quantity, shape, k) == ("stab_pi_zero", "triangle", 3):
                    # the r = 1 estimate is about 4.2 times the r = 2, 3 ones
                    marks = [pytest.mark.xfail(strict=True, reason="r=1 realization of W_3 on a triangle")]
                yield pytest.param(quantity, shape, k, marks=marks, id=f"{quantity}-{shape}-{k}")


@pytest.mark.parametrize("quantity,shape,k", list(_r_stability_cases()))
def test_refinement_stability(quantity, shape, k):
    from vemlab.errors import SaddleSingular

    vals = []
    for r in (1, 2, 3):
        try:
            vals.append(constant_estimate(shape, k, r=r, quantity=quantity).constant)
        except SaddleSingular:
            # W_k needs dim P_k interior constraints, more than r = 1 offers on small cells
            assert quantity == "stab_pi_zero" and r == 1
    assert len(vals) >= 2
    assert max(vals) / min(vals) <= 2.0
