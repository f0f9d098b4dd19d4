"""Numerical estimates of the inequality constants on a single element.

Every estimate is an extreme generalized eigenvalue of two Gram matrices
on a realized VEM space (or on polynomials), made dimensionless with the
element diameter so that dilating the element leaves it unchanged.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..geometry import polygon_geometry, triangulate_polygon
from ..polynomials import mass_matrix, monomial_basis, eval_basis
from ..realization import FeFunction, lagrange_space, qk_project, realize_vem_basis
from ..vemcore import dof_layout, projector_pack, stabilization
from .eig import generalized_eig_sym
from .shapes import shape_vertices

QUANTITIES = (
    "inverse",
    "norm_equiv",
    "norm_equiv_W",
    "stab_pi_nabla",
    "stab_pi_zero",
    "poincare",
    "poly_inverse",
    "poly_norm_equiv",
    "qk_stability",
    "pi_stability",
)
TWO_SIDED = ("norm_equiv", "norm_equiv_W", "stab_pi_nabla", "stab_pi_zero", "poly_norm_equiv")


@dataclass(frozen=True)
class ConstantEstimate:
    """Extreme eigenvalues and the derived constant.

    For two-sided quantities ``c_lower``/``c_upper`` are the equivalence
    constants and ``constant`` is their ratio; for one-sided ones
    ``constant`` is the upper bound and ``c_lower`` is None.
    """

    quantity: str
    element: str
    k: int
    l: int
    r: int
    lambda_min: float
    lambda_max: float
    constant: float
    c_lower: float | None = None
    c_upper: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def complement_basis(V: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement of range(V)."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.ndim == 2 and V.shape[0] == 1 and V.shape[1] > 1:
        V = V.T
    n = V.shape[0]
    Q, R = np.linalg.qr(V, mode="complete")
    diag = np.abs(np.diag(R)) if R.size else np.zeros(0)
    rank = int(np.sum(diag > 1e-12 * max(diag.max(initial=0.0), 1.0)))
    return Q[:, rank:n]


def _eig_pair(A, B, Z=None):
    if Z is not None:
        A, B = Z.T @ A @ Z, Z.T @ B @ Z
    if len(A) == 0:
        return 0.0, 0.0
    lam = generalized_eig_sym(A, B)
    return float(lam[0]), float(lam[-1])


def _resolve_element(element, aspect, scale):
    if isinstance(element, str):
        verts, name = shape_vertices(element, aspect), element
        if element == "thin":
            name = f"thin(aspect={aspect:g})"
    else:
        verts, name = np.asarray(element, dtype=float), "cell"
    return verts * scale, name


def constant_estimate(
    element,
    k: int,
    l: int | None = None,
    r: int = 2,
    quantity: str = "inverse",
    aspect: float = 4.0,
    scale: float = 1.0,
) -> ConstantEstimate:
    """Estimate one constant on a built-in shape or a vertex array.

    Parameters
    ----------
    element : str or array_like
        Built-in shape name or (n, 2) counter-clockwise vertices.
    k, l : int
        Degree and cell-moment degree (default k - 2). W-variant quantities
        always use l = k - 2.
    r : int
        Refinements of the virtual triangulation used for the realization.
    quantity : str
        One of ``QUANTITIES``.
    aspect : float
        Aspect ratio for the ``thin`` shape.
    scale : float
        Dilation applied to the element (for invariance checks).
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {', '.join(QUANTITIES)}")
    verts, name = _resolve_element(element, aspect, scale)
    if l is None or quantity in ("norm_equiv_W", "stab_pi_zero"):
        l = k - 2
    geom = polygon_geometry(verts)
    tri = triangulate_polygon(verts)
    h = geom.h

    if quantity == "poly_norm_equiv":
        H = mass_matrix(monomial_basis(k, geom), tri, 2 * k)
        lam = _eig_pair(H / h**2, np.eye(len(H)))
        lo, hi = np.sqrt(lam[0]), np.sqrt(lam[1])
        return _estimate(quantity, name, k, l, r, lam, hi / lo, lo, hi)

    if quantity == "poly_inverse":
        # ||g||_{-1} from a discrete H^1_0 solve with quartic elements
        fine = lagrange_space(tri, 4, r)
        I = fine.interior
        Mp = fine.poly_moments[I][:, : monomial_basis(k, geom).dim]
        G = Mp.T @ np.linalg.solve(fine.A_dense[np.ix_(I, I)], Mp)
        H = mass_matrix(monomial_basis(k, geom), tri, 2 * k)
        lam = _eig_pair(h**2 * H, G)
        return _estimate(quantity, name, k, l, r, lam, np.sqrt(lam[1]))

    space = lagrange_space(tri, k, r)
    variant = "W" if quantity in ("norm_equiv_W", "stab_pi_zero") else "V"
    pack = projector_pack(geom, tri, dof_layout(geom, k, l))
    real = realize_vem_basis(space, geom, k, l, variant, pack=pack)
    A, M = real.A_fe, real.M_fe
    one = pack.D[:, 0]  # d.o.f. of the constant function

    if quantity == "inverse":
        Z = complement_basis(M @ one)
        lam = _eig_pair(h**2 * A, M, Z)
        return _estimate(quantity, name, k, l, r, lam, np.sqrt(lam[1]))
    if quantity in ("norm_equiv", "norm_equiv_W"):
        lam = _eig_pair(M / h**2, np.eye(len(M)))
        lo, hi = np.sqrt(lam[0]), np.sqrt(lam[1])
        return _estimate(quantity, name, k, l, r, lam, hi / lo, lo, hi)
    if quantity in ("stab_pi_nabla", "stab_pi_zero"):
        P = pack.pi_star
        form = P.T @ pack.G_hat @ P
        form = form + stabilization(pack, "dof_full" if quantity == "stab_pi_nabla" else "dof_boundary")
        lam = _eig_pair(form, A, complement_basis(one))
        return _estimate(quantity, name, k, l, r, lam, lam[1] / lam[0], lam[0], lam[1])

    Np = eval_basis(pack.basis, space.nodes)
    if quantity == "poincare":
        E = real.Phi - Np @ pack.pi_star
        Mv = E.T @ (space.mass @ E)
        Av = E.T @ (space.stiffness @ E)
        # empty complement (the space is P_k itself) gives the trivial constant 0
        lam = _eig_pair(Mv, h**2 * Av, complement_basis(pack.D))
        return _estimate(quantity, name, k, l, r, lam, np.sqrt(lam[1]))
    if quantity == "pi_stability":
        # the M-orthogonal complement of ker Π carries the same maximum
        Z = complement_basis(M @ complement_basis(pack.pi_star.T))
        lam = _eig_pair(pack.pi_star.T @ pack.H @ pack.pi_star, M, Z)
        return _estimate(quantity, name, k, l, r, lam, np.sqrt(lam[1]))
    # qk_stability: project onto the Lagrange space of the unrefined triangulation
    coarse = lagrange_space(tri, k, 0)
    Q = np.column_stack(
        [qk_project(space, FeFunction(space, real.Phi[:, j]), coarse).values for j in range(real.N)]
    )
    lam = _eig_pair(Q.T @ (coarse.mass @ Q), M)
    return _estimate(quantity, name, k, l, r, lam, np.sqrt(lam[1]))


def _estimate(quantity, name, k, l, r, lam, constant, lo=None, hi=None) -> ConstantEstimate:
    return ConstantEstimate(
        quantity=quantity,
        element=name,
        k=int(k),
        l=int(l),
        r=int(r),
        lambda_min=float(lam[0]),
        lambda_max=float(lam[1]),
        constant=float(constant),
        c_lower=None if lo is None else float(lo),
        c_upper=None if hi is None else float(hi),
    )
