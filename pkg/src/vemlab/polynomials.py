"""Scaled monomials, quadrature on triangles/edges/polygons and L2 projection.

Monomials on a domain D are ((x - x_c) / h_D) ** s with exponents ordered by
total degree and, within one degree, by decreasing power of x:
(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import SingularMass, UnsupportedDegree
from .geometry import PolygonGeometry, VirtualTriangulation

MAX_QUADRATURE_DEGREE = 14


def poly_dim(l: int) -> int:
    return 0 if l < 0 else (l + 1) * (l + 2) // 2


@lru_cache(maxsize=None)
def exponents(l: int) -> np.ndarray:
    out = [(s1, d - s1) for d in range(l + 1) for s1 in range(d, -1, -1)]
    arr = np.array(out, dtype=np.int64).reshape(-1, 2)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    degree: int
    xc: np.ndarray
    h: float

    @property
    def exponents(self) -> np.ndarray:
        return exponents(self.degree)

    @property
    def dim(self) -> int:
        return poly_dim(self.degree)

    def index(self, s1: int, s2: int) -> int:
        d = s1 + s2
        return poly_dim(d - 1) + (d - s1)


def monomial_basis(l: int, geom: PolygonGeometry) -> MonomialBasis:
    """Scaled monomial basis of degree ``l`` on the polygon (empty if l < 0)."""
    return MonomialBasis(degree=max(int(l), -1), xc=np.asarray(geom.xc, float), h=float(geom.h))


def eval_basis(basis: MonomialBasis, points, order: str = "value") -> np.ndarray:
    """Evaluate every basis member at ``points``.

    Returns shape (npts, dim) for ``value`` and ``laplacian``, and
    (npts, dim, 2) for ``gradient``.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    z = (p - basis.xc) / basis.h
    e = basis.exponents
    npts = len(p)
    if basis.dim == 0:
        shape = (npts, 0, 2) if order == "gradient" else (npts, 0)
        return np.zeros(shape)
    maxd = basis.degree
    # powers[j][:, i] = z_j ** i
    px = z[:, 0:1] ** np.arange(maxd + 1)
    py = z[:, 1:2] ** np.arange(maxd + 1)
    s1, s2 = e[:, 0], e[:, 1]
    if order == "value":
        return px[:, s1] * py[:, s2]
    if order == "gradient":
        gx = np.where(s1 > 0, s1 * px[:, np.maximum(s1 - 1, 0)], 0.0) * py[:, s2]
        gy = px[:, s1] * np.where(s2 > 0, s2 * py[:, np.maximum(s2 - 1, 0)], 0.0)
        return np.stack([gx, gy], axis=-1) / basis.h
    if order == "laplacian":
        lx = np.where(s1 > 1, s1 * (s1 - 1) * px[:, np.maximum(s1 - 2, 0)], 0.0) * py[:, s2]
        ly = px[:, s1] * np.where(s2 > 1, s2 * (s2 - 1) * py[:, np.maximum(s2 - 2, 0)], 0.0)
        return (lx + ly) / basis.h**2
    raise ValueError(f"unknown evaluation order {order!r}")


def laplacian_coefficients(k: int) -> np.ndarray:
    """Matrix L (dim P_{k-2} x dim P_k) with Δ m_a = h^-2 * sum_b L[b, a] m_b."""
    L = np.zeros((poly_dim(k - 2), poly_dim(k)))
    for a, (s1, s2) in enumerate(exponents(k)):
        if s1 >= 2:
            L[_index(s1 - 2, s2), a] += s1 * (s1 - 1)
        if s2 >= 2:
            L[_index(s1, s2 - 2), a] += s2 * (s2 - 1)
    return L


def _index(s1: int, s2: int) -> int:
    d = s1 + s2
    return poly_dim(d - 1) + (d - s1)


# ---------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1).

    ``points`` are barycentric coordinates (npts, 3); weights sum to 1/2.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, 1:]


def _sym3(a, b):
    return [(a, b, b), (b, a, b), (b, b, a)]


# Symmetric rules with positive interior weights for low degrees; weights
# are normalized to the unit reference area and halved below.
_B4 = 0.44594849091596488632
_B4b = 0.09157621350977074346
_B5 = 0.47014206410511508977
_B5b = 0.10128650732345633880
_TABLE = {
    1: ([(1 / 3, 1 / 3, 1 / 3)], [1.0]),
    2: (_sym3(2 / 3, 1 / 6), [1 / 3] * 3),
    4: (
        _sym3(1 - 2 * _B4, _B4) + _sym3(1 - 2 * _B4b, _B4b),
        [0.22338158967801146570] * 3 + [0.10995174365532186764] * 3,
    ),
    5: (
        [(1 / 3, 1 / 3, 1 / 3)] + _sym3(1 - 2 * _B5, _B5) + _sym3(1 - 2 * _B5b, _B5b),
        [0.225] + [0.13239415278850618074] * 3 + [0.12593918054482715260] * 3,
    ),
}
_TABLE[3] = _TABLE[4]


def _collapsed_rule(d: int):
    n = (d + 2) // 2
    xg, wg = np.polynomial.legendre.leggauss(n)
    s, ws = (xg + 1) / 2, wg / 2
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    eta, weta = (xj + 1) / 2, wj / 4
    pts, wts = [], []
    for e, we in zip(eta, weta):
        for si, wsi in zip(s, ws):
            xi = (1 - e) * si
            pts.append((1 - xi - e, xi, e))
            wts.append(we * wsi)
    return np.array(pts), np.array(wts)


@lru_cache(maxsize=None)
def quadrature_rule(d: int) -> QuadratureRule:
    """Positive-weight triangle rule exact for total degree ``d``.

    Degrees 1-5 come from a small symmetric table; higher degrees use a
    collapsed Gauss-Jacobi product rule.
    """
    d = int(d)
    if d < 1 or d > MAX_QUADRATURE_DEGREE:
        raise UnsupportedDegree(f"triangle quadrature degree {d} not in 1..{MAX_QUADRATURE_DEGREE}")
    if d in _TABLE:
        pts, w = _TABLE[d]
        pts, w = np.array(pts, dtype=float), 0.5 * np.array(w, dtype=float)
    else:
        pts, w = _collapsed_rule(d)
    pts.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(points=pts, weights=w, degree=d)


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    s, ws = (x + 1) / 2, w / 2
    s.setflags(write=False)
    ws.setflags(write=False)
    return s, ws


def edge_gauss_points(k: int) -> int:
    """Gauss points per edge for degree-k element integrals."""
    return (2 * k + 4) // 2


def triangle_quadrature(points: np.ndarray, triangles: np.ndarray, d: int):
    """Physical quadrature points and weights over a list of triangles."""
    rule = quadrature_rule(d)
    P = points[triangles]  # (T, 3, 2)
    x = np.einsum("qi,tid->tqd", rule.points, P)
    J = np.abs(
        (P[:, 1, 0] - P[:, 0, 0]) * (P[:, 2, 1] - P[:, 0, 1])
        - (P[:, 1, 1] - P[:, 0, 1]) * (P[:, 2, 0] - P[:, 0, 0])
    )
    w = J[:, None] * rule.weights[None, :]
    return x.reshape(-1, 2), w.ravel()


def polygon_quadrature(tri: VirtualTriangulation, d: int):
    return triangle_quadrature(tri.points, tri.triangles, d)


def integrate_polygon(f, tri: VirtualTriangulation, d: int):
    """Integrate ``f`` (callable on an (n, 2) point array) over the polygon,
    exactly for polynomials of degree <= d."""
    x, w = polygon_quadrature(tri, d)
    vals = np.asarray(f(x), dtype=float)
    return np.tensordot(w, vals, axes=(0, 0))


def mass_matrix(basis: MonomialBasis, tri: VirtualTriangulation, d: int | None = None) -> np.ndarray:
    x, w = polygon_quadrature(tri, d or max(2 * basis.degree, 1))
    V = eval_basis(basis, x)
    return (V * w[:, None]).T @ V


def stiffness_matrix(basis: MonomialBasis, tri: VirtualTriangulation, d: int | None = None) -> np.ndarray:
    x, w = polygon_quadrature(tri, d or max(2 * basis.degree - 2, 1))
    G = eval_basis(basis, x, "gradient")
    return np.einsum("q,qad,qbd->ab", w, G, G)


def project_L2_poly(u, k: int, geom: PolygonGeometry, tri: VirtualTriangulation, degree: int | None = None) -> np.ndarray:
    """Coefficients in the scaled monomials of the L2 projection of ``u``
    onto polynomials of degree <= k over the polygon."""
    basis = monomial_basis(k, geom)
    d = degree or min(2 * k + 2, MAX_QUADRATURE_DEGREE)
    x, w = polygon_quadrature(tri, d)
    V = eval_basis(basis, x)
    M = (V * w[:, None]).T @ V
    if np.linalg.cond(M) > 1e14:
        raise SingularMass("monomial mass matrix is numerically singular")
    rhs = (V * w[:, None]).T @ np.asarray(u(x), dtype=float)
    return np.linalg.solve(M, rhs)


def eval_poly(coeffs, basis: MonomialBasis, points, order: str = "value") -> np.ndarray:
    B = eval_basis(basis, points, order)
    if order == "gradient":
        return np.einsum("qad,a->qd", B, coeffs)
    return B @ coeffs


@dataclass(frozen=True)
class EdgeBasis:
    """1D scaled monomials ((t - t_c) / |e|) ** j, j <= degree, on an edge
    parametrized by s = t / |e| in [0, 1]."""

    degree: int

    def values(self, s) -> np.ndarray:
        z = np.asarray(s, dtype=float)[:, None] - 0.5
        return z ** np.arange(self.degree + 1)
