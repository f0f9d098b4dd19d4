"""Degrees of freedom, projectors and element matrices of conforming VEM.

Everything here is computed from degrees of freedom alone; no virtual
function is ever evaluated inside the element.

Local d.o.f. ordering: vertex values (counter-clockwise from the first
vertex), then for every edge i (vertex i -> vertex i+1) its k-1 normalized
moments against ((t - t_c)/|e|)**j, then the normalized cell moments
against the scaled monomials of degree <= l in graded order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import IllConditioned, UnsupportedLayout
from .geometry import PolygonGeometry, VirtualTriangulation
from .polynomials import (
    EdgeBasis,
    MonomialBasis,
    edge_gauss_points,
    eval_basis,
    gauss_legendre,
    laplacian_coefficients,
    mass_matrix,
    monomial_basis,
    polygon_quadrature,
    poly_dim,
)

SUPPORTED_DEGREES = (1, 2, 3, 4)
STABILIZATIONS = ("dof_full", "dof_boundary")


@dataclass(frozen=True)
class DofLayout:
    k: int
    l: int
    n_vertices: int

    @property
    def n_edge_moments(self) -> int:
        return self.k - 1

    @property
    def n_cell(self) -> int:
        return poly_dim(self.l)

    @property
    def n_boundary(self) -> int:
        return self.n_vertices * self.k

    @property
    def N(self) -> int:
        return self.n_boundary + self.n_cell

    def edge_dofs(self, i: int) -> np.ndarray:
        """Local indices of edge i: both endpoint values, then its moments."""
        nv, m = self.n_vertices, self.n_edge_moments
        start = nv + i * m
        return np.r_[i, (i + 1) % nv, start : start + m]

    def edge_moment_dofs(self, i: int) -> np.ndarray:
        start = self.n_vertices + i * self.n_edge_moments
        return np.arange(start, start + self.n_edge_moments)

    @property
    def cell_dofs(self) -> np.ndarray:
        return np.arange(self.n_boundary, self.N)

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=bool)
        mask[: self.n_boundary] = True
        return mask


def dof_layout(geom: PolygonGeometry, k: int, l: int) -> DofLayout:
    return DofLayout(k=int(k), l=int(l), n_vertices=geom.n_vertices)


@lru_cache(maxsize=None)
def edge_trace_inverse(k: int) -> np.ndarray:
    """Map from edge d.o.f. (value at start, value at end, k-1 moments) to
    the coefficients of the degree-k trace in the 1D scaled monomials."""
    V = np.zeros((k + 1, k + 1))
    j = np.arange(k + 1)
    V[0] = (-0.5) ** j
    V[1] = 0.5**j
    for i in range(k - 1):
        p = i + j
        V[2 + i] = np.where(p % 2 == 0, 2.0 * 0.5 ** (p + 1) / (p + 1), 0.0)
    Vinv = np.linalg.inv(V)
    Vinv.setflags(write=False)
    return Vinv


def edge_trace_operator(k: int, s) -> np.ndarray:
    """Matrix (len(s), k+1) giving trace values at edge parameters ``s``
    from the edge d.o.f. block."""
    return EdgeBasis(k).values(s) @ edge_trace_inverse(k)


def evaluate_dofs(u, geom: PolygonGeometry, tri: VirtualTriangulation, layout: DofLayout, degree: int | None = None) -> np.ndarray:
    """D.o.f. vector of ``u`` (callable on (n, 2) points).

    If ``u`` returns an (n, m) array the result is (N, m), one column per
    component.
    """
    k, N = layout.k, layout.N
    verts = geom.vertices
    uv = np.asarray(u(verts), dtype=float)
    out = np.zeros((N,) + uv.shape[1:])
    out[: layout.n_vertices] = uv
    if k >= 2:
        s, w = gauss_legendre(edge_gauss_points(k))
        mu = EdgeBasis(k - 2).values(s)
        for i in range(layout.n_vertices):
            a, b = geom.edge(i)
            x = a + s[:, None] * (b - a)
            vals = np.asarray(u(x), dtype=float)
            out[layout.edge_moment_dofs(i)] = np.tensordot(mu * w[:, None], vals, axes=(0, 0))
    if layout.n_cell:
        basis = monomial_basis(layout.l, geom)
        d = degree or min(2 * k + 2, 14)
        x, w = polygon_quadrature(tri, d)
        vals = np.asarray(u(x), dtype=float)
        M = eval_basis(basis, x) * w[:, None]
        out[layout.cell_dofs] = np.tensordot(M, vals, axes=(0, 0)) / geom.area
    return out


@dataclass(frozen=True, eq=False)
class ProjectorPack:
    """Projector matrices in d.o.f. coordinates.

    ``D`` holds the d.o.f. of every monomial (columns), ``B`` the
    d.o.f.-computable right-hand sides with the constant row replaced by
    the mean-value constraint, ``pi_star`` the monomial coefficients of
    the H1 projection and ``pi_nabla`` its d.o.f.
    """

    layout: DofLayout
    geom: PolygonGeometry
    tri: VirtualTriangulation
    basis: MonomialBasis
    D: np.ndarray
    B: np.ndarray
    G: np.ndarray
    G_hat: np.ndarray
    pi_star: np.ndarray
    pi_nabla: np.ndarray
    constraint: str

    @cached_property
    def H(self) -> np.ndarray:
        """Mass matrix of the degree-k scaled monomials."""
        return mass_matrix(self.basis, self.tri, 2 * self.layout.k)

    @cached_property
    def pi_zero_star(self) -> np.ndarray:
        return pi_zero(self)

    @property
    def pi_zero_dof(self) -> np.ndarray:
        return self.D @ self.pi_zero_star


def projector_pack(geom: PolygonGeometry, tri: VirtualTriangulation, layout: DofLayout) -> ProjectorPack:
    """Build D, B, G and the H1 projection Π∇ for one element.

    Raises
    ------
    UnsupportedLayout
        If k is outside 1..4 or l < k - 2.
    IllConditioned
        If cond(G) exceeds 1e12.
    """
    k, l = layout.k, layout.l
    if k not in SUPPORTED_DEGREES:
        raise UnsupportedLayout(f"degree k={k} not supported (1..4)")
    if l < k - 2 or l < -1:
        raise UnsupportedLayout(f"l={l} < k-2={k - 2}: Π∇ is not computable from d.o.f.")
    basis = monomial_basis(k, geom)
    n_p, N = basis.dim, layout.N
    D = evaluate_dofs(lambda x: eval_basis(basis, x), geom, tri, layout, degree=2 * k)

    B = np.zeros((n_p, N))
    h, area = geom.h, geom.area
    if k >= 2:
        lap = laplacian_coefficients(k)  # (dim P_{k-2}, n_p)
        cells = layout.cell_dofs[: lap.shape[0]]
        B[:, cells] -= lap.T * (area / h**2)

    s, w = gauss_legendre(edge_gauss_points(k))
    T = edge_trace_operator(k, s)  # (ng, k+1)
    boundary_mean = np.zeros(N)
    for i in range(layout.n_vertices):
        a, b = geom.edge(i)
        x = a + s[:, None] * (b - a)
        dn = eval_basis(basis, x, "gradient") @ geom.normals[i]  # (ng, n_p)
        idx = layout.edge_dofs(i)
        length = geom.edge_lengths[i]
        B[:, idx] += length * (dn * w[:, None]).T @ T
        boundary_mean[idx] += length * (w @ T)

    if l >= 0:
        constraint = "cell_mean"
        B[0] = 0.0
        B[0, layout.cell_dofs[0]] = 1.0
    else:
        constraint = "boundary_mean"
        B[0] = boundary_mean / geom.perimeter

    G = B @ D
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e12:
        raise IllConditioned(f"cond(G) = {cond:.3e}")
    pi_star = _equilibrated_solve(G, B)
    G_hat = G.copy()
    G_hat[0] = 0.0
    G_hat = 0.5 * (G_hat + G_hat.T)
    for arr in (D, B, G, G_hat, pi_star):
        arr.setflags(write=False)
    pi_nabla = D @ pi_star
    pi_nabla.setflags(write=False)
    return ProjectorPack(
        layout=layout,
        geom=geom,
        tri=tri,
        basis=basis,
        D=D,
        B=B,
        G=G,
        G_hat=G_hat,
        pi_star=pi_star,
        pi_nabla=pi_nabla,
        constraint=constraint,
    )


def _equilibrated_solve(A, rhs):
    # column scaling tames the spread in monomial magnitudes at high degree
    s = 1.0 / np.sqrt(np.abs(np.diag(A)).clip(min=np.finfo(float).tiny))
    s[np.abs(np.diag(A)) == 0] = 1.0
    return s[:, None] * np.linalg.solve(A * s[None, :] * s[:, None], s[:, None] * rhs)


def pi_zero(pack: ProjectorPack) -> np.ndarray:
    """Monomial coefficients of the L2 projection Π0 as a map on d.o.f.

    Moments against degree <= k-2 come straight from the cell d.o.f.; the
    remaining ones are taken from Π∇ v.
    """
    k = pack.layout.k
    H = pack.H
    n_low = poly_dim(k - 2)
    C = H @ pack.pi_star
    if n_low:
        C[:n_low] = 0.0
        C[np.arange(n_low), pack.layout.cell_dofs[:n_low]] = pack.geom.area
    out = _equilibrated_solve(H, C)
    out.setflags(write=False)
    return out


def stabilization(pack: ProjectorPack, variant: str = "dof_full") -> np.ndarray:
    """Stabilization matrix, no scaling factor.

    ``dof_full``: l2 product of the d.o.f. of (I - Π∇)v.
    ``dof_boundary``: l2 product of the boundary d.o.f. of (I - Π0)v.
    """
    N = pack.layout.N
    if variant == "dof_full":
        X = np.eye(N) - pack.pi_nabla
        S = X.T @ X
    elif variant == "dof_boundary":
        X = (np.eye(N) - pack.pi_zero_dof)[pack.layout.boundary_mask]
        S = X.T @ X
    else:
        raise ValueError(f"unknown stabilization {variant!r}")
    return 0.5 * (S + S.T)


@dataclass(frozen=True, eq=False)
class ElementMatrices:
    A: np.ndarray
    consistency: np.ndarray
    S: np.ndarray
    b: np.ndarray
    pack: ProjectorPack


def load_moments(f, pack: ProjectorPack, degree: int | None = None) -> np.ndarray:
    """(f, m_a)_K for the degree-k scaled monomials."""
    k = pack.layout.k
    x, w = polygon_quadrature(pack.tri, degree or min(2 * k + 2, 14))
    return (eval_basis(pack.basis, x) * w[:, None]).T @ np.asarray(f(x), dtype=float)


def element_matrices(
    geom: PolygonGeometry,
    tri: VirtualTriangulation,
    k: int,
    l: int,
    variant: str = "dof_full",
    f=None,
    load: str = "pi_nabla",
    pack: ProjectorPack | None = None,
) -> ElementMatrices:
    """Local stiffness a_h = a(Π∇·, Π∇·) + S and load (f, Π φ_i).

    ``load`` selects Π∇ (default) or Π0 in the load vector.
    """
    if pack is None:
        pack = projector_pack(geom, tri, dof_layout(geom, k, l))
    P = pack.pi_star
    consistency = P.T @ pack.G_hat @ P
    consistency = 0.5 * (consistency + consistency.T)
    S = stabilization(pack, variant)
    if f is None:
        b = np.zeros(pack.layout.N)
    else:
        F = load_moments(f, pack)
        if load == "pi_nabla":
            b = P.T @ F
        elif load == "pi_zero":
            b = pack.pi_zero_star.T @ F
        else:
            raise ValueError(f"unknown load projector {load!r}")
    return ElementMatrices(A=consistency + S, consistency=consistency, S=S, b=b, pack=pack)
