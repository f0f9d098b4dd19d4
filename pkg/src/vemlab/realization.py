"""Realization of VEM spaces as constrained Lagrange spaces.

A virtual function is replaced by its computable twin: a continuous
piecewise-P_k function on the (optionally refined) virtual triangulation
whose discrete Laplacian is a polynomial and whose trace on every polygon
edge is a single P_k polynomial.  Columns of ``RealizedVemSpace.Phi`` are
the nodal values of the basis dual to the VEM degrees of freedom, so any
VEM function can be evaluated, integrated and differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack
from scipy.spatial import cKDTree

from .errors import SaddleSingular, UnsupportedLayout
from .geometry import PolygonGeometry, VirtualTriangulation
from .polynomials import (
    MAX_QUADRATURE_DEGREE,
    edge_gauss_points,
    eval_basis,
    exponents,
    gauss_legendre,
    monomial_basis,
    poly_dim,
    polygon_quadrature,
    project_L2_poly,
    quadrature_rule,
)
from .vemcore import (
    DofLayout,
    ProjectorPack,
    SUPPORTED_DEGREES,
    dof_layout,
    edge_trace_operator,
    evaluate_dofs,
    projector_pack,
)

VARIANTS = ("V", "W")
INTERPOLANTS = ("v_pi", "v_c", "v_I", "I_K", "I_K_W")


# ---------------------------------------------------------------------------
# Reference Lagrange element


@lru_cache(maxsize=None)
def lattice(k: int) -> np.ndarray:
    """Barycentric lattice multi-indices (n_loc, 3) summing to k.

    The three vertices come first, then the remaining nodes.
    """
    corners = [(k, 0, 0), (0, k, 0), (0, 0, k)]
    rest = [
        (k - a1 - a2, a1, a2)
        for a2 in range(k + 1)
        for a1 in range(k + 1 - a2)
        if (k - a1 - a2, a1, a2) not in corners
    ]
    arr = np.array(corners + rest, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def _ref_monomials(xy: np.ndarray, k: int, order: str = "value") -> np.ndarray:
    e = exponents(k)
    x, y = xy[:, 0:1], xy[:, 1:2]
    p, q = e[:, 0], e[:, 1]
    if order == "value":
        return x**p * y**q
    dx = np.where(p > 0, p * x ** np.maximum(p - 1, 0), 0.0) * y**q
    dy = x**p * np.where(q > 0, q * y ** np.maximum(q - 1, 0), 0.0)
    return np.stack([dx, dy], axis=-1)


@lru_cache(maxsize=None)
def _ref_coefficients(k: int) -> np.ndarray:
    nodes = lattice(k)[:, 1:] / k
    return np.linalg.inv(_ref_monomials(nodes, k))


def reference_basis(k: int, xy, order: str = "value") -> np.ndarray:
    """P_k Lagrange basis on the reference triangle at points ``xy``.

    Shapes: (npts, n_loc) for values, (npts, n_loc, 2) for gradients.
    """
    xy = np.atleast_2d(np.asarray(xy, dtype=float))
    C = _ref_coefficients(k)
    if order == "value":
        return _ref_monomials(xy, k) @ C
    return np.einsum("qmd,mn->qnd", _ref_monomials(xy, k, "gradient"), C)


@lru_cache(maxsize=None)
def _line_lagrange_coefficients(k: int) -> np.ndarray:
    nodes = np.arange(k + 1) / k
    return np.linalg.inv(nodes[:, None] ** np.arange(k + 1))


def line_lagrange(k: int, s) -> np.ndarray:
    """Equispaced 1D Lagrange basis of degree k on [0, 1] at ``s``."""
    s = np.asarray(s, dtype=float)
    return (s[:, None] ** np.arange(k + 1)) @ _line_lagrange_coefficients(k)


# ---------------------------------------------------------------------------
# Refinement


def _red_refine(points, triangles, bedges):
    """One uniform red refinement.

    ``bedges`` maps sorted boundary edges to their polygon edge id.
    Returns new points, triangles, parent index per child and edge map.
    """
    pts = [tuple(p) for p in points]
    mid: dict[tuple[int, int], int] = {}
    new_bedges: dict[tuple[int, int], int] = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in mid:
            mid[key] = len(pts)
            pa, pb = points[a], points[b]
            pts.append(tuple(0.5 * (pa + pb)))
            if key in bedges:
                e = bedges[key]
                m = mid[key]
                new_bedges[(min(a, m), max(a, m))] = e
                new_bedges[(min(b, m), max(b, m))] = e
        return mid[key]

    children, parent = [], []
    for t, (a, b, c) in enumerate(triangles):
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        children += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        parent += [t] * 4
    return np.array(pts), np.array(children, dtype=np.int64), np.array(parent, dtype=np.int64), new_bedges


# ---------------------------------------------------------------------------
# Lagrange space


@dataclass(frozen=True, eq=False)
class BoundarySegment:
    """One fine boundary side: parent polygon edge, parameter range on it and
    its k+1 nodes ordered by increasing parameter along the side."""

    edge: int
    s0: float
    s1: float
    nodes: np.ndarray


@dataclass(frozen=True, eq=False)
class FeSpace:
    """Continuous P_k Lagrange space on a virtual triangulation refined r times.

    Boundary nodes are not free: ``trace_map`` writes each of them as the
    value of its parent polygon edge's P_k trace, given the boundary block
    of the VEM d.o.f. (vertex values and edge moments).
    """

    k: int
    r: int
    tri: VirtualTriangulation
    geom: PolygonGeometry
    points: np.ndarray
    triangles: np.ndarray
    levels: tuple
    parents: tuple
    nodes: np.ndarray
    cells: np.ndarray
    interior: np.ndarray
    boundary: np.ndarray
    boundary_edge: np.ndarray
    boundary_param: np.ndarray
    vertex_nodes: np.ndarray
    segments: tuple
    trace_map: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def _jacobians(self):
        P = self.points[self.triangles]
        J = np.stack([P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]], axis=-1)  # (T, 2, 2), columns
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        invT = np.linalg.inv(J).transpose(0, 2, 1)
        return P[:, 0], J, det, invT

    def quadrature(self, d: int):
        """Reference basis tables and physical points/weights of degree ``d``.

        Returns (x (T, q, 2), w (T, q), phi (q, n_loc), grad (T, q, n_loc, 2)).
        """
        rule = quadrature_rule(min(max(d, 1), MAX_QUADRATURE_DEGREE))
        x0, J, det, invT = self._jacobians
        xy = rule.xy
        x = x0[:, None, :] + np.einsum("tij,qj->tqi", J, xy)
        w = np.abs(det)[:, None] * rule.weights[None, :]
        phi = reference_basis(self.k, xy)
        dphi = reference_basis(self.k, xy, "gradient")
        grad = np.einsum("tij,qnj->tqni", invT, dphi)
        return x, w, phi, grad

    def _assemble(self, local: np.ndarray) -> sp.csr_matrix:
        n_loc = self.cells.shape[1]
        rows = np.repeat(self.cells, n_loc, axis=1).ravel()
        cols = np.tile(self.cells, (1, n_loc)).ravel()
        M = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(self.n_nodes, self.n_nodes)).tocsr()
        M.sum_duplicates()
        return M

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        _, w, _, grad = self.quadrature(2 * self.k - 2)
        local = np.einsum("tq,tqad,tqbd->tab", w, grad, grad)
        return self._assemble(local)

    @cached_property
    def mass(self) -> sp.csr_matrix:
        _, w, phi, _ = self.quadrature(2 * self.k)
        local = np.einsum("tq,qa,qb->tab", w, phi, phi)
        return self._assemble(local)

    @cached_property
    def A_dense(self) -> np.ndarray:
        return self.stiffness.toarray()

    @cached_property
    def M_dense(self) -> np.ndarray:
        return self.mass.toarray()

    @cached_property
    def poly_moments(self) -> np.ndarray:
        """(φ_i, m_a)_K for every node i and scaled monomial m_a of degree <= k."""
        x, w, phi, _ = self.quadrature(2 * self.k)
        basis = monomial_basis(self.k, self.geom)
        m = eval_basis(basis, x.reshape(-1, 2)).reshape(x.shape[0], x.shape[1], -1)
        local = np.einsum("tq,qa,tqb->tab", w, phi, m)
        out = np.zeros((self.n_nodes, basis.dim))
        np.add.at(out, self.cells, local)
        return out

    def interpolate_nodal(self, u) -> np.ndarray:
        return np.asarray(u(self.nodes), dtype=float)


def lagrange_space(tri: VirtualTriangulation, k: int, r: int = 0) -> FeSpace:
    """Build the P_k Lagrange space on ``tri`` refined ``r`` times.

    Parameters
    ----------
    tri : VirtualTriangulation
        Virtual triangulation of the polygon; its first ``n_polygon`` points
        are the polygon vertices.
    k : int
        Polynomial degree, 1..4.
    r : int
        Number of uniform red refinements, 0..3.
    """
    if k not in SUPPORTED_DEGREES:
        raise UnsupportedLayout(f"degree k={k} not supported (1..4)")
    if r not in (0, 1, 2, 3):
        raise UnsupportedLayout(f"refinement r={r} not in 0..3")
    geom = tri.geometry
    nv = tri.n_polygon
    points = np.asarray(tri.points, dtype=float)
    triangles = np.asarray(tri.triangles, dtype=np.int64)
    bedges = {(min(i, (i + 1) % nv), max(i, (i + 1) % nv)): i for i in range(nv)}
    levels, parents = [triangles], []
    for _ in range(r):
        points, triangles, parent, bedges = _red_refine(points, triangles, bedges)
        levels.append(triangles)
        parents.append(parent)

    # global node numbering from topological keys
    lat = lattice(k)
    key_index: dict[tuple, int] = {}
    coords: list[np.ndarray] = []
    cells = np.empty((len(triangles), len(lat)), dtype=np.int64)
    edge_nodes: dict[tuple[int, int], dict[int, int]] = {}
    for t, verts in enumerate(triangles):
        P = points[verts]
        for a, lam in enumerate(lat):
            nz = np.flatnonzero(lam)
            if len(nz) == 1:
                key = ("v", int(verts[nz[0]]))
            elif len(nz) == 2:
                i, j = int(verts[nz[0]]), int(verts[nz[1]])
                ai = int(lam[nz[0]]) if i < j else int(lam[nz[1]])
                key = ("e", min(i, j), max(i, j), ai)
            else:
                key = ("t", t) + tuple(int(v) for v in lam)
            idx = key_index.get(key)
            if idx is None:
                idx = len(coords)
                key_index[key] = idx
                coords.append(lam @ P / k)
                if key[0] == "e":
                    edge_nodes.setdefault(key[1:3], {})[key[3]] = idx
            cells[t, a] = idx
    nodes = np.array(coords)

    # boundary nodes and their parent polygon edge
    vertex_nodes = np.array([key_index[("v", i)] for i in range(nv)], dtype=np.int64)
    n_nodes = len(nodes)
    b_edge = np.full(n_nodes, -2, dtype=np.int64)  # -2 interior, -1 polygon vertex
    b_edge[vertex_nodes] = -1
    segments = []

    def param(i, x):
        a, b = geom.edge(i)
        d = b - a
        return float((x - a) @ d / (d @ d))

    for (lo, hi), e in sorted(bedges.items()):
        ordered = [key_index[("v", lo)]]
        ordered += [edge_nodes[(lo, hi)][k - j] for j in range(1, k)] if k > 1 else []
        ordered.append(key_index[("v", hi)])
        ordered = np.array(ordered, dtype=np.int64)
        for n in ordered:
            if b_edge[n] != -1:
                b_edge[n] = e
        s0, s1 = param(e, nodes[ordered[0]]), param(e, nodes[ordered[-1]])
        if s1 < s0:
            ordered, s0, s1 = ordered[::-1].copy(), s1, s0
        segments.append(BoundarySegment(edge=e, s0=s0, s1=s1, nodes=ordered))
    segments.sort(key=lambda g: (g.edge, g.s0))

    boundary = np.flatnonzero(b_edge != -2)
    interior = np.flatnonzero(b_edge == -2)
    b_param = np.full(n_nodes, np.nan)
    layout = DofLayout(k=k, l=-1, n_vertices=nv)
    trace_map = np.zeros((len(boundary), layout.n_boundary))
    for row, n in enumerate(boundary):
        e = b_edge[n]
        if e == -1:
            trace_map[row, int(np.flatnonzero(vertex_nodes == n)[0])] = 1.0
            continue
        s = param(e, nodes[n])
        b_param[n] = s
        trace_map[row, layout.edge_dofs(e)] = edge_trace_operator(k, [s])[0]

    for arr in (nodes, cells, interior, boundary, b_edge, b_param, vertex_nodes, trace_map, points):
        arr.setflags(write=False)
    return FeSpace(
        k=k,
        r=r,
        tri=tri,
        geom=geom,
        points=points,
        triangles=triangles,
        levels=tuple(levels),
        parents=tuple(parents),
        nodes=nodes,
        cells=cells,
        interior=interior,
        boundary=boundary,
        boundary_edge=b_edge,
        boundary_param=b_param,
        vertex_nodes=vertex_nodes,
        segments=tuple(segments),
        trace_map=trace_map,
    )


@dataclass(frozen=True, eq=False)
class FeFunction:
    """Nodal values of a function of ``space``."""

    space: FeSpace
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.space.n_nodes:
            raise ValueError("nodal vector length does not match the space")

    def l2_norm(self) -> float:
        v = self.values
        return float(np.sqrt(max(v @ (self.space.mass @ v), 0.0)))

    def h1_seminorm(self) -> float:
        v = self.values
        return float(np.sqrt(max(v @ (self.space.stiffness @ v), 0.0)))


def fe_dofs(space: FeSpace, values: np.ndarray, layout: DofLayout) -> np.ndarray:
    """VEM d.o.f. of FE nodal vector(s), computed directly by quadrature.

    ``values`` may be (n_nodes,) or (n_nodes, m).
    """
    V = np.asarray(values, dtype=float)
    k = layout.k
    out = np.zeros((layout.N,) + V.shape[1:])
    out[: layout.n_vertices] = V[space.vertex_nodes]
    if k >= 2:
        sg, wg = gauss_legendre(edge_gauss_points(k))
        L = line_lagrange(k, sg)  # (ng, k+1)
        for seg in space.segments:
            s = seg.s0 + sg * (seg.s1 - seg.s0)
            mu = (s[:, None] - 0.5) ** np.arange(k - 1)
            vals = L @ V[seg.nodes]
            out[layout.edge_moment_dofs(seg.edge)] += (seg.s1 - seg.s0) * np.tensordot(
                mu * wg[:, None], vals, axes=(0, 0)
            )
    n_cell = layout.n_cell
    if n_cell:
        out[layout.cell_dofs] = np.tensordot(space.poly_moments[:, :n_cell], V, axes=(0, 0)) / space.geom.area
    return out


# ---------------------------------------------------------------------------
# Realized VEM space


@dataclass(frozen=True, eq=False)
class RealizedVemSpace:
    """Basis of a VEM space as nodal vectors of ``space``.

    ``Phi[:, j]`` is the function whose d.o.f. vector is e_j.
    """

    space: FeSpace
    layout: DofLayout
    variant: str
    Phi: np.ndarray
    pack: ProjectorPack
    pivot_min: float
    chi_error: float

    @property
    def N(self) -> int:
        return self.layout.N

    @cached_property
    def A_fe(self) -> np.ndarray:
        """FE stiffness restricted to the realized basis (N x N)."""
        return self.Phi.T @ (self.space.stiffness @ self.Phi)

    @cached_property
    def M_fe(self) -> np.ndarray:
        return self.Phi.T @ (self.space.mass @ self.Phi)

    def function(self, dofs) -> FeFunction:
        return FeFunction(self.space, self.Phi @ np.asarray(dofs, dtype=float))


def _ldlt_solve(K: np.ndarray, rhs: np.ndarray):
    """Solve a symmetric indefinite system by Bunch-Kaufman LDL^T.

    Returns the solution and the smallest |eigenvalue| over the pivot
    blocks of D.
    """
    ldu, ipiv, info = lapack.dsytrf(K, lower=1)
    if info < 0:
        raise SaddleSingular(f"dsytrf argument error {info}")
    n = len(K)
    pivots = []
    i = 0
    while i < n:
        if ipiv[i] > 0:
            pivots.append(abs(ldu[i, i]))
            i += 1
        else:
            blk = np.array([[ldu[i, i], ldu[i + 1, i]], [ldu[i + 1, i], ldu[i + 1, i + 1]]])
            pivots.extend(np.abs(np.linalg.eigvalsh(blk)))
            i += 2
    pivot_min = float(min(pivots)) if pivots else np.inf
    scale = float(np.abs(K).max()) if n else 1.0
    if info > 0 or pivot_min <= 1e-12 * scale:
        raise SaddleSingular(f"saddle system singular (min pivot {pivot_min:.3e}, scale {scale:.3e})")
    x, info = lapack.dsytrs(ldu, ipiv, rhs, lower=1)
    if info != 0:
        raise SaddleSingular(f"dsytrs failed with info={info}")
    for _ in range(2):  # iterative refinement
        dx, _ = lapack.dsytrs(ldu, ipiv, rhs - K @ x, lower=1)
        x = x + dx
    return x, pivot_min


def realize_vem_basis(
    space: FeSpace,
    geom: PolygonGeometry | None,
    k: int,
    l: int,
    variant: str = "V",
    pack: ProjectorPack | None = None,
    check_tol: float = 1e-9,
) -> RealizedVemSpace:
    """Realize the d.o.f.-dual basis of V_{k,l} (``variant="V"``) or W_k.

    For each unit d.o.f. vector the interior nodal values and a polynomial
    multiplier solve a symmetric saddle system: the discrete Laplacian is a
    polynomial and the cell moments (plus, for W_k, the higher moments
    given by Π∇) take their prescribed values.

    Raises
    ------
    SaddleSingular
        If the saddle matrix is numerically singular or the realized basis
        fails the d.o.f. check χ(Phi) = I within ``check_tol``.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; use 'V' or 'W'")
    if k != space.k:
        raise UnsupportedLayout(f"space has degree {space.k}, requested k={k}")
    if variant == "W" and l != k - 2:
        raise UnsupportedLayout("W_k uses the V_k layout l = k-2")
    geom = geom or space.geom
    layout = dof_layout(geom, k, l)
    if layout.l < max(k - 2, -1):
        raise UnsupportedLayout(f"l={l} < k-2")
    if pack is None:
        pack = projector_pack(geom, space.tri, layout)
    N, area = layout.N, geom.area
    I, Bn = space.interior, space.boundary
    n_low = poly_dim(k - 2)
    n_mult = poly_dim(k) if variant == "W" else layout.n_cell

    # boundary nodal values of every basis function
    Vb = space.trace_map @ np.eye(N)[: layout.n_boundary]  # (nb, N)

    target = np.zeros((n_mult, N))
    n_direct = n_low if variant == "W" else layout.n_cell
    target[np.arange(n_direct), layout.cell_dofs[:n_direct]] = area
    if variant == "W":
        target[n_low:] = (pack.H @ pack.pi_star)[n_low:n_mult]

    A = space.A_dense
    Mp = space.poly_moments[:, :n_mult]
    C = Mp[I]
    norms = np.linalg.norm(C, axis=0)
    sigma = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 1.0)
    Cs = C * sigma
    top = -A[np.ix_(I, Bn)] @ Vb
    bottom = sigma[:, None] * (target - Mp[Bn].T @ Vb)
    n_i = len(I)
    Phi = np.zeros((space.n_nodes, N))
    Phi[Bn] = Vb
    pivot_min = np.inf
    if n_i + n_mult:
        if n_mult > n_i:
            raise SaddleSingular(f"{n_mult} constraints but only {n_i} interior nodes")
        K = np.zeros((n_i + n_mult, n_i + n_mult))
        K[:n_i, :n_i] = A[np.ix_(I, I)]
        K[:n_i, n_i:] = Cs
        K[n_i:, :n_i] = Cs.T
        sol, pivot_min = _ldlt_solve(K, np.vstack([top, bottom]))
        Phi[I] = sol[:n_i]
    err = float(np.abs(fe_dofs(space, Phi, layout) - np.eye(N)).max())
    if not err <= check_tol:
        raise SaddleSingular(f"realized basis fails the d.o.f. check: max |χ(Phi) - I| = {err:.3e}")
    Phi.setflags(write=False)
    return RealizedVemSpace(
        space=space, layout=layout, variant=variant, Phi=Phi, pack=pack, pivot_min=pivot_min, chi_error=err
    )


# ---------------------------------------------------------------------------
# Operators on realized functions


def _prolongation(fine: FeSpace, coarse: FeSpace) -> np.ndarray:
    """Matrix evaluating coarse-space functions at the fine nodes."""
    level = coarse.r
    anc = np.arange(len(fine.triangles))
    for p in reversed(fine.parents[level:]):
        anc = p[anc]
    P = np.zeros((fine.n_nodes, coarse.n_nodes))
    done = np.zeros(fine.n_nodes, dtype=bool)
    cx0, cJ, _, _ = coarse._jacobians
    cJinv = np.linalg.inv(cJ)
    for t, row in enumerate(fine.cells):
        c = anc[t]
        todo = row[~done[row]]
        if not len(todo):
            continue
        xy = (fine.nodes[todo] - cx0[c]) @ cJinv[c].T
        P[np.ix_(todo, coarse.cells[c])] = reference_basis(coarse.k, xy)
        done[todo] = True
    return P


def qk_project(space: FeSpace, v: FeFunction, target: FeSpace | None = None) -> FeFunction:
    """Keep the boundary values and L2-project the interior.

    With ``target`` given (same triangulation and degree, coarser
    refinement) the result lives in ``target``: its boundary nodes copy the
    values of ``v`` at the coinciding fine nodes, and its interior values
    solve (Q v, φ) = (v, φ) for every interior ``target`` basis function.
    """
    vals = np.asarray(v.values, dtype=float)
    if target is None or target is space:
        M = space.M_dense
        I, Bn = space.interior, space.boundary
        out = vals.copy()
        if len(I):
            rhs = M[I] @ vals - M[np.ix_(I, Bn)] @ vals[Bn]
            out[I] = np.linalg.solve(M[np.ix_(I, I)], rhs)
        return FeFunction(space, out)
    if target.k != space.k or target.r > space.r or target.tri is not space.tri:
        raise ValueError("target must be a coarser space on the same triangulation")
    P = _prolongation(space, target)
    tree = cKDTree(space.nodes)
    dist, match = tree.query(target.nodes)
    if dist.max() > 1e-9 * space.geom.h:
        raise ValueError("coarse nodes are not nodes of the fine space")
    out = np.zeros(target.n_nodes)
    Bc, Ic = target.boundary, target.interior
    out[Bc] = vals[match[Bc]]
    if len(Ic):
        M = space.M_dense
        Pi, Pb = P[:, Ic], P[:, Bc]
        lhs = Pi.T @ M @ Pi
        rhs = Pi.T @ (M @ (vals - Pb @ out[Bc]))
        out[Ic] = np.linalg.solve(lhs, rhs)
    return FeFunction(target, out)


def harmonic_split(space: FeSpace, v: FeFunction) -> tuple[FeFunction, FeFunction]:
    """Split v = v1 + v2 with v1 discrete-harmonic and v2 zero on the boundary."""
    vals = np.asarray(v.values, dtype=float)
    A = space.A_dense
    I = space.interior
    v2 = np.zeros_like(vals)
    if len(I):
        v2[I] = np.linalg.solve(A[np.ix_(I, I)], A[I] @ vals)
    return FeFunction(space, vals - v2), FeFunction(space, v2)


def _edge_interpolant_values(space: FeSpace, u) -> np.ndarray:
    """Nodal values on the boundary of the edgewise P_k interpolant of u."""
    k, geom = space.k, space.geom
    out = np.zeros(space.n_nodes)
    out[space.vertex_nodes] = np.asarray(u(geom.vertices), dtype=float)
    t = np.arange(k + 1) / k
    for e in range(geom.n_vertices):
        a, b = geom.edge(e)
        vals = np.asarray(u(a + t[:, None] * (b - a)), dtype=float)
        mask = space.boundary_edge == e
        s = space.boundary_param[mask]
        out[mask] = line_lagrange(k, s) @ vals
    return out


def interpolate(
    u,
    geom: PolygonGeometry,
    tri: VirtualTriangulation,
    k: int,
    which: str,
    r: int = 2,
    space: FeSpace | None = None,
):
    """Interpolant of ``u`` of the requested kind.

    ``v_pi`` returns monomial coefficients of the L2 projection onto P_k;
    every other kind returns an ``FeFunction``:

    - ``v_c``: nodal interpolant, with each polygon edge carrying the P_k
      interpolant of u through k+1 equispaced points;
    - ``v_I``: trace of ``v_c`` and discrete Laplacian equal to that of v_pi;
    - ``I_K`` / ``I_K_W``: realized V_k / W_k functions with d.o.f. χ(u).
    """
    if which not in INTERPOLANTS:
        raise ValueError(f"unknown interpolant {which!r}")
    if which == "v_pi":
        return project_L2_poly(u, k, geom, tri)
    if space is None:
        space = lagrange_space(tri, k, r)
    if which in ("I_K", "I_K_W"):
        variant = "V" if which == "I_K" else "W"
        real = realize_vem_basis(space, geom, k, k - 2, variant)
        chi = evaluate_dofs(u, geom, tri, real.layout)
        return real.function(chi)
    vc = np.asarray(u(space.nodes), dtype=float).copy()
    Bn = space.boundary
    vc[Bn] = _edge_interpolant_values(space, u)[Bn]
    if which == "v_c":
        return FeFunction(space, vc)
    coeffs = project_L2_poly(u, k, geom, tri)
    vp = eval_basis(monomial_basis(k, geom), space.nodes) @ coeffs
    A = space.A_dense
    I = space.interior
    out = vc.copy()
    if len(I):
        rhs = A[I] @ vp - A[np.ix_(I, Bn)] @ vc[Bn]
        out[I] = np.linalg.solve(A[np.ix_(I, I)], rhs)
    return FeFunction(space, out)


def fe_errors(v: FeFunction, u, grad_u=None, degree: int | None = None) -> tuple[float, float]:
    """L2 error and H1 seminorm error (nan without ``grad_u``) of v against u."""
    space = v.space
    d = degree or min(2 * space.k + 4, MAX_QUADRATURE_DEGREE)
    x, w, phi, grad = space.quadrature(d)
    loc = v.values[space.cells]  # (T, n_loc)
    vh = loc @ phi.T  # (T, q)
    X = x.reshape(-1, 2)
    ue = np.asarray(u(X), dtype=float).reshape(vh.shape)
    l2 = float(np.sqrt(np.sum(w * (vh - ue) ** 2)))
    if grad_u is None:
        return l2, float("nan")
    gh = np.einsum("tn,tqnd->tqd", loc, grad)
    ge = np.asarray(grad_u(X), dtype=float).reshape(gh.shape)
    h1 = float(np.sqrt(np.sum(w[..., None] * (gh - ge) ** 2)))
    return l2, h1


def poly_errors(coeffs, geom: PolygonGeometry, tri: VirtualTriangulation, u, grad_u=None, degree: int | None = None):
    """L2 and H1-seminorm errors of a polynomial in scaled monomials."""
    coeffs = np.asarray(coeffs, dtype=float)
    k = int(round((np.sqrt(8 * len(coeffs) + 1) - 3) / 2))
    basis = monomial_basis(k, geom)
    x, w = polygon_quadrature(tri, degree or min(2 * k + 4, MAX_QUADRATURE_DEGREE))
    l2 = float(np.sqrt(w @ (eval_basis(basis, x) @ coeffs - np.asarray(u(x), dtype=float)) ** 2))
    if grad_u is None:
        return l2, float("nan")
    g = np.einsum("qad,a->qd", eval_basis(basis, x, "gradient"), coeffs)
    h1 = float(np.sqrt(w @ np.sum((g - np.asarray(grad_u(x), dtype=float)) ** 2, axis=1)))
    return l2, h1
