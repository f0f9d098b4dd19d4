"""Global VEM discretization of -Δu = f with Dirichlet data.

Global d.o.f. ordering: all mesh vertices, then k-1 moments for every
mesh edge (edges sorted by their (low, high) vertex pair, moments taken
in the low-to-high direction), then dim P_l cell moments per cell.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import ElementError, MaxIterations, MissingExact, VemlabError
from .geometry import PolygonMesh, VirtualTriangulation, polygon_geometry, triangulate_polygon
from .polynomials import (
    EdgeBasis,
    MonomialBasis,
    edge_gauss_points,
    eval_basis,
    gauss_legendre,
    polygon_quadrature,
    poly_dim,
)
from .vemcore import dof_layout, element_matrices, evaluate_dofs

SPACES = ("V", "W")
LOADS = ("pi_nabla", "pi_zero", "moments")


# ---------------------------------------------------------------------------
# Problems


@dataclass(frozen=True)
class Problem:
    """Source ``f``, Dirichlet data ``g`` and optionally the exact solution."""

    f: object
    g: object
    u: object = None
    grad_u: object = None
    name: str = "custom"


def _sinsin(x):
    return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


def _sinsin_grad(x):
    sx, sy = np.sin(np.pi * x[:, 0]), np.sin(np.pi * x[:, 1])
    cx, cy = np.cos(np.pi * x[:, 0]), np.cos(np.pi * x[:, 1])
    return np.pi * np.stack([cx * sy, sx * cy], axis=1)


def sinsin_problem() -> Problem:
    """u = sin(πx) sin(πy) on the unit square, f = 2π² u, g = u."""
    return Problem(
        f=lambda x: 2 * np.pi**2 * _sinsin(x),
        g=_sinsin,
        u=_sinsin,
        grad_u=_sinsin_grad,
        name="sinsin",
    )


def _vectorize(fn):
    def call(x):
        x = np.asarray(x, dtype=float)
        val = np.asarray(fn(x[:, 0], x[:, 1]), dtype=float)
        return np.broadcast_to(val, (len(x),)).copy()

    return call


def poly_problem(expr: str) -> Problem:
    """Manufactured problem from a closed-form expression in x and y.

    The source is -Δu, the Dirichlet data is u itself.
    """
    import sympy

    x, y = sympy.symbols("x y")
    try:
        u = sympy.sympify(expr, locals={"x": x, "y": y})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ValueError(f"cannot parse expression {expr!r}: {exc}") from None
    extra = u.free_symbols - {x, y}
    if extra:
        raise ValueError(f"unknown symbols in {expr!r}: {sorted(map(str, extra))}")
    f = -(sympy.diff(u, x, 2) + sympy.diff(u, y, 2))
    fu = _vectorize(sympy.lambdify((x, y), u, "numpy"))
    ff = _vectorize(sympy.lambdify((x, y), f, "numpy"))
    gx = _vectorize(sympy.lambdify((x, y), sympy.diff(u, x), "numpy"))
    gy = _vectorize(sympy.lambdify((x, y), sympy.diff(u, y), "numpy"))
    return Problem(f=ff, g=fu, u=fu, grad_u=lambda p: np.stack([gx(p), gy(p)], axis=1), name=f"poly:{expr}")


def problem_from_name(name: str) -> Problem:
    if name == "sinsin":
        return sinsin_problem()
    if name.startswith("poly:"):
        return poly_problem(name[5:])
    raise ValueError(f"unknown problem {name!r}; use 'sinsin' or 'poly:EXPR'")


# ---------------------------------------------------------------------------
# D.o.f. map


@dataclass(frozen=True, eq=False)
class DofMap:
    """Local-to-global d.o.f. indices and orientation signs per cell."""

    mesh: PolygonMesh
    k: int
    l: int
    n_dofs: int
    edge_index: dict
    cell_dofs: tuple
    cell_signs: tuple

    def vertex_dof(self, v: int) -> int:
        return v

    def edge_dofs(self, e: tuple[int, int]) -> np.ndarray:
        start = self.mesh.vertices.shape[0] + self.edge_index[e] * (self.k - 1)
        return np.arange(start, start + self.k - 1)

    def cell_moment_dofs(self, c: int) -> np.ndarray:
        nV = self.mesh.vertices.shape[0]
        start = nV + len(self.edge_index) * (self.k - 1) + c * poly_dim(self.l)
        return np.arange(start, start + poly_dim(self.l))

    @cached_property
    def boundary_dofs(self) -> np.ndarray:
        idx = set()
        for a, b in self.mesh.boundary_edges:
            idx.update((a, b))
            idx.update(self.edge_dofs((min(a, b), max(a, b))).tolist())
        return np.array(sorted(idx), dtype=np.int64)


def dof_map(mesh: PolygonMesh, k: int, l: int) -> DofMap:
    edges = mesh.edges
    edge_index = {e: i for i, e in enumerate(edges)}
    nV = mesh.vertices.shape[0]
    m = k - 1
    n_cell = poly_dim(l)
    n_dofs = nV + len(edges) * m + mesh.n_cells * n_cell
    j = np.arange(m)
    all_idx, all_sig = [], []
    for c, cell in enumerate(mesh.cells):
        nv = len(cell)
        idx = list(cell)
        sig = [1.0] * nv
        for i in range(nv):
            a, b = cell[i], cell[(i + 1) % nv]
            e = (min(a, b), max(a, b))
            start = nV + edge_index[e] * m
            idx += list(range(start, start + m))
            sig += list(np.where(a < b, 1.0, (-1.0) ** j))
        cstart = nV + len(edges) * m + c * n_cell
        idx += list(range(cstart, cstart + n_cell))
        sig += [1.0] * n_cell
        all_idx.append(np.array(idx, dtype=np.int64))
        all_sig.append(np.array(sig))
    return DofMap(
        mesh=mesh, k=k, l=l, n_dofs=n_dofs, edge_index=edge_index, cell_dofs=tuple(all_idx), cell_signs=tuple(all_sig)
    )


# ---------------------------------------------------------------------------
# Assembly


@dataclass(frozen=True, eq=False)
class ElementData:
    """Translation-invariant element data shared by congruent cells."""

    A: np.ndarray
    pi_star: np.ndarray
    pi_zero_star: np.ndarray
    pi_low_star: np.ndarray
    points: np.ndarray  # virtual triangulation relative to the first vertex
    triangles: np.ndarray


@dataclass(frozen=True, eq=False)
class GlobalSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap
    dirichlet_mask: np.ndarray
    dirichlet_values: np.ndarray
    elements: tuple
    space: str
    stab: str


def _element_key(verts: np.ndarray) -> bytes:
    rel = verts - verts[0]
    h = np.abs(rel).max()
    return np.round(rel / h, 12).tobytes() + np.float64(h).tobytes()


def _element_data(verts, k, l, stab) -> ElementData:
    geom = polygon_geometry(verts)
    tri = triangulate_polygon(verts)
    em = element_matrices(geom, tri, k, l, stab)
    origin = verts[0]
    pack = em.pack
    # L2 projection onto P_{k-2}, read off the cell moments
    n_low = poly_dim(k - 2)
    pi_low = np.zeros_like(pack.pi_star)
    if n_low:
        rhs = np.zeros((n_low, pack.layout.N))
        rhs[np.arange(n_low), pack.layout.cell_dofs[:n_low]] = geom.area
        pi_low[:n_low] = np.linalg.solve(pack.H[:n_low, :n_low], rhs)
    return ElementData(
        A=em.A,
        pi_star=pack.pi_star,
        pi_zero_star=pack.pi_zero_star,
        pi_low_star=pi_low,
        points=tri.points - origin,
        triangles=tri.triangles,
    )


def _cell_basis(verts, k) -> MonomialBasis:
    geom = polygon_geometry(verts)
    return MonomialBasis(degree=k, xc=geom.xc, h=geom.h)


def _cell_quadrature(data: ElementData, verts, d):
    tri = VirtualTriangulation(points=data.points + verts[0], triangles=data.triangles, n_polygon=len(verts))
    return polygon_quadrature(tri, d)


def _boundary_values(mesh: PolygonMesh, dm: DofMap, g) -> tuple[np.ndarray, np.ndarray]:
    mask = np.zeros(dm.n_dofs, dtype=bool)
    vals = np.zeros(dm.n_dofs)
    k = dm.k
    bverts = sorted({v for e in mesh.boundary_edges for v in e})
    if bverts:
        mask[bverts] = True
        vals[bverts] = np.asarray(g(mesh.vertices[bverts]), dtype=float)
    if k >= 2:
        s, w = gauss_legendre(edge_gauss_points(k))
        mu = EdgeBasis(k - 2).values(s)
        for a, b in sorted(mesh.boundary_edges):
            lo, hi = min(a, b), max(a, b)
            pa, pb = mesh.vertices[lo], mesh.vertices[hi]
            x = pa + s[:, None] * (pb - pa)
            idx = dm.edge_dofs((lo, hi))
            mask[idx] = True
            vals[idx] = (mu * w[:, None]).T @ np.asarray(g(x), dtype=float)
    return mask, vals


def assemble(
    mesh: PolygonMesh,
    k: int,
    l: int | None = None,
    stab_variant: str = "dof_full",
    problem: Problem | None = None,
    space: str = "V",
    load: str | None = None,
) -> GlobalSystem:
    """Assemble the global stiffness matrix and load vector.

    ``space="W"`` uses the V_k d.o.f. with the load tested against Π0,
    which is computable on W_k.  ``load`` overrides the projector in the
    load vector: ``pi_nabla`` (default on V), ``pi_zero`` (default on W)
    or ``moments``, the L2 projection onto P_{k-2} given by the cell
    moments (exact for sources in P_{k-2}; falls back to ``pi_nabla`` when
    k = 1).  Congruent cells (equal up to translation) share one set of
    element matrices.
    """
    if space not in SPACES:
        raise ValueError(f"unknown space {space!r}; use 'V' or 'W'")
    if load is None:
        load = "pi_zero" if space == "W" else "pi_nabla"
    if load not in LOADS:
        raise ValueError(f"unknown load {load!r}")
    if load == "moments" and k == 1:
        load = "pi_nabla"
    if space == "W":
        if l is not None and l != k - 2:
            raise ValueError("W_k shares the V_k d.o.f.; l must be k-2")
        l = k - 2
    elif l is None:
        l = k - 2
    dm = dof_map(mesh, k, l)
    cache: dict[bytes, ElementData] = {}
    rows, cols, data = [], [], []
    rhs = np.zeros(dm.n_dofs)
    elements = []
    d = min(2 * k + 2, 14)
    for c in range(mesh.n_cells):
        verts = mesh.cell_vertices(c)
        key = _element_key(verts)
        try:
            ed = cache.get(key)
            if ed is None:
                ed = _element_data(verts, k, l, stab_variant)
                cache[key] = ed
            idx, sig = dm.cell_dofs[c], dm.cell_signs[c]
            A = sig[:, None] * ed.A * sig[None, :]
            n = len(idx)
            rows.append(np.repeat(idx, n))
            cols.append(np.tile(idx, n))
            data.append(A.ravel())
            if problem is not None and problem.f is not None:
                x, w = _cell_quadrature(ed, verts, d)
                F = (eval_basis(_cell_basis(verts, k), x) * w[:, None]).T @ np.asarray(problem.f(x), dtype=float)
                P = {"pi_zero": ed.pi_zero_star, "moments": ed.pi_low_star}.get(load, ed.pi_star)
                np.add.at(rhs, idx, sig * (P.T @ F))
        except VemlabError as exc:
            raise ElementError(c, exc) from exc
        elements.append(ed)
    if rows:
        M = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dm.n_dofs, dm.n_dofs)
        ).tocsr()
    else:
        M = sp.csr_matrix((dm.n_dofs, dm.n_dofs))
    M.sum_duplicates()
    M.sort_indices()
    if problem is not None and problem.g is not None:
        mask, vals = _boundary_values(mesh, dm, problem.g)
    else:
        mask = np.zeros(dm.n_dofs, dtype=bool)
        mask[dm.boundary_dofs] = True
        vals = np.zeros(dm.n_dofs)
    return GlobalSystem(
        matrix=M,
        rhs=rhs,
        dofmap=dm,
        dirichlet_mask=mask,
        dirichlet_values=vals,
        elements=tuple(elements),
        space=space,
        stab=stab_variant,
    )


@dataclass(frozen=True, eq=False)
class ReducedSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    fixed_values: np.ndarray

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        out = np.zeros(len(self.free) + len(self.fixed))
        out[self.free] = x_free
        out[self.fixed] = self.fixed_values
        return out


def apply_dirichlet(system: GlobalSystem, g=None) -> ReducedSystem:
    """Eliminate the boundary d.o.f.

    With ``g`` given, boundary values are recomputed from it; otherwise
    the values stored on the system are used.
    """
    mask, vals = system.dirichlet_mask, system.dirichlet_values
    if g is not None:
        mask, vals = _boundary_values(system.dofmap.mesh, system.dofmap, g)
    free = np.flatnonzero(~mask)
    fixed = np.flatnonzero(mask)
    A = system.matrix
    A_ff = A[free][:, free].tocsr()
    rhs = system.rhs[free] - A[free][:, fixed] @ vals[fixed]
    return ReducedSystem(matrix=A_ff, rhs=rhs, free=free, fixed=fixed, fixed_values=vals[fixed])


def cg_solve(matrix, rhs, tol: float = 1e-10, maxit: int | None = None, x0=None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients.

    Stops when ||b - A x|| <= tol ||b||.

    Raises
    ------
    MaxIterations
        If the tolerance is not reached; the residual history is attached.
    """
    A = sp.csr_matrix(matrix) if not sp.issparse(matrix) else matrix
    b = np.asarray(rhs, dtype=float)
    n = len(b)
    maxit = maxit if maxit is not None else max(10 * n, 100)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    diag = A.diagonal()
    inv_d = np.where(diag > 0, 1.0 / np.where(diag > 0, diag, 1.0), 1.0)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    history = [np.linalg.norm(r) / bnorm]
    for _ in range(maxit):
        if history[-1] <= tol:
            return x
        Ap = A @ p
        pAp = p @ Ap
        if pAp <= 0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        history.append(np.linalg.norm(r) / bnorm)
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    # the recursive residual can drift; confirm with the true one
    true_res = np.linalg.norm(b - A @ x) / bnorm
    if true_res <= tol:
        return x
    raise MaxIterations(f"CG did not reach tol={tol:g} (relative residual {true_res:.3e})", history)


# ---------------------------------------------------------------------------
# Solve and errors


@dataclass(frozen=True, eq=False)
class VemSolution:
    dofs: np.ndarray
    system: GlobalSystem

    @property
    def dofmap(self) -> DofMap:
        return self.system.dofmap

    @property
    def elements(self) -> tuple:
        return self.system.elements

    def local_dofs(self, c: int) -> np.ndarray:
        dm = self.dofmap
        return dm.cell_signs[c] * self.dofs[dm.cell_dofs[c]]


def solve_poisson(
    mesh: PolygonMesh,
    k: int,
    l: int | None = None,
    stab_variant: str = "dof_full",
    problem: Problem | None = None,
    space: str = "V",
    tol: float = 1e-10,
    load: str | None = None,
) -> VemSolution:
    """Assemble, eliminate Dirichlet d.o.f. and solve with CG."""
    problem = problem or Problem(f=None, g=None)
    system = assemble(mesh, k, l, stab_variant, problem, space, load)
    red = apply_dirichlet(system)
    x = cg_solve(red.matrix, red.rhs, tol=tol) if len(red.free) else np.zeros(0)
    return VemSolution(dofs=red.expand(x), system=system)


def error_norms(solution: VemSolution, problem: Problem, mesh: PolygonMesh | None = None) -> tuple[float, float]:
    """L2 and H1-seminorm errors of Π∇ u_h against the exact solution."""
    if problem.u is None or problem.grad_u is None:
        raise MissingExact("problem has no exact solution")
    mesh = mesh or solution.dofmap.mesh
    k = solution.dofmap.k
    d = min(2 * k + 2, 14)
    e0 = e1 = 0.0
    for c in range(mesh.n_cells):
        verts = mesh.cell_vertices(c)
        ed = solution.elements[c]
        coeffs = ed.pi_star @ solution.local_dofs(c)
        basis = _cell_basis(verts, k)
        x, w = _cell_quadrature(ed, verts, d)
        v = eval_basis(basis, x) @ coeffs
        gv = np.einsum("qad,a->qd", eval_basis(basis, x, "gradient"), coeffs)
        e0 += w @ (np.asarray(problem.u(x), dtype=float) - v) ** 2
        e1 += w @ np.sum((np.asarray(problem.grad_u(x), dtype=float) - gv) ** 2, axis=1)
    return float(np.sqrt(e0)), float(np.sqrt(e1))


def exact_dofs(mesh: PolygonMesh, dm: DofMap, u) -> np.ndarray:
    """Global d.o.f. vector χ(u) of a function given on the whole domain."""
    out = np.zeros(dm.n_dofs)
    for c in range(mesh.n_cells):
        verts = mesh.cell_vertices(c)
        geom = polygon_geometry(verts)
        tri = triangulate_polygon(verts)
        loc = evaluate_dofs(u, geom, tri, dof_layout(geom, dm.k, dm.l))
        out[dm.cell_dofs[c]] = dm.cell_signs[c] * loc
    return out


def write_solution_csv(solution: VemSolution, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dof_id", "value"])
        for i, v in enumerate(solution.dofs):
            writer.writerow([i, f"{v:.17g}"])
