"""Convergence, interpolation and patch-test studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnsupportedLayout
from ..geometry import PolygonMesh, diameter, make_mesh_family, polygon_geometry, triangulate_polygon
from ..realization import fe_errors, interpolate, poly_errors
from ..solver import Problem, error_norms, exact_dofs, poly_problem, sinsin_problem, solve_poisson
from ..vemcore import dof_layout
from .shapes import shape_vertices

# errors below this (relative to the size of the solution) count as exact
EXACT_TOL = 1e-9
FIT_LEVELS = 3

PATCH_SOLUTIONS = {
    1: "3*x - y + 0.5",
    2: "x**2 - x*y",
    3: "x**3 - x*y**2 + 2*y - 0.3",
    4: "x**4 - 3*x**2*y**2 + x*y - 0.3",
}


@dataclass(frozen=True)
class ReportRow:
    level: int
    h: float
    n_dof: int
    errL2: float
    errH1: float
    rateL2: float | None
    rateH1: float | None


@dataclass(frozen=True)
class ConvergenceReport:
    """Error table with observed rates per level and fitted rates.

    A rate of None marks a level where the error is at round-off level
    ("exact"); the first row has no rate either and is told apart by
    ``level == 0``.
    """

    rows: tuple
    fitted_L2: float | None
    fitted_H1: float | None
    exact: bool


def _rate(e0, e1, h0, h1):
    if e0 <= EXACT_TOL or e1 <= EXACT_TOL:
        return None
    return float(np.log(e0 / e1) / np.log(h0 / h1))


def fit_rate(h, err, last: int = FIT_LEVELS) -> float | None:
    """Least-squares slope of log(err) against log(h) over the last levels."""
    h = np.asarray(h, dtype=float)[-last:]
    err = np.asarray(err, dtype=float)[-last:]
    if len(h) < 2 or np.any(err <= EXACT_TOL):
        return None
    slope, _ = np.polyfit(np.log(h), np.log(err), 1)
    return float(slope)


def build_report(hs, ndofs, e0s, e1s) -> ConvergenceReport:
    if np.any(np.diff(hs) >= 0):
        raise ValueError("mesh sizes must strictly decrease")
    rows = []
    for j in range(len(hs)):
        r0 = r1 = None
        if j > 0:
            r0 = _rate(e0s[j - 1], e0s[j], hs[j - 1], hs[j])
            r1 = _rate(e1s[j - 1], e1s[j], hs[j - 1], hs[j])
        rows.append(ReportRow(j, float(hs[j]), int(ndofs[j]), float(e0s[j]), float(e1s[j]), r0, r1))
    exact = bool(np.all(np.asarray(e0s) <= EXACT_TOL) and np.all(np.nan_to_num(np.asarray(e1s)) <= EXACT_TOL))
    return ConvergenceReport(
        rows=tuple(rows), fitted_L2=fit_rate(hs, e0s), fitted_H1=fit_rate(hs, e1s), exact=exact
    )


def _sinsin(x):
    return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])


def _sinsin_grad(x):
    return sinsin_problem().grad_u(x)


def interpolation_study(
    shape,
    k: int,
    which: str,
    u=None,
    grad_u=None,
    levels: int = 5,
    r: int = 2,
    anchor=(0.3, 0.4),
    aspect: float = 4.0,
) -> ConvergenceReport:
    """Interpolation errors on shrinking copies of one element.

    Level j uses the shape rescaled to diameter 2**-j and centred (vertex
    average) at ``anchor``.  Errors are root-mean-square over the element,
    i.e. divided by sqrt(|K|), so that the observed rates are k+1 (L2) and
    k (H1 seminorm).  The default ``u`` is sin(πx) sin(πy).
    """
    if u is None:
        u, grad_u = _sinsin, _sinsin_grad
    base = shape_vertices(shape, aspect) if isinstance(shape, str) else np.asarray(shape, dtype=float)
    base = (base - base.mean(axis=0)) / diameter(base)
    hs, nd, e0s, e1s = [], [], [], []
    for j in range(levels):
        verts = np.asarray(anchor, dtype=float) + 2.0**-j * base
        geom = polygon_geometry(verts)
        tri = triangulate_polygon(verts)
        v = interpolate(u, geom, tri, k, which, r=r)
        if which == "v_pi":
            e0, e1 = poly_errors(v, geom, tri, u, grad_u)
        else:
            e0, e1 = fe_errors(v, u, grad_u)
        scale = np.sqrt(geom.area)
        hs.append(geom.h)
        nd.append(dof_layout(geom, k, k - 2).N)
        e0s.append(e0 / scale)
        e1s.append(e1 / scale)
    return build_report(hs, nd, e0s, e1s)


def convergence_study(
    family_kind: str,
    k: int,
    l: int | None = None,
    stab_variant: str = "dof_full",
    levels: int = 4,
    problem: Problem | None = None,
    space: str = "V",
    n0: int = 4,
) -> ConvergenceReport:
    """Solve on meshes n = n0 * 2**j, j < levels, and tabulate the errors."""
    if levels < 3:
        raise ValueError("a convergence study needs at least 3 levels")
    problem = problem or sinsin_problem()
    hs, nd, e0s, e1s = [], [], [], []
    for j in range(levels):
        mesh = make_mesh_family(family_kind, n0 * 2**j)
        sol = solve_poisson(mesh, k, l, stab_variant, problem, space)
        e0, e1 = error_norms(sol, problem, mesh)
        hs.append(max(diameter(mesh.cell_vertices(c)) for c in range(mesh.n_cells)))
        nd.append(sol.dofmap.n_dofs)
        e0s.append(e0)
        e1s.append(e1)
    return build_report(hs, nd, e0s, e1s)


def patch_test(
    mesh: PolygonMesh,
    k: int,
    l: int | None = None,
    stab_variant: str = "dof_full",
    expr: str | None = None,
    space: str = "V",
) -> float:
    """Max |χ(u) - u_h| over the free d.o.f. for a global polynomial u of degree k.

    The source -Δu is tested with the moment-based load on V (exact for
    sources of degree k-2) and with Π0 on W.
    """
    if expr is None and k not in PATCH_SOLUTIONS:
        raise UnsupportedLayout(f"degree k={k} not supported (1..4)")
    problem = poly_problem(expr or PATCH_SOLUTIONS[k])
    load = "pi_zero" if space == "W" else "moments"
    sol = solve_poisson(mesh, k, l, stab_variant, problem, space, load=load)
    ex = exact_dofs(mesh, sol.dofmap, problem.u)
    free = ~sol.system.dirichlet_mask
    if not free.any():
        return 0.0
    return float(np.abs(ex - sol.dofs)[free].max())

