"""Command line interface: ``vemlab <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys


from .errors import VemlabError
from .geometry import MESH_FAMILIES, QualityConfig, load_mesh, make_mesh_family, regularity_report, triangulate_polygon
from .lab.constants import QUANTITIES, constant_estimate
from .lab.report import write_constants_csv, write_convergence_csv
from .lab.shapes import SHAPES
from .lab.studies import convergence_study, interpolation_study, patch_test
from .realization import INTERPOLANTS
from .solver import error_norms, problem_from_name, solve_poisson, write_solution_csv

STAB = {"dof": "dof_full", "boundary": "dof_boundary"}
SPACE = {"vk": "V", "wk": "W"}
PATCH_TOL = 1e-8


def _cmd_check(args) -> int:
    mesh = load_mesh(args.mesh)
    cfg = QualityConfig(min_angle=args.min_angle)
    reports = []
    for c in range(mesh.n_cells):
        tri = triangulate_polygon(mesh.cell_vertices(c), cfg)
        reports.append(regularity_report(tri, args.min_angle).as_dict())
    if args.json:
        print(json.dumps({"cells": reports}, indent=2, sort_keys=True))
        return 0
    print(f"{mesh.n_cells} cells, {len(mesh.vertices)} vertices")
    for c, rep in enumerate(reports):
        flag = "  FLAGGED" if rep["flagged"] else ""
        print(f"cell {c}: theta_min={rep['theta_min_deg']:.4g} deg kappa_max={rep['kappa_max']:.4g} sigma={rep['sigma']:.4g}{flag}")
    n_flag = sum(rep["flagged"] for rep in reports)
    print(f"{n_flag} of {mesh.n_cells} cells below {args.min_angle:g} degrees")
    return 0


def _cmd_solve(args) -> int:
    mesh = load_mesh(args.mesh)
    problem = problem_from_name(args.problem)
    sol = solve_poisson(mesh, args.degree, None, STAB[args.stab], problem, SPACE[args.space])
    write_solution_csv(sol, args.out)
    e0, e1 = error_norms(sol, problem, mesh)
    print(f"ndof={sol.dofmap.n_dofs} errL2={e0:.6e} errH1={e1:.6e}")
    return 0


def _cmd_patch(args) -> int:
    mesh = make_mesh_family(args.family, args.n)
    err = patch_test(mesh, args.degree, None, STAB[args.stab])
    ok = err <= PATCH_TOL
    print(f"max dof error = {err:.3e} ({'pass' if ok else 'FAIL'})")
    return 0 if ok else 1


def _cmd_converge(args) -> int:
    rep = convergence_study(
        args.family, args.degree, None, STAB[args.stab], args.levels, problem_from_name(args.problem), SPACE[args.space]
    )
    write_convergence_csv(rep, args.out)
    print(f"fitted rates: L2={_show(rep.fitted_L2)} H1={_show(rep.fitted_H1)}")
    return 0


def _cmd_constants(args) -> int:
    est = constant_estimate(args.shape, args.degree, args.l, args.refine, args.quantity, args.aspect)
    write_constants_csv(est, args.out)
    print(f"{est.quantity} on {est.element}: lambda in [{est.lambda_min:.6g}, {est.lambda_max:.6g}], constant {est.constant:.6g}")
    return 0


def _cmd_interp(args) -> int:
    rep = interpolation_study(args.shape, args.degree, args.which, levels=args.levels, r=args.refine, aspect=args.aspect)
    write_convergence_csv(rep, args.out)
    print(f"fitted rates: L2={_show(rep.fitted_L2)} H1={_show(rep.fitted_H1)}")
    return 0


def _show(rate) -> str:
    return "exact" if rate is None else f"{rate:.4f}"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vemlab", description="Virtual element solver and verification lab.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", help="regularity report of a mesh's virtual triangulations")
    s.add_argument("--mesh", required=True)
    s.add_argument("--min-angle", type=float, default=15.0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=_cmd_check)

    s = sub.add_parser("solve", help="solve the Poisson problem on a mesh file")
    s.add_argument("--mesh", required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--space", choices=sorted(SPACE), default="vk")
    s.add_argument("--stab", choices=sorted(STAB), default="dof")
    s.add_argument("--problem", default="sinsin", help="sinsin or poly:EXPR")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_solve)

    s = sub.add_parser("patch", help="patch test on a mesh family")
    s.add_argument("--family", choices=MESH_FAMILIES, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--stab", choices=sorted(STAB), default="dof")
    s.set_defaults(func=_cmd_patch)

    s = sub.add_parser("converge", help="convergence study on a mesh family")
    s.add_argument("--family", choices=MESH_FAMILIES, required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--levels", type=int, default=4)
    s.add_argument("--space", choices=sorted(SPACE), default="vk")
    s.add_argument("--stab", choices=sorted(STAB), default="dof")
    s.add_argument("--problem", default="sinsin")
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_converge)

    s = sub.add_parser("constants", help="estimate an inequality constant on a built-in shape")
    s.add_argument("--shape", choices=SHAPES, required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--quantity", choices=QUANTITIES, required=True)
    s.add_argument("--l", type=int, default=None)
    s.add_argument("--refine", type=int, default=2)
    s.add_argument("--aspect", type=float, default=4.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_constants)

    s = sub.add_parser("interp", help="interpolation study on scaled copies of a shape")
    s.add_argument("--shape", choices=SHAPES, required=True)
    s.add_argument("--degree", type=int, required=True)
    s.add_argument("--which", choices=INTERPOLANTS, required=True)
    s.add_argument("--levels", type=int, default=5)
    s.add_argument("--refine", type=int, default=2)
    s.add_argument("--aspect", type=float, default=4.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_interp)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VemlabError, ValueError, OSError) as exc:
        print(f"vemlab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
