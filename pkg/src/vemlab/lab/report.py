"""CSV writers for lab results (17 significant digits, header row first)."""

from __future__ import annotations

import csv

from .constants import ConstantEstimate
from .studies import ConvergenceReport

CONVERGENCE_HEADER = ("level", "h", "ndof", "errL2", "errH1", "rateL2", "rateH1")
CONSTANTS_HEADER = ("quantity", "shape", "k", "l", "r", "lambda_min", "lambda_max", "constant")


def fmt(x: float) -> str:
    return f"{x:.17g}"


def _rate_cell(row, rate) -> str:
    if row.level == 0:
        return ""
    return "exact" if rate is None else fmt(rate)


def convergence_rows(report: ConvergenceReport) -> list[list[str]]:
    out = []
    for row in report.rows:
        out.append(
            [
                str(row.level),
                fmt(row.h),
                str(row.n_dof),
                fmt(row.errL2),
                fmt(row.errH1),
                _rate_cell(row, row.rateL2),
                _rate_cell(row, row.rateH1),
            ]
        )
    return out


def write_convergence_csv(report: ConvergenceReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONVERGENCE_HEADER)
        w.writerows(convergence_rows(report))


def write_constants_csv(estimates, path) -> None:
    if isinstance(estimates, ConstantEstimate):
        estimates = [estimates]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CONSTANTS_HEADER)
        for e in estimates:
            w.writerow(
                [e.quantity, e.element, e.k, e.l, e.r, fmt(e.lambda_min), fmt(e.lambda_max), fmt(e.constant)]
            )
