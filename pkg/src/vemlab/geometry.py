"""Polygonal meshes, polygon geometry and virtual triangulations.

A virtual triangulation of a polygon K is an auxiliary conforming
triangulation whose boundary sides are exactly the edges of K; interior
(Steiner) points are allowed, boundary points are not.  It is built by
max-min-angle ear clipping followed by Lawson edge flips and, when the
minimum angle is still below the configured threshold, interior point
insertion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DegeneratePolygon,
    InvalidSize,
    ParseError,
    TriangulationFailed,
    ValidationError,
)

# relative tolerance for geometric predicates (scaled by h or h**2)
_EPS = 1e-12
# angle ties closer than this (radians) are treated as equal
_ANGLE_TIE = 1e-9


@dataclass(frozen=True, eq=False)
class PolygonGeometry:
    """Geometric data of one polygon, vertices in counter-clockwise order."""

    vertices: np.ndarray
    h: float
    xc: np.ndarray
    area: float
    edge_lengths: np.ndarray
    normals: np.ndarray
    tangents: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Endpoints of edge ``i`` (from vertex i to vertex i+1)."""
        n = self.n_vertices
        return self.vertices[i], self.vertices[(i + 1) % n]

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())


def signed_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def diameter(points) -> float:
    p = np.asarray(points, dtype=float)
    d = p[:, None, :] - p[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


def polygon_geometry(cell) -> PolygonGeometry:
    """Diameter, vertex-average centroid, area and edge data of a polygon.

    Raises
    ------
    DegeneratePolygon
        If the loop has fewer than three vertices, repeats a vertex, or has
        non-positive signed area (clockwise loops are rejected here; mesh
        loading normalizes orientation beforehand).
    """
    v = np.array(cell, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise DegeneratePolygon("a polygon needs at least 3 vertices")
    if not np.all(np.isfinite(v)):
        raise DegeneratePolygon("non-finite vertex coordinates")
    h = diameter(v)
    d = np.sqrt(((v[:, None, :] - v[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    if h == 0.0 or d.min() <= _EPS * h:
        raise DegeneratePolygon("repeated vertex")
    area = signed_area(v)
    if area <= _EPS * h * h:
        raise DegeneratePolygon(f"signed area {area!r} is not positive")
    e = np.roll(v, -1, axis=0) - v
    lengths = np.sqrt((e**2).sum(1))
    tangents = e / lengths[:, None]
    normals = np.column_stack([tangents[:, 1], -tangents[:, 0]])
    v.setflags(write=False)
    return PolygonGeometry(
        vertices=v,
        h=h,
        xc=v.mean(axis=0),
        area=area,
        edge_lengths=lengths,
        normals=normals,
        tangents=tangents,
    )


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _segments_intersect(p1, p2, q1, q2, tol) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True

    def on_seg(a, b, p, d):
        return (
            abs(d) <= tol
            and min(a[0], b[0]) - 1e-14 <= p[0] <= max(a[0], b[0]) + 1e-14
            and min(a[1], b[1]) - 1e-14 <= p[1] <= max(a[1], b[1]) + 1e-14
        )

    return (
        on_seg(q1, q2, p1, d1)
        or on_seg(q1, q2, p2, d2)
        or on_seg(p1, p2, q1, d3)
        or on_seg(p1, p2, q2, d4)
    )


def is_simple(vertices) -> bool:
    """True when the closed loop has no repeated vertices and no
    intersections between non-adjacent edges, and encloses nonzero area."""
    v = np.asarray(vertices, dtype=float)
    n = len(v)
    if n < 3:
        return False
    h = diameter(v)
    if h == 0.0:
        return False
    d = np.sqrt(((v[:, None, :] - v[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    if d.min() <= _EPS * h:
        return False
    if abs(signed_area(v)) <= _EPS * h * h:
        return False
    tol = _EPS * h * h
    for i in range(n):
        a, b = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(a, b, v[j], v[(j + 1) % n], tol):
                return False
    return True


# ---------------------------------------------------------------------------
# Virtual triangulation


@dataclass(frozen=True)
class QualityConfig:
    """Triangulation quality settings. ``min_angle`` is in degrees."""

    min_angle: float = 15.0
    max_insertions: int | None = None  # default 2 * number of polygon vertices


@dataclass(frozen=True, eq=False)
class VirtualTriangulation:
    """Triangulation of a polygon; the first ``n_polygon`` points are the
    polygon vertices in order, any further points are interior Steiner
    points.  Triangles are counter-clockwise index triples."""

    points: np.ndarray
    triangles: np.ndarray
    n_polygon: int

    @property
    def steiner_points(self) -> np.ndarray:
        return self.points[self.n_polygon :]

    @property
    def polygon(self) -> np.ndarray:
        return self.points[: self.n_polygon]

    @cached_property
    def geometry(self) -> PolygonGeometry:
        return polygon_geometry(self.polygon)

    def triangle_areas(self) -> np.ndarray:
        p = self.points[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        )

    def scaled(self, s: float) -> "VirtualTriangulation":
        """The same triangulation of the dilated polygon ``s * K``."""
        return VirtualTriangulation(self.points * s, self.triangles, self.n_polygon)


def triangle_angles(p0, p1, p2) -> np.ndarray:
    p = [np.asarray(p0, float), np.asarray(p1, float), np.asarray(p2, float)]
    out = np.empty(3)
    for i in range(3):
        a = p[(i + 1) % 3] - p[i]
        b = p[(i + 2) % 3] - p[i]
        out[i] = math.atan2(abs(a[0] * b[1] - a[1] * b[0]), a[0] * b[0] + a[1] * b[1])
    return out


def _min_angle(points, tri) -> float:
    return float(triangle_angles(*points[list(tri)]).min())


def _point_in_closed_triangle(p, a, b, c, tol) -> bool:
    return _orient(a, b, p) >= -tol and _orient(b, c, p) >= -tol and _orient(c, a, p) >= -tol


def _ear_clip(pts: np.ndarray) -> list[tuple[int, int, int]]:
    n = len(pts)
    h = diameter(pts)
    tol = _EPS * h * h
    idx = list(range(n))
    tris = []
    while len(idx) > 3:
        m = len(idx)
        best = None
        best_q = -1.0
        for pos in range(m):
            ip, i, inx = idx[pos - 1], idx[pos], idx[(pos + 1) % m]
            a, b, c = pts[ip], pts[i], pts[inx]
            if _orient(a, b, c) <= tol:
                continue
            blocked = False
            for j in idx:
                if j in (ip, i, inx):
                    continue
                if _point_in_closed_triangle(pts[j], a, b, c, tol):
                    blocked = True
                    break
            if blocked:
                continue
            q = float(triangle_angles(a, b, c).min())
            if best is None or q > best_q + _ANGLE_TIE or (
                abs(q - best_q) <= _ANGLE_TIE and i < best[1]
            ):
                best, best_q = (ip, i, inx), q
        if best is None:
            raise TriangulationFailed("no ear found; polygon is not simple")
        tris.append(best)
        idx.remove(best[1])
    tris.append((idx[0], idx[1], idx[2]))
    return tris


def _polygon_edge_set(n_polygon: int) -> set[tuple[int, int]]:
    return {tuple(sorted((i, (i + 1) % n_polygon))) for i in range(n_polygon)}


def _flip_improve(points, tris, fixed_edges) -> list[list[int]]:
    """Lawson flips on non-fixed edges while the pair's min angle improves."""
    tris = [list(t) for t in tris]
    h = diameter(points)
    tol = _EPS * h * h
    for _ in range(10 * len(tris) ** 2 + 10):
        edge_map: dict[tuple[int, int], list[int]] = {}
        for t, tri in enumerate(tris):
            for a in range(3):
                e = tuple(sorted((tri[a], tri[(a + 1) % 3])))
                edge_map.setdefault(e, []).append(t)
        flipped = False
        for e in sorted(edge_map):
            ts = edge_map[e]
            if len(ts) != 2 or e in fixed_edges:
                continue
            t1, t2 = ts
            tri1, tri2 = tris[t1], tris[t2]
            # rotate tri1 so that it reads (a, b, c) with edge a->b
            for r in range(3):
                a, b, c = tri1[r], tri1[(r + 1) % 3], tri1[(r + 2) % 3]
                if {a, b} == set(e):
                    break
            d = next(x for x in tri2 if x not in e)
            pa, pb, pc, pd = points[a], points[b], points[c], points[d]
            # quad a, d, b, c must be strictly convex for the flip
            if not (
                _orient(pa, pd, pb) > tol
                and _orient(pd, pb, pc) > tol
                and _orient(pb, pc, pa) > tol
                and _orient(pc, pa, pd) > tol
            ):
                continue
            old = min(_min_angle(points, tri1), _min_angle(points, tri2))
            n1, n2 = [a, d, c], [d, b, c]
            new = min(_min_angle(points, n1), _min_angle(points, n2))
            if new > old + _ANGLE_TIE:
                tris[t1], tris[t2] = n1, n2
                flipped = True
                break
        if not flipped:
            return tris
    return tris


def _circumcenter(a, b, c):
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    if d == 0.0:
        return None
    a2, b2, c2 = a @ a, b @ b, c @ c
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    return np.array([ux, uy])


def _locate_strict(points, tris, p, margin):
    """Triangle strictly containing ``p`` with every barycentric > margin."""
    for t, tri in enumerate(tris):
        a, b, c = points[tri[0]], points[tri[1]], points[tri[2]]
        area2 = _orient(a, b, c)
        l0 = _orient(b, c, p) / area2
        l1 = _orient(c, a, p) / area2
        l2 = 1.0 - l0 - l1
        if min(l0, l1, l2) > margin:
            return t
    return None


def triangulate_polygon(cell, quality_cfg: QualityConfig | None = None) -> VirtualTriangulation:
    """Virtual triangulation of a simple counter-clockwise polygon.

    Ears are clipped greedily, always choosing the ear with the largest
    minimum angle (ties go to the lowest tip index).  Non-boundary edges are
    then flipped while that improves the local minimum angle.  If the
    minimum angle is still below ``quality_cfg.min_angle`` interior points
    are inserted one at a time (circumcenter of the worst triangle when it
    lies strictly inside some triangle, otherwise that triangle's centroid)
    as long as each insertion improves the minimum angle, up to
    ``2 * n_vertices`` insertions.  Falling short of the threshold is
    reported by :func:`regularity_report`, never raised.
    """
    cfg = quality_cfg or QualityConfig()
    pts = np.array(cell, dtype=float)
    if not is_simple(pts):
        raise TriangulationFailed("polygon is not simple")
    if signed_area(pts) < 0:
        raise TriangulationFailed("polygon must be counter-clockwise")
    n = len(pts)
    fixed = _polygon_edge_set(n)
    tris = _flip_improve(pts, _ear_clip(pts), fixed)
    points = pts
    threshold = math.radians(cfg.min_angle)
    max_ins = cfg.max_insertions if cfg.max_insertions is not None else 2 * n

    def theta(ps, ts):
        return min(_min_angle(ps, t) for t in ts)

    current = theta(points, tris)
    inserted = 0
    while current < threshold and inserted < max_ins:
        worst = min(range(len(tris)), key=lambda t: (_min_angle(points, tris[t]), t))
        a, b, c = (points[i] for i in tris[worst])
        cand = _circumcenter(a, b, c)
        host = None
        if cand is not None:
            host = _locate_strict(points, tris, cand, 1e-6)
        if host is None:
            cand = (a + b + c) / 3.0
            host = worst
        new_points = np.vstack([points, cand])
        p = len(points)
        i0, i1, i2 = tris[host]
        trial = [t for k, t in enumerate(tris) if k != host]
        trial += [[i0, i1, p], [i1, i2, p], [i2, i0, p]]
        trial = _flip_improve(new_points, trial, fixed)
        value = theta(new_points, trial)
        if value <= current + _ANGLE_TIE:
            break
        points, tris, current = new_points, trial, value
        inserted += 1

    points = np.array(points)
    points.setflags(write=False)
    triangles = np.array(tris, dtype=np.int64)
    triangles.setflags(write=False)
    return VirtualTriangulation(points=points, triangles=triangles, n_polygon=n)


@dataclass(frozen=True)
class RegularityReport:
    kappa_max: float
    theta_min: float
    sigma: float
    L: int
    c1_star_radius_ratio: float
    c2_min_edge_ratio: float
    min_angle_threshold: float
    flagged: bool

    def as_dict(self) -> dict:
        return {
            "kappa_max": self.kappa_max,
            "theta_min": self.theta_min,
            "theta_min_deg": math.degrees(self.theta_min),
            "sigma": self.sigma,
            "L": self.L,
            "c1_star_radius_ratio": self.c1_star_radius_ratio,
            "c2_min_edge_ratio": self.c2_min_edge_ratio,
            "min_angle_threshold_deg": self.min_angle_threshold,
            "flagged": self.flagged,
        }


def regularity_report(tri: VirtualTriangulation, min_angle: float = 15.0) -> RegularityReport:
    """Shape-regularity and quasi-uniformity metrics of a triangulation.

    ``c1_star_radius_ratio`` is the largest triangle inradius over h_K, a
    lower proxy for the radius of a disk inside K; ``c2_min_edge_ratio`` is
    the smallest distance between two polygon vertices over h_K.
    """
    p = tri.points[tri.triangles]
    sides = np.stack(
        [
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ],
        axis=1,
    )
    diam = sides.max(axis=1)
    areas = np.abs(tri.triangle_areas())
    inradius = 2.0 * areas / sides.sum(axis=1)
    theta = min(float(triangle_angles(*t).min()) for t in p)
    poly = tri.polygon
    hK = diameter(poly)
    d = np.sqrt(((poly[:, None, :] - poly[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    return RegularityReport(
        kappa_max=float((diam / inradius).max()),
        theta_min=theta,
        sigma=float(diam.max() / diam.min()),
        L=int(len(tri.triangles)),
        c1_star_radius_ratio=float(inradius.max() / hK),
        c2_min_edge_ratio=float(d.min() / hK),
        min_angle_threshold=float(min_angle),
        flagged=bool(theta < math.radians(min_angle)),
    )


# ---------------------------------------------------------------------------
# Meshes


@dataclass(frozen=True, eq=False)
class PolygonMesh:
    vertices: np.ndarray
    cells: tuple[tuple[int, ...], ...]

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_vertices(self, c: int) -> np.ndarray:
        return self.vertices[list(self.cells[c])]

    @cached_property
    def edge_cells(self) -> dict[tuple[int, int], list[int]]:
        """Undirected edge (low, high) -> cells using it, in cell order."""
        out: dict[tuple[int, int], list[int]] = {}
        for c, loop in enumerate(self.cells):
            m = len(loop)
            for i in range(m):
                a, b = loop[i], loop[(i + 1) % m]
                out.setdefault((min(a, b), max(a, b)), []).append(c)
        return out

    @cached_property
    def edges(self) -> list[tuple[int, int]]:
        """All undirected edges sorted lexicographically."""
        return sorted(self.edge_cells)

    @cached_property
    def boundary_edges(self) -> frozenset[tuple[int, int]]:
        """Domain-boundary edges, oriented as in their (only) cell."""
        out = set()
        for c, loop in enumerate(self.cells):
            m = len(loop)
            for i in range(m):
                a, b = loop[i], loop[(i + 1) % m]
                if len(self.edge_cells[(min(a, b), max(a, b))]) == 1:
                    out.add((a, b))
        return frozenset(out)

    def cell_areas(self) -> np.ndarray:
        return np.array([signed_area(self.cell_vertices(c)) for c in range(self.n_cells)])


def validate_mesh(vertices, cells) -> PolygonMesh:
    """Check the mesh invariants and return a mesh with CCW cells.

    Raises ValidationError on any violation.
    """
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) == 0:
        raise ValidationError("vertices must be a non-empty list of [x, y] pairs")
    if not np.all(np.isfinite(v)):
        raise ValidationError("non-finite vertex coordinates")
    nv = len(v)
    out_cells = []
    used = np.zeros(nv, dtype=bool)
    for c, loop in enumerate(cells):
        loop = [int(i) for i in loop]
        if len(loop) < 3:
            raise ValidationError(f"cell {c} has fewer than 3 vertices")
        if min(loop) < 0 or max(loop) >= nv:
            raise ValidationError(f"cell {c} has an out-of-range vertex index")
        if len(set(loop)) != len(loop):
            raise ValidationError(f"cell {c} repeats a vertex index")
        if not is_simple(v[loop]):
            raise ValidationError(f"cell {c} is not a simple polygon")
        if signed_area(v[loop]) < 0:
            loop = loop[::-1]
        used[loop] = True
        out_cells.append(tuple(loop))
    if not used.all():
        raise ValidationError(f"vertex {int(np.argmin(used))} is not referenced by any cell")

    directed = set()
    for c, loop in enumerate(out_cells):
        m = len(loop)
        for i in range(m):
            e = (loop[i], loop[(i + 1) % m])
            if e in directed:
                raise ValidationError(f"edge {e} used twice with the same orientation")
            directed.add(e)
    mesh = PolygonMesh(vertices=v, cells=tuple(out_cells))
    for (a, b), cs in mesh.edge_cells.items():
        if len(cs) > 2:
            raise ValidationError(f"edge {(a, b)} shared by more than two cells")
    # hanging nodes: a mesh vertex strictly inside some edge
    scale = float(np.ptp(v, axis=0).max()) or 1.0
    for a, b in mesh.edges:
        pa, pb = v[a], v[b]
        t = pb - pa
        L2 = t @ t
        rel = v - pa
        s = rel @ t / L2
        dist = np.abs(rel[:, 0] * t[1] - rel[:, 1] * t[0]) / math.sqrt(L2)
        inside = (s > 1e-12) & (s < 1 - 1e-12) & (dist < 1e-12 * scale)
        inside[[a, b]] = False
        if inside.any():
            raise ValidationError(f"vertex {int(np.argmax(inside))} hangs on edge {(a, b)}")
    return mesh


def make_mesh_family(kind: str, n: int) -> PolygonMesh:
    """Test meshes of the unit square.

    ``squares`` is an n x n grid; ``distorted_quads`` moves its vertices by
    (x, y) -> (x, y) + 0.1/n * sin(pi x) sin(pi y) * (1, 1); ``triangles``
    splits every square along its lower-left/upper-right diagonal;
    ``ltromino`` cuts each of the n x n blocks of a 2n x 2n grid into an
    L-shaped hexagon and a square, mirroring the pattern in alternating
    blocks so that no hanging nodes appear.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidSize(f"mesh size must be a positive integer, got {n!r}")
    if kind in ("squares", "distorted_quads", "triangles"):
        x = np.linspace(0.0, 1.0, n + 1)
        X, Y = np.meshgrid(x, x, indexing="xy")
        verts = np.column_stack([X.ravel(), Y.ravel()])
        if kind == "distorted_quads":
            bump = 0.1 / n * np.sin(np.pi * verts[:, 0]) * np.sin(np.pi * verts[:, 1])
            verts = verts + bump[:, None]

        def vid(i, j):
            return j * (n + 1) + i

        cells = []
        for j in range(n):
            for i in range(n):
                a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
                if kind == "triangles":
                    cells += [(a, b, c), (a, c, d)]
                else:
                    cells.append((a, b, c, d))
        return validate_mesh(verts, cells)
    if kind == "ltromino":
        m = 2 * n
        x = np.linspace(0.0, 1.0, m + 1)
        X, Y = np.meshgrid(x, x, indexing="xy")
        verts = np.column_stack([X.ravel(), Y.ravel()])

        def vid(i, j):
            return j * (m + 1) + i

        corners = [(0, 0), (2, 0), (2, 2), (0, 2)]
        cells = []
        for bj in range(n):
            for bi in range(n):
                sx = 1 if bi % 2 == 0 else 0
                sy = 1 if bj % 2 == 0 else 0
                removed = corners.index((2 * sx, 2 * sy))
                hexagon = []
                for ci, (cx, cy) in enumerate(corners):
                    if ci != removed:
                        hexagon.append((cx, cy))
                        continue
                    px, py = corners[ci - 1]
                    qx, qy = corners[(ci + 1) % 4]
                    hexagon += [((cx + px) // 2, (cy + py) // 2), (1, 1), ((cx + qx) // 2, (cy + qy) // 2)]
                ox, oy = 2 * bi, 2 * bj
                cells.append(tuple(vid(ox + a, oy + b) for a, b in hexagon))
                sq = [(sx, sy), (sx + 1, sy), (sx + 1, sy + 1), (sx, sy + 1)]
                cells.append(tuple(vid(ox + a, oy + b) for a, b in sq))
        used = sorted({i for c in cells for i in c})
        renum = {old: new for new, old in enumerate(used)}
        cells = [tuple(renum[i] for i in c) for c in cells]
        return validate_mesh(verts[used], cells)
    raise ValueError(f"unknown mesh family {kind!r}")


MESH_FAMILIES = ("squares", "distorted_quads", "triangles", "ltromino")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_mesh(mesh: PolygonMesh, path) -> None:
    verts = ",\n    ".join(f"[{_fmt(x)}, {_fmt(y)}]" for x, y in mesh.vertices)
    cells = ",\n    ".join(json.dumps(list(c)) for c in mesh.cells)
    text = f'{{"version": 1,\n  "vertices": [\n    {verts}\n  ],\n  "cells": [\n    {cells}\n  ]\n}}\n'
    Path(path).write_text(text, encoding="utf-8")


def load_mesh(path) -> PolygonMesh:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read mesh file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("mesh file must hold a JSON object")
    for key in ("vertices", "cells"):
        if key not in data:
            raise ParseError(f'mesh file is missing the "{key}" key')
    if data.get("version", 1) != 1:
        raise ParseError(f"unsupported mesh file version {data.get('version')!r}")
    try:
        verts = np.array(data["vertices"], dtype=float)
        cells = [[int(i) for i in c] for c in data["cells"]]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed vertices or cells: {exc}") from exc
    if verts.ndim != 2 or verts.shape[1:] != (2,):
        raise ParseError("vertices must be a list of [x, y] pairs")
    return validate_mesh(verts, cells)
