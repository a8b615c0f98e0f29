"""Convex hulls of StationPlot clouds and the hull geometry descriptors.

Deviations from the printed formulas, kept on purpose:

* perimeter uses the Euclidean edge length sqrt(dx**2 + dy**2) (the printed
  formula has a minus sign under the root);
* circularity is 4*pi*area / perimeter**2, the dimensionally consistent reading
  of the printed denominator.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .const import (
    EPS_REL,
    FEATURE_AREA,
    FEATURE_ASPECT_RATIO,
    FEATURE_CIRCULARITY,
    FEATURE_PERIMETER,
    FEATURE_SURFACE_AREA,
    FEATURE_VOLUME,
)
from .embedding import PointCloud
from .exceptions import DegenerateGeometryError

_LOGGER = logging.getLogger(__name__)

_MEMBERSHIP_CHUNK = 65_536


def _as_points(points: PointCloud | ArrayLike, dimension: int) -> NDArray[np.float64]:
    raw = points.points if isinstance(points, PointCloud) else points
    arr = np.asarray(raw, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != dimension:
        raise DegenerateGeometryError(
            f"Expected {dimension}D points, got array of shape {arr.shape}"
        )
    if arr.shape[0] == 0:
        raise DegenerateGeometryError("Point set is empty")
    return arr


def bbox_diagonal(points: NDArray[np.float64]) -> float:
    return float(np.linalg.norm(np.ptp(points, axis=0)))


@dataclass(frozen=True, eq=False)
class ConvexHull2D:
    """Strict hull: counter-clockwise, starting at the lexicographically smallest vertex."""

    vertices: NDArray[np.float64]
    source_count: int
    tolerance: float

    def __len__(self) -> int:
        return int(self.vertices.shape[0])


@dataclass(frozen=True, eq=False)
class ConvexHull3D:
    """Triangulated hull; facets index ``vertices`` and wind counter-clockwise
    seen from outside, so ``normals`` point outward."""

    vertices: NDArray[np.float64]
    facets: NDArray[np.int64]
    normals: NDArray[np.float64]
    offsets: NDArray[np.float64]
    source_count: int
    tolerance: float

    @property
    def edge_count(self) -> int:
        edges = {
            tuple(sorted((int(f[i]), int(f[(i + 1) % 3]))))
            for f in self.facets
            for i in range(3)
        }
        return len(edges)


def _line_distance(
    pts: NDArray[np.float64], a: NDArray[np.float64], b: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Signed distance of ``pts`` from the directed line a->b, positive on the left."""
    d = b - a
    cross = d[0] * (pts[:, 1] - a[1]) - d[1] * (pts[:, 0] - a[0])
    return cross / math.hypot(d[0], d[1])


def _hull_chain(
    candidates: NDArray[np.float64],
    a: NDArray[np.float64],
    b: NDArray[np.float64],
    tol: float,
) -> list[NDArray[np.float64]]:
    """Vertices strictly between ``a`` and ``b`` for points right of a->b, in order."""
    chain: list[NDArray[np.float64]] = []
    # Segments are tuples; bare arrays are vertices ready to emit.
    stack: list[Any] = [(candidates, a, b)]
    while stack:
        item = stack.pop()
        if not isinstance(item, tuple):
            chain.append(item)
            continue
        pts, p, q = item
        if pts.shape[0] == 0:
            continue
        far = pts[int(np.argmin(_line_distance(pts, p, q)))]
        left = pts[_line_distance(pts, p, far) < -tol]
        right = pts[_line_distance(pts, far, q) < -tol]
        stack.append((right, far, q))
        stack.append(far)
        stack.append((left, p, far))
    return chain


def quickhull2d(points: PointCloud | ArrayLike) -> ConvexHull2D:
    pts = _as_points(points, 2)
    unique = np.unique(pts, axis=0)
    if unique.shape[0] < 3:
        raise DegenerateGeometryError(
            f"Need at least 3 distinct points, got {unique.shape[0]}"
        )
    tol = EPS_REL * bbox_diagonal(unique)
    first, last = unique[0], unique[-1]
    dist = _line_distance(unique, first, last)
    above = unique[dist > tol]
    below = unique[dist < -tol]
    if above.shape[0] == 0 and below.shape[0] == 0:
        raise DegenerateGeometryError("All points are collinear")

    chain = [first, *_hull_chain(below, first, last, tol), last]
    chain += _hull_chain(above, last, first, tol)
    return ConvexHull2D(
        vertices=np.array(chain, dtype=np.float64),
        source_count=int(pts.shape[0]),
        tolerance=tol,
    )


@dataclass
class _Facet:
    a: int
    b: int
    c: int
    normal: NDArray[np.float64]
    offset: float
    outside: list[int] = field(default_factory=list)

    def edges(self) -> tuple[tuple[int, int], ...]:
        return ((self.a, self.b), (self.b, self.c), (self.c, self.a))


class _HullBuilder:
    """Incremental quickhull over a fixed point array."""

    def __init__(self, points: NDArray[np.float64], tol: float) -> None:
        self._pts = points
        self._tol = tol
        self._facets: dict[int, _Facet] = {}
        self._edge_owner: dict[tuple[int, int], int] = {}
        self._next_id = 0

    def _add_facet(self, a: int, b: int, c: int) -> int:
        p = self._pts
        normal = np.cross(p[b] - p[a], p[c] - p[a])
        length = float(np.linalg.norm(normal))
        if length == 0.0:
            raise DegenerateGeometryError("Hull construction produced a zero-area facet")
        normal = normal / length
        fid = self._next_id
        self._next_id += 1
        facet = _Facet(a, b, c, normal, float(normal @ p[a]))
        for edge in facet.edges():
            if edge in self._edge_owner:
                raise DegenerateGeometryError("Hull topology became inconsistent")
            self._edge_owner[edge] = fid
        self._facets[fid] = facet
        return fid

    def _remove_facet(self, fid: int) -> _Facet:
        facet = self._facets.pop(fid)
        for edge in facet.edges():
            del self._edge_owner[edge]
        return facet

    def _assign(self, candidates: NDArray[np.int64], fids: list[int]) -> None:
        if candidates.size == 0 or not fids:
            return
        normals = np.array([self._facets[f].normal for f in fids])
        offsets = np.array([self._facets[f].offset for f in fids])
        dist = self._pts[candidates] @ normals.T - offsets
        outside = dist > self._tol
        owner = np.argmax(outside, axis=1)
        for idx, hit, col in zip(candidates, outside.any(axis=1), owner, strict=True):
            if hit:
                self._facets[fids[col]].outside.append(int(idx))

    def seed(self, simplex: tuple[int, int, int, int]) -> list[int]:
        i0, i1, i2, i3 = simplex
        centroid = self._pts[list(simplex)].mean(axis=0)
        fids = []
        for a, b, c in ((i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)):
            normal = np.cross(self._pts[b] - self._pts[a], self._pts[c] - self._pts[a])
            if normal @ (centroid - self._pts[a]) > 0:
                b, c = c, b
            fids.append(self._add_facet(a, b, c))
        rest = np.setdiff1d(np.arange(self._pts.shape[0]), np.array(simplex))
        self._assign(rest, fids)
        return fids

    def expand(self, queue: deque[int]) -> None:
        p = self._pts
        while queue:
            fid = queue.popleft()
            facet = self._facets.get(fid)
            if facet is None or not facet.outside:
                continue
            outside = np.array(facet.outside)
            eye = int(outside[np.argmax(p[outside] @ facet.normal - facet.offset)])
            eye_pt = p[eye]

            visible = {fid}
            stack = [fid]
            horizon: list[tuple[int, int]] = []
            while stack:
                current = self._facets[stack.pop()]
                for u, v in current.edges():
                    neighbour = self._edge_owner[(v, u)]
                    if neighbour in visible:
                        continue
                    nb = self._facets[neighbour]
                    if nb.normal @ eye_pt - nb.offset > self._tol:
                        visible.add(neighbour)
                        stack.append(neighbour)
                    else:
                        horizon.append((u, v))

            orphans: list[int] = []
            for vid in sorted(visible):
                orphans.extend(i for i in self._remove_facet(vid).outside if i != eye)

            new_ids = [self._add_facet(u, v, eye) for u, v in horizon]
            self._assign(np.array(orphans, dtype=np.int64), new_ids)
            queue.extend(new_ids)

    def result(self, source_count: int) -> ConvexHull3D:
        fids = sorted(self._facets)
        tri = np.array(
            [(self._facets[f].a, self._facets[f].b, self._facets[f].c) for f in fids],
            dtype=np.int64,
        )
        used = np.unique(tri)
        remap = np.full(self._pts.shape[0], -1, dtype=np.int64)
        remap[used] = np.arange(used.size)
        return ConvexHull3D(
            vertices=self._pts[used].copy(),
            facets=remap[tri],
            normals=np.array([self._facets[f].normal for f in fids]),
            offsets=np.array([self._facets[f].offset for f in fids]),
            source_count=source_count,
            tolerance=self._tol,
        )


def _initial_simplex(pts: NDArray[np.float64], tol: float) -> tuple[int, int, int, int]:
    i0 = int(np.argmin(pts[:, 0]))
    d0 = np.linalg.norm(pts - pts[i0], axis=1)
    i1 = int(np.argmax(d0))
    if d0[i1] <= tol:
        raise DegenerateGeometryError("All points coincide")

    axis = pts[i1] - pts[i0]
    d1 = np.linalg.norm(np.cross(pts - pts[i0], axis), axis=1) / np.linalg.norm(axis)
    i2 = int(np.argmax(d1))
    if d1[i2] <= tol:
        raise DegenerateGeometryError("All points are collinear")

    normal = np.cross(axis, pts[i2] - pts[i0])
    normal /= np.linalg.norm(normal)
    d2 = np.abs((pts - pts[i0]) @ normal)
    i3 = int(np.argmax(d2))
    if d2[i3] <= tol:
        raise DegenerateGeometryError("All points are coplanar")
    return i0, i1, i2, i3


def quickhull3d(points: PointCloud | ArrayLike) -> ConvexHull3D:
    pts = _as_points(points, 3)
    unique = np.unique(pts, axis=0)
    if unique.shape[0] < 4:
        raise DegenerateGeometryError(
            f"Need at least 4 distinct points, got {unique.shape[0]}"
        )
    tol = EPS_REL * bbox_diagonal(unique)
    builder = _HullBuilder(unique, tol)
    queue = deque(builder.seed(_initial_simplex(unique, tol)))
    builder.expand(queue)
    return builder.result(int(pts.shape[0]))


def hull_area(hull: ConvexHull2D) -> float:
    """Shoelace area over the cyclic vertex list."""
    v = hull.vertices - hull.vertices.mean(axis=0)
    w = np.roll(v, -1, axis=0)
    return 0.5 * abs(float(np.sum(v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1])))


def hull_perimeter(hull: ConvexHull2D) -> float:
    edges = np.roll(hull.vertices, -1, axis=0) - hull.vertices
    return float(np.sum(np.hypot(edges[:, 0], edges[:, 1])))


def hull_volume(hull: ConvexHull3D) -> float:
    """Sum of signed tetrahedra between the vertex centroid and each facet."""
    v = hull.vertices - hull.vertices.mean(axis=0)
    a, b, c = (v[hull.facets[:, i]] for i in range(3))
    return abs(float(np.einsum("ij,ij->", a, np.cross(b, c)))) / 6.0


def hull_surface_area(hull: ConvexHull3D) -> float:
    v = hull.vertices
    a, b, c = (v[hull.facets[:, i]] for i in range(3))
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a), axis=1).sum())


def contains_points(
    hull: ConvexHull2D | ConvexHull3D, points: ArrayLike
) -> NDArray[np.bool_]:
    """Membership of many points, boundary included within the hull tolerance."""
    dim = 2 if isinstance(hull, ConvexHull2D) else 3
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != dim:
        raise ValueError(f"Expected {dim}D points, got shape {pts.shape}")

    if isinstance(hull, ConvexHull2D):
        start = hull.vertices
        edge = np.roll(start, -1, axis=0) - start
        normals = np.column_stack([edge[:, 1], -edge[:, 0]])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        offsets = np.einsum("ij,ij->i", normals, start)
    else:
        normals, offsets = hull.normals, hull.offsets

    out = np.empty(pts.shape[0], dtype=bool)
    for lo in range(0, pts.shape[0], _MEMBERSHIP_CHUNK):
        chunk = pts[lo : lo + _MEMBERSHIP_CHUNK]
        out[lo : lo + chunk.shape[0]] = np.all(
            chunk @ normals.T - offsets <= hull.tolerance, axis=1
        )
    return out


def contains(hull: ConvexHull2D | ConvexHull3D, point: ArrayLike) -> bool:
    """Is ``point`` a convex combination of the hull vertices (within tolerance)?"""
    return bool(contains_points(hull, np.asarray(point, dtype=np.float64)[None, :])[0])


def circularity(area: float, perimeter: float) -> float:
    if not perimeter > 0 or not math.isfinite(perimeter):
        raise DegenerateGeometryError(f"Circularity needs a positive perimeter, got {perimeter}")
    return 4.0 * math.pi * area / perimeter**2


@dataclass(frozen=True)
class PrincipalAxes:
    """Eigenvalues of the planar covariance; ``degenerate`` when the minor one vanishes."""

    major: float
    minor: float
    degenerate: bool


def principal_axes(points: PointCloud | ArrayLike) -> PrincipalAxes:
    raw = points.points if isinstance(points, PointCloud) else np.asarray(points, dtype=np.float64)
    pts = np.asarray(raw, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise DegenerateGeometryError(f"Expected planar points, got shape {pts.shape}")
    if pts.shape[0] < 2:
        raise DegenerateGeometryError("Aspect ratio needs at least 2 points")
    cov = np.cov(pts[:, :2], rowvar=False)
    minor, major = (float(v) for v in np.linalg.eigvalsh(cov))
    if major <= 0.0:
        raise DegenerateGeometryError("All points are identical")
    return PrincipalAxes(major=major, minor=max(minor, 0.0), degenerate=minor <= 1e-12 * major)


def aspect_ratio(points: PointCloud | ArrayLike) -> float:
    """sqrt(major / minor) of the point covariance; +inf for a collinear cloud."""
    axes = principal_axes(points)
    if axes.degenerate:
        _LOGGER.warning("Aspect ratio undefined for a zero-variance direction; reporting inf")
        return math.inf
    return math.sqrt(axes.major / axes.minor)


@dataclass(frozen=True)
class CHGFeatureVector:
    area: float
    perimeter: float
    circularity: float
    aspect_ratio: float
    volume: float | None = None
    surface_area: float | None = None

    def as_dict(self) -> dict[str, float]:
        out = {
            FEATURE_AREA: self.area,
            FEATURE_PERIMETER: self.perimeter,
            FEATURE_CIRCULARITY: self.circularity,
            FEATURE_ASPECT_RATIO: self.aspect_ratio,
        }
        if self.volume is not None and self.surface_area is not None:
            out[FEATURE_VOLUME] = self.volume
            out[FEATURE_SURFACE_AREA] = self.surface_area
        return out


def chg_features(cloud: PointCloud | ArrayLike) -> CHGFeatureVector:
    """Hull descriptors of a cloud; 3D clouds add volume and surface area.

    Planar descriptors of a 3D cloud are taken on its first two coordinates.
    """
    pts = np.asarray(cloud.points if isinstance(cloud, PointCloud) else cloud, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise DegenerateGeometryError(f"Expected 2D or 3D points, got shape {pts.shape}")
    planar = pts[:, :2]
    hull = quickhull2d(planar)
    area = hull_area(hull)
    perimeter = hull_perimeter(hull)
    volume = surface = None
    if pts.shape[1] == 3:
        hull3 = quickhull3d(pts)
        volume = hull_volume(hull3)
        surface = hull_surface_area(hull3)
    return CHGFeatureVector(
        area=area,
        perimeter=perimeter,
        circularity=circularity(area, perimeter),
        aspect_ratio=aspect_ratio(planar),
        volume=volume,
        surface_area=surface,
    )
