"""Small planar geometry helpers (polylines, polygons, rectangles)."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

Point = tuple[float, float]


@dataclass(frozen=True)
class Polyline:
    points: tuple[Point, ...]

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("polyline needs at least two points")

    @cached_property
    def _arr(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    @cached_property
    def cum(self) -> np.ndarray:
        seg = np.diff(self._arr, axis=0)
        return np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    @cached_property
    def _cum_list(self) -> list[float]:
        return self.cum.tolist()

    def point_at(self, s: float) -> tuple[Point, float]:
        """Position and heading at arc length ``s`` (clamped to the polyline)."""
        cum = self._cum_list
        s = min(max(s, 0.0), cum[-1])
        i = min(max(bisect.bisect_right(cum, s) - 1, 0), len(cum) - 2)
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        seg_len = cum[i + 1] - cum[i]
        u = 0.0 if seg_len == 0 else (s - cum[i]) / seg_len
        return (float(x0 + u * (x1 - x0)), float(y0 + u * (y1 - y0))), math.atan2(y1 - y0, x1 - x0)

    @cached_property
    def _segs(self) -> list[tuple[float, float, float, float, float, float, float]]:
        out = []
        for (x0, y0), (x1, y1), c in zip(self.points, self.points[1:], self.cum.tolist()):
            dx, dy = x1 - x0, y1 - y0
            L2 = max(dx * dx + dy * dy, 1e-12)
            out.append((x0, y0, dx, dy, L2, math.sqrt(L2), c))
        return out

    def project(self, p: Point) -> tuple[float, float]:
        """Arc length of the closest point and signed lateral offset (left positive)."""
        # plain loop: these polylines have a handful of segments, where numpy overhead dominates
        px, py = p
        best = None
        for ax, ay, dx, dy, L2, L, c in self._segs:
            rx, ry = px - ax, py - ay
            u = min(max((rx * dx + ry * dy) / L2, 0.0), 1.0)
            ex, ey = rx - u * dx, ry - u * dy
            d2 = ex * ex + ey * ey
            if best is None or d2 < best[0]:
                best = (d2, c + u * L, dx * ry - dy * rx)
        d2, s, cross = best
        dist = math.sqrt(d2)
        return s, (math.copysign(dist, cross) if dist > 0 else 0.0)

    def segment_crossings(self, a: Point, b: Point) -> list[float]:
        """Arc lengths where the segment ``a-b`` crosses this polyline."""
        out = []
        for i in range(len(self.points) - 1):
            t = _seg_intersect(self.points[i], self.points[i + 1], a, b)
            if t is not None:
                out.append(float(self.cum[i] + t * (self.cum[i + 1] - self.cum[i])))
        return sorted(out)

    def polygon_entries(self, poly: "Polygon", step: float = 0.25) -> list[tuple[float, float]]:
        """(entry, exit) arc-length pairs for the stretches lying inside ``poly``."""
        n = max(2, int(math.ceil(self.length / step)) + 1)
        ss = np.linspace(0.0, self.length, n)
        inside = [poly.contains(self.point_at(s)[0]) for s in ss]
        spans = []
        start = None
        for s, ins in zip(ss, inside):
            if ins and start is None:
                start = s
            elif not ins and start is not None:
                spans.append((float(start), float(s)))
                start = None
        if start is not None:
            spans.append((float(start), float(ss[-1])))
        return spans


def _seg_intersect(p1, p2, p3, p4):
    d1x, d1y = p2[0] - p1[0], p2[1] - p1[1]
    d2x, d2y = p4[0] - p3[0], p4[1] - p3[1]
    den = d1x * d2y - d1y * d2x
    if abs(den) < 1e-12:
        return None
    t = ((p3[0] - p1[0]) * d2y - (p3[1] - p1[1]) * d2x) / den
    u = ((p3[0] - p1[0]) * d1y - (p3[1] - p1[1]) * d1x) / den
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return t
    return None


@dataclass(frozen=True)
class Polygon:
    points: tuple[Point, ...]

    def contains(self, p: Point) -> bool:
        x, y = p
        inside = False
        pts = self.points
        j = len(pts) - 1
        for i in range(len(pts)):
            xi, yi = pts[i]
            xj, yj = pts[j]
            if (yi > y) != (yj > y):
                xc = xi + (y - yi) * (xj - xi) / (yj - yi)
                if x < xc:
                    inside = not inside
            j = i
        return inside

    def distance(self, p: Point) -> float:
        """Euclidean distance from ``p`` to the polygon (0 inside)."""
        if self.contains(p):
            return 0.0
        best = math.inf
        pts = self.points
        for i in range(len(pts)):
            best = min(best, point_segment_distance(p, pts[i], pts[(i + 1) % len(pts)]))
        return best


def point_segment_distance(p: Point, a: Point, b: Point) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    L2 = dx * dx + dy * dy
    if L2 == 0:
        return math.hypot(p[0] - a[0], p[1] - a[1])
    u = max(0.0, min(1.0, ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / L2))
    return math.hypot(p[0] - a[0] - u * dx, p[1] - a[1] - u * dy)


def to_local(origin: Point, heading: float, p: Point) -> tuple[float, float]:
    """Coordinates of ``p`` in the frame at ``origin`` facing ``heading`` (x forward, y left)."""
    dx, dy = p[0] - origin[0], p[1] - origin[1]
    c, s = math.cos(heading), math.sin(heading)
    return dx * c + dy * s, -dx * s + dy * c


def in_area_ahead(origin: Point, heading: float, p: Point, length: float, width: float) -> bool:
    """Is ``p`` inside the rectangle that starts at ``origin`` and extends ``length`` forward?"""
    fx, fy = to_local(origin, heading, p)
    return 0.0 <= fx <= length and abs(fy) <= width / 2


def angle_diff(a: float, b: float) -> float:
    """Signed smallest difference ``a - b`` wrapped to (-pi, pi]."""
    d = (a - b + math.pi) % (2 * math.pi) - math.pi
    return math.pi if d == -math.pi else d
