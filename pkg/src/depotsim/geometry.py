"""Planar geometry primitives: poses, convex polygons, footprint intersection tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def normalize_heading(theta: float) -> float:
    """Wrap an angle into [-pi, pi)."""
    t = math.fmod(theta + math.pi, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    return t - math.pi


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "heading", normalize_heading(self.heading))

    def distance_to(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def dist(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def is_convex(vertices: list[tuple[float, float]]) -> bool:
    """True for a convex polygon with at least 3 vertices (either winding, no self-crossing)."""
    n = len(vertices)
    if n < 3:
        return False
    sign = 0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cx, cy = vertices[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(cross) < 1e-12:
            continue
        s = 1 if cross > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return sign != 0


def point_in_convex(point: tuple[float, float], vertices: list[tuple[float, float]]) -> bool:
    """Closed containment test: boundary points count as inside."""
    n = len(vertices)
    px, py = point
    sign = 0
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        if abs(cross) < 1e-9:
            continue
        s = 1 if cross > 0 else -1
        if sign == 0:
            sign = s
        elif s != sign:
            return False
    return True


def _axes(vertices: list[tuple[float, float]]):
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        yield (-(by - ay), bx - ax)


def _project(vertices: list[tuple[float, float]], axis: tuple[float, float]) -> tuple[float, float]:
    dots = [v[0] * axis[0] + v[1] * axis[1] for v in vertices]
    return min(dots), max(dots)


def convex_overlap(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> bool:
    """Strict interior overlap via separating axes; shared edges/vertices do not count."""
    for axis in list(_axes(a)) + list(_axes(b)):
        amin, amax = _project(a, axis)
        bmin, bmax = _project(b, axis)
        if amax <= bmin + 1e-9 or bmax <= amin + 1e-9:
            return False
    return True


def point_segment_distance(p: tuple[float, float], a: tuple[float, float], b: tuple[float, float]) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    seg2 = dx * dx + dy * dy
    if seg2 <= 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg2
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def polyline_length(points: list[tuple[float, float]]) -> float:
    return sum(dist(points[i], points[i + 1]) for i in range(len(points) - 1))


def point_polyline_distance(p: tuple[float, float], points: list[tuple[float, float]]) -> float:
    if len(points) == 1:
        return dist(p, points[0])
    return min(point_segment_distance(p, points[i], points[i + 1]) for i in range(len(points) - 1))


def polyline_point_at(points: list[tuple[float, float]], s: float) -> tuple[float, float, float]:
    """Point and tangent heading at arc length s along a polyline (clamped to the ends)."""
    if s <= 0.0:
        x0, y0 = points[0]
        x1, y1 = points[1] if len(points) > 1 else points[0]
        return x0, y0, math.atan2(y1 - y0, x1 - x0) if len(points) > 1 else 0.0
    acc = 0.0
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        seg = dist(a, b)
        if acc + seg >= s and seg > 0.0:
            t = (s - acc) / seg
            h = math.atan2(b[1] - a[1], b[0] - a[0])
            return a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), h
        acc += seg
    a, b = points[-2] if len(points) > 1 else points[0], points[-1]
    h = math.atan2(b[1] - a[1], b[0] - a[0]) if len(points) > 1 else 0.0
    return points[-1][0], points[-1][1], h


def project_onto_polyline(p: tuple[float, float], points: list[tuple[float, float]]) -> float:
    """Arc length of the closest point on the polyline to p."""
    best_s = 0.0
    best_d = float("inf")
    acc = 0.0
    for i in range(len(points) - 1):
        a, b = points[i], points[i + 1]
        ax, ay = a
        bx, by = b
        dx, dy = bx - ax, by - ay
        seg2 = dx * dx + dy * dy
        seg = math.sqrt(seg2)
        if seg2 > 0.0:
            t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / seg2
            t = max(0.0, min(1.0, t))
            d = math.hypot(p[0] - (ax + t * dx), p[1] - (ay + t * dy))
            if d < best_d - 1e-12:
                best_d = d
                best_s = acc + t * seg
        acc += seg
    return best_s


def rect_corners(cx: float, cy: float, heading: float, length: float, width: float) -> list[tuple[float, float]]:
    """Corners of a pose-aligned rectangle centered at (cx, cy), long axis along heading."""
    ch, sh = math.cos(heading), math.sin(heading)
    hl, hw = length / 2.0, width / 2.0
    out = []
    for dx, dy in ((hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)):
        out.append((cx + dx * ch - dy * sh, cy + dx * sh + dy * ch))
    return out


def point_rect_distance(point: tuple[float, float], cx: float, cy: float,
                        heading: float, length: float, width: float) -> float:
    """Distance from a point to a pose-aligned rectangle (0 inside)."""
    ch, sh = math.cos(heading), math.sin(heading)
    px, py = point[0] - cx, point[1] - cy
    lx = px * ch + py * sh
    ly = -px * sh + py * ch
    qx = min(max(lx, -length / 2.0), length / 2.0)
    qy = min(max(ly, -width / 2.0), width / 2.0)
    return math.hypot(lx - qx, ly - qy)


def circle_rect_intersect(center: tuple[float, float], radius: float,
                          cx: float, cy: float, heading: float,
                          length: float, width: float) -> bool:
    """Closed intersection test between a circle and a pose-aligned rectangle (tangency counts)."""
    return point_rect_distance(center, cx, cy, heading, length, width) <= radius + 1e-12


def rects_intersect(a: list[tuple[float, float]], b: list[tuple[float, float]]) -> bool:
    """Closed intersection for convex quads (touching counts)."""
    for axis in list(_axes(a)) + list(_axes(b)):
        amin, amax = _project(a, axis)
        bmin, bmax = _project(b, axis)
        if amax < bmin - 1e-12 or bmax < amin - 1e-12:
            return False
    return True
