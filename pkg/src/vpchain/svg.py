"""Deterministic SVG rendering of planar chain trajectories.

Hand-rolled markup so that a fixed seed yields byte-identical files:
every coordinate is printed with a fixed format and element order never
depends on hashing.  Ball outlines are drawn as polygons (a 100-gon for
the round norm), and the current set is filled by clipping those
polygons against each other.
"""

from __future__ import annotations

import math

from .chain import TrajectoryStep, is_unit_ball
from .geometry import BallIntersection, Norm

_CIRCLE_SIDES = 100
_FMT = "{:.4f}"

_FILL = "#9ecae1"
_OUTLINE = "#3182bd"
_POINT = "#d62728"
_BORDER = "#999999"
_REGEN_BORDER = "#d62728"


def _ball_polygon(kind: Norm, cx: float, cy: float, r: float) -> list[tuple[float, float]]:
    if kind is Norm.L2:
        return [(cx + r * math.cos(2 * math.pi * i / _CIRCLE_SIDES),
                 cy + r * math.sin(2 * math.pi * i / _CIRCLE_SIDES))
                for i in range(_CIRCLE_SIDES)]
    if kind is Norm.LINF:
        return [(cx - r, cy - r), (cx + r, cy - r), (cx + r, cy + r), (cx - r, cy + r)]
    return [(cx + r, cy), (cx, cy + r), (cx - r, cy), (cx, cy - r)]


def _clip_convex(subject: list[tuple[float, float]],
                 clip: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Sutherland-Hodgman; clip must be convex and counterclockwise."""
    out = subject
    m = len(clip)
    for i in range(m):
        ax, ay = clip[i]
        bx, by = clip[(i + 1) % m]
        ex, ey = bx - ax, by - ay
        inp = out
        out = []
        if not inp:
            break
        sx, sy = inp[-1]
        s_side = ex * (sy - ay) - ey * (sx - ax)
        for px, py in inp:
            p_side = ex * (py - ay) - ey * (px - ax)
            if p_side >= 0.0:
                if s_side < 0.0:
                    t = s_side / (s_side - p_side)
                    out.append((sx + t * (px - sx), sy + t * (py - sy)))
                out.append((px, py))
            elif s_side >= 0.0:
                t = s_side / (s_side - p_side)
                out.append((sx + t * (px - sx), sy + t * (py - sy)))
            sx, sy, s_side = px, py, p_side
    return out


def _body_polygons(body: BallIntersection) -> list[list[tuple[float, float]]]:
    kind = body.space.kind
    polys = [_ball_polygon(kind, float(b.center[0]), float(b.center[1]), b.radius)
             for b in body.balls]
    if body.box is not None:
        c, hw = body.box.center, body.box.half_width
        polys.append(_ball_polygon(Norm.LINF, float(c[0]), float(c[1]), hw))
    return polys


def _fill_polygon(body: BallIntersection) -> list[tuple[float, float]]:
    polys = _body_polygons(body)
    region = polys[0]
    for p in polys[1:]:
        region = _clip_convex(region, p)
    return region


class _Panel:
    """Maps world coordinates [-lim, lim]^2 onto one grid cell."""

    def __init__(self, ox: float, oy: float, size: float, lim: float):
        self.ox, self.oy, self.size, self.lim = ox, oy, size, lim

    def to_svg(self, x: float, y: float) -> tuple[float, float]:
        s = self.size / (2.0 * self.lim)
        return self.ox + (x + self.lim) * s, self.oy + (self.lim - y) * s

    def points_attr(self, pts: list[tuple[float, float]]) -> str:
        return " ".join(
            _FMT.format(u) + "," + _FMT.format(v)
            for u, v in (self.to_svg(x, y) for x, y in pts))


def render_trajectory_svg(steps: list[TrajectoryStep], tau: float,
                          cols: int = 5, panel_size: int = 180,
                          world_limit: float = 1.05) -> str:
    """One panel per trajectory step: the current set, its balls, the draw."""
    if not steps:
        raise ValueError("nothing to render")
    if steps[0].state.body.space.dim != 2:
        raise ValueError("rendering is planar only")
    n = len(steps)
    rows = (n + cols - 1) // cols
    pad = 6
    label_h = 16
    cell_w = panel_size + pad
    cell_h = panel_size + label_h + pad
    width = cols * cell_w + pad
    height = rows * cell_h + pad
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for idx, st in enumerate(steps):
        r, c = divmod(idx, cols)
        ox = pad + c * cell_w
        oy = pad + r * cell_h + label_h
        panel = _Panel(ox, oy, panel_size, world_limit)
        regen = st.step > 0 and is_unit_ball(st.state)
        out.append(f'<clipPath id="p{idx}"><rect x="{ox}" y="{oy}" '
                   f'width="{panel_size}" height="{panel_size}"/></clipPath>')
        label = f"step {st.step}" + (" (back at start set)" if regen else "")
        out.append(f'<text x="{ox}" y="{oy - 4}" font-family="monospace" '
                   f'font-size="11" fill="#333333">{label}</text>')
        out.append(f'<g clip-path="url(#p{idx})">')
        fill = _fill_polygon(st.state.body)
        if fill:
            out.append(f'<polygon points="{panel.points_attr(fill)}" '
                       f'fill="{_FILL}" fill-opacity="0.55" stroke="none"/>')
        for poly in _body_polygons(st.state.body):
            out.append(f'<polygon points="{panel.points_attr(poly)}" fill="none" '
                       f'stroke="{_OUTLINE}" stroke-width="1"/>')
        if st.u is not None:
            px, py = panel.to_svg(float(st.u[0]), float(st.u[1]))
            out.append(f'<circle cx="{_FMT.format(px)}" cy="{_FMT.format(py)}" '
                       f'r="2.5" fill="{_POINT}"/>')
        out.append('</g>')
        border = _REGEN_BORDER if regen else _BORDER
        bw = 2 if regen else 1
        out.append(f'<rect x="{ox}" y="{oy}" width="{panel_size}" '
                   f'height="{panel_size}" fill="none" stroke="{border}" '
                   f'stroke-width="{bw}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_trajectory_svg(path, steps: list[TrajectoryStep], tau: float,
                         cols: int = 5, panel_size: int = 180) -> None:
    data = render_trajectory_svg(steps, tau, cols=cols, panel_size=panel_size)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(data)
