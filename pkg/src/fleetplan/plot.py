"""Distance-time SVG plots of one vehicle against the intersections on its path."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .interaction import evaluate
from .milp.model import UnknownVehicle

WIDTH, HEIGHT = 720, 420
MARGIN = {"left": 60, "right": 20, "top": 30, "bottom": 45}
COLORS = {"front": "#1f4e9c", "rear": "#6f9bd8", "band": "#b38ad6", "active": "#d62728", "inactive": "#9a9a9a"}


def _sample(traj, per_step: int = 4):
    n = len(traj.x) - 1
    ts = [k * traj.dt / per_step for k in range(n * per_step + 1)]
    return ts, [traj.position_at(t) for t in ts]


def plot_trajectory(scenario, trajectories: dict, vehicle: int, buffer: float = 0.0, title: str | None = None) -> str:
    """SVG of ``vehicle``'s front and rear positions, its intersection bands and the
    other vehicles' occupancy windows mapped onto those bands."""
    if vehicle not in trajectories:
        raise UnknownVehicle(f"vehicle {vehicle} not in result")
    veh = scenario.vehicle(vehicle)
    traj = trajectories[vehicle]
    L = veh.params.length
    crossings = [c if c.vehicles[0] == vehicle else c.swapped() for c in scenario.geometry if vehicle in c.vehicles]

    ts, xs = _sample(traj)
    records = []
    t_max = ts[-1] if ts else 1.0
    for c in crossings:
        n = evaluate(c, trajectories, buffer)
        other = c.vehicles[1]
        occ = n.occupancy_j
        if occ is not None:
            t_max = max(t_max, occ[1] if math.isfinite(occ[1]) else occ[0])
        records.append((c, other, occ, n.active))
    t_max = max(t_max, 1.0)
    x_max = max(veh.x_f, max(xs, default=0.0), 1.0)
    x_min = -L

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(t):
        return MARGIN["left"] + pw * t / t_max

    def sy(x):
        return MARGIN["top"] + ph * (1 - (x - x_min) / (x_max - x_min))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">']
    out.append(f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    label = title or f"vehicle {vehicle}"
    out.append(f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(label)}</text>')
    for c, other, occ, active in records:
        xs0, xe0 = c.interval_i
        lo, hi = xs0, xe0 - L    # physical intersection area in front-position coordinates
        y0, y1 = sy(hi), sy(lo)
        out.append(f'<rect class="band" data-intersection="{escape(str(c.vertex))}" x="{sx(0):.2f}" '
                   f'y="{y0:.2f}" width="{pw:.2f}" height="{y1 - y0:.2f}" fill="{COLORS["band"]}" '
                   f'fill-opacity="0.35"/>')
        if occ is None:
            continue
        t_end = occ[1] if math.isfinite(occ[1]) else t_max
        kind = "active" if active else "inactive"
        out.append(f'<rect class="occupancy {kind}" data-vehicle="{other}" '
                   f'data-intersection="{escape(str(c.vertex))}" x="{sx(occ[0]):.2f}" y="{y0:.2f}" '
                   f'width="{max(sx(t_end) - sx(occ[0]), 0.5):.2f}" height="{y1 - y0:.2f}" '
                   f'fill="{COLORS[kind]}" fill-opacity="0.6"/>')
    for cls, offset in (("front", 0.0), ("rear", L)):
        pts = " ".join(f"{sx(t):.2f},{sy(x - offset):.2f}" for t, x in zip(ts, xs))
        out.append(f'<polyline class="{cls}" points="{pts}" fill="none" stroke="{COLORS[cls]}" stroke-width="1.6"/>')
    x_axis, y_axis = sy(x_min), sx(0)
    out.append(f'<line x1="{y_axis:.2f}" y1="{x_axis:.2f}" x2="{sx(t_max):.2f}" y2="{x_axis:.2f}" stroke="black"/>')
    out.append(f'<line x1="{y_axis:.2f}" y1="{x_axis:.2f}" x2="{y_axis:.2f}" y2="{sy(x_max):.2f}" stroke="black"/>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">time (s)</text>')
    out.append(f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 15 {HEIGHT / 2:.1f})">distance along path (m)</text>')
    for frac in (0.0, 0.5, 1.0):
        t = t_max * frac
        out.append(f'<text x="{sx(t):.2f}" y="{x_axis + 15:.2f}" text-anchor="middle" font-size="10">{t:.0f}</text>')
        x = x_min + (x_max - x_min) * frac
        out.append(f'<text x="{y_axis - 5:.2f}" y="{sy(x) + 3:.2f}" text-anchor="end" font-size="10">{x:.0f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
