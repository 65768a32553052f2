"""Tri-camera rasterizer for the planar world.

Three square uint8 views per tick:
  * ``wrist``: top-down close crop centered on the end effector, aligned to
    the base heading; shows fine manipulation detail (handle, toy, cavity).
  * ``body``: top-down egocentric crop centered on the base, wider extent,
    used mostly for navigation context.
  * ``head``: forward-looking column renderer with real occlusion: per image
    column a single ray finds the nearest obstacle, drawn as a vertical span
    whose height falls off with distance. Torso pitch shifts the horizon.

Rendering is a pure function of (config, state) so identical states always
produce identical pixels.
"""

from __future__ import annotations

import math

import numpy as np

from ..config import WorldConfig
from . import kinematics as kin
from . import sim
from .types import Attachment, ObservationBundle, WorldState

__all__ = ["render_views", "observe", "VIEW_NAMES"]

VIEW_NAMES = ("wrist", "body", "head")

COL_FLOOR = np.array((38, 38, 46), dtype=np.float64)
COL_WALL = np.array((92, 92, 104), dtype=np.float64)
COL_CABINET = np.array((125, 82, 40), dtype=np.float64)
COL_DRAWER = np.array((232, 142, 32), dtype=np.float64)
COL_CAVITY = np.array((70, 46, 26), dtype=np.float64)
COL_HANDLE = np.array((244, 240, 70), dtype=np.float64)
COL_TOY = np.array((222, 44, 44), dtype=np.float64)
COL_BASE = np.array((52, 92, 224), dtype=np.float64)
COL_MARK = np.array((200, 220, 255), dtype=np.float64)
COL_ARM = np.array((84, 200, 124), dtype=np.float64)
COL_EE_OPEN = np.array((235, 235, 235), dtype=np.float64)
COL_EE_CLOSED = np.array((255, 60, 230), dtype=np.float64)
COL_SKY = np.array((18, 20, 30), dtype=np.float64)

HEAD_FOV = 1.25          # rad, horizontal
HEAD_HEIGHTS = {"wall": 1.0, "cabinet": 0.9, "drawer": 0.55, "toy": 0.18}


def _grid(center, yaw: float, extent: float, res: int):
    """World coordinates of each pixel for a top-down egocentric crop."""
    px = extent / res
    idx = (np.arange(res) + 0.5 - res / 2.0) * px
    fwd = idx[::-1][:, None]     # image rows: top of image = forward
    lat = idx[None, :]           # image cols: right of image = base right
    c, s = math.cos(yaw), math.sin(yaw)
    wx = center[0] + c * fwd + s * lat
    wy = center[1] + s * fwd - c * lat
    return wx, wy


def _paint_disc(img, wx, wy, cx, cy, r, color):
    m = (wx - cx) ** 2 + (wy - cy) ** 2 <= r * r
    img[m] = color


def _paint_rect(img, wx, wy, cx, cy, hx, hy, color):
    m = (np.abs(wx - cx) <= hx) & (np.abs(wy - cy) <= hy)
    img[m] = color


def _paint_segment(img, wx, wy, a, b, width, color):
    abx, aby = b[0] - a[0], b[1] - a[1]
    denom = abx * abx + aby * aby
    if denom < 1e-12:
        _paint_disc(img, wx, wy, a[0], a[1], width, color)
        return
    t = ((wx - a[0]) * abx + (wy - a[1]) * aby) / denom
    t = np.clip(t, 0.0, 1.0)
    dx = wx - (a[0] + t * abx)
    dy = wy - (a[1] + t * aby)
    img[dx * dx + dy * dy <= width * width] = color


def _toy_visible(cfg: WorldConfig, state: WorldState) -> bool:
    if state.attachment != Attachment.IN_DRAWER:
        return True
    cab_front = cfg.scene.cabinet_cy - cfg.scene.cabinet_hy
    return state.toy_y <= cab_front - 0.02


def _paint_scene_topdown(cfg: WorldConfig, state: WorldState, img, wx, wy) -> None:
    sc = cfg.scene
    img[:] = COL_FLOOR
    outside = (wx < 0) | (wx > sc.room_w) | (wy < 0) | (wy > sc.room_h)
    img[outside] = COL_WALL
    # drawer box (sticking out of the cabinet front), open cavity, handle
    front = sim.drawer_front_y(cfg, state.drawer_fraction)
    cab_front = sc.cabinet_cy - sc.cabinet_hy
    box_cy = (front + cab_front + 0.1) / 2.0
    box_hy = (cab_front + 0.1 - front) / 2.0
    _paint_rect(img, wx, wy, sc.cabinet_cx, box_cy, sc.drawer_w / 2.0, box_hy, COL_DRAWER)
    if state.drawer_fraction > 0.06:
        cav_cy = (front + 0.02 + cab_front) / 2.0
        cav_hy = (cab_front - front - 0.02) / 2.0
        _paint_rect(img, wx, wy, sc.cabinet_cx, cav_cy, sc.drawer_w / 2.0 - 0.02,
                    cav_hy, COL_CAVITY)
    hx, hy = sim.handle_position(cfg, state.drawer_fraction)
    _paint_disc(img, wx, wy, hx, hy, 0.028, COL_HANDLE)
    _paint_rect(img, wx, wy, sc.cabinet_cx, sc.cabinet_cy, sc.cabinet_hx,
                sc.cabinet_hy, COL_CABINET)
    if _toy_visible(cfg, state):
        _paint_disc(img, wx, wy, state.toy_x, state.toy_y, sc.toy_radius, COL_TOY)
    # base disc with heading marker, then the arm on top
    _paint_disc(img, wx, wy, state.x, state.y, sc.base_radius, COL_BASE)
    c, s = math.cos(state.yaw), math.sin(state.yaw)
    mark_r = 0.05 + 0.05 * ((state.height - cfg.limits.height_min)
                            / max(1e-9, cfg.limits.height_max - cfg.limits.height_min))
    _paint_disc(img, wx, wy, state.x + c * sc.base_radius * 0.6,
                state.y + s * sc.base_radius * 0.6, mark_r, COL_MARK)
    mount = kin.mount_offset(cfg.arm, cfg.limits, state.pitch, state.height)
    shoulder = kin.base_to_world(state.x, state.y, state.yaw, mount, 0.0)
    ex_b = mount + cfg.arm.l1 * math.cos(state.q1)
    ey_b = cfg.arm.l1 * math.sin(state.q1)
    elbow = kin.base_to_world(state.x, state.y, state.yaw, ex_b, ey_b)
    ee = kin.ee_world(cfg.arm, cfg.limits, state.x, state.y, state.yaw,
                      state.pitch, state.height, state.q1, state.q2)
    _paint_segment(img, wx, wy, shoulder, elbow, 0.022, COL_ARM)
    _paint_segment(img, wx, wy, elbow, ee, 0.018, COL_ARM)
    _paint_disc(img, wx, wy, ee[0], ee[1], 0.03,
                COL_EE_CLOSED if state.gripper_closed else COL_EE_OPEN)


def _ray_aabb(ox, oy, dx, dy, cx, cy, hx, hy):
    """Vectorized ray vs axis-aligned box; returns entry distance or inf."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_x = 1.0 / dx
        inv_y = 1.0 / dy
        t1 = (cx - hx - ox) * inv_x
        t2 = (cx + hx - ox) * inv_x
        t3 = (cy - hy - oy) * inv_y
        t4 = (cy + hy - oy) * inv_y
    txmin, txmax = np.minimum(t1, t2), np.maximum(t1, t2)
    tymin, tymax = np.minimum(t3, t4), np.maximum(t3, t4)
    # handle rays parallel to an axis
    txmin = np.where(np.isnan(txmin), -np.inf, txmin)
    txmax = np.where(np.isnan(txmax), np.inf, txmax)
    tymin = np.where(np.isnan(tymin), -np.inf, tymin)
    tymax = np.where(np.isnan(tymax), np.inf, tymax)
    tmin = np.maximum(txmin, tymin)
    tmax = np.minimum(txmax, tymax)
    hit = (tmax >= tmin) & (tmax > 0.0)
    t = np.where(tmin > 0.0, tmin, tmax)
    return np.where(hit & (t > 0.0), t, np.inf)


def _ray_disc(ox, oy, dx, dy, cx, cy, r):
    fx, fy = cx - ox, cy - oy
    b = fx * dx + fy * dy
    px = ox + b * dx - cx
    py = oy + b * dy - cy
    h2 = px * px + py * py
    inside = (b > 0.0) & (h2 <= r * r)
    t = b - np.sqrt(np.maximum(r * r - h2, 0.0))
    return np.where(inside & (t > 0.0), t, np.inf)


def _ray_walls(ox, oy, dx, dy, w, h):
    ts = []
    with np.errstate(divide="ignore"):
        for bound, o, d in ((0.0, ox, dx), (w, ox, dx), (0.0, oy, dy), (h, oy, dy)):
            t = (bound - o) / d
            ts.append(np.where(t > 0.0, t, np.inf))
    return np.minimum.reduce(ts)


def _render_head(cfg: WorldConfig, state: WorldState, res: int):
    sc = cfg.scene
    angles = state.yaw + np.linspace(HEAD_FOV / 2.0, -HEAD_FOV / 2.0, res)
    dx, dy = np.cos(angles), np.sin(angles)
    ox = np.full(res, state.x)
    oy = np.full(res, state.y)

    front = sim.drawer_front_y(cfg, state.drawer_fraction)
    cab_front = sc.cabinet_cy - sc.cabinet_hy
    box_cy = (front + cab_front) / 2.0
    box_hy = max(1e-6, (cab_front - front) / 2.0)

    t_wall = _ray_walls(ox, oy, dx, dy, sc.room_w, sc.room_h)
    t_cab = _ray_aabb(ox, oy, dx, dy, sc.cabinet_cx, sc.cabinet_cy,
                      sc.cabinet_hx, sc.cabinet_hy)
    if state.drawer_fraction > 0.02:
        t_drw = _ray_aabb(ox, oy, dx, dy, sc.cabinet_cx, box_cy,
                          sc.drawer_w / 2.0, box_hy)
    else:
        t_drw = np.full(res, np.inf)
    if state.attachment == Attachment.FREE:
        t_toy = _ray_disc(ox, oy, dx, dy, state.toy_x, state.toy_y, sc.toy_radius * 2.0)
    else:
        t_toy = np.full(res, np.inf)

    ts = np.stack([t_wall, t_cab, t_drw, t_toy])
    heights = np.array([HEAD_HEIGHTS["wall"], HEAD_HEIGHTS["cabinet"],
                        HEAD_HEIGHTS["drawer"], HEAD_HEIGHTS["toy"]])
    colors = np.stack([COL_WALL, COL_CABINET, COL_DRAWER, COL_TOY])
    nearest = np.argmin(ts, axis=0)
    t_hit = ts[nearest, np.arange(res)]
    t_hit = np.where(np.isfinite(t_hit), t_hit, 100.0)

    horizon = res / 2.0 - state.pitch * res * 0.45
    cam_h = state.height
    half_px = np.clip(heights[nearest] * res * 0.22 / np.maximum(t_hit, 0.15),
                      1.0, res * 0.48) * (0.55 / max(cam_h, 0.05)) ** 0.25
    shade = 1.0 / (1.0 + 0.30 * t_hit)
    col = colors[nearest] * shade[:, None]

    rows = np.arange(res, dtype=np.float64)[:, None]
    img = np.where(rows < horizon, COL_SKY[None, None, :], COL_FLOOR[None, None, :] * 1.25)
    img = np.broadcast_to(img, (res, res, 3)).copy()
    span = np.abs(rows - horizon) <= half_px[None, :]
    img[span] = np.broadcast_to(col[None, :, :], (res, res, 3))[span]
    return img


def render_views(cfg: WorldConfig, state: WorldState) -> dict:
    """Render the three camera views; dict of (raster, raster, 3) uint8."""
    res = cfg.raster
    ee = kin.ee_world(cfg.arm, cfg.limits, state.x, state.y, state.yaw,
                      state.pitch, state.height, state.q1, state.q2)
    views = {}
    for name, center, extent in (("wrist", ee, 0.7), ("body", (state.x, state.y), 3.0)):
        img = np.empty((res, res, 3), dtype=np.float64)
        wx, wy = _grid(center, state.yaw, extent, res)
        _paint_scene_topdown(cfg, state, img, wx, wy)
        views[name] = np.clip(img, 0, 255).astype(np.uint8)
    views["head"] = np.clip(_render_head(cfg, state, res), 0, 255).astype(np.uint8)
    return views


def observe(cfg: WorldConfig, state: WorldState, instruction: str) -> ObservationBundle:
    """Bundle the policy-visible observation at the current step."""
    return ObservationBundle(
        views=render_views(cfg, state),
        proprio=sim.proprio_vector(cfg, state),
        instruction=instruction,
        sim_time=state.sim_time,
    )
