"""Kinematic bicycle integration and rectangle-footprint geometry.

All functions here are pure and operate on either scalars or numpy arrays
(broadcasting), so the forward simulator can batch many rollouts through the
same code path that single-step callers use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "VehicleState",
    "ControlInput",
    "VehicleParams",
    "FootprintRect",
    "step_bicycle",
    "step_bicycle_arrays",
    "footprint_of",
    "rect_distance",
    "rect_corners",
    "rect_distance_arrays",
    "rect_overlap_arrays",
]


@dataclass(frozen=True)
class VehicleState:
    """Pose and speed of one vehicle: footprint-center position (m), heading (rad), speed (m/s)."""

    x: float
    y: float
    theta: float
    v: float


@dataclass(frozen=True)
class ControlInput:
    """Acceleration (m/s^2) and front steering angle (rad)."""

    a: float
    delta: float


@dataclass(frozen=True)
class VehicleParams:
    """Geometry and actuation limits. All fields strictly positive."""

    wheelbase: float = 2.7
    length: float = 4.5
    width: float = 2.0
    a_max: float = 4.0
    delta_max: float = 0.6

    def __post_init__(self):
        for name in ("wheelbase", "length", "width", "a_max", "delta_max"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"VehicleParams.{name} must be > 0")


@dataclass(frozen=True)
class FootprintRect:
    """Rectangle with center pose (x, y, theta) and half dimensions."""

    x: float
    y: float
    theta: float
    half_length: float
    half_width: float

    def __post_init__(self):
        if self.half_length <= 0.0 or self.half_width <= 0.0:
            raise ValueError("half dimensions must be > 0")


def footprint_of(state: VehicleState, params: VehicleParams) -> FootprintRect:
    return FootprintRect(state.x, state.y, state.theta, params.length / 2.0, params.width / 2.0)


def _wrap_angle(theta):
    # no-op (bitwise) while already inside (-pi, pi]
    wrapped = np.where(
        (theta > np.pi) | (theta <= -np.pi),
        theta - 2.0 * np.pi * np.floor((theta + np.pi) / (2.0 * np.pi)),
        theta,
    )
    return np.where(wrapped <= -np.pi, wrapped + 2.0 * np.pi, wrapped)


def _bicycle_rhs(x, y, theta, v, a, delta, wheelbase):
    # speed clamped inside the stages so braking at standstill cannot push the pose backwards
    v_fwd = np.maximum(v, 0.0)
    return (
        v_fwd * np.cos(theta),
        v_fwd * np.sin(theta),
        v_fwd * np.tan(delta) / wheelbase,
        a * np.ones_like(v_fwd),
    )


def step_bicycle_arrays(x, y, theta, v, a, delta, dt, wheelbase):
    """One Kutta third-order step of the bicycle ODE on array (or scalar) state.

    Stages at 0, 1/2, 1 with weights 1/6, 2/3, 1/6. Returns (x, y, theta, v)
    with v clamped at zero and theta wrapped to (-pi, pi].
    """
    k1 = _bicycle_rhs(x, y, theta, v, a, delta, wheelbase)
    k2 = _bicycle_rhs(
        x + 0.5 * dt * k1[0],
        y + 0.5 * dt * k1[1],
        theta + 0.5 * dt * k1[2],
        v + 0.5 * dt * k1[3],
        a, delta, wheelbase,
    )
    k3 = _bicycle_rhs(
        x - dt * k1[0] + 2.0 * dt * k2[0],
        y - dt * k1[1] + 2.0 * dt * k2[1],
        theta - dt * k1[2] + 2.0 * dt * k2[2],
        v - dt * k1[3] + 2.0 * dt * k2[3],
        a, delta, wheelbase,
    )
    sixth = dt / 6.0
    x_n = x + sixth * (k1[0] + 4.0 * k2[0] + k3[0])
    y_n = y + sixth * (k1[1] + 4.0 * k2[1] + k3[1])
    th_n = _wrap_angle(theta + sixth * (k1[2] + 4.0 * k2[2] + k3[2]))
    v_n = np.maximum(v + sixth * (k1[3] + 4.0 * k2[3] + k3[3]), 0.0)
    return x_n, y_n, th_n, v_n


def step_bicycle(state: VehicleState, control: ControlInput, dt: float,
                 params: VehicleParams) -> VehicleState:
    """Advance one vehicle by dt. Inputs are saturated to the actuation limits, never rejected."""
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    a = float(np.clip(control.a, -params.a_max, params.a_max))
    delta = float(np.clip(control.delta, -params.delta_max, params.delta_max))
    x, y, th, v = step_bicycle_arrays(
        np.float64(state.x), np.float64(state.y), np.float64(state.theta), np.float64(state.v),
        np.float64(a), np.float64(delta), np.float64(dt), np.float64(params.wheelbase),
    )
    return VehicleState(float(x), float(y), float(th), float(v))


# --- rectangle geometry -----------------------------------------------------

# perimeter corner order: front-left, front-right, rear-right, rear-left
_CORNER_SIGNS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0], [-1.0, 1.0]])


def rect_corners(x, y, theta, half_length, half_width):
    """Corner coordinates, shape (..., 4, 2), for array or scalar rectangle parameters."""
    x, y, theta = np.asarray(x, float), np.asarray(y, float), np.asarray(theta, float)
    hl, hw = np.asarray(half_length, float), np.asarray(half_width, float)
    c, s = np.cos(theta), np.sin(theta)
    lx = _CORNER_SIGNS[:, 0] * hl[..., None]
    ly = _CORNER_SIGNS[:, 1] * hw[..., None]
    cx = x[..., None] + c[..., None] * lx - s[..., None] * ly
    cy = y[..., None] + s[..., None] * lx + c[..., None] * ly
    return np.stack([cx, cy], axis=-1)


def _relative_frame(ax, ay, ath, bx, by, bth):
    """Pose of rectangle B expressed in A's body frame: center (rx, ry), cos/sin
    of the relative rotation."""
    ca, sa = np.cos(ath), np.sin(ath)
    dx, dy = bx - ax, by - ay
    rx = ca * dx + sa * dy
    ry = -sa * dx + ca * dy
    rel = bth - ath
    return rx, ry, np.cos(rel), np.sin(rel)


def _gaps_in_frame(rx, ry, cr, sr, ahl, ahw, bhl, bhw):
    """Separation gaps of B against the axis-aligned box A along A's two axes."""
    ext_x = bhl * np.abs(cr) + bhw * np.abs(sr)
    ext_y = bhl * np.abs(sr) + bhw * np.abs(cr)
    return np.abs(rx) - (ahl + ext_x), np.abs(ry) - (ahw + ext_y)


def _corner_box_dist2(rx, ry, cr, sr, ahl, ahw, bhl, bhw):
    """Min squared distance from B's corners to the axis-aligned box A (both in A's frame)."""
    best = None
    for su in (1.0, -1.0):
        for sv in (1.0, -1.0):
            px = rx + su * bhl * cr - sv * bhw * sr
            py = ry + su * bhl * sr + sv * bhw * cr
            ox = np.maximum(np.abs(px) - ahl, 0.0)
            oy = np.maximum(np.abs(py) - ahw, 0.0)
            d2 = ox * ox + oy * oy
            best = d2 if best is None else np.minimum(best, d2)
    return best


def rect_overlap_arrays(ax, ay, ath, ahl, ahw, bx, by, bth, bhl, bhw, strict=False):
    """Separating-axis intersection test for batches of rectangle pairs.

    With strict=False touching counts as overlap (matches rect_distance == 0);
    with strict=True only positive-area penetration counts.
    """
    rx, ry, cr, sr = _relative_frame(ax, ay, ath, bx, by, bth)
    gax, gay = _gaps_in_frame(rx, ry, cr, sr, ahl, ahw, bhl, bhw)
    rx2, ry2, cr2, sr2 = _relative_frame(bx, by, bth, ax, ay, ath)
    gbx, gby = _gaps_in_frame(rx2, ry2, cr2, sr2, bhl, bhw, ahl, ahw)
    if strict:
        sep = (gax >= 0.0) | (gay >= 0.0) | (gbx >= 0.0) | (gby >= 0.0)
    else:
        sep = (gax > 0.0) | (gay > 0.0) | (gbx > 0.0) | (gby > 0.0)
    return ~sep


def rect_distance_arrays(ax, ay, ath, ahl, ahw, bx, by, bth, bhl, bhw):
    """Euclidean separation between batches of rectangle pairs; 0 on intersection or touch.

    Exact for rectangles: between disjoint convex polygons the closest features
    are a vertex and an edge (or two vertices), so the minimum over corner-to-box
    distances taken in both body frames is the true separation.
    """
    overlap = rect_overlap_arrays(ax, ay, ath, ahl, ahw, bx, by, bth, bhl, bhw)
    rx, ry, cr, sr = _relative_frame(ax, ay, ath, bx, by, bth)
    d2 = _corner_box_dist2(rx, ry, cr, sr, ahl, ahw, bhl, bhw)
    rx2, ry2, cr2, sr2 = _relative_frame(bx, by, bth, ax, ay, ath)
    d2 = np.minimum(d2, _corner_box_dist2(rx2, ry2, cr2, sr2, bhl, bhw, ahl, ahw))
    return np.where(overlap, 0.0, np.sqrt(d2))


def rect_distance(a: FootprintRect, b: FootprintRect) -> float:
    """Separation distance between two (possibly rotated) rectangles; 0 if they intersect or touch."""
    d = rect_distance_arrays(
        np.float64(a.x), np.float64(a.y), np.float64(a.theta), np.float64(a.half_length), np.float64(a.half_width),
        np.float64(b.x), np.float64(b.y), np.float64(b.theta), np.float64(b.half_length), np.float64(b.half_width),
    )
    return float(d)
