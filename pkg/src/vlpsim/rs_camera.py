"""Rolling-shutter CMOS image synthesis.

Rows are exposed sequentially, one every ``t_row`` seconds, each for
``t_exp`` seconds.  A blinking lamp therefore paints horizontal stripes:
every covered pixel in image row v carries the lamp waveform averaged over
that row's exposure window.  The integral is exact (the waveform is
piecewise constant) via a piecewise-linear cumulative-integral lookup, so
rows straddling a chip boundary come out as proportional gray.

Lamps are filled as convex polygons from 64 projected rim samples; there is
no lens PSF, distortion, or motion blur.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import rotation_rpy
from .occ_link import FRAME_CHIPS, frame_chips

RIM_SAMPLES = 64


@dataclass(frozen=True)
class CameraIntrinsics:
    focal_px: float = 320.0
    cx: float = 319.5
    cy: float = 239.5
    width: int = 640
    height: int = 480
    t_row: float = 50e-6   # s per row readout
    t_exp: float = 50e-6   # s per-row exposure

    def __post_init__(self):
        if self.focal_px <= 0:
            raise ValueError("focal_px must be positive")
        if self.t_row <= 0 or self.t_exp <= 0:
            raise ValueError("row and exposure times must be positive")
        if self.t_exp > self.height * self.t_row:
            raise ValueError("t_exp cannot exceed the frame readout time")


@dataclass(frozen=True)
class RsFrame:
    pixels: np.ndarray          # (height, width) float in [0, 1]
    t_start: float              # exposure start of row 0
    camera_pose: object         # Pose snapshot
    intrinsics: CameraIntrinsics
    ambient_level: float = 0.0
    noise_sigma: float = 0.0


def project_point(camera_pose, K: CameraIntrinsics, p_world) -> tuple[float, float] | None:
    """Pinhole projection; the camera looks along its +z axis.

    Returns (u, v) in pixels, or None when the point is at or behind the
    camera plane.
    """
    R = rotation_rpy(*camera_pose.rpy)
    d = R.T @ (np.asarray(p_world, dtype=float) - np.asarray(camera_pose.position))
    if d[2] <= 0:
        return None
    return (K.cx + K.focal_px * d[0] / d[2], K.cy + K.focal_px * d[1] / d[2])


def _cumulative_waveform(uid: int, chip_rate: float, t_lo: float, t_hi: float):
    """Breakpoints and cumulative integral of the beacon waveform on [t_lo, t_hi]."""
    c = 1.0 / chip_rate
    k0 = math.floor(t_lo / c)
    k1 = math.ceil(t_hi / c) + 1
    ks = np.arange(k0, k1 + 1)
    pattern = np.asarray(frame_chips(uid), dtype=float)
    values = pattern[ks[:-1] % FRAME_CHIPS]
    bps = ks * c
    cum = np.concatenate(([0.0], np.cumsum(values * c)))
    return bps, cum


def row_exposure_fraction(lamp, row: int, t_start: float, t_row: float, t_exp: float) -> float:
    """Mean on-fraction of a lamp over one row's exposure window, computed exactly."""
    t0 = t_start + row * t_row
    bps, cum = _cumulative_waveform(lamp.uid, lamp.chip_rate, t0, t0 + t_exp)
    a, b = np.interp([t0, t0 + t_exp], bps, cum)
    return float((b - a) / t_exp)


def _row_fractions(lamp, rows: np.ndarray, t_start: float, t_row: float, t_exp: float) -> np.ndarray:
    t0 = t_start + rows * t_row
    bps, cum = _cumulative_waveform(
        lamp.uid, lamp.chip_rate, float(t0.min()), float(t0.max()) + t_exp
    )
    return (np.interp(t0 + t_exp, bps, cum) - np.interp(t0, bps, cum)) / t_exp


def _rim_points(lamp) -> np.ndarray:
    """World-space boundary samples of the lamp face, ordered around the rim."""
    cx, cy, cz = lamp.center
    shape = lamp.shape
    if hasattr(shape, "diameter"):
        a = np.linspace(0.0, 2.0 * math.pi, RIM_SAMPLES, endpoint=False)
        r = shape.diameter / 2.0
        return np.column_stack(
            (cx + r * np.cos(a), cy + r * np.sin(a), np.full(RIM_SAMPLES, cz))
        )
    h = shape.side / 2.0
    corners = [(-h, -h), (h, -h), (h, h), (-h, h)]
    pts = []
    per_edge = RIM_SAMPLES // 4
    for (x0, y0), (x1, y1) in zip(corners, corners[1:] + corners[:1]):
        for i in range(per_edge):
            f = i / per_edge
            pts.append((cx + x0 + f * (x1 - x0), cy + y0 + f * (y1 - y0), cz))
    return np.asarray(pts)


def _scanline_bounds(poly: np.ndarray, v: float) -> tuple[float, float] | None:
    """Horizontal extent of an ordered convex polygon at scanline y = v."""
    xs = []
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if y0 == y1:
            continue
        if (y0 - v) * (y1 - v) <= 0:
            xs.append(x0 + (v - y0) * (x1 - x0) / (y1 - y0))
    if len(xs) < 2:
        return None
    return min(xs), max(xs)


def render_frame(scenario, agent, t_start: float, rng=None) -> RsFrame:
    """Synthesize one rolling-shutter frame for an agent.

    Deterministic given (scenario, agent, t_start, rng state); pixel noise is
    drawn as one (H, W) block so the result does not depend on lamp order.
    """
    K = agent.camera
    H, W = K.height, K.width
    img = np.full((H, W), scenario.ambient_level, dtype=float)
    for lamp in scenario.lamps:
        pts = [project_point(agent.pose, K, p) for p in _rim_points(lamp)]
        poly = np.array([p for p in pts if p is not None])
        if len(poly) < 3:
            continue
        v_lo = max(0, math.ceil(poly[:, 1].min()))
        v_hi = min(H - 1, math.floor(poly[:, 1].max()))
        if v_hi < v_lo or poly[:, 0].max() < 0 or poly[:, 0].min() > W - 1:
            continue
        rows = np.arange(v_lo, v_hi + 1)
        fracs = _row_fractions(lamp, rows, t_start, K.t_row, K.t_exp)
        for v, frac in zip(rows, fracs):
            bounds = _scanline_bounds(poly, float(v))
            if bounds is None:
                continue
            u0 = max(0, math.ceil(bounds[0]))
            u1 = min(W - 1, math.floor(bounds[1]))
            if u1 >= u0:
                img[v, u0:u1 + 1] += lamp.radiance * frac
    if scenario.pixel_noise_sigma > 0:
        if rng is None:
            rng = np.random.default_rng(scenario.rng_seed)
        img += rng.normal(0.0, scenario.pixel_noise_sigma, size=(H, W))
    np.clip(img, 0.0, 1.0, out=img)
    return RsFrame(
        pixels=img,
        t_start=t_start,
        camera_pose=agent.pose,
        intrinsics=K,
        ambient_level=scenario.ambient_level,
        noise_sigma=scenario.pixel_noise_sigma,
    )


def write_pgm(frame: RsFrame, path: str | Path) -> None:
    """Binary PGM (P5, maxval 255, row-major)."""
    data = np.round(frame.pixels * 255.0).astype(np.uint8)
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a binary PGM back to float intensities in [0, 1]."""
    raw = Path(path).read_bytes()
    m = re.match(rb"P5\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s", raw)
    if m is None:
        raise ValueError(f"{path}: not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    data = np.frombuffer(raw[m.end():m.end() + w * h], dtype=np.uint8)
    if data.size != w * h:
        raise ValueError(f"{path}: truncated pixel data")
    return data.reshape(h, w).astype(float) / 255.0
