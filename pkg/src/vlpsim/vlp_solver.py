"""Geometric positioning from decoded lamp observations.

Three schemes cover the usual sighting conditions:

- one lamp with full attitude: intersect the lamp ray with a known camera
  height, or range from the lamp's apparent size (the scale route uses only
  the ratio of image diameter to focal length, both in this device's pixels,
  so nothing about the transmitter hardware enters);
- two lamps with gravity-referenced roll/pitch: solve the two ray lengths
  from the lamp baseline, recover yaw from the horizontal direction between
  lamps, intersect;
- three or more lamps: Gauss-Newton over all six pose parameters, anchored
  to the lowest-UID lamp as the reference for the relative-to-absolute
  conversion.

All solvers return a PositionFix carrying the scheme tag, reprojection
residual, and the reference UID used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import normalize_angle, rot_x, rot_y, rot_z, rotation_rpy, unit
from .rs_camera import CameraIntrinsics, project_point
from .scene import Pose

SCHEME_SINGLE = "single_led"
SCHEME_DOUBLE = "double_led"
SCHEME_MULTI = "multi_led"

MIN_RAY_Z = 0.05          # rays flatter than this are unusable (lamp near horizon)
MIN_PAIR_SEPARATION = 10.0  # px
GN_MAX_ITERS = 50
GN_STEP_TOL = 1e-9
GN_RESIDUAL_LIMIT = 5.0   # px RMS
GN_JACOBIAN_STEP = 1e-6


class DegenerateGeometry(Exception):
    """Observation geometry cannot support the requested scheme."""


class MissingYaw(Exception):
    """Single-lamp scheme needs a trusted yaw and none is available."""


class NoConvergence(Exception):
    """Iterative refinement failed to reach an acceptable residual."""


class NoFix(Exception):
    """Every applicable scheme failed for this observation set."""


@dataclass(frozen=True)
class LedObservation:
    uid: int
    centroid_px: tuple[float, float]
    equiv_diameter_px: float
    world: tuple[float, float, float]
    physical_diameter_m: float

    def __post_init__(self):
        if self.equiv_diameter_px <= 0:
            raise ValueError("equiv_diameter_px must be positive")
        if self.world[2] <= 0:
            raise ValueError("lamp height must be positive")


@dataclass(frozen=True)
class ImuReading:
    roll: float
    pitch: float
    yaw: float
    yaw_trusted: bool = True


@dataclass(frozen=True)
class PositionFix:
    agent_id: str
    timestamp_s: float
    position: tuple[float, float, float]
    yaw: float
    scheme: str
    residual_px: float
    n_leds: int
    ref_uid: int | None = None


def back_project(K: CameraIntrinsics, attitude: tuple[float, float, float],
                 pixel: tuple[float, float]) -> np.ndarray:
    """Unit world-frame ray through a pixel for a camera at this attitude."""
    ray_cam = unit(np.array([
        (pixel[0] - K.cx) / K.focal_px,
        (pixel[1] - K.cy) / K.focal_px,
        1.0,
    ]))
    return rotation_rpy(*attitude) @ ray_cam


def _reprojection_rms(position, attitude, K, observations) -> float:
    pose = Pose(tuple(position), tuple(attitude))
    total = 0.0
    for obs in observations:
        uv = project_point(pose, K, obs.world)
        if uv is None:
            return float("inf")
        du = uv[0] - obs.centroid_px[0]
        dv = uv[1] - obs.centroid_px[1]
        total += du * du + dv * dv
    return math.sqrt(total / len(observations))


def solve_single_led(obs: LedObservation, imu: ImuReading, K: CameraIntrinsics,
                     known_height: float | None = None) -> PositionFix:
    """Position from one lamp plus full attitude.

    With a known camera height the ray length follows from the height gap;
    otherwise range comes from apparent size: lamp distance =
    focal_px * physical_diameter / image_diameter, corrected for the
    foreshortening between the ray and the optical axis.
    """
    if not imu.yaw_trusted:
        raise MissingYaw("single-lamp scheme needs a trusted yaw")
    attitude = (imu.roll, imu.pitch, imu.yaw)
    d = back_project(K, attitude, obs.centroid_px)
    if d[2] <= MIN_RAY_Z:
        raise DegenerateGeometry("lamp ray too flat for a height solution")
    if known_height is not None:
        lam = (obs.world[2] - known_height) / d[2]
    else:
        axis_world = rotation_rpy(*attitude) @ np.array([0.0, 0.0, 1.0])
        cos_off = float(np.dot(d, axis_world))
        if cos_off <= MIN_RAY_Z:
            raise DegenerateGeometry("lamp too far off the optical axis")
        depth = K.focal_px * obs.physical_diameter_m / obs.equiv_diameter_px
        lam = depth / cos_off
    if lam <= 0:
        raise DegenerateGeometry("lamp not in front of the camera")
    position = np.asarray(obs.world) - lam * d
    residual = _reprojection_rms(position, attitude, K, [obs])
    return PositionFix(
        agent_id="", timestamp_s=0.0, position=tuple(position),
        yaw=imu.yaw, scheme=SCHEME_SINGLE, residual_px=residual,
        n_leds=1, ref_uid=obs.uid,
    )


def _ray_lengths_from_baseline(a: np.ndarray, b: np.ndarray,
                               delta: np.ndarray) -> list[tuple[float, float]]:
    """Solve |l2*b - l1*a| = |delta| with the vertical component pinned.

    a, b are de-tilted unit rays, delta the world lamp baseline.  Vertical:
    l2*b_z - l1*a_z = delta_z gives l2 = alpha + beta*l1; the horizontal
    norm equation is then a quadratic in l1.
    """
    alpha = delta[2] / b[2]
    beta = a[2] / b[2]
    g = alpha * b[:2]
    h = beta * b[:2] - a[:2]
    q2 = float(h @ h)
    q1 = 2.0 * float(g @ h)
    q0 = float(g @ g) - float(delta[:2] @ delta[:2])
    sols = []
    if q2 < 1e-12:
        if abs(q1) > 1e-12:
            sols.append(-q0 / q1)
    else:
        disc = q1 * q1 - 4.0 * q2 * q0
        if disc >= 0:
            root = math.sqrt(disc)
            sols.extend(((-q1 - root) / (2 * q2), (-q1 + root) / (2 * q2)))
    out = []
    for l1 in sols:
        l2 = alpha + beta * l1
        if l1 > 1e-9 and l2 > 1e-9:
            out.append((l1, l2))
    return out


def _intersect_rays(anchors, directions, known_height=None) -> np.ndarray:
    """Least-squares point closest to all rays (anchor + t * direction)."""
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for p, d in zip(anchors, directions):
        proj = np.eye(3) - np.outer(d, d)
        A += proj
        b += proj @ np.asarray(p, dtype=float)
    if known_height is not None:
        ez = np.array([0.0, 0.0, 1.0])
        A += np.outer(ez, ez)
        b += ez * known_height
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise DegenerateGeometry("rays are parallel") from None


def solve_double_led(observations: list[LedObservation], imu: ImuReading,
                     K: CameraIntrinsics,
                     known_height: float | None = None) -> PositionFix:
    """Position and yaw from two lamps plus gravity-referenced roll/pitch."""
    if len(observations) != 2:
        raise ValueError("double-lamp scheme needs exactly 2 observations")
    o1, o2 = observations
    if o1.uid == o2.uid:
        raise ValueError("double-lamp scheme needs distinct uids")
    sep = math.dist(o1.centroid_px, o2.centroid_px)
    if sep < MIN_PAIR_SEPARATION:
        raise DegenerateGeometry(f"lamps only {sep:.1f} px apart")
    detilt = rot_y(imu.pitch) @ rot_x(imu.roll)
    rays = []
    for o in (o1, o2):
        r = detilt @ unit(np.array([
            (o.centroid_px[0] - K.cx) / K.focal_px,
            (o.centroid_px[1] - K.cy) / K.focal_px,
            1.0,
        ]))
        if r[2] <= MIN_RAY_Z:
            raise DegenerateGeometry("lamp ray too flat")
        rays.append(r)
    a, b = rays
    delta = np.asarray(o2.world) - np.asarray(o1.world)
    if float(delta[:2] @ delta[:2]) < 1e-12:
        raise DegenerateGeometry("lamps are vertically stacked")
    best = None
    for l1, l2 in _ray_lengths_from_baseline(a, b, delta):
        v = l2 * b - l1 * a
        if float(v[:2] @ v[:2]) < 1e-12:
            continue
        yaw = normalize_angle(
            math.atan2(delta[1], delta[0]) - math.atan2(v[1], v[0])
        )
        Rz = rot_z(yaw)
        d1, d2 = Rz @ a, Rz @ b
        position = _intersect_rays(
            [o1.world, o2.world], [-d1, -d2], known_height
        )
        attitude = (imu.roll, imu.pitch, yaw)
        residual = _reprojection_rms(position, attitude, K, observations)
        if best is None or residual < best[0]:
            best = (residual, position, yaw)
    if best is None:
        raise DegenerateGeometry("no consistent ray-length solution")
    residual, position, yaw = best
    return PositionFix(
        agent_id="", timestamp_s=0.0, position=tuple(position),
        yaw=yaw, scheme=SCHEME_DOUBLE, residual_px=residual,
        n_leds=2, ref_uid=min(o1.uid, o2.uid),
    )


def _residual_vector(params, K, observations, anchor) -> np.ndarray:
    pose = Pose(
        (anchor[0] + params[0], anchor[1] + params[1], anchor[2] + params[2]),
        (params[3], params[4], params[5]),
    )
    out = np.empty(2 * len(observations))
    for i, obs in enumerate(observations):
        uv = project_point(pose, K, obs.world)
        if uv is None:
            out[2 * i:2 * i + 2] = 1e6
            continue
        out[2 * i] = uv[0] - obs.centroid_px[0]
        out[2 * i + 1] = uv[1] - obs.centroid_px[1]
    return out


def gauss_newton_reprojection(K: CameraIntrinsics, observations,
                              initial: np.ndarray, anchor,
                              max_iters: int = GN_MAX_ITERS,
                              step_tol: float = GN_STEP_TOL,
                              jac_step: float = GN_JACOBIAN_STEP,
                              ) -> tuple[np.ndarray, list[float]]:
    """Gauss-Newton with central-difference Jacobian and step halving.

    Returns the final parameter vector (position relative to the anchor,
    then roll/pitch/yaw) and the RMS residual after every accepted step;
    the history is non-increasing by construction of the line search.
    """
    params = np.asarray(initial, dtype=float).copy()
    n = len(observations)

    def rms(r):
        return math.sqrt(float(r @ r) / n)

    r = _residual_vector(params, K, observations, anchor)
    history = [rms(r)]
    for _ in range(max_iters):
        J = np.empty((len(r), 6))
        for j in range(6):
            bumped = params.copy()
            bumped[j] += jac_step
            hi = _residual_vector(bumped, K, observations, anchor)
            bumped[j] -= 2 * jac_step
            lo = _residual_vector(bumped, K, observations, anchor)
            J[:, j] = (hi - lo) / (2 * jac_step)
        try:
            step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        cost0 = float(r @ r)
        accepted = False
        for _ in range(10):
            trial = params + scale * step
            r_trial = _residual_vector(trial, K, observations, anchor)
            if float(r_trial @ r_trial) <= cost0:
                params, r = trial, r_trial
                history.append(rms(r))
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break
        if float(np.linalg.norm(scale * step)) < step_tol:
            break
    return params, history


def solve_multi_led(observations: list[LedObservation], K: CameraIntrinsics,
                    initial_guess: Pose | None = None,
                    return_history: bool = False):
    """Full 6-DoF pose from three or more lamps by reprojection minimization.

    The lowest-UID observation anchors the solve: positions are optimized
    relative to its surveyed location and converted back at the end.
    """
    if len(observations) < 3:
        raise ValueError("multi-lamp scheme needs at least 3 observations")
    worlds = np.array([o.world for o in observations])
    centered = worlds - worlds.mean(axis=0)
    if np.linalg.svd(centered, compute_uv=False)[1] < 1e-9:
        raise DegenerateGeometry("lamp positions are collinear")
    ref = min(observations, key=lambda o: o.uid)
    anchor = np.asarray(ref.world, dtype=float)

    if initial_guess is not None:
        init = np.array([
            initial_guess.position[0] - anchor[0],
            initial_guess.position[1] - anchor[1],
            initial_guess.position[2] - anchor[2],
            *initial_guess.rpy,
        ])
    else:
        init = None
        pairs = [
            (math.dist(a.centroid_px, b.centroid_px), i, j)
            for i, a in enumerate(observations)
            for j, b in enumerate(observations[i + 1:], start=i + 1)
        ]
        _, i, j = max(pairs)
        try:
            seed = solve_double_led(
                [observations[i], observations[j]],
                ImuReading(0.0, 0.0, 0.0, yaw_trusted=False), K,
            )
            init = np.array([
                seed.position[0] - anchor[0],
                seed.position[1] - anchor[1],
                seed.position[2] - anchor[2],
                0.0, 0.0, seed.yaw,
            ])
        except (DegenerateGeometry, ValueError):
            pass
        if init is None:
            centroid = worlds.mean(axis=0)
            init = np.array([
                centroid[0] - anchor[0], centroid[1] - anchor[1],
                1.0 - anchor[2], 0.0, 0.0, 0.0,
            ])

    params, history = gauss_newton_reprojection(K, observations, init, anchor)
    residual = history[-1]
    if residual > GN_RESIDUAL_LIMIT:
        raise NoConvergence(f"residual {residual:.2f} px after refinement")
    fix = PositionFix(
        agent_id="", timestamp_s=0.0,
        position=(anchor[0] + params[0], anchor[1] + params[1],
                  anchor[2] + params[2]),
        yaw=normalize_angle(params[5]), scheme=SCHEME_MULTI,
        residual_px=residual, n_leds=len(observations), ref_uid=ref.uid,
    )
    if return_history:
        return fix, history
    return fix


def select_scheme(observations: list[LedObservation], imu: ImuReading,
                  K: CameraIntrinsics,
                  known_height: float | None = None) -> PositionFix:
    """Dispatch to the best scheme the observations allow, with fallback.

    Three or more lamps go to the multi-lamp solver, two to the double-lamp
    solver, one to the single-lamp solver; a degenerate or non-converging
    preferred scheme falls back to the next one down on a subset.
    """
    seen: dict[int, LedObservation] = {}
    for obs in observations:
        seen.setdefault(obs.uid, obs)
    obs_list = list(seen.values())
    if not obs_list:
        raise NoFix("no decoded observations")
    failures: list[str] = []

    if len(obs_list) >= 3:
        try:
            return solve_multi_led(obs_list, K)
        except (DegenerateGeometry, NoConvergence) as e:
            failures.append(f"multi: {e}")
    if len(obs_list) >= 2:
        pairs = [
            (math.dist(a.centroid_px, b.centroid_px), i, j)
            for i, a in enumerate(obs_list)
            for j, b in enumerate(obs_list[i + 1:], start=i + 1)
        ]
        _, i, j = max(pairs)
        try:
            return solve_double_led([obs_list[i], obs_list[j]], imu, K,
                                    known_height)
        except (DegenerateGeometry, ValueError) as e:
            failures.append(f"double: {e}")
    best_single = max(obs_list, key=lambda o: (o.equiv_diameter_px, -o.uid))
    try:
        return solve_single_led(best_single, imu, K, known_height)
    except (DegenerateGeometry, MissingYaw) as e:
        failures.append(f"single: {e}")
    raise NoFix("; ".join(failures))
