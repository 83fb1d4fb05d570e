"""World model: lamps, the UID location database, agents, and scenario files.

A scenario file is a UTF-8 JSON document with top-level keys ``lamps``,
``agents`` and ``sim``.  Angles are degrees in the file and radians in
memory.  Everything here is immutable after load and safe to share across
threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import normalize_angle
from .rs_camera import CameraIntrinsics

KIND_SMARTPHONE = "smartphone"
KIND_ROBOT = "robot"

DEFAULT_CHIP_RATE = 2000.0   # Hz; 10-row stripes under the default 50 us row time
DEFAULT_RADIANCE = 0.9
DEFAULT_LAMP_HEIGHT = 2.5    # m
DEFAULT_LAMP_DIAMETER = 0.175  # m
ROBOT_CAMERA_HEIGHT = 0.2    # m, fixed so the known-height single-lamp fix applies


class ParseError(Exception):
    """Scenario file is not valid JSON or misses required structure."""


class ValidationError(Exception):
    """Scenario contents violate an invariant (duplicate UID, bad dimension, ...)."""


class UnknownUid(Exception):
    """Decoded UID has no entry in the location database."""


@dataclass(frozen=True)
class Circle:
    diameter: float


@dataclass(frozen=True)
class Square:
    side: float


Shape = Circle | Square


def shape_equivalent_diameter(shape: Shape) -> float:
    """Diameter of the equal-area disk; used as the physical size for ranging."""
    if isinstance(shape, Circle):
        return shape.diameter
    return 2.0 * math.sqrt(shape.side * shape.side / math.pi)


@dataclass(frozen=True)
class LedLamp:
    uid: int
    center: tuple[float, float, float]
    shape: Shape
    chip_rate: float = DEFAULT_CHIP_RATE
    radiance: float = DEFAULT_RADIANCE

    def __post_init__(self):
        if not 0 <= self.uid <= 255:
            raise ValidationError(f"lamp uid {self.uid} outside 0..255")
        size = self.shape.diameter if isinstance(self.shape, Circle) else self.shape.side
        if size <= 0:
            raise ValidationError(f"lamp {self.uid}: shape size must be positive")
        if self.chip_rate <= 0:
            raise ValidationError(f"lamp {self.uid}: chip_rate must be positive")
        if self.center[2] <= 0:
            raise ValidationError(f"lamp {self.uid}: height must be positive")
        if not 0.0 < self.radiance <= 1.0:
            raise ValidationError(f"lamp {self.uid}: radiance must be in (0, 1]")


class UidDatabase:
    """Pre-surveyed UID -> (world position, shape) map."""

    def __init__(self, entries: dict[int, tuple[tuple[float, float, float], Shape]]):
        self._entries = dict(entries)

    @classmethod
    def from_lamps(cls, lamps: list[LedLamp]) -> "UidDatabase":
        entries = {}
        for lamp in lamps:
            if lamp.uid in entries:
                raise ValidationError(f"duplicate uid {lamp.uid}")
            entries[lamp.uid] = (lamp.center, lamp.shape)
        return cls(entries)

    def lookup(self, uid: int) -> tuple[tuple[float, float, float], Shape]:
        try:
            return self._entries[uid]
        except KeyError:
            raise UnknownUid(f"uid {uid} not registered") from None

    def __contains__(self, uid: int) -> bool:
        return uid in self._entries

    def __len__(self) -> int:
        return len(self._entries)


def uid_lookup(db: UidDatabase, uid: int) -> tuple[tuple[float, float, float], Shape]:
    return db.lookup(uid)


@dataclass(frozen=True)
class Pose:
    """Position in meters plus intrinsic Z-Y-X orientation, angles in (-pi, pi]."""

    position: tuple[float, float, float]
    rpy: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(
            self, "rpy", tuple(normalize_angle(a) for a in self.rpy)
        )


@dataclass(frozen=True)
class Trajectory:
    """Scripted planar motion for an agent; ``kind`` selects the law.

    static: stay at the scenario pose.
    circle: circle of ``radius`` around ``center`` with ``period_s``.
    waypoints: piecewise-linear through ``points`` at ``speed`` m/s, then hold.
    """

    kind: str = "static"
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    period_s: float = 20.0
    points: tuple[tuple[float, float], ...] = ()
    speed: float = 0.3

    def position_at(self, t: float, home: tuple[float, float]) -> tuple[float, float]:
        if self.kind == "static":
            return home
        if self.kind == "circle":
            a = 2.0 * math.pi * t / self.period_s
            return (self.center[0] + self.radius * math.cos(a),
                    self.center[1] + self.radius * math.sin(a))
        if self.kind == "waypoints":
            pts = [home, *self.points]
            remaining = self.speed * t
            for a, b in zip(pts, pts[1:]):
                seg = math.dist(a, b)
                if remaining <= seg:
                    f = 0.0 if seg == 0 else remaining / seg
                    return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
                remaining -= seg
            return pts[-1]
        raise ValidationError(f"unknown trajectory kind {self.kind!r}")


@dataclass(frozen=True)
class AgentState:
    agent_id: str
    kind: str
    pose: Pose
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    imu_noise_sigma: float = 0.0       # rad, on each reported angle
    yaw_trusted: bool = True
    known_height: float | None = None  # m; robots default to their camera height
    trajectory: Trajectory = field(default_factory=Trajectory)

    def __post_init__(self):
        if self.kind not in (KIND_SMARTPHONE, KIND_ROBOT):
            raise ValidationError(f"agent {self.agent_id}: unknown kind {self.kind!r}")
        if self.kind == KIND_ROBOT:
            roll, pitch, _ = self.pose.rpy
            if abs(roll) > 1e-9 or abs(pitch) > 1e-9:
                raise ValidationError(
                    f"agent {self.agent_id}: robot camera must face straight up"
                )


@dataclass(frozen=True)
class Scenario:
    lamps: tuple[LedLamp, ...]
    agents: tuple[AgentState, ...]
    duration_s: float = 30.0
    frame_rate_hz: float = 30.0
    pixel_noise_sigma: float = 0.0
    ambient_level: float = 0.05
    rng_seed: int = 42
    floor_bounds: tuple[tuple[float, float], tuple[float, float]] = ((-3.0, -3.0), (3.0, 3.0))
    follow_mode: bool = True

    def __post_init__(self):
        if not self.lamps:
            raise ValidationError("scenario needs at least one lamp")
        if not self.agents:
            raise ValidationError("scenario needs at least one agent")
        if self.frame_rate_hz <= 0:
            raise ValidationError("frame_rate_hz must be positive")
        UidDatabase.from_lamps(list(self.lamps))  # uid uniqueness
        ids = [a.agent_id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValidationError("agent ids must be unique")

    @property
    def database(self) -> UidDatabase:
        return UidDatabase.from_lamps(list(self.lamps))


# ---------------------------------------------------------------- file I/O

def _shape_from_dict(d: dict) -> Shape:
    kind = d.get("kind", "circle")
    if kind == "circle":
        return Circle(float(d.get("diameter", DEFAULT_LAMP_DIAMETER)))
    if kind == "square":
        return Square(float(d["side"]))
    raise ParseError(f"unknown shape kind {kind!r}")


def _shape_to_dict(s: Shape) -> dict:
    if isinstance(s, Circle):
        return {"kind": "circle", "diameter": s.diameter}
    return {"kind": "square", "side": s.side}


def _camera_from_dict(d: dict) -> CameraIntrinsics:
    return CameraIntrinsics(**{k: d[k] for k in d})


def _agent_from_dict(d: dict) -> AgentState:
    try:
        kind = d["kind"]
        pose_d = d.get("pose", {})
        pos = tuple(float(v) for v in pose_d.get("position", (0.0, 0.0, 1.0)))
        rpy_deg = pose_d.get("orientation_deg", (0.0, 0.0, 0.0))
        rpy = tuple(math.radians(float(v)) for v in rpy_deg)
        camera = _camera_from_dict(d.get("camera", {}))
        known_height = d.get("known_height")
        if known_height is None and kind == KIND_ROBOT:
            known_height = pos[2]
        traj_d = d.get("trajectory", {})
        traj = Trajectory(
            kind=traj_d.get("kind", "static"),
            center=tuple(traj_d.get("center", (0.0, 0.0))),
            radius=float(traj_d.get("radius", 0.0)),
            period_s=float(traj_d.get("period_s", 20.0)),
            points=tuple(tuple(p) for p in traj_d.get("points", ())),
            speed=float(traj_d.get("speed", 0.3)),
        )
        return AgentState(
            agent_id=str(d["agent_id"]),
            kind=kind,
            pose=Pose(pos, rpy),
            camera=camera,
            imu_noise_sigma=math.radians(float(d.get("imu_noise_sigma_deg", 0.0))),
            yaw_trusted=bool(d.get("yaw_trusted", kind == KIND_ROBOT)),
            known_height=known_height,
            trajectory=traj,
        )
    except (KeyError, TypeError) as e:
        raise ParseError(f"bad agent entry: {e}") from e


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")
    try:
        lamps = tuple(
            LedLamp(
                uid=int(ld["uid"]),
                center=tuple(float(v) for v in ld["center"]),
                shape=_shape_from_dict(ld.get("shape", {})),
                chip_rate=float(ld.get("chip_rate", DEFAULT_CHIP_RATE)),
                radiance=float(ld.get("radiance", DEFAULT_RADIANCE)),
            )
            for ld in doc.get("lamps", [])
        )
        agents = tuple(_agent_from_dict(ad) for ad in doc.get("agents", []))
        sim = doc.get("sim", {})
        fb = sim.get("floor_bounds", ((-3.0, -3.0), (3.0, 3.0)))
        return Scenario(
            lamps=lamps,
            agents=agents,
            duration_s=float(sim.get("duration_s", 30.0)),
            frame_rate_hz=float(sim.get("frame_rate_hz", 30.0)),
            pixel_noise_sigma=float(sim.get("pixel_noise_sigma", 0.0)),
            ambient_level=float(sim.get("ambient_level", 0.05)),
            rng_seed=int(sim.get("rng_seed", 42)),
            floor_bounds=(tuple(fb[0]), tuple(fb[1])),
            follow_mode=bool(sim.get("follow_mode", True)),
        )
    except (KeyError, TypeError, IndexError) as e:
        raise ParseError(f"bad scenario document: {e}") from e


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "lamps": [
            {
                "uid": lamp.uid,
                "center": list(lamp.center),
                "shape": _shape_to_dict(lamp.shape),
                "chip_rate": lamp.chip_rate,
                "radiance": lamp.radiance,
            }
            for lamp in sc.lamps
        ],
        "agents": [
            {
                "agent_id": a.agent_id,
                "kind": a.kind,
                "pose": {
                    "position": list(a.pose.position),
                    "orientation_deg": [math.degrees(v) for v in a.pose.rpy],
                },
                "camera": {
                    "focal_px": a.camera.focal_px,
                    "cx": a.camera.cx,
                    "cy": a.camera.cy,
                    "width": a.camera.width,
                    "height": a.camera.height,
                    "t_row": a.camera.t_row,
                    "t_exp": a.camera.t_exp,
                },
                "imu_noise_sigma_deg": math.degrees(a.imu_noise_sigma),
                "yaw_trusted": a.yaw_trusted,
                "known_height": a.known_height,
                "trajectory": {
                    "kind": a.trajectory.kind,
                    "center": list(a.trajectory.center),
                    "radius": a.trajectory.radius,
                    "period_s": a.trajectory.period_s,
                    "points": [list(p) for p in a.trajectory.points],
                    "speed": a.trajectory.speed,
                },
            }
            for a in sc.agents
        ],
        "sim": {
            "duration_s": sc.duration_s,
            "frame_rate_hz": sc.frame_rate_hz,
            "pixel_noise_sigma": sc.pixel_noise_sigma,
            "ambient_level": sc.ambient_level,
            "rng_seed": sc.rng_seed,
            "floor_bounds": [list(sc.floor_bounds[0]), list(sc.floor_bounds[1])],
            "follow_mode": sc.follow_mode,
        },
    }


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario file; the literal name "default" is built in."""
    if str(path) == "default":
        return default_scenario()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"cannot read {p}: {e}") from e
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{p}: invalid JSON: {e}") from e
    return scenario_from_dict(doc)


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(scenario_to_dict(sc), indent=2) + "\n", encoding="utf-8"
    )


def default_scenario(seed: int = 42) -> Scenario:
    """Four ceiling lamps on a 2 m grid, one smartphone and one robot.

    The smartphone sits at the grid center where all four lamps are in view;
    the robot starts 3 m away and follows the smartphone's shared fixes.
    """
    lamps = tuple(
        LedLamp(uid=uid, center=(x, y, DEFAULT_LAMP_HEIGHT),
                shape=Circle(DEFAULT_LAMP_DIAMETER))
        for uid, (x, y) in zip(
            (1, 2, 3, 4), ((-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0))
        )
    )
    camera = CameraIntrinsics()
    agents = (
        AgentState(
            agent_id="phone",
            kind=KIND_SMARTPHONE,
            pose=Pose((0.0, 0.0, 1.0)),
            camera=camera,
            yaw_trusted=False,
        ),
        AgentState(
            agent_id="robot",
            kind=KIND_ROBOT,
            pose=Pose((-2.4, -1.8, ROBOT_CAMERA_HEIGHT)),
            camera=camera,
            known_height=ROBOT_CAMERA_HEIGHT,
            yaw_trusted=True,
        ),
    )
    return Scenario(lamps=lamps, agents=agents, rng_seed=seed)


def scenarios_equal(a: Scenario, b: Scenario, tol: float = 1e-9) -> bool:
    """Field-by-field equality after default expansion, tolerant to angle-unit round trips."""

    def close(x, y):
        if isinstance(x, (int, float)) and isinstance(y, (int, float)):
            return math.isclose(x, y, rel_tol=tol, abs_tol=tol)
        if isinstance(x, (list, tuple)) and isinstance(y, (list, tuple)):
            return len(x) == len(y) and all(close(p, q) for p, q in zip(x, y))
        if isinstance(x, dict) and isinstance(y, dict):
            return x.keys() == y.keys() and all(close(x[k], y[k]) for k in x)
        return x == y

    return close(scenario_to_dict(a), scenario_to_dict(b))
