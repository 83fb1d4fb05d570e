"""Cooperative simulation loop.

One authoritative engine owns all mutable state.  Every tick it advances
ground truth, renders each agent's rolling-shutter frame, runs the vision
and positioning pipeline, and emits exactly one fix-or-diagnostic message
per agent.  The robot chases the smartphone's latest *estimated* position
(never ground truth), so positioning error propagates into navigation.

Determinism: every noise draw comes from a stream seeded by
(root seed, agent index, tick, purpose), so a fixed seed reproduces the
byte-identical message stream regardless of wall-clock timing or client
activity.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import normalize_angle
from .protocol import (
    ControlMessage,
    FixMessage,
    Message,
    NavGoal,
    NoFixMessage,
    SceneSnapshot,
)
from .rs_camera import render_frame
from .scene import (
    KIND_ROBOT,
    KIND_SMARTPHONE,
    AgentState,
    Pose,
    Scenario,
    UnknownUid,
    shape_equivalent_diameter,
)
from .vision import StripeTracker, detect_rois
from .vlp_solver import (
    ImuReading,
    LedObservation,
    NoFix,
    PositionFix,
    select_scheme,
)


@dataclass(frozen=True)
class NavParams:
    v_max: float = 0.5        # m/s
    omega_max: float = 1.5    # rad/s
    k_rho: float = 0.8
    k_alpha: float = 2.0
    stop_radius: float = 0.15  # m


def nav_step(pose: Pose, goal: tuple[float, float],
             params: NavParams = NavParams()) -> tuple[float, float]:
    """Unicycle go-to-goal law: forward speed gated by heading alignment."""
    dx = goal[0] - pose.position[0]
    dy = goal[1] - pose.position[1]
    rho = math.hypot(dx, dy)
    if rho < params.stop_radius:
        return 0.0, 0.0
    alpha = normalize_angle(math.atan2(dy, dx) - pose.rpy[2])
    v = min(params.v_max, params.k_rho * rho) * max(0.0, math.cos(alpha))
    omega = max(-params.omega_max, min(params.omega_max, params.k_alpha * alpha))
    return v, omega


@dataclass
class _AgentRuntime:
    state: AgentState
    truth: Pose
    tracker: StripeTracker
    estimate: Pose              # robot dead-reckoned pose; phones mirror fixes
    command: tuple[float, float] = (0.0, 0.0)
    latest_fix: PositionFix | None = None
    drag_target: tuple[float, float] | None = None


class SimEngine:
    """Authoritative cooperative-positioning simulation."""

    def __init__(self, scenario: Scenario, seed: int | None = None,
                 debug: bool = False, nav_params: NavParams = NavParams()):
        self.scenario = scenario
        self.seed = scenario.rng_seed if seed is None else seed
        self.debug = debug
        self.nav = nav_params
        self.db = scenario.database
        self.dt = 1.0 / scenario.frame_rate_hz
        self.tick_index = 0
        self.paused = False
        self.follow_mode = scenario.follow_mode
        self.scripted = True
        self.agents = [
            _AgentRuntime(state=a, truth=a.pose, tracker=StripeTracker(),
                          estimate=a.pose)
            for a in scenario.agents
        ]
        self.metrics_rows: list[dict] = []
        self.pipeline_times: dict[str, list[float]] = {
            a.agent_id: [] for a in scenario.agents
        }

    # ------------------------------------------------------------- inputs

    def apply_goal(self, goal: NavGoal) -> None:
        """Console goals steer the smartphone's walk target (clamped to the
        floor); ignored in scripted mode. Last writer wins within a tick."""
        if self.scripted:
            return
        (xmin, ymin), (xmax, ymax) = self.scenario.floor_bounds
        target = (min(max(goal.x, xmin), xmax), min(max(goal.y, ymin), ymax))
        for agent in self.agents:
            if agent.state.kind == KIND_SMARTPHONE:
                agent.drag_target = target

    def apply_control(self, msg: ControlMessage) -> None:
        if msg.command == "pause":
            self.paused = True
        elif msg.command == "resume":
            self.paused = False
        elif msg.command == "follow_on":
            self.follow_mode = True
        elif msg.command == "follow_off":
            self.follow_mode = False
        elif msg.command == "scripted_on":
            self.scripted = True
        elif msg.command == "scripted_off":
            self.scripted = False

    # ------------------------------------------------------------ queries

    @property
    def t_ms(self) -> int:
        return self.tick_index * 1000 // int(self.scenario.frame_rate_hz)

    def snapshot(self) -> SceneSnapshot:
        lamps = tuple(
            (lamp.uid, lamp.center[0], lamp.center[1],
             "circle" if hasattr(lamp.shape, "diameter") else "square")
            for lamp in self.scenario.lamps
        )
        agents = tuple((a.state.agent_id, a.state.kind) for a in self.agents)
        truth = ()
        if self.debug:
            truth = tuple(
                (a.state.agent_id, a.truth.position[0], a.truth.position[1],
                 a.truth.rpy[2])
                for a in self.agents
            )
        return SceneSnapshot(lamps=lamps, floor_bounds=self.scenario.floor_bounds,
                             agents=agents, truth=truth)

    # ------------------------------------------------------------ stepping

    def _rng(self, agent_idx: int, purpose: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence((self.seed, agent_idx, self.tick_index, purpose))
        )

    def _advance_truth(self, agent: _AgentRuntime, t: float) -> None:
        if agent.state.kind == KIND_ROBOT:
            v, omega = agent.command
            x, y, z = agent.truth.position
            yaw = agent.truth.rpy[2]
            x += v * math.cos(yaw) * self.dt
            y += v * math.sin(yaw) * self.dt
            yaw = normalize_angle(yaw + omega * self.dt)
            agent.truth = Pose((x, y, z), (0.0, 0.0, yaw))
            # dead-reckon the estimate with the same command
            ex, ey, ez = agent.estimate.position
            eyaw = agent.estimate.rpy[2]
            ex += v * math.cos(eyaw) * self.dt
            ey += v * math.sin(eyaw) * self.dt
            eyaw = normalize_angle(eyaw + omega * self.dt)
            agent.estimate = Pose((ex, ey, ez), (0.0, 0.0, eyaw))
            return
        home = agent.state.pose.position
        if self.scripted or agent.drag_target is None:
            x, y = agent.state.trajectory.position_at(t, (home[0], home[1]))
        else:
            # first-order lag toward the dragged target, time constant 0.3 s
            gain = 1.0 - math.exp(-self.dt / 0.3)
            px, py, _ = agent.truth.position
            x = px + (agent.drag_target[0] - px) * gain
            y = py + (agent.drag_target[1] - py) * gain
        agent.truth = Pose((x, y, home[2]), agent.state.pose.rpy)

    def _observe(self, agent: _AgentRuntime, agent_idx: int
                 ) -> tuple[list[LedObservation], float]:
        frame = render_frame(
            self.scenario, replace(agent.state, pose=agent.truth),
            t_start=self.tick_index * self.dt, rng=self._rng(agent_idx, 0),
        )
        t0 = time.perf_counter()
        rois = detect_rois(frame)
        tracked = agent.tracker.update(frame, rois)
        observations = []
        for t in tracked:
            if t.uid is None:
                continue
            try:
                world, shape = self.db.lookup(t.uid)
            except UnknownUid:
                continue
            observations.append(LedObservation(
                uid=t.uid, centroid_px=t.centroid,
                equiv_diameter_px=t.equiv_diameter_px, world=world,
                physical_diameter_m=shape_equivalent_diameter(shape),
            ))
        return observations, t0

    def _imu(self, agent: _AgentRuntime, agent_idx: int) -> ImuReading:
        sigma = agent.state.imu_noise_sigma
        roll, pitch, yaw = agent.truth.rpy
        if sigma > 0:
            rng = self._rng(agent_idx, 1)
            roll += rng.normal(0, sigma)
            pitch += rng.normal(0, sigma)
            yaw += rng.normal(0, sigma)
        return ImuReading(roll, pitch, yaw, yaw_trusted=agent.state.yaw_trusted)

    def tick(self) -> list[Message]:
        """Advance one frame period; one fix-or-diagnostic per agent."""
        t = self.tick_index * self.dt
        for agent in self.agents:
            self._advance_truth(agent, t)
        t_ms = self.t_ms
        messages: list[Message] = []
        for idx, agent in enumerate(self.agents):
            observations, t0 = self._observe(agent, idx)
            imu = self._imu(agent, idx)
            fix = None
            reason = "no decoded lamps in view"
            if observations:
                try:
                    fix = select_scheme(observations, imu,
                                        agent.state.camera,
                                        agent.state.known_height)
                    fix = replace(fix, agent_id=agent.state.agent_id,
                                  timestamp_s=t)
                except NoFix as e:
                    reason = str(e)
            self.pipeline_times[agent.state.agent_id].append(
                time.perf_counter() - t0
            )
            if fix is not None:
                agent.latest_fix = fix
                if agent.state.kind == KIND_ROBOT:
                    agent.estimate = Pose(
                        (fix.position[0], fix.position[1],
                         agent.estimate.position[2]),
                        (0.0, 0.0, imu.yaw),
                    )
                messages.append(FixMessage(
                    agent_id=agent.state.agent_id, kind=agent.state.kind,
                    t_ms=t_ms, x=fix.position[0], y=fix.position[1],
                    z=fix.position[2], yaw=fix.yaw, scheme=fix.scheme,
                    residual_px=fix.residual_px, n_leds=fix.n_leds,
                ))
            else:
                messages.append(NoFixMessage(
                    agent_id=agent.state.agent_id, kind=agent.state.kind,
                    t_ms=t_ms, reason=reason,
                ))
            self._record_metrics(agent, t_ms, fix)
        self._steer_robots()
        self.tick_index += 1
        return messages

    def _steer_robots(self) -> None:
        goal = None
        if self.follow_mode:
            for agent in self.agents:
                if agent.state.kind == KIND_SMARTPHONE and agent.latest_fix:
                    goal = (agent.latest_fix.position[0],
                            agent.latest_fix.position[1])
                    break
        for agent in self.agents:
            if agent.state.kind != KIND_ROBOT:
                continue
            if goal is None:
                agent.command = (0.0, 0.0)
            else:
                agent.command = nav_step(agent.estimate, goal, self.nav)

    def _record_metrics(self, agent: _AgentRuntime, t_ms: int,
                        fix: PositionFix | None) -> None:
        tx, ty, tz = agent.truth.position
        row = {
            "t_ms": t_ms,
            "agent_id": agent.state.agent_id,
            "truth_x": repr(tx), "truth_y": repr(ty), "truth_z": repr(tz),
            "fix_x": "", "fix_y": "", "fix_z": "", "err_m": "",
            "scheme": "", "residual_px": "", "n_leds": 0, "decode_ok": 0,
        }
        if fix is not None:
            err = math.dist(fix.position, (tx, ty, tz))
            row.update(
                fix_x=repr(fix.position[0]), fix_y=repr(fix.position[1]),
                fix_z=repr(fix.position[2]), err_m=repr(err),
                scheme=fix.scheme, residual_px=repr(fix.residual_px),
                n_leds=fix.n_leds, decode_ok=1,
            )
        self.metrics_rows.append(row)


METRICS_COLUMNS = [
    "t_ms", "agent_id", "truth_x", "truth_y", "truth_z",
    "fix_x", "fix_y", "fix_z", "err_m", "scheme", "residual_px",
    "n_leds", "decode_ok",
]


def write_metrics(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRICS_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def run_headless(scenario: Scenario, ticks: int, seed: int | None = None,
                 debug: bool = False) -> tuple[SimEngine, list[str]]:
    """Run without sockets; returns the engine and every encoded message line."""
    from .protocol import encode_message

    engine = SimEngine(scenario, seed=seed, debug=debug)
    lines = [encode_message(engine.snapshot())]
    for _ in range(ticks):
        lines.extend(encode_message(m) for m in engine.tick())
    return engine, lines
