"""Wire protocol: newline-delimited UTF-8 JSON, one object per line.

Every message carries a mandatory ``type`` discriminator.  Unknown fields
are ignored on decode; the defined fields round-trip exactly (floats are
serialized with full shortest-round-trip precision, timestamps are integer
milliseconds).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass


class MalformedMessage(Exception):
    """Line is not a valid protocol message."""


@dataclass(frozen=True)
class FixMessage:
    agent_id: str
    kind: str                 # "smartphone" | "robot"
    t_ms: int
    x: float
    y: float
    z: float
    yaw: float
    scheme: str
    residual_px: float
    n_leds: int
    type: str = "fix"


@dataclass(frozen=True)
class NoFixMessage:
    agent_id: str
    kind: str
    t_ms: int
    reason: str
    type: str = "nofix"


@dataclass(frozen=True)
class NavGoal:
    x: float
    y: float
    issued_t_ms: int
    type: str = "goal"


@dataclass(frozen=True)
class ControlMessage:
    command: str              # pause|resume|follow_on|follow_off|scripted_on|scripted_off
    type: str = "control"


@dataclass(frozen=True)
class SceneSnapshot:
    lamps: tuple              # (uid, x, y, shape-kind) tuples
    floor_bounds: tuple       # ((xmin, ymin), (xmax, ymax))
    agents: tuple             # (agent_id, kind) tuples
    truth: tuple = ()         # (agent_id, x, y, yaw) tuples; debug only
    type: str = "scene"


Message = FixMessage | NoFixMessage | NavGoal | ControlMessage | SceneSnapshot

_TYPES = {
    "fix": FixMessage,
    "nofix": NoFixMessage,
    "goal": NavGoal,
    "control": ControlMessage,
    "scene": SceneSnapshot,
}

_CONTROL_COMMANDS = {
    "pause", "resume", "follow_on", "follow_off", "scripted_on", "scripted_off",
}


def encode_message(msg: Message) -> str:
    """One JSON line, newline-terminated."""
    doc = asdict(msg)
    doc["type"] = msg.type
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False) + "\n"


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def decode_message(line: str) -> Message:
    """Parse one line; unknown fields are dropped, missing ones are errors."""
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as e:
        raise MalformedMessage(f"invalid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise MalformedMessage("message must be a JSON object")
    mtype = doc.get("type")
    cls = _TYPES.get(mtype)
    if cls is None:
        raise MalformedMessage(f"unknown message type {mtype!r}")
    fields = {f: doc[f] for f in cls.__dataclass_fields__ if f in doc}
    missing = set(cls.__dataclass_fields__) - set(fields)
    if missing:
        raise MalformedMessage(f"{mtype}: missing fields {sorted(missing)}")
    try:
        msg = cls(**{k: _tupled(v) for k, v in fields.items()})
    except (TypeError, ValueError) as e:
        raise MalformedMessage(f"{mtype}: {e}") from None
    if isinstance(msg, FixMessage) and not isinstance(msg.t_ms, int):
        raise MalformedMessage("fix: t_ms must be integral")
    if isinstance(msg, ControlMessage) and msg.command not in _CONTROL_COMMANDS:
        raise MalformedMessage(f"control: unknown command {msg.command!r}")
    return msg
