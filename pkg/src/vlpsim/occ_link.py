"""Optical beacon link layer: UID framing, Manchester chips, and decoding.

A transmitter endlessly repeats a fixed 21-chip frame: the sync preamble
1,1,1,0,0 followed by the eight UID bits, most significant bit first,
Manchester encoded (bit 1 -> chips 1,0; bit 0 -> chips 0,1).  Manchester
coding caps equal-value runs inside the payload at two chips, so a run of
three on-chips followed by two off-chips only ever marks a frame start,
and every frame carries exactly 11 on-chips regardless of UID (constant
perceived brightness).

The decoding side never needs to know the transmit chip rate: the receiver
recovers rows-per-chip from stripe run lengths (``estimate_chip_rows``) and
finds the frame boundary by scanning for the preamble.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import floor
from typing import Sequence

PREAMBLE = (1, 1, 1, 0, 0)
FRAME_CHIPS = 21
PAYLOAD_BITS = 8
ON_CHIPS_PER_FRAME = 11  # 3 preamble + exactly one per payload bit


class NoSync(Exception):
    """No preamble pattern found in the chip stream."""


class InvalidManchester(Exception):
    """A payload pair read 00 or 11; the UID is undefined."""

    def __init__(self, confidence: float, sync_offset: int):
        super().__init__(
            f"invalid Manchester payload at offset {sync_offset} "
            f"(confidence {confidence:.3f})"
        )
        self.confidence = confidence
        self.sync_offset = sync_offset


class DegenerateProfile(Exception):
    """Too few stripe runs to estimate chip spacing (blob too small or unmodulated)."""


@dataclass(frozen=True)
class ChipSequence:
    """An ordered run of binary chips, optionally tagged with its rate in Hz."""

    chips: tuple[int, ...]
    chip_rate: float | None = None

    def __post_init__(self):
        if any(c not in (0, 1) for c in self.chips):
            raise ValueError("chips must be binary")

    def __len__(self) -> int:
        return len(self.chips)

    def as_text(self) -> str:
        return "".join(str(c) for c in self.chips)


@dataclass(frozen=True)
class DecodeResult:
    uid: int
    sync_offset: int      # chips skipped before the frame start
    chips_consumed: int   # chips read through the end of the decoded frame
    confidence: float     # fraction of valid Manchester pairs, 1.0 on success


@lru_cache(maxsize=256)
def frame_chips(uid: int) -> tuple[int, ...]:
    """The 21-chip frame for a UID (cached; frames are immutable)."""
    if not 0 <= uid <= 255:
        raise ValueError(f"uid must be in 0..255, got {uid}")
    chips = list(PREAMBLE)
    for bit_pos in range(PAYLOAD_BITS - 1, -1, -1):
        bit = (uid >> bit_pos) & 1
        chips.extend((1, 0) if bit else (0, 1))
    return tuple(chips)


def encode_uid(uid: int, chip_rate: float | None = None) -> ChipSequence:
    """Build the 21-chip beacon frame for a UID."""
    return ChipSequence(frame_chips(uid), chip_rate)


def waveform(lamp, t: float) -> int:
    """Instantaneous on/off state of a lamp's beacon at time ``t`` seconds.

    ``lamp`` needs ``uid`` and ``chip_rate`` attributes.  The frame repeats
    back to back, so the signal is periodic with period 21/chip_rate.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    idx = floor(t * lamp.chip_rate) % FRAME_CHIPS
    return frame_chips(lamp.uid)[idx]


def decode_chips(chips: Sequence[int]) -> DecodeResult:
    """Recover a UID from a raw chip stream at unknown phase.

    Scans left to right for the preamble; the first window whose eight
    payload pairs are all valid Manchester wins.  A stream of at least two
    frames (42 chips) is required so that one complete frame is guaranteed.
    """
    if len(chips) < 2 * FRAME_CHIPS:
        raise ValueError(f"need at least {2 * FRAME_CHIPS} chips, got {len(chips)}")
    text = "".join("1" if c else "0" for c in chips)
    preamble = "11100"
    best: tuple[float, int] | None = None
    start = 0
    while True:
        i = text.find(preamble, start)
        if i < 0 or i + FRAME_CHIPS > len(text):
            break
        uid = 0
        valid = 0
        for k in range(PAYLOAD_BITS):
            pair = text[i + 5 + 2 * k: i + 7 + 2 * k]
            if pair == "10":
                uid = (uid << 1) | 1
                valid += 1
            elif pair == "01":
                uid = uid << 1
                valid += 1
            else:
                uid = uid << 1
        if valid == PAYLOAD_BITS:
            return DecodeResult(uid, i, i + FRAME_CHIPS, 1.0)
        if best is None or valid / PAYLOAD_BITS > best[0]:
            best = (valid / PAYLOAD_BITS, i)
        start = i + 1
    if best is not None:
        raise InvalidManchester(best[0], best[1])
    raise NoSync("no preamble found in chip stream")


def estimate_chip_rows(run_lengths: Sequence[float]) -> float:
    """Rows-per-chip from binarized stripe run lengths, blind to the chip rate.

    Runs shorter than 2 rows are dropped as noise; each surviving run is
    assumed to span an integer number of chips, anchored by the shortest run.
    """
    runs = [float(r) for r in run_lengths if r >= 2]
    if len(runs) < 4:
        raise DegenerateProfile(
            f"need at least 4 usable runs, got {len(runs)}"
        )
    m = min(runs)
    # floor(x + .5) rather than round(): half-integer ratios must not
    # banker's-round toward even chip counts.
    widths = [r / max(1, floor(r / m + 0.5)) for r in runs]
    return sum(widths) / len(widths)
