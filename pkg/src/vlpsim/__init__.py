"""Visible-light positioning simulator.

Modulated ceiling lamps broadcast their identity by on-off keying; a
rolling-shutter camera sees them as striped blobs; the vision stack recovers
lamp identities and image positions; geometric solvers turn those into
world-frame fixes; and a cooperative loop shares fixes between a simulated
smartphone and robot so the robot can follow its human.
"""

from .occ_link import (
    ChipSequence,
    DecodeResult,
    decode_chips,
    encode_uid,
    estimate_chip_rows,
    waveform,
)
from .rs_camera import (
    CameraIntrinsics,
    RsFrame,
    project_point,
    read_pgm,
    render_frame,
    row_exposure_fraction,
    write_pgm,
)
from .scene import (
    AgentState,
    Circle,
    LedLamp,
    Pose,
    Scenario,
    Square,
    Trajectory,
    UidDatabase,
    default_scenario,
    load_scenario,
    save_scenario,
    uid_lookup,
)
from .sim_loop import NavParams, SimEngine, nav_step, run_headless
from .vision import (
    RoiDetection,
    StripeAccumulator,
    StripeProfile,
    StripeTracker,
    decode_roi,
    detect_rois,
    extract_profile,
)
from .vlp_solver import (
    ImuReading,
    LedObservation,
    PositionFix,
    back_project,
    select_scheme,
    solve_double_led,
    solve_multi_led,
    solve_single_led,
)

__version__ = "0.1.0"
