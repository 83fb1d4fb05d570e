"""Receiver pipeline on a single frame: detect, profile, decode.

Renders a close-range frame for a handful of identities, then walks the
image-side pipeline: blob detection (vertical closing bridges the dark
stripes), stripe profile down the blob's center, run-length quantization
with a self-estimated chip width, and Manchester decoding.  The decoder is
never told the transmit rate.
"""

from vlpsim import (
    AgentState,
    CameraIntrinsics,
    Circle,
    LedLamp,
    Pose,
    Scenario,
    decode_roi,
    detect_rois,
    extract_profile,
    render_frame,
)

for uid in (0x00, 0x3C, 0xA5, 0xFF):
    lamp = LedLamp(uid=uid, center=(0.0, 0.0, 2.5), shape=Circle(0.175))
    cam = AgentState(agent_id="cam", kind="smartphone",
                     pose=Pose((0.0, 0.0, 2.3825)), camera=CameraIntrinsics())
    scene = Scenario(lamps=(lamp,), agents=(cam,), ambient_level=0.05,
                     pixel_noise_sigma=0.03)
    frame = render_frame(scene, cam, t_start=0.0)

    (roi,) = detect_rois(frame)
    profile = extract_profile(frame, roi)
    result = decode_roi(profile)
    status = "OK " if result.uid == uid else "BAD"
    print(f"{status} sent 0x{uid:02X}  got 0x{result.uid:02X}  "
          f"confidence {result.confidence:.2f}  "
          f"blob {roi.bbox[3] - roi.bbox[1] + 1} rows  "
          f"centroid ({roi.centroid[0]:.1f}, {roi.centroid[1]:.1f})")
