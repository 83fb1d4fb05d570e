import math

import numpy as np
import pytest

from vlpsim.geometry import normalize_angle, rotation_rpy
from vlpsim.rs_camera import CameraIntrinsics, project_point
from vlpsim.scene import Pose
from vlpsim.vlp_solver import (
    SCHEME_DOUBLE,
    SCHEME_MULTI,
    SCHEME_SINGLE,
    DegenerateGeometry,
    ImuReading,
    LedObservation,
    MissingYaw,
    NoFix,
    back_project,
    gauss_newton_reprojection,
    select_scheme,
    solve_double_led,
    solve_multi_led,
    solve_single_led,
)

K = CameraIntrinsics()
K800 = CameraIntrinsics(focal_px=800.0)


def synth_observation(pose: Pose, K, world, uid=1, diameter_m=0.175):
    """Forward-model oracle: project the lamp and derive its apparent size
    from the camera-frame depth, matching the scale-ranging model."""
    uv = project_point(pose, K, world)
    assert uv is not None
    R = rotation_rpy(*pose.rpy)
    d_cam = R.T @ (np.asarray(world, dtype=float) - np.asarray(pose.position))
    diam_px = K.focal_px * diameter_m / d_cam[2]
    return LedObservation(
        uid=uid, centroid_px=uv, equiv_diameter_px=diam_px,
        world=tuple(world), physical_diameter_m=diameter_m,
    )


def test_back_project_axis():
    ray = back_project(K, (0.0, 0.0, 0.0), (K.cx, K.cy))
    assert np.allclose(ray, [0, 0, 1])


def test_back_project_offset():
    k = K800
    ray = back_project(k, (0.0, 0.0, 0.0), (k.cx + 800.0, k.cy))
    assert np.allclose(ray, [1 / math.sqrt(2), 0, 1 / math.sqrt(2)])


def test_back_project_pitched_axis_is_horizontal():
    ray = back_project(K, (0.0, math.pi / 2, 0.0), (K.cx, K.cy))
    assert abs(ray[2]) < 1e-12
    assert np.allclose(ray, [1, 0, 0], atol=1e-12)


def test_single_led_known_height_axial():
    pose = Pose((1.0, 1.0, 0.2))
    obs = synth_observation(pose, K, (1.0, 1.0, 2.5))
    fix = solve_single_led(obs, ImuReading(0, 0, 0), K, known_height=0.2)
    assert np.allclose(fix.position, (1.0, 1.0, 0.2), atol=1e-6)
    assert fix.scheme == SCHEME_SINGLE
    assert fix.n_leds == 1 and fix.ref_uid == 1


def test_single_led_diameter_route_analytic():
    # focal 800, D 0.175 m, 70 px apparent -> range 2.0 m below the lamp
    obs = LedObservation(
        uid=3, centroid_px=(K800.cx, K800.cy), equiv_diameter_px=70.0,
        world=(0.0, 0.0, 2.5), physical_diameter_m=0.175,
    )
    fix = solve_single_led(obs, ImuReading(0, 0, 0), K800)
    assert fix.position[2] == pytest.approx(0.5, abs=1e-9)
    assert fix.position[0] == pytest.approx(0.0, abs=1e-9)


def test_single_led_missing_yaw():
    obs = LedObservation(
        uid=3, centroid_px=(K.cx, K.cy), equiv_diameter_px=70.0,
        world=(0.0, 0.0, 2.5), physical_diameter_m=0.175,
    )
    with pytest.raises(MissingYaw):
        solve_single_led(obs, ImuReading(0, 0, 0, yaw_trusted=False), K)


def test_single_led_exact_recovery_random_poses_both_routes():
    rng = np.random.default_rng(2)
    lamp = (0.3, -0.2, 2.5)
    for _ in range(100):
        pose = Pose(
            (rng.uniform(-0.5, 0.5) + 0.3, rng.uniform(-0.5, 0.5) - 0.2,
             rng.uniform(0.2, 1.5)),
            (rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15),
             rng.uniform(-math.pi, math.pi)),
        )
        obs = synth_observation(pose, K, lamp)
        imu = ImuReading(*pose.rpy)
        fix_h = solve_single_led(obs, imu, K, known_height=pose.position[2])
        assert math.dist(fix_h.position, pose.position) < 1e-6
        fix_d = solve_single_led(obs, imu, K)
        assert math.dist(fix_d.position, pose.position) < 1e-6


def test_double_led_symmetric():
    pose = Pose((1.0, 0.0, 0.5))
    lamps = [(0.0, 0.0, 2.5), (2.0, 0.0, 2.5)]
    obs = [synth_observation(pose, K, w, uid=i + 1) for i, w in enumerate(lamps)]
    fix = solve_double_led(obs, ImuReading(0, 0, 0, yaw_trusted=False), K)
    assert np.allclose(fix.position, (1.0, 0.0, 0.5), atol=1e-6)
    assert abs(fix.yaw) < 1e-6
    assert fix.scheme == SCHEME_DOUBLE and fix.ref_uid == 1


def test_double_led_recovers_yaw():
    pose = Pose((1.0, 0.3, 0.5), (0.0, 0.0, math.radians(30)))
    lamps = [(0.0, 0.0, 2.5), (2.0, 0.0, 2.5)]
    obs = [synth_observation(pose, K, w, uid=i + 1) for i, w in enumerate(lamps)]
    fix = solve_double_led(obs, ImuReading(0, 0, 0, yaw_trusted=False), K)
    assert abs(normalize_angle(fix.yaw - math.radians(30))) < 1e-6
    assert math.dist(fix.position, pose.position) < 1e-6


def test_double_led_exact_recovery_random_tilted_poses():
    rng = np.random.default_rng(3)
    lamps = [(-1.0, 0.4, 2.5), (1.0, -0.4, 2.4)]  # unequal heights supported
    for _ in range(100):
        pose = Pose(
            (rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(0.2, 1.2)),
            (rng.uniform(-0.17, 0.17), rng.uniform(-0.17, 0.17),
             rng.uniform(-math.pi, math.pi)),
        )
        obs = [synth_observation(pose, K, w, uid=i + 1) for i, w in enumerate(lamps)]
        imu = ImuReading(pose.rpy[0], pose.rpy[1], 0.0, yaw_trusted=False)
        fix = solve_double_led(obs, imu, K)
        assert math.dist(fix.position, pose.position) < 1e-6
        assert abs(normalize_angle(fix.yaw - pose.rpy[2])) < 1e-6


def test_double_led_coincident_pixels_degenerate():
    obs = [
        LedObservation(uid=1, centroid_px=(320.0, 240.0), equiv_diameter_px=30,
                       world=(0.0, 0.0, 2.5), physical_diameter_m=0.175),
        LedObservation(uid=2, centroid_px=(322.0, 240.0), equiv_diameter_px=30,
                       world=(2.0, 0.0, 2.5), physical_diameter_m=0.175),
    ]
    with pytest.raises(DegenerateGeometry):
        solve_double_led(obs, ImuReading(0, 0, 0), K)


DEFAULT_LAMPS = [(-1.0, -1.0, 2.5), (1.0, -1.0, 2.5), (-1.0, 1.0, 2.5), (1.0, 1.0, 2.5)]


def test_multi_led_centroid_symmetry():
    pose = Pose((0.0, 0.0, 1.0))
    obs = [synth_observation(pose, K, w, uid=i + 1)
           for i, w in enumerate(DEFAULT_LAMPS)]
    fix = solve_multi_led(obs, K)
    assert np.allclose(fix.position, (0.0, 0.0, 1.0), atol=1e-6)
    assert fix.scheme == SCHEME_MULTI and fix.n_leds == 4 and fix.ref_uid == 1


def test_multi_led_exact_recovery_100_random_poses():
    rng = np.random.default_rng(4)
    for _ in range(100):
        pose = Pose(
            (rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.3, 1.6)),
            (rng.uniform(-0.17, 0.17), rng.uniform(-0.17, 0.17),
             rng.uniform(-math.pi, math.pi)),
        )
        obs = [synth_observation(pose, K, w, uid=i + 1)
               for i, w in enumerate(DEFAULT_LAMPS)]
        fix = solve_multi_led(obs, K)
        assert math.dist(fix.position, pose.position) < 1e-6
        assert abs(normalize_angle(fix.yaw - pose.rpy[2])) < 1e-6


def test_multi_led_collinear_degenerate():
    pose = Pose((0.0, 0.0, 1.0))
    lamps = [(-1.0, 0.0, 2.5), (0.0, 0.0, 2.5), (1.0, 0.0, 2.5)]
    obs = [synth_observation(pose, K, w, uid=i + 1) for i, w in enumerate(lamps)]
    with pytest.raises(DegenerateGeometry):
        solve_multi_led(obs, K)


def test_multi_led_fourth_observation_never_hurts():
    rng = np.random.default_rng(5)
    for _ in range(20):
        pose = Pose(
            (rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8), rng.uniform(0.4, 1.4)),
            (0.0, 0.0, rng.uniform(-math.pi, math.pi)),
        )
        obs = [synth_observation(pose, K, w, uid=i + 1)
               for i, w in enumerate(DEFAULT_LAMPS)]
        err3 = math.dist(solve_multi_led(obs[:3], K).position, pose.position)
        err4 = math.dist(solve_multi_led(obs, K).position, pose.position)
        assert err4 <= err3 + 1e-9


def test_gauss_newton_residual_non_increasing():
    pose = Pose((0.4, -0.3, 0.9), (0.05, -0.03, 1.1))
    obs = [synth_observation(pose, K, w, uid=i + 1)
           for i, w in enumerate(DEFAULT_LAMPS)]
    anchor = np.asarray(obs[0].world)
    init = np.array([0.0, 0.0, 1.0 - anchor[2], 0.0, 0.0, 0.0])
    _, history = gauss_newton_reprojection(K, obs, init, anchor)
    for a, b in zip(history, history[1:]):
        assert b <= a + 1e-12
    assert history[-1] < 1e-6


def test_gauss_newton_jacobian_matches_independent_differences():
    from vlpsim.vlp_solver import _residual_vector

    rng = np.random.default_rng(6)
    obs = [synth_observation(Pose((0.2, 0.1, 0.8), (0.02, -0.04, 0.6)), K, w,
                             uid=i + 1)
           for i, w in enumerate(DEFAULT_LAMPS)]
    anchor = np.asarray(obs[0].world)
    for _ in range(20):
        params = np.array([
            rng.uniform(-0.5, 0.5) - anchor[0],
            rng.uniform(-0.5, 0.5) - anchor[1],
            rng.uniform(0.5, 1.2) - anchor[2],
            rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
            rng.uniform(-0.5, 0.5),
        ])
        # solver-style Jacobian (central differences, step 1e-6)
        J_solver = np.empty((8, 6))
        for j in range(6):
            b = params.copy()
            b[j] += 1e-6
            hi = _residual_vector(b, K, obs, anchor)
            b[j] -= 2e-6
            lo = _residual_vector(b, K, obs, anchor)
            J_solver[:, j] = (hi - lo) / 2e-6
        # independent check at a different step size
        J_check = np.empty((8, 6))
        for j in range(6):
            b = params.copy()
            b[j] += 1e-5
            hi = _residual_vector(b, K, obs, anchor)
            b[j] -= 2e-5
            lo = _residual_vector(b, K, obs, anchor)
            J_check[:, j] = (hi - lo) / 2e-5
        denom = np.maximum(np.abs(J_check), 1.0)
        assert np.max(np.abs(J_solver - J_check) / denom) < 1e-4


def test_uid_relabeling_invariance():
    pose = Pose((0.3, -0.4, 1.1), (0.0, 0.0, 0.7))
    obs = [synth_observation(pose, K, w, uid=i + 1)
           for i, w in enumerate(DEFAULT_LAMPS)]
    fix_a = solve_multi_led(obs, K)
    relabeled = [
        LedObservation(uid=200 - o.uid, centroid_px=o.centroid_px,
                       equiv_diameter_px=o.equiv_diameter_px, world=o.world,
                       physical_diameter_m=o.physical_diameter_m)
        for o in obs
    ]
    fix_b = solve_multi_led(relabeled, K)
    assert math.dist(fix_a.position, fix_b.position) < 1e-12


def test_select_scheme_dispatch():
    pose = Pose((0.0, 0.0, 1.0), (0.0, 0.0, 0.3))
    obs = [synth_observation(pose, K, w, uid=i + 1)
           for i, w in enumerate(DEFAULT_LAMPS)]
    imu = ImuReading(0.0, 0.0, 0.3)
    assert select_scheme(obs, imu, K).scheme == SCHEME_MULTI
    assert select_scheme(obs[:2], imu, K).scheme == SCHEME_DOUBLE
    assert select_scheme(obs[:1], imu, K).scheme == SCHEME_SINGLE


def test_select_scheme_single_without_yaw_is_nofix():
    pose = Pose((0.0, 0.0, 1.0))
    obs = [synth_observation(pose, K, DEFAULT_LAMPS[0], uid=1)]
    with pytest.raises(NoFix):
        select_scheme(obs, ImuReading(0, 0, 0, yaw_trusted=False), K)


def test_select_scheme_collinear_falls_back_to_double():
    pose = Pose((0.1, 0.0, 1.0), (0.0, 0.0, 0.2))
    lamps = [(-1.0, 0.0, 2.5), (0.0, 0.0, 2.5), (1.0, 0.0, 2.5)]
    obs = [synth_observation(pose, K, w, uid=i + 1) for i, w in enumerate(lamps)]
    fix = select_scheme(obs, ImuReading(0.0, 0.0, 0.2), K)
    assert fix.scheme == SCHEME_DOUBLE
    assert math.dist(fix.position, pose.position) < 1e-6


def test_noise_response_multi_led():
    # 0.5 px centroid noise, 500 random poses: median error within 2.5 cm
    rng = np.random.default_rng(7)
    errors = []
    for _ in range(500):
        pose = Pose(
            (rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.4, 1.5)),
            (rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1),
             rng.uniform(-math.pi, math.pi)),
        )
        obs = []
        for i, w in enumerate(DEFAULT_LAMPS):
            o = synth_observation(pose, K, w, uid=i + 1)
            noisy = (o.centroid_px[0] + rng.normal(0, 0.5),
                     o.centroid_px[1] + rng.normal(0, 0.5))
            obs.append(LedObservation(
                uid=o.uid, centroid_px=noisy,
                equiv_diameter_px=o.equiv_diameter_px, world=o.world,
                physical_diameter_m=o.physical_diameter_m))
        fix = solve_multi_led(obs, K)
        errors.append(math.dist(fix.position, pose.position))
    assert float(np.median(errors)) <= 0.025
