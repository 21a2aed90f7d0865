import math
from dataclasses import replace

import numpy as np
import pytest

from radar_fidelity.core import (
    PointCloud,
    Pose2D,
    Scenario,
    Source,
    figure_eight_scenario,
    point_segment_distance,
    rectangle_corners,
)
from radar_fidelity.radar import (
    RadarConfig,
    Reflection,
    SurrogateParams,
    cast_rays,
    detect,
    detection_probability,
    radial_velocity,
    simulate_frame,
    snr_of,
    surrogate_real_frame,
)


def oracle_cast(target, extent, config):
    """Brute-force per-ray nearest segment intersection, independent of the
    vectorized implementation."""
    corners = rectangle_corners(target, extent)
    segments = [(corners[k], corners[(k + 1) % 4]) for k in range(4)]
    if config.n_rays == 1:
        angles = [0.0]
    else:
        angles = np.linspace(-config.fov, config.fov, config.n_rays)
    hits = []
    for ang in angles:
        d = np.array([math.cos(ang), math.sin(ang)])
        best = None
        for a, b in segments:
            e = b - a
            denom = d[0] * e[1] - d[1] * e[0]
            if abs(denom) < 1e-12:
                continue
            t = (a[0] * e[1] - a[1] * e[0]) / denom
            s = (a[0] * d[1] - a[1] * d[0]) / denom
            if 0.0 <= s <= 1.0 and 1e-9 < t <= config.max_range:
                if best is None or t < best:
                    best = t
        if best is not None:
            hits.append((ang, best))
    return hits


def single_frame_scenario(target: Pose2D, extent=(4.5, 1.8)) -> Scenario:
    return Scenario(10.0, Pose2D(0, 0, 0), (target, target), extent)


def test_cast_rays_misses_target_behind_sensor():
    assert cast_rays(Pose2D(-10.0, 0.0, 0.0), (1.0, 1.0), RadarConfig()) == []


def test_cast_rays_matches_brute_force_oracle():
    config = RadarConfig(fov=math.pi / 4, n_rays=181)
    target = Pose2D(10.0, 0.0, 0.0)
    refl = cast_rays(target, (1.0, 1.0), config)
    oracle = oracle_cast(target, (1.0, 1.0), config)
    assert len(refl) == len(oracle)
    for r, (ang, t) in zip(refl, oracle):
        assert r.incident_ray_azimuth == pytest.approx(ang, abs=1e-12)
        assert r.range == pytest.approx(t, abs=1e-9)


def test_cast_rays_unit_square_hits_front_and_flanks_only():
    config = RadarConfig(fov=math.pi / 4, n_rays=181)
    refl = cast_rays(Pose2D(10.0, 0.0, 0.0), (1.0, 1.0), config)
    assert refl
    for r in refl:
        x, y = r.position
        on_front = abs(x - 9.5) < 1e-9 and abs(y) <= 0.5 + 1e-9
        on_flank = abs(abs(y) - 0.5) < 1e-9 and 9.5 - 1e-9 <= x <= 10.5 + 1e-9
        assert on_front or on_flank
        assert abs(x - 10.5) > 1e-6 or abs(abs(y) - 0.5) < 1e-9  # never the back edge


def test_cast_rays_hit_count_shrinks_with_range():
    config = RadarConfig(fov=math.pi / 4, n_rays=181)
    near = cast_rays(Pose2D(10.0, 0.0, 0.0), (1.0, 1.0), config)
    far = cast_rays(Pose2D(20.0, 0.0, 0.0), (1.0, 1.0), config)
    assert len(near) > len(far) > 0


def test_cast_rays_respects_max_range():
    config = RadarConfig(max_range=15.0)
    assert cast_rays(Pose2D(20.0, 0.0, 0.0), (4.0, 2.0), config) == []


@pytest.mark.parametrize("seed", range(5))
def test_shell_and_occlusion_properties(seed):
    rng = np.random.default_rng(seed)
    config = RadarConfig()
    for _ in range(20):
        target = Pose2D(
            x=rng.uniform(5.0, 60.0),
            y=rng.uniform(-20.0, 20.0),
            yaw=rng.uniform(-math.pi, math.pi),
        )
        extent = (rng.uniform(1.0, 6.0), rng.uniform(0.5, 3.0))
        corners = rectangle_corners(target, extent)
        segments = [(corners[k], corners[(k + 1) % 4]) for k in range(4)]
        edges = np.roll(corners, -1, axis=0) - corners
        normals = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        for r in cast_rays(target, extent, config):
            dists = [point_segment_distance(r.position, a, b) for a, b in segments]
            edge_idx = int(np.argmin(dists))
            assert dists[edge_idx] < 1e-9  # shell property
            # occlusion: the hit edge's outward normal faces the sensor
            midpoint_dir = -np.asarray(r.position)
            assert midpoint_dir @ normals[edge_idx] > 0.0


def test_snr_calibration_anchor():
    config = RadarConfig()
    r = Reflection((10.0, 0.0), 0.0, config.ref_range_m, config.rcs_ref_m2)
    assert snr_of(r, config) == pytest.approx(config.snr_ref_db, abs=1e-12)


def test_snr_range_doubling_drop():
    config = RadarConfig()
    r1 = Reflection((10.0, 0.0), 0.0, 13.0, 2.0)
    r2 = replace(r1, range=26.0)
    drop = snr_of(r1, config) - snr_of(r2, config)
    assert abs(drop - 40.0 * math.log10(2.0)) < 1e-9


def test_snr_rcs_decade_gain():
    config = RadarConfig()
    r1 = Reflection((10.0, 0.0), 0.0, config.ref_range_m, config.rcs_ref_m2)
    r2 = replace(r1, rcs=10.0 * config.rcs_ref_m2)
    assert snr_of(r2, config) == pytest.approx(config.snr_ref_db + 10.0, abs=1e-12)


def test_snr_monotonicity():
    config = RadarConfig()
    rng = np.random.default_rng(3)
    for _ in range(200):
        base = Reflection((1.0, 0.0), 0.0, rng.uniform(1.0, 80.0), rng.uniform(0.1, 20.0))
        farther = replace(base, range=base.range * rng.uniform(1.01, 3.0))
        stronger = replace(base, rcs=base.rcs * rng.uniform(1.01, 3.0))
        assert snr_of(farther, config) < snr_of(base, config)
        assert snr_of(stronger, config) > snr_of(base, config)


def test_detection_probability_midpoint_exact():
    config = RadarConfig()
    assert detection_probability(config.threshold_db, config) == 0.5


def test_detection_probability_hard_threshold_limit():
    config = replace(RadarConfig(), pd_slope=1e9)
    assert detection_probability(config.threshold_db + 0.01, config) == 1.0
    assert detection_probability(config.threshold_db - 0.01, config) == 0.0


def test_detect_reproducible_and_order_sensitive():
    config = RadarConfig()
    refl = [
        Reflection((10.0 + k, 0.0), 0.0, 10.0 + k, 5.0, snr_db=config.threshold_db + k - 2)
        for k in range(6)
    ]
    a = detect(refl, (0.0, 0.0), config, np.random.default_rng(7))
    b = detect(refl, (0.0, 0.0), config, np.random.default_rng(7))
    assert a == b


def test_detect_requires_snr():
    with pytest.raises(ValueError):
        detect([Reflection((1.0, 0.0), 0.0, 1.0, 1.0)], (0, 0), RadarConfig(), np.random.default_rng(0))


def test_detect_doppler_pure_radial_approach():
    config = RadarConfig(threshold_db=-100.0)  # keep everything
    refl = [replace(r, snr_db=snr_of(r, config)) for r in cast_rays(Pose2D(10.0, 0.0, 0.0), (1.0, 1.0), config)]
    cloud = detect(refl, (-5.0, 0.0), config, np.random.default_rng(0))
    assert len(cloud) == len(refl)
    for p in cloud.points:
        assert p.doppler == pytest.approx(-5.0, abs=5e-2)  # flank hits have tiny tangential lever
    head_on = [p for p in cloud.points if abs(p.y) < 1e-9]
    for p in head_on:
        assert p.doppler == pytest.approx(-5.0, abs=1e-12)


def test_radial_velocity_identity():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = rng.uniform(-50, 50, 2)
        v = rng.uniform(-10, 10, 2)
        expected = float(v @ (p / np.linalg.norm(p)))
        assert abs(radial_velocity(p, v) - expected) < 1e-12


def test_radar_config_invariants():
    with pytest.raises(ValueError):
        RadarConfig(n_rays=0)
    with pytest.raises(ValueError):
        RadarConfig(fov=2.0)
    with pytest.raises(ValueError):
        RadarConfig(pd_slope=0.0)
    with pytest.raises(ValueError):
        RadarConfig(max_range=-1.0)


def test_simulate_frame_deterministic():
    sc = figure_eight_scenario(100, 25.0, 10.0)
    config = RadarConfig()
    a = simulate_frame(sc, 30, config, np.random.default_rng(42))
    b = simulate_frame(sc, 30, config, np.random.default_rng(42))
    assert a == b
    assert a.source is Source.SIMULATED
    assert a.frame == 30


def test_simulate_frame_rejects_out_of_range_frame():
    sc = figure_eight_scenario(10, 25.0, 10.0)
    with pytest.raises(IndexError):
        simulate_frame(sc, 10, RadarConfig(), np.random.default_rng(0))
    with pytest.raises(IndexError):
        surrogate_real_frame(sc, -1, RadarConfig(), SurrogateParams(), np.random.default_rng(0))


def test_simulated_count_drops_with_range():
    # statistical check over seeds: near-pass frames carry far more
    # detections than the lobe tips
    sc = figure_eight_scenario(200, 30.0, 10.0)
    ranges = [math.hypot(p.x, p.y) for p in sc.target_track]
    near, far = int(np.argmin(ranges)), int(np.argmax(ranges))
    config = RadarConfig()
    near_counts, far_counts = [], []
    for seed in range(30):
        near_counts.append(len(simulate_frame(sc, near, config, np.random.default_rng(seed))))
        far_counts.append(len(simulate_frame(sc, far, config, np.random.default_rng(seed))))
    assert np.mean(near_counts) > 2.0 * np.mean(far_counts)


def test_surrogate_interior_only():
    sc = single_frame_scenario(Pose2D(12.0, 1.0, 0.4))
    params = SurrogateParams(interior_fraction=1.0, pos_noise_std=0.0, doppler_noise_std=0.0)
    cloud = surrogate_real_frame(sc, 0, RadarConfig(), params, np.random.default_rng(5))
    assert len(cloud) > 0
    assert cloud.source is Source.REAL
    target = sc.target_track[0]
    c, s = math.cos(-target.yaw), math.sin(-target.yaw)
    for p in cloud.points:
        dx, dy = p.x - target.x, p.y - target.y
        lx, ly = c * dx - s * dy, s * dx + c * dy
        assert abs(lx) < sc.target_extent[0] / 2 and abs(ly) < sc.target_extent[1] / 2


def test_surrogate_boundary_only():
    sc = single_frame_scenario(Pose2D(15.0, -2.0, 1.1))
    params = SurrogateParams(interior_fraction=0.0, pos_noise_std=0.0, doppler_noise_std=0.0)
    cloud = surrogate_real_frame(sc, 0, RadarConfig(), params, np.random.default_rng(6))
    corners = rectangle_corners(sc.target_track[0], sc.target_extent)
    segments = [(corners[k], corners[(k + 1) % 4]) for k in range(4)]
    assert len(cloud) > 0
    for p in cloud.points:
        assert min(point_segment_distance((p.x, p.y), a, b) for a, b in segments) < 1e-9


def test_surrogate_outnumbers_simulation_at_far_range():
    sc = figure_eight_scenario(200, 30.0, 10.0)
    far = int(np.argmax([math.hypot(p.x, p.y) for p in sc.target_track]))
    config = RadarConfig()
    params = SurrogateParams()
    sim_counts, real_counts = [], []
    for seed in range(40):
        sim_counts.append(len(simulate_frame(sc, far, config, np.random.default_rng(seed))))
        real_counts.append(len(surrogate_real_frame(sc, far, config, params, np.random.default_rng(seed))))
    assert np.mean(real_counts) > np.mean(sim_counts)


def test_surrogate_empty_outside_fov():
    sc = single_frame_scenario(Pose2D(-20.0, 0.0, 0.0))
    cloud = surrogate_real_frame(sc, 0, RadarConfig(), SurrogateParams(), np.random.default_rng(0))
    assert len(cloud) == 0


def test_surrogate_deterministic():
    sc = figure_eight_scenario(50, 20.0, 10.0)
    a = surrogate_real_frame(sc, 10, RadarConfig(), SurrogateParams(), np.random.default_rng(9))
    b = surrogate_real_frame(sc, 10, RadarConfig(), SurrogateParams(), np.random.default_rng(9))
    assert a == b
