"""Per-frame radar point-cloud generation.

Two sensor modes share the scenario clock:

* the simulated mode is the four-stage pipeline ray casting -> per-hit RCS
  -> SNR -> probabilistic thresholding, which only ever returns points on
  the visible shell of the target rectangle, and
* a surrogate-real mode that stands in for recordings of an actual sensor:
  detections spread over the vehicle interior, a count-vs-range law that is
  flatter than the ray-cast one, and Gaussian measurement noise on position
  and Doppler.

All functions are pure given an explicit ``numpy.random.Generator``; callers
may parallelize over frames or seeds as long as each task owns its rng.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import Detection, PointCloud, Pose2D, Scenario, Source, rectangle_corners

# Grazing incidence floor of the per-hit RCS model: rcs = rcs_ref * max(EPS, cos theta_inc).
GRAZING_RCS_FLOOR = 0.01


@dataclass(frozen=True)
class RadarConfig:
    """Sensor geometry plus the SNR calibration anchor and threshold model.

    The radar equation is collapsed to a single calibrated dB line: a target
    of ``rcs_ref_m2`` at ``ref_range_m`` produces ``snr_ref_db``; from there
    SNR follows 10*log10(rcs) and the R^-4 range law. ``pd_slope`` is the
    logistic steepness of the detection probability around ``threshold_db``.
    """

    fov: float = 1.4  # half-angle (rad)
    n_rays: int = 181
    max_range: float = 100.0
    snr_ref_db: float = 30.0
    ref_range_m: float = 10.0
    rcs_ref_m2: float = 10.0
    threshold_db: float = 12.0
    pd_slope: float = 0.6  # 1/dB
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.fov <= math.pi / 2:
            raise ValueError("fov must be in (0, pi/2]")
        if self.n_rays < 1:
            raise ValueError("n_rays must be >= 1")
        if self.max_range <= 0.0:
            raise ValueError("max_range must be positive")
        if self.ref_range_m <= 0.0 or self.rcs_ref_m2 <= 0.0:
            raise ValueError("reference range and RCS must be positive")
        if self.pd_slope <= 0.0:
            raise ValueError("pd_slope must be positive")


@dataclass(frozen=True)
class Reflection:
    """A single ray hit on the target shell, before thresholding."""

    position: tuple[float, float]
    incident_ray_azimuth: float
    range: float
    rcs: float
    snr_db: float | None = None

    def __post_init__(self):
        if self.range <= 0.0:
            raise ValueError("range must be positive")
        if self.rcs <= 0.0:
            raise ValueError("rcs must be positive")


@dataclass(frozen=True)
class SurrogateParams:
    """Knobs of the surrogate-real generator.

    Expected detection count at target range r is
    ``count_at_ref * (count_range_ref_m / r) ** count_exponent`` (Poisson
    sampled); an exponent below the ray-cast's effective decay makes the
    count grow more gently close up and persist farther out.
    """

    interior_fraction: float = 0.6
    count_at_ref: float = 25.0
    count_range_ref_m: float = 10.0
    count_exponent: float = 0.7
    pos_noise_std: float = 0.15
    doppler_noise_std: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.interior_fraction <= 1.0:
            raise ValueError("interior_fraction must be in [0, 1]")
        if self.count_at_ref < 0.0 or self.count_range_ref_m <= 0.0:
            raise ValueError("count law parameters must be positive")
        if self.pos_noise_std < 0.0 or self.doppler_noise_std < 0.0:
            raise ValueError("noise scales must be non-negative")


def radial_velocity(position, velocity) -> float:
    """Radial component of ``velocity`` at ``position`` seen from the origin.

    Positive = receding. Zero-range points have no defined radial direction;
    returns 0 for them.
    """
    px, py = float(position[0]), float(position[1])
    r = math.hypot(px, py)
    if r == 0.0:
        return 0.0
    return (float(velocity[0]) * px + float(velocity[1]) * py) / r


def detection_probability(snr_db: float, config: RadarConfig) -> float:
    """Logistic survival probability; exactly 0.5 at the threshold."""
    z = config.pd_slope * (snr_db - config.threshold_db)
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))  # exp underflows to 0 in the slope->inf limit
    e = math.exp(z)
    return e / (1.0 + e)


def cast_rays(target: Pose2D, extent: tuple[float, float], config: RadarConfig) -> list[Reflection]:
    """Intersect a uniform ray fan with the target rectangle's visible shell.

    The sensor sits at the origin looking along +x; rays cover
    [-fov, +fov]. Per ray only the nearest edge intersection survives, so
    reflections land exclusively on front-facing edges (the L-shape
    artifact). Hits beyond ``max_range`` are dropped. The per-hit RCS is
    ``rcs_ref_m2 * max(GRAZING_RCS_FLOOR, cos theta_inc)`` with theta_inc the
    angle between the ray and the edge's outward normal.
    """
    if config.n_rays == 1:
        angles = np.array([0.0])
    else:
        angles = np.linspace(-config.fov, config.fov, config.n_rays)
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)  # (R, 2)

    corners = rectangle_corners(target, extent)  # (4, 2) CCW
    seg_a = corners
    seg_b = np.roll(corners, -1, axis=0)
    edge = seg_b - seg_a  # (4, 2)

    # Solve t*d = A + s*e for each ray/edge pair via 2-D cross products.
    denom = dirs[:, 0, None] * edge[None, :, 1] - dirs[:, 1, None] * edge[None, :, 0]  # (R, 4)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (seg_a[None, :, 0] * edge[None, :, 1] - seg_a[None, :, 1] * edge[None, :, 0]) / denom
        s = (seg_a[None, :, 0] * dirs[:, 1, None] - seg_a[None, :, 1] * dirs[:, 0, None]) / denom
    valid = (np.abs(denom) > 1e-12) & (s >= 0.0) & (s <= 1.0) & (t > 1e-9) & (t <= config.max_range)
    t = np.where(valid, t, np.inf)

    nearest_edge = np.argmin(t, axis=1)  # ties -> lowest edge index
    nearest_t = t[np.arange(len(dirs)), nearest_edge]

    # Outward normal of CCW edge k is its direction rotated -90 degrees.
    normals = np.stack([edge[:, 1], -edge[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    reflections = []
    for ray, (edge_idx, rng_m) in enumerate(zip(nearest_edge, nearest_t)):
        if not np.isfinite(rng_m):
            continue
        hit = dirs[ray] * rng_m
        cos_inc = float(-dirs[ray] @ normals[edge_idx])
        rcs = config.rcs_ref_m2 * max(GRAZING_RCS_FLOOR, cos_inc)
        reflections.append(
            Reflection(
                position=(float(hit[0]), float(hit[1])),
                incident_ray_azimuth=float(angles[ray]),
                range=float(rng_m),
                rcs=rcs,
            )
        )
    return reflections


def snr_of(reflection: Reflection, config: RadarConfig) -> float:
    """Calibrated radar-equation SNR: RCS-proportional, R^-4 range law."""
    if reflection.range <= 0.0:
        raise ValueError("range must be positive")
    return (
        config.snr_ref_db
        + 10.0 * math.log10(reflection.rcs / config.rcs_ref_m2)
        - 40.0 * math.log10(reflection.range / config.ref_range_m)
    )


def detect(
    reflections: list[Reflection],
    rel_velocity: tuple[float, float],
    config: RadarConfig,
    rng: np.random.Generator,
    frame: int = 0,
) -> PointCloud:
    """Threshold reflections into detections.

    Each reflection survives independently with the logistic probability of
    its SNR; one uniform draw is consumed per reflection, in list order.
    ``rel_velocity`` is the target velocity relative to the sensor, in the
    sensor frame; it sets each survivor's Doppler (positive receding).
    """
    points = []
    for refl in reflections:
        if refl.snr_db is None:
            raise ValueError("snr_db must be populated before thresholding")
        survives = rng.random() < detection_probability(refl.snr_db, config)
        if survives:
            points.append(
                Detection(
                    x=refl.position[0],
                    y=refl.position[1],
                    doppler=radial_velocity(refl.position, rel_velocity),
                )
            )
    return PointCloud(frame=frame, source=Source.SIMULATED, points=tuple(points))


def _target_in_sensor_frame(scenario: Scenario, frame: int) -> tuple[Pose2D, tuple[float, float]]:
    """Target pose of one frame expressed in the sensor frame, plus the
    relative velocity (target minus sensor) rotated into that frame."""
    if not 0 <= frame < scenario.n_frames:
        raise IndexError(f"frame {frame} out of range [0, {scenario.n_frames})")
    sensor = scenario.sensor_pose
    target = scenario.target_track[frame]
    c, s = math.cos(-sensor.yaw), math.sin(-sensor.yaw)
    dx, dy = target.x - sensor.x, target.y - sensor.y
    rvx, rvy = target.vx - sensor.vx, target.vy - sensor.vy
    pose = Pose2D(
        x=c * dx - s * dy,
        y=s * dx + c * dy,
        yaw=target.yaw - sensor.yaw,
        vx=c * rvx - s * rvy,
        vy=s * rvx + c * rvy,
    )
    return pose, (pose.vx, pose.vy)


def simulate_frame(
    scenario: Scenario, frame: int, config: RadarConfig, rng: np.random.Generator
) -> PointCloud:
    """Full simulated pipeline for one frame: cast_rays -> snr_of -> detect."""
    target, rel_velocity = _target_in_sensor_frame(scenario, frame)
    reflections = cast_rays(target, scenario.target_extent, config)
    reflections = [replace(r, snr_db=snr_of(r, config)) for r in reflections]
    return detect(reflections, rel_velocity, config, rng, frame=frame)


def surrogate_real_frame(
    scenario: Scenario,
    frame: int,
    config: RadarConfig,
    surrogate: SurrogateParams,
    rng: np.random.Generator,
) -> PointCloud:
    """Stand-in for a real sensor recording of one frame.

    Draws a Poisson count from the surrogate's range law, scatters that many
    points over the vehicle (interior with probability ``interior_fraction``,
    otherwise uniformly on the perimeter), then perturbs positions and
    Doppler with Gaussian noise. Targets outside the field of view or beyond
    ``max_range`` give an empty cloud. Draw order per frame: count, then per
    point (placement selector, location, position noise, Doppler noise).
    """
    target, rel_velocity = _target_in_sensor_frame(scenario, frame)
    center_range = math.hypot(target.x, target.y)
    azimuth = math.atan2(target.y, target.x)
    if center_range > config.max_range or abs(azimuth) > config.fov or center_range == 0.0:
        return PointCloud(frame=frame, source=Source.REAL, points=())

    lam = surrogate.count_at_ref * (surrogate.count_range_ref_m / center_range) ** surrogate.count_exponent
    count = int(rng.poisson(lam))

    length, width = scenario.target_extent
    cos_y, sin_y = math.cos(target.yaw), math.sin(target.yaw)
    half_l, half_w = length / 2.0, width / 2.0
    perimeter = 2.0 * (length + width)

    points = []
    for _ in range(count):
        if rng.random() < surrogate.interior_fraction:
            lx = rng.uniform(-half_l, half_l)
            ly = rng.uniform(-half_w, half_w)
        else:
            along = rng.uniform(0.0, perimeter)
            if along < length:
                lx, ly = along - half_l, -half_w
            elif along < length + width:
                lx, ly = half_l, along - length - half_w
            elif along < 2.0 * length + width:
                lx, ly = along - (2.0 * length + width) + half_l, half_w
                lx = -lx  # keep within [-half_l, half_l], traversing CCW
            else:
                lx, ly = -half_l, along - (2.0 * length + width) - half_w
                ly = -ly
        px = target.x + cos_y * lx - sin_y * ly
        py = target.y + sin_y * lx + cos_y * ly
        doppler = radial_velocity((px, py), rel_velocity)
        nx, ny = rng.normal(0.0, surrogate.pos_noise_std, size=2)
        doppler += rng.normal(0.0, surrogate.doppler_noise_std)
        points.append(Detection(x=px + nx, y=py + ny, doppler=doppler))
    return PointCloud(frame=frame, source=Source.REAL, points=tuple(points))
