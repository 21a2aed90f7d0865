"""Shared domain types and plane geometry.

Everything here is an immutable value type; the policy-carrying modules
(radar simulation, metrics, classifier) build on these.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np


class Source(enum.Enum):
    """Provenance label of a point cloud."""

    REAL = "real"
    SIMULATED = "simulated"


@dataclass(frozen=True)
class Detection:
    """One radar return: planar position plus Doppler velocity.

    Doppler sign convention: positive = receding from the sensor.
    """

    x: float
    y: float
    doppler: float

    def __post_init__(self):
        for name in ("x", "y", "doppler"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"Detection.{name} must be finite")


@dataclass(frozen=True)
class PointCloud:
    """All detections of one sensor frame.

    ``points`` is stored as a tuple for hashability; every consumer treats
    it as a set. An empty cloud is legal input everywhere, consumers define
    their own behavior for it.
    """

    frame: int
    source: Source
    points: tuple[Detection, ...]

    def __post_init__(self):
        if self.frame < 0:
            raise ValueError("frame index must be non-negative")
        object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)

    def as_array(self) -> np.ndarray:
        """(N, 3) float array of (x, y, doppler) rows; (0, 3) when empty."""
        if not self.points:
            return np.zeros((0, 3))
        return np.array([(p.x, p.y, p.doppler) for p in self.points], dtype=float)


def wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose2D:
    """Planar pose with velocity; yaw counterclockwise from +x, in (-pi, pi]."""

    x: float
    y: float
    yaw: float
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class Scenario:
    """Static sensor plus one target-vehicle track sampled at frame rate."""

    frame_rate: float
    sensor_pose: Pose2D
    target_track: tuple[Pose2D, ...]
    target_extent: tuple[float, float]  # length, width (m)

    def __post_init__(self):
        if self.frame_rate <= 0.0:
            raise ValueError("frame_rate must be positive")
        object.__setattr__(self, "target_track", tuple(self.target_track))
        if not self.target_track:
            raise ValueError("target_track must be non-empty")
        length, width = self.target_extent
        if length <= 0.0 or width <= 0.0:
            raise ValueError("target_extent must be strictly positive")

    @property
    def n_frames(self) -> int:
        return len(self.target_track)


def euclidean(a: Detection, b: Detection) -> float:
    """Euclidean distance over all three feature dimensions (x, y, doppler)."""
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.doppler - b.doppler) ** 2)


def rectangle_corners(pose: Pose2D, extent: tuple[float, float]) -> np.ndarray:
    """Corners of the target rectangle in the frame `pose` lives in.

    Counterclockwise order, starting at the front-right corner, so edge k
    runs corner k -> corner k+1 and its outward normal is the edge
    direction rotated -90 degrees.
    """
    half_l, half_w = extent[0] / 2.0, extent[1] / 2.0
    local = np.array(
        [
            [+half_l, -half_w],
            [+half_l, +half_w],
            [-half_l, +half_w],
            [-half_l, -half_w],
        ]
    )
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([pose.x, pose.y])


def point_segment_distance(point, seg_a, seg_b) -> float:
    """Distance from a 2-D point to the segment [seg_a, seg_b]."""
    p = np.asarray(point, dtype=float)
    a = np.asarray(seg_a, dtype=float)
    b = np.asarray(seg_b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    t = float(np.clip((p - a) @ ab / denom, 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


# Node-to-center offset of the lemniscate as a fraction of its half-width;
# keeps the crossing point (the near pass) ahead of the sensor.
_EIGHT_CENTER_RATIO = 0.5


def figure_eight_scenario(
    n_frames: int,
    scale: float,
    frame_rate: float,
    target_extent: tuple[float, float] = (4.5, 1.8),
    center_ratio: float = _EIGHT_CENTER_RATIO,
) -> Scenario:
    """Target driving a closed eight (lemniscate of Bernoulli) ahead of the sensor.

    The lemniscate axis runs laterally, its crossing point ``center_ratio * scale``
    meters in front of the sensor at the origin, so one lap passes close to the
    sensor twice (around 1/4 and 3/4 of the track) and swings out to
    ``sqrt((center_ratio * scale)**2 + scale**2)`` at the lobe tips.

    Velocities are forward finite differences of position at ``frame_rate``
    (last frame repeats the previous one); yaw is tangent to the path.
    """
    if n_frames < 2:
        raise ValueError("n_frames must be >= 2")
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    if frame_rate <= 0.0:
        raise ValueError("frame_rate must be positive")

    center_x = center_ratio * scale
    t = np.linspace(0.0, 2.0 * math.pi, n_frames)
    denom = 1.0 + np.sin(t) ** 2
    xs = center_x + scale * np.sin(t) * np.cos(t) / denom
    ys = scale * np.cos(t) / denom

    vx = np.empty(n_frames)
    vy = np.empty(n_frames)
    vx[:-1] = (xs[1:] - xs[:-1]) * frame_rate
    vy[:-1] = (ys[1:] - ys[:-1]) * frame_rate
    vx[-1] = vx[-2]
    vy[-1] = vy[-2]

    track = tuple(
        Pose2D(x=float(xs[k]), y=float(ys[k]), yaw=math.atan2(vy[k], vx[k]), vx=float(vx[k]), vy=float(vy[k]))
        for k in range(n_frames)
    )
    return Scenario(
        frame_rate=frame_rate,
        sensor_pose=Pose2D(0.0, 0.0, 0.0),
        target_track=track,
        target_extent=target_extent,
    )
