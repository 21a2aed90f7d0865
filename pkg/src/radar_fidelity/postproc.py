"""Post-processing of raw per-frame metric series into fidelity traces.

The chain is: average across runs -> min-max normalize and orient so that
1 is always "high fidelity" -> Savitzky-Golay smoothing -> mean/std
summary. Gaps (frames where a metric could not be computed, e.g. an empty
cloud) are carried as NaN: they survive averaging only if gapped in every
run, stay gaps through normalization and smoothing, and are excluded from
the summary statistics.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class ConstantSeriesError(ValueError):
    """Series has no spread; min-max normalization is undefined."""


class Orientation(enum.Enum):
    LOWER_IS_BETTER = "lower_is_better"
    HIGHER_IS_BETTER = "higher_is_better"


@dataclass(frozen=True)
class FidelityTrace:
    """One metric's per-frame fidelity series in raw and processed form.

    ``normalized`` lives in [0, 1] with 1 = high fidelity; ``mean``/``std``
    are population statistics over the non-gap normalized values, before
    smoothing.
    """

    metric_name: str
    frames: np.ndarray
    raw: np.ndarray
    normalized: np.ndarray
    smoothed: np.ndarray
    mean: float
    std: float

    def __post_init__(self):
        lengths = {len(self.frames), len(self.raw), len(self.normalized), len(self.smoothed)}
        if len(lengths) != 1:
            raise ValueError("frames, raw, normalized and smoothed must share one length")


def average_runs(runs) -> np.ndarray:
    """Element-wise mean across runs, skipping gap entries per frame.

    A frame gapped in every run stays a gap. The mean is computed as
    anchor + mean(deltas), which makes averaging k identical runs exact.
    """
    arrays = [np.asarray(r, dtype=float) for r in runs]
    if not arrays:
        raise ValueError("no runs to average")
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("runs disagree on the frame axis")
    stacked = np.vstack(arrays)
    out = np.full(n, np.nan)
    for k in range(n):
        col = stacked[:, k]
        finite = col[np.isfinite(col)]
        if len(finite):
            anchor = finite[0]
            out[k] = anchor + np.sum(finite - anchor) / len(finite)
    return out


def normalize_and_reverse(series, orientation: Orientation) -> np.ndarray:
    """Min-max rescale to [0, 1] and orient so 1 = high fidelity.

    For LOWER_IS_BETTER metrics (distances) the axis is reversed; for
    HIGHER_IS_BETTER (classifier confidence) it is kept. Gaps pass through.
    """
    x = np.asarray(series, dtype=float)
    finite = x[np.isfinite(x)]
    if len(finite) < 2:
        raise ConstantSeriesError("need at least two finite values to normalize")
    lo, hi = float(finite.min()), float(finite.max())
    if lo == hi:
        raise ConstantSeriesError("constant series cannot be min-max normalized")
    scaled = (x - lo) / (hi - lo)
    if orientation is Orientation.LOWER_IS_BETTER:
        scaled = 1.0 - scaled
    return scaled


def savitzky_golay(series, window: int, order: int) -> np.ndarray:
    """Least-squares polynomial smoothing.

    Each output sample is the value at the center of a polynomial of
    ``order`` fit to the surrounding ``window`` samples. At the series
    edges the same polynomial is fit on the truncated one-sided window
    rather than on padded data. Windows spanning gaps fit on the available
    samples only (with the degree lowered if too few remain); gap positions
    themselves stay gaps.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError("window must be an odd integer >= 3")
    if not 0 <= order < window:
        raise ValueError("order must satisfy 0 <= order < window")
    x = np.asarray(series, dtype=float)
    if len(x) < window:
        raise ValueError("series shorter than window")

    half = window // 2
    out = np.full(len(x), np.nan)
    offsets = np.arange(-half, half + 1, dtype=float)
    for i in range(len(x)):
        if not math.isfinite(x[i]):
            continue
        lo = max(0, i - half)
        hi = min(len(x), i + half + 1)
        ys = x[lo:hi]
        ts = offsets[lo - i + half : hi - i + half]
        keep = np.isfinite(ys)
        ys, ts = ys[keep], ts[keep]
        degree = min(order, len(ys) - 1)
        vander = ts[:, None] ** np.arange(degree + 1)
        coeffs, *_ = np.linalg.lstsq(vander, ys, rcond=None)
        out[i] = coeffs[0]  # polynomial value at the window center
    return out


def series_stats(normalized) -> tuple[float, float]:
    """Population mean and standard deviation over non-gap entries."""
    x = np.asarray(normalized, dtype=float)
    finite = x[np.isfinite(x)]
    if len(finite) == 0:
        raise ValueError("all-gap series has no statistics")
    mean = float(np.mean(finite))
    return mean, float(np.sqrt(np.mean((finite - mean) ** 2)))


def summarize(trace: FidelityTrace) -> tuple[float, float]:
    """(mean, std) of a trace's normalized series, gaps excluded."""
    return series_stats(trace.normalized)


def build_trace(
    metric_name: str,
    frames,
    raw,
    orientation: Orientation,
    window: int = 11,
    order: int = 3,
) -> FidelityTrace:
    """Run the full post-processing chain for one averaged metric series."""
    raw = np.asarray(raw, dtype=float)
    normalized = normalize_and_reverse(raw, orientation)
    smoothed = savitzky_golay(normalized, window, order)
    mean, std = series_stats(normalized)
    return FidelityTrace(
        metric_name=metric_name,
        frames=np.asarray(frames, dtype=int),
        raw=raw,
        normalized=normalized,
        smoothed=smoothed,
        mean=mean,
        std=std,
    )
