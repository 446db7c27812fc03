"""Radar preprocessing: reflectivity conversion, normalization, segmentation.

All functions here are pure; frames are treated as immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
from scipy import ndimage
from skimage.feature import peak_local_max
from skimage.segmentation import watershed

from .errors import ConfigurationError, FrameGapError, RejectedFrameError

# Z-R power law R = (Z / ZR_A) ** (1 / ZR_B)
ZR_A = 148.0
ZR_B = 1.59

# Modified-tanh normalization: t = 0.5 * tanh(0.01 * (x - MU) / SIGMA),
# then affinely mapped from (-0.5, 0.5] onto (-0.8182, 1].
NORM_MU = -0.01
NORM_SIGMA = 4.0
RESCALE_SLOPE = 1.8182
RESCALE_INTERCEPT = 0.0909
RAIN_RANGE = (-0.8182, 1.0)

LAT_RANGE = (0.6911, 1.0)
LON_RANGE = (0.8899, 1.0)

#: mm/hr class boundaries of the 8-class target model.
CLASS_BOUNDARIES = (0.0, 0.1, 1.0, 5.0, 10.0, 20.0, 25.0, 30.0)

CHANNEL_ROLES = (
    "rain_t-60", "rain_t-50", "rain_t-40", "rain_t-30",
    "rain_t-20", "rain_t-10", "rain_t-0",
    "rain_1h_mean", "latitude", "longitude", "month", "day", "hour",
)

DEFAULT_RAIN_THRESHOLD = 0.1   # lowest class boundary, mm/hr
DEFAULT_MIN_SEGMENT_PIXELS = 16


def _check_aligned(ts: datetime) -> None:
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {ts} is naive; UTC required")
    if ts.minute % 10 != 0 or ts.second != 0 or ts.microsecond != 0:
        raise ValueError(f"timestamp {ts.isoformat()} not on a 10-minute boundary")


@dataclass(frozen=True)
class RadarFrame:
    """One timestamped 2-D rain-rate grid (mm/hr) with geographic extent."""

    timestamp: datetime
    grid: np.ndarray
    extent: tuple[float, float, float, float] = (33.0, 43.0, 124.0, 132.0)

    def __post_init__(self):
        _check_aligned(self.timestamp)
        grid = np.asarray(self.grid)
        if grid.ndim != 2:
            raise ValueError(f"grid must be 2-D, got shape {grid.shape}")
        if not np.isfinite(grid).all() or (grid < 0).any():
            raise ValueError("rain rates must be finite and non-negative")
        object.__setattr__(self, "grid", grid)

    @property
    def resolution(self) -> tuple[int, int]:
        return self.grid.shape


@dataclass(frozen=True)
class ModelInput:
    """13-channel normalized tensor fed to the segmentation model."""

    channels: np.ndarray
    reference_time: datetime
    channel_roles: tuple[str, ...] = CHANNEL_ROLES

    def __post_init__(self):
        ch = np.asarray(self.channels)
        if ch.ndim != 3 or ch.shape[0] != len(CHANNEL_ROLES):
            raise ValueError(f"expected ({len(CHANNEL_ROLES)}, H, W), got {ch.shape}")
        object.__setattr__(self, "channels", ch)


@dataclass(frozen=True)
class SegmentInfo:
    segment_id: int
    bbox: tuple[int, int, int, int]  # (row0, col0, row1, col1), half-open
    pixel_count: int


@dataclass(frozen=True)
class SegmentMask:
    """Per-pixel segment ids for one frame; 0 marks background."""

    frame_time: datetime
    label_grid: np.ndarray
    segments: tuple[SegmentInfo, ...] = field(default_factory=tuple)

    def segment(self, segment_id: int) -> SegmentInfo:
        for seg in self.segments:
            if seg.segment_id == segment_id:
                return seg
        raise KeyError(f"unknown segment id {segment_id}")


def dbz_to_rainrate(
    raw: np.ndarray,
    timestamp: datetime,
    extent: tuple[float, float, float, float] = RadarFrame.extent,
    sentinel: int | None = None,
) -> RadarFrame:
    """Convert scaled-dBZ integers (hundredths of dBZ) into a rain-rate frame.

    Sentinel pixels map to 0 mm/hr.
    """
    raw = np.asarray(raw, dtype=np.float64)
    bad = ~np.isfinite(raw)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise RejectedFrameError(f"non-finite raw value at pixel {idx}")
    missing = np.zeros(raw.shape, dtype=bool) if sentinel is None else raw == sentinel
    dbz = raw / 100.0
    z = np.power(10.0, 0.1 * dbz)
    rain = np.power(z / ZR_A, 1.0 / ZR_B)
    rain[missing] = 0.0
    return RadarFrame(timestamp=timestamp, grid=rain, extent=extent)


def rainrate_to_dbz(rain: np.ndarray) -> np.ndarray:
    """Inverse of the Z-R conversion, for round-trip checks."""
    z = ZR_A * np.power(np.asarray(rain, dtype=np.float64), ZR_B)
    return 10.0 * np.log10(z)


def normalize_rain(value):
    """Map rain rates (mm/hr) into (-0.8182, 1] via the modified tanh."""
    t = 0.5 * np.tanh(0.01 * (np.asarray(value, dtype=np.float64) - NORM_MU) / NORM_SIGMA)
    return RESCALE_SLOPE * t + RESCALE_INTERCEPT


def rain_to_class(rain: np.ndarray) -> np.ndarray:
    """Bucket rain rates (mm/hr) into the 8 intensity class indices."""
    return np.digitize(np.asarray(rain, dtype=np.float64),
                       CLASS_BOUNDARIES[1:]).astype(np.int64)


def downsample(frame: RadarFrame, factor: int = 2) -> RadarFrame:
    """Max-pool a frame by an integer factor per axis."""
    h, w = frame.grid.shape
    if h % factor or w % factor:
        raise ConfigurationError(
            f"grid {h}x{w} not divisible by downsample factor {factor}"
        )
    pooled = frame.grid.reshape(h // factor, factor, w // factor, factor).max(axis=(1, 3))
    return RadarFrame(timestamp=frame.timestamp, grid=pooled, extent=frame.extent)


def _axis_positions(n: int) -> np.ndarray:
    # (0, 1] fractional positions, one per row/column
    return (np.arange(n, dtype=np.float64) + 1.0) / n


def latitude_channel(shape: tuple[int, int]) -> np.ndarray:
    lo, hi = LAT_RANGE
    col = lo + _axis_positions(shape[0]) * (hi - lo)
    return np.repeat(col[:, None], shape[1], axis=1)


def longitude_channel(shape: tuple[int, int]) -> np.ndarray:
    lo, hi = LON_RANGE
    row = lo + _axis_positions(shape[1]) * (hi - lo)
    return np.repeat(row[None, :], shape[0], axis=0)


def assemble_input(frames: list[RadarFrame], reference_time: datetime) -> ModelInput:
    """Stack 7 lagged frames, the 1-hour mean, and static channels.

    Frames must cover T-60..T-0 in 10-minute steps.
    """
    _check_aligned(reference_time)
    by_time = {f.timestamp: f for f in frames}
    ordered = []
    for lag_minutes in range(60, -10, -10):
        want = reference_time - _minutes(lag_minutes)
        if want not in by_time:
            raise FrameGapError(want)
        ordered.append(by_time[want])
    shape = ordered[0].grid.shape
    for f in ordered:
        if f.grid.shape != shape:
            raise ConfigurationError("frames in a sequence must share resolution")

    channels = np.empty((13,) + shape, dtype=np.float64)
    for i, f in enumerate(ordered):
        channels[i] = normalize_rain(f.grid)
    channels[7] = normalize_rain(np.mean([f.grid for f in ordered], axis=0))
    channels[8] = latitude_channel(shape)
    channels[9] = longitude_channel(shape)
    t = reference_time
    channels[10] = (t.month - 1) / 11.0
    channels[11] = (t.day - 1) / 30.0
    channels[12] = t.hour / 23.0
    return ModelInput(channels=channels, reference_time=reference_time)


def _minutes(m: int):
    from datetime import timedelta

    return timedelta(minutes=m)


def watershed_segments(
    frame: RadarFrame,
    rain_threshold: float = DEFAULT_RAIN_THRESHOLD,
    min_pixels: int = DEFAULT_MIN_SEGMENT_PIXELS,
    peak_min_distance: int = 5,
) -> SegmentMask:
    """Split the above-threshold rain field into independent segments.

    Marker-based watershed with 8-connectivity: local maxima of the rain
    field seed basins on the negated field, restricted to the foreground.
    Components smaller than ``min_pixels`` are dropped.
    """
    if rain_threshold <= 0:
        raise ConfigurationError("rain_threshold must be > 0")
    grid = frame.grid
    foreground = grid > rain_threshold
    if not foreground.any():
        return SegmentMask(frame_time=frame.timestamp,
                           label_grid=np.zeros(grid.shape, dtype=np.int32))

    peaks = peak_local_max(
        grid,
        min_distance=peak_min_distance,
        labels=ndimage.label(foreground, structure=np.ones((3, 3)))[0],
        exclude_border=False,
    )
    markers = np.zeros(grid.shape, dtype=np.int32)
    for i, (r, c) in enumerate(peaks, start=1):
        markers[r, c] = i
    labels = watershed(-grid, markers=markers, mask=foreground, connectivity=2)

    # drop small basins and relabel contiguously
    out = np.zeros(grid.shape, dtype=np.int32)
    segments: list[SegmentInfo] = []
    next_id = 1
    for lab in np.unique(labels):
        if lab == 0:
            continue
        mask = labels == lab
        count = int(mask.sum())
        if count < min_pixels:
            continue
        rows, cols = np.nonzero(mask)
        bbox = (int(rows.min()), int(cols.min()), int(rows.max()) + 1, int(cols.max()) + 1)
        out[mask] = next_id
        segments.append(SegmentInfo(segment_id=next_id, bbox=bbox, pixel_count=count))
        next_id += 1
    return SegmentMask(frame_time=frame.timestamp, label_grid=out,
                       segments=tuple(segments))


def utc(year, month, day, hour=0, minute=0) -> datetime:
    """Shorthand for a UTC datetime on the radar time lattice."""
    return datetime(year, month, day, hour, minute, tzinfo=timezone.utc)
