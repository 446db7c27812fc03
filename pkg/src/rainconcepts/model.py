"""Segmentation-model adapter: toy encoder/decoder and feature extraction.

The toy model stands in for the (unpublished) operational nowcasting
network: two stride-2 convolution stages with a non-negative clamp down
to the bottleneck, and an affine per-class decoder followed by bilinear
upsampling. The affine head makes directional derivatives analytically
available, which the attribution oracles rely on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import AdapterError, MissingArtifactError
from .preprocess import CLASS_BOUNDARIES, ModelInput, SegmentMask

SEGMENT_SIZE = 9  # spatial side of a resized segment feature

WEIGHTS_MAGIC = b"TOYW"


@dataclass(frozen=True)
class ModelSpec:
    input_channels: int = 13
    num_classes: int = 8
    class_boundaries: tuple[float, ...] = CLASS_BOUNDARIES
    bottleneck_shape: tuple[int, int, int] = (64, 8, 8)

    def __post_init__(self):
        if len(self.class_boundaries) != self.num_classes:
            raise AdapterError("class count must equal boundary count")


@dataclass(frozen=True)
class FeatureMap:
    values: np.ndarray  # (C, H, W)
    reference_time: object = None

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 3 or not np.isfinite(v).all():
            raise AdapterError("feature map must be finite (C, H, W)")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class SegmentFeature:
    vector: np.ndarray  # flattened, pruned, resized activations
    timestamp: object
    segment_id: int
    bbox: tuple[int, int, int, int]
    pixel_count: int

    @property
    def activation_state(self) -> np.ndarray:
        return self.vector > 0


@dataclass(frozen=True)
class ChannelPruneMap:
    active_indices: tuple[int, ...]
    total_channels: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.active_indices)
        if list(idx) != sorted(set(idx)) or (idx and (idx[0] < 0 or idx[-1] >= self.total_channels)):
            raise AdapterError("active indices must be strictly increasing and in range")
        object.__setattr__(self, "active_indices", idx)


def resample_matrix(n_src: int, n_dst: int) -> np.ndarray:
    """Row-stochastic linear interpolation matrix (align-corners sampling)."""
    out = np.zeros((n_dst, n_src), dtype=np.float64)
    if n_src == 1:
        out[:, 0] = 1.0
        return out
    pos = np.linspace(0.0, n_src - 1.0, n_dst)
    lo = np.floor(pos).astype(int)
    hi = np.minimum(lo + 1, n_src - 1)
    frac = pos - lo
    out[np.arange(n_dst), lo] += 1.0 - frac
    out[np.arange(n_dst), hi] += frac
    return out


def bilinear_resize(arr: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Resize the trailing two axes of ``arr`` by separable bilinear sampling."""
    rr = resample_matrix(arr.shape[-2], shape[0])
    cc = resample_matrix(arr.shape[-1], shape[1])
    return np.einsum("ij,...jk,lk->...il", rr, arr, cc)


def _conv2d_s2(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """3x3 convolution, stride 2, pad 1. x: (Cin, H, W); w: (Cout, Cin, 3, 3)."""
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))[:, ::2, ::2]
    return np.einsum("cijkl,ockl->oij", win, w) + b[:, None, None]


@dataclass
class ToyModelConfig:
    input_channels: int = 13
    hidden_channels: int = 32
    bottleneck_channels: int = 64
    num_classes: int = 8
    input_size: tuple[int, int] = (32, 32)
    seed: int = 42

    @property
    def bottleneck_shape(self) -> tuple[int, int, int]:
        return (self.bottleneck_channels, self.input_size[0] // 4, self.input_size[1] // 4)


class ToyModel:
    """Deterministic toy segmentation model (pure numpy forward pass)."""

    STRIDE = 4  # cumulative encoder stride

    def __init__(self, config: ToyModelConfig, weights: list[np.ndarray]):
        self.config = config
        (self.conv1_w, self.conv1_b, self.conv2_w, self.conv2_b,
         self.dec_w, self.dec_b) = weights
        self.spec = ModelSpec(
            input_channels=config.input_channels,
            num_classes=config.num_classes,
            bottleneck_shape=config.bottleneck_shape,
        )
        h, w = config.input_size
        self._up_r = resample_matrix(h // 4, h)
        self._up_c = resample_matrix(w // 4, w)

    @classmethod
    def create(cls, config: ToyModelConfig | None = None) -> "ToyModel":
        config = config or ToyModelConfig()
        rng = np.random.default_rng(config.seed)
        c_in, c_mid, c_bot, k = (config.input_channels, config.hidden_channels,
                                 config.bottleneck_channels, config.num_classes)
        weights = [
            rng.normal(0, 0.25, (c_mid, c_in, 3, 3)),
            rng.normal(0, 0.05, c_mid),
            rng.normal(0, 0.15, (c_bot, c_mid, 3, 3)),
            rng.normal(0, 0.05, c_bot),
            rng.normal(0, 0.3, (k, c_bot)),
            rng.normal(0, 0.1, k),
        ]
        return cls(config, [w.astype(np.float64) for w in weights])

    # --- forward ---------------------------------------------------------

    def encode(self, model_input: ModelInput) -> FeatureMap:
        x = np.asarray(model_input.channels, dtype=np.float64)
        if x.shape != (self.config.input_channels, *self.config.input_size):
            raise AdapterError(
                f"input shape {x.shape} does not match model "
                f"{(self.config.input_channels, *self.config.input_size)}"
            )
        h1 = np.maximum(_conv2d_s2(x, self.conv1_w, self.conv1_b), 0.0)
        z = np.maximum(_conv2d_s2(h1, self.conv2_w, self.conv2_b), 0.0)
        return FeatureMap(values=z, reference_time=model_input.reference_time)

    def decode(self, feature: FeatureMap) -> np.ndarray:
        z = np.asarray(feature.values, dtype=np.float64)
        if z.shape != self.config.bottleneck_shape:
            raise AdapterError(
                f"feature shape {z.shape} != bottleneck {self.config.bottleneck_shape}"
            )
        low = np.einsum("kc,chw->khw", self.dec_w, z) + self.dec_b[:, None, None]
        return np.einsum("ij,kjl,ml->kim", self._up_r, low, self._up_c)

    def decode_pullback(self, class_k: int, output_weights: np.ndarray) -> np.ndarray:
        """Gradient of sum(output_weights * logits[class_k]) w.r.t. the feature.

        Exact for the affine head; ``output_weights`` is any fixed (H, W)
        weighting of output pixels (e.g. an argmax mask).
        """
        s = self._up_r.T @ np.asarray(output_weights, dtype=np.float64) @ self._up_c
        return self.dec_w[class_k][:, None, None] * s[None, :, :]

    def predict_classes(self, feature: FeatureMap) -> np.ndarray:
        return np.argmax(self.decode(feature), axis=0)

    # --- weight serialization -------------------------------------------

    def weight_list(self) -> list[np.ndarray]:
        return [self.conv1_w, self.conv1_b, self.conv2_w, self.conv2_b,
                self.dec_w, self.dec_b]

    def save_weights(self, path: Path) -> None:
        with open(path, "wb") as fh:
            layers = self.weight_list()
            fh.write(struct.pack("<4sI", WEIGHTS_MAGIC, len(layers)))
            for w in layers:
                fh.write(struct.pack("<I", w.ndim))
                fh.write(struct.pack(f"<{w.ndim}I", *w.shape))
                fh.write(w.astype("<f4").tobytes())

    @classmethod
    def load_weights(cls, path: Path, config: ToyModelConfig | None = None) -> "ToyModel":
        path = Path(path)
        if not path.exists():
            raise MissingArtifactError(f"model weights not found: {path}")
        data = path.read_bytes()
        magic, n_layers = struct.unpack_from("<4sI", data)
        if magic != WEIGHTS_MAGIC:
            raise AdapterError(f"{path}: bad magic {magic!r}")
        off = 8
        layers = []
        for _ in range(n_layers):
            (ndim,) = struct.unpack_from("<I", data, off)
            off += 4
            shape = struct.unpack_from(f"<{ndim}I", data, off)
            off += 4 * ndim
            count = int(np.prod(shape))
            arr = np.frombuffer(data, dtype="<f4", count=count, offset=off)
            off += 4 * count
            layers.append(arr.reshape(shape).astype(np.float64))
        if config is None:
            c_mid, c_in = layers[0].shape[:2]
            c_bot = layers[2].shape[0]
            k = layers[4].shape[0]
            # input size is not stored; default desk scale
            config = ToyModelConfig(input_channels=c_in, hidden_channels=c_mid,
                                    bottleneck_channels=c_bot, num_classes=k)
        return cls(config, layers)


def compute_prune_map(features) -> ChannelPruneMap:
    """Channels activating at least once across the feature stream."""
    max_per_channel = None
    total = None
    for fm in features:
        m = fm.values.max(axis=(1, 2))
        total = m.size
        max_per_channel = m if max_per_channel is None else np.maximum(max_per_channel, m)
    if max_per_channel is None:
        raise AdapterError("empty feature stream")
    active = tuple(int(i) for i in np.nonzero(max_per_channel > 0)[0])
    return ChannelPruneMap(active_indices=active, total_channels=total)


def extract_segment_feature(
    feature: FeatureMap,
    mask: SegmentMask,
    segment_id: int,
    prune: ChannelPruneMap,
    stride: int = ToyModel.STRIDE,
    out_size: int = SEGMENT_SIZE,
) -> SegmentFeature:
    """Crop, mask, prune, and resize one segment's bottleneck activation."""
    info = mask.segment(segment_id)
    r0, c0, r1, c1 = info.bbox
    if r1 <= r0 or c1 <= c0:
        raise AdapterError(f"degenerate bounding box {info.bbox}")
    # image coords -> bottleneck coords, rounded outward
    fr0, fc0 = r0 // stride, c0 // stride
    fr1 = -(-r1 // stride)
    fc1 = -(-c1 // stride)

    seg_pixels = mask.label_grid == segment_id
    h, w = seg_pixels.shape
    seg_low = seg_pixels.reshape(h // stride, stride, w // stride, stride).max(axis=(1, 3))

    vals = feature.values * seg_low[None, :, :]
    crop = vals[list(prune.active_indices), fr0:fr1, fc0:fc1]
    resized = bilinear_resize(crop, (out_size, out_size))
    return SegmentFeature(
        vector=resized.reshape(-1).astype(np.float32),
        timestamp=mask.frame_time,
        segment_id=segment_id,
        bbox=info.bbox,
        pixel_count=info.pixel_count,
    )
