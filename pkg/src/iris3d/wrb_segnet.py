"""Toy-scale U-shaped segmentation network whose skip connections are
wavelet refinement blocks.

Four encoder blocks (two 3x3 conv + ReLU each) with 2x2 max pooling between
them. Instead of concatenating raw encoder features into the decoder, each
of the three skip levels decomposes its encoder feature with the Haar DWT,
runs a separate 1x1 convolution per subband, and concatenates the four
results with the decoder feature at the subband resolution (half the
encoder's). The ablation mode replaces each refinement block with a plain
pooled skip of identical output shape, so the two variants share every
other shape contract.

Training is plain SGD (lr 0.05, momentum 0.9) on per-pixel softmax
cross-entropy with a fixed seed; everything is deterministic.
"""

from __future__ import annotations

import numpy as np

from . import tensor_nn as tn
from .boundary import BoundarySegment, segments_from_columns
from .dwt import dwt_forward_node
from .errors import ConfigError, ShapeError

__all__ = [
    "WrbNetConfig",
    "init_params",
    "wrb_block",
    "segnet_forward",
    "segnet_train",
    "predict_mask",
    "extract_upper_boundary",
    "validate_mask",
]

from dataclasses import dataclass


@dataclass(frozen=True)
class WrbNetConfig:
    height: int = 64
    width: int = 64
    in_channels: int = 1
    widths: tuple[int, int, int, int] = (8, 16, 32, 64)
    classes: int = 2
    wrb_channels: tuple[int, int, int] | None = None  # default widths[i] // 4
    skip_mode: str = "wrb"  # "wrb" | "pool"

    def __post_init__(self):
        if self.height % 8 or self.width % 8:
            raise ConfigError(
                f"input extents must divide by 8 (three skip levels), got "
                f"{self.height}x{self.width}"
            )
        if len(self.widths) != 4 or min(self.widths) < 1:
            raise ConfigError(f"need four positive encoder widths, got {self.widths}")
        if self.skip_mode not in ("wrb", "pool"):
            raise ConfigError(f"skip_mode must be 'wrb' or 'pool', got {self.skip_mode!r}")
        if self.wrb_channels is None:
            if any(w % 4 for w in self.widths[:3]):
                raise ConfigError(
                    "default per-subband channels are widths/4; first three "
                    f"widths must divide by 4, got {self.widths[:3]}"
                )
            object.__setattr__(
                self, "wrb_channels", tuple(w // 4 for w in self.widths[:3])
            )
        if self.classes < 2:
            raise ConfigError("need at least 2 classes")


_BANDS = ("ll", "lh", "hl", "hh")


def init_params(cfg: WrbNetConfig, seed: int = 0) -> dict[str, tn.Param]:
    """He-normal conv weights, zero biases; deterministic given the seed."""
    rng = np.random.default_rng(seed)
    params: dict[str, tn.Param] = {}

    def conv(name, c_in, c_out, k):
        std = np.sqrt(2.0 / (c_in * k * k))
        params[f"{name}.w"] = tn.Param(
            f"{name}.w", rng.normal(0.0, std, size=(c_out, c_in, k, k))
        )
        params[f"{name}.b"] = tn.Param(f"{name}.b", np.zeros(c_out))

    w1, w2, w3, w4 = cfg.widths
    enc_in = (cfg.in_channels, w1, w2, w3)
    for i, (ci, co) in enumerate(zip(enc_in, cfg.widths), start=1):
        conv(f"enc{i}.c0", ci, co, 3)
        conv(f"enc{i}.c1", co, co, 3)
    if cfg.skip_mode == "wrb":
        for level, (enc_w, sub) in enumerate(
            zip(cfg.widths[:3], cfg.wrb_channels), start=1
        ):
            for band in _BANDS:
                conv(f"wrb{level}.{band}", enc_w, sub, 1)
    # Decoder blocks consume the concatenated skip output after upsampling.
    skip3 = w4 + (4 * cfg.wrb_channels[2] if cfg.skip_mode == "wrb" else w3)
    conv("dec3.c0", skip3, w3, 3)
    conv("dec3.c1", w3, w3, 3)
    skip2 = w3 + (4 * cfg.wrb_channels[1] if cfg.skip_mode == "wrb" else w2)
    conv("dec2.c0", skip2, w2, 3)
    conv("dec2.c1", w2, w2, 3)
    skip1 = w2 + (4 * cfg.wrb_channels[0] if cfg.skip_mode == "wrb" else w1)
    conv("dec1.c0", skip1, w1, 3)
    conv("dec1.c1", w1, w1, 3)
    conv("head", w1, cfg.classes, 1)
    return params


def _conv_block(x, params, name):
    x = tn.relu(tn.conv2d(x, params[f"{name}.c0.w"], params[f"{name}.c0.b"], pad=1))
    return tn.relu(tn.conv2d(x, params[f"{name}.c1.w"], params[f"{name}.c1.b"], pad=1))


def wrb_block(encoder_feat, decoder_feat, params: dict[str, tn.Param], level: int) -> tn.Node:
    """Wavelet refinement skip: decompose the encoder feature into four Haar
    subbands, 1x1-convolve each separately, and concatenate them with the
    decoder feature. The decoder feature must sit at half the encoder's
    resolution; the output keeps that resolution and has
    decoder_channels + 4 * per-subband channels."""
    enc = tn.as_node(encoder_feat)
    dec = tn.as_node(decoder_feat)
    eh, ew = enc.value.shape[1:]
    dh, dw = dec.value.shape[1:]
    if (dh, dw) != (eh // 2, ew // 2) or eh % 2 or ew % 2:
        raise ShapeError(
            f"decoder resolution {dh}x{dw} must be half the encoder's {eh}x{ew}"
        )
    bands = dwt_forward_node(enc)
    refined = [
        tn.conv2d(band, params[f"wrb{level}.{name}.w"], params[f"wrb{level}.{name}.b"])
        for name, band in zip(_BANDS, bands)
    ]
    return tn.concat_channels(dec, *refined)


def _pool_skip(encoder_feat, decoder_feat) -> tn.Node:
    """Ablation skip: pooled identity concat with the same output shape
    family as the refinement block."""
    enc = tn.as_node(encoder_feat)
    dec = tn.as_node(decoder_feat)
    return tn.concat_channels(dec, tn.maxpool2x2(enc))


def segnet_forward(image, params: dict[str, tn.Param], cfg: WrbNetConfig) -> tn.Node:
    """Per-pixel class logits [classes, H, W] for an image [1, H, W]."""
    x = tn.as_node(image)
    if x.value.shape != (cfg.in_channels, cfg.height, cfg.width):
        raise ShapeError(
            f"image shape {x.value.shape} != configured "
            f"({cfg.in_channels},{cfg.height},{cfg.width})"
        )
    e1 = _conv_block(x, params, "enc1")
    e2 = _conv_block(tn.maxpool2x2(e1), params, "enc2")
    e3 = _conv_block(tn.maxpool2x2(e2), params, "enc3")
    e4 = _conv_block(tn.maxpool2x2(e3), params, "enc4")

    def skip(level, enc, dec):
        if cfg.skip_mode == "wrb":
            return wrb_block(enc, dec, params, level)
        return _pool_skip(enc, dec)

    d3 = _conv_block(tn.upsample_bilinear2x(skip(3, e3, e4)), params, "dec3")
    d2 = _conv_block(tn.upsample_bilinear2x(skip(2, e2, d3)), params, "dec2")
    d1 = _conv_block(tn.upsample_bilinear2x(skip(1, e1, d2)), params, "dec1")
    return tn.conv2d(d1, params["head.w"], params["head.b"])


def segnet_train(
    dataset,
    epochs: int,
    seed: int = 0,
    cfg: WrbNetConfig | None = None,
    lr: float = 0.05,
    momentum: float = 0.9,
    params: dict[str, tn.Param] | None = None,
) -> tuple[dict[str, tn.Param], list[float]]:
    """SGD training on (image, mask) pairs; returns params and the per-epoch
    mean loss curve."""
    if not dataset:
        raise ConfigError("training dataset is empty")
    cfg = cfg or WrbNetConfig()
    params = params if params is not None else init_params(cfg, seed)
    opt = tn.SgdMomentum(params.values(), lr=lr, momentum=momentum)
    rng = np.random.default_rng([seed, 0xD1CE])
    curve = []
    for _ in range(epochs):
        order = rng.permutation(len(dataset))
        total = 0.0
        for idx in order:
            image, mask = dataset[idx]
            opt.zero_grad()
            loss = tn.softmax_ce(segnet_forward(image, params, cfg), mask)
            tn.backward(loss)
            opt.step()
            total += float(loss.value)
        curve.append(total / len(dataset))
    return params, curve


def predict_mask(image, params: dict[str, tn.Param], cfg: WrbNetConfig) -> np.ndarray:
    """Hard segmentation: argmax over class logits, 1 = iris."""
    logits = segnet_forward(image, params, cfg).value
    return (logits.argmax(axis=0) == 1).astype(np.uint8)


def validate_mask(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    m = np.asarray(mask)
    if m.shape != (height, width):
        raise ShapeError(f"mask extents {m.shape} != image extents ({height},{width})")
    if not np.isin(m, (0, 1)).all():
        raise ShapeError("mask must be binary (0/1)")
    return m.astype(np.uint8)


def extract_upper_boundary(
    mask: np.ndarray, center_col: float | None = None
) -> list[BoundarySegment]:
    """Topmost iris pixel per column, as polylines split at column gaps and
    tagged left/right of the pupil gap. An empty mask yields no segments."""
    m = np.asarray(mask).astype(bool)
    if m.ndim != 2:
        raise ShapeError(f"mask must be 2-D, got {m.shape}")
    center = m.shape[1] / 2.0 if center_col is None else float(center_col)
    has = m.any(axis=0)
    cols = np.nonzero(has)[0]
    if cols.size == 0:
        return []
    top = m[:, cols].argmax(axis=0)
    return segments_from_columns(cols, top, center)
