"""Permutation-invariant point-set classifier over sector samples.

A shared per-point MLP (8 -> 64 -> 128) lifts each row independently, a
channel-wise max over the points aggregates them (the only cross-point
interaction, hence exact permutation invariance), and a dense head
(128 -> 64 -> 2) produces class logits. Trained with seeded SGD+momentum on
the tensor engine; evaluation reports Acc/Sen/Spe/AUC.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor_nn as tn
from .errors import ConfigError, ShapeError
from .eval_metrics import classification_metrics
from .sector_quant import SectorSample

__all__ = ["PsnConfig", "init_params", "psn_forward", "psn_scores", "psn_train"]


@dataclass(frozen=True)
class PsnConfig:
    point_widths: tuple[int, ...] = (8, 64, 128)
    head_widths: tuple[int, ...] = (128, 64, 2)
    lr: float = 0.01
    momentum: float = 0.9
    epochs: int = 30
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.point_widths[-1] != self.head_widths[0]:
            raise ConfigError(
                f"head input {self.head_widths[0]} != point-MLP output "
                f"{self.point_widths[-1]}"
            )
        if self.head_widths[-1] != 2:
            raise ConfigError("classifier head must end in 2 classes")
        if min(self.point_widths + self.head_widths) < 1:
            raise ConfigError("widths must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")


def init_params(cfg: PsnConfig) -> dict[str, tn.Param]:
    """He-normal initialization, deterministic given the config seed."""
    rng = np.random.default_rng(cfg.seed)
    params: dict[str, tn.Param] = {}

    def dense(name, fan_in, fan_out):
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
        params[f"{name}.w"] = tn.Param(f"{name}.w", w)
        params[f"{name}.b"] = tn.Param(f"{name}.b", np.zeros(fan_out))

    for i, (fi, fo) in enumerate(zip(cfg.point_widths, cfg.point_widths[1:])):
        dense(f"point{i}", fi, fo)
    for i, (fi, fo) in enumerate(zip(cfg.head_widths, cfg.head_widths[1:])):
        dense(f"head{i}", fi, fo)
    return params


def psn_forward(points, params: dict[str, tn.Param], cfg: PsnConfig) -> tn.Node:
    """Logits[2] for one sample's (N, C) point array."""
    pts = points.points if isinstance(points, SectorSample) else np.asarray(points)
    if pts.ndim != 2:
        raise ShapeError(f"points must be (N,C), got {pts.shape}")
    if pts.shape[1] != cfg.point_widths[0]:
        raise ShapeError(
            f"point channel count {pts.shape[1]} != configured "
            f"{cfg.point_widths[0]}"
        )
    h = tn.as_node(pts)
    n_point = len(cfg.point_widths) - 1
    for i in range(n_point):
        h = tn.linear(h, params[f"point{i}.w"], params[f"point{i}.b"])
        if i < n_point - 1:
            h = tn.relu(h)
    g = tn.max_over_rows(h)
    z = tn.Node(g.value.reshape(1, -1), (g,), lambda grad: (grad.reshape(-1),))
    n_head = len(cfg.head_widths) - 1
    for i in range(n_head):
        z = tn.linear(z, params[f"head{i}.w"], params[f"head{i}.b"])
        if i < n_head - 1:
            z = tn.relu(z)
    return tn.Node(z.value.reshape(-1), (z,), lambda grad: (grad.reshape(1, -1),))


def psn_scores(samples, params, cfg) -> np.ndarray:
    """Class-1 (closure) softmax probability per sample."""
    out = np.empty(len(samples))
    for i, s in enumerate(samples):
        logits = psn_forward(s, params, cfg).value
        z = logits - logits.max()
        e = np.exp(z)
        out[i] = e[1] / e.sum()
    return out


def psn_train(
    train: list[SectorSample],
    valid: list[SectorSample],
    cfg: PsnConfig,
) -> tuple[dict[str, tn.Param], dict]:
    """Train on labeled sector samples; returns params and a report holding
    per-epoch mean loss and Acc/Sen/Spe/AUC on the validation set."""
    if not train:
        raise ConfigError("training set is empty")
    labels = {s.label for s in train}
    if labels != {0, 1}:
        raise ConfigError(f"training set must contain both classes, got labels {labels}")
    params = init_params(cfg)
    opt = tn.SgdMomentum(params.values(), lr=cfg.lr, momentum=cfg.momentum)
    rng = np.random.default_rng([cfg.seed, 1])
    losses = []
    for _ in range(cfg.epochs):
        order = rng.permutation(len(train))
        epoch_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            opt.zero_grad()
            batch_loss = 0.0
            for idx in batch:
                s = train[idx]
                loss = tn.softmax_ce(psn_forward(s, params, cfg), s.label)
                tn.backward(tn.scale(loss, 1.0 / len(batch)))
                batch_loss += float(loss.value)
            opt.step()
            epoch_loss += batch_loss
        losses.append(epoch_loss / len(train))

    report: dict = {"train_loss": losses}
    if valid:
        scores = psn_scores(valid, params, cfg)
        y = np.array([s.label for s in valid])
        report.update(classification_metrics(scores, y))
    return params, report
