"""Region, edge, and classification metrics.

Region: sensitivity, Dice, accuracy over binary masks. Edge: root
normalized mean square error of boundary rows (normalized by image height)
and exact Hausdorff distance. TIC: pixel error of the most peripheral
boundary point against an annotated reference. Classification: accuracy /
sensitivity / specificity at threshold 0.5 plus rank-based AUC with ties
counted half.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricError

__all__ = [
    "ConfusionCounts",
    "confusion_counts",
    "region_metrics",
    "rnmse",
    "hausdorff",
    "tic_point",
    "tic_error",
    "auc_rank",
    "classification_metrics",
    "write_metric_report",
    "read_metric_report",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise MetricError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion_counts(pred, gt) -> ConfusionCounts:
    p = np.asarray(pred).astype(bool)
    g = np.asarray(gt).astype(bool)
    if p.shape != g.shape:
        raise MetricError(f"extent mismatch: pred {p.shape} vs gt {g.shape}")
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        tn=int(np.count_nonzero(~p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
    )


def region_metrics(pred, gt) -> dict[str, float]:
    """Sen = tp/(tp+fn), Dice = 2tp/(2tp+fp+fn), Acc = (tp+tn)/total.

    Empty ground truth: Sen is 1 when nothing was missed (fn = 0), else 0;
    Dice is 1 only when the prediction is empty too.
    """
    c = confusion_counts(pred, gt)
    sen = 1.0 if c.fn == 0 else c.tp / (c.tp + c.fn)
    dice_den = 2 * c.tp + c.fp + c.fn
    dice = 1.0 if dice_den == 0 else 2 * c.tp / dice_den
    acc = (c.tp + c.tn) / c.total if c.total else 1.0
    return {"sen": sen, "dice": dice, "acc": acc}


def _boundary_map(boundary) -> dict[int, float]:
    if isinstance(boundary, dict):
        return {int(k): float(v) for k, v in boundary.items()}
    arr = np.asarray(boundary, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise MetricError(f"boundary must be (n,2) rows of (x,z), got {arr.shape}")
    return {int(x): float(z) for x, z in arr}


def rnmse(pred_boundary, gt_boundary, image_height: float) -> float:
    """Root mean square row error over the shared columns, divided by the
    image height so that the score is resolution-independent."""
    if image_height <= 0:
        raise MetricError("image_height must be positive")
    p = _boundary_map(pred_boundary)
    g = _boundary_map(gt_boundary)
    shared = sorted(set(p) & set(g))
    if not shared:
        raise MetricError("boundaries share no columns")
    diffs = np.array([p[c] - g[c] for c in shared])
    return float(np.sqrt(np.mean(diffs**2)) / image_height)


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two non-empty point sets,
    evaluated exactly over all |A| x |B| pairs."""
    aa = np.atleast_2d(np.asarray(a, dtype=np.float64))
    bb = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if aa.size == 0 or bb.size == 0:
        raise MetricError("hausdorff requires non-empty point sets")
    d2 = ((aa[:, None, :] - bb[None, :, :]) ** 2).sum(axis=2)
    d = np.sqrt(d2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def tic_point(boundary_points, center_x: float) -> np.ndarray:
    """The predicted trabecular-iris-contact point: the most peripheral
    boundary point, i.e. the one maximizing |x - center_x|."""
    pts = np.asarray(boundary_points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise MetricError(f"boundary must be non-empty (n,2), got {pts.shape}")
    return pts[int(np.argmax(np.abs(pts[:, 0] - center_x)))]


def tic_error(pred_boundary, gt_tic_point, center_x: float) -> float:
    """Euclidean pixel distance between the predicted TIC point and the
    annotated reference."""
    p = tic_point(pred_boundary, center_x)
    g = np.asarray(gt_tic_point, dtype=np.float64)
    return float(np.hypot(p[0] - g[0], p[1] - g[1]))


def auc_rank(scores, labels) -> float:
    """Mann-Whitney AUC: probability a random positive outranks a random
    negative, ties counted half. Requires both classes present."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(np.int64)
    if s.shape != y.shape or s.ndim != 1:
        raise MetricError("scores and labels must be matching 1-D arrays")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both classes present")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s))
    sorted_scores = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    rank_sum_pos = ranks[y == 1].sum()
    u = rank_sum_pos - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def classification_metrics(scores, labels, threshold: float = 0.5) -> dict:
    """Acc/Sen/Spe at the given threshold on class-1 probability, plus AUC.

    With single-class labels the AUC is undefined and reported as None; the
    other metrics are still computed.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels).astype(np.int64)
    if s.shape != y.shape or s.ndim != 1 or len(s) == 0:
        raise MetricError("scores and labels must be matching non-empty 1-D arrays")
    pred = (s >= threshold).astype(np.int64)
    tp = int(((pred == 1) & (y == 1)).sum())
    tn = int(((pred == 0) & (y == 0)).sum())
    fp = int(((pred == 1) & (y == 0)).sum())
    fn = int(((pred == 0) & (y == 1)).sum())
    acc = (tp + tn) / len(y)
    sen = tp / (tp + fn) if (tp + fn) else 1.0
    spe = tn / (tn + fp) if (tn + fp) else 1.0
    try:
        auc = auc_rank(s, y)
    except MetricError:
        auc = None
    return {"acc": acc, "sen": sen, "spe": spe, "auc": auc}


def write_metric_report(path, metrics: dict) -> None:
    """Write a {metric_name: value} JSON report with 6-decimal fixed
    formatting so reports are byte-stable for golden-file comparison."""
    lines = []
    for name in sorted(metrics):
        v = metrics[name]
        rendered = "null" if v is None else f"{float(v):.6f}"
        lines.append(f'  "{name}": {rendered}')
    with open(path, "w") as fh:
        fh.write("{\n" + ",\n".join(lines) + "\n}\n")


def read_metric_report(path) -> dict:
    import json

    with open(path) as fh:
        return json.load(fh)
