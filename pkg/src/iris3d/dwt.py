"""2D discrete Haar wavelet transform as a strided four-filter decomposition.

The analysis filters are the unnormalized 2x2 Haar bank applied as stride-2
cross-correlations, channel-wise:

    LL [[ 1, 1], [ 1, 1]]    HL [[-1, 1], [-1, 1]]
    LH [[-1,-1], [ 1, 1]]    HH [[ 1,-1], [-1, 1]]

With entries of magnitude 1 the bank is an orthogonal basis scaled by 2, so
the synthesis side carries the 1/4 normalization and reconstruction is exact.
Inputs must have even spatial extents; callers pad beforehand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .tensor_nn import Node, Tensor, as_node

__all__ = [
    "HAAR_FILTERS",
    "SubbandSet",
    "dwt_forward",
    "dwt_inverse",
    "dwt_forward_node",
]

# Coefficients in quadrant order (x00, x01, x10, x11), i.e. filter entries
# at (row, col) = (0,0), (0,1), (1,0), (1,1).
_COEFFS = {
    "ll": (1.0, 1.0, 1.0, 1.0),
    "lh": (-1.0, -1.0, 1.0, 1.0),
    "hl": (-1.0, 1.0, -1.0, 1.0),
    "hh": (1.0, -1.0, -1.0, 1.0),
}

HAAR_FILTERS = {
    name: np.array([[c[0], c[1]], [c[2], c[3]]]) for name, c in _COEFFS.items()
}


@dataclass(frozen=True)
class SubbandSet:
    """The four stride-2 subbands of one decomposition, each [C, H/2, W/2]."""

    ll: Tensor
    lh: Tensor
    hl: Tensor
    hh: Tensor

    def __post_init__(self):
        shapes = {self.ll.shape, self.lh.shape, self.hl.shape, self.hh.shape}
        if len(shapes) != 1:
            raise ShapeError(f"subband shapes differ: {sorted(shapes)}")
        if len(self.ll.shape) != 3:
            raise ShapeError(f"subbands must be [C,H,W], got {self.ll.shape}")


def _check_input(v: np.ndarray) -> None:
    if v.ndim != 3:
        raise ShapeError(f"dwt input must be [C,H,W], got {v.shape}")
    if v.shape[1] % 2 or v.shape[2] % 2:
        raise ShapeError(
            f"dwt needs even spatial extents, got {v.shape[1]}x{v.shape[2]}; "
            "pad before transforming"
        )


def _quadrants(v: np.ndarray):
    return v[:, 0::2, 0::2], v[:, 0::2, 1::2], v[:, 1::2, 0::2], v[:, 1::2, 1::2]


def _analysis(v: np.ndarray) -> dict[str, np.ndarray]:
    x00, x01, x10, x11 = _quadrants(v)
    return {
        name: c[0] * x00 + c[1] * x01 + c[2] * x10 + c[3] * x11
        for name, c in _COEFFS.items()
    }


def dwt_forward(x) -> SubbandSet:
    """Decompose x[C,H,W] (H, W even) into four half-resolution subbands."""
    v = x.data if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    _check_input(v)
    bands = _analysis(v)
    return SubbandSet(*(Tensor(bands[k]) for k in ("ll", "lh", "hl", "hh")))


def dwt_inverse(s: SubbandSet) -> Tensor:
    """Exact synthesis: dwt_inverse(dwt_forward(x)) == x up to rounding."""
    ll, lh, hl, hh = s.ll.data, s.lh.data, s.hl.data, s.hh.data
    c, h2, w2 = ll.shape
    out = np.empty((c, 2 * h2, 2 * w2))
    # Each output quadrant recombines the bands with that quadrant's filter
    # entries, divided by 4 (the bank's total gain).
    out[:, 0::2, 0::2] = (ll - lh - hl + hh) / 4.0
    out[:, 0::2, 1::2] = (ll - lh + hl - hh) / 4.0
    out[:, 1::2, 0::2] = (ll + lh - hl - hh) / 4.0
    out[:, 1::2, 1::2] = (ll + lh + hl + hh) / 4.0
    return Tensor(out)


def _band_node(xn: Node, name: str) -> Node:
    coeff = _COEFFS[name]
    x00, x01, x10, x11 = _quadrants(xn.value)
    out = coeff[0] * x00 + coeff[1] * x01 + coeff[2] * x10 + coeff[3] * x11

    def vjp(g):
        gx = np.zeros_like(xn.value)
        gx[:, 0::2, 0::2] = coeff[0] * g
        gx[:, 0::2, 1::2] = coeff[1] * g
        gx[:, 1::2, 0::2] = coeff[2] * g
        gx[:, 1::2, 1::2] = coeff[3] * g
        return (gx,)

    return Node(out, (xn,), vjp)


def dwt_forward_node(x) -> tuple[Node, Node, Node, Node]:
    """Graph-op variant of dwt_forward: four Nodes (ll, lh, hl, hh) with
    exact adjoints, for use inside the segmentation network."""
    xn = as_node(x)
    _check_input(xn.value)
    return tuple(_band_node(xn, name) for name in ("ll", "lh", "hl", "hh"))
