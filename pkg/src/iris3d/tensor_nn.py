"""Minimal float64 tensor engine with hand-written backward passes.

A forward pass builds the computation graph: every operation returns a
``Node`` holding its value, its parents, and a vector-Jacobian product
closure. ``backward`` walks the graph in reverse topological order and
accumulates gradients into ``Param`` leaves. The op set is deliberately
closed (convolution, ReLU, pooling, bilinear upsampling, channel concat,
dense layers, row-wise max, softmax cross-entropy, and a few scalar helpers
for building losses); each op ships its own backward so every gradient can
be audited against finite differences.

All values are float64 and all ops are pure, so identical inputs produce
bitwise-identical outputs. Evaluating independent graphs on separate
threads is safe; a single graph instance is single-threaded.
"""

from __future__ import annotations

import struct

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .errors import GraphError, ShapeError

__all__ = [
    "Tensor",
    "Node",
    "Param",
    "as_node",
    "constant",
    "conv2d",
    "relu",
    "maxpool2x2",
    "upsample_bilinear2x",
    "concat_channels",
    "linear",
    "max_over_rows",
    "softmax_ce",
    "add",
    "scale",
    "square",
    "sum_all",
    "backward",
    "SgdMomentum",
    "save_checkpoint",
    "load_checkpoint",
    "restore_params",
    "CHECKPOINT_MAGIC",
]


class Tensor:
    """Dense n-dimensional float64 array in row-major order.

    Construction rejects NaN/Inf and non-positive extents, so every Tensor
    in the system is finite by invariant.
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="C")
        if any(d <= 0 for d in arr.shape):
            raise ShapeError(f"Tensor extents must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("Tensor rejects non-finite values (NaN/Inf)")
        self.data = arr

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


class Node:
    """One vertex of the computation graph.

    ``vjp`` maps the gradient of the loss w.r.t. this node's value to the
    gradients w.r.t. each parent, in parent order. Leaves have no vjp.
    """

    __slots__ = ("value", "parents", "vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = value
        self.parents = tuple(parents)
        self.vjp = vjp

    @property
    def shape(self):
        return self.value.shape


class Param(Node):
    """Trainable leaf: a named value with an accumulated gradient.

    ``grad`` always has the same shape as ``value`` and must be zeroed
    between optimization steps (``SgdMomentum`` does this).
    """

    __slots__ = ("name", "grad")

    def __init__(self, name: str, value):
        tensor = value if isinstance(value, Tensor) else Tensor(value)
        super().__init__(tensor.data.copy(), (), None)
        self.name = name
        self.grad = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Param({self.name!r}, shape={self.value.shape})"


def as_node(x) -> Node:
    """Lift a Tensor, ndarray, or scalar into a constant leaf Node."""
    if isinstance(x, Node):
        return x
    if isinstance(x, Tensor):
        return Node(x.data)
    return Node(Tensor(x).data)


def constant(x) -> Node:
    return as_node(x)


# ---------------------------------------------------------------------------
# ops


def conv2d(x, w, b, stride: int = 1, pad: int = 0) -> Node:
    """Cross-correlation of x[C_in,H,W] with w[C_out,C_in,kh,kw] plus bias.

    The output size (H + 2*pad - kh) / stride + 1 must divide exactly;
    otherwise the call is rejected. Kernels are not flipped.
    """
    xn, wn, bn = as_node(x), as_node(w), as_node(b)
    xv, wv, bv = xn.value, wn.value, bn.value
    if xv.ndim != 3:
        raise ShapeError(f"conv2d input must be [C,H,W], got {xv.shape}")
    if wv.ndim != 4:
        raise ShapeError(f"conv2d weight must be [C_out,C_in,kh,kw], got {wv.shape}")
    if bv.ndim != 1:
        raise ShapeError(f"conv2d bias must be [C_out], got {bv.shape}")
    c_out, c_in, kh, kw = wv.shape
    c, h, wdt = xv.shape
    if c_in != c:
        raise ShapeError(
            f"conv2d channel mismatch: input has {c} channels, weight expects "
            f"{c_in} (x{xv.shape}, w{wv.shape})"
        )
    if bv.shape[0] != c_out:
        raise ShapeError(f"conv2d bias length {bv.shape[0]} != C_out {c_out}")
    if stride < 1:
        raise ShapeError(f"conv2d stride must be >= 1, got {stride}")
    if pad < 0:
        raise ShapeError(f"conv2d pad must be >= 0, got {pad}")
    hp, wp = h + 2 * pad, wdt + 2 * pad
    if kh > hp or kw > wp:
        raise ShapeError(
            f"conv2d kernel {kh}x{kw} exceeds padded input {hp}x{wp}"
        )
    if (hp - kh) % stride or (wp - kw) % stride:
        raise ShapeError(
            f"conv2d non-exact output size: ({hp}-{kh}) and ({wp}-{kw}) must "
            f"divide by stride {stride}"
        )
    ho, wo = (hp - kh) // stride + 1, (wp - kw) // stride + 1

    xpad = np.pad(xv, ((0, 0), (pad, pad), (pad, pad))) if pad else xv
    s0, s1, s2 = xpad.strides
    patches = as_strided(
        xpad, (c, kh, kw, ho, wo), (s0, s1, s2, s1 * stride, s2 * stride)
    )
    cols = np.ascontiguousarray(patches).reshape(c * kh * kw, ho * wo)
    wmat = wv.reshape(c_out, -1)
    out = (wmat @ cols + bv[:, None]).reshape(c_out, ho, wo)

    def vjp(g):
        gm = g.reshape(c_out, -1)
        gw = (gm @ cols.T).reshape(wv.shape)
        gb = gm.sum(axis=1)
        gcols = (wmat.T @ gm).reshape(c, kh, kw, ho, wo)
        gxp = np.zeros((c, hp, wp))
        for u in range(kh):
            for v in range(kw):
                gxp[:, u : u + stride * ho : stride, v : v + stride * wo : stride] += gcols[:, u, v]
        gx = gxp[:, pad : pad + h, pad : pad + wdt] if pad else gxp
        return gx, gw, gb

    return Node(out, (xn, wn, bn), vjp)


def relu(x) -> Node:
    xn = as_node(x)
    mask = xn.value > 0
    out = np.where(mask, xn.value, 0.0)
    return Node(out, (xn,), lambda g: (np.where(mask, g, 0.0),))


def maxpool2x2(x) -> Node:
    """2x2 max pooling with stride 2 on [C,H,W]; records argmax for backward."""
    xn = as_node(x)
    v = xn.value
    if v.ndim != 3:
        raise ShapeError(f"maxpool2x2 input must be [C,H,W], got {v.shape}")
    c, h, w = v.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even extents, got {h}x{w}")
    blocks = v.reshape(c, h // 2, 2, w // 2, 2).transpose(0, 1, 3, 2, 4).reshape(
        c, h // 2, w // 2, 4
    )
    arg = blocks.argmax(axis=3)
    out = np.take_along_axis(blocks, arg[..., None], axis=3)[..., 0]

    def vjp(g):
        gb = np.zeros((c, h // 2, w // 2, 4))
        np.put_along_axis(gb, arg[..., None], g[..., None], axis=3)
        gx = gb.reshape(c, h // 2, w // 2, 2, 2).transpose(0, 1, 3, 2, 4).reshape(c, h, w)
        return (gx,)

    return Node(out, (xn,), vjp)


_UPSAMPLE_CACHE: dict[int, np.ndarray] = {}


def _upsample_matrix(n: int) -> np.ndarray:
    """Linear-interpolation matrix from n samples to 2n (half-pixel centers,
    edges clamped)."""
    m = _UPSAMPLE_CACHE.get(n)
    if m is None:
        m = np.zeros((2 * n, n))
        for i in range(2 * n):
            src = min(max((i + 0.5) / 2.0 - 0.5, 0.0), n - 1.0)
            i0 = int(np.floor(src))
            i1 = min(i0 + 1, n - 1)
            t = src - i0
            m[i, i0] += 1.0 - t
            m[i, i1] += t
        _UPSAMPLE_CACHE[n] = m
    return m


def upsample_bilinear2x(x) -> Node:
    """Bilinear 2x upsampling of [C,H,W] -> [C,2H,2W]."""
    xn = as_node(x)
    v = xn.value
    if v.ndim != 3:
        raise ShapeError(f"upsample input must be [C,H,W], got {v.shape}")
    _, h, w = v.shape
    uh, uw = _upsample_matrix(h), _upsample_matrix(w)
    out = np.einsum("ih,chw,jw->cij", uh, v, uw, optimize=True)

    def vjp(g):
        return (np.einsum("ih,cij,jw->chw", uh, g, uw, optimize=True),)

    return Node(out, (xn,), vjp)


def concat_channels(*xs) -> Node:
    """Concatenate [C_i,H,W] feature maps along the channel axis."""
    nodes = [as_node(x) for x in xs]
    if not nodes:
        raise ShapeError("concat_channels needs at least one operand")
    hw = None
    for n in nodes:
        if n.value.ndim != 3:
            raise ShapeError(f"concat_channels operand must be [C,H,W], got {n.value.shape}")
        if hw is None:
            hw = n.value.shape[1:]
        elif n.value.shape[1:] != hw:
            raise ShapeError(
                f"concat_channels spatial mismatch: {n.value.shape[1:]} vs {hw}"
            )
    out = np.concatenate([n.value for n in nodes], axis=0)
    sizes = [n.value.shape[0] for n in nodes]
    offsets = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(g[offsets[i] : offsets[i + 1]] for i in range(len(nodes)))

    return Node(out, tuple(nodes), vjp)


def linear(x, w, b) -> Node:
    """Dense layer x[N,F] @ w[F,G] + b[G] applied to each of the N rows."""
    xn, wn, bn = as_node(x), as_node(w), as_node(b)
    xv, wv, bv = xn.value, wn.value, bn.value
    if xv.ndim != 2 or wv.ndim != 2 or bv.ndim != 1:
        raise ShapeError(
            f"linear expects x[N,F], w[F,G], b[G]; got {xv.shape}, {wv.shape}, {bv.shape}"
        )
    if xv.shape[1] != wv.shape[0] or wv.shape[1] != bv.shape[0]:
        raise ShapeError(
            f"linear shape mismatch: x{xv.shape} @ w{wv.shape} + b{bv.shape}"
        )
    out = xv @ wv + bv

    def vjp(g):
        return g @ wv.T, xv.T @ g, g.sum(axis=0)

    return Node(out, (xn, wn, bn), vjp)


def max_over_rows(x) -> Node:
    """Column-wise max of x[N,F] -> [F]; the only cross-row interaction the
    point-set classifier uses. Ties resolve to the lowest row index."""
    xn = as_node(x)
    v = xn.value
    if v.ndim != 2:
        raise ShapeError(f"max_over_rows input must be [N,F], got {v.shape}")
    arg = v.argmax(axis=0)
    out = v[arg, np.arange(v.shape[1])]

    def vjp(g):
        gx = np.zeros_like(v)
        gx[arg, np.arange(v.shape[1])] = g
        return (gx,)

    return Node(out, (xn,), vjp)


def softmax_ce(logits, label) -> Node:
    """Softmax cross-entropy: -log p(label).

    Accepts either a [K] logits vector with an int label, or a [K,H,W]
    per-pixel logits map with an [H,W] int label image (loss is the mean
    over pixels).
    """
    ln = as_node(logits)
    v = ln.value
    if v.ndim == 1:
        k = v.shape[0]
        lab = int(label)
        if not 0 <= lab < k:
            raise ShapeError(f"label {lab} outside class count {k}")
        z = v - v.max()
        e = np.exp(z)
        p = e / e.sum()
        out = np.asarray(-np.log(p[lab]))

        def vjp(g):
            gl = p.copy()
            gl[lab] -= 1.0
            return (gl * g,)

        return Node(out, (ln,), vjp)

    if v.ndim == 3:
        k = v.shape[0]
        lab = np.asarray(label)
        if lab.shape != v.shape[1:]:
            raise ShapeError(
                f"label map shape {lab.shape} != logits spatial shape {v.shape[1:]}"
            )
        if lab.min() < 0 or lab.max() >= k:
            raise ShapeError(f"label values outside class count {k}")
        lab = lab.astype(np.intp)
        z = v - v.max(axis=0, keepdims=True)
        e = np.exp(z)
        p = e / e.sum(axis=0, keepdims=True)
        npix = lab.size
        picked = np.take_along_axis(p, lab[None], axis=0)[0]
        out = np.asarray(-np.log(picked).sum() / npix)

        def vjp(g):
            gl = p.copy()
            rows, cols = np.indices(lab.shape)
            gl[lab, rows, cols] -= 1.0
            return (gl * (g / npix),)

        return Node(out, (ln,), vjp)

    raise ShapeError(f"softmax_ce expects [K] or [K,H,W] logits, got {v.shape}")


def add(a, b) -> Node:
    an, bn = as_node(a), as_node(b)
    if an.value.shape != bn.value.shape:
        raise ShapeError(f"add shape mismatch: {an.value.shape} vs {bn.value.shape}")
    return Node(an.value + bn.value, (an, bn), lambda g: (g, g))


def scale(a, c: float) -> Node:
    an = as_node(a)
    c = float(c)
    return Node(an.value * c, (an,), lambda g: (g * c,))


def square(a) -> Node:
    an = as_node(a)
    return Node(an.value * an.value, (an,), lambda g: (2.0 * an.value * g,))


def sum_all(a) -> Node:
    an = as_node(a)
    out = np.asarray(an.value.sum())
    return Node(out, (an,), lambda g: (np.full_like(an.value, 1.0) * g,))


# ---------------------------------------------------------------------------
# backward


def _toposort(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def backward(loss: Node) -> None:
    """Accumulate d(loss)/d(param) into every reachable Param's ``grad``.

    The loss must be the scalar output of a recorded forward pass.
    """
    if not isinstance(loss, Node):
        raise GraphError("backward requires the scalar Node of a recorded forward pass")
    if np.asarray(loss.value).shape != ():
        raise GraphError(f"loss must be scalar, got shape {np.asarray(loss.value).shape}")
    order = _toposort(loss)
    grads: dict[int, np.ndarray] = {id(loss): np.ones(())}
    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Param):
            node.grad += g
            continue
        if node.vjp is None:
            continue
        parent_grads = node.vjp(g)
        for parent, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            acc = grads.get(id(parent))
            grads[id(parent)] = pg if acc is None else acc + pg


# ---------------------------------------------------------------------------
# optimization and checkpoints


class SgdMomentum:
    """Plain SGD with classical momentum: v = m*v + g; theta -= lr*v."""

    def __init__(self, params, lr: float, momentum: float = 0.9):
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self._vel = [np.zeros_like(p.value) for p in self.params]

    def zero_grad(self):
        for p in self.params:
            p.zero_grad()

    def step(self):
        for p, v in zip(self.params, self._vel):
            v *= self.momentum
            v += p.grad
            p.value -= self.lr * v


CHECKPOINT_MAGIC = b"IR3DNN1\n"


def save_checkpoint(path, params) -> None:
    """Write parameters to a flat binary file.

    Layout: the 8-byte magic, then per parameter: u32 name length, UTF-8
    name, u32 rank, u32 extents, raw little-endian float64 payload in
    row-major order. All integer fields are little-endian uint32.
    """
    items = params.values() if isinstance(params, dict) else params
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        for p in items:
            name = p.name.encode("utf-8")
            fh.write(struct.pack("<I", len(name)))
            fh.write(name)
            arr = np.ascontiguousarray(p.value, dtype=np.float64)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f8", copy=False).tobytes())


def load_checkpoint(path) -> dict[str, Tensor]:
    """Read a checkpoint back into a name -> Tensor mapping."""
    out: dict[str, Tensor] = {}
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: bad checkpoint magic {magic!r}")
        while True:
            head = fh.read(4)
            if not head:
                break
            (nlen,) = struct.unpack("<I", head)
            name = fh.read(nlen).decode("utf-8")
            (rank,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{rank}I", fh.read(4 * rank)) if rank else ()
            count = int(np.prod(shape)) if shape else 1
            payload = fh.read(8 * count)
            arr = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
            out[name] = Tensor(arr)
    return out


def restore_params(params: dict[str, Param], path) -> None:
    """Load checkpoint values into an existing parameter dict (shapes must match)."""
    loaded = load_checkpoint(path)
    for name, p in params.items():
        if name not in loaded:
            raise ValueError(f"checkpoint missing parameter {name!r}")
        t = loaded[name]
        if t.shape != p.value.shape:
            raise ShapeError(
                f"checkpoint shape {t.shape} != parameter shape {p.value.shape} for {name!r}"
            )
        p.value[...] = t.data
