# SPDX-FileCopyrightText: 2026 The Visforce Authors
# SPDX-License-Identifier: Apache-2.0

"""Differentiable primitives.

Feature maps are channels-last: ``H×W×C`` or batched ``N×H×W×C``.
Binary elementwise ops accept equal shapes plus exactly two broadcast
patterns: a spatial map ``…×H×W×1`` against ``…×H×W×C`` and a channel
vector ``…×1×1×C`` against ``…×H×W×C``. Everything else is a
:class:`~visforce.errors.ShapeError`.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from visforce.errors import ContractViolation, ShapeError
from visforce.tensor.core import Tensor, make_output

# =========================================================================
# Broadcasting helpers
# =========================================================================


def _pattern_ok(small: Tuple[int, ...], big: Tuple[int, ...]) -> bool:
    if len(small) != len(big) or len(big) < 3:
        return False
    lead_s, lead_b = small[:-3], big[:-3]
    if lead_s != lead_b:
        return False
    hs, ws, cs = small[-3:]
    hb, wb, cb = big[-3:]
    spatial_map = (hs, ws) == (hb, wb) and cs == 1
    channel_vector = hs == 1 and ws == 1 and cs == cb
    return spatial_map or channel_vector


def _check_binary(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape == b.shape:
        return
    if _pattern_ok(a.shape, b.shape) or _pattern_ok(b.shape, a.shape):
        return
    raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} are not broadcastable")


def _unbroadcast(g: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if g.shape == shape:
        return g
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    return g.sum(axis=axes, keepdims=True)


# =========================================================================
# Elementwise
# =========================================================================


def add(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("add", a, b)
    return make_output(
        "add",
        a.data + b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
    )


def sub(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("sub", a, b)
    return make_output(
        "sub",
        a.data - b.data,
        (a, b),
        lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)),
    )


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_binary("mul", a, b)
    return make_output(
        "mul",
        a.data * b.data,
        (a, b),
        lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)),
    )


def scale(x: Tensor, factor: float) -> Tensor:
    """Multiply by a constant."""
    c = float(factor)
    return make_output("scale", x.data * c, (x,), lambda g: (g * c,))


def _sigmoid(v: np.ndarray) -> np.ndarray:
    # tanh form is overflow-free and gives sigmoid(0) == 0.5 exactly.
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def sigmoid(x: Tensor) -> Tensor:
    s = _sigmoid(x.data)
    return make_output("sigmoid", s, (x,), lambda g: (g * s * (1.0 - s),))


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0.0
    return make_output("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


def tanh(x: Tensor) -> Tensor:
    t = np.tanh(x.data)
    return make_output("tanh", t, (x,), lambda g: (g * (1.0 - t * t),))


def square(x: Tensor) -> Tensor:
    return make_output("square", x.data * x.data, (x,), lambda g: (2.0 * g * x.data,))


_UNARY = {"sigmoid": sigmoid, "relu": relu, "tanh": tanh}
_BINARY = {"add": add, "mul": mul, "sub": sub}


def elementwise(op: str, a: Tensor, b: Optional[Tensor] = None) -> Tensor:
    """Dispatch ``sigmoid | relu | tanh | add | mul | sub`` by name."""
    if op in _UNARY:
        if b is not None:
            raise ContractViolation(f"{op} takes a single operand")
        return _UNARY[op](a)
    if op in _BINARY:
        if b is None:
            raise ContractViolation(f"{op} needs two operands")
        return _BINARY[op](a, b)
    raise ContractViolation(f"unknown elementwise op {op!r}")


def bias_add(x: Tensor, bias: Tensor) -> Tensor:
    """Add a vector along the last axis (conv and dense biases)."""
    if bias.ndim != 1 or x.ndim < 1 or bias.shape[0] != x.shape[-1]:
        raise ShapeError(f"bias_add: bias {bias.shape} does not match trailing axis of {x.shape}")
    lead = tuple(range(x.ndim - 1))
    return make_output("bias_add", x.data + bias.data, (x, bias), lambda g: (g, g.sum(axis=lead)))


# =========================================================================
# Linear algebra
# =========================================================================


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """``a @ b`` with ``a`` of shape ``…×m×k`` and ``b`` of shape ``k×n``."""
    if b.ndim != 2 or a.ndim < 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: inner dimensions of {a.shape} and {b.shape} differ")
    k, n = b.shape

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        da = g @ b.data.T
        db = a.data.reshape(-1, k).T @ g.reshape(-1, n)
        return da, db

    return make_output("matmul", a.data @ b.data, (a, b), vjp)


# =========================================================================
# Convolution and pooling
# =========================================================================


def _as_batch(x: Tensor, op: str) -> Tuple[np.ndarray, bool]:
    if x.ndim == 3:
        return x.data[None], False
    if x.ndim == 4:
        return x.data, True
    raise ShapeError(f"{op}: expected H×W×C or N×H×W×C input, got {x.shape}")


def conv2d(x: Tensor, kernel: Tensor, stride: int = 1, padding: str = "same") -> Tensor:
    """Cross-correlation of ``x`` with a ``kh×kw×Cin×Cout`` kernel."""
    xb, batched = _as_batch(x, "conv2d")
    if kernel.ndim != 4:
        raise ShapeError(f"conv2d: kernel must be kh×kw×Cin×Cout, got {kernel.shape}")
    if stride < 1:
        raise ContractViolation(f"conv2d: stride must be >= 1, got {stride}")
    kh, kw, cin, cout = kernel.shape
    n, h, w, c = xb.shape
    if c != cin:
        raise ShapeError(f"conv2d: input has {c} channels, kernel expects {cin}")

    if padding == "same":
        top, left = (kh - 1) // 2, (kw - 1) // 2
        bottom, right = kh - 1 - top, kw - 1 - left
    elif padding == "valid":
        top = left = bottom = right = 0
    else:
        raise ContractViolation(f"conv2d: padding must be 'same' or 'valid', got {padding!r}")
    hp, wp = h + top + bottom, w + left + right
    if kh > hp or kw > wp:
        raise ShapeError(f"conv2d: kernel {kh}×{kw} exceeds padded input {hp}×{wp}")

    xp = np.pad(xb, ((0, 0), (top, bottom), (left, right), (0, 0)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    ho, wo = windows.shape[1], windows.shape[2]
    cols = windows.transpose(0, 1, 2, 4, 5, 3).reshape(n * ho * wo, kh * kw * cin)
    kmat = kernel.data.reshape(kh * kw * cin, cout)
    out = (cols @ kmat).reshape(n, ho, wo, cout)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        g2 = (g if batched else g[None]).reshape(n * ho * wo, cout)
        dkernel = (cols.T @ g2).reshape(kernel.shape)
        dcols = (g2 @ kmat.T).reshape(n, ho, wo, kh, kw, cin)
        dxp = np.zeros(xp.shape, dtype=np.float64)
        for i in range(kh):
            for j in range(kw):
                dxp[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :] += dcols[:, :, :, i, j, :]
        dx = dxp[:, top : top + h, left : left + w, :]
        return (dx if batched else dx[0]), dkernel

    return make_output("conv2d", out if batched else out[0], (x, kernel), vjp)


def maxpool2(x: Tensor) -> Tensor:
    """2×2 max pooling with stride 2."""
    xb, batched = _as_batch(x, "maxpool2")
    n, h, w, c = xb.shape
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2: spatial dims must be even, got {h}×{w}")
    windows = xb.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
    idx = windows.argmax(axis=-1)[..., None]
    out = np.take_along_axis(windows, idx, axis=-1)[..., 0]

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        gw = np.zeros(windows.shape, dtype=np.float64)
        np.put_along_axis(gw, idx, (g if batched else g[None])[..., None], axis=-1)
        dx = gw.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(n, h, w, c)
        return ((dx if batched else dx[0]),)

    return make_output("maxpool2", out if batched else out[0], (x,), vjp)


def global_average_pool(x: Tensor) -> Tensor:
    """Spatial mean: ``…×H×W×C → …×C``."""
    if x.ndim < 3:
        raise ShapeError(f"global_average_pool: expected …×H×W×C, got {x.shape}")
    h, w = x.shape[-3], x.shape[-2]
    return make_output(
        "global_average_pool",
        x.data.mean(axis=(-3, -2)),
        (x,),
        lambda g: (np.broadcast_to(g[..., None, None, :] / (h * w), x.shape).copy(),),
    )


def global_max_pool(x: Tensor) -> Tensor:
    """Spatial max: ``…×H×W×C → …×C``."""
    if x.ndim < 3:
        raise ShapeError(f"global_max_pool: expected …×H×W×C, got {x.shape}")
    h, w, c = x.shape[-3:]
    flat = x.data.reshape(x.shape[:-3] + (h * w, c))
    idx = flat.argmax(axis=-2)[..., None, :]
    out = np.take_along_axis(flat, idx, axis=-2)[..., 0, :]

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        gf = np.zeros(flat.shape, dtype=np.float64)
        np.put_along_axis(gf, idx, g[..., None, :], axis=-2)
        return (gf.reshape(x.shape),)

    return make_output("global_max_pool", out, (x,), vjp)


def channel_mean(x: Tensor) -> Tensor:
    """Mean over the channel axis, kept as a size-1 axis."""
    c = x.shape[-1]
    return make_output(
        "channel_mean",
        x.data.mean(axis=-1, keepdims=True),
        (x,),
        lambda g: (np.broadcast_to(g / c, x.shape).copy(),),
    )


def channel_max(x: Tensor) -> Tensor:
    """Max over the channel axis, kept as a size-1 axis."""
    idx = x.data.argmax(axis=-1)[..., None]
    out = np.take_along_axis(x.data, idx, axis=-1)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        gx = np.zeros(x.shape, dtype=np.float64)
        np.put_along_axis(gx, idx, g, axis=-1)
        return (gx,)

    return make_output("channel_max", out, (x,), vjp)


# =========================================================================
# Shape manipulation
# =========================================================================


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"reshape: cannot reshape {x.shape} to {tuple(shape)}") from exc
    return make_output("reshape", out, (x,), lambda g: (g.reshape(x.shape),))


def transpose(x: Tensor, axes: Sequence[int]) -> Tensor:
    perm = tuple(axes)
    if sorted(perm) != list(range(x.ndim)):
        raise ShapeError(f"transpose: {perm} is not a permutation of {x.ndim} axes")
    inverse = tuple(int(i) for i in np.argsort(perm))
    return make_output("transpose", x.data.transpose(perm), (x,), lambda g: (g.transpose(inverse),))


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    if not tensors:
        raise ContractViolation("concat needs at least one tensor")
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: incompatible shapes {[t.shape for t in tensors]}") from exc
    sizes = [t.shape[axis] for t in tensors]
    bounds = np.cumsum(sizes)[:-1]

    def vjp(g: np.ndarray) -> Sequence[np.ndarray]:
        return [np.ascontiguousarray(part) for part in np.split(g, bounds, axis=axis)]

    return make_output("concat", out, tuple(tensors), vjp)


def slice_axis(x: Tensor, start: int, stop: int, axis: int = -1) -> Tensor:
    """Contiguous slice ``[start:stop]`` along ``axis``."""
    ax = axis % x.ndim
    if not 0 <= start < stop <= x.shape[ax]:
        raise ShapeError(f"slice_axis: [{start}:{stop}] out of range for axis of size {x.shape[ax]}")
    key = tuple(slice(start, stop) if i == ax else slice(None) for i in range(x.ndim))

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        gx = np.zeros(x.shape, dtype=np.float64)
        gx[key] = g
        return (gx,)

    return make_output("slice_axis", x.data[key], (x,), vjp)


def take(x: Tensor, indices: Union[int, Sequence[int], np.ndarray], axis: int = 0) -> Tensor:
    """Gather along ``axis``; an integer index drops the axis.

    Repeated indices are allowed; their gradients accumulate.
    """
    ax = axis % x.ndim
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim > 1:
        raise ShapeError(f"take: indices must be a scalar or a 1-D sequence, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[ax]):
        raise ShapeError(f"take: indices out of range for axis of size {x.shape[ax]}")
    out = np.take(x.data, idx, axis=ax)

    def vjp(g: np.ndarray) -> Tuple[np.ndarray]:
        gx = np.zeros(np.moveaxis(x.data, ax, 0).shape, dtype=np.float64)
        if idx.ndim == 0:
            gx[int(idx)] += np.asarray(g)
        else:
            np.add.at(gx, idx, np.moveaxis(g, ax, 0))
        return (np.moveaxis(gx, 0, ax),)

    return make_output("take", out, (x,), vjp)


# =========================================================================
# Reductions
# =========================================================================


def sum(x: Tensor) -> Tensor:
    return make_output("sum", np.asarray(x.data.sum()), (x,), lambda g: (np.full(x.shape, float(g)),))


def mean(x: Tensor) -> Tensor:
    n = x.size
    return make_output("mean", np.asarray(x.data.mean()), (x,), lambda g: (np.full(x.shape, float(g) / n),))
