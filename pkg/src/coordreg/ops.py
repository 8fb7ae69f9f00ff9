"""Differentiable primitives: elementwise maps, reductions, affine maps,
and 2-D convolution.

All functions take and return :class:`~coordreg.autodiff.Variable` and attach
hand-derived backward rules. The rectifier derivative convention at kinks is:
relu'(0) = 0 and d|x|/dx at 0 = 0.
"""

from __future__ import annotations

import numpy as np

from .autodiff import ShapeError, Variable, as_tensor, make_op

ELEMENTWISE_KINDS = ("relu", "abs", "sigmoid", "exp", "negate",
                     "add-constant", "multiply-constant")


def relu(x: Variable) -> Variable:
    v = x.value
    return make_op(np.maximum(v, 0.0), (x,), lambda g: (g * (v > 0.0),), "relu")


def absolute(x: Variable) -> Variable:
    v = x.value
    return make_op(np.abs(v), (x,), lambda g: (g * np.sign(v),), "abs")


def sigmoid(x: Variable) -> Variable:
    v = x.value
    # Split by sign so exp never overflows.
    s = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                 np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    return make_op(s, (x,), lambda g: (g * s * (1.0 - s),), "sigmoid")


def exp(x: Variable) -> Variable:
    e = np.exp(x.value)
    return make_op(e, (x,), lambda g: (g * e,), "exp")


def negate(x: Variable) -> Variable:
    return -x


def add_constant(x: Variable, constant) -> Variable:
    """x + c for a scalar or an array broadcastable to x's shape."""
    c = as_tensor(constant)
    if np.broadcast_shapes(x.shape, c.shape) != x.shape:
        raise ShapeError(f"constant shape {c.shape} does not broadcast "
                         f"into input shape {x.shape}")
    return make_op(x.value + c, (x,), lambda g: (g,), "add_const")


def multiply_constant(x: Variable, constant) -> Variable:
    """x * c for a scalar or an array broadcastable to x's shape."""
    c = as_tensor(constant)
    if np.broadcast_shapes(x.shape, c.shape) != x.shape:
        raise ShapeError(f"constant shape {c.shape} does not broadcast "
                         f"into input shape {x.shape}")
    return make_op(x.value * c, (x,), lambda g: (g * c,), "mul_const")


def elementwise(x: Variable, kind: str, constant=None) -> Variable:
    """Dispatch an elementwise operation by name (see ELEMENTWISE_KINDS)."""
    if kind == "relu":
        return relu(x)
    if kind == "abs":
        return absolute(x)
    if kind == "sigmoid":
        return sigmoid(x)
    if kind == "exp":
        return exp(x)
    if kind == "negate":
        return negate(x)
    if kind == "add-constant":
        return add_constant(x, constant)
    if kind == "multiply-constant":
        return multiply_constant(x, constant)
    raise ValueError(f"unknown elementwise kind {kind!r}")


def reduce(x: Variable, kind: str = "sum", axes=None,
           keepdims: bool = False) -> Variable:
    """Sum or mean over ``axes`` (None = all axes, () = identity)."""
    if kind not in ("sum", "mean"):
        raise ValueError(f"unknown reduce kind {kind!r}")
    v = x.value
    if axes is None:
        ax = tuple(range(v.ndim))
    else:
        ax_list = axes if isinstance(axes, (tuple, list)) else (axes,)
        ax = []
        for a in ax_list:
            a = int(a)
            if not -v.ndim <= a < v.ndim:
                raise ValueError(f"invalid axis {a} for shape {v.shape}")
            ax.append(a % v.ndim)
        if len(set(ax)) != len(ax):
            raise ValueError(f"duplicate axis in {axes!r}")
        ax = tuple(sorted(ax))
    count = 1
    for a in ax:
        count *= v.shape[a]
    out = v.sum(axis=ax, keepdims=keepdims) if kind == "sum" \
        else v.mean(axis=ax, keepdims=keepdims)

    def rule(g):
        gg = g
        if ax and not keepdims:
            kept = list(v.shape)
            for a in ax:
                kept[a] = 1
            gg = gg.reshape(kept)
        gg = np.broadcast_to(gg, v.shape)
        if kind == "mean":
            gg = gg / count
        return (np.ascontiguousarray(gg),)

    return make_op(out, (x,), rule, f"reduce_{kind}")


def reshape(x: Variable, shape) -> Variable:
    old = x.shape
    return make_op(x.value.reshape(shape), (x,),
                   lambda g: (g.reshape(old),), "reshape")


def select(x: Variable, index: int, axis: int = -1) -> Variable:
    """Pick one index along ``axis`` (the axis is removed)."""
    v = x.value
    out = np.take(v, index, axis=axis)
    slicer = [slice(None)] * v.ndim
    slicer[axis if axis >= 0 else v.ndim + axis] = index
    slicer = tuple(slicer)

    def rule(g):
        gx = np.zeros_like(v)
        gx[slicer] = g
        return (gx,)

    return make_op(out, (x,), rule, "select")


def frobenius_inner(a: Variable, b) -> Variable:
    """Scalar sum of the elementwise product of ``a`` with a constant ``b``."""
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(
            f"frobenius_inner: shapes {a.shape} and {b.shape} do not match")
    out = np.asarray(np.sum(a.value * b))
    return make_op(out, (a,), lambda g: (g * b,), "frobenius_inner")


def linear(x: Variable, weight: Variable, bias: Variable) -> Variable:
    """Affine map (N, F) @ (F, G) + (G,) -> (N, G)."""
    xv, wv, bv = x.value, weight.value, bias.value
    if xv.ndim != 2 or wv.ndim != 2 or xv.shape[1] != wv.shape[0]:
        raise ShapeError(
            f"linear: input shape {xv.shape} incompatible with weight shape "
            f"{wv.shape}")
    if bv.shape != (wv.shape[1],):
        raise ShapeError(
            f"linear: bias shape {bv.shape} does not match output width "
            f"{wv.shape[1]}")

    def rule(g):
        return (g @ wv.T, xv.T @ g, g.sum(axis=0))

    return make_op(xv @ wv + bv, (x, weight, bias), rule, "linear")


def _im2col(x: np.ndarray, k: int, stride: int) -> np.ndarray:
    """(N, C, H, W) -> (N, C*k*k, Ho*Wo) patch matrix."""
    n, c, h, w = x.shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    cols = np.empty((n, c, k, k, ho, wo), dtype=x.dtype)
    for a in range(k):
        for b in range(k):
            cols[:, :, a, b] = x[:, :, a:a + stride * ho:stride,
                                 b:b + stride * wo:stride]
    return cols.reshape(n, c * k * k, ho * wo)


def _col2im(cols: np.ndarray, x_shape, k: int, stride: int) -> np.ndarray:
    """Scatter-add inverse of :func:`_im2col`."""
    n, c, h, w = x_shape
    ho = (h - k) // stride + 1
    wo = (w - k) // stride + 1
    cols = cols.reshape(n, c, k, k, ho, wo)
    x = np.zeros(x_shape, dtype=cols.dtype)
    for a in range(k):
        for b in range(k):
            x[:, :, a:a + stride * ho:stride,
              b:b + stride * wo:stride] += cols[:, :, a, b]
    return x


def conv2d(x: Variable, weight: Variable, bias: Variable,
           stride: int = 1, padding: int = 0) -> Variable:
    """2-D convolution (cross-correlation), NCHW inputs and OCkk weights.

    Output spatial size is floor((H + 2*padding - k) / stride) + 1 per axis.
    """
    xv, wv, bv = x.value, weight.value, bias.value
    if xv.ndim != 4 or wv.ndim != 4:
        raise ShapeError(f"conv2d expects 4-d input and weight, got "
                         f"{xv.shape} and {wv.shape}")
    n, c, h, w = xv.shape
    o, cw, kh, kw = wv.shape
    if cw != c:
        raise ShapeError(f"conv2d: weight shape {wv.shape} does not match "
                         f"input shape {xv.shape} on channels")
    if kh != kw:
        raise ShapeError(f"conv2d: only square kernels supported, got {wv.shape}")
    if bv.shape != (o,):
        raise ShapeError(f"conv2d: bias shape {bv.shape} does not match "
                         f"output channels {o}")
    if stride < 1 or padding < 0:
        raise ValueError("conv2d: stride must be >= 1 and padding >= 0")
    k = kh
    if k > h + 2 * padding or k > w + 2 * padding:
        raise ShapeError(f"conv2d: kernel {k} exceeds padded input "
                         f"{(h + 2 * padding, w + 2 * padding)}")

    if padding:
        xp = np.pad(xv, ((0, 0), (0, 0), (padding, padding),
                         (padding, padding)))
    else:
        xp = xv
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    cols = _im2col(xp, k, stride)                      # (N, C*k*k, Ho*Wo)
    wmat = wv.reshape(o, c * k * k)
    out = (wmat @ cols).reshape(n, o, ho, wo) + bv[None, :, None, None]

    def rule(g):
        gl = g.reshape(n, o, ho * wo)
        gb = g.sum(axis=(0, 2, 3))
        gw = np.einsum("nol,npl->op", gl, cols).reshape(wv.shape)
        gcols = np.einsum("op,nol->npl", wmat, gl)
        gxp = _col2im(gcols, xp.shape, k, stride)
        gx = gxp[:, :, padding:padding + h, padding:padding + w] if padding \
            else gxp
        return (np.ascontiguousarray(gx), gw, gb)

    return make_op(out, (x, weight, bias), rule, "conv2d")
