"""Minimal reverse-mode differentiation over dense float64 arrays.

Ops build a graph of `Tensor` nodes; `Tape(root)` snapshots the graph in
topological order and `backward()` accumulates gradients into every ancestor
exactly once. Forward passes that should not interact simply build separate
graphs; there is no global state.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import NonFiniteValue, ShapeMismatch

# Floor on the normalize-to-sum-one denominator; keeps near-zero power
# vectors from exploding into Inf during early training.
NORMALIZE_EPS = 1e-12


class Tensor:
    """One node of the computation graph: values plus gradient slot."""

    __slots__ = ("values", "grad", "_parents", "_backward")

    def __init__(self, values, _parents=(), _backward=None):
        self.values = np.asarray(values, dtype=np.float64)
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def item(self) -> float:
        return float(self.values)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.values)
        self.grad += g

    def backward(self) -> None:
        Tape(self).backward()

    # operator sugar
    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def __neg__(self) -> "Tensor":
        return scale(self, -1.0)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


class Tape:
    """Topologically ordered record of the graph below one root node."""

    def __init__(self, root: Tensor):
        self.root = root
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.nodes = order  # parents precede children

    def backward(self) -> None:
        """Seed the root with ones and push gradients to every ancestor."""
        self.root._accumulate(np.ones_like(self.root.values))
        for node in reversed(self.nodes):
            if node._backward is None:
                continue
            if not np.all(np.isfinite(node.grad)):
                raise NonFiniteValue("non-finite gradient during backward")
            node._backward(node.grad)


def _make(values: np.ndarray, parents: tuple, backward) -> Tensor:
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("operation produced NaN or Inf")
    return Tensor(values, parents, backward)


def _same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeMismatch(f"{op}: {a.shape} vs {b.shape}")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")

    def bw(g):
        a._accumulate(g)
        b._accumulate(g)

    return _make(a.values + b.values, (a, b), bw)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "sub")

    def bw(g):
        a._accumulate(g)
        b._accumulate(-g)

    return _make(a.values - b.values, (a, b), bw)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")

    def bw(g):
        a._accumulate(g * b.values)
        b._accumulate(g * a.values)

    return _make(a.values * b.values, (a, b), bw)


def div(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "div")
    out = a.values / b.values

    def bw(g):
        a._accumulate(g / b.values)
        b._accumulate(-g * out / b.values)

    return _make(out, (a, b), bw)


def scale(a: Tensor, k: float) -> Tensor:
    k = float(k)

    def bw(g):
        a._accumulate(g * k)

    return _make(a.values * k, (a,), bw)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.values)

    def bw(g):
        a._accumulate(g * (1.0 - out * out))

    return _make(out, (a,), bw)


def relu(a: Tensor) -> Tensor:
    # subgradient at 0 is 0
    mask = a.values > 0.0

    def bw(g):
        a._accumulate(g * mask)

    return _make(np.where(mask, a.values, 0.0), (a,), bw)


def log(a: Tensor) -> Tensor:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(a.values)

    def bw(g):
        a._accumulate(g / a.values)

    return _make(out, (a,), bw)


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.values)

    def bw(g):
        a._accumulate(g / (2.0 * out))

    return _make(out, (a,), bw)


def mean(a: Tensor) -> Tensor:
    n = a.values.size

    def bw(g):
        a._accumulate(np.full_like(a.values, float(g) / n))

    return _make(np.asarray(a.values.mean()), (a,), bw)


def tensor_sum(a: Tensor) -> Tensor:
    def bw(g):
        a._accumulate(np.full_like(a.values, float(g)))

    return _make(np.asarray(a.values.sum()), (a,), bw)


def mean_center(a: Tensor, axis: int | None = None) -> Tensor:
    """Subtract the mean, globally or along one axis."""
    m = a.values.mean(axis=axis, keepdims=axis is not None)

    def bw(g):
        a._accumulate(g - g.mean(axis=axis, keepdims=axis is not None))

    return _make(a.values - m, (a,), bw)


def normalize_sum(a: Tensor, eps: float = NORMALIZE_EPS) -> Tensor:
    """Divide by the element sum (floored at eps) to get a distribution."""
    s = float(a.values.sum())
    floored = s < eps
    denom = eps if floored else s
    out = a.values / denom

    def bw(g):
        if floored:
            # denominator is a constant in this regime
            a._accumulate(g / denom)
        else:
            a._accumulate((g - float(np.dot(g, out))) / denom)

    return _make(out, (a,), bw)


def linear_map(matrix: np.ndarray, x: Tensor) -> Tensor:
    """y = matrix @ x with a fixed coefficient matrix (no gradient to it)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if x.values.ndim != 1 or matrix.ndim != 2 or matrix.shape[1] != x.shape[0]:
        raise ShapeMismatch(f"linear_map: {matrix.shape} @ {x.shape}")

    def bw(g):
        x._accumulate(matrix.T @ g)

    return _make(matrix @ x.values, (x,), bw)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 2 or b.values.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")

    def bw(g):
        a._accumulate(g @ b.values.T)
        b._accumulate(a.values.T @ g)

    return _make(a.values @ b.values, (a, b), bw)


def conv1d_same(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Same-padded 1-D convolution along the time axis.

    x is (C_in, T), w is (C_out, C_in, K) with K odd, b is (C_out,);
    the output is (C_out, T).
    """
    if x.values.ndim != 2 or w.values.ndim != 3 or b.values.ndim != 1:
        raise ShapeMismatch("conv1d_same: need x (C_in,T), w (C_out,C_in,K), b (C_out,)")
    c_out, c_in, k = w.shape
    if x.shape[0] != c_in or b.shape[0] != c_out:
        raise ShapeMismatch(f"conv1d_same: x {x.shape}, w {w.shape}, b {b.shape}")
    if k % 2 == 0 or k < 1:
        raise ShapeMismatch("conv1d_same: kernel length must be odd")
    t = x.shape[1]
    pad = (k - 1) // 2
    xp = np.zeros((c_in, t + 2 * pad))
    xp[:, pad:pad + t] = x.values
    windows = sliding_window_view(xp, k, axis=1)  # (C_in, T, K)
    out = np.einsum("oik,itk->ot", w.values, windows) + b.values[:, None]

    def bw(g):
        b._accumulate(g.sum(axis=1))
        w._accumulate(np.einsum("ot,itk->oik", g, windows))
        dxp = np.zeros_like(xp)
        for kk in range(k):
            dxp[:, kk:kk + t] += np.einsum("ot,oi->it", g, w.values[:, :, kk])
        x._accumulate(dxp[:, pad:pad + t])

    return _make(out, (x, w, b), bw)


def pick(a: Tensor, index: int) -> Tensor:
    """Select one element of a 1-D tensor as a scalar."""
    if a.values.ndim != 1:
        raise ShapeMismatch("pick expects a 1-D tensor")
    index = int(index)

    def bw(g):
        d = np.zeros_like(a.values)
        d[index] = float(g)
        a._accumulate(d)

    return _make(np.asarray(a.values[index]), (a,), bw)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    def bw(g):
        a._accumulate(g.reshape(a.shape))

    return _make(a.values.reshape(shape), (a,), bw)


def detach(a: Tensor) -> Tensor:
    """Copy values into a fresh leaf; gradients stop here."""
    return Tensor(a.values.copy())


def grad_check(
    fn: Callable[[list[Tensor]], Tensor],
    points: Sequence[np.ndarray],
    h: float = 1e-4,
) -> float:
    """Max relative gap between analytic and central-difference gradients.

    `fn` maps a list of leaf tensors to a scalar tensor; the returned figure
    is max over coordinates of |analytic - central| / max(1, |central|).
    """
    arrays = [np.asarray(p, dtype=np.float64) for p in points]
    leaves = [Tensor(p.copy()) for p in arrays]
    out = fn(leaves)
    if out.values.size != 1:
        raise ShapeMismatch("grad_check needs a scalar-valued function")
    out.backward()
    analytic = [
        leaf.grad.copy() if leaf.grad is not None else np.zeros_like(leaf.values)
        for leaf in leaves
    ]

    def value_at(perturbed: list[np.ndarray]) -> float:
        return float(fn([Tensor(p) for p in perturbed]).values)

    worst = 0.0
    for i, base in enumerate(arrays):
        flat_analytic = analytic[i].ravel()
        for j in range(base.size):
            plus = [p.copy() for p in arrays]
            minus = [p.copy() for p in arrays]
            plus[i].ravel()[j] += h
            minus[i].ravel()[j] -= h
            central = (value_at(plus) - value_at(minus)) / (2.0 * h)
            gap = abs(flat_analytic[j] - central) / max(1.0, abs(central))
            worst = max(worst, gap)
    return worst
