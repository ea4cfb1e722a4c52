"""Dense float64 math with reverse-mode differentiation, MLPs, and Adam.

Everything here operates on 2-D float64 arrays ("matrices"). Differentiable
operations take and return :class:`Tensor` wrappers; while a :class:`Tape` is
open, each operation records a backward closure so that :func:`backward` can
replay the tape in reverse and accumulate gradients into ``Tensor.grad``.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

Matrix = np.ndarray  # 2-D, float64, row-major


class ShapeError(ValueError):
    """Operand dimensions do not agree."""


def as_matrix(data) -> Matrix:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    return arr


class Tensor:
    """A matrix value that participates in tape-recorded computation.

    ``grad`` is populated by :func:`backward`; repeated backward passes
    accumulate, so callers reset ``grad = None`` between steps.
    """

    __slots__ = ("data", "grad")

    def __init__(self, data):
        self.data = as_matrix(data)
        self.grad: Matrix | None = None

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def accumulate(self, g: Matrix) -> None:
        self.grad = g.copy() if self.grad is None else self.grad + g

    def __repr__(self) -> str:
        return f"Tensor({self.rows}x{self.cols})"


_active_tape: "Tape | None" = None


class Tape:
    """Execution-ordered log of primitive operations.

    Ops are appended as they execute, which is already a topological order;
    replaying the log backwards propagates gradients from any recorded output
    to every tensor that fed it.
    """

    def __init__(self):
        self._entries: list[tuple[Tensor, Callable[[Matrix], None]]] = []

    def record(self, out: Tensor, backward_fn: Callable[[Matrix], None]) -> None:
        self._entries.append((out, backward_fn))

    def __enter__(self) -> "Tape":
        global _active_tape
        self._previous = _active_tape
        _active_tape = self
        return self

    def __exit__(self, *exc) -> None:
        global _active_tape
        _active_tape = self._previous

    def __len__(self) -> int:
        return len(self._entries)


def _record(out: Tensor, backward_fn: Callable[[Matrix], None]) -> None:
    if _active_tape is not None:
        _active_tape.record(out, backward_fn)


def backward(tape: Tape, loss: Tensor) -> None:
    """Propagate d(loss)/d(node) to every tensor recorded on ``tape``.

    Entries whose output never received a gradient are not on a path from the
    loss and are skipped, so one tape can carry several heads.
    """
    if loss.data.shape != (1, 1):
        raise ShapeError(f"loss must be scalar (1x1), got {loss.data.shape}")
    loss.grad = np.ones((1, 1))
    for out, backward_fn in reversed(tape._entries):
        if out.grad is not None:
            backward_fn(out.grad)


# ---------------------------------------------------------------------------
# Primitive operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: inner dims disagree ({a.cols} vs {b.rows})")
    out = Tensor(a.data @ b.data)

    def back(g: Matrix) -> None:
        a.accumulate(g @ b.data.T)
        b.accumulate(a.data.T @ g)

    _record(out, back)
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"add: shapes disagree ({a.data.shape} vs {b.data.shape})")
    out = Tensor(a.data + b.data)

    def back(g: Matrix) -> None:
        a.accumulate(g)
        b.accumulate(g)

    _record(out, back)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"sub: shapes disagree ({a.data.shape} vs {b.data.shape})")
    out = Tensor(a.data - b.data)

    def back(g: Matrix) -> None:
        a.accumulate(g)
        b.accumulate(-g)

    _record(out, back)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = Tensor(a.data * c)

    def back(g: Matrix) -> None:
        a.accumulate(g * c)

    _record(out, back)
    return out


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a 1xd bias row to every row of an nxd matrix."""
    if bias.rows != 1 or bias.cols != x.cols:
        raise ShapeError(f"add_bias: bias {bias.data.shape} does not match x {x.data.shape}")
    out = Tensor(x.data + bias.data)

    def back(g: Matrix) -> None:
        x.accumulate(g)
        bias.accumulate(g.sum(axis=0, keepdims=True))

    _record(out, back)
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0))
    mask = x.data > 0  # gradient is zero at exactly 0

    def back(g: Matrix) -> None:
        x.accumulate(g * mask)

    _record(out, back)
    return out


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    if a.rows != b.rows:
        raise ShapeError(f"concat_cols: row counts disagree ({a.rows} vs {b.rows})")
    out = Tensor(np.hstack([a.data, b.data]))
    split = a.cols

    def back(g: Matrix) -> None:
        a.accumulate(g[:, :split])
        b.accumulate(g[:, split:])

    _record(out, back)
    return out


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(np.array([[x.data.sum()]]))

    def back(g: Matrix) -> None:
        x.accumulate(np.full_like(x.data, g[0, 0]))

    _record(out, back)
    return out


def weighted_softmax_cross_entropy(
    logits: Tensor, targets: Sequence[int], class_weights: Sequence[float]
) -> Tensor:
    """Class-weighted softmax cross entropy, normalized by total weight.

    Returns (sum_i w[y_i] * -log softmax(logits_i)[y_i]) / sum_i w[y_i] as a
    1x1 tensor. Stabilized by per-row max subtraction. With unit weights this
    is the plain mean cross entropy.
    """
    y = np.asarray(targets, dtype=np.int64).reshape(-1)
    w = np.asarray(class_weights, dtype=np.float64).reshape(-1)
    n, k = logits.data.shape
    if n == 0:
        raise ValueError("cross entropy over an empty batch")
    if y.shape[0] != n:
        raise ShapeError(f"targets length {y.shape[0]} != batch size {n}")
    if w.shape[0] != k:
        raise ShapeError(f"class_weights length {w.shape[0]} != class count {k}")
    if np.any(w < 0) or not np.any(w > 0):
        raise ValueError("class weights must be >= 0 and not all zero")
    if np.any(y < 0) or np.any(y >= k):
        raise ValueError(f"target index out of range for {k} classes")

    z = logits.data - logits.data.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    row_w = w[y]
    total_w = row_w.sum()
    if total_w <= 0.0:
        raise ValueError("total batch weight is zero (every row's class has weight 0)")
    loss = -(row_w * log_probs[np.arange(n), y]).sum() / total_w
    out = Tensor(np.array([[loss]]))

    probs = np.exp(log_probs)

    def back(g: Matrix) -> None:
        one_hot = np.zeros((n, k))
        one_hot[np.arange(n), y] = 1.0
        dlogits = (probs - one_hot) * row_w[:, None] * (g[0, 0] / total_w)
        logits.accumulate(dlogits)

    _record(out, back)
    return out


# ---------------------------------------------------------------------------
# MLPs


class Mlp:
    """Fully connected net: ReLU on hidden layers, identity on the output."""

    def __init__(self, weights: list[Tensor], biases: list[Tensor]):
        if not weights or len(weights) != len(biases):
            raise ValueError("need one bias per weight matrix, at least one layer")
        for i, (wt, bt) in enumerate(zip(weights, biases)):
            if bt.data.shape != (1, wt.cols):
                raise ShapeError(f"layer {i}: bias shape {bt.data.shape} != (1, {wt.cols})")
            if i > 0 and weights[i - 1].cols != wt.rows:
                raise ShapeError(f"layer {i}: input width {wt.rows} != previous output "
                                 f"{weights[i - 1].cols}")
        self.weights = weights
        self.biases = biases

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].rows] + [w.cols for w in self.weights]

    def params(self) -> list[Tensor]:
        out: list[Tensor] = []
        for wt, bt in zip(self.weights, self.biases):
            out.append(wt)
            out.append(bt)
        return out

    def forward(self, x: Tensor) -> Tensor:
        h = x
        last = len(self.weights) - 1
        for i, (wt, bt) in enumerate(zip(self.weights, self.biases)):
            h = add_bias(matmul(h, wt), bt)
            if i != last:
                h = relu(h)
        return h

    def apply(self, x: Matrix) -> Matrix:
        """Tape-free forward pass on a raw matrix."""
        h = as_matrix(x)
        last = len(self.weights) - 1
        for i, (wt, bt) in enumerate(zip(self.weights, self.biases)):
            h = h @ wt.data + bt.data
            if i != last:
                h = np.maximum(h, 0.0)
        return h

    def copy(self) -> "Mlp":
        return Mlp([Tensor(w.data.copy()) for w in self.weights],
                   [Tensor(b.data.copy()) for b in self.biases])


def mlp_init(layer_sizes: Sequence[int], seed: int) -> Mlp:
    """He-style init: weights ~ N(0, 2/fan_in) from a seeded generator, zero biases."""
    sizes = list(layer_sizes)
    if len(sizes) < 2 or any(s <= 0 for s in sizes):
        raise ValueError(f"need >=2 positive layer sizes, got {sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(Tensor(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_in, fan_out))))
        biases.append(Tensor(np.zeros((1, fan_out))))
    return Mlp(weights, biases)


# ---------------------------------------------------------------------------
# Adam


class AdamState:
    """Bias-corrected adaptive-moment optimizer state for one parameter list."""

    def __init__(self, params: Sequence[Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_step(params: Sequence[Tensor], grads: Sequence[Matrix], state: AdamState) -> None:
    """One in-place Adam update over ``params``. A missing gradient counts as zero."""
    if len(params) != len(state.m):
        raise ShapeError(f"adam_step: {len(params)} params vs state built for {len(state.m)}")
    if len(grads) != len(params):
        raise ShapeError(f"adam_step: {len(grads)} grads for {len(params)} params")
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            g = np.zeros_like(p.data)
        if g.shape != p.data.shape:
            raise ShapeError(f"adam_step: grad shape {g.shape} != param shape {p.data.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
