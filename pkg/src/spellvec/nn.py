"""Reverse-mode automatic differentiation over dense float64 arrays.

Values live in Tensor nodes wrapping numpy arrays. Operations are methods on
a Tape, which records them in execution order; Tape.backward replays the
records in reverse, accumulating gradients into every reachable input.
Reverse recording order is a valid topological order because every operand
of an operation exists (and is therefore recorded) before the operation's
output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionError",
    "Tensor",
    "Tape",
    "LstmCellParams",
    "lstm_step",
    "MomentumSgd",
    "GradCheckReport",
    "gradient_check",
    "dropout_mask",
    "glorot_uniform",
    "embedding_init",
    "set_debug_checks",
]


class DimensionError(ValueError):
    """Shapes of an operation's inputs do not conform."""


_debug_checks = False


def set_debug_checks(enabled: bool) -> None:
    """Toggle NaN/Inf detection on every recorded operation result."""
    global _debug_checks
    _debug_checks = bool(enabled)


class Tensor:
    """A float64 array paired with a gradient accumulator of the same shape."""

    __slots__ = ("data", "grad", "name")

    def __init__(self, data, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"<Tensor{label} shape={self.data.shape}>"


def _require_vector(op: str, *tensors: Tensor) -> None:
    for t in tensors:
        if t.data.ndim != 1:
            raise DimensionError(f"{op}: expected vector, got shape {t.data.shape}")


def _require_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.data.shape != b.data.shape:
        raise DimensionError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


class Tape:
    """Execution-ordered record of primitive operations for reverse replay.

    One tape per forward pass. Tapes are per-thread and never shared.
    """

    def __init__(self):
        self._records: list[tuple[Tensor, object]] = []

    def __len__(self) -> int:
        return len(self._records)

    def _emit(self, out: Tensor, backward) -> Tensor:
        if _debug_checks and not np.all(np.isfinite(out.data)):
            raise FloatingPointError("operation produced a non-finite value")
        self._records.append((out, backward))
        return out

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(input) into .grad of every tensor reachable
        from the scalar loss node. Inputs not reached keep their zeros."""
        if loss.data.shape != ():
            raise ValueError(f"loss must be a scalar node, got shape {loss.data.shape}")
        loss.grad[...] = 1.0
        for out, backward in reversed(self._records):
            backward(out.grad)

    # ------------------------------------------------------------------
    # elementwise arithmetic

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        _require_same_shape("add", a, b)
        out = Tensor(a.data + b.data)

        def backward(g):
            a.grad += g
            b.grad += g

        return self._emit(out, backward)

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        _require_same_shape("sub", a, b)
        out = Tensor(a.data - b.data)

        def backward(g):
            a.grad += g
            b.grad -= g

        return self._emit(out, backward)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        _require_same_shape("mul", a, b)
        out = Tensor(a.data * b.data)

        def backward(g):
            a.grad += g * b.data
            b.grad += g * a.data

        return self._emit(out, backward)

    def scale(self, a: Tensor, factor: float) -> Tensor:
        out = Tensor(a.data * factor)

        def backward(g):
            a.grad += g * factor

        return self._emit(out, backward)

    def mul_const(self, a: Tensor, factors: np.ndarray) -> Tensor:
        """Elementwise product with a constant array (dropout masks)."""
        factors = np.asarray(factors, dtype=np.float64)
        if factors.shape != a.data.shape:
            raise DimensionError(
                f"mul_const: shapes {a.data.shape} and {factors.shape} differ"
            )
        out = Tensor(a.data * factors)

        def backward(g):
            a.grad += g * factors

        return self._emit(out, backward)

    def add_n(self, parts: list[Tensor]) -> Tensor:
        if not parts:
            raise DimensionError("add_n: empty input")
        for p in parts[1:]:
            _require_same_shape("add_n", parts[0], p)
        out = Tensor(sum(p.data for p in parts))

        def backward(g):
            for p in parts:
                p.grad += g

        return self._emit(out, backward)

    # ------------------------------------------------------------------
    # structural

    def affine(self, w: Tensor, x: Tensor, b: Tensor) -> Tensor:
        """W @ x + b for W (m, n), x (n,), b (m,)."""
        if w.data.ndim != 2:
            raise DimensionError(f"affine: W must be a matrix, got shape {w.data.shape}")
        _require_vector("affine", x, b)
        m, n = w.data.shape
        if x.data.shape[0] != n or b.data.shape[0] != m:
            raise DimensionError(
                f"affine: W {w.data.shape} does not conform with "
                f"x {x.data.shape} and b {b.data.shape}"
            )
        out = Tensor(w.data @ x.data + b.data)

        def backward(g):
            w.grad += np.outer(g, x.data)
            x.grad += w.data.T @ g
            b.grad += g

        return self._emit(out, backward)

    def concat(self, parts: list[Tensor]) -> Tensor:
        if not parts:
            raise DimensionError("concat: empty input")
        _require_vector("concat", *parts)
        sizes = [p.data.shape[0] for p in parts]
        out = Tensor(np.concatenate([p.data for p in parts]))

        def backward(g):
            offset = 0
            for p, size in zip(parts, sizes):
                p.grad += g[offset : offset + size]
                offset += size

        return self._emit(out, backward)

    def row(self, m: Tensor, index: int) -> Tensor:
        """Select row `index` of a matrix parameter (embedding lookup)."""
        if m.data.ndim != 2:
            raise DimensionError(f"row: expected matrix, got shape {m.data.shape}")
        out = Tensor(m.data[index].copy())

        def backward(g):
            m.grad[index] += g

        return self._emit(out, backward)

    def pick(self, a: Tensor, index: int) -> Tensor:
        _require_vector("pick", a)
        out = Tensor(a.data[index])

        def backward(g):
            a.grad[index] += g

        return self._emit(out, backward)

    # ------------------------------------------------------------------
    # nonlinearities and reductions

    def tanh(self, a: Tensor) -> Tensor:
        out = Tensor(np.tanh(a.data))

        def backward(g):
            a.grad += g * (1.0 - out.data * out.data)

        return self._emit(out, backward)

    def sigmoid(self, a: Tensor) -> Tensor:
        # exp(-logaddexp(0, -x)) never overflows
        out = Tensor(np.exp(-np.logaddexp(0.0, -a.data)))

        def backward(g):
            a.grad += g * out.data * (1.0 - out.data)

        return self._emit(out, backward)

    def softmax(self, a: Tensor) -> Tensor:
        """Probability vector; computed with max-subtraction for stability."""
        _require_vector("softmax", a)
        if a.data.shape[0] == 0:
            raise DimensionError("softmax: empty input")
        shifted = a.data - a.data.max()
        e = np.exp(shifted)
        out = Tensor(e / e.sum())

        def backward(g):
            s = out.data
            a.grad += s * (g - np.dot(g, s))

        return self._emit(out, backward)

    def log_softmax(self, a: Tensor) -> Tensor:
        _require_vector("log_softmax", a)
        if a.data.shape[0] == 0:
            raise DimensionError("log_softmax: empty input")
        shifted = a.data - a.data.max()
        out = Tensor(shifted - np.log(np.exp(shifted).sum()))

        def backward(g):
            a.grad += g - np.exp(out.data) * g.sum()

        return self._emit(out, backward)

    def sum(self, a: Tensor) -> Tensor:
        out = Tensor(a.data.sum())

        def backward(g):
            a.grad += g

        return self._emit(out, backward)

    def sum_squares(self, a: Tensor) -> Tensor:
        out = Tensor(np.sum(a.data * a.data))

        def backward(g):
            a.grad += 2.0 * a.data * g

        return self._emit(out, backward)


# ----------------------------------------------------------------------
# initializers


def glorot_uniform(rng: np.random.Generator, fan_out: int, fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def embedding_init(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Rows uniform in [-0.5/dim, 0.5/dim]."""
    return rng.uniform(-0.5 / dim, 0.5 / dim, size=(count, dim))


# ----------------------------------------------------------------------
# LSTM cell


class LstmCellParams:
    """Input, forget, output and candidate gate weights over [input; hidden].

    With rng=None all parameters are zero; otherwise weights are Glorot
    uniform and the forget-gate bias starts at 1.0.
    """

    GATES = ("i", "f", "o", "c")

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator | None = None):
        if input_size < 1 or hidden_size < 1:
            raise DimensionError("lstm: input_size and hidden_size must be positive")
        self.input_size = input_size
        self.hidden_size = hidden_size
        z = input_size + hidden_size
        for gate in self.GATES:
            if rng is None:
                w = np.zeros((hidden_size, z))
            else:
                w = glorot_uniform(rng, hidden_size, z)
            b = np.zeros(hidden_size)
            if gate == "f" and rng is not None:
                b[:] = 1.0
            setattr(self, f"w_{gate}", Tensor(w))
            setattr(self, f"b_{gate}", Tensor(b))

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out = {}
        for gate in self.GATES:
            out[f"{prefix}w_{gate}"] = getattr(self, f"w_{gate}")
            out[f"{prefix}b_{gate}"] = getattr(self, f"b_{gate}")
        return out


def lstm_step(
    tape: Tape, cell: LstmCellParams, x: Tensor, h_prev: Tensor, c_prev: Tensor
) -> tuple[Tensor, Tensor]:
    """One gated update; returns (h, c) of the cell's hidden size."""
    if x.data.shape != (cell.input_size,):
        raise DimensionError(
            f"lstm_step: input shape {x.data.shape} != ({cell.input_size},)"
        )
    for name, v in (("h_prev", h_prev), ("c_prev", c_prev)):
        if v.data.shape != (cell.hidden_size,):
            raise DimensionError(
                f"lstm_step: {name} shape {v.data.shape} != ({cell.hidden_size},)"
            )
    z = tape.concat([x, h_prev])
    i = tape.sigmoid(tape.affine(cell.w_i, z, cell.b_i))
    f = tape.sigmoid(tape.affine(cell.w_f, z, cell.b_f))
    o = tape.sigmoid(tape.affine(cell.w_o, z, cell.b_o))
    cand = tape.tanh(tape.affine(cell.w_c, z, cell.b_c))
    c = tape.add(tape.mul(f, c_prev), tape.mul(i, cand))
    h = tape.mul(o, tape.tanh(c))
    return h, c


# ----------------------------------------------------------------------
# optimizer


class MomentumSgd:
    """param <- param - v, after v <- momentum * v + lr * grad."""

    def __init__(self, params: dict[str, Tensor], lr: float, momentum: float = 0.9):
        if lr <= 0:
            raise ValueError(f"learning rate must be positive, got {lr}")
        if not 0.0 <= momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {momentum}")
        self.lr = lr
        self.momentum = momentum
        self._params = dict(params)
        self._velocity = {name: np.zeros_like(p.data) for name, p in self._params.items()}

    def zero_grad(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def step(self) -> None:
        for name, p in self._params.items():
            v = self._velocity[name]
            v *= self.momentum
            v += self.lr * p.grad
            p.data -= v


# ----------------------------------------------------------------------
# dropout


def dropout_mask(n: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-dropout mask: zero with probability rate, else 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(n)
    keep = rng.random(n) >= rate
    return keep / (1.0 - rate)


# ----------------------------------------------------------------------
# gradient checking


@dataclass
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    worst_index: tuple
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def gradient_check(
    forward,
    params: dict[str, Tensor],
    eps: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """Compare analytic gradients of a scalar closure with central differences.

    forward() must rebuild its computation and return (tape, loss); it must be
    deterministic (dropout disabled). Relative error per coordinate is
    |analytic - numeric| / max(1, |analytic|, |numeric|), so coordinates with
    near-zero gradients are compared absolutely.
    """
    for p in params.values():
        p.zero_grad()
    tape, loss = forward()
    tape.backward(loss)
    analytic = {name: p.grad.copy() for name, p in params.items()}

    worst = (0.0, "", ())
    for name, p in params.items():
        flat = p.data.ravel()
        grad_flat = analytic[name].ravel()
        for idx in range(flat.shape[0]):
            saved = flat[idx]
            flat[idx] = saved + eps
            plus = float(forward()[1].data)
            flat[idx] = saved - eps
            minus = float(forward()[1].data)
            flat[idx] = saved
            numeric = (plus - minus) / (2.0 * eps)
            a = grad_flat[idx]
            rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if rel > worst[0]:
                worst = (rel, name, np.unravel_index(idx, p.data.shape))
    return GradCheckReport(worst[0], worst[1], worst[2], tol)
