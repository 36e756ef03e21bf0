"""Reverse-mode automatic differentiation over dense float64 arrays.

A Tensor wraps an ndarray and records the closure that routes its output
gradient back to its parents. backward() topologically sorts the tape and
accumulates into .grad. Only the handful of primitives the embedding and
Q-network need are provided; gradients for each are validated against
central finite differences in the test suite.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

# Every op output is checked for NaN/Inf when this is on. Toggle via
# set_finite_checks for hot paths that are already validated.
_CHECK_FINITE = True
_GRAD_ENABLED = True


def set_finite_checks(enabled: bool) -> bool:
    global _CHECK_FINITE
    previous = _CHECK_FINITE
    _CHECK_FINITE = bool(enabled)
    return previous


class no_grad:
    """Context manager: tensors created inside record no tape."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._previous = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._previous
        return False


def _as_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, values, requires_grad: bool = False,
                 parents: tuple = (), backward: Callable | None = None):
        self.data = _as_array(values)
        if _CHECK_FINITE and not np.all(np.isfinite(self.data)):
            raise FloatingPointError("non-finite values in tensor")
        self.grad: np.ndarray | None = None
        track = requires_grad or any(p.requires_grad for p in parents)
        self.requires_grad = track and (_GRAD_ENABLED or not parents)
        self._parents = parents if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    # ---- bookkeeping -------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def item(self) -> float:
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self) -> None:
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar output")
        if not self.requires_grad:
            raise ValueError("output does not depend on any parameter")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
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
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # ---- arithmetic --------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = _ensure(other)
        out_data = self.data + other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g, other.shape))

        return Tensor(out_data, parents=(self, other), backward=backward)

    def __mul__(self, other) -> "Tensor":
        other = _ensure(other)
        out_data = self.data * other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g * other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g * self.data, other.shape))

        return Tensor(out_data, parents=(self, other), backward=backward)

    def __truediv__(self, other) -> "Tensor":
        other = _ensure(other)
        out_data = self.data / other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g / other.data, self.shape))
            if other.requires_grad:
                other._accumulate(
                    _unbroadcast(-g * self.data / other.data**2, other.shape)
                )

        return Tensor(out_data, parents=(self, other), backward=backward)

    def __pow__(self, power: float) -> "Tensor":
        power = float(power)
        out_data = self.data**power

        def backward(g):
            self._accumulate(g * power * self.data ** (power - 1))

        return Tensor(out_data, parents=(self,), backward=backward)

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other) -> "Tensor":
        return self + (-_ensure(other))

    def __radd__(self, other) -> "Tensor":
        return self + other

    def __rmul__(self, other) -> "Tensor":
        return self * other

    def __rsub__(self, other) -> "Tensor":
        return _ensure(other) + (-self)

    def __rtruediv__(self, other) -> "Tensor":
        return _ensure(other) / self

    def __matmul__(self, other) -> "Tensor":
        other = _ensure(other)
        if self.ndim != 2 or other.ndim != 2:
            raise ValueError("matmul expects 2-D tensors")
        out_data = self.data @ other.data

        def backward(g):
            if self.requires_grad:
                self._accumulate(g @ other.data.T)
            if other.requires_grad:
                other._accumulate(self.data.T @ g)

        return Tensor(out_data, parents=(self, other), backward=backward)

    @property
    def T(self) -> "Tensor":
        def backward(g):
            self._accumulate(g.T)

        return Tensor(self.data.T.copy(), parents=(self,), backward=backward)

    # ---- elementwise nonlinearities ----------------------------------

    def relu(self) -> "Tensor":
        out_data = np.maximum(self.data, 0.0)

        def backward(g):
            self._accumulate(g * (self.data > 0))

        return Tensor(out_data, parents=(self,), backward=backward)

    def sigmoid(self) -> "Tensor":
        x = self.data
        out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))),
                            np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))

        def backward(g):
            self._accumulate(g * out_data * (1.0 - out_data))

        return Tensor(out_data, parents=(self,), backward=backward)

    def tanh(self) -> "Tensor":
        out_data = np.tanh(self.data)

        def backward(g):
            self._accumulate(g * (1.0 - out_data**2))

        return Tensor(out_data, parents=(self,), backward=backward)

    def cos(self) -> "Tensor":
        out_data = np.cos(self.data)

        def backward(g):
            self._accumulate(-g * np.sin(self.data))

        return Tensor(out_data, parents=(self,), backward=backward)

    def exp(self) -> "Tensor":
        out_data = np.exp(self.data)

        def backward(g):
            self._accumulate(g * out_data)

        return Tensor(out_data, parents=(self,), backward=backward)

    def log(self) -> "Tensor":
        out_data = np.log(self.data)

        def backward(g):
            self._accumulate(g / self.data)

        return Tensor(out_data, parents=(self,), backward=backward)

    def abs(self) -> "Tensor":
        out_data = np.abs(self.data)

        def backward(g):
            self._accumulate(g * np.sign(self.data))

        return Tensor(out_data, parents=(self,), backward=backward)

    # ---- reductions and shape ----------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out_data = self.data.sum(axis=axis, keepdims=keepdims)

        def backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.shape).copy())

        return Tensor(out_data, parents=(self,), backward=backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out_data = self.data.reshape(shape)
        src_shape = self.shape

        def backward(g):
            self._accumulate(g.reshape(src_shape))

        return Tensor(out_data, parents=(self,), backward=backward)

    def __getitem__(self, key) -> "Tensor":
        if isinstance(key, Tensor):
            key = key.data.astype(np.int64)
        out_data = self.data[key]

        def backward(g):
            if self.grad is None:
                self.grad = np.zeros_like(self.data)
            np.add.at(self.grad, key, g)

        return Tensor(out_data.copy(), parents=(self,), backward=backward)


def _ensure(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Reduce a broadcast gradient back to the operand's shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [_ensure(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t._accumulate(g[tuple(index)])

    return Tensor(out_data, parents=tuple(tensors), backward=backward)


def segment_sum(x: Tensor, segment_ids: np.ndarray, n_segments: int) -> Tensor:
    """Row-sum x into n_segments buckets given per-row segment ids."""
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    out_data = np.zeros((n_segments,) + x.data.shape[1:], dtype=np.float64)
    np.add.at(out_data, segment_ids, x.data)

    def backward(g):
        x._accumulate(g[segment_ids])

    return Tensor(out_data, parents=(x,), backward=backward)


def segment_softmax(x: Tensor, segment_ids: np.ndarray, n_segments: int) -> Tensor:
    """Softmax of x within each segment, rows grouped by segment_ids.

    The per-segment max shift is treated as a constant (its gradient
    cancels exactly in the softmax quotient).
    """
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    peak = np.full((n_segments,) + x.data.shape[1:], -np.inf)
    np.maximum.at(peak, segment_ids, x.data)
    peak[np.isneginf(peak)] = 0.0  # empty segments are never gathered
    shifted = x - Tensor(peak[segment_ids])
    weights = shifted.exp()
    denom = segment_sum(weights, segment_ids, n_segments)
    return weights / denom[segment_ids]


class ParameterSet:
    """Named trainable tensors with persistence and plain-SGD updates."""

    FORMAT_VERSION = 1

    def __init__(self):
        self._params: dict[str, Tensor] = {}

    def add(self, name: str, values) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = Tensor(values, requires_grad=True)
        self._params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def sgd_step(self, lr: float) -> None:
        for t in self._params.values():
            if t.grad is not None:
                t.data -= lr * t.grad

    def n_values(self) -> int:
        return sum(t.data.size for t in self._params.values())

    def clone(self) -> "ParameterSet":
        out = ParameterSet()
        for name, t in self._params.items():
            out.add(name, t.data.copy())
        return out

    def copy_from(self, other: "ParameterSet") -> None:
        if self.names() != other.names():
            raise ValueError("parameter sets have different names")
        for name, t in self._params.items():
            np.copyto(t.data, other[name].data)

    def save(self, path) -> None:
        path = Path(path)
        arrays = {name: t.data for name, t in self._params.items()}
        with open(path, "wb") as fh:
            np.savez(fh, **arrays)
        manifest = {
            "format_version": self.FORMAT_VERSION,
            "tensors": {name: list(t.shape) for name, t in self._params.items()},
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(manifest, indent=2) + "\n"
        )

    @classmethod
    def load(cls, path) -> "ParameterSet":
        path = Path(path)
        manifest_path = path.with_suffix(path.suffix + ".json")
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())
            if manifest.get("format_version") != cls.FORMAT_VERSION:
                raise ValueError(
                    f"unsupported checkpoint version {manifest.get('format_version')}"
                )
        out = cls()
        with np.load(path) as data:
            for name in data.files:
                out.add(name, data[name])
        return out


def grad_check(
    f: Callable[[], Tensor],
    params: Iterable[Tensor],
    eps: float = 1e-5,
    max_coords: int = 24,
    rng_seed: int = 0,
) -> float:
    """Worst relative error of reverse-mode vs central finite differences.

    f is re-evaluated with perturbed parameter values; coordinates are
    sampled per tensor when it has more than max_coords entries.
    """
    params = list(params)
    for t in params:
        t.grad = None
    out = f()
    out.backward()
    grads = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
             for t in params]

    rng = np.random.Generator(np.random.PCG64(rng_seed))
    worst = 0.0
    for t, g in zip(params, grads):
        flat = t.data.reshape(-1)
        n = flat.size
        coords = (np.arange(n) if n <= max_coords
                  else rng.choice(n, size=max_coords, replace=False))
        for c in coords:
            keep = flat[c]
            flat[c] = keep + eps
            hi = float(f().data)
            flat[c] = keep - eps
            lo = float(f().data)
            flat[c] = keep
            numeric = (hi - lo) / (2 * eps)
            analytic = g.reshape(-1)[c]
            scale = max(abs(numeric), abs(analytic), 1e-8)
            worst = max(worst, abs(numeric - analytic) / scale)
    return worst
