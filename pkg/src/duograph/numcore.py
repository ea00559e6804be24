"""Dense float64 matrices with tape-based reverse-mode differentiation.

Just enough machinery to train the two encoders end to end: 2-D tensors,
a handful of primitive ops with hand-written vector-Jacobian products, and
a tape that replays them backward. No broadcasting beyond column vectors,
no higher-order derivatives, no sparsity.
"""

from __future__ import annotations

import threading
from typing import Callable

import numpy as np

__all__ = [
    "ShapeError",
    "Tensor",
    "Tape",
    "backward",
    "matmul",
    "transpose",
    "relu",
    "exp",
    "log",
    "clamp_min",
    "row_sum",
    "sum_all",
    "row_l2_normalize",
    "l2_normalize_rows",
]

NORM_FLOOR = 1e-12


class ShapeError(ValueError):
    """Operand shapes do not line up for the requested operation."""


class Tensor:
    """Immutable 2-D float64 matrix, optionally tracked for gradients.

    1-D input is promoted to a single row. The backing numpy array is
    frozen after construction; updates build new tensors.
    """

    __slots__ = ("data", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got {arr.ndim} dimensions")
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = bool(requires_grad)

    @classmethod
    def _owned(cls, arr: np.ndarray) -> "Tensor":
        """Wrap a freshly computed array without the defensive copy.

        Internal fast path for op results; callers must not keep a
        writable reference to `arr`.
        """
        out = cls.__new__(cls)
        if arr.dtype != np.float64:
            arr = arr.astype(np.float64)
        arr.setflags(write=False)
        out.data = arr
        out.requires_grad = False
        return out

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    def __add__(self, other) -> "Tensor":
        return _binary(self, other, "add")

    def __radd__(self, other) -> "Tensor":
        return _binary(self, other, "add")

    def __sub__(self, other) -> "Tensor":
        return _binary(self, other, "sub")

    def __mul__(self, other) -> "Tensor":
        return _binary(self, other, "mul")

    def __rmul__(self, other) -> "Tensor":
        return _binary(self, other, "mul")

    def __truediv__(self, other) -> "Tensor":
        return _binary(self, other, "div")

    def __neg__(self) -> "Tensor":
        return self * -1.0


_VJP = Callable[[np.ndarray], np.ndarray]


class Tape:
    """Ordered record of forward ops for one backward pass.

    Single-owner and single-use by convention: build it in a `with` block,
    run `backward` once (replays are pure, repeated calls give identical
    gradients), then discard.
    """

    def __init__(self):
        self._nodes: list[tuple[Tensor, tuple[tuple[Tensor, _VJP], ...]]] = []
        self._tracked: set[int] = set()
        self._leaves: dict[int, Tensor] = {}

    def _tracks(self, t: Tensor) -> bool:
        return t.requires_grad or id(t) in self._tracked

    def record(self, out: Tensor, pairs: list[tuple[Tensor, _VJP]]) -> None:
        tracked = []
        for inp, vjp in pairs:
            if not self._tracks(inp):
                continue
            tracked.append((inp, vjp))
            if inp.requires_grad and id(inp) not in self._tracked:
                self._leaves[id(inp)] = inp
        if tracked:
            self._nodes.append((out, tuple(tracked)))
            self._tracked.add(id(out))

    def __len__(self) -> int:
        return len(self._nodes)

    def __enter__(self) -> "Tape":
        _STACK.tapes.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        popped = _STACK.tapes.pop()
        assert popped is self, "tapes must be exited in LIFO order"


class _TapeStack(threading.local):
    def __init__(self):
        self.tapes: list[Tape] = []


_STACK = _TapeStack()


def _active_tape() -> Tape | None:
    return _STACK.tapes[-1] if _STACK.tapes else None


def _record(out: Tensor, pairs: list[tuple[Tensor, _VJP]]) -> Tensor:
    tape = _active_tape()
    if tape is not None:
        tape.record(out, pairs)
    return out


def backward(loss: Tensor, tape: Tape) -> dict[Tensor, np.ndarray]:
    """Replay `tape` in reverse from a scalar loss.

    Returns one gradient per `requires_grad` leaf that participated in the
    tape (zeros when no path reached it). Does not mutate the tape.
    """
    if loss.shape != (1, 1):
        raise ShapeError(f"backward needs a 1x1 loss tensor, got {loss.shape}")
    grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    # First contributions may alias upstream gradients (pass-through VJPs);
    # they are only mutated in place once re-owned by an out-of-place add.
    owned: set[int] = {id(loss)}
    for out, pairs in reversed(tape._nodes):
        g_out = grads.get(id(out))
        if g_out is None:
            continue
        for inp, vjp in pairs:
            contribution = vjp(g_out)
            key = id(inp)
            slot = grads.get(key)
            if slot is None:
                grads[key] = contribution
            elif key in owned:
                slot += contribution
            else:
                grads[key] = slot + contribution
                owned.add(key)
        if id(out) != id(loss) and id(out) not in tape._leaves:
            # Every tensor is produced by at most one node, so its gradient
            # is complete here; dropping it caps live memory at the frontier.
            del grads[id(out)]
            owned.discard(id(out))
    result: dict[Tensor, np.ndarray] = {}
    for key, leaf in tape._leaves.items():
        g = grads.get(key)
        result[leaf] = np.zeros(leaf.shape) if g is None else g.copy()
    if loss.requires_grad and id(loss) not in tape._tracked:
        result[loss] = np.ones((1, 1))
    return result


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product a @ b with gradient rules for both operands."""
    if a.cols != b.rows:
        raise ShapeError(f"matmul mismatch: {a.shape} @ {b.shape}")
    out = Tensor._owned(a.data @ b.data)
    return _record(
        out,
        [
            (a, lambda g, bd=b.data: g @ bd.T),
            (b, lambda g, ad=a.data: ad.T @ g),
        ],
    )


def transpose(a: Tensor) -> Tensor:
    out = Tensor._owned(a.data.T)  # view of frozen storage, itself frozen
    return _record(out, [(a, lambda g: g.T)])


def relu(a: Tensor) -> Tensor:
    """Elementwise max(0, x); subgradient at 0 is taken as 0."""
    out = Tensor._owned(np.maximum(a.data, 0.0))
    mask = a.data > 0.0
    return _record(out, [(a, lambda g, m=mask: g * m)])


def exp(a: Tensor) -> Tensor:
    out = Tensor._owned(np.exp(a.data))
    return _record(out, [(a, lambda g, o=out.data: g * o)])


def log(a: Tensor) -> Tensor:
    out = Tensor._owned(np.log(a.data))
    return _record(out, [(a, lambda g, d=a.data: g / d)])


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """max(x, floor) elementwise; gradient passes only where x > floor."""
    out = Tensor._owned(np.maximum(a.data, floor))
    mask = a.data > floor
    return _record(out, [(a, lambda g, m=mask: g * m)])


def row_sum(a: Tensor) -> Tensor:
    """Sum along each row, shape (n, m) -> (n, 1)."""
    out = Tensor._owned(a.data.sum(axis=1, keepdims=True))
    cols = a.cols
    return _record(out, [(a, lambda g, c=cols: np.repeat(g, c, axis=1))])


def sum_all(a: Tensor) -> Tensor:
    """Sum of every entry, shape (n, m) -> (1, 1)."""
    out = Tensor._owned(np.array([[a.data.sum()]]))
    shape = a.shape
    return _record(out, [(a, lambda g, s=shape: np.full(s, g[0, 0]))])


def l2_normalize_rows(arr: np.ndarray, floor: float = NORM_FLOOR) -> np.ndarray:
    """Plain-numpy row normalization with the same clamp rule as the op."""
    norms = np.linalg.norm(arr, axis=1, keepdims=True)
    return arr / np.maximum(norms, floor)


def row_l2_normalize(a: Tensor) -> Tensor:
    """Divide each row by its Euclidean norm, clamped below at 1e-12.

    Zero rows pass through unchanged. For y = x / ||x|| the VJP is
    (g - y (y.g)) / ||x||; where the clamp is active the map is linear and
    the VJP is g / floor.
    """
    norms = np.linalg.norm(a.data, axis=1, keepdims=True)
    clamped = np.maximum(norms, NORM_FLOOR)
    out = Tensor._owned(a.data / clamped)

    def vjp(g: np.ndarray, y=out.data, n=clamped, free=(norms > NORM_FLOOR)) -> np.ndarray:
        inner = (y * g).sum(axis=1, keepdims=True)
        return np.where(free, (g - y * inner) / n, g / n)

    return _record(out, [(a, vjp)])


def _binary(a: Tensor, other, kind: str) -> Tensor:
    if isinstance(other, Tensor):
        return _binary_tensor(a, other, kind)
    if isinstance(other, (int, float)):
        return _binary_scalar(a, float(other), kind)
    raise TypeError(f"unsupported operand for {kind}: {type(other).__name__}")


def _binary_scalar(a: Tensor, c: float, kind: str) -> Tensor:
    if kind == "add":
        out = Tensor._owned(a.data + c)
        return _record(out, [(a, lambda g: g)])
    if kind == "sub":
        out = Tensor._owned(a.data - c)
        return _record(out, [(a, lambda g: g)])
    if kind == "mul":
        out = Tensor._owned(a.data * c)
        return _record(out, [(a, lambda g: g * c)])
    if kind == "div":
        out = Tensor._owned(a.data / c)
        return _record(out, [(a, lambda g: g / c)])
    raise AssertionError(kind)


def _binary_tensor(a: Tensor, b: Tensor, kind: str) -> Tensor:
    # Exact shape match, or b a column vector broadcast across a's columns.
    if a.shape == b.shape:
        reduce_b = lambda g: g  # noqa: E731
    elif b.shape == (a.rows, 1):
        reduce_b = lambda g: g.sum(axis=1, keepdims=True)  # noqa: E731
    else:
        raise ShapeError(f"{kind} mismatch: {a.shape} vs {b.shape}")

    if kind == "add":
        out = Tensor._owned(a.data + b.data)
        return _record(out, [(a, lambda g: g), (b, lambda g: reduce_b(g))])
    if kind == "sub":
        out = Tensor._owned(a.data - b.data)
        return _record(out, [(a, lambda g: g), (b, lambda g: -reduce_b(g))])
    if kind == "mul":
        out = Tensor._owned(a.data * b.data)
        return _record(
            out,
            [
                (a, lambda g, bd=b.data: g * bd),
                (b, lambda g, ad=a.data: reduce_b(g * ad)),
            ],
        )
    if kind == "div":
        out = Tensor._owned(a.data / b.data)
        return _record(
            out,
            [
                (a, lambda g, bd=b.data: g / bd),
                (b, lambda g, ad=a.data, bd=b.data: reduce_b(-g * ad / (bd * bd))),
            ],
        )
    raise AssertionError(kind)
