"""Big-step execution of core programs, recording the branch path taken.

Execution is batched: a batch of input rows flows through the program and
every ``if`` splits it into a left and a right partition, so each partition
that reaches the end corresponds to exactly one path.  Scalar entry points
run a batch of one.  All arithmetic goes through numpy so that a row gives
bit-identical results whether it runs alone or inside a larger batch.

Rows whose evaluation fails (log outside its convergence disc, a non-finite
intermediate) are dropped into an error bucket by :func:`run_batch`; the
scalar entry points raise :class:`EvalError` instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .syntax import (
    Add,
    Assign,
    Const,
    Cos,
    Exp,
    If,
    Index,
    Log,
    Mul,
    Neg,
    Program,
    Seq,
    Sin,
    Skip,
    TuracoError,
    Var,
    VecDecl,
    VecLit,
)

ERROR_PATH = "<error>"

Value = Union[float, tuple]


class EvalError(TuracoError):
    pass


class _RowFailure(Exception):
    """Internal: some rows of the current partition failed."""

    def __init__(self, bad: np.ndarray, message: str):
        self.bad = bad
        self.message = message


@dataclass
class BatchResult:
    outputs: np.ndarray  # (n, output width); NaN rows for errors
    paths: np.ndarray  # (n,) object array of path strings
    errors: dict = field(default_factory=dict)  # row -> message

    def path_counts(self) -> dict[str, int]:
        labels, counts = np.unique(self.paths.astype(str), return_counts=True)
        return {str(k): int(v) for k, v in zip(labels, counts)}


def _bad_rows(a: np.ndarray) -> np.ndarray:
    ok = np.isfinite(a)
    return ~ok if ok.ndim == 1 else ~ok.all(axis=1)


def _broadcast(a: np.ndarray, b: np.ndarray, what: str):
    if a.ndim == b.ndim:
        if a.ndim == 2 and a.shape[1] != b.shape[1]:
            raise EvalError(
                f"dimension mismatch in {what}: vectors of length {a.shape[1]} and {b.shape[1]}"
            )
        return a, b
    if a.ndim == 1:
        return a[:, None], b
    return a, b[:, None]


def eval_batch(e, store: dict, n: int) -> np.ndarray:
    """Evaluate ``e`` on ``n`` rows; raises ``_RowFailure`` on per-row failures."""
    if isinstance(e, Const):
        return np.full(n, e.value)
    if isinstance(e, Var):
        try:
            return store[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return -eval_batch(e.operand, store, n)
    if isinstance(e, (Add, Mul)):
        a = eval_batch(e.left, store, n)
        b = eval_batch(e.right, store, n)
        a, b = _broadcast(a, b, type(e).__name__.lower())
        with np.errstate(over="ignore", invalid="ignore"):
            out = a + b if isinstance(e, Add) else a * b
        _check_finite(out)
        return out
    if isinstance(e, (Sin, Cos, Exp)):
        v = eval_batch(e.operand, store, n)
        fn = {Sin: np.sin, Cos: np.cos, Exp: np.exp}[type(e)]
        with np.errstate(over="ignore", invalid="ignore"):
            out = fn(v)
        _check_finite(out)
        return out
    if isinstance(e, Log):
        v = eval_batch(e.operand, store, n)
        b = e.center
        viol = ~(np.abs(b - v) < b)
        if viol.ndim == 2:
            viol = viol.any(axis=1)
        if viol.any():
            i = int(np.flatnonzero(viol)[0])
            vi = float(v[i]) if v.ndim == 1 else v[i].tolist()
            raise _RowFailure(
                viol, f"log domain violation: need |b - v| < b, got b={b!r}, v={vi!r}"
            )
        return np.log(v)
    if isinstance(e, VecLit):
        parts = [eval_batch(x, store, n) for x in e.elements]
        if any(p.ndim != 1 for p in parts):
            raise EvalError("vector literal elements must be scalars")
        return np.stack(parts, axis=1)
    if isinstance(e, Index):
        v = eval_batch(e.operand, store, n)
        if v.ndim != 2:
            raise EvalError("indexing a scalar value")
        if not 0 <= e.index < v.shape[1]:
            raise EvalError(f"index {e.index} out of range for vector of length {v.shape[1]}")
        return v[:, e.index]
    raise EvalError(f"not a core expression: {type(e).__name__}")


def _check_finite(out: np.ndarray):
    bad = _bad_rows(out)
    if bad.any():
        raise _RowFailure(bad, "non-finite result")


@dataclass
class _Part:
    path: str
    rows: np.ndarray
    store: dict

    def restrict(self, keep: np.ndarray) -> "_Part":
        return _Part(self.path, self.rows[keep], {k: v[keep] for k, v in self.store.items()})


class _Executor:
    def __init__(self, strict: bool):
        self.strict = strict
        self.errors: dict[int, str] = {}

    def eval(self, e, part: _Part):
        """Evaluate in ``part``; returns (value, surviving part)."""
        while True:
            try:
                return eval_batch(e, part.store, len(part.rows)), part
            except _RowFailure as fail:
                if self.strict:
                    raise EvalError(fail.message) from None
                for r in part.rows[fail.bad]:
                    self.errors[int(r)] = fail.message
                part = part.restrict(~fail.bad)

    def exec(self, s, parts: list[_Part]) -> list[_Part]:
        if isinstance(s, Skip):
            return parts
        if isinstance(s, Seq):
            return self.exec(s.rest, self.exec(s.first, parts))
        out = []
        for part in parts:
            out.extend(self.exec_part(s, part))
        return out

    def exec_part(self, s, part: _Part) -> list[_Part]:
        if isinstance(s, VecDecl):
            store = dict(part.store)
            store[s.name] = np.zeros((len(part.rows), s.length))
            return [_Part(part.path, part.rows, store)]
        if isinstance(s, Assign):
            value, part = self.eval(s.value, part)
            if not len(part.rows):
                return []
            store = dict(part.store)
            if s.index is None:
                store[s.target] = value
            else:
                vec = store.get(s.target)
                if vec is None or vec.ndim != 2:
                    raise EvalError(f"indexed assignment to non-vector {s.target!r}")
                if not 0 <= s.index < vec.shape[1]:
                    raise EvalError(
                        f"index {s.index} out of range for vector of length {vec.shape[1]}"
                    )
                if value.ndim != 1:
                    raise EvalError("cannot store a vector into a vector component")
                vec = vec.copy()
                vec[:, s.index] = value
                store[s.target] = vec
            return [_Part(part.path, part.rows, store)]
        if isinstance(s, If):
            cond, part = self.eval(s.cond, part)
            if cond.ndim != 1:
                raise EvalError("branch condition must be a scalar")
            taken = cond > 0
            out = []
            for mask, label, branch in ((taken, "l", s.then), (~taken, "r", s.orelse)):
                if mask.any():
                    sub = part.restrict(mask)
                    sub.path = part.path + label
                    out.extend(self.exec(branch, [sub]))
            return out
        raise EvalError(f"not a core statement: {type(s).__name__}")


def _flatten_outputs(values: list[np.ndarray]) -> np.ndarray:
    cols = [v[:, None] if v.ndim == 1 else v for v in values]
    return np.concatenate(cols, axis=1)


def split_inputs(params, X: np.ndarray) -> dict:
    store = {}
    j = 0
    for prm in params:
        if prm.dim is None:
            store[prm.name] = X[:, j]
        else:
            store[prm.name] = X[:, j : j + prm.dim]
        j += prm.width
    return store


def _execute(params, body, returns, X, strict: bool) -> BatchResult:
    X = np.asarray(X, dtype=float)
    width = sum(prm.width for prm in params)
    if X.ndim != 2 or X.shape[1] != width:
        raise EvalError(f"expected inputs of width {width}, got shape {X.shape}")
    n = X.shape[0]
    ex = _Executor(strict)
    parts = ex.exec(body, [_Part("", np.arange(n), split_inputs(params, X))])
    done = []
    for part in parts:
        values = []
        for r in returns:
            v, part = ex.eval(r, part)
            values.append(v)
        if len(part.rows):
            done.append((part, _flatten_outputs(values)))
    out_width = done[0][1].shape[1] if done else len(returns)
    outputs = np.full((n, out_width), np.nan)
    paths = np.full(n, ERROR_PATH, dtype=object)
    for part, ys in done:
        outputs[part.rows] = ys
        paths[part.rows] = part.path
    return BatchResult(outputs, paths, ex.errors)


def run_batch(p: Program, X) -> BatchResult:
    """Run ``p`` on every row of ``X`` (shape ``(n, input width)``)."""
    return _execute(p.params, p.body, p.returns, X, strict=False)


def run_trace_batch(t, params, X) -> BatchResult:
    return _execute(params, t.body, t.returns, X, strict=False)


def flatten_inputs(params, inputs: Sequence[Value]) -> np.ndarray:
    if len(inputs) != len(params):
        raise EvalError(f"expected {len(params)} inputs, got {len(inputs)}")
    row = []
    for prm, v in zip(params, inputs):
        if prm.dim is None:
            if np.ndim(v) != 0:
                raise EvalError(f"input {prm.name!r} must be a scalar")
            row.append(float(v))
        else:
            v = list(np.ravel(v))
            if len(v) != prm.dim:
                raise EvalError(f"input {prm.name!r} must have length {prm.dim}")
            row.extend(float(x) for x in v)
    return np.array([row])


def run(p: Program, inputs: Sequence[Value]) -> tuple[list[float], str]:
    """Execute ``p`` on one input; returns (flattened outputs, path)."""
    res = _execute(p.params, p.body, p.returns, flatten_inputs(p.params, inputs), strict=True)
    return res.outputs[0].tolist(), res.paths[0]


def run_trace(t, params, inputs: Sequence[Value]) -> list[float]:
    res = _execute(params, t.body, t.returns, flatten_inputs(params, inputs), strict=True)
    return res.outputs[0].tolist()


def _to_array(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    return a.reshape(1) if a.ndim == 0 else a.reshape(1, -1)


def eval_expr(store: dict, e) -> Value:
    """Evaluate a core expression under a store of scalar/vector values."""
    arrays = {k: _to_array(v) for k, v in store.items()}
    try:
        out = eval_batch(e, arrays, 1)
    except _RowFailure as fail:
        raise EvalError(fail.message) from None
    return float(out[0]) if out.ndim == 1 else tuple(out[0].tolist())
