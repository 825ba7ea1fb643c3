"""Complexity analysis: dual-number execution of the tilde interpretation.

Every variable carries a pair ``(tilde, deriv)``: an upper bound on the tilde
of the function computing it, and on that tilde's derivative, both at 1.
Program inputs start at ``(1, 1)``.  The sample complexity of a trace is
derived from the derivative bounds of its outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

from .desugar import desugar
from .paths import DEFAULT_PATH_CAP, Trace, collect_traces
from .syntax import (
    Add,
    Assign,
    Const,
    Cos,
    Exp,
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


class TildeError(TuracoError):
    pass


@dataclass(frozen=True)
class DualBound:
    tilde: float
    deriv: float

    def __add__(self, other: "DualBound") -> "DualBound":
        return DualBound(self.tilde + other.tilde, self.deriv + other.deriv)

    def __mul__(self, other: "DualBound") -> "DualBound":
        return DualBound(
            self.tilde * other.tilde,
            self.deriv * other.tilde + self.tilde * other.deriv,
        )


Bound = Union[DualBound, tuple]  # tuple of DualBound for vectors
UNIT = DualBound(1.0, 1.0)
ZERO = DualBound(0.0, 0.0)


def _lift(fn, a: Bound, b: Bound, what: str) -> Bound:
    if isinstance(a, tuple) and isinstance(b, tuple):
        if len(a) != len(b):
            raise TildeError(f"dimension mismatch in {what}: {len(a)} vs {len(b)}")
        return tuple(fn(x, y) for x, y in zip(a, b))
    if isinstance(a, tuple):
        return tuple(fn(x, b) for x in a)
    if isinstance(b, tuple):
        return tuple(fn(a, y) for y in b)
    return fn(a, b)


def _map(fn, a: Bound) -> Bound:
    return tuple(fn(x) for x in a) if isinstance(a, tuple) else fn(a)


def _analytic(name, fn, dfn):
    def apply(a: DualBound) -> DualBound:
        try:
            return DualBound(fn(a.tilde), a.deriv * dfn(a.tilde))
        except OverflowError:
            raise TildeError(f"{name}: bound overflows (tilde {a.tilde!r})") from None

    return apply


_sin = _analytic("sin", math.sinh, math.cosh)
_cos = _analytic("cos", math.cosh, math.sinh)
_exp = _analytic("exp", math.exp, math.exp)


def _log(center: float):
    b = center
    spread = math.sqrt(b * b + 1.0)

    def apply(a: DualBound) -> DualBound:
        gap = b - a.tilde * spread
        if not gap > 0:
            raise TildeError(
                f"log{{{b!r}}}: series bound diverges, need b > tilde*sqrt(b^2+1) "
                f"but tilde={a.tilde!r} gives {a.tilde * spread!r}; choose a larger b or "
                f"rescale with log(x) = log(x/c) + log(c)"
            )
        return DualBound(
            abs(math.log(b)) + math.log(b) - math.log(gap),
            a.deriv * spread / gap,
        )

    return apply


def tilde_expr(env: dict, e) -> Bound:
    """Upper bounds on the tilde and tilde derivative of ``e`` at 1."""
    if isinstance(e, Const):
        return DualBound(abs(e.value), 0.0)
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise TildeError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Neg):
        return tilde_expr(env, e.operand)
    if isinstance(e, Add):
        return _lift(DualBound.__add__, tilde_expr(env, e.left), tilde_expr(env, e.right), "add")
    if isinstance(e, Mul):
        return _lift(DualBound.__mul__, tilde_expr(env, e.left), tilde_expr(env, e.right), "mul")
    if isinstance(e, Sin):
        return _map(_sin, tilde_expr(env, e.operand))
    if isinstance(e, Cos):
        return _map(_cos, tilde_expr(env, e.operand))
    if isinstance(e, Exp):
        return _map(_exp, tilde_expr(env, e.operand))
    if isinstance(e, Log):
        return _map(_log(e.center), tilde_expr(env, e.operand))
    if isinstance(e, VecLit):
        parts = [tilde_expr(env, x) for x in e.elements]
        if any(isinstance(p, tuple) for p in parts):
            raise TildeError("vector literal elements must be scalars")
        return tuple(parts)
    if isinstance(e, Index):
        v = tilde_expr(env, e.operand)
        if not isinstance(v, tuple):
            raise TildeError("indexing a scalar value")
        if not 0 <= e.index < len(v):
            raise TildeError(f"index {e.index} out of range for vector of length {len(v)}")
        return v[e.index]
    raise TildeError(f"not a core expression: {type(e).__name__}")


def tilde_trace(env: dict, body) -> dict:
    """Run the analysis over a branch-free statement, returning the new env."""
    if isinstance(body, Skip):
        return env
    if isinstance(body, Seq):
        return tilde_trace(tilde_trace(env, body.first), body.rest)
    if isinstance(body, VecDecl):
        return {**env, body.name: (ZERO,) * body.length}
    if isinstance(body, Assign):
        value = tilde_expr(env, body.value)
        if body.index is None:
            return {**env, body.target: value}
        vec = env.get(body.target)
        if not isinstance(vec, tuple):
            raise TildeError(f"indexed assignment to non-vector {body.target!r}")
        if isinstance(value, tuple):
            raise TildeError("cannot store a vector into a vector component")
        vec = list(vec)
        vec[body.index] = value
        return {**env, body.target: tuple(vec)}
    raise TildeError(f"traces must be branch-free, found {type(body).__name__}")


def input_env(params) -> dict:
    return {p.name: UNIT if p.dim is None else (UNIT,) * p.dim for p in params}


def output_bounds(t: Trace, params) -> list[DualBound]:
    env = tilde_trace(input_env(params), t.body)
    out = []
    for r in t.returns:
        v = tilde_expr(env, r)
        out.extend(v if isinstance(v, tuple) else (v,))
    return out


# how the derivative bounds of several output components combine
JOINT = "joint"  # (sum of derivative bounds)^2
SEPARATE = "separate"  # sum of squared derivative bounds


def combine(bounds: list[DualBound], mode: str = JOINT) -> float:
    if mode == JOINT:
        return sum(b.deriv for b in bounds) ** 2
    if mode == SEPARATE:
        return sum(b.deriv**2 for b in bounds)
    raise ValueError(f"unknown output combination {mode!r}")


def trace_complexity(t: Trace, params, mode: str = JOINT) -> float:
    return combine(output_bounds(t, params), mode)


def program_complexities(
    p: Program, mode: str = JOINT, cap: int = DEFAULT_PATH_CAP
) -> dict[str, float]:
    """Complexity of every syntactic path of ``p``."""
    p = desugar(p)
    return {
        path: trace_complexity(t, p.params, mode)
        for path, t in collect_traces(p, cap).items()
    }
