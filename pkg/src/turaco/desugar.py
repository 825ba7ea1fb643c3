"""Surface-to-core lowering.

* ``a - b``            becomes ``a + (-b)``
* ``e / d``            becomes ``e * (1/d)``; ``d`` must be a compile-time constant
* ``x op= e``          becomes ``x = x op e``
* ``if (a < b)``       becomes ``if (b + (-a) > 0)``; ``if (a > b)`` becomes ``if (a + (-b) > 0)``
* non-variable return expressions are bound to fresh output variables

A divisor counts as constant when it is built from literals, arithmetic, and
variables whose value at that program point is a known constant on every
path (``dt = 0.0024; ... x / dt``).
"""

from __future__ import annotations

import math

from .syntax import (
    Add,
    Assign,
    AugAssign,
    Compare,
    Const,
    Cos,
    Div,
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
    Sub,
    TuracoError,
    Var,
    VecDecl,
    VecLit,
    seq,
)


class DesugarError(TuracoError):
    pass


def _const_value(e, consts: dict):
    """Value of ``e`` if it is a compile-time constant, else None."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return consts.get(e.name)
    if isinstance(e, Neg):
        v = _const_value(e.operand, consts)
        return None if v is None else -v
    if isinstance(e, (Add, Sub, Mul, Div)):
        a = _const_value(e.left, consts)
        b = _const_value(e.right, consts)
        if a is None or b is None:
            return None
        if isinstance(e, Add):
            return a + b
        if isinstance(e, Sub):
            return a - b
        if isinstance(e, Mul):
            return a * b
        if b == 0:
            raise DesugarError("division by zero constant")
        return a / b
    return None


def desugar_expr(e, consts: dict | None = None):
    consts = consts or {}
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        return Neg(desugar_expr(e.operand, consts))
    if isinstance(e, Add):
        return Add(desugar_expr(e.left, consts), desugar_expr(e.right, consts))
    if isinstance(e, Sub):
        return Add(desugar_expr(e.left, consts), Neg(desugar_expr(e.right, consts)))
    if isinstance(e, Mul):
        return Mul(desugar_expr(e.left, consts), desugar_expr(e.right, consts))
    if isinstance(e, Div):
        c = _const_value(e.right, consts)
        if c is None:
            raise DesugarError("division is only supported by compile-time constants")
        if c == 0:
            raise DesugarError("division by zero constant")
        return Mul(desugar_expr(e.left, consts), Const(1.0 / c))
    if isinstance(e, (Sin, Cos, Exp)):
        return type(e)(desugar_expr(e.operand, consts))
    if isinstance(e, Log):
        return Log(e.center, desugar_expr(e.operand, consts))
    if isinstance(e, VecLit):
        return VecLit(tuple(desugar_expr(x, consts) for x in e.elements))
    if isinstance(e, Index):
        return Index(desugar_expr(e.operand, consts), e.index)
    raise TypeError(f"not an expression: {e!r}")


def _desugar_cond(cond, consts):
    if isinstance(cond, Compare):
        left = desugar_expr(cond.left, consts)
        right = desugar_expr(cond.right, consts)
        if cond.op == "<":
            return Add(right, Neg(left))
        return Add(left, Neg(right))
    return desugar_expr(cond, consts)


_AUG = {"+": Add, "-": Sub, "*": Mul, "/": Div}


def _desugar_stmt(s, consts: dict):
    """Return the core statement; ``consts`` is updated in place."""
    if isinstance(s, Skip):
        return s
    if isinstance(s, Seq):
        first = _desugar_stmt(s.first, consts)
        rest = _desugar_stmt(s.rest, consts)
        return seq(first, rest)
    if isinstance(s, AugAssign):
        current = Var(s.target) if s.index is None else Index(Var(s.target), s.index)
        return _desugar_stmt(Assign(s.target, _AUG[s.op](current, s.value), s.index), consts)
    if isinstance(s, Assign):
        value = desugar_expr(s.value, consts)
        c = _const_value(s.value, consts) if s.index is None else None
        if c is not None and math.isfinite(c):
            consts[s.target] = c
        else:
            consts.pop(s.target, None)
        return Assign(s.target, value, s.index)
    if isinstance(s, VecDecl):
        consts.pop(s.name, None)
        return s
    if isinstance(s, If):
        cond = _desugar_cond(s.cond, consts)
        then_consts = dict(consts)
        else_consts = dict(consts)
        then = _desugar_stmt(s.then, then_consts)
        orelse = _desugar_stmt(s.orelse, else_consts)
        consts.clear()
        consts.update(
            {k: v for k, v in then_consts.items() if else_consts.get(k) == v}
        )
        return If(cond, then, orelse)
    raise TypeError(f"not a statement: {s!r}")


def _assigned_names(s) -> set[str]:
    if isinstance(s, Seq):
        return _assigned_names(s.first) | _assigned_names(s.rest)
    if isinstance(s, If):
        return _assigned_names(s.then) | _assigned_names(s.orelse)
    if isinstance(s, (Assign, AugAssign)):
        return {s.target}
    if isinstance(s, VecDecl):
        return {s.name}
    return set()


def desugar(p: Program) -> Program:
    """Lower a surface program to core form.  Idempotent on core programs."""
    consts: dict = {}
    body = _desugar_stmt(p.body, consts)
    taken = set(p.input_names) | _assigned_names(p.body)
    outs = []
    returns = []
    for k, r in enumerate(p.returns):
        if isinstance(r, Var):
            returns.append(r)
            continue
        name = f"out{k}"
        while name in taken:
            name = "_" + name
        taken.add(name)
        outs.append(Assign(name, desugar_expr(r, consts)))
        returns.append(Var(name))
    return Program(p.params, seq(body, *outs), tuple(returns))


def is_core(p: Program) -> bool:
    return desugar(p) == p
