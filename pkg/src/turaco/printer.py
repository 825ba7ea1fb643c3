"""Render programs back to ``.turaco`` source.

The output re-parses to a structurally identical AST.
"""

from __future__ import annotations

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
    Var,
    VecDecl,
    VecLit,
    flatten,
)

# binding strength: sums < products < unary minus < postfix/atoms
_SUM, _PROD, _UNARY, _ATOM = 1, 2, 3, 4

_FUNC_NAMES = {Sin: "sin", Cos: "cos", Exp: "exp"}


def fmt_number(v: float) -> str:
    return repr(float(v))


def expr_to_str(e, prec: int = 0) -> str:
    if isinstance(e, Const):
        text = fmt_number(e.value)
        # a negative literal must not sit where a unary minus would re-associate
        return f"({text})" if text.startswith("-") and prec > _UNARY else text
    if isinstance(e, Var):
        return e.name
    if isinstance(e, (Add, Sub)):
        op = "+" if isinstance(e, Add) else "-"
        text = f"{expr_to_str(e.left, _SUM)} {op} {expr_to_str(e.right, _PROD)}"
        return f"({text})" if prec > _SUM else text
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        text = f"{expr_to_str(e.left, _PROD)} {op} {expr_to_str(e.right, _UNARY)}"
        return f"({text})" if prec > _PROD else text
    if isinstance(e, Neg):
        inner = e.operand
        if isinstance(inner, Const) and not fmt_number(inner.value).startswith("-"):
            # `-1.0` would re-parse as the literal -1.0
            text = f"-({fmt_number(inner.value)})"
        else:
            text = "-" + expr_to_str(inner, _UNARY)
        return f"({text})" if prec > _UNARY else text
    if isinstance(e, tuple(_FUNC_NAMES)):
        return f"{_FUNC_NAMES[type(e)]}({expr_to_str(e.operand)})"
    if isinstance(e, Log):
        return f"log{{{fmt_number(e.center)}}}({expr_to_str(e.operand)})"
    if isinstance(e, VecLit):
        return "[" + ", ".join(expr_to_str(x) for x in e.elements) + "]"
    if isinstance(e, Index):
        return f"{expr_to_str(e.operand, _ATOM)}[{e.index}]"
    if isinstance(e, Compare):
        return f"{expr_to_str(e.left)} {e.op} {expr_to_str(e.right)}"
    raise TypeError(f"not an expression: {e!r}")


def _cond_to_str(cond) -> str:
    if isinstance(cond, Compare):
        return expr_to_str(cond)
    return f"{expr_to_str(cond)} > 0"


def _stmt_lines(s, depth: int) -> list[str]:
    pad = " " * depth
    if isinstance(s, Seq):
        out = []
        for part in flatten((s,)):
            out.extend(_stmt_lines(part, depth))
        return out
    if isinstance(s, Skip):
        return [pad + "skip;"]
    if isinstance(s, VecDecl):
        return [f"{pad}{s.name}[{s.length}];"]
    if isinstance(s, (Assign, AugAssign)):
        target = s.target if s.index is None else f"{s.target}[{s.index}]"
        op = "=" if isinstance(s, Assign) else s.op + "="
        return [f"{pad}{target} {op} {expr_to_str(s.value)};"]
    if isinstance(s, If):
        lines = [f"{pad}if ({_cond_to_str(s.cond)}) {{"]
        lines += _stmt_lines(s.then, depth + 1)
        lines.append(pad + "} else {")
        lines += _stmt_lines(s.orelse, depth + 1)
        lines.append(pad + "}")
        return lines
    raise TypeError(f"not a statement: {s!r}")


def pretty_print(p: Program) -> str:
    params = ", ".join(
        prm.name if prm.dim is None else f"{prm.name}[{prm.dim}]" for prm in p.params
    )
    lines = [f"fun ({params}) {{"]
    lines += _stmt_lines(p.body, 1)
    lines.append(" return " + ", ".join(expr_to_str(r) for r in p.returns))
    lines.append("}")
    return "\n".join(lines)
