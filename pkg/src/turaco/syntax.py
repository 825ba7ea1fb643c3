"""AST node types for Turaco programs.

Core nodes are what the interpreter and the analyses consume.  The sugar
nodes (``Sub``, ``Div``, ``Compare``, ``AugAssign``) only appear in surface
programs straight out of the parser and are removed by :mod:`turaco.desugar`.

All nodes are frozen dataclasses, so structural equality is plain ``==``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union


class TuracoError(Exception):
    """Base class for every domain error raised by this package."""


# -- expressions ------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sin:
    operand: "Expr"


@dataclass(frozen=True)
class Cos:
    operand: "Expr"


@dataclass(frozen=True)
class Exp:
    operand: "Expr"


@dataclass(frozen=True)
class Log:
    """``log{center}(operand)``: natural log expanded around ``center``."""

    center: float
    operand: "Expr"


@dataclass(frozen=True)
class VecLit:
    elements: tuple


@dataclass(frozen=True)
class Index:
    operand: "Expr"
    index: int


# surface-only expression sugar


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    """``left < right`` or ``left > right``; only legal as an ``if`` condition."""

    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Neg, Add, Mul, Sin, Cos, Exp, Log, VecLit, Index, Sub, Div]

UNARY_FUNCS = {"sin": Sin, "cos": Cos, "exp": Exp}


# -- statements -------------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    rest: "Stmt"


@dataclass(frozen=True)
class Assign:
    """``target = value`` or, with ``index`` set, ``target[index] = value``."""

    target: str
    value: Expr
    index: Optional[int] = None


@dataclass(frozen=True)
class AugAssign:
    op: str
    target: str
    value: Expr
    index: Optional[int] = None


@dataclass(frozen=True)
class If:
    """Core form branches left when ``cond > 0``; surface form may hold a Compare."""

    cond: Union[Expr, Compare]
    then: "Stmt"
    orelse: "Stmt"


@dataclass(frozen=True)
class VecDecl:
    name: str
    length: int


Stmt = Union[Skip, Seq, Assign, AugAssign, If, VecDecl]


@dataclass(frozen=True)
class Param:
    name: str
    dim: Optional[int] = None  # None for a scalar input

    @property
    def width(self) -> int:
        return 1 if self.dim is None else self.dim


@dataclass(frozen=True)
class Program:
    params: tuple
    body: Stmt
    returns: tuple

    @property
    def input_names(self) -> list[str]:
        return [p.name for p in self.params]

    @property
    def input_width(self) -> int:
        return sum(p.width for p in self.params)


# -- helpers ----------------------------------------------------------------


def seq(*stmts: Stmt) -> Stmt:
    """Right-associated sequence, dropping nested structure and redundant skips."""
    flat = [s for s in flatten(stmts) if not isinstance(s, Skip)]
    if not flat:
        return Skip()
    out = flat[-1]
    for s in reversed(flat[:-1]):
        out = Seq(s, out)
    return out


def flatten(stmts) -> Iterator[Stmt]:
    for s in stmts:
        if isinstance(s, Seq):
            yield from flatten((s.first, s.rest))
        else:
            yield s


def children(e) -> tuple:
    if isinstance(e, (Const, Var)):
        return ()
    if isinstance(e, (Neg, Sin, Cos, Exp, Log, Index)):
        return (e.operand,)
    if isinstance(e, VecLit):
        return tuple(e.elements)
    return (e.left, e.right)


def free_vars(e) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    out: set[str] = set()
    for c in children(e):
        out |= free_vars(c)
    return out


def count_ifs(s: Stmt) -> int:
    if isinstance(s, Seq):
        return count_ifs(s.first) + count_ifs(s.rest)
    if isinstance(s, If):
        return 1 + count_ifs(s.then) + count_ifs(s.orelse)
    return 0


def has_if(s: Stmt) -> bool:
    return count_ifs(s) > 0
