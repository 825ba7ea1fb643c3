"""Exact multivariate polynomials, used as an oracle for the tilde analysis.

A polynomial trace (only constants, variables, negation, ``+`` and ``*``)
expands to a finite power series whose tilde and tilde derivative at 1 can
be read off the coefficients directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import Add, Assign, Const, Mul, Neg, Seq, Skip, TuracoError, Var


class NotPolynomial(TuracoError):
    pass


@dataclass
class PolySeries:
    """Coefficients keyed by exponent tuples over a fixed variable order."""

    names: tuple
    coeffs: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, names, value: float) -> "PolySeries":
        return cls(tuple(names), {(0,) * len(names): float(value)} if value else {})

    @classmethod
    def variable(cls, names, name: str) -> "PolySeries":
        names = tuple(names)
        exps = tuple(int(n == name) for n in names)
        if not any(exps):
            raise NotPolynomial(f"unknown variable {name!r}")
        return cls(names, {exps: 1.0})

    def _check(self, other: "PolySeries"):
        if self.names != other.names:
            raise ValueError("series over different variables")

    def __neg__(self) -> "PolySeries":
        return PolySeries(self.names, {k: -v for k, v in self.coeffs.items()})

    def __add__(self, other: "PolySeries") -> "PolySeries":
        self._check(other)
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0.0) + v
        return PolySeries(self.names, {k: v for k, v in out.items() if v != 0})

    def __mul__(self, other: "PolySeries") -> "PolySeries":
        self._check(other)
        out: dict = {}
        for ka, va in self.coeffs.items():
            for kb, vb in other.coeffs.items():
                k = tuple(a + b for a, b in zip(ka, kb))
                out[k] = out.get(k, 0.0) + va * vb
        return PolySeries(self.names, {k: v for k, v in out.items() if v != 0})


def expand_expr(e, env: dict, names) -> PolySeries:
    """Expand ``e`` with ``env`` mapping variables to already-expanded series."""
    if isinstance(e, Const):
        return PolySeries.constant(names, e.value)
    if isinstance(e, Var):
        if e.name in env:
            return env[e.name]
        return PolySeries.variable(names, e.name)
    if isinstance(e, Neg):
        return -expand_expr(e.operand, env, names)
    if isinstance(e, Add):
        return expand_expr(e.left, env, names) + expand_expr(e.right, env, names)
    if isinstance(e, Mul):
        return expand_expr(e.left, env, names) * expand_expr(e.right, env, names)
    raise NotPolynomial(f"not a polynomial expression: {type(e).__name__}")


def expand_trace(body, returns, names) -> list[PolySeries]:
    """Expand each return expression of a scalar polynomial trace."""
    names = tuple(names)
    env = {n: PolySeries.variable(names, n) for n in names}

    def step(s):
        if isinstance(s, Skip):
            return
        if isinstance(s, Seq):
            step(s.first)
            step(s.rest)
            return
        if isinstance(s, Assign) and s.index is None:
            env[s.target] = expand_expr(s.value, env, names)
            return
        raise NotPolynomial(f"unsupported statement: {type(s).__name__}")

    step(body)
    return [expand_expr(r, env, names) for r in returns]


def poly_tilde_oracle(ps: PolySeries) -> tuple[float, float]:
    """Exact (tilde(1), tilde'(1)) of a polynomial."""
    tilde = sum(abs(a) for a in ps.coeffs.values())
    deriv = sum(sum(k) * abs(a) for k, a in ps.coeffs.items())
    return float(tilde), float(deriv)
