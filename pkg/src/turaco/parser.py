"""Lexer and recursive-descent parser for ``.turaco`` source files.

Grammar (surface form)::

    program := 'fun' '(' [param (',' param)*] ')' '{' stmt* 'return' expr (',' expr)* [';'] '}'
    param   := IDENT ['[' INT ']']
    stmt    := 'skip' ';'
             | IDENT '[' INT ']' ';'                              vector declaration
             | IDENT ['[' INT ']'] ('=' | '+=' | '-=' | '*=' | '/=') expr ';'
             | 'if' '(' expr ('<' | '>') expr ')' block ['else' (block | if-stmt)]
    block   := '{' stmt* '}'
    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | postfix
    postfix := primary ('[' INT ']')*
    primary := NUMBER | IDENT | 'pi' | ('sin' | 'cos' | 'exp') '(' expr ')'
             | 'log' '{' NUMBER '}' '(' expr ')' | '(' expr ')' | '[' expr (',' expr)* ']'

``//`` starts a line comment.  A minus sign directly in front of a numeric
literal folds into the literal.  ``if (e > 0)`` with a literal zero parses
straight to the core conditional form.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .syntax import (
    UNARY_FUNCS,
    Add,
    Assign,
    AugAssign,
    Compare,
    Const,
    Div,
    If,
    Index,
    Log,
    Mul,
    Neg,
    Param,
    Program,
    Seq,
    Skip,
    Sub,
    TuracoError,
    Var,
    VecDecl,
    VecLit,
)

KEYWORDS = {"fun", "if", "else", "skip", "return", "log", "pi", *UNARY_FUNCS}


class ParseError(TuracoError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # NUMBER, IDENT, OP, EOF (keywords are IDENT)
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\+=|-=|\*=|/=|[-+*/=<>(){}\[\],;])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "number":
            tokens.append(Token("NUMBER", m.group(), line, col))
        elif kind == "ident":
            tokens.append(Token("IDENT", m.group(), line, col))
        elif kind == "op":
            tokens.append(Token("OP", m.group(), line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        # names definitely assigned on every path reaching the current point
        self.defined: set[str] = set()

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("OP", "IDENT") and self.tok.text == text

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self) -> Token:
        tok = self.tok
        if tok.kind != "IDENT" or tok.text in KEYWORDS:
            raise self.error(f"expected identifier, found {tok.text or 'end of input'!r}")
        return self.advance()

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "NUMBER" or not tok.text.isdigit():
            raise self.error(f"expected integer constant, found {tok.text!r}")
        self.advance()
        return int(tok.text)

    def number(self) -> float:
        tok = self.tok
        if tok.kind != "NUMBER":
            raise self.error(f"expected number, found {tok.text or 'end of input'!r}")
        self.advance()
        return float(tok.text)

    # -- program

    def program(self) -> Program:
        self.expect("fun")
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.param())
            while self.at(","):
                self.advance()
                params.append(self.param())
        self.expect(")")
        names = [p.name for p in params]
        for i, name in enumerate(names):
            if name in names[:i]:
                raise self.error(f"duplicate input name {name!r}")
        self.defined = set(names)
        self.expect("{")
        body = self.stmts(("return",))
        self.expect("return")
        if self.at("}") or self.at(";"):
            raise self.error("missing return expression")
        returns = [self.expr()]
        while self.at(","):
            self.advance()
            returns.append(self.expr())
        if self.at(";"):
            self.advance()
        self.expect("}")
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected {self.tok.text!r} after program")
        return Program(tuple(params), body, tuple(returns))

    def param(self) -> Param:
        name = self.ident().text
        if self.at("["):
            self.advance()
            tok = self.tok
            dim = self.integer()
            if dim < 1:
                raise self.error("input dimension must be positive", tok)
            self.expect("]")
            return Param(name, dim)
        return Param(name)

    # -- statements

    def stmts(self, stop: tuple) -> object:
        out = []
        while not any(self.at(s) for s in stop):
            if self.tok.kind == "EOF":
                raise self.error("unexpected end of input")
            out.append(self.stmt())
        # explicit skips are kept so `skip;` round-trips
        if not out:
            return Skip()
        body = out[-1]
        for s in reversed(out[:-1]):
            body = Seq(s, body)
        return body

    def stmt(self):
        if self.at("skip"):
            self.advance()
            self.expect(";")
            return Skip()
        if self.at("if"):
            return self.if_stmt()
        name_tok = self.ident()
        name = name_tok.text
        index = None
        if self.at("["):
            self.advance()
            k = self.integer()
            self.expect("]")
            if self.at(";"):
                self.advance()
                if k < 1:
                    raise self.error("vector length must be positive", name_tok)
                self.defined.add(name)
                return VecDecl(name, k)
            index = k
        if self.tok.kind == "OP" and self.tok.text in ("=", "+=", "-=", "*=", "/="):
            op = self.advance().text
        else:
            raise self.error(f"expected assignment, found {self.tok.text or 'end of input'!r}")
        if (op != "=" or index is not None) and name not in self.defined:
            raise self.error(f"use of undeclared variable {name!r}", name_tok)
        value = self.expr()
        self.expect(";")
        self.defined.add(name)
        if op == "=":
            return Assign(name, value, index)
        return AugAssign(op[0], name, value, index)

    def if_stmt(self):
        self.expect("if")
        self.expect("(")
        left = self.expr()
        if not (self.at("<") or self.at(">")):
            raise self.error("expected '<' or '>' in condition")
        op = self.advance().text
        right = self.expr()
        self.expect(")")
        if op == ">" and right == Const(0.0):
            cond = left
        else:
            cond = Compare(op, left, right)
        before = set(self.defined)
        then = self.block()
        after_then = self.defined
        self.defined = set(before)
        orelse = Skip()
        if self.at("else"):
            self.advance()
            orelse = self.if_stmt() if self.at("if") else self.block()
        self.defined = after_then & self.defined
        if self.at(";"):
            self.advance()
        return If(cond, then, orelse)

    def block(self):
        self.expect("{")
        body = self.stmts(("}",))
        self.expect("}")
        return body

    # -- expressions

    def expr(self):
        left = self.term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.term()
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def term(self):
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            right = self.unary()
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def unary(self):
        if self.at("-"):
            self.advance()
            if self.tok.kind == "NUMBER" and not (self.peek().kind == "OP" and self.peek().text == "["):
                return Const(-self.number())
            return Neg(self.unary())
        return self.postfix()

    def postfix(self):
        e = self.primary()
        while self.at("["):
            self.advance()
            e = Index(e, self.integer())
            self.expect("]")
        return e

    def primary(self):
        tok = self.tok
        if tok.kind == "NUMBER":
            return Const(self.number())
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("["):
            self.advance()
            elems = [self.expr()]
            while self.at(","):
                self.advance()
                elems.append(self.expr())
            self.expect("]")
            return VecLit(tuple(elems))
        if self.at("pi"):
            self.advance()
            return Const(math.pi)
        if tok.kind == "IDENT" and tok.text in UNARY_FUNCS:
            self.advance()
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return UNARY_FUNCS[tok.text](e)
        if self.at("log"):
            self.advance()
            self.expect("{")
            btok = self.tok
            center = self.number()
            if not center > 0:
                raise self.error("log expansion point must be positive", btok)
            self.expect("}")
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return Log(center, e)
        name = self.ident()
        if name.text not in self.defined:
            raise self.error(f"use of undeclared variable {name.text!r}", name)
        return Var(name.text)


def parse(source: str) -> Program:
    """Parse Turaco source text into a surface :class:`Program`."""
    return Parser(source).program()


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as f:
        return parse(f.read())


__all__ = ["ParseError", "parse", "parse_file", "tokenize"]
