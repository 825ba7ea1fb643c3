import math

import numpy as np
import pytest

from conftest import ALL_BENCHMARKS, load
from turaco.desugar import DesugarError, desugar, is_core
from turaco.interp import run_batch
from turaco.parser import ParseError, parse
from turaco.printer import pretty_print
from turaco.syntax import (
    Add, Assign, AugAssign, Compare, Const, If, Mul, Neg, Param, Skip, Sub, Var, count_ifs,
)


def test_minimal_program():
    p = parse("fun (x) { skip; return x }")
    assert p.params == (Param("x"),)
    assert p.body == Skip()
    assert p.returns == (Var("x"),)


def test_missing_return_expression():
    with pytest.raises(ParseError, match="return"):
        parse("fun (x) { return }")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse("fun (x) {\n y = x $ 2;\n return y\n}")
    assert (info.value.line, info.value.col) == (2, 8)


def test_duplicate_input():
    with pytest.raises(ParseError, match="duplicate"):
        parse("fun (x, x) { return x }")


def test_undeclared_variable():
    with pytest.raises(ParseError, match="z"):
        parse("fun (x) { y = z + 1; return y }")


def test_variable_assigned_on_one_branch_only():
    with pytest.raises(ParseError):
        parse("fun (x) { if (x > 0) { y = 1; } else { skip; } return y }")


def test_luminance_shape(luminance):
    p, _, _ = luminance
    assert p.input_names == ["sunPosition", "emission"]
    assert count_ifs(p.body) == 2
    assert len(p.returns) == 1


def test_comments_and_leading_dot_literals():
    p = parse("// header\nfun (T) {\n y = T * .4000; // trailing\n return y\n}")
    assert p.body == Assign("y", Mul(Var("T"), Const(0.4)))


def test_compound_assignment_desugars():
    p = parse("fun (emission) { emission *= 0.1; return emission }")
    assert p.body == AugAssign("*", "emission", Const(0.1))
    assert desugar(p).body == Assign("emission", Mul(Var("emission"), Const(0.1)))


def test_sub_desugars():
    p = parse("fun (a, b) { c = a - b; return c }")
    assert p.body == Assign("c", Sub(Var("a"), Var("b")))
    assert desugar(p).body == Assign("c", Add(Var("a"), Neg(Var("b"))))


def test_less_than_desugars_and_agrees():
    src = "fun (x) { if (x < 0.5) { y = x * 2; } else { y = x * 3; } return y }"
    p = parse(src)
    assert isinstance(p.body.cond, Compare)
    core = desugar(p)
    assert core.body.cond == Add(Const(0.5), Neg(Var("x")))
    X = np.random.default_rng(0).uniform(-1, 1, size=(1000, 1))
    res = run_batch(core, X)
    x = X[:, 0]
    assert np.array_equal(res.outputs[:, 0], np.where(x < 0.5, x * 2, x * 3))
    assert list(res.paths) == ["l" if v < 0.5 else "r" for v in x]


def test_division_by_constant():
    core = desugar(parse("fun (x) { y = x / 4; return y }"))
    assert core.body == Assign("y", Mul(Var("x"), Const(0.25)))


def test_division_by_constant_variable():
    core = desugar(parse("fun (x) { d = 0.5; y = x / d / 2; return y }"))
    assert core.body.rest == Assign("y", Mul(Mul(Var("x"), Const(2.0)), Const(0.5)))


def test_division_by_zero():
    with pytest.raises(DesugarError, match="zero"):
        desugar(parse("fun (x) { y = x / 0; return y }"))


def test_division_by_input_rejected():
    with pytest.raises(DesugarError):
        desugar(parse("fun (x, d) { y = x / d; return y }"))


def test_constant_lost_after_diverging_branches():
    src = "fun (x) { if (x > 0) { d = 1; } else { d = 2; } y = x / d; return y }"
    with pytest.raises(DesugarError):
        desugar(parse(src))


def test_multi_return_gets_fresh_variables():
    core = desugar(parse("fun (x) { out0 = 1; return x, x * 2 }"))
    assert core.returns[0] == Var("x")
    assert core.returns[1] == Var("out1")
    core = desugar(parse("fun (x) { out1 = 1; return out1, x * 2 }"))
    assert core.returns == (Var("out1"), Var("_out1"))


def test_core_if_prints_canonically():
    p = desugar(parse("fun (x) { if (x < 1) { y = x; } else { y = 0; } return y }"))
    text = pretty_print(p)
    assert "if (1.0 + -x > 0) {" in text
    assert parse(text) == p


def test_minimal_print():
    assert pretty_print(parse("fun (x) { skip; return x }")) == "fun (x) {\n skip;\n return x\n}"


def test_pi_and_cos():
    p = desugar(parse("fun (x) { y = cos(pi * x); return y }"))
    out = run_batch(p, np.array([[1.0]])).outputs[0, 0]
    assert out == pytest.approx(-1.0)


def test_negative_literal_round_trip():
    for src in ["fun (x) { y = -2 * x; return y }", "fun (x) { y = x * -2; return y }",
                "fun (x) { y = -(2) + x; return y }", "fun (x) { y = x - -1; return y }"]:
        p = parse(src)
        assert parse(pretty_print(p)) == p, src


@pytest.mark.parametrize("name", ALL_BENCHMARKS)
def test_round_trip_fixed_point(name):
    p, _, _ = load(name)
    once = pretty_print(p)
    assert parse(once) == p
    assert pretty_print(parse(once)) == once
    core = desugar(p)
    assert parse(pretty_print(core)) == core


@pytest.mark.parametrize("name", ALL_BENCHMARKS)
def test_desugar_idempotent(name):
    p, _, _ = load(name)
    core = desugar(p)
    assert is_core(core)
    assert desugar(core) == core


def surface_eval(p, inputs):
    """Reference semantics of surface programs, straight off the AST."""
    from turaco import syntax as S

    store = dict(zip(p.input_names, inputs))
    path = []

    def ev(e):
        if isinstance(e, S.Const):
            return e.value
        if isinstance(e, S.Var):
            return store[e.name]
        if isinstance(e, S.Neg):
            return -ev(e.operand)
        ops = {S.Add: lambda a, b: a + b, S.Sub: lambda a, b: a - b,
               S.Mul: lambda a, b: a * b, S.Div: lambda a, b: a / b}
        if type(e) in ops:
            return ops[type(e)](ev(e.left), ev(e.right))
        fns = {S.Sin: math.sin, S.Cos: math.cos, S.Exp: math.exp}
        if type(e) in fns:
            return fns[type(e)](ev(e.operand))
        if isinstance(e, S.Log):
            return math.log(ev(e.operand))
        if isinstance(e, S.Compare):
            a, b = ev(e.left), ev(e.right)
            return a - b if e.op == ">" else b - a
        raise TypeError(e)

    def ex(s):
        if isinstance(s, S.Seq):
            ex(s.first)
            ex(s.rest)
        elif isinstance(s, S.Assign):
            store[s.target] = ev(s.value)
        elif isinstance(s, S.AugAssign):
            aug = {"+": S.Add, "-": S.Sub, "*": S.Mul, "/": S.Div}[s.op]
            store[s.target] = ev(aug(S.Var(s.target), s.value))
        elif isinstance(s, S.If):
            taken = ev(s.cond) > 0
            path.append("l" if taken else "r")
            ex(s.then if taken else s.orelse)

    ex(p.body)
    return [ev(r) for r in p.returns], "".join(path)


@pytest.mark.parametrize("name", ALL_BENCHMARKS)
def test_desugar_sound_on_corpus(name):
    p, spec, _ = load(name)
    core = desugar(p)
    X = spec.sample(np.random.default_rng(1), 1000)
    res = run_batch(core, X)
    for x, y, path in zip(X, res.outputs, res.paths):
        want, want_path = surface_eval(p, list(x))
        assert path == want_path
        assert np.allclose(y, want, rtol=1e-9, atol=1e-12)


def test_vectors_parse_and_run():
    p = desugar(parse("fun (v[3], s) { w[3]; w[1] = s; u = v * w; return u, v[2] }"))
    out = run_batch(p, np.array([[1.0, 2.0, 3.0, 5.0]])).outputs[0]
    assert out.tolist() == [0.0, 10.0, 0.0, 3.0]


def test_log_center_must_be_positive():
    with pytest.raises(ParseError):
        parse("fun (x) { y = log{0}(x); return y }")
    p = parse("fun (x) { y = log{3.88}(0.75 * x); return y }")
    assert math.isclose(run_batch(desugar(p), np.array([[2.0]])).outputs[0, 0], math.log(1.5))


def test_else_if_chain():
    p = parse("fun (x) { if (x < 0) { y = 1; } else if (x < 1) { y = 2; } else { y = 3; } return y }")
    assert isinstance(p.body.orelse, If)
