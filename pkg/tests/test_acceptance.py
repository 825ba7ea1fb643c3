"""Acceptance criteria, one marker per criterion.

The terminal summary prints one pass/fail line per criterion (see conftest).
"""

import math
import random
import time

import numpy as np
import pytest

from conftest import ALL_BENCHMARKS, load
from test_surrogate import _random_net, gradient_check
from test_tilde import ENV, random_poly_trace
from turaco.alloc import PathProfile, build_profiles, optimal_allocation, baseline_allocation, predicted_improvement, split_delta
from turaco.data import build_dataset, estimate_frequencies, stream
from turaco.desugar import desugar
from turaco.experiment import bundled, path_frequencies, run_experiment
from turaco.interp import ERROR_PATH, EvalError, run, run_batch, run_trace
from turaco.parser import parse
from turaco.paths import collect_traces
from turaco.polyseries import expand_trace, poly_tilde_oracle
from turaco.syntax import Add, Neg, Skip, Var
from turaco.tilde import DualBound, JOINT, program_complexities, tilde_expr, tilde_trace

C = pytest.mark.criterion

GOLDEN_COMPLEXITY = {
    "luminance": {"ll": 0.01, "rl": 1.21, "rr": 9.00},
    "huber": {"ll": 9.00, "lr": 9.00, "r": 9.00},
    "blackscholes": {"l": 165.72, "r": 485.23},
    "camera": {"ll": 0.86, "lrl": 0.81, "rrr": 9.53},
    "equake": {"l": 56.29, "r": 1169.50},
}

GOLDEN_DISTRIBUTION = {
    "luminance": {"ll": 36.94, "rl": 13.98, "rr": 49.07},
    "huber": {"ll": 44.25, "lr": 27.88, "r": 27.88},
    "blackscholes": {"l": 59.34, "r": 40.66},
    "camera": {"ll": 36.96, "lrl": 31.63, "rrr": 31.41},
    "equake": {"l": 26.99, "r": 73.01},
}

GOLDEN_IMPROVEMENT = {
    "luminance": (2.58, 6.97),
    "huber": (0.49, 1.93),
    "blackscholes": (4.43, 1.30),
    "camera": (2.83, 0.22),
    "equake": (7.45, 7.45),
}


def _profiles(name):
    p, _, cfg = load(name)
    return build_profiles(program_complexities(p, JOINT), path_frequencies(p, cfg, 0), 0.1)


# 1

@C(1, "complexity golden values within 1%")
@pytest.mark.parametrize("name", sorted(GOLDEN_COMPLEXITY))
def test_c1_complexity_golden(name):
    p, _, _ = load(name)
    t = time.perf_counter()
    cx = program_complexities(p)
    assert time.perf_counter() - t < 1.0
    for path, want in GOLDEN_COMPLEXITY[name].items():
        assert cx[path] == pytest.approx(want, rel=0.01), path


# 2

@C(2, "complexity-guided distribution within 0.05 pp")
@pytest.mark.parametrize("name", sorted(GOLDEN_DISTRIBUTION))
def test_c2_allocation_golden(name):
    profiles = _profiles(name)
    assert all(pr.delta_i == pytest.approx(1 - 0.9 ** (1 / len(profiles)), rel=1e-15) for pr in profiles)
    plan = optimal_allocation(profiles, 1000)
    got = {k: 100 * v for k, v in plan.fractions.items()}
    assert set(got) == set(GOLDEN_DISTRIBUTION[name])
    for path, want in GOLDEN_DISTRIBUTION[name].items():
        assert got[path] == pytest.approx(want, abs=0.05), path


# 3

@C(3, "predicted improvement within 0.05 pp")
@pytest.mark.parametrize("name", sorted(GOLDEN_IMPROVEMENT))
def test_c3_predicted_improvement_golden(name):
    profiles = _profiles(name)
    ours = optimal_allocation(profiles, 1000)
    for base, want in zip(("frequency", "uniform"), GOLDEN_IMPROVEMENT[name]):
        got = predicted_improvement(profiles, ours, baseline_allocation(base, profiles, 1000))
        assert got == pytest.approx(want, abs=0.05), base


# 4

def _synthetic(freqs, zetas):
    d = split_delta(0.1, len(freqs))
    profiles = [PathProfile(f"s{i}", z, f, d) for i, (f, z) in enumerate(zip(freqs, zetas))]
    return [100 * optimal_allocation(profiles, 1).fractions[pr.path] for pr in profiles]


@C(4, "synthetic allocations 93/7 and 15/15/15/55 within 0.5 pp")
def test_c4_skewed_complexity():
    got = _synthetic([0.5, 0.5], [137677, 57])
    assert got == pytest.approx([93, 7], abs=0.5)


@C(4, "synthetic allocations 93/7 and 15/15/15/55 within 0.5 pp")
def test_c4_skewed_frequency():
    got = _synthetic([0.1, 0.1, 0.1, 0.7], [14] * 4)
    assert got == pytest.approx([15, 15, 15, 55], abs=0.5)


# 5

@C(5, "analysis soundness against the polynomial oracle")
def test_c5_random_polynomial_traces():
    rnd = random.Random(2024)
    for _ in range(1000):
        body, ret = random_poly_trace(rnd)
        bound = tilde_expr(tilde_trace(ENV, body), ret)
        (ps,) = expand_trace(body, [ret], ("x", "y"))
        _, deriv = poly_tilde_oracle(ps)
        assert bound.deriv >= deriv * (1 - 1e-12) - 1e-12


@C(5, "analysis soundness against the polynomial oracle")
def test_c5_cancellation_is_not_seen():
    x = Var("x")
    assert tilde_expr(ENV, Add(x, Neg(x))) == DualBound(2.0, 2.0)
    (ps,) = expand_trace(Skip(), [Add(x, Neg(x))], ("x",))
    assert poly_tilde_oracle(ps) == (0.0, 0.0)


# 6

N6 = 10_000


@C(6, "path consistency, trace inlining, label soundness, log domain")
@pytest.mark.parametrize("name", ALL_BENCHMARKS)
def test_c6_path_consistency_and_inlining(name):
    p, spec, _ = load(name)
    core = desugar(p)
    traces = collect_traces(core)
    X = spec.sample(stream(6, name), N6)
    res = run_batch(core, X)
    assert not res.errors
    for i in range(N6):
        inputs = _row_inputs(spec, X[i])
        out, path = run(core, inputs)
        # scalar and batch execution agree on path and value
        assert path == res.paths[i]
        assert np.array_equal(out, res.outputs[i])
        # the taken path's inlined trace computes the same value
        assert np.array_equal(run_trace(traces[path], core.params, inputs), out)


def _row_inputs(spec, row):
    out, j = [], 0
    for r in spec.inputs:
        out.append(float(row[j]) if r.dim is None else row[j : j + r.dim].tolist())
        j += r.width
    return out


@C(6, "path consistency, trace inlining, label soundness, log domain")
@pytest.mark.parametrize("name", ALL_BENCHMARKS)
def test_c6_label_soundness(name):
    p, spec, cfg = load(name)
    freqs = path_frequencies(p, cfg, 0)
    live = {k: v for k, v in freqs.items() if v > 0}
    share = N6 // len(live)
    counts = {k: share for k in live}
    ds = build_dataset(p, spec, counts, seed=6, feasible=live)
    assert len(ds) >= N6 - len(live)
    res = run_batch(desugar(p), ds.X)
    assert list(res.paths) == list(ds.paths)
    assert np.array_equal(res.outputs, ds.Y)


@C(6, "path consistency, trace inlining, label soundness, log domain")
def test_c6_log_domain():
    p = desugar(parse("fun (x) { y = log{1.5}(x); return y }"))
    X = np.random.default_rng(6).uniform(-1, 4, size=(N6, 1))
    res = run_batch(p, X)
    inside = np.abs(1.5 - X[:, 0]) < 1.5
    assert np.array_equal(res.paths != ERROR_PATH, inside)
    assert np.array_equal(res.outputs[inside, 0], np.log(X[inside, 0]))
    assert all("log domain" in m for m in res.errors.values())
    for x in X[~inside, 0][:200]:
        with pytest.raises(EvalError, match="log domain"):
            run(p, [float(x)])


# 7

@C(7, "MLP gradients match central differences (1e-4, 100 nets)")
def test_c7_gradient_check():
    rng = np.random.default_rng(7)
    t = time.perf_counter()
    worst = max(gradient_check(*_random_net(rng)) for _ in range(100))
    assert time.perf_counter() - t < 5.0
    assert worst < 1e-4


# 8

@pytest.fixture(scope="module")
def desk_reports():
    return {name: run_experiment(bundled(name)[0], seed=0) for name in ("luminance", "huber")}


@pytest.mark.slow
@C(8, "empirical direction at desk scale")
def test_c8_complexity_not_worse_than_uniform(desk_reports):
    for name, r in desk_reports.items():
        assert len(r.budgets()) == 10 and r.budgets()[0] == 10 and r.budgets()[-1] == 1000
        assert r.geomean_error("complexity") <= r.geomean_error("uniform"), name


@pytest.mark.slow
@C(8, "empirical direction at desk scale")
def test_c8_complexity_not_worse_than_frequency_on_luminance(desk_reports):
    r = desk_reports["luminance"]
    assert r.geomean_error("complexity") <= r.geomean_error("frequency")


@pytest.mark.slow
@C(8, "empirical direction at desk scale")
def test_c8_per_path_error_falls_with_budget(desk_reports):
    for name, r in desk_reports.items():
        for path in sorted({q.path for q in r.path_runs}):
            assert r.path_geomean(path, 1000) < r.path_geomean(path, 10), (name, path)


# 9

@C(9, "Huber Monte-Carlo frequencies within 3 sigma at 1e6")
def test_c9_huber_frequencies():
    p, spec, _ = load("huber")
    n = 10**6
    t = time.perf_counter()
    est = estimate_frequencies(p, spec, n, stream(9, "huber"))
    assert time.perf_counter() - t < 10.0
    for path, want in {"ll": 0.5, "lr": 0.25, "r": 0.25}.items():
        sigma = math.sqrt(want * (1 - want) / n)
        assert abs(est[path] - want) <= 3 * sigma, (path, est[path])
