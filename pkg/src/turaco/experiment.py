"""End-to-end experiments (allocate, sample, train, evaluate) and table reproduction."""

from __future__ import annotations

import csv
import io
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .alloc import (
    allocate,
    build_profiles,
    expected_predicted_error,
    optimal_allocation,
    baseline_allocation,
    predicted_improvement,
)
from .data import Config, build_dataset, estimate_frequencies, load_config, program_hash, stream
from .desugar import desugar
from .interp import ERROR_PATH
from .parser import parse_file
from .surrogate import (
    StratifiedSurrogate,
    TrainConfig,
    init_params,
    labeled_test_set,
    predict_batch,
    train,
)
from .syntax import Program, TuracoError
from .tilde import JOINT, program_complexities

METHODS = ("complexity", "frequency", "uniform")
BASELINES = ("frequency", "uniform")
TABLE_BENCHMARKS = ("luminance", "huber", "blackscholes", "camera", "equake")

BENCHMARK_DIR = Path(__file__).parent / "benchmarks"


def bundled(name: str) -> tuple[Path, Path]:
    """Program and config paths of a bundled benchmark, e.g. ``huber`` or ``synthetic/skewed_frequency``."""
    prog = BENCHMARK_DIR / f"{name}.turaco"
    if not prog.exists():
        raise TuracoError(f"no bundled benchmark named {name!r}")
    return prog, prog.with_suffix(".json")


def parse_budgets(text: str) -> list[int]:
    """``LO..HI:xK`` (K log-spaced integers) or a comma-separated list."""
    m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*:\s*x(\d+)\s*", text)
    if m:
        lo, hi, k = (int(g) for g in m.groups())
        if not (1 <= lo <= hi) or k < 1:
            raise ValueError(f"bad budget range {text!r}")
        pts = np.geomspace(lo, hi, k) if k > 1 else np.array([lo])
        return sorted({int(round(v)) for v in pts})
    try:
        vals = sorted({int(v) for v in text.split(",") if v.strip()})
    except ValueError:
        raise ValueError(f"bad budget list {text!r}") from None
    if not vals or vals[0] < 1:
        raise ValueError(f"budgets must be positive integers: {text!r}")
    return vals


def geomean(xs) -> float:
    xs = np.asarray(list(xs), dtype=float)
    if len(xs) == 0 or np.any(xs <= 0):
        return float("nan") if len(xs) == 0 or np.any(xs < 0) else 0.0
    return float(np.exp(np.mean(np.log(xs))))


def path_frequencies(p: Program, cfg: Config, seed: int, trials: int = 100_000) -> dict:
    """Configured frequencies, else a Monte-Carlo estimate with failures dropped."""
    if cfg.frequencies is not None:
        return dict(cfg.frequencies)
    spec = cfg.spec.check(p)
    est = estimate_frequencies(p, spec, trials, stream(seed, "frequencies"))
    est.pop(ERROR_PATH, None)
    total = sum(est.values())
    if total == 0:
        raise TuracoError("program fails on every sampled input")
    return {k: v / total for k, v in est.items()}


@dataclass
class RunRow:
    budget: int
    method: str
    trial: int
    predicted: float
    empirical: float
    status: str = "ok"


@dataclass
class PathRow:
    budget: int
    method: str
    trial: int
    path: str
    count: int
    empirical: float


@dataclass
class ExperimentReport:
    benchmark: str
    provenance: dict
    runs: list = field(default_factory=list)
    path_runs: list = field(default_factory=list)

    def budgets(self) -> list[int]:
        return sorted({r.budget for r in self.runs})

    def errors(self, method: str, budget: int) -> list[float]:
        return [r.empirical for r in self.runs if r.method == method and r.budget == budget]

    def geomean_error(self, method: str) -> float:
        return geomean(r.empirical for r in self.runs if r.method == method)

    def empirical_improvement(self, baseline: str) -> float:
        """Mean over budgets of the improvement in trial-geomean error."""
        vals = []
        for n in self.budgets():
            base = geomean(self.errors(baseline, n))
            ours = geomean(self.errors("complexity", n))
            vals.append(100.0 * (base - ours) / base)
        return float(np.mean(vals))

    def predicted_improvement(self, baseline: str) -> float:
        vals = []
        for n in self.budgets():
            base = np.mean([r.predicted for r in self.runs if r.method == baseline and r.budget == n])
            ours = np.mean([r.predicted for r in self.runs if r.method == "complexity" and r.budget == n])
            vals.append(100.0 * (base - ours) / base)
        return float(np.mean(vals))

    def path_geomean(self, path: str, budget: int, method: str | None = None) -> float:
        return geomean(
            r.empirical
            for r in self.path_runs
            if r.path == path and r.budget == budget and (method is None or r.method == method)
            and not math.isnan(r.empirical)
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.provenance.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "benchmark", "budget", "method", "trial", "path", "count",
                    "predicted", "empirical", "status"])
        b = self.benchmark
        for r in self.runs:
            w.writerow(["run", b, r.budget, r.method, r.trial, "", "",
                        _f(r.predicted), _f(r.empirical), r.status])
        for r in self.path_runs:
            w.writerow(["path", b, r.budget, r.method, r.trial, r.path, r.count,
                        "", _f(r.empirical), "ok"])
        for m in METHODS:
            if any(r.method == m for r in self.runs):
                w.writerow(["geomean", b, "", m, "", "", "",
                            _f(geomean(r.predicted for r in self.runs if r.method == m)),
                            _f(self.geomean_error(m)), "ok"])
        for base in BASELINES:
            if any(r.method == base for r in self.runs):
                w.writerow(["improvement", b, "", base, "", "", "",
                            _f(self.predicted_improvement(base)),
                            _f(self.empirical_improvement(base)), "ok"])
        return buf.getvalue()


def _f(v: float) -> str:
    return "%.10g" % v


def _run_trial(job) -> tuple[list, list]:
    (p, spec, profiles, budgets, methods, trial, seed, tcfg, test_size) = job
    paths = [pr.path for pr in profiles]
    n_in = spec.width
    n_out = len(desugar(p).returns)
    Xt, Yt = labeled_test_set(p, spec, test_size, stream(seed, "test", trial))
    cache: dict = {}

    def model(path: str, k: int):
        key = (path, k)
        if key not in cache:
            cfg = replace(tcfg, seed=int(stream(seed, "train", path, trial).integers(2**62)))
            if k == 0:
                cache[key] = init_params(n_in, cfg.hidden, n_out, cfg.seed)
            else:
                ds = build_dataset(p, spec, {path: k}, seed, trial, feasible=paths)
                cache[key] = train(*ds.stratum(path), cfg).params
        return cache[key]

    runs, path_runs = [], []
    for n in budgets:
        for m in methods:
            plan = allocate(m, profiles, n)
            pred = expected_predicted_error(profiles, plan, n)
            try:
                ss = StratifiedSurrogate(p, {q: model(q, plan.counts[q]) for q in paths})
                Yp, tp = predict_batch(ss, Xt)
            except TuracoError as exc:
                runs.append(RunRow(n, m, trial, pred, float("nan"), f"failed: {exc}"))
                continue
            err = np.mean(np.abs(Yp - Yt), axis=1)
            runs.append(RunRow(n, m, trial, pred, float(err.mean())))
            for q in paths:
                rows = tp == q
                e = float(err[rows].mean()) if rows.any() else float("nan")
                path_runs.append(PathRow(n, m, trial, q, plan.counts[q], e))
    return runs, path_runs


def run_experiment(
    program_file,
    config: Config | None = None,
    budgets=(10, 17, 28, 46, 77, 129, 215, 359, 599, 1000),
    trials: int = 5,
    delta: float = 0.1,
    seed: int = 0,
    train_cfg: TrainConfig = TrainConfig(),
    test_size: int = 10_000,
    methods=METHODS,
    jobs: int = 1,
    name: str | None = None,
) -> ExperimentReport:
    """Train stratified surrogates for every (budget, method, trial) and report errors.

    Each trial draws one held-out test set shared by all budgets and methods.
    Training data for a path depends only on (seed, path, trial, count), so a
    count shared by two methods reuses the same network.
    """
    program_file = Path(program_file)
    p = parse_file(program_file)
    if config is None:
        config = load_config(program_file.with_suffix(".json"))
    spec = config.spec.check(p)
    freqs = path_frequencies(p, config, seed)
    profiles = build_profiles(program_complexities(p, JOINT), freqs, delta)
    budgets = sorted(set(int(b) for b in budgets))
    name = name or program_file.stem
    prov = {
        "benchmark": name,
        "program_hash": program_hash(p),
        "seed": seed,
        "delta": delta,
        "trials": trials,
        "budgets": " ".join(map(str, budgets)),
        "paths": " ".join(pr.path for pr in profiles),
        "train": f"hidden={train_cfg.hidden} steps={train_cfg.steps} lr={train_cfg.lr} "
        f"batch={train_cfg.batch}",
        "test_size": test_size,
        "versions": f"turaco={__version__} numpy={np.__version__}",
    }
    report = ExperimentReport(name, prov)
    job_list = [
        (p, spec, profiles, budgets, tuple(methods), t, seed, train_cfg, test_size)
        for t in range(trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_trial, job_list))
    else:
        results = [_run_trial(j) for j in job_list]
    for runs, path_runs in results:
        report.runs.extend(runs)
        report.path_runs.extend(path_runs)
    key = {m: i for i, m in enumerate(methods)}
    report.runs.sort(key=lambda r: (r.budget, key[r.method], r.trial))
    report.path_runs.sort(key=lambda r: (r.budget, key[r.method], r.trial, r.path))
    return report


def repro_tables(corpus_dir=BENCHMARK_DIR, delta: float = 0.1, names=TABLE_BENCHMARKS) -> tuple[str, str]:
    """Per-path statistics and predicted-improvement tables as CSV text.

    Uses only the analysis and allocator; nothing is trained.
    """
    corpus_dir = Path(corpus_dir)
    stats, preds = io.StringIO(), io.StringIO()
    ws = csv.writer(stats, lineterminator="\n")
    wp = csv.writer(preds, lineterminator="\n")
    ws.writerow(["benchmark", "path", "complexity", "frequency_pct", "complexity_distribution_pct"])
    wp.writerow(["benchmark", "vs_frequency_pct", "vs_uniform_pct"])
    for name in names:
        prog = corpus_dir / f"{name}.turaco"
        p = parse_file(prog)
        cfg = load_config(prog.with_suffix(".json"))
        freqs = path_frequencies(p, cfg, seed=0)
        profiles = build_profiles(program_complexities(p, JOINT), freqs, delta)
        ours = optimal_allocation(profiles, 1)
        for pr in profiles:
            ws.writerow([name, pr.path, "%.2f" % pr.complexity, "%.2f" % (100 * pr.frequency),
                         "%.2f" % (100 * ours.fractions[pr.path])])
        wp.writerow([name] + [
            "%.2f" % predicted_improvement(profiles, ours, baseline_allocation(b, profiles, 1))
            for b in BASELINES
        ])
    return stats.getvalue(), preds.getvalue()
