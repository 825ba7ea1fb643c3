"""``turaco`` command-line interface.

Exit status: 0 on success, 1 on a domain error (bad program, infeasible
stratum, ...), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from .alloc import allocate, build_profiles
from .data import (
    Config,
    build_dataset,
    load_config,
    read_dataset,
    stream,
    write_dataset,
)
from .desugar import desugar
from .experiment import (
    BENCHMARK_DIR,
    METHODS,
    parse_budgets,
    path_frequencies,
    repro_tables,
    run_experiment,
)
from .interp import run
from .parser import parse_file
from .paths import collect_traces, feasible_paths
from .printer import pretty_print
from .surrogate import (
    StratifiedSurrogate,
    TrainConfig,
    load_models,
    save_models,
    stratified_evaluate,
    train_stratified,
)
from .syntax import TuracoError
from .tilde import JOINT, SEPARATE, program_complexities


def _resolve(file: str) -> Path:
    """A path on disk, or the name of a bundled benchmark."""
    p = Path(file)
    if p.exists():
        return p
    bundled = BENCHMARK_DIR / f"{file}.turaco"
    if bundled.exists():
        return bundled
    raise TuracoError(f"no such program file: {file}")


def _config(args, prog: Path) -> Config:
    if args.config:
        return load_config(args.config)
    sibling = prog.with_suffix(".json")
    if sibling.exists():
        return load_config(sibling)
    raise TuracoError(f"{prog}: no --config given and no {sibling.name} next to it")


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(hidden=args.width, steps=args.steps, lr=args.lr, batch=args.batch, seed=args.seed)


def _parse_value(text: str):
    if "," in text:
        return [float(v) for v in text.split(",")]
    return float(text)


def cmd_parse(args):
    p = parse_file(_resolve(args.file))
    _emit(args, pretty_print(desugar(p) if args.core else p) + "\n")


def cmd_run(args):
    p = desugar(parse_file(_resolve(args.file)))
    try:
        values = [_parse_value(v) for v in args.inputs]
    except ValueError as exc:
        raise TuracoError(f"bad input value: {exc}") from None
    outputs, path = run(p, values)
    _emit(args, _csv(["path_id", *(f"y_{k}" for k in range(len(outputs)))],
                     [[path, *("%.17g" % y for y in outputs)]]))


def cmd_paths(args):
    prog = _resolve(args.file)
    p = desugar(parse_file(prog))
    if args.trials == 0:
        _emit(args, _csv(["path_id"], [[k] for k in collect_traces(p)]))
        return
    spec = _config(args, prog).spec.check(p)
    feas = feasible_paths(p, spec, args.trials, stream(args.seed, "paths"))
    fr = feas.fractions()
    _emit(args, _csv(["path_id", "feasible", "frequency"],
                     [[k, int(feas.hits[k] > 0), "%.6g" % fr[k]] for k in feas.hits]))


def cmd_complexity(args):
    p = parse_file(_resolve(args.file))
    cx = program_complexities(p, args.mode)
    _emit(args, _csv(["path_id", "complexity"], [[k, "%.6g" % v] for k, v in cx.items()]))


def _profiles(args, prog: Path):
    p = parse_file(prog)
    cfg = _config(args, prog)
    freqs = path_frequencies(p, cfg, args.seed)
    return p, cfg, build_profiles(program_complexities(p, JOINT), freqs, args.delta)


def cmd_allocate(args):
    _, _, profiles = _profiles(args, _resolve(args.file))
    plan = allocate(args.method, profiles, args.budget)
    _emit(args, _csv(["path_id", "fraction", "count"],
                     [[k, "%.17g" % plan.fractions[k], plan.counts[k]] for k in plan.fractions]))


def _read_plan(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    try:
        return {r["path_id"]: int(r["count"]) for r in rows}
    except (KeyError, ValueError):
        raise TuracoError(f"{path}: plan must have path_id and count columns") from None


def cmd_sample(args):
    prog = _resolve(args.file)
    p = parse_file(prog)
    spec = _config(args, prog).spec.check(p)
    ds = build_dataset(p, spec, _read_plan(args.plan), args.seed)
    if not args.out:
        raise TuracoError("sample needs --out")
    write_dataset(ds, args.out)


def cmd_train(args):
    prog = _resolve(args.file)
    p = parse_file(prog)
    ds = read_dataset(args.data)
    paths = sorted(ds.counts())
    if args.paths:
        paths = sorted(set(paths) | set(args.paths.split(",")))
    n_out = ds.Y.shape[1]
    ss = train_stratified(p, ds, _train_cfg(args), paths, ds.X.shape[1], n_out)
    if not args.out:
        raise TuracoError("train needs --out")
    save_models(ss, args.out)


def cmd_eval(args):
    prog = _resolve(args.file)
    p = parse_file(prog)
    spec = _config(args, prog).spec.check(p)
    ss: StratifiedSurrogate = load_models(p, args.models)
    err = stratified_evaluate(ss, p, spec, args.test_size, stream(args.seed, "eval"))
    _emit(args, _csv(["error"], [["%.10g" % err]]))


def cmd_experiment(args):
    prog = _resolve(args.file)
    report = run_experiment(
        prog,
        _config(args, prog),
        budgets=args.budgets,
        trials=args.trials,
        delta=args.delta,
        seed=args.seed,
        train_cfg=_train_cfg(args),
        test_size=args.test_size,
        methods=tuple(args.methods.split(",")),
        jobs=args.jobs,
    )
    _emit(args, report.to_csv())


def cmd_repro_tables(args):
    stats, preds = repro_tables(args.corpus, args.delta)
    if args.out:
        Path(args.out + "_stats.csv").write_text(stats)
        Path(args.out + "_predicted.csv").write_text(preds)
    else:
        sys.stdout.write(stats + "\n" + preds)


def _budgets(text: str) -> list[int]:
    try:
        return parse_budgets(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _methods(text: str) -> str:
    bad = [m for m in text.split(",") if m not in METHODS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown methods {bad}; choose from {list(METHODS)}")
    return text


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="turaco", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help, program=True):
        sp = sub.add_parser(name, help=help)
        if program:
            sp.add_argument("file", help="program file or bundled benchmark name")
        sp.add_argument("--out", help="write output here instead of stdout")
        sp.set_defaults(fn=fn)
        return sp

    def config(sp):
        sp.add_argument("--config", help="input ranges / frequencies JSON (default: sibling .json)")
        sp.add_argument("--seed", type=int, default=0)

    def training(sp):
        sp.add_argument("--width", type=int, default=256)
        sp.add_argument("--steps", type=int, default=2000)
        sp.add_argument("--lr", type=float, default=5e-4)
        sp.add_argument("--batch", type=int, default=128)

    sp = cmd("parse", cmd_parse, "parse and pretty-print a program")
    sp.add_argument("--core", action="store_true", help="print the desugared core program")

    sp = cmd("run", cmd_run, "execute a program on one input")
    sp.add_argument("inputs", nargs="*", help="input values; vectors as comma lists")

    sp = cmd("paths", cmd_paths, "list syntactic paths, with Monte-Carlo feasibility")
    config(sp)
    sp.add_argument("--trials", type=int, default=100_000, help="0 lists paths only")

    sp = cmd("complexity", cmd_complexity, "per-path sample complexity")
    sp.add_argument("--mode", choices=[JOINT, SEPARATE], default=JOINT,
                    help="how multiple outputs combine")

    sp = cmd("allocate", cmd_allocate, "split a sample budget across paths")
    config(sp)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--method", choices=METHODS, default="complexity")

    sp = cmd("sample", cmd_sample, "draw a stratified dataset for a plan")
    config(sp)
    sp.add_argument("--plan", required=True, help="CSV from `turaco allocate`")

    sp = cmd("train", cmd_train, "train per-path surrogates on a dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--paths", help="comma list of extra paths to cover with untrained networks")
    sp.add_argument("--seed", type=int, default=0)
    training(sp)

    sp = cmd("eval", cmd_eval, "error of trained surrogates on fresh draws")
    config(sp)
    sp.add_argument("--models", required=True)
    sp.add_argument("--test-size", type=int, default=10_000)

    sp = cmd("experiment", cmd_experiment, "compare sampling methods end to end")
    config(sp)
    training(sp)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--budgets", type=_budgets, default=parse_budgets("10..1000:x10"),
                    help="LO..HI:xK log-spaced, or a comma list (default 10..1000:x10)")
    sp.add_argument("--trials", type=int, default=5)
    sp.add_argument("--test-size", type=int, default=10_000)
    sp.add_argument("--methods", type=_methods, default=",".join(METHODS))
    sp.add_argument("--jobs", type=int, default=1, help="worker processes (one trial each)")

    sp = cmd("repro-tables", cmd_repro_tables, "benchmark statistics and predicted improvements",
             program=False)
    sp.add_argument("--corpus", default=str(BENCHMARK_DIR))
    sp.add_argument("--delta", type=float, default=0.1)
    sp.set_defaults(out=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        args.fn(args)
    except (TuracoError, OSError) as exc:
        print(f"turaco: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
