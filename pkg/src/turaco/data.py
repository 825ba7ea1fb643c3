"""Input distributions, per-stratum rejection sampling, and dataset CSV files."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .desugar import desugar
from .interp import run_batch
from .paths import collect_traces
from .printer import pretty_print
from .syntax import Program, TuracoError


STRATUM_CHUNK = 16384


class DataError(TuracoError):
    pass


class StratumTooRare(DataError):
    pass


@dataclass(frozen=True)
class InputRange:
    name: str
    low: float
    high: float
    dim: int | None = None  # None for a scalar input

    def __post_init__(self):
        if not (np.isfinite(self.low) and np.isfinite(self.high)):
            raise DataError(f"input {self.name!r}: range must be finite")
        if not self.low < self.high:
            raise DataError(f"input {self.name!r}: need low < high, got [{self.low}, {self.high}]")
        if self.dim is not None and self.dim < 1:
            raise DataError(f"input {self.name!r}: dimension must be >= 1, got {self.dim}")

    @property
    def width(self) -> int:
        return 1 if self.dim is None else self.dim


@dataclass(frozen=True)
class InputSpec:
    inputs: tuple  # of InputRange, in program parameter order

    @property
    def width(self) -> int:
        return sum(r.width for r in self.inputs)

    def columns(self) -> list[str]:
        cols = []
        for r in self.inputs:
            if r.dim is None:
                cols.append(f"x_{r.name}")
            else:
                cols.extend(f"x_{r.name}_{i}" for i in range(r.dim))
        return cols

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` independent uniform draws, shape ``(n, width)``."""
        lows = np.concatenate([np.full(r.width, r.low) for r in self.inputs])
        highs = np.concatenate([np.full(r.width, r.high) for r in self.inputs])
        return rng.uniform(lows, highs, size=(n, self.width))

    def check(self, p: Program) -> "InputSpec":
        """Reorder to match ``p``'s parameters, checking names and dimensions."""
        by_name = {r.name: r for r in self.inputs}
        extra = set(by_name) - set(p.input_names)
        if extra:
            raise DataError(f"config names inputs the program lacks: {sorted(extra)}")
        ordered = []
        for prm in p.params:
            r = by_name.get(prm.name)
            if r is None:
                raise DataError(f"config has no range for input {prm.name!r}")
            if r.dim != prm.dim:
                raise DataError(
                    f"input {prm.name!r}: config dimension {r.dim} but program declares {prm.dim}"
                )
            ordered.append(r)
        return InputSpec(tuple(ordered))


@dataclass
class Config:
    spec: InputSpec
    frequencies: dict | None = None  # overrides Monte-Carlo estimates when present


def parse_config(obj: Mapping) -> Config:
    try:
        ranges = tuple(
            InputRange(d["name"], float(d["low"]), float(d["high"]), d.get("dim"))
            for d in obj["inputs"]
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"malformed config: {exc}") from None
    if not ranges:
        raise DataError("config declares no inputs")
    freqs = obj.get("frequencies")
    if freqs is not None:
        freqs = {str(k): float(v) for k, v in freqs.items()}
        if any(v < 0 for v in freqs.values()):
            raise DataError("frequencies must be nonnegative")
        total = sum(freqs.values())
        if abs(total - 1.0) > 1e-6:
            raise DataError(f"configured frequencies sum to {total!r}, expected 1")
    return Config(InputSpec(ranges), freqs)


def load_config(path) -> Config:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON: {exc}") from None
    return parse_config(obj)


def stream(seed: int, *keys) -> np.random.Generator:
    """Independent generator for ``(seed, keys...)``; string keys are hashed."""
    spawn = tuple(zlib.crc32(k.encode()) if isinstance(k, str) else int(k) for k in keys)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn))


def program_hash(p: Program) -> str:
    return hashlib.sha256(pretty_print(p).encode()).hexdigest()[:16]


def sample_input(spec: InputSpec, rng: np.random.Generator) -> list:
    """One input draw, with vector inputs as lists."""
    row = spec.sample(rng, 1)[0]
    out, j = [], 0
    for r in spec.inputs:
        out.append(float(row[j]) if r.dim is None else row[j : j + r.dim].tolist())
        j += r.width
    return out


def estimate_frequencies(
    p: Program, spec: InputSpec, trials: int, rng: np.random.Generator, chunk: int = 200_000
) -> dict[str, float]:
    """Empirical path hit fractions; failing inputs land under ``ERROR_PATH``."""
    if trials < 1:
        raise DataError("trials must be >= 1")
    core = desugar(p)
    hits: dict[str, int] = {}
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        for path, c in run_batch(core, spec.sample(rng, m)).path_counts().items():
            hits[path] = hits.get(path, 0) + c
        done += m
    return {k: hits[k] / trials for k in sorted(hits)}


def sample_stratum(
    p: Program,
    spec: InputSpec,
    path: str,
    k: int,
    rng: np.random.Generator,
    max_rejections: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """``k`` inputs drawn from the spec conditioned on taking ``path``, with labels.

    Returns ``(X, Y)``.  Gives up after ``max_rejections`` draws (default
    ``10**6 * k``).
    """
    if k < 0:
        raise DataError("k must be nonnegative")
    core = desugar(p)
    out_width = None
    if k == 0:
        return np.empty((0, spec.width)), np.empty((0, len(core.returns)))
    budget = 10**6 * k if max_rejections is None else max_rejections
    xs, ys = [], []
    have = drawn = 0
    while have < k:
        if drawn >= budget:
            raise StratumTooRare(
                f"path {path!r}: only {have} of {k} samples after {drawn} draws"
            )
        # fixed chunks make the first k records independent of k
        m = min(STRATUM_CHUNK, budget - drawn)
        X = spec.sample(rng, m)
        res = run_batch(core, X)
        keep = res.paths == path
        drawn += m
        take = min(int(keep.sum()), k - have)
        if take:
            xs.append(X[keep][:take])
            ys.append(res.outputs[keep][:take])
            have += take
            out_width = res.outputs.shape[1]
    return np.concatenate(xs), np.concatenate(ys).reshape(k, out_width)


@dataclass
class Dataset:
    paths: np.ndarray  # (n,) path ids
    X: np.ndarray  # (n, input width)
    Y: np.ndarray  # (n, output width)
    columns: list  # input column names
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.paths)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for p in self.paths:
            out[str(p)] = out.get(str(p), 0) + 1
        return out

    def stratum(self, path: str) -> tuple[np.ndarray, np.ndarray]:
        keep = self.paths == path
        return self.X[keep], self.Y[keep]


def build_dataset(
    p: Program,
    spec: InputSpec,
    counts: Mapping[str, int],
    seed: int,
    trial: int = 0,
    feasible: Iterable[str] | None = None,
) -> Dataset:
    """Concatenate per-path stratum samples, each from its own seeded stream."""
    known = set(collect_traces(desugar(p)))
    allowed = known if feasible is None else set(feasible)
    bad = sorted(q for q, c in counts.items() if c > 0 and q not in allowed)
    if bad:
        raise DataError(f"plan assigns samples to infeasible or unknown paths: {bad}")
    out_width = len(desugar(p).returns)
    paths, xs, ys = [], [], []
    for path in sorted(counts):
        k = int(counts[path])
        if k == 0:
            continue
        rng = stream(seed, path, trial)
        X, Y = sample_stratum(p, spec, path, k, rng)
        order = rng.permutation(k)
        xs.append(X[order])
        ys.append(Y[order])
        out_width = Y.shape[1]
        paths.extend([path] * k)
    X = np.concatenate(xs) if xs else np.empty((0, spec.width))
    Y = np.concatenate(ys) if ys else np.empty((0, out_width))
    prov = {
        "program": program_hash(p),
        "seed": str(seed),
        "trial": str(trial),
        "plan": ";".join(f"{q}={counts[q]}" for q in sorted(counts)),
    }
    return Dataset(np.array(paths, dtype=object), X, Y, spec.columns(), prov)


def _fmt(v: float) -> str:
    return "%.17g" % v


def dataset_to_csv(ds: Dataset) -> str:
    buf = io.StringIO()
    for k in sorted(ds.provenance):
        buf.write(f"# {k}: {ds.provenance[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path_id", *ds.columns, *(f"y_{k}" for k in range(ds.Y.shape[1]))])
    for path, x, y in zip(ds.paths, ds.X, ds.Y):
        w.writerow([path, *map(_fmt, x), *map(_fmt, y)])
    return buf.getvalue()


def write_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(ds))


def read_dataset(path) -> Dataset:
    prov, rows = {}, []
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(":")
                prov[key.strip()] = val.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty dataset file") from None
    if not header or header[0] != "path_id":
        raise DataError(f"{path}: first column must be path_id")
    xcols = [c for c in header[1:] if c.startswith("x_")]
    ny = sum(1 for c in header[1:] if c.startswith("y_"))
    for r in reader:
        if r:
            rows.append(r)
    nx = len(xcols)
    paths = np.array([r[0] for r in rows], dtype=object)
    vals = np.array([[float(v) for v in r[1:]] for r in rows]).reshape(len(rows), nx + ny)
    return Dataset(paths, vals[:, :nx], vals[:, nx:], xcols, prov)
