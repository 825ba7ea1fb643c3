"""Path enumeration: inline every combination of branch choices into a trace."""

from __future__ import annotations

from dataclasses import dataclass

from .interp import ERROR_PATH, run_batch
from .syntax import If, Program, Seq, Skip, TuracoError, seq

DEFAULT_PATH_CAP = 4096


class PathExplosionError(TuracoError):
    pass


@dataclass(frozen=True)
class Trace:
    path: str
    body: object  # branch-free statement
    returns: tuple


def _collect(s, prefixes: list, cap: int) -> list:
    """Extend each ``(path, [stmts])`` prefix through ``s``."""
    if isinstance(s, Skip):
        return prefixes
    if isinstance(s, Seq):
        return _collect(s.rest, _collect(s.first, prefixes, cap), cap)
    if isinstance(s, If):
        out = []
        for path, stmts in prefixes:
            out.extend(_collect(s.then, [(path + "l", stmts)], cap))
            out.extend(_collect(s.orelse, [(path + "r", stmts)], cap))
            if len(out) > cap:
                raise PathExplosionError(f"more than {cap} syntactic paths")
        return out
    return [(path, stmts + [s]) for path, stmts in prefixes]


def collect_traces(p: Program, cap: int = DEFAULT_PATH_CAP) -> dict[str, Trace]:
    """Map each syntactic path id (``l``/``r`` per branch taken) to its trace."""
    return {
        path: Trace(path, seq(*stmts), p.returns)
        for path, stmts in _collect(p.body, [("", [])], cap)
    }


@dataclass
class Feasibility:
    hits: dict  # every syntactic path -> hit count, plus ERROR_PATH when nonzero
    trials: int

    @property
    def feasible(self) -> list[str]:
        return [k for k, v in self.hits.items() if v > 0 and k != ERROR_PATH]

    @property
    def dormant(self) -> list[str]:
        return [k for k, v in self.hits.items() if v == 0 and k != ERROR_PATH]

    def fractions(self) -> dict[str, float]:
        return {k: v / self.trials for k, v in self.hits.items()}


def feasible_paths(p: Program, spec, trials: int, rng, chunk: int = 100_000) -> Feasibility:
    """Monte-Carlo hit counts for every syntactic path of ``p``.

    Paths never hit are dormant.  Inputs that make the interpreter fail are
    counted under ``ERROR_PATH``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    hits = dict.fromkeys(collect_traces(p), 0)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        res = run_batch(p, spec.sample(rng, m))
        for path, c in res.path_counts().items():
            hits[path] = hits.get(path, 0) + c
        done += m
    if not hits.get(ERROR_PATH):
        hits.pop(ERROR_PATH, None)
    return Feasibility(hits, trials)


def is_branch_free(s) -> bool:
    if isinstance(s, If):
        return False
    if isinstance(s, Seq):
        return is_branch_free(s.first) and is_branch_free(s.rest)
    return True


__all__ = [
    "DEFAULT_PATH_CAP",
    "Feasibility",
    "PathExplosionError",
    "Trace",
    "collect_traces",
    "feasible_paths",
    "is_branch_free",
]
