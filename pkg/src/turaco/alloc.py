"""Predicted error and sample-budget allocation across strata.

Each stratum's surrogate error is modeled as ``sqrt((zeta + ln 1/delta_i) / n_i)``
(the sample-complexity bound taken as tight, constant 1).  Minimizing the
frequency-weighted sum under ``sum n_i = n`` gives fractions proportional to
``(D_i * sqrt(zeta_i + ln 1/delta_i)) ** (2/3)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .syntax import TuracoError

FREQ_TOL = 1e-9


class AllocationError(TuracoError):
    pass


@dataclass(frozen=True)
class PathProfile:
    path: str
    complexity: float
    frequency: float
    delta_i: float


@dataclass
class AllocationPlan:
    fractions: dict  # path -> share of the budget
    counts: dict  # path -> number of samples
    budget: int

    def scaled(self, budget: int) -> "AllocationPlan":
        return AllocationPlan(dict(self.fractions), integerize(self.fractions, budget), budget)


def split_delta(delta: float, c: int) -> float:
    """Per-stratum failure probability so that ``1 - prod(1 - delta_i) = delta``."""
    if c < 1:
        raise AllocationError("need at least one path to split delta across")
    if not 0 < delta < 1:
        raise AllocationError(f"delta must lie in (0, 1), got {delta!r}")
    return 1.0 - (1.0 - delta) ** (1.0 / c)


def predicted_error(zeta: float, delta_i: float, n_i: float) -> float:
    if not n_i > 0:
        raise AllocationError(f"sample count must be positive, got {n_i!r}")
    if not 0 < delta_i <= 1:
        raise AllocationError(f"delta_i must lie in (0, 1], got {delta_i!r}")
    return math.sqrt((zeta + math.log(1.0 / delta_i)) / n_i)


def build_profiles(
    complexities: Mapping[str, float], frequencies: Mapping[str, float], delta: float
) -> list[PathProfile]:
    """Profiles for the exercised paths; zero-frequency paths are dropped."""
    live = sorted(p for p, f in frequencies.items() if f > 0)
    if not live:
        raise AllocationError("no path has positive frequency")
    missing = [p for p in live if p not in complexities]
    if missing:
        raise AllocationError(f"frequencies name unknown paths: {missing}")
    total = sum(frequencies[p] for p in live)
    if abs(total - 1.0) > 1e-6:
        raise AllocationError(f"path frequencies sum to {total!r}, expected 1")
    d = split_delta(delta, len(live))
    return [PathProfile(p, float(complexities[p]), float(frequencies[p]), d) for p in live]


def _check_profiles(profiles: Sequence[PathProfile]):
    if not profiles:
        raise AllocationError("no paths to allocate over")
    if any(pr.frequency < 0 for pr in profiles):
        raise AllocationError("frequencies must be nonnegative")
    if not any(pr.frequency > 0 for pr in profiles):
        raise AllocationError("all path frequencies are zero")


def integerize(fractions: Mapping[str, float], n: int) -> dict[str, int]:
    """Largest-remainder rounding; ties go to the lexicographically smaller path."""
    if n < 0:
        raise AllocationError("budget must be nonnegative")
    exact = {p: n * f for p, f in fractions.items()}
    # the epsilon keeps 2.9999999999 from flooring to 2
    counts = {p: int(math.floor(x + 1e-9)) for p, x in exact.items()}
    rem = {p: round(exact[p] - counts[p], 9) for p in exact}
    residual = n - sum(counts.values())
    order = sorted(exact, key=lambda p: (-rem[p], p))
    for p in order[: max(residual, 0)]:
        counts[p] += 1
    for p in reversed(order):
        if residual >= 0:
            break
        if counts[p] > 0:
            counts[p] -= 1
            residual += 1
    return counts


def _plan(fractions: dict, budget: int) -> AllocationPlan:
    return AllocationPlan(fractions, integerize(fractions, budget), budget)


def optimal_allocation(profiles: Sequence[PathProfile], budget: int) -> AllocationPlan:
    _check_profiles(profiles)
    w = {
        pr.path: (pr.frequency * math.sqrt(pr.complexity + math.log(1.0 / pr.delta_i))) ** (2 / 3)
        for pr in profiles
    }
    total = sum(w.values())
    if total == 0:
        # zeta = 0 and delta_i = 1 everywhere: every allocation is equally good
        return baseline_allocation("frequency", profiles, budget)
    return _plan({p: v / total for p, v in w.items()}, budget)


def baseline_allocation(kind: str, profiles: Sequence[PathProfile], budget: int) -> AllocationPlan:
    _check_profiles(profiles)
    if kind == "frequency":
        total = sum(pr.frequency for pr in profiles)
        return _plan({pr.path: pr.frequency / total for pr in profiles}, budget)
    if kind == "uniform":
        live = [pr.path for pr in profiles if pr.frequency > 0]
        return _plan({pr.path: (1 / len(live) if pr.frequency > 0 else 0.0) for pr in profiles}, budget)
    raise AllocationError(f"unknown baseline {kind!r}")


def allocate(method: str, profiles: Sequence[PathProfile], budget: int) -> AllocationPlan:
    if method == "complexity":
        return optimal_allocation(profiles, budget)
    return baseline_allocation(method, profiles, budget)


def expected_predicted_error(
    profiles: Sequence[PathProfile],
    plan: AllocationPlan,
    budget: float | None = None,
    continuous: bool = True,
) -> float:
    """Frequency-weighted predicted error of ``plan``.

    With ``continuous`` the per-path sample count is ``budget * fraction``;
    otherwise the plan's integer counts are used.
    """
    n = plan.budget if budget is None else budget
    total = 0.0
    for pr in profiles:
        if pr.frequency == 0:
            continue
        n_i = n * plan.fractions.get(pr.path, 0.0) if continuous else plan.counts.get(pr.path, 0)
        if not n_i > 0:
            raise AllocationError(f"path {pr.path!r} has positive frequency but no samples")
        total += pr.frequency * predicted_error(pr.complexity, pr.delta_i, n_i)
    return total


def predicted_improvement(
    profiles: Sequence[PathProfile],
    ours: AllocationPlan,
    base: AllocationPlan,
    budgets: Iterable[float] | None = None,
) -> float:
    """Mean over budgets of ``100 * (E_base - E_ours) / E_base``."""
    budgets = list(budgets) if budgets is not None else [ours.budget]
    if not budgets:
        raise AllocationError("empty budget list")
    vals = []
    for n in budgets:
        e_base = expected_predicted_error(profiles, base, n)
        if e_base == 0:
            raise AllocationError("baseline predicted error is zero")
        vals.append(100.0 * (e_base - expected_predicted_error(profiles, ours, n)) / e_base)
    return sum(vals) / len(vals)
