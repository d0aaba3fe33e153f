"""Stability region oracle and empirical stability detection.

The oracle decides, for a declared small channel alphabet, whether a token
arrival-rate vector can be supported with margin delta by any randomized
stationary allocation rule. It maximizes the margin exactly (rational
arithmetic), so feasibility answers are monotone in delta by construction
and returned witnesses satisfy every constraint to machine precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import SizeError, ValidationError
from .scenario import Scenario
from .simplex import solve_max

MAX_MODEL_STATES = 64
DEFAULT_ALLOCATION_CAP = 1_000_000
DEFAULT_LP_VARIABLE_CAP = 20_000


@dataclass
class SmallChannelModel:
    """Explicit finite channel alphabet: rate matrices and their probabilities."""

    states: list[np.ndarray]   # each (M, N) decodable-rate matrix
    probs: np.ndarray          # (S,) state probabilities

    def __post_init__(self) -> None:
        self.states = [np.asarray(s, dtype=float) for s in self.states]
        self.probs = np.asarray(self.probs, dtype=float)
        if not self.states:
            raise ValidationError("small channel model needs at least one state")
        if len(self.states) > MAX_MODEL_STATES:
            raise ValidationError(
                f"small channel model capped at {MAX_MODEL_STATES} states")
        if self.probs.shape != (len(self.states),):
            raise ValidationError("need one probability per channel state")
        if np.any(self.probs < 0):
            raise ValidationError("state probabilities must be >= 0")
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValidationError("state probabilities must sum to 1 (within 1e-12)")
        shape = self.states[0].shape
        for idx, s in enumerate(self.states):
            if s.ndim != 2 or s.shape != shape:
                raise ValidationError(f"state {idx}: rate matrix shape mismatch")
            if not np.all(np.isfinite(s)) or np.any(s < 0):
                raise ValidationError(f"state {idx}: rates must be finite and >= 0")


def load_small_model(path: str | Path) -> SmallChannelModel:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read channel model {path}: {exc}") from exc
    if not isinstance(doc, dict) or "states" not in doc or "probs" not in doc:
        raise ValidationError(f"{path}: channel model needs 'states' and 'probs'")
    return SmallChannelModel(states=[np.array(s, dtype=float) for s in doc["states"]],
                             probs=np.array(doc["probs"], dtype=float))


def save_small_model(model: SmallChannelModel, path: str | Path) -> None:
    doc = {"states": [s.tolist() for s in model.states],
           "probs": model.probs.tolist()}
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def count_allocations(num_groups: int, num_prbs: int) -> int:
    """Number of feasible allocation vectors, partial assignments included."""
    total = 0
    for m in range(min(num_groups, num_prbs) + 1):
        total += math.comb(num_groups, m) * math.comb(num_prbs, m) * math.factorial(m)
    return total


def iter_allocations(num_groups: int, num_prbs: int) -> Iterator[tuple[int, ...]]:
    """Yield every feasible allocation vector in lexicographic order.

    Entries are 0 (group unscheduled) or a 1-based PRB number; nonzero
    entries are pairwise distinct.
    """
    b = [0] * num_groups
    used = set()

    def rec(i: int) -> Iterator[tuple[int, ...]]:
        if i == num_groups:
            yield tuple(b)
            return
        b[i] = 0
        yield from rec(i + 1)
        for j in range(1, num_prbs + 1):
            if j not in used:
                b[i] = j
                used.add(j)
                yield from rec(i + 1)
                used.remove(j)
        b[i] = 0

    yield from rec(0)


def enumerate_allocations(num_groups: int, num_prbs: int,
                          cap: int = DEFAULT_ALLOCATION_CAP) -> np.ndarray:
    """All feasible allocation vectors as an (A, L) array, deterministic order."""
    count = count_allocations(num_groups, num_prbs)
    if count > cap:
        raise SizeError(f"{count} feasible allocations exceed the cap {cap}")
    return np.array(list(iter_allocations(num_groups, num_prbs)), dtype=np.int64)


def service_vector_of(b, state_rates: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Binary per-UE service vector of allocation ``b`` in channel state ``state_rates``.

    Same semantics as policies.serve_from_allocation, implemented
    independently (plain per-UE scan) so the two can be checked against each
    other.
    """
    mu = np.zeros(scenario.num_ues, dtype=np.int64)
    for k in range(scenario.num_ues):
        group = int(scenario.group_of[k])
        prb = int(b[group])
        if prb != 0 and scenario.stream_rates[group] <= state_rates[k, prb - 1]:
            mu[k] = 1
    return mu


@dataclass
class LpSolution:
    """Outcome of the margin-maximization feasibility program."""

    feasible: bool
    delta: float              # the margin that was requested
    achieved_delta: float     # the largest supportable margin (exact LP optimum)
    weights: np.ndarray       # (S, A) allocation probabilities per state
    allocations: np.ndarray   # (A, L) allocation vectors, row-aligned with weights


def lp_delta_feasible(model: SmallChannelModel, lam: np.ndarray, delta: float,
                      scenario: Scenario,
                      variable_cap: int = DEFAULT_LP_VARIABLE_CAP) -> LpSolution:
    """Decide whether service >= lambda + delta is achievable on the model.

    Searches over per-state distributions w[C, B] on feasible allocations,
    requiring expected service of every UE to be at least lambda_k plus the
    margin. The margin itself is maximized with exact rational arithmetic;
    the request is feasible iff the maximized margin reaches ``delta``. The
    returned witness is the margin-maximizing distribution, valid for every
    smaller delta as well.
    """
    if delta < 0:
        raise ValidationError("delta must be >= 0")
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (scenario.num_ues,):
        raise ValidationError("need one arrival rate per UE")
    allocations = enumerate_allocations(scenario.num_groups, scenario.num_prbs)
    num_states, num_allocs = len(model.states), len(allocations)
    num_w = num_states * num_allocs
    if num_w > variable_cap:
        raise SizeError(f"LP would need {num_w} variables, cap is {variable_cap}")

    # mu[c][a][k]: service of UE k under allocation a in state c
    mu = np.stack([
        np.stack([service_vector_of(b, state, scenario) for b in allocations])
        for state in model.states
    ])

    # variables: w (num_w), then d+ and d-, then one surplus per UE
    m_ues = scenario.num_ues
    num_vars = num_w + 2 + m_ues
    zero = Fraction(0)
    g = [Fraction(p) for p in model.probs]

    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for c in range(num_states):  # allocation probabilities normalize per state
        row = [zero] * num_vars
        for a in range(num_allocs):
            row[c * num_allocs + a] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))
    for k in range(m_ues):  # expected service - d - surplus_k = lambda_k
        row = [zero] * num_vars
        for c in range(num_states):
            gc = g[c]
            if gc == 0:
                continue
            for a in range(num_allocs):
                if mu[c, a, k]:
                    row[c * num_allocs + a] = gc
        row[num_w] = Fraction(-1)
        row[num_w + 1] = Fraction(1)
        row[num_w + 2 + k] = Fraction(-1)
        rows.append(row)
        rhs.append(Fraction(lam[k]))

    objective = [zero] * num_vars
    objective[num_w] = Fraction(1)
    objective[num_w + 1] = Fraction(-1)

    status, x, value = solve_max(rows, rhs, objective)
    if status != "optimal":  # the margin LP is always feasible and bounded
        raise ValidationError(f"margin LP unexpectedly {status}")

    weights = np.array([[float(x[c * num_allocs + a]) for a in range(num_allocs)]
                        for c in range(num_states)])
    achieved = value
    return LpSolution(
        feasible=achieved >= Fraction(delta),
        delta=delta,
        achieved_delta=float(achieved),
        weights=weights,
        allocations=allocations,
    )


def check_witness(model: SmallChannelModel, lam: np.ndarray, delta: float,
                  scenario: Scenario, solution: LpSolution,
                  tol: float = 1e-9) -> bool:
    """Independent float recheck of an LP witness against all constraints."""
    w = solution.weights
    if np.any(w < -tol):
        return False
    if np.any(np.abs(w.sum(axis=1) - 1.0) > tol):
        return False
    service = np.zeros(scenario.num_ues)
    for c, state in enumerate(model.states):
        for a, b in enumerate(solution.allocations):
            if w[c, a] == 0.0:
                continue
            service += model.probs[c] * w[c, a] * service_vector_of(b, state, scenario)
    return bool(np.all(service >= np.asarray(lam) + delta - tol))


@dataclass
class StabilityReport:
    verdict: str       # "stable", "unstable" or "inconclusive"
    max_slope: float   # largest per-queue least-squares slope, tokens/sub-frame
    last_mean: float   # mean of max_k Q_k over the trailing window
    middle_mean: float  # same statistic over the centered window


def empirical_stability(q_trace: np.ndarray, window: float = 0.25,
                        eps_slope: float = 1e-4) -> StabilityReport:
    """Classify a queue-length trace as stable, unstable or inconclusive.

    Stable: the trailing-window mean of max_k Q_k has not grown past twice
    the mid-trace mean AND no queue shows a positive linear trend over the
    last half (least-squares slope <= eps_slope). Unstable: some queue grows
    faster than 10x eps_slope. Anything else is inconclusive.
    """
    q = np.asarray(q_trace, dtype=float)
    if q.ndim == 1:
        q = q[:, None]
    horizon = q.shape[0]
    if horizon < 10_000:
        raise ValidationError("stability verdicts need a trace of >= 10^4 sub-frames")
    if not 0 < window <= 0.5:
        raise ValidationError("window must lie in (0, 0.5]")

    half = q[horizon // 2:]
    t = np.arange(half.shape[0], dtype=float)
    t -= t.mean()
    denom = float(np.sum(t * t))
    slopes = (t @ (half - half.mean(axis=0))) / denom
    max_slope = float(slopes.max())

    maxq = q.max(axis=1)
    w = max(1, int(window * horizon))
    last_mean = float(maxq[horizon - w:].mean())
    mid_start = (horizon - w) // 2
    middle_mean = float(maxq[mid_start:mid_start + w].mean())

    if max_slope > 10 * eps_slope:
        verdict = "unstable"
    elif max_slope <= eps_slope and last_mean <= 2 * middle_mean + 1e-9:
        verdict = "stable"
    else:
        verdict = "inconclusive"
    return StabilityReport(verdict=verdict, max_slope=max_slope,
                           last_mean=last_mean, middle_mean=middle_mean)
