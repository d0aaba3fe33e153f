"""Per-sub-frame allocation policies.

Three argmax policies over the feasible allocation set (max-weight,
priority max-weight, generalized exponential-of-queue-length), each realized
in polynomial time through maximum-weight bipartite matching, plus a
randomized stationary policy driven by precomputed per-channel-state
allocation probabilities. A brute-force enumerator over all feasible
allocation vectors serves as the oracle the matching route is checked
against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .errors import SizeError, ValidationError
from .matching import assign_max_weight
from .queues import QueueState
from .scenario import PolicyParams, Scenario
from .stability import count_allocations, iter_allocations

DEFAULT_ENUMERATION_CAP = 1_000_000


def service_rate_indicator(k: int, prb: int, ch: ChannelRealization,
                           scenario: Scenario) -> int:
    """1 iff UE k decodes its group's stream on (1-based) PRB ``prb``."""
    group = scenario.group_of[k]
    return int(scenario.stream_rates[group] <= ch.rates[k, prb - 1])


def decode_matrix(ch: ChannelRealization, scenario: Scenario) -> np.ndarray:
    """(M, N) 0/1 matrix: entry (k, j) is UE k's service indicator on PRB j+1."""
    required = scenario.stream_rates[scenario.group_of]
    return (ch.rates >= required[:, None]).astype(float)


def weight_mw(i: int, j: int, state: QueueState, ch: ChannelRealization,
              scenario: Scenario) -> float:
    """Max-weight edge weight of group i on (1-based) PRB j: sum of Q_k mu_k."""
    total = 0.0
    for k in scenario.members[i]:
        total += state.q[k] * service_rate_indicator(k, j, ch, scenario)
    return total


def weight_mw_priority(i: int, j: int, state: QueueState, ch: ChannelRealization,
                       scenario: Scenario, params: PolicyParams) -> float:
    """Priority max-weight edge weight: sum of (Q_k + (c_k + 1) s) mu_k."""
    total = 0.0
    for k in scenario.members[i]:
        term = state.q[k] + (state.c[k] + 1.0) * params.s
        total += term * service_rate_indicator(k, j, ch, scenario)
    return total


def _expq_exponents(state: QueueState, scenario: Scenario,
                    params: PolicyParams) -> np.ndarray:
    a = np.broadcast_to(np.asarray(params.a, dtype=float), (scenario.num_ues,))
    divisor = params.qbar_divisor if params.qbar_divisor else scenario.num_ues
    qbar = float(np.sum(a * state.q)) / divisor
    return a * state.q / (params.beta + qbar ** params.eta)


def weight_expq(i: int, j: int, state: QueueState, ch: ChannelRealization,
                scenario: Scenario, params: PolicyParams) -> float:
    """Exponential-rule edge weight: sum of gamma_k mu_k exp(a_k Q_k / (beta + Qbar^eta)).

    This is the unshifted textbook value; it overflows for queue lengths in
    the hundreds. decide() uses the shift-rescaled form instead, which is
    finite for any state and has the same argmax.
    """
    x = _expq_exponents(state, scenario, params)
    gamma = np.broadcast_to(np.asarray(params.gamma, dtype=float),
                            (scenario.num_ues,))
    total = 0.0
    for k in scenario.members[i]:
        total += gamma[k] * service_rate_indicator(k, j, ch, scenario) * math.exp(x[k])
    return total


def weight_matrix(params: PolicyParams, state: QueueState, ch: ChannelRealization,
                  scenario: Scenario, decode: np.ndarray | None = None) -> np.ndarray:
    """(L, N) policy weight matrix for the current sub-frame.

    For expq the exponents share a per-sub-frame shift by their maximum, so
    every entry is the true weight times exp(-max exponent); the positive
    rescaling leaves the matching argmax unchanged while avoiding overflow.
    ``decode`` may pass a precomputed decode_matrix to avoid recomputing it.
    """
    mu = decode_matrix(ch, scenario) if decode is None else decode
    if params.kind == "mw":
        per_ue = state.q.astype(float)
    elif params.kind == "mwp":
        per_ue = state.q + (state.c + 1.0) * params.s
    elif params.kind == "expq":
        x = _expq_exponents(state, scenario, params)
        gamma = np.broadcast_to(np.asarray(params.gamma, dtype=float),
                                (scenario.num_ues,))
        per_ue = gamma * np.exp(x - x.max())
    else:
        raise ValidationError(f"policy kind '{params.kind}' has no weight matrix")
    return scenario.group_onehot @ (per_ue[:, None] * mu)


@dataclass
class RandomizedTable:
    """Sampling table of a randomized stationary policy.

    For each declared channel state (identified by its exact rate matrix) the
    table holds a probability distribution over the feasible allocation
    vectors, typically taken from an LP feasibility witness.
    """

    states: list[np.ndarray]     # (M, N) rate matrices
    allocations: np.ndarray      # (A, L) allocation vectors, 0 = unscheduled
    probs: np.ndarray            # (S, A) rows summing to 1

    def __post_init__(self) -> None:
        self.allocations = np.asarray(self.allocations, dtype=np.int64)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (len(self.states), len(self.allocations)):
            raise ValidationError("randomized table shape mismatch")
        if np.any(self.probs < -1e-12):
            raise ValidationError("randomized table probabilities must be >= 0")
        sums = self.probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > 1e-6):
            raise ValidationError("randomized table rows must each sum to 1")
        self.probs = np.maximum(self.probs, 0.0)
        self.probs /= self.probs.sum(axis=1, keepdims=True)
        self._index = {np.asarray(s, dtype=float).tobytes(): i
                       for i, s in enumerate(self.states)}

    def classify(self, ch: ChannelRealization) -> int:
        key = np.asarray(ch.rates, dtype=float).tobytes()
        try:
            return self._index[key]
        except KeyError:
            raise ValidationError(
                "channel state is not in the randomized policy's declared "
                "alphabet; randomized policies need a small-channel-model run"
            ) from None


def decide_with_value(params: PolicyParams, state: QueueState,
                      ch: ChannelRealization, scenario: Scenario,
                      decode: np.ndarray | None = None
                      ) -> tuple[np.ndarray, float]:
    """Matching-based argmax decision plus its objective value."""
    w = weight_matrix(params, state, ch, scenario, decode)
    rows = w.tolist()
    assignment = assign_max_weight(rows, scenario.num_groups, scenario.num_prbs)
    b = np.zeros(scenario.num_groups, dtype=np.int64)
    total = 0.0
    for group, prb in assignment.items():
        b[group] = prb + 1
        total += rows[group][prb]
    return b, total


def decide(params: PolicyParams, state: QueueState, ch: ChannelRealization,
           scenario: Scenario, rng: np.random.Generator | None = None,
           decode: np.ndarray | None = None) -> np.ndarray:
    """Pick this sub-frame's allocation vector under the configured policy."""
    if params.kind == "randomized":
        table = params.randomized
        if not isinstance(table, RandomizedTable):
            raise ValidationError("randomized policy needs a RandomizedTable")
        if rng is None:
            raise ValidationError("randomized policy needs a random generator")
        sidx = table.classify(ch)
        aidx = rng.choice(len(table.allocations), p=table.probs[sidx])
        return table.allocations[aidx].copy()
    b, _ = decide_with_value(params, state, ch, scenario, decode)
    return b


def brute_force_decide(params: PolicyParams, state: QueueState,
                       ch: ChannelRealization, scenario: Scenario,
                       cap: int = DEFAULT_ENUMERATION_CAP
                       ) -> tuple[np.ndarray, float]:
    """Exhaustive argmax over every feasible allocation vector.

    Independent of the matching route (plain per-UE summation over an
    explicit enumeration); intended as a differential oracle on small
    instances. Returns the first maximizer in lexicographic order together
    with the objective value, on the same scale decide_with_value reports.
    """
    if params.kind not in ("mw", "mwp", "expq"):
        raise ValidationError("brute force supports mw, mwp and expq policies")
    num_groups, num_prbs = scenario.num_groups, scenario.num_prbs
    count = count_allocations(num_groups, num_prbs)
    if count > cap:
        raise SizeError(
            f"{count} feasible allocations exceed the enumeration cap {cap}")

    if params.kind == "mw":
        term = [float(q) for q in state.q]
    elif params.kind == "mwp":
        term = [float(q) + (float(c) + 1.0) * params.s
                for q, c in zip(state.q, state.c)]
    else:
        x = _expq_exponents(state, scenario, params)
        shift = float(np.max(x))
        gamma = np.broadcast_to(np.asarray(params.gamma, dtype=float),
                                (scenario.num_ues,))
        term = [float(g) * math.exp(float(xi) - shift) for g, xi in zip(gamma, x)]

    rates = ch.rates.tolist()
    required = scenario.stream_rates.tolist()
    members = [m.tolist() for m in scenario.members]

    best_b, best_val = None, -1.0
    for b in iter_allocations(num_groups, num_prbs):
        val = 0.0
        for i, prb in enumerate(b):
            if prb:
                need = required[i]
                col = prb - 1
                for k in members[i]:
                    if rates[k][col] >= need:
                        val += term[k]
        if best_b is None or val > best_val:
            best_b, best_val = b, val
    return np.array(best_b, dtype=np.int64), best_val


def serve_from_allocation(b: np.ndarray, ch: ChannelRealization,
                          scenario: Scenario) -> np.ndarray:
    """Per-UE service vector realized by allocation ``b`` in this channel state."""
    mu = np.zeros(scenario.num_ues, dtype=np.int64)
    for i in range(scenario.num_groups):
        prb = int(b[i])
        if prb:
            ms = scenario.members[i]
            mu[ms] = (ch.rates[ms, prb - 1] >= scenario.stream_rates[i])
    return mu


def service_from_decode(b: np.ndarray, decode: np.ndarray,
                        scenario: Scenario) -> np.ndarray:
    """serve_from_allocation when the decode matrix is already available."""
    prb = b[scenario.group_of]
    mu = decode[np.arange(scenario.num_ues), np.maximum(prb - 1, 0)]
    return np.where(prb > 0, mu, 0.0).astype(np.int64)
