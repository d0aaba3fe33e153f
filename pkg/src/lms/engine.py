"""Discrete-time simulation loop and metric accumulation.

One run executes, per sub-frame: channel draw, token arrivals, policy
decision, service realization, queue update. Everything is driven by
independent seeded random streams (channel / arrivals / policy), so runs
are reproducible and different policies compared under the same seed consume
identical channel and arrival randomness.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from typing import Callable, TextIO

import numpy as np

from .channel import ChannelRealization, ChannelSampler, CqiTable, LinkBudget
from .errors import ValidationError
from .policies import decide, decode_matrix, service_from_decode
from .queues import QueueState, apply_service, draw_arrivals
from .scenario import RunConfig, Scenario, arrival_rates
from .stability import SmallChannelModel

SUBFRAMES_PER_SECOND = 1000  # 1 ms sub-frames


def ema_update(prev: float, sample: float, alpha: float) -> float:
    """One step of exponential averaging: alpha * sample + (1 - alpha) * prev."""
    return alpha * sample + (1.0 - alpha) * prev


def compute_burstiness(served: np.ndarray) -> tuple[int, float]:
    """Burstiness statistics of a per-UE binary service history.

    Returns the longest consecutive unserved streak and the standard
    deviation of per-second loss percentages (complete 1000 sub-frame
    buckets only; 0.0 when the series is shorter than one bucket).
    """
    served = np.asarray(served)
    if served.size == 0:
        raise ValidationError("service history must be nonempty")
    longest = current = 0
    for v in served:
        if v:
            current = 0
        else:
            current += 1
            if current > longest:
                longest = current
    buckets = served.size // SUBFRAMES_PER_SECOND
    if buckets == 0:
        return longest, 0.0
    trimmed = served[:buckets * SUBFRAMES_PER_SECOND]
    per_sec = 100.0 * (1.0 - trimmed.reshape(buckets, SUBFRAMES_PER_SECOND)
                       .mean(axis=1))
    return longest, float(np.std(per_sec))


class SmallModelSampler:
    """Channel source drawing i.i.d. states from an explicit finite alphabet."""

    def __init__(self, model: SmallChannelModel, rng: np.random.Generator):
        self.model = model
        self.rng = rng
        self._cum = np.cumsum(model.probs).tolist()

    def sample(self, t: int) -> ChannelRealization:
        del t
        u = self.rng.random()
        idx = 0
        for idx, threshold in enumerate(self._cum):
            if u < threshold:
                break
        return ChannelRealization(rates=self.model.states[idx], cqi=None)


@dataclass
class RunMetrics:
    """Aggregate per-UE statistics of one simulated run."""

    horizon: int
    unserved_fraction: np.ndarray   # fraction of sub-frames with mu_k = 0
    eq1_loss_fraction: np.ndarray   # scheduled-but-undecodable fraction only
    satisfied: np.ndarray           # unserved_fraction <= loss tolerance
    max_unserved_run: np.ndarray    # longest consecutive unserved streak
    per_second_loss: np.ndarray     # (seconds, M) loss fractions per bucket
    ema_loss_series: np.ndarray     # (seconds, M) exponentially averaged losses
    mean_queue_series: np.ndarray   # (seconds,) mean over UEs and sub-frames
    per_second_loss_std: np.ndarray  # per-UE std of per-second loss percentages
    final_queue_lengths: np.ndarray
    served_count: np.ndarray
    queue_trace: np.ndarray | None  # (horizon, M) int32, when recorded


TraceSink = Callable[[str], None]


def _as_sink(sink: TextIO | TraceSink | None) -> TraceSink | None:
    if sink is None:
        return None
    if callable(sink):
        return sink
    return lambda line: sink.write(line + "\n")


def run(scenario: Scenario, budget: LinkBudget, table: CqiTable, cfg: RunConfig,
        channel_model: SmallChannelModel | None = None,
        trace_sink: TextIO | TraceSink | None = None) -> RunMetrics:
    """Simulate ``cfg.horizon`` sub-frames and return aggregate metrics.

    When ``channel_model`` is given it replaces the link-budget channel as
    the per-sub-frame rate source. Trace records go to ``trace_sink`` as
    JSON lines at the detail level selected in the config.
    """
    m = scenario.num_ues
    if channel_model is not None:
        if channel_model.states[0].shape != (m, scenario.num_prbs):
            raise ValidationError(
                "channel model state shape does not match (num_ues, num_prbs)")
    elif budget.num_prbs != scenario.num_prbs:
        raise ValidationError(
            "link budget num_prbs differs from the scenario's num_prbs")
    lam = arrival_rates(scenario)
    sink = _as_sink(trace_sink)

    root = np.random.SeedSequence(cfg.seed)
    ss_channel, ss_arrivals, ss_policy = root.spawn(3)
    if channel_model is not None:
        sampler = SmallModelSampler(channel_model, np.random.default_rng(ss_channel))
    else:
        sampler = ChannelSampler(scenario, budget, table,
                                 np.random.default_rng(ss_channel))
    rng_arrivals = np.random.default_rng(ss_arrivals)
    rng_policy = np.random.default_rng(ss_policy)

    state = QueueState.initial(m)
    params = cfg.policy
    kappa = params.kappa

    served_count = np.zeros(m, dtype=np.int64)
    eq1_count = np.zeros(m, dtype=np.int64)
    cur_run = np.zeros(m, dtype=np.int64)
    max_run = np.zeros(m, dtype=np.int64)
    bucket_unserved = np.zeros(m, dtype=np.int64)
    bucket_qsum = 0
    ema = np.zeros(m)
    per_second: list[np.ndarray] = []
    ema_series: list[np.ndarray] = []
    mean_q_series: list[float] = []
    queue_trace = (np.zeros((cfg.horizon, m), dtype=np.int32)
                   if cfg.keep_queue_trace else None)
    group_of = scenario.group_of
    trace_per_subframe = sink is not None and cfg.trace_detail == "per_subframe"
    trace_per_second = sink is not None and cfg.trace_detail == "per_second"

    for t in range(cfg.horizon):
        ch = sampler.sample(t)
        dec = decode_matrix(ch, scenario)
        arrivals = draw_arrivals(lam, rng_arrivals)
        b = decide(params, state, ch, scenario, rng_policy, decode=dec)
        mu = service_from_decode(b, dec, scenario)

        if queue_trace is not None:
            queue_trace[t] = state.q
        served_count += mu
        unserved = 1 - mu
        eq1_count += (b[group_of] != 0) & (mu == 0)
        cur_run = (cur_run + 1) * unserved
        np.maximum(max_run, cur_run, out=max_run)
        bucket_unserved += unserved
        bucket_qsum += int(state.q.sum())

        if trace_per_subframe:
            sink(json.dumps({
                "t": t, "b": b.tolist(), "mu": mu.tolist(),
                "q": state.q.tolist(), "a": arrivals.tolist(),
                "ch": zlib.crc32(np.ascontiguousarray(ch.rates).tobytes()),
            }, separators=(",", ":")))

        if (t + 1) % SUBFRAMES_PER_SECOND == 0:
            loss = bucket_unserved / SUBFRAMES_PER_SECOND
            ema = cfg.ema_alpha * loss + (1.0 - cfg.ema_alpha) * ema
            per_second.append(loss)
            ema_series.append(ema.copy())
            mean_q_series.append(bucket_qsum / (SUBFRAMES_PER_SECOND * m))
            if trace_per_second:
                sink(json.dumps({
                    "sec": (t + 1) // SUBFRAMES_PER_SECOND,
                    "loss": loss.tolist(),
                    "ema": ema.tolist(),
                    "mean_q": mean_q_series[-1],
                }, separators=(",", ":")))
            bucket_unserved = np.zeros(m, dtype=np.int64)
            bucket_qsum = 0

        state = apply_service(state, arrivals, mu, kappa)

    horizon = cfg.horizon
    unserved = (horizon - served_count) / horizon
    per_second_arr = (np.array(per_second) if per_second
                      else np.zeros((0, m)))
    loss_std = (100.0 * per_second_arr.std(axis=0) if per_second
                else np.zeros(m))
    return RunMetrics(
        horizon=horizon,
        unserved_fraction=unserved,
        eq1_loss_fraction=eq1_count / horizon,
        satisfied=unserved <= scenario.loss_tolerance,
        max_unserved_run=max_run,
        per_second_loss=per_second_arr,
        ema_loss_series=(np.array(ema_series) if ema_series
                         else np.zeros((0, m))),
        mean_queue_series=np.array(mean_q_series),
        per_second_loss_std=loss_std,
        final_queue_lengths=state.q.copy(),
        served_count=served_count,
        queue_trace=queue_trace,
    )
