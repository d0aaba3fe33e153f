"""Token queues: Bernoulli token arrivals, service departures, priority counters.

Every UE owns a virtual token queue. A token arrives each sub-frame with
probability lambda_k = 1 - loss_tolerance_k and departs when the UE is
successfully served. Keeping these queues stable is equivalent to meeting
the UE loss requirements, which is what the scheduling policies exploit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class QueueState:
    """Queue lengths and priority counters at the start of a sub-frame."""

    q: np.ndarray  # (M,) nonnegative token counts
    c: np.ndarray  # (M,) priority counters in 0..kappa
    t: int = 0

    @classmethod
    def initial(cls, num_ues: int) -> "QueueState":
        return cls(q=np.zeros(num_ues, dtype=np.int64),
                   c=np.zeros(num_ues, dtype=np.int64), t=0)


def draw_arrivals(lam: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(lambda_k) token arrivals for one sub-frame."""
    return (rng.random(lam.shape[0]) < lam).astype(np.int64)


def update_priority(c_prev: np.ndarray, mu_prev: np.ndarray, kappa: int) -> np.ndarray:
    """Counter update: reset to 0 on service, else count up, capped at kappa.

    Counters track service events, not departures: a UE served with an empty
    queue still resets to 0.
    """
    return np.where(mu_prev > 0, 0, np.minimum(c_prev + 1, kappa))


def apply_service(state: QueueState, arrivals: np.ndarray, mu: np.ndarray,
                  kappa: int = 1) -> QueueState:
    """Advance the queue system by one sub-frame.

    A token arriving in sub-frame t can be consumed by service in the same
    sub-frame: q' = max(q + A - mu, 0).
    """
    q_next = np.maximum(state.q + arrivals - mu, 0)
    return QueueState(q=q_next, c=update_priority(state.c, mu, kappa), t=state.t + 1)
