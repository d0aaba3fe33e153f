"""LTE-like downlink channel: link budget, shadowing, fast fading, SINR -> CQI -> rate.

Produces, for every sub-frame, the matrix of per-UE per-PRB decodable rates that
drives scheduling decisions. All randomness flows through an explicit
numpy Generator so runs are reproducible bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# 15 SINR decision thresholds (dB), evenly spaced over the range commonly used
# for CQI 1..15 reporting. Fully overridable from the scenario file.
DEFAULT_SINR_THRESHOLDS_DB = tuple(round(-6.7 + 2.1 * i, 1) for i in range(15))

# Spectral efficiency (bits per resource element) of the standard CQI indices.
_CQI_SPECTRAL_EFFICIENCY = (
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547,
)
# One PRB carries 12 subcarriers x 14 OFDM symbols = 168 resource elements per
# sub-frame; rates below are bits per sub-frame per PRB. Index 0 = undecodable.
DEFAULT_RATES_PER_PRB = (0.0,) + tuple(
    float(round(168 * eff)) for eff in _CQI_SPECTRAL_EFFICIENCY
)


@dataclass
class LinkBudget:
    """Radio parameters of the cell. Defaults follow a standard LTE macro setup."""

    bandwidth_hz: float = 20e6
    tx_power_dbm: float = 46.0
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 5.0
    shadowing_std_db: float = 10.0
    cell_radius_km: float = 0.15
    num_prbs: int = 100
    fast_fading: bool = True

    def __post_init__(self) -> None:
        for name in ("bandwidth_hz", "tx_power_dbm", "noise_density_dbm_hz",
                     "noise_figure_db", "shadowing_std_db", "cell_radius_km"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"link budget field {name} must be finite")
        if self.cell_radius_km <= 0:
            raise ValidationError("cell_radius_km must be > 0")
        if self.num_prbs < 1:
            raise ValidationError("num_prbs must be >= 1")
        if self.shadowing_std_db < 0:
            raise ValidationError("shadowing_std_db must be >= 0")

    @property
    def tx_power_per_prb_dbm(self) -> float:
        # transmit power split evenly across PRBs
        return self.tx_power_dbm - 10.0 * np.log10(self.num_prbs)

    @property
    def noise_power_per_prb_dbm(self) -> float:
        prb_bw = self.bandwidth_hz / self.num_prbs
        return self.noise_density_dbm_hz + 10.0 * np.log10(prb_bw)


@dataclass
class CqiTable:
    """SINR -> CQI thresholds and CQI -> per-PRB rate mapping.

    ``sinr_thresholds_db[i]`` is the lowest SINR reported as CQI ``i+1``
    (inclusive bound: SINR equal to a threshold maps up). ``rates_per_prb``
    has 16 entries; index 0 is the undecodable state with rate 0.
    """

    sinr_thresholds_db: np.ndarray = field(
        default_factory=lambda: np.array(DEFAULT_SINR_THRESHOLDS_DB))
    rates_per_prb: np.ndarray = field(
        default_factory=lambda: np.array(DEFAULT_RATES_PER_PRB))

    def __post_init__(self) -> None:
        self.sinr_thresholds_db = np.asarray(self.sinr_thresholds_db, dtype=float)
        self.rates_per_prb = np.asarray(self.rates_per_prb, dtype=float)
        if self.sinr_thresholds_db.shape != (15,):
            raise ValidationError("cqi table needs exactly 15 SINR thresholds")
        if self.rates_per_prb.shape != (16,):
            raise ValidationError("cqi table needs exactly 16 rates (index 0 = rate 0)")
        if np.any(np.diff(self.sinr_thresholds_db) <= 0):
            raise ValidationError("sinr_thresholds_db must be strictly increasing")
        if self.rates_per_prb[0] != 0.0:
            raise ValidationError("rates_per_prb[0] must be 0")
        if np.any(self.rates_per_prb < 0) or np.any(np.diff(self.rates_per_prb) < 0):
            raise ValidationError("rates_per_prb must be nonnegative and nondecreasing")


@dataclass
class ChannelRealization:
    """Per-sub-frame channel state: decodable rate and CQI for every (UE, PRB).

    cqi is None for realizations drawn from an explicit small channel model,
    where rates are given directly rather than through a CQI table.
    """

    rates: np.ndarray            # (M, N) bits per sub-frame per PRB
    cqi: np.ndarray | None = None  # (M, N) ints in 0..15


def path_loss_db(distance_km: float | np.ndarray) -> float | np.ndarray:
    """Distance-dependent path loss: 128.1 + 37.6 log10(d), d in km."""
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0):
        raise ValidationError("path loss requires distance > 0 km")
    out = 128.1 + 37.6 * np.log10(d)
    return float(out) if out.ndim == 0 else out


def sinr_to_cqi(sinr_db: float | np.ndarray, table: CqiTable) -> int | np.ndarray:
    """Map SINR to CQI 0..15: the largest index whose threshold is <= SINR."""
    idx = np.searchsorted(table.sinr_thresholds_db, sinr_db, side="right")
    return int(idx) if np.ndim(sinr_db) == 0 else idx


class ChannelSampler:
    """Draws per-sub-frame channel realizations for a fixed set of UEs.

    Path loss is static (fixed UE positions), log-normal shadowing is drawn
    once per UE at construction time (slow fading, fixed for the whole run),
    and Rayleigh fast fading is drawn independently per (UE, PRB, sub-frame)
    unless disabled in the link budget.
    """

    def __init__(self, scenario, budget: LinkBudget, table: CqiTable,
                 rng: np.random.Generator):
        self.budget = budget
        self.table = table
        self.rng = rng
        self.num_ues = scenario.num_ues
        self.num_prbs = budget.num_prbs
        dist = np.hypot(scenario.ue_positions[:, 0], scenario.ue_positions[:, 1])
        dist = np.maximum(dist, 1e-4)  # guard UEs placed at the exact origin
        self.shadow_db = rng.normal(0.0, budget.shadowing_std_db, size=self.num_ues)
        # static part of the per-UE SINR; fading is the only per-sub-frame term
        self.base_sinr_db = (
            budget.tx_power_per_prb_dbm
            - path_loss_db(dist)
            - self.shadow_db
            - budget.noise_power_per_prb_dbm
            - budget.noise_figure_db
        )

    def sample(self, t: int) -> ChannelRealization:
        del t  # fading is i.i.d. across sub-frames; kept for interface clarity
        shape = (self.num_ues, self.num_prbs)
        if self.budget.fast_fading:
            # Rayleigh fading: power |h|^2 ~ Exp(1), expressed in dB
            fade_db = 10.0 * np.log10(self.rng.exponential(1.0, size=shape))
            sinr = self.base_sinr_db[:, None] + fade_db
        else:
            sinr = np.broadcast_to(self.base_sinr_db[:, None], shape)
        cqi = np.searchsorted(self.table.sinr_thresholds_db, sinr, side="right")
        rates = self.table.rates_per_prb[cqi]
        return ChannelRealization(rates=rates, cqi=cqi)


def sample_channel(scenario, budget: LinkBudget, table: CqiTable,
                   rng: np.random.Generator, t: int) -> ChannelRealization:
    """One-shot convenience wrapper: builds a sampler and draws sub-frame ``t``.

    Shadowing is drawn from ``rng`` here, so repeated calls with a fresh
    generator in the same state reproduce the same realization. Long runs
    should hold one :class:`ChannelSampler` so shadowing stays fixed.
    """
    return ChannelSampler(scenario, budget, table, rng).sample(t)
