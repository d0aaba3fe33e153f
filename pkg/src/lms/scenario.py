"""Scenario definition and config-file ingestion.

A scenario bundles the cell population: UEs, their multicast group
memberships, per-group stream rates, and per-UE loss tolerances. Stream
rates use the same unit as the CQI table (bits per sub-frame per PRB) so
"group i decodable on PRB j" is the direct comparison R_i <= r_kj.

The on-disk format is an INI file with sections [cell], [cqi_table],
[groups], [ues], [policy] and [run]; see README for the field reference.
Unknown sections or keys are rejected.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .channel import CqiTable, LinkBudget
from .errors import ValidationError

_TRACE_LEVELS = ("none", "per_second", "per_subframe")
_POLICY_KINDS = ("mw", "mwp", "expq", "randomized")


@dataclass(eq=False)
class Scenario:
    """Immutable description of UEs, groups, rates and loss tolerances."""

    num_ues: int
    num_groups: int
    num_prbs: int
    group_of: np.ndarray       # (M,) 0-based group index per UE
    stream_rates: np.ndarray   # (L,) bits per sub-frame per PRB
    loss_tolerance: np.ndarray  # (M,) values in [0, 1)
    ue_positions: np.ndarray   # (M, 2) km
    seed: int = 0

    def __post_init__(self) -> None:
        self.group_of = np.asarray(self.group_of, dtype=np.int64)
        self.stream_rates = np.asarray(self.stream_rates, dtype=float)
        self.loss_tolerance = np.asarray(self.loss_tolerance, dtype=float)
        self.ue_positions = np.asarray(self.ue_positions, dtype=float)
        self.validate()
        # per-group member structures, used on every scheduling decision
        self.members = [np.flatnonzero(self.group_of == i) for i in range(self.num_groups)]
        self.group_onehot = np.zeros((self.num_groups, self.num_ues))
        self.group_onehot[self.group_of, np.arange(self.num_ues)] = 1.0

    def validate(self) -> None:
        m, l = self.num_ues, self.num_groups
        if m < 1 or l < 1 or self.num_prbs < 1:
            raise ValidationError("num_ues, num_groups and num_prbs must be >= 1")
        if self.group_of.shape != (m,):
            raise ValidationError("group_of: need one group index per UE")
        if np.any(self.group_of < 0) or np.any(self.group_of >= l):
            bad = int(np.flatnonzero((self.group_of < 0) | (self.group_of >= l))[0])
            raise ValidationError(f"group_of: UE {bad} assigned to nonexistent group")
        present = np.unique(self.group_of)
        if len(present) != l:
            missing = sorted(set(range(l)) - set(present.tolist()))
            raise ValidationError(f"group {missing[0] + 1} has no members")
        if self.stream_rates.shape != (l,):
            raise ValidationError("stream_rates: need one rate per group")
        if np.any(self.stream_rates <= 0):
            raise ValidationError("stream_rates must be > 0")
        if self.loss_tolerance.shape != (m,):
            raise ValidationError("loss_tolerance: need one value per UE")
        if np.any(self.loss_tolerance < 0) or np.any(self.loss_tolerance >= 1):
            raise ValidationError("loss_tolerance values must lie in [0, 1)")
        if self.ue_positions.shape != (m, 2):
            raise ValidationError("ue_positions: need an (x, y) pair per UE")

    def check_positions_within(self, cell_radius_km: float) -> None:
        dist = np.hypot(self.ue_positions[:, 0], self.ue_positions[:, 1])
        if np.any(dist > cell_radius_km + 1e-12):
            bad = int(np.argmax(dist))
            raise ValidationError(
                f"ue_positions: UE {bad} lies {dist[bad]:.4f} km from the origin, "
                f"outside the {cell_radius_km} km cell radius")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.num_ues == other.num_ues
            and self.num_groups == other.num_groups
            and self.num_prbs == other.num_prbs
            and self.seed == other.seed
            and np.array_equal(self.group_of, other.group_of)
            and np.array_equal(self.stream_rates, other.stream_rates)
            and np.array_equal(self.loss_tolerance, other.loss_tolerance)
            and np.array_equal(self.ue_positions, other.ue_positions)
        )


def arrival_rates(scenario: Scenario) -> np.ndarray:
    """Token arrival rate per UE: lambda_k = 1 - loss_tolerance_k."""
    return 1.0 - scenario.loss_tolerance


@dataclass
class PolicyParams:
    """Constants selecting and parameterizing a scheduling policy.

    kind is one of mw, mwp (priority max-weight), expq, randomized.
    s and kappa drive the priority boost of mwp; gamma, a, beta, eta and
    qbar_divisor parameterize expq; randomized policies carry their sampling
    table separately (see policies.RandomizedTable).
    """

    kind: str = "mw"
    s: float = 1.0
    kappa: int = 1
    gamma: float | np.ndarray = 1.0
    a: float | np.ndarray = 1.0
    beta: float = 1.0
    eta: float = 0.5
    qbar_divisor: int | None = None
    randomized: object | None = None

    def __post_init__(self) -> None:
        if self.kind not in _POLICY_KINDS:
            raise ValidationError(f"unknown policy kind '{self.kind}'")
        if self.s <= 0 or self.kappa < 1 or self.beta <= 0:
            raise ValidationError("policy constants s, kappa, beta must be positive")
        if not 0 < self.eta < 1:
            raise ValidationError("policy constant eta must lie in (0, 1)")
        if np.any(np.asarray(self.gamma) <= 0) or np.any(np.asarray(self.a) <= 0):
            raise ValidationError("policy constants gamma and a must be positive")
        if self.qbar_divisor is not None and self.qbar_divisor < 1:
            raise ValidationError("qbar_divisor must be >= 1")


@dataclass
class RunConfig:
    """Execution settings for one simulation run."""

    horizon: int = 100_000
    seed: int = 0
    policy: PolicyParams = field(default_factory=PolicyParams)
    trace_detail: str = "none"
    ema_alpha: float = 0.05
    keep_queue_trace: bool = True

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if not 0 < self.ema_alpha < 1:
            raise ValidationError("ema_alpha must lie in (0, 1)")
        if self.trace_detail not in _TRACE_LEVELS:
            raise ValidationError(f"trace_detail must be one of {_TRACE_LEVELS}")


@dataclass
class SimConfig:
    """Everything parsed from one scenario file."""

    scenario: Scenario
    budget: LinkBudget
    cqi_table: CqiTable
    policy: PolicyParams
    run: RunConfig
    channel_model_path: str | None = None  # small-model JSON, relative to the file


_SECTION_KEYS = {
    "cell": {"bandwidth_hz", "tx_power_dbm", "noise_density_dbm_hz",
             "noise_figure_db", "shadowing_std_db", "cell_radius_km",
             "num_prbs", "fast_fading"},
    "cqi_table": {"sinr_thresholds_db", "rates_per_prb"},
    "groups": {"count", "stream_rates"},
    "ues": {"count", "group", "loss_tolerance", "x_km", "y_km"},
    "policy": {"kind", "s", "kappa", "gamma", "a", "beta", "eta",
               "qbar_divisor", "model", "delta"},
    "run": {"horizon", "seed", "trace", "ema_alpha", "channel_model"},
}


def _floats(raw: str) -> np.ndarray:
    return np.array([float(v) for v in raw.replace(",", " ").split()])


def _ints(raw: str) -> np.ndarray:
    return np.array([int(v) for v in raw.replace(",", " ").split()])


def _bool(raw: str) -> bool:
    val = raw.strip().lower()
    if val in ("true", "yes", "1", "on"):
        return True
    if val in ("false", "no", "0", "off"):
        return False
    raise ValidationError(f"expected a boolean, got '{raw}'")


def parse_config(text: str, name: str = "<config>") -> SimConfig:
    """Parse and validate scenario file contents."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=name)
    except configparser.Error as exc:
        raise ValidationError(f"{name}: {exc}") from exc

    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ValidationError(f"{name}: unknown section [{section}]")
        unknown = set(cp[section]) - _SECTION_KEYS[section]
        if unknown:
            raise ValidationError(
                f"{name}: unknown key '{sorted(unknown)[0]}' in section [{section}]")
    for required in ("groups", "ues"):
        if required not in cp:
            raise ValidationError(f"{name}: missing required section [{required}]")

    cell = cp["cell"] if "cell" in cp else {}
    try:
        budget = LinkBudget(
            bandwidth_hz=float(cell.get("bandwidth_hz", 20e6)),
            tx_power_dbm=float(cell.get("tx_power_dbm", 46.0)),
            noise_density_dbm_hz=float(cell.get("noise_density_dbm_hz", -174.0)),
            noise_figure_db=float(cell.get("noise_figure_db", 5.0)),
            shadowing_std_db=float(cell.get("shadowing_std_db", 10.0)),
            cell_radius_km=float(cell.get("cell_radius_km", 0.15)),
            num_prbs=int(cell.get("num_prbs", 100)),
            fast_fading=_bool(cell.get("fast_fading", "true")),
        )
    except ValueError as exc:
        raise ValidationError(f"{name}: [cell] {exc}") from exc

    if "cqi_table" in cp:
        sec = cp["cqi_table"]
        kwargs = {}
        if "sinr_thresholds_db" in sec:
            kwargs["sinr_thresholds_db"] = _floats(sec["sinr_thresholds_db"])
        if "rates_per_prb" in sec:
            kwargs["rates_per_prb"] = _floats(sec["rates_per_prb"])
        table = CqiTable(**kwargs)
    else:
        table = CqiTable()

    groups = cp["groups"]
    if "count" not in groups or "stream_rates" not in groups:
        raise ValidationError(f"{name}: [groups] needs 'count' and 'stream_rates'")
    num_groups = int(groups["count"])
    stream_rates = _floats(groups["stream_rates"])

    ues = cp["ues"]
    if "count" not in ues or "group" not in ues or "loss_tolerance" not in ues:
        raise ValidationError(
            f"{name}: [ues] needs 'count', 'group' and 'loss_tolerance'")
    num_ues = int(ues["count"])
    group_of = _ints(ues["group"]) - 1  # file uses 1-based group ids
    loss_tolerance = _floats(ues["loss_tolerance"])

    run_sec = cp["run"] if "run" in cp else {}
    seed = int(run_sec.get("seed", 0))

    if ("x_km" in ues) != ("y_km" in ues):
        raise ValidationError(f"{name}: [ues] x_km and y_km must be given together")
    if "x_km" in ues:
        x, y = _floats(ues["x_km"]), _floats(ues["y_km"])
        if x.shape != (num_ues,) or y.shape != (num_ues,):
            raise ValidationError(f"{name}: [ues] x_km/y_km need one value per UE")
        positions = np.column_stack([x, y])
    else:
        positions = _place_uniform(num_ues, budget.cell_radius_km, seed)

    scenario = Scenario(
        num_ues=num_ues, num_groups=num_groups, num_prbs=budget.num_prbs,
        group_of=group_of, stream_rates=stream_rates,
        loss_tolerance=loss_tolerance, ue_positions=positions, seed=seed)
    scenario.check_positions_within(budget.cell_radius_km)

    pol_sec = cp["policy"] if "policy" in cp else {}

    def _scalar_or_vector(key: str, default: float):
        if key not in pol_sec:
            return default
        vals = _floats(pol_sec[key])
        return float(vals[0]) if vals.size == 1 else vals

    qdiv = pol_sec.get("qbar_divisor", "").strip() if "policy" in cp else ""
    policy = PolicyParams(
        kind=pol_sec.get("kind", "mw"),
        s=float(pol_sec.get("s", 1.0)),
        kappa=int(pol_sec.get("kappa", 1)),
        gamma=_scalar_or_vector("gamma", 1.0),
        a=_scalar_or_vector("a", 1.0),
        beta=float(pol_sec.get("beta", 1.0)),
        eta=float(pol_sec.get("eta", 0.5)),
        qbar_divisor=int(qdiv) if qdiv else None,
    )

    run = RunConfig(
        horizon=int(float(run_sec.get("horizon", 100_000))),
        seed=seed,
        policy=policy,
        trace_detail=run_sec.get("trace", "none").replace("-", "_"),
        ema_alpha=float(run_sec.get("ema_alpha", 0.05)),
    )

    return SimConfig(
        scenario=scenario, budget=budget, cqi_table=table, policy=policy, run=run,
        channel_model_path=run_sec.get("channel_model") if "run" in cp else None)


def load_config(path: str | Path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_config(text, name=str(path))


def load_scenario(path: str | Path) -> Scenario:
    """Load just the UE/group scenario from a config file."""
    return load_config(path).scenario


def _place_uniform(m: int, radius_km: float, seed: int) -> np.ndarray:
    """Place UEs uniformly at random in the cell disk, deterministically per seed."""
    rng = np.random.default_rng(seed)
    r = radius_km * np.sqrt(rng.random(m))
    theta = 2 * np.pi * rng.random(m)
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in np.asarray(values, dtype=float))


def serialize_config(cfg: SimConfig) -> str:
    """Render a SimConfig back to the INI format accepted by parse_config.

    Placed positions are written out explicitly, so a load/serialize/load
    round trip yields an identical Scenario.
    """
    b, s, p, r = cfg.budget, cfg.scenario, cfg.policy, cfg.run
    out = io.StringIO()
    out.write("[cell]\n")
    out.write(f"bandwidth_hz = {b.bandwidth_hz!r}\n")
    out.write(f"tx_power_dbm = {b.tx_power_dbm!r}\n")
    out.write(f"noise_density_dbm_hz = {b.noise_density_dbm_hz!r}\n")
    out.write(f"noise_figure_db = {b.noise_figure_db!r}\n")
    out.write(f"shadowing_std_db = {b.shadowing_std_db!r}\n")
    out.write(f"cell_radius_km = {b.cell_radius_km!r}\n")
    out.write(f"num_prbs = {b.num_prbs}\n")
    out.write(f"fast_fading = {str(b.fast_fading).lower()}\n\n")

    out.write("[cqi_table]\n")
    out.write(f"sinr_thresholds_db = {_fmt(cfg.cqi_table.sinr_thresholds_db)}\n")
    out.write(f"rates_per_prb = {_fmt(cfg.cqi_table.rates_per_prb)}\n\n")

    out.write("[groups]\n")
    out.write(f"count = {s.num_groups}\n")
    out.write(f"stream_rates = {_fmt(s.stream_rates)}\n\n")

    out.write("[ues]\n")
    out.write(f"count = {s.num_ues}\n")
    out.write(f"group = {', '.join(str(int(g) + 1) for g in s.group_of)}\n")
    out.write(f"loss_tolerance = {_fmt(s.loss_tolerance)}\n")
    out.write(f"x_km = {_fmt(s.ue_positions[:, 0])}\n")
    out.write(f"y_km = {_fmt(s.ue_positions[:, 1])}\n\n")

    out.write("[policy]\n")
    out.write(f"kind = {p.kind}\n")
    out.write(f"s = {p.s!r}\n")
    out.write(f"kappa = {p.kappa}\n")
    out.write(f"gamma = {_fmt(np.atleast_1d(p.gamma))}\n")
    out.write(f"a = {_fmt(np.atleast_1d(p.a))}\n")
    out.write(f"beta = {p.beta!r}\n")
    out.write(f"eta = {p.eta!r}\n")
    if p.qbar_divisor is not None:
        out.write(f"qbar_divisor = {p.qbar_divisor}\n")
    out.write("\n[run]\n")
    out.write(f"horizon = {r.horizon}\n")
    out.write(f"seed = {r.seed}\n")
    out.write(f"trace = {r.trace_detail}\n")
    out.write(f"ema_alpha = {r.ema_alpha!r}\n")
    if cfg.channel_model_path:
        out.write(f"channel_model = {cfg.channel_model_path}\n")
    return out.getvalue()


def scale_arrivals(scenario: Scenario, factor: float) -> Scenario:
    """Return a copy whose arrival rates are scaled by ``factor`` (capped at 1)."""
    lam = np.minimum(factor * (1.0 - scenario.loss_tolerance), 1.0)
    return replace(scenario, loss_tolerance=1.0 - lam)
