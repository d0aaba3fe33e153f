"""Command-line entry point.

Subcommands: run (single scenario), compare (all three policies under common
random numbers), verify-matching (matching vs brute-force differential
suite), stability-check (LP margin oracle), bench (matching vs enumeration
timing), match (one-shot matching on a matrix file), emit-defaults (write a
template scenario).

Every run produces a self-contained directory: a copy of the scenario file,
CSV metrics/series, optional trace, and a manifest sufficient to reproduce
the run. Output roots default to $LMS_OUT_DIR or ./runs.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .engine import RunMetrics, run
from .errors import SizeError, ValidationError
from .matching import max_weight_matching
from .policies import (RandomizedTable, brute_force_decide, decide_with_value)
from .queues import QueueState
from .scenario import (PolicyParams, SimConfig, arrival_rates, load_config,
                       serialize_config)
from .stability import (SmallChannelModel, check_witness, empirical_stability,
                        load_small_model, lp_delta_feasible)

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3

POLICY_CHOICES = ("mw", "mwp", "expq", "randomized")


def _out_root(arg: str | None) -> Path:
    return Path(arg or os.environ.get("LMS_OUT_DIR", "runs"))


def _load(args) -> tuple[SimConfig, SmallChannelModel | None]:
    cfg = load_config(args.scenario)
    model = None
    if cfg.channel_model_path:
        model_path = Path(args.scenario).parent / cfg.channel_model_path
        model = load_small_model(model_path)
    return cfg, model


def _apply_overrides(cfg: SimConfig, args, model) -> SimConfig:
    if getattr(args, "policy", None):
        cfg.policy.kind = args.policy
        cfg.run.policy = cfg.policy
    if getattr(args, "horizon", None):
        cfg.run.horizon = args.horizon
    if getattr(args, "trace", None):
        cfg.run.trace_detail = args.trace.replace("-", "_")
    if cfg.policy.kind == "randomized":
        if model is None:
            raise ValidationError(
                "randomized policy needs a channel_model in [run]")
        delta = getattr(args, "delta", None) or 0.05
        sol = lp_delta_feasible(model, arrival_rates(cfg.scenario), delta,
                                cfg.scenario)
        if not sol.feasible:
            raise ValidationError(
                f"randomized policy: LP margin {delta} infeasible "
                f"(achievable {sol.achieved_delta:.4f})")
        cfg.policy.randomized = RandomizedTable(
            states=model.states, allocations=sol.allocations, probs=sol.weights)
    return cfg


def _write_metrics_csv(path: Path, cfg: SimConfig, metrics: RunMetrics) -> None:
    s = cfg.scenario
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ue", "group", "x_km", "y_km", "loss_tolerance",
                    "arrival_rate", "unserved_fraction", "eq1_loss_fraction",
                    "satisfied", "max_unserved_run", "per_second_loss_std",
                    "final_queue"])
        lam = arrival_rates(s)
        for k in range(s.num_ues):
            w.writerow([
                k, int(s.group_of[k]) + 1,
                repr(float(s.ue_positions[k, 0])),
                repr(float(s.ue_positions[k, 1])),
                repr(float(s.loss_tolerance[k])), repr(float(lam[k])),
                repr(float(metrics.unserved_fraction[k])),
                repr(float(metrics.eq1_loss_fraction[k])),
                int(metrics.satisfied[k]),
                int(metrics.max_unserved_run[k]),
                repr(float(metrics.per_second_loss_std[k])),
                int(metrics.final_queue_lengths[k]),
            ])


def _write_series_csv(path: Path, metrics: RunMetrics, policy: str) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["second", "policy", "ue", "loss", "ema"])
        for sec in range(metrics.per_second_loss.shape[0]):
            for k in range(metrics.per_second_loss.shape[1]):
                w.writerow([sec + 1, policy, k,
                            repr(float(metrics.per_second_loss[sec, k])),
                            repr(float(metrics.ema_loss_series[sec, k]))])


def _run_one(cfg: SimConfig, model, out_dir: Path, policy_label: str,
             seed: int) -> RunMetrics:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.run.seed = seed
    trace_file = None
    sink = None
    if cfg.run.trace_detail != "none":
        trace_file = (out_dir / "trace.ndjson").open("w")
        sink = trace_file
    try:
        metrics = run(cfg.scenario, cfg.budget, cfg.cqi_table, cfg.run,
                      channel_model=model, trace_sink=sink)
    finally:
        if trace_file is not None:
            trace_file.close()
    _write_metrics_csv(out_dir / "metrics.csv", cfg, metrics)
    _write_series_csv(out_dir / "series.csv", metrics, policy_label)
    verdict = None
    if metrics.queue_trace is not None and cfg.run.horizon >= 10_000:
        verdict = empirical_stability(metrics.queue_trace).verdict
    summary = {
        "policy": policy_label,
        "seed": seed,
        "horizon": cfg.run.horizon,
        "all_satisfied": bool(metrics.satisfied.all()),
        "stability_verdict": verdict,
        "max_unserved_run": int(metrics.max_unserved_run.max()),
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    return metrics


def _manifest(out_dir: Path, args_dict: dict, seeds: list[int],
              wall_time: float) -> None:
    manifest = {
        "tool": "lms",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": {k: v for k, v in args_dict.items()
                 if k not in ("func", "out_dir")},
        "seeds": seeds,
        "wall_time_s": round(wall_time, 3),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def _seeds(args, default_seed: int) -> list[int]:
    if getattr(args, "seeds", None):
        return [int(v) for v in args.seeds.split(",")]
    if getattr(args, "seed", None) is not None:
        return [args.seed]
    return [default_seed]


def cmd_run(args) -> int:
    t0 = time.perf_counter()
    cfg, model = _load(args)
    cfg = _apply_overrides(cfg, args, model)
    seeds = _seeds(args, cfg.run.seed)
    root = _out_root(args.out_dir)
    stem = Path(args.scenario).stem
    base = root / f"run-{stem}-{cfg.policy.kind}"
    base.mkdir(parents=True, exist_ok=True)
    (base / "config.cfg").write_text(serialize_config(cfg))
    rows = []
    for seed in seeds:
        out = base / f"seed-{seed}"
        metrics = _run_one(cfg, model, out, cfg.policy.kind, seed)
        rows.append((seed, bool(metrics.satisfied.all()),
                     float(metrics.unserved_fraction.max())))
        print(f"seed {seed}: all_satisfied={rows[-1][1]} "
              f"max_unserved={rows[-1][2]:.4f}")
    with (base / "batch_summary.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "all_satisfied", "max_unserved_fraction"])
        for row in rows:
            w.writerow([row[0], int(row[1]), repr(row[2])])
    _manifest(base, vars(args) | {"subcommand": "run"}, seeds,
              time.perf_counter() - t0)
    print(f"wrote {base}")
    return EXIT_OK


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    cfg, model = _load(args)
    seeds = _seeds(args, cfg.run.seed)
    root = _out_root(args.out_dir)
    stem = Path(args.scenario).stem
    base = root / f"compare-{stem}"
    base.mkdir(parents=True, exist_ok=True)
    (base / "config.cfg").write_text(serialize_config(cfg))
    policies = ("mw", "mwp", "expq")
    seed = seeds[0]
    if getattr(args, "horizon", None):
        cfg.run.horizon = args.horizon
    if getattr(args, "trace", None):
        cfg.run.trace_detail = args.trace.replace("-", "_")

    results: dict[str, RunMetrics] = {}
    for kind in policies:
        cfg.policy.kind = kind
        cfg.run.policy = cfg.policy
        results[kind] = _run_one(cfg, model, base / kind, kind, seed)

    s = cfg.scenario
    with (base / "side_by_side.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        header = ["ue", "group", "loss_tolerance"]
        for kind in policies:
            header += [f"unserved_{kind}", f"satisfied_{kind}",
                       f"max_run_{kind}"]
        w.writerow(header)
        for k in range(s.num_ues):
            row = [k, int(s.group_of[k]) + 1, repr(float(s.loss_tolerance[k]))]
            for kind in policies:
                met = results[kind]
                row += [repr(float(met.unserved_fraction[k])),
                        int(met.satisfied[k]), int(met.max_unserved_run[k])]
            w.writerow(row)

    with (base / "series_all.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["second", "policy", "ue", "loss", "ema"])
        for kind in policies:
            met = results[kind]
            for sec in range(met.per_second_loss.shape[0]):
                for k in range(s.num_ues):
                    w.writerow([sec + 1, kind, k,
                                repr(float(met.per_second_loss[sec, k])),
                                repr(float(met.ema_loss_series[sec, k]))])

    _manifest(base, vars(args) | {"subcommand": "compare"}, [seed],
              time.perf_counter() - t0)
    for kind in policies:
        met = results[kind]
        print(f"{kind}: all_satisfied={bool(met.satisfied.all())} "
              f"mean_unserved={met.unserved_fraction.mean():.4f} "
              f"max_run={int(met.max_unserved_run.max())}")
    print(f"wrote {base}")
    return EXIT_OK


def cmd_verify_matching(args) -> int:
    rng = np.random.default_rng(args.seed)
    from .scenario import Scenario

    failures = 0
    for trial in range(args.instances):
        num_groups = int(rng.integers(1, args.max_l + 1))
        num_prbs = int(rng.integers(1, args.max_n + 1))
        ues_per_group = int(rng.integers(1, 4))
        m = num_groups * ues_per_group
        scenario = Scenario(
            num_ues=m, num_groups=num_groups, num_prbs=num_prbs,
            group_of=np.repeat(np.arange(num_groups), ues_per_group),
            stream_rates=np.ones(num_groups),
            loss_tolerance=np.full(m, 0.5),
            ue_positions=np.zeros((m, 2)), seed=0)
        state = QueueState(
            q=rng.integers(0, 51, size=m), c=rng.integers(0, 2, size=m), t=0)
        from .channel import ChannelRealization
        ch = ChannelRealization(rates=rng.integers(0, 2, size=(m, num_prbs))
                                .astype(float))
        kind = ("mw", "mwp", "expq")[trial % 3]
        params = PolicyParams(kind=kind)
        _, val = decide_with_value(params, state, ch, scenario)
        _, oracle = brute_force_decide(params, state, ch, scenario)
        tol = 1e-9 * max(1.0, abs(oracle)) if kind == "expq" else 0.0
        if abs(val - oracle) > tol:
            failures += 1
            print(f"instance {trial} ({kind}): matching {val!r} "
                  f"!= oracle {oracle!r}")
    print(f"{args.instances - failures}/{args.instances} instances agree")
    return EXIT_OK if failures == 0 else EXIT_RUNTIME


def cmd_stability_check(args) -> int:
    cfg, _ = _load(args)
    model = load_small_model(args.model)
    lam = arrival_rates(cfg.scenario)
    sol = lp_delta_feasible(model, lam, args.delta, cfg.scenario)
    ok = check_witness(model, lam, min(args.delta, sol.achieved_delta),
                       cfg.scenario, sol)
    print(f"delta={args.delta}: {'feasible' if sol.feasible else 'infeasible'} "
          f"(max supportable margin {sol.achieved_delta:.6f}, "
          f"witness recheck {'ok' if ok else 'FAILED'})")
    if args.out:
        doc = {
            "feasible": sol.feasible,
            "delta": sol.delta,
            "achieved_delta": sol.achieved_delta,
            "allocations": sol.allocations.tolist(),
            "weights": sol.weights.tolist(),
        }
        Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
        print(f"wrote witness to {args.out}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .channel import ChannelRealization
    from .scenario import Scenario

    rng = np.random.default_rng(args.seed)
    m = 3 * args.l
    scenario = Scenario(
        num_ues=m, num_groups=args.l, num_prbs=args.n,
        group_of=np.repeat(np.arange(args.l), 3),
        stream_rates=np.ones(args.l), loss_tolerance=np.full(m, 0.5),
        ue_positions=np.zeros((m, 2)), seed=0)
    params = PolicyParams(kind="mw")

    def instance():
        state = QueueState(q=rng.integers(0, 51, size=m),
                           c=np.zeros(m, dtype=np.int64), t=0)
        ch = ChannelRealization(
            rates=rng.integers(0, 2, size=(m, args.n)).astype(float))
        return state, ch

    probes = [instance() for _ in range(args.reps)]
    t0 = time.perf_counter()
    for state, ch in probes:
        decide_with_value(params, state, ch, scenario)
    t_decide = (time.perf_counter() - t0) / args.reps

    t_brute = None
    try:
        t0 = time.perf_counter()
        for state, ch in probes:
            brute_force_decide(params, state, ch, scenario)
        t_brute = (time.perf_counter() - t0) / args.reps
    except SizeError as exc:
        print(f"brute force skipped: {exc}")

    print(f"L={args.l} N={args.n} M={m} reps={args.reps}")
    print(f"decide (matching): {t_decide * 1e6:10.1f} us")
    if t_brute is not None:
        print(f"brute force:       {t_brute * 1e6:10.1f} us "
              f"({t_brute / t_decide:.0f}x slower)")
    return EXIT_OK


def cmd_match(args) -> int:
    w = np.loadtxt(args.matrix, delimiter=",", ndmin=2)
    m = max_weight_matching(w)
    b = np.zeros(w.shape[0], dtype=int)
    for group, prb in m.assignment.items():
        b[group] = prb + 1
    print(f"assignment (group -> prb, 1-based): "
          f"{{{', '.join(f'{g + 1}: {p + 1}' for g, p in sorted(m.assignment.items()))}}}")
    print(f"allocation vector: {b.tolist()}")
    print(f"total weight: {m.total_weight!r}")
    return EXIT_OK


DEFAULT_SCENARIO = """\
[cell]
num_prbs = 3
fast_fading = true

[groups]
count = 2
stream_rates = 101, 101

[ues]
count = 4
group = 1, 1, 2, 2
loss_tolerance = 0.32, 0.32, 0.12, 0.12

[policy]
kind = mw

[run]
horizon = 100000
seed = 7
trace = none
ema_alpha = 0.05
"""


def cmd_emit_defaults(args) -> int:
    if args.out:
        Path(args.out).write_text(DEFAULT_SCENARIO)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(DEFAULT_SCENARIO)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lms", description="Loss-tolerant multicast scheduling simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_policy=True):
        p.add_argument("--scenario", required=True, help="scenario .cfg file")
        if with_policy:
            p.add_argument("--policy", choices=POLICY_CHOICES,
                           help="override the scenario's policy kind")
        p.add_argument("--horizon", type=int, help="override horizon")
        p.add_argument("--seed", type=int, help="run seed")
        p.add_argument("--seeds", help="comma-separated list of seeds")
        p.add_argument("--out-dir", help="output root (default $LMS_OUT_DIR or ./runs)")
        p.add_argument("--trace", choices=("none", "per-second", "per-subframe"),
                       help="trace detail level")

    p = sub.add_parser("run", help="simulate one scenario")
    add_common(p)
    p.add_argument("--delta", type=float,
                   help="LP margin used to build a randomized policy")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare",
                       help="run mw, mwp and expq under common random numbers")
    add_common(p, with_policy=False)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify-matching",
                       help="differential test: matching vs exhaustive argmax")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--max-l", type=int, default=3)
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_matching)

    p = sub.add_parser("stability-check", help="LP feasibility oracle")
    p.add_argument("--scenario", required=True)
    p.add_argument("--model", required=True, help="small channel model JSON")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--out", help="write the witness JSON here")
    p.set_defaults(func=cmd_stability_check)

    p = sub.add_parser("bench", help="time matching against brute force")
    p.add_argument("--l", type=int, default=3)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("match", help="one-shot matching on a CSV weight matrix")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("emit-defaults", help="write a template scenario file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_emit_defaults)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, SizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover - defensive
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
