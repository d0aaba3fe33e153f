import numpy as np
import pytest

from lms import (Scenario, SizeError, SmallChannelModel, ValidationError,
                 check_witness, count_allocations, empirical_stability,
                 enumerate_allocations, load_small_model, lp_delta_feasible,
                 save_small_model, serve_from_allocation, service_vector_of)
from lms.channel import ChannelRealization


def scenario_of(group_of, num_prbs, tolerance=None, rates=None):
    group_of = np.asarray(group_of)
    m = len(group_of)
    num_groups = int(group_of.max()) + 1
    return Scenario(
        num_ues=m, num_groups=num_groups, num_prbs=num_prbs,
        group_of=group_of,
        stream_rates=rates if rates is not None else np.ones(num_groups),
        loss_tolerance=tolerance if tolerance is not None else np.full(m, 0.5),
        ue_positions=np.zeros((m, 2)), seed=0)


class TestEnumeration:
    def test_one_by_one(self):
        allocs = enumerate_allocations(1, 1)
        assert [tuple(a) for a in allocs] == [(0,), (1,)]

    def test_two_by_two_count(self):
        assert len(enumerate_allocations(2, 2)) == 7

    def test_two_by_three_count(self):
        allocs = enumerate_allocations(2, 3)
        assert len(allocs) == 13
        # deduplicated and feasible
        seen = {tuple(a) for a in allocs}
        assert len(seen) == 13
        for a in seen:
            nz = [v for v in a if v]
            assert len(set(nz)) == len(nz)

    def test_count_formula_matches_enumeration(self):
        for num_groups in range(1, 4):
            for num_prbs in range(1, 5):
                assert count_allocations(num_groups, num_prbs) == len(
                    enumerate_allocations(num_groups, num_prbs))

    def test_cap(self):
        with pytest.raises(SizeError):
            enumerate_allocations(8, 20, cap=100)

    def test_deterministic_order(self):
        a = enumerate_allocations(2, 3)
        b = enumerate_allocations(2, 3)
        assert np.array_equal(a, b)
        assert tuple(a[0]) == (0, 0)  # lexicographic: all-zero first


class TestServiceVector:
    def test_zero_allocation(self):
        sc = scenario_of([0, 0], 2)
        mu = service_vector_of((0,), np.ones((2, 2)), sc)
        assert np.all(mu == 0)

    def test_full_service(self):
        sc = scenario_of([0, 0], 2)
        mu = service_vector_of((1,), np.ones((2, 2)), sc)
        assert np.all(mu == 1)

    def test_matches_serve_from_allocation(self):
        # cross-module differential test against the policies implementation
        rng = np.random.default_rng(9)
        sc = scenario_of([0, 0, 1, 2, 2], 4, rates=np.array([2.0, 1.0, 3.0]))
        for _ in range(200):
            rates = rng.integers(0, 4, size=(5, 4)).astype(float)
            b = np.zeros(3, dtype=int)
            prbs = rng.permutation(4)[:3] + 1
            for i in range(3):
                b[i] = prbs[i] if rng.random() < 0.7 else 0
            want = serve_from_allocation(b, ChannelRealization(rates=rates), sc)
            got = service_vector_of(tuple(b), rates, sc)
            assert np.array_equal(want, got)


def single_ue_model(decode=True):
    rate = 1.0 if decode else 0.0
    return SmallChannelModel(states=[np.array([[rate]])], probs=np.array([1.0]))


class TestLpOracle:
    def test_always_decodable_feasible(self):
        sc = scenario_of([0], 1)
        sol = lp_delta_feasible(single_ue_model(), np.array([0.6]), 0.4, sc)
        assert sol.feasible
        assert sol.achieved_delta == pytest.approx(0.4, abs=1e-12)

    def test_over_capacity_infeasible(self):
        sc = scenario_of([0], 1)
        sol = lp_delta_feasible(single_ue_model(), np.array([0.9]), 0.2, sc)
        assert not sol.feasible

    def test_boundary_lambda_one(self):
        sc = scenario_of([0], 1)
        sol = lp_delta_feasible(single_ue_model(), np.array([1.0]), 0.0, sc)
        assert sol.feasible
        assert sol.achieved_delta == pytest.approx(0.0, abs=1e-12)
        # witness puts probability 1 on the serving allocation
        serving = [i for i, b in enumerate(sol.allocations) if b[0] == 1]
        assert sol.weights[0, serving[0]] == pytest.approx(1.0)

    def test_witness_passes_recheck(self):
        sc = scenario_of([0, 0, 1, 1], 3)
        a = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [0, 0, 1]], float)
        b = np.array([[1, 1, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]], float)
        model = SmallChannelModel(states=[a, b], probs=np.array([0.5, 0.5]))
        lam = np.array([0.68, 0.68, 0.88, 0.88])
        sol = lp_delta_feasible(model, lam, 0.05, sc)
        assert sol.feasible
        assert sol.achieved_delta == pytest.approx(0.07, abs=1e-9)
        assert check_witness(model, lam, 0.05, sc, sol)

    def test_monotonicity_in_delta(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            m, num_prbs = 3, 2
            sc = scenario_of([0, 0, 1], num_prbs)
            states = [rng.integers(0, 2, size=(m, num_prbs)).astype(float)
                      for _ in range(2)]
            model = SmallChannelModel(states=states, probs=np.array([0.5, 0.5]))
            lam = rng.uniform(0.1, 0.9, size=m)
            deltas = [0.0, 0.02, 0.05, 0.1, 0.2]
            feas = [lp_delta_feasible(model, lam, d, sc).feasible
                    for d in deltas]
            # once infeasible, stays infeasible for larger delta
            for i in range(1, len(feas)):
                assert feas[i] <= feas[i - 1]

    def test_variable_cap(self):
        sc = scenario_of([0, 1, 2], 6)
        model = SmallChannelModel(states=[np.ones((3, 6))], probs=np.array([1.0]))
        with pytest.raises(SizeError):
            lp_delta_feasible(model, np.full(3, 0.5), 0.0, sc, variable_cap=10)

    def test_agrees_with_scipy(self):
        # differential check against an off-the-shelf LP solver
        linprog = pytest.importorskip("scipy.optimize").linprog
        rng = np.random.default_rng(31)
        from lms import enumerate_allocations as enum
        for trial in range(15):
            sc = scenario_of([0, 0, 1], 2)
            states = [rng.integers(0, 2, size=(3, 2)).astype(float)
                      for _ in range(2)]
            probs = np.array([0.25, 0.75])
            model = SmallChannelModel(states=states, probs=probs)
            lam = np.round(rng.uniform(0.05, 0.95, size=3), 3)
            delta = float(np.round(rng.uniform(0.0, 0.2), 3))
            sol = lp_delta_feasible(model, lam, delta, sc)

            allocs = enum(2, 2)
            num_a = len(allocs)
            mu = np.stack([np.stack([service_vector_of(b, st, sc)
                                     for b in allocs]) for st in states])
            num_w = 2 * num_a
            # feasibility LP: service >= lam + delta, per-state sums = 1
            a_ub, b_ub = [], []
            for k in range(3):
                row = np.zeros(num_w)
                for c in range(2):
                    row[c * num_a:(c + 1) * num_a] = -probs[c] * mu[c, :, k]
                a_ub.append(row)
                b_ub.append(-(lam[k] + delta))
            a_eq = np.zeros((2, num_w))
            a_eq[0, :num_a] = 1
            a_eq[1, num_a:] = 1
            res = linprog(np.zeros(num_w), A_ub=np.array(a_ub),
                          b_ub=np.array(b_ub), A_eq=a_eq, b_eq=np.ones(2),
                          bounds=(0, None), method="highs")
            assert res.status in (0, 2)
            assert sol.feasible == (res.status == 0), f"trial {trial}"


class TestRegionSimulationConsistency:
    """Feasibility margin and simulated queue behavior must agree."""

    def test_feasible_models_are_stable_and_satisfied(self):
        from lms import (CqiTable, LinkBudget, PolicyParams, RunConfig, run)
        from lms.scenario import scale_arrivals
        rng = np.random.default_rng(55)
        found = 0
        trial = 0
        while found < 5 and trial < 60:
            trial += 1
            num_groups, num_prbs, per = 2, 2, 2
            m = num_groups * per
            tol = np.round(rng.uniform(0.2, 0.7, size=m), 2)
            sc = Scenario(num_ues=m, num_groups=num_groups, num_prbs=num_prbs,
                          group_of=np.repeat(np.arange(num_groups), per),
                          stream_rates=np.ones(num_groups),
                          loss_tolerance=tol,
                          ue_positions=np.zeros((m, 2)), seed=0)
            states = [rng.integers(0, 2, size=(m, num_prbs)).astype(float)
                      for _ in range(2)]
            model = SmallChannelModel(states=states, probs=np.array([0.5, 0.5]))
            lam = 1.0 - tol
            if not lp_delta_feasible(model, lam, 0.05, sc).feasible:
                continue
            found += 1
            cfg = RunConfig(horizon=20_000, seed=1000 + trial,
                            policy=PolicyParams(kind="mw"))
            metrics = run(sc, LinkBudget(num_prbs=num_prbs), CqiTable(), cfg,
                          channel_model=model)
            rep = empirical_stability(metrics.queue_trace)
            assert rep.verdict == "stable", f"trial {trial}: {rep}"
            assert np.all(metrics.unserved_fraction <= tol + 0.01)

            # push arrivals far past the supportable margin: queues must blow up
            for factor in (1.3, 1.6, 2.0, 4.0):
                over = scale_arrivals(sc, factor)
                lam_over = 1.0 - over.loss_tolerance
                if lp_delta_feasible(model, lam_over, 0.0, sc).achieved_delta < -0.05:
                    cfg = RunConfig(horizon=20_000, seed=2000 + trial,
                                    policy=PolicyParams(kind="mw"))
                    metrics = run(over, LinkBudget(num_prbs=num_prbs), CqiTable(),
                                  cfg, channel_model=model)
                    rep = empirical_stability(metrics.queue_trace)
                    assert rep.verdict == "unstable", f"trial {trial}: {rep}"
                    break
        assert found == 5, "expected to sample 5 feasible models"


class TestModelIO:
    def test_round_trip(self, tmp_path):
        model = SmallChannelModel(
            states=[np.array([[1.0, 0.0]]), np.array([[0.0, 2.0]])],
            probs=np.array([0.25, 0.75]))
        path = tmp_path / "model.json"
        save_small_model(model, path)
        loaded = load_small_model(path)
        assert np.array_equal(loaded.probs, model.probs)
        for a, b in zip(loaded.states, model.states):
            assert np.array_equal(a, b)

    def test_validation(self):
        with pytest.raises(ValidationError):
            SmallChannelModel(states=[np.ones((1, 1))], probs=np.array([0.5]))
        with pytest.raises(ValidationError):
            SmallChannelModel(states=[-np.ones((1, 1))], probs=np.array([1.0]))


class TestEmpiricalStability:
    def test_all_zero_trace_stable(self):
        trace = np.zeros((20_000, 3))
        assert empirical_stability(trace).verdict == "stable"

    def test_linear_growth_unstable(self):
        t = np.arange(20_000)
        trace = np.column_stack([0.1 * t, np.zeros(20_000)])
        rep = empirical_stability(trace)
        assert rep.verdict == "unstable"
        assert rep.max_slope == pytest.approx(0.1, rel=1e-6)

    def test_stationary_noise_stable(self):
        rng = np.random.default_rng(0)
        trace = rng.integers(0, 5, size=(20_000, 2))
        assert empirical_stability(trace).verdict == "stable"

    def test_short_trace_rejected(self):
        with pytest.raises(ValidationError):
            empirical_stability(np.zeros((5_000, 2)))
