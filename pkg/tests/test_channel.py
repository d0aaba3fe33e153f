import numpy as np
import pytest

from lms import (ChannelSampler, CqiTable, LinkBudget, Scenario, ValidationError,
                 path_loss_db, sample_channel, sinr_to_cqi)


def make_scenario(m=3, positions=None):
    if positions is None:
        positions = np.column_stack([np.linspace(0.02, 0.12, m), np.zeros(m)])
    return Scenario(num_ues=m, num_groups=1, num_prbs=4,
                    group_of=np.zeros(m, dtype=int), stream_rates=[100.0],
                    loss_tolerance=np.full(m, 0.3), ue_positions=positions, seed=0)


class TestPathLoss:
    def test_one_km(self):
        assert path_loss_db(1.0) == pytest.approx(128.1)

    def test_ten_km(self):
        # 128.1 + 37.6 * log10(10) = 165.7
        assert path_loss_db(10.0) == pytest.approx(165.7)

    def test_cell_edge(self):
        expected = 128.1 + 37.6 * np.log10(0.15)  # ~97.1
        assert path_loss_db(0.15) == pytest.approx(expected)
        assert path_loss_db(0.15) == pytest.approx(97.12, abs=0.01)

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValidationError):
            path_loss_db(0.0)
        with pytest.raises(ValidationError):
            path_loss_db(-1.0)


class TestCqiMapping:
    def test_below_lowest_threshold(self):
        table = CqiTable()
        assert sinr_to_cqi(-100.0, table) == 0

    def test_above_top_threshold(self):
        table = CqiTable()
        assert sinr_to_cqi(1000.0, table) == 15
        assert table.rates_per_prb[15] > 0

    def test_exact_threshold_maps_up(self):
        table = CqiTable()
        for i, thr in enumerate(table.sinr_thresholds_db):
            assert sinr_to_cqi(float(thr), table) == i + 1

    def test_matches_linear_scan(self):
        # independent oracle: scan all 15 thresholds directly
        table = CqiTable()
        rng = np.random.default_rng(1)
        for sinr in rng.uniform(-20, 30, size=200):
            expected = 0
            for thr in table.sinr_thresholds_db:
                if sinr >= thr:
                    expected += 1
            assert sinr_to_cqi(float(sinr), table) == expected

    def test_table_validation(self):
        with pytest.raises(ValidationError):
            CqiTable(sinr_thresholds_db=np.zeros(15))  # not increasing
        bad_rates = np.array(CqiTable().rates_per_prb)
        bad_rates[0] = 5.0
        with pytest.raises(ValidationError):
            CqiTable(rates_per_prb=bad_rates)


class TestSampler:
    def test_determinism(self):
        sc = make_scenario()
        budget, table = LinkBudget(num_prbs=4), CqiTable()
        a = sample_channel(sc, budget, table, np.random.default_rng(5), 0)
        b = sample_channel(sc, budget, table, np.random.default_rng(5), 0)
        assert np.array_equal(a.rates, b.rates)
        assert np.array_equal(a.cqi, b.cqi)

    def test_cqi_range_and_rate_consistency(self):
        sc = make_scenario()
        budget, table = LinkBudget(num_prbs=4), CqiTable()
        sampler = ChannelSampler(sc, budget, table, np.random.default_rng(2))
        for t in range(50):
            ch = sampler.sample(t)
            assert ch.cqi.min() >= 0 and ch.cqi.max() <= 15
            assert np.array_equal(ch.rates, table.rates_per_prb[ch.cqi])
            # rate is zero exactly when cqi is zero
            assert np.array_equal(ch.rates == 0, ch.cqi == 0)

    def test_more_power_never_lowers_cqi(self):
        sc = make_scenario()
        table = CqiTable()
        lo = ChannelSampler(sc, LinkBudget(num_prbs=4, tx_power_dbm=30.0),
                            table, np.random.default_rng(7)).sample(0)
        hi = ChannelSampler(sc, LinkBudget(num_prbs=4, tx_power_dbm=40.0),
                            table, np.random.default_rng(7)).sample(0)
        assert np.all(hi.cqi >= lo.cqi)

    def test_shadowing_std_empirical(self):
        m = 20_000
        sc = make_scenario(m=m, positions=np.full((m, 2), 0.05))
        budget = LinkBudget(shadowing_std_db=10.0)
        sampler = ChannelSampler(sc, budget, CqiTable(), np.random.default_rng(3))
        std = float(np.std(sampler.shadow_db))
        assert abs(std - 10.0) / 10.0 < 0.05

    def test_fading_disabled_gives_flat_prbs(self):
        sc = make_scenario()
        budget = LinkBudget(num_prbs=4, fast_fading=False)
        ch = ChannelSampler(sc, budget, CqiTable(),
                            np.random.default_rng(0)).sample(0)
        assert np.all(ch.cqi == ch.cqi[:, :1])

    def test_link_budget_validation(self):
        with pytest.raises(ValidationError):
            LinkBudget(cell_radius_km=0.0)
        with pytest.raises(ValidationError):
            LinkBudget(num_prbs=0)
        with pytest.raises(ValidationError):
            LinkBudget(tx_power_dbm=float("nan"))
