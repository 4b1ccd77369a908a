import math

import numpy as np
import pytest
from scipy import stats

from blmab.model import (
    BetaUtilization,
    FullUtilization,
    SliceTemplate,
    TenantProfile,
    UniformUtilization,
    compute_reward,
    draw_arrival_table,
    fraction_to_prbs,
    generate_request_stream,
    parse_utilization,
    pareto_parameters,
    sample_arrival_rates,
    sample_utilization,
    utilization_label,
)


class TestReward:
    def test_hand_value(self):
        # 0.5*50/150 + 0.5*25/50
        assert compute_reward(50, 25, 150, 0.5) == pytest.approx(0.41667, abs=5e-6)

    def test_no_request_pays_nothing(self):
        assert compute_reward(0, 0, 150, 0.5) == 0.0

    def test_full_slice_alpha_one(self):
        assert compute_reward(150, 150, 150, 1.0) == 1.0

    def test_unmonitored_drops_usage_term(self):
        assert compute_reward(30, 0, 150, 0.4, monitored=False) == pytest.approx(0.4 * 30 / 150)

    @pytest.mark.parametrize(
        "args",
        [(10, 5, 150, -0.1), (10, 5, 150, 1.1), (200, 5, 150, 0.5), (10, 11, 150, 0.5), (0, 3, 150, 0.5), (-1, 0, 150, 0.5)],
    )
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            compute_reward(*args)

    def test_bounded(self, rng):
        for _ in range(2000):
            C = int(rng.integers(1, 300))
            R = int(rng.integers(0, C + 1))
            lam = int(rng.integers(0, R + 1))
            a = float(rng.random())
            assert 0.0 <= compute_reward(R, lam, C, a) <= 1.0


class TestPareto:
    def test_moments_match(self):
        scale, shape = pareto_parameters(100.0, 10.0)
        dist = stats.pareto(shape, scale=scale)
        assert dist.mean() == pytest.approx(100.0, rel=1e-12)
        assert dist.std() == pytest.approx(10.0, rel=1e-9)

    def test_table_value_sample_mean(self, rng):
        rates = sample_arrival_rates(200_000, 100.0, 0.1, rng)
        assert rates.mean() == pytest.approx(100.0, abs=0.01)
        assert rates.min() >= pareto_parameters(100.0, 0.1)[0]

    def test_zero_std_clamps(self):
        with pytest.warns(RuntimeWarning):
            scale, shape = pareto_parameters(5.0, 0.0)
        assert shape == 1e6 and scale == pytest.approx(5.0, rel=1e-5)

    @pytest.mark.parametrize("mean,std", [(0, 1), (-1, 1), (1, -1), (math.nan, 1), (1, math.inf)])
    def test_invalid(self, mean, std):
        with pytest.raises(ValueError):
            pareto_parameters(mean, std)


class TestUtilization:
    def test_parse(self):
        assert isinstance(parse_utilization("uniform"), UniformUtilization)
        assert isinstance(parse_utilization("FULL"), FullUtilization)
        b = parse_utilization("beta:2,5")
        assert (b.a, b.b) == (2.0, 5.0) and utilization_label(b) == "beta:2,5"
        with pytest.raises(ValueError):
            parse_utilization("gamma")
        with pytest.raises(ValueError):
            BetaUtilization(0, 1)

    def test_prbs_uniform_on_range(self, rng):
        R = 7
        counts = np.bincount([fraction_to_prbs(f, R) for f in rng.random(80_000)], minlength=R + 1)
        assert len(counts) == R + 1
        assert stats.chisquare(counts).pvalue > 1e-3
        assert fraction_to_prbs(1.0, R) == R

    def test_sample_utilization_within_template(self, rng):
        tpl = SliceTemplate(0, 40, 3)
        vals = [sample_utilization(tpl, BetaUtilization(2, 2), rng) for _ in range(500)]
        assert 0 <= min(vals) and max(vals) <= 40
        assert sample_utilization(tpl, FullUtilization(), rng) == 40


class TestTypes:
    def test_template_validate(self):
        SliceTemplate(0, 150, 1).validate(150)
        with pytest.raises(ValueError):
            SliceTemplate(0, 151, 1).validate(150)
        with pytest.raises(ValueError):
            SliceTemplate(0, 10, 0).validate(150)

    def test_profile_validation(self):
        with pytest.raises(ValueError):
            TenantProfile(0, 0.0, [1.0])
        with pytest.raises(ValueError):
            TenantProfile(0, 1.0, [0.5, 0.4])
        p = TenantProfile(0, 2.0, [1.0])
        assert p.request_probability == pytest.approx(1 - math.exp(-2.0))


class TestRequestStream:
    def profile(self, rate, k=3):
        return TenantProfile(0, rate, np.full(k, 1.0 / k))

    def test_zero_horizon_rejected(self):
        with pytest.raises(ValueError):
            generate_request_stream(self.profile(1.0), 0)

    def test_one_request_per_round_at_most(self, rng):
        reqs = generate_request_stream(self.profile(5.0), 500, rng=rng)
        rounds = [r.arrival_round for r in reqs]
        assert rounds == sorted(set(rounds))
        assert all(r.arrival_round - 1 < r.arrival_time <= r.arrival_round for r in reqs)

    def test_round_occupancy_matches_bernoulli(self, rng):
        rate, T = 0.7, 200_000
        reqs = generate_request_stream(self.profile(rate), T, rng=rng)
        p = 1 - math.exp(-rate)
        sd = math.sqrt(p * (1 - p) / T)
        assert abs(len(reqs) / T - p) < 5 * sd

    def test_lockup_window_suppresses(self, rng):
        reqs = generate_request_stream(self.profile(50.0), 100, grant_history=[(10, 5), (40, 20)], rng=rng)
        rounds = {r.arrival_round for r in reqs}
        assert not rounds & set(range(11, 15))
        assert not rounds & set(range(41, 60))
        assert {10, 15, 40, 60} <= rounds

    def test_table_matches_request_probability(self, rng):
        tenants = [TenantProfile(i, r, [0.5, 0.5]) for i, r in enumerate([0.2, 1.0, 100.0])]
        table = draw_arrival_table(tenants, 100_000, rng)
        assert table.horizon == 100_000
        for j, t in enumerate(tenants):
            p = t.request_probability
            assert abs(table.arrive[:, j].mean() - p) < 5 * math.sqrt(p * (1 - p) / 1e5) + 1e-12
        assert ((table.offset > 0) & (table.offset <= 1)).all()
        assert set(np.unique(table.template)) <= {0, 1}

    def test_table_offset_is_first_arrival_law(self, rng):
        # conditional on an arrival in (0,1], the first one has cdf (1-e^{-rx})/(1-e^{-r})
        rate = 1.5
        table = draw_arrival_table([TenantProfile(0, rate, [1.0])], 50_000, rng)
        cdf = lambda x: np.expm1(-rate * np.asarray(x)) / math.expm1(-rate)
        assert stats.kstest(table.offset[:, 0], cdf).pvalue > 1e-3
