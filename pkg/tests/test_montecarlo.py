"""Estimator correctness, determinism, histograms, and sweeps."""

import math

import pytest
from scipy import stats

from exchbound import (
    Bernoulli,
    Beta,
    BernoulliParamMixture,
    DiscreteOnUnit,
    DomainError,
    EmptyGrid,
    FiniteMixture,
    PointMass,
    SeedSpec,
    Side,
    TailQuery,
    UniformDensity,
    estimate_tail,
    exact_tail,
    run_sweep,
    sample_mean_histogram,
    sample_sequence,
    standard_suite,
    wilson_interval,
)
from exchbound.sampler import mix64

TWO_ATOM = FiniteMixture([(0.5, Bernoulli(0.2)), (0.5, Bernoulli(0.8))])
ZERO_ONE = FiniteMixture([(0.5, PointMass(0.0)), (0.5, PointMass(1.0))])


class TestWilsonInterval:
    def test_contains_point_estimate(self):
        for k, n in [(0, 100), (1, 100), (50, 100), (100, 100), (3, 7)]:
            lo, hi = wilson_interval(k, n, 0.999)
            assert lo <= k / n <= hi
            assert 0.0 <= lo <= hi <= 1.0

    def test_zero_successes_has_zero_lower_limit(self):
        lo, hi = wilson_interval(0, 10_000, 0.999)
        assert lo == 0.0
        assert 0.0 < hi < 0.002

    def test_against_direct_formula(self):
        k, n, level = 37, 250, 0.95
        z = stats.norm.ppf(0.975)
        p = k / n
        denom = 1 + z * z / n
        center = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        lo, hi = wilson_interval(k, n, level)
        assert lo == pytest.approx(center - half, abs=1e-12)
        assert hi == pytest.approx(center + half, abs=1e-12)

    def test_narrower_at_lower_level(self):
        lo99, hi99 = wilson_interval(40, 100, 0.99)
        lo90, hi90 = wilson_interval(40, 100, 0.90)
        assert lo99 < lo90 and hi90 < hi99

    def test_validation(self):
        with pytest.raises(DomainError):
            wilson_interval(5, 0)
        with pytest.raises(DomainError):
            wilson_interval(11, 10)
        with pytest.raises(DomainError):
            wilson_interval(1, 10, level=1.0)


class TestEstimateTail:
    def test_impossible_event_estimates_zero(self):
        q = TailQuery(M=10, t=0.1, side=Side.UPPER)  # mu_plus = 1
        est = estimate_tail(ZERO_ONE, q, 10_000, master_seed=3)
        assert est.p_hat == 0.0
        assert est.exceed_count == 0
        assert est.ci_low == 0.0

    def test_two_atom_against_oracle(self):
        q = TailQuery(M=2, t=0.15, side=Side.UPPER)
        est = estimate_tail(TWO_ATOM, q, 100_000, master_seed=7)
        se = math.sqrt(0.34 * 0.66 / 100_000)
        assert abs(est.p_hat - 0.34) < 4.5 * se
        assert est.ci_low <= 0.34 <= est.ci_high

    def test_iid_coin_against_oracle(self):
        m = FiniteMixture([(1.0, Bernoulli(0.5))])
        q = TailQuery(M=2, t=0.4, side=Side.UPPER)
        est = estimate_tail(m, q, 100_000, master_seed=11)
        se = math.sqrt(0.25 * 0.75 / 100_000)
        assert abs(est.p_hat - 0.25) < 4.5 * se

    def test_lower_side_against_oracle(self):
        q = TailQuery(M=3, t=0.1, side=Side.LOWER)
        exact = exact_tail(TWO_ATOM, q).probability
        est = estimate_tail(TWO_ATOM, q, 100_000, master_seed=13)
        se = math.sqrt(exact * (1 - exact) / 100_000)
        assert abs(est.p_hat - exact) < 4.5 * se

    def test_param_mixture_against_oracle(self):
        m = BernoulliParamMixture(UniformDensity(0.2, 0.8))
        q = TailQuery(M=10, t=0.1, side=Side.UPPER)
        exact = exact_tail(m, q).probability
        est = estimate_tail(m, q, 100_000, master_seed=17)
        se = math.sqrt(exact * (1 - exact) / 100_000)
        assert abs(est.p_hat - exact) < 4.5 * se

    def test_beta_component_runs(self):
        m = FiniteMixture([(0.5, Beta(2.0, 2.0)), (0.5, Bernoulli(0.9))])
        q = TailQuery(M=5, t=0.05, side=Side.UPPER)
        est = estimate_tail(m, q, 20_000, master_seed=19)
        assert 0.0 <= est.p_hat <= 1.0

    def test_deterministic_and_exact_ratio(self):
        q = TailQuery(M=2, t=0.15, side=Side.UPPER)
        a = estimate_tail(TWO_ATOM, q, 70_001, master_seed=23)
        b = estimate_tail(TWO_ATOM, q, 70_001, master_seed=23)
        assert a == b
        assert a.p_hat == a.exceed_count / a.replications

    def test_matches_per_observation_sampler(self):
        # cross-validate the conditional-sum shortcut against batches
        # materialized one observation at a time
        M, reps = 3, 20_000
        q = TailQuery(M=M, t=0.1, side=Side.UPPER)
        exact = exact_tail(TWO_ATOM, q).probability
        threshold = M * (0.8 + 0.1)
        hits = sum(
            1
            for i in range(reps)
            if sample_sequence(TWO_ATOM, M, SeedSpec(29, i)).values.sum() >= threshold
        )
        direct = hits / reps
        est = estimate_tail(TWO_ATOM, q, reps, master_seed=29)
        se = math.sqrt(exact * (1 - exact) / reps)
        assert abs(direct - exact) < 4.5 * se
        assert abs(est.p_hat - exact) < 4.5 * se


class TestHistogram:
    def test_degenerate_model_extreme_bins(self):
        h = sample_mean_histogram(ZERO_ONE, M=100, replications=10_000, bins=10, master_seed=31)
        assert sum(h.counts) == 10_000
        assert sum(h.counts[1:-1]) == 0
        se = math.sqrt(0.25 / 10_000)
        assert abs(h.counts[0] / 10_000 - 0.5) < 4.5 * se
        assert abs(h.counts[-1] / 10_000 - 0.5) < 4.5 * se

    def test_iid_coin_concentrates(self):
        m = FiniteMixture([(1.0, Bernoulli(0.5))])
        h = sample_mean_histogram(m, M=10_000, replications=1_000, bins=50, master_seed=37)
        # mass inside [0.48, 0.52) lives in exactly two of the 0.02-wide bins
        inside = h.counts[24] + h.counts[25]
        assert inside >= 0.99 * 1_000

    def test_two_atom_bimodal_with_empty_middle(self):
        h = sample_mean_histogram(TWO_ATOM, M=10_000, replications=10_000, bins=10, master_seed=41)
        middle = sum(h.counts[4:6])  # [0.4, 0.6)
        assert middle <= 10  # <= 1e-3 fraction
        low = sum(h.counts[:4])
        high = sum(h.counts[6:])
        se = math.sqrt(0.25 / 10_000)
        assert abs(low / 10_000 - 0.5) < 4.5 * se
        assert abs(high / 10_000 - 0.5) < 4.5 * se

    def test_counts_conserved_and_deterministic(self):
        a = sample_mean_histogram(TWO_ATOM, M=7, replications=65_537, bins=13, master_seed=43)
        b = sample_mean_histogram(TWO_ATOM, M=7, replications=65_537, bins=13, master_seed=43)
        assert a == b
        assert sum(a.counts) == 65_537

    def test_validation(self):
        with pytest.raises(DomainError):
            sample_mean_histogram(TWO_ATOM, M=2, replications=10, bins=1, master_seed=1)


class TestRunSweep:
    def test_standard_models_zero_violations(self):
        models = list(standard_suite())[:3]
        result = run_sweep(
            models=models,
            M_grid=[10, 100],
            t_grid=[0.05, 0.1],
            sides=[Side.UPPER, Side.LOWER],
            replications=20_000,
            master_seed=47,
        )
        assert len(result.rows) == 24
        assert result.violations == ()

    def test_empty_grid_rejected(self):
        with pytest.raises(EmptyGrid):
            run_sweep(
                models=list(standard_suite())[:1],
                M_grid=[10],
                t_grid=[],
                sides=[Side.UPPER],
                replications=10,
                master_seed=1,
            )

    def test_single_cell_matches_direct_estimate(self):
        q = TailQuery(M=4, t=0.07, side=Side.UPPER)
        result = run_sweep(
            models=[("two_atom", TWO_ATOM)],
            M_grid=[4],
            t_grid=[0.07],
            sides=[Side.UPPER],
            replications=30_000,
            master_seed=53,
            method="montecarlo",
        )
        row = result.rows[0]
        direct = estimate_tail(TWO_ATOM, q, 30_000, master_seed=mix64(53, 0))
        assert row.value == direct.p_hat
        assert row.ci_low == direct.ci_low
        assert row.ci_high == direct.ci_high
        assert row.method == "montecarlo"

    def test_oracle_preferred_in_auto_mode(self):
        result = run_sweep(
            models=[("two_atom", TWO_ATOM)],
            M_grid=[2],
            t_grid=[0.15],
            sides=[Side.UPPER],
            replications=10,
            master_seed=1,
        )
        row = result.rows[0]
        assert row.method == "binomial"
        assert row.value == pytest.approx(0.34, abs=1e-12)
        assert row.ci_low is None

    def test_montecarlo_fallback_for_beta_components(self):
        m = FiniteMixture([(1.0, Beta(2.0, 2.0))])
        result = run_sweep(
            models=[("beta", m)],
            M_grid=[3],
            t_grid=[0.1],
            sides=[Side.UPPER],
            replications=5_000,
            master_seed=59,
        )
        assert result.rows[0].method == "montecarlo"

    def test_error_rows_do_not_abort(self):
        discrete = FiniteMixture(
            [(1.0, DiscreteOnUnit(points=[0.0, 0.5, 1.0], weights=[0.3, 0.4, 0.3]))]
        )
        result = run_sweep(
            models=[("discrete", discrete)],
            M_grid=[100],
            t_grid=[0.0, 0.1],
            sides=[Side.UPPER],
            replications=100,
            master_seed=61,
            method="exact",
        )
        methods = [row.method for row in result.rows]
        assert methods == ["error:InvalidT", "error:MTooLarge"]
        assert all(not row.violation for row in result.rows)

    def test_deterministic_rows(self):
        kwargs = dict(
            models=list(standard_suite())[:2],
            M_grid=[2, 5],
            t_grid=[0.03, 0.11],
            sides=[Side.UPPER, Side.LOWER],
            replications=5_000,
            master_seed=67,
        )
        assert run_sweep(**kwargs) == run_sweep(**kwargs)

    def test_thread_count_does_not_change_rows(self, monkeypatch):
        kwargs = dict(
            models=list(standard_suite()),
            M_grid=[2, 10],
            t_grid=[0.04, 0.12],
            sides=[Side.UPPER, Side.LOWER],
            replications=5_000,
            master_seed=71,
        )
        serial = run_sweep(**kwargs, threads=1)
        threaded = run_sweep(**kwargs, threads=4)
        assert serial.rows == threaded.rows
        monkeypatch.setenv("EXCHBOUND_THREADS", "3")
        from_env = run_sweep(**kwargs)
        assert from_env.rows == serial.rows

    def test_corrupted_bound_hook_flags_violations(self):
        result = run_sweep(
            models=[("two_atom", TWO_ATOM)],
            M_grid=[2],
            t_grid=[0.15],
            sides=[Side.UPPER],
            replications=10,
            master_seed=1,
            bound_scale=0.01,
        )
        assert result.rows[0].violation

    def test_invalid_window_cells_never_flagged(self):
        result = run_sweep(
            models=[("zero_one", ZERO_ONE)],
            M_grid=[5],
            t_grid=[0.2, 0.8],
            sides=[Side.UPPER, Side.LOWER],
            replications=1_000,
            master_seed=73,
        )
        assert all(not row.valid for row in result.rows)
        assert all(not row.violation for row in result.rows)


class TestOracleAgreement:
    @pytest.mark.parametrize("model_id,m", [s for s in standard_suite() if s[0] != "zero_one"])
    def test_estimates_cover_oracle_at_million_reps(self, model_id, m):
        # 99.9% Wilson intervals should cover the exact value; the cells
        # here keep reps*M modest so the check stays inside the time budget
        failures = 0
        cells = 0
        for M in (1, 2, 5, 10):
            for frac in (0.25, 0.5, 0.75):
                for side in (Side.UPPER, Side.LOWER):
                    from exchbound import summarize

                    s = summarize(m)
                    t_max = s.t_max_upper if side is Side.UPPER else s.t_max_lower
                    t = frac * t_max
                    if t <= 0:
                        continue
                    q = TailQuery(M=M, t=t, side=side)
                    try:
                        exact = exact_tail(m, q).probability
                    except Exception:
                        continue
                    est = estimate_tail(m, q, 1_000_000, master_seed=mix64(79, cells))
                    cells += 1
                    if not (est.ci_low <= exact <= est.ci_high):
                        failures += 1
        assert cells > 0
        assert failures <= max(1, math.ceil(0.01 * cells))
