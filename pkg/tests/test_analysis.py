import numpy as np
import pytest
from scipy.stats import norm

from sde_splitkit import analysis, integrators, models, noise
from sde_splitkit.analysis import (
    ConvergenceRecord,
    ConvergenceTable,
    NotHypoellipticError,
    batch_means,
    bounds_1d,
    check_assumptions,
    fit_order,
    hypoellipticity_report,
    kde,
    lt_nll,
    moment_series,
    periodogram,
    rmse_study,
)
from sde_splitkit.models import FhnParams
from sde_splitkit.noise import StreamKey

from oracles import gaussian_minus2_loglik


def fhn_all_ones():
    return models.build_model(
        "fhn", eps=1.0, gamma=1.0, beta=1.0, sigma1=1.0, sigma2=1.0
    )


class TestRmseStudy:
    def test_method_against_itself_is_zero(self):
        tab = rmse_study(
            fhn_all_ones(), ["TEM"], [2**-8], 2**-8, 1.0, [0, 0], 8, 1,
        )
        assert tab.records[0].rmse == 0.0

    def test_non_commensurate_grid_rejected(self):
        with pytest.raises(ValueError, match="integer multiple"):
            rmse_study(fhn_all_ones(), ["LT"], [0.25], 0.1, 1.0, [0, 0], 4, 1)
        with pytest.raises(ValueError, match="integer multiple"):
            rmse_study(fhn_all_ones(), ["LT"], [2**-3], 2**-5, 1.1, [0, 0], 4, 1)

    def test_reference_must_be_euler_family(self):
        with pytest.raises(ValueError, match="Euler-family"):
            rmse_study(
                fhn_all_ones(), ["LT"], [2**-4], 2**-6, 1.0, [0, 0], 4, 1,
                reference_method="S",
            )

    def test_error_decreases_with_step(self):
        tab = rmse_study(
            fhn_all_ones(), ["S"], [2**-4, 2**-6, 2**-8], 2**-11,
            2.0, [0, 0], 64, 3,
        )
        rmses = [r.rmse for r in tab.records]
        assert rmses[0] > rmses[1] > rmses[2]

    def test_thread_count_does_not_change_results(self):
        kw = dict(chunk_size=16)
        a = rmse_study(
            fhn_all_ones(), ["LT", "TEM"], [2**-4], 2**-7, 1.0, [0, 0], 48, 5,
            n_threads=1, **kw,
        )
        b = rmse_study(
            fhn_all_ones(), ["LT", "TEM"], [2**-4], 2**-7, 1.0, [0, 0], 48, 5,
            n_threads=4, **kw,
        )
        assert [(r.method, r.delta, r.rmse) for r in a.records] == [
            (r.method, r.delta, r.rmse) for r in b.records
        ]

    def test_exploded_paths_excluded_and_counted(self):
        toy = models.build_model("toy", sigma=0.5)
        tab = rmse_study(
            toy, ["EM", "TEM"], [2**-6], 2**-8, 1.0, [1e4], 12, 7,
        )
        em = next(r for r in tab.records if r.method == "EM")
        tem = next(r for r in tab.records if r.method == "TEM")
        assert em.excluded == 12 and np.isnan(em.rmse)
        assert tem.excluded == 0 and np.isfinite(tem.rmse)


class TestFitOrder:
    def test_exact_synthetic_slopes(self):
        for p in (1.0, 0.5, 1.37):
            records = [
                ConvergenceRecord("LT", d, 3.7 * d**p, 100, 0)
                for d in (2**-4, 2**-5, 2**-6, 2**-7)
            ]
            got = fit_order(ConvergenceTable(records))["LT"]
            assert got == pytest.approx(p, abs=1e-12)

    def test_paper_table_strang_column_slope(self):
        # printed RMSE values for the Strang method, steps 2^-6 .. 2^-12
        printed = [0.01348, 0.00689, 0.00331, 0.00165, 0.00082, 0.0004, 0.00021]
        records = [
            ConvergenceRecord("S", 2.0 ** -(6 + i), r, 1000, 0)
            for i, r in enumerate(printed)
        ]
        slope = fit_order(ConvergenceTable(records))["S"]
        assert slope == pytest.approx(1.0, abs=0.05)

    def test_needs_three_points(self):
        records = [
            ConvergenceRecord("S", 0.1, 0.01, 10, 0),
            ConvergenceRecord("S", 0.05, 0.005, 10, 0),
        ]
        with pytest.raises(ValueError, match=">= 3"):
            fit_order(ConvergenceTable(records))

    def test_records_with_exclusions_are_dropped(self):
        clean = [
            ConvergenceRecord("S", d, d, 10, 0) for d in (0.1, 0.05, 0.025)
        ]
        dirty = [ConvergenceRecord("S", 0.2, 99.0, 10, 3)]
        got = fit_order(ConvergenceTable(clean + dirty))["S"]
        assert got == pytest.approx(1.0, abs=1e-12)


class TestBounds1D:
    def test_start_at_initial_second_moment(self):
        b = bounds_1d(1.0, 0.5, 0.5, 1e-2, 4.0, [0.0, 1.0])
        assert b.k_lt[0] == 4.0 and b.k_s[0] == 4.0

    def test_toy_asymptotes(self):
        b = bounds_1d(1.0, 0.5, 0.5, 1e-2, 4.0, [0.0])
        assert b.k_lt_inf == pytest.approx(0.375, abs=0.0)
        assert b.k_s_inf == pytest.approx(0.3762541666388891, abs=1e-12)

    def test_strang_bound_dominates_and_monotone(self):
        t = np.linspace(0.0, 10.0, 400)
        b = bounds_1d(1.0, 0.5, 0.5, 1e-2, 4.0, t)
        assert np.all(b.k_s >= b.k_lt)
        assert np.all(np.diff(b.k_lt) < 0)  # decreasing from 4 toward 0.375
        bu = bounds_1d(1.0, 0.5, 0.5, 1e-2, 0.0, t)
        assert np.all(np.diff(bu.k_lt) > 0)  # increasing from 0

    def test_strang_limit_approaches_lie_trotter_limit(self):
        prev = np.inf
        for d0 in (1e-1, 1e-2, 1e-3, 1e-4):
            b = bounds_1d(1.0, 0.5, 0.5, d0, 4.0, [0.0])
            gap = b.k_s_inf - b.k_lt_inf
            assert 0.0 < gap < prev
            prev = gap
        assert prev < 1e-4

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            bounds_1d(0.0, 0.5, 0.5, 1e-2, 4.0, [0.0])
        with pytest.raises(ValueError):
            bounds_1d(1.0, 0.5, -0.1, 1e-2, 4.0, [0.0])


class TestPeriodogram:
    def test_pure_tone_peak(self):
        t = np.arange(0.0, 100.0, 0.01)
        sd = periodogram(np.sin(2.0 * np.pi * 3.0 * t), 0.01, 0.3)
        assert sd.peak_frequency == pytest.approx(3.0, abs=1.0 / 100.0)

    def test_peak_invariant_under_amplitude_scaling(self):
        t = np.arange(0.0, 50.0, 0.02)
        x = np.sin(2.0 * np.pi * 1.3 * t) + 0.1 * np.cos(2.0 * np.pi * 0.4 * t)
        a = periodogram(x, 0.02, 0.2).peak_frequency
        b = periodogram(123.4 * x, 0.02, 0.2).peak_frequency
        assert a == b

    def test_white_noise_is_flat(self):
        x = np.random.default_rng(0).standard_normal(4096)
        sd = periodogram(x, 0.01, 0.3)
        assert sd.power.max() <= 5.0 * np.median(sd.power)

    def test_parseval(self):
        x = np.random.default_rng(1).standard_normal(5000)
        sd = periodogram(x, 0.1, 0.3)
        assert sd.raw_power.sum() == pytest.approx(np.var(x), rel=0.01)

    def test_frequency_range(self):
        x = np.random.default_rng(2).standard_normal(256)
        sd = periodogram(x, 0.5, 0.3)
        assert sd.frequencies.min() > 0.0
        assert sd.frequencies.max() <= 1.0 / (2.0 * 0.5) + 1e-12

    def test_short_series_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            periodogram(np.ones(8), 0.1, 0.3)

    def test_bad_span_rejected(self):
        x = np.zeros(64)
        for span in (0.0, 1.0, -0.2):
            with pytest.raises(ValueError):
                periodogram(x, 0.1, span)


class TestKde:
    def test_normal_reference(self):
        x = np.random.default_rng(1).standard_normal(100_000)
        k = kde(x)
        assert np.trapezoid(k.density, k.grid) == pytest.approx(1.0, abs=1e-3)
        assert np.abs(k.density - norm.pdf(k.grid)).max() < 0.01

    def test_tight_cluster_normalised(self):
        x = np.random.default_rng(2).standard_normal(500) * 1e-9
        k = kde(x)
        assert np.trapezoid(k.density, k.grid) == pytest.approx(1.0, abs=1e-3)
        assert np.all(k.density >= 0.0)

    def test_single_sample_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            kde([1.0])

    def test_degenerate_sample_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            kde(np.zeros(100))

    def test_explicit_bandwidth_override(self):
        k = kde(np.zeros(100), bandwidth=0.5)
        assert k.bandwidth == 0.5
        assert np.trapezoid(k.density, k.grid) == pytest.approx(1.0, abs=1e-3)


class TestLtNll:
    MODEL = models.build_model(
        "fhn", eps=0.05, gamma=1.5, beta=0.1, sigma1=0.1, sigma2=0.2
    )

    def test_skeleton_data_leaves_only_logdet(self):
        delta = 0.01
        prop = integrators.make_propagator(self.MODEL, delta)
        x = np.array([0.4, -0.2])
        data = [x]
        for _ in range(5):
            data.append(prop.exp_At @ self.MODEL.flow(data[-1], delta))
        value = lt_nll(np.asarray(data), self.MODEL, delta)
        logdet = np.linalg.slogdet(prop.cov)[1]
        assert value == pytest.approx(5 * logdet, rel=1e-12)

    def test_matches_gaussian_oracle(self):
        delta = 0.01
        tr = integrators.simulate_path(
            self.MODEL, "LT", delta, 300, [0.0, 0.0], StreamKey(3, 0)
        )
        prop = integrators.make_propagator(self.MODEL, delta)
        resid = tr.states[1:] - self.MODEL.flow(tr.states[:-1], delta) @ prop.exp_At.T
        ref = gaussian_minus2_loglik(resid, prop.cov)
        assert lt_nll(tr.states, self.MODEL, delta) == pytest.approx(ref, abs=1e-10)

    def test_segment_additivity(self):
        delta = 0.01
        tr = integrators.simulate_path(
            self.MODEL, "LT", delta, 100, [0.1, 0.1], StreamKey(5, 0)
        )
        x = tr.states
        whole = lt_nll(x, self.MODEL, delta)
        parts = lt_nll(x[:51], self.MODEL, delta) + lt_nll(x[50:], self.MODEL, delta)
        assert whole == pytest.approx(parts, rel=1e-12)

    def test_transition_order_irrelevant(self):
        delta = 0.01
        tr = integrators.simulate_path(
            self.MODEL, "LT", delta, 60, [0.1, 0.1], StreamKey(6, 0)
        )
        x = tr.states
        segments = [x[i : i + 2] for i in range(len(x) - 1)]
        rng = np.random.default_rng(0)
        rng.shuffle(segments)
        shuffled = sum(lt_nll(s, self.MODEL, delta) for s in segments)
        assert shuffled == pytest.approx(lt_nll(x, self.MODEL, delta), rel=1e-10)

    def test_singular_covariance_rejected(self):
        silent = models.build_model(
            "custom",
            A=models.fhn_drift_matrix(FhnParams(eps=0.05, gamma=1.5)),
            Sigma=np.zeros((2, 2)),
            nonlinear_drift=lambda x: np.zeros_like(np.asarray(x, float)),
            flow=lambda x, t: np.asarray(x, float).copy(),
        )
        with pytest.raises(NotHypoellipticError, match="hypoelliptic"):
            lt_nll(np.zeros((5, 2)), silent, 0.01)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="at least 2"):
            lt_nll(np.zeros((1, 2)), self.MODEL, 0.01)

    def test_true_parameters_beat_perturbed(self):
        # correctly specified likelihood wins on most seeds
        delta = 0.01
        perturbed = models.build_model(
            "fhn", eps=0.075, gamma=1.5, beta=0.1, sigma1=0.1, sigma2=0.2
        )
        ens = integrators.simulate_ensemble(
            self.MODEL, "LT", delta, 10_000, [0.0, 0.0], 1, 10
        )
        wins = 0
        for l in range(10):
            x = ens.states[l]
            if lt_nll(x, self.MODEL, delta) < lt_nll(x, perturbed, delta):
                wins += 1
        assert wins >= 6


class TestCheckAssumptions:
    def test_fhn_contractive_combination(self):
        m = models.build_model("fhn", eps=0.05, gamma=20.0, beta=0.0, sigma1=0.1, sigma2=0.2)
        rep = check_assumptions(m, n_samples=20_000, delta_grid=(1e-3, 1e-2, 0.1, 0.5, 1.0))
        assert rep["A5"].holds is True
        assert rep["A5"].constants["max_norm"] < 1.0
        # gamma = 1/eps puts the logarithmic norm exactly at zero
        assert rep["A6"].holds is False
        assert abs(rep["A6"].constants["mu"]) < 1e-12
        assert rep["A1"].holds and rep["A2"].holds and rep["A4.2"].holds
        assert rep["dissipativity"].holds is True
        assert rep.lyapunov and all(e["rho"] < 1.0 for e in rep.lyapunov)

    def test_toy_flow_growth_on_wide_box(self):
        m = models.build_model("toy", sigma=0.5)
        rep = check_assumptions(
            m, sample_box=(-1e6, 1e6), n_samples=100_000, delta_grid=(1e-4, 1e-2, 1.0)
        )
        assert rep["A4.2"].holds is True
        assert rep["A4.2"].constants == {"c4": 0.5}
        assert rep["A6"].holds is True  # mu(A) = -1
        assert rep["A4.1"].holds is True
        assert rep["A4.1"].constants["c3_witness"] > 0.0

    def test_undetermined_without_declared_constants(self):
        m = models.build_model(
            "custom",
            A=[[-1.0]],
            Sigma=[[1.0]],
            nonlinear_drift=lambda x: -np.asarray(x, float) ** 3,
            flow=lambda x, t: np.asarray(x, float).copy(),
        )
        rep = check_assumptions(m, n_samples=2_000)
        for name in ("A1", "A2", "A4.1", "A4.2", "dissipativity"):
            assert rep[name].holds is None
        assert rep["A6"].holds is True

    def test_fhn_with_input_has_undetermined_flow_growth(self):
        m = models.build_model("fhn", eps=1.0, gamma=1.0, beta=0.5, sigma2=1.0)
        rep = check_assumptions(m, n_samples=2_000)
        assert rep["A4.2"].holds is None

    def test_invalid_arguments(self):
        m = models.build_model("toy", sigma=1.0)
        with pytest.raises(ValueError):
            check_assumptions(m, n_samples=10)
        with pytest.raises(ValueError):
            check_assumptions(m, delta_grid=(0.0, 0.1))
        with pytest.raises(ValueError):
            check_assumptions(m, sample_box=(1.0, -1.0))


class TestHypoellipticityReport:
    def test_hypoelliptic_fhn(self):
        m = models.build_model(
            "fhn", eps=0.05, gamma=1.5, beta=0.0, sigma1=0.0, sigma2=0.2
        )
        rep = hypoellipticity_report(m, (1e-4, 1e-3, 1e-2, 1e-1))
        assert rep.one_step_hypoelliptic
        for e in rep.entries:
            assert e.hypoelliptic and e.det > 0.0
            assert e.em_rank == 1

    def test_elliptic_fhn_full_rank_everywhere(self):
        m = models.build_model(
            "fhn", eps=0.05, gamma=1.5, beta=0.0, sigma1=0.1, sigma2=0.2
        )
        rep = hypoellipticity_report(m, (1e-3, 1e-2))
        assert rep.one_step_hypoelliptic
        assert all(e.em_rank == 2 for e in rep.entries)

    def test_no_noise_is_degenerate(self):
        m = models.build_model(
            "custom",
            A=models.fhn_drift_matrix(FhnParams(eps=1.0, gamma=1.0)),
            Sigma=np.zeros((2, 2)),
            nonlinear_drift=lambda x: np.zeros_like(np.asarray(x, float)),
            flow=lambda x, t: np.asarray(x, float).copy(),
        )
        rep = hypoellipticity_report(m, (1e-2,))
        assert not rep.one_step_hypoelliptic
        assert rep.entries[0].em_rank == 0

    def test_invalid_grid(self):
        m = models.build_model("toy", sigma=1.0)
        with pytest.raises(ValueError):
            hypoellipticity_report(m, (0.0, 0.1))


class TestMomentSeries:
    def test_zero_ensemble(self):
        m = models.build_model(
            "custom",
            A=np.zeros((1, 1)),
            Sigma=np.zeros((1, 1)),
            nonlinear_drift=lambda x: np.zeros_like(np.asarray(x, float)),
            flow=lambda x, t: np.asarray(x, float).copy(),
        )
        ens = integrators.simulate_ensemble(m, "LT", 0.1, 10, [0.0], 0, 4)
        ms = moment_series(ens)
        assert np.array_equal(ms.mean_sq, np.zeros(11))

    def test_ou_reaches_stationary_trace(self):
        p = FhnParams(eps=0.05, gamma=1.5, beta=0.0, sigma1=0.1, sigma2=0.2)
        m = models.build_model(
            "custom",
            A=models.fhn_drift_matrix(p),
            Sigma=np.diag([p.sigma1, p.sigma2]),
            nonlinear_drift=lambda x: np.zeros_like(np.asarray(x, float)),
            flow=lambda x, t: np.asarray(x, float).copy(),
            exp_At=lambda t: models.fhn_mat_exp(p, t),
            cov=lambda t: models.fhn_cov(p, t),
        )
        ens = integrators.simulate_ensemble(m, "LT", 0.25, 120, [0.0, 0.0], 4, 4000)
        ms = moment_series(ens)
        target = float(np.trace(models.fhn_stationary_cov(p)))
        assert abs(ms.mean_sq[-1] - target) <= 3.0 * ms.se[-1]

    def test_exploded_paths_excluded(self):
        toy = models.build_model("toy", sigma=0.5)
        ens = integrators.simulate_ensemble(toy, "EM", 1e-4, 5, [1e4], 42, 8)
        with pytest.raises(ValueError, match="non-exploded"):
            moment_series(ens)

    def test_batch_means_recovers_iid_se(self):
        x = np.random.default_rng(0).standard_normal(100_000)
        mean, se = batch_means(x, 25)
        assert abs(mean) < 4.0 * se
        assert se == pytest.approx(1.0 / np.sqrt(100_000), rel=0.5)
