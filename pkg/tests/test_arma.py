import math

import numpy as np
import pytest

from beamwander import arma, stats
from beamwander.arma import (ArmaModel, chi2_quantile, diagnose_residuals,
                             fit_css, information_criteria, order_scan,
                             residuals, simulate, stationary_variance,
                             validate)

TABLE_MODEL = ArmaModel(c=0.0, ar=[1.759, -0.7626], ma=[-1.289, 0.3166],
                        sigma2=2150.0, sample_period=1 / 300)
TABLE_TRUTH = [0.0, 1.759, -0.7626, -1.289, 0.3166]


def quadratic_root_moduli(a2, a1):
    """Moduli of the roots of 1 + a1 z + a2 z^2, by the quadratic formula."""
    disc = a1 * a1 - 4 * a2
    if disc >= 0:
        r1 = (-a1 + math.sqrt(disc)) / (2 * a2)
        r2 = (-a1 - math.sqrt(disc)) / (2 * a2)
        return sorted([abs(r1), abs(r2)])
    mod = math.sqrt(1 / a2)  # |roots|^2 = c/a for conjugate pair of a z^2+b z+c
    return [mod, mod]


class TestValidate:
    def test_table_model_roots(self):
        rep = validate(TABLE_MODEL)
        assert rep.stationary and rep.invertible
        ar_expect = quadratic_root_moduli(0.7626, -1.759)
        ma_expect = quadratic_root_moduli(0.3166, -1.289)
        assert rep.ar_root_moduli == pytest.approx(ar_expect, abs=1e-6)
        assert rep.ma_root_moduli == pytest.approx(ma_expect, abs=1e-6)
        assert rep.ar_root_moduli == pytest.approx([1.016260, 1.290323], abs=1e-6)
        assert rep.ma_root_moduli == pytest.approx([1.042978, 3.028406], abs=1e-6)

    def test_white_noise(self):
        rep = validate(ArmaModel(c=0.0, ar=[], ma=[], sigma2=1.0))
        assert rep.stationary and rep.invertible
        assert rep.ar_root_moduli == [] and rep.ma_root_moduli == []

    def test_unit_root(self):
        rep = validate(ArmaModel(c=0.0, ar=[1.0], ma=[], sigma2=1.0))
        assert not rep.stationary
        assert rep.ar_root_moduli == pytest.approx([1.0])


class TestModelJson:
    def test_roundtrip(self):
        s = TABLE_MODEL.to_json()
        again = ArmaModel.from_json(s)
        assert again == TABLE_MODEL

    def test_schema_fields(self):
        d = TABLE_MODEL.to_dict()
        assert set(d) == {"c", "ar", "ma", "sigma2", "sample_period_s", "units"}

    def test_invalid_sigma2(self):
        with pytest.raises(ValueError):
            ArmaModel(c=0.0, ar=[], ma=[], sigma2=0.0)


class TestSimulate:
    def test_bit_reproducible(self):
        a = simulate(TABLE_MODEL, 500, seed=3)
        b = simulate(TABLE_MODEL, 500, seed=3)
        assert np.array_equal(a, b)
        c = simulate(TABLE_MODEL, 500, seed=4)
        assert not np.array_equal(a, c)

    def test_white_noise_variance(self):
        model = ArmaModel(c=0.0, ar=[], ma=[], sigma2=4.0)
        x = simulate(model, 1_000_000, seed=5)
        assert float(x.var()) == pytest.approx(4.0, rel=0.01)

    def test_ar1_stationary_variance(self):
        model = ArmaModel(c=0.0, ar=[0.5], ma=[], sigma2=1.0)
        x = simulate(model, 1_000_000, seed=6)
        assert float(x.var()) == pytest.approx(1 / (1 - 0.25), rel=0.01)

    def test_table_model_acf_lag1(self):
        # theoretical lag-1 ACF from a long-run simulation oracle
        oracle = stats.acf(simulate(TABLE_MODEL, 1_000_000, seed=7), 1).values[1]
        r = stats.acf(simulate(TABLE_MODEL, 3000, seed=8), 1)
        assert abs(r.values[1] - oracle) < r.significance_bound

    def test_nonstationary_rejected(self):
        bad = ArmaModel(c=0.0, ar=[1.01], ma=[], sigma2=1.0)
        with pytest.raises(ValueError):
            simulate(bad, 100, seed=0)

    def test_bad_n(self):
        with pytest.raises(ValueError):
            simulate(TABLE_MODEL, 0, seed=0)

    def test_constant_term_shifts_mean(self):
        model = ArmaModel(c=1.0, ar=[0.5], ma=[], sigma2=0.01)
        x = simulate(model, 200_000, seed=9)
        assert float(x.mean()) == pytest.approx(1.0 / (1 - 0.5), rel=0.01)


class TestResiduals:
    def test_recovers_innovations(self):
        # zero burn-in keeps the zero-initial-condition transient, making
        # inversion exact; innovations regenerated from the documented stream
        n = 2000
        x = simulate(TABLE_MODEL, n, seed=10, burn_in=0)
        eps = np.random.default_rng(10).normal(0, math.sqrt(TABLE_MODEL.sigma2), n)
        res = residuals(TABLE_MODEL, x)
        warm = max(TABLE_MODEL.p, TABLE_MODEL.q)
        assert np.max(np.abs(res[warm:] - eps[warm:])) < 1e-9

    def test_identity_for_white_noise_model(self):
        x = np.random.default_rng(11).normal(size=50)
        model = ArmaModel(c=0.0, ar=[], ma=[], sigma2=1.0)
        assert np.array_equal(residuals(model, x), x)

    def test_mean_model_centers(self):
        x = np.random.default_rng(12).normal(loc=3.0, size=50)
        model = ArmaModel(c=float(x.mean()), ar=[], ma=[], sigma2=1.0)
        assert np.allclose(residuals(model, x), x - x.mean(), atol=1e-12)


class TestInformationCriteria:
    def test_zero(self):
        assert information_criteria(0.0, 0, 100) == (0.0, 0.0)

    def test_penalty_sizes(self):
        aic, bic = information_criteria(-100.0, 4, 3000)
        assert bic - 200.0 == pytest.approx(4 * math.log(3000), rel=1e-12)
        assert aic - 200.0 == pytest.approx(8.0, rel=1e-12)
        assert 4 * math.log(3000) > 8.0

    def test_monotone_in_k(self):
        prev_aic, prev_bic = information_criteria(-50.0, 0, 100)
        for k in range(1, 6):
            aic, bic = information_criteria(-50.0, k, 100)
            assert aic > prev_aic and bic > prev_bic
            prev_aic, prev_bic = aic, bic

    def test_requires_n_gt_k(self):
        with pytest.raises(ValueError):
            information_criteria(0.0, 10, 10)


class TestFitCss:
    def test_white_noise_fit(self):
        x = np.random.default_rng(13).normal(size=10_000)
        rep = fit_css(x, 0, 0)
        assert rep.model.c == pytest.approx(0.0, abs=0.05)
        assert rep.model.sigma2 == pytest.approx(1.0, rel=0.05)

    def test_ar1_recovery(self):
        model = ArmaModel(c=0.0, ar=[0.9], ma=[], sigma2=1.0)
        x = simulate(model, 10_000, seed=14)
        rep = fit_css(x, 1, 0)
        assert rep.model.ar[0] == pytest.approx(0.9, abs=0.02)

    def test_table_roundtrip_single_seed(self):
        x = simulate(TABLE_MODEL, 3000, seed=15)
        rep = fit_css(x, 2, 2)
        est = [rep.model.c] + rep.model.ar + rep.model.ma
        for e, t, s in zip(est, TABLE_TRUTH, rep.stderr):
            assert abs(e - t) <= 3 * s
        assert rep.model.sigma2 == pytest.approx(2150.0, rel=0.20)
        assert rep.stationary and rep.invertible

    def test_sigma2_positive_and_css_finite(self):
        x = simulate(TABLE_MODEL, 1000, seed=16)
        rep = fit_css(x, 1, 1)
        assert rep.model.sigma2 > 0
        assert math.isfinite(rep.css)

    def test_nested_css_with_warm_start(self):
        x = simulate(TABLE_MODEL, 3000, seed=17)
        small = fit_css(x, 1, 1)
        start = np.concatenate(([small.model.c], small.model.ar, [0.0],
                                small.model.ma, [0.0]))
        big = fit_css(x, 2, 2, start_params=start)
        assert big.css <= small.css * (1 + 1e-9)

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            fit_css(np.zeros(30), 2, 2)

    def test_nonfinite_rejected(self):
        x = np.ones(1000)
        x[3] = np.nan
        with pytest.raises(ValueError):
            fit_css(x, 1, 0)

    def test_fixed_c(self):
        x = simulate(TABLE_MODEL, 2000, seed=18)
        rep = fit_css(x, 1, 1, estimate_c=False)
        assert rep.model.c == 0.0


class TestOrderScan:
    def test_white_noise_selects_00(self):
        x = np.random.default_rng(19).normal(size=2000)
        scan = order_scan(x, 2, 2)
        assert scan.selected_bic == (0, 0)

    def test_ar1_root_recovered(self):
        model = ArmaModel(c=0.0, ar=[0.9], ma=[], sigma2=1.0)
        x = simulate(model, 5000, seed=20)
        scan = order_scan(x, 2, 2)
        p_sel, q_sel = scan.selected_bic
        rep = fit_css(x, p_sel, q_sel)
        root = min(validate(rep.model).ar_root_moduli)
        assert root == pytest.approx(1 / 0.9, rel=0.05)

    def test_nested_css_monotone_across_grid(self):
        x = simulate(TABLE_MODEL, 3000, seed=21)
        scan = order_scan(x, 3, 3)
        css = {(r["p"], r["q"]): r["css"] for r in scan.rows}
        for (p, q), c in css.items():
            for prev in ((p - 1, q), (p, q - 1)):
                if prev in css and math.isfinite(css[prev]):
                    assert c <= css[prev] * (1 + 1e-9)

    def test_rows_cover_grid(self):
        x = np.random.default_rng(22).normal(size=1000)
        scan = order_scan(x, 1, 2)
        assert {(r["p"], r["q"]) for r in scan.rows} == {
            (p, q) for p in range(2) for q in range(3)}


class TestDiagnostics:
    def test_lag_zero_is_one(self):
        x = np.random.default_rng(23).normal(size=500)
        assert diagnose_residuals(x, 10).acf[0] == 1.0

    def test_white_noise_passes_mostly(self):
        passes = sum(
            diagnose_residuals(np.random.default_rng(s).normal(size=3000), 20).passed
            for s in range(20))
        assert passes >= 18

    def test_ar1_against_white_model_fails(self):
        model = ArmaModel(c=0.0, ar=[0.9], ma=[], sigma2=1.0)
        x = simulate(model, 3000, seed=24)
        d = diagnose_residuals(x, 20)
        assert not d.passed
        assert abs(d.acf[1]) > 0.8

    def test_chi2_quantile_against_scipy(self):
        from scipy.stats import chi2
        for df in (5, 10, 16, 20):
            assert chi2_quantile(0.99, df) == pytest.approx(chi2.ppf(0.99, df), rel=0.01)


class TestStationaryVariance:
    def test_ar1_closed_form(self):
        model = ArmaModel(c=0.0, ar=[0.5], ma=[], sigma2=2.0)
        assert stationary_variance(model) == pytest.approx(2.0 / 0.75, rel=1e-10)

    def test_table_model_matches_simulation(self):
        x = simulate(TABLE_MODEL, 2_000_000, seed=25)
        assert stationary_variance(TABLE_MODEL) == pytest.approx(float(x.var()), rel=0.02)
