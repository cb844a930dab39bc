import math

import numpy as np
import pytest

from coexkit.model import (
    CoexParams,
    Point2,
    Scenario,
    ScenarioKind,
    ZeroAirtimeError,
    nearest_distance_pdf,
    nearest_distance_truncation,
    path_loss,
    rate_to_sinr_threshold,
)
from coexkit.units import dbm_to_mw, mw_to_dbm, per_km2_to_per_m2, per_m2_to_per_km2

PARAMS = CoexParams()


class TestPathLoss:
    def test_reference_distance_value(self):
        # (4*pi*f/c)^2 at 5 GHz
        assert path_loss(1.0, PARAMS) == pytest.approx(4.3865e4, rel=1e-4)

    def test_clamp_below_reference(self):
        assert path_loss(0.0, PARAMS) == path_loss(1.0, PARAMS)
        assert path_loss(0.5, PARAMS) == path_loss(1.0, PARAMS)

    def test_power_law_scaling(self):
        assert path_loss(10.0, PARAMS) == pytest.approx(path_loss(1.0, PARAMS) * 1e4, rel=1e-12)

    def test_monotone(self):
        d = np.linspace(0, 200, 400)
        losses = path_loss(d, PARAMS)
        assert np.all(np.diff(losses) >= 0)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            path_loss(-1.0, PARAMS)


class TestNearestDistancePdf:
    def test_zero_at_origin(self):
        assert nearest_distance_pdf(0.0, 4e-4) == 0.0

    def test_value_at_25m(self):
        # 2*pi*4e-4*25*exp(-4e-4*pi*625)
        assert nearest_distance_pdf(25.0, 4e-4) == pytest.approx(0.0287, abs=2e-4)

    @pytest.mark.parametrize("lam", [1e-6, 1e-4, 4e-4, 1e-2])
    def test_normalization(self, lam):
        r_max = nearest_distance_truncation(lam, tail=1e-12)
        r = np.linspace(0, r_max, 20001)
        total = np.trapezoid(nearest_distance_pdf(r, lam), r)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_matches_sampled_nearest_neighbor(self):
        # empirical histogram of nearest-node distances from sampled processes
        rng = np.random.default_rng(42)
        lam, half = 4e-4, 400.0
        dists = []
        for _ in range(3000):
            n = rng.poisson(lam * (2 * half) ** 2)
            pts = rng.uniform(-half, half, size=(n, 2))
            if n:
                dists.append(np.min(np.hypot(pts[:, 0], pts[:, 1])))
        dists = np.array(dists)
        lo, hi = 20.0, 30.0
        frac = np.mean((dists >= lo) & (dists < hi))
        expected = np.trapezoid(
            nearest_distance_pdf(np.linspace(lo, hi, 201), lam), np.linspace(lo, hi, 201)
        )
        stderr = math.sqrt(expected * (1 - expected) / len(dists))
        assert abs(frac - expected) < 4 * stderr + 1e-3


class TestRateThreshold:
    def test_zero_rate(self):
        assert rate_to_sinr_threshold(0.0, 0.7, 20e6) == 0.0

    def test_unit_exponent(self):
        assert rate_to_sinr_threshold(0.5 * 20e6, 0.5, 20e6) == pytest.approx(1.0)

    def test_lemma_inversion_example(self):
        assert rate_to_sinr_threshold(20e6, 0.5, 20e6) == pytest.approx(3.0)

    def test_zero_airtime_signals(self):
        with pytest.raises(ZeroAirtimeError):
            rate_to_sinr_threshold(1e6, 0.0, 20e6)


class TestUnits:
    @pytest.mark.parametrize("dbm", [-82.0, -62.0, 0.0, 23.0])
    def test_dbm_round_trip(self, dbm):
        assert mw_to_dbm(dbm_to_mw(dbm)) == pytest.approx(dbm, abs=1e-12)
        mw = dbm_to_mw(dbm)
        assert dbm_to_mw(mw_to_dbm(mw)) == pytest.approx(mw, rel=1e-12)

    def test_density_round_trip(self):
        assert per_m2_to_per_km2(per_km2_to_per_m2(400.0)) == pytest.approx(400.0, rel=1e-12)


class TestCoexParams:
    def test_table_defaults(self):
        p = CoexParams()
        assert p.p_w == pytest.approx(dbm_to_mw(23.0))
        assert p.gamma_cs == pytest.approx(dbm_to_mw(-82.0))
        assert p.gamma_ed == pytest.approx(dbm_to_mw(-62.0))
        assert p.lambda_w == pytest.approx(4e-4)
        assert p.alpha == 4.0 and p.mu == 1.0 and p.sigma_n2 == 0.0

    def test_cs_more_sensitive_than_ed(self):
        with pytest.raises(ValueError):
            CoexParams(gamma_cs=dbm_to_mw(-60.0))

    def test_alpha_integrability(self):
        with pytest.raises(ValueError):
            CoexParams(alpha=2.0)

    @pytest.mark.parametrize("kwargs", [
        {"lambda_w": -1.0},
        {"eta": 1.5},
        {"backoff_window": (1.0, 1.0)},
        {"sigma_n2": -1e-3},
    ])
    def test_invalid_fields(self, kwargs):
        with pytest.raises(ValueError):
            CoexParams(**kwargs)


class TestScenario:
    def test_duty_requires_eta(self):
        with pytest.raises(ValueError):
            Scenario(ScenarioKind.DUTY_CYCLE_SYNC)

    def test_lbt_requires_gamma_l(self):
        with pytest.raises(ValueError):
            Scenario(ScenarioKind.LBT_SAME_PRIORITY)

    def test_backoff_windows(self):
        assert Scenario(ScenarioKind.LBT_SAME_PRIORITY, gamma_l=1e-8).backoff_window == (0.0, 1.0)
        assert Scenario(ScenarioKind.LBT_LOWER_PRIORITY, gamma_l=1e-8).backoff_window == (1.0, 2.0)

    def test_baseline_substitution(self):
        p = CoexParams()
        resolved = Scenario(ScenarioKind.WIFI_WIFI).resolve(p)
        assert resolved.gamma_l == p.gamma_cs
        assert resolved.gamma_ed == p.gamma_cs
        assert resolved.p_l == p.p_w

    def test_wifi_only_drops_lte(self):
        assert Scenario(ScenarioKind.WIFI_ONLY).resolve(CoexParams()).lambda_l == 0.0


class TestPoint2:
    def test_norm_and_translate(self):
        p = Point2(3.0, 4.0)
        assert p.norm == 5.0
        assert (p - Point2(1.0, 1.0)) == Point2(2.0, 3.0)
        assert p.translate(Point2(-3.0, -4.0)).norm == 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Point2(float("nan"), 0.0)
