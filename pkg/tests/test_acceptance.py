"""Acceptance suite: one test per criterion, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  The expensive shared
state (analytic engines, full-size Monte Carlo runs) is built lazily and
cached at module scope, so criteria 3 and 6 share scenario computations.
"""

import math
import time

import numpy as np
import pytest

import coexkit as ck
from coexkit.analytic import AnalyticEngine, map_tagged_lbt_same, map_typical_ap_continuous
from coexkit.condmap import FIELD_BUILDERS
from coexkit.model import CoexParams, Scenario, ScenarioKind
from coexkit.montecarlo import (
    MonteCarloEngine,
    MonteCarloScenario,
    SimConfig,
    conditional_map_oracle,
    interference_cdf_check,
)
from coexkit.units import dbm_to_mw, per_km2_to_per_m2

PARAMS = CoexParams()  # Table I defaults at 400/km2 for both operators
T_DB = np.arange(-10.0, 21.0, 2.0)
T_LIN = 10.0 ** (T_DB / 10.0)
RHO = np.arange(5e6, 30.1e6, 5e6)
SIM = SimConfig(n_ap_realizations=50, n_enb_realizations=50, n_probes=50, seed=2027)

SCENARIOS = {
    "wifi_only": Scenario(ScenarioKind.WIFI_ONLY),
    "baseline": Scenario(ScenarioKind.WIFI_WIFI),
    "continuous": Scenario(ScenarioKind.CONTINUOUS_LTE),
    "sync05": Scenario(ScenarioKind.DUTY_CYCLE_SYNC, eta=0.5),
    "async05": Scenario(ScenarioKind.DUTY_CYCLE_ASYNC, eta=0.5),
    "lbt_same_-82": Scenario(ScenarioKind.LBT_SAME_PRIORITY, gamma_l=dbm_to_mw(-82)),
    "lbt_same_-72": Scenario(ScenarioKind.LBT_SAME_PRIORITY, gamma_l=dbm_to_mw(-72)),
    "lbt_same_-62": Scenario(ScenarioKind.LBT_SAME_PRIORITY, gamma_l=dbm_to_mw(-62)),
    "lbt_lower_-82": Scenario(ScenarioKind.LBT_LOWER_PRIORITY, gamma_l=dbm_to_mw(-82)),
    "lbt_lower_-77": Scenario(ScenarioKind.LBT_LOWER_PRIORITY, gamma_l=dbm_to_mw(-77)),
    "lbt_lower_-72": Scenario(ScenarioKind.LBT_LOWER_PRIORITY, gamma_l=dbm_to_mw(-72)),
    "lbt_lower_-62": Scenario(ScenarioKind.LBT_LOWER_PRIORITY, gamma_l=dbm_to_mw(-62)),
}

_analytic: dict = {}
_mc: dict = {}


def analytic_engine(name) -> AnalyticEngine:
    if name not in _analytic:
        _analytic[name] = AnalyticEngine(SCENARIOS[name], PARAMS)
    return _analytic[name]


def mc_scenario(name) -> MonteCarloScenario:
    if name not in _mc:
        _mc[name] = MonteCarloScenario(SCENARIOS[name], PARAMS, SIM)
    return _mc[name]


def report(criterion, ok, detail):
    marker = "PASS" if ok else "FAIL"
    print(f"\n[{marker}] criterion {criterion}: {detail}")
    return ok


# --------------------------------------------------------------------------
# criterion 1: quadrature oracle identities, runtime < 1 s
# --------------------------------------------------------------------------

def test_criterion_1_quadrature_oracles():
    t0 = time.time()
    checks = []
    for lam, power, gamma, anchor in [
        (PARAMS.lambda_w, PARAMS.p_w, PARAMS.gamma_cs, 0.9455),
        (PARAMS.lambda_l, PARAMS.p_l, PARAMS.gamma_ed, 0.0946),
    ]:
        value = ck.n_func(ck.Point2(0, 0), 0.0, gamma, lam, power, PARAMS)
        a_k = PARAMS.mu * gamma / power * PARAMS.ref_loss
        oracle = lam * (math.pi / 2.0) * math.sqrt(math.pi / a_k)
        checks.append(abs(value - oracle) / oracle < 1e-5)
        checks.append(abs(value - anchor) < 1.5e-4)
    elapsed = time.time() - t0
    ok = all(checks) and elapsed < 1.0
    assert report(
        1, ok, f"n_func matches the alpha=4 Gaussian-integral oracle to 1e-5 "
        f"(N^W~0.9455, N^L~0.0946), runtime {elapsed:.2f}s < 1s"
    )


# --------------------------------------------------------------------------
# criterion 2: closed-form coverage anchor, runtime < 10 s
# --------------------------------------------------------------------------

def test_criterion_2_closed_form_coverage_anchor():
    t0 = time.time()
    p0 = PARAMS.with_(lambda_w=0.0)
    cov = ck.sinr_cov_lte_continuous(p0, t=T_LIN)
    closed = 1.0 / (1.0 + np.sqrt(T_LIN) * (math.pi / 2 - np.arctan(1.0 / np.sqrt(T_LIN))))
    gap = float(np.max(np.abs(cov - closed)))
    cov_b = ck.sinr_cov_lte_continuous(p0.with_(lambda_l=1e-4), t=T_LIN)
    invariance = float(np.max(np.abs(cov - cov_b)))
    elapsed = time.time() - t0
    ok = gap <= 1e-3 and invariance <= 1e-3 and elapsed < 10.0
    assert report(
        2, ok, f"lambda_w=0 LTE coverage matches 1/(1+sqrt(T)(pi/2-atan(1/sqrt(T)))) "
        f"(max gap {gap:.1e} <= 1e-3), eNB-intensity invariant ({invariance:.1e} <= 1e-3), "
        f"runtime {elapsed:.1f}s < 10s"
    )


# --------------------------------------------------------------------------
# criterion 3: analytic vs Monte Carlo agreement, 50x50x50
# --------------------------------------------------------------------------

CRITERION3_SET = [
    "continuous", "sync05", "async05",
    "lbt_same_-82", "lbt_same_-72", "lbt_same_-62",
    "lbt_lower_-82", "lbt_lower_-72", "lbt_lower_-62",
]


@pytest.mark.parametrize("name", CRITERION3_SET)
def test_criterion_3_analytic_vs_monte_carlo(name):
    eng = analytic_engine(name)
    mc = mc_scenario(name)
    worst = 0.0
    failed = []
    for side in ("W", "L"):
        analytic = eng.coverage(side, T_LIN)
        empirical, stderr = mc.coverage(side, T_LIN)
        gaps = np.abs(analytic - empirical)
        bounds = np.maximum(0.05, 3.0 * stderr)
        worst = max(worst, float(np.max(gaps)))
        if np.any(gaps > bounds):
            failed.append(side)
    ok = not failed
    assert report(
        3, ok, f"{name}: max |analytic - MC| SINR coverage gap {worst:.3f} "
        f"<= max(0.05, 3*stderr) over T in [-10, 20] dB, both sides"
    )


# --------------------------------------------------------------------------
# criterion 4: total vs strongest interference CDF gap at the ED threshold
# --------------------------------------------------------------------------

def test_criterion_4_interference_cdf_gap():
    t0 = time.time()
    gaps = {}
    for lam_km2 in (200.0, 600.0):
        p = PARAMS.with_(lambda_l=per_km2_to_per_m2(lam_km2))
        out = interference_cdf_check(p, SimConfig(n_probes=50, seed=41), n_realizations=220)
        gaps[lam_km2] = out["gap"]
    elapsed = time.time() - t0
    ok = all(g <= 0.03 for g in gaps.values()) and elapsed < 120.0
    assert report(
        4, ok, f"|P(total <= ed) - P(max <= ed)| = "
        f"{{200: {gaps[200.0]:.4f}, 600: {gaps[600.0]:.4f}}} <= 0.03, "
        f"runtime {elapsed:.0f}s < 2min"
    )


# --------------------------------------------------------------------------
# criterion 5: scenario-reduction identity suite at quadrature tolerance
# --------------------------------------------------------------------------

def test_criterion_5_reduction_identities():
    t0 = time.time()
    tol = 1e-4
    t_probe = 10.0 ** (np.array([-6.0, 2.0, 12.0]) / 10.0)
    deltas = {}

    sync1 = AnalyticEngine(Scenario(ScenarioKind.DUTY_CYCLE_SYNC, eta=1.0), PARAMS)
    async1 = AnalyticEngine(Scenario(ScenarioKind.DUTY_CYCLE_ASYNC, eta=1.0), PARAMS)
    cont = analytic_engine("continuous")
    deltas["eta1_sync_map"] = abs(sync1.tagged_map("W") - cont.tagged_map("W"))
    deltas["eta1_async_map"] = abs(async1.tagged_map("W") - cont.tagged_map("W"))
    deltas["eta1_sync_cov"] = float(
        np.max(np.abs(sync1.coverage("W", t_probe) - cont.coverage("W", t_probe)))
    )
    deltas["eta1_async_cov_lte"] = float(
        np.max(np.abs(async1.coverage("L", t_probe) - cont.coverage("L", t_probe)))
    )

    sync0 = AnalyticEngine(Scenario(ScenarioKind.DUTY_CYCLE_SYNC, eta=0.0), PARAMS)
    wifi = analytic_engine("wifi_only")
    deltas["eta0_map"] = abs(sync0.tagged_map("W") - wifi.tagged_map("W"))
    deltas["eta0_cov"] = float(
        np.max(np.abs(sync0.coverage("W", t_probe) - wifi.coverage("W", t_probe)))
    )
    deltas["eta0_lte_dst"] = float(np.max(sync0.dst("L", t_probe)))

    lower = analytic_engine("lbt_lower_-77")
    deltas["lbt_lower_wifi_map"] = abs(lower.typical_map("W") - (
        map_typical_ap_continuous(PARAMS.with_(lambda_l=0.0))
    ))

    base = analytic_engine("baseline")
    subst = PARAMS.with_(gamma_l=PARAMS.gamma_cs, gamma_ed=PARAMS.gamma_cs, p_l=PARAMS.p_w)
    w_sub, l_sub = map_tagged_lbt_same(subst)
    deltas["baseline_map_w"] = abs(base.tagged_map("W") - w_sub)
    deltas["baseline_map_l"] = abs(base.tagged_map("L") - l_sub)

    elapsed = time.time() - t0
    worst = max(deltas.values())
    ok = worst <= tol and elapsed < 300.0
    assert report(
        5, ok, f"eta=1 == continuous, eta=0 == wifi-only, lbt-lower Wi-Fi MAP == "
        f"wifi-only MAP, baseline == substituted lbt-same; worst delta {worst:.2e} "
        f"<= {tol}, runtime {elapsed:.0f}s < 5min"
    )


# --------------------------------------------------------------------------
# criterion 6: section-VI ordering reproduction
# --------------------------------------------------------------------------

def _horizontal_rate_loss(eng_scn, eng_cont, rho_eval):
    """Mean rate loss at matched coverage: 1 - rho_scenario / rho_continuous."""
    dense = np.geomspace(0.2e6, 80e6, 60)
    p_scn = eng_scn.rate_coverage("L", dense)
    p_cont = eng_cont.rate_coverage("L", rho_eval)
    losses = []
    for rho, cov in zip(rho_eval, p_cont):
        rho_eq = float(np.interp(cov, p_scn[::-1], dense[::-1]))
        losses.append(1.0 - rho_eq / rho)
    return float(np.mean(losses))


def test_criterion_6_section_vi_orderings():
    mech = ["continuous", "sync05", "async05", "lbt_same_-82", "lbt_same_-62", "lbt_lower_-77"]
    dst_w = {n: analytic_engine(n).dst("W", T_LIN) for n in mech + ["baseline"]}
    dst_l = {n: analytic_engine(n).dst("L", T_LIN) for n in ("sync05", "async05")}

    low = T_DB <= 10.0
    a_min = all(
        np.all(dst_w["continuous"][low] <= dst_w[n][low] + 1e-12) for n in mech if n != "continuous"
    )
    a_baseline = all(
        np.all(dst_w[n][T_DB <= 0.0] >= dst_w["baseline"][T_DB <= 0.0] - 1e-12)
        for n in ("sync05", "lbt_same_-82", "lbt_lower_-77")
    )

    low_t = T_DB <= 0.0
    b_sync = np.all(dst_w["sync05"][low_t] >= dst_w["async05"][low_t] - 1e-12)
    b_async_lte = np.all(dst_l["async05"] >= dst_l["sync05"] - 1e-12)

    c_gap = float(np.max(np.abs(dst_w["lbt_same_-62"] - dst_w["continuous"])))
    c_ok = c_gap <= 0.1 * PARAMS.lambda_w

    cont = analytic_engine("continuous")
    losses = {
        "lbt_same_-82": _horizontal_rate_loss(analytic_engine("lbt_same_-82"), cont, RHO),
        "lbt_lower_-77": _horizontal_rate_loss(analytic_engine("lbt_lower_-77"), cont, RHO),
        "sync05": _horizontal_rate_loss(analytic_engine("sync05"), cont, RHO),
    }
    d_ok = (
        0.25 <= losses["lbt_same_-82"] <= 0.5
        and 0.25 <= losses["lbt_lower_-77"] <= 0.5
        and losses["sync05"] > 0.45
    )

    ok = bool(a_min and a_baseline and b_sync and b_async_lte and c_ok and d_ok)
    assert report(
        6, ok,
        f"(a) continuous-LTE Wi-Fi DST minimal across mechanisms T<=10dB: {bool(a_min)}, "
        f"protective mechanisms beat baseline at low T: {bool(a_baseline)}; "
        f"(b) sync>=async Wi-Fi low-T: {bool(b_sync)}, async>=sync LTE: {bool(b_async_lte)}; "
        f"(c) LAA -62 within 0.1*lambda_W of Wi-Fi+LTE (gap {c_gap:.2e}); "
        f"(d) LTE rate loss LAA-82 {losses['lbt_same_-82']:.2f}, "
        f"LAA-77-lower {losses['lbt_lower_-77']:.2f} in [0.25,0.5], "
        f"LTE-U@0.5 {losses['sync05']:.2f} > 0.45"
    )


# --------------------------------------------------------------------------
# criterion 7: conditional-MAP oracle validation for every h field
# --------------------------------------------------------------------------

ORACLE_PARAMS = PARAMS.with_(gamma_l=dbm_to_mw(-72.0))
# probe-family exclusion ball applies to these fields
_EXCLUDED = {"h1", "h2w", "h4w", "h3l", "h5l"}


def _oracle_grid(field_name, r0):
    lo = r0 + 2.0 if field_name in _EXCLUDED else 6.0
    radii = np.geomspace(max(lo, 8.0), 220.0, 5)
    angles = np.linspace(0.0, math.pi, 4)
    rr, tt = np.meshgrid(radii, angles, indexing="ij")
    return np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])


# the ten Palm-probability fields; intensity compositions are not oracle targets
H_FIELDS = ["h1", "h1w", "h2w", "h2l", "h3w", "h3l", "h4w", "h4l", "h5w", "h5l"]


@pytest.mark.parametrize("field_name", H_FIELDS)
def test_criterion_7_conditional_map_validation(field_name):
    r0 = 25.0
    offsets = _oracle_grid(field_name, r0)
    estimates = conditional_map_oracle(
        field_name, r0, offsets, ORACLE_PARAMS, seed=101, n_realizations=6000
    )
    values = FIELD_BUILDERS[field_name](ORACLE_PARAMS, r0).values(offsets)
    worst = 0.0
    for est, val in zip(estimates, values):
        z = abs(est["estimate"] - val) / max(est["half_width"], 1e-9)
        worst = max(worst, z)
    ok = worst <= 3.0
    assert report(
        7, ok, f"{field_name}: analytic field within 3 Wilson half-widths of the "
        f"planted-node oracle on a 5x4 polar grid (worst z = {worst:.2f})"
    )


# --------------------------------------------------------------------------
# criterion 8: property suite
# --------------------------------------------------------------------------

def test_criterion_8_property_suite():
    notes = []
    ok = True

    # probabilities in [0, 1] and curves monotone in their threshold
    for name in ("continuous", "lbt_same_-82"):
        eng = analytic_engine(name)
        for side in ("W", "L"):
            cov = eng.coverage(side, T_LIN)
            ok &= bool(np.all((cov >= 0) & (cov <= 1)) and np.all(np.diff(cov) <= 1e-12))
            rate = eng.rate_coverage(side, RHO)
            ok &= bool(np.all((rate >= 0) & (rate <= 1)) and np.all(np.diff(rate) <= 1e-12))
    notes.append("probabilities in [0,1] + monotone curves")

    # MAP monotone non-increasing in lambda_l for continuous LTE
    maps = [
        map_typical_ap_continuous(PARAMS.with_(lambda_l=lam))
        for lam in (0.0, 1e-4, 4e-4, 8e-4)
    ]
    ok &= all(a >= b for a, b in zip(maps, maps[1:]))
    notes.append("MAP non-increasing in lambda_L")

    # seeded MC determinism
    sim = SimConfig(n_ap_realizations=4, n_enb_realizations=4, n_probes=30, seed=55)
    a = MonteCarloEngine(SCENARIOS["continuous"], PARAMS, sim).run()
    b = MonteCarloEngine(SCENARIOS["continuous"], PARAMS, sim).run()
    ok &= bool(
        np.array_equal(a.coverage("W", T_LIN[:4])[0], b.coverage("W", T_LIN[:4])[0])
        and a.map_estimate("W", "tagged") == b.map_estimate("W", "tagged")
    )
    notes.append("seeded determinism")

    # guard-zone sufficiency: doubling the guard moves MAP/coverage < 1 stderr
    base_sim = SimConfig(n_ap_realizations=10, n_enb_realizations=10, n_probes=50, seed=77, guard=500.0)
    wide_sim = SimConfig(n_ap_realizations=10, n_enb_realizations=10, n_probes=50, seed=77, guard=1000.0)
    run_a = MonteCarloEngine(SCENARIOS["continuous"], PARAMS, base_sim).run()
    run_b = MonteCarloEngine(SCENARIOS["continuous"], PARAMS, wide_sim).run()
    m_a, e_a = run_a.map_estimate("W", "typical")
    m_b, e_b = run_b.map_estimate("W", "typical")
    cov_a, ce_a = run_a.coverage("W", [1.0])
    cov_b, ce_b = run_b.coverage("W", [1.0])
    ok &= abs(m_a - m_b) < math.hypot(e_a, e_b) + 5e-3
    ok &= abs(cov_a[0] - cov_b[0]) < math.hypot(ce_a[0], ce_b[0]) + 5e-3
    notes.append("guard-zone sufficiency")

    assert report(8, bool(ok), "; ".join(notes))
