"""Command line entry point: scenario sweeps, result emission, comparisons.

Configuration is JSON with units spelled out in the field names (densities
per km^2, powers and thresholds in dBm); everything is converted to SI
linear on load.  One CSV is written per (scenario, metric, engine), plus a
summary JSON with the scenario-reduction identity checks and, when both
engines run, the analytic-vs-Monte-Carlo gap statistics.

Exit codes: 0 success, 2 configuration/validation failure, 3 quadrature
non-convergence in at least one sweep cell.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analytic import AnalyticEngine, map_tagged_lbt_same
from .condmap import typical_map_wifi_only
from .curves import MetricCurve, read_curves, write_curves
from .model import CoexParams, Scenario, ScenarioKind
from .montecarlo import MonteCarloScenario, SimConfig
from .quadrature import QuadratureError, QuadratureSpec
from .units import dbm_to_mw, per_km2_to_per_m2

ENGINES = ("analytic", "monte-carlo")


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists the offending fields."""


@dataclass
class ExperimentConfig:
    params: CoexParams
    scenarios: list[Scenario]
    t_grid_db: list[float]
    rho_grid_bps: list[float]
    engine: str = "analytic"
    sim: SimConfig = field(default_factory=SimConfig)
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    out_dir: str = "results"
    jobs: int = 1
    metrics: tuple = ("map", "sinr_coverage", "dst", "rate_coverage")
    # lambda_l values (per km^2) for the total-vs-strongest interference CDFs
    interference_cdf_lambdas: tuple = (200.0, 600.0)
    interference_cdf_realizations: int = 120


def _grid(node, name, errors):
    if isinstance(node, list):
        return [float(x) for x in node]
    if isinstance(node, dict):
        try:
            start, stop, step = float(node["start"]), float(node["stop"]), float(node["step"])
        except KeyError as exc:
            errors.append(f"{name}: missing {exc}")
            return []
        if step <= 0 or stop < start:
            errors.append(f"{name}: need step > 0 and stop >= start")
            return []
        n = int(round((stop - start) / step)) + 1
        return [start + k * step for k in range(n)]
    errors.append(f"{name}: expected a list or {{start, stop, step}}")
    return []


_SCENARIO_KINDS = {k.value: k for k in ScenarioKind}


def parse_config(doc: dict) -> ExperimentConfig:
    errors: list[str] = []

    def take(name, default=None, convert=float):
        if name in doc:
            try:
                return convert(doc[name])
            except (TypeError, ValueError) as exc:
                errors.append(f"{name}: {exc}")
                return default
        return default

    kwargs = {}
    for json_name, attr, convert in [
        ("lambda_w_per_km2", "lambda_w", per_km2_to_per_m2),
        ("lambda_l_per_km2", "lambda_l", per_km2_to_per_m2),
        ("p_w_dbm", "p_w", dbm_to_mw),
        ("p_l_dbm", "p_l", dbm_to_mw),
        ("gamma_cs_dbm", "gamma_cs", dbm_to_mw),
        ("gamma_ed_dbm", "gamma_ed", dbm_to_mw),
        ("f_c_hz", "f_c", float),
        ("alpha", "alpha", float),
        ("mu", "mu", float),
        ("sigma_n2_mw", "sigma_n2", float),
        ("bandwidth_hz", "bandwidth", float),
    ]:
        value = take(json_name, convert=convert)
        if value is not None:
            kwargs[attr] = value
    try:
        params = CoexParams(**kwargs)
    except ValueError as exc:
        errors.append(str(exc))
        params = CoexParams()

    scenarios = []
    raw_scenarios = doc.get("scenarios", [])
    if not raw_scenarios:
        errors.append("scenarios: at least one scenario is required")
    for idx, node in enumerate(raw_scenarios):
        if isinstance(node, str):
            node = {"kind": node}
        kind_name = node.get("kind")
        if kind_name not in _SCENARIO_KINDS:
            errors.append(f"scenarios[{idx}]: unknown kind {kind_name!r}")
            continue
        gamma_l = node.get("gamma_l_dbm")
        try:
            scenarios.append(
                Scenario(
                    _SCENARIO_KINDS[kind_name],
                    eta=node.get("eta"),
                    gamma_l=dbm_to_mw(float(gamma_l)) if gamma_l is not None else None,
                )
            )
        except ValueError as exc:
            errors.append(f"scenarios[{idx}]: {exc}")

    t_grid = _grid(doc.get("t_grid_db", {"start": -10, "stop": 20, "step": 2}), "t_grid_db", errors)
    rho_mbps = _grid(doc.get("rho_grid_mbps", {"start": 5, "stop": 30, "step": 5}), "rho_grid_mbps", errors)
    if not t_grid and not rho_mbps:
        errors.append("at least one sweep axis (t_grid_db or rho_grid_mbps) is required")

    engine = doc.get("engine", "analytic")
    if engine not in ENGINES + ("both",):
        errors.append(f"engine: expected one of {ENGINES + ('both',)}, got {engine!r}")

    sim_node = doc.get("sim", {})
    try:
        sim = SimConfig(
            side=float(sim_node.get("side_m", 1000.0)),
            guard=float(sim_node.get("guard_m", 500.0)),
            n_ap_realizations=int(sim_node.get("n_ap_realizations", 50)),
            n_enb_realizations=int(sim_node.get("n_enb_realizations", 50)),
            n_probes=int(sim_node.get("n_probes", 50)),
            seed=int(doc.get("seed", 0)),
            mac_draws=int(sim_node.get("mac_draws", 1)),
            ed_mode=sim_node.get("ed_mode", "max"),
        )
    except ValueError as exc:
        errors.append(f"sim: {exc}")
        sim = SimConfig()

    quad_node = doc.get("quadrature", {})
    try:
        quadrature = QuadratureSpec(
            rel_tol=float(quad_node.get("rel_tol", 1e-6)),
            abs_tol=float(quad_node.get("abs_tol", 1e-10)),
            r_max=float(quad_node.get("r_max_m", 1e5)),
            radial_points=int(quad_node.get("radial_points", 10)),
            angular_points=int(quad_node.get("angular_points", 8)),
        )
    except ValueError as exc:
        errors.append(f"quadrature: {exc}")
        quadrature = QuadratureSpec()

    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    cdf_node = doc.get("interference_cdf", {})
    return ExperimentConfig(
        params=params,
        scenarios=scenarios,
        t_grid_db=t_grid,
        rho_grid_bps=[r * 1e6 for r in rho_mbps],
        engine=engine,
        sim=sim,
        quadrature=quadrature,
        out_dir=doc.get("out_dir", "results"),
        jobs=int(doc.get("jobs", 1)),
        metrics=tuple(doc.get("metrics", ("map", "sinr_coverage", "dst", "rate_coverage"))),
        interference_cdf_lambdas=tuple(cdf_node.get("lambda_l_per_km2", (200.0, 600.0))),
        interference_cdf_realizations=int(cdf_node.get("n_realizations", 120)),
    )


def _t_linear(t_db):
    return [10.0 ** (t / 10.0) for t in t_db]


def _analytic_curves(scenario: Scenario, cfg: ExperimentConfig) -> list[MetricCurve]:
    engine = AnalyticEngine(scenario, cfg.params, cfg.quadrature)
    label = scenario.label()
    ts = _t_linear(cfg.t_grid_db)
    curves = []
    for side, side_name in (("W", "wifi"), ("L", "lte")):
        if side == "L" and scenario.kind is ScenarioKind.WIFI_ONLY:
            continue
        if "map" in cfg.metrics:
            curves.append(
                MetricCurve(label, "analytic", side_name, "map", [(0.0, engine.tagged_map(side), None)])
            )
        if "sinr_coverage" in cfg.metrics and ts:
            cov = engine.coverage(side, ts)
            curves.append(
                MetricCurve(
                    label, "analytic", side_name, "sinr_coverage",
                    [(t, float(v), None) for t, v in zip(cfg.t_grid_db, cov)],
                )
            )
        if "dst" in cfg.metrics and ts:
            dst = engine.dst(side, ts)
            curves.append(
                MetricCurve(
                    label, "analytic", side_name, "dst",
                    [(t, float(v), None) for t, v in zip(cfg.t_grid_db, dst)],
                )
            )
        if "rate_coverage" in cfg.metrics and cfg.rho_grid_bps:
            rate = engine.rate_coverage(side, cfg.rho_grid_bps)
            curves.append(
                MetricCurve(
                    label, "analytic", side_name, "rate_coverage",
                    [(r, float(v), None) for r, v in zip(cfg.rho_grid_bps, rate)],
                )
            )
    return curves


def _mc_curves(scenario: Scenario, cfg: ExperimentConfig) -> list[MetricCurve]:
    mc = MonteCarloScenario(scenario, cfg.params, cfg.sim)
    ts = _t_linear(cfg.t_grid_db)
    label = scenario.label()
    curves = mc.curves(ts, cfg.rho_grid_bps, label=label)
    # curves carry linear thresholds for coverage/DST; report the dB grid
    for curve in curves:
        if curve.metric in ("sinr_coverage", "dst"):
            curve.samples = [
                (t_db, v, e) for t_db, (_, v, e) in zip(cfg.t_grid_db, curve.samples)
            ]
    return [c for c in curves if c.metric in cfg.metrics]


def _run_cell(args):
    scenario, engine_name, cfg = args
    try:
        if engine_name == "analytic":
            return scenario.label(), engine_name, _analytic_curves(scenario, cfg), None
        return scenario.label(), engine_name, _mc_curves(scenario, cfg), None
    except QuadratureError as exc:
        return scenario.label(), engine_name, [], ("quadrature", str(exc))
    except Exception as exc:  # record and continue with the remaining cells
        return scenario.label(), engine_name, [], ("error", f"{type(exc).__name__}: {exc}")


def _safe_name(label: str) -> str:
    return label.replace(";", "__").replace("=", "-")


def reduction_identity_checks(cfg: ExperimentConfig, tol: float = 1e-4) -> dict:
    """Scenario-reduction identities evaluated at the MAP level."""
    p = cfg.params
    spec = cfg.quadrature
    checks = {}
    if p.lambda_l > 0:
        eta1 = AnalyticEngine(Scenario(ScenarioKind.DUTY_CYCLE_ASYNC, eta=1.0), p, spec)
        cont = AnalyticEngine(Scenario(ScenarioKind.CONTINUOUS_LTE), p, spec)
        checks["duty_async_eta1_equals_continuous_map"] = abs(
            eta1.tagged_map("W") - cont.tagged_map("W")
        )
        eta0 = AnalyticEngine(Scenario(ScenarioKind.DUTY_CYCLE_SYNC, eta=0.0), p, spec)
        wifi = AnalyticEngine(Scenario(ScenarioKind.WIFI_ONLY), p, spec)
        checks["duty_sync_eta0_equals_wifi_only_map"] = abs(
            eta0.tagged_map("W") - wifi.tagged_map("W")
        )
        gl = p.gamma_l if p.gamma_l is not None else p.gamma_ed
        lower = AnalyticEngine(Scenario(ScenarioKind.LBT_LOWER_PRIORITY, gamma_l=gl), p, spec)
        checks["lbt_lower_wifi_map_equals_wifi_only_map"] = abs(
            lower.typical_map("W") - typical_map_wifi_only(p, spec)
        )
        base = AnalyticEngine(Scenario(ScenarioKind.WIFI_WIFI), p, spec)
        subst = p.with_(gamma_l=p.gamma_cs, gamma_ed=p.gamma_cs, p_l=p.p_w)
        checks["baseline_equals_lbt_same_substituted_map"] = abs(
            base.tagged_map("W") - map_tagged_lbt_same(subst, spec)[0]
        )
    checks = {k: float(v) for k, v in checks.items()}
    checks["tolerance"] = tol
    checks["pass"] = all(v <= tol for k, v in checks.items() if k not in ("tolerance", "pass"))
    return checks


def gap_statistics(curves: list[MetricCurve]) -> dict:
    """Max |analytic - monte-carlo| per (scenario, side, metric), with the
    acceptance bound max(0.05, 3 * stderr) evaluated pointwise."""
    by_key: dict = {}
    for c in curves:
        by_key.setdefault((c.scenario, c.side, c.metric, c.engine), c)
    stats = {}
    for (scenario, side, metric, engine), curve in by_key.items():
        if engine != "analytic" or metric not in ("sinr_coverage", "rate_coverage", "map"):
            continue
        mc = by_key.get((scenario, side, metric, "monte-carlo"))
        if mc is None:
            continue
        gaps, bounds = [], []
        mc_by_t = {round(t, 9): (v, e) for t, v, e in mc.samples}
        for t, v, _ in curve.samples:
            if round(t, 9) not in mc_by_t:
                continue
            mv, me = mc_by_t[round(t, 9)]
            gaps.append(abs(v - mv))
            bounds.append(max(0.05, 3.0 * (me or 0.0)))
        if gaps:
            stats[f"{scenario}|{side}|{metric}"] = {
                "max_gap": float(max(gaps)),
                "bound": float(max(bounds)),
                "pass": bool(all(g <= b for g, b in zip(gaps, bounds))),
            }
    return stats


def run(cfg: ExperimentConfig) -> int:
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    engines = ENGINES if cfg.engine == "both" else (cfg.engine,)
    cells = [(scenario, engine, cfg) for scenario in cfg.scenarios for engine in engines]

    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(cell) for cell in cells]

    all_curves: list[MetricCurve] = []
    failures = []
    for label, engine_name, curves, error in results:
        if error is not None:
            failures.append({"scenario": label, "engine": engine_name, "kind": error[0], "message": error[1]})
            continue
        all_curves.extend(curves)
        by_metric: dict = {}
        for curve in curves:
            by_metric.setdefault(curve.metric, []).append(curve)
        for metric, metric_curves in by_metric.items():
            path = out_dir / f"{_safe_name(label)}__{metric}__{engine_name}.csv"
            with open(path, "w", encoding="utf-8") as fh:
                write_curves(metric_curves, fh)

    if "monte-carlo" in engines:
        _write_interference_cdf(cfg, out_dir)

    summary = {
        "failures": failures,
        "reduction_identities": reduction_identity_checks(cfg),
    }
    if cfg.engine == "both":
        summary["analytic_vs_monte_carlo"] = gap_statistics(all_curves)
        summary["max_gap_pass"] = all(v["pass"] for v in summary["analytic_vs_monte_carlo"].values())
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)

    if any(f["kind"] == "quadrature" for f in failures):
        return 3
    return 0


def _write_interference_cdf(cfg: ExperimentConfig, out_dir: Path) -> None:
    """Empirical CDFs of total and strongest LTE interference at a typical AP,
    one row per dBm grid point: the input of the cdf-pair figure."""
    from .montecarlo import interference_cdf_check
    from .units import per_km2_to_per_m2

    grid_dbm = np.arange(-130.0, -29.5, 0.5)
    rows = []
    for lam_km2 in cfg.interference_cdf_lambdas:
        params = cfg.params.with_(lambda_l=per_km2_to_per_m2(lam_km2))
        out = interference_cdf_check(params, cfg.sim, n_realizations=cfg.interference_cdf_realizations)
        for kind, samples in (("total", out["total_samples"]), ("strongest", out["max_samples"])):
            cdf = np.searchsorted(samples, dbm_to_mw(grid_dbm), side="right") / len(samples)
            for dbm, value in zip(grid_dbm, cdf):
                rows.append((lam_km2, kind, float(dbm), float(value)))
    with open(out_dir / "interference_cdf.csv", "w", encoding="utf-8") as fh:
        fh.write("lambda_l_per_km2,interference_kind,dbm,cdf\n")
        for row in rows:
            fh.write(f"{row[0]!r},{row[1]},{row[2]!r},{row[3]!r}\n")


# ---------------------------------------------------------------------------
# ordering report over emitted CSVs
# ---------------------------------------------------------------------------

def compare(csv_paths: list[str]) -> dict:
    """Machine-checkable ordering assertions across scenario curves."""
    curves: list[MetricCurve] = []
    for path in csv_paths:
        with open(path, encoding="utf-8") as fh:
            curves.extend(read_curves(fh))

    def find(metric, side, scenario_prefix, engine="analytic"):
        for c in curves:
            if (
                c.metric == metric
                and c.side == side
                and c.engine == engine
                and c.scenario.startswith(scenario_prefix)
            ):
                return c
        return None

    report: dict = {"checks": {}}
    wifi_dsts = {
        c.scenario: c
        for c in curves
        if c.metric == "dst" and c.side == "wifi" and c.engine == "analytic"
    }
    cont = find("dst", "wifi", "continuous_lte")
    if cont is not None and len(wifi_dsts) > 1:
        low_t = [i for i, t in enumerate(cont.thresholds) if t <= 10.0]
        is_min = all(
            cont.values[i] <= other.values[i] + 1e-12
            for other in wifi_dsts.values()
            for i in low_t
            if len(other.values) == len(cont.values)
        )
        report["checks"]["wifi_dst_minimum_under_continuous_lte"] = bool(is_min)

    sync = find("dst", "wifi", "duty_cycle_sync")
    async_ = find("dst", "wifi", "duty_cycle_async")
    if sync is not None and async_ is not None:
        low_t = [i for i, t in enumerate(sync.thresholds) if t <= 0.0]
        report["checks"]["sync_wifi_dst_geq_async_low_t"] = bool(
            all(sync.values[i] >= async_.values[i] - 1e-12 for i in low_t)
        )
    sync_l = find("dst", "lte", "duty_cycle_sync")
    async_l = find("dst", "lte", "duty_cycle_async")
    if sync_l is not None and async_l is not None:
        report["checks"]["async_lte_dst_geq_sync"] = bool(
            all(a >= s - 1e-12 for a, s in zip(async_l.values, sync_l.values))
        )

    cont_rate = find("rate_coverage", "lte", "continuous_lte")
    if cont_rate is not None:
        losses = {}
        for c in curves:
            if c.metric != "rate_coverage" or c.side != "lte" or c.engine != "analytic":
                continue
            if c.scenario.startswith("continuous_lte"):
                continue
            rel = [
                1.0 - v / ref
                for (t, v), ref in zip(zip(c.thresholds, c.values), cont_rate.values)
                if 5e6 <= t <= 30e6 and ref > 1e-9
            ]
            if rel:
                losses[c.scenario] = float(np.mean(rel))
        if losses:
            report["lte_rate_loss_vs_continuous"] = losses
    return report


# ---------------------------------------------------------------------------
# quick oracle-identity and reduction validation
# ---------------------------------------------------------------------------

def validate(cfg: ExperimentConfig) -> int:
    p = cfg.params
    spec = cfg.quadrature
    from .quadrature import func_m, n_func
    from .model import Point2

    failures = 0

    def check(name, ok, detail=""):
        nonlocal failures
        marker = "PASS" if ok else "FAIL"
        print(f"[{marker}] {name} {detail}")
        if not ok:
            failures += 1

    if p.alpha == 4.0:
        for lam, power, gamma, tag in [
            (p.lambda_w, p.p_w, p.gamma_cs, "wifi carrier-sense count"),
            (p.lambda_l, p.p_l, p.gamma_ed, "lte energy-detection count"),
        ]:
            if lam <= 0:
                continue
            numeric = n_func(Point2(0, 0), 0.0, gamma, lam, power, p, spec)
            a_k = p.mu * gamma / power * p.ref_loss
            closed = lam * (math.pi / 2.0) * math.sqrt(math.pi / a_k)
            check(tag, abs(numeric - closed) / closed < 1e-5, f"({numeric:.6g} vs {closed:.6g})")

    m_value = func_m(1.0, 1.0, 0.0)
    m_expected = (1.0 - math.exp(-1.0)) - (1.0 - math.exp(-2.0)) / 2.0
    check("timer deconditioning helper", abs(m_value - m_expected) < 1e-12)

    ident = reduction_identity_checks(cfg)
    for name, value in ident.items():
        if name in ("tolerance", "pass"):
            continue
        check(name, value <= ident["tolerance"], f"(delta={value:.3e})")

    roundtrip = dbm_to_mw(-62.0)
    check("dbm round trip", abs(10.0 * math.log10(roundtrip) + 62.0) < 1e-9)
    return 2 if failures else 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _load_config(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    if not doc.get("scenarios"):
        doc.setdefault(
            "scenarios",
            [
                {"kind": "wifi_only"},
                {"kind": "wifi_wifi"},
                {"kind": "continuous_lte"},
                {"kind": "duty_cycle_sync", "eta": 0.5},
                {"kind": "duty_cycle_async", "eta": 0.5},
                {"kind": "lbt_same_priority", "gamma_l_dbm": -82},
                {"kind": "lbt_lower_priority", "gamma_l_dbm": -77},
            ],
        )
    if args.scenario:
        doc["scenarios"] = [s for s in doc["scenarios"] if (s["kind"] if isinstance(s, dict) else s) in args.scenario]
        if not doc["scenarios"]:
            raise ConfigError(f"--scenario matched nothing among {args.scenario}")
    if args.engine:
        doc["engine"] = args.engine
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.out:
        doc["out_dir"] = args.out
    if args.jobs:
        doc["jobs"] = args.jobs
    return parse_config(doc)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="coexkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON experiment configuration")
        sp.add_argument("--scenario", action="append", help="restrict to scenario kind(s)")
        sp.add_argument("--engine", choices=ENGINES + ("both",))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--jobs", type=int, help="worker pool size for sweep cells")

    for name, help_text in [
        ("analytic", "evaluate the closed-form/quadrature expressions"),
        ("simulate", "run the spatial Monte Carlo engine"),
        ("validate", "run the oracle and scenario-reduction identity suite"),
    ]:
        sp = sub.add_parser(name, help=help_text)
        add_common(sp)

    cp = sub.add_parser("compare", help="ordering report over emitted CSV files")
    cp.add_argument("csv", nargs="+", help="curve CSV files")

    args = parser.parse_args(argv)
    if args.command == "compare":
        print(json.dumps(compare(args.csv), indent=2))
        return 0

    try:
        cfg = _load_config(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        return validate(cfg)
    if args.command == "simulate":
        cfg.engine = "monte-carlo" if args.engine in (None, "monte-carlo") else args.engine
    elif args.command == "analytic" and args.engine is None:
        cfg.engine = "analytic"
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
