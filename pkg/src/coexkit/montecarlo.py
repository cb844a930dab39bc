"""Ground-truth spatial simulator.

Samples the two Poisson deployments on a guard-banded window, applies the
exact medium-access indicator products (strongest-interferer clear-channel
semantics), and estimates every metric empirically.  Per-combination random
streams are derived from (seed, purpose, indices), so results are identical
under any execution order and any draw that one scenario skips cannot shift
another scenario's stream: reduction identities (duty cycle 1 vs always-on,
duty cycle 0 vs Wi-Fi only) hold bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .curves import MetricCurve
from .model import CoexParams, Scenario, ScenarioKind, rate_to_sinr_threshold

# stream purposes for derived seeds
_S_AP, _S_ENB, _S_TW, _S_TL, _S_ACT, _S_SENSE, _S_FADE, _S_PROBE, _S_ORACLE = range(9)
# link kinds: source family signal sensed at destination family
_LINKS = {("W", "W"): 0, ("L", "L"): 1, ("L", "W"): 2, ("W", "L"): 3}

PAIR_PROB_FLOOR = 1e-9  # sensing probabilities below this are treated as zero


@dataclass(frozen=True)
class SimConfig:
    """Window geometry, realization counts and seeding of the simulator."""

    side: float = 1000.0
    guard: float = 500.0
    n_ap_realizations: int = 50
    n_enb_realizations: int = 50
    n_probes: int = 50
    seed: int = 0
    mac_draws: int = 1
    ed_mode: str = "max"  # "max" or "total" clear-channel semantics

    def __post_init__(self):
        if self.side <= 0 or self.guard < 0:
            raise ValueError("window side must be > 0 and guard >= 0")
        if min(self.n_ap_realizations, self.n_enb_realizations, self.n_probes) < 1:
            raise ValueError("realization and probe counts must be >= 1")
        if self.mac_draws < 1:
            raise ValueError("mac_draws must be >= 1")
        if self.ed_mode not in ("max", "total"):
            raise ValueError("ed_mode must be 'max' or 'total'")

    @property
    def half_extent(self) -> float:
        return self.side / 2.0 + self.guard


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((int(seed),) + tuple(int(k) for k in key)))


def _loss(d, params: CoexParams):
    return params.ref_loss * np.maximum(d, 1.0) ** params.alpha


def sensing_probability(d, gamma: float, power: float, params: CoexParams):
    """P(received faded signal exceeds gamma) over distance d."""
    return np.exp(-params.mu * (gamma / power) * _loss(d, params))


def sensing_cutoff(gamma: float, power: float, params: CoexParams) -> float:
    """Distance beyond which the sensing probability drops below the floor."""
    a_k = params.mu * (gamma / power) * params.ref_loss
    return max(1.0, (-math.log(PAIR_PROB_FLOOR) / a_k) ** (1.0 / params.alpha))


def mac_rules(mac_kind: str, params: CoexParams) -> dict:
    """Blocking rules per (source family, destination family).

    mode "timer": the source blocks when sensed and its timer is smaller;
    "always": the source blocks whenever sensed (no timer comparison).
    Shared by the windowed engine and the conditional-MAP oracle so the two
    can never drift apart.
    """
    if mac_kind == "continuous":
        return {
            ("W", "W"): ("timer", params.gamma_cs, params.p_w),
            ("L", "W"): ("always", params.gamma_ed, params.p_l),
        }
    if mac_kind == "lbt":
        if params.gamma_l is None:
            raise ValueError("LBT requires params.gamma_l")
        return {
            ("W", "W"): ("timer", params.gamma_cs, params.p_w),
            ("L", "W"): ("timer", params.gamma_ed, params.p_l),
            ("W", "L"): ("timer", params.gamma_l, params.p_w),
            ("L", "L"): ("timer", params.gamma_l, params.p_l),
        }
    raise ValueError(f"unknown mac kind {mac_kind!r}")


@dataclass
class Realization:
    """One sampled network: node locations, backoff timers, lazily drawn
    sensing indicators and the medium-access indicators once a MAC op ran."""

    aps: np.ndarray
    enbs: np.ndarray
    t_w: np.ndarray
    t_l: np.ndarray
    pairs: dict  # link id -> (src_idx, dst_idx, distance)
    seed_key: tuple
    active: np.ndarray | None = None  # duty-cycle on/off flags per eNB
    ew: np.ndarray | None = None
    el: np.ndarray | None = None
    _sense_cache: dict = field(default_factory=dict, repr=False)

    def sensed(self, src_fam: str, dst_fam: str, gamma: float, power: float, params) -> np.ndarray:
        """Indicator per stored (src, dst) pair that src's faded signal at dst
        exceeds gamma.  Drawn once per (link, gamma, power) and cached, so
        alternative indicator formulas evaluate on identical fading."""
        link = _LINKS[(src_fam, dst_fam)]
        key = (link, gamma, power)
        if key not in self._sense_cache:
            _, _, dist = self.pairs[link]
            rng = _rng(*self.seed_key, _S_SENSE, link)
            prob = sensing_probability(dist, gamma, power, params)
            self._sense_cache[key] = rng.random(len(dist)) < prob
        return self._sense_cache[key]


def _sample_points(lam: float, half: float, rng: np.random.Generator) -> np.ndarray:
    n = rng.poisson(lam * (2.0 * half) ** 2)
    return rng.uniform(-half, half, size=(n, 2))


def _pairs_within(tree_a: cKDTree, tree_b: cKDTree, cutoff: float):
    mat = tree_a.sparse_distance_matrix(tree_b, cutoff, output_type="ndarray")
    return mat["i"].astype(np.intp), mat["j"].astype(np.intp), mat["v"]


def _symmetric_pairs(tree: cKDTree, cutoff: float):
    pairs = tree.query_pairs(cutoff, output_type="ndarray")
    if pairs.size == 0:
        return np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0)
    i, j = pairs[:, 0], pairs[:, 1]
    pts = tree.data
    d = np.hypot(pts[i, 0] - pts[j, 0], pts[i, 1] - pts[j, 1])
    # store both directions so every ordered pair has its own fading draw
    return np.concatenate([i, j]), np.concatenate([j, i]), np.concatenate([d, d])


def sample_realization(
    scenario: Scenario,
    params: CoexParams,
    sim: SimConfig,
    ap_index: int = 0,
    enb_index: int = 0,
    mac_rep: int = 0,
) -> Realization:
    """One (AP realization, eNB realization) combination with timers drawn.

    Identical (seed, indices) always give the identical realization.
    """
    p = scenario.resolve(params)
    half = sim.half_extent
    aps = _sample_points(p.lambda_w, half, _rng(sim.seed, _S_AP, ap_index))
    enbs = _sample_points(p.lambda_l, half, _rng(sim.seed, _S_ENB, enb_index))
    tree_w = cKDTree(aps) if len(aps) else None
    tree_l = cKDTree(enbs) if len(enbs) else None
    return _build_realization(scenario, p, sim, aps, enbs, tree_w, tree_l, ap_index, enb_index, mac_rep)


def _build_realization(scenario, p, sim, aps, enbs, tree_w, tree_l, i, j, rep):
    key = (sim.seed, i, j, rep)
    t_w = _rng(*key, _S_TW).uniform(0.0, 1.0, len(aps))
    window = scenario.backoff_window or (0.0, 1.0)
    t_l = _rng(*key, _S_TL).uniform(window[0], window[1], len(enbs))

    pairs = {}
    cut_ww = sensing_cutoff(p.gamma_cs, p.p_w, p)
    pairs[_LINKS["W", "W"]] = (
        _symmetric_pairs(tree_w, cut_ww) if tree_w is not None else _empty_pairs()
    )
    needs_lbt = scenario.kind in (ScenarioKind.LBT_SAME_PRIORITY, ScenarioKind.LBT_LOWER_PRIORITY,
                                  ScenarioKind.WIFI_WIFI)
    if tree_l is not None:
        cut_lw = sensing_cutoff(p.gamma_ed, p.p_l, p)
        pairs[_LINKS["L", "W"]] = (
            _pairs_within(tree_l, tree_w, cut_lw) if tree_w is not None else _empty_pairs()
        )
        if needs_lbt:
            cut_wl = sensing_cutoff(p.gamma_l, p.p_w, p)
            pairs[_LINKS["W", "L"]] = (
                _pairs_within(tree_w, tree_l, cut_wl) if tree_w is not None else _empty_pairs()
            )
            cut_ll = sensing_cutoff(p.gamma_l, p.p_l, p)
            pairs[_LINKS["L", "L"]] = _symmetric_pairs(tree_l, cut_ll)
    else:
        pairs[_LINKS["L", "W"]] = _empty_pairs()
    pairs.setdefault(_LINKS["W", "L"], _empty_pairs())
    pairs.setdefault(_LINKS["L", "L"], _empty_pairs())

    real = Realization(aps=aps, enbs=enbs, t_w=t_w, t_l=t_l, pairs=pairs, seed_key=key)
    if scenario.kind is ScenarioKind.DUTY_CYCLE_ASYNC:
        real.active = _rng(*key, _S_ACT).random(len(enbs)) < scenario.eta
    return real


def _empty_pairs():
    return np.empty(0, np.intp), np.empty(0, np.intp), np.empty(0)


def _apply_rules(real: Realization, params: CoexParams, rules: dict, source_mask: dict | None = None):
    """Evaluate the indicator products given blocking rules per link kind."""
    timers = {"W": real.t_w, "L": real.t_l}
    blocked = {"W": np.zeros(len(real.aps), bool), "L": np.zeros(len(real.enbs), bool)}
    for (src, dst), rule in rules.items():
        mode, gamma, power = rule
        s_idx, d_idx, _ = real.pairs[_LINKS[(src, dst)]]
        if len(s_idx) == 0:
            continue
        hit = real.sensed(src, dst, gamma, power, params)
        if mode == "timer":
            hit = hit & (timers[src][s_idx] < timers[dst][d_idx])
        if source_mask is not None and src in source_mask:
            hit = hit & source_mask[src][s_idx]
        np.logical_or.at(blocked[dst], d_idx[hit], True)
    return ~blocked["W"], ~blocked["L"]


def apply_mac_continuous(real: Realization, params: CoexParams):
    """Always-on LTE: every eNB transmits, an AP defers to sensed eNBs
    unconditionally and to sensed APs with smaller backoff timers."""
    ew, _ = _apply_rules(real, params, mac_rules("continuous", params))
    el = np.ones(len(real.enbs), bool)
    real.ew, real.el = ew, el
    return ew, el


def apply_mac_continuous_total_ed(real: Realization, params: CoexParams, rng: np.random.Generator):
    """Total-interference energy detection variant: an AP reports busy when the
    summed received LTE power exceeds the detection threshold.  Used for the
    sensitivity check against the strongest-interferer default."""
    ew, el = apply_mac_continuous(real, params)
    if len(real.enbs) == 0:
        return ew, el
    dist = np.hypot(
        real.aps[:, 0, None] - real.enbs[None, :, 0],
        real.aps[:, 1, None] - real.enbs[None, :, 1],
    )
    fading = rng.exponential(1.0 / params.mu, size=dist.shape)
    total = np.sum(params.p_l * fading / _loss(dist, params), axis=1)
    ew_wifi_only, _ = _apply_rules(
        real, params, {("W", "W"): mac_rules("continuous", params)[("W", "W")]}
    )
    ew = ew_wifi_only & (total <= params.gamma_ed)
    real.ew = ew
    return ew, el


def apply_mac_lbt(real: Realization, params: CoexParams, window=(0.0, 1.0)):
    """Listen-before-talk with random backoff for both families: a node defers
    to any sensed node (own family at its own threshold, other family at the
    cross threshold) with a smaller timer."""
    del window  # the timers were drawn from the scenario's window
    ew, el = _apply_rules(real, params, mac_rules("lbt", params))
    real.ew, real.el = ew, el
    return ew, el


def apply_mac_lbt_lower_shortcut(real: Realization, params: CoexParams):
    """Simplified indicator products valid when every LTE timer exceeds every
    Wi-Fi timer: APs run Wi-Fi-only CSMA, eNBs defer to any sensed AP
    unconditionally.  Cross-check against :func:`apply_mac_lbt`; both must
    produce identical indicators on the same realization."""
    rules = mac_rules("lbt", params)
    shortcut = {
        ("W", "W"): rules[("W", "W")],
        ("W", "L"): ("always",) + rules[("W", "L")][1:],
        ("L", "L"): rules[("L", "L")],
    }
    ew, el = _apply_rules(real, params, shortcut)
    real.ew, real.el = ew, el
    return ew, el


def apply_mac_duty(real: Realization, params: CoexParams, eta: float, mode: str, phase: str = "on"):
    """Duty-cycled LTE.

    Synchronous muting is evaluated as a deterministic two-phase mixture
    (``phase`` selects which one); asynchronous muting thins the eNBs by the
    per-eNB activity flags drawn at sampling time.
    """
    if mode == "sync":
        if phase == "on":
            return apply_mac_continuous(real, params)
        ew, _ = _apply_rules(real, params, {("W", "W"): mac_rules("continuous", params)[("W", "W")]})
        el = np.zeros(len(real.enbs), bool)
        real.ew, real.el = ew, el
        return ew, el
    if mode != "async":
        raise ValueError("mode must be 'sync' or 'async'")
    if real.active is None:
        rng = _rng(*real.seed_key, _S_ACT)
        real.active = rng.random(len(real.enbs)) < eta
    ew, _ = _apply_rules(
        real, params, mac_rules("continuous", params), source_mask={"L": real.active}
    )
    el = real.active.copy()
    real.ew, real.el = ew, el
    return ew, el


def apply_mac(scenario: Scenario, real: Realization, params: CoexParams):
    p = scenario.resolve(params)
    kind = scenario.kind
    if kind in (ScenarioKind.WIFI_ONLY, ScenarioKind.CONTINUOUS_LTE):
        return apply_mac_continuous(real, p)
    if kind is ScenarioKind.DUTY_CYCLE_ASYNC:
        return apply_mac_duty(real, p, scenario.eta, "async")
    if kind is ScenarioKind.DUTY_CYCLE_SYNC:
        raise ValueError("synchronous duty cycling is a two-phase mixture; run each phase")
    return apply_mac_lbt(real, p, scenario.backoff_window)


# ---------------------------------------------------------------------------
# windowed estimation engine
# ---------------------------------------------------------------------------

class MonteCarloRun:
    """Pooled conditional SINR samples and access-indicator counts."""

    def __init__(self):
        self.sinr_w: list[np.ndarray] = []
        self.sinr_l: list[np.ndarray] = []
        self.tagged_w = [0, 0]  # successes, trials over (probe, combo) pairs
        self.tagged_l = [0, 0]
        self.typical_w = [0, 0]
        self.typical_l = [0, 0]
        self.skipped_w = 0
        self.skipped_l = 0

    def _samples(self, side):
        pool = self.sinr_w if side == "W" else self.sinr_l
        return np.concatenate(pool) if pool else np.empty(0)

    def coverage(self, side: str, thresholds):
        s = self._samples(side)
        thresholds = np.atleast_1d(np.asarray(thresholds, dtype=float))
        if len(s) == 0:
            raise ValueError("no conditional SINR samples collected")
        vals = np.array([np.mean(s > t) for t in thresholds])
        err = np.sqrt(np.maximum(vals * (1.0 - vals), 0.0) / len(s))
        return vals, err

    def map_estimate(self, side: str, which: str = "tagged"):
        counts = getattr(self, f"{which}_{side.lower()}")
        if counts[1] == 0:
            raise ValueError(f"no {which} {side} access samples")
        p = counts[0] / counts[1]
        return p, math.sqrt(max(p * (1.0 - p), 0.0) / counts[1])


class MonteCarloEngine:
    """Runs every (AP realization x eNB realization) combination for one
    scenario.  Realizations are independent work items keyed by their own
    seeds, so chunks may run in any order or process."""

    def __init__(self, scenario: Scenario, params: CoexParams, sim: SimConfig):
        self.scenario = scenario
        self.params = scenario.resolve(params)
        self.sim = sim
        self._ap_cache: dict = {}
        self._enb_cache: dict = {}

    def _ap_real(self, i: int):
        if i not in self._ap_cache:
            pts = _sample_points(self.params.lambda_w, self.sim.half_extent, _rng(self.sim.seed, _S_AP, i))
            tree = cKDTree(pts) if len(pts) else None
            inner = np.max(np.abs(pts), axis=1) <= self.sim.side / 2.0 if len(pts) else np.zeros(0, bool)
            self._ap_cache[i] = (pts, tree, inner)
        return self._ap_cache[i]

    def _enb_real(self, j: int):
        if j not in self._enb_cache:
            pts = _sample_points(self.params.lambda_l, self.sim.half_extent, _rng(self.sim.seed, _S_ENB, j))
            tree = cKDTree(pts) if len(pts) else None
            inner = np.max(np.abs(pts), axis=1) <= self.sim.side / 2.0 if len(pts) else np.zeros(0, bool)
            self._enb_cache[j] = (pts, tree, inner)
        return self._enb_cache[j]

    def run(self, combos=None) -> MonteCarloRun:
        out = MonteCarloRun()
        sim = self.sim
        if combos is None:
            combos = [(i, j) for i in range(sim.n_ap_realizations) for j in range(sim.n_enb_realizations)]
        for i, j in combos:
            for rep in range(sim.mac_draws):
                self._one_combo(out, i, j, rep)
        return out

    def _one_combo(self, out: MonteCarloRun, i: int, j: int, rep: int):
        sim, p, scenario = self.sim, self.params, self.scenario
        aps, tree_w, inner_w = self._ap_real(i)
        enbs, tree_l, inner_l = self._enb_real(j)
        real = _build_realization(scenario, p, sim, aps, enbs, tree_w, tree_l, i, j, rep)
        ew, el = apply_mac(scenario, real, p)

        out.typical_w[0] += int(np.sum(ew[inner_w]))
        out.typical_w[1] += int(np.sum(inner_w))
        if scenario.kind is not ScenarioKind.WIFI_ONLY and len(enbs):
            out.typical_l[0] += int(np.sum(el[inner_l]))
            out.typical_l[1] += int(np.sum(inner_l))

        probes = _rng(sim.seed, i, j, rep, _S_PROBE).uniform(
            -sim.side / 2.0, sim.side / 2.0, size=(sim.n_probes, 2)
        )
        fade = _rng(sim.seed, i, j, rep, _S_FADE)

        tx_w = np.flatnonzero(ew)
        tx_l = np.flatnonzero(el)
        if tree_w is not None:
            sinr, cond = self._side_sinr(probes, fade, aps, tree_w, ew, tx_w, tx_l, enbs, "W")
            out.tagged_w[0] += int(np.sum(cond))
            out.tagged_w[1] += len(cond)
            out.skipped_w += int(np.sum(~cond))
            out.sinr_w.append(sinr[cond])
        if scenario.kind is not ScenarioKind.WIFI_ONLY and tree_l is not None:
            sinr, cond = self._side_sinr(probes, fade, enbs, tree_l, el, tx_w, tx_l, aps, "L")
            out.tagged_l[0] += int(np.sum(cond))
            out.tagged_l[1] += len(cond)
            out.skipped_l += int(np.sum(~cond))
            out.sinr_l.append(sinr[cond])

    def _side_sinr(self, probes, fade, own_pts, own_tree, own_e, tx_w, tx_l, other_pts, side):
        p = self.params
        _, serv = own_tree.query(probes)
        cond = own_e[serv]

        if side == "W":
            own_tx, own_power = tx_w, p.p_w
            other_tx, other_power = tx_l, p.p_l
        else:
            own_tx, own_power = tx_l, p.p_l
            other_tx, other_power = tx_w, p.p_w

        recv_own, f_own = self._received(probes, own_pts[own_tx], own_power, fade, p)
        interference = recv_own.sum(axis=1)
        col = np.searchsorted(own_tx, serv)
        col_valid = cond & (col < len(own_tx))
        signal = np.zeros(len(probes))
        rows = np.flatnonzero(col_valid)
        signal[rows] = recv_own[rows, col[rows]]
        interference -= signal
        del f_own
        if len(other_tx):
            recv_other, _ = self._received(probes, other_pts[other_tx], other_power, fade, p)
            interference += recv_other.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = signal / (interference + p.sigma_n2)
        return sinr, cond

    @staticmethod
    def _received(probes, tx_pts, power, fade, params):
        if len(tx_pts) == 0:
            return np.zeros((len(probes), 0)), None
        dist = np.hypot(
            probes[:, 0, None] - tx_pts[None, :, 0], probes[:, 1, None] - tx_pts[None, :, 1]
        )
        f = fade.exponential(1.0 / params.mu, size=dist.shape)
        return power * f / _loss(dist, params), f


# ---------------------------------------------------------------------------
# scenario-level estimates mirroring the analytic conventions
# ---------------------------------------------------------------------------

class MonteCarloScenario:
    """Empirical MAP / coverage / DST / rate coverage for one scenario,
    combining the synchronous duty-cycle phases where needed."""

    def __init__(self, scenario: Scenario, params: CoexParams, sim: SimConfig):
        self.scenario = scenario
        self.params = scenario.resolve(params)
        self.sim = sim
        kind = scenario.kind
        if kind is ScenarioKind.DUTY_CYCLE_SYNC:
            on = Scenario(ScenarioKind.CONTINUOUS_LTE)
            off = Scenario(ScenarioKind.WIFI_ONLY)
            self._on = MonteCarloEngine(on, self.params, sim).run()
            self._off = MonteCarloEngine(off, self.params, sim).run()
            self._run = None
        else:
            self._run = MonteCarloEngine(scenario, self.params, sim).run()
            self._on = self._off = None

    # -- tagged airtime fractions -------------------------------------------

    def tagged_map(self, side: str):
        kind = self.scenario.kind
        if side == "L":
            if kind is ScenarioKind.WIFI_ONLY:
                return 0.0, 0.0
            if kind is ScenarioKind.CONTINUOUS_LTE:
                return 1.0, 0.0
            if kind in (ScenarioKind.DUTY_CYCLE_SYNC, ScenarioKind.DUTY_CYCLE_ASYNC):
                return float(self.scenario.eta), 0.0
            return self._run.map_estimate("L", "tagged")
        if kind is ScenarioKind.DUTY_CYCLE_SYNC:
            eta = self.scenario.eta
            m_on, e_on = self._on.map_estimate("W", "tagged")
            m_off, e_off = self._off.map_estimate("W", "tagged")
            err = math.hypot(eta * e_on, (1.0 - eta) * e_off)
            return eta * m_on + (1.0 - eta) * m_off, err
        return self._run.map_estimate("W", "tagged")

    def typical_map(self, side: str):
        kind = self.scenario.kind
        if side == "L":
            if kind is ScenarioKind.WIFI_ONLY:
                return 0.0, 0.0
            if kind is ScenarioKind.CONTINUOUS_LTE:
                return 1.0, 0.0
            if kind in (ScenarioKind.DUTY_CYCLE_SYNC, ScenarioKind.DUTY_CYCLE_ASYNC):
                return float(self.scenario.eta), 0.0
            return self._run.map_estimate("L", "typical")
        if kind is ScenarioKind.DUTY_CYCLE_SYNC:
            eta = self.scenario.eta
            m_on, e_on = self._on.map_estimate("W", "typical")
            m_off, e_off = self._off.map_estimate("W", "typical")
            return eta * m_on + (1.0 - eta) * m_off, math.hypot(eta * e_on, (1.0 - eta) * e_off)
        return self._run.map_estimate("W", "typical")

    # -- conditional coverage -----------------------------------------------

    def coverage(self, side: str, thresholds):
        kind = self.scenario.kind
        if kind is ScenarioKind.DUTY_CYCLE_SYNC:
            if side == "L":
                return self._on.coverage("L", thresholds)
            eta = self.scenario.eta
            m_on, _ = self._on.map_estimate("W", "tagged")
            m_off, _ = self._off.map_estimate("W", "tagged")
            p_on, e_on = self._on.coverage("W", thresholds)
            p_off, e_off = self._off.coverage("W", thresholds)
            m_bar = eta * m_on + (1.0 - eta) * m_off
            vals = (eta * m_on * p_on + (1.0 - eta) * m_off * p_off) / m_bar
            errs = np.hypot(eta * m_on * e_on, (1.0 - eta) * m_off * e_off) / m_bar
            return vals, errs
        return self._run.coverage(side, thresholds)

    # -- DST and rate coverage ----------------------------------------------

    def dst(self, side: str, thresholds):
        lam = self.params.lambda_w if side == "W" else self.params.lambda_l
        if lam <= 0 or (side == "L" and self.scenario.kind is ScenarioKind.WIFI_ONLY):
            z = np.zeros(len(np.atleast_1d(thresholds)))
            return z, z
        m, m_err = self.tagged_map(side)
        vals, errs = self.coverage(side, thresholds)
        dst = lam * m * vals
        err = lam * np.hypot(m * errs, np.asarray(vals) * m_err)
        return dst, err

    def rate_coverage(self, side: str, rho_values):
        rho_values = np.atleast_1d(np.asarray(rho_values, dtype=float))
        kind = self.scenario.kind
        b = self.params.bandwidth
        if side == "L" and kind is ScenarioKind.WIFI_ONLY:
            z = np.zeros(len(rho_values))
            return z, z
        if side == "W" and kind is ScenarioKind.DUTY_CYCLE_SYNC:
            eta = self.scenario.eta
            m_on, _ = self._on.map_estimate("W", "tagged")
            m_off, _ = self._off.map_estimate("W", "tagged")
            t_on = [rate_to_sinr_threshold(r, m_on, b) for r in rho_values]
            t_off = [rate_to_sinr_threshold(r, m_off, b) for r in rho_values]
            p_on, e_on = self._on.coverage("W", t_on)
            p_off, e_off = self._off.coverage("W", t_off)
            return eta * p_on + (1.0 - eta) * p_off, np.hypot(eta * e_on, (1.0 - eta) * e_off)
        m, _ = self.tagged_map(side)
        if m <= 0.0:
            return np.where(rho_values > 0, 0.0, 1.0), np.zeros(len(rho_values))
        ts = [rate_to_sinr_threshold(r, m, b) for r in rho_values]
        return self.coverage(side, ts)

    def curves(self, t_values, rho_values, label: str | None = None) -> list[MetricCurve]:
        label = label or self.scenario.label()
        sides = {"W": "wifi", "L": "lte"}
        out = []
        for side, side_name in sides.items():
            if side == "L" and self.scenario.kind is ScenarioKind.WIFI_ONLY:
                continue
            m, m_err = self.tagged_map(side)
            out.append(MetricCurve(label, "monte-carlo", side_name, "map", [(0.0, m, m_err)]))
            cov, cov_err = self.coverage(side, t_values)
            out.append(
                MetricCurve(
                    label, "monte-carlo", side_name, "sinr_coverage",
                    [(float(t), float(v), float(e)) for t, v, e in zip(t_values, cov, cov_err)],
                )
            )
            dst, dst_err = self.dst(side, t_values)
            out.append(
                MetricCurve(
                    label, "monte-carlo", side_name, "dst",
                    [(float(t), float(v), float(e)) for t, v, e in zip(t_values, dst, dst_err)],
                )
            )
            rate, rate_err = self.rate_coverage(side, rho_values)
            out.append(
                MetricCurve(
                    label, "monte-carlo", side_name, "rate_coverage",
                    [(float(r), float(v), float(e)) for r, v, e in zip(rho_values, rate, rate_err)],
                )
            )
        return out


def empirical_sinr_coverage(scenario, params, sim, thresholds):
    """MetricCurve of the conditional SINR coverage for one scenario."""
    mc = MonteCarloScenario(scenario, params, sim)
    side_map = {"W": "wifi", "L": "lte"}
    curves = []
    for side in ("W", "L"):
        if side == "L" and scenario.kind is ScenarioKind.WIFI_ONLY:
            continue
        vals, errs = mc.coverage(side, thresholds)
        curves.append(
            MetricCurve(
                scenario.label(), "monte-carlo", side_map[side], "sinr_coverage",
                [(float(t), float(v), float(e)) for t, v, e in zip(thresholds, vals, errs)],
            )
        )
    return curves


def empirical_map(scenario, params, sim, side="W", which="tagged"):
    """Empirical access probability (tagged or typical) with its stderr."""
    mc = MonteCarloScenario(scenario, params, sim)
    return mc.tagged_map(side) if which == "tagged" else mc.typical_map(side)


def empirical_dst(scenario, params, sim, thresholds, side="W"):
    return MonteCarloScenario(scenario, params, sim).dst(side, thresholds)


def empirical_rate_cov(scenario, params, sim, rho_values, side="W"):
    return MonteCarloScenario(scenario, params, sim).rate_coverage(side, rho_values)


# ---------------------------------------------------------------------------
# the justification check for strongest-interferer clear channel assessment
# ---------------------------------------------------------------------------

def interference_cdf_check(params: CoexParams, sim: SimConfig, n_realizations: int = 200):
    """Empirical CDFs of the total and the strongest LTE interference at a
    typical AP, compared at the energy-detection threshold."""
    half = sim.half_extent
    totals, maxima = [], []
    for r in range(n_realizations):
        rng = _rng(sim.seed, _S_ORACLE, 0, r)
        enbs = _sample_points(params.lambda_l, half, rng)
        probes = rng.uniform(-sim.side / 2.0, sim.side / 2.0, size=(sim.n_probes, 2))
        if len(enbs) == 0:
            totals.append(np.zeros(len(probes)))
            maxima.append(np.zeros(len(probes)))
            continue
        dist = np.hypot(
            probes[:, 0, None] - enbs[None, :, 0], probes[:, 1, None] - enbs[None, :, 1]
        )
        recv = params.p_l * rng.exponential(1.0 / params.mu, size=dist.shape) / _loss(dist, params)
        totals.append(recv.sum(axis=1))
        maxima.append(recv.max(axis=1))
    totals = np.concatenate(totals)
    maxima = np.concatenate(maxima)
    p_total = float(np.mean(totals <= params.gamma_ed))
    p_max = float(np.mean(maxima <= params.gamma_ed))
    return {
        "p_total_below_ed": p_total,
        "p_max_below_ed": p_max,
        "gap": abs(p_total - p_max),
        "total_samples": np.sort(totals),
        "max_samples": np.sort(maxima),
    }


# ---------------------------------------------------------------------------
# conditional-MAP oracle: plant tagged and probe nodes, estimate h(r0, x)
# ---------------------------------------------------------------------------

_FIELD_SETUP = {
    # field -> (mac kind, tagged family, probe family, lbt window or None)
    "h1": ("continuous", "W", "W", None),
    "h1w": ("continuous", "L", "W", None),
    "h2w": ("lbt", "W", "W", (0.0, 1.0)),
    "h2l": ("lbt", "W", "L", (0.0, 1.0)),
    "h3w": ("lbt", "L", "W", (0.0, 1.0)),
    "h3l": ("lbt", "L", "L", (0.0, 1.0)),
    "h4w": ("lbt", "W", "W", (1.0, 2.0)),
    "h4l": ("lbt", "W", "L", (1.0, 2.0)),
    "h5w": ("lbt", "L", "W", (1.0, 2.0)),
    "h5l": ("lbt", "L", "L", (1.0, 2.0)),
}


def wilson_interval(successes: int, n: int, z: float = 1.96):
    """Wilson score estimate and half-width for a binomial fraction."""
    if n == 0:
        return 0.5, 0.5
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n + z * z / (4 * n * n)) / denom
    return center, half


def conditional_map_oracle(
    field_name: str,
    r0: float,
    offsets: np.ndarray,
    params: CoexParams,
    seed: int = 0,
    n_realizations: int = 8000,
):
    """Estimate P(probe transmits | tagged transmits) for planted nodes.

    The tagged node sits at (r0, 0) with its family's process emptied on
    B(0, r0); each offset is an alternative probe location evaluated against
    the same background realization.  Returns Wilson estimates per offset.
    """
    if field_name not in _FIELD_SETUP:
        raise ValueError(f"unknown conditional-MAP field {field_name!r}")
    mac_kind, fam_t, fam_p, window = _FIELD_SETUP[field_name]
    if mac_kind == "lbt" and params.gamma_l is None:
        raise ValueError("LBT fields require params.gamma_l")
    rules = mac_rules(mac_kind, params)
    offsets = np.asarray(offsets, dtype=float)
    x0 = np.array([r0, 0.0])

    cut = max(
        sensing_cutoff(g, pw, params) for _, g, pw in rules.values()
    )
    half = r0 + float(np.max(np.hypot(offsets[:, 0], offsets[:, 1]))) + cut + 40.0
    lam = {"W": params.lambda_w, "L": params.lambda_l}
    window_t = {"W": (0.0, 1.0), "L": window or (0.0, 1.0)}

    n_tagged = np.zeros(len(offsets), dtype=np.int64)
    n_both = np.zeros(len(offsets), dtype=np.int64)

    for rep in range(n_realizations):
        rng = _rng(seed, _S_ORACLE, 1, rep)
        nodes = {}
        for fam in ("W", "L"):
            pts = _sample_points(lam[fam], half, rng)
            if fam == fam_t and len(pts):
                pts = pts[np.hypot(pts[:, 0], pts[:, 1]) >= r0]
            nodes[fam] = pts
        timers = {fam: rng.uniform(*window_t[fam], len(nodes[fam])) for fam in ("W", "L")}
        t0 = rng.uniform(*window_t[fam_t])
        tq = rng.uniform(*window_t[fam_p], len(offsets))

        # background pressure on the tagged node and on each probe position
        blocked0 = False
        blocked_q = np.zeros(len(offsets), bool)
        for (src, dst), (mode, gamma, power) in rules.items():
            pts = nodes[src]
            if len(pts) == 0:
                continue
            if dst == fam_t:
                d = np.hypot(pts[:, 0] - x0[0], pts[:, 1] - x0[1])
                hit = rng.random(len(pts)) < sensing_probability(d, gamma, power, params)
                if mode == "timer":
                    hit &= timers[src] < t0
                blocked0 = blocked0 or bool(np.any(hit))
            if dst == fam_p:
                d = np.hypot(
                    pts[:, 0, None] - offsets[None, :, 0], pts[:, 1, None] - offsets[None, :, 1]
                )
                hit = rng.random(d.shape) < sensing_probability(d, gamma, power, params)
                if mode == "timer":
                    hit &= timers[src][:, None] < tq[None, :]
                blocked_q |= np.any(hit, axis=0)

        # cross links between the planted nodes
        d_cross = np.hypot(offsets[:, 0] - x0[0], offsets[:, 1] - x0[1])
        probe_blocks_tagged = np.zeros(len(offsets), bool)
        if (fam_p, fam_t) in rules:
            mode, gamma, power = rules[(fam_p, fam_t)]
            hit = rng.random(len(offsets)) < sensing_probability(d_cross, gamma, power, params)
            if mode == "timer":
                hit &= tq < t0
            probe_blocks_tagged = hit
        tagged_blocks_probe = np.zeros(len(offsets), bool)
        if (fam_t, fam_p) in rules:
            mode, gamma, power = rules[(fam_t, fam_p)]
            hit = rng.random(len(offsets)) < sensing_probability(d_cross, gamma, power, params)
            if mode == "timer":
                hit &= t0 < tq
            tagged_blocks_probe = hit

        e0 = (not blocked0) & ~probe_blocks_tagged
        eq = ~blocked_q & ~tagged_blocks_probe
        n_tagged += e0
        n_both += e0 & eq

    estimates = []
    for q in range(len(offsets)):
        center, half_w = wilson_interval(int(n_both[q]), int(n_tagged[q]))
        estimates.append(
            {
                "offset": tuple(offsets[q]),
                "estimate": center,
                "half_width": half_w,
                "n_tagged": int(n_tagged[q]),
                "n_both": int(n_both[q]),
            }
        )
    return estimates
