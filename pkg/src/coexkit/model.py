"""System model: deployment parameters, scenarios, propagation and geometry.

Holds the shared physical/MAC parameter set, the coexistence scenario tags,
and the pure functions (path loss, nearest-node distance density, rate to
SINR threshold inversion) every other module builds on.  All quantities are
SI linear: mW, meters, Hz, nodes per m^2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .units import SPEED_OF_LIGHT, dbm_to_mw, per_km2_to_per_m2

REFERENCE_DISTANCE = 1.0  # m, path loss is clamped below this


class ZeroAirtimeError(ValueError):
    """Raised when a rate threshold is requested for a link with zero airtime."""


@dataclass(frozen=True)
class Point2:
    """A planar location in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("coordinates must be finite")

    @property
    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def translate(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


ORIGIN = Point2(0.0, 0.0)


@dataclass(frozen=True)
class CoexParams:
    """Physical and MAC parameters of the overlaid Wi-Fi / LTE deployment.

    Intensities are per m^2, powers and thresholds linear mW, frequencies Hz.
    ``eta`` (LTE transmission duty fraction), ``gamma_l`` (LTE sensing
    threshold) and ``backoff_window`` (LTE backoff timer bounds) are only
    read by the scenarios that need them.
    """

    lambda_w: float = per_km2_to_per_m2(400.0)
    lambda_l: float = per_km2_to_per_m2(400.0)
    p_w: float = dbm_to_mw(23.0)
    p_l: float = dbm_to_mw(23.0)
    gamma_cs: float = dbm_to_mw(-82.0)
    gamma_ed: float = dbm_to_mw(-62.0)
    gamma_l: float | None = None
    f_c: float = 5.0e9
    alpha: float = 4.0
    mu: float = 1.0
    sigma_n2: float = 0.0
    bandwidth: float = 20.0e6
    eta: float | None = None
    backoff_window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.lambda_w < 0 or self.lambda_l < 0:
            raise ValueError("intensities must be >= 0")
        if self.p_w <= 0 or self.p_l <= 0:
            raise ValueError("transmit powers must be > 0")
        if self.gamma_cs <= 0 or self.gamma_ed <= 0:
            raise ValueError("sensing thresholds must be > 0")
        if self.gamma_cs > self.gamma_ed:
            raise ValueError("carrier sensing must be at least as sensitive as energy detection")
        if self.gamma_l is not None and self.gamma_l <= 0:
            raise ValueError("gamma_l must be > 0 when set")
        if self.f_c <= 0 or self.bandwidth <= 0:
            raise ValueError("carrier frequency and bandwidth must be > 0")
        if self.alpha <= 2:
            raise ValueError("path loss exponent must exceed 2 for integrability")
        if self.mu <= 0:
            raise ValueError("fading parameter must be > 0")
        if self.sigma_n2 < 0:
            raise ValueError("noise power must be >= 0")
        if self.eta is not None and not 0.0 <= self.eta <= 1.0:
            raise ValueError("duty cycle must lie in [0, 1]")
        if self.backoff_window is not None:
            a, b = self.backoff_window
            if not a < b:
                raise ValueError("backoff window must satisfy a < b")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.f_c

    @property
    def ref_loss(self) -> float:
        """Free-space attenuation at the reference distance, (4*pi/wavelength)^2."""
        return (4.0 * math.pi / self.wavelength) ** 2

    def with_(self, **changes) -> "CoexParams":
        return replace(self, **changes)


class ScenarioKind(enum.Enum):
    WIFI_ONLY = "wifi_only"
    WIFI_WIFI = "wifi_wifi"
    CONTINUOUS_LTE = "continuous_lte"
    DUTY_CYCLE_SYNC = "duty_cycle_sync"
    DUTY_CYCLE_ASYNC = "duty_cycle_async"
    LBT_SAME_PRIORITY = "lbt_same_priority"
    LBT_LOWER_PRIORITY = "lbt_lower_priority"


DUTY_KINDS = {ScenarioKind.DUTY_CYCLE_SYNC, ScenarioKind.DUTY_CYCLE_ASYNC}
LBT_KINDS = {ScenarioKind.LBT_SAME_PRIORITY, ScenarioKind.LBT_LOWER_PRIORITY}
_LBT_WINDOWS = {
    ScenarioKind.LBT_SAME_PRIORITY: (0.0, 1.0),
    ScenarioKind.LBT_LOWER_PRIORITY: (1.0, 2.0),
}


@dataclass(frozen=True)
class Scenario:
    """One of the coexistence mechanisms plus its per-scenario knobs."""

    kind: ScenarioKind
    eta: float | None = None
    gamma_l: float | None = None

    def __post_init__(self):
        if self.kind in DUTY_KINDS:
            if self.eta is None or not 0.0 <= self.eta <= 1.0:
                raise ValueError(f"{self.kind.value} requires eta in [0, 1]")
        if self.kind in LBT_KINDS and self.gamma_l is None:
            raise ValueError(f"{self.kind.value} requires gamma_l")

    @property
    def backoff_window(self) -> tuple[float, float] | None:
        return _LBT_WINDOWS.get(self.kind)

    def resolve(self, params: CoexParams) -> CoexParams:
        """Fold the scenario knobs into a parameter set.

        The Wi-Fi + Wi-Fi baseline maps onto the same-priority LBT machinery
        with every sensing threshold set to the carrier-sense level and the
        second operator transmitting at Wi-Fi power.
        """
        changes: dict = {}
        if self.eta is not None:
            changes["eta"] = self.eta
        if self.gamma_l is not None:
            changes["gamma_l"] = self.gamma_l
        if self.backoff_window is not None:
            changes["backoff_window"] = self.backoff_window
        if self.kind is ScenarioKind.WIFI_WIFI:
            changes["gamma_l"] = params.gamma_cs
            changes["gamma_ed"] = params.gamma_cs
            changes["p_l"] = params.p_w
            changes["backoff_window"] = (0.0, 1.0)
        if self.kind is ScenarioKind.WIFI_ONLY:
            changes["lambda_l"] = 0.0
        return params.with_(**changes)

    def label(self) -> str:
        parts = [self.kind.value]
        if self.eta is not None:
            parts.append(f"eta={self.eta:g}")
        if self.gamma_l is not None:
            parts.append(f"gamma_l_dbm={10.0 * math.log10(self.gamma_l):.0f}")
        return ";".join(parts)


def path_loss(d, params: CoexParams):
    """Linear free-space attenuation l(d); received power is P*F / l(d).

    Distances below the 1 m reference are clamped to it, which keeps every
    interference integrand bounded at the origin.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    out = params.ref_loss * np.maximum(d, REFERENCE_DISTANCE) ** params.alpha
    return out if out.ndim else float(out)


def nearest_distance_pdf(r, lam: float):
    """Density of the distance from the typical user to its nearest node,
    2*pi*lam*r*exp(-lam*pi*r^2), for a homogeneous process of intensity lam."""
    if lam <= 0:
        raise ValueError("intensity must be > 0")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be >= 0")
    out = 2.0 * math.pi * lam * r * np.exp(-lam * math.pi * r**2)
    return out if out.ndim else float(out)


def nearest_distance_truncation(lam: float, tail: float = 1e-6) -> float:
    """Radius beyond which the nearest-node distance has mass below ``tail``."""
    if lam <= 0:
        raise ValueError("intensity must be > 0")
    return math.sqrt(-math.log(tail) / (math.pi * lam))


def rate_to_sinr_threshold(rho: float, map_or_duty: float, bandwidth: float) -> float:
    """SINR threshold supporting aggregate rate ``rho`` with airtime fraction
    ``map_or_duty``: inverts rho = B * m * log2(1 + T)."""
    if rho < 0:
        raise ValueError("rate threshold must be >= 0")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    if map_or_duty <= 0.0:
        raise ZeroAirtimeError("airtime fraction is zero; rate coverage is 0 for rho > 0")
    if map_or_duty > 1.0:
        raise ValueError("airtime fraction must lie in (0, 1]")
    return 2.0 ** (rho / (bandwidth * map_or_duty)) - 1.0
