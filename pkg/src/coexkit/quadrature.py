"""Improper 2-D integrals of the interference model.

Provides the expected-contender-count integrals ``n_func`` and ``c_func``
(generic over intensity and transmit power, so one implementation serves
every threshold variant), the scalar helpers ``func_m`` / ``func_v`` /
``func_u`` with stable limit branches, and the radial interference
integrals used by the SINR coverage expressions.

All integrands decay either like exp(-c*r^alpha) or like r^(-alpha), so
everything is reduced to polar panels with Gauss-Legendre nodes crowded
where the integrand actually lives.  Each integral is evaluated twice at
different resolutions; disagreement beyond the tolerance raises
:class:`QuadratureError` carrying the best estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .model import CoexParams, Point2

# exp(-DECAY_EXPONENT) is treated as zero when picking truncation radii
DECAY_EXPONENT = 46.0


class QuadratureError(RuntimeError):
    """Adaptive refinement failed to converge.

    Carries the last estimate and the disagreement between refinement
    levels so callers can decide whether to proceed anyway.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and grid policy for the improper 2-D integrals."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    r_max: float = 1e5  # hard cap on any truncation radius, meters
    radial_points: int = 12  # Gauss nodes per radial panel
    angular_points: int = 10  # Gauss nodes per angular panel

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.r_max <= 0:
            raise ValueError("r_max must be > 0")
        if self.radial_points < 2 or self.angular_points < 2:
            raise ValueError("grid sizes must be >= 2")

    def tolerance(self, value: float) -> float:
        # factor 10 separates the refinement check from the target accuracy
        return 10.0 * max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_SPEC = QuadratureSpec()


@lru_cache(maxsize=64)
def _gauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _loss_sq(dist_sq, k: float, alpha: float):
    """Clamped path loss from squared distance: k * max(d, 1)^alpha."""
    m = np.maximum(dist_sq, 1.0)
    if alpha == 4.0:
        return k * (m * m)
    return k * m ** (0.5 * alpha)


def _panel_nodes(breaks: np.ndarray, n: int):
    """Gauss-Legendre nodes/weights on consecutive panels.

    ``breaks`` has shape (..., k) with non-decreasing entries; degenerate
    panels get zero weight, which lets callers clip breakpoints instead of
    branching.  Returns arrays of shape (..., (k-1)*n).
    """
    t, wt = _gauss(n)
    mid = 0.5 * (breaks[..., 1:] + breaks[..., :-1])
    half = 0.5 * (breaks[..., 1:] - breaks[..., :-1])
    x = mid[..., None] + half[..., None] * t
    w = half[..., None] * wt
    return x.reshape(*breaks.shape[:-1], -1), w.reshape(*breaks.shape[:-1], -1)


# ---------------------------------------------------------------------------
# stable building blocks for the conditional-MAP algebra
# ---------------------------------------------------------------------------

def _a_ratio(z):
    """(1 - exp(-z)) / z, continued to 1 at z = 0."""
    z = np.asarray(z, dtype=float)
    out = np.where(z == 0.0, 1.0, -np.expm1(-np.where(z == 0.0, 1.0, z)) / np.where(z == 0.0, 1.0, z))
    return out if out.ndim else float(out)


def _a_ratio_prime(z):
    """Derivative of (1 - exp(-z)) / z, series below 1e-3 to avoid cancellation."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, z, 1.0)
    series = -0.5 + zs / 3.0 - zs**2 / 8.0 + zs**3 / 30.0 - zs**4 / 144.0
    zb = np.where(small, 1.0, z)
    direct = (np.exp(-zb) * (1.0 + zb) - 1.0) / zb**2
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def _a_ratio_second(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, z, 1.0)
    series = 1.0 / 3.0 - zs / 4.0 + zs**2 / 10.0 - zs**3 / 36.0 + zs**4 / 168.0
    zb = np.where(small, 1.0, z)
    direct = (2.0 - np.exp(-zb) * (zb**2 + 2.0 * zb + 2.0)) / zb**3
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def _a_ratio_third(z):
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, z, 1.0)
    series = -0.25 + zs / 5.0 - zs**2 / 12.0 + zs**3 / 42.0
    zb = np.where(small, 1.0, z)
    direct = (np.exp(-zb) * (zb**3 + 3.0 * zb**2 + 6.0 * zb + 6.0) - 6.0) / zb**4
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


M_LIMIT_EPS = 1e-8


def func_m(n1, n2, n3):
    """Divided difference M(N1, N2, N3) of the timer deconditioning integral.

    Evaluates [(1-e^-N1)/N1 - (1-e^-(N1+N2-N3))/(N1+N2-N3)] / (N2-N3) with a
    series branch when |N2 - N3| < 1e-8, where the direct form loses all
    digits.
    """
    n1 = np.asarray(n1, dtype=float)
    w = np.asarray(n2, dtype=float) - np.asarray(n3, dtype=float)
    limit = np.abs(w) < M_LIMIT_EPS
    ws = np.where(limit, 1.0, w)
    direct = (_a_ratio(n1) - _a_ratio(n1 + ws)) / ws
    series = -_a_ratio_prime(n1) - 0.5 * w * _a_ratio_second(n1) - w**2 * _a_ratio_third(n1) / 6.0
    out = np.where(limit, series, direct)
    return out if out.ndim else float(out)


def _offset_norm(x):
    if isinstance(x, Point2):
        return x.norm
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1 and arr.shape[-1] == 2:
        return float(np.hypot(arr[0], arr[1]))
    return np.hypot(arr[..., 0], arr[..., 1])


def func_v(x, s1, s2, n1, n2, n3, params: CoexParams):
    """V(x, s1, s2, N1, N2, N3): numerator of a two-node joint access probability."""
    from .model import path_loss

    loss = path_loss(_offset_norm(x), params)
    term1 = -np.expm1(-params.mu * np.asarray(s1) * loss) * func_m(n1, n2, n3)
    term2 = -np.expm1(-params.mu * np.asarray(s2) * loss) * func_m(n2, n1, n3)
    out = term1 + term2
    return out if np.ndim(out) else float(out)


def func_u(x, s, n1, params: CoexParams):
    """U(x, s, N1): tagged-node access probability with one planted contender."""
    from .model import path_loss

    loss = path_loss(_offset_norm(x), params)
    out = _a_ratio(n1) - np.exp(-params.mu * np.asarray(s) * loss) * (-_a_ratio_prime(n1))
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# expected contender counts N and C
# ---------------------------------------------------------------------------

def _decay_radius(a_k: float, alpha: float) -> float:
    """Radius beyond which exp(-a*l(r)) < exp(-DECAY_EXPONENT)."""
    if a_k <= 0:
        return math.inf
    return max(1.0, (DECAY_EXPONENT / a_k) ** (1.0 / alpha))


def _full_plane_exp_integral(a: float, params: CoexParams) -> float:
    """Integral over R^2 of exp(-a*l(|x|)) with the 1 m clamp, closed form."""
    a_k = a * params.ref_loss
    alpha = params.alpha
    s = 2.0 / alpha
    # pi*e^{-aK} inside the clamp disc, incomplete-gamma tail outside
    tail = (2.0 * math.pi / alpha) * a_k ** (-s) * gamma_fn(s) * gammaincc(s, a_k)
    return math.pi * math.exp(-a_k) + tail


def _ball_exp_integral(a: float, d, r: float, params: CoexParams, n_radial: int, n_angular: int):
    """Integral of exp(-a*l(|x|)) over a ball of radius r centered at distance d
    from the origin, vectorized over d (polar around the ball center)."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if r <= 0.0:
        return np.zeros_like(d)
    a_k = a * params.ref_loss
    rho_dec = _decay_radius(a_k, params.alpha)
    # crowd radial panels on the intersection with the integrand's bump, and
    # pin the clamp-circle crossing (|x| = 1, i.e. rho in [d-1, d+1])
    c_lo = np.clip(d - rho_dec, 0.0, r)
    c_hi = np.clip(d + rho_dec, 0.0, r)
    breaks = np.sort(
        np.stack(
            [
                np.zeros_like(d),
                np.clip(d - 1.0, 0.0, r),
                np.clip(d + 1.0, 0.0, r),
                c_lo,
                0.5 * (c_lo + c_hi),
                c_hi,
                np.full_like(d, r),
            ],
            axis=-1,
        ),
        axis=-1,
    )
    rho, w_rho = _panel_nodes(breaks, n_radial)

    # bump is seen from the ball center in the direction of the origin (theta=pi)
    with np.errstate(divide="ignore", invalid="ignore"):
        width = np.where(d > 0, np.clip(rho_dec / np.maximum(d, 1e-12), 0.05, math.pi / 4.0), math.pi / 4.0)
    tb = np.stack(
        [np.zeros_like(d), math.pi - 4.0 * width, math.pi - width, np.full_like(d, math.pi)],
        axis=-1,
    )
    tb = np.maximum.accumulate(np.clip(tb, 0.0, math.pi), axis=-1)
    theta, w_theta = _panel_nodes(tb, n_angular)

    # |c + rho*u(theta)|^2 with the origin at angle pi from the ball center
    norm2 = (
        d[:, None, None] ** 2
        + rho[:, :, None] ** 2
        + 2.0 * d[:, None, None] * rho[:, :, None] * np.cos(theta[:, None, :])
    )
    vals = np.exp(-a * _loss_sq(np.maximum(norm2, 0.0), params.ref_loss, params.alpha))
    inner = 2.0 * np.einsum("it,irt->ir", w_theta, vals)  # even in theta
    return np.einsum("ir,ir->i", w_rho, inner * rho)


def n_func(
    y,
    r: float,
    gamma: float,
    lam: float,
    power: float,
    params: CoexParams,
    spec: QuadratureSpec = DEFAULT_SPEC,
):
    """Expected number of nodes of a PPP(lam) outside B(0, r) whose faded
    signal received at ``y`` exceeds ``gamma``.

    lam * integral over R^2 \\ B(0,r) of exp(-mu*gamma*l(|x-y|)/power).
    Vectorized over ``y`` (a Point2, a length-2 array, or an (n, 2) array).
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if r < 0:
        raise ValueError("exclusion radius must be >= 0")
    scalar = isinstance(y, Point2) or np.asarray(y, dtype=float).ndim == 1
    d = np.atleast_1d(_offset_norm(y))
    if lam == 0.0:
        out = np.zeros_like(d)
        return float(out[0]) if scalar else out

    a = params.mu * gamma / power
    full = _full_plane_exp_integral(a, params)

    def estimate(nr, na):
        return lam * (full - _ball_exp_integral(a, d, r, params, nr, na))

    out = _converge(estimate, spec, "n_func")
    return float(out[0]) if scalar else out


def _converge(estimate, spec: QuadratureSpec, name: str):
    """Refinement ladder: return once two successive grids agree."""
    nr, na = spec.radial_points, spec.angular_points
    ladder = [(nr, na), (nr + nr // 2, na + na // 2), (2 * nr, 2 * na), (3 * nr, 3 * na)]
    previous = estimate(*ladder[0])
    err = tol = math.inf
    for level in ladder[1:]:
        current = estimate(*level)
        err = float(np.max(np.abs(current - previous)))
        tol = spec.tolerance(float(np.max(np.abs(current))))
        if err <= tol:
            return current
        previous = current
    raise QuadratureError(
        f"{name} did not converge (disagreement {err:.3e} > {tol:.3e})",
        estimate=previous,
        error_bound=err,
    )


def _as_points(y):
    if isinstance(y, Point2):
        return np.array([[y.x, y.y]]), True
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def c_func(
    y1,
    gamma1: float,
    y2,
    gamma2: float,
    lam: float,
    power: float,
    params: CoexParams,
    spec: QuadratureSpec = DEFAULT_SPEC,
    exclusion_radius: float | None = None,
):
    """Expected number of nodes of a PPP(lam) outside B(0, |y2|) whose faded
    signals at ``y1`` and ``y2`` exceed ``gamma1`` and ``gamma2``.

    The exclusion ball follows the frame of the arguments: passing translated
    coordinates with ``y2`` at the origin integrates over the whole plane.
    Vectorized over ``y1`` with ``y2`` fixed.
    """
    if gamma1 <= 0 or gamma2 <= 0:
        raise ValueError("thresholds must be > 0")
    p1, scalar = _as_points(y1)
    p2 = np.asarray([y2.x, y2.y] if isinstance(y2, Point2) else y2, dtype=float)
    excl = float(np.hypot(*p2)) if exclusion_radius is None else float(exclusion_radius)
    if lam == 0.0:
        out = np.zeros(p1.shape[0])
        return float(out[0]) if scalar else out

    mu = params.mu
    a1 = mu * gamma1 / power
    a2 = mu * gamma2 / power
    alpha = params.alpha
    k = params.ref_loss
    rho1 = _decay_radius(a1 * k, alpha)
    rho2 = _decay_radius(a2 * k, alpha)

    rel = p1 - p2  # probe positions in the frame centered at y2; the law of
    # cosines below folds the per-item rotation into the distance directly
    d12 = np.hypot(rel[:, 0], rel[:, 1])


    def full_part(nr, na):
        # polar around y2, radius limited by its own bump support
        w_max = min(rho2, spec.r_max)
        c_lo = np.clip(d12 - rho1, 0.0, w_max)
        c_hi = np.clip(d12 + rho1, 0.0, w_max)
        breaks = np.sort(
            np.stack(
                [
                    np.zeros_like(d12),
                    np.full_like(d12, min(1.0, w_max)),
                    np.full_like(d12, 0.15 * w_max),
                    np.full_like(d12, 0.45 * w_max),
                    c_lo,
                    c_hi,
                    np.sqrt(np.maximum(c_hi, 1.0) * w_max),
                    np.full_like(d12, w_max),
                ],
                axis=-1,
            ),
            axis=-1,
        )
        rho, w_rho = _panel_nodes(breaks, nr)
        # crowd angular panels toward the probe direction (theta = 0 after rotation)
        width = np.clip(rho1 / np.maximum(d12, 1.0), 0.1, math.pi / 3.0)
        tb = np.stack(
            [np.zeros_like(d12), width, 3.0 * width, np.full_like(d12, math.pi)], axis=-1
        )
        tb = np.maximum.accumulate(np.clip(tb, 0.0, math.pi), axis=-1)
        theta, w_theta = _panel_nodes(tb, na)
        dist1_sq = (
            rho[:, :, None] ** 2
            + d12[:, None, None] ** 2
            - 2.0 * rho[:, :, None] * d12[:, None, None] * np.cos(theta[:, None, :])
        )
        vals = np.exp(-a2 * _loss_sq(rho * rho, k, alpha))[:, :, None] * np.exp(
            -a1 * _loss_sq(np.maximum(dist1_sq, 0.0), k, alpha)
        )
        inner = 2.0 * np.einsum("it,irt->ir", w_theta, vals)
        return np.einsum("ir,ir->i", w_rho, inner * rho)

    def excl_part(nr, na):
        if excl <= 0.0:
            return np.zeros(p1.shape[0])
        # polar around the origin over the exclusion ball, radial and angular
        # panels crowded where either bump intersects the ball
        d1 = np.hypot(p1[:, 0], p1[:, 1])
        d2c = float(np.hypot(p2[0], p2[1]))
        rcand = np.stack(
            [
                np.zeros_like(d1),
                np.full_like(d1, min(1.0, excl)),
                np.full_like(d1, np.clip(d2c - rho2, 0.0, excl)),
                np.clip(d1 - rho1, 0.0, excl),
                np.clip(d1 + rho1, 0.0, excl),
                np.full_like(d1, excl),
            ],
            axis=-1,
        )
        rho, w_rho = _panel_nodes(np.sort(rcand, axis=-1), nr)

        phi1 = np.mod(np.arctan2(p1[:, 1], p1[:, 0]), 2.0 * math.pi)
        phi2 = math.atan2(p2[1], p2[0]) % (2.0 * math.pi)
        w1 = np.clip(rho1 / np.maximum(d1, 1.0), 0.15, math.pi)
        w2 = np.clip(rho2 / max(d2c, 1.0), 0.15, math.pi)
        two_pi = 2.0 * math.pi
        tcand = np.stack(
            [
                np.zeros_like(d1),
                np.mod(phi1 - 3.0 * w1, two_pi),
                np.mod(phi1 - w1, two_pi),
                np.mod(phi1, two_pi),
                np.mod(phi1 + w1, two_pi),
                np.mod(phi1 + 3.0 * w1, two_pi),
                np.full_like(d1, (phi2 - w2) % two_pi),
                np.full_like(d1, phi2),
                np.full_like(d1, (phi2 + w2) % two_pi),
                np.full_like(d1, two_pi),
            ],
            axis=-1,
        )
        th, w_th = _panel_nodes(np.sort(tcand, axis=-1), na)
        x = rho[:, :, None] * np.cos(th[:, None, :])
        yy = rho[:, :, None] * np.sin(th[:, None, :])
        d1_sq = (x - p1[:, 0, None, None]) ** 2 + (yy - p1[:, 1, None, None]) ** 2
        d2_sq = (x - p2[0]) ** 2 + (yy - p2[1]) ** 2
        vals = np.exp(-a1 * _loss_sq(d1_sq, k, alpha) - a2 * _loss_sq(d2_sq, k, alpha))
        inner = np.einsum("it,irt->ir", w_th, vals)
        return np.einsum("ir,ir->i", w_rho * rho, inner)

    def estimate(nr, na):
        return lam * (full_part(nr, na) - excl_part(nr, na))

    out = _converge(estimate, spec, "c_func")
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# SINR interference integrals
# ---------------------------------------------------------------------------

def _kernel_integral_alpha4(b: float, s: float, kappa: float, k: float) -> float:
    """Closed form of integral over R^2 \\ B(0,b) of s/(kappa*l(|x|)+s), alpha=4."""
    if s <= 0.0:
        return 0.0
    inner = 0.0
    if b < 1.0:
        inner = math.pi * (1.0 - b * b) * s / (kappa * k + s)
    u0 = max(b, 1.0) ** 2
    c = math.sqrt(kappa * k / s)
    return inner + math.pi / c * (math.pi / 2.0 - math.atan(u0 * c))


def sinr_kernel_integral(
    b: float, s: float, kappa: float, params: CoexParams, spec: QuadratureSpec = DEFAULT_SPEC
) -> float:
    """Integral over R^2 \\ B(0,b) of s / (kappa*l(|x|) + s).

    ``s`` is the threshold times the serving-link loss; ``kappa`` rescales the
    interferer loss for cross-technology power ratios.  Exact for alpha = 4,
    panel quadrature plus an analytic power-law tail otherwise.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    if s == 0.0:
        return 0.0
    k = params.ref_loss
    if params.alpha == 4.0:
        return _kernel_integral_alpha4(b, s, kappa, k)

    alpha = params.alpha
    # switch to the analytic tail once kappa*l(r) dominates s by 10^4
    r_big = max((1e4 * s / (kappa * k)) ** (1.0 / alpha), max(b, 1.0) * 2.0)
    r_big = min(r_big, spec.r_max)
    tail = 2.0 * math.pi * s / (kappa * k) * r_big ** (2.0 - alpha) / (alpha - 2.0)

    def estimate(nr, na):
        del na
        lo = min(b, r_big)
        breaks = np.array([lo, max(lo, 1.0), max(lo, (s / (kappa * k)) ** (1.0 / alpha)), r_big])
        breaks = np.maximum.accumulate(breaks)
        r, w = _panel_nodes(breaks[None, :], 4 * nr)
        integrand = s / (kappa * k * np.maximum(r, 1.0) ** alpha + s)
        inner = 0.0
        if b < 1.0:
            inner = math.pi * (1.0 - b * b) * s / (kappa * k + s)
        return np.array([inner + 2.0 * math.pi * float(np.sum(w * r * integrand)) + tail])

    return float(_converge(estimate, spec, "sinr_kernel_integral")[0])


def laplace_interference_integral(
    threshold: float,
    serving_loss: float,
    power_ratio: float,
    lam: float,
    h,
    exclusion_radius: float,
    params: CoexParams,
    spec: QuadratureSpec = DEFAULT_SPEC,
    plateau: float = 0.0,
    support_radius: float | None = None,
) -> float:
    """Exponent of the Laplace functional of one interferer family.

    Integral over R^2 \\ B(0, exclusion_radius) of
    ``lam * h(x) * T*l0 / (power_ratio*l(|x|) + T*l0)``; the caller
    exponentiates.  ``h`` is the conditional medium-access intensity factor:
    either a constant (pass ``h=None`` with ``plateau`` set), or a callable
    ``h(rho, theta)`` vectorized over polar grids, flat beyond
    ``support_radius`` where it equals ``plateau``.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    if lam == 0.0 or threshold == 0.0:
        return 0.0
    s = threshold * serving_loss
    base = plateau * sinr_kernel_integral(exclusion_radius, s, power_ratio, params, spec)
    if h is None:
        return lam * base

    if support_radius is None:
        raise ValueError("support_radius is required for a varying h")
    k = params.ref_loss
    alpha = params.alpha

    # align panels with the field's interpolation knots when it has any, so
    # each panel sees a smooth (bilinear x kernel) integrand
    knot_r = np.asarray(getattr(h, "radii", np.geomspace(max(exclusion_radius, 0.5), support_radius, 25)))
    knot_t = np.asarray(getattr(h, "thetas", np.linspace(0.0, math.pi, 9)))
    lo, hi = exclusion_radius, support_radius
    if hi <= lo:
        return lam * base
    rbreaks = np.concatenate([[lo], knot_r[(knot_r > lo) & (knot_r < hi)], [hi]])
    if lo < 1.0 < hi:  # path-loss clamp kink
        rbreaks = np.sort(np.append(rbreaks, 1.0))

    def estimate(nr, na):
        r, w = _panel_nodes(rbreaks[None, :], max(4, nr // 3))
        th, w_th = _panel_nodes(knot_t[None, :], max(3, na // 3))
        hv = h(r[0][:, None], th[0][None, :]) - plateau
        kern = s / (_loss_sq(r[0] * r[0], k, alpha) * power_ratio + s)
        inner = 2.0 * np.einsum("t,rt->r", w_th[0], hv)
        return np.array([float(np.sum(w[0] * r[0] * kern * inner))])

    residual = float(_converge(estimate, spec, "laplace_interference_integral")[0])
    return lam * (base + residual)
