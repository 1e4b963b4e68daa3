"""Scaling behavior of bubble integrals and of the annular projection.

Two groups of tools:

* `project_bubble_radial` builds the exact projection of a centered bubble
  onto an annulus: the correction h(s) = A + B s^(2-N) is harmonic, so the
  two Dirichlet conditions PU(inner) = PU(outer) = 0 determine (A, B) by a
  2x2 linear solve and PU = U + h solves the same PDE as U.
  `remainder_check` then measures how well h is approximated by the sum of
  a boundary term (plain-kernel regular part of the ambient ball) and a
  hole term, relative to a three-piece model bound.

* `scaling_law_single` / `scaling_law_weighted` / `scaling_law_pair`
  integrate powers of one or two bubbles (optionally with power weights
  centered at the peak) over a shrinking geometric grid of concentration
  scales and fit log-log slopes against predicted exponents.  Critical
  parameter combinations carry a |log delta| factor, which the fit absorbs
  with an extra log|log delta| regressor.

All integrals reduce to 1D radial or nested axisymmetric quadrature; the
peaks of width delta are resolved by splitting the range into geometric
segments anchored at multiples of delta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .bubbles import BubbleParams, bubble_eval
from .greens import Ball, kernel_regular_part

_QUAD = dict(epsabs=0.0, epsrel=1e-10, limit=200)
_QUAD_INNER = dict(epsabs=0.0, epsrel=1e-9, limit=200)


def radial_profile(dims, delta, s):
    """Bubble profile as a function of the distance s to its center."""
    k = (dims.N - 2) / 2
    return dims.alphaN * (delta / (delta**2 + np.asarray(s, float) ** 2)) ** k


def _radial_laplacian(dims, delta, s):
    """Analytic Laplacian of the radial profile (same closed form as the
    point-based version in `bubbles`, specialized to a radius argument)."""
    N = dims.N
    A = dims.alphaN * delta ** ((N - 2) / 2)
    return -A * N * (N - 2) * delta**2 * (delta**2 + np.asarray(s, float) ** 2) ** (
        -(N + 2) / 2
    )


def _segments(lo, hi, anchors):
    """Sorted breakpoints lo < ... < hi including any anchors inside."""
    pts = [lo, hi]
    for a in anchors:
        if lo < a < hi:
            pts.append(a)
    return sorted(set(pts))


def _quad_segments(f, breaks, opts=_QUAD):
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        val, _ = quad(f, a, b, **opts)
        total += val
    return total


# ---------------------------------------------------------------------------
# exact radial projection and its defect
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Annulus:
    """Radial domain inner < s < outer centered at the origin."""

    inner: float
    outer: float

    def __post_init__(self):
        if not 0 < self.inner < self.outer:
            raise ValueError("annulus requires 0 < inner < outer")


@dataclass(frozen=True)
class RadialProjection:
    """Centered bubble plus the harmonic correction A + B s^(2-N) chosen so
    that the sum vanishes on both boundary spheres."""

    bubble: BubbleParams
    annulus: Annulus
    const_coeff: float   # A
    power_coeff: float   # B

    def correction(self, s):
        N = self.bubble.dims.N
        return self.const_coeff + self.power_coeff * np.asarray(s, float) ** (2 - N)

    def bubble_value(self, s):
        return radial_profile(self.bubble.dims, self.bubble.delta, s)

    def value(self, s):
        """PU(s) = U(s) + A + B s^(2-N)."""
        return self.bubble_value(s) + self.correction(s)

    def pde_residual(self, s):
        """-Δ(PU) - U^p with the Laplacian taken analytically.

        The correction is harmonic in closed form, so the residual reduces
        to the bubble's own certified residual.
        """
        dims, delta = self.bubble.dims, self.bubble.delta
        u = radial_profile(dims, delta, s)
        return -_radial_laplacian(dims, delta, s) - u**dims.p


def project_bubble_radial(annulus, bubble):
    """Solve the 2x2 boundary system for the harmonic correction.

    With u0 = U(inner), u1 = U(outer) and the harmonic pair (1, s^(2-N)):
        A + B inner^(2-N) = -u0,   A + B outer^(2-N) = -u1.
    """
    if not isinstance(annulus, Annulus):
        raise TypeError("first argument must be an Annulus")
    if float(np.linalg.norm(bubble.xi)) > 1e-14:
        raise ValueError("radial projection requires the bubble at the annulus center")
    N = bubble.dims.N
    u0 = float(radial_profile(bubble.dims, bubble.delta, annulus.inner))
    u1 = float(radial_profile(bubble.dims, bubble.delta, annulus.outer))
    p_in = annulus.inner ** (2 - N)
    p_out = annulus.outer ** (2 - N)
    B = (u1 - u0) / (p_in - p_out)
    A = -u1 - B * p_out
    return RadialProjection(bubble=bubble, annulus=annulus, const_coeff=A, power_coeff=B)


def tau_factor(dims, tau):
    """Offset attenuation (1 + |tau|^2)^(-(N-2)/2); equals 1 at tau = 0."""
    s2 = float(np.sum(np.asarray(tau, float) ** 2))
    return (1.0 + s2) ** (-(dims.N - 2) / 2)


@dataclass(frozen=True)
class RemainderReport:
    """Pointwise comparison of the projection defect with its model.

    The defect model subtracts a boundary term alpha_N delta^((N-2)/2) H
    (H = plain-kernel regular part of the ambient ball) and a hole term
    alpha_N delta^(-(N-2)/2) (r eps / s)^(N-2); what is left over is divided
    pointwise by the bound
        delta^((N-2)/2) [ eps^(N-2)(1 + eps delta^(1-N)) / s^(N-2)
                          + delta^2 + (eps/delta)^(N-2) ].
    """

    epsilon: float
    d: float
    radius_coeff: float
    delta: float
    sup_abs: float
    sup_ratio: float
    n_grid: int


def remainder_check(proj, eta, d, tau=0.0):
    """Evaluate the defect model on a log-spaced radial grid.

    The hole scale eps and the hole coefficient are recovered from
    delta = d sqrt(eps) and inner = coeff * eps.
    """
    dims = proj.bubble.dims
    N = dims.N
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if not eta < d < 1.0 / eta:
        raise ValueError("rate d must lie in (eta, 1/eta)")
    tau = np.atleast_1d(np.asarray(tau, float))
    if float(np.linalg.norm(tau)) > 0:
        raise ValueError("only the radial case tau = 0 is supported")
    delta = proj.bubble.delta
    eps = (delta / d) ** 2
    r_coeff = proj.annulus.inner / eps
    ball = Ball(radius=proj.annulus.outer, center=np.zeros(N), dims=dims)
    s = np.geomspace(proj.annulus.inner, proj.annulus.outer, 4000)
    probe = np.zeros((16, N))
    probe[:, 0] = np.geomspace(proj.annulus.inner, 0.99 * proj.annulus.outer, 16)
    h_vals = kernel_regular_part(ball, probe, np.zeros(N))
    # the regular part at a centered pole is constant; verify then broadcast
    if np.ptp(h_vals) > 1e-12 * abs(h_vals[0]):
        raise AssertionError("centered regular part expected constant")
    H = float(h_vals[0])
    defect = (
        proj.value(s)
        - proj.bubble_value(s)
        + dims.alphaN * delta ** ((N - 2) / 2) * H
        + dims.alphaN
        * delta ** (-(N - 2) / 2)
        * tau_factor(dims, tau)
        * (r_coeff * eps / s) ** (N - 2)
    )
    bound = delta ** ((N - 2) / 2) * (
        eps ** (N - 2) * (1 + eps * delta ** (1 - N)) / s ** (N - 2)
        + delta**2
        + (eps / delta) ** (N - 2)
    )
    ratio = np.abs(defect) / bound
    return RemainderReport(
        epsilon=eps,
        d=d,
        radius_coeff=r_coeff,
        delta=delta,
        sup_abs=float(np.max(np.abs(defect))),
        sup_ratio=float(np.max(ratio)),
        n_grid=len(s),
    )


def remainder_trend(dims, outer_radius, radius_coeff, d, eps_grid, eta=1e-3):
    """Run remainder_check over a decreasing eps grid; return the reports
    and the slope of log(sup ratio) against log(eps).  A slope >= -0.1
    certifies the ratio does not blow up as the hole shrinks."""
    reports = []
    for eps in np.sort(np.asarray(eps_grid, float))[::-1]:
        delta = d * math.sqrt(eps)
        ann = Annulus(inner=radius_coeff * eps, outer=outer_radius)
        bub = BubbleParams(delta=delta, xi=np.zeros(dims.N), dims=dims)
        reports.append(remainder_check(project_bubble_radial(ann, bub), eta, d))
    x = np.log([r.epsilon for r in reports])
    y = np.log([r.sup_ratio for r in reports])
    slope = float(np.polyfit(x, y, 1)[0])
    return reports, slope


# ---------------------------------------------------------------------------
# scaling-law fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    """Log-log slope fit of an integral family against its predicted
    exponent.  For pair integrals the three-term dominating bound and the
    pointwise value/bound ratios are attached."""

    delta_grid: np.ndarray
    values: np.ndarray
    exponent_measured: float
    exponent_predicted: float
    r2: float
    has_log: bool
    log_power: float = None
    bound_values: np.ndarray = None
    ratios: np.ndarray = None
    special_ratios: np.ndarray = None

    def __post_init__(self):
        g = np.asarray(self.delta_grid, float)
        if not (np.all(np.diff(g) < 0) and np.all(g[1:] / g[:-1] <= 0.5 + 1e-9)):
            raise ValueError("delta grid must decrease with ratio <= 1/2")
        object.__setattr__(self, "delta_grid", g)
        object.__setattr__(self, "values", np.asarray(self.values, float))


def default_delta_grid(n=12, start=1e-1, ratio=0.5):
    return start * ratio ** np.arange(n)


def _fit_loglog(deltas, values, with_log):
    """Least squares for log v = c + gamma log(delta) [+ b log|log delta|].

    Returns (gamma, r2, b or None).  A flat family (zero variance) counts
    as perfectly fitted.
    """
    x = np.log(deltas)
    y = np.log(values)
    cols = [np.ones_like(x), x]
    if with_log:
        cols.append(np.log(np.abs(np.log(deltas))))
    A = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot < 1e-20 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(coef[1]), r2, (float(coef[2]) if with_log else None)


def single_exponent(dims, q):
    """Predicted growth exponent of the single-bubble integral of U^q and
    whether it carries a |log delta| factor."""
    if not q > 0:
        raise ValueError("q must be positive")
    N = dims.N
    q_low = N / (N - 2)
    q_top = 2 * N / (N - 2)
    tol = 1e-12
    if abs(q - q_low) < tol:
        return N / 2, True
    if abs(q - q_top) < tol:
        return 0.0, False
    if q < q_low:
        return (N - 2) * q / 2, False
    return N - (N - 2) * q / 2, False


def weighted_exponent(dims, q, nu1, nu2):
    """Predicted exponent for the weighted integral of
    U^q |x_h - xi_h|^(nu1) / |x - a|^(nu2) with a = xi (centered weight).

    Returns (exponent, has_log, excise_hole); the hole of radius
    coeff*delta^2 is removed only when the weight is singular enough to
    need it.  Raises outside the admissible parameter region.
    """
    N = dims.N
    if nu1 < 0 or nu2 < 0:
        raise ValueError("weight powers must be nonnegative")
    tol = 1e-12
    if abs(nu2 - N) < tol:
        if nu1 > tol:
            raise ValueError("the nu2 = N case requires nu1 = 0")
        return -(N - 2) * q / 2, True, True
    if nu2 > N:
        raise ValueError("nu2 must not exceed the dimension")
    if nu2 < tol and abs((N - 2) * q - (N + nu1)) < tol:
        # boundary combination: logarithmic correction, no hole needed
        return (N - 2) * q / 2, True, False
    if (N - 2) * q + nu2 - nu1 <= N:
        raise ValueError("requires (N-2)q + nu2 - nu1 > N")
    return N + nu1 - nu2 - (N - 2) * q / 2, False, nu2 > tol


def spherical_coordinate_moment(dims, nu):
    """Mean of |omega_h|^nu over the unit sphere:
    Gamma((nu+1)/2) Gamma(N/2) / (sqrt(pi) Gamma((N+nu)/2))."""
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    N = dims.N
    return (
        math.gamma((nu + 1) / 2)
        * math.gamma(N / 2)
        / (math.sqrt(math.pi) * math.gamma((N + nu) / 2))
    )


def bubble_power_integral(dims, delta, q, outer, nu1=0.0, nu2=0.0, lower=0.0):
    """omega_{N-1} E[|omega_h|^nu1] * int s^(N-1+nu1-nu2) U(s)^q ds over
    [lower, outer], computed in the peak variable t = s/delta."""
    N = dims.N
    expo = N + nu1 - nu2 - (N - 2) * q / 2
    t_lo = lower / delta
    t_hi = outer / delta
    power = N - 1 + nu1 - nu2

    def f(t):
        return t**power * (1.0 + t * t) ** (-(N - 2) * q / 2)

    anchors = [10.0**k for k in range(-6, 8)]
    val = _quad_segments(f, _segments(t_lo, t_hi, anchors))
    return (
        dims.omegaNm1
        * spherical_coordinate_moment(dims, nu1)
        * dims.alphaN**q
        * delta**expo
        * val
    )


def scaling_law_single(q, dims, delta_grid=None, domain_radius=1.0):
    """Fit the integral of U^q over a centered ball versus the predicted
    single-bubble exponent."""
    grid = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, float)
    predicted, has_log = single_exponent(dims, q)
    values = np.array(
        [bubble_power_integral(dims, d, q, outer=domain_radius) for d in grid]
    )
    slope, r2, logpow = _fit_loglog(grid, values, has_log)
    return ScalingFit(
        delta_grid=grid,
        values=values,
        exponent_measured=slope,
        exponent_predicted=predicted,
        r2=r2,
        has_log=has_log,
        log_power=logpow,
    )


def scaling_law_weighted(q, nu1, nu2, dims, delta_grid=None, domain_radius=1.0,
                         hole_coeff=1.0):
    """Fit the centered weighted integral (weight |x_h|^nu1 / |x|^nu2,
    hole of radius hole_coeff*delta^2 removed when needed) versus the
    predicted exponent."""
    grid = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, float)
    predicted, has_log, excise = weighted_exponent(dims, q, nu1, nu2)
    values = np.array(
        [
            bubble_power_integral(
                dims, d, q, outer=domain_radius, nu1=nu1, nu2=nu2,
                lower=(hole_coeff * d * d if excise else 0.0),
            )
            for d in grid
        ]
    )
    slope, r2, logpow = _fit_loglog(grid, values, has_log)
    return ScalingFit(
        delta_grid=grid,
        values=values,
        exponent_measured=slope,
        exponent_predicted=predicted,
        r2=r2,
        has_log=has_log,
        log_power=logpow,
    )


# ---------------------------------------------------------------------------
# two-bubble product integrals
# ---------------------------------------------------------------------------


def _slice_area(dims):
    """Surface area of the (N-2)-sphere slicing out the polar angle."""
    N = dims.N
    return 2 * math.pi ** ((N - 1) / 2) / math.gamma((N - 1) / 2)


def pair_product_integral(dims, delta1, delta2, q1, q2, separation,
                          domain_radius=1.0, nu1=0.0, nu2=0.0):
    """Integral of U1^q1 U2^q2 (optionally weighted by
    |x - xi1|^(nu1 - nu2), weight pole at the first center) over the ball
    of radius domain_radius, centers at -/+ separation/2 on the first axis.

    The domain splits into a ball of radius separation/4 around each
    center (spherical quadrature there, the off-peak factor entering
    through a smooth polar integral) plus the remainder in cylinder
    coordinates with the two ball cross-sections excluded.
    """
    N = dims.N
    if not 0 < separation < 4.0 / 3.0 * domain_radius:
        raise ValueError("centers too close to each other or to the boundary")
    rho = separation / 4.0
    z1, z2 = -separation / 2.0, separation / 2.0
    slice_area = _slice_area(dims)
    L = separation

    def polar_int(r, delta_far, q_far, weighted):
        """Integral over the unit sphere direction of the far factor (and
        the weight when the far center is the weight pole)."""
        def g(theta):
            dist2 = r * r + L * L - 2 * r * L * math.cos(theta)
            val = radial_profile(dims, delta_far, math.sqrt(dist2)) ** q_far
            if weighted:
                val *= dist2 ** ((nu1 - nu2) / 2)
            return math.sin(theta) ** (N - 2) * val
        val, _ = quad(g, 0.0, math.pi, **_QUAD_INNER)
        return slice_area * val

    def peak_piece(delta_near, q_near, delta_far, q_far, near_is_pole):
        def f(r):
            w = r ** (nu1 - nu2) if near_is_pole else 1.0
            return (
                r ** (N - 1)
                * radial_profile(dims, delta_near, r) ** q_near
                * w
                * polar_int(r, delta_far, q_far, weighted=not near_is_pole)
            )
        anchors = [delta_near * 10.0**k for k in range(-2, 6)]
        return _quad_segments(f, _segments(0.0, rho, anchors), opts=_QUAD_INNER)

    weighted = (nu1 != 0.0) or (nu2 != 0.0)
    piece1 = peak_piece(delta1, q1, delta2, q2, near_is_pole=True)
    piece2 = peak_piece(delta2, q2, delta1, q1, near_is_pole=False)

    def u_inner(z):
        u_hi = math.sqrt(max(domain_radius**2 - z * z, 0.0))
        u_lo = 0.0
        for zc in (z1, z2):
            gap = rho * rho - (z - zc) ** 2
            if gap > 0:
                u_lo = max(u_lo, math.sqrt(gap))
        if u_lo >= u_hi:
            return 0.0

        def g(u):
            s1 = math.hypot(z - z1, u)
            s2 = math.hypot(z - z2, u)
            val = (
                radial_profile(dims, delta1, s1) ** q1
                * radial_profile(dims, delta2, s2) ** q2
            )
            if weighted:
                val *= s1 ** (nu1 - nu2)
            return u ** (N - 2) * val

        val, _ = quad(g, u_lo, u_hi, **_QUAD_INNER)
        return slice_area * val

    z_breaks = _segments(
        -domain_radius, domain_radius, [z1 - rho, z1, z1 + rho, z2 - rho, z2, z2 + rho]
    )
    rest = _quad_segments(u_inner, z_breaks, opts=_QUAD_INNER)
    return piece1 + piece2 + rest


def _pair_bound(dims, delta, q1, q2, domain_radius, nu1, nu2):
    """Three-term dominating bound: product of peak heights, plus each
    peak height times the other bubble's single integral (the weighted
    one when a weight is present)."""
    N = dims.N
    h1 = delta ** ((N - 2) * q1 / 2)
    h2 = delta ** ((N - 2) * q2 / 2)
    cover = 2.0 * domain_radius
    i2 = bubble_power_integral(dims, delta, q2, outer=cover)
    i1 = bubble_power_integral(dims, delta, q1, outer=cover, nu1=nu1, nu2=nu2,
                               lower=(delta * delta if nu2 > 0 else 0.0))
    return h1 * h2 + h1 * i2 + h2 * i1


def scaling_law_pair(q1, q2, dims, delta_grid=None, separation=0.5,
                     domain_radius=1.0, nu1=0.0, nu2=0.0):
    """Dominance fit for the two-bubble product integral.

    The shared-scale family (delta1 = delta2 = delta over the grid) is
    compared pointwise with the three-term bound; the fitted slope is
    reported against the bound's dominating exponent.  When both powers
    sit at the critical value N/(N-2) the family also gets the
    special-case normalization values^(2/N) / (delta^2 |log delta|^(2/N)).
    """
    if q1 < 0 or q2 < 0:
        raise ValueError("powers must be nonnegative")
    grid = default_delta_grid() if delta_grid is None else np.asarray(delta_grid, float)
    N = dims.N
    values = np.array(
        [
            pair_product_integral(
                dims, d, d, q1, q2, separation, domain_radius, nu1, nu2
            )
            for d in grid
        ]
    )
    bounds = np.array(
        [_pair_bound(dims, d, q1, q2, domain_radius, nu1, nu2) for d in grid]
    )

    # dominating exponent among the three bound terms
    terms = []
    e_pair = (N - 2) * (q1 + q2) / 2
    terms.append((e_pair, False))
    g2, log2 = single_exponent(dims, q2) if q2 > 0 else (0.0, False)
    terms.append(((N - 2) * q1 / 2 + g2, log2))
    if nu1 == 0.0 and nu2 == 0.0:
        g1, log1 = single_exponent(dims, q1) if q1 > 0 else (0.0, False)
    else:
        g1, log1, _ = weighted_exponent(dims, q1, nu1, nu2)
    terms.append(((N - 2) * q2 / 2 + g1, log1))
    e_min = min(t[0] for t in terms)
    near = [t for t in terms if t[0] < e_min + 1e-12]
    has_log = any(t[1] for t in near)
    slope, r2, logpow = _fit_loglog(grid, values, has_log)

    special = None
    q_low = N / (N - 2)
    if abs(q1 - q_low) < 1e-12 and abs(q2 - q_low) < 1e-12:
        special = values ** (2.0 / N) / (grid**2 * np.abs(np.log(grid)) ** (2.0 / N))
    return ScalingFit(
        delta_grid=grid,
        values=values,
        exponent_measured=slope,
        exponent_predicted=e_min,
        r2=r2,
        has_log=has_log,
        log_power=logpow,
        bound_values=bounds,
        ratios=values / bounds,
        special_ratios=special,
    )
