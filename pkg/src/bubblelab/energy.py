"""Reduced energy: constants, interaction kernel, critical point.

The finite-dimensional energy for peaks at hole centers a_i, with rates
d_i (delta_i = d_i sqrt(eps)) and normalized offsets tau_i, is

    Psi(d, tau) = sum_i w_i [ b2 H_i d_i^(N-2)
                  + (alpha_N^(p+1) r_i^(N-2) / 2) Gamma(tau_i)
                    / (d_i^(N-2) (1+|tau_i|^2)^((N-2)/2)) ],

where H_i is the Robin function of the ambient domain at a_i in the
plain-kernel normalization (regular part of |x-y|^(2-N); see greens.py)
and r_i the hole radius coefficient.  The weights are mu_i^(-2/(p-1)) for
one component per peak, or the group sums of c_i^2 in the grouped
construction — the same formula, since a singleton group has
c^2 = mu^(-2/(p-1)).

Gamma is reduced exactly to 1D: |y+tau|^(2-N) is harmonic away from -tau,
so its average over the sphere |y| = r equals max(r,|tau|)^(2-N), giving

    Gamma(tau) = omega_{N-1} [ s^(2-N) A(s) + (1+s^2)^(-N/2)/N ],
    A(s) = int_0^s r^(N-1) (1+r^2)^(-(N+2)/2) dr,   s = |tau|.

All 1D integrals use adaptive Gauss-Kronrod quadrature at abs tolerance
1e-12, with tails mapped by r = tan(theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-12, limit=200)


def _quad_tail(f, a):
    """Integral of f over (a, infinity) via the r = tan(theta) substitution."""
    t0 = math.atan(a)
    val, _ = quad(
        lambda t: f(math.tan(t)) / math.cos(t) ** 2, t0, math.pi / 2, **_QUAD_OPTS
    )
    return val


def constant_b1(dims):
    """b1 = (alpha^(p+1)/N) * omega_{N-1} * int_0^inf r^(N-1)(1+r^2)^(-N) dr."""
    N = dims.N
    radial = _quad_tail(lambda r: r ** (N - 1) * (1 + r**2) ** (-N), 0.0)
    return dims.alphaN ** (dims.p + 1) / N * dims.omegaNm1 * radial


def constant_b2(dims):
    """b2 = (alpha^(p+1)/2) * omega_{N-1} * int_0^inf r^(N-1)(1+r^2)^(-(N+2)/2) dr."""
    N = dims.N
    radial = _quad_tail(lambda r: r ** (N - 1) * (1 + r**2) ** (-(N + 2) / 2), 0.0)
    return dims.alphaN ** (dims.p + 1) / 2 * dims.omegaNm1 * radial


def _gamma_inner(dims, s):
    """A(s) = int_0^s r^(N-1) (1+r^2)^(-(N+2)/2) dr."""
    N = dims.N
    val, _ = quad(lambda r: r ** (N - 1) * (1 + r**2) ** (-(N + 2) / 2), 0.0, s, **_QUAD_OPTS)
    return val


def gamma_kernel(dims, tau):
    """Interaction kernel Gamma(tau); depends on tau only through |tau|."""
    s = float(np.linalg.norm(np.atleast_1d(np.asarray(tau, float))))
    N = dims.N
    tail = (1 + s**2) ** (-N / 2) / N
    if s == 0.0:
        return dims.omegaNm1 * tail  # = omega_{N-1}/N
    return dims.omegaNm1 * (s ** (2 - N) * _gamma_inner(dims, s) + tail)


def gamma_radial_derivs(dims, s):
    """(Gamma'(s), Gamma''(s)) of the radial profile; the tail derivative
    cancels against the moving endpoint, leaving only the A(s) terms."""
    N, om = dims.N, dims.omegaNm1
    if s == 0.0:
        return 0.0, om * (2 - N) / N
    A = _gamma_inner(dims, s)
    g1 = om * (2 - N) * s ** (1 - N) * A
    g2 = om * (2 - N) * ((1 - N) * s**-N * A + (1 + s**2) ** (-(N + 2) / 2))
    return g1, g2


def gamma_mc(dims, tau, n_samples=2_000_000, seed=0):
    """Monte Carlo value of the N-dimensional Gamma integral (cross-check).

    Importance-samples the density proportional to (1+|y|^2)^(-(N+2)/2),
    whose radial CDF inverts in closed form: u = q^(2/N), r = sqrt(u/(1-u)).
    The normalization constant equals Gamma(0), so
    Gamma(tau) = Gamma(0) * E[|y + tau|^(2-N)].
    """
    N = dims.N
    rng = np.random.default_rng(seed)
    q = rng.random(n_samples)
    u = q ** (2.0 / N)
    r = np.sqrt(u / (1.0 - u))
    dirs = rng.normal(size=(n_samples, N))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    y = r[:, None] * dirs
    dist = np.linalg.norm(y + np.asarray(tau, float), axis=1)
    return gamma_kernel(dims, np.zeros(N)) * float(np.mean(dist ** (2.0 - N)))


@dataclass(frozen=True)
class ReducedEnergyModel:
    """Everything needed to evaluate Psi: per-peak weights, Robin values
    (plain-kernel normalization), hole radius coefficients, cached b1/b2."""

    dims: object
    weights: np.ndarray
    robin: np.ndarray
    hole_r: np.ndarray
    b1: float = field(default=None)
    b2: float = field(default=None)

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, float))
        H = np.atleast_1d(np.asarray(self.robin, float))
        r = np.atleast_1d(np.asarray(self.hole_r, float))
        if not (w.shape == H.shape == r.shape):
            raise ValueError("weights, robin, hole_r must have one entry per peak")
        if not (np.all(w > 0) and np.all(H > 0) and np.all(r > 0)):
            raise ValueError("weights, robin values, hole radii must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "robin", H)
        object.__setattr__(self, "hole_r", r)
        if self.b1 is None:
            object.__setattr__(self, "b1", constant_b1(self.dims))
        if self.b2 is None:
            object.__setattr__(self, "b2", constant_b2(self.dims))

    @property
    def n_peaks(self):
        return len(self.weights)

    def hole_coeff(self):
        """B-side coefficients: w_i alpha^(p+1) r_i^(N-2) Gamma(0) / 2."""
        d = self.dims
        gamma0 = d.omegaNm1 / d.N
        return self.weights * d.alphaN ** (d.p + 1) * self.hole_r ** (d.N - 2) * gamma0 / 2

    def robin_coeff(self):
        """A-side coefficients: w_i b2 H_i."""
        return self.weights * self.b2 * self.robin


@dataclass(frozen=True)
class ReducedPoint:
    """Rates d_i and offsets tau_i, constrained to the box X_eta."""

    d: np.ndarray
    tau: np.ndarray
    eta: float = 1e-3

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.d, float))
        tau = np.asarray(self.tau, float)
        if tau.ndim == 1:
            tau = tau[None, :] if len(d) == 1 else tau
        if tau.shape[0] != len(d):
            raise ValueError("tau must provide one offset vector per peak")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "tau", tau)

    def in_box(self):
        ub = 1.0 / self.eta
        return bool(
            np.all(self.d > self.eta)
            and np.all(self.d < ub)
            and np.all(np.linalg.norm(self.tau, axis=-1) < ub)
        )


def _check_box(pt):
    if not pt.in_box():
        raise ValueError("point outside the box X_eta")


def psi_value(model, pt):
    """Psi(d, tau)."""
    _check_box(pt)
    dm = model.dims
    N = dm.N
    total = 0.0
    for i in range(model.n_peaks):
        s2 = float(np.sum(pt.tau[i] ** 2))
        g = gamma_kernel(dm, pt.tau[i])
        total += model.weights[i] * (
            model.b2 * model.robin[i] * pt.d[i] ** (N - 2)
            + dm.alphaN ** (dm.p + 1) * model.hole_r[i] ** (N - 2) / 2
            * g / (pt.d[i] ** (N - 2) * (1 + s2) ** ((N - 2) / 2))
        )
    return total


def psi_grad(model, pt):
    """Analytic gradient (d Psi/d d_i, d Psi/d tau_{i,h}); flat layout
    [d_0..d_{m-1}, tau_{0,1..N}, tau_{1,1..N}, ...]."""
    _check_box(pt)
    dm = model.dims
    N = dm.N
    m = model.n_peaks
    gd = np.zeros(m)
    gt = np.zeros((m, N))
    for i in range(m):
        tau = pt.tau[i]
        s = float(np.linalg.norm(tau))
        s2 = s * s
        g = gamma_kernel(dm, tau)
        g1, g2 = gamma_radial_derivs(dm, s)
        Ki = model.weights[i] * dm.alphaN ** (dm.p + 1) * model.hole_r[i] ** (N - 2) / 2
        phi = (1 + s2) ** (-(N - 2) / 2)
        gd[i] = (N - 2) * (
            model.weights[i] * model.b2 * model.robin[i] * pt.d[i] ** (N - 3)
            - Ki * g * phi / pt.d[i] ** (N - 1)
        )
        if s > 0:
            radial = g1 * phi - (N - 2) * g * s * (1 + s2) ** (-N / 2)
            gt[i] = Ki / pt.d[i] ** (N - 2) * radial * tau / s
        # at tau = 0 the gradient vanishes identically (radial maximum)
    return np.concatenate([gd, gt.ravel()])


def psi_hessian_at_flat(model, d):
    """Analytic Hessian blocks at (d, tau=0): returns (d-block diagonal,
    tau-block diagonal scalars per peak).  Mixed blocks vanish there."""
    dm = model.dims
    N = dm.N
    gamma0 = dm.omegaNm1 / dm.N
    _, g2_0 = gamma_radial_derivs(dm, 0.0)
    d = np.atleast_1d(np.asarray(d, float))
    dd = np.empty(model.n_peaks)
    tt = np.empty(model.n_peaks)
    for i in range(model.n_peaks):
        Ki = model.weights[i] * dm.alphaN ** (dm.p + 1) * model.hole_r[i] ** (N - 2) / 2
        dd[i] = (N - 2) * (
            (N - 3) * model.weights[i] * model.b2 * model.robin[i] * d[i] ** (N - 4)
            + (N - 1) * Ki * gamma0 / d[i] ** N
        )
        # radial function Gamma(s)(1+s^2)^(-(N-2)/2): second derivative at 0
        tt[i] = Ki / d[i] ** (N - 2) * (g2_0 - (N - 2) * gamma0)
    return dd, tt


@dataclass(frozen=True)
class CriticalPointReport:
    point: ReducedPoint
    hess_d: np.ndarray       # diagonal of the d-block
    hess_tau: np.ndarray     # per-peak scalar multiplying Id_N in the tau-block
    grad_norm: float
    signature_ok: bool       # d-block positive, tau-block negative
    in_box: bool


def critical_point(model, eta=1e-3):
    """Closed-form critical point (d_tilde, 0) with per-peak
    d_tilde_i = (B_i / A_i)^(1/(2(N-2))), plus Hessian classification."""
    N = model.dims.N
    A = model.robin_coeff()
    B = model.hole_coeff()
    d_t = (B / A) ** (1.0 / (2 * (N - 2)))
    pt = ReducedPoint(d=d_t, tau=np.zeros((model.n_peaks, N)), eta=eta)
    hd, ht = psi_hessian_at_flat(model, d_t)
    grad = psi_grad(model, pt) if pt.in_box() else np.array([np.inf])
    return CriticalPointReport(
        point=pt,
        hess_d=hd,
        hess_tau=ht,
        grad_norm=float(np.max(np.abs(grad))),
        signature_ok=bool(np.all(hd > 0) and np.all(ht < 0)),
        in_box=pt.in_box(),
    )


def energy_expansion(model, epsilon):
    """Leading-order energy: (sum_i w_i) b1 + Psi(d_tilde, 0) eps^((N-2)/2)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    rep = critical_point(model)
    return float(np.sum(model.weights)) * model.b1 + psi_value(model, rep.point) * epsilon ** (
        (model.dims.N - 2) / 2
    )


def sigma_constant(dims, l, k=None):
    """Limiting weighted norms sigma_lk of the derivative kernels.

    sigma_lk = 0 for l != k (odd symmetry);
    sigma_00 = p alpha^(p+1) ((N-2)/2)^2 int (|y|^2-1)^2 (1+|y|^2)^-(N+2) dy;
    sigma_ll = p alpha^(p+1) (N-2)^2   int y_l^2    (1+|y|^2)^-(N+2) dy.
    """
    N = dims.N
    if not (0 <= l <= N) or (k is not None and not (0 <= k <= N)):
        raise IndexError("kernel index out of range")
    if k is not None and k != l:
        return 0.0
    pref = dims.p * dims.alphaN ** (dims.p + 1)
    if l == 0:
        radial = _quad_tail(
            lambda r: r ** (N - 1) * (r**2 - 1) ** 2 * (1 + r**2) ** (-(N + 2)), 0.0
        )
        return pref * ((N - 2) / 2) ** 2 * dims.omegaNm1 * radial
    radial = _quad_tail(lambda r: r ** (N + 1) * (1 + r**2) ** (-(N + 2)), 0.0)
    return pref * (N - 2) ** 2 * dims.omegaNm1 / N * radial


def sigma_cross_quadrature_01(dims):
    """Direct 2D axisymmetric quadrature of the (0,1) cross integral
    int y_1 (|y|^2-1) (1+|y|^2)^-(N+2) dy — odd in y_1, so ~ 0."""
    N = dims.N
    om = {3: 2 * math.pi, 4: 4 * math.pi}[N]  # area of S^(N-2) in R^(N-1)

    def inner(z):
        val, _ = quad(
            lambda rho: rho ** (N - 2)
            * z
            * (z**2 + rho**2 - 1)
            * (1 + z**2 + rho**2) ** (-(N + 2)),
            0.0,
            20.0,
            **_QUAD_OPTS,
        )
        return val

    val, _ = quad(inner, -20.0, 20.0, **_QUAD_OPTS)
    return om * val


def sigma_cross_mc_12(dims, n_samples=400_000, seed=3):
    """Monte Carlo spot check of int y_1 y_2 (1+|y|^2)^-(N+2) dy ~ 0."""
    N = dims.N
    rng = np.random.default_rng(seed)
    y = rng.normal(scale=1.0, size=(n_samples, N))
    # importance weight against the normal proposal
    dens = np.exp(-0.5 * np.sum(y**2, axis=1)) / (2 * np.pi) ** (N / 2)
    f = y[:, 0] * y[:, 1] * (1 + np.sum(y**2, axis=1)) ** (-(N + 2.0))
    return float(np.mean(f / dens))
