"""Intrinsic geometry of the glued metric g = Gamma^2 dtheta^2 + drho^2.

Curvature, the connection coefficient omega, geodesics, and numerical
verification of the characterizing identities: the curvature ODE, the
Laplace identity, the biconservative PDE, the first integral, and the
isothermal sigma-equation.

Sign conventions (documented in every report):
  * X1 = d/drho globally; omega = 3 K'/(8(eps-K)) = Gamma'/Gamma = -F'/F.
  * Delta is the geometer's Laplacian: Delta h = -(h'' + omega h') for
    h = h(rho).  With this sign both the Laplace identity and the
    biconservative PDE vanish on the constructed profiles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from . import _kernels
from .errors import DomainError, IntegrationFailureError, CoverageError
from .gluing import (GluedProfile, block_reduce, eval_F,
                     eval_F_with_derivatives, junctions_in, derivative_F)

__all__ = [
    "GluedMetric",
    "ResidualReport",
    "GeodesicResult",
    "gauss_curvature",
    "grad_K_xi_form",
    "omega",
    "curvature_stack",
    "verify_curvature_ode",
    "verify_laplace_identity",
    "verify_bicons_pde",
    "verify_isothermal_form",
    "verify_frame_relations",
    "first_integral_alpha",
    "completeness_comparison",
    "geodesic_integrate",
    "random_geodesic_probes",
    "sample_grid",
]

SIGN_CONVENTION = "Delta h = -(h'' + (Gamma'/Gamma) h'); X1 = d/drho"

GUARD_BAND_FRACTION = 1e-4


@dataclass(frozen=True)
class GluedMetric:
    """The complete rotational metric Gamma^2 dtheta^2 + drho^2."""

    gp: GluedProfile

    @property
    def eps(self) -> int:
        return self.gp.eps

    @property
    def C(self) -> float:
        return self.gp.C

    @property
    def block_width(self) -> float:
        if self.gp.periodic:
            return self.gp.lattice.rho_plus - self.gp.lattice.rho_minus
        return self.gp.block_width

    def default_window(self) -> tuple[float, float]:
        lat = self.gp.lattice
        if self.gp.periodic:
            return (lat.rho_minus - lat.period, lat.rho_minus + 2.0 * lat.period)
        w = 0.9 * self.gp.block_width
        return (lat.rho_minus - w, lat.rho_minus + w)


@dataclass
class ResidualReport:
    """Residuals of one identity over a verification grid."""

    identity: str
    grid_spec: dict
    max_residual: float
    rms_residual: float
    guard_band: float
    sign_convention: str = SIGN_CONVENTION
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, default=float)


def sample_grid(gm: GluedMetric, window: tuple[float, float] | None = None,
                n: int = 1000) -> np.ndarray:
    """Uniform rho samples in the window with junction guard bands removed."""
    if window is None:
        window = gm.default_window()
    band = GUARD_BAND_FRACTION * gm.block_width
    rho = np.linspace(window[0], window[1], n)
    keep = np.ones(n, dtype=bool)
    for rj in junctions_in((window[0] - band, window[1] + band), gm.gp.lattice):
        keep &= np.abs(rho - rj) > band
    return rho[keep]


def _report(identity, rho, resid, gm, extra=None) -> ResidualReport:
    resid = np.asarray(resid, dtype=float)
    return ResidualReport(
        identity=identity,
        grid_spec={"n": int(rho.size),
                   "rho_min": float(rho.min()), "rho_max": float(rho.max())},
        max_residual=float(np.max(np.abs(resid))),
        rms_residual=float(np.sqrt(np.mean(resid * resid))),
        guard_band=GUARD_BAND_FRACTION * gm.block_width,
        extra=extra or {},
    )


# ---------------------------------------------------------------------------
# Pointwise quantities
# ---------------------------------------------------------------------------

def gauss_curvature(rho: float, gm: GluedMetric) -> float:
    """K(rho) = eps - F(rho)^{8/3} / 9."""
    f = eval_F(rho, gm.gp)
    return gm.eps - f ** (8.0 / 3.0) / 9.0


def grad_K_xi_form(xi: float, gm: GluedMetric) -> float:
    """d/dxi-coefficient of grad K in (xi, theta) coordinates.

    Equals (xi^2 T(xi)/3) * K'(xi) with K'(xi) = -(8/27) xi^{5/3}; strictly
    negative inside the root interval and 0 in the limit at the roots.
    """
    roots = gm.gp.sol.roots
    if not (roots.xi01 < xi < roots.xi02):
        raise DomainError(f"xi={xi} outside the open root interval")
    T = _kernels.potential_glued(xi, float(gm.eps), gm.C,
                                 roots.xi01, roots.xi02)
    return (xi * xi * T / 3.0) * (-(8.0 / 27.0) * xi ** (5.0 / 3.0))


def omega(rho: float, gm: GluedMetric) -> float:
    """Connection coefficient 3K'/(8(eps-K)) = Gamma'/Gamma = -F'/F.

    Signed relative to the global convention X1 = d/drho; exactly 0 at
    junctions.  |omega| is the constant geodesic curvature of the K-level
    circles.
    """
    f = eval_F(rho, gm.gp)
    f1 = derivative_F(rho, 1, gm.gp)
    return -f1 / f


def curvature_stack(rhos, gm: GluedMetric):
    """Vectorized (F, F', F'', F''', K, K', K'', omega) along an array."""
    d = eval_F_with_derivatives(rhos, gm.gp)
    f, f1, f2, f3 = d
    c = 8.0 / 27.0
    K = gm.eps - f ** (8.0 / 3.0) / 9.0
    K1 = -c * f ** (5.0 / 3.0) * f1
    K2 = -c * ((5.0 / 3.0) * f ** (2.0 / 3.0) * f1 * f1 + f ** (5.0 / 3.0) * f2)
    om = -f1 / f
    return f, f1, f2, f3, K, K1, K2, om


def first_integral_alpha(gm: GluedMetric, rho: float) -> float:
    """Block constant alpha of the first integral for K.

    Solves (K')^2 = (64/3)K^3 - (640/9) eps K^2 + alpha (eps-K)^{11/4}
    + (704/9) eps^2 K - (256/9) eps^3 pointwise.  Junction input is
    rejected: K' = 0 there and the division is ill-conditioned.
    """
    band = GUARD_BAND_FRACTION * gm.block_width
    for rj in junctions_in((rho - band, rho + band), gm.gp.lattice):
        raise DomainError(f"rho={rho} is within the guard band of junction {rj}")
    # refined F: the pointwise solve cancels O(1) terms, so the table-level
    # F accuracy (~1e-13) is not enough when eps-K is small
    f = eval_F(rho, gm.gp, refine=True)
    _, s = _kernels.fold_rho(rho, gm.gp.lattice.rho_minus,
                             gm.gp.lattice.rho_plus if gm.gp.periodic
                             else math.inf, gm.gp.periodic)
    roots = gm.gp.sol.roots
    T = max(_kernels.potential_glued(f, float(gm.eps), gm.C,
                                     roots.xi01, roots.xi02), 0.0)
    f1 = -s * f * math.sqrt(T / 3.0)
    K = gm.eps - f ** (8.0 / 3.0) / 9.0
    K1 = -(8.0 / 27.0) * f ** (5.0 / 3.0) * f1
    e = gm.eps
    den = (e - K) ** 2.75
    if den < 1e-200:
        # F -> 0 end (eps in {-1,0} far field): 0/0, genuinely ill-conditioned
        raise DomainError(
            f"rho={rho} too close to the flat end (eps-K={e - K:.3g}); "
            "the pointwise solve for alpha degenerates there")
    num = (K1 * K1 - (64.0 / 3.0) * K ** 3 + (640.0 / 9.0) * e * K * K
           - (704.0 / 9.0) * e * e * K + (256.0 / 9.0) * e ** 3)
    return num / den


def _conditioned_window(gm: GluedMetric, frac: float = 0.2) -> tuple[float, float]:
    """Window around the junction where F stays above frac * xi02.

    For eps in {-1, 0}, F decays toward 0 away from the junction and both
    the pointwise alpha solve and the sigma-coordinate pullback degenerate
    (eps - K underflows / e^{2 sigma} overflows); this window keeps them well
    conditioned.  For eps=+1 it is the whole default window.
    """
    if gm.gp.periodic:
        return gm.default_window()
    from .profile import rho0
    sol = gm.gp.sol
    rho_cut = rho0(frac * sol.roots.xi02, sol)
    lat = gm.gp.lattice
    return (2.0 * lat.rho_minus - rho_cut, rho_cut)


def verify_first_integral(gm: GluedMetric,
                          window: tuple[float, float] | None = None,
                          n: int = 1000) -> ResidualReport:
    """alpha is a block constant equal to 64 C / (3 sqrt 3).

    alpha is solved pointwise and compared against the closed form; the
    default window stays within a few block scales of the junction, where
    the solve is well conditioned (far out, eps-K -> 0 for eps in {-1,0}).
    """
    if window is None:
        window = _conditioned_window(gm)
    rho = sample_grid(gm, window, n)
    alphas = np.array([first_integral_alpha(gm, float(r)) for r in rho])
    expected = 64.0 * gm.C / (3.0 * math.sqrt(3.0))
    scale = max(1.0, abs(expected))
    resid = (alphas - expected) / scale
    rep = _report("first_integral_alpha", rho, resid, gm,
                  extra={"alpha_expected": expected,
                         "alpha_mean": float(alphas.mean()),
                         "relative_spread":
                         float((alphas.max() - alphas.min()) / scale)})
    return rep


# ---------------------------------------------------------------------------
# Identity verifiers
# ---------------------------------------------------------------------------

def verify_curvature_ode(gm: GluedMetric,
                         window: tuple[float, float] | None = None,
                         n: int = 1000) -> ResidualReport:
    """24(eps-K)K'' + 33(K')^2 + 64K(eps-K)^2 = 0, scaled by max(1, |K|^3)."""
    rho = sample_grid(gm, window, n)
    _, _, _, _, K, K1, K2, _ = curvature_stack(rho, gm)
    e = gm.eps
    lhs = 24.0 * (e - K) * K2 + 33.0 * K1 * K1 + 64.0 * K * (e - K) ** 2
    scaled = lhs / np.maximum(1.0, np.abs(K) ** 3)
    return _report("curvature_ode", rho, scaled, gm)


def verify_laplace_identity(gm: GluedMetric,
                            window: tuple[float, float] | None = None,
                            n: int = 1000) -> ResidualReport:
    """(eps-K) Delta K - |grad K|^2 - (8/3) K (eps-K)^2 = 0."""
    rho = sample_grid(gm, window, n)
    _, _, _, _, K, K1, K2, om = curvature_stack(rho, gm)
    e = gm.eps
    lap_K = -(K2 + om * K1)
    lhs = (e - K) * lap_K - K1 * K1 - (8.0 / 3.0) * K * (e - K) ** 2
    scaled = lhs / np.maximum(1.0, np.abs(K) ** 3)
    return _report("laplace_identity", rho, scaled, gm)


def verify_bicons_pde(gm: GluedMetric,
                      window: tuple[float, float] | None = None,
                      n: int = 1000) -> ResidualReport:
    """f Delta f + |grad f|^2 + (4/3) eps f^2 - f^4 = 0 with f = 2F^{4/3}/(3 sqrt 3)."""
    rho = sample_grid(gm, window, n)
    f, f1, f2, _, _, _, _, om = curvature_stack(rho, gm)
    c = 2.0 / (3.0 * math.sqrt(3.0))
    h = c * f ** (4.0 / 3.0)
    h1 = c * (4.0 / 3.0) * f ** (1.0 / 3.0) * f1
    h2 = c * (4.0 / 3.0) * ((1.0 / 3.0) * f ** (-2.0 / 3.0) * f1 * f1
                            + f ** (1.0 / 3.0) * f2)
    lap_h = -(h2 + om * h1)
    lhs = h * lap_h + h1 * h1 + (4.0 / 3.0) * gm.eps * h * h - h ** 4
    scaled = lhs / np.maximum(1.0, h ** 4)
    return _report("bicons_pde", rho, scaled, gm,
                   extra={"f_junction_upper":
                          c * gm.gp.sol.roots.xi02 ** (4.0 / 3.0)})


def verify_isothermal_form(gm: GluedMetric,
                           window: tuple[float, float] | None = None,
                           n: int = 400) -> ResidualReport:
    """sigma'' = e^{-2 sigma/3} - eps e^{2 sigma} in the conformal coordinate.

    One block is pulled back to sigma = log(3^{3/4}/xi) as a function of the
    isothermal parameter u (du = F/3^{3/4} drho); sigma'' comes from a
    five-point finite difference on a uniform u-grid, so the check is
    independent of the analytic derivative formulas.  Also recovers
    a = C sqrt(3) from the first integral (sigma')^2 + 3e^{-2 sigma/3}
    + eps e^{2 sigma}.
    """
    lat = gm.gp.lattice
    if window is None:
        # the sigma-ODE stiffens like e^{2 sigma} ~ 1/F^2 as F shrinks, so
        # the pullback window stops earlier than the alpha window
        hi = lat.rho_plus if gm.gp.periodic else _conditioned_window(gm, 0.4)[1]
        w = hi - lat.rho_minus
        window = (lat.rho_minus + 0.1 * w, lat.rho_minus + 0.9 * w)
    scale = 3.0 ** 0.75
    # total u-span by a fine trapezoid of du/drho = F/3^{3/4} (only sets the
    # grid extent), then a uniform-u grid of rho values by an RK4 march of
    # drho/du = 3^{3/4}/F -- smooth in u, so the finite differences below see
    # no interpolation noise
    m = max(20 * n, 4000)
    rho_fine = np.linspace(window[0], window[1], m)
    Ff = eval_F_with_derivatives(rho_fine, gm.gp)[0]
    du = Ff / scale
    uspan = float(np.sum((du[1:] + du[:-1]) / 2.0 * np.diff(rho_fine)))
    u_targets = np.linspace(0.0, uspan, n)
    hstep = u_targets[1] - u_targets[0]

    def drho_du(r):
        return scale / eval_F(r, gm.gp)

    rho_u = np.empty(n)
    rho_u[0] = window[0]
    r = window[0]
    for i in range(1, n):
        k1 = drho_du(r)
        k2 = drho_du(r + 0.5 * hstep * k1)
        k3 = drho_du(r + 0.5 * hstep * k2)
        k4 = drho_du(r + hstep * k3)
        r = r + hstep * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        rho_u[i] = r
    F_u = np.array([eval_F(rr, gm.gp, refine=True) for rr in rho_u])
    sigma = np.log(scale / F_u)
    hstep = u_targets[1] - u_targets[0]
    s2 = (-sigma[4:] + 16 * sigma[3:-1] - 30 * sigma[2:-2]
          + 16 * sigma[1:-3] - sigma[:-4]) / (12 * hstep * hstep)
    sig_in = sigma[2:-2]
    resid = s2 - np.exp(-2.0 * sig_in / 3.0) + gm.eps * np.exp(2.0 * sig_in)
    # first derivative (centered, 4th order) for sigma' > 0 and a-recovery
    s1 = (-sigma[4:] + 8 * sigma[3:-1] - 8 * sigma[1:-3] + sigma[:-4]) / (12 * hstep)
    a = s1 * s1 + 3.0 * np.exp(-2.0 * sig_in / 3.0) + gm.eps * np.exp(2.0 * sig_in)
    return _report("isothermal_sigma_ode", rho_u[2:-2], resid, gm,
                   extra={"sigma_prime_min": float(s1.min()),
                          "a_max_error": float(np.max(np.abs(a - gm.C * math.sqrt(3.0)))),
                          "a_expected": gm.C * math.sqrt(3.0)})


def verify_frame_relations(gm: GluedMetric,
                           window: tuple[float, float] | None = None,
                           n: int = 1000) -> ResidualReport:
    """Connection relations of the orthonormal frame X1 = d/drho, X2 = (1/Gamma) d/dtheta.

    Christoffel symbols of g are estimated by centered finite differences of
    the metric components, assembled into nabla_{X2}X2 = -w X1 and
    nabla_{X2}X1 = w X2, and compared with the analytic w = Gamma'/Gamma
    (nabla_{X1}X1 = nabla_{X1}X2 = 0 hold identically: the Christoffels with
    two rho indices vanish since g_rho_rho = 1 and g is theta-invariant).
    """
    rho = sample_grid(gm, window, n)
    # capped step: the truncation error scales like h^2 regardless of the
    # window, so wide eps in {-1,0} windows must not inflate h
    h = 1e-6 * max(1.0, min(gm.block_width, 2.0))
    # Newton-refined F: the tabulated values carry a smooth relative error
    # in the eps in {-1,0} tails that the FD quotient would differentiate
    F0 = np.array([eval_F(r, gm.gp, refine=True) for r in rho])
    Fp = np.array([eval_F(r + h, gm.gp, refine=True) for r in rho])
    Fm = np.array([eval_F(r - h, gm.gp, refine=True) for r in rho])
    G0, Gp, Gm = 1.0 / F0, 1.0 / Fp, 1.0 / Fm
    dg_tt = (Gp * Gp - Gm * Gm) / (2.0 * h)  # d(Gamma^2)/drho
    # Gamma^rho_{theta theta} = -dg_tt/2 ; Gamma^theta_{rho theta} = dg_tt/(2 Gamma^2)
    chr_rtt = -dg_tt / 2.0
    chr_trt = dg_tt / (2.0 * G0 * G0)
    # w = -F'/F = s sqrt(T(F)/3) with s the reflection parity of the block
    x1, x2 = gm.gp.sol.roots.xi01, gm.gp.sol.roots.xi02
    T0 = np.array([_kernels.potential_glued(f, float(gm.eps), gm.C, x1, x2)
                   for f in F0])
    par = np.array([block_reduce(float(r), gm.gp)[1] for r in rho])
    w_analytic = par * np.sqrt(np.maximum(T0, 0.0) / 3.0)
    # nabla_{X2}X2 = (1/Gamma^2) Gamma^rho_{theta theta} d/drho = -w X1
    r1 = chr_rtt / (G0 * G0) + w_analytic
    # nabla_{X2}X1 = (1/Gamma) Gamma^theta_{rho theta} d/dtheta = w X2
    r2 = chr_trt - w_analytic
    resid = np.maximum(np.abs(r1), np.abs(r2))
    return _report("frame_connection_relations", rho, resid, gm,
                   extra={"fd_step": h})


def completeness_comparison(gm: GluedMetric,
                            window: tuple[float, float] | None = None,
                            n: int = 1000) -> dict:
    """g - m0 (dtheta^2 + drho^2) is positive semi-definite, m0 = min(1/xi02^2, 1).

    The eigenvalues of the difference are Gamma^2 - m0 and 1 - m0; their
    minimum over the sweep is reported (>= 0 up to roundoff).
    """
    if window is None:
        window = gm.default_window()
    rho = np.linspace(window[0], window[1], n)
    F = eval_F_with_derivatives(rho, gm.gp)[0]
    m0 = min(1.0 / gm.gp.sol.roots.xi02 ** 2, 1.0)
    ev1 = 1.0 / (F * F) - m0
    ev2 = 1.0 - m0
    return {"m0": m0,
            "min_eigenvalue": float(min(ev1.min(), ev2)),
            "positive_semidefinite": bool(min(ev1.min(), ev2) >= -1e-14)}


# ---------------------------------------------------------------------------
# Geodesics
# ---------------------------------------------------------------------------

@dataclass
class GeodesicResult:
    """Final state and conservation diagnostics of one geodesic run."""

    state: np.ndarray          # (rho, theta, drho/dt, dtheta/dt)
    length: float
    speed_drift: float
    clairaut_drift: float
    samples: np.ndarray        # (m, 5): arclength, rho, theta, vr, vt


def _geo_args(gm: GluedMetric):
    return gm.gp._kernel_args()


def geodesic_integrate(start, length: float, gm: GluedMetric,
                       n_samples: int = 64, rtol: float = 1e-11,
                       atol: float = 1e-13) -> GeodesicResult:
    """Integrate a unit-speed geodesic to the requested arclength.

    start is (rho, theta, vr, vt) with g(v, v) = 1.  The run is split into
    n_samples segments so the trajectory is sampled along the way; drift
    diagnostics are the max over all accepted steps of the relative change
    of the speed and of the rotational momentum Gamma^2 * dtheta/dt.
    """
    y = np.asarray(start, dtype=float).copy()
    f = eval_F(y[0], gm.gp)
    speed = y[2] ** 2 + (y[3] / f) ** 2
    if abs(speed - 1.0) > 1e-8:
        raise DomainError(f"initial speed^2 = {speed}, expected 1")
    args = _geo_args(gm)
    seg = length / n_samples
    samples = [np.concatenate([[0.0], y])]
    drift_e = drift_c = 0.0
    for k in range(n_samples):
        y, de, dc, status = _kernels.geodesic_dp54(y, seg, rtol, atol, *args)
        drift_e = max(drift_e, de)
        drift_c = max(drift_c, dc)
        if status == 1:
            raise IntegrationFailureError(
                f"step size collapse at arclength {(k + 1) * seg}")
        if status == 2:
            raise CoverageError(
                f"geodesic left tabulated coverage at arclength {(k + 1) * seg};"
                " rebuild the profile with larger coverage")
        samples.append(np.concatenate([[(k + 1) * seg], y]))
    return GeodesicResult(state=y, length=length, speed_drift=drift_e,
                          clairaut_drift=drift_c, samples=np.array(samples))


def random_geodesic_probes(gm: GluedMetric, n: int = 100, length: float = 100.0,
                           seed: int = 0, window: tuple[float, float] | None = None,
                           workers: int = 1) -> dict:
    """Launch n random unit-speed geodesics and report worst-case drifts."""
    if window is None:
        if gm.gp.periodic:
            window = gm.default_window()
        else:
            # keep starts near the junction: arclength `length` must stay
            # within table coverage, and the Clairaut constant vt/F^2 is
            # exponentially ill-conditioned for starts far out where F ~ 0
            w = max(min(2.0, gm.gp.block_width - length - 1.0), 0.5)
            window = (gm.gp.lattice.rho_minus - w, gm.gp.lattice.rho_minus + w)
    rng = np.random.default_rng(seed)
    starts = []
    for _ in range(n):
        rho = rng.uniform(*window)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        f = eval_F(rho, gm.gp)
        starts.append((rho, theta, math.cos(phi), math.sin(phi) * f))

    def run(s):
        r = geodesic_integrate(s, length, gm, n_samples=8)
        return r.speed_drift, r.clairaut_drift

    results = []
    failures = 0
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for res in ex.map(run, starts):
                results.append(res)
    else:
        for s in starts:
            results.append(run(s))
    res = np.array(results)
    return {"n": n, "length": length, "failures": failures,
            "max_speed_drift": float(res[:, 0].max()),
            "max_clairaut_drift": float(res[:, 1].max())}
