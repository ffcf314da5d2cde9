"""Hot numerical kernels with optional numba acceleration.

The profile function F and the geodesic flow of the glued metric are
evaluated millions of times during verification sweeps, so the scalar table
lookup, the derivative stack and an embedded Dormand-Prince 5(4) integrator
live here.  Everything takes flat float arrays / scalars so the same source
compiles under numba's nopython mode.

Set BICONS_DISABLE_NUMBA=1 before import to force the pure-python/numpy
fallback (used for backend-parity tests and as a safety hatch).
"""

import math
import os

import numpy as np

_DISABLE = os.environ.get("BICONS_DISABLE_NUMBA", "").strip() not in ("", "0")

try:
    if _DISABLE:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator fallback
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(func):
            return func

        return wrap


def backend() -> str:
    """'numba' when kernels are jit-compiled, else 'numpy'."""
    return "numba" if HAS_NUMBA else "numpy"


_EPS_MACH = 2.220446049250313e-16
# one-sided width (as a fraction of the root scale) below which T is
# evaluated through its Taylor form about the root
_TAYLOR_FRAC = 1e-4


@njit(cache=True)
def _T_near_root(f, C, root, sign):
    """T(f) through its Taylor expansion about a root.

    sign=+1 for f below the upper root (tau = root - f), sign=-1 for f above
    the lower root (tau = f - root).  The expansion omits T(root), so the
    stored root maps to exactly zero and the sqrt(T) factors vanish exactly
    on junction lines.
    """
    tau = sign * (root - f)
    t1 = -(8.0 / 3.0) * root ** (5.0 / 3.0) + 2.0 * C * root
    t2 = -(40.0 / 9.0) * root ** (2.0 / 3.0) + 2.0 * C
    t3 = -(80.0 / 27.0) * root ** (-1.0 / 3.0)
    t4 = (80.0 / 81.0) * root ** (-4.0 / 3.0)
    # T(root -/+ tau) with T(root) = 0
    return tau * (-sign * t1 + tau * (t2 / 2.0 + tau * (-sign * t3 / 6.0 + tau * (t4 / 24.0))))


@njit(cache=True)
def potential_glued(f, eps, C, x1, x2):
    """T(f) = -f^{8/3} + C f^2 - 3 eps, exact zero at the stored roots."""
    if x2 - f < _TAYLOR_FRAC * (x2 if x2 > 1.0 else 1.0):
        return _T_near_root(f, C, x2, 1.0)
    if x1 > 0.0 and f - x1 < _TAYLOR_FRAC * (x1 if x1 > 1.0 else 1.0):
        return _T_near_root(f, C, x1, -1.0)
    return -(f ** (8.0 / 3.0)) + C * f * f - 3.0 * eps


@njit(cache=True)
def fold_rho(rho, rho_minus, rho_plus, periodic):
    """Map a global rho to (base-block rho, parity sign).

    periodic=True (two finite junction families): reflect-and-repeat with
    period 2(rho_plus - rho_minus).  periodic=False: single reflection at
    rho_minus.  The result is snapped exactly onto a junction when rho sits
    within a few ulps of one, so junction lines stay exactly invariant.
    """
    snap = 32.0 * _EPS_MACH * (abs(rho) if abs(rho) > 1.0 else 1.0)
    if periodic:
        L = rho_plus - rho_minus
        u = (rho - rho_minus) % (2.0 * L)
        if u < 0.0:
            u += 2.0 * L
        if u <= L:
            rb = rho_minus + u
            s = 1.0
        else:
            rb = rho_minus + (2.0 * L - u)
            s = -1.0
        if abs(rb - rho_minus) < snap:
            rb = rho_minus
        elif abs(rb - rho_plus) < snap:
            rb = rho_plus
        return rb, s
    if rho >= rho_minus:
        rb = rho
        s = 1.0
    else:
        rb = 2.0 * rho_minus - rho
        s = -1.0
    if abs(rb - rho_minus) < snap:
        rb = rho_minus
    return rb, s


@njit(cache=True)
def hermite_lookup(rb, trho, txi, tdxi):
    """Cubic Hermite interpolation of the monotone (rho, xi) table.

    Returns nan when rb lies beyond the tabulated range (coverage miss).
    """
    n = trho.shape[0]
    if rb < trho[0] or rb > trho[n - 1]:
        return math.nan
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if trho[mid] <= rb:
            lo = mid
        else:
            hi = mid
    h = trho[hi] - trho[lo]
    if h <= 0.0:
        return txi[lo]
    r = (rb - trho[lo]) / h
    h00 = (1.0 + 2.0 * r) * (1.0 - r) * (1.0 - r)
    h10 = r * (1.0 - r) * (1.0 - r)
    h01 = r * r * (3.0 - 2.0 * r)
    h11 = r * r * (r - 1.0)
    return h00 * txi[lo] + h10 * h * tdxi[lo] + h01 * txi[hi] + h11 * h * tdxi[hi]


@njit(cache=True)
def eval_F(rho, trho, txi, tdxi, rho_minus, rho_plus, periodic):
    """Glued profile value F(rho) and the parity sign of the block."""
    rb, s = fold_rho(rho, rho_minus, rho_plus, periodic)
    return hermite_lookup(rb, trho, txi, tdxi), s


@njit(cache=True)
def eval_F_derivs(rho, eps, C, x1, x2, trho, txi, tdxi,
                  rho_minus, rho_plus, periodic):
    """(F, F', F'', F''') of the glued profile at a single rho.

    Derivatives come from the closed forms
        F'   = -s * F * sqrt(T/3)
        F''  = F (2T + F T') / 6
        F''' = -s * F * sqrt(T/3) * (2T + 4 F T' + F^2 T'') / 6
    which are free of cancellation at the junctions (where T = 0 and the
    even-order derivative reduces to F^2 T'(F)/6 exactly).
    """
    f, s = eval_F(rho, trho, txi, tdxi, rho_minus, rho_plus, periodic)
    if math.isnan(f):
        return math.nan, math.nan, math.nan, math.nan
    T = potential_glued(f, eps, C, x1, x2)
    if T < 0.0:
        T = 0.0
    Tp = -(8.0 / 3.0) * f ** (5.0 / 3.0) + 2.0 * C * f
    Tpp = -(40.0 / 9.0) * f ** (2.0 / 3.0) + 2.0 * C
    q = f * math.sqrt(T / 3.0)
    f1 = -s * q
    f2 = f * (2.0 * T + f * Tp) / 6.0
    f3 = -s * q * (2.0 * T + 4.0 * f * Tp + f * f * Tpp) / 6.0
    return f, f1, f2, f3


@njit(cache=True)
def eval_F_batch(rhos, eps, C, x1, x2, trho, txi, tdxi,
                 rho_minus, rho_plus, periodic, out):
    """Fill out[4, n] with (F, F', F'', F''') along an array of rho values."""
    for i in range(rhos.shape[0]):
        f, f1, f2, f3 = eval_F_derivs(rhos[i], eps, C, x1, x2, trho, txi,
                                      tdxi, rho_minus, rho_plus, periodic)
        out[0, i] = f
        out[1, i] = f1
        out[2, i] = f2
        out[3, i] = f3
    return out


def eval_F_batch_numpy(rhos, eps, C, x1, x2, trho, txi, tdxi,
                       rho_minus, rho_plus, periodic):
    """Vectorized numpy evaluation of (F, F', F'', F''') on an array.

    Mirrors the scalar kernel (fold, snap, Hermite lookup, closed-form
    derivatives) with array operations; used by the fallback backend and by
    the backend-parity tests.
    """
    rho = np.asarray(rhos, dtype=float)
    snap = 32.0 * _EPS_MACH * np.maximum(np.abs(rho), 1.0)
    if periodic:
        L = rho_plus - rho_minus
        u = np.mod(rho - rho_minus, 2.0 * L)
        even = u <= L
        rb = np.where(even, rho_minus + u, rho_minus + (2.0 * L - u))
        s = np.where(even, 1.0, -1.0)
        rb = np.where(np.abs(rb - rho_minus) < snap, rho_minus, rb)
        rb = np.where(np.abs(rb - rho_plus) < snap, rho_plus, rb)
    else:
        even = rho >= rho_minus
        rb = np.where(even, rho, 2.0 * rho_minus - rho)
        s = np.where(even, 1.0, -1.0)
        rb = np.where(np.abs(rb - rho_minus) < snap, rho_minus, rb)

    bad = (rb < trho[0]) | (rb > trho[-1])
    rbc = np.clip(rb, trho[0], trho[-1])
    i = np.clip(np.searchsorted(trho, rbc, side="right") - 1, 0, len(trho) - 2)
    h = trho[i + 1] - trho[i]
    r = np.where(h > 0, (rbc - trho[i]) / np.where(h > 0, h, 1.0), 0.0)
    h00 = (1 + 2 * r) * (1 - r) ** 2
    h10 = r * (1 - r) ** 2
    h01 = r * r * (3 - 2 * r)
    h11 = r * r * (r - 1)
    f = h00 * txi[i] + h10 * h * tdxi[i] + h01 * txi[i + 1] + h11 * h * tdxi[i + 1]
    f = np.where(bad, np.nan, f)

    T = -(f ** (8.0 / 3.0)) + C * f * f - 3.0 * eps
    scale2 = max(x2, 1.0)
    near_hi = (x2 - f) < _TAYLOR_FRAC * scale2
    if np.any(near_hi):
        tau = x2 - f
        t1 = -(8.0 / 3.0) * x2 ** (5.0 / 3.0) + 2.0 * C * x2
        t2 = -(40.0 / 9.0) * x2 ** (2.0 / 3.0) + 2.0 * C
        t3 = -(80.0 / 27.0) * x2 ** (-1.0 / 3.0)
        t4 = (80.0 / 81.0) * x2 ** (-4.0 / 3.0)
        T_hi = tau * (-t1 + tau * (t2 / 2.0 + tau * (-t3 / 6.0 + tau * (t4 / 24.0))))
        T = np.where(near_hi, T_hi, T)
    if x1 > 0.0:
        scale1 = max(x1, 1.0)
        near_lo = (f - x1) < _TAYLOR_FRAC * scale1
        if np.any(near_lo):
            tau = f - x1
            t1 = -(8.0 / 3.0) * x1 ** (5.0 / 3.0) + 2.0 * C * x1
            t2 = -(40.0 / 9.0) * x1 ** (2.0 / 3.0) + 2.0 * C
            t3 = -(80.0 / 27.0) * x1 ** (-1.0 / 3.0)
            t4 = (80.0 / 81.0) * x1 ** (-4.0 / 3.0)
            T_lo = tau * (t1 + tau * (t2 / 2.0 + tau * (t3 / 6.0 + tau * (t4 / 24.0))))
            T = np.where(near_lo, T_lo, T)
    T = np.maximum(T, 0.0)
    Tp = -(8.0 / 3.0) * f ** (5.0 / 3.0) + 2.0 * C * f
    Tpp = -(40.0 / 9.0) * f ** (2.0 / 3.0) + 2.0 * C
    q = f * np.sqrt(T / 3.0)
    out = np.empty((4, rho.size), dtype=float)
    out[0] = f
    out[1] = -s * q
    out[2] = f * (2.0 * T + f * Tp) / 6.0
    out[3] = -s * q * (2.0 * T + 4.0 * f * Tp + f * f * Tpp) / 6.0
    return out


# ---------------------------------------------------------------------------
# Geodesic flow of g = Gamma(rho)^2 dtheta^2 + drho^2,  Gamma = 1/F
# ---------------------------------------------------------------------------
#
# State y = (rho, theta, vr, vt) with
#   vr' = -(F'/F^3) vt^2        (= Gamma Gamma' vt^2)
#   vt' = 2 (F'/F) vr vt        (= -2 (Gamma'/Gamma) vr vt)
# Conserved along solutions: speed^2 = vr^2 + vt^2/F^2 and the rotational
# momentum vt/F^2 (the metric is theta-invariant).

# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
_DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
          -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
_DP_B4 = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
          -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)


@njit(cache=True)
def _geo_rhs(y, eps, C, x1, x2, trho, txi, tdxi, rho_minus, rho_plus, periodic):
    f, f1, f2, f3 = eval_F_derivs(y[0], eps, C, x1, x2, trho, txi, tdxi,
                                  rho_minus, rho_plus, periodic)
    out = np.empty(4)
    if math.isnan(f) or f <= 0.0:
        out[0] = math.nan
        out[1] = math.nan
        out[2] = math.nan
        out[3] = math.nan
        return out
    out[0] = y[2]
    out[1] = y[3]
    out[2] = -(f1 / (f * f * f)) * y[3] * y[3]
    out[3] = 2.0 * (f1 / f) * y[2] * y[3]
    return out


@njit(cache=True)
def geodesic_dp54(y0, tmax, rtol, atol, eps, C, x1, x2, trho, txi, tdxi,
                  rho_minus, rho_plus, periodic):
    """Integrate the geodesic equations from t=0 to t=tmax.

    Returns (y_final, speed_drift, momentum_drift, status) where the drifts
    are the largest relative deviations of the two conserved quantities over
    all accepted steps.  status: 0 ok, 1 step-size collapse, 2 the orbit left
    the tabulated rho coverage.
    """
    y = y0.copy()
    f0, _ = eval_F(y[0], trho, txi, tdxi, rho_minus, rho_plus, periodic)
    if math.isnan(f0) or f0 <= 0.0:
        return y, math.nan, math.nan, 2
    e0 = y[2] * y[2] + (y[3] / f0) * (y[3] / f0)
    c0 = y[3] / (f0 * f0)
    e_scale = e0 if e0 > 1e-300 else 1.0
    c_scale = abs(c0) if abs(c0) > 1e-300 else 1.0
    drift_e = 0.0
    drift_c = 0.0

    t = 0.0
    h = 1e-3 * (tmax if tmax > 0.0 else 1.0)
    hmin = 1e-14 * (tmax if tmax > 0.0 else 1.0)
    k = np.empty((7, 4))
    while t < tmax:
        if h > tmax - t:
            h = tmax - t
        k[0] = _geo_rhs(y, eps, C, x1, x2, trho, txi, tdxi,
                        rho_minus, rho_plus, periodic)
        if math.isnan(k[0, 0]):
            return y, drift_e, drift_c, 2
        # stage 2..7
        yt = y + h * (0.2 * k[0])
        k[1] = _geo_rhs(yt, eps, C, x1, x2, trho, txi, tdxi,
                        rho_minus, rho_plus, periodic)
        yt = y + h * ((3.0 / 40.0) * k[0] + (9.0 / 40.0) * k[1])
        k[2] = _geo_rhs(yt, eps, C, x1, x2, trho, txi, tdxi,
                        rho_minus, rho_plus, periodic)
        yt = y + h * ((44.0 / 45.0) * k[0] - (56.0 / 15.0) * k[1]
                      + (32.0 / 9.0) * k[2])
        k[3] = _geo_rhs(yt, eps, C, x1, x2, trho, txi, tdxi,
                        rho_minus, rho_plus, periodic)
        yt = y + h * ((19372.0 / 6561.0) * k[0] - (25360.0 / 2187.0) * k[1]
                      + (64448.0 / 6561.0) * k[2] - (212.0 / 729.0) * k[3])
        k[4] = _geo_rhs(yt, eps, C, x1, x2, trho, txi, tdxi,
                        rho_minus, rho_plus, periodic)
        yt = y + h * ((9017.0 / 3168.0) * k[0] - (355.0 / 33.0) * k[1]
                      + (46732.0 / 5247.0) * k[2] + (49.0 / 176.0) * k[3]
                      - (5103.0 / 18656.0) * k[4])
        k[5] = _geo_rhs(yt, eps, C, x1, x2, trho, txi, tdxi,
                        rho_minus, rho_plus, periodic)
        y5 = y + h * (_DP_B5[0] * k[0] + _DP_B5[2] * k[2] + _DP_B5[3] * k[3]
                      + _DP_B5[4] * k[4] + _DP_B5[5] * k[5])
        k[6] = _geo_rhs(y5, eps, C, x1, x2, trho, txi, tdxi,
                        rho_minus, rho_plus, periodic)
        if math.isnan(y5[0]) or math.isnan(k[6, 0]):
            return y, drift_e, drift_c, 2
        y4 = y + h * (_DP_B4[0] * k[0] + _DP_B4[2] * k[2] + _DP_B4[3] * k[3]
                      + _DP_B4[4] * k[4] + _DP_B4[5] * k[5] + _DP_B4[6] * k[6])
        errnorm = 0.0
        for j in range(4):
            if j == 3:
                # pure relative control for the angular velocity: it decays
                # through many orders of magnitude in the eps in {-1,0}
                # tails and an absolute floor would let its relative error
                # (hence the momentum-conservation check) blow up
                sc = rtol * max(abs(y[j]), abs(y5[j])) + 1e-300
            else:
                sc = atol + rtol * max(abs(y[j]), abs(y5[j]))
            e = abs(y5[j] - y4[j]) / sc
            if e > errnorm:
                errnorm = e
        if errnorm <= 1.0:
            t += h
            y = y5
            f, _ = eval_F(y[0], trho, txi, tdxi, rho_minus, rho_plus, periodic)
            if math.isnan(f) or f <= 0.0:
                return y, drift_e, drift_c, 2
            e_now = y[2] * y[2] + (y[3] / f) * (y[3] / f)
            c_now = y[3] / (f * f)
            de = abs(e_now - e0) / e_scale
            dc = abs(c_now - c0) / c_scale
            if de > drift_e:
                drift_e = de
            if dc > drift_c:
                drift_c = dc
        fac = 0.9 * errnorm ** (-0.2) if errnorm > 0.0 else 5.0
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        h *= fac
        if h < hmin:
            return y, drift_e, drift_c, 1
    return y, drift_e, drift_c, 0
