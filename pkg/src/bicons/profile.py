"""One-block analytic machinery.

Everything on a single profile block: the potential T(xi) = -xi^(8/3) + C*xi^2
- 3*eps, its roots, the singular arclength integral rho0(xi), its limits at the
interval ends, and the tabulated inverse xi0(rho).

rho0 is strictly decreasing, vanishes at the base point xi00, and carries an
inverse-square-root singularity at each finite root of T.  Quadrature near a
root therefore switches to the variable t = sqrt(|root - xi|), which removes
the singularity exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import CoverageError, DomainError, InadmissibleParameterError

__all__ = [
    "ProfileParams",
    "RootPair",
    "ProfileSolution",
    "potential_T",
    "potential_T_prime",
    "potential_T_second",
    "find_roots",
    "rho0",
    "rho0_prime",
    "rho0_limits",
    "endpoint_singularity_coeff",
    "invert_rho0",
    "solve_profile",
    "admissible_C_min",
]

_SQRT3 = math.sqrt(3.0)

# 30-point Gauss-Legendre rule used for the panel quadrature of the table
# builder; panels are smooth by construction so a fixed rule suffices.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(30)


def admissible_C_min(eps: int) -> float:
    """Lower bound on C for the potential to be positive somewhere."""
    if eps == 1:
        return 4.0 / _SQRT3
    if eps == 0:
        return 0.0
    return -math.inf


@dataclass(frozen=True)
class ProfileParams:
    """Family parameters: curvature sign eps, constant C, base point xi00.

    xi00 is the quadrature base point where rho0 vanishes; pass None to use
    the default (geometric midpoint of the roots for eps=+1, half the upper
    root otherwise).
    """

    eps: int
    C: float
    xi00: float | None = None

    def __post_init__(self):
        if self.eps not in (-1, 0, 1):
            raise DomainError(f"eps must be -1, 0 or +1, got {self.eps}")
        cmin = admissible_C_min(self.eps)
        if not self.C > cmin:
            raise InadmissibleParameterError(
                f"eps={self.eps} requires C > {cmin:.10g}, got C={self.C}"
            )


@dataclass(frozen=True)
class RootPair:
    """Vanishing points of T and the interior critical point xi_star."""

    xi01: float
    xi02: float
    xi_star: float


def potential_T(xi, params: ProfileParams):
    """T(xi) = -xi^(8/3) + C*xi^2 - 3*eps.  Requires xi >= 0."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0):
        raise DomainError("potential_T requires xi >= 0")
    val = -(xi ** (8.0 / 3.0)) + params.C * xi * xi - 3.0 * params.eps
    return float(val) if val.ndim == 0 else val


def potential_T_prime(xi, C: float):
    return -(8.0 / 3.0) * xi ** (5.0 / 3.0) + 2.0 * C * xi


def potential_T_second(xi, C: float):
    return -(40.0 / 9.0) * xi ** (2.0 / 3.0) + 2.0 * C


def _T(xi, eps, C):
    # unchecked fast path
    return -(xi ** (8.0 / 3.0)) + C * xi * xi - 3.0 * eps


def find_roots(params: ProfileParams) -> RootPair:
    """Locate the roots xi01 <= xi02 of T bracketing the positive interval.

    For eps in {-1, 0} the lower end is xi01 = 0 (not a root of T when
    eps = -1).  Roots are refined to full double precision with Brent's
    method, bracketed by the interior critical point (3C/4)^{3/2}.
    """
    eps, C = params.eps, params.C
    xi_star = (0.75 * C) ** 1.5 if C > 0 else 0.0

    def f(x):
        return _T(x, eps, C)

    if eps == 1:
        if f(xi_star) <= 0:
            raise InadmissibleParameterError(
                f"T <= 0 everywhere: C={C} <= 4/sqrt(3)"
            )
        xi01 = brentq(f, 1e-300, xi_star, xtol=1e-300, rtol=8.9e-16)
        hi = 2.0 * xi_star
        while f(hi) > 0:
            hi *= 2.0
        xi02 = brentq(f, xi_star, hi, xtol=1e-300, rtol=8.9e-16)
        return RootPair(xi01=xi01, xi02=xi02, xi_star=xi_star)

    # eps in {-1, 0}: T(0+) >= 0 (3 for eps=-1, 0 for eps=0) and T -> -inf,
    # so there is a single positive root beyond the critical point.
    lo = max(xi_star, 1e-8)
    while f(lo) <= 0:
        lo *= 0.5
        if lo < 1e-200:
            raise InadmissibleParameterError(f"no positive interval for eps={eps}, C={C}")
    hi = max(2.0 * lo, 1.0)
    while f(hi) > 0:
        hi *= 2.0
    xi02 = brentq(f, lo, hi, xtol=1e-300, rtol=8.9e-16)
    return RootPair(xi01=0.0, xi02=xi02, xi_star=xi_star)


def _default_xi00(eps: int, roots: RootPair) -> float:
    if eps == 1:
        return math.sqrt(roots.xi01 * roots.xi02)
    return roots.xi02 / 2.0


# ---------------------------------------------------------------------------
# Singular quadrature for rho0
# ---------------------------------------------------------------------------

def _w_upper(tau, eps, C, xi02):
    """T(xi02 - tau) / tau, stable for small tau (Taylor about the root)."""
    tau = np.asarray(tau, dtype=float)
    small = tau < 1e-4 * max(1.0, xi02)
    out = np.empty_like(tau)
    t1 = potential_T_prime(xi02, C)
    t2 = potential_T_second(xi02, C)
    t3 = -(80.0 / 27.0) * xi02 ** (-1.0 / 3.0)
    t4 = (80.0 / 81.0) * xi02 ** (-4.0 / 3.0)
    ts = tau[small]
    out[small] = -t1 + ts * (t2 / 2.0 + ts * (-t3 / 6.0 + ts * (t4 / 24.0)))
    tb = tau[~small]
    out[~small] = _T(xi02 - tb, eps, C) / tb
    return out


def _w_lower(tau, eps, C, xi01):
    """T(xi01 + tau) / tau, stable for small tau (eps=+1 only)."""
    tau = np.asarray(tau, dtype=float)
    small = tau < 1e-4 * max(1.0, xi01)
    out = np.empty_like(tau)
    t1 = potential_T_prime(xi01, C)
    t2 = potential_T_second(xi01, C)
    t3 = -(80.0 / 27.0) * xi01 ** (-1.0 / 3.0)
    t4 = (80.0 / 81.0) * xi01 ** (-4.0 / 3.0)
    ts = tau[small]
    out[small] = t1 + ts * (t2 / 2.0 + ts * (t3 / 6.0 + ts * (t4 / 24.0)))
    tb = tau[~small]
    out[~small] = _T(xi01 + tb, eps, C) / tb
    return out


def _integrand(xi, eps, C):
    """sqrt(3) / (xi * sqrt(T(xi))) -- the rho0 integrand."""
    return _SQRT3 / (xi * np.sqrt(_T(xi, eps, C)))


def _root_window(roots: RootPair) -> float:
    return min(0.1 * (roots.xi02 - roots.xi01), 0.5)


def _quad_segment(a, b, eps, C, roots: RootPair, epsabs=1e-12):
    """Integral of the rho0 integrand over [a, b] in (xi01, xi02), a < b.

    Splits off windows near the finite roots and removes the singularity
    there with the substitution xi = root -/+ t^2.
    """
    if b <= a:
        return 0.0
    x1, x2 = roots.xi01, roots.xi02
    w = _root_window(roots)
    total = 0.0
    if b > x2 - w:
        lo = max(a, x2 - w)

        def g_hi(t):
            xi = x2 - t * t
            return 2.0 * _SQRT3 / (xi * np.sqrt(_w_upper(t * t, eps, C, x2)))

        v, _ = quad(g_hi, math.sqrt(max(x2 - b, 0.0)), math.sqrt(x2 - lo),
                    epsabs=epsabs, limit=200)
        total += v
        b = lo
    if x1 > 0 and a < x1 + w:
        hi = min(b, x1 + w)
        if hi > a:
            def g_lo(t):
                xi = x1 + t * t
                return 2.0 * _SQRT3 / (xi * np.sqrt(_w_lower(t * t, eps, C, x1)))

            v, _ = quad(g_lo, math.sqrt(max(a - x1, 0.0)), math.sqrt(hi - x1),
                        epsabs=epsabs, limit=200)
            total += v
            a = hi
    if eps != 1 and a < 0.5 * (x2 - w):
        # toward xi -> 0 switch to lambda = -log(xi); the integrand becomes
        # sqrt(3)/sqrt(T(e^-lambda)), smooth and bounded
        hi = min(b, 0.5 * (x2 - w))
        if hi > a:
            v, _ = quad(lambda lam: _SQRT3 / math.sqrt(_T(math.exp(-lam), eps, C)),
                        -math.log(hi), -math.log(a), epsabs=epsabs, limit=200)
            total += v
            a = hi
    if b > a:
        v, _ = quad(lambda x: _integrand(x, eps, C), a, b, epsabs=epsabs, limit=200)
        total += v
    return total


# ---------------------------------------------------------------------------
# Profile solution: the table and its inverse
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileSolution:
    """Immutable one-block solution: roots, rho limits and a monotone table.

    table_rho is strictly increasing, table_xi strictly decreasing (rho0 is a
    decreasing function), table_dxi holds the analytic slope d(xi)/d(rho) =
    -xi*sqrt(T/3) at each node.  For eps=+1 the table spans the full block
    [rho_minus, rho_plus]; otherwise it spans [rho_minus, rho_minus+coverage]
    and rho_plus is +inf.
    """

    params: ProfileParams
    roots: RootPair
    xi00: float
    rho_minus: float
    rho_plus: float
    table_rho: np.ndarray = field(repr=False)
    table_xi: np.ndarray = field(repr=False)
    table_dxi: np.ndarray = field(repr=False)

    @property
    def eps(self) -> int:
        return self.params.eps

    @property
    def C(self) -> float:
        return self.params.C

    @property
    def coverage(self) -> float:
        """Largest rho (base-block coordinates) the table can serve."""
        return float(self.table_rho[-1])


def rho0(xi: float, sol: ProfileSolution) -> float:
    """Signed arclength integral rho0(xi) by adaptive singular quadrature.

    Absolute error <= 1e-10.  Domain: xi in (xi01, xi02); the endpoints are
    admitted too and give the finite limits (use rho0_limits for the
    eps in {-1,0} lower end, which diverges).
    """
    x1, x2 = sol.roots.xi01, sol.roots.xi02
    if not (x1 <= xi <= x2):
        raise DomainError(f"xi={xi} outside [{x1}, {x2}]")
    if xi == x1 and sol.eps != 1:
        raise DomainError("rho0 diverges at the lower end for eps in {-1, 0}")
    eps, C = sol.eps, sol.C
    if xi >= sol.xi00:
        return -_quad_segment(sol.xi00, xi, eps, C, sol.roots)
    return _quad_segment(xi, sol.xi00, eps, C, sol.roots)


def rho0_prime(xi: float, sol: ProfileSolution) -> float:
    """Analytic derivative d(rho0)/d(xi) = -sqrt(3 / (xi^2 T(xi))) < 0."""
    t = _T(xi, sol.eps, sol.C)
    if t <= 0:
        raise DomainError("rho0_prime requires T(xi) > 0")
    return -_SQRT3 / (xi * math.sqrt(t))


def rho0_limits(sol: ProfileSolution) -> tuple[float, float]:
    """(rho_minus, rho_plus): limits of rho0 at xi02 and xi01.

    rho_minus is always a finite negative number; rho_plus is finite only
    for eps=+1 and +inf otherwise.
    """
    rm = rho0(sol.roots.xi02, sol)
    if sol.eps == 1:
        return rm, rho0(sol.roots.xi01, sol)
    return rm, math.inf


def endpoint_singularity_coeff(sol: ProfileSolution, which: str = "upper") -> float:
    """Limit of sqrt(|root - xi|) / sqrt(T(xi)) at the requested root.

    Equals sqrt(3 / (8 xi02^{5/3} - 6 C xi02)) at the upper root and the
    sign-flipped analogue at the lower root (where T' > 0).
    """
    C = sol.C
    if which == "upper":
        r = sol.roots.xi02
        denom = 8.0 * r ** (5.0 / 3.0) - 6.0 * C * r
    elif which == "lower":
        if sol.eps != 1:
            raise DomainError("lower root coefficient is defined only for eps=+1")
        r = sol.roots.xi01
        denom = 6.0 * C * r - 8.0 * r ** (5.0 / 3.0)
    else:
        raise DomainError(f"which must be 'upper' or 'lower', got {which!r}")
    if denom <= 0:
        raise DomainError("degenerate root: T' vanishes")
    return math.sqrt(3.0 / denom)


# -- table construction ------------------------------------------------------

def _gl_panel(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(_GL_W, f(mid + half * _GL_X)))


class _Node:
    """Table node: xi value plus the quadrature variable of its region.

    var is one of 'thi' (t = sqrt(xi02 - xi)), 'tlo' (t = sqrt(xi - xi01)),
    'lam' (lambda = -log xi) or 'xi' (identity).  A panel between two nodes
    is integrated in the variable of its left (higher-xi) node; coordinates
    are always recomputed from xi, so panels that straddle a region boundary
    remain consistent.
    """

    __slots__ = ("xi", "var")

    def __init__(self, xi, var):
        self.xi = xi
        self.var = var


def _s_of(xi, var, roots):
    if var == "thi":
        return math.sqrt(max(roots.xi02 - xi, 0.0))
    if var == "tlo":
        return math.sqrt(max(xi - roots.xi01, 0.0))
    if var == "lam":
        return -math.log(xi)
    return xi


def _xi_of(s, var, roots):
    if var == "thi":
        return roots.xi02 - s * s
    if var == "tlo":
        return roots.xi01 + s * s
    if var == "lam":
        return math.exp(-s)
    return s


def _panel_drho(na: _Node, nb: _Node, eps, C, roots):
    """Integral of the rho0 integrand from nb.xi up to na.xi (na.xi > nb.xi)."""
    x1, x2 = roots.xi01, roots.xi02
    var = na.var
    sa, sb = _s_of(na.xi, var, roots), _s_of(nb.xi, var, roots)
    if var == "thi":
        def g(t):
            xi = x2 - t * t
            return 2.0 * _SQRT3 / (xi * np.sqrt(_w_upper(t * t, eps, C, x2)))
        return _gl_panel(g, sa, sb)
    if var == "tlo":
        def g(t):
            xi = x1 + t * t
            return 2.0 * _SQRT3 / (xi * np.sqrt(_w_lower(t * t, eps, C, x1)))
        return _gl_panel(g, sb, sa)
    if var == "lam":
        def g(lam):
            return _SQRT3 / np.sqrt(_T(np.exp(-lam), eps, C))
        return _gl_panel(g, sa, sb)
    return _gl_panel(lambda x: _integrand(x, eps, C), sb, sa)


def _mid_node(na: _Node, nb: _Node, roots) -> _Node:
    var = na.var
    s = 0.5 * (_s_of(na.xi, var, roots) + _s_of(nb.xi, var, roots))
    return _Node(_xi_of(s, var, roots), var)


def _hermite_xi(drho, xi_a, dxi_a, xi_b, dxi_b, r):
    """Cubic Hermite value of xi at fraction r of a panel of rho-width drho."""
    h00 = (1 + 2 * r) * (1 - r) ** 2
    h10 = r * (1 - r) ** 2
    h01 = r * r * (3 - 2 * r)
    h11 = r * r * (r - 1)
    return h00 * xi_a + h10 * drho * dxi_a + h01 * xi_b + h11 * drho * dxi_b


def _slope(xi, eps, C, roots):
    """d(xi)/d(rho) on the base block: -xi*sqrt(T/3); zero at the roots."""
    if xi <= roots.xi01 or xi >= roots.xi02:
        return 0.0
    return -xi * math.sqrt(max(_T(xi, eps, C), 0.0) / 3.0)


def solve_profile(
    eps: int,
    C: float,
    xi00: float | None = None,
    coverage: float = 12.0,
    table_tol: float = 2e-13,
) -> ProfileSolution:
    """Build a ProfileSolution with a dense monotone (xi, rho0) table.

    coverage (eps in {-1,0} only): the table extends to rho_minus + coverage.
    The table is refined until cubic Hermite interpolation of xi(rho) is
    accurate to table_tol, with node spacing additionally capped at 1e-3 of
    the tabulated rho span.
    """
    params = ProfileParams(eps=eps, C=C, xi00=xi00)
    roots = find_roots(params)
    x1, x2 = roots.xi01, roots.xi02
    base = _default_xi00(eps, roots) if xi00 is None else float(xi00)
    if not (x1 < base < x2):
        raise DomainError(f"xi00={base} outside the open root interval ({x1}, {x2})")
    w = _root_window(roots)

    # Region node seeds, ordered by decreasing xi (increasing rho).
    nodes: list[_Node] = []
    for t in np.linspace(0.0, math.sqrt(w), 25):
        nodes.append(_Node(x2 - t * t, "thi"))
    if eps == 1:
        for x in np.linspace(x2 - w, x1 + w, 49)[1:]:
            nodes.append(_Node(x, "xi"))
        for t in np.linspace(math.sqrt(w), 0.0, 25)[1:]:
            nodes.append(_Node(x1 + t * t, "tlo"))
    else:
        # lambda = -log(xi) is the natural variable toward xi -> 0; the
        # integrand there is sqrt(3)/sqrt(T(e^-lam)), smooth and bounded.
        lam0 = -math.log(x2 - w)
        for lam in np.arange(lam0 + 0.05, lam0 + 3.0, 0.05):
            nodes.append(_Node(math.exp(-lam), "lam"))

    def insert_base(nodelist):
        for i in range(len(nodelist) - 1):
            if nodelist[i].xi > base > nodelist[i + 1].xi:
                nodelist.insert(i + 1, _Node(base, nodelist[i + 1].var))
                return
        # base coincides with an existing node: snap it exactly
        k = min(range(len(nodelist)), key=lambda i: abs(nodelist[i].xi - base))
        nodelist[k].xi = base

    insert_base(nodes)

    # For eps in {-1, 0}: extend the lambda tail until total arclength from
    # the upper root reaches the requested coverage.
    if eps != 1:
        total = sum(_panel_drho(nodes[i], nodes[i + 1], eps, C, roots)
                    for i in range(len(nodes) - 1))
        lam = _s_of(nodes[-1].xi, "lam", roots)
        while total < coverage:
            lam += 0.05
            nxt = _Node(math.exp(-lam), "lam")
            total += _panel_drho(nodes[-1], nxt, eps, C, roots)
            nodes.append(nxt)
        span_est = total
    else:
        span_est = sum(_panel_drho(nodes[i], nodes[i + 1], eps, C, roots)
                       for i in range(len(nodes) - 1))
    cap = 1e-3 * span_est

    out_nodes = [nodes[0]]
    out_drho = []

    def rec(na, nb, drho, depth):
        nm = _mid_node(na, nb, roots)
        d1 = _panel_drho(na, nm, eps, C, roots)
        d2 = _panel_drho(nm, nb, eps, C, roots)
        drho = d1 + d2
        if depth < 28 and drho > cap:
            ok = False
        elif depth >= 28:
            ok = True
        else:
            # accept the panel when cubic Hermite interpolation of xi(rho)
            # between its endpoints reproduces the midpoint to table_tol
            r = d1 / drho if drho > 0 else 0.5
            pred = _hermite_xi(drho, na.xi, _slope(na.xi, eps, C, roots),
                               nb.xi, _slope(nb.xi, eps, C, roots), r)
            ok = abs(pred - nm.xi) <= table_tol * max(1.0, x2)
        if ok:
            out_nodes.append(nm)
            out_drho.append(d1)
            out_nodes.append(nb)
            out_drho.append(d2)
        else:
            rec(na, nm, d1, depth + 1)
            rec(nm, nb, d2, depth + 1)

    for i in range(len(nodes) - 1):
        na, nb = nodes[i], nodes[i + 1]
        rec(na, nb, _panel_drho(na, nb, eps, C, roots), 0)

    xi_arr = np.array([n.xi for n in out_nodes])
    # rho0 decreases with xi; nodes run xi-descending from the upper root, so
    # the cumulative panel sums ascend with rho(upper-root end) at 0.  Shift
    # so that rho vanishes exactly at the base node.
    rho_rel = np.concatenate([[0.0], np.cumsum(out_drho)])
    k0 = int(np.argmin(np.abs(xi_arr - base)))
    rho_arr = rho_rel - rho_rel[k0]
    dxi_arr = np.array([_slope(n.xi, eps, C, roots) for n in out_nodes])

    rho_minus = float(rho_arr[0])
    rho_plus = float(rho_arr[-1]) if eps == 1 else math.inf

    return ProfileSolution(
        params=params,
        roots=roots,
        xi00=base,
        rho_minus=rho_minus,
        rho_plus=rho_plus,
        table_rho=np.ascontiguousarray(rho_arr),
        table_xi=np.ascontiguousarray(xi_arr),
        table_dxi=np.ascontiguousarray(dxi_arr),
    )


def invert_rho0(rho: float, sol: ProfileSolution) -> float:
    """Inverse xi0(rho) with |rho0(xi0(rho)) - rho| <= 1e-10.

    Seeds with monotone cubic Hermite interpolation of the table, then
    polishes with Newton steps on rho0(xi) - rho using the analytic slope.
    The residual rho0(xi) near the seed is evaluated by a short smooth panel
    quadrature from the nearest table node.
    """
    if not (sol.rho_minus < rho < sol.rho_plus):
        raise DomainError(
            f"rho={rho} outside ({sol.rho_minus}, {sol.rho_plus})"
        )
    if rho > sol.table_rho[-1]:
        raise CoverageError(
            f"rho={rho} beyond table coverage {sol.table_rho[-1]}; "
            "rebuild the profile with a larger coverage"
        )
    tr, tx, td = sol.table_rho, sol.table_xi, sol.table_dxi
    i = int(np.searchsorted(tr, rho)) - 1
    i = min(max(i, 0), len(tr) - 2)
    h = tr[i + 1] - tr[i]
    r = (rho - tr[i]) / h
    xi = _hermite_xi(h, tx[i], td[i], tx[i + 1], td[i + 1], r)
    xi = min(max(xi, min(tx[i + 1], tx[i])), max(tx[i + 1], tx[i]))

    # Newton polish: residual = rho0(xi) - rho, evaluated incrementally from
    # the nearest node by a short GL panel in the region's smooth variable.
    eps, C, roots = sol.eps, sol.C, sol.roots
    wroot = _root_window(roots)

    def region_var(x):
        if x > roots.xi02 - wroot:
            return "thi"
        if eps == 1 and x < roots.xi01 + wroot:
            return "tlo"
        if eps != 1 and x < roots.xi02 - wroot:
            return "lam"
        return "xi"

    node_rho, node_xi = float(tr[i]), float(tx[i])

    def residual(x):
        var = region_var(min(x, node_xi))
        if x > node_xi:
            return node_rho - _panel_drho(_Node(x, var), _Node(node_xi, var),
                                          eps, C, roots) - rho
        if x < node_xi:
            return node_rho + _panel_drho(_Node(node_xi, var), _Node(x, var),
                                          eps, C, roots) - rho
        return node_rho - rho

    # Next to a root the rho(xi) slope diverges; Newton is run in the local
    # root variable t = sqrt(|root - xi|) there, where the slope is finite.
    mode = region_var(xi)
    if mode == "thi":
        t = math.sqrt(max(roots.xi02 - xi, 0.0))
        for _ in range(8):
            x = roots.xi02 - t * t
            resid = residual(x)
            if abs(resid) < 3e-15:
                break
            w = float(_w_upper(np.array([t * t]), eps, C, roots.xi02)[0])
            t -= resid / (2.0 * _SQRT3 / (x * math.sqrt(w)))
            t = max(t, 0.0)
        return roots.xi02 - t * t
    if mode == "tlo":
        t = math.sqrt(max(xi - roots.xi01, 0.0))
        for _ in range(8):
            x = roots.xi01 + t * t
            resid = residual(x)
            if abs(resid) < 3e-15:
                break
            w = float(_w_lower(np.array([t * t]), eps, C, roots.xi01)[0])
            t -= resid / (-2.0 * _SQRT3 / (x * math.sqrt(w)))
            t = max(t, 0.0)
        return roots.xi01 + t * t

    for _ in range(8):
        resid = residual(xi)
        if abs(resid) < 3e-15:
            break
        t = _T(xi, eps, C)
        if t <= 0:
            break
        xi = xi + resid * xi * math.sqrt(t) / _SQRT3
        xi = min(max(xi, roots.xi01 + 1e-300), roots.xi02)
    return float(xi)
