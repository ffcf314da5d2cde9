"""Glued profile F and its reflection lattice.

A single block (the ProfileSolution) is extended to all of rho by reflecting
at the block ends: for eps=+1 this repeats with period 2(rho_plus -
rho_minus); for eps in {-1, 0} there is a single reflection at rho_minus.
Gamma = 1/F is the rotational coefficient of the complete metric
Gamma^2 dtheta^2 + drho^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DomainError
from .profile import ProfileSolution, invert_rho0, rho0

__all__ = [
    "GluingLattice",
    "GluedProfile",
    "build_glued_profile",
    "lattice_point",
    "reflect_rho_r",
    "junctions_in",
    "block_reduce",
    "eval_F",
    "eval_F_many",
    "eval_Gamma",
    "derivative_F",
    "junction_smoothness_report",
]


@dataclass(frozen=True)
class GluingLattice:
    """Junction lattice rho_{0,r}, r in Z \\ {0}.

    period is 2(rho_plus - rho_minus) when both ends are finite (eps=+1)
    and +inf otherwise (single reflection).
    """

    rho_plus: float
    rho_minus: float

    @property
    def period(self) -> float:
        if math.isinf(self.rho_plus):
            return math.inf
        return 2.0 * (self.rho_plus - self.rho_minus)


def lattice_point(r: int, lat: GluingLattice) -> float:
    """Junction position rho_{0,r}; r=0 is not part of the lattice."""
    if r == 0:
        raise DomainError("r=0 is not a lattice index; the base block is "
                          "(rho_minus, rho_plus)")
    if r == -1:
        return lat.rho_minus
    if r >= 1:
        return r * lat.rho_plus - (r - 1) * lat.rho_minus
    return (r + 1) * lat.rho_plus - r * lat.rho_minus


def junctions_in(window: tuple[float, float], lat: GluingLattice) -> list[float]:
    """Finite junction positions inside [window[0], window[1]], ascending."""
    a, b = window
    out = []
    r = 1
    while True:
        p = lattice_point(r, lat)
        if not math.isfinite(p) or p > b:
            break
        if p >= a:
            out.append(p)
        r += 1
    r = -1
    while True:
        p = lattice_point(r, lat)
        if not math.isfinite(p) or p < a:
            break
        if p <= b:
            out.append(p)
        r -= 1
    return sorted(out)


@dataclass(frozen=True)
class GluedProfile:
    """The complete profile F: R -> [xi01, xi02] built from one block."""

    sol: ProfileSolution
    lattice: GluingLattice
    periodic: bool
    # flat copies handed to the jit kernels
    _trho: np.ndarray = field(repr=False)
    _txi: np.ndarray = field(repr=False)
    _tdxi: np.ndarray = field(repr=False)

    @property
    def eps(self) -> int:
        return self.sol.eps

    @property
    def C(self) -> float:
        return self.sol.C

    @property
    def block_width(self) -> float:
        if self.periodic:
            return self.lattice.rho_plus - self.lattice.rho_minus
        return self.sol.coverage - self.lattice.rho_minus

    def _kernel_args(self):
        s = self.sol
        return (float(s.eps), s.C, s.roots.xi01, s.roots.xi02,
                self._trho, self._txi, self._tdxi,
                self.lattice.rho_minus,
                self.lattice.rho_plus if self.periodic else math.inf,
                self.periodic)


def build_glued_profile(sol: ProfileSolution) -> GluedProfile:
    lat = GluingLattice(rho_plus=sol.rho_plus, rho_minus=sol.rho_minus)
    return GluedProfile(
        sol=sol,
        lattice=lat,
        periodic=(sol.eps == 1),
        _trho=np.ascontiguousarray(sol.table_rho),
        _txi=np.ascontiguousarray(sol.table_xi),
        _tdxi=np.ascontiguousarray(sol.table_dxi),
    )


def reflect_rho_r(xi: float, r: int, gp: GluedProfile) -> float:
    """rho_r(xi): the copy of rho0 living on block r.

    Even r translates rho0 by r*(rho_plus - rho_minus); odd r reflects:
    rho_r(xi) = (r+1)rho_plus - (r-1)rho_minus - rho0(xi).
    """
    x1, x2 = gp.sol.roots.xi01, gp.sol.roots.xi02
    if not (x1 < xi < x2):
        raise DomainError(f"xi={xi} outside the open interval ({x1}, {x2})")
    r0 = rho0(xi, gp.sol)
    if r % 2 == 0:
        return r * (gp.lattice.rho_plus - gp.lattice.rho_minus) + r0
    return (r + 1) * gp.lattice.rho_plus - (r - 1) * gp.lattice.rho_minus - r0


def block_reduce(rho: float, gp: GluedProfile) -> tuple[float, float]:
    """(base-block rho, parity sign) for a global rho."""
    rb, s = _kernels.fold_rho(rho, gp.lattice.rho_minus,
                              gp.lattice.rho_plus if gp.periodic else math.inf,
                              gp.periodic)
    return float(rb), float(s)


def eval_F(rho: float, gp: GluedProfile, refine: bool = False) -> float:
    """F(rho).  Junctions return the exact stored root value.

    refine=True polishes the table value with the profile module's Newton
    inverse (worth it only for cross-checks against independent values).
    """
    args = gp._kernel_args()
    f, _ = _kernels.eval_F(rho, *args[4:])
    if math.isnan(f):
        rb, _ = block_reduce(rho, gp)
        from .errors import CoverageError
        raise CoverageError(f"rho={rho} reduces to {rb}, beyond table coverage")
    if refine:
        rb, _ = block_reduce(rho, gp)
        if gp.sol.table_rho[0] < rb < gp.sol.table_rho[-1]:
            f = invert_rho0(rb, gp.sol)
    return float(f)


def eval_F_many(rhos, gp: GluedProfile) -> np.ndarray:
    """Vectorized F over an array of rho values (table accuracy)."""
    rhos = np.ascontiguousarray(np.atleast_1d(np.asarray(rhos, dtype=float)))
    if _kernels.HAS_NUMBA:
        out = np.empty((4, rhos.size))
        _kernels.eval_F_batch(rhos, *gp._kernel_args(), out)
    else:
        out = _kernels.eval_F_batch_numpy(rhos, *gp._kernel_args())
    return out[0]


def eval_F_with_derivatives(rhos, gp: GluedProfile) -> np.ndarray:
    """Array of shape (4, n): F, F', F'', F''' along rhos."""
    rhos = np.ascontiguousarray(np.atleast_1d(np.asarray(rhos, dtype=float)))
    if _kernels.HAS_NUMBA:
        out = np.empty((4, rhos.size))
        _kernels.eval_F_batch(rhos, *gp._kernel_args(), out)
    else:
        out = _kernels.eval_F_batch_numpy(rhos, *gp._kernel_args())
    return out


def eval_Gamma(rho: float, gp: GluedProfile) -> float:
    """Gamma(rho) = 1/F(rho) >= 1/xi02."""
    return 1.0 / eval_F(rho, gp)


def derivative_F(rho: float, order: int, gp: GluedProfile) -> float:
    """d^order F / d rho^order, order in {1,2,3}, analytic closed forms.

    At junctions the returned values are the shared one-sided limits
    (0, F^2 T'(F)/6, 0 for orders 1, 2, 3).
    """
    if order not in (1, 2, 3):
        raise DomainError(f"order must be 1, 2 or 3, got {order}")
    f, f1, f2, f3 = _kernels.eval_F_derivs(rho, *gp._kernel_args())
    if math.isnan(f):
        from .errors import CoverageError
        raise CoverageError(f"rho={rho} beyond table coverage")
    return (f1, f2, f3)[order - 1]


# ---------------------------------------------------------------------------
# C^3 junction audit
# ---------------------------------------------------------------------------

# fourth-order one-sided (forward) difference rows for derivatives 1..3 and
# a second-order row for the fourth derivative; high order is needed because
# F''''' is large at the xi02 junctions and drives plain stencils above the
# audit thresholds before roundoff takes over
_FWD_D1 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0, 0.0, 0.0]) / 12.0
_FWD_D2 = np.array([15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0,
                    61.0 / 12.0, -5.0 / 6.0, 0.0])
_FWD_D3 = np.array([-49.0 / 8.0, 29.0, -461.0 / 8.0, 62.0, -307.0 / 8.0,
                    13.0, -15.0 / 8.0])
_FWD_D4 = np.array([3.0, -14.0, 26.0, -24.0, 11.0, -2.0, 0.0])


def _one_sided_estimates(gp, rho_j, h, side):
    """Finite-difference F', F'', F''', F'''' from one side of a junction.

    side=+1 samples to the right, side=-1 to the left.
    """
    x = np.array([eval_F(rho_j + side * k * h, gp, refine=True)
                  for k in range(7)])
    d1 = side * float(_FWD_D1 @ x) / h
    d2 = float(_FWD_D2 @ x) / (h * h)
    d3 = side * float(_FWD_D3 @ x) / (h ** 3)
    d4 = float(_FWD_D4 @ x) / (h ** 4)
    return d1, d2, d3, d4


def junction_smoothness_report(gp: GluedProfile,
                               window: tuple[float, float] | None = None) -> dict:
    """Audit that F is C^3 across every junction in the window.

    For each junction, one-sided finite differences of orders 1..3 from both
    sides over a geometric step sweep h in {1e-2..1e-5} x block width; the
    report records the per-order left/right mismatch, the mismatch with the
    analytic limits (0, F^2 T'(F)/6, 0), and the order-4 mismatch for
    information only (no smoothness claim beyond C^3 is made).
    """
    if window is None:
        if gp.periodic:
            window = (gp.lattice.rho_minus - gp.lattice.period,
                      gp.lattice.rho_minus + 2.0 * gp.lattice.period)
        else:
            w = gp.block_width
            window = (gp.lattice.rho_minus - 0.5 * w,
                      gp.lattice.rho_minus + 0.5 * w)
    if gp.periodic:
        W = gp.lattice.rho_plus - gp.lattice.rho_minus
    else:
        # no finite block width: use the scale over which F actually varies
        W = min(gp.block_width, 2.0 * abs(gp.lattice.rho_minus))
    hs = [1e-2 * W, 1e-3 * W, 3e-4 * W, 1e-4 * W, 1e-5 * W]
    out = {"window": list(window), "h_sweep": hs, "junctions": []}
    for rho_j in junctions_in(window, gp.lattice):
        f, _, f2_analytic, _ = _kernels.eval_F_derivs(rho_j, *gp._kernel_args())
        left = [[], [], [], []]
        right = [[], [], [], []]
        for h in hs:
            for side, acc in ((1, right), (-1, left)):
                ests = _one_sided_estimates(gp, rho_j, h, side)
                for k in range(4):
                    acc[k].append(ests[k])
        rep = {"rho": rho_j, "F": f, "analytic": [0.0, f2_analytic, 0.0]}
        # per-order step choice from the sweep: the optimum balances the
        # O(h^4) truncation (F^(5..7) are large at the xi02 junctions)
        # against roundoff amplified by 1/h^order; order 2 tolerates a
        # smaller step than orders 1 and 3
        pick = {"order1": 1, "order2": 2, "order3": 1, "order4": 1}
        for k, name in enumerate(("order1", "order2", "order3", "order4")):
            j = pick[name]
            el = left[k][j]
            er = right[k][j]
            rep[name] = {
                "left": el,
                "right": er,
                "mismatch": abs(el - er),
            }
            if k < 3:
                rep[name]["analytic_mismatch"] = max(
                    abs(el - rep["analytic"][k]), abs(er - rep["analytic"][k]))
        out["junctions"].append(rep)
    orders = ("order1", "order2", "order3")
    out["max_mismatch"] = {
        name: max((j[name]["mismatch"] for j in out["junctions"]), default=0.0)
        for name in orders
    }
    out["max_analytic_mismatch"] = {
        name: max((j[name]["analytic_mismatch"] for j in out["junctions"]),
                  default=0.0)
        for name in orders
    }
    return out
