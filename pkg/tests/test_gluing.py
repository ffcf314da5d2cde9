"""Reflection lattice, glued evaluation and the C^3 junction audit."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bicons import _kernels
from bicons.errors import CoverageError, DomainError
from bicons.gluing import (GluingLattice, block_reduce, derivative_F, eval_F,
                           eval_F_many, eval_Gamma, junction_smoothness_report,
                           junctions_in, lattice_point, reflect_rho_r)
from bicons.profile import rho0


LAT = GluingLattice(rho_plus=2.0, rho_minus=-1.0)


def test_lattice_examples():
    # r >= 1: r*rho_plus - (r-1)*rho_minus; r <= -1 mirrored
    assert lattice_point(1, LAT) == 2.0
    assert lattice_point(2, LAT) == 5.0
    assert lattice_point(3, LAT) == 8.0
    assert lattice_point(-1, LAT) == -1.0
    assert lattice_point(-2, LAT) == -4.0
    assert LAT.period == 6.0


def test_lattice_r0_rejected():
    with pytest.raises(DomainError):
        lattice_point(0, LAT)


def test_lattice_noncompact():
    lat = GluingLattice(rho_plus=math.inf, rho_minus=-1.0)
    assert lat.period == math.inf
    assert lattice_point(-1, lat) == -1.0
    assert lattice_point(1, lat) == math.inf


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=500))
def test_lattice_monotone(r):
    assert lattice_point(r + 1, LAT) > lattice_point(r, LAT)
    assert lattice_point(-(r + 1), LAT) < lattice_point(-r, LAT)


def test_junctions_in_sorted():
    js = junctions_in((-10.0, 10.0), LAT)
    assert js == sorted(js)
    assert all(a < b for a, b in zip(js, js[1:]))
    assert -1.0 in js and 2.0 in js and 8.0 in js


def test_junction_parity(glued):
    """Odd lattice points carry xi01, even ones xi02 (exactly)."""
    gp = glued[1]
    x1, x2 = gp.sol.roots.xi01, gp.sol.roots.xi02
    # junction values alternate spatially: rho_minus -> xi02, rho_plus -> xi01
    for r in (1, 3, -2, -4):
        assert eval_F(lattice_point(r, gp.lattice), gp) == x1
    for r in (2, 4, -1, -3):
        assert eval_F(lattice_point(r, gp.lattice), gp) == x2
    for eps in (0, -1):
        gpn = glued[eps]
        assert eval_F(gpn.lattice.rho_minus, gpn) == gpn.sol.roots.xi02


def test_periodicity(glued):
    gp = glued[1]
    per = gp.lattice.period
    rhos = np.linspace(-3.0, 3.0, 200)
    a = eval_F_many(rhos, gp)
    b = eval_F_many(rhos + per, gp)
    c = eval_F_many(rhos - 2 * per, gp)
    assert np.max(np.abs(a - b)) <= 1e-10
    assert np.max(np.abs(a - c)) <= 1e-10


def test_reflection_symmetry(glued):
    for gp in glued.values():
        rj = gp.lattice.rho_minus
        for d in np.linspace(1e-3, 0.5, 40):
            assert eval_F(rj + d, gp) == pytest.approx(eval_F(rj - d, gp),
                                                       abs=1e-10)


def test_reflect_rho_r(glued):
    gp = glued[1]
    sol = gp.sol
    for xi in (1.5, 2.5, 4.5):
        base = rho0(xi, sol)
        assert reflect_rho_r(xi, 0, gp) == base
        # the reflected point evaluates back to the same xi
        for r in (1, 2, -2, 3):
            assert eval_F(reflect_rho_r(xi, r, gp), gp) == pytest.approx(
                xi, abs=1e-9)
    with pytest.raises(DomainError):
        reflect_rho_r(sol.roots.xi02 + 1.0, 1, gp)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-50.0, max_value=50.0),
       st.floats(min_value=0.05, max_value=0.95))
def test_fold_is_projection(rho_shift, frac):
    gp = test_fold_is_projection.gp
    lat = gp.lattice
    rho = lat.rho_minus + frac * (lat.rho_plus - lat.rho_minus) + rho_shift
    rb, s = block_reduce(rho, gp)
    assert lat.rho_minus - 1e-12 <= rb <= lat.rho_plus + 1e-12
    assert s in (1.0, -1.0)
    rb2, _ = block_reduce(rb, gp)
    assert rb2 == pytest.approx(rb, abs=1e-12)


from bicons.gluing import build_glued_profile
from bicons.profile import solve_profile

test_fold_is_projection.gp = build_glued_profile(solve_profile(1, 3.0))


def test_F_bounded(glued):
    for gp in glued.values():
        hi = 3.0 if gp.periodic else gp.block_width * 0.95
        rhos = np.linspace(gp.lattice.rho_minus - hi,
                           gp.lattice.rho_minus + hi, 500)
        F = eval_F_many(rhos, gp)
        assert np.all(F >= gp.sol.roots.xi01 - 1e-14)
        assert np.all(F <= gp.sol.roots.xi02 + 1e-14)
        assert eval_Gamma(gp.lattice.rho_minus, gp) == pytest.approx(
            1.0 / gp.sol.roots.xi02, rel=1e-14)


def test_coverage_error(glued):
    gp = glued[0]
    with pytest.raises(CoverageError):
        eval_F(gp.lattice.rho_minus + gp.block_width + 5.0, gp)


def test_derivatives_at_junctions(glued):
    """One-sided limits: F' = F''' = 0, F'' = F^2 T'(F)/6."""
    for gp in glued.values():
        rj = gp.lattice.rho_minus
        x2 = gp.sol.roots.xi02
        tp = (8.0 / 3.0) * x2 ** (5.0 / 3.0) - 2.0 * gp.C * x2
        assert derivative_F(rj, 1, gp) == 0.0
        assert derivative_F(rj, 3, gp) == 0.0
        assert derivative_F(rj, 2, gp) == pytest.approx(x2 * x2 * (-tp) / 6.0,
                                                        rel=1e-12)
    with pytest.raises(DomainError):
        derivative_F(0.0, 4, glued[1])


def test_derivative_interior_fd(glued):
    gp = glued[1]
    h = 1e-5
    for rho in (0.15, 0.7, -0.3):
        fd1 = (eval_F(rho + h, gp, refine=True)
               - eval_F(rho - h, gp, refine=True)) / (2 * h)
        assert derivative_F(rho, 1, gp) == pytest.approx(fd1, abs=5e-9)
        fd2 = (eval_F(rho + h, gp, refine=True) - 2 * eval_F(rho, gp, refine=True)
               + eval_F(rho - h, gp, refine=True)) / h ** 2
        assert derivative_F(rho, 2, gp) == pytest.approx(fd2, abs=5e-5)


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_junction_audit(glued, eps):
    rep = junction_smoothness_report(glued[eps])
    assert rep["junctions"], "no junctions in the audit window"
    for key, tol in (("order1", 1e-7), ("order2", 1e-6), ("order3", 1e-4)):
        assert rep["max_mismatch"][key] <= tol, (key, rep["max_mismatch"])
        assert rep["max_analytic_mismatch"][key] <= tol, (
            key, rep["max_analytic_mismatch"])
    # order 4 is informational only, but must be present
    assert all("order4" in j for j in rep["junctions"])


def test_backend_reported():
    assert _kernels.backend() in ("numba", "numpy")
