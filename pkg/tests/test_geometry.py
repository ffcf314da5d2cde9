"""Intrinsic metric: curvature identities, first integral, geodesics."""

import json
import math

import numpy as np
import pytest

from bicons.errors import DomainError
from bicons.geometry import (GluedMetric, completeness_comparison,
                             first_integral_alpha, gauss_curvature,
                             geodesic_integrate, omega,
                             random_geodesic_probes, sample_grid,
                             verify_bicons_pde, verify_curvature_ode,
                             verify_first_integral, verify_frame_relations,
                             verify_isothermal_form, verify_laplace_identity)
from bicons.gluing import eval_F, lattice_point

SQRT3 = math.sqrt(3.0)


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_curvature_range(metrics, eps):
    gm = metrics[eps]
    x1, x2 = gm.gp.sol.roots.xi01, gm.gp.sol.roots.xi02
    rho = sample_grid(gm, None, 300)
    K = np.array([gauss_curvature(float(r), gm) for r in rho])
    assert np.all(K <= eps - x1 ** (8.0 / 3.0) / 9.0 + 1e-12)
    assert np.all(K >= eps - x2 ** (8.0 / 3.0) / 9.0 - 1e-12)
    # non-CMC: K actually varies
    assert K.max() - K.min() > 1e-3


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_curvature_ode(metrics, eps):
    rep = verify_curvature_ode(metrics[eps])
    assert rep.max_residual <= 1e-6


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_laplace_identity(metrics, eps):
    rep = verify_laplace_identity(metrics[eps])
    assert rep.max_residual <= 1e-6


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_bicons_pde(metrics, eps):
    rep = verify_bicons_pde(metrics[eps])
    assert rep.max_residual <= 1e-6


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_isothermal_form(metrics, eps):
    rep = verify_isothermal_form(metrics[eps])
    assert rep.max_residual <= 1e-6
    assert rep.extra["a_max_error"] <= 1e-6
    assert rep.extra["sigma_prime_min"] > 0  # sigma monotone on the block


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_first_integral(metrics, eps):
    gm = metrics[eps]
    rep = verify_first_integral(gm)
    assert rep.extra["relative_spread"] <= 1e-6
    expected = 64.0 * gm.C / (3.0 * SQRT3)
    assert rep.extra["alpha_expected"] == expected
    assert abs(rep.extra["alpha_mean"] - expected) <= 1e-6 * max(1, abs(expected))


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_frame_relations(metrics, eps):
    rep = verify_frame_relations(metrics[eps])
    assert rep.max_residual <= 1e-7


def test_omega_is_log_derivative(metrics):
    """omega = Gamma'/Gamma = -F'/F, and 3K'/(8(eps-K)) agrees."""
    for eps, gm in metrics.items():
        for rho in (0.3, -0.2, 1.0):
            F = eval_F(rho, gm.gp)
            h = 1e-6
            fd = (math.log(1.0 / eval_F(rho + h, gm.gp, refine=True))
                  - math.log(1.0 / eval_F(rho - h, gm.gp, refine=True))) / (2 * h)
            assert omega(rho, gm) == pytest.approx(fd, abs=1e-7)
        # exactly zero at the junction
        assert omega(gm.gp.lattice.rho_minus, gm) == 0.0


def test_residual_report_json(metrics):
    rep = verify_curvature_ode(metrics[1])
    d = json.loads(rep.to_json())
    for key in ("identity", "grid-spec", "max-residual", "rms-residual",
                "guard-band", "sign-convention"):
        assert key.replace("-", "_") in d
    assert "X1 = d/drho" in d["sign_convention"]


def test_alpha_guard_band(metrics):
    gm = metrics[1]
    with pytest.raises(DomainError):
        first_integral_alpha(gm, gm.gp.lattice.rho_minus)


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_completeness_comparison(metrics, eps):
    comp = completeness_comparison(metrics[eps])
    assert comp["positive_semidefinite"]
    assert comp["m0"] == min(1.0 / metrics[eps].gp.sol.roots.xi02 ** 2, 1.0)


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_junction_line_is_geodesic(metrics, eps):
    """theta-lines at junctions are closed geodesics: rho stays put exactly."""
    gm = metrics[eps]
    rj = gm.gp.lattice.rho_minus
    F = eval_F(rj, gm.gp)
    res = geodesic_integrate((rj, 0.0, 0.0, F), 30.0, gm, n_samples=40)
    assert np.max(np.abs(res.samples[:, 1] - rj)) <= 1e-8
    assert res.speed_drift <= 1e-8


def test_radial_line_is_geodesic(metrics):
    gm = metrics[0]
    start = (gm.gp.lattice.rho_minus - 1.0, 0.5, 1.0, 0.0)
    res = geodesic_integrate(start, 20.0, gm, n_samples=10)
    # theta never moves on a radial geodesic
    assert np.max(np.abs(res.samples[:, 2] - 0.5)) == 0.0
    assert res.state[0] == pytest.approx(start[0] + 20.0, abs=1e-8)


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_random_geodesics(metrics, eps):
    probes = random_geodesic_probes(metrics[eps], n=10, length=60.0, seed=7)
    assert probes["failures"] == 0
    assert probes["max_speed_drift"] <= 1e-8
    assert probes["max_clairaut_drift"] <= 1e-8


def test_geodesic_rejects_nonunit(metrics):
    gm = metrics[1]
    with pytest.raises(DomainError):
        geodesic_integrate((0.0, 0.0, 2.0, 0.0), 1.0, gm)


def test_f_squared_curvature_relation(metrics):
    """f^2 = (4/3)(eps - K) pointwise."""
    for eps, gm in metrics.items():
        rho = sample_grid(gm, None, 200)
        for r in rho[::40]:
            F = eval_F(float(r), gm.gp)
            f = 2.0 * F ** (4.0 / 3.0) / (3.0 * SQRT3)
            K = gauss_curvature(float(r), gm)
            assert f * f == pytest.approx((4.0 / 3.0) * (eps - K), rel=1e-12)
