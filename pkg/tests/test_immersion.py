"""Shape operator, moving-frame integration, flat-case oracle, export."""

import math
import os

import numpy as np
import pytest

from bicons.errors import DomainError, ExportError, IntegrationQualityError
from bicons.gluing import eval_F
from bicons.geometry import gauss_curvature, sample_grid
from bicons.immersion import (GridSpec, ambient_model, compare_to_oracle,
                              explicit_immersion_eps0, export_mesh,
                              frame_ode_rhs, induced_metric_error,
                              integrate_immersion, shape_operator,
                              theta_generator, verify_biconservative_tangency,
                              verify_codazzi)

SQRT3 = math.sqrt(3.0)


def _grid(metrics, eps, n_rho=60, n_theta=90, half=3.0):
    gm = metrics[eps]
    gp = gm.gp
    rm = gp.lattice.rho_minus
    if gp.periodic:
        spec = GridSpec(rm, rm + 2.0 * gp.lattice.period, 0.0, 2.0 * math.pi,
                        n_rho, n_theta)
    else:
        spec = GridSpec(rm - half, rm + half, 0.0, 2.0 * math.pi,
                        n_rho, n_theta)
    return gm, integrate_immersion(gm, ambient_model(eps), spec)


def test_ambient_models():
    assert ambient_model(0).dim == 3
    s3 = ambient_model(1)
    assert s3.constraint == 1.0 and np.all(s3.signature == 1.0)
    h3 = ambient_model(-1)
    assert h3.constraint == -1.0
    assert h3.signature[0] == -1.0 and np.all(h3.signature[1:] == 1.0)
    with pytest.raises(DomainError):
        ambient_model(2)


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_shape_operator_identities(metrics, eps):
    """trace = f > 0, det = K - eps, lambda2 - lambda1 = (4/sqrt3) sqrt(eps-K)."""
    gm = metrics[eps]
    for rho in sample_grid(gm, None, 200)[::20]:
        s = shape_operator(float(rho), gm)
        K = gauss_curvature(float(rho), gm)
        # eps - K formed from F directly: recovering it from K loses
        # everything once F^{8/3}/9 drops below ulp(eps)
        emk = eval_F(float(rho), gm.gp) ** (8.0 / 3.0) / 9.0
        if emk > 1e-10:
            assert K == pytest.approx(eps - emk, abs=1e-14)
        assert s.f > 0
        assert s.lambda1 * s.lambda2 == pytest.approx(-emk, abs=1e-12,
                                                      rel=1e-12)
        assert s.lambda2 - s.lambda1 == pytest.approx(
            (4.0 / SQRT3) * math.sqrt(emk), rel=1e-12)
        assert s.lambda1 == pytest.approx(-s.f / 2.0, rel=1e-14)


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_tangency(metrics, eps):
    rep = verify_biconservative_tangency(metrics[eps])
    assert rep.max_residual <= 1e-10


@pytest.mark.parametrize("eps", [1, 0, -1])
def test_codazzi(metrics, eps):
    rep = verify_codazzi(metrics[eps])
    assert rep.max_residual <= 1e-7
    assert rep.extra["closed_form_agreement"] <= 1e-9


def test_theta_generator_matches_rhs(metrics):
    gm = metrics[1]
    model = ambient_model(1)
    S = np.eye(4)
    rho = 0.4
    B = theta_generator(rho, gm)
    d1 = frame_ode_rhs(S, "theta", rho, gm, model)
    assert np.allclose(B @ S, d1, atol=1e-14)
    with pytest.raises(DomainError):
        frame_ode_rhs(S, "sideways", rho, gm, model)


def test_gridspec_validation():
    with pytest.raises(DomainError):
        GridSpec(0.0, 1.0, 0.0, 1.0, 1, 10)
    with pytest.raises(DomainError):
        GridSpec(1.0, 0.0, 0.0, 1.0, 10, 10)


def test_eps0_explicit_base_point():
    C = 2.7
    p = explicit_immersion_eps0(0.0, 0.0, C)
    assert np.allclose(p, [math.sqrt(C) / 3.0, 0.0, 0.0], atol=1e-15)
    # v-period 2 pi / 3
    u = 0.8
    a = explicit_immersion_eps0(u, 0.123, C)
    b = explicit_immersion_eps0(u, 0.123 + 2.0 * math.pi / 3.0, C)
    assert np.allclose(a, b, atol=1e-12)
    with pytest.raises(DomainError):
        explicit_immersion_eps0(0.0, 0.0, -1.0)


def test_eps0_explicit_conformal_metric():
    """Induced metric is C cosh^6 u (du^2 + dv^2)."""
    C = 1.9
    h = 1e-5
    for u0, v0 in ((0.0, 0.1), (0.7, 1.0), (-1.2, 2.0)):
        pu = (explicit_immersion_eps0(u0 + h, v0, C)
              - explicit_immersion_eps0(u0 - h, v0, C)) / (2 * h)
        pv = (explicit_immersion_eps0(u0, v0 + h, C)
              - explicit_immersion_eps0(u0, v0 - h, C)) / (2 * h)
        lam = C * math.cosh(u0) ** 6
        assert np.dot(pu, pu) == pytest.approx(lam, rel=1e-9)
        assert np.dot(pv, pv) == pytest.approx(lam, rel=1e-9)
        assert abs(np.dot(pu, pv)) <= 1e-9 * lam


def test_eps0_oracle_comparison(metrics):
    gm, grid = _grid(metrics, 0, n_rho=80, n_theta=80, half=6.0)
    assert grid.max_drift <= 1e-7
    assert induced_metric_error(grid) <= 1e-7
    res = compare_to_oracle(grid, gm)
    assert res["max_aligned_distance"] <= 1e-5
    assert res["mean_curvature_fd_error"] <= 1e-7


def test_eps1_constraints(metrics):
    gm, grid = _grid(metrics, 1, n_rho=70, n_theta=120)
    assert grid.constraint_drift <= 1e-8
    assert grid.max_drift <= 1e-7
    assert induced_metric_error(grid) <= 1e-7


def test_eps1_path_independence(metrics):
    gm = metrics[1]
    gp = gm.gp
    rm = gp.lattice.rho_minus
    spec = GridSpec(rm, rm + 2.0 * gp.lattice.period, 0.0, math.pi, 40, 60)
    model = ambient_model(1)
    a = integrate_immersion(gm, model, spec)
    b = integrate_immersion(gm, model, spec, order="theta_first")
    assert np.max(np.linalg.norm(a.points - b.points, axis=-1)) <= 1e-5
    with pytest.raises(DomainError):
        integrate_immersion(gm, model, spec, order="diagonal")


def test_epsm1_hyperboloid(metrics):
    gm, grid = _grid(metrics, -1, n_rho=50, n_theta=80, half=2.0)
    pts = grid.points
    # upper sheet of <Phi,Phi> = -1
    assert np.all(pts[..., 0] >= 1.0 - 1e-12)
    mink = -pts[..., 0] ** 2 + np.sum(pts[..., 1:] ** 2, axis=-1)
    assert np.max(np.abs(mink + 1.0)) <= 1e-7
    assert grid.constraint_drift <= 1e-7


def test_epsm1_quality_error_far_out(metrics):
    """Deep in the hyperbolic tail the Lorentz chart exhausts double
    precision; the integrator must refuse rather than emit garbage."""
    gm = metrics[-1]
    rm = gm.gp.lattice.rho_minus
    spec = GridSpec(rm - 9.0, rm + 9.0, 0.0, 2.0 * math.pi, 40, 120)
    with pytest.raises(IntegrationQualityError):
        integrate_immersion(gm, ambient_model(-1), spec)


def test_export_obj_and_csv(metrics, tmp_path):
    gm, grid = _grid(metrics, 1, n_rho=12, n_theta=9)
    obj = tmp_path / "m.obj"
    export_mesh(grid, "obj", str(obj))
    lines = obj.read_text().splitlines()
    nv = sum(1 for ln in lines if ln.startswith("v "))
    nf = sum(1 for ln in lines if ln.startswith("f "))
    assert nv == 12 * 9
    assert nf == 2 * 11 * 8

    csv = tmp_path / "m.csv"
    export_mesh(grid, "csv", str(csv))
    rows = csv.read_text().splitlines()
    assert rows[0] == "rho,theta,x0,x1,x2,x3,drift"
    assert len(rows) == 12 * 9 + 1
    # deterministic: a second export is bit-identical
    csv2 = tmp_path / "m2.csv"
    export_mesh(grid, "csv", str(csv2))
    assert csv.read_bytes() == csv2.read_bytes()

    with pytest.raises(ExportError):
        export_mesh(grid, "vtk", str(tmp_path / "m.vtk"))


def test_export_pole_collision(metrics, tmp_path):
    gm, grid = _grid(metrics, 1, n_rho=8, n_theta=8)
    with pytest.raises(ExportError) as exc:
        export_mesh(grid, "obj", str(tmp_path / "bad.obj"),
                    pole=grid.points[3, 4])
    assert "i=3" in str(exc.value) and "j=4" in str(exc.value)


def test_model_metric_mismatch(metrics):
    gm = metrics[1]
    spec = GridSpec(0.0, 1.0, 0.0, 1.0, 4, 4)
    with pytest.raises(DomainError):
        integrate_immersion(gm, ambient_model(0), spec)
