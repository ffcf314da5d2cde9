"""Command line front door: roots / profile / glue / verify / immerse / mesh.

Configuration comes from an optional JSON file (--config) with individual
flags winning over file values.  Exit codes: 0 success, 1 verification
failure, 2 invalid parameters, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import (CoverageError, DomainError, ExportError,
                     InadmissibleParameterError, IntegrationFailureError,
                     IntegrationQualityError)
from .geometry import (GluedMetric, completeness_comparison,
                       random_geodesic_probes, verify_bicons_pde,
                       verify_curvature_ode, verify_first_integral,
                       verify_frame_relations, verify_isothermal_form,
                       verify_laplace_identity)
from .gluing import (build_glued_profile, eval_F_many, eval_F_with_derivatives,
                     junction_smoothness_report, junctions_in)
from .immersion import (GridSpec, ambient_model, compare_to_oracle,
                        export_mesh, integrate_immersion,
                        verify_biconservative_tangency, verify_codazzi)
from .profile import find_roots, ProfileParams, solve_profile

DEFAULT_C = {-1: 0.0, 0: 1.0, 1: 3.0}

# pass/fail thresholds for cmd_verify, overridable with --tol NAME=VALUE
DEFAULT_TOLERANCES = {
    "curvature_ode": 1e-6,
    "laplace_identity": 1e-6,
    "bicons_pde": 1e-6,
    "isothermal_sigma_ode": 1e-6,
    "first_integral_alpha": 1e-6,
    "frame_connection_relations": 1e-7,
    "codazzi": 1e-7,
    "biconservative_tangency": 1e-10,
    "geodesic_drift": 1e-8,
}


@dataclass(frozen=True)
class RunConfig:
    """One run's parameters; JSON-serializable and flag-overridable."""

    eps: int = 1
    C: float | None = None
    window: tuple | None = None       # (rho_min, rho_max, theta_min, theta_max)
    grid: tuple = (120, 120)          # (n_rho, n_theta)
    tolerances: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.eps not in (-1, 0, 1):
            raise DomainError(f"eps must be -1, 0 or +1, got {self.eps}")
        nr, nt = self.grid
        if nr < 2 or nt < 2:
            raise DomainError("grid must be at least 2x2")
        if self.window is not None:
            w = self.window
            if len(w) != 4 or not all(math.isfinite(v) for v in w):
                raise DomainError("window must be 4 finite numbers")
            if not (w[1] > w[0] and w[3] > w[2]):
                raise DomainError("window must be non-degenerate")
        for k, v in self.tolerances.items():
            if k not in DEFAULT_TOLERANCES:
                raise DomainError(f"unknown tolerance {k!r}")
            if not v > 0:
                raise DomainError(f"tolerance {k} must be positive")
        if self.fmt not in ("obj", "csv", "json"):
            raise DomainError(f"format must be obj, csv or json, got {self.fmt}")

    @property
    def C_value(self) -> float:
        return DEFAULT_C[self.eps] if self.C is None else self.C


def emit_config(cfg: RunConfig) -> str:
    return json.dumps(asdict(cfg), indent=2)


def parse_config(text: str) -> RunConfig:
    d = json.loads(text)
    for key in ("window", "grid"):
        if d.get(key) is not None:
            d[key] = tuple(d[key])
    return RunConfig(**d)


def _merge_flags(cfg: RunConfig, args) -> RunConfig:
    updates = {}
    if args.eps is not None:
        updates["eps"] = args.eps
    if args.C is not None:
        updates["C"] = args.C
    if args.window is not None:
        updates["window"] = tuple(args.window)
    if args.grid is not None:
        updates["grid"] = tuple(args.grid)
    if args.out is not None:
        updates["out"] = args.out
    if args.format is not None:
        updates["fmt"] = args.format
    if args.workers is not None:
        updates["workers"] = args.workers
    if args.tol:
        tols = dict(cfg.tolerances)
        for item in args.tol:
            name, _, val = item.partition("=")
            if not val:
                raise DomainError(f"--tol expects NAME=VALUE, got {item!r}")
            tols[name] = float(val)
        updates["tolerances"] = tols
    return replace(cfg, **updates)


def _build(cfg: RunConfig, min_coverage: float = 12.0):
    """Profile -> glued profile -> metric, with coverage matching the window."""
    coverage = min_coverage
    if cfg.eps != 1 and cfg.window is not None:
        # the table must reach every folded rho in the requested window
        params = ProfileParams(eps=cfg.eps, C=cfg.C_value)
        rm = _rho_minus_estimate(params)
        coverage = max(min_coverage, abs(cfg.window[0] - rm) + 2.0,
                       abs(cfg.window[1] - rm) + 2.0)
    sol = solve_profile(cfg.eps, cfg.C_value, coverage=coverage)
    gp = build_glued_profile(sol)
    return gp, GluedMetric(gp)


def _rho_minus_estimate(params: ProfileParams) -> float:
    # rho_minus = rho0(xi02); a tiny throwaway solve is cheaper than a guess
    return solve_profile(params.eps, params.C, coverage=1.0).rho_minus


def _default_window(gp) -> tuple:
    lat = gp.lattice
    if gp.periodic:
        return (lat.rho_minus, lat.rho_minus + 2.0 * lat.period,
                0.0, 2.0 * math.pi)
    half = 6.0 if gp.eps == 0 else 3.0
    return (lat.rho_minus - half, lat.rho_minus + half, 0.0, 2.0 * math.pi)


def _csv_rows(header, rows):
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(out) + "\n"


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_roots(cfg: RunConfig) -> int:
    roots = find_roots(ProfileParams(eps=cfg.eps, C=cfg.C_value))
    payload = {"eps": cfg.eps, "C": cfg.C_value, "xi01": roots.xi01,
               "xi02": roots.xi02, "xi_star": roots.xi_star}
    print(f"{'quantity':>10}  value")
    for k in ("xi01", "xi02", "xi_star"):
        print(f"{k:>10}  {payload[k]:.17g}")
    _emit(json.dumps(payload, indent=2) + "\n", cfg.out)
    return 0


def _profile_csv(cfg: RunConfig, gp, window_rho) -> str:
    rho = np.linspace(window_rho[0], window_rho[1], cfg.grid[0])
    F = eval_F_many(rho, gp)
    gamma = 1.0 / F
    K = gp.eps - F ** (8.0 / 3.0) / 9.0
    f = 2.0 * F ** (4.0 / 3.0) / (3.0 * math.sqrt(3.0))
    return _csv_rows(("rho", "F", "Gamma", "K", "f"),
                     zip(rho, F, gamma, K, f))


def cmd_profile(cfg: RunConfig) -> int:
    """CSV of the base block (one monotone arc of F)."""
    gp, gm = _build(cfg)
    lat = gp.lattice
    hi = lat.rho_plus if gp.periodic else lat.rho_minus + gp.block_width
    text = _profile_csv(cfg, gp, (lat.rho_minus, hi))
    _emit(text, cfg.out)
    return 0


def cmd_glue(cfg: RunConfig) -> int:
    """CSV over the glued window plus the junction smoothness report."""
    gp, gm = _build(cfg)
    window = cfg.window or _default_window(gp)
    text = _profile_csv(cfg, gp, window[:2])
    _emit(text, cfg.out)
    report = junction_smoothness_report(gp, window[:2])
    report["junction_positions"] = junctions_in(window[:2], gp.lattice)
    print(json.dumps({k: report[k] for k in
                      ("junction_positions", "max_mismatch",
                       "max_analytic_mismatch")}, indent=2))
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    # extra coverage so the length-50 geodesic probes stay inside the table
    gp, gm = _build(cfg, min_coverage=60.0)
    tol = {**DEFAULT_TOLERANCES, **cfg.tolerances}
    reports = [
        verify_curvature_ode(gm),
        verify_laplace_identity(gm),
        verify_bicons_pde(gm),
        verify_isothermal_form(gm),
        verify_first_integral(gm),
        verify_frame_relations(gm),
        verify_codazzi(gm),
        verify_biconservative_tangency(gm),
    ]
    failures = []
    entries = []
    for rep in reports:
        limit = tol[rep.identity]
        value = (rep.extra["relative_spread"]
                 if rep.identity == "first_integral_alpha"
                 else rep.max_residual)
        ok = value <= limit
        if not ok:
            failures.append(rep.identity)
        entry = json.loads(rep.to_json())
        entry.update({"threshold": limit, "checked_value": value, "pass": ok})
        entries.append(entry)

    comp = completeness_comparison(gm)
    if not comp["positive_semidefinite"]:
        failures.append("completeness_comparison")
    probes = random_geodesic_probes(gm, n=5, length=50.0, seed=1,
                                    workers=cfg.workers)
    geo_drift = max(probes["max_speed_drift"], probes["max_clairaut_drift"])
    if geo_drift > tol["geodesic_drift"]:
        failures.append("geodesic_drift")

    payload = {
        "eps": cfg.eps, "C": cfg.C_value,
        "sign_convention": reports[0].sign_convention,
        "identities": entries,
        "completeness": comp,
        "geodesic_probes": probes,
        "failures": failures,
    }
    _emit(json.dumps(payload, indent=2, default=float) + "\n", cfg.out)
    if failures:
        print("FAILED: " + ", ".join(failures), file=sys.stderr)
        return 1
    return 0


def _immersion_grid(cfg: RunConfig, gp, gm):
    window = cfg.window or _default_window(gp)
    spec = GridSpec(*window, cfg.grid[0], cfg.grid[1])
    model = ambient_model(cfg.eps)
    return integrate_immersion(gm, model, spec, workers=cfg.workers)


def cmd_immerse(cfg: RunConfig) -> int:
    gp, gm = _build(cfg)
    grid = _immersion_grid(cfg, gp, gm)
    report = {"eps": cfg.eps, "C": cfg.C_value,
              "max_drift": grid.max_drift,
              "constraint_drift": grid.constraint_drift}
    if cfg.eps == 0:
        report["oracle"] = compare_to_oracle(grid, gm)
    if cfg.fmt == "json":
        _emit(json.dumps(report, indent=2, default=float) + "\n", cfg.out)
    else:
        path = cfg.out or f"immersion_eps{cfg.eps}.{cfg.fmt}"
        export_mesh(grid, cfg.fmt, path)
        print(json.dumps(report, indent=2, default=float))
    return 0


def cmd_mesh(cfg: RunConfig) -> int:
    gp, gm = _build(cfg)
    grid = _immersion_grid(cfg, gp, gm)
    fmt = "obj" if cfg.fmt == "json" else cfg.fmt
    path = cfg.out or f"mesh_eps{cfg.eps}.{fmt}"
    export_mesh(grid, fmt, path)
    print(json.dumps({"path": path, "vertices": cfg.grid[0] * cfg.grid[1],
                      "triangles": 2 * (cfg.grid[0] - 1) * (cfg.grid[1] - 1),
                      "max_drift": grid.max_drift}, indent=2))
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

_COMMANDS = {
    "roots": cmd_roots,
    "profile": cmd_profile,
    "glue": cmd_glue,
    "verify": cmd_verify,
    "immerse": cmd_immerse,
    "mesh": cmd_mesh,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bicons",
                                description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(_COMMANDS))
    p.add_argument("--config", help="JSON config file; flags win over it")
    p.add_argument("--eps", type=int, choices=(-1, 0, 1))
    p.add_argument("--C", type=float)
    p.add_argument("--window", type=float, nargs=4,
                   metavar=("RHO_MIN", "RHO_MAX", "TH_MIN", "TH_MAX"))
    p.add_argument("--grid", type=int, nargs=2, metavar=("N_RHO", "N_THETA"))
    p.add_argument("--tol", action="append", metavar="NAME=VALUE")
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--format", choices=("obj", "csv", "json"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig()
        if args.config:
            with open(args.config) as fh:
                cfg = parse_config(fh.read())
        cfg = _merge_flags(cfg, args)
        return _COMMANDS[args.command](cfg)
    except (DomainError, InadmissibleParameterError) as e:
        print(f"invalid parameters: {e}", file=sys.stderr)
        return 2
    except (IntegrationFailureError, IntegrationQualityError, CoverageError,
            ExportError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
