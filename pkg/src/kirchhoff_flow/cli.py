"""Command-line entry point.

Subcommands: validate | ground | nodal | continuation | doubling |
limit | oracle | suite.  Results go to files in the output directory
(override with --out or the KIRCHHOFF_FLOW_OUTDIR environment
variable); diagnostics go to standard error.  Exit codes: 0 success,
1 solver failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import Config, describe_config, load_config
from .errors import ConfigError, KirchhoffFlowError
from .flow import calibrate_eps_cone, check_cone_invariance, descend, random_smooth_field
from .minimax import (
    CriticalPoint,
    build_simplex,
    calibrate_scale,
    continuation_to_zero,
    minimax_nodal,
    mountain_pass_positive,
)
from .model import energy_perturbed
from .radial import Field, write_field_csv
from .reporting import (
    ensure_dir,
    run_manifest,
    write_csv,
    write_report,
    write_trace_csv,
)
from .study import (
    PipelineConfig,
    doubling_sweep,
    limit_study,
    shoot_schrodinger,
)


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _outdir(cfg: Config, override) -> str:
    path = override or os.environ.get("KIRCHHOFF_FLOW_OUTDIR") or cfg.output_dir
    return ensure_dir(path)


def _pipeline(cfg: Config) -> PipelineConfig:
    return PipelineConfig(
        flow=cfg.flow,
        pert0=cfg.perturbation,
        schedule=cfg.schedule,
        nodal_bumps=cfg.nodal_bumps,
        ground_bump=cfg.ground_bump,
        simplex_resolution=cfg.simplex_resolution,
    )


def _emit_point(cp: CriticalPoint, cfg: Config, out: str, name: str,
                extras: dict | None = None) -> None:
    write_field_csv(os.path.join(out, f"{name}_profile.csv"), cp.u, cfg.grid)
    payload = {
        "kind": cp.kind,
        "level": cp.level,
        "converged": cp.converged,
        "report": cp.report.as_dict(),
        "provenance": cp.provenance,
    }
    write_report(payload, os.path.join(out, f"{name}.json"))
    manifest = run_manifest(describe_config(cfg), cfg.seed, extras)
    write_report(manifest, os.path.join(out, f"{name}_manifest.json"))


def _cmd_validate(cfg: Config, out: str, args) -> int:
    rep = cfg.validation
    width = max(len(c.name) for c in rep.checks)
    for c in rep.checks:
        status = {True: "pass", False: "FAIL", None: "not checked"}[c.passed]
        _log(f"{c.name:<{width}}  {status:<12} {c.detail}")
    write_report(rep, os.path.join(out, "validation.json"))
    manifest = run_manifest(describe_config(cfg), cfg.seed)
    write_report(manifest, os.path.join(out, "validate_manifest.json"))
    return 0 if rep.ok else 1


def _cmd_ground(cfg: Config, out: str, args) -> int:
    cp = mountain_pass_positive(cfg.model, cfg.flow, cfg.ground_bump, cfg.grid)
    _emit_point(cp, cfg, out, "ground",
                {"level": cp.level, "iterations": cp.provenance.get("sweeps")})
    _log(f"ground level {cp.level:.10g} (converged={cp.converged})")
    return 0 if cp.converged else 1


def _make_simplex(cfg: Config):
    scale = cfg.simplex_scale
    if scale is None:
        scale = calibrate_scale(cfg.nodal_bumps, cfg.model, cfg.perturbation,
                                cfg.grid)
    return scale, build_simplex(cfg.nodal_bumps, scale,
                                cfg.simplex_resolution, cfg.grid)


def _cmd_nodal(cfg: Config, out: str, args) -> int:
    scale, simplex = _make_simplex(cfg)
    cp = minimax_nodal(cfg.model, cfg.perturbation, cfg.flow, simplex, cfg.grid)
    _emit_point(cp, cfg, out, "nodal",
                {"scale": scale, "eps_cone": cfg.flow.eps_cone,
                 "level": cp.level,
                 "iterations": cp.provenance.get("sweeps")})
    _log(f"nodal level {cp.level:.10g} (converged={cp.converged})")
    return 0 if cp.converged else 1


def _cmd_continuation(cfg: Config, out: str, args) -> int:
    scale, simplex = _make_simplex(cfg)
    cp = continuation_to_zero(cfg.model, cfg.perturbation, cfg.schedule,
                              cfg.flow, simplex, cfg.grid)
    _emit_point(cp, cfg, out, "continuation",
                {"scale": scale, "eps_cone": cfg.flow.eps_cone,
                 "level": cp.level,
                 "lam_levels": cp.provenance.get("lam_levels"),
                 "step_norms": cp.provenance.get("step_norms")})
    _log(f"continuation limit level {cp.level:.10g}")
    return 0 if cp.converged else 1


def _cmd_doubling(cfg: Config, out: str, args) -> int:
    report = doubling_sweep(cfg.model, cfg.b_values, _pipeline(cfg), cfg.grid,
                            cfg.shoot_tol)
    rows = [
        (r.b,
         "" if r.c_b is None else r.c_b,
         "" if r.m_b is None else r.m_b,
         "" if r.margin is None else r.margin,
         "" if r.verdict is None else str(r.verdict).lower())
        for r in report.rows
    ]
    write_csv(os.path.join(out, "doubling.csv"), "b,c_b,m_b,margin,verdict", rows)
    write_report(report, os.path.join(out, "doubling.json"))
    manifest = run_manifest(describe_config(cfg), cfg.seed,
                            {"b_star": report.b_star})
    write_report(manifest, os.path.join(out, "doubling_manifest.json"))
    for r in report.rows:
        _log(f"b={r.b}: c_b={r.c_b} m_b={r.m_b} margin={r.margin} [{r.status}]")
    ok = all(r.margin is not None and r.margin > 0.0
             for r in report.rows if r.status in ("ok", "oracle"))
    return 0 if ok and report.rows else 1


def _cmd_limit(cfg: Config, out: str, args) -> int:
    report = limit_study(cfg.model, [b for b in cfg.b_values if b > 0.0],
                         _pipeline(cfg), cfg.grid, cfg.shoot_tol)
    write_report(report, os.path.join(out, "limit.json"))
    write_csv(os.path.join(out, "limit.csv"), "b,dist_e,energy_gap",
              [(r.b, r.dist_e if r.dist_e is not None else "",
                r.energy_gap if r.energy_gap is not None else "")
               for r in report.rows])
    manifest = run_manifest(describe_config(cfg), cfg.seed)
    write_report(manifest, os.path.join(out, "limit_manifest.json"))
    _log(f"limit study monotone={report.monotone}")
    return 0 if report.monotone else 1


def _cmd_oracle(cfg: Config, out: str, args) -> int:
    k = args.nodes
    sol = shoot_schrodinger(cfg.model, k, cfg.grid, cfg.shoot_tol)
    write_field_csv(os.path.join(out, f"oracle_k{k}_profile.csv"), sol.u,
                    cfg.grid)
    payload = {
        "u0": sol.u0,
        "k_nodes": sol.k_nodes,
        "integrals": sol.integrals,
        "energy": sol.energy,
        "decay_defect": sol.decay_defect,
        "source": sol.source,
    }
    write_report(payload, os.path.join(out, f"oracle_k{k}.json"))
    manifest = run_manifest(describe_config(cfg), cfg.seed, {"k_nodes": k})
    write_report(manifest, os.path.join(out, f"oracle_k{k}_manifest.json"))
    _log(f"oracle k={k}: u0={sol.u0:.10g} energy={sol.energy:.10g}")
    return 0


def _cmd_suite(cfg: Config, out: str, args) -> int:
    """Invariant and property battery; nonzero exit on any failure."""
    checks: list[tuple[str, bool, str]] = []
    grid = cfg.grid
    model = cfg.model
    pert = cfg.perturbation
    rng = np.random.default_rng(cfg.seed)

    for check in cfg.validation.checks:
        if check.passed is not None:
            checks.append((f"hypothesis-{check.name}", bool(check.passed),
                           check.detail))

    # descent structure on seeded random fields
    from .flow import FlowWorkspace

    ws = FlowWorkspace(model, pert, grid)
    worst_ratio = float("inf")
    decreased = True
    for _ in range(20):
        u = random_smooth_field(rng, grid, amplitude=1.0).values
        t_u = ws.aux_solve(u)
        gap_sq = ws.disc.e_norm_sq(u - t_u)
        if gap_sq == 0.0:
            continue
        eps_fd = 1e-6
        up = ws.disc.energy_perturbed(u + eps_fd * (t_u - u))
        dn = ws.disc.energy_perturbed(u - eps_fd * (t_u - u))
        worst_ratio = min(worst_ratio, -(up - dn) / (2.0 * eps_fd) / gap_sq)
        new, accepted, _, e_new, _ = ws.line_search(
            u, t_u, cfg.flow, energy_u=ws.disc.energy_perturbed(u))
        decreased = decreased and accepted and e_new < ws.disc.energy_perturbed(u)
    checks.append(("descent-inequality", worst_ratio >= 0.999,
                   f"min directional ratio {worst_ratio:.6f}"))
    checks.append(("accepted-steps-decrease", decreased,
                   "every accepted step strictly decreased the energy"))

    # cone invariance at the calibrated radius
    eps0, inv_report = calibrate_eps_cone(model, pert, grid, cfg.seed,
                                          samples=40)
    sample = check_cone_invariance(60, [eps0], model, pert, grid, cfg.seed + 1)
    checks.append(("cone-invariance", sample.rows[0].violations == 0,
                   f"eps={eps0}: {sample.rows[0].violations} violations "
                   f"of {sample.rows[0].samples}"))

    # quadrature refinement and decomposition gap
    from .model import decomposition_gap
    from .radial import build_grid as _bg
    from .radial import integrate as _integrate

    fine = _bg(6.0, 1 << 13)
    exact = _integrate(np.exp(-fine.nodes / 2.0), fine)
    errs = []
    for n in (48, 96):
        g = _bg(6.0, n)
        errs.append(abs(_integrate(np.exp(-g.nodes / 2.0), g) - exact))
    checks.append(("quadrature-refinement", errs[0] / errs[1] >= 8.0,
                   f"error ratio {errs[0] / errs[1]:.2f}"))
    gaps = []
    for n in (600, 1200):
        g = _bg(12.0, n)
        rho_star = 0.02 * (50 + 1.0 / 3.0)
        u = Field.on_grid(g, (1.0 - (g.nodes / rho_star) ** 2)
                          * np.exp(-g.nodes**2))
        gaps.append(abs(decomposition_gap(u, model, g)))
    checks.append(("decomposition-gap-refinement", gaps[0] / gaps[1] >= 1.9,
                   f"gap ratio {gaps[0] / gaps[1]:.2f}"))

    payload = {
        "checks": [
            {"name": n, "passed": ok, "detail": d} for n, ok, d in checks
        ],
        "all_passed": all(ok for _, ok, _ in checks),
        "eps_cone_calibrated": eps0,
    }
    write_report(payload, os.path.join(out, "suite_report.json"))
    manifest = run_manifest(describe_config(cfg), cfg.seed,
                            {"suite_all_passed": payload["all_passed"],
                             "eps_cone_calibrated": eps0})
    write_report(manifest, os.path.join(out, "suite_manifest.json"))
    for name, ok, detail in checks:
        _log(f"{'pass' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if payload["all_passed"] else 1


_COMMANDS = {
    "validate": _cmd_validate,
    "ground": _cmd_ground,
    "nodal": _cmd_nodal,
    "continuation": _cmd_continuation,
    "doubling": _cmd_doubling,
    "limit": _cmd_limit,
    "oracle": _cmd_oracle,
    "suite": _cmd_suite,
}


def run_command(argv) -> int:
    parser = argparse.ArgumentParser(
        prog="kirchhoff-flow",
        description="Radial Kirchhoff-equation solver: ground states, "
                    "sign-changing solutions, and verification suites.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("config", help="path to a JSON config")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--nodes", type=int, default=0,
                        help="sign changes for the oracle subcommand")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return 2
    out = _outdir(cfg, args.out)
    try:
        return _COMMANDS[args.command](cfg, out, args)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return 2
    except KirchhoffFlowError as exc:
        _log(f"solver failure: {type(exc).__name__}: {exc}")
        return 1


def entry() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    entry()
