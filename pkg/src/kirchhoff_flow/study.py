"""Independent oracles and the energy-doubling / small-b experiments.

The local (b = 0) radial equation a u'' + (2a/rho) u' = V u - f(u) is
solved by classical shooting: bisection on the initial amplitude u(0)
targeting a prescribed number of interior sign changes plus decay.  For
constant potentials an exact dilation then produces solutions of the
nonlocal problem: if w solves the local equation and s solves
a s^2 = a + b K s with K = int |grad w|^2, then u(x) = w(x/s) solves the
full equation with coefficient b, because int |grad u|^2 = s K makes the
diffusion prefactor equal a s^2.  Both oracles are independent of the
descent/minimax machinery and are used to cross-check its levels.

The doubling sweep compares the least sign-changing level m_b with twice
the positive ground level c_b along a decreasing sequence of b, and the
limit study tracks the convergence of the sign-changing branch to its
local limit as b -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, KirchhoffFlowError, OracleFailure, UnsupportedPotentialError
from .flow import FlowConfig, FlowWorkspace
from .minimax import (
    BumpSpec,
    ContinuationSchedule,
    CriticalPoint,
    SimplexState,
    build_simplex,
    calibrate_scale,
    continuation_to_zero,
    mountain_pass_positive,
)
from .model import (
    ConstantPotential,
    ModelParams,
    PerturbationParams,
    PowerNonlinearity,
    energy_report,
)
from .radial import Field, RadialGrid, count_sign_changes, integrate


# ---------------------------------------------------------------------------
# shooting oracle
# ---------------------------------------------------------------------------


@dataclass
class OracleSolution:
    """Radial profile from an independent oracle, with its invariants."""

    u: Field
    u0: float
    k_nodes: int
    integrals: dict  # grad_sq, v_mass, f_mass, l2_sq
    energy: float
    source: str  # "shooting" | "dilation"
    grid: RadialGrid
    fine_rho: np.ndarray | None = None
    fine_u: np.ndarray | None = None
    decay_defect: float = 0.0


def _shoot_rhs_factory(a: float, v_of, f_scalar):
    def rhs(rho, u, v):
        fu = f_scalar(u)
        if rho == 0.0:
            return v, (v_of(0.0) * u - fu) / (3.0 * a)
        return v, (v_of(rho) * u - fu) / a - 2.0 * v / rho

    return rhs


def _integrate_rk4(A, a, v_of, f_scalar, h, rho_max, cap, store=False):
    """Classical fixed-step fourth-order integration from rest at rho=0.

    Returns (crossings, rho_stop, trace) where trace is the full (u, v)
    history when store is set.
    """
    rhs = _shoot_rhs_factory(a, v_of, f_scalar)
    n = int(round(rho_max / h))
    u, v = A, 0.0
    prev = 1.0 if A > 0 else -1.0
    crossings = 0
    us = [u] if store else None
    vs = [0.0] if store else None
    rho = 0.0
    for i in range(n):
        k1u, k1v = rhs(rho, u, v)
        k2u, k2v = rhs(rho + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v)
        k3u, k3v = rhs(rho + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v)
        k4u, k4v = rhs(rho + h, u + h * k3u, v + h * k3v)
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        rho = (i + 1) * h
        if store:
            us.append(u)
            vs.append(v)
        s = 1.0 if u > 0.0 else (-1.0 if u < 0.0 else prev)
        if s * prev < 0.0:
            crossings += 1
            prev = s
        if abs(u) > cap:
            return crossings, rho, (us, vs)
    return crossings, rho, (us, vs)


def shoot_schrodinger(params: ModelParams, k_nodes: int, grid: RadialGrid,
                      shoot_tol: float = 1e-6) -> OracleSolution:
    """Shooting solution of the b = 0 problem with k_nodes sign changes.

    Bisects the initial amplitude between trajectories with at most
    k_nodes crossings and at least k_nodes + 1, then truncates the final
    trajectory at its decay minimum (|u| + |u'| below shoot_tol) and
    zeroes the tail.  k_nodes = 0 gives the positive ground state.
    """
    if params.b != 0.0:
        raise ConfigError(f"the shooting oracle needs b = 0, got b={params.b}")
    if k_nodes < 0:
        raise ConfigError(f"k_nodes must be nonnegative, got {k_nodes}")
    a = params.a
    pot = params.potential
    v_of = lambda rho: float(pot.values(np.array([rho]))[0])  # noqa: E731
    if pot.is_constant:
        v0 = float(pot.values(np.zeros(1))[0])
        v_of = lambda rho: v0  # noqa: E731
    f_scalar = params.nonlinearity.f_scalar
    # the local profiles live on unit scales; integrating past the
    # departure point only tracks the trapped-well oscillation
    rho_max = min(grid.r_max, max(60.0, 30.0 / math.sqrt(a)))
    h_ode = min(grid.h / 2.0, 0.005)

    def classify(A):
        c, _, _ = _integrate_rk4(A, a, v_of, f_scalar, h_ode, rho_max,
                                 cap=3.0 * A + 2.0)
        return c

    lo, hi = None, None
    A = 1.0
    for _ in range(80):
        if classify(A) >= k_nodes + 1:
            hi = A
            break
        lo = A
        A *= 2.0
    if hi is None:
        raise OracleFailure(
            f"no amplitude below {A} produces {k_nodes + 1} crossings; "
            "bisection bracket not found"
        )
    if lo is None:
        lo = 1e-6 * hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if classify(mid) >= k_nodes + 1:
            hi = mid
        else:
            lo = mid
    amplitude = 0.5 * (lo + hi)

    _, _, (us, vs) = _integrate_rk4(amplitude, a, v_of, f_scalar, h_ode,
                                    rho_max, cap=math.inf, store=True)
    us = np.array(us)
    vs = np.array(vs)
    rho_fine = h_ode * np.arange(len(us))
    crossings = np.flatnonzero(us[:-1] * us[1:] < 0.0)
    start = rho_fine[crossings[-1]] + 0.25 if len(crossings) else 1.0
    window = rho_fine >= start
    defect = np.abs(us) + np.abs(vs)
    icut = int(np.flatnonzero(window)[0] + np.argmin(defect[window]))
    decay_defect = float(defect[icut])
    if decay_defect > shoot_tol:
        raise OracleFailure(
            f"decay defect {decay_defect:.3e} exceeds shoot_tol {shoot_tol} "
            f"at rho={rho_fine[icut]:.2f}; stiff departure before decay"
        )
    us[icut:] = 0.0
    vs[icut:] = 0.0

    # integrals on the fine trajectory (Simpson), derivative from the ODE
    n_f = len(rho_fine) - 1
    if n_f % 2 == 1:
        rho_fine = rho_fine[:-1]
        us = us[:-1]
        vs = vs[:-1]
        n_f -= 1
    coeff = np.ones(n_f + 1)
    coeff[1:-1:2] = 4.0
    coeff[2:-1:2] = 2.0
    w_f = 4.0 * math.pi * (h_ode / 3.0) * coeff * rho_fine**2
    grad_sq = float(w_f @ vs**2)
    vpot_f = pot.values(rho_fine)
    v_mass = float(w_f @ (vpot_f * us**2))
    f_mass = float(w_f @ params.nonlinearity.F(us))
    l2_sq = float(w_f @ us**2)
    energy0 = 0.5 * (a * grad_sq + v_mass) - f_mass

    spline = CubicSpline(rho_fine, us, bc_type=((1, 0.0), (1, 0.0)))
    vals = np.where(grid.nodes <= rho_fine[-1], spline(grid.nodes), 0.0)
    u_field = Field.on_grid(grid, vals)
    got_nodes = count_sign_changes(u_field, threshold=1e-10 * abs(amplitude))
    if got_nodes != k_nodes:
        raise OracleFailure(
            f"truncated profile has {got_nodes} sign changes, wanted {k_nodes}"
        )
    return OracleSolution(
        u=u_field,
        u0=amplitude,
        k_nodes=k_nodes,
        integrals={"grad_sq": grad_sq, "v_mass": v_mass,
                   "f_mass": f_mass, "l2_sq": l2_sq},
        energy=energy0,
        source="shooting",
        grid=grid,
        fine_rho=rho_fine,
        fine_u=us,
        decay_defect=decay_defect,
    )


# ---------------------------------------------------------------------------
# dilation oracle
# ---------------------------------------------------------------------------


def dilation_factor(a: float, b: float, grad_sq: float) -> float:
    """Positive root of a s^2 = a + b K s (s = 1 when b = 0)."""
    bk = b * grad_sq
    return (bk + math.sqrt(bk * bk + 4.0 * a * a)) / (2.0 * a)


def dilation_oracle(w: OracleSolution, a: float, b: float) -> OracleSolution:
    """Exact solution of the nonlocal problem by stretching a local one.

    Needs a constant potential: u(x) = w(x/s) with a s^2 = a + b K s,
    K = int |grad w|^2.  Then int |grad u|^2 = s K, the diffusion
    prefactor is a + b s K = a s^2, and the stretched local equation is
    recovered exactly.  Integrals and the energy are assembled from the
    stored local integrals; the profile is resampled by cubic spline.
    """
    if w.source not in ("shooting", "dilation"):
        raise ConfigError(f"unknown oracle source {w.source!r}")
    if b < 0:
        raise ConfigError(f"nonlocal coefficient must be >= 0, got b={b}")
    k_grad = w.integrals["grad_sq"]
    s = dilation_factor(a, b, k_grad)
    grid = w.grid
    if w.fine_rho is None:
        raise ConfigError("oracle solution lacks its fine trajectory")
    spline = CubicSpline(w.fine_rho, w.fine_u, bc_type=((1, 0.0), (1, 0.0)))
    scaled = grid.nodes / s
    vals = np.where(scaled <= w.fine_rho[-1], spline(scaled), 0.0)
    u_field = Field.on_grid(grid, vals)
    integrals = {
        "grad_sq": s * k_grad,
        "v_mass": s**3 * w.integrals["v_mass"],
        "f_mass": s**3 * w.integrals["f_mass"],
        "l2_sq": s**3 * w.integrals["l2_sq"],
    }
    energy = (0.5 * a * s * k_grad
              + 0.5 * s**3 * w.integrals["v_mass"]
              + 0.25 * b * (s * k_grad) ** 2
              - s**3 * w.integrals["f_mass"])
    return OracleSolution(
        u=u_field,
        u0=w.u0,
        k_nodes=w.k_nodes,
        integrals=integrals,
        energy=energy,
        source="dilation",
        grid=grid,
        fine_rho=w.fine_rho,
        fine_u=w.fine_u,
        decay_defect=w.decay_defect,
    )


def oracle_for_model(params: ModelParams, k_nodes: int, grid: RadialGrid,
                     shoot_tol: float = 1e-6) -> OracleSolution:
    """Shooting at b = 0 followed by the exact dilation to the model's b."""
    if not params.potential.is_constant:
        raise UnsupportedPotentialError(
            "the dilation oracle needs a constant potential"
        )
    local = ModelParams(a=params.a, b=0.0, potential=params.potential,
                        nonlinearity=params.nonlinearity, mu=params.mu)
    w = shoot_schrodinger(local, k_nodes, grid, shoot_tol)
    if params.b == 0.0:
        return w
    return dilation_oracle(w, params.a, params.b)


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    """Bundle of solver settings shared by the sweep experiments."""

    flow: FlowConfig
    pert0: PerturbationParams
    schedule: ContinuationSchedule
    nodal_bumps: BumpSpec
    ground_bump: BumpSpec
    simplex_resolution: int = 6

    def simplex_for(self, params: ModelParams, grid: RadialGrid) -> SimplexState:
        scale = calibrate_scale(self.nodal_bumps, params, self.pert0, grid)
        return build_simplex(self.nodal_bumps, scale, self.simplex_resolution,
                             grid)


@dataclass
class DoublingRow:
    b: float
    c_b: float | None
    m_b: float | None
    margin: float | None
    verdict: bool | None
    oracle_c_b: float | None = None
    oracle_rel_err: float | None = None
    status: str = "ok"


@dataclass
class DoublingReport:
    rows: list[DoublingRow] = field(default_factory=list)
    m0: float | None = None
    c0: float | None = None
    m0_extrapolated: float | None = None
    c0_extrapolated: float | None = None
    b_star: float | None = None

    def as_dict(self):
        return {
            "rows": [
                {
                    "b": r.b, "c_b": r.c_b, "m_b": r.m_b, "margin": r.margin,
                    "verdict": r.verdict, "oracle_c_b": r.oracle_c_b,
                    "oracle_rel_err": r.oracle_rel_err, "status": r.status,
                }
                for r in self.rows
            ],
            "m0": self.m0,
            "c0": self.c0,
            "m0_extrapolated": self.m0_extrapolated,
            "c0_extrapolated": self.c0_extrapolated,
            "b_star": self.b_star,
        }


def _with_b(params: ModelParams, b: float) -> ModelParams:
    return ModelParams(a=params.a, b=b, potential=params.potential,
                       nonlinearity=params.nonlinearity, mu=params.mu)


def ground_level(params: ModelParams, pipeline: PipelineConfig,
                 grid: RadialGrid) -> CriticalPoint:
    """Positive ground state by the segment deformation."""
    return mountain_pass_positive(params, pipeline.flow, pipeline.ground_bump,
                                  grid)


def nodal_level(params: ModelParams, pipeline: PipelineConfig,
                grid: RadialGrid) -> CriticalPoint:
    """Least sign-changing level by perturbed minimax plus continuation."""
    simplex = pipeline.simplex_for(params, grid)
    return continuation_to_zero(params, pipeline.pert0, pipeline.schedule,
                                pipeline.flow, simplex, grid)


def doubling_sweep(params_base: ModelParams, b_values, pipeline: PipelineConfig,
                   grid: RadialGrid, shoot_tol: float = 1e-6) -> DoublingReport:
    """Margins m_b - 2 c_b along decreasing b, with oracle cross-checks.

    The b = 0 row uses the shooting oracle for both sides (k = 0 for the
    ground level and k = 1 for the least radial sign-changing level; the
    latter is the natural least-energy candidate and is recorded as an
    assumption of the experiment, not a theorem).  Sub-solve failures
    mark their row incomplete without aborting the sweep; the empirical
    b_star is the largest b whose row and all rows below completed with
    positive margin.
    """
    if not params_base.potential.is_constant:
        raise UnsupportedPotentialError("the doubling sweep needs constant V")
    report = DoublingReport()
    local = _with_b(params_base, 0.0)
    w_ground = shoot_schrodinger(local, 0, grid, shoot_tol)
    w_nodal = shoot_schrodinger(local, 1, grid, shoot_tol)
    report.c0 = w_ground.energy
    report.m0 = w_nodal.energy
    for b in b_values:
        if b == 0.0:
            margin = report.m0 - 2.0 * report.c0
            report.rows.append(DoublingRow(
                b=0.0, c_b=report.c0, m_b=report.m0, margin=margin,
                verdict=margin > 0.0, oracle_c_b=report.c0,
                oracle_rel_err=0.0, status="oracle",
            ))
            continue
        params = _with_b(params_base, b)
        row = DoublingRow(b=b, c_b=None, m_b=None, margin=None, verdict=None)
        try:
            ground = ground_level(params, pipeline, grid)
            if not ground.converged:
                raise KirchhoffFlowError("ground deformation did not converge")
            row.c_b = ground.level
            oracle = dilation_oracle(w_ground, params.a, b)
            row.oracle_c_b = oracle.energy
            row.oracle_rel_err = abs(ground.level - oracle.energy) / abs(oracle.energy)
        except KirchhoffFlowError as exc:
            row.status = f"ground failed: {exc}"
            report.rows.append(row)
            continue
        try:
            nodal = nodal_level(params, pipeline, grid)
            if not nodal.converged:
                raise KirchhoffFlowError("nodal pipeline did not converge")
            row.m_b = nodal.level
        except KirchhoffFlowError as exc:
            row.status = f"nodal failed: {exc}"
            report.rows.append(row)
            continue
        row.margin = row.m_b - 2.0 * row.c_b
        row.verdict = row.margin > 0.0
        report.rows.append(row)

    complete = [r for r in report.rows if r.margin is not None and r.b > 0.0]
    complete.sort(key=lambda r: r.b)
    if complete:
        smallest = sorted({r.b for r in complete})[:3]
        pts = [(r.b, r.c_b, r.m_b) for r in complete if r.b in smallest]
        if len(pts) >= 2:
            bs = np.array([p[0] for p in pts])
            cs = np.array([p[1] for p in pts])
            ms = np.array([p[2] for p in pts])
            report.c0_extrapolated = float(np.polyfit(bs, cs, 1)[1])
            report.m0_extrapolated = float(np.polyfit(bs, ms, 1)[1])
        b_star = None
        for r in complete:
            if r.margin > 0.0:
                b_star = r.b
            else:
                break
        report.b_star = b_star
    return report


@dataclass
class LimitRow:
    b: float
    dist_e: float | None
    energy_gap: float | None
    status: str = "ok"


@dataclass
class LimitReport:
    rows: list[LimitRow] = field(default_factory=list)
    w0_energy: float | None = None
    monotone: bool | None = None
    fit_slope: float | None = None

    def as_dict(self):
        return {
            "rows": [
                {"b": r.b, "dist_e": r.dist_e, "energy_gap": r.energy_gap,
                 "status": r.status}
                for r in self.rows
            ],
            "w0_energy": self.w0_energy,
            "monotone": self.monotone,
            "fit_slope": self.fit_slope,
        }


def limit_study(params_base: ModelParams, b_seq, pipeline: PipelineConfig,
                grid: RadialGrid, shoot_tol: float = 1e-6) -> LimitReport:
    """Convergence of the sign-changing branch to the local limit.

    Computes nodal solutions along the decreasing b sequence, compares
    them with the k = 1 shooting profile in the working norm, and fits
    |I(w_b) - I0(w0)| against a linear-in-b law (first-order effect of
    the nonlocal term).  Signs are aligned before measuring distances.
    """
    if not params_base.potential.is_constant:
        raise UnsupportedPotentialError("the limit study needs constant V")
    report = LimitReport()
    local = _with_b(params_base, 0.0)
    w0 = shoot_schrodinger(local, 1, grid, shoot_tol)
    report.w0_energy = w0.energy
    disc = FlowWorkspace(local, None, grid).disc
    w0_vals = w0.u.values
    for b in sorted(b_seq, reverse=True):
        row = LimitRow(b=b, dist_e=None, energy_gap=None)
        try:
            nodal = nodal_level(_with_b(params_base, b), pipeline, grid)
            if not nodal.converged:
                raise KirchhoffFlowError("nodal pipeline did not converge")
            vals = nodal.u.values
            if disc.e_norm(vals - w0_vals) > disc.e_norm(vals + w0_vals):
                vals = -vals
            row.dist_e = disc.e_norm(vals - w0_vals)
            row.energy_gap = abs(nodal.level - w0.energy)
        except KirchhoffFlowError as exc:
            row.status = f"failed: {exc}"
        report.rows.append(row)
    good = [r for r in report.rows if r.dist_e is not None]
    if len(good) >= 2:
        dists = [r.dist_e for r in good]  # rows sorted by decreasing b
        report.monotone = all(d1 > d2 for d1, d2 in zip(dists, dists[1:]))
        bs = np.array([r.b for r in good])
        gaps = np.array([r.energy_gap for r in good])
        report.fit_slope = float((bs @ gaps) / (bs @ bs))
    return report
