"""Damped descending flow with invariant sign cones.

The auxiliary map u -> v solves the linear problem with coefficients
frozen at u,

    -(a + b*int|grad u|^2) Lap(v) + V v + lam*(int u^2)^alpha v
        = f(u) + beta*|u|^(r-2)*u,      v(r_max) = 0, v'(0) = 0,

a strictly diagonally dominant tridiagonal system (an M-matrix, so the
discrete maximum principle holds and one-signed data produce one-signed
solutions).  Fixed points of the map are exactly the zeros of the nodal
strong-form residual, and the discrete duality of the model module gives

    J'(u)[u - v] = ||u - v||_E^2 + b*int|grad u|^2 * |u - v|_grad^2
                   + lam*(int u^2)^alpha * int (u-v)^2  >=  ||u - v||_E^2

to rounding, so u - v is always a descent direction and a backtracking
step with an Armijo fraction of the guaranteed quadratic decrease is
accepted after finitely many halvings.

The positive and negative cones are tracked through the computable
surrogate distances dist(u, P^-) ~ ||u^+||_E and dist(u, P^+) ~ ||u^-||_E;
the auxiliary map keeps the eps-neighborhoods of the cones invariant for
eps below an empirically calibrated threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigError, NumericalError, StepFailure
from .model import Discretization, ModelParams, PerturbationParams
from .radial import Field, RadialGrid, split_signs


@dataclass(frozen=True)
class FlowConfig:
    """Stopping and damping knobs of the descending flow."""

    tol: float = 1e-4
    max_iter: int = 20000
    step0: float = 1.0
    backtrack: float = 0.5
    armijo: float = 0.1
    eps_cone: float = 0.05

    def __post_init__(self):
        if not (self.tol > 0):
            raise ConfigError(f"flow tolerance must be positive, got {self.tol}")
        if not (0.0 < self.step0 <= 1.0):
            raise ConfigError(f"step0 must lie in (0, 1], got {self.step0}")
        if not (0.0 < self.backtrack < 1.0):
            raise ConfigError(f"backtrack factor must lie in (0, 1), got {self.backtrack}")
        if not (0.0 < self.armijo < 1.0):
            raise ConfigError(f"armijo fraction must lie in (0, 1), got {self.armijo}")
        if not (self.eps_cone > 0):
            raise ConfigError(f"eps_cone must be positive, got {self.eps_cone}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be at least 1, got {self.max_iter}")


@dataclass
class FlowResult:
    """Outcome of a descend run."""

    u: Field
    iterations: int
    converged: bool
    energy_trace: list[float]
    fixed_point_gap: float
    cone_dist_plus: float
    cone_dist_minus: float
    residual_sup: float
    stalled: bool = False


_MIN_STEP = 1e-13


class FlowWorkspace:
    """Shared per-run state: discretization plus the frozen band template."""

    def __init__(self, params: ModelParams, pert: PerturbationParams | None,
                 grid: RadialGrid):
        self.disc = Discretization(params, pert, grid)
        self.grid = grid
        n = grid.n
        flux = self.disc.flux
        # symmetric tridiagonal stiffness: diag_i = flux_{i-1}+flux_i,
        # off_i = -flux_i, for unknowns v_0..v_{n-1} (v_n = 0 eliminated)
        kdiag = np.empty(n)
        kdiag[0] = flux[0]
        kdiag[1:] = flux[:-1] + flux[1:]
        self._kdiag = kdiag
        self._koff = -flux[: n - 1]
        self._mass = self.disc.cv[:-1]
        self._vmass = self._mass * self.disc.v_nodes[:-1]

    def solve_linear(self, coef: float, shift: float,
                     source: np.ndarray) -> np.ndarray:
        """Solve coef*L(v) + (V + shift)*v = source with v(r_max) = 0.

        Linear in the source for frozen (coef, shift); the system is a
        strictly diagonally dominant symmetric M-matrix after scaling by
        the cell volumes.
        """
        n = self.grid.n
        if not (np.isfinite(coef) and np.isfinite(shift)):
            raise NumericalError("non-finite frozen coefficients in auxiliary solve", 0)
        rhs = self._mass * source[:-1]
        if not np.all(np.isfinite(rhs)):
            row = int(np.flatnonzero(~np.isfinite(rhs))[0])
            raise NumericalError("non-finite right-hand side in auxiliary solve", row)
        ab = np.zeros((3, n))
        ab[0, 1:] = coef * self._koff
        ab[1, :] = coef * self._kdiag + self._vmass + shift * self._mass
        ab[2, :-1] = coef * self._koff
        sol = solve_banded((1, 1), ab, rhs, check_finite=False,
                           overwrite_ab=True, overwrite_b=True)
        if not np.all(np.isfinite(sol)):
            row = int(np.flatnonzero(~np.isfinite(sol))[0])
            raise NumericalError("non-finite pivot in auxiliary solve", row)
        out = np.empty(n + 1)
        out[:-1] = sol
        out[-1] = 0.0
        return out

    def aux_solve(self, u: np.ndarray) -> np.ndarray:
        """Apply the auxiliary map: one tridiagonal solve at frozen u."""
        disc = self.disc
        return self.solve_linear(
            disc.diffusion_coefficient(u), disc.mass_shift(u), disc.source(u)
        )

    def gap(self, u: np.ndarray, v: np.ndarray) -> float:
        return self.disc.e_norm(u - v)

    def line_search(self, u, t_u, cfg, energy_u=None, clip_positive=False,
                    clip_negative=False):
        """Backtrack along d = T(u) - u until the Armijo test holds.

        Returns (u_new, accepted, step, energy_new, d_norm_sq).  A zero
        direction is returned unchanged and counts as accepted.
        """
        disc = self.disc
        d = t_u - u
        d_norm_sq = disc.e_norm_sq(d)
        if energy_u is None:
            energy_u = disc.energy_perturbed(u)
        if d_norm_sq == 0.0:
            return u, True, 0.0, energy_u, 0.0
        s = cfg.step0
        while s >= _MIN_STEP:
            cand = u + s * d
            if clip_positive:
                cand = np.maximum(cand, 0.0)
            if clip_negative:
                cand = np.minimum(cand, 0.0)
            energy_new = disc.energy_perturbed(cand)
            if (math.isfinite(energy_new)
                    and energy_new <= energy_u - cfg.armijo * s * d_norm_sq):
                return cand, True, s, energy_new, d_norm_sq
            s *= cfg.backtrack
        return u, False, s, energy_u, d_norm_sq


def auxiliary_solve(u: Field, params: ModelParams,
                    pert: PerturbationParams | None, grid: RadialGrid) -> Field:
    """Solve the frozen-coefficient linear problem at u (one application
    of the map whose fixed points are the critical points)."""
    ws = FlowWorkspace(params, pert, grid)
    return Field.on_grid(grid, ws.aux_solve(u.values))


def cone_distance(u: Field, sign: str, params: ModelParams,
                  grid: RadialGrid) -> float:
    """Surrogate distance to the closed sign cone.

    sign="plus" returns ||u^-||_E (distance to the nonnegative cone),
    sign="minus" returns ||u^+||_E.
    """
    disc = Discretization(params, None, grid)
    plus, minus = split_signs(u)
    if sign == "plus":
        return disc.e_norm(minus.values)
    if sign == "minus":
        return disc.e_norm(plus.values)
    raise ConfigError(f"sign must be 'plus' or 'minus', got {sign!r}")


def flow_step(u: Field, cfg: FlowConfig, params: ModelParams,
              pert: PerturbationParams | None,
              grid: RadialGrid) -> tuple[Field, bool, float]:
    """One damped step u <- u + s*(T(u) - u) with backtracking.

    Accepted steps satisfy J(u') <= J(u) - armijo*s*||T(u)-u||_E^2.
    Returns (new field, accepted, step used); a rejected step returns u
    unchanged (caller treats it as converged-stalled).
    """
    ws = FlowWorkspace(params, pert, grid)
    t_u = ws.aux_solve(u.values)
    new, accepted, s, _, _ = ws.line_search(u.values, t_u, cfg)
    return Field.on_grid(grid, new), accepted, s


def descend(u0: Field, cfg: FlowConfig, params: ModelParams,
            pert: PerturbationParams | None, grid: RadialGrid) -> FlowResult:
    """Iterate damped steps until ||u - T(u)||_E <= tol or max_iter.

    The energy trace is non-increasing across accepted steps; on
    convergence the strong-residual sup norm is reported alongside.
    """
    ws = FlowWorkspace(params, pert, grid)
    u = np.array(u0.values, dtype=float)
    disc = ws.disc
    energy_u = disc.energy_perturbed(u)
    trace = [energy_u]
    converged = False
    stalled = False
    gap = math.inf
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        t_u = ws.aux_solve(u)
        gap = ws.gap(u, t_u)
        if gap <= cfg.tol:
            converged = True
            iterations -= 1
            break
        u_new, accepted, _, energy_new, _ = ws.line_search(
            u, t_u, cfg, energy_u=energy_u
        )
        if not accepted:
            stalled = True
            break
        u, energy_u = u_new, energy_new
        trace.append(energy_u)
    plus, minus = split_signs(Field.on_grid(grid, u.copy()))
    return FlowResult(
        u=Field.on_grid(grid, u),
        iterations=iterations,
        converged=converged,
        energy_trace=trace,
        fixed_point_gap=gap,
        cone_dist_plus=disc.e_norm(minus.values),
        cone_dist_minus=disc.e_norm(plus.values),
        residual_sup=float(np.max(np.abs(disc.residual(u)))),
        stalled=stalled,
    )


# ---------------------------------------------------------------------------
# Newton refinement of near-critical points
# ---------------------------------------------------------------------------


def _hessian_solve(ws: FlowWorkspace, u: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (discrete Hessian at u) * delta = rhs for delta(r_max) = 0.

    In the cell-volume inner product the Hessian is the tridiagonal
    stiffness/mass part plus two symmetric rank-one terms from the
    nonlocal coefficients, handled by the Woodbury identity with two
    extra banded solves.
    """
    disc = ws.disc
    n = ws.grid.n
    params = disc.params
    coef = disc.diffusion_coefficient(u)
    shift = disc.mass_shift(u)
    fprime = _source_derivative(disc, u)
    diag = coef * ws._kdiag + ws._mass * (
        disc.v_nodes[:-1] + shift - fprime[:-1]
    )
    ab = np.zeros((3, n))
    ab[0, 1:] = coef * ws._koff
    ab[1, :] = diag
    ab[2, :-1] = coef * ws._koff

    cols = []
    ku = None
    if params.b != 0.0:
        ku = np.zeros(n)
        du = disc.flux * np.diff(u)
        ku[0] = -du[0]
        ku[1:] = du[:-1] - du[1:]
        cols.append((math.sqrt(2.0 * params.b), ku))
    if disc.lam != 0.0:
        l2 = disc.l2_sq(u)
        if l2 > 0.0:
            w = math.sqrt(2.0 * disc.lam * disc.alpha) * l2 ** ((disc.alpha - 1.0) / 2.0)
            cols.append((w, (disc.cv[:-1] * u[:-1])))

    def tri_solve(b):
        return solve_banded((1, 1), ab, b, check_finite=False)

    base = tri_solve(rhs)
    if not cols:
        return base
    U = np.column_stack([w * c for w, c in cols])
    TU = np.column_stack([tri_solve(U[:, j]) for j in range(U.shape[1])])
    k = U.shape[1]
    small = np.eye(k) + U.T @ TU
    correction = TU @ np.linalg.solve(small, U.T @ base)
    return base - correction


def _source_derivative(disc, u: np.ndarray) -> np.ndarray:
    """d/du of f(u) + beta*|u|^(r-2) u, nodewise."""
    nl = disc.params.nonlinearity
    t = np.abs(u)
    if hasattr(nl, "terms"):
        fp = np.zeros_like(u)
        for coef, p in nl.terms:
            fp += coef * (p - 1.0) * t ** (p - 2.0)
    else:
        fp = (nl.p - 1.0) * t ** (nl.p - 2.0)
    if disc.beta != 0.0:
        fp = fp + disc.beta * (disc.r_exp - 1.0) * t ** (disc.r_exp - 2.0)
    return fp


def newton_refine(u: Field, params: ModelParams,
                  pert: PerturbationParams | None, grid: RadialGrid,
                  max_iter: int = 40,
                  tol_factor: float = 1e-12) -> tuple[Field, bool]:
    """Damped Newton on the nodal strong-form residual.

    Refines a near-critical point located by the deformation machinery to
    machine precision (saddle points included, since Newton solves the
    stationarity system directly).  Returns (refined field, converged).
    The iteration is rejected wholesale if it wanders: steps that fail to
    reduce the residual are halved down to a floor.
    """
    ws = FlowWorkspace(params, pert, grid)
    disc = ws.disc

    def weighted_norm(r):
        return float(np.sqrt(np.sum((disc.cv * r) ** 2)))

    vals = np.array(u.values, dtype=float)
    res = disc.residual(vals)
    res_norm = weighted_norm(res)
    char = (disc.diffusion_coefficient(vals) * max(np.max(np.abs(vals)), 1.0)
            / grid.h**2)
    floor = tol_factor * max(char, 1.0) * math.sqrt(grid.n) * np.max(disc.cv)
    converged = res_norm <= floor
    for _ in range(max_iter):
        if converged:
            break
        rhs = -(disc.cv[:-1] * res[:-1])
        try:
            delta = _hessian_solve(ws, vals, rhs)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(delta)):
            break
        step = 1.0
        improved = False
        while step >= 1e-8:
            cand = vals.copy()
            cand[:-1] += step * delta
            cand_res = disc.residual(cand)
            cand_norm = weighted_norm(cand_res)
            if np.isfinite(cand_norm) and cand_norm < res_norm * (1.0 - 0.25 * step):
                vals, res, res_norm = cand, cand_res, cand_norm
                improved = True
                break
            step *= 0.5
        if not improved:
            # rounding plateau: the step cannot shave a fixed fraction
            # anymore, but the residual may already sit at its floor
            converged = res_norm <= 64.0 * floor
            break
        converged = res_norm <= floor
    return Field.on_grid(grid, vals), converged


# ---------------------------------------------------------------------------
# seeded random fields and cone-invariance calibration
# ---------------------------------------------------------------------------


def random_smooth_field(rng: np.random.Generator, grid: RadialGrid,
                        amplitude: float = 1.0, max_bumps: int = 3) -> Field:
    """Seeded sum of radial Gaussian bumps, clamped at the boundary."""
    vals = np.zeros(grid.n + 1)
    for _ in range(int(rng.integers(1, max_bumps + 1))):
        amp = amplitude * rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        center = rng.uniform(0.05, 0.6) * grid.r_max
        width = rng.uniform(0.02, 0.12) * grid.r_max
        vals += amp * np.exp(-(((grid.nodes - center) / width) ** 2))
    return Field.on_grid(grid, vals)


def _one_signed_bump(rng, grid, sign, amplitude):
    amp = amplitude * rng.uniform(0.5, 1.5)
    center = rng.uniform(0.08, 0.45) * grid.r_max
    width = rng.uniform(0.04, 0.12) * grid.r_max
    vals = sign * amp * np.exp(-(((grid.nodes - center) / width) ** 2))
    return vals


def sample_near_cone(rng: np.random.Generator, grid: RadialGrid,
                     params: ModelParams, sign: str, eps: float,
                     amplitude: float = 1.0) -> Field:
    """One-signed bump plus an opposite-sign part scaled so that the
    surrogate cone distance is about 0.95*eps (just inside the
    eps-neighborhood of the cone)."""
    disc = Discretization(params, None, grid)
    s = 1.0 if sign == "plus" else -1.0
    base = _one_signed_bump(rng, grid, s, amplitude)
    pert = _one_signed_bump(rng, grid, -s, amplitude)
    target = 0.95 * eps
    vals = base + pert
    for _ in range(3):
        plus, minus = split_signs(Field.on_grid(grid, vals.copy()))
        off = disc.e_norm(minus.values if sign == "plus" else plus.values)
        if off == 0.0:
            pert *= 2.0
        else:
            pert *= target / off
        vals = base + pert
        plus, minus = split_signs(Field.on_grid(grid, vals.copy()))
        off = disc.e_norm(minus.values if sign == "plus" else plus.values)
        if abs(off - target) <= 0.05 * target:
            break
    return Field.on_grid(grid, vals)


@dataclass
class InvarianceRow:
    eps: float
    samples: int
    violations: int
    max_exit_distance: float

    @property
    def fraction_ok(self) -> float:
        return 1.0 - self.violations / self.samples if self.samples else 1.0


@dataclass
class InvarianceReport:
    rows: list[InvarianceRow] = field(default_factory=list)
    seed: int = 0

    def largest_invariant_eps(self) -> float | None:
        passing = [r.eps for r in self.rows if r.violations == 0]
        return max(passing) if passing else None

    def as_dict(self):
        return {
            "seed": self.seed,
            "rows": [
                {
                    "eps": r.eps,
                    "samples": r.samples,
                    "violations": r.violations,
                    "fraction_ok": r.fraction_ok,
                    "max_exit_distance": r.max_exit_distance,
                }
                for r in self.rows
            ],
        }


def check_cone_invariance(sample_count: int, eps_list, params: ModelParams,
                          pert: PerturbationParams | None, grid: RadialGrid,
                          seed: int) -> InvarianceReport:
    """Monte-Carlo check that the auxiliary map preserves the cone
    neighborhoods: for each eps, seeded fields just inside the positive
    and negative eps-cones are mapped through the auxiliary solve and the
    exit surrogate distance is compared with eps.  Failures are recorded,
    never raised; the report calibrates the empirical invariance
    threshold."""
    ws = FlowWorkspace(params, pert, grid)
    disc = ws.disc
    report = InvarianceReport(seed=seed)
    for eps in eps_list:
        rng = np.random.default_rng([seed, int(1e9 * eps)])
        violations = 0
        worst = 0.0
        for k in range(sample_count):
            sign = "plus" if k % 2 == 0 else "minus"
            u = sample_near_cone(rng, grid, params, sign, eps)
            v = ws.aux_solve(u.values)
            plus, minus = split_signs(Field.on_grid(grid, v.copy()))
            out = disc.e_norm(minus.values if sign == "plus" else plus.values)
            worst = max(worst, out)
            if out >= eps:
                violations += 1
        report.rows.append(
            InvarianceRow(eps=float(eps), samples=sample_count,
                          violations=violations, max_exit_distance=worst)
        )
    return report


def calibrate_eps_cone(params: ModelParams, pert: PerturbationParams | None,
                       grid: RadialGrid, seed: int,
                       eps_grid=(0.2, 0.1, 0.05, 0.02, 0.01),
                       samples: int = 60) -> tuple[float, InvarianceReport]:
    """Pick a working cone radius: the largest fully invariant eps from
    the grid, backed off by one notch for safety (the map is strictly
    contracting near the cones, so smaller eps only improves margins)."""
    report = check_cone_invariance(samples, eps_grid, params, pert, grid, seed)
    eps_sorted = sorted(float(e) for e in eps_grid)
    passing = [r.eps for r in report.rows if r.violations == 0]
    if not passing:
        raise ConfigError(
            "no eps in the calibration grid is invariant; "
            "refine eps_grid toward smaller values"
        )
    best = max(passing)
    idx = eps_sorted.index(best)
    calibrated = eps_sorted[max(idx - 1, 0)]
    return calibrated, report
