"""Simplex minimax, mountain pass, continuation, multi-bump search.

Structure-locating stage: a sampled triangle of two-bump superpositions
is deformed by damped steps through the auxiliary solve; its two cone
edges stay inside the sign cones (which the auxiliary map leaves
invariant at the calibrated radius), the outer edge is pinned at
negative certified energy, and the running maximum over nodes outside
the cone neighborhoods is non-increasing.  That stage certifies the
level window and seeds the refinement.

Refinement stage: critical points are saddles of the free flow whose
unstable directions are spanned by the sign-part scalings
(tau1, tau2) -> tau1*u_minus + tau2*u_plus.  Re-maximizing the energy
over those scalings after every damped step removes the unstable
directions (the least-energy nodal point is a minimum on the resulting
constraint set), so the projected descent converges; a damped Newton
iteration on the stationarity system finishes to machine precision.
The scaling energy is closed-form in (tau1, tau2) for power-type
nonlinearities, making the projection essentially free.

The positive ground state uses the same machinery with the
one-parameter ray scaling inside the positive cone.  Continuation
drives lam = beta -> 0 by warm Newton steps with automatic step
bisection, re-entering the projected descent only when Newton leaves
the branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CalibrationError,
    ConfigError,
    ContinuationError,
    DegenerateDeformationError,
    NumericalError,
    ThresholdError,
)
from .flow import FlowConfig, FlowWorkspace, newton_refine
from .model import (
    EnergyReport,
    ModelParams,
    PerturbationParams,
    energy_report,
)
from .radial import Field, RadialGrid, count_sign_changes


# ---------------------------------------------------------------------------
# initializers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BumpSpec:
    """Disjoint radial support intervals with one sign each.

    The profile on each interval is amplitude * (1 - s^2)^2 on the
    normalized coordinate s in [-1, 1].  The amplitude tunes the
    constant in front of the superlinear term so the concentration
    calibration succeeds within the grid resolution.
    """

    intervals: tuple
    signs: tuple
    amplitude: float = 4.0

    def __post_init__(self):
        if len(self.intervals) != len(self.signs) or not self.intervals:
            raise ConfigError("bump intervals and signs must pair up")
        for (lo, hi) in self.intervals:
            if not (0.0 < lo < hi):
                raise ConfigError(f"bump interval [{lo}, {hi}] must satisfy 0 < lo < hi")
        for s in self.signs:
            if s not in (-1, 1):
                raise ConfigError(f"bump signs must be +1 or -1, got {s}")
        if not (self.amplitude > 0):
            raise ConfigError(f"bump amplitude must be positive, got {self.amplitude}")
        spans = sorted(self.intervals)
        for (l1, r1), (l2, r2) in zip(spans, spans[1:]):
            if r1 >= l2:
                raise ConfigError(
                    f"bump intervals [{l1},{r1}] and [{l2},{r2}] overlap"
                )

    def describe(self):
        return {
            "intervals": [[lo, hi] for lo, hi in self.intervals],
            "signs": list(self.signs),
            "amplitude": self.amplitude,
        }


def _quartic_bump(rho: np.ndarray, lo: float, hi: float) -> np.ndarray:
    s = (2.0 * rho - (lo + hi)) / (hi - lo)
    inside = np.abs(s) < 1.0
    out = np.zeros_like(rho)
    out[inside] = (1.0 - s[inside] ** 2) ** 2
    return out


_MIN_SUPPORT_CELLS = 10


def sample_bump(spec: BumpSpec, index: int, scale: float,
                grid: RadialGrid) -> np.ndarray:
    """Nodal samples of sign * amplitude * scale^2 * bump(scale*rho).

    The concentrated support [lo/scale, hi/scale] must retain at least a
    few grid cells to stay resolved.
    """
    lo, hi = spec.intervals[index]
    if (hi - lo) / scale < _MIN_SUPPORT_CELLS * grid.h:
        raise ConfigError(
            f"scale {scale} squeezes bump [{lo},{hi}] below "
            f"{_MIN_SUPPORT_CELLS} grid cells"
        )
    if hi / scale >= grid.r_max:
        raise ConfigError(
            f"bump [{lo},{hi}] at scale {scale} escapes the grid"
        )
    return (spec.signs[index] * spec.amplitude * scale**2
            * _quartic_bump(grid.nodes * scale, lo, hi))


@dataclass(frozen=True)
class SimplexState:
    """Sampled triangle of two-bump superpositions.

    Nodes carry fields at barycentric coordinates (t1, t2) =
    tau*(theta, 1-theta): directions theta are uniform in [0, 1], the
    radii tau are log-spaced over the working amplitudes, and the extra
    tau = 1 row holds the calibrated outer edge.  The edge theta = 0
    lies in the positive cone, theta = 1 in the negative cone, and the
    tau = 1 edge is held fixed during deformation.
    """

    resolution: int
    radial_levels: int
    scale: float
    coords: tuple  # (k, l): radius index, direction index
    barycentric: dict  # (k, l) -> (t1, t2)
    fields: dict  # (k, l) -> Field

    def node(self, k: int, l: int) -> Field:
        return self.fields[(k, l)]


def build_simplex(spec: BumpSpec, scale: float, resolution: int,
                  grid: RadialGrid, radial_levels: int | None = None,
                  tau_min: float | None = None,
                  work_amplitude: float = 60.0) -> SimplexState:
    """Sample the calibrated family at working amplitudes plus the
    pinned outer edge.

    The calibrated tau = 1 edge certifies the admissibility of the
    family; the deforming interior rows sample the log-range of
    amplitudes up to work_amplitude where the saddle lives (in exact
    arithmetic the rows in between flow monotonically downhill and
    carry no extra information).
    """
    if len(spec.intervals) != 2 or set(spec.signs) != {-1, 1}:
        raise ConfigError(
            "the simplex initializer needs exactly one negative and one "
            "positive bump"
        )
    if resolution < 2:
        raise ConfigError(f"simplex resolution must be >= 2, got {resolution}")
    if scale < 1.0:
        raise ConfigError(f"simplex scale must be >= 1, got {scale}")
    neg_index = spec.signs.index(-1)
    pos_index = spec.signs.index(1)
    base_neg = sample_bump(spec, neg_index, scale, grid)
    base_pos = sample_bump(spec, pos_index, scale, grid)
    m = resolution
    if radial_levels is None:
        radial_levels = max(12, 3 * resolution)
    peak = spec.amplitude * scale**2
    if tau_min is None:
        tau_min = min(0.5, 1e-2 / peak)
    tau_work = max(min(1.0, work_amplitude / peak), 2.0 * tau_min)
    taus = list(np.geomspace(tau_min, tau_work, radial_levels))
    taus.append(1.0)
    coords = []
    barycentric = {}
    fields = {}
    for k, tau in enumerate(taus):
        for l in range(m + 1):
            theta = l / m
            coords.append((k, l))
            barycentric[(k, l)] = (tau * theta, tau * (1.0 - theta))
            fields[(k, l)] = Field.on_grid(
                grid, tau * (theta * base_neg + (1.0 - theta) * base_pos)
            )
    return SimplexState(resolution=m, radial_levels=radial_levels,
                        scale=float(scale), coords=tuple(coords),
                        barycentric=barycentric, fields=fields)


def calibrate_scale(spec: BumpSpec, params: ModelParams,
                    pert: PerturbationParams, grid: RadialGrid,
                    edge_samples: int = 33,
                    max_doublings: int = 24) -> float:
    """Smallest power-of-two scale with max_{outer edge} J < 0.

    The higher-order perturbation term dominates the concentration limit
    only when beta > 0 and its exponent exceeds 9/2, so the doubling
    search fails cleanly (with the sampled energy profile attached) when
    the perturbation is off or the resolution cap is reached first.
    """
    ws = FlowWorkspace(params, pert, grid)
    neg_index = spec.signs.index(-1)
    pos_index = spec.signs.index(1)
    profile = []
    scale = 1.0
    for _ in range(max_doublings):
        try:
            base_neg = sample_bump(spec, neg_index, scale, grid)
            base_pos = sample_bump(spec, pos_index, scale, grid)
        except ConfigError:
            raise CalibrationError(
                f"outer-edge energies stayed nonnegative before the support "
                f"resolution cap at scale {scale}", profile
            )
        worst = -math.inf
        for k in range(edge_samples):
            t = k / (edge_samples - 1)
            vals = t * base_neg + (1.0 - t) * base_pos
            worst = max(worst, ws.disc.energy_perturbed(vals))
        profile.append((scale, worst))
        if worst < 0.0:
            return scale
        scale *= 2.0
    raise CalibrationError(
        f"outer-edge energies stayed nonnegative up to scale {scale}", profile
    )


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------


@dataclass
class CriticalPoint:
    u: Field
    level: float
    report: EnergyReport
    kind: str
    provenance: dict
    converged: bool = True


def _cone_distances(disc, vals: np.ndarray) -> tuple[float, float]:
    plus = np.maximum(vals, 0.0)
    minus = np.minimum(vals, 0.0)
    return disc.e_norm(minus), disc.e_norm(plus)  # (dist to P+, dist to P-)


def _sign_changes(vals: np.ndarray) -> int:
    sup = float(np.max(np.abs(vals))) if len(vals) else 0.0
    return count_sign_changes(Field(values=vals.copy()), threshold=1e-8 * sup)


def _make_point(vals: np.ndarray, params, pert, grid, kind,
                provenance, converged=True) -> CriticalPoint:
    u = Field.on_grid(grid, np.array(vals))
    rep = energy_report(u, params, pert, grid)
    return CriticalPoint(u=u, level=rep.energy_pert, report=rep, kind=kind,
                         provenance=provenance, converged=converged)


# ---------------------------------------------------------------------------
# closed-form scaling energies and projections
# ---------------------------------------------------------------------------


class _FiberEnergy:
    """psi(t1, t2) = J(t1*minus + t2*plus) in closed form.

    All quadrature sums are precomputed once; evaluating psi is scalar
    arithmetic, so the maximization over the scalings costs microseconds.
    """

    def __init__(self, disc, minus: np.ndarray, plus: np.ndarray):
        self.disc = disc
        p = disc.params
        self.a_m = disc.a_form(minus)
        self.a_p = disc.a_form(plus)
        self.a_mp = disc.a_form_pair(minus, plus)
        self.vm = float(disc.cv @ (disc.v_nodes * minus * minus))
        self.vp = float(disc.cv @ (disc.v_nodes * plus * plus))
        self.l2m = disc.l2_sq(minus)
        self.l2p = disc.l2_sq(plus)
        nl = p.nonlinearity
        terms = nl.terms if hasattr(nl, "terms") else ((1.0, nl.p),)
        self.f_terms = [
            (coef / q, q,
             float(disc.cv @ np.abs(minus) ** q),
             float(disc.cv @ np.abs(plus) ** q))
            for coef, q in terms
        ]
        self.a = p.a
        self.b = p.b
        self.lam = disc.lam
        self.beta = disc.beta
        self.alpha = disc.alpha
        self.r_exp = disc.r_exp
        if self.beta != 0.0:
            self.rm = float(disc.cv @ np.abs(minus) ** self.r_exp)
            self.rp = float(disc.cv @ np.abs(plus) ** self.r_exp)

    def __call__(self, t1: float, t2: float) -> float:
        g = t1 * t1 * self.a_m + t2 * t2 * self.a_p + 2.0 * t1 * t2 * self.a_mp
        val = 0.5 * (self.a * g + t1 * t1 * self.vm + t2 * t2 * self.vp)
        val += 0.25 * self.b * g * g
        if self.lam != 0.0:
            l2 = t1 * t1 * self.l2m + t2 * t2 * self.l2p
            val += self.lam / (2.0 * (1.0 + self.alpha)) * l2 ** (1.0 + self.alpha)
        for cq, q, fm, fp in self.f_terms:
            val -= cq * (t1**q * fm + t2**q * fp)
        if self.beta != 0.0:
            val -= self.beta / self.r_exp * (
                t1**self.r_exp * self.rm + t2**self.r_exp * self.rp
            )
        return val


_TAU_CAP = 64.0


def _max_1d(fun, lo=1e-3, hi=_TAU_CAP, samples=60, polish=40):
    """Locate the first interior local maximum on [lo, hi].

    For subquartic growth with b > 0 the scaling energy rises again like
    tau^4 at infinity, so the relevant ridge is the first hump, not the
    global maximum.  Returns the cap when the sampled values are still
    ascending there (no interior hump).
    """
    taus = np.geomspace(lo, hi, samples)
    vals = [fun(t) for t in taus]
    k = None
    for j in range(1, samples - 1):
        if vals[j] >= vals[j + 1] and vals[j] >= vals[j - 1]:
            k = j
            break
    if k is None:
        return hi if vals[-1] >= vals[-2] else lo
    left = taus[k - 1]
    right = taus[k + 1]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = right - phi * (right - left)
    x2 = left + phi * (right - left)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(polish):
        if f1 < f2:
            left, x1, f1 = x1, x2, f2
            x2 = left + phi * (right - left)
            f2 = fun(x2)
        else:
            right, x2, f2 = x2, x1, f1
            x1 = right - phi * (right - left)
            f1 = fun(x1)
    return 0.5 * (left + right)


def _project_nodal(disc, vals: np.ndarray):
    """Rescale the sign parts to the first ridge of the fiber energy.

    The found factors are absorbed and the ascent re-run, so ridges far
    outside the initial search window are still reached; returns
    (projected values, (t1, t2) cumulative) or None when either sign
    part has no interior ridge along its fiber (structure lost).
    """
    minus = np.minimum(vals, 0.0)
    plus = np.maximum(vals, 0.0)
    if not minus.any() or not plus.any():
        return None
    cum1, cum2 = 1.0, 1.0
    for _ in range(10):
        psi = _FiberEnergy(disc, minus, plus)
        t1, t2 = 1.0, 1.0
        for _ in range(8):
            t1_new = _max_1d(lambda t: psi(t, t2))
            t2_new = _max_1d(lambda t: psi(t1_new, t))
            moved = abs(t1_new - t1) + abs(t2_new - t2)
            t1, t2 = t1_new, t2_new
            if moved < 1e-10:
                break
        minus = t1 * minus
        plus = t2 * plus
        cum1 *= t1
        cum2 *= t2
        if max(abs(t1 - 1.0), abs(t2 - 1.0)) < 1e-6:
            return minus + plus, (cum1, cum2)
        if min(cum1, cum2) < 1e-9 or max(cum1, cum2) > 1e9:
            return None
    return None


def _project_ray(disc, vals: np.ndarray):
    """Rescale a nonnegative state to the first ridge of its ray energy."""
    if not vals.any():
        return None
    plus = np.maximum(vals, 0.0)
    cum = 1.0
    zeros = np.zeros_like(vals)
    for _ in range(10):
        psi = _FiberEnergy(disc, zeros, plus)
        t = _max_1d(lambda s: psi(0.0, s))
        plus = t * plus
        cum *= t
        if abs(t - 1.0) < 1e-6:
            return plus, cum
        if cum < 1e-9 or cum > 1e9:
            return None
    return None


# ---------------------------------------------------------------------------
# projected descent refinement
# ---------------------------------------------------------------------------


def _validated_newton(vals, params, pert, grid, ws, cfg, *, nodal,
                      eps_cone, anchor=None):
    """Newton from vals; accept only branch-preserving critical points."""
    cand, ok = newton_refine(Field.on_grid(grid, vals.copy()), params, pert, grid)
    if not ok:
        return None
    cv = cand.values
    if nodal:
        dp, dm = _cone_distances(ws.disc, cv)
        if min(dp, dm) < eps_cone or _sign_changes(cv) < 1:
            return None
    else:
        if np.min(cv) < -1e-10 or np.max(cv) <= 0.0:
            return None
    if anchor is not None:
        jump = ws.disc.e_norm(cv - anchor)
        if jump > 0.75 * (1.0 + ws.disc.e_norm(anchor)):
            return None
    t_u = ws.aux_solve(cv)
    if ws.gap(cv, t_u) > cfg.tol:
        return None
    return cv


def projected_descend(w: np.ndarray, params: ModelParams,
                      pert: PerturbationParams | None, grid: RadialGrid,
                      cfg: FlowConfig, *, nodal: bool,
                      max_iter: int | None = None
                      ) -> tuple[np.ndarray | None, dict]:
    """Damped descent interleaved with fiber-max rescaling.

    The rescaling removes the unstable scaling directions of the target
    saddle, turning it into a constrained minimum; by the envelope
    argument the rescaled Armijo step still decreases the energy for
    small steps.  A validated Newton polish finishes once the gap is
    small.  Returns (critical values, info) or (None, info).
    """
    ws = FlowWorkspace(params, pert, grid)
    disc = ws.disc
    eps = cfg.eps_cone
    project = _project_nodal if nodal else _project_ray
    proj = project(disc, np.array(w, dtype=float))
    info = {"iterations": 0, "newton_attempts": 0, "projected": nodal}
    if proj is None:
        return None, info
    u = proj[0]
    energy_u = disc.energy_perturbed(u)
    best_gap = math.inf
    last_newton = -5
    if max_iter is None:
        max_iter = min(cfg.max_iter, 600)
    for it in range(max_iter):
        info["iterations"] += 1
        try:
            t_u = ws.aux_solve(u)
        except NumericalError:
            return None, info
        d = t_u - u
        gap = ws.gap(u, t_u)
        best_gap = min(best_gap, gap)
        if gap <= cfg.tol:
            return u, info
        near = gap <= max(100.0 * cfg.tol, 0.05 * (1.0 + math.sqrt(abs(energy_u))))
        if near and it - last_newton >= 5:
            last_newton = it
            info["newton_attempts"] += 1
            refined = _validated_newton(u, params, pert, grid, ws, cfg,
                                        nodal=nodal, eps_cone=eps, anchor=u)
            if refined is not None:
                return refined, info
        d_norm_sq = disc.e_norm_sq(d)
        s = cfg.step0
        accepted = False
        while s >= 1e-12:
            cand = u + s * d
            if not nodal:
                cand = np.maximum(cand, 0.0)
            proj = project(disc, cand)
            if proj is not None:
                cand_p = proj[0]
                e_new = disc.energy_perturbed(cand_p)
                if (math.isfinite(e_new)
                        and e_new <= energy_u - 0.5 * cfg.armijo * s * d_norm_sq):
                    u, energy_u = cand_p, e_new
                    accepted = True
                    break
            s *= cfg.backtrack
        if not accepted:
            # final stationary chance: the projection itself may be the
            # obstacle very close to the saddle
            info["newton_attempts"] += 1
            refined = _validated_newton(u, params, pert, grid, ws, cfg,
                                        nodal=nodal, eps_cone=eps, anchor=u)
            return refined, info
    return None, info


def refine_sign_changing(w: np.ndarray, params: ModelParams,
                         pert: PerturbationParams | None, grid: RadialGrid,
                         cfg: FlowConfig, eps_cone: float
                         ) -> tuple[np.ndarray | None, dict]:
    """Drive a sign-changing state to a nodal critical point."""
    del eps_cone  # the working radius comes from cfg
    return projected_descend(w, params, pert, grid, cfg, nodal=True)


# ---------------------------------------------------------------------------
# deformation stage
# ---------------------------------------------------------------------------


class _NodeSet:
    """Working state of a deforming node family."""

    def __init__(self, ws: FlowWorkspace, states, pinned):
        self.ws = ws
        self.states = [np.array(s, dtype=float) for s in states]
        self.pinned = list(pinned)
        self.energy = [ws.disc.energy_perturbed(s) for s in self.states]
        self.gap = [math.inf] * len(self.states)
        self.frozen = [False] * len(self.states)

    def step_node(self, i, cfg, freeze_gap, clip_positive=False):
        ws = self.ws
        s = self.states[i]
        try:
            t_u = ws.aux_solve(s)
        except NumericalError:
            # node ran off to an unrepresentable state: park it
            self.frozen[i] = True
            return
        self.gap[i] = ws.gap(s, t_u)
        if self.gap[i] <= freeze_gap:
            self.frozen[i] = True
            return
        new, accepted, _, e_new, _ = ws.line_search(
            s, t_u, cfg, energy_u=self.energy[i], clip_positive=clip_positive
        )
        if accepted:
            self.states[i] = new
            self.energy[i] = e_new
        else:
            self.frozen[i] = True

    def refresh_gap(self, i):
        try:
            t_u = self.ws.aux_solve(self.states[i])
        except NumericalError:
            self.gap[i] = math.inf
            return self.gap[i]
        self.gap[i] = self.ws.gap(self.states[i], t_u)
        return self.gap[i]


def minimax_nodal(params: ModelParams, pert: PerturbationParams | None,
                  cfg: FlowConfig, simplex: SimplexState,
                  grid: RadialGrid) -> CriticalPoint:
    """Two-bump simplex minimax for a sign-changing critical point.

    Sweeps damped steps over the simplex nodes (outer edge pinned; nodes
    entering the cone neighborhoods remain counted inside them, so the
    tracked maximum over the remaining nodes never increases), then
    continues the tracked node by projected descent and Newton until its
    fixed-point gap meets the tolerance.  The returned level lies in
    [eps^2/4, initial simplex maximum].
    """
    ws = FlowWorkspace(params, pert, grid)
    eps = cfg.eps_cone
    coords = list(simplex.coords)
    states = [simplex.fields[c].values for c in coords]
    pinned = [(k == simplex.radial_levels) for (k, l) in coords]
    nodes = _NodeSet(ws, states, pinned)
    initial_max = max(nodes.energy)
    in_w = [min(_cone_distances(ws.disc, s)) < eps for s in nodes.states]

    def candidates():
        return [i for i in range(len(nodes.states))
                if not nodes.pinned[i] and not in_w[i]]

    cands = candidates()
    if not cands:
        raise DegenerateDeformationError(
            "every interior simplex node starts inside the cone "
            "neighborhoods; increase the simplex resolution or move the "
            "bumps apart"
        )
    imax = max(cands, key=lambda i: nodes.energy[i])
    last_best = np.array(nodes.states[imax])
    trace = [nodes.energy[imax]]
    sweeps = 0
    best = None
    max_sweeps = min(cfg.max_iter, 60)
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(len(nodes.states)):
            if nodes.pinned[i] or nodes.frozen[i]:
                continue
            nodes.step_node(i, cfg, freeze_gap=0.25 * cfg.tol)
            if not in_w[i]:
                in_w[i] = min(_cone_distances(ws.disc, nodes.states[i])) < eps
        cands = candidates()
        if not cands:
            break  # bracket exhausted: continue the tracked node directly
        imax = max(cands, key=lambda i: nodes.energy[i])
        last_best = np.array(nodes.states[imax])
        trace.append(nodes.energy[imax])
        gap = nodes.refresh_gap(imax)
        if gap <= cfg.tol:
            best = nodes.states[imax]
            break
        plateau = len(trace) > 15 and trace[-15] - trace[-1] < 1e-3 * (
            1.0 + abs(trace[-1])
        )
        if plateau:
            break
    info = {}
    if best is None:
        best, info = projected_descend(last_best, params, pert, grid, cfg,
                                       nodal=True)
    converged = best is not None
    if best is None:
        best = last_best
    provenance = {
        "solver": "minimax_nodal",
        "simplex_resolution": simplex.resolution,
        "scale": simplex.scale,
        "sweeps": sweeps,
        "initial_simplex_max": initial_max,
        "minimax_trace_head": trace[:5],
        "minimax_trace_tail": trace[-5:],
        "eps_cone": eps,
        "refine": info,
    }
    return _make_point(best, params, pert, grid, "nodal", provenance, converged)


# ---------------------------------------------------------------------------
# positive mountain pass
# ---------------------------------------------------------------------------


def _calibrate_segment_anchor(bump: BumpSpec, params: ModelParams,
                              grid: RadialGrid) -> np.ndarray:
    """Find a wide positive profile with negative unperturbed energy.

    Widening a dome centered at the origin (profile (1 - (rho/X)^2)^2 up
    to its zero at X) reaches negative energy for every growth exponent
    in (2, 6) and every b >= 0: the volume term scales like X^3 while
    the nonlocal one only contributes X^2, and keeping the mass near the
    origin avoids the rho^2 amplification of the gradient term that an
    outward-stretched annulus would suffer.  The bump's outer endpoint
    sets the smallest dome radius tried.
    """
    if len(bump.intervals) != 1 or bump.signs[0] != 1:
        raise ConfigError("the mountain-pass initializer is a single positive bump")
    ws = FlowWorkspace(params, None, grid)
    radius = bump.intervals[0][1]
    while radius <= 0.95 * grid.r_max:
        base = bump.amplitude * _quartic_bump(grid.nodes, -radius, radius)
        amp = 1.0
        while amp <= 512.0:
            vals = amp * base
            if ws.disc.energy(vals) < 0.0:
                return vals
            amp *= 1.5
        radius *= 1.5
    raise ThresholdError(
        "no positive dome with negative energy fits the grid; enlarge "
        f"r_max (last dome radius {radius / 1.5:.3g})"
    )


def mountain_pass_positive(params: ModelParams, cfg: FlowConfig,
                           bump: BumpSpec, grid: RadialGrid) -> CriticalPoint:
    """Segment minimax inside the positive cone for the ground state.

    Deforms the segment t -> t * (calibrated wide bump), t in [0, 1],
    with steps clipped to the nonnegative cone (which the auxiliary map
    preserves exactly), tracks the maximal-energy node, then continues
    it by ray-projected descent and Newton.  The returned field is
    positive at interior nodes.
    """
    ws = FlowWorkspace(params, None, grid)
    anchor = _calibrate_segment_anchor(bump, params, grid)
    m_seg = 16
    keys = [k / m_seg for k in range(m_seg + 1)]
    states = [k * anchor for k in keys]
    pinned = [k in (0.0, 1.0) for k in keys]
    nodes = _NodeSet(ws, states, pinned)
    scale0 = ws.disc.e_norm(anchor)
    trace = []
    sweeps = 0
    best = None
    last_best = None
    max_sweeps = min(cfg.max_iter, 60)
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(len(keys)):
            if nodes.pinned[i] or nodes.frozen[i]:
                continue
            nodes.step_node(i, cfg, freeze_gap=0.25 * cfg.tol,
                            clip_positive=True)
        cands = [
            i for i in range(len(keys))
            if not nodes.pinned[i] and nodes.energy[i] > 0.0
            and ws.disc.e_norm(nodes.states[i]) > 1e-7 * scale0
        ]
        if not cands:
            break
        imax = max(cands, key=lambda i: nodes.energy[i])
        last_best = np.array(nodes.states[imax])
        trace.append(nodes.energy[imax])
        gap = nodes.refresh_gap(imax)
        if gap <= cfg.tol:
            best = nodes.states[imax]
            break
        plateau = len(trace) > 15 and trace[-15] - trace[-1] < 1e-3 * (
            1.0 + abs(trace[-1])
        )
        if plateau:
            break
    info = {}
    if best is None:
        seeds = []
        if last_best is not None:
            seeds.append(last_best)
        seeds.extend(t * anchor for t in (0.4, 0.2, 0.6))
        for seed in seeds:
            best, info = projected_descend(seed, params, None, grid, cfg,
                                           nodal=False)
            if best is not None:
                break
        if best is None and last_best is None:
            raise ThresholdError(
                "mountain-pass deformation collapsed to zero; increase the "
                "initializer amplitude"
            )
    converged = best is not None
    if best is None:
        best = last_best
    best = np.maximum(best, 0.0)
    provenance = {
        "solver": "mountain_pass_positive",
        "segment_nodes": len(keys),
        "sweeps": sweeps,
        "anchor_norm": scale0,
        "trace_tail": trace[-5:],
        "refine": info,
    }
    return _make_point(best, params, None, grid, "ground", provenance, converged)


# ---------------------------------------------------------------------------
# continuation lam = beta -> 0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ContinuationSchedule:
    decay: float = 0.5
    floor: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.decay < 1.0):
            raise ConfigError(f"continuation decay must lie in (0,1), got {self.decay}")
        if not (0.0 < self.floor < 1.0):
            raise ConfigError(f"continuation floor must lie in (0,1), got {self.floor}")


def _pert_at(pert0: PerturbationParams, lam: float) -> PerturbationParams | None:
    if lam == 0.0:
        return None
    return pert0.scaled(lam, lam)


def _branch_step(u: np.ndarray, lam_to: float, pert0, params, grid, cfg):
    """One warm Newton solve at lam_to.

    Deliberately Newton-only: the ridge-projected descent would chase
    the receding rim of the fading beta-term and derail onto runaway
    scales, while Newton follows the solution branch itself; arbitrarily
    small parameter steps (the caller bisects) keep the warm start
    inside its basin as long as the branch is regular.
    """
    pert = _pert_at(pert0, lam_to)
    ws = FlowWorkspace(params, pert, grid)
    return _validated_newton(u, params, pert, grid, ws, cfg,
                             nodal=True, eps_cone=cfg.eps_cone, anchor=u)


def _fold_reseed(u: np.ndarray, lam_to: float, pert0, params, grid, cfg):
    """Jump past a fold of the parameter branch by dilation.

    At a fold the warm branch turns back and Newton's basin collapses.
    The surviving branch lives at wider profiles: stretching the last
    good state restores the interior ridge of the scaling energy (the
    quartic nonlocal term gains only two powers of the stretch while the
    superlinear term gains three), after which the projected descent
    converges on the far side.  The stretch is generic solver-side
    geometry; no oracle data enters.
    """
    pert = _pert_at(pert0, lam_to)
    s = 1.5
    while s <= 128.0:
        stretched = np.interp(grid.nodes / s, grid.nodes, u)
        stretched[-1] = 0.0
        got, _ = projected_descend(stretched, params, pert, grid, cfg,
                                   nodal=True, max_iter=400)
        if got is not None:
            return got
        s *= 1.5
    return None


def _continuation_step(u: np.ndarray, lam_from: float, lam_to: float,
                       pert0, params, grid, cfg, depth=0):
    """Warm step to lam_to with automatic bisection of the parameter step."""
    got = _branch_step(u, lam_to, pert0, params, grid, cfg)
    if got is not None:
        return got
    stuck = (lam_to > 0.0 and abs(lam_from - lam_to) < 1e-6 * lam_from)
    if depth >= 24 or stuck:
        got = _fold_reseed(u, lam_to, pert0, params, grid, cfg)
        if got is not None:
            return got
        raise ContinuationError(
            f"continuation step {lam_from} -> {lam_to} failed after "
            f"{depth} bisections and a fold reseed",
            last_good=u,
        )
    if lam_to == 0.0:
        lam_mid = lam_from * 0.25
    else:
        lam_mid = math.sqrt(lam_from * lam_to)
    u_mid = _continuation_step(u, lam_from, lam_mid, pert0, params, grid,
                               cfg, depth + 1)
    return _continuation_step(u_mid, lam_mid, lam_to, pert0, params, grid,
                              cfg, depth + 1)


def continuation_to_zero(params: ModelParams, pert0: PerturbationParams,
                         schedule: ContinuationSchedule, cfg: FlowConfig,
                         simplex: SimplexState,
                         grid: RadialGrid) -> CriticalPoint:
    """Solve the perturbed minimax, then drive lam = beta -> 0.

    Warm-starts each parameter level from the previous solution (no full
    simplex re-deformation); at the floor the parameters are set to zero
    exactly and the limit is refined under the unperturbed functional.
    The convergence trace ||u_k - u_{k+1}||_E is recorded in the
    provenance.
    """
    if pert0.lam != pert0.beta or pert0.lam <= 0.0:
        raise ConfigError(
            "continuation ties the two perturbations: need lam = beta > 0, "
            f"got lam={pert0.lam}, beta={pert0.beta}"
        )
    start = minimax_nodal(params, pert0, cfg, simplex, grid)
    if not start.converged:
        raise ContinuationError("perturbed minimax did not converge",
                                last_good=start.u)
    eps = cfg.eps_cone
    disc0 = FlowWorkspace(params, None, grid).disc
    u = np.array(start.u.values)
    lam = pert0.lam
    lam_levels = [lam]
    step_norms = []
    energies = [start.level]
    while lam > schedule.floor:
        lam_next = lam * schedule.decay
        u_next = _continuation_step(u, lam, lam_next, pert0, params, grid, cfg)
        step_norms.append(disc0.e_norm(u_next - u))
        disc_next = FlowWorkspace(params, _pert_at(pert0, lam_next), grid).disc
        e_next = disc_next.energy_perturbed(u_next)
        # the level rises systematically as the negative beta-term fades
        # and the scaling projection re-inflates the warm start; genuine
        # divergence means exceeding even the projected warm start
        e_warm = disc_next.energy_perturbed(u)
        proj = _project_nodal(disc_next, u)
        if proj is not None:
            e_warm = max(e_warm, disc_next.energy_perturbed(proj[0]))
        if e_next > e_warm + 0.25 * (1.0 + abs(e_warm)):
            raise ContinuationError(
                f"energy jumped across the continuation step to lam={lam_next}",
                last_good=Field.on_grid(grid, u),
            )
        u = u_next
        lam = lam_next
        lam_levels.append(lam)
        energies.append(e_next)
    u_final = _continuation_step(u, lam, 0.0, pert0, params, grid, cfg)
    step_norms.append(disc0.e_norm(u_final - u))
    lam_levels.append(0.0)
    point = _make_point(u_final, params, None, grid, "nodal", {
        "solver": "continuation_to_zero",
        "lam_levels": lam_levels,
        "step_norms": step_norms,
        "perturbed_levels": energies,
        "start_provenance": start.provenance,
        "eps_cone": eps,
    })
    dp, dm = point.report.cone_dist_plus, point.report.cone_dist_minus
    if min(dp, dm) < eps or point.report.sign_changes < 1:
        raise ContinuationError(
            "continuation limit lost its sign-changing structure",
            last_good=point.u,
        )
    return point


# ---------------------------------------------------------------------------
# multi-bump heuristic search
# ---------------------------------------------------------------------------


def _alternating_bumps(n: int, grid: RadialGrid, amplitude: float) -> BumpSpec:
    lo, hi = 0.05 * grid.r_max, 0.35 * grid.r_max
    width = (hi - lo) / (n + 0.5 * (n - 1))
    intervals = []
    signs = []
    pos = lo
    for i in range(n):
        intervals.append((pos, pos + width))
        signs.append(-1 if i % 2 == 0 else 1)
        pos += 1.5 * width
    return BumpSpec(intervals=tuple(intervals), signs=tuple(signs),
                    amplitude=amplitude)


def multi_bump_search(n: int, params: ModelParams, pert0: PerturbationParams,
                      cfg: FlowConfig, grid: RadialGrid, seed: int,
                      schedule: ContinuationSchedule | None = None
                      ) -> list[CriticalPoint]:
    """Heuristic search for several distinct nodal solutions.

    Builds n disjoint alternating-sign bumps, seeds random directions on
    the unit sphere of bump coefficients, takes the energy maximizer
    along each ray, refines it to a sign-changing critical point of the
    perturbed functional, continues every survivor to lam = beta = 0,
    and deduplicates by relative distance in the working norm and by
    energy.  Returns the distinct solutions sorted by level; the
    observed level ladder is reported, never asserted to diverge.
    """
    if n < 2:
        raise ConfigError(f"multi-bump search needs n >= 2 bumps, got {n}")
    if schedule is None:
        schedule = ContinuationSchedule()
    spec = _alternating_bumps(n, grid, amplitude=4.0)
    ws = FlowWorkspace(params, pert0, grid)
    eps = cfg.eps_cone

    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((max(8, 2 * n), n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    bases = np.array([sample_bump(spec, i, 1.0, grid) for i in range(n)])

    found: list[CriticalPoint] = []
    for d in dirs:
        combo = d @ bases
        if _sign_changes(combo) < 1:
            continue
        ray = [(tau, ws.disc.energy_perturbed(tau * combo))
               for tau in np.geomspace(0.05, 8.0, 25)]
        tau_star = max(ray, key=lambda pair: pair[1])[0]
        w0 = tau_star * combo
        refined, _ = projected_descend(w0, params, pert0, grid, cfg, nodal=True)
        if refined is None:
            continue
        try:
            u = refined
            lam = pert0.lam
            while lam > schedule.floor:
                lam_next = lam * schedule.decay
                u = _continuation_step(u, lam, lam_next, pert0, params, grid,
                                       cfg)
                lam = lam_next
            u = _continuation_step(u, lam, 0.0, pert0, params, grid, cfg)
        except ContinuationError:
            continue
        point = _make_point(u, params, None, grid, "nodal",
                            {"solver": "multi_bump_search", "n": n,
                             "seed": seed, "eps_cone": eps})
        if (min(point.report.cone_dist_plus, point.report.cone_dist_minus) < eps
                or point.report.sign_changes < 1):
            continue
        if point.level < eps * eps / 4.0:
            continue
        duplicate = False
        for other in found:
            dist = ws.disc.e_norm(point.u.values - other.u.values)
            norm = max(ws.disc.e_norm(point.u.values),
                       ws.disc.e_norm(other.u.values))
            if (dist <= 1e-2 * norm
                    and abs(point.level - other.level)
                    <= 1e-4 * (1.0 + abs(point.level))):
                duplicate = True
                break
        if not duplicate:
            found.append(point)
    found.sort(key=lambda cp: cp.level)
    return found
