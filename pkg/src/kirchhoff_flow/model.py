"""Problem definition and energy functionals.

The equation solved on the truncated ball is

    -(a + b*int |grad u|^2) Lap(u) + V(|x|) u = f(u),

with a > 0, b >= 0, a radial potential V bounded below by a positive
constant, and a superlinear, subcritical nonlinearity f.  The perturbed
functional adds a nonlocal mass term and a higher-order local term,

    J(u) = I(u) + lam/(2(1+alpha)) * (int u^2)^(1+alpha)
                - (beta/r) * int |u|^r,

whose critical points approximate those of I as lam = beta -> 0.

Discrete calculus.  All mass-type integrals inside energies, norms and
residuals use the lumped cell-volume quadrature and all gradient terms
use the flux form of :mod:`kirchhoff_flow.radial`.  With that pairing the
nodal strong-form residual returned by :func:`strong_residual` is exactly
the gradient of the discrete energy in the cell-volume inner product:

    J'(u) v = sum_i cell_volumes[i] * residual_i(u) * v_i

for every v with v(r_max) = 0.  The descent estimates of the flow engine
therefore hold to rounding, not merely up to O(h^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, UnsupportedPotentialError
from .radial import (
    Field,
    RadialGrid,
    dirichlet_form,
    grad_norm_sq,
    integrate,
    lumped_integral,
    split_signs,
    count_sign_changes,
)


# ---------------------------------------------------------------------------
# potential descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantPotential:
    """V(rho) = v0 with v0 > 0."""

    v0: float

    def __post_init__(self):
        if not (self.v0 > 0 and np.isfinite(self.v0)):
            raise ConfigError(f"constant potential needs v0 > 0, got {self.v0}")

    def values(self, rho: np.ndarray) -> np.ndarray:
        return np.full_like(rho, self.v0)

    def radial_derivative(self, rho: np.ndarray) -> np.ndarray:
        return np.zeros_like(rho)

    differentiable = True
    is_constant = True

    def describe(self):
        return {"type": "constant", "v0": self.v0}


@dataclass(frozen=True)
class RationalPotential:
    """V(rho) = c0 + c1/(1 + rho^2); requires inf V = min(c0, c0+c1) > 0."""

    c0: float
    c1: float

    def __post_init__(self):
        if min(self.c0, self.c0 + self.c1) <= 0:
            raise ConfigError(
                "rational potential must stay positive: "
                f"min(c0, c0+c1) = {min(self.c0, self.c0 + self.c1)}"
            )

    def values(self, rho: np.ndarray) -> np.ndarray:
        return self.c0 + self.c1 / (1.0 + rho**2)

    def radial_derivative(self, rho: np.ndarray) -> np.ndarray:
        return -2.0 * self.c1 * rho / (1.0 + rho**2) ** 2

    differentiable = True
    is_constant = False

    def describe(self):
        return {"type": "rational", "c0": self.c0, "c1": self.c1}


@dataclass(frozen=True)
class TabulatedPotential:
    """Radial samples on the grid nodes; no derivative information."""

    samples: tuple

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=float)
        if arr.ndim != 1 or len(arr) < 2:
            raise ConfigError("tabulated potential needs a 1-d sample array")
        if arr.min() <= 0:
            raise ConfigError(
                f"tabulated potential must be positive, min sample {arr.min()}"
            )

    def values(self, rho: np.ndarray) -> np.ndarray:
        arr = np.asarray(self.samples, dtype=float)
        if len(arr) == len(rho):
            return arr.copy()
        grid_rho = np.linspace(rho[0], rho[-1], len(arr))
        return np.interp(rho, grid_rho, arr)

    def radial_derivative(self, rho: np.ndarray):
        raise UnsupportedPotentialError(
            "tabulated potential carries no derivative data; "
            "dilation-identity checks need a constant or rational descriptor"
        )

    differentiable = False
    is_constant = False

    def describe(self):
        return {"type": "table", "values": list(map(float, self.samples))}


Potential = ConstantPotential | RationalPotential | TabulatedPotential


# ---------------------------------------------------------------------------
# nonlinearity descriptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerNonlinearity:
    """f(t) = |t|^(p-2) t with 2 < p < 6; F(t) = |t|^p / p."""

    p: float

    def __post_init__(self):
        if not (2.0 < self.p < 6.0):
            raise ConfigError(f"power exponent must lie in (2, 6), got p={self.p}")

    @property
    def growth_exponent(self) -> float:
        return self.p

    def f(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.abs(t) ** (self.p - 2.0) * t

    def F(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.abs(t) ** self.p / self.p

    def f_scalar(self, t: float) -> float:
        return abs(t) ** (self.p - 2.0) * t

    def describe(self):
        return {"type": "power", "p": self.p}


@dataclass(frozen=True)
class PowerSumNonlinearity:
    """f(t) = sum_j c_j |t|^(p_j - 2) t, each p_j in (2, 6)."""

    terms: tuple  # of (coef, exponent)

    def __post_init__(self):
        if not self.terms:
            raise ConfigError("power-sum nonlinearity needs at least one term")
        for coef, p in self.terms:
            if not (2.0 < p < 6.0):
                raise ConfigError(f"power-sum exponent must lie in (2, 6), got {p}")
            if coef == 0:
                raise ConfigError("power-sum coefficients must be nonzero")

    @property
    def growth_exponent(self) -> float:
        return max(p for _, p in self.terms)

    def f(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for coef, p in self.terms:
            out += coef * np.abs(t) ** (p - 2.0) * t
        return out

    def F(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for coef, p in self.terms:
            out += coef * np.abs(t) ** p / p
        return out

    def f_scalar(self, t: float) -> float:
        return sum(coef * abs(t) ** (p - 2.0) * t for coef, p in self.terms)

    def describe(self):
        return {
            "type": "powersum",
            "terms": [{"coef": c, "p": p} for c, p in self.terms],
        }


Nonlinearity = PowerNonlinearity | PowerSumNonlinearity


# ---------------------------------------------------------------------------
# parameter records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Coefficients (a, b), potential V, nonlinearity f and its mu.

    mu is the superlinearity constant of the sign condition
    t f(t) >= mu F(t) > 0; for a pure power it equals the exponent.
    """

    a: float
    b: float
    potential: Potential
    nonlinearity: Nonlinearity
    mu: float | None = None

    def __post_init__(self):
        if not (self.a > 0 and np.isfinite(self.a)):
            raise ConfigError(f"diffusion coefficient a must be > 0, got {self.a}")
        if not (self.b >= 0 and np.isfinite(self.b)):
            raise ConfigError(f"nonlocal coefficient b must be >= 0, got {self.b}")
        if self.mu is None:
            if isinstance(self.nonlinearity, PowerNonlinearity):
                object.__setattr__(self, "mu", self.nonlinearity.p)
            else:
                raise ConfigError("mu must be supplied for composite nonlinearities")
        p = self.nonlinearity.growth_exponent
        if not (2.0 < self.mu <= p < 6.0):
            raise ConfigError(
                f"superlinearity constant must satisfy 2 < mu <= p < 6, "
                f"got mu={self.mu}, p={p}"
            )

    @property
    def p(self) -> float:
        return self.nonlinearity.growth_exponent

    def alpha_bound(self) -> float:
        """Upper limit (mu-2)/(3*mu+2) for the mass-perturbation exponent."""
        return (self.mu - 2.0) / (3.0 * self.mu + 2.0)

    def describe(self):
        return {
            "a": self.a,
            "b": self.b,
            "potential": self.potential.describe(),
            "nonlinearity": self.nonlinearity.describe(),
            "mu": self.mu,
        }


@dataclass(frozen=True)
class PerturbationParams:
    """Perturbation knobs (lam, beta, alpha, r_exp).

    lam scales the nonlocal mass term lam*(int u^2)^alpha * u and beta the
    higher-order local term beta*|u|^(r-2)*u; both live in [0, 1] with 0
    meaning "off".  alpha must lie in the open interval
    (0, (mu-2)/(3mu+2)) and r_exp in (max(p, 9/2), 6); the parts of those
    bounds that need the model are enforced by :meth:`validate_against`.
    """

    lam: float
    beta: float
    alpha: float
    r_exp: float

    def __post_init__(self):
        if not (0.0 <= self.lam <= 1.0):
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        if not (0.0 <= self.beta <= 1.0):
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if not (0.0 < self.alpha < 0.2):
            raise ConfigError(
                "alpha must lie in (0, (mu-2)/(3mu+2)), which is contained "
                f"in (0, 0.2) for every admissible mu; got {self.alpha}"
            )
        if not (4.5 < self.r_exp < 6.0):
            raise ConfigError(
                f"r_exp must lie in (max(p, 9/2), 6); got {self.r_exp} "
                "which already violates the model-free part (9/2, 6)"
            )

    def validate_against(self, params: ModelParams) -> None:
        """Enforce the model-dependent parts of the admissible ranges."""
        bound = params.alpha_bound()
        if not (self.alpha < bound):
            raise ConfigError(
                f"alpha outside (0, (mu-2)/(3mu+2)): alpha={self.alpha}, "
                f"bound={bound} for mu={params.mu} (open interval)"
            )
        if not (self.r_exp > params.p):
            raise ConfigError(
                f"r_exp must exceed max(p, 9/2): r_exp={self.r_exp}, p={params.p}"
            )

    def scaled(self, lam: float, beta: float) -> "PerturbationParams":
        return PerturbationParams(lam=lam, beta=beta, alpha=self.alpha, r_exp=self.r_exp)

    def describe(self):
        return {
            "lambda": self.lam,
            "beta": self.beta,
            "alpha": self.alpha,
            "r_exp": self.r_exp,
        }


# ---------------------------------------------------------------------------
# discrete calculus workspace
# ---------------------------------------------------------------------------


class Discretization:
    """Per-(params, pert, grid) arrays and fast raw-array kernels.

    Drivers create one instance per run; the public module functions
    create one per call.  pert may be None, meaning lam = beta = 0.
    """

    def __init__(self, params: ModelParams, pert: PerturbationParams | None,
                 grid: RadialGrid):
        self.params = params
        self.pert = pert
        self.grid = grid
        self.v_nodes = params.potential.values(grid.nodes)
        if self.v_nodes.min() <= 0:
            raise ConfigError(
                f"potential must be positive on the grid, min {self.v_nodes.min()}"
            )
        self.cv = grid.cell_volumes
        self.flux = grid.mid_rho_sq * (4.0 * np.pi / grid.h)
        self.lam = 0.0 if pert is None else pert.lam
        self.beta = 0.0 if pert is None else pert.beta
        self.alpha = 0.0 if pert is None else pert.alpha
        self.r_exp = 0.0 if pert is None else pert.r_exp

    # -- quadratic forms ----------------------------------------------------

    def a_form(self, u: np.ndarray) -> float:
        du = np.diff(u)
        return float(self.flux @ (du * du))

    def a_form_pair(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(self.flux @ (np.diff(u) * np.diff(v)))

    def l2_sq(self, u: np.ndarray) -> float:
        return float(self.cv @ (u * u))

    def e_norm_sq(self, u: np.ndarray) -> float:
        return float(self.params.a * self.a_form(u) + self.cv @ (self.v_nodes * u * u))

    def e_norm(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.e_norm_sq(u), 0.0))

    # -- energies -----------------------------------------------------------

    def energy(self, u: np.ndarray) -> float:
        g = self.a_form(u)
        mass = float(self.cv @ (self.v_nodes * u * u))
        fmass = float(self.cv @ self.params.nonlinearity.F(u))
        return (0.5 * (self.params.a * g + mass)
                + 0.25 * self.params.b * g * g - fmass)

    def energy_perturbed(self, u: np.ndarray) -> float:
        val = self.energy(u)
        if self.lam != 0.0:
            # numpy-scalar power saturates to inf instead of raising on
            # overflow; diverged line-search candidates must evaluate,
            # not crash, so the Armijo test can reject them
            val += self.lam / (2.0 * (1.0 + self.alpha)) * float(
                np.float64(self.l2_sq(u)) ** (1.0 + self.alpha)
            )
        if self.beta != 0.0:
            val -= self.beta / self.r_exp * float(
                self.cv @ np.abs(u) ** self.r_exp
            )
        return val

    # -- operator pieces ----------------------------------------------------

    def diffusion_coefficient(self, u: np.ndarray) -> float:
        """a + b * int |grad u|^2, frozen at u."""
        return self.params.a + self.params.b * self.a_form(u)

    def mass_shift(self, u: np.ndarray) -> float:
        """lam * (int u^2)^alpha, frozen at u."""
        if self.lam == 0.0:
            return 0.0
        return self.lam * self.l2_sq(u) ** self.alpha

    def source(self, u: np.ndarray) -> np.ndarray:
        """f(u) + beta*|u|^(r-2)*u, the frozen right-hand side."""
        rhs = self.params.nonlinearity.f(u)
        if self.beta != 0.0:
            rhs = rhs + self.beta * np.abs(u) ** (self.r_exp - 2.0) * u
        return rhs

    def stiffness_apply(self, u: np.ndarray) -> np.ndarray:
        """(K u)_i for i = 0..n-1 where K is the flux-form stiffness matrix."""
        du = self.flux * np.diff(u)
        out = np.empty(self.grid.n)
        out[0] = -du[0]
        out[1:] = du[:-1] - du[1:]
        return out

    def residual(self, u: np.ndarray) -> np.ndarray:
        """Nodal strong-form residual; zero exactly at fixed points.

        Interior rows discretize -(a+b int|grad u|^2)(u'' + 2u'/rho) in
        conservative form; the rho = 0 row is the symmetry limit
        -(...)*3u''(0).  The r_max row is the Dirichlet constraint and is
        reported as zero.
        """
        coef = self.diffusion_coefficient(u)
        shift = self.mass_shift(u)
        res = np.zeros(self.grid.n + 1)
        res[:-1] = (
            coef * self.stiffness_apply(u) / self.cv[:-1]
            + (self.v_nodes[:-1] + shift) * u[:-1]
            - self.source(u)[:-1]
        )
        return res


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------


def energy(u: Field, params: ModelParams, grid: RadialGrid) -> float:
    """Unperturbed functional I(u) = 1/2||u||^2 + (b/4)(int|grad u|^2)^2 - int F(u)."""
    return Discretization(params, None, grid).energy(u.values)


def energy_perturbed(u: Field, params: ModelParams,
                     pert: PerturbationParams | None, grid: RadialGrid) -> float:
    """Perturbed functional; equals :func:`energy` exactly when lam = beta = 0."""
    return Discretization(params, pert, grid).energy_perturbed(u.values)


def e_norm(u: Field, params: ModelParams, grid: RadialGrid) -> float:
    """Norm sqrt(int a|grad u|^2 + V u^2) of the working Hilbert space."""
    return Discretization(params, None, grid).e_norm(u.values)


def strong_residual(u: Field, params: ModelParams,
                    pert: PerturbationParams | None, grid: RadialGrid) -> Field:
    """Nodal residual of the strong form at u (zero iff discrete solution)."""
    res = Discretization(params, pert, grid).residual(u.values)
    return Field.on_grid(grid, res)


def pohozaev_residual(u: Field, params: ModelParams,
                      pert: PerturbationParams | None, grid: RadialGrid) -> float:
    """Dilation-identity residual; approaches 0 at critical points.

    Assembles (a/2)int|grad u|^2 + (3/2)int V u^2 + (1/2)int V'(rho) rho u^2
    + (b/2)(int|grad u|^2)^2 + (3 lam/2)(int u^2)^(1+alpha)
    - 3 int (F(u) + (beta/r)|u|^r) with Simpson quadrature for the mass
    terms.  Needs a differentiable potential descriptor.
    """
    if not params.potential.differentiable:
        raise UnsupportedPotentialError(
            "dilation identity needs V'(rho); tabulated potentials are not supported"
        )
    vals = u.values
    lam = 0.0 if pert is None else pert.lam
    beta = 0.0 if pert is None else pert.beta
    alpha = 0.0 if pert is None else pert.alpha
    r_exp = 0.0 if pert is None else pert.r_exp
    g = grad_norm_sq(u, grid)
    vpot = params.potential.values(grid.nodes)
    mass_v = integrate(vpot * vals**2, grid)
    total = 0.5 * params.a * g + 1.5 * mass_v + 0.5 * params.b * g * g
    if not params.potential.is_constant:
        dv = params.potential.radial_derivative(grid.nodes)
        total += 0.5 * integrate(dv * grid.nodes * vals**2, grid)
    if lam != 0.0:
        total += 1.5 * lam * integrate(vals**2, grid) ** (1.0 + alpha)
    fmass = integrate(params.nonlinearity.F(vals), grid)
    if beta != 0.0:
        fmass += beta / r_exp * integrate(np.abs(vals) ** r_exp, grid)
    return float(total - 3.0 * fmass)


def decomposition_gap(u: Field, params: ModelParams, grid: RadialGrid) -> float:
    """I(u) - I(u+) - I(u-) - (b/2) int|grad u+|^2 int|grad u-|^2.

    Vanishes identically in the continuum; the nodewise sign split makes
    it O(h) for sign-changing fields and exactly zero for one-signed ones.
    """
    plus, minus = split_signs(u)
    disc = Discretization(params, None, grid)
    cross = 0.5 * params.b * disc.a_form(plus.values) * disc.a_form(minus.values)
    return float(
        disc.energy(u.values) - disc.energy(plus.values) - disc.energy(minus.values)
        - cross
    )


# ---------------------------------------------------------------------------
# hypothesis validation
# ---------------------------------------------------------------------------


@dataclass
class HypothesisCheck:
    name: str
    passed: bool | None  # None = not checked
    detail: str
    witness: float | None = None


@dataclass
class ValidationReport:
    checks: list[HypothesisCheck] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def as_dict(self):
        return {
            "ok": self.ok,
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "detail": c.detail,
                    "witness": c.witness,
                }
                for c in self.checks
            ],
        }


def validate_model(params: ModelParams, pert: PerturbationParams | None,
                   grid: RadialGrid) -> ValidationReport:
    """Sample-based checks of the standing hypotheses; report only.

    (V1): inf V > 0 on the grid.  (V2): ((mu-2)/mu) V - V'(rho) rho >= 0 at
    every node, for differentiable descriptors; the integrability class of
    V'(rho)*rho is recorded as not checked.  (f1): f(t)/t -> 0 near 0.
    (f2): |f(t)| <= C |t|^(p-1) at large samples.  (f3): t f(t) >= mu F(t) > 0
    on a logarithmic sample.  Perturbation ranges are re-reported here; out
    of range values are construction-time errors elsewhere.
    """
    report = ValidationReport()
    f = params.nonlinearity
    mu = params.mu

    vmin = float(params.potential.values(grid.nodes).min())
    report.checks.append(
        HypothesisCheck("V1", vmin > 0.0, f"inf V on grid = {vmin}", vmin)
    )

    if params.potential.differentiable:
        vv = params.potential.values(grid.nodes)
        dv = params.potential.radial_derivative(grid.nodes)
        expr = (mu - 2.0) / mu * vv - dv * grid.nodes
        worst = int(np.argmin(expr))
        report.checks.append(
            HypothesisCheck(
                "V2",
                bool(expr[worst] >= 0.0),
                f"min of ((mu-2)/mu)V - V'(rho)rho = {expr[worst]:.6g} "
                f"at rho = {grid.nodes[worst]:.6g}",
                float(grid.nodes[worst]),
            )
        )
    else:
        report.checks.append(
            HypothesisCheck("V2", None, "tabulated potential: derivative unavailable")
        )
    report.checks.append(
        HypothesisCheck(
            "V2-integrability", None,
            "membership of V'(rho)*rho in L-infinity or L^(3/2): not checked "
            "(grid sampling only certifies the pointwise inequality)",
        )
    )

    small = np.logspace(-8.0, -1.0, 15)
    ratios = np.abs(f.f(small) / small)
    f1_ok = bool(ratios[0] <= 0.1 * ratios[-1] + 1e-12 and ratios[0] < 1e-2)
    report.checks.append(
        HypothesisCheck(
            "f1", f1_ok,
            f"|f(t)/t| falls from {ratios[-1]:.3g} at t=0.1 to {ratios[0]:.3g} "
            "at t=1e-8",
            float(ratios[0]),
        )
    )

    p = params.p
    large = np.logspace(0.0, 4.0, 9)
    growth = np.abs(f.f(large)) / large ** (p - 1.0)
    f2_ok = bool(growth[-1] <= 4.0 * growth[0] + 1e-12)
    report.checks.append(
        HypothesisCheck(
            "f2", f2_ok,
            f"|f(t)|/|t|^(p-1) spans [{growth.min():.3g}, {growth.max():.3g}] "
            "on t in [1, 1e4]",
            float(growth[-1]),
        )
    )

    ts = np.concatenate([-np.logspace(-6.0, 4.0, 21), np.logspace(-6.0, 4.0, 21)])
    lhs = ts * f.f(ts)
    rhs = mu * f.F(ts)
    bad = np.flatnonzero((lhs < rhs - 1e-12 * np.abs(rhs)) | (rhs <= 0.0))
    report.checks.append(
        HypothesisCheck(
            "f3",
            bad.size == 0,
            "t f(t) >= mu F(t) > 0 on the log sample"
            if bad.size == 0
            else f"violated at t = {ts[bad[0]]:.6g}: "
                 f"t f(t) = {lhs[bad[0]]:.6g}, mu F(t) = {rhs[bad[0]]:.6g}",
            None if bad.size == 0 else float(ts[bad[0]]),
        )
    )

    if pert is not None:
        bound = params.alpha_bound()
        report.checks.append(
            HypothesisCheck(
                "alpha-range", 0.0 < pert.alpha < bound,
                f"alpha = {pert.alpha}, admissible open interval (0, {bound:.6g})",
                pert.alpha,
            )
        )
        report.checks.append(
            HypothesisCheck(
                "r-range", max(p, 4.5) < pert.r_exp < 6.0,
                f"r_exp = {pert.r_exp}, admissible open interval "
                f"({max(p, 4.5)}, 6)",
                pert.r_exp,
            )
        )
    return report


# ---------------------------------------------------------------------------
# energy report
# ---------------------------------------------------------------------------


@dataclass
class EnergyReport:
    """Scalar diagnostics of a field under a model; fixed field order."""

    e_norm_sq: float
    grad_sq: float
    l2_sq: float
    energy_I: float
    energy_pert: float
    residual_sup: float
    pohozaev_res: float | None
    cone_dist_plus: float
    cone_dist_minus: float
    sign_changes: int

    def as_dict(self):
        return {
            "e_norm_sq": self.e_norm_sq,
            "grad_sq": self.grad_sq,
            "l2_sq": self.l2_sq,
            "energy_I": self.energy_I,
            "energy_pert": self.energy_pert,
            "residual_sup": self.residual_sup,
            "pohozaev_res": self.pohozaev_res,
            "cone_dist_plus": self.cone_dist_plus,
            "cone_dist_minus": self.cone_dist_minus,
            "sign_changes": self.sign_changes,
        }


def energy_report(u: Field, params: ModelParams,
                  pert: PerturbationParams | None, grid: RadialGrid) -> EnergyReport:
    disc = Discretization(params, pert, grid)
    vals = u.values
    plus, minus = split_signs(u)
    sup = float(np.max(np.abs(vals))) if len(vals) else 0.0
    try:
        poho = pohozaev_residual(u, params, pert, grid)
    except UnsupportedPotentialError:
        poho = None
    return EnergyReport(
        e_norm_sq=disc.e_norm_sq(vals),
        grad_sq=disc.a_form(vals),
        l2_sq=disc.l2_sq(vals),
        energy_I=disc.energy(vals),
        energy_pert=disc.energy_perturbed(vals),
        residual_sup=float(np.max(np.abs(disc.residual(vals)))),
        pohozaev_res=poho,
        cone_dist_plus=disc.e_norm(minus.values),
        cone_dist_minus=disc.e_norm(plus.values),
        sign_changes=count_sign_changes(u, threshold=1e-8 * sup),
    )
