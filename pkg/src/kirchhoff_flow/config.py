"""Configuration loading and validation.

Configs are JSON documents with one block per subsystem; unknown keys
are rejected so typos cannot silently fall back to defaults.  Range
violations raise ConfigError naming the violated hypothesis, e.g. the
admissible interval (0, (mu-2)/(3mu+2)) for the mass-perturbation
exponent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .flow import FlowConfig
from .minimax import BumpSpec, ContinuationSchedule
from .model import (
    ConstantPotential,
    ModelParams,
    PerturbationParams,
    PowerNonlinearity,
    PowerSumNonlinearity,
    RationalPotential,
    TabulatedPotential,
    ValidationReport,
    validate_model,
)
from .radial import RadialGrid, build_grid


def _expect_keys(block: dict, allowed: set, where: str) -> None:
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) {sorted(unknown)} in {where}; allowed: "
            f"{sorted(allowed)}"
        )


def _potential_from(block) -> object:
    if isinstance(block, (int, float)):
        return ConstantPotential(float(block))
    if not isinstance(block, dict) or "type" not in block:
        raise ConfigError("potential must be a number or an object with 'type'")
    kind = block["type"]
    if kind == "constant":
        _expect_keys(block, {"type", "v0"}, "model.potential")
        return ConstantPotential(float(block["v0"]))
    if kind == "rational":
        _expect_keys(block, {"type", "c0", "c1"}, "model.potential")
        return RationalPotential(float(block["c0"]), float(block["c1"]))
    if kind == "table":
        _expect_keys(block, {"type", "values"}, "model.potential")
        return TabulatedPotential(tuple(float(v) for v in block["values"]))
    raise ConfigError(f"unknown potential type {kind!r}")


def _nonlinearity_from(block) -> object:
    if not isinstance(block, dict) or "type" not in block:
        raise ConfigError("nonlinearity must be an object with 'type'")
    kind = block["type"]
    if kind == "power":
        _expect_keys(block, {"type", "p"}, "model.nonlinearity")
        return PowerNonlinearity(float(block["p"]))
    if kind == "powersum":
        _expect_keys(block, {"type", "terms"}, "model.nonlinearity")
        terms = tuple(
            (float(t["coef"]), float(t["p"])) for t in block["terms"]
        )
        return PowerSumNonlinearity(terms)
    raise ConfigError(f"unknown nonlinearity type {kind!r}")


@dataclass
class Config:
    model: ModelParams
    perturbation: PerturbationParams
    grid: RadialGrid
    flow: FlowConfig
    nodal_bumps: BumpSpec
    ground_bump: BumpSpec
    simplex_resolution: int
    simplex_scale: float | None  # None = calibrate automatically
    schedule: ContinuationSchedule
    b_values: tuple
    seed: int
    output_dir: str
    shoot_tol: float
    validation: ValidationReport = field(repr=False, default=None)
    raw: dict = field(repr=False, default_factory=dict)


_DEFAULTS = {
    "grid": {"r_max": 30.0, "n": 3000},
    "perturbation": {"lambda": 1.0, "beta": 1.0, "alpha": 0.05, "r_exp": 5.5},
    "flow": {"tol": 1e-4, "max_iter": 20000, "step0": 1.0,
             "backtrack": 0.5, "armijo": 0.1, "eps_cone": 0.02},
    "simplex": {"resolution": 6, "scale": None, "amplitude": 4.0,
                "bumps": [[2.0, 5.0], [6.0, 9.0]], "signs": [-1, 1]},
    "ground": {"interval": [2.0, 8.0], "amplitude": 1.0},
    "study": {"b_values": [0.1, 0.05, 0.02, 0.01, 0.0],
              "decay": 0.5, "floor": 1e-3, "shoot_tol": 1e-6},
}


def load_config(path) -> Config:
    """Parse and validate a JSON config; embeds the hypothesis report."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config parse error in {path} at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}"
        ) from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> Config:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    _expect_keys(raw, {"model", "perturbation", "grid", "flow", "simplex",
                       "ground", "study", "seed", "output_dir"}, "config root")
    if "model" not in raw:
        raise ConfigError("config needs a 'model' block")

    mb = dict(raw["model"])
    _expect_keys(mb, {"a", "b", "potential", "nonlinearity", "mu"}, "model")
    model = ModelParams(
        a=float(mb.get("a", 1.0)),
        b=float(mb.get("b", 0.0)),
        potential=_potential_from(mb.get("potential", {"type": "constant", "v0": 1.0})),
        nonlinearity=_nonlinearity_from(mb.get("nonlinearity", {"type": "power", "p": 3.0})),
        mu=float(mb["mu"]) if "mu" in mb else None,
    )

    pb = {**_DEFAULTS["perturbation"], **raw.get("perturbation", {})}
    _expect_keys(pb, {"lambda", "beta", "alpha", "r_exp"}, "perturbation")
    pert = PerturbationParams(lam=float(pb["lambda"]), beta=float(pb["beta"]),
                              alpha=float(pb["alpha"]), r_exp=float(pb["r_exp"]))
    pert.validate_against(model)

    gb = {**_DEFAULTS["grid"], **raw.get("grid", {})}
    _expect_keys(gb, {"r_max", "n"}, "grid")
    grid = build_grid(float(gb["r_max"]), int(gb["n"]))

    fb = {**_DEFAULTS["flow"], **raw.get("flow", {})}
    _expect_keys(fb, {"tol", "max_iter", "step0", "backtrack", "armijo",
                      "eps_cone"}, "flow")
    flow = FlowConfig(tol=float(fb["tol"]), max_iter=int(fb["max_iter"]),
                      step0=float(fb["step0"]), backtrack=float(fb["backtrack"]),
                      armijo=float(fb["armijo"]), eps_cone=float(fb["eps_cone"]))

    sb = {**_DEFAULTS["simplex"], **raw.get("simplex", {})}
    _expect_keys(sb, {"resolution", "scale", "amplitude", "bumps", "signs"},
                 "simplex")
    nodal_bumps = BumpSpec(
        intervals=tuple(tuple(map(float, iv)) for iv in sb["bumps"]),
        signs=tuple(int(s) for s in sb["signs"]),
        amplitude=float(sb["amplitude"]),
    )
    grb = {**_DEFAULTS["ground"], **raw.get("ground", {})}
    _expect_keys(grb, {"interval", "amplitude"}, "ground")
    ground_bump = BumpSpec(
        intervals=(tuple(map(float, grb["interval"])),),
        signs=(1,),
        amplitude=float(grb["amplitude"]),
    )

    stb = {**_DEFAULTS["study"], **raw.get("study", {})}
    _expect_keys(stb, {"b_values", "decay", "floor", "shoot_tol"}, "study")
    schedule = ContinuationSchedule(decay=float(stb["decay"]),
                                    floor=float(stb["floor"]))

    cfg = Config(
        model=model,
        perturbation=pert,
        grid=grid,
        flow=flow,
        nodal_bumps=nodal_bumps,
        ground_bump=ground_bump,
        simplex_resolution=int(sb["resolution"]),
        simplex_scale=None if sb["scale"] is None else float(sb["scale"]),
        schedule=schedule,
        b_values=tuple(float(b) for b in stb["b_values"]),
        seed=int(raw.get("seed", 20240801)),
        output_dir=str(raw.get("output_dir", "runs")),
        shoot_tol=float(stb["shoot_tol"]),
        raw=raw,
    )
    cfg.validation = validate_model(model, pert, grid)
    return cfg


def describe_config(cfg: Config) -> dict:
    """Canonical nested dict of the effective configuration."""
    return {
        "model": cfg.model.describe(),
        "perturbation": cfg.perturbation.describe(),
        "grid": {"r_max": cfg.grid.r_max, "n": cfg.grid.n},
        "flow": {
            "tol": cfg.flow.tol, "max_iter": cfg.flow.max_iter,
            "step0": cfg.flow.step0, "backtrack": cfg.flow.backtrack,
            "armijo": cfg.flow.armijo, "eps_cone": cfg.flow.eps_cone,
        },
        "simplex": {
            "resolution": cfg.simplex_resolution,
            "scale": cfg.simplex_scale,
            **cfg.nodal_bumps.describe(),
        },
        "ground": cfg.ground_bump.describe(),
        "study": {
            "b_values": list(cfg.b_values),
            "decay": cfg.schedule.decay,
            "floor": cfg.schedule.floor,
            "shoot_tol": cfg.shoot_tol,
        },
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
    }
