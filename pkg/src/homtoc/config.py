"""Strict TOML run configuration.

Layout::

    output = "out"                 # optional

    [problem]                      # required
    operator = "diffusion"         # diffusion | reaction | modal   (required)
    r = 1.0                        # target radius                  (required)
    n_interior = 255
    eigenvalues = [1.0]            # modal operators only
    k_modes = 0                    # 0 keeps every mode
    coefficient = "sinusoidal"
    coefficient_params = { mean = 2.0, amplitude = 1.0 }
    epsilon = 0.0                  # 0 selects the homogenized / limit operator
    omega = [0.3, 0.8]
    psi = "modes"
    psi_params = { coefficients = [2.0, 0.5] }

    [solver]   n_t, tol_el, max_iter, tol_tau, bisect_width, max_root_iter, tol_target, vanish_tol,
               newton_after
    [norm]     tau
    [time]     M
    [curve]    taus
    [sweep]    epsilons, M, delta
    [verify]   bang_bang, transversality, max_principle, duality, inverse_relation

Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import tomli

from .control import ControlProblem, SolverSettings, Tolerances
from .homogenize import (
    PERIODIC_PRESETS,
    REACTION_PRESETS,
    PeriodicCoefficient1D,
    homogenized_field,
    oscillating_coefficient,
    reaction_family,
)
from .spectral import STATE_PRESETS, ControlMask, Mesh1D, assemble_operator, modal_operator, state_preset
from .sweep import SweepConfig

OUTPUT_ENV = "HOMTOC_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


@dataclass
class ProblemBlock:
    operator: str
    r: float
    n_interior: int = 255
    eigenvalues: list = field(default_factory=list)
    k_modes: int = 0
    coefficient: str = "sinusoidal"
    coefficient_params: dict = field(default_factory=lambda: {"mean": 2.0, "amplitude": 1.0})
    epsilon: float = 0.0
    omega: list = field(default_factory=lambda: [0.3, 0.8])
    psi: str = "modes"
    psi_params: dict = field(default_factory=lambda: {"coefficients": [2.0, 0.5]})


@dataclass
class SolverBlock:
    n_t: int = 201
    tol_el: float = 1e-7
    max_iter: int = 20000
    tol_tau: float = 1e-6
    bisect_width: float = 1e-3
    max_root_iter: int = 200
    tol_target: float = 1e-5
    vanish_tol: float = 1e-14
    newton_after: int = 500


@dataclass
class NormBlock:
    tau: float | None = None


@dataclass
class TimeBlock:
    M: float | None = None


@dataclass
class CurveBlock:
    taus: list = field(default_factory=list)


@dataclass
class SweepBlock:
    epsilons: list = field(default_factory=lambda: [0.25, 0.125, 0.0625, 0.03125])
    M: float = 2.0
    delta: float | None = None


@dataclass
class VerifyBlock:
    bang_bang: float = 1e-6
    transversality: float = 1e-5
    max_principle: float = 1e-8
    duality: float = 1e-8
    inverse_relation: float = 1e-4


@dataclass
class RunConfig:
    problem: ProblemBlock
    solver: SolverBlock = field(default_factory=SolverBlock)
    norm: NormBlock = field(default_factory=NormBlock)
    time: TimeBlock = field(default_factory=TimeBlock)
    curve: CurveBlock = field(default_factory=CurveBlock)
    sweep: SweepBlock = field(default_factory=SweepBlock)
    verify: VerifyBlock = field(default_factory=VerifyBlock)
    output: str = "homtoc_out"

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output)


BLOCKS = {
    "problem": ProblemBlock,
    "solver": SolverBlock,
    "norm": NormBlock,
    "time": TimeBlock,
    "curve": CurveBlock,
    "sweep": SweepBlock,
    "verify": VerifyBlock,
}


def _block(cls, name, raw):
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key '{name}.{key}' (allowed: {', '.join(sorted(known))})")
    required = [f.name for f in fields(cls) if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING]
    missing = [k for k in required if k not in raw]
    if missing:
        raise ConfigError(f"missing required key(s) {', '.join(f'{name}.{k}' for k in missing)}")
    return cls(**raw)


def parse_config(doc: dict) -> RunConfig:
    for key in doc:
        if key not in BLOCKS and key != "output":
            raise ConfigError(f"unknown key '{key}' (allowed: output, {', '.join(BLOCKS)})")
    if "problem" not in doc:
        raise ConfigError("missing required table [problem]")
    blocks = {name: _block(cls, name, doc[name]) for name, cls in BLOCKS.items() if name in doc}
    cfg = RunConfig(**blocks, **({"output": str(doc["output"])} if "output" in doc else {}))
    validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = tomli.loads(path.read_text())
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML syntax error: {exc}") from exc
    return parse_config(doc)


def _range(cond, name, value, rule):
    if not cond:
        raise ConfigError(f"{name} = {value!r} out of range: {rule}")


def _positive(name, value):
    _range(isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0, name, value, "must be > 0")


def validate(cfg: RunConfig):
    p = cfg.problem
    _range(p.operator in ("diffusion", "reaction", "modal"), "problem.operator", p.operator,
           "one of diffusion, reaction, modal")
    _positive("problem.r", p.r)
    _range(isinstance(p.n_interior, int) and p.n_interior >= 2, "problem.n_interior", p.n_interior, "integer >= 2")
    _range(isinstance(p.k_modes, int) and 0 <= p.k_modes <= p.n_interior, "problem.k_modes", p.k_modes,
           f"integer in [0, {p.n_interior}]")
    _range(p.epsilon >= 0, "problem.epsilon", p.epsilon, "must be >= 0")
    _range(len(p.omega) == 2 and 0 <= p.omega[0] < p.omega[1] <= 1, "problem.omega", p.omega,
           "two numbers 0 <= left < right <= 1")
    _range(p.psi in STATE_PRESETS, "problem.psi", p.psi, f"one of {', '.join(sorted(STATE_PRESETS))}")
    if p.operator == "modal":
        _range(len(p.eigenvalues) > 0 and all(v > 0 for v in p.eigenvalues), "problem.eigenvalues", p.eigenvalues,
               "non-empty list of positive numbers")
    elif p.operator == "diffusion":
        _range(p.coefficient in PERIODIC_PRESETS, "problem.coefficient", p.coefficient,
               f"one of {', '.join(sorted(PERIODIC_PRESETS))}")
    else:
        _range(p.coefficient in REACTION_PRESETS, "problem.coefficient", p.coefficient,
               f"one of {', '.join(sorted(REACTION_PRESETS))}")

    s = cfg.solver
    _range(isinstance(s.n_t, int) and s.n_t >= 3 and s.n_t % 2 == 1, "solver.n_t", s.n_t, "odd integer >= 3")
    for name in ("tol_el", "tol_tau", "bisect_width", "tol_target", "vanish_tol"):
        _positive(f"solver.{name}", getattr(s, name))
    for name in ("max_iter", "max_root_iter", "newton_after"):
        _range(isinstance(getattr(s, name), int) and getattr(s, name) >= 1, f"solver.{name}", getattr(s, name),
               "integer >= 1")
    if cfg.norm.tau is not None:
        _positive("norm.tau", cfg.norm.tau)
    if cfg.time.M is not None:
        _positive("time.M", cfg.time.M)
    for t in cfg.curve.taus:
        _positive("curve.taus", t)
    for e in cfg.sweep.epsilons:
        _positive("sweep.epsilons", e)
    _positive("sweep.M", cfg.sweep.M)
    if cfg.sweep.delta is not None:
        _positive("sweep.delta", cfg.sweep.delta)
    for f_ in fields(VerifyBlock):
        _positive(f"verify.{f_.name}", getattr(cfg.verify, f_.name))


def settings_of(cfg: RunConfig) -> SolverSettings:
    return SolverSettings(**dataclasses.asdict(cfg.solver))


def tolerances_of(cfg: RunConfig) -> Tolerances:
    return Tolerances(**dataclasses.asdict(cfg.verify))


def build_operator(p: ProblemBlock, mesh: Mesh1D):
    k = p.k_modes or None
    try:
        if p.operator == "modal":
            return modal_operator(p.eigenvalues, mesh)
        if p.operator == "diffusion":
            base = PeriodicCoefficient1D(p.coefficient, dict(p.coefficient_params))
            coeff = homogenized_field(base, mesh) if p.epsilon == 0 else oscillating_coefficient(base, p.epsilon, mesh)
            return assemble_operator(coeff, mesh, k)
        eps = [p.epsilon] if p.epsilon > 0 else []
        fam = reaction_family(p.coefficient, eps, mesh, dict(p.coefficient_params))
        return assemble_operator(fam.fields[0] if eps else fam.limit, mesh, k)
    except TypeError as exc:
        raise ConfigError(f"bad preset parameters for '{p.coefficient}': {exc}") from exc


def build_problem(cfg: RunConfig) -> ControlProblem:
    p = cfg.problem
    mesh = Mesh1D(p.n_interior)
    op = build_operator(p, mesh)
    try:
        psi = state_preset(mesh, p.psi, **p.psi_params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for psi preset '{p.psi}': {exc}") from exc
    mask = ControlMask(mesh, *p.omega)
    return ControlProblem(op, mask, psi, float(p.r), cfg.solver.n_t)


def sweep_config_of(cfg: RunConfig) -> SweepConfig:
    p = cfg.problem
    if p.operator == "modal":
        raise ConfigError("sweeps need problem.operator = 'diffusion' or 'reaction'")
    try:
        return SweepConfig(
            family=p.operator,
            preset=p.coefficient,
            params=dict(p.coefficient_params),
            epsilons=list(cfg.sweep.epsilons),
            n_interior=p.n_interior,
            omega=tuple(p.omega),
            psi=p.psi,
            psi_params=dict(p.psi_params),
            r=float(p.r),
            M=float(cfg.sweep.M),
            delta=cfg.sweep.delta,
            settings=settings_of(cfg),
            output=str(cfg.output_dir),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
