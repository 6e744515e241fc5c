"""Oscillating coefficient families and their homogenized limits in 1-D."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    CoefficientField,
    DiscreteOperator,
    Mesh1D,
    laplacian_first_eigenvalue,
    resolvent_apply,
    simpson_weights,
)

DENSE_SAMPLES = 4096
CELL_NODES = 4097


class ResolutionWarning(UserWarning):
    """The oscillation period is not resolved by the mesh."""


def _constant(y, value=1.0):
    return np.full_like(y, float(value))


def _sinusoidal(y, mean=2.0, amplitude=1.0):
    return mean + amplitude * np.sin(2 * np.pi * y)


def _inverse_sinusoidal(y, mean=1.0, amplitude=0.5):
    return 1.0 / (mean + amplitude * np.sin(2 * np.pi * y))


def _two_phase(y, low=1.0, high=2.0, fraction=0.5):
    return np.where(np.mod(y, 1.0) < fraction, low, high)


PERIODIC_PRESETS = {
    "constant": _constant,
    "sinusoidal": _sinusoidal,
    "inverse_sinusoidal": _inverse_sinusoidal,
    "two_phase": _two_phase,
}


@dataclass(frozen=True)
class PeriodicCoefficient1D:
    """Period-1 positive coefficient y -> a(y) given by a named closed form."""

    preset: str
    params: dict = field(default_factory=dict)
    bounds: tuple = field(init=False)

    def __post_init__(self):
        if self.preset not in PERIODIC_PRESETS:
            raise ValueError(f"unknown periodic preset {self.preset!r}; choose from {sorted(PERIODIC_PRESETS)}")
        y = np.arange(DENSE_SAMPLES) / DENSE_SAMPLES
        vals = self(y)
        if not np.all(np.isfinite(vals)) or vals.min() <= 0:
            raise ValueError(f"preset {self.preset!r} with {self.params} is not uniformly positive")
        # analytic bounds where available, dense sampling otherwise
        lo, hi = float(vals.min()), float(vals.max())
        p = self.params
        if self.preset == "sinusoidal":
            m, b = p.get("mean", 2.0), abs(p.get("amplitude", 1.0))
            lo, hi = m - b, m + b
        elif self.preset == "inverse_sinusoidal":
            m, b = p.get("mean", 1.0), abs(p.get("amplitude", 0.5))
            lo, hi = 1.0 / (m + b), 1.0 / (m - b)
        if lo <= 0:
            raise ValueError(f"preset {self.preset!r} with {self.params} is not uniformly positive")
        object.__setattr__(self, "bounds", (lo, hi))

    def __call__(self, y):
        return PERIODIC_PRESETS[self.preset](np.asarray(y, dtype=float), **self.params)

    @property
    def smooth(self) -> bool:
        """False for presets outside W^{2,inf} (kept as stress tests)."""
        return self.preset != "two_phase"


def oscillating_coefficient(base: PeriodicCoefficient1D, eps: float, mesh: Mesh1D) -> CoefficientField:
    """Sample a(x / eps) at the edge midpoints."""
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {eps}")
    if eps < 4 * mesh.h:
        warnings.warn(
            f"epsilon = {eps:.4g} is below 4h = {4 * mesh.h:.4g}; the oscillation is under-resolved "
            "and the discrete operator homogenizes toward the wrong limit",
            ResolutionWarning,
            stacklevel=2,
        )
    return CoefficientField("diffusion", base(mesh.edges / eps), base.bounds)


def homogenized_coefficient_1d(base: PeriodicCoefficient1D) -> float:
    """Harmonic mean (int_0^1 1/a)^{-1}: the 1-D cell problem in closed form."""
    y = np.linspace(0.0, 1.0, CELL_NODES)
    vals = base(y)
    if np.all(vals == vals[0]):
        # keeps constant coefficients bit-exact, so the family equals its limit
        return float(vals[0])
    w = simpson_weights(CELL_NODES, 1.0)
    return float(1.0 / np.dot(w, 1.0 / vals))


def homogenized_field(base: PeriodicCoefficient1D, mesh: Mesh1D) -> CoefficientField:
    a0 = homogenized_coefficient_1d(base)
    return CoefficientField("diffusion", np.full(mesh.n_interior + 1, a0), (a0, a0))


# reaction presets: eps -> a_eps(x); eps = 0 gives the limit a_0
def _reaction_constant(x, eps, value=1.0):
    return np.full_like(x, float(value))


def _reaction_sine_perturbation(x, eps, base=1.0, amplitude=1.0):
    return base + amplitude * eps * np.sin(np.pi * x)


REACTION_PRESETS = {
    "constant": _reaction_constant,
    "sine_perturbation": _reaction_sine_perturbation,
}


@dataclass(frozen=True)
class ReactionFamily:
    fields: list
    limit: CoefficientField
    distances: list  # sup-norm ||a_eps - a_0|| per eps


def reaction_family(preset: str, epsilons, mesh: Mesh1D, params: dict | None = None, margin: float = 1e-2) -> ReactionFamily:
    """Per-node reaction samples a_eps for each eps plus the limit a_0.

    Every member must satisfy sup|a| <= lambda_1 - margin, with lambda_1 the
    first eigenvalue of the discrete Dirichlet Laplacian (slightly below pi^2).
    """
    if preset not in REACTION_PRESETS:
        raise ValueError(f"unknown reaction preset {preset!r}; choose from {sorted(REACTION_PRESETS)}")
    params = params or {}
    fn = REACTION_PRESETS[preset]
    x = mesh.nodes
    bound = laplacian_first_eigenvalue(mesh) - margin
    limit_vals = fn(x, 0.0, **params)
    members = [(eps, fn(x, eps, **params)) for eps in epsilons] + [(0.0, limit_vals)]
    for eps, vals in members:
        sup = float(np.max(np.abs(vals)))
        if sup > bound:
            raise ValueError(
                f"reaction coefficient at epsilon = {eps:g} has sup-norm {sup:.6g}, "
                f"above lambda_1 - margin = {bound:.6g}"
            )
    fields = [CoefficientField.reaction(v) for _, v in members[:-1]]
    dists = [float(np.max(np.abs(f.values - limit_vals))) for f in fields]
    return ReactionFamily(fields, CoefficientField.reaction(limit_vals), dists)


def resolvent_convergence_report(ops: list[DiscreteOperator], op_0: DiscreteOperator, probes, epsilons=None):
    """Rows (eps, max over probes of ||A_eps^{-1} psi - A_0^{-1} psi||), eps descending."""
    if epsilons is None:
        epsilons = list(range(len(ops), 0, -1))
    if len(epsilons) != len(ops):
        raise ValueError("one epsilon per operator required")
    for op in ops:
        if op.mesh != op_0.mesh:
            raise ValueError(f"mesh mismatch: {op.mesh} vs {op_0.mesh}")
    ref = [resolvent_apply(op_0, 0.0, p) for p in probes]
    rows = []
    for eps, op in zip(epsilons, ops):
        dist = max(
            (op_0.mesh.norm(resolvent_apply(op, 0.0, p) - q) for p, q in zip(probes, ref)),
            default=0.0,
        )
        rows.append((float(eps), float(dist)))
    rows.sort(key=lambda row: -row[0])
    return rows
