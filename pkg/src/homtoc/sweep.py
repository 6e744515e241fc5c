"""Epsilon sweeps: time-optimal solves along a coefficient family versus the limit."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .control import ControlProblem, ControlTrajectory, SolverSettings, time_optimal
from .homogenize import (
    PeriodicCoefficient1D,
    homogenized_coefficient_1d,
    homogenized_field,
    oscillating_coefficient,
    reaction_family,
)
from .spectral import (
    ControlMask,
    Mesh1D,
    TimeGrid,
    assemble_operator,
    resolvent_apply,
    simpson_weights,
    state_preset,
)

log = logging.getLogger(__name__)

SCHEMA = 1
CSV_COLUMNS = [
    "epsilon",
    "tau_star",
    "tau_err",
    "ctrl_l2",
    "ctrl_linf_trunc",
    "semigroup_dist",
    "resolvent_dist",
    "converged",
]


@dataclass
class SweepConfig:
    family: str = "diffusion"  # diffusion | reaction
    preset: str = "sinusoidal"
    params: dict = field(default_factory=lambda: {"mean": 2.0, "amplitude": 1.0})
    epsilons: list = field(default_factory=lambda: [1 / 4, 1 / 8, 1 / 16, 1 / 32])
    n_interior: int = 255
    omega: tuple = (0.3, 0.8)
    psi: str = "modes"
    psi_params: dict = field(default_factory=lambda: {"coefficients": [2.0, 0.5]})
    r: float = 1.0
    M: float = 2.0
    delta: float | None = None  # None: a quarter of tau*_0
    settings: SolverSettings = field(default_factory=SolverSettings)
    output: str = "sweep_out"

    def __post_init__(self):
        if self.family not in ("diffusion", "reaction"):
            raise ValueError(f"family must be 'diffusion' or 'reaction', got {self.family!r}")
        eps = [float(e) for e in self.epsilons]
        if any(e <= 0 for e in eps):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        self.epsilons = eps
        h = 1.0 / (self.n_interior + 1)
        if self.family == "diffusion" and any(e < 4 * h for e in eps):
            raise ValueError(f"every epsilon must be >= 4h = {4 * h:.6g} to resolve the oscillation")
        if self.r <= 0 or self.M <= 0:
            raise ValueError("r and M must be positive")
        if self.delta is not None and self.delta <= 0:
            raise ValueError("delta must be positive")
        self.omega = tuple(float(w) for w in self.omega)

    def as_dict(self) -> dict:
        """Everything that determines the numbers (the output location excluded)."""
        d = dataclasses.asdict(self)
        d.pop("output")
        d["omega"] = list(d["omega"])
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class SweepRecord:
    epsilon: float
    tau_star: float
    tau_err: float
    ctrl_l2: float
    ctrl_linf_trunc: float
    semigroup_dist: float
    resolvent_dist: float
    converged: bool
    residuals: dict
    config_hash: str

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepRecord":
        return cls(**d)


def resample(traj: ControlTrajectory | None, times, n_interior: int) -> np.ndarray:
    """Linear interpolation of a trajectory at ``times``; zero beyond its horizon."""
    times = np.asarray(times, dtype=float)
    out = np.zeros((len(times), n_interior))
    if traj is None:
        return out
    t = traj.times
    inside = times <= t[-1] * (1 + 1e-14)
    tq = np.minimum(times[inside], t[-1])
    idx = np.clip(np.searchsorted(t, tq, side="right") - 1, 0, len(t) - 2)
    frac = ((tq - t[idx]) / (t[idx + 1] - t[idx]))[:, None]
    out[inside] = (1 - frac) * traj.samples[idx] + frac * traj.samples[idx + 1]
    return out


def control_distance(u_a, u_b, horizon: float, delta: float, h: float | None = None, n_t: int | None = None):
    """(L2 distance on [0, horizon], max-node distance on [0, horizon - delta]).

    Both trajectories are resampled by linear interpolation onto a common grid
    over [0, horizon], each extended by zero past its own horizon. The common
    grid is split at any trajectory horizon falling inside (0, horizon) so the
    jump to zero sits on a panel boundary instead of inside a Simpson panel.
    """
    if not 0 < delta < horizon:
        raise ValueError(f"delta = {delta} must lie in (0, horizon = {horizon})")
    trajs = [u for u in (u_a, u_b) if u is not None]
    if not trajs:
        return 0.0, 0.0
    h = trajs[0].h if h is None else h
    n = trajs[0].samples.shape[1]
    if n_t is None:
        n_t = max(u.grid.n_t for u in trajs)
        n_t += 1 - n_t % 2
    cuts = sorted({u.grid.tau for u in trajs if 0 < u.grid.tau < horizon} | {0.0, horizon})
    l2sq = 0.0
    linf = 0.0
    for start, stop in zip(cuts, cuts[1:]):
        nodes = start + TimeGrid(stop - start, n_t).nodes
        weights = simpson_weights(n_t, stop - start)

        def piece(u):
            # a trajectory ending at or before ``start`` is zero on this panel
            if u is None or u.grid.tau <= start:
                return np.zeros((n_t, n))
            return resample(u, nodes, n)

        pointwise = np.sqrt(h * np.sum((piece(u_a) - piece(u_b)) ** 2, axis=1))
        l2sq += float(weights @ pointwise**2)
        keep = nodes <= horizon - delta
        if keep.any():
            linf = max(linf, float(pointwise[keep].max()))
    return math.sqrt(max(l2sq, 0.0)), linf


def _semigroup_traj(op, psi, times):
    c = op.to_modal(psi)
    return (np.exp(-np.outer(times, op.eigenvalues)) * c) @ op.eigenvectors.T


def build_family(config: SweepConfig, mesh: Mesh1D):
    """Operators for each epsilon plus the limit operator and its coefficient summary."""
    if config.family == "diffusion":
        base = PeriodicCoefficient1D(config.preset, dict(config.params))
        ops = [assemble_operator(oscillating_coefficient(base, e, mesh), mesh) for e in config.epsilons]
        op0 = assemble_operator(homogenized_field(base, mesh), mesh)
        info = {"a0": homogenized_coefficient_1d(base), "bounds": list(base.bounds), "smooth": base.smooth}
    else:
        fam = reaction_family(config.preset, config.epsilons, mesh, dict(config.params))
        ops = [assemble_operator(f, mesh) for f in fam.fields]
        op0 = assemble_operator(fam.limit, mesh)
        info = {"coefficient_dist": fam.distances, "smooth": True}
    return ops, op0, info


def run_sweep(config: SweepConfig):
    """Solve the limit problem, then each epsilon problem; returns (records, summary)."""
    mesh = Mesh1D(config.n_interior)
    mask = ControlMask(mesh, *config.omega)
    psi = state_preset(mesh, config.psi, **config.psi_params)
    settings = config.settings
    chash = config.config_hash()
    ops, op0, info = build_family(config, mesh)

    prob0 = ControlProblem(op0, mask, psi, config.r, settings.n_t)
    sol0 = time_optimal(prob0, config.M, settings)
    tau0 = sol0.tau_star
    delta = config.delta if config.delta is not None else 0.25 * tau0
    summary = {
        "tau_star_0": tau0,
        "tau_hat_0": sol0.tau_hat,
        "delta": delta,
        "converged_0": bool(sol0.converged),
        "residuals_0": _floats(sol0.residuals),
        "lambda_1_0": op0.lambda_1,
        "coefficient": info,
    }
    if not 0 < delta < tau0:
        raise ValueError(f"delta = {delta} must lie in (0, tau*_0 = {tau0:.6g})")
    times0 = sol0.u_star.times if sol0.u_star is not None else np.array([0.0])
    free0 = _semigroup_traj(op0, psi, times0)
    res0 = resolvent_apply(op0, 0.0, psi)

    records = []
    for eps, op in zip(config.epsilons, ops):
        prob = ControlProblem(op, mask, psi, config.r, settings.n_t)
        try:
            sol = time_optimal(prob, config.M, settings, eta0=sol0.eta_hat)
        except Exception as exc:  # keep the sweep total
            log.error("epsilon = %g failed: %s", eps, exc)
            records.append(SweepRecord(eps, *([None] * 6), False, {"error": str(exc)}, chash))
            continue
        l2, linf = control_distance(sol.u_star, sol0.u_star, tau0, delta, mesh.h, settings.n_t)
        sg = np.sqrt(mesh.h * np.sum((_semigroup_traj(op, psi, times0) - free0) ** 2, axis=1)).max()
        rd = mesh.norm(resolvent_apply(op, 0.0, psi) - res0)
        records.append(
            SweepRecord(
                eps,
                float(sol.tau_star),
                float(abs(sol.tau_star - tau0)),
                float(l2),
                float(linf),
                float(sg),
                float(rd),
                bool(sol.converged),
                _floats(sol.residuals),
                chash,
            )
        )
        log.info("epsilon = %g: tau* = %.10f (limit %.10f)", eps, sol.tau_star, tau0)
    return records, summary


def _floats(d):
    return {k: float(v) for k, v in d.items() if np.isscalar(v) and not isinstance(v, str)}


def _fmt(v):
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return f"{float(v):.17g}"


def emit_report(records, config: SweepConfig, path, summary: dict | None = None):
    """Write sweep.csv, sweep.json and plotdata/ under ``path``; returns the paths written."""
    out = Path(path)
    chash = config.config_hash()
    try:
        (out / "plotdata").mkdir(parents=True, exist_ok=True)
        csv_path = out / "sweep.csv"
        with open(csv_path, "w", newline="") as fh:
            fh.write(f"# config_hash={chash} schema={SCHEMA}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for rec in records:
                w.writerow([_fmt(getattr(rec, c)) for c in CSV_COLUMNS])

        doc = {
            "schema": SCHEMA,
            "tool": "homtoc",
            "version": __version__,
            "config_hash": chash,
            "config": config.as_dict(),
            "summary": summary or {},
            "records": [rec.as_dict() for rec in records],
        }
        json_path = out / "sweep.json"
        json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

        plot_paths = []
        series = {
            "tau_vs_eps.csv": ["epsilon", "tau_star"],
            "distances_vs_eps.csv": ["epsilon", "tau_err", "ctrl_l2", "ctrl_linf_trunc", "semigroup_dist", "resolvent_dist"],
        }
        for name, cols in series.items():
            p = out / "plotdata" / name
            with open(p, "w", newline="") as fh:
                fh.write(f"# config_hash={chash} schema={SCHEMA}\n")
                if name == "distances_vs_eps.csv":
                    fh.write("# log-log axes; columns are positive distances\n")
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for rec in records:
                    w.writerow([_fmt(getattr(rec, c)) for c in cols])
            plot_paths.append(p)
    except OSError as exc:
        raise OSError(f"could not write sweep report under {out}: {exc}") from exc
    return [csv_path, json_path, *plot_paths]


def load_report(path):
    """Read sweep.json back into (records, document)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported sweep schema {doc.get('schema')!r}")
    return [SweepRecord.from_dict(r) for r in doc["records"]], doc
