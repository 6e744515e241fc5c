"""Norm-optimal and time-optimal control through the auxiliary functional J.

For a horizon tau the functional

    J(eta) = 1/2 (int_0^tau ||B* T_{tau-t} eta|| dt)^2 + <psi, T_tau eta> + r ||eta||

is convex with a unique minimizer eta_hat. The norm-optimal control is the
normalized observation of eta_hat scaled by N*(tau) = int ||B* T_{tau-t} eta_hat||,
and the minimal time for a bound M is the root of N*(tau) = M on (0, tau_hat).

All computations are carried out on modal coefficients of the retained
eigenbasis; the Simpson weights of the time grid are shared by J, its gradient
and the input-to-state map, so the first-order identities (duality and
transversality) hold for the discrete problem up to the solver tolerance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import ControlMask, DiscreteOperator, TimeGrid, free_reach_time, input_map

log = logging.getLogger(__name__)


@dataclass
class SolverSettings:
    n_t: int = 201
    tol_el: float = 1e-7
    max_iter: int = 20000
    tol_tau: float = 1e-6
    bisect_width: float = 1e-3
    max_root_iter: int = 200
    tol_target: float = 1e-5  # relative to r
    vanish_tol: float = 1e-14
    newton_after: int = 500  # proximal-gradient iterations before the Newton finisher

    def __post_init__(self):
        if self.n_t < 3 or self.n_t % 2 == 0:
            raise ValueError(f"n_t must be odd and >= 3, got {self.n_t}")
        for name in ("tol_el", "tol_tau", "bisect_width", "tol_target"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_iter < 1 or self.max_root_iter < 1:
            raise ValueError("iteration caps must be positive")


class RootBracketError(RuntimeError):
    pass


@dataclass
class ControlProblem:
    op: DiscreteOperator
    mask: ControlMask
    psi: np.ndarray
    r: float
    n_t: int = 201

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        if self.psi.shape != (self.op.mesh.n_interior,):
            raise ValueError("psi does not match the operator mesh")
        if self.mask.mesh != self.op.mesh:
            raise ValueError("control mask and operator live on different meshes")
        if not self.r > 0:
            raise ValueError(f"target radius must be positive, got {self.r}")
        h = self.op.mesh.h
        V = self.op.eigenvectors[self.mask.active]
        # Gram matrix of the retained modes restricted to omega
        self.gram = h * (V.T @ V)
        self.psi_modal = self.op.to_modal(self.psi)

    @property
    def psi_norm(self) -> float:
        return float(np.linalg.norm(self.psi_modal))

    def tau_hat(self) -> float:
        return free_reach_time(self.op, self.psi, self.r)

    def grid(self, tau: float, n_t: int | None = None) -> TimeGrid:
        return TimeGrid(tau, n_t or self.n_t)


@dataclass
class ControlTrajectory:
    grid: TimeGrid
    samples: np.ndarray  # (n_t, n_interior), zero outside omega
    h: float

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(self.h * np.sum(self.samples**2, axis=1))

    @property
    def sup_norm(self) -> float:
        return float(self.norms.max())

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes


class _Horizon:
    """Quadrature data for one horizon; evaluates the smooth part of J modally."""

    def __init__(self, problem: ControlProblem, grid: TimeGrid, vanish_tol=1e-14):
        self.problem = problem
        self.grid = grid
        self.weights = grid.weights
        lam = problem.op.eigenvalues
        self.decay = np.exp(-np.outer(grid.tau - grid.nodes, lam))
        self.free = np.exp(-lam * grid.tau) * problem.psi_modal
        self.vanish_tol = vanish_tol

    def observe(self, c):
        """Rows d_j = e^{-lam (tau - t_j)} c, their Gram images and the U-norms."""
        dc = self.decay * c
        gd = dc @ self.problem.gram
        norms = np.sqrt(np.maximum(np.sum(dc * gd, axis=1), 0.0))
        return gd, norms

    def smooth(self, c):
        gd, norms = self.observe(c)
        S = float(self.weights @ norms)
        return 0.5 * S * S + float(self.free @ c), S

    def smooth_and_grad(self, c):
        gd, norms = self.observe(c)
        S = float(self.weights @ norms)
        live = norms > self.vanish_tol
        coef = np.zeros_like(norms)
        coef[live] = self.weights[live] / norms[live]
        grad_S = coef @ (self.decay * gd)
        return 0.5 * S * S + float(self.free @ c), S * grad_S + self.free, S, int((~live).sum())

    def hessian(self, c):
        """Hessian of the smooth part at c (nodes with vanishing observation skipped)."""
        gd, norms = self.observe(c)
        live = norms > self.vanish_tol
        E = self.decay[live]
        n = norms[live]
        w = self.weights[live] / n
        P = E * gd[live] / n[:, None]  # rows: gradients of the pointwise norms
        grad_S = self.weights[live] @ P
        S = float(self.weights @ norms)
        hess_S = self.problem.gram * (E.T @ (E * w[:, None])) - P.T @ (P * w[:, None])
        return np.outer(grad_S, grad_S) + S * hess_S

    def J(self, c) -> float:
        g, _ = self.smooth(c)
        return g + self.problem.r * float(np.linalg.norm(c))

    def el_residual(self, c, grad):
        r = self.problem.r
        nc = np.linalg.norm(c)
        if nc == 0:
            return max(0.0, float(np.linalg.norm(grad)) - r)
        return float(np.linalg.norm(grad + r * c / nc))

    def radial_optimum(self, c):
        """Exact minimizer of J along the ray through c."""
        nc = np.linalg.norm(c)
        if nc == 0:
            return c
        theta = c / nc
        _, S = self.smooth(theta)
        slope = float(self.free @ theta) + self.problem.r
        if slope >= 0 or S == 0:
            return np.zeros_like(c)
        return (-slope / (S * S)) * theta

    def controls(self, c, scale):
        """Grid samples scale * B* T eta / ||B* T eta|| at every node."""
        op, mask = self.problem.op, self.problem.mask
        dc = self.decay * c
        _, norms = self.observe(c)
        obs = (dc @ op.eigenvectors.T) * mask.indicator
        live = norms > self.vanish_tol
        out = np.zeros_like(obs)
        out[live] = scale * obs[live] / norms[live, None]
        return out, norms


def _horizon(problem, tau, settings):
    if not tau > 0:
        raise ValueError(f"horizon must be positive, got {tau}")
    return _Horizon(problem, problem.grid(tau, settings.n_t), settings.vanish_tol)


def eval_J(problem: ControlProblem, tau: float, eta, settings: SolverSettings | None = None) -> float:
    settings = settings or SolverSettings(n_t=problem.n_t)
    return _horizon(problem, tau, settings).J(problem.op.to_modal(eta))


def smooth_part(problem: ControlProblem, tau: float, eta, settings: SolverSettings | None = None) -> float:
    """1/2 S(eta)^2 + <psi, T_tau eta>, the differentiable part of J."""
    settings = settings or SolverSettings(n_t=problem.n_t)
    return _horizon(problem, tau, settings).smooth(problem.op.to_modal(eta))[0]


def grad_smooth_part(problem: ControlProblem, tau: float, eta, settings: SolverSettings | None = None) -> np.ndarray:
    settings = settings or SolverSettings(n_t=problem.n_t)
    hz = _horizon(problem, tau, settings)
    _, grad, _, _ = hz.smooth_and_grad(problem.op.to_modal(eta))
    return problem.op.to_grid(grad)


@dataclass
class MinimizeResult:
    eta: np.ndarray  # grid values
    eta_modal: np.ndarray
    V_star: float
    converged: bool
    iterations: int
    el_residual: float
    vanished_nodes: int


def _prox(v, thresh):
    nv = np.linalg.norm(v)
    if nv <= thresh:
        return np.zeros_like(v)
    return (1.0 - thresh / nv) * v


def _minimize(hz: _Horizon, settings: SolverSettings, c0=None):
    """Accelerated proximal gradient with backtracking and adaptive restart."""
    r = hz.problem.r
    if c0 is None or not np.any(c0):
        c0 = -hz.free
    x = hz.radial_optimum(np.asarray(c0, dtype=float))
    if not np.any(x):
        x = hz.radial_optimum(-hz.free)
    gx, grad_x, _, vanished = hz.smooth_and_grad(x)
    Fx = gx + r * np.linalg.norm(x)
    res = hz.el_residual(x, grad_x)
    y, gy, grad_y = x, gx, grad_x
    t = 1.0
    # initial curvature guess from a short secant probe
    L = 1.0
    probe = x - 1e-6 * (1.0 + np.linalg.norm(x)) * grad_x / max(np.linalg.norm(grad_x), 1e-300)
    _, grad_p, _, _ = hz.smooth_and_grad(probe)
    dp = np.linalg.norm(probe - x)
    if dp > 0:
        L = max(np.linalg.norm(grad_p - grad_x) / dp, 1e-12)
    it = 0
    while it < settings.max_iter:
        if it >= settings.newton_after and res > settings.tol_el:
            # slow proximal-gradient progress means poor conditioning; J is smooth
            # away from eta = 0, so a damped Newton method finishes the job
            xn, res_n, it_n = _newton(hz, x, settings)
            it += it_n
            if res_n < res:
                x, res = xn, res_n
                _, _, _, vanished = hz.smooth_and_grad(x)
            if res <= settings.tol_el or it_n == 0:
                break
        if res <= settings.tol_el:
            # radial polish: the exact minimizer along the ray never raises J and
            # makes V* = -N*^2 / 2 hold to rounding, whatever the size of eta;
            # stop only once the polished point itself meets the tolerance
            xr = hz.radial_optimum(x)
            if not np.any(xr):
                break
            _, grad_r, _, vanished_r = hz.smooth_and_grad(xr)
            res_r = hz.el_residual(xr, grad_r)
            if res_r <= settings.tol_el:
                x, res, vanished = xr, res_r, vanished_r
                return x, res, it, vanished
        it += 1
        while True:
            z = _prox(y - grad_y / L, r / L)
            d = z - y
            gz, S = hz.smooth(z)
            if gz <= gy + grad_y @ d + 0.5 * L * (d @ d) + 1e-15 * abs(gy):
                break
            L *= 2.0
        gz, grad_z, _, vanished = hz.smooth_and_grad(z)
        Fz = gz + r * np.linalg.norm(z)
        res = hz.el_residual(z, grad_z)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        if Fz > Fx:
            # function-value restart
            t_next = 1.0
            y, gy, grad_y = z, gz, grad_z
        else:
            beta = (t - 1.0) / t_next
            y = z + beta * (z - x)
            gy, grad_y, _, _ = hz.smooth_and_grad(y)
        x, Fx, t = z, Fz, t_next
        L *= 0.95
    # iteration cap reached: polish anyway and report the residual honestly
    xr = hz.radial_optimum(x)
    if np.any(xr):
        _, grad_r, _, vanished = hz.smooth_and_grad(xr)
        x, res = xr, hz.el_residual(xr, grad_r)
    return x, res, it, vanished


def _newton(hz: _Horizon, x, settings: SolverSettings, max_steps: int = 100):
    """Damped Newton on the Euler-Lagrange equation grad g + r eta / |eta| = 0.

    Steps are accepted by an Armijo test on J. Returns (x, EL residual, steps).
    """
    r = hz.problem.r
    k = len(x)
    gx, grad, _, _ = hz.smooth_and_grad(x)
    Fx = gx + r * np.linalg.norm(x)
    res = hz.el_residual(x, grad)
    steps = 0
    while res > settings.tol_el and steps < max_steps:
        nx = np.linalg.norm(x)
        if nx == 0:
            break
        theta = x / nx
        F = grad + r * theta
        H = hz.hessian(x) + (r / nx) * (np.eye(k) - np.outer(theta, theta))
        # a small Levenberg shift keeps the solve well posed on flat directions
        shift = 1e-14 * max(np.trace(H) / k, 1e-300)
        try:
            d = np.linalg.solve(H + shift * np.eye(k), -F)
        except np.linalg.LinAlgError:
            break
        slope = float(F @ d)
        if not slope < 0:
            break
        step = 1.0
        while step > 1e-12:
            z = x + step * d
            gz, grad_z, _, _ = hz.smooth_and_grad(z)
            Fz = gz + r * np.linalg.norm(z)
            if Fz <= Fx + 1e-4 * step * slope or abs(Fz - Fx) <= 1e-15 * abs(Fx):
                break
            step *= 0.5
        else:
            break
        res_z = hz.el_residual(z, grad_z)
        steps += 1
        if Fz > Fx and res_z >= res:
            break
        x, Fx, grad, res = z, Fz, grad_z, res_z
    return x, res, steps


def minimize_J(problem: ControlProblem, tau: float, settings: SolverSettings | None = None, eta0=None, tau_hat=None) -> MinimizeResult:
    """Minimize J over the retained modes for 0 < tau < tau_hat."""
    settings = settings or SolverSettings(n_t=problem.n_t)
    if tau_hat is None:
        tau_hat = problem.tau_hat()
    if not 0 < tau < tau_hat:
        raise ValueError(
            f"tau = {tau:.8g} lies outside (0, tau_hat = {tau_hat:.8g}); the minimizer would be zero"
        )
    hz = _horizon(problem, tau, settings)
    c0 = None if eta0 is None else problem.op.to_modal(eta0)
    return _minimize_on(hz, settings, c0)


def _minimize_on(hz, settings, c0):
    c, res, it, vanished = _minimize(hz, settings, c0)
    converged = res <= settings.tol_el
    if not converged:
        log.warning("J minimization stopped after %d iterations with EL residual %.3e", it, res)
    op = hz.problem.op
    return MinimizeResult(op.to_grid(c), c, hz.J(c), converged, it, res, vanished)


@dataclass
class NormOptimalSolution:
    tau: float
    eta_hat: np.ndarray
    N_star: float
    V_star: float
    f_hat: ControlTrajectory
    residuals: dict
    converged: bool
    eta_modal: np.ndarray = field(repr=False, default=None)

    @property
    def bound(self) -> float:
        return self.N_star

    @property
    def horizon(self) -> float:
        return self.tau

    @property
    def control(self) -> ControlTrajectory:
        return self.f_hat


def _control_residuals(problem, hz, c, samples, bound, norms):
    """Terminal state, transversality and maximum-principle diagnostics."""
    op, mesh = problem.op, problem.op.mesh
    grid = hz.grid
    z = op.to_grid(hz.free) + input_map(op, problem.mask, samples, grid)
    eta = op.to_grid(c)
    neta = mesh.norm(eta)
    trans = mesh.norm(z + problem.r * eta / neta) if neta > 0 else float("inf")
    ctrl_norms = np.sqrt(mesh.h * np.sum(samples**2, axis=1))
    inner_ = mesh.h * np.sum(samples * (op.to_grid((hz.decay * c).T).T * problem.mask.indicator), axis=1)
    # exclude the terminal node t = tau from the a.e. statements
    body = slice(0, grid.n_t - 1)
    bb = float(np.max(np.abs(ctrl_norms[body] - bound))) if grid.n_t > 1 else 0.0
    live = norms[body] > 0
    mp = 0.0
    if bound > 0 and live.any():
        gap = bound * norms[body][live] - inner_[body][live]
        mp = float(np.max(gap / (bound * norms[body][live])))
    return {
        "target_residual": mesh.norm(z) - problem.r,
        "transversality": trans,
        "bang_bang_dev": bb,
        "max_principle": mp,
        "terminal_state": z,
    }


def norm_optimal(problem: ControlProblem, tau: float, settings: SolverSettings | None = None, eta0=None, tau_hat=None) -> NormOptimalSolution:
    settings = settings or SolverSettings(n_t=problem.n_t)
    if tau_hat is None:
        tau_hat = problem.tau_hat()
    if not 0 < tau < tau_hat:
        raise ValueError(f"need ||T_tau psi|| > r, i.e. 0 < tau < tau_hat = {tau_hat:.8g}; got tau = {tau}")
    hz = _horizon(problem, tau, settings)
    c0 = None if eta0 is None else problem.op.to_modal(eta0)
    return _norm_optimal_on(problem, hz, settings, c0)


def _norm_optimal_on(problem, hz, settings, c0):
    mr = _minimize_on(hz, settings, c0)
    c = mr.eta_modal
    gval, grad, N, vanished = hz.smooth_and_grad(c)
    samples, norms = hz.controls(c, N)
    diag = _control_residuals(problem, hz, c, samples, N, norms)
    residuals = {
        "el_residual": mr.el_residual,
        "target_residual": diag["target_residual"],
        "duality_gap": abs(mr.V_star + 0.5 * N * N),
        "transversality": diag["transversality"],
        "bang_bang_dev": diag["bang_bang_dev"],
        "max_principle": diag["max_principle"],
        "vanished_nodes": vanished,
        "iterations": mr.iterations,
    }
    converged = mr.converged and diag["target_residual"] <= settings.tol_target * problem.r
    traj = ControlTrajectory(hz.grid, samples, problem.op.mesh.h)
    return NormOptimalSolution(hz.grid.tau, mr.eta, N, mr.V_star, traj, residuals, converged, c)


def minimal_norm_curve(problem: ControlProblem, taus, settings: SolverSettings | None = None):
    """Rows (tau, N*(tau)) for sorted taus in (0, tau_hat), warm-started along the list."""
    settings = settings or SolverSettings(n_t=problem.n_t)
    taus = [float(t) for t in taus]
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("tau list must be strictly increasing")
    tau_hat = problem.tau_hat()
    bad = [t for t in taus if not 0 < t < tau_hat]
    if bad:
        raise ValueError(f"tau values {bad} fall outside (0, tau_hat = {tau_hat:.8g})")
    rows = []
    c = None
    for tau in taus:
        hz = _horizon(problem, tau, settings)
        c, res, _, _ = _minimize(hz, settings, c)
        _, N = hz.smooth(c)
        rows.append((tau, N))
    values = [n for _, n in rows]
    if any(b >= a for a, b in zip(values, values[1:])):
        log.warning("minimal norm curve is not strictly decreasing: %s", values)
    return rows


@dataclass
class TimeOptimalSolution:
    M: float
    tau_star: float
    u_star: ControlTrajectory | None
    eta_hat: np.ndarray
    residuals: dict
    converged: bool
    tau_hat: float
    N_at_tau: float
    evaluations: int = 0
    eta_modal: np.ndarray = field(repr=False, default=None)

    @property
    def bound(self) -> float:
        return self.M

    @property
    def horizon(self) -> float:
        return self.tau_star

    @property
    def control(self):
        return self.u_star


def time_optimal(problem: ControlProblem, M: float, settings: SolverSettings | None = None, eta0=None) -> TimeOptimalSolution:
    """Minimal time to reach B(0, r) with ||u(t)|| <= M, via N*(tau) = M."""
    settings = settings or SolverSettings(n_t=problem.n_t)
    if not M > 0:
        raise ValueError(f"control bound must be positive, got {M}")
    n = problem.op.mesh.n_interior
    if problem.psi_norm <= problem.r:
        return TimeOptimalSolution(
            M, 0.0, None, np.zeros(n), _null_residuals(), True, 0.0, 0.0, 0, np.zeros(problem.op.k_modes)
        )
    tau_hat = problem.tau_hat()
    cache = {}
    warm = {"c": None if eta0 is None else problem.op.to_modal(eta0)}

    def excess(tau):
        if tau >= tau_hat:
            return -M
        if tau not in cache:
            hz = _horizon(problem, tau, settings)
            c, res, _, _ = _minimize(hz, settings, warm["c"])
            _, N = hz.smooth(c)
            cache[tau] = (N, c, hz)
            warm["c"] = c
        return cache[tau][0] - M

    lo, hi = 0.5 * tau_hat, tau_hat
    f_lo, f_hi = excess(lo), -M
    while f_lo <= 0:
        hi, f_hi = lo, f_lo
        lo *= 0.5
        if lo < 1e-12 * tau_hat:
            raise RootBracketError(
                f"could not bracket N*(tau) = {M}: N*({lo:.3e}) - M = {f_lo:.3e}, N*({hi:.3e}) - M = {f_hi:.3e}"
            )
        f_lo = excess(lo)
    if f_hi == 0:
        return _finish(problem, M, hi, cache, settings, tau_hat, hi - lo)
    # bisection phase
    width = min(settings.bisect_width, 0.05 * tau_hat)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fm = excess(mid)
        if fm > 0:
            lo, f_lo = mid, fm
        else:
            hi, f_hi = mid, fm
        if fm == 0:
            return _finish(problem, M, mid, cache, settings, tau_hat, hi - lo)
    # safeguarded secant phase
    a, fa, b, fb = lo, f_lo, hi, f_hi
    best = lo if abs(f_lo) < abs(f_hi) else hi
    for _ in range(settings.max_root_iter):
        if fb == fa:
            x = 0.5 * (lo + hi)
        else:
            x = b - fb * (b - a) / (fb - fa)
        if not lo < x < hi:
            x = 0.5 * (lo + hi)
        fx = excess(x)
        step = abs(x - b)
        if fx > 0:
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        a, fa, b, fb = b, fb, x, fx
        best = x
        if fx == 0 or step <= settings.tol_tau * 1e-2 or abs(fx) <= 1e-12 * M or hi - lo <= 1e-15 * tau_hat:
            break
    else:
        log.warning("root finder hit its iteration cap; bracket [%g, %g]", lo, hi)
    return _finish(problem, M, best, cache, settings, tau_hat, hi - lo)


def _finish(problem, M, tau, cache, settings, tau_hat, width):
    N, c, hz = cache[tau]
    # polish the minimizer at the final horizon to full tolerance
    mr = _minimize_on(hz, settings, c)
    c = mr.eta_modal
    _, N = hz.smooth(c)
    samples, norms = hz.controls(c, M)
    diag = _control_residuals(problem, hz, c, samples, M, norms)
    residuals = {
        "bang_bang_dev": diag["bang_bang_dev"],
        "transversality": diag["transversality"],
        "max_principle": diag["max_principle"],
        "duality_gap": abs(mr.V_star + 0.5 * N * N),
        "inverse_relation": abs(N - M) / M,
        "el_residual": mr.el_residual,
        "target_residual": diag["target_residual"],
        "bracket_width": width,
    }
    traj = ControlTrajectory(hz.grid, samples, problem.op.mesh.h)
    return TimeOptimalSolution(
        M, tau, traj, mr.eta, residuals, mr.converged, tau_hat, N, len(cache), c
    )


def _null_residuals():
    return {
        "bang_bang_dev": 0.0,
        "transversality": 0.0,
        "max_principle": 0.0,
        "duality_gap": 0.0,
        "inverse_relation": 0.0,
        "el_residual": 0.0,
        "target_residual": 0.0,
        "bracket_width": 0.0,
    }


@dataclass
class Tolerances:
    bang_bang: float = 1e-6  # relative to the bound
    transversality: float = 1e-5  # relative to r
    max_principle: float = 1e-8
    duality: float = 1e-8  # relative to max(1, N*^2)
    inverse_relation: float = 1e-4


@dataclass
class VerifyReport:
    bang_bang_dev: float
    transversality_res: float
    max_principle_res: float
    duality_gap: float
    inverse_relation_res: float
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failing(self) -> list:
        return [name for name, ok in self.checks.items() if not ok]

    def as_dict(self) -> dict:
        return {
            "bang_bang_dev": self.bang_bang_dev,
            "transversality_res": self.transversality_res,
            "max_principle_res": self.max_principle_res,
            "duality_gap": self.duality_gap,
            "inverse_relation_res": self.inverse_relation_res,
            "checks": dict(self.checks),
            "passed": self.passed,
        }


def verify_solution(problem: ControlProblem, solution, settings: SolverSettings | None = None, tol: Tolerances | None = None) -> VerifyReport:
    """Recompute every optimality residual from the solution's own control and eta.

    Works for time-optimal and norm-optimal solutions; for the latter the
    inverse relation is checked against the norm bound itself.
    """
    settings = settings or SolverSettings(n_t=problem.n_t)
    tol = tol or Tolerances()
    traj = solution.control
    if traj is None or solution.horizon == 0:
        zero = {k: True for k in ("bang_bang", "transversality", "max_principle", "duality", "inverse_relation")}
        return VerifyReport(0.0, 0.0, 0.0, 0.0, 0.0, zero)
    bound = solution.bound
    grid = traj.grid
    hz = _Horizon(problem, grid, settings.vanish_tol)
    c = problem.op.to_modal(solution.eta_hat)
    _, norms = hz.observe(c)
    diag = _control_residuals(problem, hz, c, traj.samples, bound, norms)
    V = hz.J(c)
    _, N = hz.smooth(c)
    gap = abs(V + 0.5 * N * N)
    # N*(tau) re-evaluated from a fresh minimization warm-started at the stored eta
    mr = _minimize_on(hz, settings, c)
    _, N_fresh = hz.smooth(mr.eta_modal)
    inv = abs(N_fresh - bound) / bound
    checks = {
        "bang_bang": diag["bang_bang_dev"] <= tol.bang_bang * bound,
        "transversality": diag["transversality"] <= tol.transversality * problem.r,
        "max_principle": diag["max_principle"] <= tol.max_principle,
        "duality": gap <= tol.duality * max(1.0, N * N),
        "inverse_relation": inv <= tol.inverse_relation,
    }
    return VerifyReport(diag["bang_bang_dev"], diag["transversality"], diag["max_principle"], gap, inv, checks)


def solution_to_dict(solution, extra: dict | None = None) -> dict:
    """JSON-ready view of a norm- or time-optimal solution."""
    traj = solution.control
    doc = {"schema": 1}
    if isinstance(solution, TimeOptimalSolution):
        doc.update(kind="time", M=solution.M, tau_star=solution.tau_star, N_star=solution.N_at_tau,
                   tau_hat=solution.tau_hat)
    else:
        doc.update(kind="norm", tau=solution.tau, N_star=solution.N_star, V_star=solution.V_star)
    doc["converged"] = bool(solution.converged)
    doc["residuals"] = {k: float(v) for k, v in solution.residuals.items() if np.isscalar(v)}
    doc["eta_hat"] = [float(v) for v in solution.eta_hat]
    if traj is None:
        doc["trajectory"] = {"times": [], "controls": [], "norms": []}
    else:
        doc["trajectory"] = {
            "times": traj.times.tolist(),
            "controls": traj.samples.tolist(),
            "norms": traj.norms.tolist(),
        }
    if extra:
        doc.update(extra)
    return doc


def solution_from_dict(doc: dict, h: float):
    """Rebuild a solution object from :func:`solution_to_dict` output."""
    tr = doc["trajectory"]
    traj = None
    if tr["times"]:
        times = np.asarray(tr["times"], dtype=float)
        traj = ControlTrajectory(TimeGrid(float(times[-1]), len(times)), np.asarray(tr["controls"], dtype=float), h)
    eta = np.asarray(doc["eta_hat"], dtype=float)
    if doc["kind"] == "time":
        return TimeOptimalSolution(doc["M"], doc["tau_star"], traj, eta, doc["residuals"], doc["converged"],
                                   doc.get("tau_hat", 0.0), doc.get("N_star", 0.0))
    return NormOptimalSolution(doc["tau"], eta, doc["N_star"], doc["V_star"], traj, doc["residuals"], doc["converged"])
