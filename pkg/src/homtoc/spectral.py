"""Spectral discretization of 1-D self-adjoint parabolic generators.

Everything here works in the h-weighted inner product ``<u, v> = h * sum(u * v)``
on interior grid nodes of (0, 1) with homogeneous Dirichlet conditions. The
semigroup is realized exactly in time through the eigendecomposition of the
flux-form finite-difference operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal


@dataclass(frozen=True)
class Mesh1D:
    n_interior: int

    def __post_init__(self):
        if int(self.n_interior) != self.n_interior or self.n_interior < 2:
            raise ValueError(f"n_interior must be an integer >= 2, got {self.n_interior}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_interior + 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.n_interior + 1) * self.h

    @property
    def edges(self) -> np.ndarray:
        """Edge midpoints x_{i+1/2}, i = 0..n_interior."""
        return (np.arange(self.n_interior + 1) + 0.5) * self.h

    def inner(self, u, v) -> float:
        return float(self.h * np.dot(u, v))

    def norm(self, v) -> float:
        return float(np.sqrt(self.h * np.dot(v, v)))


@dataclass(frozen=True)
class CoefficientField:
    """Diffusion coefficient on edges or reaction coefficient on nodes."""

    kind: str
    values: np.ndarray
    bounds: tuple[float, float]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        lo, hi = self.bounds
        if self.kind == "diffusion":
            if lo <= 0:
                raise ValueError(f"diffusion lower bound must be positive, got {lo}")
            if vals.min() < lo * (1 - 1e-12) or vals.max() > hi * (1 + 1e-12):
                raise ValueError(
                    f"diffusion values in [{vals.min():.6g}, {vals.max():.6g}] "
                    f"escape the ellipticity bounds [{lo:.6g}, {hi:.6g}]"
                )
        elif self.kind == "reaction":
            pass
        else:
            raise ValueError(f"unknown coefficient kind {self.kind!r}")

    @classmethod
    def constant_diffusion(cls, mesh: Mesh1D, c: float = 1.0) -> "CoefficientField":
        return cls("diffusion", np.full(mesh.n_interior + 1, float(c)), (float(c), float(c)))

    @classmethod
    def reaction(cls, values) -> "CoefficientField":
        vals = np.asarray(values, dtype=float)
        return cls("reaction", vals, (float(vals.min()), float(vals.max())))


def laplacian_first_eigenvalue(mesh: Mesh1D) -> float:
    """Smallest eigenvalue of the discrete Dirichlet Laplacian, (4/h^2) sin^2(pi h / 2)."""
    h = mesh.h
    return 4.0 / h**2 * np.sin(np.pi * h / 2) ** 2


def sine_modes(mesh: Mesh1D, k_modes: int) -> np.ndarray:
    """Columns sqrt(2) sin(k pi x_i), k = 1..k_modes; h-orthonormal on the grid."""
    k = np.arange(1, k_modes + 1)
    return np.sqrt(2.0) * np.sin(np.pi * np.outer(mesh.nodes, k))


@dataclass(frozen=True)
class DiscreteOperator:
    """Retained spectral data of a discretized generator.

    ``eigenvectors`` has shape (n_interior, K) and is orthonormal in the
    h-weighted inner product. ``diag``/``offdiag`` hold the assembled
    tridiagonal matrix when one exists (None for purely modal operators).
    """

    mesh: Mesh1D
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    diag: np.ndarray | None = field(default=None, repr=False)
    offdiag: np.ndarray | None = field(default=None, repr=False)

    @property
    def k_modes(self) -> int:
        return len(self.eigenvalues)

    @property
    def lambda_1(self) -> float:
        return float(self.eigenvalues[0])

    def to_modal(self, v) -> np.ndarray:
        return self.mesh.h * (self.eigenvectors.T @ np.asarray(v, dtype=float))

    def to_grid(self, c) -> np.ndarray:
        return self.eigenvectors @ np.asarray(c, dtype=float)

    def apply(self, v) -> np.ndarray:
        """Stiffness action A v."""
        v = np.asarray(v, dtype=float)
        if self.diag is None:
            return self.to_grid(self.eigenvalues * self.to_modal(v))
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def captured_fraction(self, v) -> float:
        """Share of ||v||^2 carried by the retained modes."""
        total = self.mesh.norm(v) ** 2
        if total == 0:
            return 1.0
        c = self.to_modal(v)
        return float(np.dot(c, c) / total)


def _tridiagonal(coeff: CoefficientField, mesh: Mesh1D):
    n, h = mesh.n_interior, mesh.h
    if coeff.kind == "diffusion":
        a = coeff.values
        if len(a) != n + 1:
            raise ValueError(f"diffusion field needs {n + 1} edge values, got {len(a)}")
        return (a[:-1] + a[1:]) / h**2, -a[1:-1] / h**2
    a = coeff.values
    if len(a) != n:
        raise ValueError(f"reaction field needs {n} node values, got {len(a)}")
    lam1 = laplacian_first_eigenvalue(mesh)
    sup = float(np.max(np.abs(a)))
    if sup >= lam1:
        raise ValueError(
            f"reaction sup-norm {sup:.6g} is not below the first Dirichlet eigenvalue "
            f"lambda_1 = {lam1:.6g} of the discrete Laplacian"
        )
    return np.full(n, 2.0 / h**2) - a, np.full(n - 1, -1.0 / h**2)


def assemble_operator(coeff: CoefficientField, mesh: Mesh1D, k_modes: int | None = None) -> DiscreteOperator:
    """Assemble the flux-form operator and keep its ``k_modes`` smallest eigenpairs."""
    n = mesh.n_interior
    if k_modes is None:
        k_modes = n if n <= 512 else 512
    if not 1 <= k_modes <= n:
        raise ValueError(f"k_modes must lie in [1, {n}], got {k_modes}")
    d, e = _tridiagonal(coeff, mesh)
    if k_modes == n:
        lam, vec = eigh_tridiagonal(d, e, lapack_driver="stev")
    else:
        lam, vec = eigh_tridiagonal(d, e, select="i", select_range=(0, k_modes - 1), lapack_driver="stebz")
    if lam[0] <= 0:
        raise ValueError(
            f"assembled operator is not positive definite (smallest eigenvalue {lam[0]:.6g}); "
            f"the reaction coefficient must stay below the Laplacian's lambda_1 = "
            f"{laplacian_first_eigenvalue(mesh):.6g}"
        )
    # unreduced tridiagonal: first component never vanishes, fixes the sign
    vec = vec * np.sign(vec[0])
    vec /= np.sqrt(mesh.h)
    return DiscreteOperator(mesh, lam, vec, d, e)


def modal_operator(eigenvalues, mesh: Mesh1D) -> DiscreteOperator:
    """Operator with prescribed eigenvalues on the discrete sine basis.

    Used for low-dimensional model problems where closed forms are available.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.ndim != 1 or len(lam) == 0 or np.any(lam <= 0):
        raise ValueError("eigenvalues must be a non-empty list of positive numbers")
    if np.any(np.diff(lam) < 0):
        raise ValueError("eigenvalues must be ascending")
    if len(lam) > mesh.n_interior:
        raise ValueError("more modes than grid nodes")
    return DiscreteOperator(mesh, lam, sine_modes(mesh, len(lam)))


def semigroup_apply(op: DiscreteOperator, t: float, v) -> np.ndarray:
    if t < 0:
        raise ValueError(f"semigroup time must be non-negative, got {t}")
    if t == 0:
        return np.array(v, dtype=float)
    return op.to_grid(np.exp(-op.eigenvalues * t) * op.to_modal(v))


def resolvent_apply(op: DiscreteOperator, s: float, v) -> np.ndarray:
    """(sI + A)^{-1} v; s = 0 gives A^{-1} v."""
    if s <= -op.lambda_1:
        raise ValueError(f"s = {s} must exceed -lambda_1 = {-op.lambda_1:.6g}")
    return op.to_grid(op.to_modal(v) / (s + op.eigenvalues))


@dataclass(frozen=True)
class ControlMask:
    """Indicator of the open control interval omega = (left, right)."""

    mesh: Mesh1D
    left: float
    right: float

    def __post_init__(self):
        if not (0.0 <= self.left < self.right <= 1.0):
            raise ValueError(f"control interval ({self.left}, {self.right}) must satisfy 0 <= left < right <= 1")
        if not self.indicator.any():
            raise ValueError(f"control interval ({self.left}, {self.right}) contains no grid node")

    @property
    def indicator(self) -> np.ndarray:
        x = self.mesh.nodes
        return ((x > self.left) & (x < self.right)).astype(float)

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.indicator)

    @classmethod
    def full(cls, mesh: Mesh1D) -> "ControlMask":
        return cls(mesh, 0.0, 1.0)


def observe(op: DiscreteOperator, mask: ControlMask, lag: float, eta) -> np.ndarray:
    """B* T_lag eta: the semigroup image restricted to omega."""
    return mask.indicator * semigroup_apply(op, lag, eta)


@dataclass(frozen=True)
class TimeGrid:
    """Composite Simpson nodes on [0, tau]; ``n_t`` odd."""

    tau: float
    n_t: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"horizon must be positive, got {self.tau}")
        if self.n_t < 3 or self.n_t % 2 == 0:
            raise ValueError(f"Simpson rule needs an odd node count >= 3, got {self.n_t}")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.tau, self.n_t)

    @property
    def weights(self) -> np.ndarray:
        return simpson_weights(self.n_t, self.tau)


def simpson_weights(n: int, length: float) -> np.ndarray:
    step = length / (n - 1)
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * step / 3.0


def input_map(op: DiscreteOperator, mask: ControlMask, u, grid: TimeGrid) -> np.ndarray:
    """Phi_tau u = int_0^tau T_{tau - s} B u(s) ds by composite Simpson.

    ``u`` is either a ControlTrajectory or an (n_t, n_interior) array of samples.
    """
    samples = getattr(u, "samples", u)
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] != grid.n_t:
        raise ValueError(f"control has {samples.shape[0] if samples.ndim else 0} time samples, grid has {grid.n_t}")
    if samples.shape[1] != op.mesh.n_interior:
        raise ValueError("control samples do not match the spatial mesh")
    lags = grid.tau - grid.nodes
    modal = op.mesh.h * (samples * mask.indicator) @ op.eigenvectors
    decay = np.exp(-np.outer(lags, op.eigenvalues))
    return op.to_grid(grid.weights @ (decay * modal))


def free_reach_time(op: DiscreteOperator, psi, r: float) -> float:
    """First time the uncontrolled trajectory enters the closed ball B(0, r)."""
    if r <= 0:
        raise ValueError(f"target radius must be positive, got {r}")
    c = op.to_modal(psi)
    c2 = c * c
    norm0 = np.sqrt(c2.sum())
    if norm0 <= r:
        return 0.0

    def excess(t):
        return np.sqrt(np.dot(c2, np.exp(-2.0 * op.eigenvalues * t))) - r

    lo, hi = 0.0, np.log(norm0 / r) / op.lambda_1
    # ||T_t psi|| <= e^{-lambda_1 t} ||psi|| makes hi a valid upper bracket
    while excess(hi) > 0:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def _modes_state(mesh, coefficients=(1.0,)):
    coefficients = np.asarray(coefficients, dtype=float)
    return sine_modes(mesh, len(coefficients)) @ coefficients


def _bump_state(mesh, center=0.5, width=0.25, amplitude=1.0):
    s = (mesh.nodes - center) / width
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return amplitude * out


STATE_PRESETS = {"modes": _modes_state, "bump": _bump_state}


def state_preset(mesh: Mesh1D, name: str, **params) -> np.ndarray:
    """Named analytic initial state sampled on the interior nodes.

    ``modes``: sum_k c_k sqrt(2) sin(k pi x); ``bump``: smooth compact bump.
    """
    if name not in STATE_PRESETS:
        raise ValueError(f"unknown state preset {name!r}; choose from {sorted(STATE_PRESETS)}")
    return STATE_PRESETS[name](mesh, **params)
