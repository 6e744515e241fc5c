import numpy as np
import pytest

from homtoc.control import ControlProblem
from homtoc.spectral import ControlMask, Mesh1D, modal_operator, state_preset


def scalar_problem(n_interior=63, r=1.0):
    """lambda = 1, full-domain control, psi = 2 phi_1."""
    mesh = Mesh1D(n_interior)
    op = modal_operator([1.0], mesh)
    psi = state_preset(mesh, "modes", coefficients=[2.0])
    return ControlProblem(op, ControlMask.full(mesh), psi, r)


def two_mode_problem():
    """lambda = {1, 4}, omega = (0.3, 0.8), psi = 2 phi_1 + phi_2, r = 1."""
    mesh = Mesh1D(255)
    op = modal_operator([1.0, 4.0], mesh)
    psi = state_preset(mesh, "modes", coefficients=[2.0, 1.0])
    return ControlProblem(op, ControlMask(mesh, 0.3, 0.8), psi, 1.0)


def random_modal_problem(rng, n_interior=63):
    """Two or three modes, random spectrum, control interval, initial state and radius."""
    k = int(rng.integers(2, 4))
    lam = np.sort(rng.uniform(0.5, 12.0, size=k))
    mesh = Mesh1D(n_interior)
    op = modal_operator(lam, mesh)
    left = rng.uniform(0.0, 0.5)
    right = rng.uniform(left + 0.2, 1.0)
    coeffs = rng.uniform(-3.0, 3.0, size=k)
    coeffs[0] = np.sign(coeffs[0] or 1.0) * rng.uniform(2.0, 4.0)
    psi = state_preset(mesh, "modes", coefficients=coeffs.tolist())
    r = float(rng.uniform(0.3, 1.0))
    return ControlProblem(op, ControlMask(mesh, left, right), psi, r)


@pytest.fixture
def scalar():
    return scalar_problem()


@pytest.fixture(scope="session")
def two_mode():
    return two_mode_problem()
