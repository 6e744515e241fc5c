import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from homtoc.control import ControlTrajectory
from homtoc.spectral import (
    CoefficientField,
    ControlMask,
    Mesh1D,
    TimeGrid,
    assemble_operator,
    free_reach_time,
    input_map,
    laplacian_first_eigenvalue,
    modal_operator,
    observe,
    resolvent_apply,
    semigroup_apply,
    simpson_weights,
    sine_modes,
    state_preset,
)
from homtoc.homogenize import PeriodicCoefficient1D, oscillating_coefficient


def laplacian(n):
    mesh = Mesh1D(n)
    return mesh, assemble_operator(CoefficientField.constant_diffusion(mesh), mesh)


def oscillating(n=63, eps=0.25):
    mesh = Mesh1D(n)
    base = PeriodicCoefficient1D("sinusoidal", {"mean": 2.0, "amplitude": 1.0})
    return mesh, assemble_operator(oscillating_coefficient(base, eps, mesh), mesh)


def test_three_node_laplacian_eigenvalues():
    # h = 1/4: 32 - 16 sqrt 2, 32, 32 + 16 sqrt 2
    _, op = laplacian(3)
    expected = [32 - 16 * np.sqrt(2), 32.0, 32 + 16 * np.sqrt(2)]
    assert np.allclose(op.eigenvalues, expected, rtol=0, atol=1e-10)
    assert op.eigenvalues[0] == pytest.approx(9.3726, abs=1e-4)
    assert op.eigenvalues[2] == pytest.approx(54.6274, abs=1e-4)


def test_laplacian_first_eigenvalue_formula():
    mesh, op = laplacian(127)
    assert op.lambda_1 == pytest.approx(laplacian_first_eigenvalue(mesh), rel=1e-12)
    assert op.lambda_1 == pytest.approx(np.pi**2, rel=1e-4)


def test_eigenvectors_orthonormal_and_sign_fixed():
    mesh, op = oscillating()
    V = op.eigenvectors
    assert np.allclose(mesh.h * V.T @ V, np.eye(op.k_modes), atol=1e-10)
    assert np.all(V[0] > 0)


def test_operator_is_self_adjoint():
    mesh, op = oscillating()
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=(2, mesh.n_interior))
    assert mesh.inner(op.apply(u), v) == pytest.approx(mesh.inner(u, op.apply(v)), rel=1e-12)


def test_eigenpairs_satisfy_stiffness_action():
    mesh, op = oscillating()
    for k in (0, 5, 30):
        v = op.eigenvectors[:, k]
        assert np.allclose(op.apply(v), op.eigenvalues[k] * v, atol=1e-8 * op.eigenvalues[k])


def test_rayleigh_quotient_bracketed_by_ellipticity():
    # a_min * lambda_1(-Delta) <= lambda_1(A) <= a_max * lambda_1(-Delta)
    mesh, op = oscillating(n=127, eps=0.125)
    lap = laplacian_first_eigenvalue(mesh)
    assert 1.0 * lap <= op.lambda_1 <= 3.0 * lap


def test_partial_spectrum_matches_full():
    mesh = Mesh1D(63)
    base = PeriodicCoefficient1D("sinusoidal", {})
    coeff = oscillating_coefficient(base, 0.25, mesh)
    full = assemble_operator(coeff, mesh)
    part = assemble_operator(coeff, mesh, k_modes=8)
    assert np.allclose(part.eigenvalues, full.eigenvalues[:8], rtol=1e-10)
    assert np.allclose(part.eigenvectors, full.eigenvectors[:, :8], atol=1e-8)


def test_reaction_above_first_eigenvalue_rejected():
    mesh = Mesh1D(31)
    lam1 = laplacian_first_eigenvalue(mesh)
    with pytest.raises(ValueError, match="lambda_1"):
        assemble_operator(CoefficientField.reaction(np.full(31, lam1 + 0.1)), mesh)
    op = assemble_operator(CoefficientField.reaction(np.full(31, lam1 - 0.1)), mesh)
    assert op.lambda_1 == pytest.approx(0.1, rel=1e-8)


def test_bad_inputs_rejected():
    with pytest.raises(ValueError):
        Mesh1D(1)
    mesh = Mesh1D(15)
    with pytest.raises(ValueError):
        CoefficientField("diffusion", np.zeros(16), (0.0, 1.0))
    with pytest.raises(ValueError):
        ControlMask(mesh, 0.5, 0.4)
    with pytest.raises(ValueError, match="no grid node"):
        ControlMask(mesh, 0.5, 0.51)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 4)
    _, op = laplacian(15)
    with pytest.raises(ValueError):
        semigroup_apply(op, -1.0, np.ones(15))
    with pytest.raises(ValueError):
        resolvent_apply(op, -op.lambda_1, np.ones(15))


def test_semigroup_of_eigenvector_decays_exponentially():
    mesh, op = oscillating()
    v = op.eigenvectors[:, 2]
    assert np.allclose(semigroup_apply(op, 0.01, v), np.exp(-0.01 * op.eigenvalues[2]) * v, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(s=st.floats(0.0, 0.2), t=st.floats(0.0, 0.2), seed=st.integers(0, 2**16))
def test_semigroup_law(s, t, seed):
    mesh, op = oscillating(n=31)
    v = np.random.default_rng(seed).normal(size=31)
    lhs = semigroup_apply(op, s + t, v)
    rhs = semigroup_apply(op, s, semigroup_apply(op, t, v))
    assert mesh.norm(lhs - rhs) <= 1e-12 * max(1.0, mesh.norm(v))


@settings(max_examples=30, deadline=None)
@given(t=st.floats(0.0, 1.0), seed=st.integers(0, 2**16))
def test_semigroup_contraction_and_linearity(t, seed):
    mesh, op = oscillating(n=31)
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(2, 31))
    a, b = rng.normal(size=2)
    assert mesh.norm(semigroup_apply(op, t, u)) <= mesh.norm(u) * (1 + 1e-12)
    assert mesh.norm(semigroup_apply(op, t, u)) <= np.exp(-op.lambda_1 * t) * mesh.norm(u) * (1 + 1e-10)
    lin = semigroup_apply(op, t, a * u + b * v) - a * semigroup_apply(op, t, u) - b * semigroup_apply(op, t, v)
    assert mesh.norm(lin) <= 1e-12 * (abs(a) + abs(b)) * (mesh.norm(u) + mesh.norm(v))


@settings(max_examples=20, deadline=None)
@given(s=st.floats(0.0, 50.0), seed=st.integers(0, 2**16))
def test_resolvent_inverts_shifted_operator(s, seed):
    mesh, op = oscillating(n=31)
    v = np.random.default_rng(seed).normal(size=31)
    w = resolvent_apply(op, s, v)
    assert mesh.norm(s * w + op.apply(w) - v) <= 1e-9 * mesh.norm(v)


def test_observe_restricts_to_omega():
    mesh, op = oscillating(n=31)
    mask = ControlMask(mesh, 0.3, 0.8)
    y = observe(op, mask, 0.01, np.ones(31))
    outside = (mesh.nodes <= 0.3) | (mesh.nodes >= 0.8)
    assert np.all(y[outside] == 0)
    assert np.any(y[~outside] != 0)


def test_simpson_weights_exact_on_cubics():
    w = simpson_weights(11, 2.0)
    x = np.linspace(0, 2.0, 11)
    assert w @ (x**3 - x + 1) == pytest.approx(4.0 - 2.0 + 2.0, rel=1e-14)


def test_input_map_constant_control_closed_form():
    # u(t) = phi_1 on the whole domain: Phi u = (1 - e^{-lambda tau}) / lambda phi_1
    mesh = Mesh1D(31)
    op = modal_operator([1.0, 4.0], mesh)
    phi1 = sine_modes(mesh, 1)[:, 0]
    grid = TimeGrid(0.7, 41)
    u = np.tile(phi1, (41, 1))
    z = input_map(op, ControlMask.full(mesh), u, grid)
    assert np.allclose(z, (1 - np.exp(-0.7)) * phi1, atol=1e-12)


def test_input_map_fourth_order():
    mesh = Mesh1D(31)
    op = modal_operator([3.0], mesh)
    phi1 = sine_modes(mesh, 1)[:, 0]
    tau, lam, w = 1.0, 3.0, 5.0
    # u(t) = cos(w t) phi_1; exact modal value int_0^tau e^{-lam (tau - s)} cos(w s) ds
    exact = (lam * np.cos(w * tau) + w * np.sin(w * tau) - lam * np.exp(-lam * tau)) / (lam**2 + w**2)
    errs = []
    for n_t in (11, 21, 41):
        grid = TimeGrid(tau, n_t)
        u = np.cos(w * grid.nodes)[:, None] * phi1
        z = input_map(op, ControlMask.full(mesh), ControlTrajectory(grid, u, mesh.h), grid)
        errs.append(abs(op.to_modal(z)[0] - exact))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 3.7)


def test_input_map_rejects_mismatched_samples():
    mesh = Mesh1D(15)
    op = modal_operator([1.0], mesh)
    with pytest.raises(ValueError):
        input_map(op, ControlMask.full(mesh), np.zeros((5, 15)), TimeGrid(1.0, 7))


def test_free_reach_time_scalar():
    mesh = Mesh1D(31)
    op = modal_operator([1.0], mesh)
    psi = state_preset(mesh, "modes", coefficients=[2.0])
    assert free_reach_time(op, psi, 1.0) == pytest.approx(np.log(2.0), abs=1e-8)
    assert free_reach_time(op, psi, 3.0) == 0.0


def test_captured_fraction():
    mesh = Mesh1D(63)
    op = modal_operator([1.0, 4.0], mesh)
    psi = state_preset(mesh, "modes", coefficients=[1.0, 1.0, 1.0])
    assert op.captured_fraction(psi) == pytest.approx(2.0 / 3.0, rel=1e-10)
    _, full = laplacian(63)
    assert full.captured_fraction(psi) == pytest.approx(1.0, rel=1e-10)


def test_bump_preset_compact_support():
    mesh = Mesh1D(63)
    b = state_preset(mesh, "bump", center=0.5, width=0.2, amplitude=2.0)
    assert b.max() == pytest.approx(2.0, rel=1e-3)
    assert np.all(b[np.abs(mesh.nodes - 0.5) >= 0.2] == 0)
    with pytest.raises(ValueError):
        state_preset(mesh, "nope")
