"""Independent reference values for the two-mode model problem.

Eigenvalues {1, 4} on the discrete sine basis of a 255-node mesh, control on
(0.3, 0.8), psi = 2 phi_1 + phi_2, r = 1. The functional is evaluated with
adaptive quadrature (scipy.integrate.quad) and minimized with Nelder-Mead;
nothing from the package is imported. Run it to regenerate the constants
frozen in tests/test_control.py.
"""

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize

N_NODES = 255
LAM = np.array([1.0, 4.0])
PSI = np.array([2.0, 1.0])
R = 1.0
OMEGA = (0.3, 0.8)


def gram():
    h = 1.0 / (N_NODES + 1)
    x = np.arange(1, N_NODES + 1) * h
    inside = (x > OMEGA[0]) & (x < OMEGA[1])
    phi = np.sqrt(2.0) * np.sin(np.pi * np.outer(x[inside], [1, 2]))
    return h * phi.T @ phi


G = gram()


def obs_norm(c, lag):
    d = np.exp(-LAM * lag) * c
    return np.sqrt(max(d @ G @ d, 0.0))


def S(c, tau):
    return quad(lambda t: obs_norm(c, tau - t), 0.0, tau, epsabs=1e-14, epsrel=1e-13, limit=200)[0]


def J(c, tau):
    return 0.5 * S(c, tau) ** 2 + np.dot(np.exp(-LAM * tau) * PSI, c) + R * np.linalg.norm(c)


def minimize_J(tau, c0=(-1.0, -1.0)):
    best = None
    for start in (np.asarray(c0, float), -np.exp(-LAM * tau) * PSI * 3):
        res = minimize(J, start, args=(tau,), method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-15, "maxiter": 20000, "maxfev": 40000})
        res = minimize(J, res.x, args=(tau,), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-16, "maxiter": 20000, "maxfev": 40000})
        if best is None or res.fun < best.fun:
            best = res
    return best.x, best.fun, S(best.x, tau)


if __name__ == "__main__":
    c, V, N = minimize_J(0.5)
    print(f"tau = 0.5: eta = {c.tolist()!r}, V* = {V!r}, N* = {N!r}, V*+N*^2/2 = {V + 0.5 * N * N:.3e}")
    tau_hat = brentq(lambda t: np.linalg.norm(np.exp(-LAM * t) * PSI) - R, 0.0, 10.0, xtol=1e-15)
    print(f"tau_hat = {tau_hat!r}")
    tau_star = brentq(lambda t: minimize_J(t)[2] - 2.0, 0.05, tau_hat - 1e-6, xtol=1e-10)
    print(f"M = 2: tau* = {tau_star!r}")
