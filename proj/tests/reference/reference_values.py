"""Independent reference values for the unit tests.

Builds each regime from its complex amplitude equations (a, a^dagger form),
maps to symmetrized quadratures with an explicit change of basis and solves
the Lyapunov equation with scipy. Nothing here shares code with the C++ library.
Run: python3 tests/reference/reference_values.py
"""

import numpy as np
from scipy.linalg import solve_continuous_lyapunov, expm
from scipy.optimize import minimize_scalar

HBAR, KB, C = 1.054571817e-34, 1.380649e-23, 299792458.0


def real_system(couplings, detunings, gammas, occupations):
    """couplings: list of (target, source, kappa, conj) meaning d c_target += kappa * (c_source or c_source^dagger)."""
    m = len(gammas)
    M = np.zeros((2 * m, 2 * m), complex)  # acts on (c_1..c_m, c_1^dag..c_m^dag)
    for j in range(m):
        M[j, j] = 1j * detunings[j] - gammas[j] / 2
        M[m + j, m + j] = np.conj(M[j, j])
    for t, s, kappa, conj in couplings:
        col = m + s if conj else s
        M[t, col] += kappa
        M[m + t, (s if conj else m + s)] += np.conj(kappa)
    # u = T z with x = (c + c^dag)/sqrt2, y = -i (c - c^dag)/sqrt2, ordered x1,y1,x2,y2,...
    T = np.zeros((2 * m, 2 * m), complex)
    for j in range(m):
        T[2 * j, j] = T[2 * j, m + j] = 1 / np.sqrt(2)
        T[2 * j + 1, j], T[2 * j + 1, m + j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
    A = (T @ M @ np.linalg.inv(T)).real
    D = np.diag(np.repeat([g * (n + 0.5) for g, n in zip(gammas, occupations)], 2))
    return A, D


def steady(A, D):
    return solve_continuous_lyapunov(A, -D)


def occ(V, k):
    return (V[2 * k, 2 * k] + V[2 * k + 1, 2 * k + 1]) / 2 - 0.5


def log_neg(V):
    V = V.copy()
    P = np.diag([1, 1, 1, -1])
    V = P @ V @ P
    Om = np.kron(np.eye(2), np.array([[0, 1], [-1, 0]]))
    nu = np.sort(np.abs(np.linalg.eigvals(1j * Om @ V)))
    return max(0.0, -np.log(2 * nu[0]))


def show(name, value):
    print(f"{name} = {value!r}")


# Device-level numbers.
omega_b = 2 * np.pi * 9e9
show("voltage_zero_point(9 GHz, 1 pF)", np.sqrt(HBAR * omega_b / 2e-12))
show("N(9 GHz, 300 K)", 1 / np.expm1(HBAR * omega_b / (KB * 300)))
show("N(1550 nm, 300 K)", 1 / np.expm1(HBAR * 2 * np.pi * C / 1550e-9 / (KB * 300)))

# Parametric amplifier: da = i g alpha+ b^dag, db = i g alpha+ a^dag.
ga, gb, g = 1.0, 0.3, 0.1
for c_plus, na, nb in [(0.5, 0.0, 0.0), (0.5, 0.2, 3.0), (0.9, 0.0, 0.0)]:
    alpha = np.sqrt(c_plus * ga * gb) / (2 * g) * np.exp(0.7j)
    A, D = real_system([(0, 1, 1j * g * alpha, True), (1, 0, 1j * g * alpha, True)], [0, 0], [ga, gb], [na, nb])
    V = steady(A, D)
    show(f"pa C+={c_plus} Na={na} Nb={nb}: n_a, n_b, E_N", (occ(V, 0), occ(V, 1), log_neg(V)))

# Parasitic three-mode system over (am, ap, b).
ga, gb, g, a0 = 1.0, 0.01, 0.005, 1.0
delta = ga / (4 * np.sqrt(0.5))
for nm, npl, nb in [(0.0, 0.0, 3.0), (0.1, 0.2, 3.0)]:
    A, D = real_system(
        [(0, 2, 1j * g * a0, True), (1, 2, 1j * g * a0, False), (2, 1, 1j * g * a0, False), (2, 0, 1j * g * a0, True)],
        [2 * delta, 0, 0], [ga, ga, gb], [nm, npl, nb])
    V = steady(A, D)
    show(f"parasitic mu=0.5 N-={nm} N+={npl} Nb={nb}: n_b", occ(V, 2))

# Back-action evasion, bath off, paper quadratures (vacuum variance 1).
k, ga, na = 0.1, 1.0, 0.0  # g|alpha|
A = np.array([[-ga / 2, 0, 0, 0], [0, -ga / 2, 2 * k, 0], [0, 0, 0, 0], [2 * k, 0, 0, 0]])
D = np.diag([ga * (na + 0.5)] * 2 + [0, 0])
V0 = 0.5 * np.eye(4)
n = 4
big = np.block([[-A, D], [np.zeros((n, n)), A.T]])
dt = 0.5  # one long Van Loan step loses precision to the e^{gamma t/2} block
E = expm(big * dt)
Phi = E[n:, n:].T
Q = Phi @ E[:n, n:]
Vt = V0
for step in range(1, 201):
    Vt = Phi @ Vt @ Phi.T + Q
    if step in (2, 200):
        show(f"bae k=0.1 t={step * dt}: Var(Y_b), Var(X_b)", (2 * Vt[3, 3], 2 * Vt[2, 2]))

# Optimal detuning with N_b = 0 (feasibility pump, g = 2 pi x 5 kHz).
ga, gb, g = 2 * np.pi * 40e6, 2 * np.pi * 90e6, 2 * np.pi * 5e3
P, wa = 2e-3, 2 * np.pi * C / 1550e-9


def n_ss(logd, nb):
    d = np.exp(logd)
    photons = ga * P / (HBAR * wa * (d * d + ga * ga / 4))
    mu = ga * ga / (16 * d * d)
    G = 4 * g * g * photons / (ga * gb) / (1 + mu)
    return (nb + G * mu) / (1 + G)


grid = np.linspace(np.log(ga / 100), np.log(100 * ga), 200001)
vals = n_ss(grid, 0.0)
i = int(np.argmin(vals))
show("N_b=0 argmin index (0 or last means interval edge)", (i, len(grid) - 1))
show("N_b=0 n_min at edge", vals[i])
res = minimize_scalar(lambda x: n_ss(x, 1e6) - 1e6, bounds=(np.log(ga / 100), np.log(100 * ga)), method="bounded",
                      options={"xatol": 1e-10})
show("N_b=1e6 mu_opt", ga * ga / (16 * np.exp(2 * res.x)))
