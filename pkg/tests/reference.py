"""Independent reference implementations used as test oracles.

These deliberately avoid the package's propagators: a fixed-step RK4
integrator working on dense matrices, a classical rate-equation model of the
cascade, and brute-force correlation integrals from closed-form populations.
"""

import numpy as np
from scipy.linalg import expm


def lindblad_rhs(h, rho, collapse):
    out = -1j * (h @ rho - rho @ h)
    for op in collapse:
        opd = op.conj().T
        out += op @ rho @ opd - 0.5 * (opd @ op @ rho + rho @ opd @ op)
    return out


def rk4_evolve(hamiltonian, collapse, rho0, t0, t1, dt):
    """Classic fixed-step RK4 on the full time-dependent master equation."""
    n = int(np.ceil((t1 - t0) / dt))
    dt = (t1 - t0) / n
    rho = np.array(rho0, dtype=complex)
    t = t0
    for _ in range(n):
        k1 = lindblad_rhs(hamiltonian(t), rho, collapse)
        k2 = lindblad_rhs(hamiltonian(t + dt / 2), rho + dt / 2 * k1, collapse)
        k3 = lindblad_rhs(hamiltonian(t + dt / 2), rho + dt / 2 * k2, collapse)
        k4 = lindblad_rhs(hamiltonian(t + dt), rho + dt * k3, collapse)
        rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return rho


def rate_matrix(gamma_xx, gamma_x):
    """Classical population rate equations of the cascade (G, Xa, Xb, XX)."""
    r = np.zeros((4, 4))
    r[3, 3] = -gamma_xx
    r[1, 3] = gamma_xx / 2.0
    r[2, 3] = gamma_xx / 2.0
    r[1, 1] = r[2, 2] = -gamma_x
    r[0, 1] = r[0, 2] = gamma_x
    return r


def rate_populations(gamma_xx, gamma_x, p0, times):
    r = rate_matrix(gamma_xx, gamma_x)
    return np.stack([expm(r * t) @ p0 for t in times])


def cascade_population(gamma_xx, gamma_x, t):
    """One branch's exciton population for a unit biexciton prepared at t=0."""
    t = np.asarray(t, dtype=float)
    return (
        (gamma_xx / 2.0)
        / (gamma_xx - gamma_x)
        * (np.exp(-gamma_x * t) - np.exp(-gamma_xx * t))
    )


def brute_force_overlap(gamma_xx, gamma_x, t_max, n):
    """Mean wave-packet overlap of the undriven cascade photon by direct
    quadrature of |G1|^2 = n(t)^2 exp(-gamma_x tau) against n(t) n(t+tau)."""
    h = t_max / n
    t = np.arange(2 * n) * h
    pop = cascade_population(gamma_xx, gamma_x, t)
    i = np.arange(n)
    g1sq = pop[:n, None] ** 2 * np.exp(-gamma_x * i[None, :] * h)
    denom = pop[:n, None] * pop[i[:, None] + i[None, :]]

    def trap2(m):
        w = np.ones(n)
        w[[0, -1]] = 0.5
        return float(np.einsum("i,ij,j->", w, m, w))

    return trap2(g1sq) / trap2(denom)


def superoperator(h, collapse):
    """Row-major-vec Liouvillian built independently of the package."""
    dim = h.shape[0]
    eye = np.eye(dim)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op in collapse:
        opd = op.conj().T
        sup += np.kron(op, op.conj())
        sup -= 0.5 * (np.kron(opd @ op, eye) + np.kron(eye, (opd @ op).T))
    return sup


def brute_force_g2(h, collapse, rho0, sigma, t_max, n):
    """g2(0) for a static system by direct expm-based quantum regression."""
    sup = superoperator(h, collapse)
    step = expm(sup * (t_max / n))
    dim = h.shape[0]
    vec = rho0.reshape(-1).astype(complex)
    rhos = []
    for _ in range(n):
        rhos.append(vec.reshape(dim, dim).copy())
        vec = step @ vec
    upper = int(np.argwhere(np.abs(sigma) > 0)[0][1])
    pops = np.array([np.real(r[upper, upper]) for r in rhos])
    g2_rows = np.empty((n, n))
    for i, r in enumerate(rhos):
        cond = (sigma @ r @ sigma.conj().T).reshape(-1)
        for j in range(n):
            g2_rows[i, j] = np.real(cond.reshape(dim, dim)[upper, upper])
            cond = step @ cond
    htau = t_max / n
    pairs = 2.0 * g2_rows.sum() * htau * htau
    total = pops.sum() * htau
    return pairs / (total * total)
