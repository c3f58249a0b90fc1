"""Independent reference computations used by the tests.

Nothing here calls into the library's derivative code: every oracle works
from raw metric/field values with its own finite differences and
``np.linalg.solve``.
"""

import numpy as np
from scipy.integrate import solve_ivp


def fd(func, q, h=1e-5):
    """Central difference with the coordinate index appended last."""
    q = np.asarray(q, dtype=float)
    cols = []
    for k in range(q.size):
        e = np.zeros_like(q)
        e[k] = h
        cols.append((np.asarray(func(q + e)) - np.asarray(func(q - e))) / (2 * h))
    return np.stack(cols, axis=-1)


def koszul_christoffel(gfun, q, h=1e-5):
    """Gamma^i_jk from the Koszul formula, solved with np.linalg.solve."""
    q = np.asarray(q, dtype=float)
    n = q.size
    dg = fd(gfun, q, h)  # dg[a, b, c] = d_c g_ab
    first = np.empty((n, n, n))
    for l in range(n):
        for j in range(n):
            for k in range(n):
                first[l, j, k] = 0.5 * (dg[l, j, k] + dg[l, k, j] - dg[j, k, l])
    g = np.asarray(gfun(q))
    return np.linalg.solve(g, first.reshape(n, n * n)).reshape(n, n, n)


def lie_derivative_via_flow(xfun, gfun, q, eps=1e-4):
    """L_X g as d/de of the pulled-back metric, with the flow approximated to second order.

    phi_e(q) = q + e X + e^2/2 (DX) X, pulled back g at phi_e(q).  The step
    shrinks with |X| so the flow stays local.
    """
    q = np.asarray(q, dtype=float)
    eps = eps / max(1.0, float(np.max(np.abs(xfun(q)))))

    def flow(p, e):
        x = np.asarray(xfun(p))
        jac = fd(xfun, p)
        return p + e * x + 0.5 * e * e * jac @ x

    def pulled(e):
        jac = fd(lambda p: flow(p, e), q)
        return jac.T @ np.asarray(gfun(flow(q, e))) @ jac

    return (pulled(eps) - pulled(-eps)) / (2 * eps)


def canonical_hamiltonian_field(gfun, Gfun, q, v, h=1e-6):
    """Hamiltonian vector field of G(q, v) computed in canonical coordinates (q, p = g v).

    Returns (dq, dv) with dq = dG/dp, dp = -dG/dq|_p, and dv obtained by
    differentiating v = g(q)^{-1} p along the flow.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    p = np.asarray(gfun(q)) @ v

    def vel(qq, pp):
        return np.linalg.solve(np.asarray(gfun(qq)), pp)

    def H(qq, pp):
        return Gfun(qq, vel(qq, pp))

    dH_dq = fd(lambda qq: H(qq, p), q, h)
    dH_dp = fd(lambda pp: H(q, pp), p, h)
    qdot = dH_dp
    pdot = -dH_dq
    dvel_dq = fd(lambda qq: vel(qq, p), q, h)
    vdot = dvel_dq @ qdot + vel(q, pdot)
    return np.concatenate([qdot, vdot])


def reference_trajectory(gfun, Vfun, q0, v0, t_end, t_eval=None, rtol=1e-12, atol=1e-12):
    """Euler-Lagrange flow from Koszul Christoffels and a finite-difference gradient (DOP853)."""
    n = len(q0)

    def rhs(t, y):
        q, v = y[:n], y[n:]
        gamma = koszul_christoffel(gfun, q, 1e-6)
        grad = fd(Vfun, q, 1e-6)
        a = -np.einsum("ijk,j,k->i", gamma, v, v) - np.linalg.solve(np.asarray(gfun(q)), grad)
        return np.concatenate([v, a])

    sol = solve_ivp(rhs, (0.0, t_end), np.concatenate([q0, v0]), method="DOP853",
                    rtol=rtol, atol=atol, t_eval=t_eval)
    return sol


def kepler_averages(gmm, m, r0, vr0, vphi0):
    """Exact orbit averages of T and V for a bound Kepler orbit: <T> = -E, <V> = 2E."""
    E = 0.5 * m * (vr0**2 + (r0 * vphi0) ** 2) - gmm / r0
    return E, -E, 2 * E


# closed-form metrics in their own notation, independent of the library kernels

def sphere_metric(R=1.0):
    return lambda q: R * R * np.diag([1.0, np.sin(q[0]) ** 2])


def polar_metric():
    return lambda q: np.diag([1.0, q[0] ** 2])


def gnomonic_metric(lam=1.0):
    return lambda q: np.diag([1.0 / (1 + lam * q[0] ** 2) ** 2, q[0] ** 2 / (1 + lam * q[0] ** 2)])


def radial_metric(p=2.0):
    return lambda q: np.diag([q[0] ** p, q[0] ** 2, (q[0] * np.sin(q[1])) ** 2])
