"""Compiled inner loops.

Fields that carry a compiled kernel are passed to these routines as typed
function pointers, so each routine is compiled once (and cached on disk)
instead of once per system.  Kernel conventions:

* metric kernel ``(q, g, dg) -> 0.0`` fills ``g[i, j]`` and ``dg[i, j, k] = d g_ij / d q^k``
* scalar kernel ``(q, grad) -> value`` fills the gradient
* vector kernel ``(q, x, jac) -> 0.0`` fills components and ``jac[i, j] = d X^i / d q^j``
* guard kernel ``(q) -> bool``
"""

import numpy as np
from numba import njit, types

VEC = types.float64[::1]
MAT = types.float64[:, ::1]
CUBE = types.float64[:, :, ::1]
# trajectories are stored read-only
RMAT = types.Array(types.float64, 2, "C", readonly=True)

METRIC_SIG = types.float64(VEC, MAT, CUBE)
SCALAR_SIG = types.float64(VEC, VEC)
VECTOR_SIG = types.float64(VEC, VEC, MAT)
GUARD_SIG = types.boolean(VEC)

METRIC_T = types.FunctionType(METRIC_SIG)
SCALAR_T = types.FunctionType(SCALAR_SIG)
VECTOR_T = types.FunctionType(VECTOR_SIG)
GUARD_T = types.FunctionType(GUARD_SIG)

OK = 0
GUARD = 1
SINGULAR = 2
NONFINITE = 3

SINGULAR_FLOOR = 1e-12


@njit(cache=True)
def _accel_into(metric, potential, q, v, g, dg, grad, w, a):
    """Acceleration of the Lagrangian flow at (q, v), written into ``a``.

    Contracts the first-kind Christoffel symbols with the velocity and solves
    ``g a = -(Gamma_lower(v, v) + dV)`` by pivoted elimination, which destroys
    ``g``.  Returns (status, energy at (q, v)).
    """
    n = q.shape[0]
    metric(q, g, dg)
    pot = potential(q, grad)
    kin = 0.0
    scale = 0.0
    for i in range(n):
        for j in range(n):
            kin += g[i, j] * v[i] * v[j]
            if abs(g[i, j]) > scale:
                scale = abs(g[i, j])
    energy = 0.5 * kin + pot
    for l in range(n):
        s = grad[l]
        for j in range(n):
            for k in range(n):
                s += (dg[l, j, k] - 0.5 * dg[j, k, l]) * v[j] * v[k]
        w[l] = -s
    for c in range(n):
        p = c
        for r in range(c + 1, n):
            if abs(g[r, c]) > abs(g[p, c]):
                p = r
        if not abs(g[p, c]) > SINGULAR_FLOOR * scale:
            return SINGULAR, energy
        if p != c:
            for k in range(n):
                tmp = g[c, k]
                g[c, k] = g[p, k]
                g[p, k] = tmp
            tmp = w[c]
            w[c] = w[p]
            w[p] = tmp
        for r in range(c + 1, n):
            f = g[r, c] / g[c, c]
            for k in range(c, n):
                g[r, k] -= f * g[c, k]
            w[r] -= f * w[c]
    for r in range(n - 1, -1, -1):
        s = w[r]
        for k in range(r + 1, n):
            s -= g[r, k] * a[k]
        a[r] = s / g[r, r]
    for i in range(n):
        if not np.isfinite(a[i]):
            return NONFINITE, energy
    return OK, energy


@njit(
    types.Tuple((types.int64, types.int64, types.float64))(
        METRIC_T, SCALAR_T, GUARD_T, VEC, VEC, types.float64, types.int64, MAT, MAT, VEC
    ),
    cache=True,
)
def rk4_run(metric, potential, guard, q0, v0, dt, nsteps, Q, V, E):
    """Fixed-step RK4 on (q', v') = (v, a); fills Q, V, E row by row.

    Returns (status, last completed row, time of failure).
    """
    n = q0.shape[0]
    g = np.empty((n, n))
    dg = np.empty((n, n, n))
    grad = np.empty(n)
    w = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    v2 = np.empty(n)
    v3 = np.empty(n)
    qs = np.empty(n)
    vs = np.empty(n)
    q = q0.copy()
    v = v0.copy()
    for s in range(nsteps + 1):
        t = s * dt
        if not guard(q):
            return GUARD, s - 1, t
        status, energy = _accel_into(metric, potential, q, v, g, dg, grad, w, k1)
        for i in range(n):
            Q[s, i] = q[i]
            V[s, i] = v[i]
        E[s] = energy
        if status != OK:
            return status, s - 1, t
        if s == nsteps:
            break
        for i in range(n):
            qs[i] = q[i] + 0.5 * dt * v[i]
            vs[i] = v[i] + 0.5 * dt * k1[i]
            v2[i] = vs[i]
        if not guard(qs):
            return GUARD, s, t + 0.5 * dt
        status, energy = _accel_into(metric, potential, qs, vs, g, dg, grad, w, k2)
        if status != OK:
            return status, s, t + 0.5 * dt
        for i in range(n):
            qs[i] = q[i] + 0.5 * dt * v2[i]
            vs[i] = v[i] + 0.5 * dt * k2[i]
            v3[i] = vs[i]
        if not guard(qs):
            return GUARD, s, t + 0.5 * dt
        status, energy = _accel_into(metric, potential, qs, vs, g, dg, grad, w, k3)
        if status != OK:
            return status, s, t + 0.5 * dt
        for i in range(n):
            qs[i] = q[i] + dt * v3[i]
            vs[i] = v[i] + dt * k3[i]
        if not guard(qs):
            return GUARD, s, t + dt
        status, energy = _accel_into(metric, potential, qs, vs, g, dg, grad, w, k4)
        if status != OK:
            return status, s, t + dt
        for i in range(n):
            q[i] += dt / 6.0 * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + vs[i])
            v[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return OK, nsteps, nsteps * dt


@njit(types.void(METRIC_T, VECTOR_T, RMAT, RMAT, VEC), cache=True)
def series_affine(metric, field, Q, V, out):
    # G = g(X, v)
    m, n = Q.shape
    q = np.empty(n)
    g = np.empty((n, n))
    dg = np.empty((n, n, n))
    x = np.empty(n)
    jac = np.empty((n, n))
    for s in range(m):
        q[:] = Q[s]
        metric(q, g, dg)
        field(q, x, jac)
        acc = 0.0
        for i in range(n):
            for j in range(n):
                acc += g[i, j] * x[i] * V[s, j]
        out[s] = acc


@njit(types.void(METRIC_T, VECTOR_T, RMAT, RMAT, VEC), cache=True)
def series_lie_quadratic(metric, field, Q, V, out):
    # (1/2) (L_X g)(v, v), i.e. the complete lift applied to the kinetic energy
    m, n = Q.shape
    q = np.empty(n)
    g = np.empty((n, n))
    dg = np.empty((n, n, n))
    x = np.empty(n)
    jac = np.empty((n, n))
    jv = np.empty(n)
    for s in range(m):
        q[:] = Q[s]
        metric(q, g, dg)
        field(q, x, jac)
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += jac[i, j] * V[s, j]
            jv[i] = acc
        acc = 0.0
        for i in range(n):
            for j in range(n):
                vv = V[s, i] * V[s, j]
                d = 0.0
                for k in range(n):
                    d += x[k] * dg[i, j, k]
                acc += 0.5 * d * vv + g[i, j] * V[s, i] * jv[j]
        out[s] = acc


@njit(types.void(VECTOR_T, SCALAR_T, RMAT, VEC), cache=True)
def series_lie_potential(field, potential, Q, out):
    # X(V) = <dV, X>
    m, n = Q.shape
    q = np.empty(n)
    x = np.empty(n)
    jac = np.empty((n, n))
    grad = np.empty(n)
    for s in range(m):
        q[:] = Q[s]
        field(q, x, jac)
        potential(q, grad)
        acc = 0.0
        for i in range(n):
            acc += x[i] * grad[i]
        out[s] = acc


@njit(types.void(METRIC_T, RMAT, RMAT, VEC), cache=True)
def series_kinetic(metric, Q, V, out):
    m, n = Q.shape
    q = np.empty(n)
    g = np.empty((n, n))
    dg = np.empty((n, n, n))
    for s in range(m):
        q[:] = Q[s]
        metric(q, g, dg)
        acc = 0.0
        for i in range(n):
            for j in range(n):
                acc += g[i, j] * V[s, i] * V[s, j]
        out[s] = 0.5 * acc


@njit(types.void(SCALAR_T, RMAT, VEC), cache=True)
def series_scalar(func, Q, out):
    m, n = Q.shape
    q = np.empty(n)
    grad = np.empty(n)
    for s in range(m):
        q[:] = Q[s]
        out[s] = func(q, grad)
