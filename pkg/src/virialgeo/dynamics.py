"""Mechanical-type Lagrangian dynamics ``L = T_g - V`` on a chart."""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import _kernels
from .errors import GuardViolation, InvalidParameter, SingularMetric, StepLimitExceeded
from .fields import MetricField, ScalarField, VectorFieldDef, _as_point, is_compiled, native
from .geometry import christoffel, kinetic_energy, metric_inverse

DEFAULT_MAX_STEPS = 10**8


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    """A named vector field of a system together with what it is expected to be.

    ``factor`` is the conformal factor ``f`` (for conformal and homothetic
    fields, or for the two-metric relation ``L_X g = f g'`` when
    ``secondary_metric`` is set).
    """

    name: str
    field: VectorFieldDef
    expected: str
    factor: Optional[ScalarField] = None
    secondary_metric: Optional[MetricField] = None
    aliases: Tuple[str, ...] = ()
    label: str = ""

    def matches(self, name):
        return name == self.name or name in self.aliases


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Metric, potential, chart guard and catalog of a mechanical system.

    ``sampler(rng, k)`` draws ``k`` guarded chart points; ``coords`` names the
    chart coordinates.
    """

    name: str
    metric: MetricField
    potential: ScalarField
    guard: Callable
    catalog: Tuple[CatalogEntry, ...] = ()
    sampler: Optional[Callable] = None
    coords: Tuple[str, ...] = ()
    params: Dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.metric.dim

    def entry(self, name):
        for e in self.catalog:
            if e.matches(name):
                return e
        known = ", ".join(e.name for e in self.catalog)
        raise KeyError(f"system {self.name!r} has no catalog field {name!r} (known: {known})")

    def sample_points(self, rng, k):
        if self.sampler is None:
            raise ValueError(f"system {self.name!r} has no sampler")
        return [np.asarray(p, dtype=np.float64) for p in self.sampler(rng, k)]

    def in_domain(self, q):
        q = _as_point(q)
        return bool(np.all(np.isfinite(q))) and bool(self.guard(q))


@dataclass(frozen=True)
class State:
    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = _as_point(self.q).copy()
        v = _as_point(self.v).copy()
        if q.shape != v.shape:
            raise ValueError(f"q and v differ in length ({q.size} vs {v.size})")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise ValueError("state has non-finite entries")
        q.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @property
    def dim(self):
        return self.q.size

    def reversed(self):
        return State(self.q, -self.v)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    method: str = "rk4"
    energy_drift_limit: float = 1e-6
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.method != "rk4":
            raise InvalidParameter(f"unknown integration method {self.method!r}")
        if not (self.dt > 0 and np.isfinite(self.dt)):
            raise InvalidParameter("dt must be positive")
        if not (self.t_end > 0 and np.isfinite(self.t_end)):
            raise InvalidParameter("t_end must be positive")

    @property
    def steps(self):
        # The grid always ends exactly at t_end; dt is adjusted by at most half a step.
        return max(1, int(round(self.t_end / self.dt)))

    @property
    def effective_dt(self):
        return self.t_end / self.steps


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled solution ``(t_i, q_i, v_i)`` with its energy series."""

    times: np.ndarray
    q: np.ndarray
    v: np.ndarray
    energies: np.ndarray
    method: str = "rk4"
    dt: float = 0.0
    drift: float = 0.0
    drift_limit: float = np.inf

    def __post_init__(self):
        for name in ("times", "q", "v", "energies"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.times.size < 2:
            raise ValueError("a trajectory needs at least two samples")

    @property
    def rejected(self):
        return not self.drift <= self.drift_limit

    @property
    def span(self):
        return float(self.times[-1] - self.times[0])

    def __len__(self):
        return self.times.size

    def state(self, i):
        return State(self.q[i], self.v[i])

    @property
    def states(self):
        return [self.state(i) for i in range(len(self))]

    @property
    def final(self):
        return self.state(-1)

    def window(self, t_end):
        """The prefix of the trajectory with ``t <= t_end``."""
        stop = int(np.searchsorted(self.times, t_end * (1 + 1e-12), side="right"))
        return _make_trajectory(self.times[:stop], self.q[:stop], self.v[:stop],
                                self.energies[:stop], self.method, self.dt, self.drift_limit)


def _relative_drift(energies):
    e0 = energies[0]
    return float(np.max(np.abs(energies - e0)) / max(1.0, abs(e0)))


def _make_trajectory(times, q, v, energies, method, dt, drift_limit):
    return Trajectory(times, q, v, energies, method=method, dt=dt,
                      drift=_relative_drift(energies), drift_limit=drift_limit)


def _guard_check(sys, q):
    if not sys.in_domain(q):
        raise GuardViolation(f"point {np.asarray(q).tolist()} violates the {sys.name} chart guard")


def acceleration(sys: SystemSpec, s: State):
    """``a^i = -Gamma^i_{jk} v^j v^k - g^{ij} dV/dq^j``."""
    _guard_check(sys, s.q)
    gamma = christoffel(sys.metric, s.q)
    ginv = metric_inverse(sys.metric.eval(s.q))
    return -np.einsum("ijk,j,k->i", gamma, s.v, s.v) - ginv @ sys.potential.gradient(s.q)


def energy(sys: SystemSpec, s: State):
    _guard_check(sys, s.q)
    return kinetic_energy(sys.metric, s.q, s.v) + sys.potential.eval(s.q)


def integrate(sys: SystemSpec, s0: State, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``(q', v') = (v, acceleration)`` with fixed-step RK4.

    The trajectory is returned even when the relative energy drift exceeds
    ``cfg.energy_drift_limit``; it is then flagged ``rejected``.

    Raises
    ------
    GuardViolation
        When any RK4 stage leaves the chart guard; ``exc.t`` is the stage time
        and ``exc.trajectory`` the completed part (``None`` if empty).
    StepLimitExceeded
        When ``t_end / dt`` exceeds ``cfg.max_steps``.
    """
    if s0.dim != sys.dim:
        raise ValueError(f"state dimension {s0.dim} does not match chart dimension {sys.dim}")
    if cfg.t_end / cfg.dt > cfg.max_steps:
        raise StepLimitExceeded(f"{cfg.t_end / cfg.dt:.3g} steps requested, limit is {cfg.max_steps}")
    _guard_check(sys, s0.q)
    nsteps, dt = cfg.steps, cfg.effective_dt
    if is_compiled(sys.metric, sys.potential, sys.guard):
        return _integrate_compiled(sys, s0, nsteps, dt, cfg)
    return _integrate_python(sys, s0, nsteps, dt, cfg)


def _integrate_compiled(sys, s0, nsteps, dt, cfg):
    n = sys.dim
    Q = np.empty((nsteps + 1, n))
    V = np.empty((nsteps + 1, n))
    E = np.empty(nsteps + 1)
    status, last, t_fail = _kernels.rk4_run(
        native(sys.metric), native(sys.potential), native(sys.guard),
        np.array(s0.q), np.array(s0.v), dt, nsteps, Q, V, E,
    )
    times = dt * np.arange(nsteps + 1)
    if status == _kernels.OK:
        return _make_trajectory(times, Q, V, E, cfg.method, dt, cfg.energy_drift_limit)
    done = last + 1
    partial = None
    if done >= 2:
        partial = _make_trajectory(times[:done], Q[:done], V[:done], E[:done],
                                   cfg.method, dt, cfg.energy_drift_limit)
    if status == _kernels.GUARD:
        raise GuardViolation(f"trajectory left the {sys.name} chart guard at t={t_fail:.6g}",
                             t=t_fail, trajectory=partial)
    if status == _kernels.SINGULAR:
        raise SingularMetric(f"metric became degenerate at t={t_fail:.6g}")
    raise GuardViolation(f"acceleration became non-finite at t={t_fail:.6g}", t=t_fail, trajectory=partial)


def _integrate_python(sys, s0, nsteps, dt, cfg):
    n = sys.dim
    Q = np.empty((nsteps + 1, n))
    V = np.empty((nsteps + 1, n))
    E = np.empty(nsteps + 1)

    def fail(t, done):
        partial = None
        if done >= 2:
            partial = _make_trajectory(dt * np.arange(done), Q[:done], V[:done], E[:done],
                                       cfg.method, dt, cfg.energy_drift_limit)
        raise GuardViolation(f"trajectory left the {sys.name} chart guard at t={t:.6g}",
                             t=t, trajectory=partial)

    def accel(t, q, v, done):
        if not sys.in_domain(q):
            fail(t, done)
        return acceleration(sys, State(q, v))

    q, v = np.array(s0.q), np.array(s0.v)
    for step in range(nsteps + 1):
        t = step * dt
        if not sys.in_domain(q):
            fail(t, step)
        Q[step], V[step] = q, v
        E[step] = energy(sys, State(q, v))
        if step == nsteps:
            break
        k1 = accel(t, q, v, step + 1)
        v2 = v + 0.5 * dt * k1
        k2 = accel(t + 0.5 * dt, q + 0.5 * dt * v, v2, step + 1)
        v3 = v + 0.5 * dt * k2
        k3 = accel(t + 0.5 * dt, q + 0.5 * dt * v2, v3, step + 1)
        v4 = v + dt * k3
        k4 = accel(t + dt, q + dt * v3, v4, step + 1)
        q = q + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    times = dt * np.arange(nsteps + 1)
    return _make_trajectory(times, Q, V, E, cfg.method, dt, cfg.energy_drift_limit)


def complete_lift_eval(X: VectorFieldDef, s: State):
    """Components ``(X^i, (dX^i/dq^j) v^j)`` of the complete lift at ``s``."""
    return np.concatenate([X.eval(s.q), X.jacobian(s.q) @ s.v])


def liouville(s: State):
    """The fibre-dilation field ``(0, v)``."""
    return np.concatenate([np.zeros(s.dim), s.v])


def hamiltonian_vector_field(g: MetricField, s: State, dG_dq, dG_dv):
    """Hamiltonian vector field of a function ``G`` on the tangent bundle.

    Uses the symplectic form of ``T_g`` (equivalently of ``T_g - V``); only
    the partial derivatives of ``G`` at ``s`` are needed.  Returns base then
    fibre components.
    """
    q, v = s.q, s.v
    ginv = metric_inverse(g.eval(q))
    dg = g.deriv(q)
    dG_dq = np.asarray(dG_dq, dtype=np.float64)
    up = ginv @ np.asarray(dG_dv, dtype=np.float64)
    # bracket_k = (d_k g_ln v^n - d_l g_kn v^n) up^l - dG/dq^k
    bracket = (np.einsum("lnk,n,l->k", dg, v, up)
               - np.einsum("knl,n,l->k", dg, v, up)
               - dG_dq)
    return np.concatenate([up, ginv @ bracket])


def hamiltonian_vf_affine(g: MetricField, X: VectorFieldDef, s: State, guard=None):
    """Hamiltonian vector field of ``G(q, v) = g(X(q), v)``.

    Equals the complete lift of ``X`` exactly when ``X`` is Killing, and
    ``X^c - f (0, v)`` when ``L_X g = f g``.
    """
    if guard is not None and not guard(s.q):
        raise GuardViolation(f"point {s.q.tolist()} is outside the chart domain")
    gq, dg, x = g.eval(s.q), g.deriv(s.q), X.eval(s.q)
    # d alpha_j / d q^k with alpha = g X
    dalpha = np.einsum("jmk,m->jk", dg, x) + gq @ X.jacobian(s.q)
    return hamiltonian_vector_field(g, s, dG_dq=s.v @ dalpha, dG_dv=gq @ x)
