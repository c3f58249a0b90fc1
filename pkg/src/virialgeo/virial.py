"""Virial functions, time averages and residuals of the virial identities.

Every relation integrand here is the time derivative of the affine virial
function ``G(q, v) = g(X, v)`` along the dynamics, so besides the time average
(which tends to zero when ``G`` stays bounded) each report carries the exact
finite-horizon balance ``<integrand> - (G(T) - G(0)) / T``, which vanishes up
to quadrature error at any ``T``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .dynamics import State, SystemSpec, Trajectory
from .errors import DegenerateDegrees, GuardViolation, RejectedTrajectory, RelationFieldMissing
from .fields import MetricField, ScalarField, VectorFieldDef, is_compiled, native
from .geometry import kinetic_energy, lie_derivative_metric

GENERAL = "General"
KILLING = "Killing"
CONFORMAL = "Conformal"
TWO_METRIC = "TwoMetric"
HOMOGENEOUS = "HomogeneousPartition"


@dataclass(frozen=True, eq=False)
class Observable:
    """A function on the tangent bundle, ``eval(sys, state) -> float``.

    ``series(sys, Q, V) -> array`` is an optional vectorized form used when
    averaging over long trajectories.
    """

    name: str
    eval: Callable
    series: Optional[Callable] = None

    def values(self, sys, traj: Trajectory):
        if self.series is not None:
            return np.asarray(self.series(sys, traj.q, traj.v), dtype=np.float64)
        return np.array([self.eval(sys, traj.state(i)) for i in range(len(traj))])

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __add__(self, other):
        return _combine(self, other, 1.0)


def _combine(a, b, sign):
    name = f"{a.name}{'+' if sign > 0 else '-'}{b.name}"
    series = None
    if a.series is not None and b.series is not None:
        series = lambda sys, Q, V: a.series(sys, Q, V) + sign * b.series(sys, Q, V)  # noqa: E731
    return Observable(name, lambda sys, s: a.eval(sys, s) + sign * b.eval(sys, s), series)


@dataclass(frozen=True)
class RunningAverage:
    """Trapezoid time averages over ``[0, T]`` and over ``[0, T/2]``.

    ``scale`` is ``max|A|`` over the run.
    """

    value_T: float
    value_half: float
    T: float
    scale: float
    quadrature: str = "trapezoid"

    @property
    def window_gap(self):
        return abs(self.value_T - self.value_half)

    @property
    def convergence_tolerance(self):
        return max(1e-6, 1e-3 * self.scale)

    @property
    def converged(self):
        return self.window_gap <= self.convergence_tolerance


def _trapezoid_average(values, times):
    return float(np.trapezoid(values, times) / (times[-1] - times[0]))


def average_values(values, times):
    """:class:`RunningAverage` of samples ``values`` taken at ``times``."""
    values = np.asarray(values, dtype=np.float64)
    times = np.asarray(times, dtype=np.float64)
    if values.size < 3:
        raise ValueError("time averages need at least three samples")
    half = int(np.searchsorted(times, times[0] + 0.5 * (times[-1] - times[0]) * (1 + 1e-12), side="right"))
    half = max(half, 2)
    return RunningAverage(
        value_T=_trapezoid_average(values, times),
        value_half=_trapezoid_average(values[:half], times[:half]),
        T=float(times[-1] - times[0]),
        scale=float(np.max(np.abs(values))),
    )


def _require_accepted(traj):
    if traj.rejected:
        raise RejectedTrajectory(
            f"energy drift {traj.drift:.3e} exceeds the limit {traj.drift_limit:.1e}")


def time_average(traj: Trajectory, A: Observable, sys: Optional[SystemSpec] = None) -> RunningAverage:
    _require_accepted(traj)
    if len(traj) < 3:
        raise ValueError("time averages need at least three samples")
    return average_values(A.values(sys, traj), traj.times)


# ---------------------------------------------------------------- observables

def affine_virial(g: MetricField, X: VectorFieldDef, s: State, guard=None) -> float:
    """``G(q, v) = g_ij X^i v^j``, the virial function attached to ``X``."""
    if guard is not None and not guard(s.q):
        raise GuardViolation(f"point {s.q.tolist()} is outside the chart domain")
    return float(g.eval(s.q) @ X.eval(s.q) @ s.v)


def _fast(*objs):
    return is_compiled(*objs)


def _run_series(kernel, args, m):
    out = np.empty(m)
    kernel(*args, out)
    return out


def affine_observable(X: VectorFieldDef, g: Optional[MetricField] = None, name="G"):
    def metric_of(sys):
        return g if g is not None else sys.metric

    def series(sys, Q, V):
        gm = metric_of(sys)
        if _fast(gm, X):
            return _run_series(_kernels.series_affine, (native(gm), native(X), Q, V), len(Q))
        return np.array([affine_virial(gm, X, State(q, v)) for q, v in zip(Q, V)])

    return Observable(name, lambda sys, s: affine_virial(metric_of(sys), X, s), series)


def lift_kinetic_observable(X: VectorFieldDef, name="XcT"):
    """``X^c(T_g) = (1/2)(L_X g)(v, v)``."""

    def point(sys, s):
        return 0.5 * float(s.v @ lie_derivative_metric(X, sys.metric, s.q) @ s.v)

    def series(sys, Q, V):
        if _fast(sys.metric, X):
            return _run_series(_kernels.series_lie_quadratic, (native(sys.metric), native(X), Q, V), len(Q))
        return np.array([point(sys, State(q, v)) for q, v in zip(Q, V)])

    return Observable(name, point, series)


def lie_potential_observable(X: VectorFieldDef, name="LXV"):
    """``L_X V = <dV, X>``."""

    def point(sys, s):
        return float(sys.potential.gradient(s.q) @ X.eval(s.q))

    def series(sys, Q, V):
        if _fast(X, sys.potential):
            return _run_series(_kernels.series_lie_potential, (native(X), native(sys.potential), Q), len(Q))
        return np.array([point(sys, State(q, v)) for q, v in zip(Q, V)])

    return Observable(name, point, series)


def kinetic_observable(g: Optional[MetricField] = None, factor: Optional[ScalarField] = None, name="T"):
    """``f T_g`` (``f = 1`` when no factor is given; ``g`` defaults to the system metric)."""

    def point(sys, s):
        gm = g if g is not None else sys.metric
        value = kinetic_energy(gm, s.q, s.v)
        return value * factor.eval(s.q) if factor is not None else value

    def series(sys, Q, V):
        gm = g if g is not None else sys.metric
        if _fast(gm) and (factor is None or _fast(factor)):
            out = _run_series(_kernels.series_kinetic, (native(gm), Q, V), len(Q))
            if factor is not None:
                out *= _run_series(_kernels.series_scalar, (native(factor), Q), len(Q))
            return out
        return np.array([point(sys, State(q, v)) for q, v in zip(Q, V)])

    return Observable(name, point, series)


def potential_observable(name="V"):
    def series(sys, Q, V):
        if _fast(sys.potential):
            return _run_series(_kernels.series_scalar, (native(sys.potential), Q), len(Q))
        return np.array([sys.potential.eval(q) for q in Q])

    return Observable(name, lambda sys, s: sys.potential.eval(s.q), series)


def scaled(A: Observable, c: float, name=None):
    series = None
    if A.series is not None:
        series = lambda sys, Q, V: c * A.series(sys, Q, V)  # noqa: E731
    return Observable(name or f"{c:g}*{A.name}", lambda sys, s: c * A.eval(sys, s), series)


# ------------------------------------------------------------------ relations

@dataclass(frozen=True, eq=False)
class VirialRelation:
    """One of the virial identities, bound to the data it needs.

    ``kind`` is one of ``General``, ``Killing``, ``Conformal``, ``TwoMetric``
    and ``HomogeneousPartition``.
    """

    kind: str
    name: str = ""
    field: Optional[VectorFieldDef] = None
    factor: Optional[ScalarField] = None
    secondary_metric: Optional[MetricField] = None
    mu: Optional[float] = None
    nu: Optional[float] = None

    @classmethod
    def general(cls, X, name="general"):
        return cls(GENERAL, name, field=X)

    @classmethod
    def killing(cls, X, name="killing"):
        return cls(KILLING, name, field=X)

    @classmethod
    def conformal(cls, X, f, name="conformal"):
        return cls(CONFORMAL, name, field=X, factor=f)

    @classmethod
    def two_metric(cls, X, f, g_prime, name="two-metric"):
        return cls(TWO_METRIC, name, field=X, factor=f, secondary_metric=g_prime)

    @classmethod
    def homogeneous(cls, mu, nu, name="homogeneous"):
        return cls(HOMOGENEOUS, name, mu=mu, nu=nu)

    @classmethod
    def from_catalog(cls, entry, kind=None):
        """Relation matching a catalog entry's expected classification.

        ``kind`` forces a specific relation (e.g. ``General``) instead.
        """
        if kind is None:
            if entry.secondary_metric is not None:
                kind = TWO_METRIC
            elif entry.expected == "Killing":
                kind = KILLING
            elif entry.expected in ("Homothetic", "ProperConformal"):
                kind = CONFORMAL
            else:
                kind = GENERAL
        return cls(kind, entry.name, field=entry.field, factor=entry.factor,
                   secondary_metric=entry.secondary_metric)

    @property
    def has_virial_function(self):
        return self.kind != HOMOGENEOUS


def _missing(rel, what):
    raise RelationFieldMissing(f"{rel.kind} relation {rel.name!r} needs {what}")


def relation_integrand(rel: VirialRelation) -> Observable:
    """The observable whose time average the relation sets to zero.

    General: ``X^c(T_g) - X(V)``; Killing: ``-L_X V`` (the lift term vanishes);
    Conformal: ``f T_g - L_X V``; TwoMetric: ``f T_g' - L_X V``;
    HomogeneousPartition: ``mu T_g - nu V``.
    """
    if rel.kind == HOMOGENEOUS:
        if rel.mu is None or rel.nu is None:
            _missing(rel, "both degrees mu and nu")
        return (scaled(kinetic_observable(), rel.mu, "muT")
                - scaled(potential_observable(), rel.nu, "nuV"))
    if rel.field is None:
        _missing(rel, "a vector field")
    lxv = lie_potential_observable(rel.field)
    if rel.kind == GENERAL:
        return lift_kinetic_observable(rel.field) - lxv
    if rel.kind == KILLING:
        return scaled(lxv, -1.0, "-LXV")
    if rel.kind == CONFORMAL:
        if rel.factor is None:
            _missing(rel, "a conformal factor f")
        return kinetic_observable(factor=rel.factor, name="fT") - lxv
    if rel.kind == TWO_METRIC:
        if rel.factor is None or rel.secondary_metric is None:
            _missing(rel, "a factor f and a second metric g'")
        return kinetic_observable(rel.secondary_metric, rel.factor, name="fT'") - lxv
    raise ValueError(f"unknown relation kind {rel.kind!r}")


@dataclass(frozen=True)
class VirialReport:
    """Finite-horizon evaluation of one virial relation on one trajectory.

    ``residual`` is the time average of the integrand over ``[0, T]`` and
    ``residual_half`` over ``[0, T/2]``.  ``balance_check`` and ``G_max`` are
    ``None`` for relations without a virial function.
    """

    relation: str
    kind: str
    residual: float
    residual_half: float
    balance_check: Optional[float]
    G_max: Optional[float]
    converged: bool
    tolerance: float
    T: float

    @property
    def decay_bound(self):
        """``2 max|G| / T``, the bound on ``|residual|`` up to quadrature error."""
        return None if self.G_max is None else 2.0 * self.G_max / self.T


def virial_residual(sys: SystemSpec, traj: Trajectory, rel: VirialRelation) -> VirialReport:
    """Evaluate ``rel`` on ``traj``.

    Raises :class:`RejectedTrajectory` for energy-rejected runs and
    :class:`RelationFieldMissing` when the relation lacks its data.
    """
    _require_accepted(traj)
    integrand = relation_integrand(rel)
    avg = time_average(traj, integrand, sys)
    balance = g_max = None
    if rel.has_virial_function:
        G = affine_observable(rel.field).values(sys, traj)
        balance = avg.value_T - (G[-1] - G[0]) / avg.T
        g_max = float(np.max(np.abs(G)))
    return VirialReport(
        relation=rel.name,
        kind=rel.kind,
        residual=avg.value_T,
        residual_half=avg.value_half,
        balance_check=balance,
        G_max=g_max,
        converged=avg.converged,
        tolerance=avg.convergence_tolerance,
        T=avg.T,
    )


@dataclass(frozen=True)
class Partition:
    """Averages of kinetic and potential energy against their predicted split."""

    avg_T: float
    avg_V: float
    pred_T: float
    pred_V: float
    energy: float
    kinetic: RunningAverage
    potential: RunningAverage

    def __iter__(self):
        return iter((self.avg_T, self.avg_V, self.pred_T, self.pred_V))

    @property
    def max_error(self):
        return max(abs(self.avg_T - self.pred_T), abs(self.avg_V - self.pred_V))

    @property
    def converged(self):
        return self.kinetic.converged and self.potential.converged


def homogeneous_partition(sys: SystemSpec, traj: Trajectory, mu: float, nu: float) -> Partition:
    """Energy split for a metric homothetic of degree ``mu`` and a potential homogeneous of degree ``nu``.

    Predicts ``<T> = nu E / (nu + mu)`` and ``<V> = mu E / (nu + mu)`` with
    ``E`` the initial energy of the run.
    """
    if abs(nu + mu) < 1e-12:
        raise DegenerateDegrees(f"mu + nu = {mu + nu} vanishes; the partition is undefined")
    _require_accepted(traj)
    kin = time_average(traj, kinetic_observable(), sys)
    pot = time_average(traj, potential_observable(), sys)
    E = float(traj.energies[0])
    return Partition(kin.value_T, pot.value_T, nu * E / (nu + mu), mu * E / (nu + mu), E, kin, pot)
