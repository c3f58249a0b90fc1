"""Bundled example systems with analytic derivatives, guards and field catalogs.

Each system is addressed by a :class:`SystemId` (name plus parameters) and
built once per process; the returned :class:`~virialgeo.dynamics.SystemSpec`
is immutable and shared.

Potentials come from a small closed family selected with ``potential=``:
``zero``, ``oscillator`` (``k/2 |q|^2`` or ``k/2 r^2``), ``cos``
(``kappa cos(theta)`` on the sphere, pulled back on the gnomonic chart),
plus the fixed Kepler and Toda potentials.  Masses are folded into the metric.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Tuple

import numpy as np

from .dynamics import CatalogEntry, IntegratorConfig, State, SystemSpec
from .errors import InvalidParameter
from .fields import MetricField, ScalarField, VectorFieldDef, compiled_guard
from .geometry import HOMOTHETIC, KILLING, NON_CONFORMAL, PROPER_CONFORMAL

EPS_GUARD = 1e-6

DEFAULTS = {
    "flat": {"n": 2, "potential": "oscillator", "k": 1.0},
    "polar": {"potential": "oscillator", "k": 1.0},
    "sphere": {"R": 1.0, "potential": "cos", "kappa": 1.0},
    "gnomonic": {"lam": 1.0, "potential": "cos", "kappa": 1.0},
    "kepler": {"gmm": 1.0, "m": 1.0},
    "toda": {"n": 3, "m": 1.0},
    "radial": {"h_power": 2.0, "potential": "oscillator", "k": 1.0},
}

PRESETS = {
    "flat-oscillator": ("flat", {"n": 1, "potential": "oscillator", "k": 1.0}),
}

POTENTIALS = {
    "flat": ("zero", "oscillator"),
    "polar": ("zero", "oscillator"),
    "sphere": ("zero", "cos"),
    "gnomonic": ("zero", "cos"),
    "radial": ("zero", "oscillator"),
}


@dataclass(frozen=True)
class SystemId:
    """Hashable system address: a bundled name and its full parameter set."""

    name: str
    params: Tuple[Tuple[str, object], ...] = ()

    @classmethod
    def make(cls, name, **params):
        """Resolve presets, fill defaults and validate parameter names."""
        if name in PRESETS:
            base, preset = PRESETS[name]
            name, params = base, {**preset, **params}
        if name not in DEFAULTS:
            raise InvalidParameter(f"unknown system {name!r}; choose from {', '.join(available_systems())}")
        unknown = set(params) - set(DEFAULTS[name])
        if unknown:
            raise InvalidParameter(f"unknown parameter(s) for {name}: {', '.join(sorted(unknown))}")
        merged = {**DEFAULTS[name], **params}
        for key, default in DEFAULTS[name].items():
            value = merged[key]
            if isinstance(default, str):
                merged[key] = str(value)
            elif isinstance(default, int):
                if float(value) != int(float(value)):
                    raise InvalidParameter(f"{name}.{key} must be an integer")
                merged[key] = int(float(value))
            else:
                merged[key] = float(value)
        return cls(name, tuple(sorted(merged.items())))

    @property
    def kwargs(self):
        return dict(self.params)

    def __str__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.name}({inner})"


def available_systems():
    return list(DEFAULTS) + list(PRESETS)


def _as_id(id_or_name, params):
    if isinstance(id_or_name, SystemId):
        if params:
            return SystemId.make(id_or_name.name, **{**id_or_name.kwargs, **params})
        return id_or_name
    return SystemId.make(id_or_name, **params)


def build_system(id_or_name, **params) -> SystemSpec:
    """Build (or fetch the cached) bundled system.

    >>> sys = build_system("sphere", R=1.0)          # doctest: +SKIP
    >>> [e.name for e in sys.catalog]                # doctest: +SKIP
    """
    return _build(_as_id(id_or_name, params))


@lru_cache(maxsize=None)
def _build(sid: SystemId) -> SystemSpec:
    kw = sid.kwargs
    if "potential" in kw and kw["potential"] not in POTENTIALS[sid.name]:
        raise InvalidParameter(
            f"{sid.name} supports potentials {', '.join(POTENTIALS[sid.name])}, not {kw['potential']!r}")
    builder = _BUILDERS[sid.name]
    spec = builder(**kw)
    return SystemSpec(
        name=sid.name,
        metric=spec["metric"],
        potential=spec["potential"],
        guard=spec["guard"],
        catalog=tuple(spec["catalog"]),
        sampler=spec["sampler"],
        coords=spec["coords"],
        params=kw,
    )


# ----------------------------------------------------------------- shared bits

def _always(q):
    for i in range(q.shape[0]):
        if not np.isfinite(q[i]):
            return False
    return True


def _radius_guard(q):
    return q[0] > EPS_GUARD and np.isfinite(q[1])


def _unit_field(i):
    def unit(q, x, jac):
        x[:] = 0.0
        x[i] = 1.0
        jac[:] = 0.0
        return 0.0

    return unit


def _zero_potential(dim):
    return ScalarField.constant(dim, 0.0)


def _euclidean_polar():
    def metric(q, g, dg):
        r = q[0]
        g[:] = 0.0
        dg[:] = 0.0
        g[0, 0] = 1.0
        g[1, 1] = r * r
        dg[1, 1, 0] = 2.0 * r
        return 0.0

    return MetricField.compiled(2, metric)


def _polar_fields():
    """Rotation, translations and dilation of the Euclidean plane in polar coordinates."""

    def rotation(q, x, jac):
        x[0] = 0.0
        x[1] = 1.0
        jac[:] = 0.0
        return 0.0

    def translation_x(q, x, jac):
        r, phi = q[0], q[1]
        c, s = np.cos(phi), np.sin(phi)
        x[0] = c
        x[1] = -s / r
        jac[0, 0] = 0.0
        jac[0, 1] = -s
        jac[1, 0] = s / (r * r)
        jac[1, 1] = -c / r
        return 0.0

    def translation_y(q, x, jac):
        r, phi = q[0], q[1]
        c, s = np.cos(phi), np.sin(phi)
        x[0] = s
        x[1] = c / r
        jac[0, 0] = 0.0
        jac[0, 1] = c
        jac[1, 0] = -c / (r * r)
        jac[1, 1] = -s / r
        return 0.0

    def dilation(q, x, jac):
        x[0] = q[0]
        x[1] = 0.0
        jac[:] = 0.0
        jac[0, 0] = 1.0
        return 0.0

    return (VectorFieldDef.compiled(2, rotation), VectorFieldDef.compiled(2, translation_x),
            VectorFieldDef.compiled(2, translation_y), VectorFieldDef.compiled(2, dilation))


def _polar_sampler(rng, k):
    return np.column_stack([rng.uniform(0.5, 3.0, k), rng.uniform(-math.pi, math.pi, k)])


def _polar_catalog():
    rotation, tx, ty, dilation = _polar_fields()
    two = ScalarField.constant(2, 2.0)
    return [
        CatalogEntry("rotation", rotation, KILLING, aliases=("∂φ", "d/dphi"), label="d/dphi"),
        CatalogEntry("translation-killing", tx, KILLING, aliases=("translation-x",),
                     label="cos(phi) d/dr - sin(phi)/r d/dphi"),
        CatalogEntry("translation-killing-y", ty, KILLING, aliases=("translation-y",),
                     label="sin(phi) d/dr + cos(phi)/r d/dphi"),
        CatalogEntry("dilation", dilation, HOMOTHETIC, factor=two, aliases=("r∂r", "r d/dr"),
                     label="r d/dr"),
    ]


# ---------------------------------------------------------------------- flat

def _build_flat(n, potential, k):
    if n < 1:
        raise InvalidParameter("flat.n must be at least 1")

    def metric(q, g, dg):
        g[:] = 0.0
        dg[:] = 0.0
        for i in range(g.shape[0]):
            g[i, i] = 1.0
        return 0.0

    if potential == "oscillator":
        def pot(q, grad):
            acc = 0.0
            for i in range(q.shape[0]):
                grad[i] = k * q[i]
                acc += q[i] * q[i]
            return 0.5 * k * acc

        V = ScalarField.compiled(n, pot)
    else:
        V = _zero_potential(n)

    catalog = []
    for i in range(n):
        catalog.append(CatalogEntry(f"translation-{i + 1}", VectorFieldDef.compiled(n, _unit_field(i)),
                                    KILLING, aliases=(f"d/dq{i + 1}",), label=f"d/dq{i + 1}"))

    def dilation(q, x, jac):
        jac[:] = 0.0
        for i in range(q.shape[0]):
            x[i] = q[i]
            jac[i, i] = 1.0
        return 0.0

    catalog.append(CatalogEntry("dilation", VectorFieldDef.compiled(n, dilation), HOMOTHETIC,
                                factor=ScalarField.constant(n, 2.0), aliases=("r∂r", "r d/dr"),
                                label="q^i d/dq^i"))
    if n >= 2:
        def rotation(q, x, jac):
            x[:] = 0.0
            jac[:] = 0.0
            x[0] = -q[1]
            x[1] = q[0]
            jac[0, 1] = -1.0
            jac[1, 0] = 1.0
            return 0.0

        catalog.append(CatalogEntry("rotation", VectorFieldDef.compiled(n, rotation), KILLING,
                                    label="q1 d/dq2 - q2 d/dq1"))

    return dict(
        metric=MetricField.compiled(n, metric),
        potential=V,
        guard=compiled_guard(_always),
        catalog=catalog,
        sampler=lambda rng, m: rng.uniform(-2.0, 2.0, (m, n)),
        coords=tuple(f"q{i + 1}" for i in range(n)),
    )


# --------------------------------------------------------------------- polar

def _build_polar(potential, k):
    if potential == "oscillator":
        def pot(q, grad):
            r = q[0]
            grad[0] = k * r
            grad[1] = 0.0
            return 0.5 * k * r * r

        V = ScalarField.compiled(2, pot)
    else:
        V = _zero_potential(2)
    return dict(
        metric=_euclidean_polar(),
        potential=V,
        guard=compiled_guard(_radius_guard),
        catalog=_polar_catalog(),
        sampler=_polar_sampler,
        coords=("r", "phi"),
    )


# -------------------------------------------------------------------- kepler

def _build_kepler(gmm, m):
    if not (gmm > 0 and m > 0):
        raise InvalidParameter("kepler needs gmm > 0 and m > 0")

    def metric(q, g, dg):
        r = q[0]
        g[:] = 0.0
        dg[:] = 0.0
        g[0, 0] = m
        g[1, 1] = m * r * r
        dg[1, 1, 0] = 2.0 * m * r
        return 0.0

    def pot(q, grad):
        r = q[0]
        grad[0] = gmm / (r * r)
        grad[1] = 0.0
        return -gmm / r

    return dict(
        metric=MetricField.compiled(2, metric),
        potential=ScalarField.compiled(2, pot),
        guard=compiled_guard(_radius_guard),
        catalog=_polar_catalog(),
        sampler=_polar_sampler,
        coords=("r", "phi"),
    )


# -------------------------------------------------------------------- sphere

def _sphere_guard(q):
    return abs(np.sin(q[0])) > EPS_GUARD and np.isfinite(q[1])


def _build_sphere(R, potential, kappa):
    if not R > 0:
        raise InvalidParameter("sphere.R must be positive")
    R2 = R * R

    def metric(q, g, dg):
        s, c = np.sin(q[0]), np.cos(q[0])
        g[:] = 0.0
        dg[:] = 0.0
        g[0, 0] = R2
        g[1, 1] = R2 * s * s
        dg[1, 1, 0] = 2.0 * R2 * s * c
        return 0.0

    if potential == "cos":
        def pot(q, grad):
            grad[0] = -kappa * np.sin(q[0])
            grad[1] = 0.0
            return kappa * np.cos(q[0])

        V = ScalarField.compiled(2, pot)
    else:
        V = _zero_potential(2)

    def rotation(q, x, jac):
        x[0] = 0.0
        x[1] = 1.0
        jac[:] = 0.0
        return 0.0

    def x1(q, x, jac):
        th, phi = q[0], q[1]
        s, c = np.sin(th), np.cos(th)
        sp, cp = np.sin(phi), np.cos(phi)
        x[0] = cp
        x[1] = -sp * c / s
        jac[0, 0] = 0.0
        jac[0, 1] = -sp
        jac[1, 0] = sp / (s * s)
        jac[1, 1] = -cp * c / s
        return 0.0

    def x2(q, x, jac):
        th, phi = q[0], q[1]
        s, c = np.sin(th), np.cos(th)
        sp, cp = np.sin(phi), np.cos(phi)
        x[0] = sp
        x[1] = cp * c / s
        jac[0, 0] = 0.0
        jac[0, 1] = cp
        jac[1, 0] = -cp / (s * s)
        jac[1, 1] = -sp * c / s
        return 0.0

    def sin_field(q, x, jac):
        x[0] = np.sin(q[0])
        x[1] = 0.0
        jac[:] = 0.0
        jac[0, 0] = np.cos(q[0])
        return 0.0

    def sin_factor(q, grad):
        grad[0] = -2.0 * np.sin(q[0])
        grad[1] = 0.0
        return 2.0 * np.cos(q[0])

    def tan_field(q, x, jac):
        c = np.cos(q[0])
        x[0] = np.sin(q[0]) / c
        x[1] = 0.0
        jac[:] = 0.0
        jac[0, 0] = 1.0 / (c * c)
        return 0.0

    catalog = [
        CatalogEntry("rotation", VectorFieldDef.compiled(2, rotation), KILLING,
                     aliases=("X3", "∂φ", "d/dphi"), label="d/dphi"),
        CatalogEntry("x1-killing", VectorFieldDef.compiled(2, x1), KILLING,
                     aliases=("X1",), label="cos(phi) d/dtheta - sin(phi) cot(theta) d/dphi"),
        CatalogEntry("x2-killing", VectorFieldDef.compiled(2, x2), KILLING,
                     aliases=("X2",), label="sin(phi) d/dtheta + cos(phi) cot(theta) d/dphi"),
        CatalogEntry("conformal-sin", VectorFieldDef.compiled(2, sin_field), PROPER_CONFORMAL,
                     factor=ScalarField.compiled(2, sin_factor),
                     aliases=("sinθ∂θ", "sin(theta) d/dtheta"), label="sin(theta) d/dtheta"),
        CatalogEntry("tan-virial", VectorFieldDef.compiled(2, tan_field), NON_CONFORMAL,
                     aliases=("tanθ∂θ", "tan(theta) d/dtheta"), label="tan(theta) d/dtheta"),
    ]

    def sampler(rng, k):
        return np.column_stack([rng.uniform(0.3, math.pi - 0.3, k), rng.uniform(-math.pi, math.pi, k)])

    return dict(
        metric=MetricField.compiled(2, metric),
        potential=V,
        guard=compiled_guard(_sphere_guard),
        catalog=catalog,
        sampler=sampler,
        coords=("theta", "phi"),
    )


# ------------------------------------------------------------------ gnomonic

def _build_gnomonic(lam, potential, kappa):
    if not lam > 0:
        raise InvalidParameter("gnomonic.lam must be positive")

    def metric(q, g, dg):
        r = q[0]
        w = 1.0 + lam * r * r
        g[:] = 0.0
        dg[:] = 0.0
        g[0, 0] = 1.0 / (w * w)
        g[1, 1] = r * r / w
        dg[0, 0, 0] = -4.0 * lam * r / (w * w * w)
        dg[1, 1, 0] = 2.0 * r / (w * w)
        return 0.0

    if potential == "cos":
        # kappa cos(theta) on the lower hemisphere, cos(theta) = -1/sqrt(1 + lam r^2)
        def pot(q, grad):
            r = q[0]
            w = 1.0 + lam * r * r
            grad[0] = kappa * lam * r / (w * np.sqrt(w))
            grad[1] = 0.0
            return -kappa / np.sqrt(w)

        V = ScalarField.compiled(2, pot)
    else:
        V = _zero_potential(2)

    def projective(q, x, jac):
        r = q[0]
        x[0] = r * (1.0 + lam * r * r)
        x[1] = 0.0
        jac[:] = 0.0
        jac[0, 0] = 1.0 + 3.0 * lam * r * r
        return 0.0

    def factor(q, grad):
        r = q[0]
        w = 1.0 + lam * r * r
        grad[0] = -4.0 * lam * r / (w * w)
        grad[1] = 0.0
        return 2.0 / w

    rotation = _polar_fields()[0]
    catalog = [
        CatalogEntry("projective-dilation", VectorFieldDef.compiled(2, projective), NON_CONFORMAL,
                     factor=ScalarField.compiled(2, factor), secondary_metric=_euclidean_polar(),
                     aliases=("r(1+λr²)∂r", "two-metric"), label="r (1 + lam r^2) d/dr"),
        CatalogEntry("rotation", rotation, KILLING, aliases=("∂φ", "d/dphi"), label="d/dphi"),
    ]

    def sampler(rng, k):
        return np.column_stack([rng.uniform(0.2, 3.0, k), rng.uniform(-math.pi, math.pi, k)])

    return dict(
        metric=MetricField.compiled(2, metric),
        potential=V,
        guard=compiled_guard(_radius_guard),
        catalog=catalog,
        sampler=sampler,
        coords=("r", "phi"),
    )


# ---------------------------------------------------------------------- toda

def _build_toda(n, m):
    if n < 2:
        raise InvalidParameter("toda.n must be at least 2")
    if not m > 0:
        raise InvalidParameter("toda.m must be positive")

    def metric(q, g, dg):
        g[:] = 0.0
        dg[:] = 0.0
        for i in range(g.shape[0]):
            g[i, i] = m
        return 0.0

    def pot(q, grad):
        size = q.shape[0]
        acc = 0.0
        for i in range(size):
            grad[i] = 0.0
        for i in range(size):
            j = (i + 1) % size
            e = np.exp(q[i] - q[j])
            acc += e
            grad[i] += e
            grad[j] -= e
        return acc

    catalog = []
    for i in range(n):
        catalog.append(CatalogEntry(f"X{i + 1}", VectorFieldDef.compiled(n, _unit_field(i)), KILLING,
                                    aliases=(f"d/dq{i + 1}",), label=f"d/dq{i + 1}"))

    def total(q, x, jac):
        x[:] = 1.0
        jac[:] = 0.0
        return 0.0

    catalog.append(CatalogEntry("total-shift", VectorFieldDef.compiled(n, total), KILLING,
                                label="sum_k d/dq_k"))
    return dict(
        metric=MetricField.compiled(n, metric),
        potential=ScalarField.compiled(n, pot),
        guard=compiled_guard(_always),
        catalog=catalog,
        sampler=lambda rng, k: rng.uniform(-1.0, 1.0, (k, n)),
        coords=tuple(f"q{i + 1}" for i in range(n)),
    )


# -------------------------------------------------------------------- radial

def _radial_guard(q):
    return q[0] > EPS_GUARD and abs(np.sin(q[1])) > EPS_GUARD and np.isfinite(q[2])


def _build_radial(h_power, potential, k):
    p = h_power

    def metric(q, g, dg):
        r, th = q[0], q[1]
        s, c = np.sin(th), np.cos(th)
        g[:] = 0.0
        dg[:] = 0.0
        g[0, 0] = r ** p
        g[1, 1] = r * r
        g[2, 2] = r * r * s * s
        dg[0, 0, 0] = p * r ** (p - 1.0)
        dg[1, 1, 0] = 2.0 * r
        dg[2, 2, 0] = 2.0 * r * s * s
        dg[2, 2, 1] = 2.0 * r * r * s * c
        return 0.0

    if potential == "oscillator":
        def pot(q, grad):
            r = q[0]
            grad[0] = k * r
            grad[1] = 0.0
            grad[2] = 0.0
            return 0.5 * k * r * r

        V = ScalarField.compiled(3, pot)
    else:
        V = _zero_potential(3)

    # X_r = r / sqrt(h) = r^(1 - p/2) and f = 2 / sqrt(h) = 2 r^(-p/2)
    def radial_field(q, x, jac):
        r = q[0]
        x[:] = 0.0
        jac[:] = 0.0
        x[0] = r ** (1.0 - 0.5 * p)
        jac[0, 0] = (1.0 - 0.5 * p) * r ** (-0.5 * p)
        return 0.0

    def factor(q, grad):
        r = q[0]
        grad[:] = 0.0
        grad[0] = -p * r ** (-0.5 * p - 1.0)
        return 2.0 * r ** (-0.5 * p)

    def rotation(q, x, jac):
        x[:] = 0.0
        x[2] = 1.0
        jac[:] = 0.0
        return 0.0

    aliases = ("X_r",)
    if p == 0.0:
        aliases += ("r∂r", "r d/dr")
    elif p == 2.0:
        aliases += ("∂r", "d/dr")
    catalog = [
        CatalogEntry("radial-conformal", VectorFieldDef.compiled(3, radial_field),
                     HOMOTHETIC if p == 0.0 else PROPER_CONFORMAL,
                     factor=ScalarField.compiled(3, factor), aliases=aliases,
                     label=f"r^{1 - 0.5 * p:g} d/dr"),
        CatalogEntry("rotation", VectorFieldDef.compiled(3, rotation), KILLING,
                     aliases=("∂φ", "d/dphi"), label="d/dphi"),
    ]

    def sampler(rng, m):
        return np.column_stack([rng.uniform(0.5, 3.0, m), rng.uniform(0.3, math.pi - 0.3, m),
                                rng.uniform(-math.pi, math.pi, m)])

    return dict(
        metric=MetricField.compiled(3, metric),
        potential=V,
        guard=compiled_guard(_radial_guard),
        catalog=catalog,
        sampler=sampler,
        coords=("r", "theta", "phi"),
    )


_BUILDERS = {
    "flat": _build_flat,
    "polar": _build_polar,
    "sphere": _build_sphere,
    "gnomonic": _build_gnomonic,
    "kepler": _build_kepler,
    "toda": _build_toda,
    "radial": _build_radial,
}


# --------------------------------------------------------- chart change maps

def gnomonic_radius(theta, R=1.0):
    """Gnomonic radius ``r = -R tan(theta)`` of a lower-hemisphere colatitude."""
    return -R * math.tan(theta)


def sphere_colatitude(r, R=1.0):
    return math.pi - math.atan(r / R)


def sphere_to_gnomonic(s: State, R=1.0) -> State:
    """Map a lower-hemisphere state ``(theta, phi, v_theta, v_phi)`` to ``(r, phi, v_r, v_phi)``."""
    theta, phi = s.q
    if not math.pi / 2 < theta < math.pi:
        raise InvalidParameter("the gnomonic chart covers the open lower hemisphere only")
    sec2 = 1.0 / math.cos(theta) ** 2
    return State([gnomonic_radius(theta, R), phi], [-R * sec2 * s.v[0], s.v[1]])


def gnomonic_to_sphere(s: State, R=1.0) -> State:
    r, phi = s.q
    return State([sphere_colatitude(r, R), phi], [-s.v[0] / (R * (1.0 + (r / R) ** 2)), s.v[1]])


def gnomonic_chart_jacobian(r, R=1.0):
    """Jacobian of ``(r, phi) -> (theta, phi)``."""
    return np.diag([-1.0 / (R * (1.0 + (r / R) ** 2)), 1.0])


# ------------------------------------------------------------------ fixtures

class Fixture(NamedTuple):
    name: str
    state: State
    config: IntegratorConfig


def kepler_period(gmm, m, state: State):
    """Period of the bound Kepler orbit through ``state`` (inf when unbound)."""
    r = state.q[0]
    E = 0.5 * m * (state.v[0] ** 2 + (r * state.v[1]) ** 2) - gmm / r
    if E >= 0:
        return math.inf
    a = -gmm / (2.0 * E)
    return 2.0 * math.pi * math.sqrt(m * a**3 / gmm)


TODA_SEED = 1729


def _sphere_default():
    return State([2.4, 0.0], [0.2, 1.2])


def reference_initial_states(id_or_name, **params):
    """Deterministic initial states with integrator settings for bounded runs.

    Returns a list of :class:`Fixture`; the first entry is the system default.
    """
    sid = _as_id(id_or_name, params)
    kw = sid.kwargs
    two_pi = 2.0 * math.pi
    name = sid.name

    if name == "flat":
        n = kw["n"]
        if kw["potential"] == "oscillator":
            q = np.zeros(n)
            q[0] = 1.0
            v = np.zeros(n)
            if n >= 2:
                v[1] = 0.5
            period = two_pi / math.sqrt(kw["k"])
            return [Fixture("oscillator", State(q, v), IntegratorConfig(1e-3, period))]
        v = np.zeros(n)
        v[0] = 1.0
        return [Fixture("free", State(np.zeros(n), v), IntegratorConfig(1e-3, 1.0))]

    if name == "polar":
        if kw["potential"] == "oscillator":
            return [Fixture("default", State([1.0, 0.0], [0.3, 0.8]),
                            IntegratorConfig(1e-3, two_pi / math.sqrt(kw["k"])))]
        return [Fixture("free", State([1.0, 0.0], [0.0, 1.0]), IntegratorConfig(1e-3, 1.0))]

    if name == "kepler":
        gmm, m = kw["gmm"], kw["m"]
        scale = math.sqrt(gmm / m)
        out = []
        for label, speed in (("ellipse", 1.1), ("circular", 1.0)):
            s = State([1.0, 0.0], [0.0, speed * scale])
            out.append(Fixture(label, s, IntegratorConfig(1e-4, kepler_period(gmm, m, s))))
        return out

    if name == "sphere":
        if kw["potential"] == "cos":
            return [Fixture("default", _sphere_default(), IntegratorConfig(1e-3, 100.0))]
        return [
            Fixture("default", State([math.pi / 2, 0.0], [0.3, 1.0]), IntegratorConfig(1e-3, 10.0)),
            Fixture("equator", State([math.pi / 2, 0.0], [0.0, 1.0]), IntegratorConfig(1e-3, 10.0)),
        ]

    if name == "gnomonic":
        if kw["potential"] == "cos":
            R = 1.0 / math.sqrt(kw["lam"])
            return [Fixture("default", sphere_to_gnomonic(_sphere_default(), R), IntegratorConfig(1e-3, 100.0))]
        # free motion follows a great circle, which leaves the chart at the equator
        return [Fixture("free", State([0.5, 0.0], [0.1, 0.2]), IntegratorConfig(1e-3, 1.0))]

    if name == "toda":
        rng = np.random.default_rng(TODA_SEED)
        n = kw["n"]
        q = 0.5 * rng.standard_normal(n)
        v = 0.3 * rng.standard_normal(n)
        return [Fixture("default", State(q - q.mean(), v - v.mean()), IntegratorConfig(1e-3, 100.0))]

    if name == "radial":
        if kw["potential"] == "oscillator":
            return [Fixture("default", State([1.0, math.pi / 2, 0.0], [0.2, 0.3, 0.9]),
                            IntegratorConfig(1e-3, 20.0))]
        return [Fixture("free", State([1.0, math.pi / 2, 0.0], [0.2, 0.3, 0.9]), IntegratorConfig(1e-3, 1.0))]

    raise InvalidParameter(f"no fixtures for {name!r}")


def fixture(id_or_name, name=None, **params) -> Fixture:
    """Look up one fixture by name (default: the first one)."""
    fixtures = reference_initial_states(id_or_name, **params)
    if name is None or name == "default":
        return fixtures[0]
    for f in fixtures:
        if f.name == name:
            return f
    known = ", ".join(f.name for f in fixtures)
    raise KeyError(f"unknown fixture {name!r} (known: {known})")
