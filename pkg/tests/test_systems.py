import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virialgeo import (
    InvalidParameter, State, SystemId, affine_virial, build_system, classify_vector_field, energy, integrate,
    lie_derivative_metric, reference_initial_states,
)
from virialgeo.systems import (
    available_systems, fixture, gnomonic_chart_jacobian, gnomonic_to_sphere, kepler_period, sphere_colatitude,
    sphere_to_gnomonic,
)

ALL = ["flat", "polar", "sphere", "gnomonic", "kepler", "toda", "radial", "flat-oscillator"]


# ---------------------------------------------------------------- ids

def test_system_id_fills_defaults_and_types():
    sid = SystemId.make("toda", n="4")
    assert sid.kwargs == {"n": 4, "m": 1.0}
    assert SystemId.make("toda", n=4) == sid and hash(SystemId.make("toda", n=4)) == hash(sid)
    assert str(SystemId.make("sphere")) == "sphere(R=1.0, kappa=1.0, potential=cos)"


def test_presets_resolve():
    sid = SystemId.make("flat-oscillator")
    assert sid.name == "flat" and sid.kwargs["n"] == 1


@pytest.mark.parametrize("name,params", [
    ("nowhere", {}), ("sphere", {"radius": 1.0}), ("sphere", {"R": -1.0}), ("gnomonic", {"lam": 0.0}),
    ("toda", {"n": 1}), ("toda", {"n": 2.5}), ("kepler", {"m": 0.0}), ("sphere", {"potential": "oscillator"}),
    ("flat", {"n": 0}),
])
def test_invalid_parameters(name, params):
    with pytest.raises(InvalidParameter):
        build_system(name, **params)


def test_build_is_cached_and_immutable():
    a, b = build_system("sphere"), build_system("sphere", R=1.0)
    assert a is b
    with pytest.raises(AttributeError):
        a.name = "other"


def test_available_systems_order():
    assert available_systems()[:7] == ["flat", "polar", "sphere", "gnomonic", "kepler", "toda", "radial"]


def test_entry_lookup_by_alias():
    sphere = build_system("sphere")
    assert sphere.entry("X3") is sphere.entry("rotation")
    assert sphere.entry("sinθ∂θ").name == "conformal-sin"
    with pytest.raises(KeyError):
        sphere.entry("nope")


# ---------------------------------------------------------- catalogs

@pytest.mark.parametrize("name", ALL)
def test_catalog_classifications_at_64_points(name):
    sys_ = build_system(name)
    pts = sys_.sample_points(np.random.default_rng(64), 64)
    assert all(sys_.in_domain(q) for q in pts)
    for e in sys_.catalog:
        assert classify_vector_field(e.field, sys_.metric, pts, guard=sys_.guard).kind == e.expected, e.name


@pytest.mark.parametrize("params", [{"R": 2.5}, {"potential": "zero"}])
def test_sphere_variants(params):
    sys_ = build_system("sphere", **params)
    pts = sys_.sample_points(np.random.default_rng(1), 16)
    for e in sys_.catalog:
        assert classify_vector_field(e.field, sys_.metric, pts).kind == e.expected


def test_catalog_factors_match_fitted_factors():
    for name in ["sphere", "radial", "flat", "kepler"]:
        sys_ = build_system(name)
        pts = sys_.sample_points(np.random.default_rng(2), 10)
        for e in sys_.catalog:
            if e.factor is None or e.secondary_metric is not None:
                continue
            c = classify_vector_field(e.field, sys_.metric, pts)
            for q, f in c.f_samples:
                assert f == pytest.approx(e.factor.eval(q), abs=1e-12)


def test_gnomonic_two_metric_data(rng):
    gnom = build_system("gnomonic", lam=2.0)
    e = gnom.entry("projective-dilation")
    for q in gnom.sample_points(rng, 10):
        L = lie_derivative_metric(e.field, gnom.metric, q)
        assert np.allclose(L, e.factor.eval(q) * e.secondary_metric.eval(q), atol=1e-12)


def test_toda_metric_and_guard():
    toda = build_system("toda", n=3, m=1.0)
    assert np.array_equal(toda.metric.eval([0.3, -2.0, 7.0]), np.eye(3))
    assert toda.in_domain([50.0, -50.0, 1e3])


@settings(max_examples=50, deadline=None)
@given(q=st.lists(st.floats(-3, 3), min_size=4, max_size=4), c=st.floats(-10, 10))
def test_toda_translation_invariance(q, c):
    toda = build_system("toda", n=4)
    q = np.array(q)
    # exact: the shift cancels inside every exponent difference once rounded the same way
    shifted = q + c
    diffs_equal = np.array_equal(shifted - np.roll(shifted, -1), q - np.roll(q, -1))
    if diffs_equal:
        assert toda.potential.eval(shifted) == toda.potential.eval(q)
    assert toda.potential.eval(shifted) == pytest.approx(toda.potential.eval(q), rel=1e-13)


def test_toda_potential_value():
    toda = build_system("toda", n=3)
    q = np.array([0.1, -0.2, 0.4])
    expected = math.exp(0.3) + math.exp(-0.6) + math.exp(0.3)
    assert toda.potential.eval(q) == pytest.approx(expected)


# --------------------------------------------------------- chart change

@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.05, 5.0), R=st.floats(0.5, 3.0))
def test_gnomonic_is_pullback_of_sphere(r, R):
    lam = 1.0 / R**2
    gnom, sphere = build_system("gnomonic", lam=lam), build_system("sphere", R=R)
    J = gnomonic_chart_jacobian(r, R)
    theta = sphere_colatitude(r, R)
    pulled = J.T @ sphere.metric.eval([theta, 0.3]) @ J
    assert np.allclose(gnom.metric.eval([r, 0.3]), pulled, atol=1e-10)


def test_pullback_at_20_points():
    gnom, sphere = build_system("gnomonic"), build_system("sphere")
    for r in np.linspace(0.1, 4.0, 20):
        J = gnomonic_chart_jacobian(r)
        pulled = J.T @ sphere.metric.eval([sphere_colatitude(r), 0.0]) @ J
        assert np.max(np.abs(gnom.metric.eval([r, 0.0]) - pulled)) <= 1e-10


def test_chart_change_round_trip_and_invariants():
    s = fixture("sphere").state
    g = sphere_to_gnomonic(s)
    back = gnomonic_to_sphere(g)
    assert np.allclose(back.q, s.q, atol=1e-14) and np.allclose(back.v, s.v, atol=1e-14)
    gnom, sphere = build_system("gnomonic"), build_system("sphere")
    assert energy(gnom, g) == pytest.approx(energy(sphere, s), abs=1e-14)
    G_sphere = affine_virial(sphere.metric, sphere.entry("tan-virial").field, s)
    G_gnom = affine_virial(gnom.metric, gnom.entry("projective-dilation").field, g)
    assert G_sphere == pytest.approx(G_gnom, abs=1e-14)


def test_chart_change_rejects_upper_hemisphere():
    with pytest.raises(InvalidParameter):
        sphere_to_gnomonic(State([1.0, 0.0], [0.0, 1.0]))


# ------------------------------------------------------------- fixtures

def test_kepler_fixture_bound():
    fx = fixture("kepler", "ellipse")
    assert fx.state.v.tolist() == [0.0, 1.1]
    assert energy(build_system("kepler"), fx.state) == pytest.approx(-0.395, abs=1e-15)
    assert fx.config.t_end == pytest.approx(2 * math.pi * (1 / 0.79) ** 1.5)


def test_kepler_period_unbound():
    assert kepler_period(1.0, 1.0, State([1.0, 0.0], [0.0, 2.0])) == math.inf


def test_sphere_fixture_stays_off_the_poles():
    fx = fixture("sphere")
    traj = integrate(build_system("sphere"), fx.state, fx.config)
    assert np.min(np.sin(traj.q[:, 0])) > 0.1
    # the run stays in the lower hemisphere, where the gnomonic chart applies
    assert np.min(traj.q[:, 0]) > math.pi / 2


def test_flat_oscillator_fixture():
    fx = fixture("flat-oscillator")
    assert fx.state.q.tolist() == [1.0] and fx.state.v.tolist() == [0.0]
    assert energy(build_system("flat-oscillator"), fx.state) == 0.5


def test_toda_fixture_deterministic():
    a, b = fixture("toda"), fixture("toda")
    assert np.array_equal(a.state.q, b.state.q) and np.array_equal(a.state.v, b.state.v)
    assert abs(a.state.v.sum()) < 1e-15


@pytest.mark.parametrize("name", ALL)
def test_fixtures_integrate_cleanly(name):
    for fx in reference_initial_states(name):
        traj = integrate(build_system(name), fx.state, fx.config)
        assert not traj.rejected


def test_unknown_fixture():
    with pytest.raises(KeyError):
        fixture("kepler", "hyperbola")
