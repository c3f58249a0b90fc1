import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virialgeo import (
    DegenerateDegrees, IntegratorConfig, RejectedTrajectory, RelationFieldMissing, State, VirialRelation,
    acceleration, affine_virial, build_system, homogeneous_partition, integrate, time_average, virial_residual,
)
from virialgeo.systems import fixture
from virialgeo.virial import (
    RunningAverage, affine_observable, average_values, kinetic_observable, lift_kinetic_observable,
    potential_observable, relation_integrand,
)


def dG_dt(sys_, X, s, h=1e-6):
    """Time derivative of g(X, v) along the flow, by finite differences in (q, v)."""
    a = acceleration(sys_, s)

    def G(q, v):
        return float(sys_.metric.eval(q) @ X.eval(q) @ v)

    return (G(s.q + h * s.v, s.v + h * a) - G(s.q - h * s.v, s.v - h * a)) / (2 * h)


# ------------------------------------------------------------ averaging

def test_average_values_trapezoid():
    t = np.linspace(0, math.pi, 1001)
    avg = average_values(np.sin(t), t)
    assert avg.value_T == pytest.approx(2 / math.pi, abs=1e-6)
    assert avg.value_half == pytest.approx(2 / math.pi, abs=1e-6)  # (1/(pi/2)) * 1
    assert avg.T == pytest.approx(math.pi) and avg.scale == pytest.approx(1.0)
    assert avg.converged


def test_convergence_tolerance():
    assert RunningAverage(0.0, 0.5e-6, 1.0, 0.0).converged
    assert not RunningAverage(0.0, 2e-6, 1.0, 0.0).converged
    assert RunningAverage(0.0, 0.9e-3, 1.0, 1.0).converged
    assert RunningAverage(0.0, 0.0, 1.0, 50.0).convergence_tolerance == pytest.approx(0.05)


def test_average_needs_three_samples():
    with pytest.raises(ValueError):
        average_values([1.0, 2.0], [0.0, 1.0])


def test_time_average_of_energy_is_energy():
    fx = fixture("sphere")
    sphere = build_system("sphere")
    traj = integrate(sphere, fx.state, IntegratorConfig(1e-3, 10.0))
    avg = time_average(traj, kinetic_observable() + potential_observable(), sphere)
    assert avg.value_T == pytest.approx(traj.energies[0], abs=1e-12)


def test_rejected_trajectory_refuses_averages():
    kep = build_system("kepler")
    traj = integrate(kep, State([1.0, 0.0], [0.0, 1.1]), IntegratorConfig(0.2, 20.0))
    assert traj.rejected
    with pytest.raises(RejectedTrajectory):
        time_average(traj, potential_observable(), kep)
    with pytest.raises(RejectedTrajectory):
        virial_residual(kep, traj, VirialRelation.from_catalog(kep.entry("rotation")))


# ---------------------------------------------------- observables

def test_series_and_pointwise_observables_agree():
    sphere = build_system("sphere")
    traj = integrate(sphere, fixture("sphere").state, IntegratorConfig(1e-2, 3.0))
    for e in sphere.catalog:
        for rel in (VirialRelation.from_catalog(e), VirialRelation.general(e.field)):
            A = relation_integrand(rel)
            series = A.values(sphere, traj)
            for i in (0, 57, len(traj) - 1):
                assert series[i] == pytest.approx(A.eval(sphere, traj.state(i)), abs=1e-12)
        G = affine_observable(e.field).values(sphere, traj)
        assert G[9] == pytest.approx(affine_virial(sphere.metric, e.field, traj.state(9)), abs=1e-13)


@pytest.mark.parametrize("name", ["sphere", "gnomonic", "kepler", "toda", "radial", "polar", "flat"])
def test_integrand_is_time_derivative_of_G(name, rng):
    # holds for every relation kind by construction; here checked pointwise off-shell
    sys_ = build_system(name)
    for e in sys_.catalog:
        rel = VirialRelation.from_catalog(e)
        A = relation_integrand(rel)
        for q in sys_.sample_points(rng, 4):
            s = State(q, rng.normal(size=sys_.dim))
            expected = dG_dt(sys_, e.field, s)
            assert A.eval(sys_, s) == pytest.approx(expected, rel=1e-6, abs=1e-6), (name, e.name, rel.kind)


@settings(max_examples=25, deadline=None)
@given(th=st.floats(0.4, math.pi - 0.4), ph=st.floats(-3, 3), a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_general_equals_specialised_integrands(th, ph, a, b):
    sphere = build_system("sphere")
    s = State([th, ph], [a, b])
    for e in sphere.catalog:
        if e.expected == "NonConformal":
            continue
        general = relation_integrand(VirialRelation.general(e.field)).eval(sphere, s)
        special = relation_integrand(VirialRelation.from_catalog(e)).eval(sphere, s)
        assert general == pytest.approx(special, abs=1e-12)


def test_killing_general_residuals_coincide():
    kep = build_system("kepler")
    traj = integrate(kep, fixture("kepler").state, IntegratorConfig(1e-3, 20.0))
    X = kep.entry("translation-killing").field
    r_k = virial_residual(kep, traj, VirialRelation.killing(X))
    r_g = virial_residual(kep, traj, VirialRelation.general(X))
    assert r_k.residual == pytest.approx(r_g.residual, abs=1e-13)


def test_two_metric_matches_general_on_gnomonic(rng):
    gnom = build_system("gnomonic", lam=0.5)
    e = gnom.entry("projective-dilation")
    two = relation_integrand(VirialRelation.from_catalog(e))
    gen = relation_integrand(VirialRelation.general(e.field))
    for q in gnom.sample_points(rng, 10):
        s = State(q, rng.normal(size=2))
        assert two.eval(gnom, s) == pytest.approx(gen.eval(gnom, s), abs=1e-12)


def test_lift_kinetic_vanishes_for_killing(rng):
    sphere = build_system("sphere")
    A = lift_kinetic_observable(sphere.entry("x1-killing").field)
    for q in sphere.sample_points(rng, 10):
        assert abs(A.eval(sphere, State(q, rng.normal(size=2)))) < 1e-13


# --------------------------------------------------------- residual report

def test_report_fields_and_balance():
    kep = build_system("kepler")
    fx = fixture("kepler", "ellipse")
    traj = integrate(kep, fx.state, fx.config)
    rep = virial_residual(kep, traj, VirialRelation.from_catalog(kep.entry("dilation")))
    assert rep.kind == "Conformal" and rep.relation == "dilation"
    G = affine_observable(kep.entry("dilation").field).values(kep, traj)
    assert rep.balance_check == pytest.approx(rep.residual - (G[-1] - G[0]) / rep.T, abs=1e-15)
    assert abs(rep.balance_check) < 1e-9
    assert rep.G_max == pytest.approx(np.max(np.abs(G)))
    assert rep.decay_bound == pytest.approx(2 * rep.G_max / rep.T)
    assert abs(rep.residual) <= rep.decay_bound + abs(rep.balance_check)


def test_relation_data_missing():
    sphere = build_system("sphere")
    X = sphere.entry("conformal-sin").field
    with pytest.raises(RelationFieldMissing):
        relation_integrand(VirialRelation("Conformal", "x", field=X))
    with pytest.raises(RelationFieldMissing):
        relation_integrand(VirialRelation("TwoMetric", "x", field=X, factor=sphere.entry("conformal-sin").factor))
    with pytest.raises(RelationFieldMissing):
        relation_integrand(VirialRelation("Killing", "x"))
    with pytest.raises(RelationFieldMissing):
        relation_integrand(VirialRelation("HomogeneousPartition", "h", mu=2.0))


def test_from_catalog_kind_selection():
    assert VirialRelation.from_catalog(build_system("sphere").entry("tan-virial")).kind == "General"
    assert VirialRelation.from_catalog(build_system("sphere").entry("conformal-sin")).kind == "Conformal"
    assert VirialRelation.from_catalog(build_system("sphere").entry("X1")).kind == "Killing"
    assert VirialRelation.from_catalog(build_system("gnomonic").entry("two-metric")).kind == "TwoMetric"
    assert VirialRelation.from_catalog(build_system("sphere").entry("X1"), "General").kind == "General"


# ------------------------------------------------------------- partition

def test_partition_oscillator():
    osc = build_system("flat-oscillator")
    traj = integrate(osc, State([1.0], [0.0]), IntegratorConfig(1e-3, 2 * math.pi))
    avg_T, avg_V, pred_T, pred_V = homogeneous_partition(osc, traj, 2.0, 2.0)
    assert avg_T == pytest.approx(0.25, abs=1e-9) and avg_V == pytest.approx(0.25, abs=1e-9)
    assert pred_T == pred_V == 0.25


@settings(max_examples=30, deadline=None)
@given(mu=st.floats(-5, 5), nu=st.floats(-5, 5))
def test_partition_predictions_sum_to_energy(mu, nu):
    if abs(mu + nu) < 1e-3:
        return
    osc = build_system("flat-oscillator")
    traj = integrate(osc, State([1.0], [0.3]), IntegratorConfig(0.05, 1.0))
    part = homogeneous_partition(osc, traj, mu, nu)
    assert part.pred_T + part.pred_V == pytest.approx(part.energy, rel=1e-14, abs=1e-14)


def test_partition_degenerate_degrees():
    osc = build_system("flat-oscillator")
    traj = integrate(osc, State([1.0], [0.0]), IntegratorConfig(1e-2, 1.0))
    with pytest.raises(DegenerateDegrees):
        homogeneous_partition(osc, traj, 1.0, -1.0)


def test_unbound_kepler_reports_non_convergence():
    # E > 0: the orbit escapes and the averages drift with T
    kep = build_system("kepler")
    traj = integrate(kep, State([1.0, 0.0], [0.5, 1.5]), IntegratorConfig(1e-3, 200.0))
    part = homogeneous_partition(kep, traj, 2.0, -1.0)
    assert part.energy > 0 and not part.converged
