"""Kepler ellipse: the classical virial theorem and the translation relation.

The dilation field r d/dr gives 2<T> = -<V> for a bound orbit; a translation,
being a symmetry of the kinetic term only, says the average radial force
component along that direction vanishes.

    python3 demos/kepler_virial.py
"""
from virialgeo import State, VirialRelation, build_system, energy, homogeneous_partition, integrate, virial_residual
from virialgeo.systems import fixture

kepler = build_system("kepler")
fx = fixture("kepler", "ellipse")
traj = integrate(kepler, fx.state, fx.config)
E = energy(kepler, fx.state)
print(f"ellipse: E = {E:.6f}, one period T = {fx.config.t_end:.6f}, drift {traj.drift:.1e}")

part = homogeneous_partition(kepler, traj, 2.0, -1.0)
print(f"<T> = {part.avg_T:.10f}   predicted -E   = {part.pred_T:.10f}")
print(f"<V> = {part.avg_V:.10f}   predicted 2E   = {part.pred_V:.10f}")

for name in ("rotation", "translation-killing", "translation-killing-y", "dilation"):
    rep = virial_residual(kepler, traj, VirialRelation.from_catalog(kepler.entry(name)))
    print(f"{name:<22} {rep.kind:<10} residual {rep.residual:+.2e}  balance {rep.balance_check:+.1e}")

# an orbit with E > 0 never comes back, so its averages never settle
unbound = integrate(kepler, State([1.0, 0.0], [0.5, 1.5]), fx.config)
part = homogeneous_partition(kepler, unbound, 2.0, -1.0)
print(f"\nunbound orbit: E = {part.energy:.3f}, converged = {part.converged}")
