"""The same spherical pendulum seen through the gnomonic chart.

In that chart the radial field r(1 + lam r^2) d/dr is not conformal, yet its
Lie derivative is a multiple of the flat polar metric.  The resulting
two-metric relation and the general relation for tan(theta) d/dtheta on the
sphere are one identity written in two charts, so the residuals match.

    python3 demos/gnomonic_two_metric.py
"""
from virialgeo import VirialRelation, build_system, energy, integrate, virial_residual
from virialgeo.systems import fixture, sphere_to_gnomonic

sphere, gnom = build_system("sphere"), build_system("gnomonic")
fx = fixture("sphere")
s_gnom = sphere_to_gnomonic(fx.state)
print(f"sphere  q = {fx.state.q.round(6).tolist()}  E = {energy(sphere, fx.state):.12f}")
print(f"gnomon  q = {s_gnom.q.round(6).tolist()}  E = {energy(gnom, s_gnom):.12f}")

tr_s = integrate(sphere, fx.state, fx.config)
tr_g = integrate(gnom, s_gnom, fx.config)
r_s = virial_residual(sphere, tr_s, VirialRelation.from_catalog(sphere.entry("tan-virial")))
r_g = virial_residual(gnom, tr_g, VirialRelation.from_catalog(gnom.entry("two-metric")))
print(f"\nsphere   {r_s.kind:<9} <A> = {r_s.residual:+.15e}")
print(f"gnomonic {r_g.kind:<9} <A> = {r_g.residual:+.15e}")
print(f"difference {abs(r_s.residual - r_g.residual):.1e}")
