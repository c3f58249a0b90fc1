"""Pendulum on the unit sphere: which vector fields give a virial relation,
and how fast each time average settles.

    python3 demos/sphere_conformal_fields.py
"""
import math

import numpy as np

from virialgeo import IntegratorConfig, VirialRelation, build_system, classify_vector_field, integrate, virial_residual
from virialgeo.systems import fixture

sphere = build_system("sphere")
pts = sphere.sample_points(np.random.default_rng(0), 32)

print("catalog classification on 32 random points")
for e in sphere.catalog:
    c = classify_vector_field(e.field, sphere.metric, pts, guard=sphere.guard)
    print(f"  {e.name:<14} {c.kind:<16} max residual {c.max_residual:.1e}   {e.label}")

# sin(theta) d/dtheta rescales the metric by f = 2 cos(theta)
c = classify_vector_field(sphere.entry("conformal-sin").field, sphere.metric, [[math.pi / 3, 0.0]] + list(pts))
print(f"\nfitted conformal factor at theta = pi/3: {c.f_samples[0][1]:.12f}")

fx = fixture("sphere")
print(f"\nintegrating from q = {fx.state.q.tolist()}, v = {fx.state.v.tolist()}")
for t_end in (10.0, 40.0, 100.0):
    traj = integrate(sphere, fx.state, IntegratorConfig(1e-3, t_end))
    print(f"T = {t_end:>5.0f}  energy drift {traj.drift:.1e}")
    for name in ("x1-killing", "conformal-sin", "tan-virial"):
        rep = virial_residual(sphere, traj, VirialRelation.from_catalog(sphere.entry(name)))
        print(f"    {name:<14} {rep.kind:<10} <A> = {rep.residual:+.3e}   bound 2 max|G|/T = {rep.decay_bound:.1e}")

# bounded G means the averaged integrand decays like 1/T
