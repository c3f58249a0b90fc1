"""Periodic Toda chain: shifting one particle is a Killing field of the flat
metric, so the relation reduces to <dV/dq_k> = 0.  With the total momentum
removed every residual decays roughly like 1/T.

    python3 demos/toda_shift.py
"""
from virialgeo import IntegratorConfig, VirialRelation, build_system, integrate, virial_residual
from virialgeo.systems import fixture

toda = build_system("toda", n=3)
fx = fixture("toda")
print("q0 =", fx.state.q.round(4).tolist(), " v0 =", fx.state.v.round(4).tolist())

traj = integrate(toda, fx.state, IntegratorConfig(5e-3, 2000.0))
print(f"drift {traj.drift:.1e}")
print(f"{'T':>7}  " + "  ".join(f"{e.name:>10}" for e in toda.catalog))
for T in (10.0, 100.0, 500.0, 2000.0):
    w = traj.window(T)
    cells = []
    for e in toda.catalog:
        rep = virial_residual(toda, w, VirialRelation.from_catalog(e, "General"))
        cells.append(f"{rep.residual:+.2e}")
    print(f"{T:>7.0f}  " + "  ".join(f"{c:>10}" for c in cells))
