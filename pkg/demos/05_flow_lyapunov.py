"""
Flow lines and the Lyapunov function
====================================

F(y) = sum_i int_0^{y_i} f(z)/z dz increases along y' = h(y), so every
trajectory climbs to an equilibrium, almost always a vertex.
"""

import numpy as np

from polyurn import meanfield as mf
from polyurn import reinforce as rf

model = mf.MeanFieldModel(3, rf.power_exp(0.1))
points = mf.equilibria(model)
starts = mf.random_starts(3, 8, np.random.default_rng(1))

for y0 in starts:
    tr = mf.flow(model, y0, T=200, dt=0.01)
    eq, dist = mf.nearest_equilibrium(points, tr.final)
    print(f"{np.round(y0, 3)} -> support {eq.support} at t={tr.times[-1]:6.2f}"
          f"  F: {tr.F[0]:.4f} -> {tr.F[-1]:.4f}  min step change {np.diff(tr.F).min():.1e}")

# closed form against quadrature for one point
y = np.array([0.2, 0.3, 0.5])
print(f"\nF({y.tolist()}) closed form {mf.lyapunov_F(model, y):.12f}, quadrature {mf.lyapunov_F_quad(model, y):.12f}")
