"""
One urn, one trajectory
=======================

Three colours start level. Each step adds one ball whose colour is drawn
with probability f(theta_i)/sum_k f(theta_k). Watch one colour pull away.
"""

import numpy as np

from polyurn import reinforce as rf
from polyurn import schedule as sc
from polyurn import urn

f = rf.power(2)
s = sc.constant(1)
rng = urn.replication_rng(master_seed=2026, replication=0)

res = urn.run(3, [1, 1, 1], f, s, 10**5, rng, snapshots=12, fixation_window=10**4)

print(" step        tau   theta")
for n, tau, theta in zip(res.trajectory.steps, res.trajectory.taus, res.trajectory.thetas):
    print(f"{n:6d} {tau:10.0f}   {np.round(theta, 4)}")

summ = res.summary
print(f"\ndominant colour (0-indexed): {summ.dominant_color}, margin {summ.dominance_margin:.4f}")
print(f"fixation: colour {summ.fixation_color} from step {summ.fixation_onset} "
      f"(window of {summ.fixation_window} steps)")
print(f"||M_N||^2 = {summ.martingale_sq_norm:.4f}  (bound on its mean: d/tau_0 = 1)")

# a single step, by hand, to see the bookkeeping
state = urn.UrnState([1.0, 2.0])
new, rec = urn.step(state, f, sc.constant(4, tau0=state.total), np.random.default_rng(0))
print(f"\nPsi(1/3, 2/3) = {rec.probs}, drew {rec.drawn}, increment {rec.martingale_increment}")
