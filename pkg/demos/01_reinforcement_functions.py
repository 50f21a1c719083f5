"""
Reinforcement functions and class R
===================================

A colour holding a fraction x of the urn is weighted by f(x). Superlinear
feedback (x f'(x)/f(x) bounded below by something > 1) is what drives a
single colour to take over.
"""

import numpy as np

from polyurn import reinforce as rf

# three families: pure powers, a non-convex power-exponential, tabulated data
candidates = {
    "x^2": rf.power(2),
    "x^0.5": rf.power(0.5),
    "x^2.1 e^(1-x)": rf.power_exp(0.1),
    "tabulated": rf.tabulated([[0, 0], [0.25, 0.03], [0.5, 0.2], [0.75, 0.5], [1, 1]]),
}

x = np.linspace(0, 1, 6)
for name, f in candidates.items():
    print(f"{name:>14}: f(x) = {np.round(rf.evaluate(f, x), 4)}")

# the certificate never raises; failed conditions carry a location
print()
for name, f in candidates.items():
    rep = rf.validate_class_r(f)
    flags = " ".join(f"{k}={'ok' if getattr(rep, k).passed else 'FAIL'}" for k in ("cond_a", "cond_b", "cond_c"))
    print(f"{name:>14}: alpha_inf={rep.alpha_inf:.4f} {flags} lemmas={rep.lemma_checks}")

# the power-exponential is superlinear without being convex
f = candidates["x^2.1 e^(1-x)"]
xs = np.linspace(0.01, 0.99, 99)
curv = np.diff(rf.evaluate(f, xs), 2)
print(f"\nsecond differences of x^2.1 e^(1-x) change sign: min {curv.min():.2e}, max {curv.max():.2e}")

# local alpha(x) = x f'(x)/f(x) decreases from 2+eps at 0 to 1+eps at 1
print("alpha(x) on a coarse grid:", np.round(rf.local_alpha(f, np.linspace(0.1, 0.9, 5)), 4))
