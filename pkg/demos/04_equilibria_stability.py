"""
Equilibria of the mean-field flow and their stability
=====================================================

Zeros of h(y) = f(y)/|f(y)|_1 - y are the uniform distributions on each
nonempty set of colours. Only the vertices attract.
"""

import numpy as np

from polyurn import meanfield as mf
from polyurn import reinforce as rf

for f, label in [(rf.power(2), "x^2"), (rf.power_exp(0.1), "x^2.1 e^(1-x)")]:
    model = mf.MeanFieldModel(3, f)
    print(f"\nf = {label}, alpha_inf = {rf.alpha_inf(f):.3f}")
    for p in mf.equilibria(model):
        rep = mf.jacobian(model, p.coordinates)
        eig = np.round(rep.eigenvalues.real, 4)
        print(f"  support {str(p.support):10s} {rep.classification:9s} eigenvalues {eig}"
              f"  closed forms agree: {rep.closed_form_ok}")

# the count is 2^d - 1 whatever f is
for d in range(2, 9):
    print(f"d={d}: {len(mf.equilibria(mf.MeanFieldModel(d, rf.power(3))))} equilibria")
