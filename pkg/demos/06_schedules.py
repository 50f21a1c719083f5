"""
Ball schedules
==============

How many balls join at step n matters through sigma_n/tau_n: its sum must
diverge and its squares must be summable. Polynomial growth is fine,
exponential growth is not.
"""

from polyurn import schedule as sc

cases = {
    "constant 1": sc.constant(1, tau0=2),
    "n": sc.polynomial(1, tau0=2),
    "n^2": sc.polynomial(2, tau0=2),
    "2^n (40 terms)": sc.explicit([2 ** n for n in range(1, 41)], on_exhaust="error", tau0=2),
    "1,5,2 cycled": sc.explicit([1, 5, 2], tau0=2),
}

for name, s in cases.items():
    horizon = 100 if s.length is not None else 10**5
    rep = sc.check_conditions(s, horizon)
    print(f"{name:>15}: sigma_1..5={sc.sigmas(s, 5).tolist()} "
          f"(i) {rep.cond_i_verdict:9s} (ii) {rep.cond_ii_verdict:9s} [{rep.method}]"
          f" sigma/tau at horizon {rep.ratio_tail:.2e}")

s = cases["n"]
print("\nstep sizes delta_n for sigma_n = n:", [round(sc.delta(s, n), 4) for n in range(6)])
