"""
Shrinking the regularization parameter.

Runs the default scenario for kappa = 0.2, 0.1, ..., 0.0125 and prints
the sup-norm distance between consecutive solutions together with the
bounds that stay uniform in kappa.  The last trajectory is then checked
against the sub- and supersolution inequalities of the unregularized
equation with randomly sampled test functions.
"""

from martensite1d import default_config
from martensite1d.studies import kappa_study

res = kappa_study(default_config())

print(f"{'kappa':>8s} {'d':>10s} {'sup|S|':>8s} {'|dS|^2':>8s} {'Holder':>8s}")
for n, kappa, d, sup_S, gsq, hold in res.rows():
    d_text = f"{d:10.3e}" if n else f"{'-':>10s}"
    print(f"{kappa:8.4f} {d_text} {sup_S:8.4f} {gsq:8.3f} {hold:8.4f}")

v = res.viscosity
print(f"\nd decreasing: {res.d_decreasing}")
print(f"viscosity check: {v.n_touch_max} maxima, {v.n_touch_min} minima, {v.n_skipped} skipped")
print(f"largest violation {v.max_violation:.3e}, tolerance {v.tol:.3e}")
