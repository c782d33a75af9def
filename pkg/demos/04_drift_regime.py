"""Correlations against a moving target.

Shifting the observable by k = round(t^{1/2 - eps}) lattice steps probes
the Gaussian shoulder of the local limit: the two-term prediction

    t^{1/2} C_k(t) ~ kappa (1 - <Sigma^{-1} k, k> / (2t))

is compared against the exact quadrature value; the relative error
shrinks as t grows (the regime exponent at eps = 0.2 is t^{-0.8}).

Run:  python demos/04_drift_regime.py
"""

from covercorr import (
    amplitude_jet,
    delta_observable,
    drift_expansion,
    expansion_coefficients,
    lambda_jet,
    load_model,
)
from covercorr._fixtures import fixture_path

lazy = load_model(fixture_path("lazy_walk.json"))
f = delta_observable(lazy)
lam = lambda_jet(lazy, order=8)
amp = amplitude_jet(lazy, f, f, order=6)
exp = expansion_coefficients(lam, amp, 3)

print("eps = 0.2, shift k = round(t^0.3):")
print(f"{'t':>6} {'k':>4} {'predicted':>12} {'exact':>12} {'rel err':>10}")
for t in (100, 200, 400, 800):
    res = drift_expansion(lam, amp, exp.sigma, 0.2, t, (1,), model=lazy, f=f, g=f)
    print(
        f"{t:>6} {res.k[0]:>4} {res.predicted:>12.6f} "
        f"{res.exact.real:>12.6f} {res.rel_err:>10.2e}"
    )

print("\nat the boundary eps = 1/2 the shift freezes at one lattice step:")
res = drift_expansion(lam, amp, exp.sigma, 0.5, 400, (1,), model=lazy, f=f, g=f)
print(f"   t=400, k={res.k}: predicted {res.predicted:.6f}, "
      f"exact {res.exact.real:.6f}")
