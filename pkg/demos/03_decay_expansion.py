"""From eigenvalue jets to the full decay law, with its oracle.

The program: fit jets of log mu(theta) and of the projector amplitude at
the origin, cross-check the Hessian against the Green-Kubo covariance,
feed both jets to the coefficient operators, and compare the resulting
expansion against exact return probabilities.

For the lazy walk everything is known in closed form:
    sqrt(t) C(t) -> 1/sqrt(pi),  c1/c0 = -1/8,  c2/c0 = +1/128.

Run:  python demos/03_decay_expansion.py
"""

import numpy as np

from covercorr import (
    amplitude_jet,
    decay_report,
    delta_observable,
    expansion_coefficients,
    green_kubo_covariance,
    hessian_check,
    lambda_jet,
    load_model,
)
from covercorr._fixtures import fixture_path

lazy = load_model(fixture_path("lazy_walk.json"))
f = delta_observable(lazy)

print("== jets at the origin")
lam = lambda_jet(lazy, order=8)
print("   lambda jet:", {a: complex(round(c.real, 8)) for a, c in sorted(lam.coeffs.items())})
print("   (series of log(1/2 + cos(theta)/2): -theta^2/4 - theta^4/96 - ...)")

print("\n== two covariances, one number")
print("   Green-Kubo        :", green_kubo_covariance(lazy).sigma[0, 0])
print("   -Hessian(log mu)  :", -lam.hessian().real[0, 0])
print("   max deviation     :", hessian_check(lazy))

print("\n== expansion coefficients (N = 3)")
amp = amplitude_jet(lazy, f, f, order=6)
exp = expansion_coefficients(lam, amp, 3)
print("   kappa =", exp.kappa, " (1/sqrt(pi) =", 1 / np.sqrt(np.pi), ")")
print("   c =", np.round(exp.c.real, 9))

print("\n== against exact return probabilities, t in [50, 400]")
rep = decay_report(lazy, f, f, [50, 71, 100, 141, 200, 283, 400], exp)
print("   t^(1/2) C(t) at t=400 :", rep.scaled[-1].real)
print("   residual slopes       :", {n: round(s, 3) for n, s in rep.slopes.items()})
print("   (slope after N terms is -N: each correction buys one full power)")

print("\n== the same machinery in two dimensions")
prod = load_model(fixture_path("product_lazy.json"))
f2 = delta_observable(prod)
lam2 = lambda_jet(prod, order=6)
amp2 = amplitude_jet(prod, f2, f2, order=4)
exp2 = expansion_coefficients(lam2, amp2, 2)
rep2 = decay_report(prod, f2, f2, [400], exp2)
print("   t C(t) at t=400 :", rep2.scaled[0].real, " (1/pi =", 1 / np.pi, ")")
print("   c1 =", round(exp2.c[1].real, 6), " (two independent axes: 2 x (-1/8))")
