"""
A tour of the special functions
===============================

Everything downstream rests on the normal tail Q, Owen's T, the skew-normal
CDF and the bivariate normal CDF. A few identities make quick sanity checks.
"""

import math

import numpy as np

from dcpjscc import special_fn as sf

# Q keeps relative accuracy deep in the tail
for x in (1.0, 5.0, 20.0, 35.0):
    print(f"Q({x:>4}) = {sf.std_normal_tail(x):.6e}   log Q = {sf.log_std_normal_tail(x):.4f}")

# Owen's T against its easy special cases
h = 1.3
q = sf.std_normal_tail(-h)
print("\nT(h, 1)      ", sf.owen_t(h, 1.0), " vs ", 0.5 * q * (1 - q))
print("T(0, 2)      ", sf.owen_t(0.0, 2.0), " vs ", math.atan(2.0) / (2 * math.pi))
print("T(h, 50)     ", sf.owen_t(h, 50.0), "  (large a uses the reflection)")

# a skew-normal with shape 0 is just the normal
xi = np.linspace(-3, 3, 7)
print("\nPhi_SN(xi; 0) - Phi(xi):", np.max(np.abs(sf.skew_normal_cdf(xi, 0.0) - sf.std_normal_tail(-xi))))
# the lower tail stays monotone
tail = sf.skew_normal_cdf(np.linspace(-9, -6, 7), 1.0)
print("lower tail, shape 1:", tail)
print("monotone:", bool(np.all(np.diff(tail) > 0)))

# bivariate normal at a few correlations
for rho in (-0.9, 0.0, 0.5, 0.99):
    p = sf.bvn_cdf(0.3, -0.2, rho)
    print(f"Phi2(0.3, -0.2; {rho:+.2f}) = {p:.12f}")
