"""
Reproducing the piecewise-linear MSE row
========================================

Design an encoder ``A x + B sign(x)`` for each classification budget, then
measure its distortion by Monte Carlo. Source std 1, noise std 0.63, power 3.
"""

import math

from dcpjscc import binary_class as bc
from dcpjscc import sim_oracle as so

cfg = bc.SourceChannelConfig(sigma_x=1.0, sigma_z=0.63, power=3.0)
snr = cfg.snr()
print(f"SNR = {snr:.4f}")

# every budget has to sit inside the achievable range
pe_min, pe_max = bc.pareto_range(snr)
print(f"achievable error range [{pe_min:.5f}, {pe_max:.5f}]\n")

targets = [0.1, 0.058, 0.038, 0.013, 0.0071]
published = [0.12, 0.13, 0.15, 0.22, 0.28]

print(f"{'pe':>7} {'alpha':>8} {'beta':>8} {'risk':>9} {'MC mse':>8} {'+-se':>8} {'ref':>5}")
for pe, ref in zip(targets, published):
    sol = bc.design(cfg, bc.DesignTarget(pe))
    res = so.run_chain(so.SimConfig(so.BINARY, 1_000_000, 2024, sol.encoder))
    print(f"{pe:7.4f} {sol.alpha_star:8.4f} {sol.beta_star:8.4f} {sol.achieved_risk:9.6f} "
          f"{res.mse.mean:8.4f} {res.mse.std_error:8.1e} {ref:5.2f}")

# the two ends of the front in closed form
print("\npure reconstruction MSE", round(bc.mmse_linear(math.sqrt(snr)), 4))
print("sign-only MSE bound     ", round(bc.mmse_tanh_bound(math.sqrt(snr)), 4))
