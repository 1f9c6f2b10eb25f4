"""
Anomaly-detection trade-off front
=================================

Normal samples |x| <= T go through a linear gain, anomalies through a
sign offset. For each risk budget the designer picks the gain, the offset
and the detector threshold jointly. We sweep the budget and check that the
risk survives a small unknown-anomaly contamination.
"""

import numpy as np

from dcpjscc import anomaly as ad
from dcpjscc import binary_class as bc
from dcpjscc import sim_oracle as so

model = ad.NormalityModel.from_physical(T=4.0, sigma_x=2.0)
contamination = ad.ContaminationModel.default(model, epsilon=1e-3)
print(f"t = {model.t}, P(anomaly) = {model.tail_mass:.5f}, uniform bound m = {contamination.m}")

for sigma_z in (0.5, 1.0):
    cfg = bc.SourceChannelConfig(2.0, sigma_z, 3.0)
    lo, hi = ad.achievable_risk_range(cfg.snr(), model)
    print(f"\nsigma_z = {sigma_z}: reachable risk [{lo:.3e}, {hi:.3e}]")
    print(f"{'target':>10} {'alpha':>7} {'delta':>7} {'psi':>7} {'risk':>10} {'MC eps=1e-3':>12} {'MC mse':>8}")
    for pe in np.geomspace(lo, hi, 8)[1:-1]:
        sol = ad.design_ad(cfg, bc.DesignTarget(float(pe)), model)
        res = so.run_chain(so.SimConfig(so.ANOMALY, 400_000, 7, sol.encoder, model=model,
                                        contamination=contamination, detector=sol.detector))
        print(f"{pe:10.3e} {sol.alpha:7.4f} {sol.delta:7.4f} {sol.psi:7.4f} {sol.risk:10.3e} "
              f"{res.error_rate.mean:12.3e} {res.mse.mean:8.4f}")

# the threshold is a stationary point of the risk; the derivative vanishes there
enc = ad.ADEncoder(alpha=1.0, beta=0.0, delta=4.0)
det = ad.bayes_threshold(enc, model)
print(f"\nbayes threshold at alpha=1, delta=4: psi = {det.psi:.6f}, "
      f"dR/dpsi = {ad.risk_derivative(det, enc, model):.1e}")
