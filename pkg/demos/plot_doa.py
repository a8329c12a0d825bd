"""
Bearing estimation under uneven sensor noise
============================================

MUSIC assumes white noise. When sensor noise levels differ, removing a
diagonal part from the sample covariance (and keeping a low-rank PSD part)
sharpens the bearing estimates.
"""
import numpy as np

from demixkit.experiments import DoaScenario, demo_doa, doa_study

# %%
# One run at 5 dB with two sources at -10 and 15 degrees.

rep = demo_doa(DoaScenario(snr_db=5.0, seed=0))
for method, truth, est, err in rep.rows():
    print(f"{method:8s} true {truth:6.1f}  est {est:6.1f}  err {err:4.1f}")

# %%
# Pooled over seeds: median error and share of estimates more than 3 degrees off.

for snr in (5.0, -5.0):
    study = doa_study(snr, seeds=range(20))
    raw, dem = study.fraction_off(3.0)
    print(f"{snr:+.0f} dB  median {study.median_raw:.1f} -> {study.median_demixed:.1f}"
          f"  >3deg {raw:.2f} -> {dem:.2f}")

# %%
# The diagonal part soaks up the uneven noise; the loudest sensors dominate it.

print(np.round(np.diag(rep.Y), 2))
