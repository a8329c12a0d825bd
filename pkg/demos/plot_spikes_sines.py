"""
Spikes and sines
================

A signal made of a few spikes plus a few cosines is split back into its two
parts by minimizing ``||x||_1 + ||D y||_1`` subject to ``x + y = z``.
"""
import numpy as np

from demixkit.experiments import demo_spikes_sines

# %%
# One instance at the default size: 8 spikes and 8 DCT atoms in R^128.

rep = demo_spikes_sines(d=128, s_spike=8, s_dct=8, seed=0)
print(f"status {rep.result.status.value}, {rep.result.iterations} iterations")
print(f"spike part rel err {rep.x_error:.2e}, cosine part rel err {rep.y_error:.2e}")

# %%
# Supports of the recovered spike train against the truth.

print("true spikes     ", np.flatnonzero(rep.x0))
print("recovered spikes", np.flatnonzero(np.abs(rep.x_hat) > 1e-6))

# %%
# Recovery holds across seeds until the total sparsity gets large.

for seed in range(5):
    r = demo_spikes_sines(seed=seed)
    print(seed, "ok" if r.recovered() else "failed")
