"""
Blind deconvolution by lifting
==============================

The convolution ``x * y`` is linear in the outer product ``x y^T``. Minimizing
the nuclear norm over all matrices consistent with the observed convolution
gives a convex stand-in for the bilinear problem.
"""
import numpy as np

from demixkit.experiments import demo_blind_deconv
from demixkit.operators import conv_lift_apply

# %%
# The lifting identity.

x, y = np.array([1.0, 2.0]), np.array([3.0, -1.0, 0.5])
print(conv_lift_apply(np.outer(x, y)), np.convolve(x, y))

# %%
# Solve at m = d = 8 and compare the lifted objective with the truth.

rep = demo_blind_deconv(m=8, d=8, seed=0)
sv = np.linalg.svd(rep.X, compute_uv=False)
print(f"feasibility {rep.relative_feasibility:.1e} * ||z0||")
print(f"nuclear norm {rep.objective:.4f} vs truth {rep.truth_objective:.4f}")
print("singular values", np.round(sv[:4], 3))
