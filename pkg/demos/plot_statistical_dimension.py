"""
Statistical dimension of descent cones
======================================

The statistical dimension of the l1 descent cone at an s-sparse point in R^d
grows with s. Monte Carlo estimates are checked against two cones with known
answers.
"""
from demixkit import ConeModel, sdim_monte_carlo
from demixkit.geometry import l1_descent_sdim_bound, sign_pattern

# %%
# Known values: a k-dimensional subspace has k, the orthant has d/2.

print(sdim_monte_carlo(ConeModel.subspace(16, 64), 20000))
print(sdim_monte_carlo(ConeModel.orthant(64), 20000))

# %%
# l1 descent cones at d = 64, next to the one-dimensional quadrature bound.

for s in (1, 4, 16, 32, 64):
    est = sdim_monte_carlo(ConeModel.descent_l1(sign_pattern(64, s)), 10000)
    print(f"s={s:2d}  delta={est.mean:6.2f} +- {est.stderr:.2f}  bound={l1_descent_sdim_bound(64, s):6.2f}")
