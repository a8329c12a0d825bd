"""
Phase transition for l1/l1 demixing
===================================

Success of demixing a sparse vector from a rotated sparse vector switches
abruptly where the two statistical dimensions add up to the ambient
dimension. A coarse grid shows the switch in a few seconds.
"""
import os
import tempfile

from demixkit.experiments import PhaseGridSpec, run_phase_diagram
from demixkit.io import write_csv, write_svg_heatmap

# %%
# 5x5 grid at d = 32 with 5 trials per cell.

spec = PhaseGridSpec.square(d=32, count=5, trials_per_cell=5, delta_samples=4000)
result = run_phase_diagram(spec)
for c in result.cells:
    print(f"s_x={c.s_x:2d} s_y={c.s_y:2d}  Delta={c.delta:.2f}  success={c.success_rate:.1f}")

# %%
# Where the success rate crosses one half, Delta sits near 1.

print([round(x.delta, 2) for x in result.crossings(0.5)])

out = tempfile.mkdtemp()
write_csv(result, os.path.join(out, "phase.csv"))
write_svg_heatmap(result, os.path.join(out, "phase.svg"))
print("written to", out)
