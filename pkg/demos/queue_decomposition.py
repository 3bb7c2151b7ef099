"""The conditional queue length splits into two independent pieces.

Conditioned on all c servers being busy, the number of jobs beyond c is
distributed as the sum of the same quantity in a plain M/M/c queue plus
an extra delay term tied to the last setup period.  decomposition()
rebuilds the conditional law by convolving the two parts and reports the
total-variation gap against the directly computed law.
"""

import numpy as np

from mmcsetup import gf, measures
from mmcsetup.model import QueueParams

for alpha in (0.05, 0.5, 5.0, 500.0):
    params = QueueParams(lam=3.5, mu=1.0, alpha=alpha, c=5)
    rep = measures.decomposition(gf.solve(params).distribution(), params)
    res_mean = float(np.arange(len(rep.dist_res)) @ rep.dist_res)
    print(f"alpha={alpha:<7} tv gap {rep.tv_gap:.2e}   "
          f"E[residual part] {res_mean:.4f}   support {rep.support}")

print()
print("residual part fades as setups get fast (mass at zero -> 1):")
for alpha in (0.5, 5.0, 50.0, 500.0):
    params = QueueParams(lam=3.5, mu=1.0, alpha=alpha, c=5)
    rep = measures.decomposition(gf.solve(params).distribution(), params)
    print(f"  alpha={alpha:<6} P(res=0) = {rep.dist_res[0]:.6f}")
