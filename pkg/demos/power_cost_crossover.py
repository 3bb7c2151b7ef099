"""Where does switching servers off stop paying for itself?

Turning idle servers off saves idle power but makes arriving jobs wait
out a setup period.  As the setup rate alpha drops the on-off policy
loses its edge over leaving servers idling; crossover_finder locates
the alpha where the two power costs meet.  With a per-switch price the
picture changes again: the total cost curve turns back up for fast
setups, so the on-off policy wins only on a middle band of alpha.
"""

import numpy as np

from mmcsetup import measures, mmc, qbd, sweeps
from mmcsetup.model import CostParams, QueueParams

c = 20
power = CostParams(c_active=1.0, c_setup=1.0, c_idle=0.6)
priced = CostParams(c_active=1.0, c_setup=1.0, c_idle=0.6, c_switch=1.0)

print("crossover alpha by load (cost_onoff = cost_onidle):")
for rho in (0.3, 0.5, 0.7):
    p = QueueParams(lam=rho * c, mu=1.0, alpha=1.0, c=c)
    res = sweeps.crossover_finder(p, power, method="qbd")
    print(f"  rho={rho:.1f}  alpha* = {res.alpha_cross:.4f}")

print()
p = QueueParams(lam=0.5 * c, mu=1.0, alpha=1.0, c=c)
base = mmc.onidle_cost(p, priced)
print(f"rho=0.5 with switching price 1.0 (always-on cost {base:.3f}):")
print(f"  {'alpha':>10s} {'onoff power':>12s} {'onoff total':>12s}")
for a in np.geomspace(1e-3, 1e3, 13):
    q = QueueParams(lam=p.lam, mu=1.0, alpha=float(a), c=c)
    d = qbd.solve(q, with_g=False).distribution()
    rep = measures.full_report(d, q, priced)
    mark = "  <- beats always-on" if rep.total_cost_onoff < base else ""
    print(f"  {a:10.4f} {rep.cost_onoff:12.4f} {rep.total_cost_onoff:12.4f}{mark}")
