"""
A trajectory with a closed form
===============================

For N=1 the odd sector is 2x2 and its EP sits at lambda = i omega / delta with
coalescing energy 0.  Starting from that EP at delta = 0.5 we integrate the
equations of motion with the first-order scheme and watch the error shrink
like 1/G.
"""

import time

import numpy as np

from eptrack import eom, ics
from eptrack.model import ToyModel, ToyModelSpec

fam = ToyModel(ToyModelSpec(1, 1.0, "odd"))
start = ics.ep_state_from_seed(fam, 0.5, 1.9j)    # refined to exactly 2i
print("start:", start.lam, " E~ =", start.ep_energies[0])
print("lambda'(0.5) =", eom.lambda_dot(start, fam)[0], "(exact -4i)")

for grid in (10**3, 10**4, 10**5, 10**6):
    t = time.perf_counter()
    rec = eom.propagate(start, fam, 1.0, grid, check_every=max(grid // 100, 1))
    err = np.abs(rec.lambdas - 1j / rec.deltas).max()
    print(f"G={grid:>8d}  max |lambda - i/delta| = {err:.2e}  "
          f"max residual {rec.max_residual:.1e}  ({time.perf_counter() - t:.2f} s)")

# the fourth-order integrator reaches round-off with far fewer steps
rec = eom.propagate(start, fam, 1.0, 200, integrator="rk4", check_every=200)
print("rk4, G=200: |lambda(1) - i| =", abs(rec.final_state.lam - 1j))
