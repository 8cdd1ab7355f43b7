"""
Propagating EP clusters
=======================

A multiplet of k crossings can turn into one cluster of k EPs sharing lambda,
or split into smaller clusters.  The split and the sign of each EP's imaginary
part are found by short trial propagations; the accepted clusters are then
integrated over delta in [0, 1].
"""

import numpy as np

from eptrack import eom, ics, svg
from eptrack.model import ToyModel, ToyModelSpec

fam = ToyModel(ToyModelSpec(7, 1.0, "even"))
records = []
for mu in ics.detect_crossings(fam):
    res = ics.resolve_multiplet(mu, fam)
    print(f"multiplet lambda_in={mu.lambda_in:.4f} x{mu.multiplicity}: "
          f"{len(res.table)} trials, clusters {[h.member_pairs for h, _ in res.clusters]}")
    for hyp, state in res.clusters:
        rec = eom.propagate(state, fam, 1.0, 20000, check_every=200, meta={"m": hyp.size})
        records.append(rec)
        e = rec.final_state.ep_energies
        print(f"   M={hyp.size}: lambda(1) = {rec.final_state.lam:.6f}, "
              f"E~(1) = {np.round(e, 5)}, max residual {rec.max_residual:.1e}")

# EPs come in complex-conjugate pairs; only one member of each pair is tracked
svg.lambda_trajectories(records, "lambda_plane.svg", title="N=7 even")
svg.energy_trajectories(records, "ep_energies.svg", title="N=7 even")
print("wrote lambda_plane.svg, ep_energies.svg")
