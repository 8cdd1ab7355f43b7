"""
Where exceptional points are born
=================================

Every EP trajectory starts at a real crossing of the delta = 0 spectrum.
Crossings at the same lambda are grouped into multiplets; for N=19 the even
sector has twofold and fourfold multiplets besides the onefold ones.
"""

import numpy as np

from eptrack import ics, svg
from eptrack.model import ToyModel, ToyModelSpec

for parity in ("odd", "even"):
    fam = ToyModel(ToyModelSpec(19, 1.0, parity))
    multiplets = ics.detect_crossings(fam)
    counts = {}
    for mu in multiplets:
        counts[mu.multiplicity] = counts.get(mu.multiplicity, 0) + 1
    print(f"{parity}: {len(multiplets)} multiplets in (0, 1), by multiplicity {counts}")

fam = ToyModel(ToyModelSpec(19, 1.0, "even"))
multiplets = ics.detect_crossings(fam)
for mu in multiplets:
    if mu.multiplicity > 1:
        energies = ", ".join(f"{p.energy:+.3f}" for p in mu.pairs)
        print(f"  lambda = {mu.lambda_in:.6f}  x{mu.multiplicity}  E = {energies}")

lam = np.linspace(0.0, 1.0, 401)
lines = np.array([np.linalg.eigvalsh(fam.eval(x, 0.0).real) for x in lam])
svg.crossing_diagram(lam, lines, multiplets, "crossings_even.svg", title="N=19 even, delta=0")
print("wrote crossings_even.svg")
