"""
Checking trajectories against direct root finding
=================================================

The propagated lambda(delta) is verified independently: at a few values of
delta a damped Newton iteration on the eigenvalue discriminant is seeded at the
recorded lambda.  A genuine EP has a self-orthogonal eigenvector, so the
self-overlap measure is reported as evidence.
"""

from eptrack import eom, ics, oracle
from eptrack.exceptions import NotAnEp
from eptrack.model import ToyModel, ToyModelSpec

fam = ToyModel(ToyModelSpec(7, 1.0, "odd"))
mu = ics.detect_crossings(fam)[2]
(hyp, state), = ics.resolve_clusters_and_signs(mu, fam)
rec = eom.propagate(state, fam, 1.0, 100000, check_every=1000)

for r in oracle.validate_trajectory(rec, fam, [0.25, 0.5, 0.75, 1.0]):
    c = r.candidate
    print(f"delta={r.delta:.2f}  lambda={c.lam:.8f}  discrepancy {r.discrepancy:.1e}  "
          f"self-overlap {c.condition:.1e}  EP: {r.is_ep}")

# at delta = 0 the same search lands on a diagonalizable crossing and says so
try:
    oracle.locate_ep(fam, 0.0, mu.lambda_in + 1e-3)
except NotAnEp as exc:
    print("delta=0:", exc)
