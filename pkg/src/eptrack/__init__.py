"""Transport binary exceptional points of ``H(lambda, delta)`` along delta.

Modules
-------
linalg      c-product algebra and small eigensolvers
model       Hamiltonian families, including the two-angular-momenta toy model
ics         Hermitian crossings and the EP initial basis built from them
eom         equations of motion for an EP cluster and their integration
oracle      dense spectra and an independent EP locator
cli         command-line pipeline (``python -m eptrack``)
"""

from .eom import EpState, ResidualReport, TrajectoryRecord, propagate, rates
from .exceptions import EPTrackError
from .ics import (CrossingMultiplet, assemble_initial_state, build_ep_basis, detect_crossings,
                  ep_state_from_seed, resolve_clusters_and_signs)
from .model import ToyModel, ToyModelSpec, toy_matrix
from .oracle import locate_ep, sweep_spectrum, validate_trajectory

__version__ = "0.1.0"

__all__ = [
    "CrossingMultiplet", "EPTrackError", "EpState", "ResidualReport", "ToyModel",
    "ToyModelSpec", "TrajectoryRecord", "assemble_initial_state", "build_ep_basis",
    "detect_crossings", "ep_state_from_seed", "locate_ep", "propagate", "rates",
    "resolve_clusters_and_signs", "sweep_spectrum", "toy_matrix", "validate_trajectory",
]
