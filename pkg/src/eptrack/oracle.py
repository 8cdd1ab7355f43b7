"""Brute-force ground truth: dense spectra and a seeded EP locator.

Nothing here uses the equations of motion; the locator works directly on the
eigenvalues of H(lambda, delta).  Near a binary EP the squared gap
``q = (E_a - E_b)^2`` of the coalescing pair is analytic in lambda with a
simple zero, so a damped complex Newton iteration on ``q`` converges
quadratically.  A diagonalizable crossing gives a double zero instead and is
told apart by the self-overlap of the eigenvector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import NotAnEp, NotFound
from .linalg import self_overlap_ratio

EP_EVIDENCE_TOL = 1e-4
GAP_RTOL = 1e-8
MAX_ITER = 200


def eigenvalues(h) -> np.ndarray:
    """Eigenvalues of a dense matrix sorted by real part, then imaginary part."""
    vals = np.linalg.eigvals(np.asarray(h, dtype=complex))
    return vals[np.lexsort((vals.imag, vals.real))]


def negation_mismatch(values) -> float:
    """Distance between a multiset of numbers and its negation (optimal matching)."""
    v = np.asarray(values)
    if v.size == 0:
        return 0.0
    cost = np.abs(v[:, None] + v[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def spectral_diameter(values) -> float:
    v = np.asarray(values)
    if v.size < 2:
        return 0.0
    return float(np.max(np.abs(v[:, None] - v[None, :])))


def closest_pair(values) -> tuple[int, int]:
    v = np.asarray(values)
    d = np.abs(v[:, None] - v[None, :])
    np.fill_diagonal(d, np.inf)
    a, b = np.unravel_index(int(np.argmin(d)), d.shape)
    return (int(a), int(b)) if a < b else (int(b), int(a))


# ---------------------------------------------------------------------------
# spectrum sweeps


@dataclass
class SpectrumSweep:
    """Eigenvalues on a (lambda, delta) grid; ``values[i, k]`` belongs to ``lambdas[i]``, ``deltas[k]``."""

    lambdas: np.ndarray
    deltas: np.ndarray
    values: np.ndarray

    def rows(self):
        """Flat rows ``(lambda, delta, k, re_E, im_E)``."""
        for i, lam in enumerate(self.lambdas):
            for k, d in enumerate(self.deltas):
                for n, e in enumerate(self.values[i, k]):
                    yield float(lam), float(d), n, float(e.real), float(e.imag)

    def lines(self, delta_index: int) -> np.ndarray:
        """Eigenvalues along lambda at one delta, reordered into continuous lines."""
        return pair_lines(self.values[:, delta_index, :])


def sweep_spectrum(family, lambdas, deltas) -> SpectrumSweep:
    """Dense non-symmetric eigensolve at every grid point."""
    lambdas = np.asarray(lambdas, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    out = np.empty((len(lambdas), len(deltas), family.dim), dtype=complex)
    for i, lam in enumerate(lambdas):
        for k, d in enumerate(deltas):
            out[i, k] = eigenvalues(family.eval(lam, d))
    return SpectrumSweep(lambdas, deltas, out)


def pair_lines(values) -> np.ndarray:
    """Reorder each row of ``values`` to continue the previous row by nearest neighbour."""
    values = np.asarray(values)
    out = np.empty_like(values)
    out[0] = values[0]
    for i in range(1, len(values)):
        if i >= 2:
            pred = 2 * out[i - 1] - out[i - 2]
        else:
            pred = out[i - 1]
        cost = np.abs(pred[:, None] - values[i][None, :])
        rows, cols = linear_sum_assignment(cost)
        out[i, rows] = values[i, cols]
    return out


# ---------------------------------------------------------------------------
# EP locator


@dataclass
class EpCandidate:
    lam: complex
    coalescing_energy: complex
    gap: float
    condition: float
    iterations: int = 0
    converged_by: str = ""

    @property
    def is_ep(self) -> bool:
        return self.condition <= EP_EVIDENCE_TOL

    def to_dict(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag],
                "energy": [self.coalescing_energy.real, self.coalescing_energy.imag],
                "gap": self.gap, "condition": self.condition, "iterations": self.iterations}


def _pair_data(family, lam, delta):
    h = np.asarray(family.eval(lam, delta), dtype=complex)
    vals, vecs = np.linalg.eig(h)
    a, b = closest_pair(vals)
    return vals, vecs, a, b


def _q(family, lam, delta):
    vals, _, a, b = _pair_data(family, lam, delta)
    return complex((vals[a] - vals[b]) ** 2)


def locate_ep(family, delta: float, seed: complex, max_iter: int = MAX_ITER,
              gap_rtol: float = GAP_RTOL) -> EpCandidate:
    """Find a binary EP of ``H(., delta)`` near ``seed`` in the complex lambda-plane.

    Raises
    ------
    NotFound
        If the iteration does not converge within ``max_iter`` steps.
    NotAnEp
        If it converges to a degeneracy whose eigenvector is not self-orthogonal
        (an ordinary, diagonalizable crossing).
    """
    lam = complex(seed)
    q = _q(family, lam, delta)
    converged_by = ""
    it = 0
    for it in range(1, max_iter + 1):
        hstep = 1e-6 * max(1.0, abs(lam))
        dq = (_q(family, lam + hstep, delta) - _q(family, lam - hstep, delta)) / (2 * hstep)
        if dq == 0:
            converged_by = "flat"
            break
        dl = -q / dq
        cap = 0.25 * max(1.0, abs(lam))
        if abs(dl) > cap:
            dl *= cap / abs(dl)
        for _ in range(40):
            q_new = _q(family, lam + dl, delta)
            if abs(q_new) <= abs(q) or abs(dl) < 1e-15 * max(1.0, abs(lam)):
                break
            dl *= 0.5
        lam += dl
        q = q_new
        if abs(dl) <= 1e-14 * max(1.0, abs(lam)):
            converged_by = "step"
            break
    vals, vecs, a, b = _pair_data(family, lam, delta)
    gap = float(abs(vals[a] - vals[b]))
    diam = spectral_diameter(vals)
    # round-off floor: an EP splits into sqrt(eps * |H|) under perturbation
    floor = 10.0 * np.sqrt(np.finfo(float).eps * max(1.0, diam))
    cand = EpCandidate(lam, complex(0.5 * (vals[a] + vals[b])), gap,
                       min(self_overlap_ratio(vecs[:, a]), self_overlap_ratio(vecs[:, b])),
                       it, converged_by)
    if not converged_by or gap > max(gap_rtol * diam, floor):
        raise NotFound(f"no coalescence near {complex(seed)} (lambda={lam}, gap={gap:.3e})")
    if not cand.is_ep:
        raise NotAnEp(f"degeneracy at lambda={lam} is diagonalizable "
                      f"(self-overlap {cand.condition:.3e})", candidate=cand)
    return cand


@dataclass
class CheckpointResult:
    delta: float
    lam_record: complex
    candidate: EpCandidate | None
    discrepancy: float
    is_ep: bool
    error: str = ""

    def to_dict(self) -> dict:
        return {"delta": self.delta, "lambda_record": [self.lam_record.real, self.lam_record.imag],
                "discrepancy": self.discrepancy, "is_ep": self.is_ep, "error": self.error,
                "candidate": self.candidate.to_dict() if self.candidate else None}


def validate_trajectory(record, family, checkpoints) -> list[CheckpointResult]:
    """Re-locate the EP at each checkpoint, seeded with the recorded lambda.

    A checkpoint sitting on a Hermitian crossing (where the locator reports a
    diagonalizable degeneracy) still yields a discrepancy; it is flagged with
    ``is_ep=False``.
    """
    if not record.samples:
        raise ValueError("empty trajectory record")
    out = []
    for d in checkpoints:
        lam_rec = record.lambda_at(float(d))
        try:
            cand = locate_ep(family, float(d), lam_rec)
            out.append(CheckpointResult(float(d), lam_rec, cand, abs(cand.lam - lam_rec), True))
        except NotAnEp as exc:
            cand = exc.candidate
            out.append(CheckpointResult(float(d), lam_rec, cand, abs(cand.lam - lam_rec), False,
                                        str(exc)))
    return out
