"""Initial EP states built from level crossings of a real symmetric H(lambda, delta_in).

At ``delta_in`` the Hamiltonian is assumed real symmetric for real ``lambda``.
Each simple binary crossing of two eigenvalue lines is the birthplace of a
binary EP.  Several crossings at the same ``lambda`` form a multiplet; the
multiplet is split into clusters of EPs that share one trajectory and each
member gets a sign factor.  Both choices are made by trial: a hypothesis is
kept only if the EP velocity is the same for all members and a short probe
propagation stays consistent.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from . import eom
from .exceptions import (ConstructionError, Defective, EPTrackError, ResolutionFailed,
                         SingularDenominator, UnsupportedDegeneracy)
from .linalg import (c_normalize, diag_2x2, hermitian_eigensolve, principal_sqrt,
                     rotate_degenerate)

log = logging.getLogger(__name__)

CROSSING_TOL = 1e-10
GROUP_TOL = 1e-8
SLOPE_TOL = 1e-6
SPREAD_TOL = 1e-6
IC_TOL = 1e-10
MAX_MULTIPLICITY = 8


@dataclass(frozen=True)
class CrossingPair:
    """Two eigenvalue lines ``a`` and ``b`` meeting at ``energy``."""

    a: int
    b: int
    energy: float
    slope_a: float
    slope_b: float


@dataclass
class CrossingMultiplet:
    lambda_in: float
    delta_in: float
    pairs: list[CrossingPair]

    @property
    def multiplicity(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> dict:
        return {"lambda_in": self.lambda_in, "delta_in": self.delta_in,
                "multiplicity": self.multiplicity,
                "pairs": [{"a": p.a, "b": p.b, "energy": p.energy,
                           "slope_a": p.slope_a, "slope_b": p.slope_b} for p in self.pairs]}

    @classmethod
    def from_dict(cls, d: dict) -> "CrossingMultiplet":
        return cls(float(d["lambda_in"]), float(d["delta_in"]),
                   [CrossingPair(int(p["a"]), int(p["b"]), float(p["energy"]),
                                 float(p["slope_a"]), float(p["slope_b"])) for p in d["pairs"]])


@dataclass
class ClusterHypothesis:
    """Which pairs of a multiplet move together, and with which sign factors."""

    member_pairs: tuple[int, ...]
    signs: tuple[int, ...]
    lambda_dot: complex = 0j
    alternatives: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.member_pairs)

    def to_dict(self) -> dict:
        return {"member_pairs": list(self.member_pairs), "signs": list(self.signs),
                "lambda_dot": [self.lambda_dot.real, self.lambda_dot.imag],
                "passing_signs": [list(s) for s in self.alternatives]}


# ---------------------------------------------------------------------------
# crossing detection


def _levels(family, lam, delta):
    """Eigenvalues, row eigenvectors and slopes of the real matrix at (lam, delta)."""
    h = family.eval(lam, delta)
    values, vecs = hermitian_eigensolve(h)
    scale = max(1.0, float(np.max(np.abs(values))))
    return rotate_degenerate(values, vecs, family.d_lambda(lam, delta), 1e-9 * scale)


def _match(e_prev, s_prev, e_new, s_new, dlam):
    """Permutation ``perm`` so that new level ``perm[k]`` continues line ``k``."""
    pred = e_prev + s_prev * dlam
    cost = np.abs(pred[:, None] - e_new[None, :]) + abs(dlam) * np.abs(s_prev[:, None] - s_new[None, :])
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(len(e_prev), dtype=int)
    perm[rows] = cols
    return perm


def _scan_lines(family, delta_in, grid):
    e0, _, s0 = _levels(family, grid[0], delta_in)
    lines_e = np.empty((len(grid), len(e0)))
    lines_s = np.empty_like(lines_e)
    lines_e[0], lines_s[0] = e0, s0
    for i in range(1, len(grid)):
        e, _, s = _levels(family, grid[i], delta_in)
        perm = _match(lines_e[i - 1], lines_s[i - 1], e, s, grid[i] - grid[i - 1])
        lines_e[i], lines_s[i] = e[perm], s[perm]
    return lines_e, lines_s


def _refine(family, delta_in, lam_lo, e_lo, s_lo, lam_hi, k, l):
    """Root of the signed gap between lines k and l inside [lam_lo, lam_hi]."""
    def line_values(lam):
        e, _, s = _levels(family, lam, delta_in)
        perm = _match(e_lo, s_lo, e, s, lam - lam_lo)
        return e[perm], s[perm]

    def gap(lam):
        e, _ = line_values(lam)
        return e[k] - e[l]

    root = brentq(gap, lam_lo, lam_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    e, s = line_values(root)
    root = _polish(family, delta_in, root, 0.5 * (e[k] + e[l]))
    e, s = line_values(root)
    return root, e, s


def _polish(family, delta_in, lam, energy, iters=3):
    """Sharpen a crossing location inside the two-level subspace nearest ``energy``.

    Close to the root the ordered gap is dominated by round-off, so bisection
    stalls around 1e-9.  Within the near-degenerate pair, the line vectors
    diagonalize dH/dlambda; equating the two line energies then gives the
    remaining offset in closed form.
    """
    for _ in range(iters):
        h = np.asarray(family.eval(lam, delta_in)).real
        hl = np.asarray(family.d_lambda(lam, delta_in)).real
        values, vecs = hermitian_eigensolve(h)
        pair = np.argsort(np.abs(values - energy))[:2]
        p = vecs[pair]
        bl, w = np.linalg.eigh(p @ hl @ p.T)
        if abs(bl[1] - bl[0]) < SLOPE_TOL:
            break
        q = w.T @ p
        a = np.einsum("ij,jk,ik->i", q, h, q)
        dl = (a[0] - a[1]) / (bl[1] - bl[0])
        lam = lam + dl
        if abs(dl) <= 4 * np.finfo(float).eps * max(1.0, abs(lam)):
            break
    return float(lam)


def detect_crossings(family, delta_in: float = 0.0, lambda_range=(0.0, 1.0),
                     scan_points: int = 2001) -> list[CrossingMultiplet]:
    """Find simple binary level crossings of ``H(lambda, delta_in)`` for real lambda.

    Crossings exactly at either end of ``lambda_range`` are ignored (the range
    is treated as open).  Crossings closer than ``GROUP_TOL`` in lambda are
    merged into one multiplet.

    Raises
    ------
    UnsupportedDegeneracy
        If three or more lines meet at one point.
    """
    lo, hi = map(float, lambda_range)
    grid = np.linspace(lo, hi, int(scan_points))
    lines_e, lines_s = _scan_lines(family, delta_in, grid)
    n_lines = lines_e.shape[1]
    edge = GROUP_TOL * max(1.0, abs(hi - lo))
    found = []
    for k, l in itertools.combinations(range(n_lines), 2):
        g = lines_e[:, k] - lines_e[:, l]
        zero = np.abs(g) <= CROSSING_TOL
        for i in np.flatnonzero(zero):
            root = _polish(family, delta_in, grid[i], 0.5 * (lines_e[i, k] + lines_e[i, l]))
            found.append((root, k, l, lines_e[i], lines_s[i]))
        flips = np.flatnonzero((g[:-1] * g[1:] < 0) & ~zero[:-1] & ~zero[1:])
        for i in flips:
            root, e, s = _refine(family, delta_in, grid[i], lines_e[i], lines_s[i],
                                 grid[i + 1], k, l)
            found.append((root, k, l, e, s))

    crossings = []
    for lam, k, l, e, s in found:
        if lam - lo <= edge or hi - lam <= edge:
            continue
        if abs(s[k] - s[l]) < SLOPE_TOL:
            log.warning("lines %d and %d touch at lambda=%.12g with equal slopes; skipped", k, l, lam)
            continue
        crossings.append((lam, k, l, e, s))
    crossings.sort(key=lambda c: c[0])

    multiplets: list[list] = []
    for c in crossings:
        if multiplets and abs(c[0] - multiplets[-1][-1][0]) <= GROUP_TOL:
            multiplets[-1].append(c)
        else:
            multiplets.append([c])
    return [_make_multiplet(group, delta_in) for group in multiplets]


def _make_multiplet(group, delta_in) -> CrossingMultiplet:
    lam_in = float(np.mean([c[0] for c in group]))
    pairs = []
    used: set[int] = set()
    for lam, k, l, e, s in group:
        if k in used or l in used:
            raise UnsupportedDegeneracy(
                f"line {k if k in used else l} takes part in two crossings at lambda={lam_in:.12g}")
        used.update((k, l))
        a, b = (k, l) if k < l else (l, k)
        pairs.append(CrossingPair(a, b, float(0.5 * (e[k] + e[l])), float(s[a]), float(s[b])))
    pairs.sort(key=lambda p: p.energy)
    for p, q in zip(pairs, pairs[1:]):
        if abs(p.energy - q.energy) <= GROUP_TOL * max(1.0, abs(p.energy)):
            raise UnsupportedDegeneracy(
                f"lines {p.a},{p.b},{q.a},{q.b} meet at lambda={lam_in:.12g}, E={p.energy:.12g}")
    return CrossingMultiplet(lam_in, float(delta_in), pairs)


# ---------------------------------------------------------------------------
# basis construction


def build_ep_basis(v1, v2, sigma: int = 1):
    """Self-orthogonal pair ``c~ = (v1 + i s v2)/sqrt2``, ``b~ = (v1 - i s v2)/sqrt2``.

    For real orthonormal ``v1, v2``: ``(c~|c~) = (b~|b~) = 0`` and ``(c~|b~) = 1``.
    """
    if sigma not in (1, -1):
        raise ValueError("sigma must be +1 or -1")
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    r = 1.0 / math.sqrt(2.0)
    return r * (v1 + 1j * sigma * v2), r * (v1 - 1j * sigma * v2)


def rectify_degenerate_ordinary(v1, v2, v):
    """c-orthonormal basis of span{v1, v2} that is not coupled by ``v``.

    ``v1, v2`` are real orthonormal vectors of a doubly degenerate eigenspace
    and ``v`` the effective perturbation.  The 2x2 projection of ``v`` is
    diagonalized; a Jordan block there would mean a further EP is being born
    at this crossing and is reported as :class:`Defective`.
    """
    v1 = np.asarray(v1, dtype=complex)
    v2 = np.asarray(v2, dtype=complex)
    basis = np.vstack([v1, v2])
    proj = basis @ np.asarray(v) @ basis.T
    _, w = diag_2x2(proj)
    c1 = c_normalize(w[0] @ basis)
    c2 = c_normalize(w[1] @ basis)
    return c1, c2


def _canonical_sign(v):
    k = int(np.argmax(np.abs(v)))
    return v if v[k] >= 0 else -v


@dataclass
class _Levels:
    values: np.ndarray
    vectors: np.ndarray
    slopes: np.ndarray
    pair_index: list[tuple[int, int]]   # eigen-indices (line a, line b) per multiplet pair
    free: list[int]                     # non-degenerate levels


def _levels_at_multiplet(multiplet: CrossingMultiplet, family) -> _Levels:
    values, vecs, slopes = _levels(family, multiplet.lambda_in, multiplet.delta_in)
    vecs = np.array([_canonical_sign(v) for v in vecs])
    taken: set[int] = set()
    pair_index = []
    for p in multiplet.pairs:
        near = [int(i) for i in np.argsort(np.abs(values - p.energy)) if int(i) not in taken][:2]
        if len(near) < 2 or max(abs(values[i] - p.energy) for i in near) > 1e-6 * max(1.0, abs(p.energy)):
            raise ConstructionError(f"cannot locate the degenerate pair at E={p.energy:.12g}")
        i, j = near
        # the member whose slope matches line a plays v1
        if abs(slopes[i] - p.slope_a) > abs(slopes[j] - p.slope_a):
            i, j = j, i
        pair_index.append((i, j))
        taken.update((i, j))
    free = [i for i in range(len(values)) if i not in taken]
    return _Levels(values, vecs, slopes, pair_index, free)


def _cluster_lambda_dot(c_rows, family, lam, delta):
    hl = np.asarray(family.d_lambda(lam, delta))
    hd = np.asarray(family.d_delta(lam, delta))
    return eom._lambda_dot_members(np.asarray(c_rows), hl, hd)


def assemble_initial_state(multiplet: CrossingMultiplet, cluster: ClusterHypothesis,
                           family, levels: _Levels | None = None) -> eom.EpState:
    """Full EP state at ``delta_in`` for one cluster of a multiplet.

    Raises
    ------
    ResolutionFailed
        If the members' EP velocities disagree beyond ``SPREAD_TOL``.
    Defective
        If a non-member pair cannot be decoupled (a hidden extra EP).
    ConstructionError
        If the result violates the defining relations by more than ``IC_TOL``.
    """
    lv = levels or _levels_at_multiplet(multiplet, family)
    lam, delta = complex(multiplet.lambda_in), multiplet.delta_in
    cs, bs, ets = [], [], []
    for p_idx, sigma in zip(cluster.member_pairs, cluster.signs):
        i, j = lv.pair_index[p_idx]
        c, b = build_ep_basis(lv.vectors[i], lv.vectors[j], sigma)
        cs.append(c)
        bs.append(b)
        ets.append(0.5 * (lv.values[i] + lv.values[j]))
    members = _cluster_lambda_dot(cs, family, lam, delta)
    spread = eom._spread(members)
    if spread > SPREAD_TOL:
        raise ResolutionFailed(f"lambda_dot differs across members (spread {spread:.3e})")
    ld = complex(np.mean(members))
    cluster.lambda_dot = ld
    v = np.asarray(family.d_lambda(lam, delta)) * ld + np.asarray(family.d_delta(lam, delta))

    ordinary = [(lv.values[i], lv.vectors[i].astype(complex)) for i in lv.free]
    for p_idx, (i, j) in enumerate(lv.pair_index):
        if p_idx in cluster.member_pairs:
            continue
        c1, c2 = rectify_degenerate_ordinary(lv.vectors[i], lv.vectors[j], v)
        e = 0.5 * (lv.values[i] + lv.values[j])
        ordinary += [(e, c1), (e, c2)]
    ordinary.sort(key=lambda t: t[0])
    n = lv.vectors.shape[1]
    state = eom.EpState(
        delta=delta, lam=lam, ep_energies=np.array(ets, dtype=complex),
        ep_vectors=np.array(cs), complement_vectors=np.array(bs),
        f_coeffs=np.zeros(len(cs), dtype=complex),
        ordinary_energies=np.array([e for e, _ in ordinary], dtype=complex),
        ordinary_vectors=np.array([c for _, c in ordinary]).reshape(-1, n))
    report = eom.check_consistency(state, family)
    if report.max_residual > IC_TOL:
        raise ConstructionError(f"initial state residuals too large: {report.as_dict()}")
    return state


# ---------------------------------------------------------------------------
# trial-and-error resolution


def set_partitions(items):
    """All set partitions of ``items``, coarsest (fewest blocks) first."""
    items = list(items)

    def rec(rest):
        if not rest:
            yield []
            return
        first, tail = rest[0], rest[1:]
        for part in rec(tail):
            yield [[first]] + part
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1:]

    parts = [sorted(sorted(b) for b in p) for p in rec(items)]
    parts.sort(key=lambda p: (len(p), p))
    return parts


def sign_assignments(size: int):
    """Sign tuples with the first sign fixed to +1, in lexicographic order (+1 before -1)."""
    for rest in itertools.product((1, -1), repeat=size - 1):
        yield (1,) + rest


def _probe(state, family, h, trial_steps, tol):
    if trial_steps <= 0:
        return
    eom.propagate(state, family, state.delta + h * trial_steps, trial_steps, tol=tol,
                  check_every=1, sample_every=trial_steps)


@dataclass
class Resolution:
    """Outcome of resolving a multiplet: accepted clusters plus the trial log."""

    multiplet: CrossingMultiplet
    clusters: list[tuple[ClusterHypothesis, eom.EpState]]
    table: list[dict]


def resolve_clusters_and_signs(multiplet: CrossingMultiplet, family, trial_steps: int = 100,
                               step: float = 1e-5, tol: float = eom.DEFAULT_TOL,
                               ) -> list[tuple[ClusterHypothesis, eom.EpState]]:
    """Split a multiplet into clusters and choose sign factors by trial.

    ``step`` is the signed probe step size (use a negative value to probe
    towards smaller delta).  Returns ``(hypothesis, initial_state)`` per
    cluster of the first partition whose every block admits a passing sign
    assignment.
    """
    return resolve_multiplet(multiplet, family, trial_steps, step, tol).clusters


def resolve_multiplet(multiplet, family, trial_steps=100, step=1e-5, tol=eom.DEFAULT_TOL):
    if multiplet.multiplicity > MAX_MULTIPLICITY:
        raise ResolutionFailed(
            f"multiplet of {multiplet.multiplicity} crossings exceeds the enumeration limit "
            f"{MAX_MULTIPLICITY}")
    levels = _levels_at_multiplet(multiplet, family)
    table: list[dict] = []
    cache: dict[tuple, tuple | None] = {}

    def try_block(block):
        key = tuple(block)
        if key in cache:
            return cache[key]
        passing = []
        for signs in sign_assignments(len(block)):
            hyp = ClusterHypothesis(tuple(block), signs)
            row = {"members": list(block), "signs": list(signs)}
            try:
                state = assemble_initial_state(multiplet, hyp, family, levels)
                _probe(state, family, step, trial_steps, tol)
            except (EPTrackError, FloatingPointError) as exc:
                row.update(passed=False, reason=f"{type(exc).__name__}: {exc}")
                table.append(row)
                continue
            row.update(passed=True, lambda_dot=[hyp.lambda_dot.real, hyp.lambda_dot.imag])
            table.append(row)
            passing.append((hyp, state))
        if passing:
            best, state = passing[0]
            best.alternatives = [h.signs for h, _ in passing]
            cache[key] = (best, state)
        else:
            cache[key] = None
        return cache[key]

    for partition in set_partitions(range(multiplet.multiplicity)):
        results = []
        for block in partition:
            res = try_block(block)
            if res is None:
                break
            results.append(res)
        else:
            return Resolution(multiplet, results, table)
    raise ResolutionFailed(
        f"no cluster/sign hypothesis passed for multiplet at lambda={multiplet.lambda_in:.12g}",
        table=table)


# ---------------------------------------------------------------------------
# direct start from a known EP


def ep_state_from_seed(family, delta: float, lam: complex, refine: bool = True) -> eom.EpState:
    """Single-EP state (M = 1) at a point where H(lam, delta) has a binary EP.

    With ``refine`` the EP position is first polished by the oracle locator.
    The complement vector is obtained from the Jordan chain
    ``(H - E~) x = c~`` and rescaled so that ``(c~|b~) = 1`` and ``(b~|b~) = 0``.
    """
    from .oracle import closest_pair, locate_ep

    lam = complex(lam)
    if refine:
        lam = locate_ep(family, delta, lam).lam
    h = np.asarray(family.eval(lam, delta), dtype=complex)
    n = h.shape[0]
    values, vecs = np.linalg.eig(h)
    a, b = closest_pair(values)
    e_ep = 0.5 * (values[a] + values[b])
    shifted = h - e_ep * np.eye(n)
    _, _, vh = np.linalg.svd(shifted)
    c = vh[-1].conj()
    x = np.linalg.lstsq(shifted, c, rcond=None)[0]
    cx = complex(c @ x)
    if abs(cx) < 1e-12:
        raise ConstructionError("Jordan chain is degenerate; the seed is not at a binary EP")
    alpha = -complex(x @ x) / (2 * cx)
    mu = 1.0 / cx
    bvec = mu * (x + alpha * c)
    # balance the gauge so that |c~| and |b~| are comparable
    g = principal_sqrt(np.linalg.norm(bvec) / np.linalg.norm(c))
    c, bvec, f = c * g, bvec / g, mu / g ** 2

    others = [k for k in range(n) if k not in (a, b)]
    ords, ens = [], []
    for k in others:
        w = vecs[:, k].astype(complex)
        w = w - complex(w @ bvec) * c - complex(w @ c) * bvec
        ords.append(c_normalize(w))
        ens.append(values[k])
    order = np.argsort(np.real(ens)) if ens else []
    return eom.EpState(delta=delta, lam=lam, ep_energies=[e_ep], ep_vectors=[c],
                       complement_vectors=[bvec], f_coeffs=[f],
                       ordinary_energies=np.array(ens, dtype=complex)[order] if ens else [],
                       ordinary_vectors=np.array(ords)[order] if ords else np.zeros((0, n)))
