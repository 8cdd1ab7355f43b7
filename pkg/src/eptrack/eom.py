"""Equations of motion that transport a cluster of binary EPs along delta.

The state at one value of the switching parameter holds the EP position
``lam``, the M coalescing energies with their self-orthogonal eigenvectors
``c~`` and complement vectors ``b~`` (linked by ``(H - E~) b~ = f c~``), and the
N - 2M ordinary eigenpairs.  :func:`rates` returns the exact delta-derivative
of every entity; :func:`propagate` integrates them with a fixed step and
monitors the eigen-, orthonormality- and closure-relations as it goes.

Row convention: vectors are stored as rows of 2-D arrays, so ``X @ H`` applies
the (symmetric) Hamiltonian to every basis vector at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from .exceptions import EPTrackError, NearCollision, SingularDenominator, ToleranceBreach
from .linalg import c_normalize, diag_2x2

DEFAULT_TOL = 5e-4
DEFAULT_GAP_RTOL = 1e-8
DENOMINATOR_RTOL = 1e-12
# Couplings below this (times max|V|) across an exactly degenerate ordinary
# pair are treated as zero; larger ones signal a genuine collision.
DECOUPLED_RTOL = 1e-10


@dataclass
class EpState:
    """The seven entities describing one EP cluster at a given ``delta``."""

    delta: float
    lam: complex
    ep_energies: np.ndarray
    ep_vectors: np.ndarray
    complement_vectors: np.ndarray
    f_coeffs: np.ndarray
    ordinary_energies: np.ndarray
    ordinary_vectors: np.ndarray

    def __post_init__(self):
        self.lam = complex(self.lam)
        self.delta = float(self.delta)
        n = None
        for name in ("ep_energies", "f_coeffs", "ordinary_energies"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=complex).reshape(-1))
        for name in ("ep_vectors", "complement_vectors", "ordinary_vectors"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            if arr.ndim == 1:
                arr = arr.reshape(0 if arr.size == 0 else 1, -1)
            if arr.size and n is None:
                n = arr.shape[1]
            setattr(self, name, arr)
        n = n or 0
        for name in ("ep_vectors", "complement_vectors", "ordinary_vectors"):
            arr = getattr(self, name)
            if arr.size == 0:
                setattr(self, name, np.zeros((0, n), dtype=complex))

    @property
    def m(self) -> int:
        return len(self.ep_energies)

    @property
    def n(self) -> int:
        return self.ep_vectors.shape[1]

    @property
    def layout(self) -> "StateLayout":
        return StateLayout(self.m, self.n)

    def basis(self) -> np.ndarray:
        """Rows ``[c~_1..c~_M, b~_1..b~_M, c_1..c_{N-2M}]``."""
        return np.vstack([self.ep_vectors, self.complement_vectors, self.ordinary_vectors])

    def pack(self) -> np.ndarray:
        return self.layout.pack(self)

    def copy(self) -> "EpState":
        return self.layout.unpack(self.delta, self.pack())

    def conjugate(self) -> "EpState":
        """Entrywise complex conjugate (the mirror trajectory lambda*)."""
        return self.layout.unpack(self.delta, self.pack().conj())


@dataclass(frozen=True)
class StateLayout:
    """Fixed packing of an :class:`EpState` into one flat complex vector.

    Order: ``lam, E~ (M), E (N-2M), f (M), c~ (M*N), b~ (M*N), c (J*N)``.
    """

    m: int
    n: int

    @property
    def j(self) -> int:
        return self.n - 2 * self.m

    @property
    def size(self) -> int:
        return 1 + self.m + self.j + self.m + self.n * self.n

    def slices(self):
        m, j, n = self.m, self.j, self.n
        o = 1
        s_et = slice(o, o + m); o += m
        s_e = slice(o, o + j); o += j
        s_f = slice(o, o + m); o += m
        s_x = slice(o, o + n * n)
        return s_et, s_e, s_f, s_x

    def pack(self, s: EpState) -> np.ndarray:
        y = np.empty(self.size, dtype=complex)
        s_et, s_e, s_f, s_x = self.slices()
        y[0] = s.lam
        y[s_et] = s.ep_energies
        y[s_e] = s.ordinary_energies
        y[s_f] = s.f_coeffs
        y[s_x] = s.basis().reshape(-1)
        return y

    def unpack(self, delta: float, y: np.ndarray) -> EpState:
        s_et, s_e, s_f, s_x = self.slices()
        x = y[s_x].reshape(self.n, self.n)
        m = self.m
        return EpState(delta=delta, lam=y[0], ep_energies=y[s_et].copy(),
                       ep_vectors=x[:m].copy(), complement_vectors=x[m:2 * m].copy(),
                       f_coeffs=y[s_f].copy(), ordinary_energies=y[s_e].copy(),
                       ordinary_vectors=x[2 * m:].copy())


@dataclass
class EpRates:
    """delta-derivatives of every entity of an :class:`EpState`."""

    lambda_dot: complex
    ep_energy_rates: np.ndarray
    f_rates: np.ndarray
    ordinary_energy_rates: np.ndarray
    ep_vector_rates: np.ndarray
    complement_vector_rates: np.ndarray
    ordinary_vector_rates: np.ndarray
    lambda_dot_members: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def pack(self, layout: StateLayout) -> np.ndarray:
        return layout.pack(EpState(0.0, self.lambda_dot, self.ep_energy_rates,
                                   self.ep_vector_rates, self.complement_vector_rates,
                                   self.f_rates, self.ordinary_energy_rates,
                                   self.ordinary_vector_rates))


@dataclass
class ResidualReport:
    """Worst violations of the relations an EP state must satisfy."""

    max_eigen_residual: float
    max_orthonormality_residual: float
    max_closure_residual: float
    lambda_dot_spread: float

    @property
    def max_residual(self) -> float:
        return max(self.max_eigen_residual, self.max_orthonormality_residual,
                   self.max_closure_residual)

    def passed(self, tol: float) -> bool:
        vals = (self.max_residual, self.lambda_dot_spread)
        return all(math.isfinite(v) for v in vals) and max(vals) <= tol

    def as_dict(self) -> dict:
        return {"eigen": self.max_eigen_residual,
                "orthonormality": self.max_orthonormality_residual,
                "closure": self.max_closure_residual,
                "lambda_dot_spread": self.lambda_dot_spread}


# ---------------------------------------------------------------------------
# right-hand side


def _lambda_dot_members(c, hl, hd):
    den = np.sum((c @ hl) * c, axis=1)
    num = np.sum((c @ hd) * c, axis=1)
    scale = float(np.max(np.abs(hl))) if hl.size else 0.0
    if np.any(np.abs(den) < DENOMINATOR_RTOL * scale) or scale == 0.0:
        raise SingularDenominator(
            f"(c~|dH/dlambda|c~) = {den.tolist()} vanishes (scale {scale:.3e})")
    return -num / den


def _spread(members) -> float:
    if len(members) < 2:
        return 0.0
    mean = np.mean(members)
    return float(np.max(np.abs(members - mean)) / max(abs(mean), np.finfo(float).tiny))


def effective_perturbation(state: EpState, family, lambda_dot=None) -> np.ndarray:
    """``V = dH/dlambda * lambda_dot + dH/ddelta`` at the state's (lam, delta)."""
    hl = np.asarray(family.d_lambda(state.lam, state.delta))
    hd = np.asarray(family.d_delta(state.lam, state.delta))
    if lambda_dot is None:
        lambda_dot = np.mean(_lambda_dot_members(state.ep_vectors, hl, hd))
    return hl * lambda_dot + hd


def lambda_dot(state: EpState, family, m: int | None = None):
    """EP velocity ``-(c~|dH/ddelta|c~) / (c~|dH/dlambda|c~)``.

    With ``m`` given, returns the value computed from member ``m`` only.
    Otherwise returns ``(mean, spread)`` over all members, where ``spread``
    is the maximal relative deviation from the mean.
    """
    hl = np.asarray(family.d_lambda(state.lam, state.delta))
    hd = np.asarray(family.d_delta(state.lam, state.delta))
    members = _lambda_dot_members(state.ep_vectors, hl, hd)
    if m is not None:
        return complex(members[m])
    return complex(np.mean(members)), _spread(members)


def _inverse_gaps(d, thr, label, delta, allow_zero=None):
    """Elementwise 1/d off the diagonal with collision detection.

    ``allow_zero`` (same shape, bool) marks entries that may be exactly
    degenerate because their coupling vanishes; those get inverse 0.
    """
    inv = np.zeros_like(d)
    n = d.shape[0] if d.ndim else 0
    mask = np.abs(d) < thr
    if d.shape[0] == d.shape[1] and label[0] == label[1]:
        mask &= ~np.eye(n, dtype=bool)
        off = ~np.eye(n, dtype=bool)
    else:
        off = np.ones(d.shape, dtype=bool)
    if np.any(mask):
        bad = mask if allow_zero is None else mask & ~allow_zero
        if np.any(bad):
            a, b = map(int, np.argwhere(bad)[0])
            raise NearCollision(
                f"energies {label[0]}[{a}] and {label[1]}[{b}] collide: gap {abs(d[a, b]):.3e} < {thr:.3e}",
                delta=delta, pair=(label[0], a, label[1], b))
    ok = off & ~mask
    inv[ok] = 1.0 / d[ok]
    return inv


def _gap_threshold(et, e, gap_rtol):
    en = np.concatenate([et, e])
    if en.size < 2:
        return 0.0
    return gap_rtol * math.hypot(float(np.ptp(en.real)), float(np.ptp(en.imag)))


def _rates_core(family, delta, lam, et, f, e, x, m, gap_rtol):
    """Return ``(lambda_dot, members, et_dot, e_dot, f_dot, x_dot)``."""
    n = x.shape[0]
    j = n - 2 * m
    hl = np.asarray(family.d_lambda(lam, delta))
    hd = np.asarray(family.d_delta(lam, delta))
    c = x[:m]
    members = _lambda_dot_members(c, hl, hd)
    ld = complex(np.mean(members))
    v = hl * ld + hd
    w = x @ v @ x.T

    cs, bs, os_ = slice(0, m), slice(m, 2 * m), slice(2 * m, n)
    wcc, wcb, wbc, wbb = w[cs, cs], w[cs, bs], w[bs, cs], w[bs, bs]
    wco, wbo, woo = w[cs, os_], w[bs, os_], w[os_, os_]

    thr = _gap_threshold(et, e, gap_rtol)
    vscale = float(np.max(np.abs(v))) if v.size else 0.0
    # 1/(E~_m - E~_m'), 1/(E~_m - E_j), 1/(E_j - E_j')
    i_tt = _inverse_gaps(et[:, None] - et[None, :], thr, ("ep", "ep"), delta)
    i_to = _inverse_gaps(et[:, None] - e[None, :], thr, ("ep", "ord"), delta)
    i_oo = _inverse_gaps(e[:, None] - e[None, :], thr, ("ord", "ord"), delta,
                         allow_zero=np.abs(woo) <= DECOUPLED_RTOL * max(vscale, 1.0))

    fc = f[:, None]   # f_m   (row index)
    fr = f[None, :]   # f_m'  (column index)
    i_tt2 = i_tt * i_tt
    i_to2 = i_to * i_to

    k = np.zeros((n, n), dtype=complex)
    # d c~_m: expansion over c~_m', b~_m', c_j
    k[cs, cs] = wbc.T * i_tt + fr * wcc.T * i_tt2
    k[cs, bs] = wcc.T * i_tt
    k[cs, os_] = wco * i_to
    # d b~_m
    k[bs, cs] = (wbb.T * i_tt + fr * wcb.T * i_tt2 - fc * wbc.T * i_tt2
                 - 2.0 * fc * fr * wcc.T * i_tt2 * i_tt)
    k[bs, bs] = wcb.T * i_tt - fc * wcc.T * i_tt2
    k[bs, os_] = wbo * i_to - fc * wco * i_to2
    # d c_j; note 1/(E_j - E~_m) = -i_to.T
    k[os_, os_] = woo.T * i_oo
    k[os_, cs] = -wbo.T * i_to.T + fr * wco.T * i_to2.T
    k[os_, bs] = -wco.T * i_to.T

    et_dot = np.diagonal(wbc).copy()
    e_dot = np.diagonal(woo).copy()
    f_dot = np.diagonal(wbb).copy()
    x_dot = k @ x
    if j == 0:
        e_dot = np.zeros(0, dtype=complex)
    return ld, members, et_dot, e_dot, f_dot, x_dot


def rates(state: EpState, family, gap_rtol: float = DEFAULT_GAP_RTOL) -> EpRates:
    """All seven groups of delta-derivatives at ``state``.

    Raises
    ------
    SingularDenominator
        If the lambda-velocity denominator vanishes.
    NearCollision
        If two energies entering a denominator are closer than
        ``gap_rtol`` times the spectral diameter.
    """
    m = state.m
    ld, members, et_dot, e_dot, f_dot, x_dot = _rates_core(
        family, state.delta, state.lam, state.ep_energies, state.f_coeffs,
        state.ordinary_energies, state.basis(), m, gap_rtol)
    return EpRates(lambda_dot=ld, ep_energy_rates=et_dot, f_rates=f_dot,
                   ordinary_energy_rates=e_dot, ep_vector_rates=x_dot[:m],
                   complement_vector_rates=x_dot[m:2 * m],
                   ordinary_vector_rates=x_dot[2 * m:], lambda_dot_members=members)


_COLLISION_LABELS = {_kernel.COLLISION_EP_EP: ("ep", "ep"),
                     _kernel.COLLISION_EP_ORD: ("ep", "ord"),
                     _kernel.COLLISION_ORD_ORD: ("ord", "ord")}


def _raise_kernel_status(status, info, delta):
    a, b, gap = int(info[0].real), int(info[1].real), float(info[2].real)
    if status == _kernel.SINGULAR:
        raise SingularDenominator(
            f"(c~|dH/dlambda|c~) of member {a} vanishes ({gap:.3e}) at delta={delta:.9g}")
    la, lb = _COLLISION_LABELS[status]
    raise NearCollision(f"energies {la}[{a}] and {lb}[{b}] collide: gap {gap:.3e}",
                        delta=delta, pair=(la, a, lb, b))


def make_rhs(family, layout: StateLayout, gap_rtol: float = DEFAULT_GAP_RTOL,
             compiled: bool | None = None):
    """Flat first-order system ``y' = F(delta, y)`` in the :class:`StateLayout` packing.

    ``compiled`` selects the numba kernel (default: whenever numba is
    available); the numpy path computes the same thing and serves as a
    cross-check.
    """
    m, n = layout.m, layout.n
    s_et, s_e, s_f, s_x = layout.slices()
    if compiled is None:
        compiled = _kernel.numba is not None

    if compiled:
        xdot = np.empty((n, n), dtype=complex)
        scal = np.empty(1 + m + layout.j + m, dtype=complex)
        info = np.zeros(3, dtype=complex)
        head = s_x.start

        def rhs(delta, y):
            hl = np.ascontiguousarray(family.d_lambda(y[0], delta), dtype=complex)
            hd = np.ascontiguousarray(family.d_delta(y[0], delta), dtype=complex)
            x = y[s_x].reshape(n, n)
            status = _kernel.kernel(hl, hd, y[s_et], y[s_f], y[s_e], x, m, gap_rtol,
                                    DENOMINATOR_RTOL, DECOUPLED_RTOL, xdot, scal, info)
            if status:
                _raise_kernel_status(status, info, delta)
            out = np.empty_like(y)
            out[:head] = scal
            out[head:] = xdot.reshape(-1)
            return out

        return rhs

    def rhs(delta, y):
        x = y[s_x].reshape(n, n)
        ld, _, et_dot, e_dot, f_dot, x_dot = _rates_core(
            family, delta, y[0], y[s_et], y[s_f], y[s_e], x, m, gap_rtol)
        out = np.empty_like(y)
        out[0] = ld
        out[s_et] = et_dot
        out[s_e] = e_dot
        out[s_f] = f_dot
        out[s_x] = x_dot.reshape(-1)
        return out

    return rhs


def gauge_violations(state: EpState, r: EpRates) -> dict:
    """Overlaps fixed to zero by construction: (c~|c~'), (b~|c~'), (c~|b~'), (b~|b~'), (c_j|c_j')."""
    def diag(a, b):
        return float(np.max(np.abs(np.sum(a * b, axis=1)), initial=0.0))

    return {
        "c_cdot": diag(state.ep_vectors, r.ep_vector_rates),
        "b_cdot": diag(state.complement_vectors, r.ep_vector_rates),
        "c_bdot": diag(state.ep_vectors, r.complement_vector_rates),
        "b_bdot": diag(state.complement_vectors, r.complement_vector_rates),
        "cj_cjdot": diag(state.ordinary_vectors, r.ordinary_vector_rates),
    }


# ---------------------------------------------------------------------------
# consistency


def _metric(m: int, n: int) -> np.ndarray:
    """Target Gram matrix of the basis rows under the c-product."""
    g = np.zeros((n, n))
    g[:m, m:2 * m] = np.eye(m)
    g[m:2 * m, :m] = np.eye(m)
    g[2 * m:, 2 * m:] = np.eye(n - 2 * m)
    return g


def check_consistency(state: EpState, family) -> ResidualReport:
    """Max-norm residuals of the eigen-, orthonormality and closure relations."""
    h = np.asarray(family.eval(state.lam, state.delta))
    c, b, o = state.ep_vectors, state.complement_vectors, state.ordinary_vectors
    et, f, e = state.ep_energies, state.f_coeffs, state.ordinary_energies
    res = [np.abs(c @ h - et[:, None] * c),
           np.abs(b @ h - et[:, None] * b - f[:, None] * c),
           np.abs(o @ h - e[:, None] * o)]
    eig = max(float(np.max(r, initial=0.0)) for r in res)
    x = state.basis()
    g = _metric(state.m, state.n)
    ortho = float(np.max(np.abs(x @ x.T - g), initial=0.0))
    clos = float(np.max(np.abs(x.T @ g @ x - np.eye(state.n)), initial=0.0))
    try:
        hl = np.asarray(family.d_lambda(state.lam, state.delta))
        hd = np.asarray(family.d_delta(state.lam, state.delta))
        spread = _spread(_lambda_dot_members(c, hl, hd))
    except SingularDenominator:
        spread = math.inf
    return ResidualReport(eig, ortho, clos, spread)


# ---------------------------------------------------------------------------
# integration


def _euler(rhs, delta, y, h):
    return y + h * rhs(delta, y)


def _rk4(rhs, delta, y, h):
    k1 = rhs(delta, y)
    k2 = rhs(delta + 0.5 * h, y + 0.5 * h * k1)
    k3 = rhs(delta + 0.5 * h, y + 0.5 * h * k2)
    k4 = rhs(delta + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


INTEGRATORS = {"euler": _euler, "rk4": _rk4}


def step(state: EpState, family, h: float, integrator: str = "euler",
         gap_rtol: float = DEFAULT_GAP_RTOL) -> EpState:
    """One explicit step ``delta -> delta + h``; no re-orthogonalization."""
    if h == 0:
        return state.copy()
    layout = state.layout
    rhs = make_rhs(family, layout, gap_rtol)
    y = INTEGRATORS[integrator](rhs, state.delta, state.pack(), h)
    return layout.unpack(state.delta + h, y)


@dataclass
class Sample:
    delta: float
    lam: complex
    ep_energies: np.ndarray
    ordinary_energies: np.ndarray
    report: ResidualReport


@dataclass
class TrajectoryRecord:
    """Samples of one cluster's propagation plus its termination status."""

    samples: list[Sample] = field(default_factory=list)
    status: str = "completed"
    halt_reason: str = ""
    halt_delta: float | None = None
    meta: dict = field(default_factory=dict)
    final_state: EpState | None = None

    @property
    def deltas(self) -> np.ndarray:
        return np.array([s.delta for s in self.samples])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.lam for s in self.samples])

    @property
    def ep_energies(self) -> np.ndarray:
        return np.array([s.ep_energies for s in self.samples])

    @property
    def max_residual(self) -> float:
        return max((s.report.max_residual for s in self.samples), default=0.0)

    def lambda_at(self, delta: float) -> complex:
        """Linear interpolation of the recorded lambda(delta)."""
        d = self.deltas
        lam = self.lambdas
        order = np.argsort(d)
        d, lam = d[order], lam[order]
        return complex(np.interp(delta, d, lam.real) + 1j * np.interp(delta, d, lam.imag))


def _sample(state: EpState, report: ResidualReport) -> Sample:
    return Sample(state.delta, state.lam, state.ep_energies.copy(),
                  state.ordinary_energies.copy(), report)


def propagate(initial: EpState, family, delta_end: float, grid: int, tol: float = DEFAULT_TOL,
              check_every: int = 1000, sample_every: int | None = None,
              integrator: str = "euler", gap_rtol: float = DEFAULT_GAP_RTOL,
              raise_on_halt: bool = True, meta: dict | None = None,
              on_check=None) -> TrajectoryRecord:
    """Integrate from ``initial.delta`` to ``delta_end`` in ``grid`` equal steps.

    Consistency is evaluated every ``check_every`` steps and after the last
    one; a sample is recorded every ``sample_every`` steps (default: at every
    check) provided its check passed.  ``on_check(state, report)`` is called at
    each check, if given.

    On a tolerance breach or energy collision the record is closed with
    ``status="halted"``; the matching exception (carrying the record as
    ``exc.record``) is raised unless ``raise_on_halt`` is false.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    sample_every = sample_every or check_every
    record = TrajectoryRecord(meta=dict(meta or {}))
    layout = initial.layout
    d0 = initial.delta
    h = (delta_end - d0) / grid
    rhs = make_rhs(family, layout, gap_rtol)
    advance = INTEGRATORS[integrator]

    report = check_consistency(initial, family)
    if on_check is not None:
        on_check(initial, report)
    if not report.passed(tol):
        exc = ToleranceBreach(f"initial state fails tolerance {tol:g}: {report.as_dict()}",
                              delta=d0, report=report, record=record)
        return _halt(record, exc, initial, raise_on_halt)
    record.samples.append(_sample(initial, report))
    if h == 0.0:
        record.final_state = initial.copy()
        return record

    y = initial.pack()
    delta = d0
    last_state = initial
    for k in range(1, grid + 1):
        tries = 0
        while True:
            try:
                y_new = advance(rhs, delta, y, h)
                break
            except NearCollision as exc:
                # an exactly degenerate ordinary pair may be rotated freely;
                # pick the basis the current perturbation does not couple
                if exc.pair and exc.pair[0] == exc.pair[2] == "ord" and tries < layout.j:
                    tries += 1
                    try:
                        fixed = rectify_ordinary_pair(layout.unpack(delta, y), family,
                                                      exc.pair[1], exc.pair[3])
                    except EPTrackError:
                        pass
                    else:
                        record.meta.setdefault("rectified", []).append(
                            [float(delta), int(exc.pair[1]), int(exc.pair[3])])
                        y = fixed.pack()
                        continue
                exc.delta = delta
                exc.record = record
                return _halt(record, exc, last_state, raise_on_halt)
            except SingularDenominator as exc:
                exc.delta = delta
                exc.record = record
                return _halt(record, exc, last_state, raise_on_halt)
        y = y_new
        delta = d0 + k * h if k < grid else float(delta_end)
        if not np.all(np.isfinite(y)):
            exc = ToleranceBreach(f"non-finite state at delta={delta:.9g}", delta=delta,
                                  record=record)
            return _halt(record, exc, last_state, raise_on_halt)
        do_check = k % check_every == 0 or k == grid
        do_sample = k % sample_every == 0 or k == grid
        if do_check or do_sample:
            state = layout.unpack(delta, y)
            report = check_consistency(state, family)
            if on_check is not None:
                on_check(state, report)
            if not report.passed(tol):
                exc = ToleranceBreach(
                    f"tolerance {tol:g} exceeded at delta={delta:.9g}: {report.as_dict()}",
                    delta=delta, report=report, record=record)
                return _halt(record, exc, last_state, raise_on_halt)
            last_state = state
            if do_sample:
                record.samples.append(_sample(state, report))
    record.final_state = layout.unpack(delta, y)
    return record


def _halt(record, exc, state, raise_on_halt):
    record.status = "halted"
    record.halt_reason = f"{type(exc).__name__}: {exc}"
    record.halt_delta = getattr(exc, "delta", None)
    record.final_state = state.copy() if state is not None else None
    if raise_on_halt:
        raise exc
    return record


def rectify_ordinary_pair(state: EpState, family, a: int, b: int) -> EpState:
    """Rotate ordinary vectors ``a, b`` of a degenerate pair so the perturbation is diagonal.

    Within an exactly degenerate eigenspace the choice of basis is free; the
    one that diagonalizes ``V`` is the only one for which the vector rates stay
    finite.  Energies are left untouched.

    Raises
    ------
    Defective
        If ``V`` restricted to the pair is a Jordan block.
    """
    out = state.copy()
    v = effective_perturbation(state, family)
    rows = state.ordinary_vectors[[a, b]]
    proj = rows @ v @ rows.T
    _, w = diag_2x2(proj)
    out.ordinary_vectors[a] = c_normalize(w[0] @ rows)
    out.ordinary_vectors[b] = c_normalize(w[1] @ rows)
    return out


def with_delta(state: EpState, delta: float) -> EpState:
    return replace(state, delta=float(delta))
