"""Parametric Hamiltonian families ``H(lambda, delta)``.

A family is anything exposing ``dim``, ``eval``, ``d_lambda`` and ``d_delta``
(see :class:`HamiltonianFamily`).  The concrete family shipped here is the
two-angular-momenta model

    H(lambda, delta) = omega (I3 + J3)
                       + lambda [I+ J- + I- J+ + delta (I+ J+ + I- J-)]

with I_T = N/2, J_T = 1/2, restricted to one parity sector of I3 + J3.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .exceptions import ContractViolation


@runtime_checkable
class HamiltonianFamily(Protocol):
    """Evaluator contract for a complex symmetric ``H(lambda, delta)``."""

    dim: int

    def eval(self, lam: complex, delta: float) -> np.ndarray: ...

    def d_lambda(self, lam: complex, delta: float) -> np.ndarray: ...

    def d_delta(self, lam: complex, delta: float) -> np.ndarray: ...


class AffineFamily:
    """``H = A + lambda (B + delta C) + delta D`` with constant symmetric matrices.

    Covers the toy model (``D = 0``) and any other family that is affine in
    ``lambda`` and in ``delta`` separately.
    """

    def __init__(self, a, b, c, d=None):
        self.a = np.asarray(a, dtype=complex)
        self.b = np.asarray(b, dtype=complex)
        self.c = np.asarray(c, dtype=complex)
        self.d = np.zeros_like(self.a) if d is None else np.asarray(d, dtype=complex)
        self.dim = self.a.shape[0]
        for name in ("a", "b", "c", "d"):
            m = getattr(self, name)
            if m.shape != (self.dim, self.dim) or not np.array_equal(m, m.T):
                raise ContractViolation(f"matrix {name!r} must be square and symmetric")

    def eval(self, lam, delta):
        return self.a + lam * (self.b + delta * self.c) + delta * self.d

    def d_lambda(self, lam, delta):
        return self.b + delta * self.c

    def d_delta(self, lam, delta):
        return lam * self.c + self.d


# ---------------------------------------------------------------------------
# toy model


PARITIES = ("even", "odd")


@dataclass(frozen=True)
class ToyModelSpec:
    """Parameters of the coupled angular-momenta model.

    ``n_odd`` is N (odd), so I_T = N/2 and J_T = 1/2; ``parity`` selects the
    sector of I3 + J3.  Each sector has dimension N + 1.
    """

    n_odd: int = 19
    omega: float = 1.0
    parity: str = "odd"

    def __post_init__(self):
        if int(self.n_odd) != self.n_odd or self.n_odd < 1 or self.n_odd % 2 == 0:
            raise ContractViolation(f"n_odd must be an odd positive integer, got {self.n_odd!r}")
        if not self.omega > 0:
            raise ContractViolation(f"omega must be positive, got {self.omega!r}")
        if self.parity not in PARITIES:
            raise ContractViolation(f"parity must be 'even' or 'odd', got {self.parity!r}")

    @property
    def dim(self) -> int:
        return self.n_odd + 1

    @classmethod
    def from_dict(cls, d: dict) -> "ToyModelSpec":
        return cls(n_odd=int(d.get("n", d.get("n_odd", 19))),
                   omega=float(d.get("omega", 1.0)),
                   parity=str(d.get("parity", "odd")))

    def to_dict(self) -> dict:
        return {"n": self.n_odd, "omega": self.omega, "parity": self.parity}


def gamma(l2: int, m2: int, sign: int) -> float:
    """Ladder coefficient sqrt(l(l+1) - m(m +/- 1)) with l = l2/2, m = m2/2."""
    # 4 [l(l+1) - m(m+s)] = l2 (l2 + 2) - m2 (m2 + 2 s)
    val = l2 * (l2 + 2) - m2 * (m2 + 2 * sign)
    return 0.5 * np.sqrt(max(val, 0))


def sector_basis(spec: ToyModelSpec) -> list[tuple[int, int]]:
    """Basis states ``(2 I3, 2 J3)`` of the sector, lexicographic with I3 major."""
    i2 = spec.n_odd
    want = 0 if spec.parity == "even" else 1
    states = []
    for m_i in range(-i2, i2 + 1, 2):
        for m_j in (-1, 1):
            k = (m_i + m_j) // 2
            if k % 2 == want:
                states.append((m_i, m_j))
    return states


def toy_operators(spec: ToyModelSpec):
    """Real symmetric matrices ``(H0, V0, V1)`` over :func:`sector_basis`.

    ``H0 = omega (I3 + J3)``, ``V0 = I+ J- + I- J+``, ``V1 = I+ J+ + I- J-``.
    """
    basis = sector_basis(spec)
    index = {s: k for k, s in enumerate(basis)}
    n = len(basis)
    i2, j2 = spec.n_odd, 1
    h0 = np.zeros((n, n))
    v0 = np.zeros((n, n))
    v1 = np.zeros((n, n))
    for col, (mi, mj) in enumerate(basis):
        h0[col, col] = spec.omega * (mi + mj) / 2
        for si in (1, -1):
            for sj in (1, -1):
                row = index.get((mi + 2 * si, mj + 2 * sj))
                if row is None:
                    continue
                amp = gamma(i2, mi, si) * gamma(j2, mj, sj)
                if si == sj:
                    v1[row, col] += amp
                else:
                    v0[row, col] += amp
    return h0, v0, v1


class ToyModel(AffineFamily):
    """The coupled angular-momenta family in one parity sector."""

    def __init__(self, spec: ToyModelSpec):
        self.spec = spec
        self.basis = sector_basis(spec)
        h0, v0, v1 = toy_operators(spec)
        self.h0, self.v0, self.v1 = h0, v0, v1
        super().__init__(h0, v0, v1)

    def __repr__(self):
        s = self.spec
        return f"ToyModel(n={s.n_odd}, omega={s.omega}, parity={s.parity!r})"


def toy_matrix(spec: ToyModelSpec, lam: complex, delta: float) -> np.ndarray:
    """Matrix of ``H(lambda, delta)`` in the parity sector of ``spec``."""
    h0, v0, v1 = toy_operators(spec)
    return h0 + lam * (v0 + delta * v1)


def spectrum_symmetry_check(spec: ToyModelSpec, lam, delta, tol: float = 1e-8) -> bool:
    """True when the spectrum of the toy matrix is invariant under E -> -E."""
    from .oracle import eigenvalues, negation_mismatch

    return negation_mismatch(eigenvalues(toy_matrix(spec, lam, delta))) <= tol


@dataclass
class DerivativeReport:
    """Relative mismatch between analytic derivatives and centered differences."""

    lambda_error: float
    delta_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.lambda_error <= self.tol and self.delta_error <= self.tol


def finite_difference_derivative_check(family, lam, delta, step: float = 1e-6,
                                       tol: float = 1e-6) -> DerivativeReport:
    """Compare ``d_lambda``/``d_delta`` with centered differences of ``eval``."""
    lam = complex(lam)
    fd_l = (family.eval(lam + step, delta) - family.eval(lam - step, delta)) / (2 * step)
    fd_d = (family.eval(lam, delta + step) - family.eval(lam, delta - step)) / (2 * step)
    an_l = np.asarray(family.d_lambda(lam, delta))
    an_d = np.asarray(family.d_delta(lam, delta))

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a))))

    return DerivativeReport(rel(an_l, fd_l), rel(an_d, fd_d), tol)


# ---------------------------------------------------------------------------
# registry of named families

_REGISTRY: dict[str, Callable[..., HamiltonianFamily]] = {}


def register_family(name: str, factory: Callable[..., HamiltonianFamily]) -> None:
    """Make ``factory(**params)`` available under ``name`` (e.g. from the CLI)."""
    _REGISTRY[name] = factory


def available_families() -> list[str]:
    return sorted(_REGISTRY)


def make_family(name: str, **params) -> HamiltonianFamily:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ContractViolation(
            f"unknown family {name!r}; registered: {', '.join(available_families())}") from None
    return factory(**params)


def _toy_factory(n=19, omega=1.0, parity="odd", **_ignored):
    return ToyModel(ToyModelSpec(n_odd=int(n), omega=float(omega), parity=str(parity)))


register_family("toy", _toy_factory)
