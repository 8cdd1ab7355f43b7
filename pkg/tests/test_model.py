import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eptrack.exceptions import ContractViolation
from eptrack.model import (AffineFamily, ToyModel, ToyModelSpec, available_families,
                           finite_difference_derivative_check, gamma, make_family,
                           register_family, sector_basis, spectrum_symmetry_check, toy_matrix)
from eptrack.oracle import eigenvalues, negation_mismatch


def spin_ops(j2):
    """(J3, J+, J-) for spin j = j2/2 in the basis m = -j .. j."""
    ms = np.arange(-j2, j2 + 1, 2) / 2
    j = j2 / 2
    jz = np.diag(ms)
    jp = np.zeros((len(ms), len(ms)))
    for k, m in enumerate(ms[:-1]):
        jp[k + 1, k] = np.sqrt(j * (j + 1) - m * (m + 1))
    return jz, jp, jp.T


def reference_matrix(n, omega, parity, lam, delta):
    """Full product-space Hamiltonian projected onto one parity sector."""
    iz, ip, im = spin_ops(n)
    jz, jp, jm = spin_ops(1)
    e_i, e_j = np.eye(n + 1), np.eye(2)
    k_op = np.kron(iz, e_j) + np.kron(e_i, jz)
    h = (omega * k_op + lam * (np.kron(ip, jm) + np.kron(im, jp)
                               + delta * (np.kron(ip, jp) + np.kron(im, jm))))
    kval = np.diag(k_op)
    want = 0 if parity == "even" else 1
    keep = [i for i, k in enumerate(kval) if int(round(k)) % 2 == want]
    return h[np.ix_(keep, keep)]


def test_n1_odd_matrix():
    h = toy_matrix(ToyModelSpec(1, 1.0, "odd"), 2.0, 0.5)
    assert np.allclose(h, [[-1, 1], [1, 1]])


def test_sector_basis_order_and_size():
    spec = ToyModelSpec(3, 1.0, "even")
    basis = sector_basis(spec)
    assert len(basis) == 4
    assert basis == sorted(basis)
    assert all(((a + b) // 2) % 2 == 0 for a, b in basis)


@pytest.mark.parametrize("n", [1, 3, 7, 19])
@pytest.mark.parametrize("parity", ["even", "odd"])
def test_matches_product_space_construction(n, parity):
    spec = ToyModelSpec(n, 1.3, parity)
    for lam, delta in [(0.37, 0.0), (0.8 + 0.2j, 0.6), (-1.1, 1.0)]:
        assert np.allclose(toy_matrix(spec, lam, delta),
                           reference_matrix(n, 1.3, parity, lam, delta), atol=1e-12)


def test_gamma_values():
    assert gamma(1, -1, 1) == pytest.approx(1.0)
    assert gamma(1, 1, 1) == 0.0
    assert gamma(2, 0, 1) == pytest.approx(np.sqrt(2))


@pytest.mark.parametrize("bad", [dict(n_odd=2), dict(n_odd=0), dict(omega=0.0),
                                 dict(parity="both")])
def test_spec_validation(bad):
    with pytest.raises(ContractViolation):
        ToyModelSpec(**bad)


def test_spec_dict_roundtrip():
    spec = ToyModelSpec(7, 0.5, "even")
    assert ToyModelSpec.from_dict(spec.to_dict()) == spec
    assert spec.dim == 8


@pytest.mark.parametrize("n", [1, 7, 19])
@pytest.mark.parametrize("parity", ["even", "odd"])
def test_matrix_symmetric_real_for_real_lambda(n, parity):
    fam = ToyModel(ToyModelSpec(n, 1.0, parity))
    h = fam.eval(0.4, 0.7)
    assert h.shape == (n + 1, n + 1)
    assert np.array_equal(h, h.T)
    assert np.all(h.imag == 0)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, 3, 7, 19]), st.sampled_from(["even", "odd"]),
       st.floats(-2, 2), st.floats(0, 1))
def test_spectrum_negation_symmetric(n, parity, lam, delta):
    assert spectrum_symmetry_check(ToyModelSpec(n, 1.0, parity), lam, delta, tol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 1))
def test_spectrum_negation_symmetric_complex_lambda(a, b, delta):
    vals = eigenvalues(toy_matrix(ToyModelSpec(7, 1.0, "odd"), complex(a, b), delta))
    assert negation_mismatch(vals) <= 1e-8 * max(1.0, np.max(np.abs(vals)))


@pytest.mark.parametrize("lam,delta", [(0.3, 0.2), (0.5 + 0.4j, 0.9), (-1.0, 0.0)])
def test_derivatives_match_finite_differences(lam, delta):
    fam = ToyModel(ToyModelSpec(7, 1.0, "odd"))
    rep = finite_difference_derivative_check(fam, lam, delta)
    assert rep.passed, rep


def test_affine_family_rejects_asymmetric():
    with pytest.raises(ContractViolation):
        AffineFamily(np.eye(2), np.array([[0, 1], [0, 0]]), np.zeros((2, 2)))


def test_affine_family_with_delta_term():
    rng = np.random.default_rng(0)
    mats = [rng.normal(size=(3, 3)) for _ in range(4)]
    mats = [m + m.T for m in mats]
    fam = AffineFamily(*mats)
    assert finite_difference_derivative_check(fam, 0.3 + 0.1j, 0.4).passed


def test_registry():
    assert "toy" in available_families()
    fam = make_family("toy", n=3, parity="even")
    assert fam.dim == 4
    register_family("two-level", lambda **kw: AffineFamily(np.diag([-1.0, 1.0]), np.zeros((2, 2)),
                                                           np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert make_family("two-level").dim == 2
    with pytest.raises(ContractViolation):
        make_family("nope")
