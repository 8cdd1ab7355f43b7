import numpy as np
import pytest

from eptrack import ics, oracle
from eptrack.eom import propagate
from eptrack.exceptions import NotAnEp, NotFound
from eptrack.model import AffineFamily, ToyModel, ToyModelSpec


@pytest.fixture(scope="module")
def n1_odd():
    return ToyModel(ToyModelSpec(1, 1.0, "odd"))


def block_lines(spec, lambdas):
    """Eigenvalues at delta = 0 from the at most 2x2 blocks of fixed I3 + J3."""
    fam = ToyModel(spec)
    k_of = [(a + b) // 2 for a, b in fam.basis]
    out = []
    for lam in lambdas:
        vals = []
        for k in sorted(set(k_of)):
            idx = [i for i, kk in enumerate(k_of) if kk == k]
            sub = fam.v0[np.ix_(idx, idx)]
            if len(idx) == 1:
                vals.append(spec.omega * k + lam * sub[0, 0])
            else:
                # symmetric 2x2 with zero diagonal: +/- the coupling
                g = abs(sub[0, 1])
                vals += [spec.omega * k + lam * g, spec.omega * k - lam * g]
        out.append(sorted(vals))
    return np.array(out)


@pytest.mark.parametrize("seed,delta,expected", [(0.9j, 1.0, 1j), (1.8j, 0.5, 2j), (-0.8j, 1.0, -1j)])
def test_locate_n1_analytic(n1_odd, seed, delta, expected):
    cand = oracle.locate_ep(n1_odd, delta, seed)
    assert abs(cand.lam - expected) <= 1e-10
    assert cand.is_ep
    assert cand.condition <= 1e-4
    assert abs(cand.coalescing_energy) <= 1e-7


def test_locate_is_seed_stable(n1_odd):
    cand = oracle.locate_ep(n1_odd, 1.0, 0.9j)
    for d in (1e-3, -1e-3, 1e-3j, -1e-3j):
        again = oracle.locate_ep(n1_odd, 1.0, cand.lam + d)
        assert abs(again.lam - cand.lam) <= 1e-8


def test_locate_rejects_diagonalizable_crossing():
    fam = ToyModel(ToyModelSpec(1, 1.0, "even"))
    with pytest.raises(NotAnEp) as info:
        oracle.locate_ep(fam, 0.5, 0.1)
    assert abs(info.value.candidate.lam) < 1e-10
    assert info.value.candidate.condition > 0.5


def test_locate_at_hermitian_crossing_reports_crossing():
    fam = ToyModel(ToyModelSpec(7, 1.0, "odd"))
    mu = ics.detect_crossings(fam)[1]
    with pytest.raises(NotAnEp) as info:
        oracle.locate_ep(fam, 0.0, mu.lambda_in + 1e-3)
    assert abs(info.value.candidate.lam - mu.lambda_in) <= 1e-8


def test_locate_not_found():
    fam = AffineFamily(np.diag([-1.0, 1.0]), np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(NotFound):
        oracle.locate_ep(fam, 0.5, 0.3 + 0.2j)


@pytest.mark.parametrize("n", [1, 7, 19])
@pytest.mark.parametrize("parity", ["even", "odd"])
def test_sweep_at_zero_delta_is_straight_lines(n, parity):
    spec = ToyModelSpec(n, 1.0, parity)
    lam = np.linspace(0.0, 1.0, 21)
    sweep = oracle.sweep_spectrum(ToyModel(spec), lam, [0.0])
    got = np.sort(sweep.values[:, 0, :].real, axis=1)
    assert np.max(np.abs(sweep.values[:, 0, :].imag)) <= 1e-10
    assert np.max(np.abs(got - block_lines(spec, lam))) <= 1e-10


def test_sweep_rows_layout():
    sweep = oracle.sweep_spectrum(ToyModel(ToyModelSpec(1, 1.0, "odd")), [0.0, 1.0], [0.0, 0.5])
    rows = list(sweep.rows())
    assert len(rows) == 2 * 2 * 2
    assert rows[0][:3] == (0.0, 0.0, 0)


def test_pair_lines_follows_crossing():
    lam = np.linspace(-1, 1, 41)
    raw = np.sort(np.stack([lam, -lam], axis=1), axis=1)
    lines = oracle.pair_lines(raw)
    # after pairing each column is a straight line of constant slope
    assert np.allclose(np.diff(lines, 2, axis=0), 0)


def test_negation_mismatch():
    assert oracle.negation_mismatch([1, -1, 2j, -2j]) == 0
    assert oracle.negation_mismatch([1, 2]) > 1


def test_validate_trajectory_on_analytic_run(n1_odd):
    state = ics.ep_state_from_seed(n1_odd, 0.5, 2j)
    rec = propagate(state, n1_odd, 1.0, 20000, check_every=500)
    res = oracle.validate_trajectory(rec, n1_odd, [0.5, 0.75, 1.0])
    for r in res:
        assert r.is_ep
        assert abs(r.candidate.lam - 1j / r.delta) <= 1e-10
        assert r.discrepancy <= 1e-4


def test_validate_trajectory_empty_record(n1_odd):
    from eptrack.eom import TrajectoryRecord

    with pytest.raises(ValueError):
        oracle.validate_trajectory(TrajectoryRecord(), n1_odd, [0.5])
