"""Acceptance suite.

Each test decides one criterion and prints a single ``[PASS]``/``[FAIL]``
line; the lines are repeated in the terminal summary.  Full-scale runs
(N=19 with 10^7 steps) are marked ``slow`` and only execute with
``EPTRACK_SLOW=1``; without it the N=19 criteria use 10^5 steps.
"""

import time

import numpy as np
import pytest

from conftest import SLOW
from eptrack import eom, ics, oracle
from eptrack.linalg import c_product
from eptrack.model import ToyModel, ToyModelSpec

TOL = 5e-4
CHECKPOINTS = (0.25, 0.5, 0.75, 1.0)
N19_GRID = 10**7 if SLOW else 10**5


def run_all_clusters(n, parity, grid, check_every, integrator="euler"):
    """Resolve every crossing of the toy sector and propagate each cluster over [0, 1]."""
    fam = ToyModel(ToyModelSpec(n, 1.0, parity))
    out = []
    for mu in ics.detect_crossings(fam):
        res = ics.resolve_multiplet(mu, fam, step=1.0 / grid, tol=TOL)
        for hyp, state in res.clusters:
            rec = eom.propagate(state, fam, 1.0, grid, tol=TOL, check_every=check_every,
                                integrator=integrator, raise_on_halt=False,
                                meta={"lambda_in": mu.lambda_in, "m": hyp.size,
                                      "multiplicity": mu.multiplicity,
                                      "pairs": hyp.member_pairs})
            out.append((mu, hyp, state, rec))
    return fam, out


@pytest.fixture(scope="module")
def n7_runs():
    """N=7 both parities at G = 1e5, 2e5, 4e5."""
    runs = {}
    for parity in ("odd", "even"):
        for g in (10**5, 2 * 10**5, 4 * 10**5):
            runs[parity, g] = run_all_clusters(7, parity, g, check_every=1000)
    return runs


@pytest.fixture(scope="module")
def n19_odd():
    return run_all_clusters(19, "odd", N19_GRID, check_every=100 if not SLOW else 1000)


@pytest.fixture(scope="module")
def n19_even():
    return run_all_clusters(19, "even", N19_GRID, check_every=100 if not SLOW else 1000)


def _halted(runs):
    return [(r.meta["lambda_in"], r.halt_reason) for _, _, _, r in runs if r.status != "completed"]


# 1 ---------------------------------------------------------------------------------------


def test_c1_analytic_trajectory(verdict):
    fam = ToyModel(ToyModelSpec(1, 1.0, "odd"))
    state = ics.ep_state_from_seed(fam, 0.5, 2j)
    assert state.lam == 2j
    worst = [0.0]

    def watch(s, _):
        worst[0] = max(worst[0], float(np.max(np.abs(s.ep_energies))))

    eom.propagate(state, fam, 1.0, 10, check_every=10, raise_on_halt=False)  # warm-up
    t = time.perf_counter()
    rec = eom.propagate(state, fam, 1.0, 10**6, check_every=100, on_check=watch)
    elapsed = time.perf_counter() - t
    err = abs(rec.final_state.lam - 1j)
    ok = rec.status == "completed" and err <= 5e-6 and worst[0] <= 1e-8
    verdict("1", ok, f"|lambda(1) - i| = {err:.2e} (<= 5e-6), max |E~| = {worst[0]:.1e} "
                     f"(<= 1e-8), 10^6 steps in {elapsed:.1f} s")
    assert ok


# 2 ---------------------------------------------------------------------------------------


def test_c2_tolerance_and_first_order_scaling(n7_runs, verdict):
    grids = (10**5, 2 * 10**5, 4 * 10**5)
    worst_resid = 0.0
    orders = []
    halted = []
    for parity in ("odd", "even"):
        table = [n7_runs[parity, g][1] for g in grids]
        for k in range(len(table[0])):
            recs = [t[k][3] for t in table]
            halted += [r.meta["lambda_in"] for r in recs if r.status != "completed"]
            worst_resid = max(worst_resid, recs[0].max_residual)
            res = [r.max_residual for r in recs]
            slope = np.polyfit(np.log(grids), np.log(res), 1)[0]
            orders.append(-slope)
    ok = not halted and worst_resid < TOL and all(0.8 <= p <= 1.2 for p in orders)
    verdict("2", ok, f"N=7, {len(orders)} clusters: max residual at G=1e5 {worst_resid:.2e} "
                     f"(< 5e-4), fitted orders {min(orders):.3f}..{max(orders):.3f} "
                     f"(in [0.8, 1.2]), halted {len(halted)}")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("parity", ["odd", "even"])
def test_c2_full_scale(parity, request, verdict):
    fam, runs = request.getfixturevalue(f"n19_{parity}")
    worst = max(r.max_residual for *_, r in runs)
    halted = _halted(runs)
    ok = not halted and worst < TOL
    verdict(f"2 (full scale, {parity})", ok,
            f"N=19 {parity}, G=1e7, {len(runs)} clusters: max residual {worst:.2e} (< 5e-4), "
            f"halted {halted}")
    assert ok


def test_c2_full_scale_announce(verdict):
    if not SLOW:
        verdict("2 (full scale)", None, "N=19, G=1e7 not run; set EPTRACK_SLOW=1")


# 3 ---------------------------------------------------------------------------------------


def test_c3_lambda_dot_member_independence(n19_odd, verdict):
    _, runs = n19_odd
    twofold = [r for _, hyp, _, r in runs if hyp.size == 2]
    spreads = [s.report.lambda_dot_spread for r in twofold for s in r.samples]
    worst = max(spreads)
    halted = _halted(runs)
    ok = bool(twofold) and not halted and worst <= 1e-6
    verdict("3", ok, f"N=19 odd, G={N19_GRID:.0e}, {len(twofold)} twofold clusters, "
                     f"{len(spreads)} checks: max relative lambda' spread {worst:.2e} (<= 1e-6)")
    assert ok


# 4 ---------------------------------------------------------------------------------------


def test_c4_structure(n19_odd, n19_even, verdict):
    _, odd = n19_odd
    fails = []
    onefold_e = 0.0
    mirror = 0.0
    by_mu: dict[float, list] = {}
    for mu, hyp, _, rec in odd:
        by_mu.setdefault(mu.lambda_in, []).append((mu, hyp, rec))
    for lam_in, items in by_mu.items():
        mu = items[0][0]
        sizes = [hyp.size for _, hyp, _ in items]
        if sizes != [mu.multiplicity]:
            fails.append(f"multiplet {lam_in:.4f} gave clusters {sizes}")
            continue
        rec = items[0][2]
        e = rec.ep_energies
        if mu.multiplicity == 1:
            onefold_e = max(onefold_e, float(np.max(np.abs(e))))
        elif mu.multiplicity == 2:
            mirror = max(mirror, float(np.max(np.abs(e[:, 0] + e[:, 1]))))
    _, even = n19_even
    fourfold = {}
    for mu, hyp, _, rec in even:
        if mu.multiplicity == 4:
            fourfold.setdefault(mu.lambda_in, []).append((hyp.size, rec.status))
    for lam_in, items in fourfold.items():
        if sorted(s for s, _ in items) != [2, 2] or any(st != "completed" for _, st in items):
            fails.append(f"fourfold {lam_in:.4f} resolved as {items}")
    halted = _halted(odd) + _halted(even)
    ok = (not fails and not halted and onefold_e <= TOL and mirror <= TOL
          and len(fourfold) == 2)
    verdict("4", ok, f"odd: onefold max |E~| {onefold_e:.1e}, twofold max |E~1 + E~2| "
                     f"{mirror:.1e} (<= 5e-4); even: {len(fourfold)} fourfold multiplets -> "
                     f"{[sorted(s for s, _ in v) for v in fourfold.values()]}; problems {fails}")
    assert ok


# 5 ---------------------------------------------------------------------------------------


def _oracle_sweep(fam, runs):
    worst_disc = worst_cond = 0.0
    problems = []
    count = 0
    for _, _, _, rec in runs:
        for r in oracle.validate_trajectory(rec, fam, CHECKPOINTS):
            count += 1
            if r.candidate is None:
                problems.append(f"{rec.meta['lambda_in']:.4f}@{r.delta}: {r.error}")
                continue
            worst_disc = max(worst_disc, r.discrepancy)
            worst_cond = max(worst_cond, r.candidate.condition)
    return worst_disc, worst_cond, problems, count


def test_c5_oracle_equivalence_n7(n7_runs, verdict):
    worst_disc = worst_cond = 0.0
    problems = []
    count = 0
    for parity in ("odd", "even"):
        fam, runs = n7_runs[parity, 10**5]
        d, c, p, k = _oracle_sweep(fam, runs)
        worst_disc, worst_cond = max(worst_disc, d), max(worst_cond, c)
        problems += p
        count += k
    ok = not problems and worst_disc <= 1e-4 and worst_cond <= 1e-4
    verdict("5 (N=7)", ok, f"{count} checkpoints: max discrepancy {worst_disc:.2e} (<= 1e-4), "
                           f"max self-overlap {worst_cond:.2e} (<= 1e-4), problems {problems}")
    assert ok


@pytest.mark.slow
def test_c5_oracle_equivalence_n19(n19_odd, n19_even, verdict):
    worst_disc = worst_cond = 0.0
    problems = []
    count = 0
    for fam, runs in (n19_odd, n19_even):
        d, c, p, k = _oracle_sweep(fam, runs)
        worst_disc, worst_cond = max(worst_disc, d), max(worst_cond, c)
        problems += p
        count += k
    ok = not problems and worst_disc <= 1e-4 and worst_cond <= 1e-4
    verdict("5 (N=19)", ok, f"G=1e7, {count} checkpoints: max discrepancy {worst_disc:.2e} "
                            f"(<= 1e-4), max self-overlap {worst_cond:.2e} (<= 1e-4), "
                            f"problems {problems}")
    assert ok


def test_c5_full_scale_announce(verdict):
    if not SLOW:
        verdict("5 (N=19)", None, "oracle check of the G=1e7 N=19 runs not run; "
                                  "set EPTRACK_SLOW=1")


# 6 ---------------------------------------------------------------------------------------


def _ic_checks(fam, state):
    resid = eom.check_consistency(state, fam).max_residual
    basis = 0.0
    for c, b in zip(state.ep_vectors, state.complement_vectors):
        basis = max(basis, abs(c_product(c, c)), abs(c_product(b, b)), abs(c_product(c, b) - 1))
    v = eom.effective_perturbation(state, fam)
    vnorm = np.linalg.norm(v, 2)
    e = state.ordinary_energies
    scale = max(1.0, oracle.spectral_diameter(np.concatenate([e, state.ep_energies])))
    coupling = 0.0
    pairs = 0
    for a in range(len(e)):
        for b in range(a + 1, len(e)):
            if abs(e[a] - e[b]) <= 1e-8 * scale:
                pairs += 1
                c = state.ordinary_vectors
                coupling = max(coupling, abs(c[a] @ v @ c[b]) / vnorm)
    return resid, basis, coupling, pairs


def test_c6_initial_conditions(n19_odd, n19_even, verdict):
    states = []
    for parity in ("odd", "even"):
        fam = ToyModel(ToyModelSpec(7, 1.0, parity))
        for mu in ics.detect_crossings(fam):
            states += [(fam, st) for _, st in ics.resolve_clusters_and_signs(mu, fam)]
    for fam, runs in (n19_odd, n19_even):
        states += [(fam, st) for _, _, st, _ in runs]
    resid = basis = coupling = 0.0
    pairs = 0
    for fam, st in states:
        r, b, c, p = _ic_checks(fam, st)
        resid, basis, coupling = max(resid, r), max(basis, b), max(coupling, c)
        pairs += p
    ok = resid <= 1e-10 and basis <= 1e-12 and coupling <= 1e-10
    verdict("6", ok, f"{len(states)} initial states (N=7, N=19, both parities): max residual "
                     f"{resid:.1e} (<= 1e-10), basis identities {basis:.1e} (<= 1e-12), "
                     f"{pairs} rectified pairs with max |(c1|V|c2)|/|V| {coupling:.1e} (<= 1e-10)")
    assert ok


# 7 ---------------------------------------------------------------------------------------

GROUPS = ("lambda", "E~", "E", "f", "c~", "b~", "c")


def _groups(layout, y):
    s_et, s_e, s_f, s_x = layout.slices()
    x = y[s_x].reshape(layout.n, layout.n)
    m = layout.m
    return dict(zip(GROUPS, (y[:1], y[s_et], y[s_e], y[s_f], x[:m], x[m:2 * m], x[2 * m:])))


def test_c7_finite_difference_oracle(verdict):
    rng = np.random.default_rng(20240607)
    clusters = []
    for parity in ("odd", "even"):
        fam = ToyModel(ToyModelSpec(7, 1.0, parity))
        for mu in ics.detect_crossings(fam):
            clusters += [(fam, st) for _, st in ics.resolve_clusters_and_signs(mu, fam)]
    h = 1e-4
    worst = dict.fromkeys(GROUPS, 0.0)
    seen = set()
    for _ in range(10):
        fam, st0 = clusters[rng.integers(len(clusters))]
        delta = float(rng.uniform(0.05, 0.95))
        st = eom.propagate(st0, fam, delta, 4000, integrator="rk4", check_every=4000).final_state
        plus = eom.propagate(st, fam, delta + h, 10, integrator="rk4", check_every=10, tol=1.0)
        minus = eom.propagate(st, fam, delta - h, 10, integrator="rk4", check_every=10, tol=1.0)
        fd = (plus.final_state.pack() - minus.final_state.pack()) / (2 * h)
        exact = eom.rates(st, fam).pack(st.layout)
        g_fd, g_ex = _groups(st.layout, fd), _groups(st.layout, exact)
        for name in GROUPS:
            if g_ex[name].size == 0:
                continue
            seen.add(name)
            ref = max(1.0, float(np.max(np.abs(g_ex[name]))))
            worst[name] = max(worst[name], float(np.max(np.abs(g_fd[name] - g_ex[name]))) / ref)
    ok = seen == set(GROUPS) and max(worst.values()) <= 1e-4
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    verdict("7", ok, f"10 random interior checkpoints, N=7: worst relative error per group: "
                     f"{detail} (<= 1e-4)")
    assert ok


# 8 ---------------------------------------------------------------------------------------


def test_c8_spectral_symmetry(n7_runs, n19_odd, n19_even, verdict):
    worst_run = 0.0
    n_samples = 0
    sources = [n7_runs["odd", 10**5], n7_runs["even", 10**5], n19_odd, n19_even]
    for _, runs in sources:
        for *_, rec in runs:
            for s in rec.samples:
                spec = np.concatenate([s.ep_energies, s.ep_energies, s.ordinary_energies])
                worst_run = max(worst_run, oracle.negation_mismatch(spec))
                n_samples += 1
    worst_sweep = 0.0
    worst_lines = 0.0
    lam = np.linspace(0.0, 1.0, 41)
    for parity in ("odd", "even"):
        for n in (7, 19):
            spec = ToyModelSpec(n, 1.0, parity)
            sweep = oracle.sweep_spectrum(ToyModel(spec), lam, [0.0, 0.25, 0.5, 1.0])
            for i in range(len(lam)):
                for j in range(sweep.values.shape[1]):
                    worst_sweep = max(worst_sweep, oracle.negation_mismatch(sweep.values[i, j]))
            got = np.sort(sweep.values[:, 0, :].real, axis=1)
            worst_lines = max(worst_lines, float(np.max(np.abs(got - _block_lines(spec, lam)))))
            worst_lines = max(worst_lines, float(np.max(np.abs(sweep.values[:, 0, :].imag))))
    ok = worst_run <= TOL and worst_sweep <= 1e-10 and worst_lines <= 1e-10
    verdict("8", ok, f"{n_samples} propagated spectra: max negation mismatch {worst_run:.1e} "
                     f"(<= 5e-4); dense sweeps {worst_sweep:.1e} (<= 1e-10); delta=0 panels vs "
                     f"block lines {worst_lines:.1e} (<= 1e-10)")
    assert ok


def _block_lines(spec, lambdas):
    """delta = 0 spectrum from the 1x1 and 2x2 blocks of fixed I3 + J3, written out by hand."""
    fam = ToyModel(spec)
    k_of = [(a + b) // 2 for a, b in fam.basis]
    out = []
    for lam in lambdas:
        vals = []
        for k in sorted(set(k_of)):
            idx = [i for i, kk in enumerate(k_of) if kk == k]
            if len(idx) == 1:
                vals.append(spec.omega * k + lam * fam.v0[idx[0], idx[0]])
            else:
                g = abs(fam.v0[idx[0], idx[1]])
                vals += [spec.omega * k + lam * g, spec.omega * k - lam * g]
        out.append(sorted(vals))
    return np.array(out)
