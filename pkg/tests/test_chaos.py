import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import spearmanr

from rydqca import paulis
from rydqca.chaos import (Coloring, Observable, bloch_vector, clifford_pauli_weight, estimate_g, exact_g_series,
                          exact_size_distribution, g_enumeration, g_from_sizes, g_moment_contraction, haar_moment,
                          heisenberg_operator, light_cone_sizes, pauli_coefficients, preparation_unitary,
                          product_state, random_operator_sizes, sample_coloring, sample_initial_state,
                          simulate_prep_protocol, size_distribution_of, tetra_moment_closed_form,
                          tetra_moment_direct, tetra_moments, tetra_state, TETRA_STATES)
from rydqca.chaos.oracles import SizeDistribution
from rydqca.compiler import KickedIsing, KitaevFloquet, QcaModel, TwoLocal
from rydqca.errors import ConfigurationError, DomainError, NumericError, ResourceError
from rydqca.lattice import LatticeSpec

from conftest import haar_unitary

Q = np.pi / 4


def ki(n, h=1.2, J=1.0, b=0.8, tau=1.0, boundary="Open"):
    return QcaModel(KickedIsing(J, h, b), tau, LatticeSpec.chain(n, boundary))


def kitaev_clifford(lattice):
    return QcaModel(KitaevFloquet(Q, Q, Q), 1.0, lattice)


# ---------------------------------------------------------------- tetrahedral ensemble

def test_mu1_z_expectation():
    psi = tetra_state(1)
    assert np.vdot(psi, paulis.SZ @ psi).real == pytest.approx(-1 / np.sqrt(3), abs=1e-15)


def test_tetrahedron_geometry():
    v = np.array([bloch_vector(s) for s in TETRA_STATES])
    assert np.allclose(np.linalg.norm(v, axis=1), 1)
    assert np.allclose(v.sum(axis=0), 0, atol=1e-15)
    gram = v @ v.T
    assert np.allclose(gram[~np.eye(4, dtype=bool)], -1 / 3)


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_preparation_unitaries(k):
    U = preparation_unitary(k)
    assert np.allclose(U.conj().T @ U, np.eye(2))
    assert np.allclose(U[:, 0], tetra_state(k))


def test_low_moments_equal_haar():
    assert np.allclose(tetra_moment_direct(1), np.eye(2) / 2, atol=1e-15)
    n2 = (np.eye(4) + sum(np.kron(p, p) for p in (paulis.SX, paulis.SY, paulis.SZ)) / 3) / 4
    assert np.allclose(tetra_moment_direct(2), n2, atol=1e-15)
    for k in (1, 2):
        assert tetra_moments(k).haar_error < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_closed_forms_match_direct_sums(k):
    assert tetra_moments(k).closed_form_error < 1e-12


def test_closed_form_orders():
    assert set(tetra_moment_closed_form(3)) == {0, 2, 3}
    assert tetra_moments(3).haar_error > 1e-3
    assert tetra_moments(6).closed_form is None
    with pytest.raises(ConfigurationError):
        tetra_moment_direct(9)


def test_haar_moment_oracle(rng):
    # Monte Carlo over Haar states with a loose, seed-fixed tolerance
    psis = np.array([haar_unitary(rng)[:, 0] for _ in range(20000)])
    rho2 = np.einsum("si,sj,sk,sl->ikjl", psis, psis.conj(), psis, psis.conj()).reshape(4, 4) / len(psis)
    assert np.abs(rho2 - haar_moment(2)).max() < 0.01


@given(st.integers(0, 2 ** 31))
def test_two_design_identity(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    tetra = np.mean([np.vdot(s, A @ s) ** 2 for s in TETRA_STATES])
    # E_Haar <A>^2 = (Tr[A]^2 + Tr[A^2]) / 6
    haar = (np.trace(A) ** 2 + np.trace(A @ A)) / 6
    assert tetra == pytest.approx(haar, abs=1e-13)


def test_coloring_statistics_and_determinism():
    c = sample_coloring(10 ** 4, 3).colors
    freq = np.bincount(c, minlength=5)[1:] / c.size
    sigma = np.sqrt(0.25 * 0.75 / c.size)
    assert np.all(np.abs(freq - 0.25) < 5 * sigma)
    assert np.array_equal(sample_initial_state(6, 11)[1], sample_initial_state(6, 11)[1])
    assert np.array_equal(sample_coloring(6, 11).colors, sample_coloring(6, 11).colors)


def test_product_state_forced_color():
    psi = product_state([1])
    assert np.vdot(psi, paulis.SZ @ psi).real == pytest.approx(-1 / np.sqrt(3))
    with pytest.raises(ConfigurationError):
        product_state([0, 2])


# ---------------------------------------------------------------- size distributions

def test_unevolved_single_pauli():
    sd = exact_size_distribution(ki(5), Observable.single("X", 1), 0)
    assert sd.p[1] == pytest.approx(1) and sd.p.sum() == pytest.approx(1)
    assert sd.g == pytest.approx(1 / 3)


def test_random_operator_sizes():
    for n in (1, 4, 8):
        p = random_operator_sizes(n)
        assert p[0] == 0 and p.sum() == pytest.approx(1)
        assert g_from_sizes(p) == pytest.approx(1 / (2 ** n + 1), rel=1e-12)


def test_size_distribution_validation():
    with pytest.raises(NumericError):
        SizeDistribution(np.array([0.5, 0.4]))
    with pytest.raises(ResourceError):
        exact_size_distribution(ki(11), Observable.single("X", 0), 1)
    with pytest.raises(NumericError):
        size_distribution_of(2 * paulis.pauli_string(2, {0: "X"}), 2)


@settings(max_examples=15)
@given(st.integers(0, 2 ** 31), st.integers(0, 4))
def test_three_g_definitions_agree(seed, t):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    m = QcaModel(TwoLocal(*rng.uniform(-1, 1, 6)), float(rng.uniform(0.2, 1.5)), LatticeSpec.chain(n))
    op = heisenberg_operator(m, Observable.single(str(rng.choice(list("XYZ"))), int(rng.integers(n))), t)
    g = size_distribution_of(op, n).g
    assert g == pytest.approx(g_moment_contraction(op, n), abs=1e-10)
    assert g == pytest.approx(g_enumeration(op, n), abs=1e-10)


def test_pauli_coefficients_reconstruct(rng):
    n = 3
    A = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    c = pauli_coefficients(A, n)
    rebuilt = sum(c[idx] * paulis.kron_all([paulis.PAULI["IXYZ"[i]] for i in idx])
                  for idx in np.ndindex(c.shape))
    assert np.allclose(rebuilt, A)


def test_late_time_sizes_are_random():
    n = 6
    m = ki(n, boundary="Periodic")
    p = np.mean([exact_size_distribution(m, Observable.single("X", 3), t).p for t in range(96, 101)], axis=0)
    assert np.abs(p - random_operator_sizes(n)).max() < 0.02


def test_heisenberg_requires_unit_pauli_norm():
    with pytest.raises(ConfigurationError):
        Observable("W", (0,))
    with pytest.raises(ConfigurationError):
        heisenberg_operator(ki(3), Observable.single("X", 5), 1)


# ---------------------------------------------------------------- sampling

def test_g_at_time_zero():
    est = estimate_g(ki(4), Observable.single("X", 2), 0, 2000, seed=1)
    assert abs(est.values[0] - 1 / 3) < 3 * est.uncertainty[0] + 1e-12
    # tetrahedral states: <X>^2 is 1/3 for every color
    assert np.allclose(est.samples[:, 0], 1 / 3)


def test_sample_mean_vanishes():
    est = estimate_g(ki(6), Observable.single("Z", 2), 6, 500, seed=4)
    se = est.means.std(axis=0, ddof=1) / np.sqrt(est.n_samples)
    assert np.all(np.abs(est.means.mean(axis=0)) < 5 * se)


def test_sampling_matches_exact_series():
    m, obs = ki(6), Observable.single("X", 3)
    est = estimate_g(m, obs, 12, 2000, seed=2)
    exact = exact_g_series(m, obs, 12)
    assert np.all(np.abs(est.values - exact) < 4 * est.uncertainty)


def test_uniform_observable_on_several_sites():
    m, obs = ki(5), Observable("Z", (1, 2))
    est = estimate_g(m, obs, 4, 1000, seed=5)
    # every color gives <Z>^2 = 1/3 per site, so the raw second moment is exact
    assert np.allclose(est.samples[:, 0], 1 / 9)
    assert abs(est.values[0] - 1 / 9) < 3 * est.uncertainty[0]
    exact = exact_g_series(m, obs, 4)
    assert np.all(np.abs(est.values - exact) < 4 * est.uncertainty)


def test_shots_converge_to_exact_mode():
    m, obs = ki(5), Observable.single("X", 2)
    ref = estimate_g(m, obs, 6, 200, seed=8)
    gaps = []
    for shots in (10 ** 2, 10 ** 3, 10 ** 4):
        est = estimate_g(m, obs, 6, 200, seed=8, shots=shots)
        assert est.shots == shots
        gaps.append(np.abs(est.values - ref.values).max())
    assert gaps[2] < gaps[0]
    assert gaps[2] < 0.01


def test_shot_estimator_is_unbiased():
    # a single sample with <O>^2 = 1/3 at t=0: the U-statistic averages to 1/3
    est = estimate_g(ki(2), Observable.single("X", 0), 0, 20000, seed=3, shots=4)
    se = est.samples[:, 0].std(ddof=1) / np.sqrt(est.n_samples)
    assert abs(est.samples[:, 0].mean() - 1 / 3) < 5 * se


def test_estimate_g_errors():
    m, obs = ki(3), Observable.single("X", 0)
    with pytest.raises(ConfigurationError):
        estimate_g(m, obs, 2, 5)
    with pytest.raises(ConfigurationError):
        estimate_g(m, obs, 2, 25)
    with pytest.raises(ConfigurationError):
        estimate_g(m, Observable.single("X", 4), 2, 10)
    with pytest.raises(ResourceError):
        estimate_g(ki(21), obs, 1, 10)


def test_thread_count_does_not_change_results(monkeypatch):
    import rydqca.chaos.sampling as sampling
    monkeypatch.setattr(sampling, "CHUNK_BYTES", 16 * 2 ** 5 * 7)
    m, obs = ki(5), Observable.single("X", 2)
    a = estimate_g(m, obs, 5, 100, seed=9, threads=1)
    b = estimate_g(m, obs, 5, 100, seed=9, threads=3)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.uncertainty, b.uncertainty)


def test_fast_and_dense_paths_agree(monkeypatch):
    import rydqca.chaos.sampling as sampling
    m, obs = ki(6), Observable.single("Y", 1)
    a = estimate_g(m, obs, 5, 50, seed=1)
    monkeypatch.setattr(sampling, "DENSE_STEP_MAX", 2)
    b = estimate_g(m, obs, 5, 50, seed=1)
    assert np.allclose(a.values, b.values, atol=1e-12)


@pytest.mark.slow
def test_chaotic_decay_at_sixteen_sites():
    # the plateau 1/(2^16+1) is reached well after t=10, so the whole window is pre-saturation
    est = estimate_g(ki(16), Observable.single("X", 8), 10, 100, seed=0)
    t = np.arange(1, 11)
    assert spearmanr(t, np.log(est.values[t])).statistic < -0.95
    assert np.all(est.values[t] > 1 / (2 ** 16 + 1))


# ---------------------------------------------------------------- Clifford oracle

def test_clifford_t_zero():
    res = clifford_pauli_weight(kitaev_clifford(LatticeSpec.hexagon()), Observable.single("X", 0), 0)
    assert res.weights[0] == 1 and res.g[0] == pytest.approx(1 / 3)


def test_clifford_matches_dense_on_hexagon():
    m = kitaev_clifford(LatticeSpec.hexagon())
    for s in range(6):
        for a in "XYZ":
            res = clifford_pauli_weight(m, Observable.single(a, s), 2)
            for t in (1, 2):
                p = exact_size_distribution(m, Observable.single(a, s), t).p
                assert p[res.weights[t]] == pytest.approx(1, abs=1e-12)
                assert res.g[t] == pytest.approx(3.0 ** -res.weights[t])


def test_clifford_light_cone_on_large_honeycomb():
    lat = LatticeSpec("Honeycomb", (10, 10), "Periodic")
    m = kitaev_clifford(lat)
    site = 50
    cone = light_cone_sizes(m, site, 3)
    assert list(cone[1:]) == [8, 28, 60]
    for a in "XYZ":
        res = clifford_pauli_weight(m, Observable.single(a, site), 3)
        assert np.all(res.weights[1:] <= cone[1:])


def test_clifford_rejects_generic_couplings():
    with pytest.raises(DomainError, match="X"):
        clifford_pauli_weight(QcaModel(KitaevFloquet(0.3, Q, Q), 1.0, LatticeSpec.hexagon()),
                              Observable.single("X", 0), 1)
    with pytest.raises(DomainError, match="h"):
        clifford_pauli_weight(ki(4, J=Q, h=0.2, b=Q), Observable.single("X", 0), 1)


def test_clifford_ki_matches_dense():
    m = ki(6, J=Q, h=np.pi / 2, b=Q)
    res = clifford_pauli_weight(m, Observable.single("Z", 2), 4)
    for t in range(5):
        p = exact_size_distribution(m, Observable.single("Z", 2), t).p
        assert p[res.weights[t]] == pytest.approx(1, abs=1e-12)


# ---------------------------------------------------------------- preparation protocol

@pytest.mark.parametrize("colors", [[4, 4, 4], [1, 1, 1], [1, 3, 1, 3], [2, 4, 1, 3]])
def test_prep_examples(colors):
    res = simulate_prep_protocol(Coloring(np.array(colors)))
    assert res.fidelity >= 1 - 1e-10
    assert np.allclose(abs(np.vdot(res.target, product_state(colors))), 1)


def test_prep_all_color_four_uses_only_last_segment():
    res = simulate_prep_protocol(Coloring(np.array([4, 4, 4])), physical=False)
    active = [s for s in res.program.segments if getattr(s, "unitaries", None)]
    assert [s.label for s in active] == ["V4"]


def test_prep_telescopes():
    from rydqca.chaos import step_unitaries
    V = step_unitaries()
    assert np.allclose(V[3] @ V[2] @ V[1] @ V[0], preparation_unitary(1))


@settings(max_examples=10)
@given(st.integers(0, 2 ** 31))
def test_prep_random_colorings(seed):
    res = simulate_prep_protocol(sample_coloring(5, seed))
    assert res.fidelity >= 1 - 1e-10
