import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from rydqca import paulis
from rydqca.chaos import Observable, heisenberg_operator, pauli_coefficients
from rydqca.circuit import FastStep, GateCircuit, CZPhi, SingleQubit, cz_matrix, rotation_product_unitary
from rydqca.compiler import (InhomKickedIsing, KickedIsing, KitaevFloquet, QcaModel, TwoLocal, bch_residual,
                             compile_model, fit_power_law, floquet_effective_h, gadget_sizes, ideal_circuit,
                             ideal_step_unitary, model_layers, synthesize_single_qubit, trotter_error, verify)
from rydqca.errors import ConfigurationError, ResourceError
from rydqca.lattice import LatticeSpec, Species, build_array
from rydqca.pxp import PulseProgram, StateVector, enumerate_basis, project_data_states, run_program

from conftest import haar_unitary

SZ, SX = paulis.SZ, paulis.SX
I2 = np.eye(2)


def chain(n, boundary="Open"):
    return LatticeSpec.chain(n, boundary)


def ki(n=4, J=1.0, h=0.6, b=0.8, tau=0.7, boundary="Open"):
    return QcaModel(KickedIsing(J, h, b), tau, chain(n, boundary))


# ---------------------------------------------------------------- identities

@given(st.floats(-10, 10))
def test_cz_rewriting_identity(phi):
    zz = np.kron(SZ, SZ)
    rhs = np.kron(expm(-1j * phi * SZ / 4), expm(-1j * phi * SZ / 4)) @ expm(1j * phi * zz / 4)
    assert np.allclose(np.exp(1j * phi / 4) * rhs, cz_matrix(phi), atol=1e-13)


@pytest.mark.parametrize("alpha", ["X", "Y", "Z"])
@given(phi=st.floats(-5, 5))
def test_conjugation_identity(alpha, phi):
    R = paulis.basis_change(alpha)
    RR = np.kron(R, R)
    lhs = RR.conj().T @ cz_matrix(4 * phi) @ np.kron(expm(1j * phi * SZ), expm(1j * phi * SZ)) @ RR
    s = paulis.PAULI[alpha]
    assert np.allclose(np.exp(-1j * phi) * lhs, expm(1j * phi * np.kron(s, s)), atol=1e-13)


def test_basis_change_maps_z_to_alpha():
    for a in "XYZ":
        R = paulis.basis_change(a)
        assert np.allclose(R.conj().T @ SZ @ R, paulis.PAULI[a], atol=1e-15)


# ---------------------------------------------------------------- models

def test_model_validation():
    with pytest.raises(ConfigurationError):
        QcaModel(KitaevFloquet(1, 1, 1), 1.0, chain(4))
    with pytest.raises(ConfigurationError):
        QcaModel(InhomKickedIsing(1, 1, 0, 0), 1.0, chain(4))
    with pytest.raises(ConfigurationError):
        QcaModel(KickedIsing(np.inf, 0, 0), 1.0, chain(4))
    m = ki()
    assert QcaModel.from_dict(m.to_dict()) == m


def test_gadget_assignments():
    assert set(gadget_sizes(ki()).values()) == {1}
    assert gadget_sizes(QcaModel(InhomKickedIsing(1, 2, 0, 0), 1.0, LatticeSpec("Square", (2, 2)))) == \
        {"x": 1, "y": 2}
    assert gadget_sizes(QcaModel(KitaevFloquet(1, 1, 1), 1.0, LatticeSpec.hexagon())) == {"Z": 1, "Y": 2, "X": 3}


def test_ki_b_zero_is_diagonal():
    U = ideal_step_unitary(ki(b=0.0))
    assert np.allclose(U, np.diag(np.diag(U)))


def test_ki_two_sites_against_direct_exponentials():
    m = QcaModel(KickedIsing(1.0, 1.2, 0.8), 1.0, chain(2))
    Z1, Z2 = np.kron(SZ, I2), np.kron(I2, SZ)
    X1, X2 = np.kron(SX, I2), np.kron(I2, SX)
    ref = expm(-1j * 0.8 * (X1 + X2)) @ expm(-1j * (Z1 @ Z2 + 1.2 * (Z1 + Z2)))
    assert np.allclose(ideal_step_unitary(m), ref, atol=1e-13)


def test_kitaev_clifford_point_maps_paulis_to_paulis():
    q = np.pi / 4
    m = QcaModel(KitaevFloquet(q, q, q), 1.0, LatticeSpec.hexagon())
    for s in range(6):
        for a in "XYZ":
            c = pauli_coefficients(heisenberg_operator(m, Observable.single(a, s), 1), 6)
            mags = np.sort(np.abs(c).ravel())
            assert mags[-1] == pytest.approx(1, abs=1e-12) and mags[-2] < 1e-12


def test_dense_cap():
    with pytest.raises(ResourceError):
        ideal_step_unitary(ki(n=15))


def test_fast_step_matches_rotation_product(rng):
    m = QcaModel(TwoLocal(*rng.normal(size=6)), 0.4, chain(5))
    layers = model_layers(m)
    assert np.allclose(FastStep(5, layers, 0.4).unitary(), rotation_product_unitary(5, layers, 0.4), atol=1e-12)
    H = [l.matrix(5) for l in layers]
    ref = expm(-0.4j * H[2]) @ expm(-0.4j * H[1]) @ expm(-0.4j * H[0])
    assert np.allclose(ideal_step_unitary(m), ref, atol=1e-12)


# ---------------------------------------------------------------- circuits

def test_ideal_circuit_equals_step_unitary():
    for m in (ki(), QcaModel(TwoLocal(0.3, -0.2, 0.5, 0.1, 0.2, -0.3), 0.6, chain(4)),
              QcaModel(KitaevFloquet(0.3, 0.5, 0.7, 0.1, 0.2, 0.15), 0.8, LatticeSpec.hexagon()),
              QcaModel(InhomKickedIsing(0.4, 0.9, 0.3, 0.5), 0.7, LatticeSpec("Square", (2, 3)))):
        U = ideal_circuit(m, steps=2).unitary()
        ref = np.linalg.matrix_power(ideal_step_unitary(m), 2)
        ov = abs(np.trace(U.conj().T @ ref)) / U.shape[0]
        assert ov == pytest.approx(1, abs=1e-12), m.name


def test_gate_circuit_rejects_overlap_and_non_adjacent():
    c = GateCircuit(3, adjacency=frozenset({frozenset((0, 1)), frozenset((1, 2))}))
    with pytest.raises(ConfigurationError):
        c.append([SingleQubit(I2, 0), CZPhi(1.0, (0, 1))])
    with pytest.raises(ConfigurationError):
        c.append([CZPhi(1.0, (0, 2))])


@given(st.integers(0, 3), st.integers(1, 3))
def test_light_cone_of_ideal_circuit(site, t):
    m = ki(n=6, tau=0.9)
    c = np.abs(pauli_coefficients(heisenberg_operator(m, Observable.single("Z", site), t), 6)) ** 2
    support = [q for q in range(6) if np.moveaxis(c, q, 0)[1:].sum() > 1e-20]
    D = len(model_layers(m))
    assert all(abs(q - site) <= D * t for q in support)


# ---------------------------------------------------------------- compilation

def test_ki_two_sites_two_segments():
    rep = compile_model(ki(n=2))
    assert rep.segment_count == 2
    assert rep.program.count(Species.ANCILLA) == 1


@pytest.mark.parametrize("steps", [1, 3])
def test_ki_chain_fidelity(steps):
    rep = compile_model(ki(n=4), steps=steps)
    assert rep.segment_count == 2 * steps
    assert rep.ancilla_pulses_per_step == 1
    assert verify(rep) >= 1 - 1e-8


def test_ki_three_sites_and_repetitions():
    rep = compile_model(ki(n=3))
    assert verify(rep, repetitions=3) >= 1 - 1e-8
    assert verify(rep, repetitions=0) == 1.0


def test_ki_physical_mode_periodic():
    rep = compile_model(ki(n=4, boundary="Periodic"), physical=True)
    assert all(not hasattr(s, "unitaries") for s in rep.program.segments)
    assert verify(rep) >= 1 - 1e-8
    with pytest.raises(ConfigurationError):
        compile_model(ki(n=4), physical=True)


def test_uniform_degree_on_periodic_equals_per_site():
    m = ki(n=5, boundary="Periodic")
    a = ideal_circuit(m, uniform_degree=True).unitary()
    b = ideal_circuit(m).unitary()
    assert np.allclose(a, b)


def test_two_local_segments_and_fidelity(rng):
    m = QcaModel(TwoLocal(*rng.uniform(-1, 1, 6)), 0.3, chain(4))
    rep = compile_model(m)
    assert rep.segment_count == 6
    assert rep.program.count(Species.ANCILLA) == 3
    assert verify(rep) >= 1 - 1e-8
    assert compile_model(m, steps=2).segment_count == 12


def test_two_local_x_only_reduces_to_ki_with_zero_kick():
    # only the X layer survives: exp(-i tau (c XX + h X)) = R_X^dag exp(-i tau (c ZZ + h Z)) R_X
    m = QcaModel(TwoLocal(0.7, 0, 0, 0.3, 0, 0), 0.5, chain(3))
    k = ki(n=3, J=0.7, h=0.3, b=0.0, tau=0.5)
    R = paulis.kron_all([paulis.basis_change("X")] * 3)
    assert np.allclose(ideal_step_unitary(m), R.conj().T @ ideal_step_unitary(k) @ R, atol=1e-12)
    assert verify(compile_model(m)) >= 1 - 1e-8


def test_inhomogeneous_ki_square():
    m = QcaModel(InhomKickedIsing(0.4, 0.9, 0.3, 0.5), 0.7, LatticeSpec("Square", (2, 2)))
    rep = compile_model(m)
    assert rep.segment_count == 2
    assert verify(rep) >= 1 - 1e-6


@pytest.fixture(scope="module")
def kitaev_report():
    m = QcaModel(KitaevFloquet(0.3, 0.5, 0.7, 0.1, 0.2, 0.15), 0.8, LatticeSpec.hexagon())
    return compile_model(m)


def test_kitaev_hexagon_structure(kitaev_report):
    rep = kitaev_report
    # d a d a d a d after merging neighbouring data stages
    kinds = ["a" if getattr(s, "species", None) is Species.ANCILLA else "d" for s in rep.program.segments]
    assert "".join(kinds) == "dadadad"
    assert rep.ancilla_pulses_per_step >= 3
    assert all(p.grape.error < 1.01e-10 for p in rep.gadget_pulses if p.grape is not None)


@pytest.mark.slow
def test_kitaev_hexagon_fidelity(kitaev_report):
    assert verify(kitaev_report) >= 1 - 1e-6


# ---------------------------------------------------------------- single-qubit synthesis

@given(st.integers(0, 2 ** 31))
def test_single_qubit_synthesis(seed):
    rng = np.random.default_rng(seed)
    u = haar_unitary(rng)
    if rng.random() < 0.3:
        u = paulis.rotation("Z", rng.uniform(-3, 3))
    arr = build_array(LatticeSpec.chain(2), 1)
    b = enumerate_basis(arr)
    prog = PulseProgram(arr, synthesize_single_qubit(u, 1.3, frozen={1}))
    start = StateVector.embed_data(b, np.kron([1, 0], [1, 0]).astype(complex))
    start_r = StateVector.embed_data(b, np.kron([0, 1], [1, 0]).astype(complex))
    out = np.column_stack([project_data_states(b, run_program(s, prog).amplitudes[:, None])[:, 0]
                           for s in (start, start_r)])
    # data atom 0 gets u, frozen atom 1 stays in |g>
    got = out[[0, 2]]
    phase = np.vdot(u[:, 0], got[:, 0])
    assert np.allclose(got, phase * u, atol=1e-10)


# ---------------------------------------------------------------- Floquet and Trotter

def test_floquet_commuting_layers():
    fe = floquet_effective_h(ki(n=4, J=0.0, h=0.0, b=0.8))
    assert np.allclose(fe.correction, 0)


def test_floquet_correction_hermitian_traceless():
    m = QcaModel(KitaevFloquet(0.3, 0.5, 0.7, 0.1, 0.2, 0.15), 0.2, LatticeSpec.hexagon())
    fe = floquet_effective_h(m)
    assert np.allclose(fe.correction, fe.correction.conj().T)
    assert abs(np.trace(fe.correction)) < 1e-10
    assert len(fe.pairwise) == 3


def test_bch_residual_is_second_order():
    m = QcaModel(TwoLocal(0.5, -0.3, 0.4, 0.2, 0.1, -0.2), 1.0, chain(4))
    taus = np.array([0.02, 0.04, 0.08])
    res = [bch_residual(m.with_tau(t)) for t in taus]
    p, _ = fit_power_law(taus, res)
    assert 1.8 < p < 2.2


def test_trotter_error_quadratic_and_extensive():
    def err(n, tau):
        return trotter_error(QcaModel(TwoLocal(0.5, -0.3, 0.4, 0.2, 0.1, -0.2), tau, chain(n)))

    taus = np.logspace(-3, -1, 7)
    p, C = fit_power_law(taus, [err(6, t) for t in taus])
    assert abs(p - 2) < 0.2
    # prefactor per site is stable
    C_small = fit_power_law(taus, [err(4, t) for t in taus])[1]
    assert 0.5 < (C / 6) / (C_small / 4) < 2
