import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rydqca.errors import ConfigurationError, GeometryError
from rydqca.lattice import (Atom, AtomArray, GadgetAssignment, LatticeSpec, Species, blockade_audit,
                            build_array, lattice_graph, pair_distances, pxp_chain_reference)


def test_chain_graph_open_and_periodic():
    g = lattice_graph(LatticeSpec.chain(5))
    assert g.n_sites == 5 and len(g.bonds) == 4
    gp = lattice_graph(LatticeSpec.chain(5, "Periodic"))
    assert len(gp.bonds) == 5
    assert all(gp.degree()[i] == 2 for i in range(5))


def test_periodic_extent_too_small():
    with pytest.raises(ConfigurationError):
        LatticeSpec.chain(2, "Periodic")


def test_unknown_family_and_bad_extent():
    with pytest.raises(ConfigurationError):
        LatticeSpec("Kagome", (3, 3))
    with pytest.raises(ConfigurationError):
        LatticeSpec("Square", (3,))
    with pytest.raises(ConfigurationError):
        LatticeSpec.chain(0)


def test_honeycomb_periodic_is_three_regular_with_one_bond_per_class():
    g = lattice_graph(LatticeSpec("Honeycomb", (3, 3), "Periodic"))
    assert g.n_sites == 18 and len(g.bonds) == 27
    for c in "XYZ":
        assert np.all(g.degree(c) == 1)
    assert np.all(g.degree() == 3)


def test_hexagon_plaquette():
    g = lattice_graph(LatticeSpec.hexagon())
    assert g.n_sites == 6 and len(g.bonds) == 6
    assert sorted(b.bond_class for b in g.bonds) == ["X", "X", "Y", "Y", "Z", "Z"]
    assert np.all(g.degree() == 2)
    lengths = [np.linalg.norm(g.positions[i] - g.positions[j]) for i, j in (b.sites for b in g.bonds)]
    assert np.allclose(lengths, 2.0)


def test_square_bond_lengths_and_classes():
    g = lattice_graph(LatticeSpec("Square", (2, 3)))
    assert len(g.bonds) == 2 * 2 + 3 * 1
    assert {b.bond_class for b in g.bonds} == {"x", "y"}


def test_build_array_ids_and_edges():
    arr = build_array(LatticeSpec.chain(3), 2)
    assert arr.data_ids == [0, 1, 2]
    assert arr.ancilla_ids == [3, 4, 5, 6]
    members = arr.gadget_members()
    assert members == {0: [3, 4], 1: [5, 6]}
    assert frozenset((3, 4)) in arr.blockade_edges
    assert frozenset((3, 0)) in arr.blockade_edges and frozenset((3, 1)) in arr.blockade_edges
    assert frozenset((3, 2)) not in arr.blockade_edges
    assert not any(e <= set(arr.data_ids) for e in arr.blockade_edges)


def test_gadget_assignment_validation():
    spec = LatticeSpec.hexagon()
    with pytest.raises(ConfigurationError):
        build_array(spec, {"X": 1, "Y": 2})
    with pytest.raises(ConfigurationError):
        build_array(spec, {"X": 1, "Y": 2, "Z": 4})
    arr = build_array(spec, GadgetAssignment({"X": 3, "Y": 2, "Z": 1}, overrides={0: 2}))
    assert arr.gadget_sizes[0] == 2


def test_array_json_round_trip():
    arr = build_array(LatticeSpec.hexagon(), {"Z": 1, "Y": 2, "X": 3})
    back = AtomArray.from_dict(arr.to_dict())
    assert back.blockade_edges == arr.blockade_edges
    assert [a.species for a in back.atoms] == [a.species for a in arr.atoms]
    assert back.gadget_sizes == arr.gadget_sizes


def test_validate_rejects_data_data_edge():
    atoms = (Atom(0, (0, 0), Species.DATA), Atom(1, (1, 0), Species.DATA))
    with pytest.raises(ConfigurationError):
        AtomArray(atoms, frozenset({frozenset((0, 1))})).validate()


def test_audit_honeycomb_closed_form():
    arr = build_array(LatticeSpec("Honeycomb", (3, 3), "Periodic"), 1)
    audit = blockade_audit(arr)
    # nearest unwanted data-ancilla distance is sqrt(7) d; three of them per blockade of two
    assert audit.ratio_unwanted_over_blockade == pytest.approx(2 / 343, rel=1e-12)
    assert audit.closed_form == pytest.approx((6 / 3) * 7 ** -3, rel=1e-12)
    assert audit.worst_distance == pytest.approx(np.sqrt(7), rel=1e-12)


def test_audit_chain_reference():
    audit = blockade_audit(pxp_chain_reference(8))
    assert audit.ratio_unwanted_over_blockade == pytest.approx(1 / 64, rel=1e-12)


def test_audit_rejects_coincident_atoms_and_bad_exponent():
    atoms = (Atom(0, (0, 0), Species.DATA), Atom(1, (0, 0), Species.ANCILLA))
    arr = AtomArray(atoms, frozenset({frozenset((0, 1))}))
    with pytest.raises(GeometryError):
        blockade_audit(arr)
    with pytest.raises(ConfigurationError):
        blockade_audit(pxp_chain_reference(4), exponent=0)


def test_pair_distances_minimum_image():
    arr = pxp_chain_reference(6)
    d = pair_distances(arr)
    assert d[0, 5] == pytest.approx(1.0)
    assert d[0, 3] == pytest.approx(3.0)


@given(st.integers(2, 7), st.integers(1, 3))
def test_chain_array_counts(L, S):
    arr = build_array(LatticeSpec.chain(L), S)
    assert arr.n_atoms == L + S * (L - 1)
    # every ancilla blockades exactly its two endpoints and its S-1 gadget partners
    nb = arr.neighbours()
    for a in arr.ancilla_ids:
        assert len(nb[a]) == 2 + (S - 1)


@given(st.integers(3, 5), st.integers(3, 5), st.sampled_from(["Square", "Honeycomb"]))
def test_periodic_2d_regular(Lx, Ly, family):
    g = lattice_graph(LatticeSpec(family, (Lx, Ly), "Periodic"))
    deg = g.degree()
    assert len(set(deg.tolist())) == 1
    assert deg[0] == (4 if family == "Square" else 3)


@given(st.integers(2, 6))
def test_bfs_distances_chain(L):
    g = lattice_graph(LatticeSpec.chain(L))
    assert list(g.distances_from(0)) == list(range(L))
