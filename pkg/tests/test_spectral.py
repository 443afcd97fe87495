import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssh_hhg.model import ChainSpec, build_hoppings, chiral_operator
from ssh_hhg.spectral import (
    SpectralError,
    band_edge,
    chiral_partner_residual,
    classify_edge_states,
    diagonalize,
    write_eigen_tables,
)

OMEGA_L = 0.0075

chains = st.builds(ChainSpec, n_cells=st.integers(1, 60), a=st.just(2.0),
                   delta=st.sampled_from([0.15, -0.15, 0.1, -0.1, 0.05, -0.05]))


def test_dimer_energies():
    d = diagonalize(ChainSpec(1, 2.0, 0.15))
    v = build_hoppings(d.chain).v
    np.testing.assert_allclose(d.energies, [-abs(v), abs(v)], atol=1e-16)
    assert d.occupied == (0,)


@given(chains)
def test_decomposition_invariants(chain):
    d = diagonalize(chain)
    assert np.all(np.diff(d.energies) >= 0)
    s = d.states
    assert np.max(np.abs(s @ s.T - np.eye(chain.n_sites))) < 1e-12
    assert np.max(np.abs(s.T @ s - np.eye(chain.n_sites))) < 1e-12
    assert np.max(np.abs(d.energies + d.energies[::-1])) < 1e-12
    assert len(d.occupied) == chain.n_cells
    assert set(d.edge_indices) <= {chain.n_cells - 1, chain.n_cells}
    assert chiral_partner_residual(d) < 1e-10
    # sign convention: largest-magnitude component positive
    pivot = np.argmax(np.abs(s), axis=0)
    assert np.all(s[pivot, np.arange(s.shape[1])] > 0)


def test_short_topological_has_two_mid_gap_states():
    d = diagonalize(ChainSpec(12, 2.0, -0.15))
    mid = np.flatnonzero(np.abs(d.energies) < 1e-3)
    assert mid.tolist() == [11, 12]
    assert d.edge_indices == (11, 12)
    # splitting bounded by the (|v|/|w|)^n estimate
    hop = build_hoppings(d.chain)
    assert np.max(np.abs(d.energies[mid])) < abs(hop.w) * (abs(hop.v) / abs(hop.w)) ** 12


def test_long_trivial_gap_edge():
    d = diagonalize(ChainSpec(50, 2.0, 0.15))
    assert d.edge_indices == ()
    assert np.sum(np.abs(d.energies) < band_edge(d.chain)) == 0
    assert d.energies[50] == pytest.approx(0.0824, abs=1e-3)
    assert d.bulk_gap() / OMEGA_L == pytest.approx(22, abs=0.5)


def test_long_topological_edge_states_localized():
    edges = classify_edge_states(diagonalize(ChainSpec(50, 2.0, -0.15)))
    assert edges.indices == (49, 50)
    assert all(w > 0.99 for w in edges.edge_weight.values())
    assert all(edges.localized.values())


def test_trivial_and_zero_threshold_give_empty_sets():
    assert classify_edge_states(diagonalize(ChainSpec(50, 2.0, 0.15))).indices == ()
    assert classify_edge_states(diagonalize(ChainSpec(12, 2.0, -0.15)), 0.0).indices == ()


def test_threshold_in_bulk_band_rejected():
    d = diagonalize(ChainSpec(12, 2.0, -0.15))
    with pytest.raises(ValueError, match="bulk band"):
        classify_edge_states(d, 2 * band_edge(d.chain))
    with pytest.raises(ValueError):
        classify_edge_states(d, -1e-3)


def test_misclassification_detected():
    # feed bulk-looking energies below the threshold
    chain = ChainSpec(4, 2.0, -0.15)
    energies = np.array([-0.3, -0.2, -0.01, -0.001, 0.001, 0.01, 0.2, 0.3])
    with pytest.raises(SpectralError):
        classify_edge_states(energies, chain=chain, states=np.eye(8))


def test_default_threshold_is_half_bulk_gap():
    d = diagonalize(ChainSpec(12, 2.0, -0.15))
    hop = build_hoppings(d.chain)
    assert d.edges.threshold == pytest.approx(0.5 * 2 * abs(abs(hop.v) - abs(hop.w)), rel=1e-15)


def test_edge_splitting_shrinks_with_length():
    e12 = diagonalize(ChainSpec(12, 2.0, -0.15))
    e50 = diagonalize(ChainSpec(50, 2.0, -0.15))
    assert np.max(np.abs(e50.energies[list(e50.edge_indices)])) < np.max(np.abs(e12.energies[list(e12.edge_indices)]))


@pytest.mark.parametrize("n_cells", [12, 50])
def test_exactly_one_edge_state_occupied(n_cells):
    d = diagonalize(ChainSpec(n_cells, 2.0, -0.15))
    lo, hi = d.edge_indices
    assert lo in d.occupied and hi not in d.occupied
    assert d.energies[lo] < d.energies[hi]
    up = diagonalize(ChainSpec(n_cells, 2.0, -0.15), edge_occupation="upper")
    assert hi in up.occupied and lo not in up.occupied


def test_chiral_partner_maps_edge_pair():
    d = diagonalize(ChainSpec(12, 2.0, -0.15))
    g = chiral_operator(d.chain)
    lo, hi = d.edge_indices
    assert abs(abs(d.states[:, lo] @ (g * d.states[:, hi])) - 1) < 1e-12


def test_eigen_tables(tmp_path):
    d = diagonalize(ChainSpec(3, 2.0, -0.15))
    write_eigen_tables(d, tmp_path)
    with open(tmp_path / "eigenvalues.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["energy"]) for r in rows] == d.energies.tolist()
    assert [int(r["occupied"]) for r in rows] == d.occupied_mask.astype(int).tolist()
    assert sum(int(r["edge"]) for r in rows) == 2
    data = np.loadtxt(tmp_path / "eigenvectors.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 2:], d.states)
