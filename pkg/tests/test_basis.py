"""Collective basis bookkeeping and state-vector arithmetic."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rydghz.basis import (
    BasisError,
    StateVector,
    build_basis,
    collective_state,
    superposition,
)

n_atoms_st = st.integers(min_value=1, max_value=12)


@given(n_atoms_st)
def test_dimension_is_2n_plus_1(n):
    assert build_basis(n).dim == 2 * n + 1


@given(n_atoms_st)
def test_label_index_round_trip(n):
    basis = build_basis(n)
    for idx in range(basis.dim):
        assert basis.index_of(basis.label_of(idx)) == idx
    assert len(basis.labels()) == basis.dim
    assert len(set(basis.labels())) == basis.dim


def test_ordering_ground_manifold_first():
    basis = build_basis(3)
    assert basis.labels() == ["g_0", "g_1", "g_2", "g_3", "r_0", "r_1", "r_2"]
    assert basis.index_g(0) == 0
    assert basis.index_g(3) == 3
    assert basis.index_r(0) == 4
    assert basis.index_r(2) == 6


@given(n_atoms_st)
def test_occupation_counts(n):
    """g_m holds N-m a-atoms and m b-atoms, r_m holds N-1-m and m."""
    basis = build_basis(n)
    na, nb = basis.a_counts(), basis.b_counts()
    for m in range(n + 1):
        assert na[basis.index_g(m)] == n - m
        assert nb[basis.index_g(m)] == m
    for m in range(n):
        assert na[basis.index_r(m)] == n - 1 - m
        assert nb[basis.index_r(m)] == m
    mask = basis.rydberg_mask()
    assert not mask[: n + 1].any()
    assert mask[n + 1 :].all()
    # every configuration accounts for all N atoms
    assert np.all(na + nb + mask.astype(int) == n)


def test_bad_labels_and_indices():
    basis = build_basis(2)
    with pytest.raises(BasisError):
        basis.index_of("g_3")
    with pytest.raises(BasisError):
        basis.index_of("r_2")
    with pytest.raises(BasisError):
        basis.index_of("x_0")
    with pytest.raises(BasisError):
        basis.label_of(5)
    with pytest.raises(BasisError):
        build_basis(0)


def test_collective_state_is_unit_basis_vector():
    basis = build_basis(4)
    state = collective_state(basis, "r_2")
    assert state.norm2 == pytest.approx(1.0, abs=1e-15)
    assert state.population("r_2") == 1.0
    assert sum(state.populations().values()) == pytest.approx(1.0, abs=1e-15)


@given(
    st.integers(min_value=1, max_value=6),
    st.lists(
        st.complex_numbers(
            min_magnitude=0.01,
            max_magnitude=3.0,
            allow_nan=False,
            allow_infinity=False,
        ),
        min_size=2,
        max_size=4,
    ),
)
def test_superposition_normalizes(n, weights):
    basis = build_basis(n)
    labels = basis.labels()[: len(weights)]
    state = superposition(basis, dict(zip(labels, weights)))
    assert state.norm2 == pytest.approx(1.0, abs=1e-12)


def test_superposition_rejects_zero_weights():
    basis = build_basis(2)
    with pytest.raises(BasisError):
        superposition(basis, {"g_0": 0.0, "r_1": 0.0})


def test_overlap_and_fidelity():
    basis = build_basis(3)
    a = collective_state(basis, "g_0")
    b = collective_state(basis, "g_3")
    plus = superposition(basis, {"g_0": 1.0, "g_3": 1.0})
    assert a.overlap(b) == 0.0
    assert plus.overlap(a) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert plus.fidelity(a) == pytest.approx(0.5, abs=1e-15)
    phase = StateVector(basis, plus.amplitudes * np.exp(0.71j))
    assert plus.fidelity(phase) == pytest.approx(1.0, abs=1e-12)


def test_normalized_rescales():
    basis = build_basis(2)
    state = StateVector(basis, 3.0 * collective_state(basis, "g_1").amplitudes)
    assert state.norm2 == pytest.approx(9.0)
    assert state.normalized().norm2 == pytest.approx(1.0, abs=1e-15)


def test_state_copy_is_independent():
    basis = build_basis(2)
    a = collective_state(basis, "g_0")
    b = a.copy()
    b.amplitudes[0] = 0.0
    assert a.population("g_0") == 1.0


def test_mismatched_shapes_and_bases_rejected():
    basis = build_basis(2)
    with pytest.raises(BasisError):
        StateVector(basis, np.zeros(4, dtype=complex))
    a = collective_state(build_basis(2), "g_0")
    b = collective_state(build_basis(3), "g_0")
    with pytest.raises(BasisError):
        a.overlap(b)
