"""Product-space oracle: embedding geometry and dynamical closure."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from rydghz.basis import build_basis, collective_state, superposition
from rydghz.fullspace import (
    ORACLE_MAX_ATOMS,
    FullSpaceOracle,
    OracleError,
    run_equivalence_check,
)


def test_dimension_counts_blockaded_configurations():
    # 2^N all-ground strings plus N * 2^(N-1) single-excitation strings
    for n in range(1, ORACLE_MAX_ATOMS + 1):
        oracle = FullSpaceOracle(n)
        assert oracle.dim == 2**n + n * 2 ** (n - 1)
        assert all(s.count(2) <= 1 for s in oracle.states)


def test_size_guard():
    with pytest.raises(OracleError):
        FullSpaceOracle(ORACLE_MAX_ATOMS + 1)
    with pytest.raises(OracleError):
        FullSpaceOracle(0)
    with pytest.raises(OracleError):
        FullSpaceOracle(3).embedding(build_basis(4))


@given(st.integers(min_value=1, max_value=ORACLE_MAX_ATOMS))
def test_embedding_is_an_isometry(n):
    oracle = FullSpaceOracle(n)
    e = oracle.embedding(build_basis(n))
    np.testing.assert_allclose(e.T @ e, np.eye(2 * n + 1), atol=1e-14)


@given(st.integers(min_value=1, max_value=ORACLE_MAX_ATOMS))
def test_embed_full_preserves_inner_products(n):
    basis = build_basis(n)
    oracle = FullSpaceOracle(n)
    rng = np.random.default_rng(n)
    for _ in range(5):
        x = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        y = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
        sx = superposition(basis, dict(zip(basis.labels(), x)))
        sy = superposition(basis, dict(zip(basis.labels(), y)))
        direct = sx.overlap(sy)
        embedded = complex(np.vdot(oracle.embed_full(sx), oracle.embed_full(sy)))
        assert embedded == pytest.approx(direct, abs=1e-13)


@settings(max_examples=10)
@given(st.integers(min_value=1, max_value=ORACLE_MAX_ATOMS), st.integers(0, 2**31 - 1))
def test_chain_equals_projected_full_hamiltonian(n, seed):
    report = run_equivalence_check(n, n_draws=10, seed=seed)
    assert report.passed
    assert report.max_block_deviation <= 1e-12
    assert report.max_closure_defect <= 1e-12


def test_equivalence_check_detects_a_corrupted_entry():
    clean = run_equivalence_check(3, n_draws=5)
    assert clean.passed
    broken = run_equivalence_check(3, n_draws=5, corrupt=(0, 4, 1e-9))
    assert not broken.passed
    assert broken.max_block_deviation == pytest.approx(1e-9, rel=1e-6)
    assert broken.worst_entry == (0, 4)


def test_symmetric_subspace_is_dynamically_closed():
    """Evolving an embedded collective state never leaks out of the image."""
    n = 3
    basis = build_basis(n)
    oracle = FullSpaceOracle(n)
    e = oracle.embedding(basis)
    outside = np.eye(oracle.dim) - e @ e.T
    rng = np.random.default_rng(11)
    psi = oracle.embed_full(collective_state(basis, "g_0")).astype(complex)
    for _ in range(4):
        h = oracle.hamiltonian(*rng.uniform(-2.0, 2.0, size=4))
        psi = expm(-1j * h * 0.7) @ psi
        assert np.linalg.norm(outside @ psi) <= 1e-12
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


def test_full_hamiltonian_blockade_has_no_double_excitation_paths():
    """Couplings out of singly excited strings stay inside the basis."""
    oracle = FullSpaceOracle(2)
    h = oracle.hamiltonian(1.0, 1.0, 0.0, 0.0)
    # every matrix element connects states differing in exactly one atom
    for i, si in enumerate(oracle.states):
        for j, sj in enumerate(oracle.states):
            if h[i, j] != 0.0 and i != j:
                assert sum(a != b for a, b in zip(si, sj)) == 1
