import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adiabatic_elim.errors import DimensionError
from adiabatic_elim.linalg import (
    choi_matrix,
    dag,
    devectorize,
    hermitize,
    is_hermitian,
    is_psd,
    is_trace_one,
    kron,
    map_matrix,
    partial_trace,
    trace_norm,
    vectorize,
)
from conftest import rand_density, rand_matrix


def kron_loop(A, B):
    rA, cA = A.shape
    rB, cB = B.shape
    out = np.zeros((rA * rB, cA * cB), dtype=complex)
    for i in range(rA):
        for j in range(cA):
            for k in range(rB):
                for l in range(cB):
                    out[i * rB + k, j * cB + l] = A[i, j] * B[k, l]
    return out


def ptrace_basis(X, dA, dB, over):
    """Partial trace by summing <e_i| (x) 1 ... blocks."""
    if over == "A":
        out = np.zeros((dB, dB), dtype=complex)
        for i in range(dA):
            e = np.zeros((dA, 1))
            e[i] = 1
            P = np.kron(e, np.eye(dB))
            out += P.T @ X @ P
        return out
    out = np.zeros((dA, dA), dtype=complex)
    for i in range(dB):
        e = np.zeros((dB, 1))
        e[i] = 1
        P = np.kron(np.eye(dA), e)
        out += P.T @ X @ P
    return out


def test_kron_matches_index_formula(rng):
    A, B = rand_matrix(rng, 2, 3), rand_matrix(rng, 3, 2)
    assert np.allclose(kron(A, B), kron_loop(A, B), atol=1e-14)


@pytest.mark.parametrize("dA,dB", [(2, 3), (3, 2), (4, 4), (1, 3)])
def test_partial_trace_matches_basis_sum(rng, dA, dB):
    X = rand_matrix(rng, dA * dB)
    assert np.allclose(partial_trace(X, dA, dB, "A"), ptrace_basis(X, dA, dB, "A"), atol=1e-13)
    assert np.allclose(partial_trace(X, dA, dB, "B"), ptrace_basis(X, dA, dB, "B"), atol=1e-13)


def test_partial_trace_of_product(rng):
    A, B = rand_matrix(rng, 3), rand_matrix(rng, 2)
    assert np.allclose(partial_trace(kron(A, B), 3, 2, "A"), np.trace(A) * B)
    assert np.allclose(partial_trace(kron(A, B), 3, 2, "B"), np.trace(B) * A)


def test_partial_trace_bad_shape():
    with pytest.raises(DimensionError):
        partial_trace(np.eye(5), 2, 3)
    with pytest.raises(ValueError):
        partial_trace(np.eye(6), 2, 3, over="C")


def test_vec_is_column_stacking():
    X = np.array([[1, 2], [3, 4]])
    assert np.array_equal(vectorize(X), [1, 3, 2, 4])
    assert np.array_equal(devectorize(vectorize(X)), X)


def test_vec_identity(rng):
    A, X, B = rand_matrix(rng, 3), rand_matrix(rng, 3), rand_matrix(rng, 3)
    assert np.allclose(vectorize(A @ X @ B), np.kron(B.T, A) @ vectorize(X), atol=1e-12)


def test_devectorize_rejects_non_square_length():
    with pytest.raises(DimensionError):
        devectorize(np.zeros(5))
    with pytest.raises(DimensionError):
        devectorize(np.zeros(9), 2)


def test_predicates(rng):
    rho = rand_density(rng, 3)
    assert is_hermitian(rho) and is_psd(rho) and is_trace_one(rho)
    assert not is_hermitian(rand_matrix(rng, 3))
    assert not is_psd(-rho)
    assert not is_trace_one(2 * rho)
    assert not is_hermitian(np.zeros((2, 3)))
    assert np.allclose(hermitize(rho + 1e-3j * np.eye(3)), rho)


def test_trace_norm_of_hermitian_is_abs_eig_sum(rng):
    H = hermitize(rand_matrix(rng, 4))
    assert trace_norm(H) == pytest.approx(np.abs(np.linalg.eigvalsh(H)).sum(), rel=1e-12)


def test_map_matrix_and_choi_of_identity_and_transpose():
    d = 3
    I_map = map_matrix(lambda X: X, d)
    assert np.allclose(I_map, np.eye(d * d))
    J = choi_matrix(I_map, d)
    # Choi of identity is the unnormalized maximally entangled projector in the (a, out) ordering
    Jref = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            Jref[a * d + a, b * d + b] = 1
    assert np.allclose(J, Jref)
    T = choi_matrix(map_matrix(lambda X: X.T, d), d)
    assert np.linalg.eigvalsh(T).min() == pytest.approx(-1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 31 - 1))
def test_property_partial_trace_preserves_trace(dA, dB, seed):
    rng = np.random.default_rng(seed)
    X = rand_matrix(rng, dA * dB)
    t = np.trace(X)
    assert np.trace(partial_trace(X, dA, dB, "A")) == pytest.approx(t, abs=1e-10)
    assert np.trace(partial_trace(X, dA, dB, "B")) == pytest.approx(t, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
def test_property_vec_roundtrip_and_inner_product(d, seed):
    rng = np.random.default_rng(seed)
    X, Y = rand_matrix(rng, d), rand_matrix(rng, d)
    assert np.array_equal(devectorize(vectorize(X), d), X)
    assert np.vdot(vectorize(X), vectorize(Y)) == pytest.approx(np.trace(dag(X) @ Y), abs=1e-10)
