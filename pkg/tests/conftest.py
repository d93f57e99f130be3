"""Shared fixtures and independent oracles."""

import numpy as np
import pytest

from adiabatic_elim.linalg import dag, kron, map_matrix, partial_trace, vectorize, devectorize
from adiabatic_elim.lindblad import SuperOperator, build_generator, dissipator_superop, steady_state


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rand_matrix(rng, d, m=None):
    m = d if m is None else m
    return (rng.normal(size=(d, m)) + 1j * rng.normal(size=(d, m))) / np.sqrt(2)


def rand_density(rng, d, rank=None):
    G = rand_matrix(rng, d, rank or d)
    rho = G @ dag(G)
    return rho / np.trace(rho)


def direct_lindblad(H, jumps):
    """Generator written straight from the master equation, as a callable."""
    def f(rho):
        out = -1j * (H @ rho - rho @ H)
        for L in jumps:
            LdL = dag(L) @ L
            out = out + L @ rho @ dag(L) - 0.5 * (LdL @ rho + rho @ LdL)
        return out
    return f


def rk4(L: SuperOperator, rho0, t, h):
    """Fixed-step classical Runge-Kutta on vec(rho)."""
    M = L.matrix
    v = vectorize(rho0).astype(complex)
    n = int(np.ceil(t / h))
    h = t / n
    for _ in range(n):
        k1 = M @ v
        k2 = M @ (v + 0.5 * h * k1)
        k3 = M @ (v + 0.5 * h * k2)
        k4 = M @ (v + h * k3)
        v = v + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return devectorize(v, L.dim)


def joint_second_order(LA_joint: SuperOperator, Lint: SuperOperator, rho_A, dA, dB) -> SuperOperator:
    """``rho_s -> tr_A Lint(K1(rho_s))`` computed entirely on the joint space.

    ``K1`` solves ``-LA_joint(K1) = Lint(rho_A (x) rho_s) - rho_A (x) tr_A Lint(rho_A (x) rho_s)``
    with ``tr_A K1 = 0``, by a plain least-squares solve of the stacked system.
    """
    n = dA * dB
    # rows implementing tr_A on column-stacked joint vectors
    TA = map_matrix(lambda X: partial_trace(X, dA, dB, "A"), n, dB)
    Big = np.vstack([-LA_joint.matrix, TA])

    def f(rs):
        R = Lint(kron(rho_A, rs))
        R = R - kron(rho_A, partial_trace(R, dA, dB, "A"))
        rhs = np.concatenate([vectorize(R), np.zeros(dB * dB)])
        K1 = devectorize(np.linalg.lstsq(Big, rhs, rcond=None)[0], n)
        return partial_trace(Lint(K1), dA, dB, "A")

    return SuperOperator(map_matrix(f, dB))


def fast_steady(spec, extra=None):
    L = build_generator(spec)
    if extra is not None:
        L = L + dissipator_superop(extra)
    return steady_state(L)
