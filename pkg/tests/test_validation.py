import logging

import numpy as np
import pytest

from adiabatic_elim import operators as ops
from adiabatic_elim import reduce
from adiabatic_elim.elim_hamiltonian import build_reduced_model
from adiabatic_elim.linalg import dag, kron, map_matrix
from adiabatic_elim.lindblad import SuperOperator, steady_state, build_generator
from adiabatic_elim.validation import (
    EXAMPLES,
    audit_properties,
    conjecture_audit,
    cptp_check,
    epsilon_scaling,
    example_qubit_tls,
    example_squeezed,
    example_two_photon,
    fit_slope,
    full_generator,
    full_trajectory_invariants,
    qubit_tls_closed_form,
    qubit_tls_coefficients,
    qubit_tls_generator,
    random_pure_spec,
    trajectory_error,
    trajectory_errors,
)
from conftest import rand_density

sm, sp, sz = ops.sigma_minus(), ops.sigma_plus(), ops.sigma_z()


def test_full_generator_qubit_tls_master_equation(rng):
    """Full model written out for the driven-decaying qubit with a dispersive partner."""
    u, gamma, chi = 0.3, 1.0, 0.01
    s = example_qubit_tls(u, gamma, chi)
    I2 = np.eye(2)
    smA = kron(sm, I2)
    drive = kron(sp - sm, I2)
    H = chi * kron(sz, sz)
    L = full_generator(s)
    for _ in range(5):
        rho = rand_density(rng, 4)
        ref = u * (drive @ rho - rho @ drive) - 1j * (H @ rho - rho @ H)
        ref += gamma * (smA @ rho @ dag(smA) - 0.5 * (dag(smA) @ smA @ rho + rho @ dag(smA) @ smA))
        assert np.allclose(L(rho), ref, atol=1e-13)


def test_qubit_tls_generator_equals_pipeline():
    u, gamma, chi = 0.3, 1.0, 0.01
    m = build_reduced_model(example_qubit_tls(u, gamma, chi))
    assert np.allclose(m.generator(2).matrix, qubit_tls_generator(u, gamma, chi).matrix, atol=1e-14)
    h, r = qubit_tls_coefficients(m)
    assert (h, r) == pytest.approx(qubit_tls_closed_form(u, gamma, chi), rel=1e-9)


def test_cptp_check_identity_and_transpose():
    ident = SuperOperator(np.eye(9))
    m, d = cptp_check(ident, 3)
    assert m == pytest.approx(0.0, abs=1e-14) and d < 1e-14
    m, d = cptp_check(lambda X: X.T, 2)
    assert m == pytest.approx(-1.0) and d < 1e-14
    m, d = cptp_check(lambda X: 2 * X, 2)
    assert d == pytest.approx(1.0)


def test_cptp_check_replacement_channel(rng):
    sigma = rand_density(rng, 3)
    m, d = cptp_check(lambda X: np.trace(X) * sigma, 2, 3)
    assert m >= -1e-14 and d < 1e-14


def test_fit_slope_exact():
    e = np.array([0.1, 0.05, 0.025])
    assert fit_slope(e, 3 * e ** 2) == pytest.approx(2.0)


def test_trajectory_errors_share_full_run():
    s = example_qubit_tls(0.3, 1.0, 0.01)
    m = build_reduced_model(s)
    rho = ops.plus_state()
    both = trajectory_errors(s, m, 1.0, 20, rho)
    assert both[2] == pytest.approx(trajectory_error(s, m, 1.0, 20, rho, order=2))
    assert both[2] < both[1]


def test_epsilon_scaling_qubit_tls():
    rep = epsilon_scaling(lambda e: example_qubit_tls(0.3, 1.0, e), [0.02, 0.01, 0.005, 0.0025],
                          1.0, ops.plus_state(), 30)
    assert 0.7 <= rep.fitted_slope_order1 <= 1.4
    assert 1.7 <= rep.fitted_slope_order2 <= 2.5
    assert len(rep.rows()) == 4
    assert rep.epsilons == sorted(rep.epsilons, reverse=True)


def test_epsilon_scaling_warns_on_short_span(caplog):
    with caplog.at_level(logging.WARNING):
        epsilon_scaling(lambda e: example_qubit_tls(0.3, 1.0, e), [0.02, 0.015, 0.01, 0.008], 1.0, None, 10)
    assert "decade" in caplog.text
    with pytest.raises(ValueError):
        epsilon_scaling(lambda e: example_qubit_tls(0.3, 1.0, e), [0.02, 0.01], 1.0)


def test_epsilon_scaling_flags_round_off():
    # undriven qubit: the reduced model is exact, errors are round-off
    rep = epsilon_scaling(lambda e: example_qubit_tls(0.0, 1.0, e), [0.02, 0.01, 0.005, 0.001], 1.0, None, 10)
    assert any("round-off" in f for f in rep.metadata["flags"])
    assert np.isnan(rep.fitted_slope_order2)


def test_full_trajectory_invariants(rng):
    s = example_qubit_tls(0.3, 1.0, 0.01)
    inv = full_trajectory_invariants(s, kron(ops.ground_projector(), ops.plus_state()), 1.0, 10)
    assert inv["full_max_trace_drift"] < 1e-10
    assert inv["full_min_eigenvalue"] > -1e-10


def test_examples_build_and_reduce():
    assert set(EXAMPLES) == {"qubit_tls", "two_photon", "squeezed"}
    assert reduce(example_qubit_tls()).epsilon == pytest.approx(0.01)
    assert reduce(example_two_photon(fockN=5)).channels
    with pytest.raises(ValueError):
        example_squeezed(1.0, 0.3)
    with pytest.raises(ValueError):
        example_two_photon(kappa_p=2.0)
    with pytest.raises(ValueError):
        example_two_photon(fockN=2)
    with pytest.raises(ValueError):
        example_qubit_tls(gamma=0.0)


def test_random_pure_spec_has_pure_steady_state(rng):
    for d in (2, 3, 4):
        rho = steady_state(build_generator(random_pure_spec(rng, d)))
        assert rho[0, 0].real == pytest.approx(1.0, abs=1e-10)


def test_audit_properties_pass():
    res = audit_properties(20, seed=1)
    assert all(r.failed == 0 for r in res.values()), {k: r.failures for k, r in res.items()}
    assert res["kernel_inclusion"].passed > 0


def test_conjecture_audit_clean():
    res = conjecture_audit(100, seed=3)
    assert res.failed == 0 and res.passed > 0


def test_map_matrix_vs_superoperator_call(rng):
    L = full_generator(example_qubit_tls())
    M = map_matrix(L, 4)
    assert np.allclose(M, L.matrix)
