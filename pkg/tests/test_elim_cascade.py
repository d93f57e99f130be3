import numpy as np
import pytest
import scipy.integrate as si
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from adiabatic_elim import operators as ops
from adiabatic_elim.config import overrides
from adiabatic_elim.elim_cascade import (
    alpha_beta_form,
    cascade_alpha_beta,
    cascade_fast_generator,
    cascade_reduced_model,
    channel_residuals,
    condition_defect,
    solve_channel_coefficients,
)
from adiabatic_elim.errors import ConjectureViolation, EliminationError, NumericalError, TruncationError
from adiabatic_elim.linalg import dag, kron, partial_trace, trace_norm, vectorize
from adiabatic_elim.lindblad import SubsystemSpec, dissipator_superop, gks_decompose, spectral_gap
from adiabatic_elim.system import BipartiteSystem, CascadeCoupling, HamiltonianCoupling
from adiabatic_elim.validation import (
    cptp_check,
    example_squeezed,
    full_generator,
    interaction_superop,
    random_cascade_system,
    random_spec,
)
from conftest import joint_second_order, rand_density, rand_matrix

sm, sz = ops.sigma_minus(), ops.sigma_z()


def test_full_generator_matches_cascade_master_equation(rng):
    """Check the joint model against the input-output form with a single collapse ``a + eps b``."""
    s = random_cascade_system(rng, 2, 3, epsilon=0.07)
    dA, dB = s.dims
    eps = s.epsilon
    a = kron(s.coupling.a_eff, np.eye(dB))
    b = kron(np.eye(dA), s.coupling.b)
    HA = kron(s.A.hamiltonian, np.eye(dB))
    HB = kron(np.eye(dA), s.B.hamiltonian)
    c = a + eps * b
    Hc = HA + eps ** 2 * HB + 0.5j * eps * (dag(a) @ b - dag(b) @ a)
    jumps = [c] + [np.sqrt(r) * kron(L, np.eye(dB)) for L, r in s.A.jumps]
    jumps += [eps * np.sqrt(r) * kron(np.eye(dA), L) for L, r in s.B.jumps]
    L = full_generator(s)
    for _ in range(5):
        rho = rand_density(rng, dA * dB)
        ref = -1j * (Hc @ rho - rho @ Hc)
        for J in jumps:
            ref = ref + J @ rho @ dag(J) - 0.5 * (dag(J) @ J @ rho + rho @ dag(J) @ J)
        assert np.allclose(L(rho), ref, atol=1e-12)


def test_second_order_matches_joint_space_oracle(rng):
    s = random_cascade_system(rng, 3, 2)
    m = cascade_reduced_model(s)
    LA = cascade_fast_generator(s.A, s.coupling.a_eff)
    ref = joint_second_order(LA.lift(2, "A"), interaction_superop(s), m.rho_barA, 3, 2)
    ref = ref + dissipator_superop(s.coupling.b)
    assert np.abs(ref.matrix - m.second_order_part().matrix).max() < 1e-11
    assert np.abs(ref.matrix - alpha_beta_form(m.alpha, m.beta, m.b).matrix).max() < 1e-11


def test_alpha_via_heisenberg_quadrature(rng):
    spec = random_spec(rng, 2)
    a = rand_matrix(rng, 2)
    LA = cascade_fast_generator(spec, a)
    from adiabatic_elim.lindblad import steady_state

    rho = steady_state(LA)
    alpha, beta = cascade_alpha_beta(LA, rho, a)
    Ld = LA.dual().matrix
    abar = a - np.trace(a @ rho) * np.eye(2)
    T = np.log(1e12) / spectral_gap(LA)

    def integrand(t):
        # both a and a^+ evolved in the Heisenberg picture, paired with rho-centred a^+ / a
        ea = (sla.expm(t * Ld) @ vectorize(a)).reshape(2, 2, order="F")
        ead = (sla.expm(t * Ld) @ vectorize(dag(a))).reshape(2, 2, order="F")
        return np.array([np.trace(dag(abar) @ ea @ rho), np.trace(dag(abar) @ ead @ rho)])

    val, _ = si.quad_vec(integrand, 0, T, epsabs=1e-12, epsrel=1e-12)
    assert alpha == pytest.approx(val[0], abs=1e-8)
    assert beta == pytest.approx(val[1], abs=1e-8)


def test_trivial_alpha_beta_for_coherent_like_fast_state():
    # undriven damped cavity: vacuum steady state, a rho = 0 => alpha = beta = 0
    n = 5
    a = ops.annihilation(n)
    s = BipartiteSystem(SubsystemSpec.empty(n), SubsystemSpec.empty(2), CascadeCoupling(a, sm, rate=2.0), 0.1)
    m = cascade_reduced_model(s)
    assert abs(m.alpha) < 1e-12 and abs(m.beta) < 1e-12
    (x1, y1), (x2, y2) = m.channel_coeffs
    assert x1 == pytest.approx(1.0) and abs(y1) < 1e-12 and x2 == 0 and y2 == 0
    assert len(m.channels) == 1 and np.allclose(m.channels[0], sm)


def test_displaced_cavity_first_order():
    # a coherent drive displaces the cavity; first order is the drive on b
    n, kappa, drive = 12, 1.0, 0.2
    a = ops.annihilation(n)
    H = 1j * drive * (dag(a) - a)
    s = BipartiteSystem(SubsystemSpec(n, H), SubsystemSpec.empty(2), CascadeCoupling(a, sm, rate=kappa), 0.05)
    m = cascade_reduced_model(s, audit=False)
    c = np.trace(np.sqrt(kappa) * a @ m.rho_barA)
    # coherent amplitude 2 drive / sqrt(kappa) in the output field sqrt(kappa) a
    assert c == pytest.approx(2 * drive / np.sqrt(kappa), abs=1e-6)
    H1 = m.first_order_hamiltonian
    assert np.allclose(H1, 1j * (np.conj(c) * sm - c * dag(sm)))
    # a coherent state has no fluctuations: alpha = beta = 0
    assert abs(m.alpha) < 1e-6 and abs(m.beta) < 1e-6


def test_random_alpha_beta_substitution(rng):
    for _ in range(200):
        s = rng.uniform(0, 3)
        mag = np.sqrt((s + 1) * s) / 2 * rng.uniform(0, 1)
        alpha = complex(s / 2, rng.normal())
        beta = mag * np.exp(1j * rng.uniform(0, 2 * np.pi))
        coeffs = solve_channel_coefficients(alpha, beta)
        assert max(channel_residuals(alpha, beta, coeffs)) <= 1e-10


def test_equality_case_single_channel():
    s = 0.8
    beta = np.sqrt((s + 1) * s) / 2 * np.exp(0.3j)
    (x1, y1), (x2, y2) = solve_channel_coefficients(complex(s / 2, 0.1), beta)
    assert y2 == 0 and x2 == 0
    assert abs(y1) == pytest.approx(np.sqrt(s))


def test_conjecture_violation_raised():
    with pytest.raises(ConjectureViolation) as exc:
        solve_channel_coefficients(0.1 + 0j, 1.0 + 0j)
    assert exc.value.defect < 0
    with pytest.raises(NumericalError):
        solve_channel_coefficients(-1.0 + 0j, 0j)


def test_negative_re_alpha_rejected():
    from adiabatic_elim.elim_cascade import _alpha_beta

    with pytest.raises(NumericalError):
        _alpha_beta(-np.eye(2), np.eye(2) / 2, 1e-9)


def test_condition_tolerance_is_configurable():
    beta = 0.5 * np.sqrt(0.8 * 1.8) * (1 + 1e-6)
    with pytest.raises(ConjectureViolation):
        solve_channel_coefficients(0.4 + 0j, beta)
    with overrides(condition_rtol=1e-4):
        solve_channel_coefficients(0.4 + 0j, beta)


def test_model_structure(rng):
    s = random_cascade_system(rng, 3, 3)
    m = cascade_reduced_model(s)
    G = m.generator(2)
    assert G.is_trace_preserving() and G.is_hermiticity_preserving()
    assert gks_decompose(m.second_order_part()).is_lindblad
    assert np.allclose(m.second_order_hamiltonian, m.alpha.imag * (dag(m.b) @ m.b - m.b @ dag(m.b)))
    assert m.diagnostics["condition_defect"] == pytest.approx(condition_defect(m.alpha, m.beta))
    assert np.allclose(m.generator(1).matrix, s.epsilon * m.first_order_part().matrix)


def test_rejects_hamiltonian_coupling():
    A = SubsystemSpec.empty(2)
    with pytest.raises(EliminationError):
        cascade_reduced_model(BipartiteSystem(A, A, HamiltonianCoupling(((sz, sz),)), 0.1))


def test_cascade_rate_validation():
    with pytest.raises(ValueError):
        CascadeCoupling(sm, sm, rate=0.0)


def test_kraus_cp_and_partial_trace_order(rng):
    s = random_cascade_system(rng, 2, 2)
    rs = rand_density(rng, 2)
    m = cascade_reduced_model(s)
    assert cptp_check(m.embed, 2, 4)[0] >= -1e-12
    eps = np.array([0.04, 0.02, 0.01, 0.005])
    err = [trace_norm(partial_trace(cascade_reduced_model(s.with_epsilon(e)).embed(rs), 2, 2, "A") - rs)
           for e in eps]
    assert 1.6 <= np.polyfit(np.log(eps), np.log(err), 1)[0] <= 2.4


def test_truncation_audit_trips_at_small_cutoff():
    with pytest.raises(TruncationError):
        cascade_reduced_model(example_squeezed(1.0, 0.1, fockN=6))


def test_truncation_audit_reports_change():
    m = cascade_reduced_model(example_squeezed(1.0, 0.05, fockN=16))
    assert m.diagnostics["audit_fock_n"] == 32
    assert m.diagnostics["audit_relative_change"] < 1e-8


# ---------------------------------------------------------------- properties


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(2, 3), st.booleans(), st.integers(0, 2 ** 31 - 1))
def test_property_cascade(dA, dB, pure, seed):
    rng = np.random.default_rng(seed)
    s = random_cascade_system(rng, dA, dB, pure=pure)
    m = cascade_reduced_model(s)
    assert m.alpha.real >= -1e-9
    assert condition_defect(m.alpha, m.beta) >= -1e-8
    assert max(channel_residuals(m.alpha, m.beta, m.channel_coeffs)) <= 1e-10
    ab = alpha_beta_form(m.alpha, m.beta, m.b).matrix
    assert np.abs(ab - m.second_order_part().matrix).max() <= 1e-10 * max(1.0, np.abs(ab).max())


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 50), st.floats(0, 1), st.floats(0, 2 * np.pi), st.floats(-5, 5))
def test_property_channel_solution(s, frac, phase, im):
    alpha = complex(s / 2, im)
    beta = np.sqrt((s + 1) * s) / 2 * frac * np.exp(1j * phase)
    coeffs = solve_channel_coefficients(alpha, beta)
    assert max(channel_residuals(alpha, beta, coeffs)) <= 1e-10
