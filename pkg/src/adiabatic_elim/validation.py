"""Brute-force checks of reduced models against the full joint dynamics.

Also hosts builders for the three worked examples and random instance
generators used by the property audit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import operators as ops
from .errors import ConjectureViolation, EliminationError
from .linalg import (
    choi_matrix,
    dag,
    fro_norm,
    kron,
    map_matrix,
    partial_trace,
    trace_norm,
)
from .lindblad import (
    SubsystemSpec,
    SuperOperator,
    build_generator,
    dissipator_superop,
    evolve_uniform,
    gks_decompose,
    hamiltonian_superop,
    kernel_inclusion_check,
)
from .system import BipartiteSystem, CascadeCoupling, HamiltonianCoupling

logger = logging.getLogger(__name__)

N_SAMPLES = 50


# ---------------------------------------------------------------- full model

def interaction_superop(system: BipartiteSystem) -> SuperOperator:
    """The order-eps joint term (without ``L_B``)."""
    dA, dB = system.dims
    if not system.is_cascade:
        return hamiltonian_superop(system.coupling.hamiltonian())
    a = kron(system.coupling.a_eff, np.eye(dB))
    b = kron(np.eye(dA), system.coupling.b)
    I = np.eye(dA * dB)
    # a[rho, b^+] + [b, rho]a^+ in column-stacked form
    M = (np.kron(b.conj(), a) - np.kron(I, a @ dag(b))
         + np.kron(a.conj(), b) - np.kron((b @ dag(a)).T, I))
    return SuperOperator(M)


def full_generator(system: BipartiteSystem) -> SuperOperator:
    """Joint generator with the eps placement of the coupling type."""
    dA, dB = system.dims
    eps = system.epsilon
    LA = build_generator(system.A).lift(dB, "A")
    LB = build_generator(system.B).lift(dA, "B")
    if not system.is_cascade:
        return LA + eps * (interaction_superop(system) + LB)
    c = system.coupling
    Da = dissipator_superop(c.a_eff).lift(dB, "A")
    Db = dissipator_superop(c.b).lift(dA, "B")
    return LA + Da + eps * interaction_superop(system) + eps ** 2 * (Db + LB)


# ---------------------------------------------------------------- trajectories

def _reduce(system, **kw):
    from . import reduce

    return reduce(system, **kw)


def trajectory_errors(system: BipartiteSystem, reduced, horizon_slow: float = 1.0,
                      n_samples: int = N_SAMPLES, rho_s0=None, orders=(1, 2),
                      full: SuperOperator | None = None) -> dict:
    """``{order: error}`` sharing one full-model trajectory; see ``trajectory_error``."""
    dA, dB = system.dims
    rho_s0 = ops.maximally_mixed(dB) if rho_s0 is None else np.asarray(rho_s0, dtype=complex)
    if system.epsilon == 0:
        return {k: 0.0 for k in orders}
    dt = horizon_slow / system.epsilon / (n_samples - 1)
    full = full_generator(system) if full is None else full
    traj_full = evolve_uniform(full, reduced.embed(rho_s0), dt, n_samples - 1)
    out = {}
    for k in orders:
        traj_red = evolve_uniform(reduced.generator(k), rho_s0, dt, n_samples - 1)
        out[k] = max(trace_norm(rf - reduced.embed(rr)) for rf, rr in zip(traj_full, traj_red))
    return out


def trajectory_error(system: BipartiteSystem, reduced, horizon_slow: float = 1.0,
                     n_samples: int = N_SAMPLES, rho_s0=None, order: int = 2,
                     full: SuperOperator | None = None) -> float:
    """Sup over uniformly sampled times of the trace-norm gap between the
    full evolution of ``embed(rho_s0)`` and ``embed`` of the reduced evolution.

    Times run over ``[0, horizon_slow / eps]``.
    """
    return trajectory_errors(system, reduced, horizon_slow, n_samples, rho_s0, (order,), full)[order]


def fit_slope(epsilons, errors) -> float:
    x = np.log(np.asarray(epsilons, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def _curved(epsilons, errors) -> bool:
    # local slopes drifting by more than 0.3 between the ends of the sweep
    if len(epsilons) < 4:
        return False
    x, y = np.log(epsilons), np.log(errors)
    local = np.diff(y) / np.diff(x)
    return bool(abs(local[0] - local[-1]) > 0.3)


@dataclass
class ScalingReport:
    epsilons: list
    errors_order1: list
    errors_order2: list
    fitted_slope_order1: float
    fitted_slope_order2: float
    horizon: float
    metadata: dict = field(default_factory=dict)

    def rows(self):
        return [
            {"epsilon": e, "error_order1": a, "error_order2": b}
            for e, a, b in zip(self.epsilons, self.errors_order1, self.errors_order2)
        ]


def epsilon_scaling(family: Callable[[float], BipartiteSystem], epsilons: Sequence[float],
                    horizon_slow: float = 1.0, rho_s0=None, n_samples: int = N_SAMPLES,
                    reduce_kwargs: dict | None = None) -> ScalingReport:
    """Order-1 and order-2 trajectory errors along an eps sweep, with log-log slopes."""
    eps = sorted({float(e) for e in epsilons}, reverse=True)
    if len(eps) < 4:
        raise ValueError("need at least 4 distinct epsilon values")
    if eps[0] / eps[-1] < 10 - 1e-9:
        logger.warning("epsilon sweep spans less than one decade")
    e1, e2 = [], []
    for e in eps:
        sysm = family(e)
        model = _reduce(sysm, **(reduce_kwargs or {}))
        errs = trajectory_errors(sysm, model, horizon_slow, n_samples, rho_s0)
        e1.append(errs[1])
        e2.append(errs[2])

    flags = []
    meta = {"n_samples": n_samples, "fit_points": len(eps)}
    if min(e1) <= 1e-14 or min(e2) <= 1e-14:
        flags.append("errors at round-off level; slopes undefined")
        s1 = s2 = float("nan")
    else:
        idx = slice(None)
        if _curved(eps, e2) or _curved(eps, e1):
            flags.append("pre-asymptotic curvature; fitted on the 3 smallest epsilons")
            idx = slice(-3, None)
            meta["fit_points"] = 3
        s1 = fit_slope(eps[idx], e1[idx])
        s2 = fit_slope(eps[idx], e2[idx])
        for name, errs in (("order1", e1), ("order2", e2)):
            if any(b > a for a, b in zip(errs, errs[1:])):
                flags.append(f"{name} errors not monotone in epsilon")
    meta["flags"] = flags
    return ScalingReport(eps, e1, e2, s1, s2, horizon_slow, meta)


def full_trajectory_invariants(system: BipartiteSystem, rho0, horizon_slow: float = 1.0,
                               n_samples: int = N_SAMPLES) -> dict:
    """Worst trace drift (against ``tr(rho0)``) and most negative eigenvalue along the full trajectory."""
    dt = horizon_slow / system.epsilon / (n_samples - 1)
    traj = evolve_uniform(full_generator(system), rho0, dt, n_samples - 1)
    tr0 = np.trace(rho0)
    return {
        "full_max_trace_drift": max(abs(np.trace(r) - tr0) for r in traj),
        "full_min_eigenvalue": min(float(np.linalg.eigvalsh(0.5 * (r + dag(r))).min()) for r in traj),
    }


# ---------------------------------------------------------------- CPTP check

def cptp_check(channel, dim_in: int, dim_out: int | None = None) -> tuple[float, float]:
    """``(min eigenvalue of the Choi matrix, worst trace defect on basis states)``.

    ``channel`` is a callable on matrices or a ``SuperOperator``.
    """
    if isinstance(channel, SuperOperator):
        S = channel.matrix
        dim_out = channel.dim
    else:
        if dim_out is None:
            dim_out = np.asarray(channel(np.eye(dim_in, dtype=complex))).shape[0]
        S = map_matrix(channel, dim_in, dim_out)
    J = choi_matrix(S, dim_in, dim_out)
    J = 0.5 * (J + dag(J))
    min_eig = float(np.linalg.eigvalsh(J).min())
    defect = 0.0
    for a in range(dim_in):
        for b in range(dim_in):
            block = J[a * dim_out:(a + 1) * dim_out, b * dim_out:(b + 1) * dim_out]
            defect = max(defect, abs(np.trace(block) - (1.0 if a == b else 0.0)))
    return min_eig, float(defect)


def kraus_trace_defect(model, dA: int, dB: int, rho_s) -> float:
    """``||tr_A(embed(rho_s)) - rho_s||_tr``."""
    return trace_norm(partial_trace(model.embed(rho_s), dA, dB, "A") - rho_s)


# ---------------------------------------------------------------- examples

def example_qubit_tls(u: float = 0.3, gamma: float = 1.0, chi: float = 0.01) -> BipartiteSystem:
    """Driven decaying qubit (fast) coupled dispersively by ``chi sz (x) sz`` to a bare qubit.

    ``eps = |chi| / gamma``; the coupling term carries ``chi / eps`` so that
    ``eps * H_int = chi sz (x) sz``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    sm, sp, sz = ops.sigma_minus(), ops.sigma_plus(), ops.sigma_z()
    # u[s+ - s-, rho] == -i[H, rho] with H = i u (s+ - s-)
    A = SubsystemSpec(2, 1j * u * (sp - sm), ((sm, gamma),))
    B = SubsystemSpec.empty(2)
    eps = abs(chi) / gamma
    scale = chi / eps if eps > 0 else gamma
    coupling = HamiltonianCoupling(((scale * sz, sz),))
    return BipartiteSystem(A, B, coupling, eps, label="qubit_tls")


def qubit_tls_closed_form(u: float, gamma: float, chi: float) -> tuple[float, float]:
    """``(Hamiltonian coefficient, dephasing rate)`` of the reduced qubit model.

    The reduced generator is ``i h [sz, rho] + r (sz rho sz - rho)``.
    """
    den = gamma ** 2 + 8 * u ** 2
    h = chi * gamma ** 2 / den
    r = 64 * gamma * chi ** 2 * u ** 2 * (gamma ** 2 + 2 * u ** 2) / den ** 3
    return h, r


def example_two_photon(u: float = 0.05, kappa_m: float = 1.0, kappa_p: float = 0.01,
                       g: float = 1e-3, chi: float = 1e-3, fockN: int = 15) -> BipartiteSystem:
    """Driven qubit pumping a cavity through two-photon exchange plus a dispersive shift.

    ``H_int = g s+ (x) b^2 + g s- (x) b^+2 + chi |e><e| (x) b^+ b``, with
    ``eps = max(|g|, |chi|)``.
    """
    if not kappa_p < kappa_m:
        raise ValueError("two-photon example needs kappa_p < kappa_m for a stable fast qubit")
    if fockN < 3:
        raise ValueError("Fock cutoff must be at least 3")
    sm, sp, sy = ops.sigma_minus(), ops.sigma_plus(), ops.sigma_y()
    A = SubsystemSpec(2, u * sy, ((sm, kappa_m), (sp, kappa_p)))
    B = SubsystemSpec.empty(fockN)
    b = ops.annihilation(fockN)
    bd = dag(b)
    eps = max(abs(g), abs(chi))
    sg, sc = (g / eps, chi / eps) if eps > 0 else (1.0, 1.0)
    coupling = HamiltonianCoupling((
        (sg * sp, bd @ bd),                # A1 (x) B1^+ = g s+ (x) b^2
        (sg * sm, b @ b),                  # A2 (x) B2^+ = g s- (x) b^+2
        (sc * ops.excited_projector(), bd @ b),
    ))
    return BipartiteSystem(
        A, B, coupling, eps, fock_n=fockN,
        rebuild=lambda n: example_two_photon(u, kappa_m, kappa_p, g, chi, n),
        label="two_photon",
    )


def two_photon_bloch(u: float, kappa_m: float, kappa_p: float) -> tuple[float, float]:
    den = (kappa_p + kappa_m) ** 2 + 8 * u ** 2
    return 4 * u * (kappa_p - kappa_m) / den, (kappa_p ** 2 - kappa_m ** 2) / den


def qubit_tls_coefficients(model) -> tuple[float, float]:
    """``(h, r)`` read off a reduced qubit model of the form ``i h [sz, .] + r (sz . sz - .)``."""
    eps = model.epsilon
    H1 = eps * model.zeno_hamiltonian
    h = -0.5 * float((H1[0, 0] - H1[1, 1]).real)
    r = eps ** 2 * sum(abs(np.trace(ops.sigma_z() @ L) / 2) ** 2 for L in model.channels)
    return h, float(r)


def qubit_tls_generator(u: float, gamma: float, chi: float) -> SuperOperator:
    """Closed-form reduced generator of the qubit example."""
    h, r = qubit_tls_closed_form(u, gamma, chi)
    sz = ops.sigma_z()
    return hamiltonian_superop(-h * sz) + dissipator_superop(sz, r)


def two_photon_tables(u: float, kappa_m: float, kappa_p: float, g: float, chi: float):
    """Closed-form ``eps^2 X`` and ``eps^2 Y`` entries, keyed by 1-based ``(j, k)``, as printed.

    Returns ``(X, Y)`` dicts holding the upper triangles.
    """
    x, z = two_photon_bloch(u, kappa_m, kappa_p)
    r = (kappa_m - kappa_p) / (kappa_m + kappa_p)
    D = kappa_m - kappa_p
    X = {
        (1, 1): (z / 2 * (3 * x ** 2 - 2) - x ** 2 / 2 + z ** 2 - (z - 1) * r) * g ** 2 / D,
        (2, 2): (z / 2 * (3 * x ** 2 - 2) + x ** 2 / 2 - z ** 2 + (z + 1) * r) * g ** 2 / D,
        (3, 3): z / 2 * (z ** 2 - x ** 2 - 1) * chi ** 2 / D,
        (1, 2): (z / 2 * (3 * x ** 2 - 2) - r) * g ** 2 / D,
        (1, 3): x * (z ** 2 - x ** 2 / 4 - z / 2 + r / 2) * chi * g / D,
        (2, 3): x * (z ** 2 - x ** 2 / 4 + z / 2 - r / 2) * chi * g / D,
    }
    Y = {
        (1, 2): -(2 * z ** 2 - x + 2 * z * r) * g ** 2 / (4j * D),
        (1, 3): (x - x * z - x ** 3 / 2 - z ** 2 * x - x * r) * g * chi / (4j * D),
        (2, 3): (x + x * z - x ** 3 / 2 - z ** 2 * x + x * r) * g * chi / (4j * D),
    }
    return X, Y


def two_photon_truncated_X(u: float, kappa_m: float, kappa_p: float, g: float, chi: float) -> np.ndarray:
    """``eps^2 X`` kept to second order in ``delta = sqrt(kappa_p/kappa_m)`` and ``eta = u/kappa_m``."""
    d2 = kappa_p / kappa_m
    eta = u / kappa_m
    return np.array([
        [(4 - 8 * d2 - 64 * eta ** 2) * g ** 2, -32 * eta ** 2 * g ** 2, -8 * eta * g * chi],
        [-32 * eta ** 2 * g ** 2, 4 * d2 * g ** 2, 0.0],
        [-8 * eta * g * chi, 0.0, (2 * d2 + 16 * eta ** 2) * chi ** 2],
    ], dtype=complex) / kappa_m


def example_squeezed(kappa: float = 1.0, g: float = 0.1, fockN: int = 20, b=None,
                     epsilon: float = 0.02) -> BipartiteSystem:
    """Squeezing cavity ``H = i g (a^2 - a^+2)``, loss ``kappa``, cascaded into ``b``.

    ``b`` defaults to a qubit lowering operator.
    """
    if not kappa > 4 * g:
        raise ValueError("squeezed example needs kappa > 4 g; otherwise the cavity is unstable")
    b = ops.sigma_minus() if b is None else np.asarray(b, dtype=complex)
    a = ops.annihilation(fockN)
    ad = dag(a)
    A = SubsystemSpec(fockN, 1j * g * (a @ a - ad @ ad))
    B = SubsystemSpec.empty(b.shape[0])
    coupling = CascadeCoupling(a, b, rate=kappa)
    return BipartiteSystem(
        A, B, coupling, epsilon, fock_n=fockN,
        rebuild=lambda n: example_squeezed(kappa, g, n, b, epsilon),
        label="squeezed",
    )


def squeezed_closed_form(kappa: float, g: float) -> tuple[float, float]:
    den = ((kappa + 4 * g) * (kappa - 4 * g)) ** 2
    return 32 * kappa ** 2 * g ** 2 / den, -(64 * g ** 3 * kappa + 4 * g * kappa ** 3) / den


def squeezed_heisenberg(kappa: float, g: float, t: float) -> tuple[float, float]:
    """``(f_a(t), h_a(t))`` with ``exp(t L*)(a) = f_a a + h_a a^+``."""
    em = np.exp(-t * (kappa - 4 * g) / 2)
    ep = np.exp(-t * (kappa + 4 * g) / 2)
    return (em + ep) / 2, (ep - em) / 2


EXAMPLES = {
    "qubit_tls": example_qubit_tls,
    "two_photon": example_two_photon,
    "squeezed": example_squeezed,
}


# ---------------------------------------------------------------- random instances

def random_matrix(rng, d: int) -> np.ndarray:
    return (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)


def random_hermitian(rng, d: int) -> np.ndarray:
    X = random_matrix(rng, d)
    return 0.5 * (X + dag(X))


def random_spec(rng, d: int, n_jumps: int = 2) -> SubsystemSpec:
    jumps = tuple((random_matrix(rng, d), float(rng.uniform(0.2, 1.5))) for _ in range(n_jumps))
    return SubsystemSpec(d, random_hermitian(rng, d), jumps)


def random_pure_spec(rng, d: int) -> SubsystemSpec:
    """Fast system whose unique steady state is the pure state ``|0>``.

    Every jump annihilates ``|0>`` up to the scalar ``c``, and the
    Hamiltonian is chosen so that the ``|0>`` component of the total drift
    vanishes; the extra decay ``|k> -> |0>`` makes ``|0>`` attractive.
    """
    Ls = []
    for _ in range(2):
        L = random_matrix(rng, d)
        L[:, 0] = 0
        L[0, 0] = rng.normal() + 1j * rng.normal()
        Ls.append(L)
    for k in range(1, d):
        L = np.zeros((d, d), dtype=complex)
        L[0, k] = 1.0
        Ls.append(L)
    J = sum(0.5j * (np.conj(L[0, 0]) * L - L[0, 0] * dag(L)) for L in Ls)
    K = random_hermitian(rng, d)
    K[0, 1:] = 0
    K[1:, 0] = 0
    H = K - J
    return SubsystemSpec(d, 0.5 * (H + dag(H)), tuple((L, 1.0) for L in Ls))


def random_hamiltonian_system(rng, dA: int, dB: int, m: int = 2, pure: bool = False,
                              epsilon: float = 0.05) -> BipartiteSystem:
    A = random_pure_spec(rng, dA) if pure else random_spec(rng, dA)
    B = random_spec(rng, dB, 1)
    terms = []
    for _ in range(m):
        # A (x) B^+ + A^+ (x) B keeps the sum Hermitian
        Ak, Bk = random_matrix(rng, dA), random_matrix(rng, dB)
        terms += [(Ak, Bk), (dag(Ak), dag(Bk))]
    return BipartiteSystem(A, B, HamiltonianCoupling(tuple(terms)), epsilon)


def random_cascade_system(rng, dA: int, dB: int, pure: bool = False,
                          epsilon: float = 0.05) -> BipartiteSystem:
    A = random_pure_spec(rng, dA) if pure else random_spec(rng, dA)
    a = random_matrix(rng, dA)
    if pure:
        # keep |0> stationary under D[a]: a|0> must be proportional to |0>
        a[:, 0] = 0
        a[0, 0] = rng.normal()
        J = 0.5j * (np.conj(a[0, 0]) * a - a[0, 0] * dag(a))
        H = A.hamiltonian - J
        A = SubsystemSpec(dA, 0.5 * (H + dag(H)), A.jumps)
    return BipartiteSystem(A, random_spec(rng, dB, 1), CascadeCoupling(a, random_matrix(rng, dB)), epsilon)


# ---------------------------------------------------------------- property audit

@dataclass
class AuditResult:
    name: str
    passed: int = 0
    failed: int = 0
    worst: float = 0.0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, value: float, info=None):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(info)
        if np.isfinite(value):
            self.worst = max(self.worst, float(value))


def conjecture_audit(n: int = 500, seed: int = 0, dims: Sequence[int] = (2, 3, 4)) -> AuditResult:
    """Scan random fast systems and output operators for the cascade solvability inequality.

    Each violation is logged with the full instance data.
    """
    from .elim_cascade import cascade_alpha_beta, cascade_fast_generator, condition_defect
    from .lindblad import steady_state

    rng = np.random.default_rng(seed)
    res = AuditResult("cascade_condition_scan")
    for i in range(n):
        d = int(rng.choice(dims))
        spec = random_spec(rng, d, int(rng.integers(0, 3)))
        a = random_matrix(rng, d) * rng.uniform(0.2, 2.0)
        try:
            LA = cascade_fast_generator(spec, a)
            rho = steady_state(LA)
            alpha, beta = cascade_alpha_beta(LA, rho, a)
        except EliminationError as exc:
            logger.info("conjecture scan: instance %d skipped (%s)", i, exc)
            continue
        defect = condition_defect(alpha, beta)
        scale = max(1.0, abs(2 * alpha.real) * (2 * alpha.real + 1))
        ok = defect >= -1e-8 * scale
        info = None
        if not ok:
            info = {"instance": i, "dim": d, "alpha": alpha, "beta": beta, "defect": defect,
                    "hamiltonian": spec.hamiltonian, "jumps": [(L, r) for L, r in spec.jumps], "a": a}
            logger.warning("cascade condition violated: %s", info)
        res.record(ok, -defect / scale, info)
    return res


def audit_properties(n: int = 100, seed: int = 0, dims: Sequence[int] = (2, 3, 4)) -> dict:
    """Randomized structural checks; returns one ``AuditResult`` per property."""
    from .elim_cascade import (
        cascade_fast_generator,
        cascade_reduced_model,
        channel_residuals,
        condition_defect,
    )
    from .elim_hamiltonian import build_reduced_model, x_form_superop

    rng = np.random.default_rng(seed)
    names = ["X_psd", "L1_lindblad", "trace_F_rho", "kernel_inclusion", "re_alpha",
             "channel_equations", "channel_vs_x_form", "cascade_condition"]
    res = {k: AuditResult(k) for k in names}
    for i in range(n):
        dA = int(rng.choice(dims))
        dB = int(rng.choice(dims))
        pure = i % 2 == 1
        sysm = random_hamiltonian_system(rng, dA, dB, pure=pure)
        info = {"instance": i, "dims": (dA, dB), "pure": pure}
        try:
            model = build_reduced_model(sysm)
        except EliminationError as exc:
            for k in ("X_psd", "L1_lindblad", "trace_F_rho", "channel_vs_x_form"):
                res[k].record(False, np.inf, {**info, "error": str(exc)})
            continue
        w = float(np.linalg.eigvalsh(model.X).min())
        res["X_psd"].record(w >= -1e-9 * max(1.0, fro_norm(model.X)), -w, info)
        gks = gks_decompose(model.first_order_part())
        res["L1_lindblad"].record(gks.is_lindblad, -gks.min_eigenvalue, info)
        t = model.diagnostics["trace_F_rho"]
        res["trace_F_rho"].record(t <= 1e-10, t, info)
        diss = SuperOperator.zero(dB)
        for L in model.channels:
            diss = diss + dissipator_superop(L)
        gap = float(np.linalg.norm(diss.matrix - x_form_superop(model.X, model.B_ops).matrix, 2))
        res["channel_vs_x_form"].record(gap <= 1e-10 * fro_norm(model.X), gap, info)
        if pure:
            ok = all(kernel_inclusion_check(model.rho_barA, Fk @ model.rho_barA) for Fk in model.F_ops)
            res["kernel_inclusion"].record(ok, 0.0, info)

        csys = random_cascade_system(rng, dA, dB, pure=pure)
        try:
            cm = cascade_reduced_model(csys)
        except ConjectureViolation as exc:
            logger.warning("cascade condition violated: %s (%s)", exc, info)
            res["cascade_condition"].record(False, -exc.defect, {**info, "alpha": exc.alpha, "beta": exc.beta})
            continue
        except EliminationError as exc:
            res["re_alpha"].record(False, np.inf, {**info, "error": str(exc)})
            continue
        res["re_alpha"].record(cm.alpha.real >= -1e-9, -cm.alpha.real, info)
        d = condition_defect(cm.alpha, cm.beta)
        res["cascade_condition"].record(d >= -1e-8, -d, info)
        r = max(channel_residuals(cm.alpha, cm.beta, cm.channel_coeffs))
        res["channel_equations"].record(r <= 1e-10, r, info)
        if pure:
            from .elim_cascade import _centered_solves

            LA = cascade_fast_generator(csys.A, csys.coupling.a_eff)
            Sp, Sm = _centered_solves(LA, cm.rho_barA, csys.coupling.a_eff)
            ok = kernel_inclusion_check(cm.rho_barA, Sp) and kernel_inclusion_check(cm.rho_barA, Sm)
            res["kernel_inclusion"].record(ok, 0.0, info)
    return res
