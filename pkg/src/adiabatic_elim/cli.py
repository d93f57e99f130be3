"""Command-line entry point: ``adiabatic-elim {reduce,validate,scaling,example,audit}``.

Exit codes: 0 success, 2 bad input (with location), 3 numerical failure (with
stage), 4 cascade solvability condition violated.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import operators as ops
from . import validation as val
from .config import TOL, overrides
from .document import REPORT_SCHEMA_VERSION, DocumentError, csv_table, dumps, fmt_float, load_document
from .elim_cascade import CascadeModel, condition_defect
from .errors import ConjectureViolation, EliminationError
from .system import BipartiteSystem

OUT_ENV = "ADIABATIC_ELIM_OUT"
EXIT_OK, EXIT_PARSE, EXIT_NUMERIC, EXIT_CONJECTURE = 0, 2, 3, 4


# ---------------------------------------------------------------- report blocks

def base_report(command: str, opts: dict) -> dict:
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "gauge": opts.get("gauge", "simple"),
        "psd_mode": opts.get("psd_mode", "cholesky"),
        "tolerances": TOL.as_dict(),
    }


def system_block(system: BipartiteSystem) -> dict:
    return {
        "label": system.label,
        "coupling": "cascade" if system.is_cascade else "hamiltonian",
        "dims": list(system.dims),
        "epsilon": system.epsilon,
        "fock_n": system.fock_n,
    }


def model_block(system: BipartiteSystem, model, order: int = 2) -> dict:
    """Physical (eps-scaled) reduced model; zero blocks when eps = 0."""
    eps = system.epsilon
    if isinstance(model, CascadeModel):
        conj_c, c = model.first_order_coeffs
        out = {
            "rho_bar_a": model.rho_barA,
            "order1": {
                "tr_rho_a_dag": conj_c,
                "tr_a_rho": c,
                "hamiltonian": eps * model.first_order_hamiltonian,
            },
        }
        if order >= 2:
            (x1, y1), (x2, y2) = model.channel_coeffs
            out["order2"] = {
                "alpha": model.alpha,
                "beta": model.beta,
                "condition_defect": condition_defect(model.alpha, model.beta),
                "channel_coefficients": {"x1": x1, "y1": y1, "x2": x2, "y2": y2},
                "hamiltonian": eps ** 2 * model.second_order_hamiltonian,
                "channels": [eps * L for L in model.channels],
            }
        out["kraus_M"] = model.kraus_M
        return out
    out = {
        "rho_bar_a": model.rho_barA,
        "order1": {"zeno_hamiltonian": eps * model.zeno_hamiltonian},
    }
    if order >= 2:
        out["order2"] = {
            "hamiltonian": eps ** 2 * model.second_order_hamiltonian,
            "X": eps ** 2 * model.X,
            "Y": eps ** 2 * model.Y,
            "Lambda": eps * model.Lam,
            "channels": [eps * L for L in model.channels],
        }
    out["kraus_generator_M"] = model.kraus_M
    return out


def initial_state(name: str, d: int) -> np.ndarray:
    if name == "mixed":
        return ops.maximally_mixed(d)
    if name == "zero":
        return ops.projector(ops.ket(d, 0))
    if name == "plus":
        return ops.projector((ops.ket(d, 0) + ops.ket(d, 1)) / np.sqrt(2))
    raise ValueError(f"unknown initial state {name!r}")


def validation_block(system: BipartiteSystem, model, horizon: float, samples: int, rho0: str) -> dict:
    dA, dB = system.dims
    r0 = initial_state(rho0, dB)
    errs = val.trajectory_errors(system, model, horizon, samples, r0)
    choi_min, tdefect = val.cptp_check(model.embed, dB, dA * dB)
    out = {
        "horizon_slow": horizon,
        "samples": samples,
        "initial_state": rho0,
        "error_order1": errs[1],
        "error_order2": errs[2],
        "embed_choi_min_eig": choi_min,
        "embed_trace_defect": tdefect,
        "embed_partial_trace_defect": val.kraus_trace_defect(model, dA, dB, r0),
    }
    if system.epsilon > 0:
        inv = val.full_trajectory_invariants(system, model.embed(r0), horizon, samples)
        out.update(inv)
    return out


# ---------------------------------------------------------------- output

def emit(args, name: str, report: dict, csv: str | None = None, text: str | None = None) -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "csv" and csv is not None:
        body, ext = csv, "csv"
    elif fmt == "text" and text is not None:
        body, ext = text, "txt"
    else:
        body, ext = dumps(report), "json"
    path = getattr(args, "out", None)
    if path is None and os.environ.get(OUT_ENV):
        os.makedirs(os.environ[OUT_ENV], exist_ok=True)
        path = os.path.join(os.environ[OUT_ENV], f"{name}.{ext}")
    if path is None:
        sys.stdout.write(body)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(body)
        print(f"wrote {path}", file=sys.stderr)


def _matrix_rows(block: str, M) -> list[list]:
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    return [[block, i, j, float(M[i, j].real), float(M[i, j].imag)]
            for i in range(M.shape[0]) for j in range(M.shape[1])]


def flatten_rows(prefix: str, obj) -> list[list]:
    """``block,row,col,re,im`` rows for every scalar and matrix in a report subtree."""
    rows = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows += flatten_rows(f"{prefix}.{k}" if prefix else k, v)
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            rows += flatten_rows(f"{prefix}[{i}]", v)
    elif isinstance(obj, np.ndarray):
        rows += _matrix_rows(prefix, obj)
    elif isinstance(obj, (complex, float, int, np.number)) and not isinstance(obj, bool):
        c = complex(obj)
        rows.append([prefix, "", "", c.real, c.imag])
    return rows


def model_text(report: dict) -> str:
    lines = [f"{k}: {report[k]}" for k in ("command", "gauge", "psd_mode")]
    sysb = report.get("system", {})
    lines.append(f"system: {sysb.get('label') or '-'} {sysb.get('coupling')} dims={sysb.get('dims')} "
                 f"epsilon={sysb.get('epsilon')}")
    m = report.get("model", {})
    o2 = m.get("order2", {})
    if "alpha" in o2:
        lines.append(f"alpha = {_c(o2['alpha'])}")
        lines.append(f"beta  = {_c(o2['beta'])}")
        cc = o2["channel_coefficients"]
        lines.append("channels: " + ", ".join(f"{k}={_c(v)}" for k, v in cc.items()))
    elif o2:
        lines.append(f"channel count: {len(o2['channels'])}")
    for k, v in sorted(report.get("diagnostics", {}).items()):
        lines.append(f"  {k}: {v}")
    for k, v in report.get("validation", {}).items():
        lines.append(f"  {k}: {v}")
    return "\n".join(lines) + "\n"


def _c(z) -> str:
    z = complex(z)
    return f"{fmt_float(z.real)}{'+' if z.imag >= 0 else '-'}{fmt_float(abs(z.imag))}j"


# ---------------------------------------------------------------- commands

def _options(args) -> dict:
    return {"fock_n": args.fock_n, "gauge": args.gauge, "psd_mode": args.psd_mode}


def _reduce(system: BipartiteSystem, opts: dict):
    from . import reduce

    if system.is_cascade:
        return reduce(system)
    return reduce(system, psd_mode=opts.get("psd_mode", "cholesky"), gauge=opts.get("gauge", "simple"))


def cmd_reduce(args) -> int:
    system, opts = load_document(args.input, _options(args))
    with overrides(**_tol_overrides(args, opts)):
        model = _reduce(system, opts)
        report = base_report("reduce", opts)
        report["input"] = os.path.basename(args.input)
        report["order"] = args.order
        report["system"] = system_block(system)
        report["model"] = model_block(system, model, args.order)
        report["diagnostics"] = model.diagnostics
    rows = flatten_rows("", report["model"]) + flatten_rows("diagnostics", _numeric(model.diagnostics))
    emit(args, "reduce", report, csv_table(["block", "row", "col", "re", "im"], rows), model_text(report))
    return EXIT_OK


def _numeric(d: dict) -> dict:
    return {k: v for k, v in d.items() if isinstance(v, (int, float, complex, np.number)) and not isinstance(v, bool)}


def cmd_validate(args) -> int:
    system, opts = load_document(args.input, _options(args))
    with overrides(**_tol_overrides(args, opts)):
        model = _reduce(system, opts)
        report = base_report("validate", opts)
        report["input"] = os.path.basename(args.input)
        report["system"] = system_block(system)
        report["validation"] = validation_block(system, model, args.horizon, args.samples, args.rho0)
    v = report["validation"]
    emit(args, "validate", report,
         csv_table(["quantity", "value"], [[k, x] for k, x in v.items() if not isinstance(x, str)]),
         model_text(report))
    return EXIT_OK


def _parse_floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise DocumentError(f"cannot parse number list {s!r}", "--epsilons") from None


def scaling_block(rep: val.ScalingReport) -> dict:
    return {
        "epsilons": rep.epsilons,
        "errors_order1": rep.errors_order1,
        "errors_order2": rep.errors_order2,
        "fitted_slope_order1": rep.fitted_slope_order1,
        "fitted_slope_order2": rep.fitted_slope_order2,
        "horizon_slow": rep.horizon,
        "metadata": rep.metadata,
    }


def cmd_scaling(args) -> int:
    system, opts = load_document(args.input, _options(args))
    eps = _parse_floats(args.epsilons)
    with overrides(**_tol_overrides(args, opts)):
        r0 = initial_state(args.rho0, system.dims[1])
        kw = {} if system.is_cascade else {"psd_mode": opts["psd_mode"], "gauge": opts["gauge"]}
        rep = val.epsilon_scaling(system.with_epsilon, eps, args.horizon, r0, args.samples, kw)
        report = base_report("scaling", opts)
        report["input"] = os.path.basename(args.input)
        report["system"] = system_block(system)
        report["scaling"] = scaling_block(rep)
    rows = [[r["epsilon"], r["error_order1"], r["error_order2"]] for r in rep.rows()]
    text = (f"slope order 1: {rep.fitted_slope_order1:.4f}\nslope order 2: {rep.fitted_slope_order2:.4f}\n"
            + "".join(f"{e:.6g} {a:.6e} {b:.6e}\n" for e, a, b in rows))
    emit(args, "scaling", report, csv_table(["epsilon", "error_order1", "error_order2"], rows), text)
    return EXIT_OK


EXAMPLE_STATE = {"qubit_tls": "plus", "two_photon": "plus", "squeezed": "plus"}


def _example_params(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise DocumentError(f"expected key=value, got {p!r}", "--param")
        k, v = p.split("=", 1)
        try:
            out[k.strip()] = int(v) if k.strip() == "fockN" else float(v)
        except ValueError:
            raise DocumentError(f"cannot parse value {v!r}", f"--param {k}") from None
    return out


def closed_form_block(name: str, params: dict, system: BipartiteSystem, model) -> dict:
    if name == "qubit_tls":
        u, gamma, chi = params.get("u", 0.3), params.get("gamma", 1.0), params.get("chi", 0.01)
        h, r = val.qubit_tls_closed_form(u, gamma, chi)
        h_num, r_num = val.qubit_tls_coefficients(model)
        return {"hamiltonian_coefficient": h, "pipeline_hamiltonian_coefficient": h_num,
                "dephasing_rate": r, "pipeline_dephasing_rate": r_num}
    if name == "squeezed":
        a, b = val.squeezed_closed_form(params.get("kappa", 1.0), params.get("g", 0.1))
        return {"alpha": a, "pipeline_alpha": model.alpha, "beta": b, "pipeline_beta": model.beta}
    if name == "two_photon":
        p = [params.get(k, d) for k, d in (("u", 0.05), ("kappa_m", 1.0), ("kappa_p", 0.01),
                                           ("g", 1e-3), ("chi", 1e-3))]
        x, z = val.two_photon_bloch(*p[:3])
        rho = model.rho_barA
        X, _ = val.two_photon_tables(*p)
        e2 = system.epsilon ** 2
        return {
            "x_inf": x, "pipeline_x_inf": float(np.trace(rho @ ops.sigma_x()).real),
            "z_inf": z, "pipeline_z_inf": float(np.trace(rho @ ops.sigma_z()).real),
            "X": {f"{j}{k}": [v, e2 * model.X[j - 1, k - 1]] for (j, k), v in X.items()},
        }
    return {}


def cmd_example(args) -> int:
    params = _example_params(args.param)
    if args.fock_n is not None and args.name != "qubit_tls":
        params["fockN"] = args.fock_n
    builder = val.EXAMPLES[args.name]
    opts = {"gauge": args.gauge or "simple", "psd_mode": args.psd_mode or "cholesky", "tolerances": {}}
    with overrides(**_tol_overrides(args, opts)):
        try:
            system = builder(**params)
        except (TypeError, ValueError) as exc:
            raise DocumentError(str(exc), f"example {args.name}") from None
        model = _reduce(system, opts)
        report = base_report("example", opts)
        report["example"] = args.name
        report["parameters"] = dict(sorted(params.items()))
        report["system"] = system_block(system)
        report["model"] = model_block(system, model)
        report["diagnostics"] = model.diagnostics
        report["closed_form"] = closed_form_block(args.name, params, system, model)
        if not args.no_validate:
            rho0 = args.rho0 or EXAMPLE_STATE[args.name]
            report["validation"] = validation_block(system, model, args.horizon, args.samples, rho0)
    rows = flatten_rows("", {"closed_form": report["closed_form"], "validation": report.get("validation", {})})
    emit(args, f"example-{args.name}", report, csv_table(["block", "row", "col", "re", "im"], rows),
         model_text(report))
    return EXIT_OK


def cmd_audit(args) -> int:
    n = args.random_instances
    m = args.conjecture_instances if args.conjecture_instances is not None else 5 * n
    with overrides(**_tol_overrides(args, {})):
        res = val.audit_properties(n, args.seed) if n > 0 else {}
        conj = val.conjecture_audit(m, args.seed) if m > 0 else val.AuditResult("cascade_condition_scan")
        report = base_report("audit", {})
        report["seed"] = args.seed
        report["random_instances"] = n
        report["conjecture_instances"] = m
        report["properties"] = {
            k: {"passed": r.passed, "failed": r.failed, "worst": r.worst} for k, r in res.items()
        }
        report["properties"]["cascade_condition_scan"] = {
            "passed": conj.passed, "failed": conj.failed, "worst": conj.worst}
        report["failures"] = {k: r.failures for k, r in list(res.items()) + [("cascade_condition_scan", conj)]
                              if r.failures}
    lines = [f"{k}: {v['passed']} passed, {v['failed']} failed" for k, v in report["properties"].items()]
    emit(args, "audit", report,
         csv_table(["property", "passed", "failed", "worst"],
                   [[k, v["passed"], v["failed"], v["worst"]] for k, v in report["properties"].items()]),
         "\n".join(lines) + "\n")
    if args.format != "text" or args.out or os.environ.get(OUT_ENV):
        for line in lines:
            print(line, file=sys.stderr)
    conj_fail = conj.failed + (res["cascade_condition"].failed if "cascade_condition" in res else 0)
    if conj_fail:
        return EXIT_CONJECTURE
    if any(v["failed"] for v in report["properties"].values()):
        return EXIT_NUMERIC
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _tol_overrides(args, opts: dict) -> dict:
    out = dict(opts.get("tolerances", {}) or {})
    for item in getattr(args, "tol", None) or []:
        if "=" not in item:
            raise DocumentError(f"expected name=value, got {item!r}", "--tol")
        k, v = item.split("=", 1)
        if k not in TOL.as_dict():
            raise DocumentError(f"unknown tolerance {k!r}; known: {sorted(TOL.as_dict())}", "--tol")
        try:
            out[k] = float(v)
        except ValueError:
            raise DocumentError(f"cannot parse {v!r}", f"--tol {k}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"override a tolerance (names: {', '.join(TOL.as_dict())})")
    common.add_argument("--fock-n", type=int, default=None, help="Fock cutoff for oscillator subsystems")
    common.add_argument("--gauge", choices=["simple", "zero"], default=None)
    common.add_argument("--psd-mode", choices=["cholesky", "eigen"], default=None)
    common.add_argument("--out", default=None, help=f"output file (default: stdout, or ${OUT_ENV}/<command>.<ext>)")
    common.add_argument("--format", choices=["json", "csv", "text"], default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    traj = argparse.ArgumentParser(add_help=False)
    traj.add_argument("--horizon", type=float, default=1.0, help="slow-time horizon (t runs to horizon/eps)")
    traj.add_argument("--samples", type=int, default=val.N_SAMPLES)

    p = argparse.ArgumentParser(prog="adiabatic-elim",
                                description="Second-order adiabatic elimination of a fast open subsystem.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("reduce", parents=[common], help="compute the reduced model")
    r.add_argument("input")
    r.add_argument("--order", type=int, choices=[1, 2], default=2)
    r.set_defaults(func=cmd_reduce)

    v = sub.add_parser("validate", parents=[common, traj], help="compare against the full dynamics")
    v.add_argument("input")
    v.add_argument("--rho0", choices=["mixed", "zero", "plus"], default="mixed")
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("scaling", parents=[common, traj], help="fit error exponents over an epsilon sweep")
    s.add_argument("input")
    s.add_argument("--epsilons", default="0.02,0.01,0.005,0.0025")
    s.add_argument("--rho0", choices=["mixed", "zero", "plus"], default="mixed")
    s.set_defaults(func=cmd_scaling)

    e = sub.add_parser("example", parents=[common, traj], help="run a built-in example end to end")
    e.add_argument("name", choices=sorted(val.EXAMPLES))
    e.add_argument("--param", action="append", metavar="KEY=VALUE")
    e.add_argument("--rho0", choices=["mixed", "zero", "plus"], default=None)
    e.add_argument("--no-validate", action="store_true")
    e.set_defaults(func=cmd_example)

    a = sub.add_parser("audit", parents=[common], help="randomized structural property checks")
    a.add_argument("--random-instances", type=int, default=100)
    a.add_argument("--conjecture-instances", type=int, default=None,
                   help="fast systems scanned for the cascade solvability condition (default 5x)")
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DocumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConjectureViolation as exc:
        print(f"conjecture violation: {exc}", file=sys.stderr)
        return EXIT_CONJECTURE
    except EliminationError as exc:
        print(f"numerical failure at stage {exc.stage}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
