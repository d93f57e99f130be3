"""System documents (JSON input) and report serialization.

A document looks like::

    {
      "schema_version": "1.0",
      "subsystem_a": {"dim": 2, "hamiltonian": <op>, "jumps": [{"op": <op>, "rate": 1.0}]},
      "subsystem_b": {"dim": "fock", "hamiltonian": "zero"},
      "coupling": {"type": "hamiltonian", "terms": [{"A": <op>, "B": <op>}]},
      "epsilon": 0.01,
      "options": {"fock_n": 15, "gauge": "simple", "psd_mode": "cholesky", "tolerances": {}}
    }

An operator ``<op>`` is one of

* a builder name, e.g. ``"sigma_z"`` or ``"annihilation"`` (dimension taken from the subsystem);
* ``{"builder": name}``, ``{"sum": [op, ...]}``, ``{"product": [op, ...]}``,
  ``{"dagger": op}`` or ``{"data": rows}``, each with an optional ``"scale"``;
* a nested list of rows (explicit matrix).

Explicit entries are numbers or ``[re, im]`` pairs, row-major. Scalars
(``scale``, ``rate``) may likewise be ``[re, im]``. ``"dim": "fock"`` takes the
dimension from ``options.fock_n``, which also enables the Fock doubling audit.
"""

from __future__ import annotations

import io
import json
import math
from typing import Any

import numpy as np

from . import operators as ops
from .config import TOL
from .elim_hamiltonian import GAUGES, PSD_MODES
from .lindblad import SubsystemSpec
from .system import BipartiteSystem, CascadeCoupling, HamiltonianCoupling

SCHEMA_VERSION = "1.0"
REPORT_SCHEMA_VERSION = "1.0"

_KINDS = ("builder", "sum", "product", "dagger", "data")


class DocumentError(ValueError):
    """Malformed system document; ``location`` is a JSON path."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(message)
        self.location = location

    def __str__(self) -> str:
        return f"{self.location}: {self.args[0]}"


# ---------------------------------------------------------------- parsing

def _scalar(v, where: str) -> complex:
    if isinstance(v, bool):
        raise DocumentError("expected a number", where)
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise DocumentError(f"expected a number or [re, im] pair, got {v!r}", where)


def _real(v, where: str) -> float:
    c = _scalar(v, where)
    if c.imag != 0:
        raise DocumentError("expected a real number", where)
    return c.real


def _explicit(rows, dim: int, where: str) -> np.ndarray:
    """Nested ``dim`` rows of ``dim`` entries, or a flat row-major list of ``dim**2`` entries."""
    if not isinstance(rows, list) or not rows:
        raise DocumentError("explicit matrix must be a non-empty list", where)
    nested = len(rows) == dim and all(isinstance(r, list) and len(r) == dim for r in rows)
    if nested:
        entries = [_scalar(x, f"{where}[{i}][{j}]") for i, r in enumerate(rows) for j, x in enumerate(r)]
    elif len(rows) == dim * dim:
        entries = [_scalar(x, f"{where}[{i}]") for i, x in enumerate(rows)]
    else:
        raise DocumentError(f"explicit matrix does not match subsystem dimension {dim}", where)
    return np.array(entries, dtype=complex).reshape(dim, dim)


def _is_pair(r) -> bool:
    return len(r) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in r)


def parse_operator(spec: Any, dim: int, where: str = "$") -> np.ndarray:
    if isinstance(spec, str):
        return _builder(spec, dim, where)
    if isinstance(spec, list):
        return _explicit(spec, dim, where)
    if not isinstance(spec, dict):
        raise DocumentError(f"cannot interpret {type(spec).__name__} as an operator", where)
    kinds = [k for k in _KINDS if k in spec]
    if len(kinds) != 1:
        raise DocumentError(f"operator object needs exactly one of {list(_KINDS)}", where)
    extra = set(spec) - set(_KINDS) - {"scale"}
    if extra:
        raise DocumentError(f"unknown key(s) {sorted(extra)}", where)
    kind = kinds[0]
    body = spec[kind]
    sub = f"{where}.{kind}"
    if kind == "builder":
        if not isinstance(body, str):
            raise DocumentError("builder must be a string", sub)
        M = _builder(body, dim, sub)
    elif kind == "data":
        M = _explicit(body, dim, sub)
    elif kind == "dagger":
        M = parse_operator(body, dim, sub).conj().T
    else:
        if not isinstance(body, list) or not body:
            raise DocumentError(f"{kind} needs a non-empty list", sub)
        parts = [parse_operator(x, dim, f"{sub}[{i}]") for i, x in enumerate(body)]
        M = parts[0]
        for P in parts[1:]:
            M = M + P if kind == "sum" else M @ P
    if "scale" in spec:
        M = _scalar(spec["scale"], f"{where}.scale") * M
    return M


def _builder(name: str, dim: int, where: str) -> np.ndarray:
    if name not in ops.NAMED:
        raise DocumentError(f"unknown builder {name!r}; known: {sorted(ops.NAMED)}", where)
    try:
        return ops.NAMED[name](dim)
    except ValueError as exc:
        raise DocumentError(str(exc), where) from None


def _dim(v, fock_n, where: str) -> int:
    if v == "fock":
        if fock_n is None:
            raise DocumentError('dim "fock" needs options.fock_n', where)
        return int(fock_n)
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise DocumentError("dim must be a positive integer or \"fock\"", where)
    return v


def _subsystem(doc, key: str, fock_n) -> SubsystemSpec:
    if key not in doc:
        raise DocumentError(f"missing {key}", "$")
    d = doc[key]
    where = f"$.{key}"
    if not isinstance(d, dict):
        raise DocumentError("subsystem must be an object", where)
    dim = _dim(d.get("dim"), fock_n, f"{where}.dim")
    H = parse_operator(d.get("hamiltonian", "zero"), dim, f"{where}.hamiltonian")
    jumps = []
    for i, j in enumerate(d.get("jumps", [])):
        w = f"{where}.jumps[{i}]"
        if not isinstance(j, dict) or "op" not in j:
            raise DocumentError('jump must be an object with "op"', w)
        rate = _real(j.get("rate", 1.0), f"{w}.rate")
        jumps.append((parse_operator(j["op"], dim, f"{w}.op"), rate))
    try:
        return SubsystemSpec(dim, H, tuple(jumps))
    except ValueError as exc:
        raise DocumentError(str(exc), where) from None


def parse_document(doc: dict, overrides: dict | None = None) -> tuple[BipartiteSystem, dict]:
    """Build the system described by ``doc``; returns ``(system, options)``.

    ``overrides`` replaces entries of ``options`` (CLI flags).
    """
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DocumentError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})",
                            "$.schema_version")
    if not isinstance(doc.get("options", {}), dict):
        raise DocumentError("options must be an object", "$.options")
    opts = dict(doc.get("options", {}))
    for k, v in (overrides or {}).items():
        if v is not None:
            opts[k] = v
    fock_n = opts.get("fock_n")
    if fock_n is not None and (isinstance(fock_n, bool) or not isinstance(fock_n, int) or fock_n < 2):
        raise DocumentError("fock_n must be an integer >= 2", "$.options.fock_n")
    gauge = opts.setdefault("gauge", "simple")
    if gauge not in GAUGES:
        raise DocumentError(f"gauge must be one of {list(GAUGES)}", "$.options.gauge")
    psd_mode = opts.setdefault("psd_mode", "cholesky")
    if psd_mode not in PSD_MODES:
        raise DocumentError(f"psd_mode must be one of {list(PSD_MODES)}", "$.options.psd_mode")
    tols = opts.setdefault("tolerances", {})
    if not isinstance(tols, dict) or any(k not in TOL.as_dict() for k in tols):
        raise DocumentError(f"tolerances must map names from {sorted(TOL.as_dict())} to numbers",
                            "$.options.tolerances")

    if "epsilon" not in doc:
        raise DocumentError("missing epsilon")
    eps = _real(doc["epsilon"], "$.epsilon")
    if eps < 0:
        raise DocumentError("epsilon must be nonnegative", "$.epsilon")

    A = _subsystem(doc, "subsystem_a", fock_n)
    B = _subsystem(doc, "subsystem_b", fock_n)
    c = doc.get("coupling")
    if not isinstance(c, dict):
        raise DocumentError("missing coupling object", "$.coupling")
    ctype = c.get("type")
    try:
        if ctype == "hamiltonian":
            terms = c.get("terms")
            if not isinstance(terms, list) or not terms:
                raise DocumentError("hamiltonian coupling needs a non-empty terms list", "$.coupling.terms")
            parsed = []
            for i, t in enumerate(terms):
                w = f"$.coupling.terms[{i}]"
                if not isinstance(t, dict) or "A" not in t or "B" not in t:
                    raise DocumentError('term must be an object with "A" and "B"', w)
                parsed.append((parse_operator(t["A"], A.dim, f"{w}.A"),
                               parse_operator(t["B"], B.dim, f"{w}.B")))
            coupling = HamiltonianCoupling(tuple(parsed))
        elif ctype == "cascade":
            for k in ("a", "b"):
                if k not in c:
                    raise DocumentError(f"cascade coupling needs {k!r}", "$.coupling")
            coupling = CascadeCoupling(parse_operator(c["a"], A.dim, "$.coupling.a"),
                                       parse_operator(c["b"], B.dim, "$.coupling.b"),
                                       rate=_real(c.get("rate", 1.0), "$.coupling.rate"))
        else:
            raise DocumentError('coupling.type must be "hamiltonian" or "cascade"', "$.coupling.type")
    except DocumentError:
        raise
    except ValueError as exc:
        raise DocumentError(str(exc), "$.coupling") from None

    uses_fock = doc["subsystem_a"].get("dim") == "fock"
    rebuild = None
    if uses_fock:
        rebuild = (lambda n, _doc=doc, _ov=overrides: parse_document(_doc, {**(_ov or {}), "fock_n": n})[0])

    system = BipartiteSystem(A, B, coupling, eps, fock_n=fock_n if uses_fock else None,
                             rebuild=rebuild, label=str(doc.get("label", "")))
    return system, opts


def load_document(path: str, overrides: dict | None = None):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from None
    except OSError as exc:
        raise DocumentError(f"cannot read file: {exc.strerror}", path) from None
    return parse_document(doc, overrides)


# ---------------------------------------------------------------- output

def fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    s = format(x, ".17g")
    if s in ("-0", "0"):
        return "0.0" if s == "0" else "-0.0"
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def to_plain(obj):
    """Convert numpy and complex values to JSON-ready lists, dicts, floats."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [to_plain(v) for v in obj]
        return [to_plain(v) for v in obj.tolist()] if obj.ndim else to_plain(obj.item())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float at 17 significant digits; complex as ``[re, im]``."""
    out = io.StringIO()
    _write(to_plain(obj), out, indent, 0)
    out.write("\n")
    return out.getvalue()


def _leaf_list(v) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (list, dict)) for x in v)


def _write(v, out, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(v, dict):
        if not v:
            out.write("{}")
            return
        out.write("{\n")
        for i, (k, x) in enumerate(v.items()):
            out.write(f"{pad}{json.dumps(k)}: ")
            _write(x, out, indent, level + 1)
            out.write(",\n" if i < len(v) - 1 else "\n")
        out.write(end + "}")
    elif isinstance(v, list):
        # scalars, [re, im] pairs and matrix rows of pairs stay on one line
        if _leaf_list(v) or all(_leaf_list(x) and len(x) == 2 for x in v):
            out.write(_inline(v))
            return
        out.write("[\n")
        for i, x in enumerate(v):
            out.write(pad)
            _write(x, out, indent, level + 1)
            out.write(",\n" if i < len(v) - 1 else "\n")
        out.write(end + "]")
    else:
        out.write(_inline(v))


def _inline(v) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_inline(x) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def csv_table(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_csv_cell(x) for x in r))
    return "\n".join(lines) + "\n"


def _csv_cell(x) -> str:
    if isinstance(x, (float, np.floating)):
        return fmt_float(float(x)).replace("null", "nan")
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    s = str(x)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s
