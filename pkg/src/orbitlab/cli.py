"""Command-line orchestration: load algebras and metrics from JSON, run
decompositions, densities, certificates and the verification suite, and emit
deterministic machine-readable reports.

Exit codes: 0 all checks pass, 2 a mathematical verification failed,
3 precondition or format error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import geometry, liealg, semisimple, volume
from .errors import (
    FormatError,
    IndeterminateError,
    InputError,
    JacobiError,
    OrbitlabError,
    PreconditionError,
)
from .liealg import LieAlgebraData

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 2
EXIT_PRECONDITION = 3

DEFAULT_VERIFY_BUILTINS = ("sl:2", "sl:3", "so:2,3")


@dataclass
class RunConfig:
    command: str
    builtin_names: list = field(default_factory=list)
    input_paths: list = field(default_factory=list)
    output_path: str = ""
    seed: int = 42
    tolerance: float = 1e-9
    samples: int = 8

    def __post_init__(self):
        if self.command not in {"decompose", "volume", "certify", "verify", "report"}:
            raise InputError(f"unknown command {self.command!r}")
        if self.tolerance <= 0:
            raise InputError("tolerance must be positive")
        if self.samples < 1:
            raise InputError("samples must be >= 1")
        for p in self.input_paths:
            if not os.path.exists(p):
                raise InputError(f"input path does not exist: {p}")


# ---------------------------------------------------------------------------
# Deterministic JSON
# ---------------------------------------------------------------------------

def _format_value(v):
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if np.isnan(x) or np.isinf(x):
            return json.dumps(None)
        return format(x, ".17g")
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        items = [_format_value(x) for x in np.asarray(v).tolist()] if isinstance(
            v, np.ndarray
        ) else [_format_value(x) for x in v]
        return "[" + ", ".join(items) + "]"
    if isinstance(v, dict):
        parts = [
            json.dumps(str(k)) + ": " + _format_value(v[k]) for k in sorted(v, key=str)
        ]
        return "{" + ", ".join(parts) + "}"
    raise InputError(f"cannot serialize value of type {type(v)!r}")


def write_report(report, output_path):
    """Sorted keys, 17-significant-digit floats, atomic replace."""
    text = _format_value(report) + "\n"
    directory = os.path.dirname(os.path.abspath(output_path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".orbitlab-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, output_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------

def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise FormatError(f"{path}: invalid JSON at line {err.lineno}: {err.msg}") from err


def load_algebra(path):
    """Lie-algebra JSON: {"dim", "basis", "brackets": [{"i","j","k","c"}],
    "tolerance"?} with 0-based indices and only i < j entries."""
    data = _load_json(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be an object")
    for key in ("dim", "basis", "brackets"):
        if key not in data:
            raise FormatError(f"{path}: missing field {key!r}")
    dim = data["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise FormatError(f"{path}: field 'dim' must be a positive integer")
    basis = data["basis"]
    if not isinstance(basis, list) or len(basis) != dim:
        raise FormatError(f"{path}: field 'basis' must list {dim} labels")
    tolerance = data.get("tolerance", liealg.DEFAULT_TOLERANCE)
    if not isinstance(tolerance, (int, float)) or tolerance <= 0:
        raise FormatError(f"{path}: field 'tolerance' must be a positive number")
    c = np.zeros((dim, dim, dim))
    seen = set()
    for idx, entry in enumerate(data["brackets"]):
        if not isinstance(entry, dict) or not {"i", "j", "k", "c"} <= set(entry):
            raise FormatError(f"{path}: brackets[{idx}] must have fields i, j, k, c")
        i, j, k, v = entry["i"], entry["j"], entry["k"], entry["c"]
        if not all(isinstance(x, int) for x in (i, j, k)):
            raise FormatError(f"{path}: brackets[{idx}]: indices must be integers")
        if not (0 <= i < dim and 0 <= j < dim and 0 <= k < dim):
            raise FormatError(f"{path}: brackets[{idx}]: index out of range")
        if i >= j:
            raise FormatError(
                f"{path}: brackets[{idx}]: requires i < j (antisymmetry is implied)"
            )
        if not isinstance(v, (int, float)) or not np.isfinite(v):
            raise FormatError(f"{path}: brackets[{idx}]: coefficient must be finite")
        if (i, j, k) in seen:
            raise FormatError(f"{path}: brackets[{idx}]: duplicate entry ({i},{j},{k})")
        seen.add((i, j, k))
        c[i, j, k] = v
        c[j, i, k] = -v
    return LieAlgebraData(c, basis, tolerance)


def parse_builtin(spec):
    """'sl:3', 'so:2,3', 'heisenberg:3', 'abelian:4', 'borel_sl2'."""
    name, _, rest = spec.partition(":")
    name = {"so": "so_pq"}.get(name, name)
    params = [int(x) for x in rest.split(",")] if rest else []
    return semisimple.builtin_algebra(name, params)


def _classify_inputs(paths):
    """Sort loaded JSON inputs by their keys into algebra/gram/weights/beta/
    theta buckets."""
    buckets = {"algebra": [], "gram": [], "weights": [], "beta": [], "theta": []}
    for p in paths:
        data = _load_json(p)
        if not isinstance(data, dict):
            raise FormatError(f"{p}: top level must be an object")
        if "brackets" in data:
            buckets["algebra"].append(p)
        elif "gram" in data:
            buckets["gram"].append((p, data))
        elif "weights" in data:
            buckets["weights"].append((p, data))
        elif "beta" in data:
            buckets["beta"].append((p, data))
        elif "theta" in data:
            buckets["theta"].append((p, data))
        else:
            raise FormatError(f"{p}: unrecognized input (no known top-level field)")
    return buckets


def _file_ident(path):
    with open(path, "rb") as fh:
        return "sha256:" + hashlib.sha256(fh.read()).hexdigest()[:16]


def _matrix_field(path, data, key, tolerance):
    M = np.asarray(data[key], dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise FormatError(f"{path}: field {key!r} must be a square matrix")
    if not np.all(np.isfinite(M)):
        raise FormatError(f"{path}: field {key!r} has non-finite entries")
    return M


def _gather_algebra(cfg):
    """The single algebra named by --builtin or an algebra JSON input, plus a
    Cartan involution when available."""
    buckets = _classify_inputs(cfg.input_paths)
    sources = len(cfg.builtin_names) + len(buckets["algebra"])
    if sources != 1:
        raise InputError(
            f"{cfg.command} needs exactly one algebra (--builtin or an algebra JSON); got {sources}"
        )
    if cfg.builtin_names:
        ident = cfg.builtin_names[0]
        L, theta = parse_builtin(ident)
    else:
        path = buckets["algebra"][0]
        ident = _file_ident(path)
        L = load_algebra(path)
        theta = None
    if buckets["theta"]:
        path, data = buckets["theta"][0]
        theta = liealg.LinearMapData(
            _matrix_field(path, data, "theta", cfg.tolerance), f"theta from {path}"
        )
    return L, theta, ident, buckets


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _appendix_payload(rep):
    return {
        "span": rep.span_full,
        "span_samples_used": rep.span_samples_used,
        "bracket_contains_ma": rep.bracket_contains_ma,
        "centralizers_trivial": rep.centralizers_trivial,
        "normalizer_k": rep.normalizer_k_equals_k,
    }


def _decomposition_payload(I, ident, cfg):
    return {
        "algebra": ident,
        "dims": {
            "k": I.cartan.k.rank,
            "a": I.a.rank,
            "n": I.n.rank,
            "m": I.m.rank,
        },
        "split": I.split,
        "roots": [
            {"lambda": [float(x) for x in r.functional], "mult": r.multiplicity}
            for r in I.roots
        ],
        "seed": cfg.seed,
        "tolerance": cfg.tolerance,
    }


def cmd_decompose(cfg):
    L, theta, ident, _ = _gather_algebra(cfg)
    inv = liealg.structure_invariants(L)
    if not inv.semisimple:
        raise PreconditionError("decompose requires a semisimple algebra")
    if theta is None:
        raise PreconditionError(
            "no Cartan involution available: use a builtin or supply a theta JSON"
        )
    I = semisimple.iwasawa_decompose(L, theta, seed=cfg.seed)
    report = _decomposition_payload(I, ident, cfg)
    code = EXIT_OK
    try:
        apx = semisimple.verify_appendix_c(I, samples=cfg.samples, seed=cfg.seed)
        report["appendix_c"] = _appendix_payload(apx)
        if not apx.all_pass():
            code = EXIT_VERIFICATION_FAILED
    except PreconditionError:
        report["appendix_c"] = None
    write_report(report, cfg.output_path)
    return code


def cmd_volume(cfg):
    buckets = _classify_inputs(cfg.input_paths)
    if not buckets["gram"]:
        raise InputError("volume needs an inner-product JSON ({'dim', 'gram'})")
    path, data = buckets["gram"][0]
    h = volume.InnerProductData(
        _matrix_field(path, data, "gram", cfg.tolerance), cfg.tolerance
    )
    if len(buckets["gram"]) > 1:
        path2, data2 = buckets["gram"][1]
        background = volume.InnerProductData(
            _matrix_field(path2, data2, "gram", cfg.tolerance), cfg.tolerance
        )
    else:
        background = volume.InnerProductData.identity(h.dim, cfg.tolerance)

    if buckets["weights"]:
        path3, data3 = buckets["weights"][0]
        w = np.asarray(data3["weights"], dtype=float).reshape(-1)
        W = volume.WeightVector(w, cfg.tolerance)
    elif buckets["beta"]:
        path3, data3 = buckets["beta"][0]
        label = volume.beta_plus_from_beta(_matrix_field(path3, data3, "beta", cfg.tolerance))
        W = volume.weights_from_label(label, cfg.tolerance)
    else:
        raise InputError("volume needs a weights JSON or a stratum-label JSON")
    if W.dim != h.dim:
        raise InputError("weights and inner product have different dimensions")

    v = volume.v_weighted(h, background, W)
    vN = volume.orbit_density_vN(h)
    if h.definite:
        gauge = volume.gauge_lower_triangular(h, background)
        gauge_diag = [float(x) for x in gauge.diagonal]
    else:
        gauge_diag = []
    report = {
        "v_W": v,
        "v_N": vN,
        "gauge_diag": gauge_diag,
        "degenerate": not h.definite,
        "weights": [float(x) for x in W.weights],
    }
    write_report(report, cfg.output_path)
    return EXIT_OK


def cmd_certify(cfg):
    L, _, ident, buckets = _gather_algebra(cfg)
    if not buckets["gram"]:
        raise InputError("certify needs a metric JSON ({'dim', 'gram'})")
    path, data = buckets["gram"][0]
    m = geometry.MetricData(L, _matrix_field(path, data, "gram", cfg.tolerance))
    label = None
    if buckets["beta"]:
        path2, data2 = buckets["beta"][0]
        label = volume.beta_plus_from_beta(
            _matrix_field(path2, data2, "beta", cfg.tolerance), algebra=L
        )
    report_data = geometry.nilsoliton_certificate(L, m, label, tolerance=cfg.tolerance)
    sol = report_data.soliton
    report = {
        "algebra": ident,
        "soliton": {
            "c": sol.constant,
            "D": [[float(x) for x in row] for row in sol.derivation],
            "residual": sol.residual,
            "pass": sol.passed,
        },
        "einstein_residual": report_data.einstein_residual,
        "scalar": report_data.scalar,
    }
    if label is not None:
        report["soliton"]["label_residual"] = sol.label_residual
    write_report(report, cfg.output_path)
    return EXIT_OK if sol.passed else EXIT_VERIFICATION_FAILED


def _verify_one_algebra(spec, cfg):
    L, theta = spec
    I = semisimple.iwasawa_decompose(L, theta, seed=cfg.seed)
    apx = semisimple.verify_appendix_c(I, samples=cfg.samples, seed=cfg.seed)
    payload = _appendix_payload(apx)
    payload["dims"] = {
        "k": I.cartan.k.rank,
        "a": I.a.rank,
        "n": I.n.rank,
        "m": I.m.rank,
    }
    payload["split"] = I.split
    return payload, apx.all_pass()


def cmd_verify(cfg):
    """Appendix-style structural checks plus the volume property batch;
    exit 0 only when everything passes. Partial results are still written."""
    buckets = _classify_inputs(cfg.input_paths)
    specs = list(cfg.builtin_names)
    all_pass = True
    precondition_failed = False
    algebras = {}

    jobs = []
    for path in buckets["algebra"]:
        L = load_algebra(path)
        theta = None
        if buckets["theta"]:
            tp, td = buckets["theta"][0]
            theta = liealg.LinearMapData(
                _matrix_field(tp, td, "theta", cfg.tolerance), f"theta from {tp}"
            )
        jobs.append((_file_ident(path), L, theta))
    if not specs and not buckets["algebra"]:
        specs = list(DEFAULT_VERIFY_BUILTINS)
    for spec in specs:
        L, theta = parse_builtin(spec)
        jobs.append((spec, L, theta))

    for ident, L, theta in jobs:
        if theta is None:
            algebras[ident] = {"error": "no Cartan involution supplied"}
            precondition_failed = True
            continue
        try:
            payload, ok = _verify_one_algebra((L, theta), cfg)
            algebras[ident] = payload
            all_pass = all_pass and ok
        except (PreconditionError, IndeterminateError) as err:
            algebras[ident] = {"error": str(err)}
            precondition_failed = True
        except OrbitlabError as err:
            algebras[ident] = {"error": str(err)}
            all_pass = False

    heis, _ = semisimple.builtin_algebra("heisenberg", [3])
    label = volume.heisenberg_stratum_label(3)
    batch = {
        "multiplicativity": volume.check_multiplicativity(seed=cfg.seed, samples=1000),
        "gauge_invariance": volume.check_gauge_invariance(seed=cfg.seed, samples=500),
        "continuity": volume.check_continuity(seed=cfg.seed, families=20),
        "equivariance": volume.check_equivariance(heis, label, seed=cfg.seed, samples=50),
    }
    for rec in batch.values():
        all_pass = all_pass and bool(rec["pass"])

    report = {
        "algebras": algebras,
        "volume_batch": batch,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "tolerance": cfg.tolerance,
        "pass": bool(all_pass and not precondition_failed),
    }
    write_report(report, cfg.output_path)
    if precondition_failed:
        return EXIT_PRECONDITION
    return EXIT_OK if all_pass else EXIT_VERIFICATION_FAILED


def cmd_report(cfg):
    L, _, ident, _ = _gather_algebra(cfg)
    inv = liealg.structure_invariants(L)
    B = liealg.killing_form(L)
    eigs = np.linalg.eigvalsh(B)
    thresh = L.tolerance * max(1.0, float(np.abs(eigs).max()))
    signature = {
        "positive": int(np.sum(eigs > thresh)),
        "negative": int(np.sum(eigs < -thresh)),
        "zero": int(np.sum(np.abs(eigs) <= thresh)),
    }
    report = {
        "algebra": ident,
        "dim": L.dim,
        "basis": list(L.basis_labels),
        "invariants": {
            "semisimple": inv.semisimple,
            "unimodular": inv.unimodular,
            "nilpotent": inv.nilpotent,
            "center_dim": inv.center_dim,
        },
        "nilradical_dim": liealg.nilradical(L, seed=cfg.seed).rank,
        "killing_signature": signature,
        "tolerance": cfg.tolerance,
    }
    write_report(report, cfg.output_path)
    return EXIT_OK


COMMANDS = {
    "decompose": cmd_decompose,
    "volume": cmd_volume,
    "certify": cmd_certify,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orbitlab",
        description="Numerical Lie theory: decompositions, weighted volume "
        "densities, curvature certificates and structural verification.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument(
        "--builtin",
        action="append",
        default=[],
        metavar="NAME",
        help="builtin algebra, e.g. sl:3, so:2,3, heisenberg:3, abelian:4, borel_sl2",
    )
    parser.add_argument(
        "--input", action="append", default=[], metavar="PATH", help="input JSON file"
    )
    parser.add_argument("--output", required=True, metavar="PATH")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tolerance", type=float, default=1e-9)
    parser.add_argument("--samples", type=int, default=8)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    seed = args.seed
    if seed is None:
        env = os.environ.get("ORBITLAB_SEED")
        seed = int(env) if env else 42
    try:
        cfg = RunConfig(
            command=args.command,
            builtin_names=list(args.builtin),
            input_paths=list(args.input),
            output_path=args.output,
            seed=seed,
            tolerance=args.tolerance,
            samples=args.samples,
        )
        return COMMANDS[cfg.command](cfg)
    except (InputError, FormatError, JacobiError, PreconditionError, IndeterminateError) as err:
        print(f"orbitlab: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OrbitlabError as err:
        print(f"orbitlab: verification failed: {err}", file=sys.stderr)
        return EXIT_VERIFICATION_FAILED


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
