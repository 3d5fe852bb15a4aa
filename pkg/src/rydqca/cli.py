"""Command-line front end.

Every command reads a JSON config, validates it against a schema that rejects
unknown keys, writes its outputs into ``--out`` and records a ``manifest.json``
holding the config, package version, seeds and output names.  A manifest can
be passed back as ``--config`` to rerun the same experiment.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Sequence

import jsonschema
import numpy as np

from . import __version__
from .chaos import (Observable, clifford_pauli_weight, estimate_g, exact_g_series, light_cone_sizes,
                    tetra_moments)
from .compiler import PulseLibrary, QcaModel, compile_model, verify
from .control import GrapeProblem, time_optimal_scan
from .errors import ConfigurationError, RydqcaError
from .lattice import LatticeSpec, blockade_audit, build_array, pxp_chain_reference

log = logging.getLogger("rydqca")

# ----------------------------------------------------------------------------
# schemas
# ----------------------------------------------------------------------------

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

LATTICE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["family", "extent"],
    "properties": {
        "family": {"enum": ["Chain", "Square", "Honeycomb"]},
        "extent": {"type": "array", "items": _POS_INT, "minItems": 1, "maxItems": 2},
        "boundary": {"enum": ["Open", "Periodic"]},
        "prune_dangling": {"type": "boolean"},
    },
}

MODEL_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["variant", "couplings", "tau", "lattice"],
    "properties": {
        "variant": {"enum": ["KickedIsing", "InhomKickedIsing", "KitaevFloquet", "TwoLocal"]},
        "couplings": {"type": "object", "additionalProperties": _NUM},
        "tau": _NUM,
        "lattice": LATTICE_SCHEMA,
    },
}

_COMPILE_PROPS = {
    "model": MODEL_SCHEMA,
    "steps": _POS_INT,
    "physical": {"type": "boolean"},
    "uniform_degree": {"type": "boolean"},
    "omega": {"type": "number", "exclusiveMinimum": 0},
    "grape": {
        "type": "object",
        "additionalProperties": False,
        "properties": {"restarts": _POS_INT, "seed": {"type": "integer"}},
    },
    "verify": {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "enabled": {"type": "boolean"},
            "repetitions": {"type": "integer", "minimum": 0},
            "n_random": {"type": "integer", "minimum": 0},
            "seed": {"type": "integer"},
            "threshold": {"type": "number", "minimum": 0, "maximum": 1},
            "method": {"enum": ["exact", "substep"]},
        },
    },
}

COMPILE_SCHEMA = {"type": "object", "additionalProperties": False, "required": ["model"],
                  "properties": _COMPILE_PROPS}

GRAPE_SCAN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["sizes", "phases", "T_grid"],
    "properties": {
        "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1, "maximum": 3}, "minItems": 1},
        "base_phases": {"type": "array", "items": _NUM},
        "phase_index": {"type": "integer", "minimum": 0},
        "phases": {"type": "array", "items": _NUM},
        "T_grid": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "omega": {"type": "number", "exclusiveMinimum": 0},
        "M": _POS_INT,
        "threshold": {"type": "number", "exclusiveMinimum": 0},
        "restarts": _POS_INT,
        "seed": {"type": "integer"},
        "refine": {"type": "number", "exclusiveMinimum": 0},
        "negative_check": {"type": "boolean"},
    },
}

CHAOS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model", "observable", "t_max"],
    "properties": {
        "model": MODEL_SCHEMA,
        "observable": {
            "type": "object",
            "additionalProperties": False,
            "required": ["letter", "sites"],
            "properties": {"letter": {"enum": ["X", "Y", "Z"]},
                           "sites": {"type": "array", "items": {"type": "integer", "minimum": 0},
                                     "minItems": 1}},
        },
        "t_max": {"type": "integer", "minimum": 0},
        "mode": {"enum": ["sample", "exact", "clifford"]},
        "n_samples": _POS_INT,
        "n_batches": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "shots": {"type": ["integer", "null"], "minimum": 2},
        "histogram_times": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "bins": _POS_INT,
    },
}

AUDIT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lattice": LATTICE_SCHEMA,
        "gadget_sizes": {"oneOf": [{"type": "integer", "minimum": 1, "maximum": 3},
                                   {"type": "object",
                                    "additionalProperties": {"type": "integer", "minimum": 1, "maximum": 3}}]},
        "reference_chain": {
            "type": "object",
            "additionalProperties": False,
            "required": ["length"],
            "properties": {"length": _POS_INT, "boundary": {"enum": ["Open", "Periodic"]}},
        },
        "exponent": {"type": "number"},
    },
    "oneOf": [{"required": ["lattice"]}, {"required": ["reference_chain"]}],
}

MOMENTS_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {"k_max": {"type": "integer", "minimum": 1, "maximum": 8}},
}

SCHEMAS = {"compile": COMPILE_SCHEMA, "verify": COMPILE_SCHEMA, "grape-scan": GRAPE_SCAN_SCHEMA,
           "chaos": CHAOS_SCHEMA, "audit": AUDIT_SCHEMA, "moments": MOMENTS_SCHEMA}


def validate_config(command: str, config: dict) -> dict:
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid {command} config at {where}: {exc.message}") from None
    return config


# ----------------------------------------------------------------------------
# output helpers
# ----------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    if v is None:
        return ""
    return str(v)


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def model_hash(model: QcaModel) -> str:
    blob = json.dumps(model.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _model(config: dict) -> QcaModel:
    return QcaModel.from_dict(config["model"])


# ----------------------------------------------------------------------------
# commands; each returns (exit code, summary dict, seeds, output file names)
# ----------------------------------------------------------------------------

def _compile_and_maybe_verify(config: dict, out: Path, force_verify: bool):
    model = _model(config)
    grape = config.get("grape", {})
    omega = config.get("omega", 1.0)
    library = PulseLibrary(omega, restarts=grape.get("restarts", 6), seed=grape.get("seed", 0))
    report = compile_model(model, steps=config.get("steps", 1), physical=config.get("physical", False),
                           uniform_degree=config.get("uniform_degree", False), omega=omega, library=library)
    vconf = config.get("verify", {})
    files = ["circuit.json", "program.json", "report.json"]
    code = 0
    threshold = vconf.get("threshold", 1 - 1e-6)
    if force_verify or vconf.get("enabled", True):
        fid = verify(report, repetitions=vconf.get("repetitions", 1), n_random=vconf.get("n_random", 20),
                     seed=vconf.get("seed", 1234), method=vconf.get("method", "exact"))
        code = 0 if fid >= threshold else 3
    write_json(out / "circuit.json", report.circuit.to_dict())
    write_json(out / "program.json", report.program.to_dict())
    summary = report.to_dict()
    summary["segments_per_step"] = report.segment_count / report.steps
    summary["threshold"] = threshold
    summary["model_hash"] = model_hash(model)
    write_json(out / "report.json", summary)
    seeds = {"grape": grape.get("seed", 0), "verify": vconf.get("seed", 1234)}
    return code, {"fidelity": report.fidelity, "segments": report.segment_count}, seeds, files


def cmd_compile(config: dict, out: Path, threads: int = 1):
    """Compile a QCA model; verify unless ``verify.enabled`` is false."""
    return _compile_and_maybe_verify(config, out, force_verify=False)


def cmd_verify(config: dict, out: Path, threads: int = 1):
    """Compile and always verify against the ideal circuit."""
    return _compile_and_maybe_verify(config, out, force_verify=True)


def cmd_grape_scan(config: dict, out: Path, threads: int = 1):
    """Time-optimal scan of GRAPE feasibility over a grid of target phases."""
    sizes = tuple(config["sizes"])
    phases = [float(p) for p in config["phases"]]
    if not phases:
        raise ConfigurationError("grape-scan needs a non-empty phase grid")
    if not config["T_grid"]:
        raise ConfigurationError("grape-scan needs a non-empty T grid")
    index = config.get("phase_index", len(sizes) - 1)
    if index >= len(sizes):
        raise ConfigurationError(f"phase_index {index} out of range for {len(sizes)} sizes")
    base = list(config.get("base_phases", [0.0] * len(sizes)))
    if len(base) != len(sizes):
        raise ConfigurationError("base_phases must have one entry per size")
    seed = config.get("seed", 0)
    template = GrapeProblem(sizes, tuple(base), omega=config.get("omega", 1.0), M=config.get("M", 100),
                            threshold=config.get("threshold", 1e-10))
    grid = sorted((float(t) for t in config["T_grid"]), reverse=True)
    targets = list(phases)
    if config.get("negative_check", True):
        nonzero = [p for p in phases if abs(np.sin(p / 2)) > 1e-12 and abs(np.sin(p)) > 1e-12]
        if nonzero:
            targets.append(-nonzero[-1])
    curve_rows, tmin_rows = [], []
    tmins = {}
    for phi in targets:
        ph = list(base)
        ph[index] = phi
        res = time_optimal_scan(template.with_phases(tuple(ph)), grid, restarts=config.get("restarts", 3),
                                seed=seed, refine=config.get("refine", 1e-3))
        for T, err in sorted(res.curve):
            curve_rows.append((phi, T, err))
        err = res.result.error if res.result is not None else res.best_error
        tmin_rows.append((phi, res.T_min, err, res.feasible))
        tmins[phi] = res.T_min
        log.info("phi=%.6g T_min=%s err=%.3g", phi, res.T_min, err)
    write_csv(out / "scan_curve.csv", ["phi", "T", "err_min"], curve_rows)
    write_csv(out / "t_min.csv", ["phi", "T_min", "err", "feasible"], tmin_rows)
    summary = {"T_min": {repr(k): v for k, v in tmins.items()}}
    if len(targets) > len(phases):
        neg = targets[-1]
        a, b = tmins.get(-neg), tmins.get(neg)
        summary["symmetric"] = (a is None and b is None) or (
            a is not None and b is not None and abs(a - b) <= 2 * config.get("refine", 1e-3))
    return 0, summary, {"scan": seed}, ["scan_curve.csv", "t_min.csv"]


def cmd_chaos(config: dict, out: Path, threads: int = 1):
    """Estimate ``g^O(t)`` by sampling, from the exact oracle or by Clifford propagation."""
    model = _model(config)
    obs = Observable(config["observable"]["letter"], tuple(config["observable"]["sites"]))
    t_max = config["t_max"]
    mode = config.get("mode", "sample")
    mh = model_hash(model)
    files = ["g.csv"]
    seeds = {}
    if mode == "clifford":
        res = clifford_pauli_weight(model, obs, t_max)
        cone = light_cone_sizes(model, obs.sites[0], t_max)
        write_csv(out / "g.csv", ["t", "g", "weight", "light_cone", "model_hash"],
                  [(t, float(res.g[t]), int(res.weights[t]), int(cone[t]), mh) for t in range(t_max + 1)])
        return 0, {"weights": res.weights.tolist()}, seeds, files
    if mode == "exact":
        g = exact_g_series(model, obs, t_max)
        write_csv(out / "g.csv", ["t", "g", "model_hash"], [(t, float(g[t]), mh) for t in range(t_max + 1)])
        return 0, {"g_final": float(g[-1])}, seeds, files
    n_samples = config.get("n_samples", 1000)
    seed = config.get("seed", 0)
    seeds["samples"] = seed
    est = estimate_g(model, obs, t_max, n_samples, seed=seed, shots=config.get("shots"),
                     n_batches=config.get("n_batches", 10), threads=threads)
    write_csv(out / "g.csv", ["t", "g", "uncertainty", "N_s", "model_hash"],
              [(t, float(est.values[t]), float(est.uncertainty[t]), n_samples, mh) for t in est.times])
    hist_times = config.get("histogram_times", [])
    if hist_times:
        bins = np.linspace(-1, 1, config.get("bins", 40) + 1)
        rows = []
        for t in hist_times:
            if t > t_max:
                raise ConfigurationError(f"histogram time {t} exceeds t_max={t_max}")
            counts, _ = np.histogram(est.means[:, t], bins=bins)
            rows += [(t, float(lo), float(hi), int(c)) for lo, hi, c in zip(bins[:-1], bins[1:], counts)]
        write_csv(out / "histograms.csv", ["t", "bin_lo", "bin_hi", "count"], rows)
        files.append("histograms.csv")
    return 0, {"g_final": float(est.values[-1])}, seeds, files


def cmd_audit(config: dict, out: Path, threads: int = 1):
    """Blockade audit of a decorated lattice or of the single-species chain reference."""
    if "reference_chain" in config:
        rc = config["reference_chain"]
        array = pxp_chain_reference(rc["length"], rc.get("boundary", "Periodic"))
        label = f"chain-reference-{rc['length']}"
    else:
        spec = LatticeSpec.from_dict(config["lattice"])
        array = build_array(spec, config.get("gadget_sizes", 1))
        label = f"{spec.family}-{'x'.join(map(str, spec.extent))}-{spec.boundary}"
    audit = blockade_audit(array, exponent=config.get("exponent", 6))
    write_csv(out / "audit.csv",
              ["array", "n_atoms", "ratio", "ratio_all_pairs", "closed_form", "worst_distance", "exponent"],
              [(label, array.n_atoms, audit.ratio_unwanted_over_blockade, audit.ratio_all_pairs,
                audit.closed_form, audit.worst_distance, audit.exponent)])
    return 0, {"ratio": audit.ratio_unwanted_over_blockade}, {}, ["audit.csv"]


def cmd_moments(config: dict, out: Path, threads: int = 1):
    """Compare tetrahedral moments with their closed forms and with Haar moments."""
    rows = []
    for k in range(1, config.get("k_max", 4) + 1):
        m = tetra_moments(k)
        rows.append((k, m.closed_form_error, m.haar_error))
    write_csv(out / "moments.csv", ["k", "closed_form_error", "haar_error"], rows)
    return 0, {"k_max": len(rows)}, {}, ["moments.csv"]


COMMANDS: dict[str, Callable] = {"compile": cmd_compile, "verify": cmd_verify, "grape-scan": cmd_grape_scan,
                                 "chaos": cmd_chaos, "audit": cmd_audit, "moments": cmd_moments}


# ----------------------------------------------------------------------------
# driver
# ----------------------------------------------------------------------------

def load_config(path: str | None, command: str) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    if isinstance(data, dict) and data.get("rydqca_manifest"):
        if data.get("command") != command:
            raise ConfigurationError(f"manifest was written by {data.get('command')!r}, not {command!r}")
        data = data["config"]
    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object")
    return data


def resolve_threads(arg: int | None) -> int:
    if arg is not None:
        threads = arg
    else:
        env = os.environ.get("RYDQCA_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise ConfigurationError(f"RYDQCA_THREADS must be an integer, got {env!r}") from None
    if threads < 1:
        raise ConfigurationError("thread count must be positive")
    return threads


def run(command: str, config: dict, out: Path, threads: int = 1) -> int:
    validate_config(command, config)
    out.mkdir(parents=True, exist_ok=True)
    code, summary, seeds, files = COMMANDS[command](config, out, threads)
    write_json(out / "manifest.json", {
        "rydqca_manifest": True,
        "command": command,
        "version": __version__,
        "config": config,
        "seeds": seeds,
        "threads": threads,
        "outputs": files,
        "summary": summary,
        "exit_code": code,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    })
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydqca",
        description="Compile, verify and analyse quantum cellular automata on dual-species Rydberg arrays.",
        epilog="Exit codes: 0 success, 2 configuration error, 3 numeric or convergence failure, "
               "4 resource cap exceeded.",
    )
    parser.add_argument("--version", action="version", version=f"rydqca {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__.strip().splitlines()[0], description=fn.__doc__)
        p.add_argument("--config", "-c", required=name != "moments",
                       help="JSON config or a manifest.json from an earlier run")
        p.add_argument("--out", "-o", default=".", help="output directory (default: current)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads; falls back to $RYDQCA_THREADS, then 1")
        p.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")
        if name in ("compile", "verify"):
            mode = p.add_mutually_exclusive_group()
            mode.add_argument("--physical", dest="physical", action="store_const", const=True, default=None,
                              help="synthesize single-qubit gates as global pulses with freeze masks")
            mode.add_argument("--exact-singles", dest="physical", action="store_const", const=False,
                              help="apply single-qubit gates as exact unitary segments (default)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = resolve_threads(args.threads)
        config = load_config(args.config, args.command)
        if getattr(args, "physical", None) is not None:
            # recorded in the manifest so a rerun from it uses the same mode
            config = {**config, "physical": args.physical}
        code = run(args.command, config, Path(args.out), threads)
    except RydqcaError as exc:
        print(f"rydqca {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    summary = json.loads((Path(args.out) / "manifest.json").read_text())["summary"]
    print(json.dumps(summary, default=_json_default))
    return code


if __name__ == "__main__":
    sys.exit(main())
