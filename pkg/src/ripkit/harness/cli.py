"""Command line entry point ``ripkit``.

Every subcommand reads its parameters from ``--config FILE.json`` and/or
repeated ``--param KEY=VALUE`` options (values parsed as JSON when
possible).  Array inputs are CSV paths; linear maps are CSV files with a
JSON sidecar of the same stem.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .. import constructions, division, nsp, rip
from ..errors import RipkitError
from ..recovery import LinearMap, RecoveryInstance, solve_matrix, solve_signal
from . import generators as gen
from . import io
from .experiments import ExperimentConfig, run_experiment
from .oracle import OracleConfig, run_oracle_mc

COMMANDS = ("gen", "rip", "nsp", "solve", "counterexample", "bounds", "oracle", "divide")


def _parse_param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def build_parser():
    parser = argparse.ArgumentParser(prog="ripkit", description="Sharp RIP toolkit.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, help="JSON file of parameters")
    parser.add_argument("--param", action="append", type=_parse_param, default=[],
                        metavar="KEY=VALUE", help="override one parameter")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path)
    parser.add_argument("--format", choices=("csv", "json"), default="json")
    return parser


def _load_params(args):
    params = {}
    if args.config is not None:
        with open(args.config) as fh:
            params.update(json.load(fh))
    params.update(dict(args.param))
    if args.seed is not None:
        params["seed"] = args.seed
    return params


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    if isinstance(obj, LinearMap):
        return {"q": obj.q, "m": obj.m, "n": obj.n}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(payload, out, stdout):
    text = json.dumps(payload, default=_jsonable, indent=2, sort_keys=True)
    if out is None:
        stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n")


def _load_operator(path):
    path = Path(path)
    if io.sidecar_path(path).exists():
        return io.read_map(path)
    A = io.read_array(path)
    return A if A.ndim == 2 else A[None, :]


def _write_value(value, out, fmt, stdout):
    if out is not None and fmt == "csv":
        if isinstance(value, LinearMap):
            io.write_map(out, value)
        else:
            io.write_array(out, value)
    else:
        _emit(value, out, stdout)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_gen(p, args, stdout):
    kind = p.pop("instance")
    value = gen.gen_instance(kind, p.pop("seed", 0), **p)
    _write_value(value, args.out, args.format, stdout)


def cmd_rip(p, args, stdout):
    op = _load_operator(p["operator"])
    if isinstance(op, LinearMap):
        est = rip.ric_lower_matrix(op, p["r"], restarts=p.get("restarts", 32),
                                   iters=p.get("iters", 200), seed=p.get("seed", 0))
    else:
        est = rip.ric_exact_signal(op, p["k"], budget=p.get("budget", rip.DEFAULT_BUDGET))
    _emit(asdict(est), args.out, stdout)


def cmd_nsp(p, args, stdout):
    op = _load_operator(p["operator"])
    if isinstance(op, LinearMap):
        w = nsp.nsp_falsify_matrix(op, p["r"], budget=p.get("budget", 200), seed=p.get("seed", 0))
        payload = {"falsified": w is not None}
        if w is not None:
            payload.update(asdict(w))
    else:
        payload = asdict(nsp.nsp_certify_signal(op, p["k"], budget=p.get("budget", nsp.DEFAULT_BUDGET)))
    _emit(payload, args.out, stdout)


def cmd_solve(p, args, stdout):
    op = _load_operator(p["operator"])
    obs = np.atleast_1d(io.read_array(p["observation"])).ravel()
    inst = RecoveryInstance(op, obs, p.get("constraint", "equality"), float(p.get("radius", 0.0)))
    if inst.is_matrix:
        rep = solve_matrix(inst, tol=p.get("tol", 1e-8))
    else:
        rep = solve_signal(inst, method=p.get("method", "lp"), tol=p.get("tol", 1e-8))
    if args.format == "csv" and args.out is not None:
        io.write_array(args.out, rep.solution)
    else:
        payload = asdict(rep)
        payload.pop("history")
        _emit(payload, args.out, stdout)


def cmd_counterexample(p, args, stdout):
    kind = p.get("kind", "signal")
    if kind == "signal":
        kit = constructions.sharp_counterexample_signal(p["p"], p["k"])
    elif kind == "matrix":
        kit = constructions.sharp_counterexample_matrix(p["m"], p["n"], p["r"])
    else:
        raise RipkitError(f"unknown counterexample kind {kind!r}")
    if args.format == "csv" and args.out is not None:
        _write_value(kit.operator, args.out, "csv", stdout)
        return
    payload = {"kind": kind, "order": kit.order, "claimed_ric": kit.claimed_ric,
               "operator": kit.operator, "anchor": kit.anchor, "colliding_pair": list(kit.colliding_pair)}
    if kit.is_matrix:
        payload["operator"] = kit.operator.rep
        payload["shape"] = {"q": kit.operator.q, "m": kit.operator.m, "n": kit.operator.n}
    _emit(payload, args.out, stdout)


def _summary_path(out):
    return out.with_name(out.stem + ".summary.json")


def _write_experiment(records, summary, args, stdout):
    if args.format == "csv" and args.out is not None:
        io.write_results(args.out, records)
        io.write_json(_summary_path(args.out), summary)
    else:
        _emit({"summary": summary, "records": [asdict(r) for r in records]}, args.out, stdout)


def cmd_bounds(p, args, stdout):
    p.setdefault("kind", "noisy_bounds")
    if args.out is not None:
        p.setdefault("out", str(args.out))
    result = run_experiment(ExperimentConfig.from_dict(p))
    _write_experiment(result.records, result.summary, args, stdout)


def cmd_oracle(p, args, stdout):
    summary = run_oracle_mc(OracleConfig(**p))
    payload = asdict(summary)
    records = payload.pop("records")
    if args.format == "csv" and args.out is not None:
        with open(args.out, "w") as fh:
            fh.write("trial,lhs,rhs,violated,noise_dual,iters\n")
            for r in summary.records:
                fh.write(f"{r.trial},{io.format_float(r.lhs)},{io.format_float(r.rhs)},"
                         f"{int(r.violated)},{io.format_float(r.noise_dual)},{r.iters}\n")
        io.write_json(_summary_path(args.out), payload)
    else:
        payload["records"] = records
        _emit(payload, args.out, stdout)


def cmd_divide(p, args, stdout):
    a = p["a"]
    if isinstance(a, str):
        a = io.read_array(a)
    t = division.divide(np.asarray(a, dtype=float), p["r"], float(p.get("slack", 0.0)))
    if args.format == "csv" and args.out is not None:
        io.write_array(args.out, t.s)
        return
    _emit({"r": t.r, "slack": t.slack, "s": t.s, "violations": division.tableau_violations(t)},
          args.out, stdout)


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def main(argv=None, stdout=None):
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        params = _load_params(args)
        HANDLERS[args.command](params, args, stdout)
    except (RipkitError, KeyError, TypeError, OSError) as exc:
        sys.stderr.write(f"ripkit {args.command}: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
