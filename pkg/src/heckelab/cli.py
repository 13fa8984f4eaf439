"""Command line entry point: ``heckelab <command> ...`` with JSON on stdout.

Every command writes one JSON document (sorted keys) to stdout, or to
``--output``, and a short human summary to stderr. Invalid arguments
produce an error document and exit status 2.
"""

from __future__ import annotations

import argparse
import json
import math
import platform
import random
import sys
import time
from fractions import Fraction

import numpy as np

from . import __version__
from .mass_lab import thread_cap

COMMANDS = ("cosets", "satake", "plancherel-check", "amplify", "dioph", "mass-lab")


class CLIError(Exception):
    pass


class JSONArgumentParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as JSON and exits with status 2."""

    def error(self, message):
        raise CLIError(message)


def _parse_ints(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _parse_complex_list(text: str) -> tuple[complex, ...]:
    try:
        return tuple(complex(x.strip().replace("i", "j")) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}") from exc


def build_parser() -> JSONArgumentParser:
    parser = JSONArgumentParser(prog="heckelab", description="Hecke algebra and amplifier experiments")
    parser.add_argument("--seed", type=int, default=0, help="64-bit RNG seed (recorded in the output)")
    parser.add_argument("--config", help="JSON file whose keys override command options")
    parser.add_argument("--output", help="write the JSON document here instead of stdout")
    parser.add_argument("--timings", action="store_true", help="also put wall-clock timings in the JSON (stderr always has them)")
    sub = parser.add_subparsers(dest="command", parser_class=JSONArgumentParser)

    p = sub.add_parser("cosets", help="double coset counts and representatives")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--a", type=_parse_ints, required=True, help="dominant cocharacter, e.g. 1,0")
    p.add_argument("--enumerate", action="store_true", help="list the single cosets (guarded)")

    p = sub.add_parser("satake", help="Satake transform of basis elements")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--a", type=_parse_ints, action="append", required=True, help="repeatable")
    p.add_argument("--method", choices=["macdonald", "iwasawa"], default="macdonald")

    p = sub.add_parser("plancherel-check", help="Plancherel isometry residuals")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--rmax", type=float, default=3.0)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("amplify", help="single-prime amplifier for a Satake parameter")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--nu", type=_parse_complex_list, help="z1,z2,... (normalised to product 1)")
    p.add_argument("--sweep", help="tempered:N for N random tempered parameters")
    p.add_argument("--floor", type=float, default=0.05)
    p.add_argument("--p0", type=int, default=5)

    p = sub.add_parser("dioph", help="diophantine demos")
    p.add_argument("--spec", help="AlgebraSpec JSON file (default M_2(Q))")
    p.add_argument("--demo", choices=["colinear", "nearsub", "badprimes"], required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--M", type=int, default=2)

    p = sub.add_parser("mass-lab", help="covering lemma and mass bound checks")
    p.add_argument("--check", choices=["cov1", "cov2", "cover", "decay"], required=True)
    p.add_argument("--model", help="FiniteModel JSON file (default: built-in models)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--r0", type=int, default=1)
    return parser


# -- commands --------------------------------------------------------------------------


def _cmd_cosets(args, rng):
    from .hecke_cosets import (DoubleCosetKey, coset_count, enumerate_cosets, max_coset_denominator,
                               volume_ratio)

    key = DoubleCosetKey(args.p, args.d, tuple(args.a))
    out = {"a": list(key.a), "coset_count": str(coset_count(key)), "volume_ratio": str(volume_ratio(key)),
           "delta_squared_exponent": key.delta_sq_exponent, "max_denominator": str(max_coset_denominator(key))}
    if args.enumerate:
        reps = enumerate_cosets(key)
        out["representatives"] = [r.to_json() for r in reps]
        out["enumerated_count"] = len(reps)
    return out, f"|K a K / K| = {out['coset_count']}"


def _cmd_satake(args, rng):
    from .satake import HeckeFunction, satake_transform

    polys = []
    for a in args.a:
        k = HeckeFunction.basis(args.p, args.d, a)
        polys.append({"a": list(k.support[0]), **satake_transform(k, args.method).to_json()})
    return {"method": args.method, "transforms": polys}, f"{len(polys)} transform(s)"


def _cmd_plancherel(args, rng):
    from .hecke_cosets import is_prime
    from .plancherel import isometry_residual, normalization, normalization_closed_form
    from .root_data import dominant_ball
    from .satake import HeckeFunction

    if not is_prime(args.p):
        raise CLIError(f"--p {args.p} is not prime")
    rows = []
    for a in dominant_ball(args.d, Fraction(args.rmax).limit_denominator(10**6)):
        r = isometry_residual(HeckeFunction.basis(args.p, args.d, a))
        rows.append({"a": list(a), **r})
    norm = normalization(args.d, args.p)
    closed = normalization_closed_form(args.d, args.p)
    worst = max(r["relative_residual"] for r in rows)
    mass_error = abs(norm.value.real / closed - 1)
    ok = worst < args.tol and mass_error < args.tol
    out = {"rows": rows, "max_relative_residual": worst, "total_mass_error": mass_error,
           "normalization": norm.value.real, "normalization_closed_form": closed, "passed": ok}
    return out, f"max residual {worst:.2e}, mass error {mass_error:.2e}", (0 if ok else 1)


def _cmd_amplify(args, rng):
    from .amplifier import build_amplifier, tempered_sweep
    from .satake import SatakeParameter

    if args.sweep:
        kind, _, count = args.sweep.partition(":")
        if kind != "tempered" or not count.isdigit():
            raise CLIError("--sweep must look like tempered:N")
        res = tempered_sweep(args.d, [args.p], int(count), seed=args.seed, floor=args.floor, p0=args.p0)
        row = res["rows"][0]
        res["rows"] = [{**row, "chosen": [list(c) for c in row["chosen"]]}]
        return res, f"min ratio {row['min_ratio']:.3f} over {count} parameters"
    if args.nu is None:
        raise CLIError("amplify needs --nu or --sweep")
    if len(args.nu) != args.d:
        raise CLIError(f"--nu needs {args.d} entries")
    r = build_amplifier(args.d, args.p, SatakeParameter(args.nu), floor=args.floor, p0=args.p0)
    return r.to_json(), f"a = {list(r.chosen_a)}, Lambda/sqrt(support) = {r.ratio:.4f}"


def _cmd_dioph(args, rng):
    from . import diophantine as dp

    spec = dp.AlgebraSpec.load(args.spec) if args.spec else dp.matrix_algebra(2)
    pyrng = random.Random(args.seed)
    if args.demo == "colinear":
        eps = Fraction(1, 20 * args.M ** 6)
        res = dp.colinear_exhaustive(args.M, eps, dp.unit_segments(args.M))
        res["eps"] = str(eps)
        res["examples"] = [str(e) for e in res["examples"]]
        return res, f"{res['triples']} triples, {res['false_negatives']} false negatives"
    if args.demo == "nearsub":
        if spec.dim != 4:
            raise CLIError("nearsub demo instances are generated in M_2(Q)")
        stats = {}
        for kind, gen in (("perturbed", dp.perturbed_diagonal_instance), ("generic", dp.generic_instance)):
            reps = [dp.run_instance(gen(pyrng, spec), spec) for _ in range(args.trials)]
            stats[kind] = {"instances": len(reps), "proper": sum(r.proper for r in reps),
                           "condition_holds": sum(bool(r.condition_holds) for r in reps),
                           "counterexamples": sum(r.counterexample for r in reps)}
        c, cp = dp.default_condition_constants()
        return {"constants": {"c": c, "c_prime": str(cp)}, **stats}, json.dumps(stats)
    n = math.isqrt(spec.dim)
    if n * n != spec.dim:
        raise CLIError("badprimes demo needs a square-dimensional algebra")
    res = dp.bad_prime_sweep(n, args.trials, 20, pyrng)
    return res, f"max #bad/(1+log|alpha|) = {res['max_ratio']:.3f}"


def _cmd_mass_lab(args, rng):
    from . import mass_lab as ml

    if args.model:
        models = [ml.FiniteModel.load(args.model)]
    else:
        models = [ml.random_point_model(200, 2, 40, rng), ml.hypercube_model(6), ml.cyclic_model(50)]
    if args.check == "cov1":
        rows = []
        for m in models:
            rep = ml.maximal_separated_cover(m, ml.BallFamily(m, args.r0))
            rows.append({"model": m.name, **rep.to_json(), "centers": len(rep.centers)})
        ok = all(r["holds"] for r in rows)
        return {"rows": rows, "passed": ok}, f"cov1 {'holds' if ok else 'FAILS'}", (0 if ok else 1)
    if args.check == "cov2":
        s = ml.cov2_trials(models, args.trials, rng)
        return s.to_json(), f"{s.violations} violations in {s.trials} trials", (0 if s.violations == 0 else 1)
    if args.check == "cover":
        s = ml.mass_trials(args.trials, rng)
        return s.to_json(), f"{s.violations} violations in {s.trials} trials", (0 if s.violations == 0 else 1)
    n = 64
    model = ml.torus_model(n)
    psi = ml.torus_eigenfunction(n, [(3, 5), (5, 3), (-3, 5)], [1.0, 2.0, -1.0])
    radii = [1, 2, 4, 8, 16]
    eig = ml.tube_decay_experiment(model, psi, 0, radii)
    delta = np.zeros(n * n)
    delta[0] = 1.0
    control = ml.tube_decay_experiment(model, delta, 0, radii)
    return {"eigenfunction": eig, "point_mass_control": control}, f"slope {eig['slope']:.3f}"


HANDLERS = {
    "cosets": _cmd_cosets,
    "satake": _cmd_satake,
    "plancherel-check": _cmd_plancherel,
    "amplify": _cmd_amplify,
    "dioph": _cmd_dioph,
    "mass-lab": _cmd_mass_lab,
}


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def _emit(doc: dict, output: str | None):
    text = json.dumps(doc, sort_keys=True, default=_jsonable, indent=1) + "\n"
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error(message: str, output: str | None = None) -> int:
    _emit({"error": message, "status": 2}, output)
    print(f"error: {message}", file=sys.stderr)
    return 2


def _apply_config(args, parser):
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CLIError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise CLIError("config file must hold a JSON object")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise CLIError(f"unknown config key {key!r}")
        if dest in ("a",) and value is not None:
            value = [tuple(v) for v in value] if args.command == "satake" else tuple(value)
        if dest == "nu" and value is not None:
            value = tuple(complex(*v) if isinstance(v, list) else complex(v) for v in value)
        setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CLIError(f"a command is required: one of {', '.join(COMMANDS)}")
        args = _apply_config(args, parser)
    except CLIError as exc:
        return _error(str(exc))
    if not 0 <= args.seed < 2 ** 64:
        return _error("--seed must be a 64-bit unsigned integer", args.output)
    rng = np.random.default_rng(args.seed)
    start = time.perf_counter()
    try:
        result = HANDLERS[args.command](args, rng)
    except CLIError as exc:
        return _error(str(exc), args.output)
    except (ValueError, ArithmeticError) as exc:
        return _error(f"{type(exc).__name__}: {exc}", args.output)
    status = 0
    if len(result) == 3:
        payload, summary, status = result
    else:
        payload, summary = result
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("output", "timings", "command")}
    doc = {
        "command": args.command,
        "config": config,
        "seed": args.seed,
        "versions": {"heckelab": __version__, "python": platform.python_version(), "numpy": np.__version__},
        "result": payload,
        "threads": thread_cap(),
    }
    if args.timings:
        doc["timings"] = {"wall_seconds": time.perf_counter() - start}
    _emit(doc, args.output)
    print(f"[{args.command}] {summary} ({time.perf_counter() - start:.2f}s)", file=sys.stderr)
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
