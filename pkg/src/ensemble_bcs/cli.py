"""Command-line entry point: ``ensemble-bcs {generate,solve,sweep}``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .ensemble import Aggregation, EnsembleConfig, TiePolicy, recover_ensemble, recover_single
from .model import BcsInstance, objective, recovery_error, sparsity
from .samplers import CapacityError, ExactSampler, SaConfig, SimulatedAnnealingSampler, set_threads


class UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _float_lists(text: str) -> list:
    if text.strip().lower() in ("", "none"):
        return []
    return [_floats(part) for part in text.split(";") if part.strip()]


def _common_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=_u64, default=0, help="master seed for all randomness (default: %(default)s)")
    p.add_argument("--threads", type=_positive_int, default=1,
                   help="worker threads for annealing reads; output does not depend on it (default: %(default)s)")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def _sampler_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("sampler")
    g.add_argument("--sampler", choices=["exact", "sa"], default="sa", help="(default: %(default)s)")
    g.add_argument("--reads", type=_positive_int, default=1000, help="annealing reads per QUBO (default: %(default)s)")
    g.add_argument("--sweeps", type=_positive_int, default=1000, help="sweeps per read (default: %(default)s)")
    g.add_argument("--beta-initial", type=float, default=0.1,
                   help="initial inverse temperature of the geometric schedule (default: %(default)s)")
    g.add_argument("--beta-final", type=float, default=None,
                   help="final inverse temperature (default: 10 / median |nonzero Q_ij|)")
    g.add_argument("--post-process", type=_bool, default=True,
                   help="apply greedy bit-flip descent to every sample (default: %(default)s)")
    g.add_argument("--lambda-mode", choices=[m.value for m in bench.LambdaMode], default="absolute",
                   help="relative: penalties are multiples of mean |Q_ii| at zero penalty (default: %(default)s)")
    return p


def _output_parent(default_format: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--format", choices=["csv", "markdown", "json"], default=default_format,
                   help="report format (default: %(default)s)")
    p.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    return p


def _ensemble_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--aggregation", choices=[a.value for a in Aggregation], default=Aggregation.BEST_PER_LAMBDA.value,
                   help="(default: %(default)s)")
    p.add_argument("--tie-policy", choices=[t.value for t in TiePolicy], default=TiePolicy.ROUND_DOWN.value,
                   help="rounding of a bit mean of exactly 0.5 (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parent()
    sampler = _sampler_parent()
    parser = argparse.ArgumentParser(prog="ensemble-bcs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", parents=[common], help="write a random instance set",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    g.add_argument("--n", type=_positive_int, default=60, help="signal length")
    g.add_argument("--m", type=_positive_int, default=30, help="number of measurements")
    g.add_argument("--k", type=int, default=5, help="ones per signal")
    g.add_argument("--count", type=_positive_int, default=50, help="number of instances")
    g.add_argument("--matrix", choices=[mm.value for mm in bench.MatrixModel], default="gaussian_unit")
    g.add_argument("--noise", type=float, default=0.0, help="std of additive Gaussian measurement noise")
    g.add_argument("--out-dir", type=Path, default=Path("instances"))
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", parents=[common, sampler, _output_parent("json")],
                       help="recover one instance at one penalty or an ensemble")
    s.add_argument("--instance", type=Path, required=True)
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--lambda", dest="lam", type=float, help="single penalty value")
    grp.add_argument("--lambdas", type=_floats, help="comma-separated penalties for an ensemble")
    _ensemble_args(s)
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", parents=[common, sampler, _output_parent("csv")],
                       help="recovery statistics over an instance set")
    w.add_argument("--instances", type=Path, required=True, help="instance directory")
    w.add_argument("--lambdas", type=_floats, default=list(bench.DEFAULT_LAMBDAS),
                   help="single penalties (default: 12,14,16,18,20)")
    w.add_argument("--ensembles", type=_float_lists, default=[list(bench.DEFAULT_ENSEMBLE)],
                   help="semicolon-separated ensembles, e.g. '12,16,20;14,18' (default: 12,16,20)")
    _ensemble_args(w)
    w.set_defaults(func=cmd_sweep)
    return parser


def _make_sampler(args):
    if args.sampler == "exact":
        return ExactSampler()
    try:
        cfg = SaConfig(
            num_reads=args.reads,
            sweeps_per_read=args.sweeps,
            beta_initial=args.beta_initial,
            beta_final=args.beta_final,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc))
    return SimulatedAnnealingSampler(cfg)


def _ensemble_cfg(args, lambdas) -> EnsembleConfig:
    try:
        return EnsembleConfig(tuple(lambdas), args.aggregation, args.tie_policy)
    except ValueError as exc:
        raise UsageError(str(exc))


def _write(args, text: str, summary: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text)
        print(summary)


def cmd_generate(args) -> int:
    try:
        cfg = bench.GenConfig(args.n, args.m, args.k, args.count, args.matrix, args.noise, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc))
    instances = bench.generate(cfg)
    bench.save_instances(instances, args.out_dir, cfg)
    print(f"wrote {len(instances)} instances (N={cfg.n_vars}, m={cfg.m}, k={cfg.k}) to {args.out_dir}")
    return 0


def cmd_solve(args) -> int:
    inst = BcsInstance.load(args.instance)
    sampler = _make_sampler(args)
    mode = bench.LambdaMode(args.lambda_mode)
    if args.lam is not None:
        if args.lam < 0:
            raise UsageError("lambda must be nonnegative")
        lam = bench.effective_lambda(inst, args.lam, mode)
        s = recover_single(inst, lam, sampler, args.post_process, seed=args.seed)
        doc = {
            "lambda": args.lam,
            "lambda_effective": lam,
            "x": list(s.x),
            "energy": s.energy,
            "objective": objective(inst, s.x, lam),
            "sparsity": sparsity(s.x),
        }
        if inst.x_true is not None:
            doc["error"] = recovery_error(inst.x_true, s.x)
    else:
        cfg = _ensemble_cfg(args, args.lambdas)
        if mode is bench.LambdaMode.RELATIVE:
            unit = bench.lambda_unit(inst)
            cfg = _ensemble_cfg(args, [v * unit for v in cfg.lambdas])
        result = recover_ensemble(inst, cfg, sampler, args.post_process, seed=args.seed)
        doc = result.to_dict()
        doc["sparsity"] = sparsity(result.x_hat)
        if inst.x_true is not None:
            doc["error"] = recovery_error(inst.x_true, result.x_hat)
    _write(args, json.dumps(doc) + "\n", f"wrote recovery to {args.out}")
    return 0


def cmd_sweep(args) -> int:
    instances, manifest = bench.load_instances(args.instances)
    if not instances:
        raise UsageError(f"no instances found in {args.instances}")
    shapes = {(i.m, i.n_vars) for i in instances}
    if len(shapes) > 1:
        raise UsageError(f"instance directory mixes geometries {sorted(shapes)}")
    if any(v < 0 for v in args.lambdas):
        raise UsageError("lambdas must be nonnegative")
    sampler = _make_sampler(args)
    ensembles = [_ensemble_cfg(args, e) for e in args.ensembles]
    extra = {}
    gen = manifest.get("gen_config")
    if gen:
        extra["matrix_model"] = gen["matrix_model"]
        extra["noise_sigma"] = gen["noise_sigma"]
        extra["instance_seed"] = gen["seed"]
    progress = None
    if args.verbose:
        def progress(done, total):
            print(f"  {done}/{total} instances", file=sys.stderr)
    try:
        report = bench.run_sweep(
            instances, args.lambdas, ensembles, sampler, args.post_process,
            lambda_mode=args.lambda_mode, seed=args.seed, metadata=extra, progress=progress,
        )
    except bench.ProtocolError as exc:
        raise UsageError(str(exc))
    _write(args, bench.emit_report(report, args.format), f"wrote {len(report.rows)}-row report to {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    set_threads(args.threads)
    try:
        return args.func(args)
    except (UsageError, CapacityError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
