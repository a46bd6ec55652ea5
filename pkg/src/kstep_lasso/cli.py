"""Command-line experiment driver.

Examples:

    kstep-lasso --alg ca-sfista --synthetic 20,200,0.3,0.1 --lambda 0.05 \\
        --b 0.5 --k 8 --iters 200 --procs 4 --out run.csv
    kstep-lasso --alg sfista --data abalone.libsvm --preset abalone --iters 100
    kstep-lasso --alg ca-spnm --synthetic 20,200 --lambda 0.05 --q 50 \\
        --sweep-k 1,8,32 --sweep-procs 1,4 --out sweep.csv

Flags may also come from a flat key=value file via --config; explicit
command-line flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cluster import MachineParams
from .experiments import (
    EXPERIMENT_ALGORITHMS,
    PRESETS,
    ExperimentSpec,
    SyntheticSpec,
    run_experiment,
    sweep,
)
from .solvers import SolverConfig


def _parse_synthetic(text: str) -> SyntheticSpec:
    parts = text.split(",")
    if not 2 <= len(parts) <= 5:
        raise argparse.ArgumentTypeError(
            "--synthetic takes d,n[,sparsity[,noise[,seed]]]"
        )
    d, n = int(parts[0]), int(parts[1])
    sparsity = float(parts[2]) if len(parts) > 2 else 0.3
    noise = float(parts[3]) if len(parts) > 3 else 0.0
    seed = int(parts[4]) if len(parts) > 4 else 0
    return SyntheticSpec(d=d, n=n, sparsity=sparsity, noise_sd=noise, seed=seed)


def _parse_machine(text: str) -> MachineParams:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--machine takes gamma,alpha,beta")
    return MachineParams(gamma=float(parts[0]), alpha=float(parts[1]), beta=float(parts[2]))


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in text.split(","))


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kstep-lasso",
        description="LASSO solver experiments on a metered virtual cluster",
    )
    parser.add_argument("--config", type=Path, help="flat key=value file of flags")
    parser.add_argument("--alg", choices=EXPERIMENT_ALGORITHMS, default="ca-sfista")
    data = parser.add_mutually_exclusive_group()
    data.add_argument("--data", type=Path, help="LIBSVM-format file")
    data.add_argument(
        "--synthetic",
        type=_parse_synthetic,
        help="synthetic problem d,n[,sparsity[,noise[,seed]]]",
    )
    parser.add_argument("--preset", choices=sorted(PRESETS), help="dataset parameter preset")
    parser.add_argument("--lambda", dest="lam", type=float, help="L1 weight")
    parser.add_argument("--b", type=float, help="column sampling fraction in (0,1]")
    parser.add_argument("--k", type=int, default=1, help="iterations per collective (ca-*)")
    parser.add_argument("--q", type=int, default=1, help="inner model steps (spnm)")
    parser.add_argument("--iters", type=int, default=100, help="outer iteration budget T")
    parser.add_argument(
        "--tol",
        type=float,
        help="stop at relative solution error < tol instead of running all T iterations",
    )
    parser.add_argument("--step", type=float, help="fixed step size t (default 1/L)")
    parser.add_argument(
        "--grad-at",
        choices=("auxiliary", "previous"),
        default="auxiliary",
        help="where the sampled gradient is evaluated in sfista",
    )
    parser.add_argument("--procs", type=int, default=1, help="virtual processor count P")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--machine",
        type=_parse_machine,
        default=MachineParams(),
        help="gamma,alpha,beta seconds per flop/message/word",
    )
    parser.add_argument("--workers", type=int, default=1, help="real threads per phase")
    parser.add_argument("--out", type=Path, help="CSV output path (default stdout)")
    parser.add_argument("--reference-cache", type=Path, help="reference solution .npz")
    parser.add_argument(
        "--no-reference",
        action="store_true",
        help="skip the reference solve; rel_sol_err column stays empty",
    )
    parser.add_argument("--sweep-k", type=_parse_int_list, help="grid over k, e.g. 1,8,32")
    parser.add_argument("--sweep-b", type=_parse_float_list, help="grid over b")
    parser.add_argument("--sweep-procs", type=_parse_int_list, help="grid over P")
    return parser


def _read_config_file(path: Path) -> list[str]:
    """Translate key=value lines into argv tokens."""
    argv = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        argv.extend([f"--{key.strip()}", value.strip()])
    return argv


def _apply_preset(args: argparse.Namespace) -> None:
    if args.preset is None:
        return
    preset = PRESETS[args.preset]
    if args.lam is None:
        args.lam = preset["lam"]
    if args.b is None and "b" in preset:
        args.b = preset["b"]


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config is not None:
        file_argv = _read_config_file(pre.config)
        argv = file_argv + (list(argv) if argv is not None else sys.argv[1:])
    args = parser.parse_args(argv)
    _apply_preset(args)
    if args.data is None and args.synthetic is None:
        parser.error("choose a data source: --data or --synthetic")
    if args.lam is None:
        parser.error("set --lambda (or --preset)")
    if args.b is None:
        args.b = 1.0
    return args


def spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    config = SolverConfig(
        b=args.b,
        lam=args.lam,
        step=args.step,
        T=args.iters,
        Q=args.q,
        k=args.k,
        seed=args.seed,
        tol=args.tol,
        stopping_mode="tolerance" if args.tol is not None else "fixed",
        gradient_eval=args.grad_at,
    )
    return ExperimentSpec(
        algorithm=args.alg,
        data=args.synthetic if args.synthetic is not None else args.data,
        config=config,
        procs=args.procs,
        machine=args.machine,
        out=args.out,
        reference_cache=args.reference_cache,
        track_reference=not args.no_reference,
        workers=args.workers,
    )


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        spec = spec_from_args(args)
        if args.sweep_k or args.sweep_b or args.sweep_procs:
            text = sweep(
                spec,
                ks=args.sweep_k or (spec.config.k,),
                bs=args.sweep_b,
                procs=args.sweep_procs,
            )
        else:
            text = run_experiment(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
