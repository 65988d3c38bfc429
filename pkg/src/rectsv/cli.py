"""Command line: simulate, pipeline, detect, certify."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from rectsv.bounds import ConstantsConfig
from rectsv.certify import certify_general
from rectsv.detect import find_dyadic_intervals
from rectsv.dist import parse_distribution
from rectsv.errors import ConfigurationError, PreconditionError, ResourceLimitError
from rectsv.harness import (ExperimentConfig, ShiftSource, read_matrix, run_trials,
                            write_records_csv, write_summary_json)
from rectsv.hpart import IntervalUnion, split_matrix
from rectsv.pipeline import PipelineOptions, pipeline_certify
from rectsv.sphere import read_net


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _sizes(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for chunk in text.split(","):
        N, sep, n = chunk.strip().lower().partition("x")
        if not sep:
            raise argparse.ArgumentTypeError(f"size must look like 100x50, got {chunk!r}")
        out.append((int(N), int(n)))
    return tuple(out)


def _constants(path):
    return ConstantsConfig.from_file(path) if path else ConstantsConfig()


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def _dump(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig(
        dist=parse_distribution(args.dist), delta=args.delta, sizes=args.sizes, trials=args.trials,
        master_seed=args.seed, shift_source=ShiftSource.parse(args.shift), u_grid=args.u_grid,
        beta=args.beta, workers=args.workers,
    )
    records, summary = run_trials(cfg)
    write_records_csv(args.out, records)
    if args.json:
        write_summary_json(args.json, summary)
    for s in summary.sizes:
        p = s.percentiles
        print(f"{s.N}x{s.n}: trials={s.trials} p01={p['p01']:.4f} p05={p['p05']:.4f} p50={p['p50']:.4f}")
    for f in summary.decay_fit:
        print(f"u={f.u}: v_hat={f.v_hat:.4g} r2={f.r_squared:.3f}")
    return 0


def cmd_pipeline(args) -> int:
    A = read_matrix(args.matrix)
    B = read_matrix(args.shift) if args.shift else None
    opts = PipelineOptions(
        dist=parse_distribution(args.dist) if args.dist else None, alpha=args.alpha,
        theta=args.theta, tau0=args.tau0, max_net_points=args.max_net_points,
    )
    report = pipeline_certify(A, B, args.delta, args.beta, _constants(args.constants), args.seed, opts)
    _dump(report.to_dict(), args.json)
    if args.json:
        print(f"s_min={report.s_min:.6g} combined_lower_bound={report.combined_lower_bound}")
    return 0


def cmd_detect(args) -> int:
    res = find_dyadic_intervals(parse_distribution(args.dist), args.z, args.gamma, args.N,
                                _constants(args.constants))
    _dump(res.to_dict())
    return 0


def cmd_certify(args) -> int:
    A = read_matrix(args.matrix)
    B = read_matrix(args.shift) if args.shift else np.zeros_like(A)
    split = split_matrix(A, B, args.lam, IntervalUnion.parse(args.h_set))
    net = read_net(args.net, A.shape[1])
    cert = certify_general(split, net, None, args.epsilon, full_space_mode=args.full_space)
    _dump(cert.to_dict())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rectsv", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="Monte Carlo tails of s_min / sqrt(N)")
    s.add_argument("--dist", required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--sizes", type=_sizes, required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--shift", default="zero", help="zero | identity:L | file:PATH")
    s.add_argument("--u-grid", type=_floats, default=(0.01, 0.05, 0.1))
    s.add_argument("--out", required=True)
    s.add_argument("--json")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("pipeline", help="certify one realization end to end")
    s.add_argument("--matrix", required=True)
    s.add_argument("--shift")
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--beta", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--json")
    s.add_argument("--dist", help="law of the entries (default: empirical law of the matrix)")
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--theta", type=float)
    s.add_argument("--tau0", type=float)
    s.add_argument("--max-net-points", type=int, default=200_000)
    s.add_argument("--constants")
    s.set_defaults(func=cmd_pipeline)

    s = sub.add_parser("detect", help="dyadic interval detection")
    s.add_argument("--dist", required=True)
    s.add_argument("--z", type=float, required=True)
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--constants")
    s.set_defaults(func=cmd_detect)

    s = sub.add_parser("certify", help="net certificate for a given split")
    s.add_argument("--matrix", required=True)
    s.add_argument("--shift")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--h-set", required=True, help='"lo:hi,lo:hi"')
    s.add_argument("--net", required=True)
    s.add_argument("--epsilon", type=float, required=True)
    s.add_argument("--full-space", action="store_true")
    s.add_argument("--constants")
    s.set_defaults(func=cmd_certify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, PreconditionError, ResourceLimitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
