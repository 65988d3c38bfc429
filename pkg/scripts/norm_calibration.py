"""Pilot for the bounded-matrix norm constant.

Samples ||W|| / (R sqrt(N)) for W with i.i.d. bounded mean-zero entries, and
the regular-part ratio ||<A - lam>_H|| / (R sqrt(N)) that the incompressible
regime of the pipeline compares against its budget. The default constant 2.0
should sit above every observed ratio.

    python3 scripts/norm_calibration.py [--trials 200]
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from rectsv.certify import operator_norm
from rectsv.detect import find_dyadic_intervals
from rectsv.dist import EntryDistribution, sample_matrix, select_shift_and_case
from rectsv.harness import component_experiment
from rectsv.hpart import split_matrix
from rectsv.rng import derive_seed


def regular_ratios(law, N, n, trials, seed, beta=0.5):
    sel = select_shift_and_case(law, beta, N)
    det = find_dyadic_intervals(law, sel.z, sel.gamma, N)
    R = 2.0 ** (det.ell + 2)
    out = []
    for t in range(trials):
        A = sample_matrix(law, N, n, derive_seed(seed, t))
        g = operator_norm(split_matrix(A, np.zeros_like(A), det.lam, det.H).regular)
        out.append(g / (R * math.sqrt(N)))
    return np.array(out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=44)
    args = ap.parse_args(argv)

    for N, n in ((64, 32), (128, 64), (256, 32)):
        res = component_experiment("norm", {"dist": EntryDistribution.rademacher(), "N": N, "n": n, "R": 1.0},
                                   args.trials, args.seed)
        s = res.statistics
        print(f"bounded rademacher {N}x{n}: max {s.max():.3f}  mean {s.mean():.3f}")
    for law in (EntryDistribution.rademacher(2), EntryDistribution.cauchy(2), EntryDistribution.pareto(1, 2)):
        for N, n in ((64, 8), (256, 32)):
            r = regular_ratios(law, N, n, args.trials, args.seed)
            print(f"regular part {law.spec()} {N}x{n}: max {r.max():.3f}  mean {r.mean():.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
