"""Norm bounds of random sparse vectors under toy weights, as CSV."""
import argparse
import csv
import random
import sys
from dataclasses import dataclass

from whspace import estimates
from whspace.acceptance import random_vector
from whspace.norm_engine import NormOptions, norm_bounds
from whspace.params import SigmaRegistry, build_params


@dataclass
class TableConfig:
    count: int = 50
    max_support: int = 8
    top: int = 16
    oracle_depth: int = 0
    seed: int = 7


def run(cfg, out=sys.stdout):
    ps = build_params(estimates.TOY)
    rng = random.Random(cfg.seed)
    w = csv.writer(out)
    w.writerow(["i", "support", "sup", "l2", "lower", "upper", "method", "exact"])
    for i in range(cfg.count):
        x = random_vector(rng, max_support=cfg.max_support, top=cfg.top)
        nb = norm_bounds(x, ps, SigmaRegistry(ps), NormOptions(oracle_depth=cfg.oracle_depth))
        w.writerow([i, len(x), float(x.sup_norm()), round(x.l2_norm(), 12), round(nb.lower, 12),
                    round(nb.upper, 12), nb.upper_method, nb.exact])


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    for f, v in TableConfig().__dict__.items():
        ap.add_argument("--" + f.replace("_", "-"), type=int, default=v)
    run(TableConfig(**vars(ap.parse_args())))
