"""Stated vs measured constants of the counting identity for sizes 1..max."""
import argparse
from dataclasses import dataclass

from whspace.estimates import check_counting, random_counting_instance


@dataclass
class CountingConfig:
    max_size: int = 9
    seeds: int = 5


def run(cfg):
    rows = []
    for size in range(1, cfg.max_size + 1):
        reps = [check_counting(random_counting_instance(size, s)) for s in range(cfg.seeds)]
        r = reps[0]
        rows.append((size, r.parity, r.partitions, r.stated_constant, r.empirical_constant,
                     all(x.stated_holds for x in reps), all(x.holds for x in reps)))
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-size", type=int, default=9)
    ap.add_argument("--seeds", type=int, default=5)
    a = ap.parse_args()
    print(f"{'size':>4} {'parity':>6} {'#P':>5} {'stated':>12} {'measured':>10} {'stated ok':>9} {'holds':>6}")
    for size, par, P, st, emp, sok, ok in run(CountingConfig(a.max_size, a.seeds)):
        print(f"{size:>4} {par:>6} {P:>5} {str(st):>12} {str(emp):>10} {str(sok):>9} {str(ok):>6}")
