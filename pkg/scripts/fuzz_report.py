"""Fuzz every generated estimate kind and print pass counts and the smallest margins."""
import argparse
import json
import time
from dataclasses import dataclass

from whspace.estimates import GENERATED, fuzz


@dataclass
class FuzzConfig:
    n: int = 1000
    seed: int = 7
    bundle_dir: str = "repro"


def run(cfg):
    out = []
    for kind in GENERATED:
        t = time.perf_counter()
        s = fuzz(kind, cfg.n, cfg.seed, bundle_dir=cfg.bundle_dir)
        d = s.to_json()
        d["seconds"] = round(time.perf_counter() - t, 2)
        out.append(d)
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--bundle-dir", default="repro")
    a = ap.parse_args()
    for d in run(FuzzConfig(a.n, a.seed, a.bundle_dir)):
        print(json.dumps({k: d[k] for k in ("kind", "n", "passed", "failed", "invalid", "min_margin", "seconds")}))
