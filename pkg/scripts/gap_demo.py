"""Smallest dependent-sequence gap instance on toy weights, plus the strict d=1 check."""
import argparse
import json
from dataclasses import dataclass, asdict

from whspace import acceptance
from whspace.constructions import gap_demo, strict_degenerate_check
from whspace.params import SigmaRegistry, build_params


@dataclass
class GapConfig:
    j: int = 0
    scale: int = 1
    strict_levels: int = 8
    out: str = ""


def run(cfg):
    ps = build_params(acceptance.GAP_TOY)
    rep = gap_demo(SigmaRegistry(ps), ps, cfg.j, cfg.scale).to_json()
    rep.pop("violations", None)  # long and fixed for toy weights
    strict = strict_degenerate_check(build_params({"mode": "strict", "levels": cfg.strict_levels}), cfg.j)
    return {"config": asdict(cfg), "toy": rep, "strict": strict}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--j", type=int, default=0)
    ap.add_argument("--scale", type=int, default=1)
    ap.add_argument("--out", default="")
    cfg = GapConfig(**{k: v for k, v in vars(ap.parse_args()).items()})
    res = run(cfg)
    text = json.dumps(res, indent=1, default=str)
    if cfg.out:
        open(cfg.out, "w").write(text)
    print(text)
