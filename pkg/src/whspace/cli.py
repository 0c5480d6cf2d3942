"""Command-line entry point.

Exit codes: 0 success, 1 a verdict failed, 2 usage or input error.
"""
import argparse
import csv
import io
import json
import os
import shutil
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import acceptance, estimates, schreier
from . import functionals as fn
from .averages import SccWitness, is_bscc, repeated_average
from .constructions import (ConstructionError, RISWitness, build_dependent, build_exact,
                            build_ris, gap_demo)
from .norm_engine import NormOptions, norm_bounds, CapExceeded
from .params import ParamError, SigmaError, SigmaRegistry, build_params
from .vectors import Vector, dump_number, parse_number

DEFAULT_PARAMS = estimates.TOY


class UsageError(Exception):
    pass


class Verdict(Exception):
    """Raised to exit with status 1 after printing a result."""


@dataclass
class RunConfig:
    params_path: str = None
    registry_path: str = None
    enum_cap: int = schreier.ENUM_CAP
    dp_cap: int = 14
    odd_cap: int = 10
    oracle_depth: int = 0
    tol: float = 1e-9
    fmt: str = "json"
    seed: int = 7

    def check(self):
        for name in ("enum_cap", "dp_cap", "odd_cap"):
            if getattr(self, name) <= 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.oracle_depth < 0:
            raise UsageError("--oracle-depth must be non-negative")
        if not 0 < self.tol < 1e-3:
            raise UsageError("--tol must lie in (0, 1e-3)")
        return self


# -- input helpers ------------------------------------------------------------

def read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: malformed JSON at line {e.lineno}, column {e.colno} "
                         f"(char {e.pos}): {e.msg}")
    except OSError as e:
        raise UsageError(f"{path}: {e.strerror}")


def parse_set(text):
    try:
        return [int(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"cannot parse integer set {text!r}")


def load_params(cfg):
    try:
        if cfg.params_path is None:
            return build_params(DEFAULT_PARAMS)
        return build_params(read_json(cfg.params_path))
    except (ParamError, KeyError, TypeError) as e:
        raise UsageError(f"parameters: {e}")


def load_registry(cfg, ps):
    if cfg.registry_path is None or not os.path.exists(cfg.registry_path):
        return SigmaRegistry(ps)
    try:
        return SigmaRegistry.from_json(read_json(cfg.registry_path), ps)
    except SigmaError as e:
        raise UsageError(f"{cfg.registry_path}: {e}")


def commit_registry(cfg, reg, before):
    """Persist registry growth under the file lock; a concurrent writer is an error."""
    from filelock import FileLock
    if cfg.registry_path is None:
        raise UsageError("--commit needs --registry")
    with FileLock(cfg.registry_path + ".lock"):
        if os.path.exists(cfg.registry_path):
            with open(cfg.registry_path) as fh:
                current = json.load(fh)
            if current != before:
                raise UsageError("registry changed on disk since it was loaded; rerun")
        tmp = cfg.registry_path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(reg.to_json(), fh, indent=1)
        os.replace(tmp, cfg.registry_path)


def load_vectors(path):
    obj = read_json(path)
    try:
        if isinstance(obj, list):
            return [Vector.from_json(v) for v in obj], True
        if isinstance(obj, dict) and "vectors" in obj:
            return [Vector.from_json(v) for v in obj["vectors"]], True
        return [Vector.from_json(obj)], False
    except (ValueError, TypeError, KeyError) as e:
        raise UsageError(f"{path}: {e}")


def emit(obj):
    print(json.dumps(obj, indent=1, default=str))


# -- commands -------------------------------------------------------------------

def cmd_schreier(args, cfg):
    if args.action == "check":
        F = parse_set(args.set)
        ok = schreier.is_member(F, args.n, args.variant)
        print("true" if ok else "false")
        if not ok:
            raise Verdict
    else:
        sets = schreier.enumerate(args.n, args.max, args.variant, cfg.enum_cap)
        emit([list(F) for F in sets])


def cmd_avg(args, cfg):
    if args.L:
        L = parse_set(args.L)
    else:
        from .averages import segment_length_from
        t = args.start
        L = list(range(t, t + segment_length_from(args.n, t)))
    a = repeated_average(args.n, L)
    emit(a.to_json())


def cmd_bscc(args, cfg):
    (x,), _ = load_vectors(args.vector)
    ok = is_bscc(x, args.p, parse_number(args.eps), args.n)
    print("true" if ok else "false")
    if not ok:
        raise Verdict


def cmd_params(args, cfg):
    if args.strict:
        ps = build_params({"mode": "strict", "levels": args.levels})
    else:
        ps = load_params(cfg)
    emit(ps.to_json())


def cmd_sigma(args, cfg):
    ps = load_params(cfg)
    emit(load_registry(cfg, ps).to_json())


def _functional(path, ps):
    try:
        return fn.from_json(read_json(path), ps)
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"{path}: {e}")


def cmd_certify(args, cfg):
    ps = load_params(cfg)
    reg = load_registry(cfg, ps)
    f = _functional(args.functional, ps)
    v = fn.validate(f, ps, reg, args.quarantine)
    out = {"valid": v.ok, "path": list(v.path), "reason": v.reason}
    if args.vector:
        (x,), _ = load_vectors(args.vector)
        out["value"] = fn.evaluate(f, x)
    emit(out)
    if not v.ok:
        raise Verdict


def cmd_eval(args, cfg):
    ps = load_params(cfg)
    f = _functional(args.functional, ps)
    xs, batch = load_vectors(args.vector)
    vals = [fn.evaluate(f, x) for x in xs]
    emit(vals if batch else vals[0])


def cmd_norm(args, cfg):
    ps = load_params(cfg)
    reg = load_registry(cfg, ps)
    xs, batch = load_vectors(args.vector)
    opts = NormOptions(j_max=args.j_max, dp_cap=cfg.dp_cap, odd_cap=cfg.odd_cap,
                       oracle_depth=cfg.oracle_depth, tol=cfg.tol)
    results = [norm_bounds(x, ps, reg.copy(), opts) for x in xs]
    if cfg.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["index", "lower", "upper", "method", "exact"])
        for i, r in enumerate(results):
            w.writerow([i, repr(r.lower), repr(r.upper), r.upper_method, r.exact])
        sys.stdout.write(buf.getvalue())
    else:
        out = [r.to_json() for r in results]
        emit(out if batch else out[0])


def _construct_registry(cfg, ps):
    reg = load_registry(cfg, ps)
    before = None
    if cfg.registry_path and os.path.exists(cfg.registry_path):
        before = read_json(cfg.registry_path)
    return reg, before


def cmd_construct(args, cfg):
    ps = load_params(cfg)
    try:
        if args.what == "ris":
            blocks, _ = load_vectors(args.blocks)
            w = build_ris(blocks, parse_number(args.C), args.start_weight, ps, args.length,
                          args.seminormalized)
            emit(w.to_json())
            return
        ris = RISWitness.from_json(read_json(args.ris))
        if args.what == "exact":
            ev = build_exact(ris, args.k, ps, args.start)
            emit({"ris": ris.to_json(), "exact": ev.to_json(),
                  "vector": ev.vector(ps).to_json()})
            return
        reg, before = _construct_registry(cfg, ps)
        raw = read_json(args.partners)
        partners = [(fn.from_json(f, ps), Vector.from_json(y)) for f, y in raw]
        work = reg if args.commit else reg.copy()
        dep = build_dependent(work, ris, args.j, partners, ps, args.length)
        if args.commit:
            commit_registry(cfg, work, before)
        emit({"dependent": dep.to_json(), "registry": work.to_json(),
              "committed": bool(args.commit)})
    except (ConstructionError, SigmaError) as e:
        print(f"construction failed: {e}", file=sys.stderr)
        raise Verdict
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(str(e))


def cmd_gap(args, cfg):
    ps = load_params(cfg)
    reg, before = _construct_registry(cfg, ps)
    work = reg if args.commit else reg.copy()
    try:
        rep = gap_demo(work, ps, args.j, parse_number(args.scale))
    except (ConstructionError, SigmaError) as e:
        print(f"gap demo failed: {e}", file=sys.stderr)
        raise Verdict
    if args.commit:
        commit_registry(cfg, work, before)
    out = rep.to_json()
    out["committed"] = bool(args.commit)
    emit(out)


def cmd_estimate(args, cfg):
    if args.action == "check":
        try:
            inst = estimates.EstimateInstance.from_json(read_json(args.file))
        except (ValueError, KeyError, TypeError) as e:
            raise UsageError(f"{args.file}: {e}")
        if args.kind and args.kind != inst.kind:
            raise UsageError(f"file holds a {inst.kind} instance, not {args.kind}")
        try:
            rep = estimates.check_estimate(inst, cfg.tol)
        except estimates.HypothesisError as e:
            emit({"kind": inst.kind, "verdict": "hypothesis_failure", "failures": e.failures})
            raise Verdict
        emit(rep)
        if rep["verdict"] != "holds":
            raise Verdict
    else:
        if args.kind not in estimates.GENERATORS:
            raise UsageError(f"no generator for {args.kind}; choose from {sorted(estimates.GENERATORS)}")
        s = estimates.fuzz(args.kind, args.n, cfg.seed, bundle_dir=args.bundle_dir)
        emit(s.to_json())
        if not s.ok:
            raise Verdict


def cmd_counting(args, cfg):
    if args.file:
        try:
            inst = estimates.CountingInstance.from_json(read_json(args.file))
        except (ValueError, KeyError, TypeError) as e:
            raise UsageError(f"{args.file}: {e}")
    else:
        inst = estimates.random_counting_instance(args.size, cfg.seed)
    try:
        rep = estimates.check_counting(inst)
    except ValueError as e:
        raise UsageError(str(e))
    out = rep.to_json()
    out["instance"] = inst.to_json()
    emit(out)
    if not rep.holds:
        raise Verdict


def cmd_verify_all(args, cfg):
    only = set(args.only) if args.only else None
    results = acceptance.run_all(cfg.seed, args.bundle_dir, only)
    for r in results:
        print(r.line())
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump([r.to_json() for r in results], fh, indent=1, default=str)
    if passed != len(results):
        raise Verdict


# -- parser -----------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="parameter JSON file (default: built-in toy list)")
    common.add_argument("--registry", help="sigma registry JSON file")
    common.add_argument("--enum-cap", type=int, default=schreier.ENUM_CAP)
    common.add_argument("--dp-cap", type=int, default=14)
    common.add_argument("--odd-cap", type=int, default=10)
    common.add_argument("--oracle-depth", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int, default=7)

    p = argparse.ArgumentParser(prog="whspace", description="Weak Hilbert space toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("schreier", help="Schreier family membership and enumeration")
    ssub = sp.add_subparsers(dest="action", required=True)
    c = ssub.add_parser("check", parents=[common])
    c.add_argument("--set", required=True, help="comma-separated integers")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--variant", choices=(schreier.STANDARD, schreier.MODIFIED), default=schreier.STANDARD)
    e = ssub.add_parser("enum", parents=[common])
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--max", type=int, required=True, help="universe {1..max}")
    e.add_argument("--variant", choices=(schreier.STANDARD, schreier.MODIFIED), default=schreier.STANDARD)

    a = sub.add_parser("avg", parents=[common], help="repeated average a_n^L")
    a.add_argument("--n", type=int, required=True)
    a.add_argument("--L", help="comma-separated increasing integers")
    a.add_argument("--start", type=int, default=1, help="consecutive L from this value")

    b = sub.add_parser("bscc-check", parents=[common], help="basic special convex combination test")
    b.add_argument("vector")
    b.add_argument("--p", type=int, choices=(1, 2), default=2)
    b.add_argument("--eps", required=True)
    b.add_argument("--n", type=int, required=True)

    pp = sub.add_parser("params", help="parameter sequences")
    psub = pp.add_subparsers(dest="action", required=True)
    show = psub.add_parser("show", parents=[common])
    show.add_argument("--strict", action="store_true")
    show.add_argument("--levels", type=int, default=6)

    sg = sub.add_parser("sigma", help="sigma registry")
    sgsub = sg.add_subparsers(dest="action", required=True)
    sgsub.add_parser("dump", parents=[common])

    ce = sub.add_parser("certify", parents=[common], help="validate a functional")
    ce.add_argument("functional")
    ce.add_argument("--vector")
    ce.add_argument("--quarantine", action="store_true")

    ev = sub.add_parser("eval", parents=[common], help="evaluate a functional")
    ev.add_argument("functional")
    ev.add_argument("vector")

    nm = sub.add_parser("norm", parents=[common], help="norm bounds of a vector or batch")
    nm.add_argument("vector")
    nm.add_argument("--j-max", type=int)

    co = sub.add_parser("construct", help="RIS, exact vectors and dependent sequences")
    cosub = co.add_subparsers(dest="what", required=True)
    r = cosub.add_parser("ris", parents=[common])
    r.add_argument("--blocks", required=True)
    r.add_argument("--C", default="1")
    r.add_argument("--start-weight", type=int, default=2)
    r.add_argument("--length", type=int)
    r.add_argument("--seminormalized", action="store_true")
    x = cosub.add_parser("exact", parents=[common])
    x.add_argument("--ris", required=True)
    x.add_argument("--k", type=int, required=True)
    x.add_argument("--start", type=int, default=0)
    d = cosub.add_parser("dependent", parents=[common])
    d.add_argument("--ris", required=True)
    d.add_argument("--partners", required=True, help="JSON list of [functional, vector]")
    d.add_argument("--j", type=int, required=True)
    d.add_argument("--length", type=int, default=1)
    d.add_argument("--commit", action="store_true")

    g = sub.add_parser("gap-demo", parents=[common], help="smallest dependent-sequence instance")
    g.add_argument("--j", type=int, default=0)
    g.add_argument("--scale", default="1")
    g.add_argument("--commit", action="store_true")

    es = sub.add_parser("estimate", help="estimate checkers")
    essub = es.add_subparsers(dest="action", required=True)
    ec = essub.add_parser("check", parents=[common])
    ec.add_argument("file")
    ec.add_argument("--kind", choices=estimates.KINDS)
    ef = essub.add_parser("fuzz", parents=[common])
    ef.add_argument("--kind", required=True, choices=estimates.KINDS)
    ef.add_argument("--n", type=int, default=1000)
    ef.add_argument("--bundle-dir", default="repro")

    cn = sub.add_parser("counting", parents=[common], help="counting identity")
    cn.add_argument("--size", type=int, default=6)
    cn.add_argument("--file")

    va = sub.add_parser("verify-all", parents=[common], help="run the acceptance suite")
    va.add_argument("--only", type=int, nargs="*")
    va.add_argument("--bundle-dir", default="repro")
    va.add_argument("--report")
    return p


COMMANDS = {"schreier": cmd_schreier, "avg": cmd_avg, "bscc-check": cmd_bscc,
            "params": cmd_params, "sigma": cmd_sigma, "certify": cmd_certify,
            "eval": cmd_eval, "norm": cmd_norm, "construct": cmd_construct,
            "gap-demo": cmd_gap, "estimate": cmd_estimate, "counting": cmd_counting,
            "verify-all": cmd_verify_all}


def dispatch(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    cfg = RunConfig(getattr(args, "params", None), getattr(args, "registry", None),
                    getattr(args, "enum_cap", schreier.ENUM_CAP), getattr(args, "dp_cap", 14),
                    getattr(args, "odd_cap", 10), getattr(args, "oracle_depth", 0),
                    getattr(args, "tol", 1e-9), getattr(args, "format", "json"),
                    getattr(args, "seed", 7))
    try:
        cfg.check()
        COMMANDS[args.command](args, cfg)
    except Verdict:
        return 1
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (CapExceeded, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
