"""Instance-level checkers for the norm estimates and the counting identity.

Each estimate kind has a hypothesis predicate (``explain_hypotheses``) that
lists every failed side condition; ``check_estimate`` refuses instances whose
list is non-empty.  Generators for MFE, SAE, RISE and L7_2 only emit
instances that pass their own predicate.
"""
import itertools
import json
import math
import os
import random
from dataclasses import dataclass, field
from fractions import Fraction

from . import functionals as fn
from . import schreier
from .averages import SccWitness, make_scc
from .constructions import DependentWitness, ExactSequenceWitness
from .functionals import Leaf, Node, Scalar, evaluate, validate, coefficient_map
from .norm_engine import NormOptions, norm_bounds, upper_value
from .params import SigmaRegistry, build_params
from .vectors import Vector, dump_number, is_block_sequence, parse_number

KINDS = ("MFE", "SAE", "RISE", "L7_2", "L7_3", "P7_4", "P7_8", "P7_10", "PNORM")
GENERATED = ("MFE", "SAE", "RISE", "L7_2")
# kinds whose proofs lean on the growth conditions of (m_j, n_j)
NEEDS_GROWTH = ("L7_3", "P7_4", "P7_8", "P7_10", "PNORM")
TOL = 1e-9
COUNT_CAP = 10

TOY = {"mode": "toy", "m": [2, 2, 4, 8, 16, 32, 64, 128], "n": [1, 1, 2, 2, 3, 3, 4, 4]}
# fast-growing weights so the RIS condition leaves room for several blocks
RISE_TOY = {"mode": "toy", "m": [2, 2] + [2 ** k for k in range(2, 128)], "n": [1] * 128}


class HypothesisError(ValueError):
    def __init__(self, kind, failures):
        super().__init__(f"{kind}: hypotheses fail: " + "; ".join(failures))
        self.kind = kind
        self.failures = list(failures)


@dataclass
class EstimateInstance:
    kind: str
    params: object
    functionals: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    vectors: list = field(default_factory=list)
    coeffs: list = field(default_factory=list)
    side: dict = field(default_factory=dict)
    registry: object = None

    def to_json(self):
        side = {}
        for k, v in self.side.items():
            if hasattr(v, "to_json"):
                side[k] = {"@": type(v).__name__, "value": v.to_json()}
            elif k == "bases":
                side[k] = [[y.to_json() for y in base] for base in v]
            elif k == "x_sccs":
                side[k] = [w.to_json() for w in v]
            elif isinstance(v, (Fraction, float)):
                side[k] = dump_number(v)
            else:
                side[k] = v
        return {"kind": self.kind, "params": self.params.to_json(),
                "functionals": [fn.to_json(f) for f in self.functionals],
                "lambdas": [dump_number(v) for v in self.lambdas],
                "vectors": [x.to_json() for x in self.vectors],
                "coeffs": [dump_number(v) for v in self.coeffs],
                "side": side,
                "registry": None if self.registry is None else self.registry.to_json()}

    @classmethod
    def from_json(cls, obj):
        kind = obj.get("kind")
        if kind not in KINDS:
            raise ValueError(f"unknown estimate kind {kind!r}")
        params = build_params(obj["params"])
        reg = None
        if obj.get("registry") is not None:
            reg = SigmaRegistry.from_json(obj["registry"], params)
        side = {}
        types = {"SccWitness": SccWitness, "ExactSequenceWitness": ExactSequenceWitness,
                 "DependentWitness": DependentWitness}
        for k, v in (obj.get("side") or {}).items():
            if isinstance(v, dict) and "@" in v:
                if v["@"] not in types:
                    raise ValueError(f"unknown side object type {v['@']!r}")
                side[k] = types[v["@"]].from_json(v["value"])
            elif k == "bases":
                side[k] = [[Vector.from_json(y) for y in base] for base in v]
            elif k == "x_sccs":
                side[k] = [SccWitness.from_json(w) for w in v]
            elif k == "C":
                side[k] = parse_number(v)
            else:
                side[k] = v
        return cls(kind, params,
                   [fn.from_json(f, params) for f in obj.get("functionals", [])],
                   [parse_number(v) for v in obj.get("lambdas", [])],
                   [Vector.from_json(x) for x in obj.get("vectors", [])],
                   [parse_number(v) for v in obj.get("coeffs", [])],
                   side, reg)


# -- shared predicates ----------------------------------------------------------

def omega(f):
    """Weight of a functional; a leaf counts as weight 1."""
    return f.weight if isinstance(f, Node) else 1


def _ball_sq(vals, name):
    tot = sum(v * v for v in vals)
    if isinstance(tot, float):
        ok = tot <= 1 + TOL
    else:
        ok = tot <= 1
    return [] if ok else [f"({name}) is not in the unit ball of l2"]


def _functionals_ok(inst):
    out = []
    for i, f in enumerate(inst.functionals):
        v = validate(f, inst.params, inst.registry)
        if not v:
            out.append(f"f_{i + 1} is not in the norming set: {v.reason} at {list(v.path)}")
    return out


def _disjoint(fs):
    seen = set()
    for i, f in enumerate(fs):
        if not seen.isdisjoint(f.support):
            return [f"f_{i + 1} meets an earlier functional"]
        seen |= f.support
    return []


def _allowable(fs, level, what):
    if not fs:
        return []
    why = schreier.explain_family([sorted(f.support) for f in fs], level, "allowable")
    return [] if why is None else [f"functionals are not {what}-allowable: {why}"]


def _block(xs):
    return [] if is_block_sequence(xs) else ["vectors are not a nonzero block sequence"]


_UPPER = {}


def _upper(x, params):
    key = (x, params.m, params.n)
    if key not in _UPPER:
        if len(_UPPER) > 50000:
            _UPPER.clear()
        _UPPER[key] = upper_value(x, params)
    return _UPPER[key]


def _norms_below(xs, C, params):
    out = []
    for k, x in enumerate(xs):
        u = _upper(x, params)
        if u > float(C) * (1 + TOL) + TOL:
            out.append(f"upper bound {u} of x_{k + 1} exceeds C = {float(C)}")
    return out


def _lengths(inst):
    out = []
    if len(inst.lambdas) != len(inst.functionals):
        out.append("one scalar per functional is required")
    if len(inst.coeffs) != len(inst.vectors):
        out.append("one coefficient per vector is required")
    return out


def _growth(inst):
    if inst.kind in NEEDS_GROWTH and inst.params.violations and not inst.side.get("allow_toy"):
        return ["parameter system violates the growth conditions: "
                + "; ".join(inst.params.violations)]
    return []


def _scc_side(inst, j, key="scc"):
    """Sum b_k x_k is an (eps, n_j)-scc with eps <= 1/m_{j1}^2 over all vectors."""
    ps = inst.params
    w = inst.side.get(key)
    if not isinstance(w, SccWitness):
        return ["missing scc witness"]
    out = []
    j1 = j if j % 2 == 0 else j + 1
    if not ps.has(j1):
        return [f"weight index {j1} is beyond the parameter list"]
    if w.p != 2:
        out.append("scc witness must have p = 2")
    if w.n != ps.n[j]:
        out.append(f"scc level {w.n} differs from n_{j} = {ps.n[j]}")
    if Fraction(w.eps) > Fraction(1, ps.m[j1] ** 2):
        out.append(f"eps = {w.eps} exceeds 1/m_{j1}^2")
    if w.first != 0 or w.length != len(inst.vectors):
        out.append("scc witness must cover every vector")
    why = w.explain(inst.vectors)
    if why:
        out.append(f"scc witness: {why}")
    out.extend(_coeffs_match(inst.coeffs, w.coefficients()))
    return out


def _coeffs_match(got, want):
    if len(got) != len(want):
        return ["coefficients differ in number from the witness"]
    for k, (a, b) in enumerate(zip(got, want)):
        if abs(float(a) - float(b)) > 1e-12 * max(1.0, abs(float(b))):
            return [f"coefficient b_{k + 1} differs from the witness"]
    return []


def _nat(side, key):
    v = side.get(key)
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        return None
    return v


# -- per-kind hypotheses ------------------------------------------------------

def _hyp_mfe(inst):
    out = _lengths(inst) + _functionals_ok(inst) + _disjoint(inst.functionals)
    out += _block(inst.vectors) + _ball_sq(inst.lambdas, "lambda")
    C = inst.side.get("C")
    if C is None:
        return out + ["side parameter C missing"]
    out += _norms_below(inst.vectors, C, inst.params)
    for i, f in enumerate(inst.functionals):
        m = min(f.support)
        for k, x in enumerate(inst.vectors):
            if x.minsupp() <= m <= x.maxsupp():
                out.append(f"minsupp f_{i + 1} = {m} lies in ran x_{k + 1}")
    return out


def _hyp_sae_like(inst, need_c_ge_1):
    out = _lengths(inst) + _functionals_ok(inst) + _block(inst.vectors)
    out += _ball_sq(inst.lambdas, "lambda")
    j, q = _nat(inst.side, "j"), _nat(inst.side, "q")
    C = inst.side.get("C")
    if j is None or q is None or C is None:
        return out + ["side parameters j, q and C are required"]
    if need_c_ge_1 and C < 1:
        out.append("C must be at least 1")
    if not inst.params.has(j):
        return out + [f"index j = {j} is beyond the parameter list"]
    if not inst.params.n[j] > q:
        out.append(f"n_{j} = {inst.params.n[j]} is not above q = {q}")
    out += _disjoint(inst.functionals) + _allowable(inst.functionals, q, f"S_{q}")
    out += _norms_below(inst.vectors, C, inst.params)
    out += _scc_side(inst, j)
    return out


def _hyp_rise(inst):
    ps = inst.params
    out = _lengths(inst) + _functionals_ok(inst) + _disjoint(inst.functionals)
    out += _block(inst.vectors)
    w = inst.side.get("weights")
    d = len(inst.vectors)
    if not isinstance(w, list) or len(w) != d + 1:
        return out + ["need d + 1 weight indices"]
    if any(not isinstance(k, int) or k % 2 or not ps.has(k) for k in w):
        return out + ["weight indices must be available even indices"]
    for k, x in enumerate(inst.vectors):
        if x.minsupp() ** 2 * ps.m[w[k]] ** 2 > ps.m[w[k + 1]]:
            out.append(f"(minsupp x_{k + 1})^2 / m_{w[k + 1]} exceeds 1/m_{w[k]}^2")
        # implicit in the counting step: |f(x_k)| is controlled by ||x_k||_1
        if x.l1_norm() > x.minsupp() ** 2:
            out.append(f"||x_{k + 1}||_1 exceeds (minsupp x_{k + 1})^2")
    for k, c in enumerate(inst.coeffs):
        if k < d and not 0 <= c <= ps.m[w[k]]:
            out.append(f"c_{k + 1} is outside [0, m_{w[k]}]")
    for i, f in enumerate(inst.functionals):
        cm = coefficient_map(f)
        for k, x in enumerate(inst.vectors):
            top = max((abs(cm.get(t, 0.0)) for t in x.support), default=0.0)
            lim = 1 / ps.m[w[k + 1]]
            if top > lim * (1 + 1e-12):
                out.append(f"||f_{i + 1}|supp x_{k + 1}||_inf = {top} exceeds 1/m_{w[k + 1]}")
    if any(v != 1 for v in inst.lambdas):
        out.append("RISE takes all scalars equal to 1")
    return out


def _hyp_l73(inst):
    ps = inst.params
    out = _lengths(inst) + _growth(inst) + _functionals_ok(inst) + _block(inst.vectors)
    out += _disjoint(inst.functionals) + _ball_sq(inst.lambdas, "lambda")
    C, q = inst.side.get("C"), _nat(inst.side, "q")
    ks, bases, sccs = inst.side.get("ks"), inst.side.get("bases"), inst.side.get("x_sccs")
    if C is None or q is None or ks is None or bases is None or sccs is None:
        return out + ["side parameters C, q, ks, bases and x_sccs are required"]
    if C < 1:
        out.append("C must be at least 1")
    d = len(inst.vectors)
    if not (len(ks) == len(bases) == len(sccs) == d):
        return out + ["one weight index, base and witness per vector is required"]
    if any(not isinstance(k, int) or k % 2 or not ps.has(k) for k in ks):
        return out + ["weight indices must be available even indices"]
    if any(b < a for a, b in zip(ks, ks[1:])):
        out.append("weight indices 2j_k are not non-decreasing")
    out += _norms_below(inst.vectors, C, ps)
    for k, (kk, base, w, x) in enumerate(zip(ks, bases, sccs, inst.vectors)):
        if w.p != 2 or w.n != ps.n[kk] or Fraction(w.eps) > Fraction(1, ps.m[kk] ** 2):
            out.append(f"x_{k + 1}: scc parameters do not match weight index {kk}")
        why = w.explain(base)
        if why:
            out.append(f"x_{k + 1}: {why}")
        elif w.combine(base) != x:
            out.append(f"x_{k + 1} is not the combination its witness describes")
    if d and ks:
        k1 = ks[0]
        if not q < k1:
            out.append(f"q = {q} is not below 2j_1 = {k1}")
        if ps.has(q):
            out += _allowable(inst.functionals, ps.n[q], f"S_n_{q}")
        else:
            out.append(f"index q = {q} is beyond the parameter list")
        for i, f in enumerate(inst.functionals):
            if not omega(f) < ps.m[k1]:
                out.append(f"omega(f_{i + 1}) is not below m_{k1}")
    return out


def _exact_side(inst):
    w = inst.side.get("exact")
    if not isinstance(w, ExactSequenceWitness):
        return None, ["missing exact-sequence witness"]
    out = [f"exact sequence: {why}" for why in w.explain(inst.params)]
    zs = w.vectors(inst.params)
    if zs != list(inst.vectors):
        out.append("vectors differ from the exact sequence")
    return w, out


def _hyp_p74_p78(inst):
    ps = inst.params
    out = _lengths(inst) + _growth(inst) + _functionals_ok(inst) + _disjoint(inst.functionals)
    out += _ball_sq(inst.lambdas, "lambda") + _ball_sq(inst.coeffs, "b")
    w, more = _exact_side(inst)
    out += more
    q = _nat(inst.side, "q")
    if w is None or q is None:
        return out + ["side parameter q is required"]
    ks = w.weights()
    if not ks:
        return out + ["empty exact sequence"]
    if not q < ks[0]:
        out.append(f"q = {q} is not below 2j_1 = {ks[0]}")
    if ps.has(q):
        out += _allowable(inst.functionals, ps.n[q], f"S_n_{q}")
    else:
        out.append(f"index q = {q} is beyond the parameter list")
    for k, (kk, x) in enumerate(zip(ks, inst.vectors)):
        for i, f in enumerate(inst.functionals):
            if f.support.isdisjoint(x.support):
                continue
            if inst.kind == "P7_4" and not omega(f) < ps.m[kk]:
                out.append(f"omega(f_{i + 1}) is not below m_{kk} though it meets x_{k + 1}")
            if inst.kind == "P7_8" and omega(f) == ps.m[kk]:
                out.append(f"w(f_{i + 1}) equals m_{kk} though it meets x_{k + 1}")
    return out


def _dependent_side(inst):
    ps = inst.params
    dep = inst.side.get("dependent")
    if not isinstance(dep, DependentWitness):
        return None, ["missing dependent-sequence witness"]
    if inst.registry is None:
        return None, ["a sigma registry is required"]
    out = [f"dependent sequence: {why}" for why in dep.explain(ps, inst.registry)]
    if dep.zs(ps) != list(inst.vectors):
        out.append("vectors differ from the dependent sequence")
    j = dep.j
    if not ps.has(2 * j + 2):
        return dep, out + [f"weight index {2 * j + 2} is beyond the parameter list"]
    w = dep.outer
    if w is None:
        return dep, out + ["dependent sequence carries no outer scc"]
    if w.p != 2 or w.n != ps.n[2 * j + 1] or Fraction(w.eps) > Fraction(1, ps.m[2 * j + 2] ** 2):
        out.append("outer scc parameters do not match (1/m_{2j+2}^2, n_{2j+1})")
    if w.first != 0 or w.length != len(inst.vectors):
        out.append("outer scc must cover every vector")
    out += _coeffs_match(inst.coeffs, w.coefficients())
    C = inst.side.get("C")
    if C is not None and C != dep.C and C != dep.ris.C:
        out.append("side C differs from the sequence constant")
    return dep, out


def _hyp_p710(inst):
    out = _lengths(inst) + _growth(inst) + _functionals_ok(inst)
    dep, more = _dependent_side(inst)
    out += more
    if len(inst.functionals) != 1:
        out.append("a single functional is required")
    if any(v != 1 for v in inst.lambdas):
        out.append("the scalar must be 1")
    if dep is not None and inst.params.has(2 * dep.j + 1):
        m = inst.params.m[2 * dep.j + 1]
        for i, f in enumerate(inst.functionals):
            if not omega(f) < m:
                out.append(f"w(f_{i + 1}) is not below m_{2 * dep.j + 1}")
    return out


def _hyp_pnorm(inst):
    out = _lengths(inst) + _growth(inst)
    _, more = _dependent_side(inst)
    out += more
    if inst.functionals:
        out.append("PNORM takes no functionals")
    return out


HYPOTHESES = {"MFE": _hyp_mfe, "SAE": lambda i: _hyp_sae_like(i, False), "RISE": _hyp_rise,
              "L7_2": lambda i: _hyp_sae_like(i, True), "L7_3": _hyp_l73,
              "P7_4": _hyp_p74_p78, "P7_8": _hyp_p74_p78, "P7_10": _hyp_p710,
              "PNORM": _hyp_pnorm}


def explain_hypotheses(inst):
    """List of failed hypotheses (empty when the instance is valid)."""
    if inst.kind not in HYPOTHESES:
        raise ValueError(f"unknown estimate kind {inst.kind!r}")
    return HYPOTHESES[inst.kind](inst)


# -- evaluation -----------------------------------------------------------------

def _sum(coeffs, xs):
    out = Vector()
    for b, x in zip(coeffs, xs):
        out = out + x.scale(b)
    return out


def _apply(inst, y):
    return sum(float(l) * evaluate(f, y) for l, f in zip(inst.lambdas, inst.functionals))


def _phi(inst):
    """Indices k with some minsupp f_l inside ran x_k."""
    mins = [min(f.support) for f in inst.functionals]
    return [k for k, x in enumerate(inst.vectors)
            if any(x.minsupp() <= m <= x.maxsupp() for m in mins)]


def _l2(vals):
    return math.sqrt(sum(float(v) ** 2 for v in vals))


def _rhs(inst):
    ps, s = inst.params, inst.side
    C = float(s.get("C", 0))
    kind = inst.kind
    if kind == "MFE":
        return 4 * C * _l2(inst.coeffs)
    if kind == "SAE":
        return C / ps.m[s["j"]]
    if kind == "RISE":
        return 2 / ps.m[s["weights"][0]]
    if kind == "L7_2":
        return 5 * C
    if kind == "L7_3":
        return 5 * C / min(omega(f) for f in inst.functionals) * _l2(inst.coeffs)
    if kind == "P7_4":
        return 16 * float(s["exact"].C) / min(omega(f) for f in inst.functionals)
    if kind == "P7_8":
        return 40 * float(s["exact"].C) / min(omega(f) for f in inst.functionals)
    dep = s["dependent"]
    Cd = float(dep.C if dep.C is not None else dep.ris.C)
    return Cd / ps.m[2 * dep.j + 1] ** 2


def _holds(lhs, rhs, tol=TOL):
    return lhs <= rhs + tol * max(1.0, abs(rhs))


def check_estimate(inst, tol=TOL):
    """Evaluate one estimate instance; raises HypothesisError when a side condition fails.

    Report keys: kind, lhs, rhs, holds, margin, verdict.  PNORM uses the norm
    engine's bounds, so its verdict may be "inconclusive".
    """
    if inst.kind not in KINDS:
        raise ValueError(f"unknown estimate kind {inst.kind!r}")
    bad = explain_hypotheses(inst)
    if bad:
        raise HypothesisError(inst.kind, bad)
    rhs = _rhs(inst)
    notes = []
    if inst.side.get("allow_toy") and inst.params.violations:
        notes.append("toy parameters: growth conditions waived, bound not implied")
    if inst.kind == "PNORM":
        y = _sum(inst.coeffs, inst.vectors)
        nb = norm_bounds(y, inst.params, inst.registry, NormOptions())
        lhs = nb.upper
        if _holds(nb.upper, rhs, tol):
            verdict = "holds"
        elif nb.lower > rhs + tol * max(1.0, abs(rhs)):
            verdict = "violated"
        else:
            verdict = "inconclusive"
        rep = {"kind": inst.kind, "lhs": lhs, "lower": nb.lower, "rhs": rhs,
               "holds": verdict == "holds", "margin": rhs - lhs, "verdict": verdict,
               "upper_method": nb.upper_method}
    else:
        if inst.kind == "SAE":
            phi = _phi(inst)
            lhs = _apply(inst, _sum([inst.coeffs[k] for k in phi], [inst.vectors[k] for k in phi]))
        else:
            lhs = _apply(inst, _sum(inst.coeffs, inst.vectors))
        ok = _holds(lhs, rhs, tol)
        rep = {"kind": inst.kind, "lhs": lhs, "rhs": rhs, "holds": ok, "margin": rhs - lhs,
               "verdict": "holds" if ok else "violated"}
        if inst.kind == "SAE":
            rep["phi"] = [k + 1 for k in phi]
            rep["lhs_full"] = _apply(inst, _sum(inst.coeffs, inst.vectors))
    if notes:
        rep["notes"] = notes
    return rep


# -- random functionals ---------------------------------------------------------

def _rand_lambdas(rng, r):
    """r signed scalars with sum of squares <= 1, squares kept exact."""
    a = [rng.randint(1, 6) for _ in range(r)]
    tot = sum(a) + rng.randint(0, 3)
    return [Scalar(rng.choice((1, -1)), Fraction(v, tot)) for v in a]


def random_functional(rng, idx, params, ks=(0, 2), depth=2):
    """Random norming functional built from even nodes, supported inside idx.

    The support always keeps min(idx).
    """
    idx = sorted(idx)
    if len(idx) == 1 and (depth == 0 or rng.random() < 0.6):
        return Leaf(rng.choice((1, -1)), idx[0])
    k = rng.choice([k for k in ks if params.has(k)])
    nk = params.n[k]
    if depth <= 1:
        chunks = [[i] for i in idx]
    else:
        c = rng.randint(1, len(idx))
        cuts = sorted(rng.sample(range(1, len(idx)), c - 1)) if c > 1 else []
        chunks = [idx[a:b] for a, b in zip([0] + cuts, cuts + [len(idx)])]
    seg, _ = schreier.maximal_initial_segment([ch[0] for ch in chunks], nk)
    chunks = chunks[:max(1, len(seg))]
    kids = [_child(rng, ch, params, ks, depth - 1) for ch in chunks]
    lams = _rand_lambdas(rng, len(kids))
    return Node(k, params.m[k], tuple(zip(lams, kids)), None)


def _child(rng, idx, params, ks, depth):
    if depth <= 0 or len(idx) == 1 and rng.random() < 0.7:
        return Leaf(rng.choice((1, -1)), idx[0])
    return random_functional(rng, idx, params, ks, depth)


def _rand_frac(rng, lo, hi, den=12):
    return Fraction(rng.randint(int(lo * den), int(hi * den)), den)


def _rand_block(rng, start, size):
    """Nonzero vector on `size` coordinates from start with gaps of at most one."""
    coords, t = [], start
    for _ in range(size):
        coords.append(t)
        t += rng.randint(1, 2)
    vals = []
    for _ in coords:
        v = _rand_frac(rng, -1, 1)
        vals.append(v if v != 0 else Fraction(1, 2))
    return Vector(tuple(zip(coords, vals)))


# -- generators -----------------------------------------------------------------

def _rng(seed, kind, i):
    return random.Random(f"{seed}:{kind}:{i}")


def gen_mfe(rng, params):
    d = rng.randint(1, 4)
    t = rng.randint(1, 3)
    free, xs = list(range(1, t)), []
    for _ in range(d):
        x = _rand_block(rng, t, rng.randint(1, 3))
        xs.append(x)
        t = x.maxsupp() + 1
        gap = rng.randint(1, 2)
        free.extend(range(t, t + gap))
        t += gap
    top = t + 2
    free.extend(range(t, top + 1))
    r = rng.randint(1, min(3, len(free)))
    mins = sorted(rng.sample(free, r))
    used = set(mins)
    fs = []
    for mn in mins:
        pool = [i for i in range(mn + 1, top + 1) if i not in used]
        extra = rng.sample(pool, min(len(pool), rng.randint(0, 4)))
        used.update(extra)
        fs.append(random_functional(rng, [mn] + extra, params))
    bs = [_rand_frac(rng, -2, 2) for _ in xs]
    lams = _aligned_lambdas(rng, fs, _sum(bs, xs))
    C = max(_upper(x, params) for x in xs)
    return EstimateInstance("MFE", params, fs, lams, xs, bs, {"C": C})


def _aligned_lambdas(rng, fs, y):
    """Rational scalars in Ba(l2), mostly signed so each term f(y) counts positively."""
    lams = [_rand_frac(rng, 0, 1) or Fraction(1, 12) for _ in fs]
    lams = [-l if rng.random() < 0.9 and evaluate(f, y) < 0 else l for l, f in zip(lams, fs)]
    den = math.ceil(math.sqrt(float(sum(l * l for l in lams))))
    return [l / max(den, 1) for l in lams]


def _gen_sae_like(rng, params, kind):
    j, q = 0, 0
    eps = Fraction(1, params.m[0] ** 2)
    t = rng.randint(17, 20)
    want, xs = 2 * t, []
    while len(xs) < want:
        x = _rand_block(rng, t, rng.randint(1, 2))
        xs.append(x)
        t = x.maxsupp() + rng.randint(1, 2)
    w = make_scc(xs, eps, params.n[j])
    xs = xs[w.first:w.first + w.length]
    w.first = 0
    lo, hi = xs[0].minsupp(), xs[-1].maxsupp()
    mn = rng.randint(max(1, lo - 2), hi)
    pool = list(range(mn + 1, hi + 3))
    idx = [mn] + rng.sample(pool, min(len(pool), rng.randint(0, 7)))
    f = random_functional(rng, idx, params)
    b = w.coefficients()
    lams = _aligned_lambdas(rng, [f], _sum(b, xs))
    C = max(_upper(x, params) for x in xs)
    if kind == "L7_2":
        C = max(C, 1.0)
    return EstimateInstance(kind, params, [f], lams, xs, b,
                            {"C": C, "j": j, "q": q, "scc": w})


def gen_sae(rng, params):
    return _gen_sae_like(rng, params, "SAE")


def gen_l72(rng, params):
    return _gen_sae_like(rng, params, "L7_2")


def _next_even(params, k, minsupp):
    for k2 in range(k + 2, len(params.m), 2):
        if minsupp ** 2 * params.m[k] ** 2 <= params.m[k2]:
            return k2
    return None


def gen_rise(rng, params):
    for _ in range(50):
        d = rng.randint(1, 3)
        t = rng.randint(1, 4)
        xs = []
        for _ in range(d):
            x = _rand_block(rng, t, rng.randint(1, 3))
            if x.l1_norm() > x.minsupp() ** 2:
                x = x.scale(Fraction(x.minsupp() ** 2) / x.l1_norm())
            xs.append(x)
            t = x.maxsupp() + rng.randint(1, 3)
        w = [rng.choice((0, 2, 4))]
        for x in xs:
            k2 = _next_even(params, w[-1], x.minsupp())
            if k2 is None:
                break
            k2 += 2 * rng.randint(0, 1)
            if not params.has(k2):
                break
            w.append(k2)
        if len(w) == d + 1:
            break
    else:
        raise RuntimeError("RISE generator could not fit the weights")
    top = xs[-1].maxsupp() + 2
    coords = list(range(1, top + 1))
    rng.shuffle(coords)
    r = rng.randint(1, 3)
    fs = []
    for i in range(r):
        part = sorted(coords[i::r][:rng.randint(1, 5)])
        g = random_functional(rng, part, params)
        fs.append(_damp(g, xs, w, params, rng))
    cs = [params.m[w[k]] * _rand_frac(rng, 0, 1) for k in range(d)]
    return EstimateInstance("RISE", params, fs, [1] * r, xs, cs, {"weights": w})


def _damp(g, xs, w, params, rng):
    """Wrap g in a single-child even node heavy enough for the sup-norm condition."""
    cm = coefficient_map(g)
    need = 0
    for k, x in enumerate(xs):
        top = max((abs(cm.get(t, 0.0)) for t in x.support), default=0.0)
        if top > 0:
            need = max(need, w[k + 1])
    if need == 0:
        return g
    for K in range(need, len(params.m), 2):
        f = Node(K, params.m[K], ((Scalar(1, Fraction(1)), g),), None)
        cf = coefficient_map(f)
        if all(max((abs(cf.get(t, 0.0)) for t in x.support), default=0.0)
               <= (1 / params.m[w[k + 1]]) * (1 + 1e-12) for k, x in enumerate(xs)):
            if K + 2 < len(params.m) and rng.random() < 0.3:
                K += 2
                f = Node(K, params.m[K], ((Scalar(1, Fraction(1)), g),), None)
            return f
    raise RuntimeError("parameter list too short to damp the functional")


GENERATORS = {"MFE": (gen_mfe, TOY), "SAE": (gen_sae, TOY), "RISE": (gen_rise, RISE_TOY),
              "L7_2": (gen_l72, TOY)}


def generate(kind, seed, i=0, params=None):
    if kind not in GENERATORS:
        raise ValueError(f"no generator for kind {kind!r}; have {sorted(GENERATORS)}")
    gen, cfg = GENERATORS[kind]
    ps = params if params is not None else build_params(cfg)
    return gen(_rng(seed, kind, i), ps)


@dataclass
class FuzzSummary:
    kind: str
    n: int
    seed: object
    passed: int = 0
    failed: int = 0
    invalid: int = 0
    min_margin: float = math.inf
    bundles: list = field(default_factory=list)

    @property
    def ok(self):
        return self.failed == 0 and self.invalid == 0 and self.passed == self.n

    def to_json(self):
        d = dict(self.__dict__)
        d["ok"] = self.ok
        d["min_margin"] = None if self.min_margin == math.inf else self.min_margin
        return d


def dump_bundle(inst, report, seed, i, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"repro_{inst.kind}_{seed}_{i}.json")
    with open(path, "w") as fh:
        json.dump({"seed": seed, "index": i, "report": report, "instance": inst.to_json()},
                  fh, indent=1)
    return path


def fuzz(kind, n, seed, params=None, bundle_dir="repro"):
    """Generate n instances, check each; failures and invalid instances dump bundles."""
    s = FuzzSummary(kind, n, seed)
    for i in range(n):
        inst = generate(kind, seed, i, params)
        bad = explain_hypotheses(inst)
        if bad:
            s.invalid += 1
            s.bundles.append(dump_bundle(inst, {"hypothesis_failures": bad}, seed, i, bundle_dir))
            continue
        rep = check_estimate(inst)
        s.min_margin = min(s.min_margin, rep["margin"])
        if rep["holds"]:
            s.passed += 1
        else:
            s.failed += 1
            s.bundles.append(dump_bundle(inst, rep, seed, i, bundle_dir))
    return s


# -- counting identity ------------------------------------------------------------

@dataclass
class CountingInstance:
    A: tuple
    T: list       # T[a][b] indexed by positions in A
    x: list

    def __post_init__(self):
        self.A = tuple(self.A)
        self.T = [[Fraction(v) for v in row] for row in self.T]
        self.x = [Fraction(v) for v in self.x]

    def to_json(self):
        return {"A": list(self.A), "T": [[dump_number(v) for v in r] for r in self.T],
                "x": [dump_number(v) for v in self.x]}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(int(a) for a in obj["A"]),
                   [[parse_number(v) for v in r] for r in obj["T"]],
                   [parse_number(v) for v in obj["x"]])


@dataclass
class CountingReport:
    size: int
    parity: str
    L: int
    partitions: int
    stated_constant: Fraction
    empirical_constant: object   # Fraction, or None when no pair i != k exists
    stated_holds: bool
    holds: bool
    lhs: list
    rhs: list

    def __bool__(self):
        return self.holds

    def to_json(self):
        return {"size": self.size, "parity": self.parity, "L": self.L,
                "partitions": self.partitions,
                "stated_constant": dump_number(self.stated_constant),
                "empirical_constant": None if self.empirical_constant is None
                else dump_number(self.empirical_constant),
                "stated_holds": self.stated_holds, "holds": self.holds,
                "lhs": [dump_number(v) for v in self.lhs],
                "rhs": [dump_number(v) for v in self.rhs]}


def stated_constant(size):
    L = size // 2
    if size % 2 == 0:
        return Fraction(2 * L * (2 * L - 1), L * L)
    return Fraction(2 * L * (2 * L + 1) * ((L + 1) ** 2 + 1), (L * L + 1) * (L + 1) ** 2)


def counting_partitions(size):
    """All ordered (B, C) splits of range(size) with |#B - #C| <= 1, as position sets."""
    out = []
    for r in {size // 2, (size + 1) // 2}:
        for C in itertools.combinations(range(size), r):
            Cs = frozenset(C)
            out.append((frozenset(range(size)) - Cs, Cs))
    return out


def check_counting(inst, cap=COUNT_CAP):
    """Exact check of A T x = c / #P * sum_{(B,C)} B T C x over all splits.

    For even sizes c is the stated constant.  For odd sizes the constant is
    measured by brute force (how often a pair i != k is split with i in B and
    k in C); stated_holds records whether the stated constant also works.
    """
    size = len(inst.A)
    if size < 1:
        raise ValueError("A must be nonempty")
    if size > cap:
        raise ValueError(f"|A| = {size} exceeds the cap {cap}")
    if len(set(inst.A)) != size:
        raise ValueError("A has repeated elements")
    if len(inst.T) != size or any(len(r) != size for r in inst.T) or len(inst.x) != size:
        raise ValueError("T must be square and x must match A")
    if any(inst.T[i][i] != 0 for i in range(size)):
        raise ValueError("T has a nonzero diagonal entry")
    T, x = inst.T, inst.x
    lhs = [sum(T[i][k] * x[k] for k in range(size)) for i in range(size)]
    P = counting_partitions(size)
    acc = [Fraction(0)] * size
    hits = {}
    for B, C in P:
        for i in B:
            acc[i] += sum(T[i][k] * x[k] for k in C)
            for k in C:
                hits[(i, k)] = hits.get((i, k), 0) + 1
    counts = {hits.get((i, k), 0) for i in range(size) for k in range(size) if i != k}
    if len(counts) > 1:
        raise RuntimeError("split counts depend on the pair; the identity has no constant")
    emp = Fraction(len(P), counts.pop()) if counts else None
    c_stated = stated_constant(size)
    rhs_stated = [c_stated / len(P) * a for a in acc]
    stated_ok = rhs_stated == lhs
    if size % 2 == 0 or emp is None:
        holds = stated_ok
        rhs = rhs_stated
    else:
        rhs = [emp / len(P) * a for a in acc]
        holds = rhs == lhs
    return CountingReport(size, "even" if size % 2 == 0 else "odd", size // 2, len(P),
                          c_stated, emp, stated_ok, holds, lhs, rhs)


def random_counting_instance(size, seed, den=7):
    rng = random.Random(f"counting:{seed}:{size}")
    A = tuple(sorted(rng.sample(range(1, 4 * size + 1), size)))
    T = [[Fraction(0) if i == k else Fraction(rng.randint(-3 * den, 3 * den), rng.randint(1, den))
          for k in range(size)] for i in range(size)]
    x = [Fraction(rng.randint(-3 * den, 3 * den), rng.randint(1, den)) for _ in range(size)]
    return CountingInstance(A, T, x)
