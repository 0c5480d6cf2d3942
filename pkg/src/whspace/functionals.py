"""Functionals of the norming set as explicit trees.

A Leaf is +-e_n^*.  A Node carries a raw weight index k (weight m_k, parity
k % 2) and children (lambda, child); f = (1/m_k) sum lambda_i f_i.  Odd nodes
also carry their special sequence ((E_1, j_1), ...) with child i of weight m_{2 j_i}.
Scalars keep lambda^2 exactly (Fraction) when possible.
"""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product

from . import schreier
from .params import explain_special, explain_in_sigma
from .vectors import dump_number, parse_number

SLACK = 1e-12


def inv(m):
    # int / int true division never overflows, unlike float(m) for huge weights
    return 1 / m


@dataclass(frozen=True)
class Scalar:
    sign: int
    sq: object  # Fraction or float, the square of |lambda|

    @classmethod
    def of(cls, v):
        """Scalar from a number (Fraction/int exact, float approximate)."""
        if isinstance(v, float):
            return cls(1 if v >= 0 else -1, v * v)
        v = Fraction(v)
        return cls(1 if v >= 0 else -1, v * v)

    @property
    def value(self):
        return self.sign * math.sqrt(self.sq)

    def exact(self):
        return isinstance(self.sq, Fraction)


@dataclass(frozen=True)
class Leaf:
    sign: int
    index: int

    @cached_property
    def support(self):
        return frozenset((self.index,))

    @property
    def depth(self):
        return 0


@dataclass(frozen=True)
class Node:
    k: int
    weight: int
    children: tuple  # of (Scalar, Functional)
    witness: tuple = None  # odd nodes: ((E_1, j_1), ...)

    @property
    def parity(self):
        return "odd" if self.k % 2 else "even"

    @cached_property
    def support(self):
        out = frozenset()
        for _, g in self.children:
            out = out | g.support
        return out

    @cached_property
    def depth(self):
        return 1 + max((g.depth for _, g in self.children), default=0)


def node(k, children, params, witness=None):
    """Node with weight m_k looked up in params; children are (lambda, child) pairs."""
    kids = tuple((c if isinstance(c, Scalar) else Scalar.of(c), g) for c, g in children)
    wit = None
    if witness is not None:
        wit = tuple((schreier.as_set(E), int(j)) for E, j in witness)
    return Node(k, params.m[k], kids, wit)


def weight(f):
    """omega(f): m_k for a node, None for a leaf."""
    return f.weight if isinstance(f, Node) else None


def support(f):
    return f.support


def evaluate(f, x):
    """f(x) in binary64; x may be a Vector or a dict index -> coefficient."""
    d = x if isinstance(x, dict) else x.as_dict()

    def ev(g):
        if isinstance(g, Leaf):
            c = d.get(g.index, 0)
            return g.sign * float(c)
        s = 0.0
        for lam, h in g.children:
            if h.support.isdisjoint(d):
                continue
            s += lam.value * ev(h)
        return s * inv(g.weight)

    return ev(f)


def coefficient_map(f):
    """The functional as a sparse dict index -> coefficient (floats)."""
    out = {}

    def walk(g, scale):
        if isinstance(g, Leaf):
            out[g.index] = out.get(g.index, 0.0) + scale * g.sign
            return
        for lam, h in g.children:
            walk(h, scale * lam.value * inv(g.weight))

    walk(f, 1.0)
    return out


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    ok: bool
    path: tuple = ()
    reason: str = ""

    def __bool__(self):
        return self.ok


def _lam_sq_ok(children):
    sqs = [lam.sq for lam, _ in children]
    if all(isinstance(s, Fraction) for s in sqs):
        return sum(sqs) <= 1
    return float(sum(float(s) for s in sqs)) <= 1 + SLACK


def validate(f, params, registry=None, quarantine=False):
    """Check f belongs to the norming set; returns a Verdict naming the first failure."""
    def fail(path, why):
        return Verdict(False, path, why)

    def rec(g, path):
        if isinstance(g, Leaf):
            if g.sign not in (1, -1):
                return fail(path, "leaf sign must be +1 or -1")
            if isinstance(g.index, bool) or not isinstance(g.index, int) or g.index < 1:
                return fail(path, "leaf index must be a positive integer")
            return None
        if not isinstance(g, Node):
            return fail(path, f"unknown functional type {type(g).__name__}")
        if not params.has(g.k):
            return fail(path, f"weight index {g.k} is beyond the parameter list")
        if g.weight != params.m[g.k]:
            return fail(path, f"weight {g.weight} differs from m_{g.k} = {params.m[g.k]}")
        if not g.children:
            return fail(path, "node has no children")
        for lam, _ in g.children:
            if lam.sign not in (1, -1) or lam.sq < 0:
                return fail(path, "malformed scalar")
        if not _lam_sq_ok(g.children):
            return fail(path, "sum of lambda^2 exceeds 1")
        seen = set()
        for _, h in g.children:
            if not seen.isdisjoint(h.support):
                return fail(path, "child supports are not pairwise disjoint")
            seen |= h.support
        nk = params.n[g.k]
        if g.k % 2 == 0:
            if g.witness is not None:
                return fail(path, "even node carries a special-sequence witness")
            mins = sorted(min(h.support) for _, h in g.children)
            if not schreier.is_member(mins, nk):
                return fail(path, f"children are not S_{nk}-allowable (minima {mins})")
        else:
            why = _check_odd(g, params, registry, quarantine)
            if why:
                return fail(path, why)
        for i, (_, h) in enumerate(g.children):
            bad = rec(h, path + (i,))
            if bad is not None:
                return bad
        return None

    bad = rec(f, ())
    return bad if bad is not None else Verdict(True)


def _check_odd(g, params, registry, quarantine):
    w = g.witness
    if w is None:
        return "odd node lacks its special-sequence witness"
    if len(w) != len(g.children):
        return "witness length differs from the number of children"
    why = explain_in_sigma(w, params)
    if why:
        return f"witness not in Sigma: {why}"
    if not 2 * w[0][1] > g.k + 1:
        return f"first special weight 2*{w[0][1]} is not above {g.k + 1}"
    nk = params.n[g.k]
    mins = sorted(E[0] for E, _ in w)
    if not schreier.is_member(mins, nk):
        return f"special sequence is not S_{nk}-allowable (minima {mins})"
    for i, ((E, j), (_, h)) in enumerate(zip(w, g.children)):
        if not isinstance(h, Node) or h.k != 2 * j:
            return f"child {i} does not have weight index 2*{j}"
        if not h.support <= set(E):
            return f"child {i} support leaves E_{i + 1}"
    if registry is None:
        return "no sigma registry supplied for an odd node"
    why = explain_special(w, registry, quarantine)
    if why:
        return f"witness is not sigma-special: {why}"
    return None


def collapse_lambda(f, x):
    """Re-weight an even node's scalars to lambda_i = f_i(x) / (sum f_j(x)^2)^{1/2}."""
    if not isinstance(f, Node) or f.k % 2:
        raise ValueError("collapse_lambda needs an even node")
    vals = [evaluate(h, x) for _, h in f.children]
    tot = sum(v * v for v in vals)
    if tot == 0:
        return f
    kids = tuple((Scalar(1 if v >= 0 else -1, v * v / tot), h)
                 for v, (_, h) in zip(vals, f.children))
    return Node(f.k, f.weight, kids, None)


# -- JSON -------------------------------------------------------------------

def to_json(f):
    if isinstance(f, Leaf):
        return {"leaf": [f.sign, f.index]}
    return {"node": {
        "parity": f.parity, "j": f.k, "m": f.weight,
        "children": [[dump_number(lam.sq), lam.sign, to_json(h)] for lam, h in f.children],
        "witness": None if f.witness is None else [[list(E), j] for E, j in f.witness],
    }}


def from_json(obj, params=None):
    if "leaf" in obj:
        s, i = obj["leaf"]
        return Leaf(int(s), int(i))
    if "node" not in obj:
        raise ValueError("functional JSON needs a 'leaf' or 'node' key")
    nd = obj["node"]
    k = int(nd["j"])
    parity = nd.get("parity", "odd" if k % 2 else "even")
    if parity not in ("even", "odd") or (parity == "odd") != (k % 2 == 1):
        raise ValueError(f"parity {parity!r} does not match weight index {k}")
    if "m" in nd:
        w = int(nd["m"])
    elif params is not None:
        if not params.has(k):
            raise ValueError(f"weight index {k} is beyond the parameter list")
        w = params.m[k]
    else:
        raise ValueError("node without 'm' needs a parameter system")
    kids = []
    for sq, sign, child in nd["children"]:
        kids.append((Scalar(int(sign), parse_number(sq)), from_json(child, params)))
    wit = nd.get("witness")
    if wit is not None:
        wit = tuple((tuple(int(v) for v in E), int(j)) for E, j in wit)
    return Node(k, w, tuple(kids), wit)


# -- tree annotations -------------------------------------------------------

@dataclass
class NodeInfo:
    f: object
    m: int            # product of ancestor weights
    lam: float        # product of scalars from the root down to this node
    lam_sq: object    # same, squared, exact when possible
    ancestor_weights: tuple


@dataclass
class TreeAnnotations:
    nodes: dict = field(default_factory=dict)  # path -> NodeInfo
    roots: tuple = ()

    def children(self, path):
        g = self.nodes[path].f
        if isinstance(g, Leaf):
            return []
        return [path + (i,) for i in range(len(g.children))]

    def is_antichain(self, D):
        D = list(D)
        for a in D:
            for b in D:
                if a != b and b[:len(a)] == a:
                    return False
        return True

    def leaves(self):
        return [p for p, info in self.nodes.items() if isinstance(info.f, Leaf)]

    def maximal_antichains(self, within=None, limit=10000):
        """Maximal antichains of the forest (optionally of a downward-closed subset)."""
        keep = (lambda p: True) if within is None else (lambda p: p in within)

        def options(p):
            kids = [c for c in self.children(p) if keep(c)]
            out = [[p]]
            if kids:
                parts = [options(c) for c in kids]
                for combo in product(*parts):
                    out.append([q for part in combo for q in part])
                    if len(out) > limit:
                        raise ValueError("too many antichains")
            return out

        roots = [r for r in self.roots if keep(r)]
        res = []
        for combo in product(*[options(r) for r in roots]):
            res.append([q for part in combo for q in part])
            if len(res) > limit:
                raise ValueError("too many antichains")
        return res

    def lam_sq_sum(self, D):
        vals = [self.nodes[p].lam_sq for p in D]
        if all(isinstance(v, Fraction) for v in vals):
            return sum(vals, Fraction(0))
        return sum(float(v) for v in vals)

    def reconstruct(self, D, x):
        """sum over gamma in D of lambda(gamma)/m(gamma) f_gamma(x)."""
        return sum(self.nodes[p].lam * inv(self.nodes[p].m) * evaluate(self.nodes[p].f, x) for p in D)

    def lem6_filter(self, j, params):
        """Nodes whose ancestors all have weight <= m_{j-1} with product < m_j^3."""
        cap = params.m[j] ** 3
        top = params.m[j - 1]
        return {p for p, info in self.nodes.items()
                if info.m < cap and all(w <= top for w in info.ancestor_weights)}

    def lem6_check(self, j, params, limit=10000):
        """Returns a list of failures of the allowability conclusion on the filtered set."""
        F = self.lem6_filter(j, params)
        level = params.n[j] - 1
        out = []
        bound = 3 * math.log2(params.m[j])
        for p in F:
            if not len(self.nodes[p].ancestor_weights) < bound:
                out.append(f"node {p} has {len(self.nodes[p].ancestor_weights)} ancestors")
        for D in self.maximal_antichains(within=F, limit=limit):
            sets = [sorted(self.nodes[p].f.support) for p in D]
            if not schreier.check_family(sets, max(level, 0)):
                out.append(f"antichain {D} is not S_{level}-allowable")
        return out


def annotate(rep):
    """Annotate a functional, or a representation [(lambda, f), ...] of sum lambda_l f_l."""
    if isinstance(rep, (Leaf, Node)):
        rep = [(Scalar(1, Fraction(1)), rep)]
    rep = [(c if isinstance(c, Scalar) else Scalar.of(c), g) for c, g in rep]
    ann = TreeAnnotations()
    roots = []

    def walk(g, path, m, lam, lam_sq, anc):
        ann.nodes[path] = NodeInfo(g, m, lam, lam_sq, anc)
        if isinstance(g, Node):
            for i, (c, h) in enumerate(g.children):
                sq = lam_sq * c.sq if isinstance(lam_sq, Fraction) and c.exact() \
                    else float(lam_sq) * float(c.sq)
                walk(h, path + (i,), m * g.weight, lam * c.value, sq, anc + (g.weight,))

    for i, (c, g) in enumerate(rep):
        roots.append((i,))
        walk(g, (i,), 1, c.value, c.sq, ())
    ann.roots = tuple(roots)
    return ann
