"""Builders for seminormalized scc's, RIS, exact vectors and dependent sequences.

Every builder returns a witness object whose verify() re-derives all defining
conditions from stored data; witnesses round-trip through JSON.
"""
from dataclasses import dataclass, field
from fractions import Fraction

from .averages import SccWitness, make_scc
from .functionals import Leaf, Node, Scalar, evaluate, validate
from . import functionals as fn
from .norm_engine import lower_value, upper_value, norm_bounds, NormOptions, TOL
from .params import SigmaError, explain_special, explain_in_sigma
from .vectors import Vector, is_block_sequence, dump_number, parse_number
from . import schreier


class ConstructionError(ValueError):
    pass


def _vecs_json(vs):
    return [v.to_json() for v in vs]


def _vecs_from(obj):
    return [Vector.from_json(v) for v in obj]


# -- seminormalized scc -----------------------------------------------------

def build_seminormalized_scc(blocks, eps, n, params, tol=TOL):
    """(eps, n)-scc of a normalized block sequence with certified norm >= 1/2.

    Starting windows are tried in order; the first combination whose exact
    even-fragment lower bound reaches 1/2 is returned as (vector, witness, lower).
    """
    blocks = list(blocks)
    if not blocks:
        raise ConstructionError("empty block list")
    for y in blocks:
        if lower_value(y, params) < 1 - tol:
            raise ConstructionError("blocks must be normalized (lower bound below 1)")
    last = "no window tried"
    for s in range(len(blocks)):
        try:
            w = make_scc(blocks[s:], eps, n)
        except ValueError as e:
            last = str(e)
            break
        w.first += s
        x = w.combine(blocks)
        lo = lower_value(x, params)
        if lo >= 0.5 - tol:
            return x, w, lo
        last = f"window from block {s} has lower bound {lo} < 1/2"
    raise ConstructionError(f"block list exhausted: {last}")


# -- RIS ----------------------------------------------------------------------

@dataclass
class RISWitness:
    base: list          # underlying successive blocks
    sccs: list          # SccWitness per RIS element, indices into base
    weights: tuple      # even weight indices 2 j_k
    C: object
    seminormalized: bool = False

    def vectors(self):
        return [w.combine(self.base) for w in self.sccs]

    def explain(self, params, tol=TOL):
        out = []
        xs = self.vectors()
        if len(self.weights) != len(xs):
            out.append("weights and elements differ in length")
            return out
        if not is_block_sequence(xs):
            out.append("RIS elements are not a block sequence")
        for a, b in zip(self.weights, self.weights[1:]):
            if b <= a:
                out.append("weights are not increasing")
        for k, (w, x, wt) in enumerate(zip(self.sccs, xs, self.weights)):
            if wt % 2 or not params.has(wt):
                out.append(f"element {k}: weight index {wt} is not an available even index")
                continue
            if w.p != 2 or w.eps > Fraction(1, params.m[wt] ** 3) or w.n != params.n[wt]:
                out.append(f"element {k}: scc parameters do not match weight index {wt}")
            why = w.explain(self.base)
            if why:
                out.append(f"element {k}: {why}")
            if upper_value(x, params) > float(self.C) + tol:
                out.append(f"element {k}: norm upper bound exceeds C")
            if self.seminormalized and lower_value(x, params) < 1 - tol:
                out.append(f"element {k}: norm lower bound below 1")
        for k in range(len(xs) - 1):
            a, b = self.weights[k], self.weights[k + 1]
            if params.has(a) and params.has(b):
                if not xs[k].maxsupp() ** 2 * params.m[a] < params.m[b]:
                    out.append(f"condition (3) fails between elements {k} and {k + 1}")
        return out

    def verify(self, params):
        return not self.explain(params)

    def to_json(self):
        return {"base": _vecs_json(self.base), "sccs": [w.to_json() for w in self.sccs],
                "weights": list(self.weights), "C": dump_number(self.C),
                "seminormalized": self.seminormalized}

    @classmethod
    def from_json(cls, obj):
        return cls(_vecs_from(obj["base"]), [SccWitness.from_json(w) for w in obj["sccs"]],
                   tuple(obj["weights"]), parse_number(obj["C"]), bool(obj["seminormalized"]))


def next_weight(params, k, maxsupp):
    """Least even index k' > k with maxsupp^2 m_k < m_k' (RIS condition (3))."""
    for k2 in range(k + 2, len(params.m), 2):
        if maxsupp ** 2 * params.m[k] < params.m[k2]:
            return k2
    return None


def build_ris(blocks, C, start_weight, params, length=None, seminormalized=False):
    """Greedy RIS: each element is the first scc found over the remaining blocks at
    the current weight; the next weight is the least satisfying condition (3)."""
    blocks = list(blocks)
    if not is_block_sequence(blocks):
        raise ConstructionError("blocks must be nonzero with successive supports")
    if start_weight % 2 or not params.has(start_weight):
        raise ConstructionError(f"start weight {start_weight} is not an available even index")
    sccs, weights = [], []
    pos, k = 0, start_weight
    while length is None or len(sccs) < length:
        if pos >= len(blocks):
            break
        try:
            w = make_scc(blocks[pos:], Fraction(1, params.m[k] ** 3), params.n[k])
        except ValueError as e:
            if not sccs or length is not None:
                raise ConstructionError(f"cannot build RIS element {len(sccs)}: {e}")
            break
        w.first += pos
        sccs.append(w)
        weights.append(k)
        pos = w.first + w.length
        x = w.combine(blocks)
        if length is not None and len(sccs) == length:
            break
        k2 = next_weight(params, k, x.maxsupp())
        if k2 is None:
            if length is not None or pos < len(blocks):
                raise ConstructionError("parameter list too short for condition (3)")
            break
        k = k2
    wit = RISWitness(blocks, sccs, tuple(weights), C, seminormalized)
    for i, x in enumerate(wit.vectors()):
        if upper_value(x, params) > float(C) + TOL:
            raise ConstructionError(f"C = {C} is smaller than the upper bound of element {i}")
    bad = wit.explain(params)
    if bad:
        raise ConstructionError(f"RIS failed verification: {bad}")
    return wit


# -- exact vectors ------------------------------------------------------------

@dataclass
class ExactVectorWitness:
    ris: RISWitness
    k: int               # even weight index 2j of the exact vector
    scc: SccWitness      # over the RIS elements

    def members(self):
        return list(range(self.scc.first, self.scc.first + self.scc.length))

    def inner(self):
        return self.scc.combine(self.ris.vectors())

    def vector(self, params):
        return self.inner().scale(params.m[self.k])

    def explain(self, params):
        out = []
        if self.k % 2 or not params.has(self.k):
            return [f"weight index {self.k} is not an available even index"]
        first = self.scc.first
        if not self.k < self.ris.weights[first]:
            out.append(f"weight index {self.k} is not below the first member's {self.ris.weights[first]}")
        if self.scc.eps > Fraction(1, params.m[self.k] ** 3) or self.scc.n != params.n[self.k] \
                or self.scc.p != 2:
            out.append("scc parameters do not match the weight index")
        why = self.scc.explain(self.ris.vectors())
        if why:
            out.append(why)
        return out

    def to_json(self):
        return {"k": self.k, "scc": self.scc.to_json()}


def build_exact(ris, k, params, start=0):
    """m_k sum b_s x_s over the first admissible run of RIS elements from `start`."""
    xs = ris.vectors()
    eps = Fraction(1, params.m[k] ** 3)
    for s in range(start, len(xs)):
        if not k < ris.weights[s]:
            continue
        try:
            w = make_scc(xs[s:], eps, params.n[k])
        except ValueError:
            continue
        w.first += s
        ev = ExactVectorWitness(ris, k, w)
        if not ev.explain(params):
            return ev
    raise ConstructionError(f"no exact vector of weight index {k} from RIS element {start}")


def _exactness_issues(ris, parts, zs):
    """Conditions (2), (3) of an exact sequence against the RIS members used."""
    out = []
    xs = ris.vectors()
    used = sorted({s for p in parts for s in p.members()})
    for i, (p, z) in enumerate(zip(parts, zs)):
        jk = p.k // 2
        for s in used:
            y, i_s = xs[s], ris.weights[s] // 2
            if z.minsupp() <= y.minsupp() and not jk < i_s:
                out.append(f"exactness (2) fails for z_{i + 1} and RIS element {s}")
            if y.maxsupp() < z.minsupp() and not jk > i_s:
                out.append(f"exactness (3) fails for z_{i + 1} and RIS element {s}")
    return out


@dataclass
class ExactSequenceWitness:
    """A block sequence of exact vectors over one seminormalized RIS."""
    ris: RISWitness
    parts: list

    @property
    def C(self):
        return self.ris.C

    def vectors(self, params):
        return [p.vector(params) for p in self.parts]

    def weights(self):
        return [p.k for p in self.parts]

    def explain(self, params):
        out = list(self.ris.explain(params))
        if not self.ris.seminormalized:
            out.append("the RIS is not marked seminormalized")
        zs = self.vectors(params)
        if not is_block_sequence(zs):
            out.append("exact vectors are not a block sequence")
        for i, p in enumerate(self.parts):
            if p.ris is not self.ris:
                out.append(f"z_{i + 1} refers to a different RIS")
            for why in p.explain(params):
                out.append(f"z_{i + 1}: {why}")
        out.extend(_exactness_issues(self.ris, self.parts, zs))
        return out

    def verify(self, params):
        return not self.explain(params)

    def to_json(self):
        return {"ris": self.ris.to_json(), "parts": [p.to_json() for p in self.parts]}

    @classmethod
    def from_json(cls, obj):
        ris = RISWitness.from_json(obj["ris"])
        parts = [ExactVectorWitness(ris, int(p["k"]), SccWitness.from_json(p["scc"]))
                 for p in obj["parts"]]
        return cls(ris, parts)


def build_exact_sequence(ris, ks, params, start=0, skip=1):
    """Exact vectors of weight indices ks over successive runs of the RIS."""
    parts = []
    for k in ks:
        ev = build_exact(ris, k, params, start)
        parts.append(ev)
        start = ev.members()[-1] + 1 + skip
    seq = ExactSequenceWitness(ris, parts)
    bad = seq.explain(params)
    if bad:
        raise ConstructionError(f"exact sequence failed verification: {bad}")
    return seq


# -- dependent sequences ------------------------------------------------------

@dataclass
class DependentWitness:
    ris: RISWitness
    j: int                       # target odd weight index is 2j+1
    parts: list                  # ExactVectorWitness per z_i
    special: tuple               # ((E_i, j_i), ...)
    partners: list               # (functional, vector) per RIS element, or None
    outer: SccWitness = None     # scc over the z_i, when one exists
    C: object = None

    def zs(self, params):
        return [p.vector(params) for p in self.parts]

    def gs(self, params):
        out = []
        for p in self.parts:
            kids = []
            for s, a in zip(p.members(), p.scc.mass):
                kids.append((Scalar(1, a), self.partners[s][0]))
            out.append(Node(p.k, params.m[p.k], tuple(kids), None))
        return out

    def partner_vectors(self, params):
        """w_i = m_{2 j_i} sum a_s y_s, supported inside E_i."""
        out = []
        for p in self.parts:
            v = Vector()
            for s, b in zip(p.members(), p.scc.coefficients()):
                v = v + self.partners[s][1].scale(b)
            out.append(v.scale(params.m[p.k]))
        return out

    def psi(self, params):
        """(1/m_{2j+1}) sum b_i g_i over the outer scc, or None."""
        if self.outer is None:
            return None
        gs = self.gs(params)
        kids = tuple((Scalar(1, m), g) for m, g in zip(self.outer.mass, gs))
        return Node(2 * self.j + 1, params.m[2 * self.j + 1], kids, tuple(self.special))

    def explain(self, params, registry, tol=TOL):
        out = list(self.ris.explain(params))
        zs = self.zs(params)
        if len(self.special) != len(self.parts):
            out.append("special sequence and exact vectors differ in length")
            return out
        if not is_block_sequence(zs):
            out.append("exact vectors are not a block sequence")
        for i, (p, (E, ji)) in enumerate(zip(self.parts, self.special)):
            for why in p.explain(params):
                out.append(f"z_{i + 1}: {why}")
            if p.k != 2 * ji:
                out.append(f"z_{i + 1}: weight index {p.k} differs from 2 j_{i + 1} = {2 * ji}")
        out.extend(_exactness_issues(self.ris, self.parts, zs))
        why = explain_special(self.special, registry)
        if why:
            out.append(f"special sequence: {why}")
        j1 = self.special[0][1] if self.special else None
        if j1 is not None and not (self.j + 1 < j1 and params.in_n1(j1)):
            out.append("need j + 1 < j_1 in N1")
        allz = set().union(*[set(z.support) for z in zs]) if zs else set()
        for i, ((E, _), z) in enumerate(zip(self.special, zs)):
            if allz.intersection(E):
                out.append(f"E_{i + 1} meets the support of the sequence")
            if not z.maxsupp() < E[-1]:
                out.append(f"maxsupp z_{i + 1} is not below maxsupp E_{i + 1}")
        for i, g in enumerate(self.gs(params)):
            v = validate(g, params, registry)
            if not v:
                out.append(f"g_{i + 1} invalid: {v.reason}")
            elif not g.support <= set(self.special[i][0]):
                out.append(f"g_{i + 1} leaves E_{i + 1}")
        # the scaled sequence (1/m_{2 j_k}) z_k is again a RIS
        for i in range(len(zs) - 1):
            a, b = self.parts[i].k, self.parts[i + 1].k
            if not zs[i].maxsupp() ** 2 * params.m[a] < params.m[b]:
                out.append(f"scaled sequence fails RIS condition (3) at {i + 1}")
        C = float(self.C if self.C is not None else self.ris.C)
        for i, p in enumerate(self.parts):
            if upper_value(p.inner(), params) > C + tol:
                out.append(f"scaled z_{i + 1} has norm above C")
        if self.outer is not None:
            why = self.outer.explain(zs)
            if why:
                out.append(f"outer scc: {why}")
            psi = self.psi(params)
            v = validate(psi, params, registry)
            if not v:
                out.append(f"special functional invalid at {list(v.path)}: {v.reason}")
        return out

    def verify(self, params, registry):
        return not self.explain(params, registry)

    def to_json(self):
        return {"ris": self.ris.to_json(), "j": self.j,
                "parts": [p.to_json() for p in self.parts],
                "special": [[list(E), jj] for E, jj in self.special],
                "partners": [None if pr is None else [fn.to_json(pr[0]), pr[1].to_json()]
                             for pr in self.partners],
                "outer": None if self.outer is None else self.outer.to_json(),
                "C": None if self.C is None else dump_number(self.C)}

    @classmethod
    def from_json(cls, obj):
        ris = RISWitness.from_json(obj["ris"])
        parts = [ExactVectorWitness(ris, int(p["k"]), SccWitness.from_json(p["scc"]))
                 for p in obj["parts"]]
        partners = [None if pr is None else (fn.from_json(pr[0]), Vector.from_json(pr[1]))
                    for pr in obj["partners"]]
        special = tuple((tuple(E), int(jj)) for E, jj in obj["special"])
        outer = None if obj.get("outer") is None else SccWitness.from_json(obj["outer"])
        C = None if obj.get("C") is None else parse_number(obj["C"])
        return cls(ris, int(obj["j"]), parts, special, partners, outer, C)


def first_n1_above(params, j):
    for j1 in range(j + 2, len(params.m)):
        if params.in_n1(j1) and params.has(2 * j1):
            return j1
    return None


def build_dependent(registry, ris, j, partners, params, length=1, j1=None):
    """Alternating construction of a (0, C, 2j+1) dependent sequence.

    partners[s] = (f_s, y_s): a functional and a vector with supports disjoint
    from RIS element s and f_s(y_s) > 0; they stand in for the images of the
    RIS under an operator.  z_i = m_{2 j_i} sum a_s x_s, g_i = (1/m_{2 j_i})
    sum a_s f_s, E_i = supp g_i + {maxsupp z_i + 1}, j_{i+1} = sigma(prefix).
    """
    xs = ris.vectors()
    if len(partners) != len(xs):
        raise ConstructionError("need one partner per RIS element")
    for s, (f, y) in enumerate(partners):
        if not f.support.isdisjoint(xs[s].support):
            raise ConstructionError(f"partner functional {s} meets RIS element {s}")
        if not set(y.support).isdisjoint(xs[s].support):
            raise ConstructionError(f"partner vector {s} meets RIS element {s}")
        v = validate(f, params, registry)
        if not v:
            raise ConstructionError(f"partner functional {s} invalid: {v.reason}")
    if j1 is None:
        j1 = first_n1_above(params, j)
    if j1 is None or not (j + 1 < j1 and params.in_n1(j1)) or not params.has(2 * j1):
        raise ConstructionError(f"no admissible j_1 in N1 above {j + 1}")
    parts, special = [], []
    ji, start = j1, 0
    while len(parts) < length:
        try:
            ev = build_exact(ris, 2 * ji, params, start)
        except ConstructionError as e:
            raise ConstructionError(f"exact vector {len(parts) + 1}: {e}")
        parts.append(ev)
        z = ev.vector(params)
        gsupp = set()
        for s in ev.members():
            gsupp |= set(partners[s][0].support)
        E = tuple(sorted(gsupp | {z.maxsupp() + 1}))
        special.append((E, ji))
        start = ev.members()[-1] + 2
        if len(parts) < length:
            try:
                ji = registry.assign(special)
            except SigmaError as e:
                raise ConstructionError(f"sigma: {e}")
    dep = DependentWitness(ris, j, parts, tuple(special), list(partners), None, ris.C)
    zs = dep.zs(params)
    k_eps = 2 * j + 2
    if params.has(k_eps):
        try:
            outer = make_scc(zs, Fraction(1, params.m[k_eps] ** 2), params.n[2 * j + 1])
            if outer.first == 0 and outer.length == len(zs):
                dep.outer = outer
        except ValueError:
            pass
    bad = dep.explain(params, registry)
    if bad:
        raise ConstructionError(f"dependent sequence failed verification: {bad}")
    return dep


# -- gap demonstration --------------------------------------------------------

@dataclass
class GapReport:
    j: int
    d: int
    C: object
    star_lower: float
    star_upper: float
    star_bound: float            # C / m_{2j+1}^2
    star_bound_holds: bool
    psi_value: float             # special functional on the partner combination
    partner_upper: float
    theta: float                 # psi_value * m_{2j+1}
    ratio: float                 # psi_value * m_{2j+1} / star_upper
    violations: tuple = ()
    witness: object = None

    def to_json(self):
        d = {k: v for k, v in self.__dict__.items() if k != "witness"}
        d["C"] = dump_number(self.C)
        d["violations"] = list(self.violations)
        return d


def gap_demo(registry, params, j, scale=1, spacing=2):
    """Smallest dependent-sequence instance for target odd weight 2j+1.

    RIS elements are unit vectors e_t, each followed by a partner coordinate t+1
    carrying f = e_{t+1}^* and y = scale e_{t+1}.  Reports the norm bounds of
    u = sum b_k z_k, the special functional on v = sum b_k w_k, and derived ratios.
    """
    j1 = first_n1_above(params, j)
    if j1 is None:
        raise ConstructionError("parameter list has no j_1 in N1 above j + 1")
    nodd = params.n[2 * j + 1]
    if nodd != 0:
        raise ConstructionError(f"n_{2 * j + 1} = {nodd}; the smallest instance needs it to be 0")
    d = 1
    count = 2
    ts = [2 + spacing * i for i in range(count)]
    base = [Vector.unit(t) for t in ts]
    ris = build_ris(base, Fraction(1), 2 * (j1 + 1), params, length=count, seminormalized=True)
    partners = [(Leaf(1, t + 1), Vector.unit(t + 1, Fraction(scale))) for t in ts]
    dep = build_dependent(registry, ris, j, partners, params, length=d, j1=j1)
    if dep.outer is None:
        raise ConstructionError("no outer scc over the dependent sequence")
    zs = dep.zs(params)
    b = dep.outer.coefficients()
    u = Vector()
    for bk, z in zip(b, zs):
        u = u + z.scale(bk)
    v = Vector()
    for bk, w in zip(b, dep.partner_vectors(params)):
        v = v + w.scale(bk)
    ub = norm_bounds(u, params, registry, NormOptions())
    vb = norm_bounds(v, params, registry, NormOptions())
    psi = dep.psi(params)
    pv = evaluate(psi, v)
    m = params.m[2 * j + 1]
    C = ris.C
    bound = float(C) / m ** 2
    if not ub.lower <= ub.upper + TOL:
        raise RuntimeError("sandwich failed on the combination")
    if not pv <= vb.upper + TOL:
        raise RuntimeError("special functional exceeds the upper bound of its vector")
    return GapReport(j, d, C, ub.lower, ub.upper, bound, ub.upper <= bound + TOL,
                     pv, vb.upper, pv * m, pv * m / ub.upper, params.violations, dep)


def strict_degenerate_check(params, j):
    """Exact-integer checks behind the single-term (d = 1) case under strict growth.

    A term of a (1/m_{2j+2}^2, n)-scc has coefficient below 1/m_{2j+2}^2, so a
    single term contributes at most C/m_{2j+2}^2 <= C/m_{2j+1}^2; the RIS tail
    estimate contributes 2/m_{2 j_1} <= 1/m_{2j+1}^2 for the first j_1 in N1 above j+1.
    """
    if not params.strict:
        raise ValueError("strict parameters required")
    j1 = first_n1_above(params, j)
    need = [2 * j + 1, 2 * j + 2] + ([2 * j1] if j1 is not None else [])
    if j1 is None or any(not params.has(k) for k in need):
        raise ValueError("parameter list too short for this j")
    m_odd, m_next, m_j1 = params.m[2 * j + 1], params.m[2 * j + 2], params.m[2 * j1]
    single = m_odd ** 2 <= m_next ** 2
    tail = 2 * m_odd ** 2 <= m_j1
    return {"j": j, "j1": j1, "single_term": single, "ris_tail": tail,
            "holds": single and tail}
