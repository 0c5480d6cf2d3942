"""Repeated averages, basic special convex combinations and their witnesses."""
import math
from dataclasses import dataclass, field
from fractions import Fraction

from . import schreier
from .vectors import Vector, dump_number, parse_number, is_block_sequence

EXACT_SEARCH_CAP = 40


class Undecided(ValueError):
    """Raised when a bound cannot be decided within the search caps."""


def frac_sqrt(q):
    """Exact square root of a non-negative Fraction when it is rational, else a float."""
    q = Fraction(q)
    a, b = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return math.sqrt(q)


def segment_length_from(n, t):
    """Number of elements of the maximal S_n set made of consecutive integers from t."""
    if n == 0:
        return 1
    if n == 1:
        return t
    pos = t
    for _ in range(t):
        pos += segment_length_from(n - 1, pos)
    return pos - t


def repeated_average(n, L):
    """a_n^L as a Vector with exact Fraction coefficients.

    L is an increasing sequence of positive integers; it must be long enough to
    contain the maximal initial segment in S_n.
    """
    L = tuple(L)
    if any(b <= a for a, b in zip(L, L[1:])) or (L and L[0] < 1):
        raise ValueError("L must be strictly increasing positive integers")
    out = []

    def rec(level, pos, w):
        if pos >= len(L):
            raise ValueError(f"sequence L exhausted before a_{n}^L was complete")
        if level == 0:
            out.append((L[pos], w))
            return pos + 1
        l1 = L[pos]
        sub = w / l1
        for _ in range(l1):
            pos = rec(level - 1, pos, sub)
        return pos

    if n < 0:
        raise ValueError("n must be non-negative")
    rec(n, 0, Fraction(1))
    return Vector(tuple(out))


# -- maximal Schreier mass ---------------------------------------------------

def _top1_fenwick(items):
    """max over G in S_1 of the sum of weights; items sorted by index, weights >= 0."""
    N = len(items)
    ws = [w for _, w in items]
    if all(isinstance(w, Fraction) for w in ws):
        D = 1
        for d in {w.denominator for w in ws}:
            D = D * d // math.gcd(D, d)
        vals = [int(w * D) for w in ws]
        scale = D
    else:
        vals = [float(w) for w in ws]
        scale = None
    order = sorted(range(N), key=lambda i: (-vals[i], i))
    rank = [0] * N
    for r, i in enumerate(order):
        rank[i] = r + 1
    cnt = [0] * (N + 1)
    tot = [0] * (N + 1)
    LOG = N.bit_length()

    def add(r, v):
        while r <= N:
            cnt[r] += 1
            tot[r] += v
            r += r & -r

    def top(c):
        # sum of the c largest inserted values
        pos, acc, got = 0, 0, 0
        for b in range(LOG, -1, -1):
            nxt = pos + (1 << b)
            if nxt <= N and got + cnt[nxt] <= c:
                pos = nxt
                got += cnt[nxt]
                acc += tot[nxt]
        return acc

    best, best_i = None, None
    for i in range(N - 1, -1, -1):
        cand = vals[i] + top(items[i][0] - 1)
        if best is None or cand > best:
            best, best_i = cand, i
        add(rank[i], vals[i])
    if best is None:
        return 0, ()
    idx, _ = items[best_i]
    tail = sorted(range(best_i + 1, N), key=lambda i: (-vals[i], i))[: idx - 1]
    G = tuple(sorted([idx] + [items[i][0] for i in tail]))
    return (Fraction(best, scale) if scale is not None else best), G


def _branch_and_bound(items, k):
    N = len(items)
    suffix = [0] * (N + 1)
    for i in range(N - 1, -1, -1):
        suffix[i] = suffix[i + 1] + items[i][1]
    tr = schreier.Tracker(k)
    best = [0, ()]

    def rec(i, state, acc, chosen):
        if acc > best[0]:
            best[0], best[1] = acc, tuple(chosen)
        if i == N or acc + suffix[i] <= best[0]:
            return
        idx, w = items[i]
        nxt = tr.push(state, idx)
        if nxt is not None:
            chosen.append(idx)
            rec(i + 1, nxt, acc + w, chosen)
            chosen.pop()
        rec(i + 1, state, acc, chosen)

    rec(0, tr.start(), 0, [])
    return best[0], best[1]


def schreier_mass(weights, k, cap=EXACT_SEARCH_CAP):
    """max over G in S_k of sum_{i in G} w_i for non-negative weights {index: w}.

    Returns (value, G, exact).  Exact for k <= 1 and for small supports; beyond the
    cap the total mass is returned as a rigorous upper bound with exact=False.
    """
    items = sorted((i, w) for i, w in weights.items() if w != 0)
    if any(w < 0 for _, w in items):
        raise ValueError("weights must be non-negative")
    if not items:
        return 0, (), True
    if k == 0:
        i, w = max(items, key=lambda t: (t[1], -t[0]))
        return w, (i,), True
    if k == 1:
        v, G = _top1_fenwick(items)
        return v, G, True
    if schreier.is_member(tuple(i for i, _ in items), k):
        return sum(w for _, w in items), tuple(i for i, _ in items), True
    if len(items) <= cap:
        v, G = _branch_and_bound(items, k)
        return v, G, True
    return sum(w for _, w in items), None, False


def max_schreier_weight(x, p, k, cap=EXACT_SEARCH_CAP):
    """max over G in S_k of sum_{i in G} |x_i|^p (value only; may be an upper bound)."""
    w = {i: abs(c) ** p for i, c in x.coeffs}
    return schreier_mass(w, k, cap)[0]


# -- bscc predicates --------------------------------------------------------

def _pow_eps(eps, p):
    if isinstance(eps, float):
        return eps ** p
    return Fraction(eps) ** p


def explain_mass(weights, eps_p, n, cap=EXACT_SEARCH_CAP, tol=1e-12):
    """Check the p-th power masses of a candidate bscc.  None if valid, else a reason.

    Raises Undecided when a Schreier bound cannot be settled within the caps.
    """
    supp = tuple(sorted(weights))
    if not supp:
        return "empty support"
    if any(w <= 0 for w in weights.values()):
        return "non-positive coefficient"
    if not schreier.is_member(supp, n):
        return f"support is not in S_{n}"
    total = sum(weights.values())
    exact = all(isinstance(w, Fraction) for w in weights.values())
    if exact and not isinstance(eps_p, float):
        if total != 1:
            return f"masses sum to {total}, not 1"
    elif abs(float(total) - 1) > tol:
        return f"masses sum to {float(total)}, not 1"
    for k in range(n):
        v, G, ok = schreier_mass(weights, k, cap)
        if v < eps_p:
            continue
        if not ok:
            raise Undecided(f"cannot bound the S_{k} mass below {eps_p} within cap {cap}")
        return f"S_{k} set {list(G)} carries mass {v} >= {eps_p}"
    return None


def is_bscc(x, p, eps, n, cap=EXACT_SEARCH_CAP):
    """(p, eps, n)-basic special convex combination test for the vector x."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if any(c < 0 for _, c in x.coeffs):
        return False
    weights = {i: c if p == 1 else c * c for i, c in x.coeffs}
    return explain_mass(weights, _pow_eps(eps, p), n, cap) is None


@dataclass
class SccWitness:
    """Certificate that sum_k b_k y_{first+k} is a (p, eps, n)-scc.

    mass[k] = |b_k|^p, stored exactly; anchors[k] = maxsupp y_{first+k}.
    """
    p: int
    eps: Fraction
    n: int
    anchors: tuple
    mass: tuple
    first: int = 0

    @property
    def length(self):
        return len(self.anchors)

    def coefficients(self):
        if self.p == 1:
            return list(self.mass)
        return [frac_sqrt(m) for m in self.mass]

    def explain(self, blocks=None, cap=EXACT_SEARCH_CAP):
        if len(self.anchors) != len(self.mass):
            return "anchors and masses differ in length"
        if any(b <= a for a, b in zip(self.anchors, self.anchors[1:])):
            return "anchors are not increasing"
        if blocks is not None:
            used = blocks[self.first:self.first + len(self.anchors)]
            if len(used) != len(self.anchors):
                return "not enough blocks for the witness"
            if not is_block_sequence(used):
                return "blocks are not successive"
            if tuple(y.maxsupp() for y in used) != tuple(self.anchors):
                return "anchors do not match the block maxima"
        w = dict(zip(self.anchors, self.mass))
        return explain_mass(w, _pow_eps(self.eps, self.p), self.n, cap)

    def verify(self, blocks=None, cap=EXACT_SEARCH_CAP):
        return self.explain(blocks, cap) is None

    def combine(self, blocks):
        out = Vector()
        for b, y in zip(self.coefficients(), blocks[self.first:]):
            out = out + y.scale(b)
        return out

    def to_json(self):
        return {"p": self.p, "eps": dump_number(self.eps), "n": self.n,
                "anchors": list(self.anchors), "mass": [dump_number(m) for m in self.mass],
                "first": self.first}

    @classmethod
    def from_json(cls, obj):
        return cls(int(obj["p"]), parse_number(obj["eps"]), int(obj["n"]),
                   tuple(int(a) for a in obj["anchors"]),
                   tuple(parse_number(m) for m in obj["mass"]), int(obj.get("first", 0)))


def make_bscc(p, eps, n, L):
    """(p, eps, n)-bscc from the repeated average a_n^L; coefficients are (a_n^L)^{1/p}.

    Requires 3/min L < eps^p, the threshold that makes the repeated-average
    bound sufficient.  Returns (vector, witness).
    """
    L = tuple(L)
    if not L:
        raise ValueError("L is empty")
    eps_p = _pow_eps(eps, p)
    if not Fraction(3, L[0]) < eps_p:
        raise ValueError(f"need 3/min L < eps^p; got 3/{L[0]} >= {eps_p}")
    a = repeated_average(n, L)
    w = SccWitness(p, eps if isinstance(eps, float) else Fraction(eps), n,
                   a.support, tuple(c for _, c in a.coeffs))
    why = w.explain()
    if why is not None:
        raise RuntimeError(f"repeated average failed its own check: {why}")
    coeffs = w.coefficients()
    return Vector(tuple(zip(a.support, coeffs))), w


def make_scc(blocks, eps, n, p=2, cap=EXACT_SEARCH_CAP):
    """Choose coefficients b_k on a run of successive blocks making sum b_k y_k a
    (p, eps, n)-scc.  Runs are tried from each starting block in turn; the first
    whose repeated average over the anchors passes the exact check is returned."""
    blocks = list(blocks)
    if not is_block_sequence(blocks):
        raise ValueError("blocks must be nonzero with successive supports")
    anchors = [y.maxsupp() for y in blocks]
    eps_p = _pow_eps(eps, p)
    last = None
    for s in range(len(blocks)):
        try:
            a = repeated_average(n, anchors[s:])
        except ValueError as e:
            last = str(e)
            continue
        w = SccWitness(p, eps if isinstance(eps, float) else Fraction(eps), n,
                       a.support, tuple(c for _, c in a.coeffs), first=s)
        try:
            why = explain_mass(dict(zip(w.anchors, w.mass)), eps_p, n, cap)
        except Undecided as e:
            why = str(e)
        if why is None:
            return w
        last = why
    raise ValueError(f"no run of blocks yields a ({p},{eps},{n})-scc: {last}")
