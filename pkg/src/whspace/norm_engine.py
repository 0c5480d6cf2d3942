"""Lower and upper bounds for the norm of finitely supported vectors.

The even fragment (leaves plus even operations) is computed exactly by a DP over
subsets of the support.  Upper bounds enlarge the norming set by admitting odd
operations without the sigma-chaining constraint.  The oracle enumerates real
functionals and evaluates them, as an independent cross-check.
"""
import math
from dataclasses import dataclass, field

from . import schreier
from .functionals import Leaf, Node, Scalar, evaluate, validate, inv
from .params import SigmaError

DP_CAP = 14
ODD_CAP = 10
ORACLE_SUPPORT_CAP = 6
ORACLE_DEPTH_CAP = 3
TOL = 1e-9
NEG = float("-inf")


class CapExceeded(ValueError):
    pass


@dataclass
class NormOptions:
    j_max: int = None          # even weights m_0..m_{2 j_max}; None uses the whole list
    dp_cap: int = DP_CAP
    odd_cap: int = ODD_CAP      # above this the odd relaxation drops its labels
    oracle_depth: int = 0       # 0 disables the oracle search for odd certificates
    certificates: tuple = ()
    quarantine: bool = False
    tol: float = TOL


@dataclass
class NormBounds:
    lower: float
    lower_certificate: object
    upper: float
    upper_method: str
    exact: bool
    truncation: int = None      # smallest weight index left out, if any
    notes: list = field(default_factory=list)

    def to_json(self):
        from .functionals import to_json
        return {"lower": self.lower, "upper": self.upper, "upper_method": self.upper_method,
                "exact": self.exact, "truncation": self.truncation, "notes": self.notes,
                "lower_certificate": None if self.lower_certificate is None
                else to_json(self.lower_certificate)}


def _weights(params, j_max):
    if j_max is None:
        top = len(params.m) - 1
    else:
        top = min(len(params.m) - 1, 2 * j_max + 1)
    even = [k for k in range(0, top + 1, 2)]
    odd = [k for k in range(1, top + 1, 2)]
    omitted = top + 1 if top + 1 < len(params.m) else None
    return even, odd, omitted


def _submasks(rest):
    sub = rest
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & rest


class _DP:
    """Bottom-up DP over subsets of supp x.  mode 'even' or 'upper'."""

    def __init__(self, x, params, j_max, mode, odd_cap=ODD_CAP):
        self.params = params
        self.mode = mode
        self.idx = [i for i, _ in x.coeffs]
        self.abs = [abs(float(c)) for _, c in x.coeffs]
        self.sign = [1 if c > 0 else -1 for _, c in x.coeffs]
        self.N = N = len(self.idx)
        self.even, odd, self.omitted = _weights(params, j_max)
        self.odd = odd if mode == "upper" else []
        self.coarse_odd = mode == "upper" and N > odd_cap
        self.trackers = {k: schreier.Tracker(params.n[k], size_bound=N)
                         for k in self.even + self.odd}
        full = (1 << N) - 1
        self.U = [0.0] * (full + 1)
        self.S = {k: [0.0] * (full + 1) for k in self.even}  # excluding the whole piece
        self.back = [None] * (full + 1)
        self.l2sq = [0.0] * (full + 1)
        self.memo = {k: {} for k in self.even}
        self.odd_memo = {}
        self.used_odd = False
        self.env_den = params.m[self.omitted] if self.omitted is not None else None
        self.env_even = None
        if self.omitted is not None:
            ke = self.omitted if self.omitted % 2 == 0 else self.omitted + 1
            if ke < len(params.m):
                self.env_even = params.m[ke]
        self._run()

    # value of a piece as an even child with weight index c (whole=False) or
    # as the whole current mask (excluding the single-piece self family)
    def W(self, c, A):
        if c == "tail":
            return math.sqrt(self.l2sq[A]) * inv(self.env_even)
        return max(self.S[c][A], self.U[A] * inv(self.params.m[c]))

    def _T(self, k, rem, st):
        if rem == 0:
            return 0.0
        memo = self.memo[k]
        key = (rem, st)
        hit = memo.get(key)
        if hit is not None:
            return hit[0]
        low = rem & -rem
        st2 = self.trackers[k].push(st, self.idx[low.bit_length() - 1])
        best, choice = NEG, None
        if st2 is not None:
            rest = rem ^ low
            U = self.U
            for sub in _submasks(rest):
                A = low | sub
                v = U[A] * U[A] + self._T(k, rem ^ A, st2)
                if v > best:
                    best, choice = v, A
        memo[key] = (best, choice, st2)
        return best

    def _best_family(self, k, mask):
        """max sum of squares over S_{n_k}-allowable families inside mask, except {mask}."""
        tr = self.trackers[k]
        low = mask & -mask
        st = tr.push(tr.start(), self.idx[low.bit_length() - 1])
        best, choice = NEG, None
        rest = mask ^ low
        for sub in _submasks(rest):
            A = low | sub
            if A == mask:
                continue
            v = self.U[A] * self.U[A] + self._T(k, mask ^ A, st)
            if v > best:
                best, choice = v, ("first", A)
        # families missing min(mask): WLOG they cover an upper part of mask
        m2 = rest
        while m2:
            v = self._T(k, m2, tr.start())
            if v > best:
                best, choice = v, ("upper", m2)
            m2 &= m2 - 1
        return best, choice

    # -- relaxed odd operations --------------------------------------------
    def _labels(self, k):
        p = self.params
        floor = (k + 1) // 2  # need 2 i > k + 1
        avail = [i for i in range(floor + 1, len(p.m)) if 2 * i in self.S]
        firsts = [None] + [i for i in avail if p.in_n1(i)]
        out = []
        for i1 in firsts:
            lo = floor if i1 is None else i1
            labels = ([2 * i1] if i1 is not None else []) + \
                [2 * i for i in avail if p.in_n2(i) and i > lo]
            tail = self.env_even is not None
            if labels or tail:
                out.append((tuple(labels), tail))
        return out

    def _To(self, k, labels, tail, rem, st, used):
        if rem == 0:
            return 0.0
        key = (k, labels, tail, rem, st, used)
        hit = self.odd_memo.get(key)
        if hit is not None:
            return hit
        low = rem & -rem
        st2 = self.trackers[k].push(st, self.idx[low.bit_length() - 1])
        best = NEG
        if st2 is not None:
            rest = rem ^ low
            for sub in _submasks(rest):
                A = low | sub
                after = rem ^ A
                for t, c in enumerate(labels):
                    if used >> t & 1:
                        continue
                    w = self.W(c, A)
                    v = w * w + self._To(k, labels, tail, after, st2, used | 1 << t)
                    if v > best:
                        best = v
                if tail:
                    w = self.W("tail", A)
                    v = w * w + self._To(k, labels, tail, after, st2, used)
                    if v > best:
                        best = v
        self.odd_memo[key] = best
        return best

    def _odd_value(self, k, mask):
        tr = self.trackers[k]
        low = mask & -mask
        best = NEG
        if self.coarse_odd:
            # drop labels: children are bounded by the full value of their piece
            st = tr.push(tr.start(), self.idx[low.bit_length() - 1])
            for sub in _submasks(mask ^ low):
                A = low | sub
                if A == mask:
                    v = max(self.S[c][mask] for c in self.S) ** 2
                    if self.env_even is not None:
                        v = max(v, self.W("tail", mask) ** 2)
                else:
                    v = self.U[A] ** 2 + self._T_upper_like(k, mask ^ A, st)
                best = max(best, v)
            m2 = mask ^ low
            while m2:
                best = max(best, self._T_upper_like(k, m2, tr.start()))
                m2 &= m2 - 1
            return math.sqrt(best) * inv(self.params.m[k]) if best > 0 else 0.0
        st = tr.push(tr.start(), self.idx[low.bit_length() - 1])
        for labels, tail in self._labels(k):
            opts = [(t, c) for t, c in enumerate(labels)] + ([(None, "tail")] if tail else [])
            for sub in _submasks(mask ^ low):
                A = low | sub
                after = mask ^ A
                for t, c in opts:
                    if A == mask:
                        w = self.S[c][mask] if c != "tail" else self.W("tail", A)
                        v = w * w
                    else:
                        w = self.W(c, A)
                        used = 0 if t is None else 1 << t
                        v = w * w + self._To(k, labels, tail, after, st, used)
                    best = max(best, v)
            m2 = mask ^ low
            while m2:
                best = max(best, self._To(k, labels, tail, m2, tr.start(), 0))
                m2 &= m2 - 1
        if best <= 0:
            return 0.0
        return math.sqrt(best) * inv(self.params.m[k])

    def _T_upper_like(self, k, rem, st):
        # unlabelled partition DP for odd weight k (coarse mode)
        if k not in self.memo:
            self.memo[k] = {}
        return self._T(k, rem, st)

    def _run(self):
        N = self.N
        masks = sorted(range(1, 1 << N), key=lambda m: (bin(m).count("1"), m))
        for mask in masks:
            low = mask & -mask
            p = low.bit_length() - 1
            self.l2sq[mask] = self.l2sq[mask ^ low] + self.abs[p] ** 2
            # leaf
            bp = max((q for q in range(N) if mask >> q & 1), key=lambda q: (self.abs[q], -q))
            best, back = self.abs[bp], ("leaf", bp)
            if mask != low:
                for k in self.even:
                    v, choice = self._best_family(k, mask)
                    s = math.sqrt(v) * inv(self.params.m[k]) if v > 0 else 0.0
                    self.S[k][mask] = s
                    if s > best:
                        best, back = s, ("even", k, choice)
                for k in self.odd:
                    s = self._odd_value(k, mask)
                    if s > best:
                        best, back = s, ("odd", k, None)
            if self.env_den is not None and self.mode == "upper":
                e = math.sqrt(self.l2sq[mask]) * inv(self.env_den)
                if e > best:
                    best, back = e, ("envelope", None, None)
            self.U[mask] = best
            self.back[mask] = back

    # -- certificates --------------------------------------------------------
    def _pieces(self, k, mask, choice):
        tr = self.trackers[k]
        kind, A = choice
        if kind == "first":
            out = [A]
            rem = mask ^ A
            st = tr.push(tr.start(), self.idx[(A & -A).bit_length() - 1])
        else:
            out = []
            rem, st = A, tr.start()
        while rem:
            _, B, st2 = self.memo[k][(rem, st)]
            out.append(B)
            rem, st = rem ^ B, st2
        return out

    def certificate(self, mask):
        back = self.back[mask]
        if back[0] == "leaf":
            q = back[1]
            return Leaf(self.sign[q], self.idx[q])
        if back[0] != "even":
            raise ValueError("certificates exist only for the even fragment")
        _, k, choice = back
        pieces = self._pieces(k, mask, choice)
        vals = [self.U[A] for A in pieces]
        tot = sum(v * v for v in vals)
        kids = tuple((Scalar(1, v * v / tot), self.certificate(A)) for v, A in zip(vals, pieces))
        return Node(k, self.params.m[k], kids, None)


def _check_cap(x, cap):
    if len(x) > cap:
        raise CapExceeded(f"support size {len(x)} exceeds the DP cap {cap}")


def norm_even(x, params, j_max=None, cap=DP_CAP):
    """Exact norm for the fragment closed under even operations with weights
    m_0, m_2, ..., m_{2 j_max}.  Returns (value, certificate)."""
    _check_cap(x, cap)
    if not x:
        return 0.0, Leaf(1, 1)
    dp = _DP(x, params, j_max, "even")
    full = (1 << dp.N) - 1
    return dp.U[full], dp.certificate(full)


def norm_upper(x, params, j_max=None, cap=DP_CAP, odd_cap=ODD_CAP):
    """Upper bound for the norm.  Returns (value, method)."""
    _check_cap(x, cap)
    if len(x) <= 1:
        return float(x.sup_norm()), "linf"
    dp = _DP(x, params, j_max, "upper", odd_cap)
    full = (1 << dp.N) - 1
    method = "relaxed_odd" if dp.odd and any(dp._labels(k) for k in dp.odd) else "even_only"
    if dp.omitted is not None and method == "even_only":
        method = "relaxed_odd"
    return dp.U[full], method


def upper_value(x, params, j_max=None, cap=DP_CAP):
    """norm_upper, falling back to the l2 norm (always an upper bound) above the cap."""
    if len(x) > cap:
        return x.l2_norm()
    return norm_upper(x, params, j_max, cap)[0]


def lower_value(x, params, j_max=None, cap=DP_CAP):
    if len(x) > cap:
        return float(x.sup_norm())
    return norm_even(x, params, j_max, cap)[0]


# -- oracle -----------------------------------------------------------------

def _family_partitions(elems):
    """All families of disjoint nonempty blocks from elems (blocks by increasing min)."""
    blocks = []

    def rec(i):
        if i == len(elems):
            yield [tuple(b) for b in blocks]
            return
        v = elems[i]
        yield from rec(i + 1)
        for b in blocks:
            b.append(v)
            yield from rec(i + 1)
            b.pop()
        blocks.append([v])
        yield from rec(i + 1)
        blocks.pop()

    for fam in rec(0):
        if fam:
            yield fam


def _dc_node(k, params, kids):
    vals = [v for v, _ in kids]
    tot = sum(v * v for v in vals)
    if tot <= 0:
        return None
    return Node(k, params.m[k], tuple((Scalar(1, v * v / tot), f) for v, f in kids), None)


def norm_oracle(x, params, registry=None, depth=2, odd=True, j_max=None):
    """Brute-force max of f(x) over functionals of depth <= depth supported in supp x.

    Even nodes use the optimal scalars lambda_i proportional to f_i(x).  Odd
    nodes follow true sigma chaining through the registry (which is extended as
    needed) with E_i = supp of the i-th child.  Returns (value, certificate).
    """
    if len(x) > ORACLE_SUPPORT_CAP:
        raise CapExceeded(f"oracle support cap is {ORACLE_SUPPORT_CAP}")
    if depth > ORACLE_DEPTH_CAP or depth < 0:
        raise CapExceeded(f"oracle depth cap is {ORACLE_DEPTH_CAP}")
    if not x:
        return 0.0, Leaf(1, 1)
    even, odd_ks, _ = _weights(params, j_max)
    if not odd:
        odd_ks = []
    supp = x.support
    best = {}    # support -> (value, f)
    labelled = {}  # (support, k) -> (value, f)

    def offer(f):
        v = evaluate(f, x)
        if v < 0:
            return
        S = tuple(sorted(f.support))
        if v > best.get(S, (NEG,))[0]:
            best[S] = (v, f)
        if isinstance(f, Node):
            key = (S, f.k)
            if v > labelled.get(key, (NEG,))[0]:
                labelled[key] = (v, f)

    for i, c in x.coeffs:
        offer(Leaf(1 if c > 0 else -1, i))

    for _ in range(depth):
        snap = dict(best)
        snap_lab = dict(labelled)
        for fam in _family_partitions(supp):
            if not all(B in snap for B in fam):
                continue
            mins = sorted(B[0] for B in fam)
            kids = [snap[B] for B in fam]
            for k in even:
                if schreier.is_member(mins, params.n[k]):
                    f = _dc_node(k, params, kids)
                    if f is not None:
                        offer(f)
        for k in odd_ks:
            _odd_candidates(k, params, registry, supp, snap_lab, offer)
    v, f = max(best.values(), key=lambda t: t[0])
    return v, f


def _odd_candidates(k, params, registry, supp, table, offer):
    if registry is None:
        return
    by_label = {}
    for (S, c), vf in table.items():
        by_label.setdefault(c, []).append((S, vf))
    firsts = [j for j in range(1, len(params.m)) if params.in_n1(j) and 2 * j > k + 1
              and params.has(2 * j)]

    def extend(seq, kids, used, nxt):
        # seq holds (E_i, j_i) with E_i = supp of the chosen child
        if seq:
            mins = sorted(E[0] for E, _ in seq)
            if not schreier.is_member(mins, params.n[k]):
                return
            f = _odd_node(k, params, seq, kids)
            if f is not None:
                offer(f)
        cands = firsts if not seq else [nxt]
        for j in cands:
            for S, (v, g) in by_label.get(2 * j, []):
                if used.intersection(S):
                    continue
                seq2 = seq + [(S, j)]
                try:
                    j2 = registry.assign(seq2)
                except SigmaError:
                    j2 = None
                if j2 is None or not params.has(2 * j2):
                    mins = sorted(E[0] for E, _ in seq2)
                    if schreier.is_member(mins, params.n[k]):
                        f = _odd_node(k, params, seq2, kids + [(v, g)])
                        if f is not None:
                            offer(f)
                    continue
                extend(seq2, kids + [(v, g)], used | set(S), j2)

    extend([], [], set(), None)


def _odd_node(k, params, seq, kids):
    vals = [v for v, _ in kids]
    tot = sum(v * v for v in vals)
    if tot <= 0:
        return None
    return Node(k, params.m[k], tuple((Scalar(1, v * v / tot), f) for v, f in kids),
                tuple((tuple(E), j) for E, j in seq))


# -- combined bounds ----------------------------------------------------------

def negate(f):
    if isinstance(f, Leaf):
        return Leaf(-f.sign, f.index)
    kids = tuple((Scalar(-lam.sign, lam.sq), g) for lam, g in f.children)
    return Node(f.k, f.weight, kids, f.witness)


def norm_bounds(x, params, registry=None, opts=None):
    """NormBounds with ||x||_inf <= lower <= upper enforced."""
    opts = opts or NormOptions()
    notes = []
    _, _, omitted = _weights(params, opts.j_max)
    if not x:
        return NormBounds(0.0, Leaf(1, 1), 0.0, "linf", True, omitted, notes)
    if len(x) <= opts.dp_cap:
        lower, cert = norm_even(x, params, opts.j_max, opts.dp_cap)
        upper, method = norm_upper(x, params, opts.j_max, opts.dp_cap, opts.odd_cap)
        if len(x) > opts.odd_cap and method == "relaxed_odd":
            notes.append("odd relaxation without weight labels (support above odd cap)")
    else:
        q = max(range(len(x)), key=lambda t: abs(x.coeffs[t][1]))
        i, c = x.coeffs[q]
        lower, cert = abs(float(c)), Leaf(1 if c > 0 else -1, i)
        upper, method = x.l2_norm(), "l2"
        notes.append(f"support {len(x)} above DP cap {opts.dp_cap}")
    for f in opts.certificates:
        v = validate(f, params, registry, opts.quarantine)
        if not v:
            notes.append(f"certificate rejected at {list(v.path)}: {v.reason}")
            continue
        val = evaluate(f, x)
        if val < 0:
            f, val = negate(f), -val
        if val > lower:
            lower, cert = val, f
    if opts.oracle_depth and len(x) <= ORACLE_SUPPORT_CAP:
        v, f = norm_oracle(x, params, registry, min(opts.oracle_depth, ORACLE_DEPTH_CAP),
                           odd=True, j_max=opts.j_max)
        if v > lower and validate(f, params, registry):
            lower, cert = v, f
    linf = float(x.sup_norm())
    scale = max(1.0, abs(upper))
    if lower < linf - opts.tol * scale:
        raise RuntimeError(f"lower bound {lower} below the sup norm {linf}")
    if lower > upper + opts.tol * scale:
        raise RuntimeError(f"sandwich violated: lower {lower} > upper {upper}")
    exact = upper - lower <= opts.tol * scale
    return NormBounds(lower, cert, upper, method, exact, omitted, notes)
