"""Schreier families S_n, their modified (disjoint-piece) variant, and convolution.

Finite sets are sorted tuples of positive integers.

S_0 holds the empty set and singletons.  S_{n+1} holds the unions of at most
min F successive pieces from S_n (the set of piece minima lies in S_1).  The
modified family uses pairwise disjoint pieces instead of successive ones.
"""
from functools import lru_cache
from itertools import combinations

STANDARD = "standard"
MODIFIED = "modified"

ENUM_CAP = 14


def as_set(xs):
    """Validate and normalise an iterable of positive integers to a sorted tuple."""
    out = []
    for v in xs:
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"set element {v!r} is not an integer")
        if v < 1:
            raise ValueError(f"set element {v} is not a positive integer")
        out.append(v)
    s = tuple(sorted(out))
    if len(set(s)) != len(s):
        raise ValueError("set has repeated elements")
    return s


def _check_level(n):
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"Schreier level must be a non-negative integer, got {n!r}")


# -- standard family --------------------------------------------------------

def initial_segment_length(F, n, start=0):
    """Length of the maximal initial segment of F[start:] lying in S_n.

    Greedy: peel off maximal initial segments in S_{n-1}, at most min F of them.
    This is exact because every S_n is hereditary.
    """
    if start >= len(F):
        return 0
    if n == 0:
        return 1
    pos = start
    for _ in range(F[start]):
        if pos >= len(F):
            break
        pos += initial_segment_length(F, n - 1, pos)
    return pos - start


@lru_cache(maxsize=None)
def _member_standard(F, n):
    return initial_segment_length(F, n) == len(F)


@lru_cache(maxsize=None)
def _member_standard_exhaustive(F, n):
    # oracle: search over all decompositions into contiguous blocks
    if len(F) <= 1:
        return True
    if n == 0:
        return False

    def split(i, pieces):
        if i == len(F):
            return pieces <= F[0]
        if pieces >= F[0]:
            return False
        for j in range(i + 1, len(F) + 1):
            if _member_standard_exhaustive(F[i:j], n - 1) and split(j, pieces + 1):
                return True
        return False

    return split(0, 0)


# -- modified family --------------------------------------------------------

@lru_cache(maxsize=None)
def _min_cover(F, n):
    """Least number of pairwise disjoint S^M_n pieces covering F (F nonempty)."""
    if _member_modified(F, n):
        return 1
    head, rest = F[0], F[1:]
    best = len(F)
    # the piece holding min F; the remainder is covered recursively
    for r in range(len(rest), -1, -1):
        for extra in combinations(rest, r):
            G = (head,) + extra
            if not _member_modified(G, n):
                continue
            left = tuple(v for v in rest if v not in extra)
            best = min(best, 1 + _min_cover(left, n))
            if best == 2:
                return 2
    return best


@lru_cache(maxsize=None)
def _member_modified(F, n):
    if len(F) <= 1:
        return True
    if n == 0:
        return False
    if len(F) <= F[0]:
        return True  # already in S_1, which sits inside every S^M_n with n >= 1
    return _min_cover(F, n - 1) <= F[0]


def is_member(F, n, variant=STANDARD):
    """Membership of the finite set F in S_n (or S^M_n when variant='modified')."""
    _check_level(n)
    F = as_set(F)
    if variant == STANDARD:
        return _member_standard(F, n)
    if variant == MODIFIED:
        return _member_modified(F, n)
    raise ValueError(f"unknown variant {variant!r}")


def is_member_exhaustive(F, n):
    """Slow reference membership for the standard family."""
    _check_level(n)
    return _member_standard_exhaustive(as_set(F), n)


def is_maximal(F, n, variant=STANDARD):
    """True iff F is in S_n and no strict superset of F is.

    By spreading, F + {m} with m > max F is in S_n for some m iff it is for
    m = max F + 1 (membership of F + {m} does not depend on m > max F), and
    adding an element below max F gives a set dominated by such an extension.
    """
    F = as_set(F)
    if not is_member(F, n, variant):
        raise ValueError(f"{list(F)} is not in S_{n}")
    if not F:
        return False
    return not is_member(F + (F[-1] + 1,), n, variant)


def maximal_initial_segment(L, n):
    """The maximal initial segment of the increasing sequence L that lies in S_n.

    Returns (segment, complete) where complete says the segment is maximal in
    S_n (False when L ran out first).
    """
    L = as_set(L)
    k = initial_segment_length(L, n)
    seg = L[:k]
    complete = bool(seg) and is_maximal(seg, n)
    return seg, complete


def enumerate(n, universe_max, variant=STANDARD, cap=ENUM_CAP):
    """All members of S_n contained in {1..universe_max}, by size then lexicographic."""
    _check_level(n)
    if universe_max > cap:
        raise ValueError(f"universe {universe_max} exceeds enumeration cap {cap}")
    universe = range(1, universe_max + 1)
    out = []
    for r in range(universe_max + 1):
        for F in combinations(universe, r):
            if is_member(F, n, variant):
                out.append(F)
    return out


# -- families of sets -------------------------------------------------------

def _successive(members):
    return all(a[-1] < b[0] for a, b in zip(members, members[1:]))


def explain_family(members, n, mode="allowable", variant=STANDARD):
    """None if the family qualifies, otherwise a short reason string."""
    sets = [as_set(E) for E in members]
    if any(not E for E in sets):
        return "family contains an empty set"
    if mode == "admissible":
        if not _successive(sets):
            return "members are not successive"
    elif mode == "allowable":
        seen = set()
        for E in sets:
            if seen.intersection(E):
                return "members are not pairwise disjoint"
            seen.update(E)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    mins = sorted(E[0] for E in sets)
    if not is_member(mins, n, variant):
        return f"set of minima {mins} is not in S_{n}"
    return None


def check_family(members, n, mode="allowable", variant=STANDARD):
    """S_n-admissibility (successive) or S_n-allowability (disjoint) of a family of sets."""
    return explain_family(members, n, mode, variant) is None


# -- convolution ------------------------------------------------------------

def _conv_standard(F, P, Q):
    k = len(F)

    def rec(i, mins):
        if i == k:
            return True
        nm = mins + (F[i],)
        if not _member_standard(nm, P):
            return False
        for j in range(i + 1, k + 1):
            if not _member_standard(F[i:j], Q):
                break
            if rec(j, nm):
                return True
        return False

    return rec(0, ())


def _conv_modified(F, P, Q):
    blocks = []

    def rec(i):
        if i == len(F):
            return True
        v = F[i]
        for b in blocks:
            b.append(v)
            ok = _member_modified(tuple(b), Q) and rec(i + 1)
            b.pop()
            if ok:
                return True
        mins = tuple(b[0] for b in blocks) + (v,)
        if _member_modified(mins, P):
            blocks.append([v])
            ok = rec(i + 1)
            blocks.pop()
            if ok:
                return True
        return False

    return rec(0)


def convolution_member(F, P, Q, variant=STANDARD):
    """F in P[Q]: F splits into Q-pieces (successive, or disjoint for 'modified')
    whose minima form a set in P.  P and Q are Schreier levels."""
    _check_level(P)
    _check_level(Q)
    F = as_set(F)
    if not F:
        return True
    if variant == STANDARD:
        return _conv_standard(F, P, Q)
    if variant == MODIFIED:
        return _conv_modified(F, P, Q)
    raise ValueError(f"unknown variant {variant!r}")


# -- online membership tracker (used by the norm DP) -----------------------

class Tracker:
    """Feeds increasing integers one at a time and reports whether the set read so
    far is still in S_n.  States are hashable tuples; None means 'dead'."""

    def __init__(self, n, size_bound=None):
        self.n = n
        # with min >= 2, any set of at most 2^n elements lies in S_n (spreading of
        # the contiguous maximal set from 2), so deep levels collapse to a flag
        self.shallow = size_bound is not None and n >= 1 and 2 ** n >= size_bound
        self._cache = {}

    def start(self):
        return (0,) if self.shallow else _empty_state(self.n)

    def push(self, state, v):
        key = (state, v)
        hit = self._cache.get(key)
        if hit is not None or key in self._cache:
            return hit
        if self.shallow:
            if state[0] == 0:
                out = (1, v)
            else:
                out = None if state[1] == 1 else (2, state[1])
        else:
            out = _push(state, v, self.n)
        self._cache[key] = out
        return out


def _empty_state(n):
    if n == 0:
        return 0
    return (None, 0, _empty_state(n - 1))


def _push(state, v, n):
    if n == 0:
        return 1 if state == 0 else None
    first, count, inner = state
    if first is None:
        return (v, 1, _push(_empty_state(n - 1), v, n - 1))
    nxt = _push(inner, v, n - 1)
    if nxt is not None:
        return (first, count, nxt)
    if count + 1 > first:
        return None
    return (first, count + 1, _push(_empty_state(n - 1), v, n - 1))
