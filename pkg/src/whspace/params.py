"""Parameter sequences (m_j, n_j), special sequences and the coding sigma.

Weight indices k address m_k, n_k directly.  Sigma values are indices j in N2
and the attached child weight is m_{2j}.
"""
import json
import math
from dataclasses import dataclass, field

from . import schreier


class ParamError(ValueError):
    pass


def ell(m):
    """3 log2(m) + 1, exact when m is a power of two."""
    if m & (m - 1) == 0:
        return 3 * (m.bit_length() - 1) + 1
    return 3 * math.log2(m) + 1


@dataclass(frozen=True)
class ParameterSystem:
    m: tuple
    n: tuple
    strict: bool = False
    n1_modulus: int = 2
    n1_residues: tuple = (1,)
    violations: tuple = ()

    def __len__(self):
        return len(self.m)

    def in_n1(self, j):
        return j >= 1 and j % self.n1_modulus in self.n1_residues

    def in_n2(self, j):
        return j >= 1 and not self.in_n1(j)

    def has(self, k):
        return 0 <= k < len(self.m)

    def to_json(self):
        return {"mode": "strict" if self.strict else "toy", "m": list(self.m),
                "n": list(self.n),
                "split": {"modulus": self.n1_modulus, "n1_residues": list(self.n1_residues)},
                "violations": list(self.violations)}


def growth_violations(m, n):
    out = []
    if len(m) < 2 or m[0] != 2 or m[1] != 2:
        out.append("m_0 = m_1 = 2 fails")
    if n[0] != 1:
        out.append("n_0 = 1 fails")
    for j in range(1, len(m) - 1):
        if j >= 2 and m[j + 1] < m[j] ** 3:
            out.append(f"m_{j + 1} >= m_{j}^3 fails")
    for j in range(2, len(n)):
        if not n[j] > ell(m[j]) * (n[j - 1] + 1):
            out.append(f"n_{j} > l_{j}(n_{j - 1}+1) fails")
    for j in range(1, len(n)):
        if n[j] < n[j - 1]:
            out.append(f"n_{j} < n_{j - 1}")
    return tuple(out)


def build_params(config):
    """ParameterSystem from a config dict.

    {"mode": "strict", "levels": L} builds the minimal sequences obeying the
    growth conditions.  {"mode": "toy", "m": [...], "n": [...]} takes explicit
    lists; growth failures are recorded in .violations instead of raising.
    """
    mode = config.get("mode", "toy")
    split = config.get("split", {})
    mod = int(split.get("modulus", 2))
    res = tuple(int(r) for r in split.get("n1_residues", [1]))
    if mod < 2 or not res or any(not 0 <= r < mod for r in res) or len(set(res)) == mod:
        raise ParamError("N1/N2 split must leave both classes nonempty")
    if mode == "strict":
        levels = int(config.get("levels", len(config.get("m", ())) or 4))
        if levels < 2:
            raise ParamError("need at least two levels")
        m, n = [2, 2], [1]
        while len(m) < levels:
            m.append(m[-1] ** 3)
        for j in range(1, levels):
            lo = ell(m[j]) * (n[-1] + 1)
            n.append(math.floor(lo) + 1)
        ps = ParameterSystem(tuple(m[:levels]), tuple(n[:levels]), True, mod, res)
        for key in ("m", "n"):
            if key in config and tuple(int(v) for v in config[key]) != getattr(ps, key):
                raise ParamError(f"strict {key} list does not match the minimal construction")
        v = growth_violations(ps.m, ps.n)
        if v:
            raise ParamError(f"strict construction broke growth: {v}")
        return ps
    if mode != "toy":
        raise ParamError(f"unknown mode {mode!r}")
    m = [int(v) for v in config["m"]]
    n = [int(v) for v in config["n"]]
    if len(m) != len(n) or not m:
        raise ParamError("m and n must be nonempty lists of equal length")
    if any(v < 1 for v in m):
        raise ParamError("m_j must be positive")
    if any(b < a for a, b in zip(m, m[1:])):
        raise ParamError("m_j must be non-decreasing")
    if any(v < 0 for v in n):
        raise ParamError("n_j must be non-negative")
    return ParameterSystem(tuple(m), tuple(n), False, mod, res, growth_violations(m, n))


def params_from_json(obj):
    return build_params(obj)


def load_params(path):
    with open(path) as fh:
        return build_params(json.load(fh))


# -- special sequences -------------------------------------------------------

def _pairs(seq):
    return tuple((schreier.as_set(E), int(j)) for E, j in seq)


def explain_in_sigma(seq, ps):
    """None if seq = ((E_1,j_1),...) lies in the domain of sigma, else a reason."""
    seq = _pairs(seq)
    if not seq:
        return "empty sequence"
    seen = set()
    for i, (E, j) in enumerate(seq):
        if not E:
            return f"E_{i + 1} is empty"
        if seen.intersection(E):
            return f"E_{i + 1} meets an earlier set"
        seen.update(E)
        if i and j <= seq[i - 1][1]:
            return "indices are not strictly increasing"
        if i == 0 and not ps.in_n1(j):
            return f"j_1 = {j} is not in N1"
        if i > 0 and not ps.in_n2(j):
            return f"j_{i + 1} = {j} is not in N2"
    return None


@dataclass(frozen=True)
class SpecialSequence:
    pairs: tuple

    @classmethod
    def of(cls, seq):
        return cls(_pairs(seq))

    def __len__(self):
        return len(self.pairs)

    def prefix(self, i):
        return SpecialSequence(self.pairs[:i])

    @property
    def indices(self):
        return tuple(j for _, j in self.pairs)

    def to_json(self):
        return [[list(E), j] for E, j in self.pairs]

    @classmethod
    def from_json(cls, obj):
        return cls.of((tuple(E), j) for E, j in obj)


class SigmaError(ValueError):
    pass


class SigmaRegistry:
    """Persistent injective coding sigma from special sequences to N2.

    sigma(s) is the least unused j in N2 with m_{2j} > m_{2 j_last} (maxsupp E_last)^2,
    where (E_last, j_last) is the last pair of s.  Values imported from outside
    (quarantine) are recorded separately and only after the same checks.
    """

    def __init__(self, params):
        self.params = params
        self.entries = []  # (key, j) in assignment order
        self._by_key = {}
        self._used = set()
        self.quarantined = set()

    def __len__(self):
        return len(self.entries)

    def lookup(self, seq):
        return self._by_key.get(_pairs(seq))

    def threshold(self, seq):
        E, j = _pairs(seq)[-1]
        k = 2 * j
        if not self.params.has(k):
            raise SigmaError(f"weight index {k} is beyond the parameter list")
        return self.params.m[k] * E[-1] ** 2

    def _candidate(self, seq):
        thr = self.threshold(seq)
        for j in range(1, (len(self.params.m) + 1) // 2):
            if 2 * j >= len(self.params.m):
                break
            if self.params.in_n2(j) and j not in self._used and self.params.m[2 * j] > thr:
                return j
        raise SigmaError("parameter list too short to assign sigma "
                         f"(need m_(2j) > {thr} for an unused j in N2)")

    def _check(self, key):
        why = explain_in_sigma(key, self.params)
        if why is not None:
            raise SigmaError(f"sequence not in Sigma: {why}")

    def assign(self, seq):
        key = _pairs(seq)
        hit = self._by_key.get(key)
        if hit is not None:
            return hit
        self._check(key)
        j = self._candidate(key)
        self._record(key, j)
        return j

    def _record(self, key, j):
        self.entries.append((key, j))
        self._by_key[key] = j
        self._used.add(j)

    def import_value(self, seq, j):
        """Accept an externally asserted sigma value into quarantine after checking it."""
        key = _pairs(seq)
        hit = self._by_key.get(key)
        if hit is not None:
            if hit != j:
                raise SigmaError(f"sigma already assigns {hit}, not {j}")
            return j
        self._check(key)
        if not self.params.in_n2(j):
            raise SigmaError(f"{j} is not in N2")
        if j in self._used:
            raise SigmaError(f"{j} is already used; sigma must be injective")
        if not self.params.has(2 * j) or not self.params.m[2 * j] > self.threshold(key):
            raise SigmaError(f"{j} violates the growth condition")
        self._record(key, j)
        self.quarantined.add(key)
        return j

    def copy(self):
        other = SigmaRegistry(self.params)
        for key, j in self.entries:
            other._record(key, j)
        other.quarantined = set(self.quarantined)
        return other

    def to_json(self):
        return {"entries": [{"sequence": [[list(E), j0] for E, j0 in key], "index": j,
                             "quarantined": key in self.quarantined}
                            for key, j in self.entries]}

    @classmethod
    def from_json(cls, obj, params):
        """Replay a saved registry, re-deriving every non-quarantined value."""
        reg = cls(params)
        for e in obj.get("entries", []):
            key = _pairs((tuple(E), j0) for E, j0 in e["sequence"])
            j = int(e["index"])
            if e.get("quarantined"):
                reg.import_value(key, j)
                continue
            got = reg.assign(key)
            if got != j:
                raise SigmaError(f"replay mismatch: recomputed {got}, file says {j}")
        return reg

    def save(self, path):
        from filelock import FileLock
        with FileLock(str(path) + ".lock"):
            with open(path, "w") as fh:
                json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path, params):
        from filelock import FileLock
        with FileLock(str(path) + ".lock"):
            with open(path) as fh:
                return cls.from_json(json.load(fh), params)


def sigma_assign(registry, seq):
    return registry.assign(seq)


def explain_special(seq, registry, quarantine=False):
    """None if seq is sigma-special (j_{i+1} = sigma(prefix_i)), else a reason."""
    seq = _pairs(seq)
    why = explain_in_sigma(seq, registry.params)
    if why is not None:
        return why
    for i in range(1, len(seq)):
        want = registry.lookup(seq[:i])
        if want is None:
            if quarantine:
                try:
                    registry.import_value(seq[:i], seq[i][1])
                except SigmaError as e:
                    return f"j_{i + 1}: {e}"
                continue
            return f"sigma of the first {i} pairs is not registered"
        if want != seq[i][1]:
            return f"j_{i + 1} = {seq[i][1]} but sigma gives {want}"
    return None


def extend_special(registry, seq, E):
    """Append (E, sigma(seq)) to a sigma-special sequence."""
    seq = _pairs(seq)
    why = explain_special(seq, registry)
    if why is not None:
        raise SigmaError(f"not sigma-special: {why}")
    j = registry.assign(seq)
    out = seq + ((schreier.as_set(E), j),)
    why = explain_in_sigma(out, registry.params)
    if why is not None:
        raise SigmaError(f"extension leaves Sigma: {why}")
    return out


@dataclass(frozen=True)
class TreeVerdict:
    kind: str           # "disjoint_weights" or "branch"
    d: int = 0          # common prefix length of the weights
    prefix_equal: bool = False  # first d pairs agree (with E_d possibly differing)


def check_treelike(s, t, registry):
    """Classify two sigma-special sequences.

    Either their weight sets are disjoint, or with d the length of the common
    weight prefix, the first d-1 pairs coincide and the weights after d differ.
    Raises SigmaError if neither holds.
    """
    s, t = _pairs(s), _pairs(t)
    for seq in (s, t):
        why = explain_special(seq, registry)
        if why is not None:
            raise SigmaError(f"not sigma-special: {why}")
    js, jt = [j for _, j in s], [j for _, j in t]
    if not set(js) & set(jt):
        return TreeVerdict("disjoint_weights")
    d = 0
    while d < min(len(js), len(jt)) and js[d] == jt[d]:
        d += 1
    if d == 0:
        raise SigmaError("weights overlap without a common first weight")
    if s[:d - 1] != t[:d - 1]:
        raise SigmaError("weights agree but earlier pairs differ")
    if set(js[d:]) & set(jt[d:]):
        raise SigmaError("weights after the branch point overlap")
    return TreeVerdict("branch", d, s[:d] == t[:d])
