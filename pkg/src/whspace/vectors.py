"""Finitely supported vectors in c00 and the JSON encoding of scalars."""
import math
from dataclasses import dataclass
from fractions import Fraction


def parse_number(v):
    """JSON scalar to Fraction (ints and 'p/q' strings) or float."""
    if isinstance(v, bool):
        raise ValueError(f"not a number: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            pass
        try:
            return float(v)
        except ValueError:
            raise ValueError(f"not a number: {v!r}") from None
    if isinstance(v, Fraction):
        return v
    raise ValueError(f"not a number: {v!r}")


def dump_number(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else str(v.numerator)
    if isinstance(v, int):
        return str(v)
    return float(v)


def to_fraction(v):
    """Exact rational from int, Fraction or 'p/q' string; floats are taken at face value."""
    if isinstance(v, str):
        return Fraction(v)
    return Fraction(v)


@dataclass(frozen=True)
class Vector:
    """Sparse vector: sorted (index, coefficient) pairs with nonzero coefficients."""
    coeffs: tuple = ()

    @classmethod
    def from_dict(cls, d):
        items = []
        for i, c in d.items():
            if isinstance(i, bool) or not isinstance(i, int) or i < 1:
                raise ValueError(f"bad coordinate index {i!r}")
            if c != 0:
                items.append((i, c))
        return cls(tuple(sorted(items)))

    @classmethod
    def from_pairs(cls, pairs):
        d = {}
        for i, c in pairs:
            if i in d:
                raise ValueError(f"index {i} appears twice")
            d[i] = c
        return cls.from_dict(d)

    @classmethod
    def unit(cls, i, c=1):
        return cls.from_dict({i: Fraction(c) if isinstance(c, int) else c})

    def as_dict(self):
        return dict(self.coeffs)

    @property
    def support(self):
        return tuple(i for i, _ in self.coeffs)

    def __len__(self):
        return len(self.coeffs)

    def __bool__(self):
        return bool(self.coeffs)

    def get(self, i):
        return self.as_dict().get(i, 0)

    def minsupp(self):
        return self.coeffs[0][0]

    def maxsupp(self):
        return self.coeffs[-1][0]

    def restrict(self, E):
        E = set(E)
        return Vector(tuple((i, c) for i, c in self.coeffs if i in E))

    def scale(self, a):
        return Vector.from_dict({i: a * c for i, c in self.coeffs})

    def __add__(self, other):
        d = self.as_dict()
        for i, c in other.coeffs:
            d[i] = d.get(i, 0) + c
        return Vector.from_dict(d)

    def __neg__(self):
        return self.scale(-1)

    def sup_norm(self):
        return max((abs(c) for _, c in self.coeffs), default=0)

    def l1_norm(self):
        return sum((abs(c) for _, c in self.coeffs), Fraction(0))

    def l2_sq(self):
        return sum((c * c for _, c in self.coeffs), Fraction(0))

    def l2_norm(self):
        return math.sqrt(float(self.l2_sq()))

    def is_exact(self):
        return all(isinstance(c, (int, Fraction)) for _, c in self.coeffs)

    def to_json(self):
        return {"coeffs": [[i, dump_number(c)] for i, c in self.coeffs]}

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict) or "coeffs" not in obj:
            raise ValueError("vector JSON must be an object with a 'coeffs' list")
        return cls.from_pairs((int(i), parse_number(c)) for i, c in obj["coeffs"])


def is_block_sequence(vectors):
    """Nonzero vectors with successive supports."""
    if any(not v for v in vectors):
        return False
    return all(a.maxsupp() < b.minsupp() for a, b in zip(vectors, vectors[1:]))


def combine(coeffs, vectors):
    out = Vector()
    for a, v in zip(coeffs, vectors):
        out = out + v.scale(a)
    return out
