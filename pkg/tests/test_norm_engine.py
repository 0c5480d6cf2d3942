import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from whspace.acceptance import random_vector
from whspace.functionals import Leaf, validate, evaluate
from whspace.norm_engine import (CapExceeded, NormOptions, norm_bounds, norm_even, norm_oracle,
                                 norm_upper, upper_value, lower_value)
from whspace.params import SigmaRegistry
from whspace.vectors import Vector

seeds = st.integers(0, 10**6)


def test_unit_and_pair(toy):
    assert norm_even(Vector.unit(3), toy)[0] == 1
    x = Vector.from_dict({2: Fraction(1), 3: Fraction(1)})
    # {2,3} is S_1-admissible but (1/2) sqrt(1 + 1) < 1, so the sup norm wins
    v, cert = norm_even(x, toy)
    assert v == pytest.approx(1)
    y = Vector.from_dict({2: Fraction(1), 3: Fraction(1), 4: Fraction(1), 5: Fraction(1), 6: Fraction(1)})
    assert norm_even(y, toy)[0] == pytest.approx(norm_oracle(y, toy, depth=3, odd=False)[0])


def test_empty_and_caps(toy):
    nb = norm_bounds(Vector(), toy)
    assert nb.lower == nb.upper == 0
    big = Vector.from_dict({i: Fraction(1) for i in range(1, 20)})
    with pytest.raises(CapExceeded):
        norm_even(big, toy)
    nb = norm_bounds(big, toy)
    assert nb.upper_method == "l2" and nb.lower <= nb.upper
    assert upper_value(big, toy) == pytest.approx(math.sqrt(19))
    with pytest.raises(CapExceeded):
        norm_oracle(big, toy)


@given(seeds)
def test_dp_equals_oracle_even_fragment(toy, seed):
    x = random_vector(random.Random(seed), max_support=4)
    v, _ = norm_even(x, toy)
    o, _ = norm_oracle(x, toy, depth=3, odd=False)
    assert v == pytest.approx(o, abs=1e-9)


@given(seeds)
def test_sandwich_and_certificates(toy, seed):
    rng = random.Random(seed)
    x = random_vector(rng, max_support=6, top=12)
    reg = SigmaRegistry(toy)
    nb = norm_bounds(x, toy, reg, NormOptions(oracle_depth=2 if len(x) <= 4 else 0))
    assert float(x.sup_norm()) - 1e-12 <= nb.lower <= nb.upper + 1e-9
    assert nb.upper <= x.l2_norm() + 1e-9
    assert validate(nb.lower_certificate, toy, reg)
    assert evaluate(nb.lower_certificate, x) == pytest.approx(nb.lower, abs=1e-9)


@given(seeds)
def test_odd_oracle_below_upper(toy, seed):
    x = random_vector(random.Random(seed), max_support=4, top=8)
    reg = SigmaRegistry(toy)
    o, f = norm_oracle(x, toy, reg, depth=2, odd=True)
    assert o <= norm_upper(x, toy)[0] + 1e-9
    assert validate(f, toy, reg)


@given(seeds)
def test_truncation_keeps_upper_rigorous(toy, seed):
    x = random_vector(random.Random(seed), max_support=5)
    full = norm_upper(x, toy)[0]
    assert norm_upper(x, toy, j_max=0)[0] >= lower_value(x, toy) - 1e-9
    assert norm_upper(x, toy, j_max=1)[0] >= norm_even(x, toy)[0] - 1e-9
    assert full >= norm_even(x, toy)[0] - 1e-9


@given(seeds)
def test_unconditional_and_symmetric(toy, seed):
    rng = random.Random(seed)
    x = random_vector(rng, max_support=5)
    flipped = Vector.from_dict({i: -c if rng.random() < 0.5 else c for i, c in x.coeffs})
    assert norm_even(flipped, toy)[0] == pytest.approx(norm_even(x, toy)[0])
    assert norm_upper(flipped, toy)[0] == pytest.approx(norm_upper(x, toy)[0])
    # restriction to a subset never increases the norm
    E = [i for i in x.support if rng.random() < 0.6]
    assert norm_even(x.restrict(E), toy)[0] <= norm_even(x, toy)[0] + 1e-12


def test_external_certificate(toy):
    x = Vector.from_dict({2: Fraction(1), 3: Fraction(-1)})
    nb = norm_bounds(x, toy, None, NormOptions(certificates=(Leaf(-1, 3),)))
    assert nb.lower == pytest.approx(1)
    nb = norm_bounds(x, toy, None, NormOptions(certificates=(Leaf(5, 3),)))
    assert any("rejected" in n for n in nb.notes)
