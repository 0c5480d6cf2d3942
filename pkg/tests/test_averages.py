from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from whspace import averages, schreier
from whspace.averages import (SccWitness, Undecided, make_bscc, make_scc, repeated_average,
                              schreier_mass)
from whspace.vectors import Vector


def test_a1_is_flat():
    a = repeated_average(1, (3, 4, 5, 6))
    assert a.coeffs == ((3, Fraction(1, 3)), (4, Fraction(1, 3)), (5, Fraction(1, 3)))


def test_a2_from_two():
    a = repeated_average(2, range(2, 20))
    # two a_1 blocks: {2,3} and {4,5,6,7}
    assert a.as_dict() == {2: Fraction(1, 4), 3: Fraction(1, 4), 4: Fraction(1, 8),
                           5: Fraction(1, 8), 6: Fraction(1, 8), 7: Fraction(1, 8)}


def test_exhausted_sequence():
    with pytest.raises(ValueError):
        repeated_average(2, (3, 4, 5))
    with pytest.raises(ValueError):
        repeated_average(1, (3, 2))


@given(st.integers(0, 2), st.integers(1, 6))
def test_average_is_probability_on_maximal_set(n, t):
    L = range(t, t + averages.segment_length_from(n, t))
    a = repeated_average(n, L)
    assert a.l1_norm() == 1
    assert schreier.is_member(a.support, n)
    assert n == 0 or schreier.is_maximal(a.support, n)


@given(st.dictionaries(st.integers(1, 9), st.fractions(0, 1, max_denominator=9), max_size=7),
       st.integers(0, 2))
def test_mass_matches_brute_force(w, k):
    w = {i: v for i, v in w.items() if v > 0}
    v, G, exact = schreier_mass(w, k)
    assert exact
    best = max(sum(w.get(i, 0) for i in F) for F in schreier.enumerate(k, 9))
    assert v == best
    assert schreier.is_member(G, k) and sum(w[i] for i in G) == v


def test_mass_beyond_cap_is_upper_bound():
    w = {i: Fraction(1, 50) for i in range(3, 53)}
    v, G, exact = schreier_mass(w, 2, cap=10)
    assert not exact and G is None and v == 1


@given(st.integers(1, 2), st.integers(4, 9))
def test_repeated_average_bound(n, t):
    a = repeated_average(n, range(t, t + averages.segment_length_from(n, t)))
    w = dict(a.coeffs)
    for m in range(n):
        assert schreier_mass(w, m)[0] < Fraction(3, t)


def test_make_bscc():
    x, w = make_bscc(2, Fraction(1, 2), 1, range(13, 40))
    assert w.verify()
    assert averages.is_bscc(x, 2, Fraction(1, 2), 1)
    assert sum(c * c for _, c in x.coeffs) == pytest.approx(1)
    with pytest.raises(ValueError):
        make_bscc(2, Fraction(1, 2), 1, range(12, 40))


def test_is_bscc_rejects():
    x = Vector.from_dict({3: Fraction(1, 2), 4: Fraction(1, 2)})
    assert averages.is_bscc(x, 1, Fraction(1), 1)
    assert not averages.is_bscc(x, 1, Fraction(1, 2), 1)  # S_0 mass 1/2 is not < 1/2
    assert not averages.is_bscc(x.scale(-1), 1, Fraction(1), 1)
    with pytest.raises(ValueError):
        averages.is_bscc(x, 3, Fraction(1), 1)


def test_explain_mass_undecided():
    # one element more than the maximal S_2 set from 3: in S_3, not in S_2
    w = {i: Fraction(1, 22) for i in range(3, 25)}
    assert schreier.is_member(tuple(w), 3) and not schreier.is_member(tuple(w), 2)
    with pytest.raises(Undecided):
        averages.explain_mass(w, Fraction(3, 5), 3, cap=5)
    assert averages.explain_mass(w, Fraction(3, 5), 3) is not None  # exact search decides


def test_scc_witness_round_trip():
    blocks = [Vector.unit(i) for i in range(5, 40, 2)]
    w = make_scc(blocks, Fraction(1, 2), 1)
    assert w.verify(blocks)
    back = SccWitness.from_json(w.to_json())
    assert back == w and back.verify(blocks)
    assert w.combine(blocks).l2_norm() == pytest.approx(1)
    with pytest.raises(ValueError):
        make_scc([Vector.unit(3), Vector.unit(2)], Fraction(1, 2), 1)


def test_frac_sqrt():
    assert averages.frac_sqrt(Fraction(9, 4)) == Fraction(3, 2)
    assert isinstance(averages.frac_sqrt(Fraction(1, 2)), float)
