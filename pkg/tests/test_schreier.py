from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from whspace import schreier
from whspace.schreier import STANDARD, MODIFIED

small_sets = st.sets(st.integers(1, 14), max_size=9).map(lambda s: tuple(sorted(s)))
levels = st.integers(0, 3)


def test_trivial_members():
    assert schreier.is_member((2, 3), 1)
    assert not schreier.is_member((1, 2), 1)
    assert schreier.is_member((), 0)
    assert schreier.is_member((5,), 0)
    assert not schreier.is_member((5, 6), 0)
    assert schreier.is_member((3, 4, 5), 1)
    assert not schreier.is_member((3, 4, 5, 6), 1)


def test_s2_examples():
    # {2,3} then {4,5,6,7}: two S_1 pieces, minima {2,4} in S_1
    assert schreier.is_member((2, 3, 4, 5, 6, 7), 2)
    assert not schreier.is_member((2, 3, 4, 5, 6, 7, 8), 2)
    assert schreier.is_member((1,), 2)
    assert not schreier.is_member((1, 2), 2)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        schreier.is_member((0, 2), 1)
    with pytest.raises(ValueError):
        schreier.is_member((2, 2), 1)
    with pytest.raises(ValueError):
        schreier.is_member((2,), -1)
    with pytest.raises(ValueError):
        schreier.is_member((2,), 1, "other")


@given(small_sets, levels)
def test_greedy_matches_exhaustive(F, n):
    assert schreier.is_member(F, n) == schreier.is_member_exhaustive(F, n)


@given(small_sets, levels)
def test_modified_equals_standard(F, n):
    assert schreier.is_member(F, n, STANDARD) == schreier.is_member(F, n, MODIFIED)


@given(small_sets, levels, st.data())
def test_hereditary(F, n, data):
    if schreier.is_member(F, n) and F:
        G = data.draw(st.sets(st.sampled_from(F)))
        assert schreier.is_member(tuple(sorted(G)), n)


@given(small_sets, levels, st.data())
def test_spreading(F, n, data):
    if not schreier.is_member(F, n):
        return
    shifts = data.draw(st.lists(st.integers(0, 3), min_size=len(F), max_size=len(F)))
    G, prev = [], 0
    for v, s in zip(F, shifts):
        g = max(v + s, prev + 1)
        G.append(g)
        prev = g
    assert schreier.is_member(tuple(G), n)


@given(levels)
def test_nested(n):
    for F in schreier.enumerate(n, 9):
        assert schreier.is_member(F, n + 1)


def test_enumerate_matches_brute_force():
    for n in range(3):
        got = schreier.enumerate(n, 8)
        want = [F for r in range(9) for F in combinations(range(1, 9), r)
                if schreier.is_member_exhaustive(F, n)]
        assert got == want
    assert len(schreier.enumerate(1, 3)) == 5
    with pytest.raises(ValueError):
        schreier.enumerate(1, 20)


def test_maximal():
    assert schreier.is_maximal((2, 3), 1)
    assert not schreier.is_maximal((2,), 1)
    assert not schreier.is_maximal((), 1)
    with pytest.raises(ValueError):
        schreier.is_maximal((1, 2), 1)
    seg, complete = schreier.maximal_initial_segment(range(3, 20), 1)
    assert seg == (3, 4, 5) and complete
    seg, complete = schreier.maximal_initial_segment((4, 5), 1)
    assert seg == (4, 5) and not complete


@given(st.lists(st.integers(1, 30), min_size=1, max_size=12, unique=True), levels)
def test_initial_segment_is_maximal_prefix(L, n):
    L = sorted(L)
    seg, _ = schreier.maximal_initial_segment(L, n)
    assert schreier.is_member(seg, n)
    if len(seg) < len(L):
        assert not schreier.is_member(tuple(L[:len(seg) + 1]), n)


def test_families():
    assert schreier.check_family([(2, 3), (4, 5)], 1, "admissible")
    assert not schreier.check_family([(2, 5), (4,)], 1, "admissible")
    assert schreier.check_family([(2, 5), (4,)], 1, "allowable")
    assert not schreier.check_family([(2, 5), (5,)], 1, "allowable")
    assert not schreier.check_family([(1,), (4,)], 1, "allowable")
    assert "minima" in schreier.explain_family([(1,), (4,)], 1)
    with pytest.raises(ValueError):
        schreier.check_family([(2,)], 1, "weird")


@given(st.sets(st.integers(1, 10), max_size=8).map(lambda s: tuple(sorted(s))),
       st.integers(0, 2), st.integers(0, 2))
def test_convolution(F, k, l):
    want = schreier.is_member(F, k + l)
    assert schreier.convolution_member(F, k, l) == want
    assert schreier.convolution_member(F, k, l, MODIFIED) == want


@given(st.lists(st.integers(1, 25), max_size=12, unique=True), levels)
def test_tracker_follows_membership(L, n):
    L = sorted(L)
    for bound in (None, 4):
        tr = schreier.Tracker(n, bound)
        st_ = tr.start()
        for i, v in enumerate(L):
            st_ = tr.push(st_, v)
            alive = st_ is not None
            if bound is None or i + 1 <= bound:
                assert alive == schreier.is_member(tuple(L[:i + 1]), n)
            if not alive:
                break
