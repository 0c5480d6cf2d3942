import json

import pytest
from hypothesis import given, strategies as st

from whspace.params import (ParamError, SigmaError, SigmaRegistry, build_params,
                            check_treelike, explain_special, extend_special, growth_violations, ell)


def test_strict_values():
    ps = build_params({"mode": "strict", "levels": 4})
    assert ps.m == (2, 2, 8, 512)
    assert ps.n == (1, 9, 101, 2857)
    assert ps.strict and not ps.violations
    for j in range(1, 4):
        assert ps.n[j] > ell(ps.m[j]) * (ps.n[j - 1] + 1)
        assert ps.n[j] - 1 <= ell(ps.m[j]) * (ps.n[j - 1] + 1)


def test_strict_round_trip():
    ps = build_params({"mode": "strict", "levels": 5})
    assert build_params(ps.to_json()) == ps
    bad = dict(ps.to_json(), m=[2, 2, 8, 512, 1])
    with pytest.raises(ParamError):
        build_params(bad)


def test_toy_errors_and_violations():
    with pytest.raises(ParamError):
        build_params({"mode": "toy", "m": [2, 0], "n": [1, 1]})
    with pytest.raises(ParamError):
        build_params({"mode": "toy", "m": [4, 2], "n": [1, 1]})
    with pytest.raises(ParamError):
        build_params({"mode": "toy", "m": [2, 2], "n": [1]})
    with pytest.raises(ParamError):
        build_params({"mode": "weird"})
    with pytest.raises(ParamError):
        build_params({"mode": "toy", "m": [2, 2], "n": [1, 1], "split": {"modulus": 2, "n1_residues": [0, 1]}})
    ps = build_params({"mode": "toy", "m": [2, 2, 4], "n": [1, 1, 2]})
    assert ps.violations and not ps.strict
    assert growth_violations((2, 2, 8, 512), (1, 9, 101, 2857)) == ()


def test_split():
    ps = build_params({"mode": "toy", "m": [2] * 6, "n": [1] * 6})
    assert [j for j in range(1, 6) if ps.in_n1(j)] == [1, 3, 5]
    assert [j for j in range(1, 6) if ps.in_n2(j)] == [2, 4]
    ps3 = build_params({"mode": "toy", "m": [2] * 6, "n": [1] * 6,
                        "split": {"modulus": 3, "n1_residues": [1, 2]}})
    assert [j for j in range(1, 6) if ps3.in_n2(j)] == [3]


def test_sigma_assign(sigma_params):
    reg = SigmaRegistry(sigma_params)
    s = [((2, 3), 1)]
    j = reg.assign(s)
    assert sigma_params.in_n2(j)
    assert sigma_params.m[2 * j] > sigma_params.m[2] * 3 ** 2
    assert reg.assign(s) == j
    with pytest.raises(SigmaError):
        reg.assign([((2, 3), 2)])  # j_1 must be in N1
    with pytest.raises(SigmaError):
        reg.assign([((2, 3), 1), ((3,), 4)])  # overlapping sets


sets = st.sets(st.integers(1, 40), min_size=1, max_size=3).map(lambda s: tuple(sorted(s)))


@given(st.lists(st.tuples(st.sampled_from([1, 3, 5]), st.lists(sets, min_size=1, max_size=3)),
                min_size=1, max_size=6))
def test_sigma_injective_growth_treelike(sigma_params, specs):
    reg = SigmaRegistry(sigma_params)
    seqs = []
    for j1, Es in specs:
        seq, used = (), set()
        for E in Es:
            if used.intersection(E):
                continue
            if not seq:
                seq = ((E, j1),)
            else:
                seq = extend_special(reg, seq, E)
            used.update(E)
        if seq:
            seqs.append(seq)
            assert explain_special(seq, reg) is None
    vals = [j for _, j in reg.entries]
    assert len(vals) == len(set(vals))
    for key, j in reg.entries:
        assert sigma_params.m[2 * j] > sigma_params.m[2 * key[-1][1]] * key[-1][0][-1] ** 2
    for s in seqs:
        for t in seqs:
            check_treelike(s, t, reg)  # must not raise


def test_treelike_examples(sigma_params):
    reg = SigmaRegistry(sigma_params)
    a = extend_special(reg, (((2,), 1),), (5,))
    b = extend_special(reg, (((2,), 1),), (7,))
    c = (((3,), 3),)
    v = check_treelike(a, b, reg)
    assert v.kind == "branch" and v.d == 2 and not v.prefix_equal
    assert check_treelike(a, c, reg).kind == "disjoint_weights"
    assert check_treelike(a, a, reg).prefix_equal
    with pytest.raises(SigmaError):
        check_treelike(a + (((9,), 2),), b, reg)


def test_registry_replay_and_tamper(sigma_params, tmp_path):
    reg = SigmaRegistry(sigma_params)
    extend_special(reg, extend_special(reg, (((2,), 1),), (4, 5)), (9,))
    path = tmp_path / "reg.json"
    reg.save(path)
    back = SigmaRegistry.load(path, sigma_params)
    assert back.to_json() == reg.to_json()
    obj = json.loads(path.read_text())
    obj["entries"][0]["index"] += 2
    with pytest.raises(SigmaError):
        SigmaRegistry.from_json(obj, sigma_params)


def test_quarantine(sigma_params):
    reg = SigmaRegistry(sigma_params)
    seq = (((2,), 1),)
    want = SigmaRegistry(sigma_params).assign(seq)
    with pytest.raises(SigmaError):
        reg.import_value(seq, 3)  # odd, not in N2
    with pytest.raises(SigmaError):
        reg.import_value(seq, 2)  # too small for the growth condition
    j = reg.import_value(seq, want + 2)
    assert seq in reg.quarantined and reg.lookup(seq) == j
    other = (((2,), 1), ((3,), j))
    assert explain_special(other, SigmaRegistry(sigma_params)) is not None
    assert explain_special(other, SigmaRegistry(sigma_params), quarantine=True) is None
