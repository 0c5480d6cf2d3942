import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from whspace import estimates as E
from whspace.constructions import gap_demo
from whspace.functionals import Leaf
from whspace.params import SigmaRegistry, build_params
from whspace.vectors import Vector

seeds = st.integers(0, 10**6)


def test_mfe_trivial(toy):
    inst = E.EstimateInstance("MFE", toy, [Leaf(1, 2)], [Fraction(1)], [Vector.unit(5)],
                              [Fraction(1)], {"C": Fraction(1)})
    rep = E.check_estimate(inst)
    assert rep["holds"] and rep["lhs"] <= 1 and rep["rhs"] == 4
    assert rep["margin"] == rep["rhs"] - rep["lhs"]


def test_mfe_rejects_minsupp_inside_range(toy):
    x = Vector.from_dict({4: Fraction(1, 2), 6: Fraction(1, 2)})
    inst = E.EstimateInstance("MFE", toy, [Leaf(1, 5)], [Fraction(1)], [x], [Fraction(1)],
                              {"C": Fraction(1)})
    with pytest.raises(E.HypothesisError) as ei:
        E.check_estimate(inst)
    assert any("lies in ran x_1" in f for f in ei.value.failures)


def test_sae_rejects_q_not_below_n(toy):
    inst = E.generate("SAE", 3, 0, toy)
    assert not E.explain_hypotheses(inst)
    inst.side["q"] = toy.n[inst.side["j"]]
    with pytest.raises(E.HypothesisError) as ei:
        E.check_estimate(inst)
    assert any("is not above q" in f for f in ei.value.failures)


def test_unknown_kind(toy):
    with pytest.raises(ValueError):
        E.check_estimate(E.EstimateInstance("NOPE", toy))
    with pytest.raises(ValueError):
        E.EstimateInstance.from_json({"kind": "NOPE"})


@pytest.mark.parametrize("kind", E.GENERATED)
@given(seed=seeds)
def test_generators_emit_valid_instances_that_hold(kind, seed):
    inst = E.generate(kind, seed, 0)
    assert E.explain_hypotheses(inst) == []
    rep = E.check_estimate(inst)
    assert rep["holds"], rep
    back = E.EstimateInstance.from_json(json.loads(json.dumps(inst.to_json())))
    rep2 = E.check_estimate(back)
    assert rep2["lhs"] == pytest.approx(rep["lhs"]) and rep2["rhs"] == rep["rhs"]


def test_rise_requires_unit_scalars():
    inst = E.generate("RISE", 11, 0)
    inst.lambdas = [Fraction(1, 2)] * len(inst.lambdas)
    assert "RISE takes all scalars equal to 1" in E.explain_hypotheses(inst)


def test_sae_reports_phi_restricted_sum(toy):
    rep = E.check_estimate(E.generate("SAE", 5, 1, toy))
    assert "phi" in rep and "lhs_full" in rep


def test_fuzz_summary(tmp_path):
    s = E.fuzz("MFE", 20, 4, bundle_dir=str(tmp_path))
    assert s.ok and s.passed == 20 and not list(tmp_path.iterdir())


def test_fuzz_dumps_bundle_for_invalid_instances(tmp_path, monkeypatch):
    real = E.GENERATORS["MFE"]

    def broken(rng, ps):
        inst = real[0](rng, ps)
        inst.side.pop("C")
        return inst
    monkeypatch.setitem(E.GENERATORS, "MFE", (broken, real[1]))
    s = E.fuzz("MFE", 2, 0, bundle_dir=str(tmp_path))
    assert not s.ok and s.invalid == 2 and len(s.bundles) == 2
    data = json.loads(open(s.bundles[0]).read())
    assert "hypothesis_failures" in data["report"]


def _dependent_instance(kind, allow_toy):
    ps = build_params({"mode": "toy", "m": [2, 2] + [2 ** k for k in range(2, 41)],
                       "n": [1] + [0] * 40})
    reg = SigmaRegistry(ps)
    dep = gap_demo(reg, ps, 0).witness
    zs = dep.zs(ps)
    side = {"dependent": dep}
    if allow_toy:
        side["allow_toy"] = True
    return E.EstimateInstance(kind, ps, [], [], zs, list(dep.outer.coefficients()), side, reg)


def test_growth_kinds_reject_toy_params():
    inst = _dependent_instance("PNORM", False)
    bad = E.explain_hypotheses(inst)
    assert any("growth" in f for f in bad)


def test_pnorm_three_way_verdict():
    rep = E.check_estimate(_dependent_instance("PNORM", True))
    assert rep["verdict"] in ("holds", "violated", "inconclusive")
    assert rep["lower"] <= rep["lhs"] + 1e-9
    assert "notes" in rep


def test_p74_toy_rejected_for_growth(toy):
    inst = E.EstimateInstance("P7_4", toy, [Leaf(1, 2)], [Fraction(1)], [], [], {"q": 0})
    assert any("growth" in f for f in E.explain_hypotheses(inst))
    inst.side["allow_toy"] = True
    assert not any("growth" in f for f in E.explain_hypotheses(inst))


# counting identity

def test_counting_two_by_two():
    t12, t21, a1, a2 = Fraction(3, 2), Fraction(-5, 7), Fraction(2, 3), Fraction(4)
    rep = E.check_counting(E.CountingInstance((1, 2), [[0, t12], [t21, 0]], [a1, a2]))
    assert rep.holds and rep.lhs == [t12 * a2, t21 * a1] and rep.rhs == rep.lhs
    assert rep.stated_constant == 2 and rep.partitions == 2


def test_counting_zero_matrix():
    rep = E.check_counting(E.CountingInstance((1, 2, 3, 4), [[0] * 4] * 4, [1, 2, 3, 4]))
    assert rep.holds and rep.lhs == [0] * 4 and rep.rhs == [0] * 4


@pytest.mark.parametrize("size", [4, 6, 8])
@given(seed=seeds)
def test_counting_even_exact(size, seed):
    inst = E.random_counting_instance(size, seed)
    rep = E.check_counting(inst)
    assert rep.holds and rep.stated_holds
    assert rep.empirical_constant == rep.stated_constant
    back = E.check_counting(E.CountingInstance.from_json(json.loads(json.dumps(inst.to_json()))))
    assert back.to_json() == rep.to_json()


@pytest.mark.parametrize("size", [3, 5, 7, 9])
def test_counting_odd_uses_measured_constant(size):
    L = size // 2
    rep = E.check_counting(E.random_counting_instance(size, 1))
    assert rep.holds
    assert rep.empirical_constant == Fraction(2 * (2 * L + 1), L + 1)
    assert not rep.stated_holds


def test_counting_errors():
    with pytest.raises(ValueError, match="diagonal"):
        E.check_counting(E.CountingInstance((1, 2), [[1, 0], [0, 0]], [1, 1]))
    with pytest.raises(ValueError, match="cap"):
        E.check_counting(E.random_counting_instance(11, 0))
    with pytest.raises(ValueError):
        E.check_counting(E.CountingInstance((1, 1), [[0, 0], [0, 0]], [1, 1]))
