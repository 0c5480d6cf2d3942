import json
from fractions import Fraction

import pytest

from whspace import constructions as C
from whspace.averages import make_scc
from whspace.functionals import Leaf
from whspace.params import SigmaRegistry, build_params
from whspace.vectors import Vector


def test_seminormalized_scc_rejects_flat_units(toy):
    # any flat average of t >= 17 unit vectors has l2 norm 1/sqrt(t) < 1/2
    blocks = [Vector.unit(i) for i in range(17, 140)]
    with pytest.raises(C.ConstructionError):
        C.build_seminormalized_scc(blocks, Fraction(1, 4), 1, toy)
    with pytest.raises(C.ConstructionError):
        C.build_seminormalized_scc([Vector.unit(3, Fraction(1, 2))], Fraction(1, 4), 1, toy)


def test_seminormalized_pair_value(toy):
    # e_2, e_3 with equal coefficients: norm 1/sqrt(2), at least 1/2
    blocks = [Vector.unit(2), Vector.unit(3)]
    x, w, lo = C.build_seminormalized_scc(blocks, Fraction(1), 1, toy)
    assert lo == pytest.approx(2 ** -0.5)


def _gap_ris(ps):
    base = [Vector.unit(t) for t in (2, 4)]
    return C.build_ris(base, Fraction(1), 8, ps, length=2, seminormalized=True)


def test_ris_round_trip(gap_params):
    ris = _gap_ris(gap_params)
    assert ris.verify(gap_params)
    back = C.RISWitness.from_json(json.loads(json.dumps(ris.to_json())))
    assert back.verify(gap_params) and back.vectors() == ris.vectors()
    broken = C.RISWitness(ris.base, ris.sccs, (ris.weights[0], ris.weights[0]), ris.C, True)
    assert broken.explain(gap_params)


def test_exact_sequence(gap_params):
    ris = _gap_ris(gap_params)
    seq = C.build_exact_sequence(ris, [2], gap_params)
    assert seq.verify(gap_params)
    back = C.ExactSequenceWitness.from_json(seq.to_json())
    assert back.vectors(gap_params) == seq.vectors(gap_params)
    with pytest.raises(C.ConstructionError):
        C.build_exact(ris, ris.weights[-1] + 2, gap_params)


def test_dependent_and_gap_demo(gap_params):
    reg = SigmaRegistry(gap_params)
    rep = C.gap_demo(reg, gap_params, 0)
    dep = rep.witness
    assert dep.verify(gap_params, reg)
    assert rep.star_lower <= rep.star_upper
    assert rep.psi_value <= rep.partner_upper
    assert rep.ratio == pytest.approx(rep.theta / rep.star_upper)
    back = C.DependentWitness.from_json(json.loads(json.dumps(dep.to_json())))
    assert back.verify(gap_params, reg)


def test_dependent_rejects_overlapping_partner(gap_params):
    reg = SigmaRegistry(gap_params)
    ris = _gap_ris(gap_params)
    partners = [(Leaf(1, 2), Vector.unit(3)), (Leaf(1, 5), Vector.unit(5))]
    with pytest.raises(C.ConstructionError):
        C.build_dependent(reg, ris, 0, partners, gap_params)


def test_gap_demo_needs_zero_level(toy):
    with pytest.raises(C.ConstructionError):
        C.gap_demo(SigmaRegistry(toy), toy, 0)


def test_strict_degenerate():
    ps = build_params({"mode": "strict", "levels": 8})
    assert C.strict_degenerate_check(ps, 0)["holds"]
    with pytest.raises(ValueError):
        C.strict_degenerate_check(build_params({"mode": "toy", "m": [2, 2], "n": [1, 1]}), 0)
