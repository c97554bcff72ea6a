"""Backlund maps: generator formulas, group structure, solution symmetry."""

import random
from fractions import Fraction as F

import pytest

from weylflow import catalog as cat
from weylflow import exprtext as et
from weylflow import symkernel as sk
from weylflow import weyl

A42 = cat.build_system("A4_2")
A11 = cat.build_system("A1_1")
PDE = cat.build_system("PDE_A1_1")


def test_generator_formulas_match_closed_forms():
    g = weyl.generators("A4_2")
    t = A42.table
    assert sk.is_identically_equal(weyl.apply_map(g["s0"], et.parse("z", t)),
                                   et.parse("z + a0/w", t))
    f2 = "(x + y^2 + w + t)"
    assert sk.is_identically_equal(
        weyl.apply_map(g["s2"], et.parse("x", t)),
        et.parse(f"x + 2*a2*y/{f2} - a2^2/{f2}^2", t))
    g11 = weyl.generators("A1_1")
    assert sk.is_identically_equal(
        weyl.apply_map(g11["s0"], et.parse("w", A11.table)),
        et.parse("w - 2*a0*z/(x + z^2)", A11.table))
    gp = weyl.generators("PDE_A1_1")
    f1 = "(q1 + p1^2 + p2^2)"
    assert sk.is_identically_equal(
        weyl.apply_map(gp["s1"], et.parse("q2", PDE.table)),
        et.parse(f"q2 + 2*a1*p2/{f1}", PDE.table))


def test_parameter_action_on_expression():
    g = weyl.generators("A4_2")
    out = weyl.apply_map(g["s0"], et.parse("a0 + a1", A42.table))
    assert sk.is_identically_equal(out, et.parse("a1", A42.table))


def test_s0_with_zero_shift_is_identity_on_state():
    g = weyl.generators("A4_2")["s0"]
    state = {"x": 1, "y": 2, "z": 3, "w": 4, "t": 5}
    new_state, new_params = weyl.apply_to_state(
        g, state, {"a0": 0, "a1": F(1, 2), "a2": 0})
    assert {k: new_state[k] for k in state} == {k: F(v) for k, v in state.items()}
    assert new_params == {"a0": F(0), "a1": F(1, 2), "a2": F(0)}


def test_apply_to_state_pole_raises():
    g = weyl.generators("A4_2")["s0"]
    with pytest.raises(sk.ZeroDenominatorError):
        weyl.apply_to_state(g, {"x": 0, "y": 0, "z": 0, "w": 0, "t": 0},
                            {"a0": 1, "a1": 0, "a2": 0})


def test_translation_actions_match_printed_offsets():
    nm = weyl.named_maps("A4_2")
    assert weyl.translation_offset(nm["T1"]) == (F(-2), F(1), F(0))
    assert weyl.translation_offset(nm["T2"]) == (F(0), F(-1), F(1))
    assert weyl.translation_offset(weyl.named_maps("A1_1")["T"]) == (F(-2), F(2))


def test_word_map_matches_named_translation():
    byword = weyl.word_map("A4_2", ["s1", "s2", "s1", "s0"])
    assert byword.action == weyl.named_maps("A4_2")["T1"].action
    with pytest.raises(sk.SymbolError):
        weyl.word_map("A4_2", ["s9"])


def test_translations_commute():
    nm = weyl.named_maps("A4_2")
    t12 = weyl.compose(nm["T1"], nm["T2"])
    t21 = weyl.compose(nm["T2"], nm["T1"])
    assert t12.action == t21.action
    rng = random.Random(5)
    checked = 0
    while checked < 4:
        state = {n: sk.random_rational(rng, 30) for n in ("x", "y", "z", "w", "t")}
        params = {"a0": F(1, 3), "a1": F(1, 5), "a2": F(2, 15)}
        try:
            s1, v1 = weyl.apply_to_state(t12, state, params)
            s2, v2 = weyl.apply_to_state(t21, state, params)
        except sk.ZeroDenominatorError:
            continue
        assert s1 == s2 and v1 == v2
        checked += 1


@pytest.mark.parametrize("system_id", cat.SYSTEM_IDS)
def test_generators_are_involutions(system_id):
    for name, gen in weyl.generators(system_id).items():
        assert weyl.is_involution(gen), (system_id, name)


def test_involution_via_explicit_composition():
    # s1(s1(y)) == y, via symbolic substitution
    s1 = weyl.generators("A4_2")["s1"]
    once = weyl.apply_map(s1, et.parse("y", A42.table))
    twice = weyl.apply_map(s1, once)
    assert sk.is_identically_equal(twice, et.parse("y", A42.table))


@pytest.mark.parametrize("system_id", cat.SYSTEM_IDS)
def test_actions_preserve_relation_hyperplane(system_id):
    for name, gen in weyl.generators(system_id).items():
        assert weyl.preserves_relation(gen), (system_id, name)


def test_relation_orders():
    assert weyl.relation_order("A4_2", 0, 0, 2) == 1
    assert weyl.relation_order("A1_1", 0, 1, 8) is weyl.EXCEEDS_MAX
    found = weyl.relation_order("A4_2", 0, 2, 8)
    assert isinstance(found, int)


def test_a11_infinite_order_justified_by_translation():
    gens = weyl.generators("A1_1")
    pair = weyl.compose(gens["s1"], gens["s0"])   # s0 first
    off = weyl.translation_offset(pair)
    assert off is not None and any(v != 0 for v in off)


@pytest.mark.parametrize("system_id,gen_name", [
    ("A4_2", "s0"), ("A4_2", "s1"), ("A4_2", "s2"),
    ("A1_1", "s0"), ("A1_1", "s1"),
    ("PDE_A1_1", "s0"), ("PDE_A1_1", "s1"),
])
def test_symmetry_verification(system_id, gen_name):
    sys_ = cat.build_system(system_id)
    rep = weyl.verify_symmetry(sys_, weyl.generators(system_id)[gen_name])
    assert rep.passed, rep.as_dict()
    assert len(rep.checks) == 4 * len(sys_.times)


def test_exponential_formula_examples():
    t = A42.table
    rep = weyl.exponential_formula_check(A42, 2, sk.Polynomial.variable(t, "x"))
    assert rep.terminated and rep.order == 2 and rep.matches
    rep = weyl.exponential_formula_check(A42, 1, sk.Polynomial.variable(t, "y"))
    assert rep.terminated and rep.order == 1 and rep.matches
    # bracket chain backing the s2 series: {f2,x}=2y, {f2,2y}=-2, {f2,-2}=0
    f2 = A42.divisors[2][0]
    b1 = sk.poisson_bracket(f2, sk.Polynomial.variable(t, "x"), A42.pairing)
    assert b1 == sk.RationalExpr.from_polynomial(2 * sk.Polynomial.variable(t, "y"))
    b2 = sk.poisson_bracket(f2, b1.as_polynomial(), A42.pairing)
    assert b2 == sk.RationalExpr.const(t, -2)
    assert sk.poisson_bracket(f2, b2.as_polynomial(), A42.pairing).is_zero()


def test_exponential_formula_nonterminating_is_flagged_not_fatal():
    rep = weyl.exponential_formula_check(
        A42, 2, sk.Polynomial.variable(A42.table, "x"), max_order=1)
    assert not rep.terminated
    assert rep.matches is None
    assert rep.order == 1


def test_exponential_formula_on_own_divisor_is_trivial():
    for i, (f_i, _) in enumerate(A42.divisors):
        rep = weyl.exponential_formula_check(A42, i, f_i)
        assert rep.terminated and rep.matches


def test_generators_divide_only_by_own_divisor_powers():
    for system_id in cat.SYSTEM_IDS:
        sys_ = cat.build_system(system_id)
        for i, (f_i, _) in enumerate(sys_.divisors):
            gen = weyl.generators(system_id)[f"s{i}"]
            image = weyl.apply_map(gen, f_i)
            cleared = None
            power = sk.Polynomial.one(sys_.table)
            for k in range(5):
                product = image * power
                if product.is_polynomial():
                    cleared = k
                    break
                power = power * f_i
            assert cleared is not None, (system_id, i)
