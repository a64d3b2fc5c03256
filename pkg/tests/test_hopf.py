"""Coproducts, antipode, and renormalization maps on small trees.

The axiom checks (coassociativity, comodule compatibility, the antipode
identity) run here on the whole d=2 preset; the d=3 preset is exercised
at full scale by the acceptance suite.
"""

from fractions import Fraction

import pytest

from bphzkit import INF, parse_tree, plus_generators
from bphzkit.hopf import (
    TensorSum,
    antipode_plus,
    binomial_expand,
    char_convolve,
    check_RD_commutation,
    check_antipode,
    check_coassociativity,
    check_comodule,
    coaction,
    coproduct,
    coproduct_plus,
    coproduct_recursive,
    counit,
    renorm_M,
    renorm_R,
    tensor_sum_to_lines,
)
from bphzkit.trees import (
    FormalSum,
    MultiIndex,
    noise_edges,
    tree_product,
    unit_tree,
    x_power,
)


def test_counit_supported_on_unit():
    assert counit(unit_tree(3)) == 1
    assert counit(x_power(MultiIndex((0, 1, 0)))) == 0
    assert counit(parse_tree("I[K,(0,0,0)](O)", dim=3)) == 0


def test_monomial_coproduct_is_binomial(gpam):
    _, params, _ = gpam
    k = MultiIndex((0, 2, 0))
    cop = coproduct_plus(x_power(k), params.eps, params.p, params)
    x = lambda *entries: x_power(MultiIndex(entries))
    assert cop.coefficient(x(0, 0, 0), x(0, 2, 0)) == 1
    assert cop.coefficient(x(0, 1, 0), x(0, 1, 0)) == 2
    assert cop.coefficient(x(0, 2, 0), x(0, 0, 0)) == 1
    assert len(cop) == 3


def test_binomial_expand_monomial_is_trivial():
    t = x_power(MultiIndex((1, 1, 0)))
    assert binomial_expand(t) == FormalSum.single(t)


def test_hopf_axioms_on_gpam(gpam):
    _, params, fam = gpam
    gens = plus_generators(fam, params.eps, params.p, params)
    for mu in gens.Vplus:
        assert check_coassociativity(mu, params.eps, params.p, params)
        assert check_antipode(mu, params.eps, params.p, params)
    for t in fam.B:
        assert check_comodule(t, params.eps, params.p, params)


def test_antipode_of_primitive_is_negation(gpam):
    _, params, _ = gpam
    mu = parse_tree("I[K,(0,0,0)](O)", dim=3)
    assert antipode_plus(mu, params.eps, params.p, params) == FormalSum.single(
        mu, Fraction(-1)
    )


def test_coproduct_implementations_agree_small(gpam):
    _, _, fam = gpam
    for t in fam.Btilde:
        if t.edge_count > 3:
            continue
        assert coproduct(t, 2) == coproduct_recursive(t, 2)


def test_coaction_of_negative_tree(gpam):
    _, params, _ = gpam
    tau = parse_tree("I[K,(0,0,0)](O)*O", dim=3)
    cop = coaction(tau, params.eps, params.p, params)
    assert cop.coefficient(tau, unit_tree(3)) == 1
    o = parse_tree("O", dim=3)
    planted = parse_tree("I[K,(0,0,0)](O)", dim=3)
    assert cop.coefficient(o, planted) == 1


def test_tensor_lines_format(gpam):
    _, params, _ = gpam
    tau = parse_tree("I[K,(0,0,0)](O)*O", dim=3)
    lines = tensor_sum_to_lines(coaction(tau, params.eps, params.p, params))
    assert "1\tI[K,(0,0,0)](O)*O\tX^(0,0,0)" in lines
    parts = lines[0].split("\t")
    assert len(parts) == 3
    parse_tree(parts[1], dim=3, strict=False)


class TestRenormMaps:
    def _tau(self):
        return parse_tree("I[K,(0,0,0)](O)*O", dim=3)

    def test_empty_character_is_identity(self, gpam):
        _, _, fam = gpam
        for t in fam.B:
            assert renorm_M({}, t) == FormalSum.single(t)
            assert renorm_R({}, t) == FormalSum.single(t)

    def test_single_extraction_adds_constant(self):
        tau = self._tau()
        out = renorm_M({tau: Fraction(7)}, tau)
        assert out == FormalSum({tau: 1, unit_tree(3): Fraction(7)})

    def test_root_map_skips_internal_occurrences(self):
        # the root-anchored map extracts the embedded copy at the root
        # only; the inner copy is reached through the recursive expansion
        tau = self._tau()
        big = parse_tree("I[K,(0,0,0)](I[K,(0,0,0)](O)*O)*O", dim=3)
        chi = {tau: Fraction(7)}
        planted = parse_tree("I[K,(0,0,0)](O)", dim=3)
        assert renorm_R(chi, big) == FormalSum({big: 1, planted: Fraction(7)})
        expanded = renorm_M(chi, big)
        contracted = parse_tree("I[K,(0,0,0)](X^(0,0,0))*O", dim=3, strict=False)
        assert expanded == FormalSum(
            {big: 1, planted: Fraction(7), contracted: Fraction(7)}
        )

    def test_extraction_counts_embedded_copies(self):
        # joining tau with an extra noise edge creates two embedded
        # copies of tau at the root (either O edge completes the K
        # factor), so the extracted coefficient doubles
        tau = self._tau()
        chi = {tau: Fraction(2, 3)}
        o = parse_tree("O", dim=3)
        prod = tree_product(tau, o)
        assert renorm_M(chi, prod) == FormalSum({prod: 1, o: Fraction(4, 3)})

    def test_leading_coefficient_is_one(self, gpam):
        _, _, fam = gpam
        tau = self._tau()
        chi = {tau: Fraction(-5, 9)}
        for t in fam.B:
            assert renorm_M(chi, t).coefficient(t) == 1


def test_shift_relabel_commutes_with_renormalization(gpam):
    _, _, fam = gpam
    tau = parse_tree("I[K,(0,0,0)](O)*O", dim=3)
    chi = {tau: Fraction(3, 7)}
    for t in fam.B:
        for cut in range(t.n_noise + 1):
            v = noise_edges(t)[:cut]
            assert check_RD_commutation(chi, t, v)


def test_convolution_with_counit_is_identity(gpam):
    from bphzkit.hopf import Character

    _, params, fam = gpam
    gens = plus_generators(fam, params.eps, params.p, params)
    cop = lambda mu: coproduct_plus(mu, params.eps, params.p, params)
    f = Character(3, rule=lambda g: Fraction(g.edge_count + 1, 3), name="probe")
    eps_char = Character(3, rule=lambda g: Fraction(0), name="eps")
    conv = char_convolve(f, eps_char, cop)
    for mu in gens.Vplus:
        assert conv(mu) == f(mu)


def test_tensor_sum_algebra():
    a = unit_tree(3)
    b = x_power(MultiIndex((0, 1, 0)))
    s = TensorSum({(a, b): 2, (b, a): 0})
    assert len(s) == 1
    assert s.coefficient(a, b) == 2
    assert s.coefficient(b, a) == 0
    assert s == TensorSum({(a, b): 2})
