"""Parser/printer round trips and error reporting."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bphzkit.grammar import TreeParseError, format_tree, parse_tree
from bphzkit.trees import (
    K_LABEL,
    MultiIndex,
    O_LABEL,
    graft,
    multiindices_of_size_at_most,
    noise_edges,
    shift_edges,
    tree_product,
    unit_tree,
    x_basis,
    x_power,
)


def test_round_trip_on_family_trees(gpam, phi4):
    for _, _, fam in (gpam, phi4):
        for t in fam.B:
            text = format_tree(t)
            assert parse_tree(text, dim=t.dim) is t


def test_round_trip_on_relabeled_trees(gpam):
    _, _, fam = gpam
    for t in fam.Btilde:
        assert parse_tree(format_tree(t), dim=t.dim) is t


@pytest.mark.parametrize(
    "text",
    [
        "O",
        "H",
        "Hp",
        "X^(0,0,0)",
        "X^(2,1,0)",
        "I[K,(0,0,0)](O)",
        "I[K,(1,0,1)](X^(0,2,0))",
        "I[K,(0,0,0)](O)*O",
        "X^(0,1,0)*I[K,(0,0,0)](I[K,(0,0,0)](O)*O)",
    ],
)
def test_print_parse_print_fixed_point(text):
    t = parse_tree(text, dim=3)
    printed = format_tree(t)
    assert parse_tree(printed, dim=3) is t
    assert format_tree(parse_tree(printed, dim=3)) == printed


def test_canonical_factor_order():
    # kernel factors sort before noise factors regardless of input order
    assert format_tree(parse_tree("O*I[K,(0,0,0)](O)", dim=3)) == "I[K,(0,0,0)](O)*O"


def test_dimension_inference():
    assert parse_tree("X^(1,0)").dim == 2
    assert parse_tree("I[K,(0,0,0)](O)").dim == 3
    with pytest.raises(TreeParseError):
        parse_tree("O")  # bare symbol carries no dimension


@pytest.mark.parametrize(
    "text,pos",
    [
        ("", 0),
        ("I[K,(0,0,0)](", 13),
        ("X^(1,0", 6),
        ("O)", 1),
        ("O*", 2),
        ("I[Q,(0,0,0)](O)", 2),
    ],
)
def test_error_positions(text, pos):
    with pytest.raises(TreeParseError) as exc:
        parse_tree(text, dim=3)
    assert exc.value.pos == pos
    assert f"position {pos}" in str(exc.value)


def test_strict_rejects_decorated_noise_edge():
    with pytest.raises(TreeParseError):
        parse_tree("I[O,(0,1,0)](X^(0,0,0))", dim=3)


def test_lenient_mode_round_trips_boundary_symbols():
    # coproduct output may carry derivative decorations on noise stumps
    text = "I[O,(0,1,0)](X^(0,0,0))"
    t = parse_tree(text, dim=3, strict=False)
    assert format_tree(t) == text


def test_shift_labels_survive_round_trip():
    t = parse_tree("I[K,(0,0,0)](O)*O", dim=3)
    ve = noise_edges(t)
    mixed = shift_edges(t, ve[:1], ve[1:])
    assert format_tree(mixed) == "I[K,(0,0,0)](H)*Hp"
    assert parse_tree(format_tree(mixed), dim=3) is mixed


def _random_trees(depth):
    ks = st.sampled_from(multiindices_of_size_at_most(3, 3))
    base = st.one_of(
        st.builds(x_power, ks),
        st.just(graft(unit_tree(3), O_LABEL, MultiIndex.zero(3))),
        st.just(x_basis(3, 0)),
    )
    if depth == 0:
        return base
    sub = _random_trees(depth - 1)
    return st.one_of(
        base,
        st.builds(lambda t, k: graft(t, K_LABEL, k), sub, ks),
        st.builds(tree_product, sub, sub),
    )


@given(_random_trees(3))
def test_round_trip_generic(t):
    assert parse_tree(format_tree(t), dim=3) is t
