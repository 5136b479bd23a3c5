import random

import pytest
from hypothesis import given, settings, strategies as st

from distinguo.errors import (
    ArityError,
    BudgetExceeded,
    EqualityNotEnabled,
    FormulaError,
    FormulaSyntaxError,
    UnknownRelation,
)
from distinguo.formulas import (
    And,
    Atom,
    Equal,
    Exists,
    ExistsAtLeast,
    Forall,
    FormulaSet,
    Not,
    Or,
    closure_violations,
    free_vars,
    generate_fragment,
    is_closed,
    normalize,
    parse,
    parse_formula_list,
    pretty,
    random_formula,
    rank,
    rename_relations,
    subformulas,
)
from distinguo.structures import Signature

R1 = Signature.of(R=1)
RS = Signature.of(R=1, S=2)
RSE = Signature.of(eq=True, R=1, S=2)


def test_parse_exists():
    assert parse("E v0. R(v0)", R1) == Exists(0, Atom("R", (0,)))


def test_parse_negated_conjunction():
    assert parse("~(R(v0) & S(v0,v1))", RS) == Not(And((Atom("R", (0,)), Atom("S", (0, 1)))))


def test_parse_arity_error():
    with pytest.raises(ArityError):
        parse("R(v0,v1)", R1)


def test_parse_unknown_relation():
    with pytest.raises(UnknownRelation):
        parse("T(v0)", R1)


def test_parse_equality_needs_flag():
    with pytest.raises(EqualityNotEnabled):
        parse("v0=v1", R1)
    assert parse("v0 = v1", RSE) == Equal(0, 1)


@pytest.mark.parametrize("text,position", [
    ("R(v0", 4),
    ("(R(v0) & R(v1) | R(v2))", 15),
    ("E v0 R(v0)", 5),
    ("R(v0) R(v1)", 6),
    ("R(v0) $", 6),
])
def test_syntax_error_positions(text, position):
    with pytest.raises(FormulaSyntaxError) as info:
        parse(text, R1)
    assert info.value.position == position


def test_parse_counting_and_whitespace():
    phi = parse("  E^3 ( v0 , v1 ) .S(v0,v1)", RS)
    assert phi == ExistsAtLeast(3, (0, 1), Atom("S", (0, 1)))
    assert parse("E^0(). R(v0)", R1) == ExistsAtLeast(0, (), Atom("R", (0,)))
    with pytest.raises(FormulaSyntaxError):
        parse("E^2(v0,v0). R(v0)", R1)


def test_nary_connectives():
    phi = parse("(R(v0) | R(v1) | R(v2))", R1)
    assert isinstance(phi, Or) and len(phi.items) == 3


def test_formula_list_skips_comments():
    text = "# header\nR(v0)\n\n  ~R(v0)  # negated\n"
    assert parse_formula_list(text, R1) == [Atom("R", (0,)), Not(Atom("R", (0,)))]
    with pytest.raises(FormulaSyntaxError, match="line 2"):
        parse_formula_list("R(v0)\nR(v0", R1)


def test_free_vars_examples():
    s = Atom("S", (0, 1))
    assert free_vars(s) == (0, 1)
    assert free_vars(Exists(0, s)) == (1,)
    assert free_vars(Forall(1, Exists(0, s))) == ()


def test_rank():
    assert rank(parse("E v0. A v1. S(v0,v1)", RS)) == 2
    assert rank(parse("(E v0. R(v0) & A v1. R(v1))", RS)) == 1
    assert rank(parse("E^3(v0). R(v0)", R1)) == 3


def test_normalize():
    phi = parse("~~(R(v1) & (R(v0) & R(v1)))", R1)
    assert normalize(phi) == And((Atom("R", (0,)), Atom("R", (1,))))


def test_rename_relations():
    phi = parse("E v0. S(v0,v1)", RS)
    assert pretty(rename_relations(phi, lambda n: n + "_0")) == "E v0. S_0(v0,v1)"


# -------------------------------------------------------------- fragments


def test_fragment_rank0_literals():
    F = generate_fragment(R1, 0, 1)
    assert Atom("R", (0,)) in F.formulas and Not(Atom("R", (0,))) in F.formulas


def test_fragment_rank0_closed():
    assert is_closed(generate_fragment(R1, 0, 1))


def test_fragment_rank1_has_exists():
    assert Exists(0, Atom("R", (0,))) in generate_fragment(R1, 1, 1).formulas


@pytest.mark.parametrize("sig,r,v", [(RS, 2, 2), (RSE, 2, 2), (Signature.of(eq=True, R=1), 3, 3)])
def test_fragment_closure(sig, r, v):
    F = generate_fragment(sig, r, v)
    assert closure_violations(F) == {"subformula": [], "negation": []}
    assert len(set(F)) == len(F)
    assert all(rank(phi) <= r and max((x for s in subformulas(phi) for x in free_vars(s)), default=0) < v
               for phi in F)
    assert all(normalize(phi) == phi for phi in F)


def test_fragment_contains_atoms_and_negations():
    F = set(generate_fragment(RSE, 1, 2))
    for a in [Atom("R", (0,)), Atom("R", (1,)), Atom("S", (1, 0)), Equal(0, 1)]:
        assert a in F and Not(a) in F


def test_fragment_budget_and_precondition():
    with pytest.raises(BudgetExceeded):
        generate_fragment(RS, 2, 2, cap=100)
    with pytest.raises(FormulaError):
        generate_fragment(RS, 1, 1)


def test_formula_set_validates():
    with pytest.raises(UnknownRelation):
        FormulaSet(R1, (Atom("S", (0, 1)),))
    fs = FormulaSet(RS, (parse("E v0. R(v0)", RS), parse("S(v0,v1)", RS)))
    assert fs.sentences() == [fs[0]] and fs.max_free == 2


# -------------------------------------------------------------- round trip


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([R1, RS, RSE]))
def test_round_trip_random(seed, sig):
    phi = random_formula(random.Random(seed), sig, 4, 3)
    assert parse(pretty(phi), sig) == phi
    assert parse(pretty(normalize(phi)), sig) == normalize(phi)


def test_round_trip_fragment():
    for phi in generate_fragment(RSE, 2, 2):
        assert parse(pretty(phi), RSE) == phi


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_free_vars_laws(seed):
    rng = random.Random(seed)
    phi = random_formula(rng, RS, 3, 3)
    v = rng.randrange(3)
    assert free_vars(Not(phi)) == free_vars(phi)
    assert set(free_vars(Exists(v, phi))) == set(free_vars(phi)) - {v}
    assert set(free_vars(ExistsAtLeast(2, (v,), phi))) == set(free_vars(phi)) - {v}
