import random

import pytest
from hypothesis import given, settings, strategies as st

from ugf import corpus
from ugf.generators import random_formula, random_modal
from ugf.syntax import (FALSE, TRUE, And, Atom, Diamond, Eq, Exists, Forall,
                        GuardError, MAnd, Not, Or, ParseError, Prop, Vocabulary,
                        classify, free_variables, is_one_dimensional,
                        is_relative_atom, is_uniform, modal_translation, parse,
                        signature, subformulas, to_text)

EX1A = "exists x y. (P(x) & R(x,y) & S(x,y,y) & R(y,x) & P(y))"
EX1B = "exists x y. (exists z. (S(x,y,z) & P(z)) & R(x,y) & S(x,y,x))"
EX1C = "exists x y w. (R(x,y) & exists z. S(x,w,z))"
PHI = "exists x y z. (G(x,y,z) & R(x,y) & R(y,z) & R(z,x))"


def test_parse_picks_covering_atom_as_guard():
    f = parse("exists x y. (R(x,y) & P(x))")
    assert f == Exists(("x", "y"), Atom("R", ("x", "y")), Atom("P", ("x",)))


def test_guard_is_first_covering_conjunct_not_first_conjunct():
    f = parse(EX1A)
    assert f.guard == Atom("R", ("x", "y"))
    assert parse("exists y. (P(x) & R(x,y) & P(y))").guard == Atom("R", ("x", "y"))


def test_triangle_sentence_parses_with_ternary_guard():
    f = parse(PHI)
    assert isinstance(f, Exists)
    assert f.guard == Atom("G", ("x", "y", "z"))
    assert free_variables(f) == frozenset()


def test_uncovered_block_is_a_guard_error():
    with pytest.raises(GuardError):
        parse(EX1C)


@pytest.mark.parametrize("text", ["exists x (P(x))", "P(x", "R(x,,y)", "x == y"])
def test_syntax_errors_carry_positions(text):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert "position" in str(info.value)


def test_equality_is_not_a_guard():
    with pytest.raises(GuardError):
        parse("exists y. (x = y & P(y))")


def test_empty_binder_round_trips():
    # normal forms use blocks that bind nothing
    f = Exists((), Atom("P", ("x",)), Atom("Q", ("x",)))
    assert parse(to_text(f)) == f


def test_printing():
    assert to_text(Exists(("x",), Atom("P", ("x",)), TRUE)) == "exists x. (P(x) & true)"


@pytest.mark.parametrize("text", [PHI, "forall x y. (R(x,y) -> ((A(x) -> !A(y)) & (!A(y) -> A(x))))"])
def test_round_trip_on_interpolation_pair(text):
    f = parse(text)
    assert parse(to_text(f)) == f


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip_random(seed):
    rng = random.Random(seed)
    vocab = Vocabulary.of({"P": 1, "R": 2, "S": 3})
    f = random_formula(rng, vocab, depth=4)
    assert parse(to_text(f)) == f


def test_free_variables():
    assert free_variables(Atom("R", ("x", "y"))) == {"x", "y"}
    assert free_variables(parse("exists y. (R(x,y) & P(y))")) == {"x"}
    assert free_variables(parse(PHI)) == frozenset()


def test_subformulas_keep_guard_with_matrix():
    f = parse("exists y. (R(x,y) & P(y))")
    got = set(subformulas(f))
    assert got == {f, And(Atom("R", ("x", "y")), Atom("P", ("y",))),
                   Atom("R", ("x", "y")), Atom("P", ("y",))}
    assert set(subformulas(Atom("P", ("x",)))) == {Atom("P", ("x",))}
    g = And(Atom("P", ("x",)), Atom("Q", ("x",)))
    assert set(subformulas(g)) == {g, Atom("P", ("x",)), Atom("Q", ("x",))}


def test_one_dimensionality():
    assert is_one_dimensional(parse(EX1A))[0]
    flag, offender = is_one_dimensional(parse(EX1B))
    assert not flag
    assert len(free_variables(offender)) == 2
    assert is_one_dimensional(Atom("P", ("x",)))[0]


def test_relative_atoms():
    assert is_relative_atom(Atom("R", ("x", "y")), {"x", "y"})
    assert is_relative_atom(Atom("P", ("x",)), {"x", "y"})
    assert not is_relative_atom(Atom("R", ("x", "y")), {"x", "y", "z"})
    assert is_relative_atom(Eq("x", "y"), {"x", "y"})
    assert is_relative_atom(parse(PHI), {"q"})


def test_uniformity():
    assert is_uniform(parse(EX1A))[0]
    assert not is_uniform(parse(EX1C, strict=False))[0]


@pytest.mark.parametrize("name,flags", [("ex1a", (True, True, True)),
                                        ("ex1b", (True, False, True)),
                                        ("ex1c", (False, False, False))])
def test_classification_of_example_formulas(name, flags):
    assert classify(parse(corpus.text(name), strict=False)).flags == flags


def test_classification_of_interpolation_pair():
    r = classify(parse(PHI))
    assert r.guarded and r.one_dimensional and not r.uniform
    assert classify(TRUE).flags == (True, True, True)


def test_offenders_are_subformulas():
    f = parse(EX1C, strict=False)
    subs = set(subformulas(f))
    report = classify(f)
    assert report.offending_subformulas
    assert all(g in subs for g, _ in report.offending_subformulas)


def test_modal_translation_shapes():
    assert modal_translation(Prop("p")) == Atom("P", ("x0",))
    f = modal_translation(Diamond("R", (Prop("p"), Prop("q"))))
    assert f == Exists(("x1", "x2"), Atom("R", ("x0", "x1", "x2")),
                       And(Atom("P", ("x1",)), Atom("Q", ("x2",))))
    nested = modal_translation(Diamond("R", (MAnd(Prop("p"), Diamond("R", (Prop("p"),))),)))
    assert classify(nested).flags == (True, True, True)


def test_modal_translations_are_uniform_and_one_dimensional():
    rng = random.Random(3)
    for _ in range(100):
        assert classify(modal_translation(random_modal(rng))).flags == (True, True, True)


def test_sugar_and_precedence():
    f = parse("P(x) & Q(x) | R(x) -> S(x)")
    assert isinstance(f, Or)  # a -> b is !a | b
    assert f.left == Not(Or(And(Atom("P", ("x",)), Atom("Q", ("x",))), Atom("R", ("x",))))
    g = parse("forall x. (P(x) -> Q(x))")
    assert isinstance(g, Forall)
    assert parse("false") == FALSE


def test_signature_and_vocabulary_checks():
    assert signature(parse(PHI)).as_dict() == {"G": 3, "R": 2}
    with pytest.raises(ValueError):
        parse("R(x) & R(x,y)")
    with pytest.raises(ValueError):
        Vocabulary.of({"P": 0})
