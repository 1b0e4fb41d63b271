import pytest

from ugf import corpus
from ugf.normform import (SIZE_FACTOR, ExistentialReq, NormalFormError,
                          is_normal_form, requirements, size_bound,
                          to_normal_form)
from ugf.structures import brute_force_sat
from ugf.syntax import (And, classify, is_sentence, parse,
                        signature, size, to_text)

RUNNING = ("exists z. (P(z) & true) & forall x. (P(x) -> exists y. (R(x,y) & P(y))) & "
           "forall x. (P(x) -> (true -> forall y. (R(x,y) -> true)))")


def uniform_sentences():
    out = []
    for name in corpus.names():
        try:
            f = parse(corpus.text(name))
        except ValueError:
            continue
        if is_sentence(f) and classify(f).uniform:
            out.append(f)
    return out


def test_running_example_is_already_normal():
    nf = is_normal_form(parse(RUNNING))
    assert nf is not None
    assert [s.pred for s in nf.seeds] == ["P"]
    ex, un = requirements(nf)
    assert len(ex) == 1 and len(un) == 1


def test_existential_only_sentence_is_not_normal():
    assert is_normal_form(parse(corpus.text("prop1_phi"))) is None


def test_empty_binder_requirement_counts_as_existential():
    f = parse("exists z. (P(z) & true) & forall x. (P(x) -> exists . (P(x) & Q(x))) & "
              "forall x. (P(x) -> (true -> forall y. (R(x,y) -> true)))")
    nf = is_normal_form(f)
    assert nf is not None
    ex, un = requirements(nf)
    assert len(ex) == 1 and ex[0].ys == () and len(un) == 1
    assert isinstance(ex[0], ExistentialReq)


def test_seed_shaped_input_gets_one_branch_with_lambda_only():
    f = parse("exists x. (P(x) & Q(x))")
    branches = to_normal_form(f)
    assert len(branches) == 1
    assert all(s.name.startswith("_L") for s in branches[0].fresh_symbols)


def test_one_nested_block_gives_one_fresh_relation():
    f = parse("exists x. (P(x) & exists y. (R(x,y) & Q(y)))")
    branches = to_normal_form(f)
    assert len(branches) == 1
    fresh = [s.name for s in branches[0].fresh_symbols if s.name.startswith("_NF")]
    assert len(fresh) == 1
    assert is_normal_form(branches[0].formula) is not None


def test_sentence_subformulas_branch_false_first():
    f = parse(corpus.text("u_inner_sentence"))
    branches = to_normal_form(f)
    assert len(branches) == 2
    assert [v for _, v in branches[0].guesses][0] is False
    assert [v for _, v in branches[1].guesses][0] is True


def test_non_uniform_or_open_input_rejected():
    with pytest.raises(NormalFormError):
        to_normal_form(parse(corpus.text("prop1_phi")))
    with pytest.raises(NormalFormError):
        to_normal_form(parse("exists y. (R(x,y) & P(y))"))


@pytest.mark.parametrize("f", uniform_sentences(), ids=to_text)
def test_branches_are_uniform_normal_forms_of_bounded_size(f):
    branches = to_normal_form(f)
    assert 1 <= len(branches)
    original = {s.name for s in signature(f)}
    for b in branches:
        assert is_normal_form(b.formula) is not None
        assert classify(b.formula).uniform
        assert not original & {s.name for s in b.fresh_symbols}
        assert size(b.formula) <= size_bound(f) == SIZE_FACTOR * size(f) ** 2


@pytest.mark.parametrize("f", uniform_sentences(), ids=to_text)
def test_bounded_equisatisfiability(f):
    direct = brute_force_sat(f, 3) is not None
    via = any(brute_force_sat(And(b.formula, f), 3) is not None for b in to_normal_form(f))
    assert direct == via


def test_requirement_formulas_rebuild_sentence():
    nf = is_normal_form(parse(RUNNING))
    assert is_normal_form(nf.formula()) == nf
