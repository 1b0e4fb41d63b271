from itertools import product

from hypothesis import given, settings, strategies as st

from ugf.ground import Grounder, solve
from ugf.structures import Structure, evaluate
from ugf.syntax import Vocabulary, parse, signature


def brute(nvars, clauses):
    for bits in product((False, True), repeat=nvars):
        if all(any(bits[abs(l) - 1] == (l > 0) for l in c) for c in clauses):
            return True
    return False


def satisfies(model, clauses):
    return all(any(model[abs(l)] == (l > 0) for l in c) for c in clauses)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 8), st.lists(st.lists(st.integers(1, 8).flatmap(
    lambda v: st.sampled_from((v, -v))), min_size=1, max_size=3), max_size=30))
def test_solver_matches_truth_tables(nvars, clauses):
    clauses = [[l for l in c if abs(l) <= nvars] or [1] for c in clauses]
    result = solve(nvars, clauses)
    assert (result is not None) == brute(nvars, clauses)
    if result is not None:
        assert satisfies(result, clauses)


def test_pigeonhole_is_unsat():
    # 4 pigeons, 3 holes
    var = lambda p, h: p * 3 + h + 1
    clauses = [[var(p, h) for h in range(3)] for p in range(4)]
    clauses += [[-var(p, h), -var(q, h)] for h in range(3) for p in range(4) for q in range(p)]
    assert solve(12, clauses) is None
    assert solve(12, clauses, conflict_limit=0) in (None, "unknown")


def test_grounded_models_satisfy_formula():
    texts = ["exists x. (P(x) & exists y. (R(x,y) & !P(y)))",
             "forall x y. (R(x,y) -> R(y,x)) & exists x y. (R(x,y) & !(x = y))",
             "exists x y z. (G(x,y,z) & R(x,y) & R(y,z) & R(z,x))"]
    for text in texts:
        f = parse(text)
        vocab = signature(f)
        for n in (1, 2, 3):
            g = Grounder(vocab, range(n))
            g.assert_formula(f)
            res = g.solve()
            if res is None:
                continue
            assert evaluate(Structure(vocab, range(n), res), f)
    g = Grounder(Vocabulary.of({"P": 1}), range(2))
    g.assert_formula(parse("exists x. (P(x) & true) & forall x. (P(x) -> false)"))
    assert g.solve() is None
