import json
import random
from itertools import product

import pytest

from ugf.generators import random_formula, random_structure
from ugf.structures import (Structure, brute_force_sat, compress,
                            enumerate_structures, evaluate, expand_atom,
                            isomorphic, k_table, atom_from_table, live_sets,
                            load_structure, one_type, restrict, surjections,
                            UnboundVariable)
from ugf.syntax import (TRUE, Atom, Exists, Forall, Not, Vocabulary,
                        free_variables, parse)

PR = Vocabulary.of({"P": 1, "R": 2})
PHI = parse("exists x y z. (G(x,y,z) & R(x,y) & R(y,z) & R(z,x))")
PSI = parse("forall x y. (R(x,y) -> ((A(x) -> !A(y)) & (!A(y) -> A(x))))")


def triangle(a_set=()):
    return Structure({"G": 3, "R": 2, "A": 1}, [1, 2, 3],
                     {"G": {(1, 2, 3)}, "R": {(1, 2), (2, 3), (3, 1)},
                      "A": {(a,) for a in a_set}})


def test_structure_invariants():
    with pytest.raises(ValueError):
        Structure(PR, [], {})
    with pytest.raises(ValueError):
        Structure(PR, [1], {"R": {(1, 2)}})
    with pytest.raises(ValueError):
        Structure(PR, [1], {"R": {(1,)}})
    with pytest.raises(ValueError):
        Structure(PR, [1], {"Q": {(1,)}})


def test_json_round_trip_and_load_errors(tmp_path):
    S = triangle([1])
    assert Structure.from_json(json.loads(json.dumps(S.to_json()))) == S
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"domain": ["a", "b"], "relations": {"R": [["a", "b"]], "P": [["a"]]}}))
    T = load_structure(p)
    assert T.holds("R", ("a", "b")) and T.vocabulary.as_dict() == {"P": 1, "R": 2}
    p.write_text(json.dumps({"domain": ["a"], "relations": {"R": [["a", "a"]]}}))
    with pytest.raises(ValueError):
        load_structure(p, Vocabulary.of({"P": 1}))
    p.write_text(json.dumps({"domain": ["a"], "relations": {"R": [["a", "a"], ["a"]]}}))
    with pytest.raises(ValueError):
        load_structure(p)


def test_one_type():
    S = Structure(PR, ["a", "b"], {"P": {("a",)}})
    assert one_type(S, "a").positive == {"P"}
    assert one_type(S, "b").positive == frozenset()
    assert one_type(S, "a").bitmap() == "10"
    with pytest.raises(KeyError):
        one_type(S, "c")


def test_one_type_survives_restriction():
    rng = random.Random(1)
    for _ in range(50):
        S = random_structure(rng, PR, 4, 0.4)
        C = set(rng.sample(list(S.domain), rng.randint(1, 4)))
        T = restrict(S, C)
        assert all(one_type(T, a) == one_type(S, a) for a in C)


def test_k_table():
    S = Structure(PR, ["a", "b"], {"R": {("a", "b")}})
    t = k_table(S, ("a", "b"))
    assert ("R", (0, 1)) in t.rho and ("R", (1, 0)) not in t.rho
    U = Structure({"P": 1}, ["a", "b"], {"P": {("a",)}})
    assert k_table(U, ("a", "b")).rho == frozenset()
    with pytest.raises(ValueError):
        k_table(S, ("a", "a"))


def test_equal_tables_agree_on_uniform_quantifier_free_formulas():
    # boolean combinations of full atoms and equalities over the k variables
    sigma = Vocabulary.of({"P": 1, "R": 2})
    structures = list(enumerate_structures(sigma, 3))
    for k in (1, 2, 3):
        xs = tuple(f"v{i}" for i in range(k))
        atoms = [Atom(s.name, tuple(xs[i] for i in mu)) for s in sigma
                 for mu in product(range(k), repeat=s.arity) if len(set(mu)) == k]
        by_table = {}
        for S in structures:
            for t in product(sorted(S.domain), repeat=k):
                if len(set(t)) != k:
                    continue
                values = tuple(evaluate(S, a, dict(zip(xs, t))) for a in atoms)
                by_table.setdefault(k_table(S, t), set()).add(values)
        assert all(len(v) == 1 for v in by_table.values())


def test_expand_atom_matches_table_reconstruction():
    rng = random.Random(4)
    sigma = Vocabulary.of({"P": 1, "R": 2, "S": 3})
    assert expand_atom(Structure(PR, ["a"], {"R": {("a", "a")}}), "R", ("a", "a"))
    assert not expand_atom(Structure(PR, ["a", "b"], {"R": {("a", "b")}}), "R", ("a", "a"))
    with pytest.raises(ValueError):
        expand_atom(Structure(PR, ["a"], {}), "R", ("a",))
    for _ in range(20):
        S = random_structure(rng, sigma, 3, 0.4)
        for s in sigma:
            for t in product(S.domain, repeat=s.arity):
                distinct, mu = compress(t)
                assert atom_from_table(k_table(S, distinct), s.name, mu) == expand_atom(S, s.name, t)


def test_surjections():
    assert sorted(surjections(3, 2)) == sorted(
        mu for mu in product(range(2), repeat=3) if set(mu) == {0, 1})


def test_live_sets():
    S = Structure(PR, ["a", "b"], {"R": {("a", "b")}})
    assert live_sets(S) == {frozenset("a"), frozenset("b"), frozenset("ab")}
    assert live_sets(Structure(PR, ["a", "b"], {})) == {frozenset("a"), frozenset("b")}
    T = Structure({"S": 3}, ["a", "b"], {"S": {("a", "b", "a")}})
    assert live_sets(T) == {frozenset("a"), frozenset("b"), frozenset("ab")}


def test_live_sets_against_double_loop():
    rng = random.Random(6)
    sigma = Vocabulary.of({"R": 2, "S": 3})
    for _ in range(30):
        S = random_structure(rng, sigma, 4, 0.15)
        expected = set()
        dom = list(S.domain)
        for mask in range(1, 1 << len(dom)):
            X = frozenset(d for i, d in enumerate(dom) if mask >> i & 1)
            if len(X) <= 1 or any(frozenset(t) == X for s in sigma for t in S.interp(s.name)):
                expected.add(X)
        assert live_sets(S) == expected


def test_restrict():
    rng = random.Random(2)
    S = Structure(PR, ["a", "b"], {"R": {("a", "a"), ("a", "b")}, "P": {("b",)}})
    assert restrict(S, S.domain) == S
    assert restrict(S, {"a"}).relations == {"P": frozenset(), "R": frozenset({("a", "a")})}
    with pytest.raises(ValueError):
        restrict(S, set())
    for _ in range(20):
        T = random_structure(rng, PR, 4, 0.4)
        C = set(rng.sample(list(T.domain), 2))
        assert restrict(restrict(T, C), C) == restrict(T, C)


def test_evaluate_examples():
    f = parse("exists x. (P(x) & true)")
    assert evaluate(Structure(PR, [1], {"P": {(1,)}}), f)
    assert not evaluate(Structure(PR, [1], {}), f)
    assert evaluate(triangle(), PHI)
    assert not evaluate(triangle([1]), PSI)
    with pytest.raises(UnboundVariable):
        evaluate(triangle(), parse("R(x,y)"), {"x": 1})


def test_forall_equals_its_desugaring():
    rng = random.Random(7)
    sigma = Vocabulary.of({"P": 1, "R": 2})
    for _ in range(200):
        body = random_formula(rng, sigma, 1, ("x", "y"))
        g = Forall(("y",), Atom("R", ("x", "y")), body)
        h = Not(Exists(("y",), Atom("R", ("x", "y")), Not(body)))
        S = random_structure(rng, sigma, 3, 0.4)
        for a in S.domain:
            assert evaluate(S, g, {"x": a}) == evaluate(S, h, {"x": a})


def test_enumeration_counts():
    assert len(list(enumerate_structures({"P": 1}, 1))) == 2
    assert len(list(enumerate_structures({"R": 2}, 1))) == 2
    assert len(list(enumerate_structures(PR, 2, canonical=False))) == 68
    assert len(list(enumerate_structures(PR, 2))) == 40
    assert len(list(enumerate_structures(PR, 3))) == 792


def test_canonical_enumeration_has_one_member_per_class():
    raw = list(enumerate_structures(PR, 2, canonical=False))
    reps = list(enumerate_structures(PR, 2))
    for S in raw:
        assert sum(isomorphic(S, T) for T in reps) == 1
    assert list(enumerate_structures(PR, 2)) == reps  # deterministic


def test_brute_force_sat():
    m = brute_force_sat(parse("exists x. (P(x) & true)"), 3)
    assert len(m) == 1
    m = brute_force_sat(PHI, 3)
    assert m is not None and len(m) == 1 and evaluate(m, PHI)
    both = parse("(" + "exists x y z. (G(x,y,z) & R(x,y) & R(y,z) & R(z,x))) & "
                 "forall x y. (R(x,y) -> ((A(x) -> !A(y)) & (!A(y) -> A(x))))")
    assert brute_force_sat(both, 6) is None
    with pytest.raises(ValueError):
        brute_force_sat(parse("P(x)"), 2)


def test_brute_force_methods_agree():
    rng = random.Random(12)
    sigma = Vocabulary.of({"P": 1, "R": 2})
    for _ in range(40):
        f = random_formula(rng, sigma, 3, ("x", "y"))
        if free_variables(f):
            continue
        a = brute_force_sat(f, 2)
        b = brute_force_sat(f, 2, method="enumerate")
        assert (a is None) == (b is None)
        if a is not None:
            assert evaluate(a, f) and evaluate(b, f)
    assert brute_force_sat(TRUE, 1) is not None
