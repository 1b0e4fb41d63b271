"""Seeded random formulas, structures, bisimilar pairs and witnesses."""
from __future__ import annotations

import random
from itertools import product

from .ground import Grounder
from .structures import Structure, evaluate
from .syntax import (TRUE, FALSE, And, Atom, Eq, Exists, Forall, MAnd, MNot,
                     MOr, Diamond, Not, Or, Prop, Vocabulary, free_variables)

VARIABLES = ("x", "y", "z", "w", "u")


def random_vocabulary(rng: random.Random, max_symbols=3, max_arity=3) -> Vocabulary:
    n = rng.randint(1, max_symbols)
    return Vocabulary.of({f"R{i}": rng.randint(1, max_arity) for i in range(n)})


def _random_atom(rng, vocab, variables):
    s = rng.choice(list(vocab))
    return Atom(s.name, tuple(rng.choice(variables) for _ in range(s.arity)))


def random_formula(rng: random.Random, vocab: Vocabulary, depth: int = 3,
                   variables=VARIABLES[:3]) -> "Formula":
    """A guarded formula (not necessarily uniform) whose blocks always carry
    a guard covering the body's free variables."""
    variables = tuple(variables)
    if depth <= 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.1:
            return rng.choice((TRUE, FALSE))
        if r < 0.25:
            return Eq(rng.choice(variables), rng.choice(variables))
        return _random_atom(rng, vocab, variables)
    kind = rng.choice(("not", "and", "or", "exists", "forall", "exists", "forall"))
    if kind == "not":
        return Not(random_formula(rng, vocab, depth - 1, variables))
    if kind in ("and", "or"):
        l = random_formula(rng, vocab, depth - 1, variables)
        r = random_formula(rng, vocab, depth - 1, variables)
        return And(l, r) if kind == "and" else Or(l, r)
    body = random_formula(rng, vocab, depth - 1, variables)
    need = sorted(free_variables(body))
    candidates = [s for s in vocab if s.arity >= len(need)] or [max(vocab, key=lambda s: s.arity)]
    if max(s.arity for s in candidates) < len(need):
        return body
    s = rng.choice([c for c in candidates if c.arity >= len(need)])
    args = list(need) + [rng.choice(variables) for _ in range(s.arity - len(need))]
    rng.shuffle(args)
    guard = Atom(s.name, tuple(args))
    gv = sorted(guard.variables)
    bound = tuple(v for v in gv if rng.random() < 0.6) or (gv[0],)
    cls = Exists if kind == "exists" else Forall
    return cls(bound, guard, body)


def random_structure(rng: random.Random, vocab: Vocabulary, n: int,
                     density: float = 0.3, domain=None) -> Structure:
    domain = list(range(1, n + 1)) if domain is None else list(domain)
    rels = {}
    for s in vocab:
        rels[s.name] = {t for t in product(domain, repeat=s.arity) if rng.random() < density}
    return Structure(vocab, domain, rels)


def random_modal(rng: random.Random, props=("p", "q"), rels=("R",), depth=3):
    if depth <= 0 or rng.random() < 0.3:
        return Prop(rng.choice(props))
    k = rng.choice(("not", "and", "or", "dia", "dia"))
    if k == "not":
        return MNot(random_modal(rng, props, rels, depth - 1))
    if k == "and":
        return MAnd(random_modal(rng, props, rels, depth - 1), random_modal(rng, props, rels, depth - 1))
    if k == "or":
        return MOr(random_modal(rng, props, rels, depth - 1), random_modal(rng, props, rels, depth - 1))
    arity = rng.randint(1, 2)
    return Diamond(rng.choice(rels), tuple(random_modal(rng, props, rels, depth - 1)
                                          for _ in range(arity)))


def bisimilar_pair(rng: random.Random, sigma: Vocabulary, tau: Vocabulary,
                   n: int = 3, density: float = 0.3):
    """(A over sigma, B over tau) whose shared reducts are bisimilar.

    Both sides are built from one random base over the shared vocabulary:
    A is the base (optionally doubled), B a relabelled base (optionally
    doubled), and each side gets its own random private relations."""
    shared = sigma.intersection(tau)
    base = random_structure(rng, shared, n, density)

    def copy(tag, doubled):
        doms = [tag + str(e) for e in base.domain]
        rels = {s.name: {tuple(tag + str(e) for e in t) for t in base.interp(s.name)}
                for s in shared}
        if doubled:
            doms += [tag.upper() + str(e) for e in base.domain]
            for s in shared:
                rels[s.name] |= {tuple(tag.upper() + str(e) for e in t)
                                 for t in base.interp(s.name)}
        return doms, rels

    def side(voc, tag):
        doms, rels = copy(tag, rng.random() < 0.3)
        for s in voc.difference(shared):
            rels[s.name] = {t for t in product(doms, repeat=s.arity) if rng.random() < density}
        return Structure(voc, doms, rels)

    return side(sigma, "a"), side(tau, "b")


def random_model(rng: random.Random, f, max_size: int = 4, fixes: int = 3, tries: int = 20):
    """Some model of ``f`` found by fixing a few random ground atoms and
    running the solver; None if every try fails."""
    from .syntax import signature
    vocab = signature(f)
    for _ in range(tries):
        n = rng.randint(1, max_size)
        g = Grounder(vocab, range(n))
        g.assert_formula(f)
        keys = sorted(g.atom_ids, key=repr)
        for key in rng.sample(keys, min(fixes, len(keys))):
            g.fix_atom(key[0], key[1], rng.random() < 0.5)
        res = g.solve()
        if res not in (None, "unknown"):
            S = Structure(vocab, range(n), res)
            assert evaluate(S, f)
            return S
    return None
