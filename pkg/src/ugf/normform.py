"""Normal form for uniform guarded sentences.

A normal-form sentence is a conjunction of

* seeds            ``exists z. (L(z) & true)`` with L unary,
* existential reqs ``forall xs. (A(xs) -> exists ys. (B(xs,ys) & body))``
  (``ys`` may be empty, written as a quantifier-free body or an empty block),
* universal reqs   ``forall xs. (K(xs) -> (!theta | forall ys. (G(xs,ys) -> body)))``

with quantifier-free ``body``/``theta``.  :func:`to_normal_form` produces
one sentence per consistent guess of the truth values of sentence
subformulas; the input is satisfiable iff some branch is (and a model of a
branch reducts to a model of the input).

Size: every branch is at most ``SIZE_FACTOR * size(f) ** 2`` symbols as
measured by :func:`ugf.syntax.size`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .syntax import (FALSE, TRUE, And, Atom, Bottom, Eq, Exists, Forall,
                     Formula, Not, Or, RelationSymbol, Top, Vocabulary,
                     classify, conjunction, conjuncts, free_variables,
                     is_sentence, quantifier_free, signature, size)

SIZE_FACTOR = 12


class NormalFormError(ValueError):
    pass


@dataclass(frozen=True)
class ExistentialReq:
    xs: tuple
    alpha: Atom
    ys: tuple
    beta: Atom
    body: Formula

    def formula(self) -> Formula:
        if not self.ys and self.beta == self.alpha:
            return Forall(self.xs, self.alpha, Exists((), self.alpha, self.body))
        return Forall(self.xs, self.alpha, Exists(self.ys, self.beta, self.body))


@dataclass(frozen=True)
class UniversalReq:
    xs: tuple
    kappa: Atom
    theta: Formula
    ys: tuple
    gamma: Atom
    body: Formula

    def formula(self) -> Formula:
        return Forall(self.xs, self.kappa,
                      Or(Not(self.theta), Forall(self.ys, self.gamma, self.body)))


@dataclass
class NormalFormSentence:
    seeds: list
    existential: list
    universal: list
    vocabulary: Vocabulary = None

    def formula(self) -> Formula:
        parts = [Exists(("z",), Atom(s.pred, ("z",)), TRUE) for s in self.seeds]
        parts += [r.formula() for r in self.existential]
        parts += [r.formula() for r in self.universal]
        return conjunction(parts)


@dataclass
class NormalFormBranch:
    guesses: list
    result: NormalFormSentence
    fresh_symbols: list = field(default_factory=list)

    @property
    def formula(self) -> Formula:
        return self.result.formula()

    @property
    def vocabulary(self) -> Vocabulary:
        return self.result.vocabulary


# ------------------------------------------------------------ recognition

def _guard_vars_in_order(a: Atom) -> tuple:
    out = []
    for v in a.args:
        if v not in out:
            out.append(v)
    return tuple(out)


def _as_seed(f):
    if (isinstance(f, Exists) and len(f.bound) == 1 and isinstance(f.guard, Atom)
            and f.guard.args == f.bound and isinstance(f.body, Top)):
        return f.guard
    return None


def _as_existential(f):
    if not (isinstance(f, Forall) and isinstance(f.guard, Atom) and f.bound
            and set(f.bound) == f.guard.variables):
        return None
    inner = f.body
    if quantifier_free(inner) and free_variables(inner) <= set(f.bound):
        return ExistentialReq(f.bound, f.guard, (), f.guard, inner)
    if (isinstance(inner, Exists) and isinstance(inner.guard, Atom)
            and quantifier_free(inner.body)
            and set(f.bound) <= inner.guard.variables
            and set(inner.bound) <= inner.guard.variables
            and inner.guard.variables <= set(f.bound) | set(inner.bound)
            and free_variables(inner.body) <= inner.guard.variables):
        return ExistentialReq(f.bound, f.guard, inner.bound, inner.guard, inner.body)
    return None


def _as_universal(f):
    if not (isinstance(f, Forall) and isinstance(f.guard, Atom) and f.bound
            and set(f.bound) == f.guard.variables):
        return None
    inner = f.body
    if not (isinstance(inner, Or) and isinstance(inner.left, Not)):
        return None
    theta, rest = inner.left.sub, inner.right
    if not (quantifier_free(theta) and free_variables(theta) <= set(f.bound)):
        return None
    if not (isinstance(rest, Forall) and isinstance(rest.guard, Atom)
            and quantifier_free(rest.body)
            and set(rest.bound) <= rest.guard.variables
            and rest.guard.variables <= set(f.bound) | set(rest.bound)
            and free_variables(rest.body) <= rest.guard.variables):
        return None
    return UniversalReq(f.bound, f.guard, theta, rest.bound, rest.guard, rest.body)


def is_normal_form(f: Formula) -> Optional[NormalFormSentence]:
    if not is_sentence(f):
        return None
    seeds, ex, un = [], [], []
    for part in conjuncts(f):
        s = _as_seed(part)
        if s is not None:
            seeds.append(s)
            continue
        e = _as_existential(part)
        if e is not None:
            ex.append(e)
            continue
        u = _as_universal(part)
        if u is not None:
            un.append(u)
            continue
        return None
    if not (seeds and ex and un):
        return None
    return NormalFormSentence(seeds, ex, un, signature(f))


def requirements(nf: NormalFormSentence) -> tuple:
    return list(nf.existential), list(nf.universal)


# ------------------------------------------------------------- conversion

def existential_only(f: Formula) -> Formula:
    """Rewrite universal blocks as negated existential ones."""
    if isinstance(f, Not):
        return Not(existential_only(f.sub))
    if isinstance(f, And):
        return And(existential_only(f.left), existential_only(f.right))
    if isinstance(f, Or):
        return Or(existential_only(f.left), existential_only(f.right))
    if isinstance(f, Exists):
        return Exists(f.bound, f.guard, existential_only(f.body))
    if isinstance(f, Forall):
        return Not(Exists(f.bound, f.guard, Not(existential_only(f.body))))
    return f


def _innermost(f, enclosing=None, path=()):
    """Leftmost innermost existential block: (path, block, enclosing guard)."""
    if isinstance(f, Not):
        return _innermost(f.sub, enclosing, path + ("sub",))
    if isinstance(f, (And, Or)):
        found = _innermost(f.left, enclosing, path + ("left",))
        if found is None:
            found = _innermost(f.right, enclosing, path + ("right",))
        return found
    if isinstance(f, Exists):
        found = _innermost(f.body, f.guard, path + ("body",))
        return found if found is not None else (path, f, enclosing)
    return None


def _replace(f, path, new):
    if not path:
        return new
    head, rest = path[0], path[1:]
    if isinstance(f, Not):
        return Not(_replace(f.sub, rest, new))
    if isinstance(f, And):
        return And(_replace(f.left, rest, new), f.right) if head == "left" \
            else And(f.left, _replace(f.right, rest, new))
    if isinstance(f, Or):
        return Or(_replace(f.left, rest, new), f.right) if head == "left" \
            else Or(f.left, _replace(f.right, rest, new))
    if isinstance(f, Exists):
        return Exists(f.bound, f.guard, _replace(f.body, rest, new))
    raise AssertionError("bad path")


def _neg(f: Formula) -> Formula:
    return f.sub if isinstance(f, Not) else Not(f)


def simplify(f: Formula) -> Formula:
    """Constant folding for TRUE/FALSE."""
    if isinstance(f, Not):
        s = simplify(f.sub)
        if isinstance(s, Top):
            return FALSE
        if isinstance(s, Bottom):
            return TRUE
        return Not(s)
    if isinstance(f, And):
        l, r = simplify(f.left), simplify(f.right)
        if isinstance(l, Bottom) or isinstance(r, Bottom):
            return FALSE
        if isinstance(l, Top):
            return r
        if isinstance(r, Top):
            return l
        return And(l, r)
    if isinstance(f, Or):
        l, r = simplify(f.left), simplify(f.right)
        if isinstance(l, Top) or isinstance(r, Top):
            return TRUE
        if isinstance(l, Bottom):
            return r
        if isinstance(r, Bottom):
            return l
        return Or(l, r)
    if isinstance(f, Exists):
        return Exists(f.bound, f.guard, simplify(f.body))
    if isinstance(f, Forall):
        return Forall(f.bound, f.guard, simplify(f.body))
    return f


class _Symbols:
    """Fresh relation names, skipping any already in use."""

    def __init__(self, taken):
        self.taken = set(taken)
        self.next = {"_NF": 0, "_L": 0}
        self.fresh = []

    def _make(self, prefix, arity):
        while True:
            name = f"{prefix}{self.next[prefix]}"
            self.next[prefix] += 1
            if name not in self.taken:
                self.taken.add(name)
                sym = RelationSymbol(name, arity)
                self.fresh.append(sym)
                return sym

    def relation(self, arity):
        return self._make("_NF", arity)

    def unary(self):
        return self._make("_L", 1)

    def copy(self) -> "_Symbols":
        new = _Symbols(self.taken)
        new.next = dict(self.next)
        new.fresh = list(self.fresh)
        return new


def to_normal_form(f: Formula, max_branches: int = 1 << 12,
                   require_uniform: bool = True) -> list:
    """All live branches, in guess order (false before true).

    ``require_uniform=False`` runs the same rewriting on guarded input
    outside the uniform fragment; the results then need not be uniform."""
    if not is_sentence(f):
        raise NormalFormError("input must be a sentence")
    report = classify(f)
    if not report.guarded:
        raise NormalFormError("input is not guarded")
    if require_uniform and not report.uniform:
        raise NormalFormError("input is not uniform")
    vocab = signature(f)
    out = []
    stack = [(existential_only(f), [], [], [], [], _Symbols(vocab.names))]
    # each state: main formula, guesses, top sentences, existential, universal, symbols
    while stack:
        main, guesses, tops, ex, un, syms = stack.pop()
        found = _innermost(main)
        if found is None:
            if isinstance(simplify(main), Bottom):
                continue
            out.append(_finish(tops, ex, un, guesses, syms, vocab))
            if len(out) > max_branches:
                raise NormalFormError("too many branches")
            continue
        path, block, enclosing = found
        if is_sentence(block):
            xs = _guard_vars_in_order(block.guard)
            neg = UniversalReq(xs, block.guard, TRUE, (), block.guard, _neg(block.body))
            branches = [
                (FALSE, False, tops, un + [neg]),
                (TRUE, True, tops + [block], un),
            ]
            for const, value, t2, u2 in reversed(branches):
                stack.append((_replace(main, path, const), guesses + [(block, value)],
                              t2, list(ex), u2, syms.copy()))
            continue
        xs = tuple(v for v in _guard_vars_in_order(block.guard)
                   if v in free_variables(block))
        if enclosing is None:
            raise NormalFormError("open block outside any guard")
        sym = syms.relation(len(xs))
        r = Atom(sym.name, xs)
        ex2 = ex + [ExistentialReq(xs, r, block.bound, block.guard, block.body)]
        xs_outer = _guard_vars_in_order(enclosing)
        un2 = un + [UniversalReq(xs_outer, enclosing, Not(r), block.bound, block.guard,
                                 _neg(block.body))]
        stack.append((_replace(main, path, r), guesses, tops, ex2, un2, syms))
    return out


def _finish(tops, ex, un, guesses, syms, vocab) -> NormalFormBranch:
    seeds = []
    ex = list(ex)
    un = list(un)
    for block in tops:
        lam = syms.unary()
        first = block.guard.args[0]
        seeds.append(Atom(lam.name, ("z",)))
        rest = tuple(v for v in block.bound if v != first)
        ex.append(ExistentialReq((first,), Atom(lam.name, (first,)), rest, block.guard,
                                 block.body))
    if not seeds:
        lam = syms.unary()
        seeds.append(Atom(lam.name, ("z",)))
    lam_name = seeds[0].pred
    x = Atom(lam_name, ("x",))
    if not ex:
        ex.append(ExistentialReq(("x",), x, (), x, TRUE))
    if not un:
        un.append(UniversalReq(("x",), x, TRUE, (), x, TRUE))
    fresh = list(syms.fresh)
    voc = vocab.union(Vocabulary(frozenset(fresh)))
    nf = NormalFormSentence(seeds, ex, un, voc)
    return NormalFormBranch(list(guesses), nf, fresh)


def size_bound(f: Formula) -> int:
    return SIZE_FACTOR * size(f) ** 2
