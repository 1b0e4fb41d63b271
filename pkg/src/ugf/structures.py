"""Finite relational structures, 1-types, k-tables, live sets, model checking
and the bounded model-search oracle."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations, product
from typing import Iterator, Optional

from . import ground
from .syntax import (And, Atom, Bottom, Eq, Exists, Forall, Formula, Not, Or,
                     Top, Vocabulary, free_variables, signature)


def elem_key(e):
    """Total order on element ids (ints, strings, and tuples of those)."""
    if isinstance(e, bool):
        return (0, int(e))
    if isinstance(e, int):
        return (0, e)
    if isinstance(e, str):
        return (1, e)
    if isinstance(e, tuple):
        return (2, tuple(elem_key(x) for x in e))
    return (3, repr(e))


class Structure:
    """A finite structure: vocabulary, nonempty domain, relation tuples."""

    __slots__ = ("vocabulary", "domain", "_rels", "_hash")

    def __init__(self, vocabulary, domain, relations=None):
        vocabulary = Vocabulary.of(vocabulary)
        domain = tuple(sorted(set(domain), key=elem_key))
        if not domain:
            raise ValueError("structure domain must be nonempty")
        relations = dict(relations or {})
        unknown = set(relations) - set(vocabulary.names)
        if unknown:
            raise ValueError(f"unknown relation(s) {sorted(unknown)}")
        dom = set(domain)
        rels = {}
        for sym in vocabulary:
            tuples = frozenset(tuple(t) for t in relations.get(sym.name, ()))
            for t in tuples:
                if len(t) != sym.arity:
                    raise ValueError(f"tuple {t} has wrong arity for {sym.name}")
                if not set(t) <= dom:
                    raise ValueError(f"tuple {t} of {sym.name} leaves the domain")
            rels[sym.name] = tuples
        object.__setattr__(self, "vocabulary", vocabulary)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "_rels", rels)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("Structure is immutable")

    def interp(self, name: str) -> frozenset:
        return self._rels[name]

    def holds(self, name: str, t) -> bool:
        return tuple(t) in self._rels[name]

    @property
    def relations(self) -> dict:
        return dict(self._rels)

    def __len__(self):
        return len(self.domain)

    def __eq__(self, other):
        return (isinstance(other, Structure) and self.vocabulary == other.vocabulary
                and self.domain == other.domain and self._rels == other._rels)

    def __hash__(self):
        if self._hash is None:
            h = hash((self.vocabulary, self.domain,
                      tuple(sorted(self._rels.items()))))
            object.__setattr__(self, "_hash", h)
        return self._hash

    def __repr__(self):
        rels = ", ".join(f"{n}={sorted(ts, key=elem_key)}" for n, ts in sorted(self._rels.items()))
        return f"Structure(domain={list(self.domain)}, {rels})"

    def reduct(self, vocabulary) -> "Structure":
        vocabulary = Vocabulary.of(vocabulary)
        return Structure(vocabulary, self.domain,
                         {s.name: self._rels[s.name] for s in vocabulary})

    def expand(self, vocabulary, relations) -> "Structure":
        vocabulary = self.vocabulary.union(Vocabulary.of(vocabulary))
        rels = dict(self._rels)
        rels.update(relations)
        return Structure(vocabulary, self.domain, rels)

    def rename(self, mapping) -> "Structure":
        return Structure(self.vocabulary, [mapping[e] for e in self.domain],
                         {n: {tuple(mapping[e] for e in t) for t in ts}
                          for n, ts in self._rels.items()})

    # JSON: {"domain": [...], "relations": {"R": [[...], ...]}}

    def to_json(self) -> dict:
        def enc(e):
            return e if isinstance(e, (int, str)) else _pair_name(e)
        return {
            "domain": [enc(e) for e in self.domain],
            "relations": {n: sorted([[enc(e) for e in t] for t in ts], key=str)
                          for n, ts in sorted(self._rels.items())},
        }

    @classmethod
    def from_json(cls, data, vocabulary=None) -> "Structure":
        rels = {n: [tuple(t) for t in ts] for n, ts in data.get("relations", {}).items()}
        if vocabulary is None:
            arities = {}
            for n, ts in rels.items():
                lens = {len(t) for t in ts}
                if len(lens) > 1:
                    raise ValueError(f"relation {n} has tuples of mixed arity")
                if not lens:
                    lens = {data.get("arities", {}).get(n, 0)}
                arities[n] = lens.pop()
            arities.update(data.get("arities", {}))
            vocabulary = Vocabulary.of(arities)
        return cls(vocabulary, data["domain"], rels)


def _pair_name(e):
    if isinstance(e, tuple):
        return "(" + ",".join(str(_pair_name(x)) for x in e) + ")"
    return str(e)


def load_structure(path, vocabulary=None) -> Structure:
    with open(path, encoding="utf-8") as fh:
        return Structure.from_json(json.load(fh), vocabulary)


# -------------------------------------------------------------- types

@dataclass(frozen=True)
class OneType:
    """1-type over ``vocabulary``; ``positive`` holds the symbols R with
    R(x,...,x) true, every other symbol is negated."""
    vocabulary: Vocabulary
    positive: frozenset

    def __contains__(self, name):
        return name in self.positive

    def sort_key(self):
        return tuple(n in self.positive for n in self.vocabulary.names)

    def bitmap(self) -> str:
        return "".join("1" if n in self.positive else "0" for n in self.vocabulary.names)

    @classmethod
    def from_bitmap(cls, vocabulary, bits: str) -> "OneType":
        names = vocabulary.names
        if len(bits) != len(names):
            raise ValueError("bitmap length does not match vocabulary")
        return cls(vocabulary, frozenset(n for n, b in zip(names, bits) if b == "1"))

    def __repr__(self):
        return "{" + ", ".join(n if n in self.positive else "!" + n
                               for n in self.vocabulary.names) + "}"


@dataclass(frozen=True)
class KTable:
    """k-table: positive atoms using all k variables, plus the k 1-types.

    ``rho`` holds pairs ``(R, mu)`` meaning R(x_mu(1), ..., x_mu(n)) with
    ``mu`` onto ``range(k)``."""
    k: int
    rho: frozenset
    types: tuple


def _sigma(S: Structure, sigma) -> Vocabulary:
    return S.vocabulary if sigma is None else Vocabulary.of(sigma)


def one_type(S: Structure, a, sigma=None) -> OneType:
    if a not in set(S.domain):
        raise KeyError(f"unknown element {a!r}")
    sigma = _sigma(S, sigma)
    return OneType(sigma, frozenset(
        s.name for s in sigma if S.holds(s.name, (a,) * s.arity)))


@lru_cache(maxsize=None)
def surjections(n: int, k: int) -> tuple:
    """All maps [n] -> [k] (as index tuples) that are onto."""
    full = set(range(k))
    return tuple(mu for mu in product(range(k), repeat=n) if set(mu) == full)


def k_table(S: Structure, t, sigma=None) -> KTable:
    t = tuple(t)
    if len(set(t)) != len(t):
        raise ValueError("k_table needs pairwise distinct elements")
    sigma = _sigma(S, sigma)
    k = len(t)
    rho = set()
    for s in sigma:
        if s.arity < k:
            continue
        rel = S.interp(s.name)
        for mu in surjections(s.arity, k):
            if tuple(t[i] for i in mu) in rel:
                rho.add((s.name, mu))
    return KTable(k, frozenset(rho), tuple(one_type(S, a, sigma) for a in t))


def compress(t) -> tuple:
    """Split a tuple into its distinct elements (first-occurrence order) and
    the surjection mapping positions to them."""
    distinct = []
    for e in t:
        if e not in distinct:
            distinct.append(e)
    return tuple(distinct), tuple(distinct.index(e) for e in t)


def expand_atom(S: Structure, name: str, t) -> bool:
    t = tuple(t)
    if len(t) != S.vocabulary.arity(name):
        raise ValueError(f"arity mismatch for {name}")
    return t in S.interp(name)


def atom_from_table(table: KTable, name: str, mu) -> bool:
    """Truth of R(x_mu) read off a k-table (mu onto range(k))."""
    if table.k == 1:
        return name in table.types[0]
    return (name, tuple(mu)) in table.rho


def live_sets(S: Structure, sigma=None) -> frozenset:
    sigma = _sigma(S, sigma)
    out = {frozenset((a,)) for a in S.domain}
    for s in sigma:
        for t in S.interp(s.name):
            out.add(frozenset(t))
    return frozenset(out)


def is_live(S: Structure, X, sigma=None) -> bool:
    X = frozenset(X)
    if len(X) <= 1:
        return True
    return any(frozenset(t) == X for s in _sigma(S, sigma) for t in S.interp(s.name))


def restrict(S: Structure, C) -> Structure:
    C = set(C)
    if not C:
        raise ValueError("cannot restrict to the empty set")
    if not C <= set(S.domain):
        raise ValueError("restriction set leaves the domain")
    return Structure(S.vocabulary, C, {n: {t for t in ts if set(t) <= C}
                                       for n, ts in S.relations.items()})


# ------------------------------------------------------------- evaluation

class UnboundVariable(KeyError):
    pass


def evaluate(S: Structure, f: Formula, asg=None) -> bool:
    asg = dict(asg or {})
    missing = free_variables(f) - set(asg)
    if missing:
        raise UnboundVariable(f"unbound variable(s) {sorted(missing)}")
    return _eval(S, f, asg)


def guard_matches(S: Structure, guard: Atom, bound, asg) -> Iterator[dict]:
    """Extensions of ``asg`` to ``bound`` making ``guard`` true."""
    bound = set(bound)
    for t in S.interp(guard.pred):
        new = {}
        for var, val in zip(guard.args, t):
            if var in bound:
                if new.setdefault(var, val) != val:
                    break
            elif asg[var] != val:
                break
        else:
            out = dict(asg)
            out.update(new)
            yield out


def _assignments(S, f, asg):
    if f.guard is not None and set(f.bound) <= f.guard.variables:
        yield from guard_matches(S, f.guard, f.bound, asg)
        return
    for values in product(S.domain, repeat=len(f.bound)):
        inner = dict(asg)
        inner.update(zip(f.bound, values))
        if f.guard is None or _eval(S, f.guard, inner):
            yield inner


def _eval(S, f, asg) -> bool:
    if isinstance(f, Atom):
        return tuple(asg[v] for v in f.args) in S.interp(f.pred)
    if isinstance(f, Eq):
        return asg[f.left] == asg[f.right]
    if isinstance(f, Top):
        return True
    if isinstance(f, Bottom):
        return False
    if isinstance(f, Not):
        return not _eval(S, f.sub, asg)
    if isinstance(f, And):
        return _eval(S, f.left, asg) and _eval(S, f.right, asg)
    if isinstance(f, Or):
        return _eval(S, f.left, asg) or _eval(S, f.right, asg)
    if isinstance(f, Exists):
        return any(_eval(S, f.body, a) for a in _assignments(S, f, asg))
    if isinstance(f, Forall):
        return all(_eval(S, f.body, a) for a in _assignments(S, f, asg))
    raise TypeError(f"not a formula: {f!r}")


# ------------------------------------------------------------ enumeration

def _tuple_slots(vocabulary: Vocabulary, k: int) -> list:
    dom = range(1, k + 1)
    return [(s.name, t) for s in vocabulary for t in product(dom, repeat=s.arity)]


def _decode(vocabulary, k, slots, mask) -> Structure:
    rels = {s.name: set() for s in vocabulary}
    for i, (name, t) in enumerate(slots):
        if mask >> i & 1:
            rels[name].add(t)
    return Structure(vocabulary, range(1, k + 1), rels)


def enumerate_structures(vocabulary, n: int, canonical: bool = True) -> Iterator[Structure]:
    """Every structure on domains {1..k}, k <= n, ordered by size then
    encoding.  With ``canonical`` only the isomorphism-class member with the
    lexicographically least encoding is produced."""
    vocabulary = Vocabulary.of(vocabulary)
    if n < 1:
        raise ValueError("n must be >= 1")
    for k in range(1, n + 1):
        slots = _tuple_slots(vocabulary, k)
        index = {s: i for i, s in enumerate(slots)}
        perms = []
        if canonical:
            for p in permutations(range(1, k + 1)):
                if p == tuple(range(1, k + 1)):
                    continue
                perms.append([index[(name, tuple(p[e - 1] for e in t))]
                              for name, t in slots])
        nbits = len(slots)
        for mask in range(1 << nbits):
            if canonical and not _is_least(mask, perms, nbits):
                continue
            yield _decode(vocabulary, k, slots, mask)


def _is_least(mask, perms, nbits) -> bool:
    # encoding reads slot 0 as the most significant position
    for target in perms:
        other = 0
        for i in range(nbits):
            if mask >> i & 1:
                other |= 1 << target[i]
        for i in range(nbits):
            a, b = mask >> i & 1, other >> i & 1
            if a != b:
                if b > a:
                    return False
                break
    return True


def isomorphic(A: Structure, B: Structure) -> bool:
    if A.vocabulary != B.vocabulary or len(A) != len(B):
        return False
    for image in permutations(B.domain):
        m = dict(zip(A.domain, image))
        if all({tuple(m[e] for e in t) for t in A.interp(n)} == B.interp(n)
               for n in A.vocabulary.names):
            return True
    return False


# ------------------------------------------------------------ model search

def brute_force_sat(f: Formula, n: int, vocabulary=None, method: str = "ground",
                    conflict_limit=None) -> Optional[Structure]:
    """Some model of ``f`` with at most ``n`` elements, or None.

    ``method="ground"`` runs the complete CDCL search over each domain size;
    ``method="enumerate"`` walks :func:`enumerate_structures` and is only
    practical for tiny vocabularies.  Both results are re-checked with
    :func:`evaluate`.
    """
    if free_variables(f):
        raise ValueError("brute_force_sat needs a sentence")
    vocabulary = signature(f) if vocabulary is None else \
        Vocabulary.of(vocabulary).union(signature(f))
    if method == "enumerate":
        for S in enumerate_structures(vocabulary, n):
            if evaluate(S, f):
                return S
        return None
    for k in range(1, n + 1):
        g = ground.Grounder(vocabulary, range(1, k + 1))
        g.assert_formula(f)
        res = g.solve(conflict_limit)
        if res == "unknown":
            raise TimeoutError("model search hit its conflict limit")
        if res is not None:
            S = Structure(vocabulary, range(1, k + 1), res)
            assert evaluate(S, f), "ground search returned a non-model"
            return S
    return None
