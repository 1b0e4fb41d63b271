"""Depth-bounded equivalence for uniform one-dimensional guarded formulas.

Every block of such a formula leaves at most one variable free, so the
depth-k theory of an element is determined by its depth-(k-1) theory plus,
for each guard shape and each choice of the free position, the set of
realised *descriptors*: equality pattern of the guard tuple, the atoms
using exactly the guard's variables, and the depth-(k-1) types of its
elements.  Types are interned to ints shared across all structures of one
:class:`TypeOracle`, so equality of ids across structures is meaningful.

Distinguishing formulas are read back from the first difference found.
"""
from __future__ import annotations

from collections import defaultdict
from functools import lru_cache
from itertools import count, product
from typing import Optional

from .structures import Structure
from .syntax import (TRUE, And, Atom, Eq, Exists, Not, Vocabulary,
                     conjunction)


@lru_cache(maxsize=None)
def growth_patterns(n: int) -> tuple:
    """Restricted growth strings of length n (set partitions of positions)."""
    out = []

    def go(prefix, top):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for v in range(top + 2):
            go(prefix + [v], max(top, v))
    go([], -1)
    return tuple(out)


def equality_pattern(t) -> tuple:
    seen = {}
    return tuple(seen.setdefault(e, len(seen)) for e in t)


def _all_maps(arity, m):
    return product(range(m), repeat=arity)


class TypeOracle:
    """Interned depth-k types for every element of a list of structures."""

    def __init__(self, structures, sigma, depth: int):
        self.structures = list(structures)
        self.sigma = Vocabulary.of(sigma)
        self.depth = depth
        self._ids = {}
        self.shapes = []           # (name, pattern) guard shapes
        for s in self.sigma:
            for pat in growth_patterns(s.arity):
                self.shapes.append((s.name, pat))
        self._matches = []         # per structure: shape -> list of assignments
        self._static = []          # per structure: assignment -> (eq, atoms)
        for S in self.structures:
            by_shape = {}
            static = {}
            for name, pat in self.shapes:
                found = set()
                for t in S.interp(name):
                    asg = {}
                    if all(asg.setdefault(v, e) == e for v, e in zip(pat, t)):
                        found.add(tuple(asg[v] for v in range(len(asg))))
                by_shape[(name, pat)] = sorted(found, key=repr)
                for s_ in found:
                    if s_ not in static:
                        static[s_] = (equality_pattern(s_), self.full_atoms(S, s_, onto=True))
            self._matches.append(by_shape)
            self._static.append(static)
        self.utypes = []           # utypes[k][i][a]
        self.sentences = []        # sentences[k][i]
        base = []
        for S in self.structures:
            base.append({a: self._intern(("t", frozenset(
                s.name for s in self.sigma if S.holds(s.name, (a,) * s.arity))))
                for a in S.domain})
        self.utypes.append(base)
        self.sentences.append([self._intern(("s",))] * len(self.structures))
        for k in range(1, depth + 1):
            self._next_level(k)

    def _intern(self, key) -> int:
        return self._ids.setdefault(key, len(self._ids))

    def full_atoms(self, S, t, onto=True) -> frozenset:
        """Atoms R(t_mu) true in S; with ``onto`` only maps using every position."""
        m = len(t)
        out = set()
        for s in self.sigma:
            rel = S.interp(s.name)
            for mu in _all_maps(s.arity, m):
                if onto and len(set(mu)) != m:
                    continue
                if tuple(t[i] for i in mu) in rel:
                    out.add((s.name, mu))
        return frozenset(out)

    def descriptor(self, i, asg, k):
        eq, atoms = self._static[i][asg]
        ut = self.utypes[k][i]
        return (eq, atoms, tuple(ut[e] for e in asg))

    def descriptors(self, i, shape, k, free=None, elem=None) -> dict:
        """descriptor -> example assignment, over guard matches of ``shape``
        whose position ``free`` holds ``elem`` (all matches if free is None)."""
        out = {}
        for asg in self._matches[i][shape]:
            if free is not None and asg[free] != elem:
                continue
            out.setdefault(self.descriptor(i, asg, k), asg)
        return out

    def _next_level(self, k):
        prev = self.utypes[k - 1]
        level, sents = [], []
        for i, S in enumerate(self.structures):
            acc = defaultdict(lambda: defaultdict(set))
            whole = defaultdict(set)
            for shape in self.shapes:
                for asg in self._matches[i][shape]:
                    d = self.descriptor(i, asg, k - 1)
                    whole[shape].add(d)
                    for f, e in enumerate(asg):
                        acc[e][(shape, f)].add(d)
            keys = [(shape, f) for shape in self.shapes for f in range(max(shape[1]) + 1)]
            level.append({a: self._intern((prev[i][a], tuple(
                frozenset(acc[a][key]) for key in keys))) for a in S.domain})
            sents.append(self._intern((self.sentences[k - 1][i], tuple(
                frozenset(whole[shape]) for shape in self.shapes))))
        self.utypes.append(level)
        self.sentences.append(sents)

    # ------------------------------------------------------------ queries

    def tuple_equivalent(self, i, c, j, d, k) -> bool:
        c, d = tuple(c), tuple(d)
        if len(c) != len(d):
            raise ValueError("tuples have different lengths")
        if self.sentences[k][i] != self.sentences[k][j]:
            return False
        if equality_pattern(c) != equality_pattern(d):
            return False
        if self.full_atoms(self.structures[i], c, onto=False) != \
                self.full_atoms(self.structures[j], d, onto=False):
            return False
        return all(self.utypes[k][i][a] == self.utypes[k][j][b] for a, b in zip(c, d))


class _Namer:
    def __init__(self, taken=()):
        self.taken = set(taken)
        self.counter = count(1)

    def fresh(self):
        while True:
            name = f"y{next(self.counter)}"
            if name not in self.taken:
                self.taken.add(name)
                return name


class _Builder:
    """Builds formulas separating elements / structures of one oracle."""

    def __init__(self, oracle: TypeOracle, namer: _Namer):
        self.o = oracle
        self.namer = namer

    def unary(self, i, a, j, b, k, var):
        """Formula in ``var`` true at a (structure i), false at b (structure j)."""
        o = self.o
        assert o.utypes[k][i][a] != o.utypes[k][j][b]
        if k > 0 and o.utypes[k - 1][i][a] != o.utypes[k - 1][j][b]:
            return self.unary(i, a, j, b, k - 1, var)
        if k == 0:
            Si, Sj = o.structures[i], o.structures[j]
            for s in o.sigma:
                at = Atom(s.name, (var,) * s.arity)
                hi, hj = Si.holds(s.name, (a,) * s.arity), Sj.holds(s.name, (b,) * s.arity)
                if hi != hj:
                    return at if hi else Not(at)
            raise AssertionError("unreachable: 1-types agree")
        for shape in o.shapes:
            for f in range(max(shape[1]) + 1):
                da = o.descriptors(i, shape, k - 1, f, a)
                db = o.descriptors(j, shape, k - 1, f, b)
                if set(da) == set(db):
                    continue
                extra = [d for d in da if d not in db]
                if extra:
                    return self.block(i, da[extra[0]], j, list(db.values()), shape, f, var, k - 1)
                extra = [d for d in db if d not in da]
                return Not(self.block(j, db[extra[0]], i, list(da.values()), shape, f, var, k - 1))
        raise AssertionError("unreachable: types agree")

    def sentence(self, i, j, k):
        """Sentence true in structure i and false in structure j."""
        o = self.o
        if k > 0 and o.sentences[k - 1][i] != o.sentences[k - 1][j]:
            return self.sentence(i, j, k - 1)
        for shape in o.shapes:
            da = o.descriptors(i, shape, k - 1)
            db = o.descriptors(j, shape, k - 1)
            if set(da) == set(db):
                continue
            extra = [d for d in da if d not in db]
            if extra:
                return self.block(i, da[extra[0]], j, list(db.values()), shape, None, None, k - 1)
            extra = [d for d in db if d not in da]
            return Not(self.block(j, db[extra[0]], i, list(da.values()), shape, None, None, k - 1))
        raise AssertionError("unreachable: sentence theories agree")

    def block(self, i, asg, j, others, shape, free, var, k):
        """exists-block realised by ``asg`` in i and by none of ``others`` in j."""
        name, pat = shape
        m = len(asg)
        names = [var if v == free else self.namer.fresh() for v in range(m)]
        guard = Atom(name, tuple(names[v] for v in pat))
        parts = list(dict.fromkeys(self.separate(i, asg, j, other, names, k) for other in others))
        body = conjunction(parts) if parts else TRUE
        bound = tuple(n for v, n in enumerate(names) if v != free)
        if not bound:
            return And(guard, body)
        return Exists(bound, guard, body)

    def separate(self, i, s, j, t, names, k):
        """Literal-ish formula over ``names`` true at s and false at t."""
        o = self.o
        eq_s, eq_t = equality_pattern(s), equality_pattern(t)
        if eq_s != eq_t:
            for p in range(len(s)):
                for q in range(p + 1, len(s)):
                    if (s[p] == s[q]) != (t[p] == t[q]):
                        e = Eq(names[p], names[q])
                        return e if s[p] == s[q] else Not(e)
        _, atoms_s = o._static[i][s]
        _, atoms_t = o._static[j][t]
        for atom in sorted(atoms_s ^ atoms_t):
            pred, mu = atom
            at = Atom(pred, tuple(names[x] for x in mu))
            return at if atom in atoms_s else Not(at)
        for p in range(len(s)):
            if o.utypes[k][i][s[p]] != o.utypes[k][j][t[p]]:
                return self.unary(i, s[p], j, t[p], k, names[p])
        raise AssertionError("unreachable: descriptors agree")


def guf1_equivalent_up_to(A: Structure, c, B: Structure, d, sigma, depth: int) -> bool:
    c, d = tuple(c), tuple(d)
    if len(c) != len(d):
        return False
    oracle = TypeOracle([A, B], sigma, depth)
    return oracle.tuple_equivalent(0, c, 1, d, depth)


def tuple_variables(n: int) -> tuple:
    """Names used for the free variables of a distinguishing formula."""
    return tuple(f"x{i}" for i in range(1, n + 1))


def distinguishing_formula(A: Structure, c, B: Structure, d, sigma, max_depth: int,
                           oracle: Optional[TypeOracle] = None, indices=(0, 1)):
    """Formula true at (A, c) and false at (B, d), free variables among
    ``x1..xn`` (x_i read as c_i / d_i), guarded-block depth at most
    ``max_depth``; None when the two agree on all such formulas."""
    c, d = tuple(c), tuple(d)
    if len(c) != len(d):
        raise ValueError("tuples have different lengths")
    if oracle is None:
        oracle = TypeOracle([A, B], sigma, max_depth)
        i, j = 0, 1
    else:
        i, j = indices
    if oracle.tuple_equivalent(i, c, j, d, max_depth):
        return None
    xs = tuple_variables(len(c))
    build = _Builder(oracle, _Namer(xs))
    for p in range(len(c)):
        for q in range(p + 1, len(c)):
            if (c[p] == c[q]) != (d[p] == d[q]):
                e = Eq(xs[p], xs[q])
                return e if c[p] == c[q] else Not(e)
    at_c = oracle.full_atoms(A, c, onto=False)
    at_d = oracle.full_atoms(B, d, onto=False)
    for atom in sorted(at_c ^ at_d):
        pred, mu = atom
        f = Atom(pred, tuple(xs[x] for x in mu))
        return f if atom in at_c else Not(f)
    for k in range(max_depth + 1):
        if oracle.sentences[k][i] != oracle.sentences[k][j]:
            return build.sentence(i, j, k)
        for p in range(len(c)):
            if oracle.utypes[k][i][c[p]] != oracle.utypes[k][j][d[p]]:
                return build.unary(i, c[p], j, d[p], k, xs[p])
    raise AssertionError("unreachable: tuples are equivalent")
