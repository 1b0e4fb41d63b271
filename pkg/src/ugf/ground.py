"""Grounding of formulas over a fixed finite domain, and a small CDCL solver.

Model search (``brute_force_sat``, witness search) grounds the sentence over
domains ``{0..k-1}`` and asks :func:`solve` for an assignment of the ground
atoms.  The search is complete for the given domain size.
"""
from __future__ import annotations

from itertools import product

from .syntax import (And, Atom, Bottom, Eq, Exists, Forall, Not, Or, Top,
                     Vocabulary)


class Grounder:
    """Tseitin-encodes ground instances of formulas into CNF clauses."""

    def __init__(self, vocabulary: Vocabulary, domain):
        self.vocabulary = vocabulary
        self.domain = tuple(domain)
        self.atom_ids = {}
        self.clauses = []
        self.nvars = 0
        self.inconsistent = False
        self._cache = {}
        for sym in vocabulary:
            for t in product(self.domain, repeat=sym.arity):
                self.atom(sym.name, t)

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def atom(self, name, args) -> int:
        key = (name, tuple(args))
        v = self.atom_ids.get(key)
        if v is None:
            v = self.atom_ids[key] = self.new_var()
        return v

    def add_clause(self, lits):
        lits = set(lits)
        if any(-l in lits for l in lits):
            return
        if not lits:
            self.inconsistent = True
        self.clauses.append(sorted(lits, key=abs))

    # literals are ints, or the Python constants True / False

    def land(self, lits):
        out = set()
        for l in lits:
            if l is False:
                return False
            if l is not True:
                out.add(l)
        if not out:
            return True
        if any(-l in out for l in out):
            return False
        if len(out) == 1:
            return next(iter(out))
        key = ("and", frozenset(out))
        v = self._cache.get(key)
        if v is None:
            v = self._cache[key] = self.new_var()
            for l in out:
                self.add_clause([-v, l])
            self.add_clause([v] + [-l for l in out])
        return v

    def lor(self, lits):
        out = set()
        for l in lits:
            if l is True:
                return True
            if l is not False:
                out.add(l)
        if not out:
            return False
        if any(-l in out for l in out):
            return True
        if len(out) == 1:
            return next(iter(out))
        key = ("or", frozenset(out))
        v = self._cache.get(key)
        if v is None:
            v = self._cache[key] = self.new_var()
            self.add_clause([-v] + sorted(out, key=abs))
            for l in out:
                self.add_clause([v, -l])
        return v

    @staticmethod
    def neg(l):
        if l is True:
            return False
        if l is False:
            return True
        return -l

    def ground(self, f, asg: dict):
        if isinstance(f, Atom):
            return self.atom(f.pred, tuple(asg[v] for v in f.args))
        if isinstance(f, Eq):
            return asg[f.left] == asg[f.right]
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Not):
            return self.neg(self.ground(f.sub, asg))
        if isinstance(f, And):
            return self.land([self.ground(f.left, asg), self.ground(f.right, asg)])
        if isinstance(f, Or):
            return self.lor([self.ground(f.left, asg), self.ground(f.right, asg)])
        if isinstance(f, (Exists, Forall)):
            parts = []
            for values in product(self.domain, repeat=len(f.bound)):
                inner = dict(asg)
                inner.update(zip(f.bound, values))
                g = self.ground(f.guard, inner) if f.guard is not None else True
                b = self.ground(f.body, inner)
                if isinstance(f, Exists):
                    parts.append(self.land([g, b]))
                else:
                    parts.append(self.lor([self.neg(g), b]))
            return self.lor(parts) if isinstance(f, Exists) else self.land(parts)
        raise TypeError(f"cannot ground {f!r}")

    def require(self, lit):
        if lit is True:
            return
        if lit is False:
            self.inconsistent = True
            self.clauses.append([])
            return
        self.add_clause([lit])

    def assert_formula(self, f, asg=None):
        self.require(self.ground(f, dict(asg or {})))

    def fix_atom(self, name, args, value: bool):
        v = self.atom(name, args)
        self.add_clause([v if value else -v])

    def solve(self, conflict_limit=None):
        """Dict ``name -> set of true tuples``, None if unsatisfiable, or the
        string ``"unknown"`` when the conflict limit is exhausted."""
        if self.inconsistent:
            return None
        result = solve(self.nvars, self.clauses, conflict_limit)
        if result is None or result == "unknown":
            return result
        true_atoms = {s.name: set() for s in self.vocabulary}
        for (name, args), v in self.atom_ids.items():
            if result[v]:
                true_atoms.setdefault(name, set()).add(args)
        return true_atoms


def solve(nvars: int, clauses, conflict_limit=None):
    """CDCL with two watched literals and 1-UIP learning.

    Returns a list ``model`` indexed by variable (``model[v]`` is a bool), None
    when unsatisfiable, or ``"unknown"`` past ``conflict_limit`` conflicts.
    """
    value = [0] * (nvars + 1)
    level = [0] * (nvars + 1)
    reason = [None] * (nvars + 1)
    activity = [0.0] * (nvars + 1)
    phase = [False] * (nvars + 1)
    watches = {}
    db = []
    trail = []
    trail_lim = []

    def val(lit):
        v = value[abs(lit)]
        return v if lit > 0 else -v

    def enqueue(lit, why):
        var = abs(lit)
        value[var] = 1 if lit > 0 else -1
        level[var] = len(trail_lim)
        reason[var] = why
        trail.append(lit)

    def watch(ci):
        c = db[ci]
        watches.setdefault(c[0], []).append(ci)
        watches.setdefault(c[1], []).append(ci)

    units = []
    for c in clauses:
        if not c:
            return None
        for l in c:
            activity[abs(l)] += 1.0
        if len(c) == 1:
            units.append(c[0])
        else:
            db.append(list(c))
            watch(len(db) - 1)
    for l in units:
        if val(l) == -1:
            return None
        if val(l) == 0:
            enqueue(l, None)

    qhead = 0

    def propagate():
        nonlocal qhead
        while qhead < len(trail):
            p = trail[qhead]
            qhead += 1
            falsified = -p
            ws = watches.get(falsified, [])
            i = 0
            while i < len(ws):
                ci = ws[i]
                c = db[ci]
                if c[0] == falsified:
                    c[0], c[1] = c[1], c[0]
                if val(c[0]) == 1:
                    i += 1
                    continue
                for k in range(2, len(c)):
                    if val(c[k]) != -1:
                        c[1], c[k] = c[k], c[1]
                        watches.setdefault(c[1], []).append(ci)
                        ws[i] = ws[-1]
                        ws.pop()
                        break
                else:
                    if val(c[0]) == -1:
                        return ci
                    enqueue(c[0], ci)
                    i += 1
        return None

    def analyze(ci):
        seen = set()
        learnt = [0]
        counter = 0
        p = None
        idx = len(trail) - 1
        current = len(trail_lim)
        while True:
            for q in db[ci]:
                if p is not None and q == p:
                    continue
                var = abs(q)
                if var in seen or level[var] == 0:
                    continue
                seen.add(var)
                activity[var] += bump[0]
                if level[var] == current:
                    counter += 1
                else:
                    learnt.append(q)
            while abs(trail[idx]) not in seen:
                idx -= 1
            p = trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            ci = reason[abs(p)]
            seen.discard(abs(p))
            # reason clauses keep the implied literal first
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda j: level[abs(learnt[j])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, level[abs(learnt[1])]

    def backtrack(lvl):
        nonlocal qhead
        if len(trail_lim) <= lvl:
            return
        cut = trail_lim[lvl]
        for lit in trail[cut:]:
            var = abs(lit)
            phase[var] = lit > 0
            value[var] = 0
            reason[var] = None
        del trail[cut:]
        del trail_lim[lvl:]
        qhead = min(qhead, len(trail))

    bump = [1.0]
    conflicts = 0
    while True:
        confl = propagate()
        if confl is not None:
            conflicts += 1
            if not trail_lim:
                return None
            if conflict_limit is not None and conflicts > conflict_limit:
                return "unknown"
            learnt, back = analyze(confl)
            backtrack(back)
            if len(learnt) == 1:
                enqueue(learnt[0], None)
            else:
                db.append(learnt)
                watch(len(db) - 1)
                enqueue(learnt[0], len(db) - 1)
            bump[0] *= 1.05
            if bump[0] > 1e100:
                for v in range(1, nvars + 1):
                    activity[v] *= 1e-100
                bump[0] *= 1e-100
            continue
        best, best_act = 0, -1.0
        for v in range(1, nvars + 1):
            if value[v] == 0 and activity[v] > best_act:
                best, best_act = v, activity[v]
        if best == 0:
            return [False] + [value[v] == 1 for v in range(1, nvars + 1)]
        trail_lim.append(len(trail))
        enqueue(best if phase[best] else -best, None)
