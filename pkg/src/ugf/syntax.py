"""Guarded first-order formulas: AST, parser, printer and fragment tests.

The surface grammar is ASCII::

    true  false  R(x,y)  x = y  !f  f & g  f | g  f -> g  f <-> g
    exists x y. (f)      forall x y. (f)

``&`` binds tighter than ``|``, which binds tighter than ``->``/``<->``.
A quantifier scopes over the single unary expression after the dot,
normally a parenthesized group.  Inside ``exists`` the matrix is read as a
flat conjunction and the first relational atom covering every variable of
the matrix becomes the guard.  Inside ``forall`` the matrix must be an
implication whose antecedent contains such an atom.

Implication and biconditional are desugared while parsing, so the AST only
has the node kinds below.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Union


class ParseError(ValueError):
    def __init__(self, message: str, position: int = -1):
        self.position = position
        where = f" at position {position}" if position >= 0 else ""
        super().__init__(f"{message}{where}")


class GuardError(ParseError):
    """No conjunct of a quantified matrix can serve as its guard."""


# ---------------------------------------------------------------- vocabulary

@dataclass(frozen=True, order=True)
class RelationSymbol:
    name: str
    arity: int

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"relation {self.name} must have arity >= 1")


@dataclass(frozen=True)
class Vocabulary:
    symbols: frozenset = frozenset()

    def __post_init__(self):
        names = [s.name for s in self.symbols]
        if len(names) != len(set(names)):
            raise ValueError("duplicate relation names in vocabulary")

    @classmethod
    def of(cls, arities: Union[dict, Iterable]) -> "Vocabulary":
        """Build from ``{"R": 2}`` or from an iterable of symbols/pairs."""
        if isinstance(arities, Vocabulary):
            return arities
        if isinstance(arities, dict):
            items = arities.items()
        else:
            items = [(s.name, s.arity) if isinstance(s, RelationSymbol) else s
                     for s in arities]
        return cls(frozenset(RelationSymbol(n, a) for n, a in items))

    @property
    def names(self) -> list:
        return sorted(s.name for s in self.symbols)

    def arity(self, name: str) -> int:
        for s in self.symbols:
            if s.name == name:
                return s.arity
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {s.name: s.arity for s in sorted(self.symbols)}

    def __contains__(self, item) -> bool:
        if isinstance(item, RelationSymbol):
            return item in self.symbols
        return any(s.name == item for s in self.symbols)

    def __iter__(self) -> Iterator[RelationSymbol]:
        return iter(sorted(self.symbols))

    def __len__(self) -> int:
        return len(self.symbols)

    def max_arity(self) -> int:
        return max((s.arity for s in self.symbols), default=0)

    def union(self, other: "Vocabulary") -> "Vocabulary":
        return Vocabulary(self.symbols | other.symbols)

    def intersection(self, other: "Vocabulary") -> "Vocabulary":
        return Vocabulary(self.symbols & other.symbols)

    def difference(self, other: "Vocabulary") -> "Vocabulary":
        return Vocabulary(self.symbols - other.symbols)


# ---------------------------------------------------------------------- AST

def _span():
    return field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Atom(Formula):
    pred: str
    args: tuple
    span: Optional[tuple] = _span()

    @property
    def variables(self) -> frozenset:
        return frozenset(self.args)


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str
    span: Optional[tuple] = _span()


@dataclass(frozen=True)
class Top(Formula):
    span: Optional[tuple] = _span()


@dataclass(frozen=True)
class Bottom(Formula):
    span: Optional[tuple] = _span()


@dataclass(frozen=True)
class Not(Formula):
    sub: Formula
    span: Optional[tuple] = _span()


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula
    span: Optional[tuple] = _span()


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula
    span: Optional[tuple] = _span()


@dataclass(frozen=True)
class Exists(Formula):
    """``exists bound. (guard & body)``; ``guard`` is None only for
    formulas outside GF, which the lenient parser keeps for classification."""
    bound: tuple
    guard: Optional[Atom]
    body: Formula
    span: Optional[tuple] = _span()


@dataclass(frozen=True)
class Forall(Formula):
    """``forall bound. (guard -> body)``, i.e. ``!exists bound. (guard & !body)``."""
    bound: tuple
    guard: Optional[Atom]
    body: Formula
    span: Optional[tuple] = _span()


TRUE = Top()
FALSE = Bottom()

Quantified = (Exists, Forall)


def conjunction(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjunction(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def iff(a: Formula, b: Formula) -> Formula:
    return And(implies(a, b), implies(b, a))


def conjuncts(f: Formula) -> list:
    """Flatten nested And nodes into a list."""
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


# ------------------------------------------------------------ basic queries

def free_variables(f: Formula) -> frozenset:
    if isinstance(f, Atom):
        return frozenset(f.args)
    if isinstance(f, Eq):
        return frozenset((f.left, f.right))
    if isinstance(f, (Top, Bottom)):
        return frozenset()
    if isinstance(f, Not):
        return free_variables(f.sub)
    if isinstance(f, (And, Or)):
        return free_variables(f.left) | free_variables(f.right)
    if isinstance(f, Quantified):
        inner = free_variables(f.body)
        if f.guard is not None:
            inner |= f.guard.variables
        return inner - frozenset(f.bound)
    raise TypeError(f"not a formula: {f!r}")


def is_sentence(f: Formula) -> bool:
    return not free_variables(f)


def guard_unit(f: Formula) -> Formula:
    """The guard-conjunction a quantifier ranges over, as one formula."""
    if f.guard is None:
        return f.body
    if isinstance(f, Exists):
        return And(f.guard, f.body)
    return Or(Not(f.guard), f.body)


def subformulas(f: Formula) -> list:
    """Subformulas, treating ``guard & body`` under a quantifier as one unit."""
    seen = {}

    def walk(g):
        if g in seen:
            return
        seen[g] = None
        if isinstance(g, Not):
            walk(g.sub)
        elif isinstance(g, (And, Or)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, Quantified):
            walk(guard_unit(g))

    walk(f)
    return list(seen)


def atoms(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms(f.sub)
    elif isinstance(f, (And, Or)):
        yield from atoms(f.left)
        yield from atoms(f.right)
    elif isinstance(f, Quantified):
        if f.guard is not None:
            yield f.guard
        yield from atoms(f.body)


def signature(f: Formula) -> Vocabulary:
    """Relation symbols occurring in ``f``."""
    arities = {}
    for a in atoms(f):
        if arities.setdefault(a.pred, len(a.args)) != len(a.args):
            raise ValueError(f"relation {a.pred} used with two arities")
    return Vocabulary.of(arities)


def size(f: Formula) -> int:
    """Symbol count: one per node plus one per variable occurrence."""
    if isinstance(f, Atom):
        return 1 + len(f.args)
    if isinstance(f, Eq):
        return 3
    if isinstance(f, (Top, Bottom)):
        return 1
    if isinstance(f, Not):
        return 1 + size(f.sub)
    if isinstance(f, (And, Or)):
        return 1 + size(f.left) + size(f.right)
    guard = size(f.guard) if f.guard is not None else 0
    return 1 + len(f.bound) + guard + size(f.body)


def quantifier_free(f: Formula) -> bool:
    return not any(isinstance(g, Quantified) for g in subformulas(f))


def block_depth(f: Formula) -> int:
    """Nesting depth of quantifier blocks."""
    if isinstance(f, Not):
        return block_depth(f.sub)
    if isinstance(f, (And, Or)):
        return max(block_depth(f.left), block_depth(f.right))
    if isinstance(f, Quantified):
        return 1 + block_depth(f.body)
    return 0


def rename(f: Formula, mapping: dict) -> Formula:
    """Rename free variables; bound variables are renamed to avoid capture."""
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(mapping.get(v, v) for v in f.args))
    if isinstance(f, Eq):
        return Eq(mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, (Top, Bottom)):
        return f
    if isinstance(f, Not):
        return Not(rename(f.sub, mapping))
    if isinstance(f, (And, Or)):
        return type(f)(rename(f.left, mapping), rename(f.right, mapping))
    inner = {k: v for k, v in mapping.items() if k not in f.bound}
    targets = set(inner.values())
    bound = []
    for y in f.bound:
        if y in targets:
            fresh = _fresh_name(y, targets | set(mapping) | _all_variables(f))
            inner[y] = fresh
            targets.add(fresh)
            bound.append(fresh)
        else:
            bound.append(y)
    guard = rename(f.guard, inner) if f.guard is not None else None
    return type(f)(tuple(bound), guard, rename(f.body, inner))


def _all_variables(f: Formula) -> set:
    out = set(free_variables(f))
    for g in subformulas(f):
        if isinstance(g, Quantified):
            out.update(g.bound)
    return out


def _fresh_name(base: str, taken) -> str:
    k = 1
    while f"{base}_{k}" in taken:
        k += 1
    return f"{base}_{k}"


# ------------------------------------------------------------------ printer

def to_text(f: Formula) -> str:
    if isinstance(f, Atom):
        return f"{f.pred}({','.join(f.args)})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Not):
        return "!" + _wrap(f.sub)
    if isinstance(f, And):
        return f"{_wrap(f.left)} & {_wrap(f.right)}"
    if isinstance(f, Or):
        return f"{_wrap(f.left)} | {_wrap(f.right)}"
    if isinstance(f, Quantified):
        word = "exists" if isinstance(f, Exists) else "forall"
        head = f"{word} {' '.join(f.bound)}." if f.bound else f"{word} ."
        if f.guard is None:
            return f"{head} ({to_text(f.body)})"
        op = "&" if isinstance(f, Exists) else "->"
        return f"{head} ({to_text(f.guard)} {op} {_wrap(f.body)})"
    raise TypeError(f"not a formula: {f!r}")


def _wrap(f: Formula) -> str:
    if isinstance(f, (And, Or)):
        return f"({to_text(f)})"
    return to_text(f)


# ------------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(<->|->)|([!&|().,=])|([A-Za-z_][A-Za-z0-9_']*))")
_KEYWORDS = {"exists", "forall", "true", "false"}


def _tokenize(text: str) -> list:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastindex)
        out.append((m.group(m.lastindex), start))
        pos = m.end()
    out.append(("<eof>", len(text)))
    return out


class _Parser:
    # Raw trees are tuples; they are converted to the AST once the whole
    # input is read so that guard selection sees complete matrices.

    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def pos(self):
        return self.toks[self.i][1]

    def take(self, expected=None):
        tok, pos = self.toks[self.i]
        if expected is not None and tok != expected:
            raise ParseError(f"expected {expected!r}, found {tok!r}", pos)
        self.i += 1
        return tok

    def formula(self):
        start = self.pos()
        left = self.disj()
        if self.peek() in ("->", "<->"):
            op = self.take()
            right = self.formula()
            return ("imp" if op == "->" else "iff", left, right, start)
        return left

    def disj(self):
        start = self.pos()
        left = self.conj()
        while self.peek() == "|":
            self.take()
            left = ("or", left, self.conj(), start)
        return left

    def conj(self):
        start = self.pos()
        parts = [self.unary()]
        while self.peek() == "&":
            self.take()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else ("and", parts, start)

    def unary(self):
        tok, start = self.toks[self.i]
        if tok == "!":
            self.take()
            return ("not", self.unary(), start)
        if tok in ("exists", "forall"):
            self.take()
            bound = []
            while self.peek() not in (".", "<eof>"):
                name = self.take()
                if not _is_ident(name):
                    raise ParseError(f"bad variable {name!r}", self.toks[self.i - 1][1])
                bound.append(name)
            self.take(".")
            if len(set(bound)) != len(bound):
                raise ParseError("repeated quantified variable", start)
            return ("q", tok, tuple(bound), self.unary(), start)
        return self.primary()

    def primary(self):
        tok, start = self.toks[self.i]
        if tok == "true":
            self.take()
            return ("true", start)
        if tok == "false":
            self.take()
            return ("false", start)
        if tok == "(":
            self.take()
            inner = self.formula()
            self.take(")")
            return inner
        if _is_ident(tok):
            self.take()
            if self.peek() == "(":
                self.take()
                args = [self.variable()]
                while self.peek() == ",":
                    self.take()
                    args.append(self.variable())
                self.take(")")
                return ("atom", tok, tuple(args), start)
            if self.peek() == "=":
                self.take()
                return ("eq", tok, self.variable(), start)
            raise ParseError(f"variable {tok!r} used as a formula", start)
        raise ParseError(f"unexpected token {tok!r}", start)

    def variable(self):
        tok, pos = self.toks[self.i]
        if not _is_ident(tok):
            raise ParseError(f"expected variable, found {tok!r}", pos)
        self.i += 1
        return tok


def _is_ident(tok: str) -> bool:
    return bool(re.fullmatch(r"[A-Za-z_][A-Za-z0-9_']*", tok)) and tok not in _KEYWORDS


def _raw_conjuncts(raw) -> list:
    return list(raw[1]) if raw[0] == "and" else [raw]


class _Converter:
    def __init__(self, text: str, strict: bool):
        self.text = text
        self.strict = strict

    def convert(self, raw) -> Formula:
        kind = raw[0]
        if kind == "true":
            return Top(span=(raw[1], raw[1] + 4))
        if kind == "false":
            return Bottom(span=(raw[1], raw[1] + 5))
        if kind == "atom":
            return Atom(raw[1], raw[2], span=(raw[3], raw[3]))
        if kind == "eq":
            return Eq(raw[1], raw[2], span=(raw[3], raw[3]))
        if kind == "not":
            return Not(self.convert(raw[1]), span=(raw[2], raw[2]))
        if kind == "and":
            return conjunction(self.convert(r) for r in raw[1])
        if kind == "or":
            return Or(self.convert(raw[1]), self.convert(raw[2]), span=(raw[3], raw[3]))
        if kind == "imp":
            return implies(self.convert(raw[1]), self.convert(raw[2]))
        if kind == "iff":
            return iff(self.convert(raw[1]), self.convert(raw[2]))
        if kind == "q":
            return self.quantifier(raw)
        raise AssertionError(kind)

    def quantifier(self, raw) -> Formula:
        _, word, bound, matrix, start = raw
        span = (start, start)
        if word == "exists":
            parts = [self.convert(r) for r in _raw_conjuncts(matrix)]
            guard, rest = _pick_guard(parts, bound)
            if guard is None:
                return self.unguarded(Exists, bound, conjunction(parts), start)
            return Exists(bound, guard, conjunction(rest), span=span)
        if matrix[0] != "imp":
            return self.unguarded(Forall, bound, self.convert(matrix), start)
        parts = [self.convert(r) for r in _raw_conjuncts(matrix[1])]
        consequent = self.convert(matrix[2])
        guard, rest = _pick_guard(parts, bound, extra=free_variables(consequent))
        if guard is None:
            return self.unguarded(Forall, bound, self.convert(matrix), start)
        body = implies(conjunction(rest), consequent) if rest else consequent
        return Forall(bound, guard, body, span=span)

    def unguarded(self, cls, bound, body, start):
        if self.strict:
            raise GuardError("no atom in the quantified matrix covers variables "
                             + "{" + ", ".join(sorted(free_variables(body) | set(bound))) + "}",
                             start)
        return cls(bound, None, body, span=(start, start))


def _pick_guard(parts, bound, extra=frozenset()):
    needed = set(bound) | set(extra)
    for p in parts:
        needed |= free_variables(p)
    for i, p in enumerate(parts):
        if isinstance(p, Atom) and needed <= p.variables:
            return p, parts[:i] + parts[i + 1:]
    return None, parts


def parse(text: str, strict: bool = True) -> Formula:
    """Parse formula source.  With ``strict=False`` unguarded quantifiers are
    kept (guard None) instead of raising :class:`GuardError`."""
    p = _Parser(text)
    raw = p.formula()
    if p.peek() != "<eof>":
        raise ParseError(f"unexpected token {p.peek()!r}", p.pos())
    f = _Converter(text, strict).convert(raw)
    signature(f)  # arity consistency
    return f


# -------------------------------------------------------- fragment checks

@dataclass(frozen=True)
class FragmentReport:
    guarded: bool
    one_dimensional: bool
    uniform: bool
    offending_subformulas: tuple = ()

    @property
    def flags(self) -> tuple:
        return (self.guarded, self.one_dimensional, self.uniform)


def guardedness_violations(f: Formula) -> list:
    out = []
    for g in subformulas(f):
        if not isinstance(g, Quantified):
            continue
        if g.guard is None:
            out.append((g, "unguarded quantifier"))
        elif not (free_variables(g.body) | set(g.bound)) <= g.guard.variables:
            out.append((g, "guard does not cover the matrix"))
    return out


def is_guarded(f: Formula) -> bool:
    return not guardedness_violations(f)


def is_one_dimensional(f: Formula) -> tuple:
    """(flag, first offending quantified subformula or None)."""
    for g in subformulas(f):
        if isinstance(g, Quantified) and len(free_variables(g)) > 1:
            return False, g
    return True, None


def is_relative_atom(f: Formula, X) -> bool:
    X = frozenset(X)
    free = free_variables(f)
    if not free:
        return True
    if len(free) == 1 and free <= X:
        return True
    if isinstance(f, Eq):
        return f.left in X and f.right in X
    if isinstance(f, Atom):
        return f.variables == X
    if isinstance(f, Quantified):
        return free == X
    return False


def _boolean_combination(f: Formula, X: frozenset) -> bool:
    if is_relative_atom(f, X):
        return True
    if isinstance(f, Not):
        return _boolean_combination(f.sub, X)
    if isinstance(f, (And, Or)):
        return _boolean_combination(f.left, X) and _boolean_combination(f.right, X)
    return False


def is_uniform(f: Formula) -> tuple:
    """(flag, first offending subformula or None)."""
    for g in subformulas(f):
        if not _boolean_combination(g, free_variables(g)):
            return False, g
    return True, None


def classify(f: Formula) -> FragmentReport:
    offenders = list(guardedness_violations(f))
    one_dim = True
    for g in subformulas(f):
        if isinstance(g, Quantified) and len(free_variables(g)) > 1:
            one_dim = False
            offenders.append((g, "quantifier block leaves more than one free variable"))
    uniform = True
    for g in subformulas(f):
        if not _boolean_combination(g, free_variables(g)):
            uniform = False
            offenders.append((g, "not a boolean combination of relative atoms"))
    return FragmentReport(not guardedness_violations(f), one_dim, uniform,
                          tuple(offenders))


# ------------------------------------------------------ polyadic modal logic

@dataclass(frozen=True)
class Prop:
    name: str


@dataclass(frozen=True)
class MNot:
    sub: object


@dataclass(frozen=True)
class MAnd:
    left: object
    right: object


@dataclass(frozen=True)
class MOr:
    left: object
    right: object


@dataclass(frozen=True)
class Diamond:
    """k-ary diamond over relation ``rel`` (of arity k + 1)."""
    rel: str
    args: tuple


def modal_translation(m, var: str = "x0") -> Formula:
    """Standard translation of a polyadic modal formula at variable ``var``."""
    counter = [0]
    taken = {var}

    def fresh():
        while True:
            counter[0] += 1
            name = f"x{counter[0]}"
            if name not in taken:
                taken.add(name)
                return name

    def tr(m, x):
        if isinstance(m, Prop):
            return Atom(m.name[:1].upper() + m.name[1:], (x,))
        if isinstance(m, MNot):
            return Not(tr(m.sub, x))
        if isinstance(m, MAnd):
            return And(tr(m.left, x), tr(m.right, x))
        if isinstance(m, MOr):
            return Or(tr(m.left, x), tr(m.right, x))
        if isinstance(m, Diamond):
            ys = tuple(fresh() for _ in m.args)
            body = conjunction(tr(a, y) for a, y in zip(m.args, ys))
            return Exists(ys, Atom(m.rel, (x,) + ys), body)
        raise TypeError(f"not a modal formula: {m!r}")

    return tr(m, var)
