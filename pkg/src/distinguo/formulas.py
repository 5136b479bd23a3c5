"""First-order formulas over a relational signature.

Variables are the naturals: ``3`` stands for ``v3``.  Nodes are immutable and
hashable; hashes are computed once because fragments hold tens of thousands
of shared subtrees.

Concrete syntax::

    formula  = atom | eq | "~" formula
             | "(" formula ("&" formula)+ ")" | "(" formula ("|" formula)+ ")"
             | ("E" | "A") var "." formula
             | "E^" nat "(" [varlist] ")" "." formula
    atom     = relname "(" varlist ")"        eq = var "=" var
    var      = "v" nat                        varlist = var {"," var}
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Iterator

from .errors import (
    ArityError,
    BudgetExceeded,
    EqualityNotEnabled,
    FormulaError,
    FormulaSyntaxError,
    UnknownRelation,
)
from .structures import Signature


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        return pretty(self)

    def __hash__(self) -> int:
        return self._hash

    def _seal(self):
        object.__setattr__(self, "_hash", hash((type(self).__name__,) + self._key()))


@dataclass(frozen=True, eq=True)
class Atom(Formula):
    rel: str
    args: tuple[int, ...]
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        self._seal()

    def _key(self):
        return (self.rel, self.args)

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=True)
class Equal(Formula):
    left: int
    right: int
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal()

    def _key(self):
        return (self.left, self.right)

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=True)
class Not(Formula):
    body: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal()

    def _key(self):
        return (self.body,)

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=True)
class And(Formula):
    items: tuple[Formula, ...]
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise FormulaError("empty conjunction")
        self._seal()

    def _key(self):
        return self.items

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=True)
class Or(Formula):
    items: tuple[Formula, ...]
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise FormulaError("empty disjunction")
        self._seal()

    def _key(self):
        return self.items

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=True)
class Exists(Formula):
    var: int
    body: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal()

    def _key(self):
        return (self.var, self.body)

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=True)
class Forall(Formula):
    var: int
    body: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self._seal()

    def _key(self):
        return (self.var, self.body)

    __hash__ = Formula.__hash__


@dataclass(frozen=True, eq=True)
class ExistsAtLeast(Formula):
    """At least ``n`` tuples for ``vars`` satisfy ``body``.

    ``vars`` are distinct; the empty tuple is allowed and then the formula
    says ``body`` holds (n = 1) or is false outright (n >= 2).
    """

    n: int
    vars: tuple[int, ...]
    body: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if self.n < 0:
            raise FormulaError("counting quantifier needs n >= 0")
        if len(set(self.vars)) != len(self.vars):
            raise FormulaError("counting quantifier binds repeated variables")
        self._seal()

    def _key(self):
        return (self.n, self.vars, self.body)

    __hash__ = Formula.__hash__


Quantifier = (Exists, Forall)


def iff(a: Formula, b: Formula) -> Formula:
    """``a <-> b`` spelled out as ``(a & b) | (~a & ~b)``."""
    return Or((And((a, b)), And((Not(a), Not(b)))))


# ------------------------------------------------------------ basic queries


@lru_cache(maxsize=None)
def free_vars(phi: Formula) -> tuple[int, ...]:
    """Free variables in ascending index order (the tuple-position convention)."""
    if isinstance(phi, Atom):
        return tuple(sorted(set(phi.args)))
    if isinstance(phi, Equal):
        return tuple(sorted({phi.left, phi.right}))
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        return tuple(sorted(set().union(*(free_vars(x) for x in phi.items))))
    if isinstance(phi, Quantifier):
        return tuple(v for v in free_vars(phi.body) if v != phi.var)
    if isinstance(phi, ExistsAtLeast):
        return tuple(v for v in free_vars(phi.body) if v not in phi.vars)
    raise TypeError(f"not a formula: {phi!r}")


@lru_cache(maxsize=None)
def rank(phi: Formula) -> int:
    """Quantifier rank; a counting quantifier over ``k`` variables costs ``n * k``."""
    if isinstance(phi, (Atom, Equal)):
        return 0
    if isinstance(phi, Not):
        return rank(phi.body)
    if isinstance(phi, (And, Or)):
        return max(rank(x) for x in phi.items)
    if isinstance(phi, Quantifier):
        return 1 + rank(phi.body)
    if isinstance(phi, ExistsAtLeast):
        return phi.n * len(phi.vars) + rank(phi.body)
    raise TypeError(f"not a formula: {phi!r}")


@lru_cache(maxsize=None)
def all_vars(phi: Formula) -> frozenset[int]:
    """Every variable index occurring in ``phi``, bound or free."""
    if isinstance(phi, Atom):
        return frozenset(phi.args)
    if isinstance(phi, Equal):
        return frozenset((phi.left, phi.right))
    own = {phi.var} if isinstance(phi, Quantifier) else set(phi.vars) if isinstance(phi, ExistsAtLeast) else set()
    return frozenset(own.union(*(all_vars(x) for x in children(phi))))


def children(phi: Formula) -> tuple[Formula, ...]:
    if isinstance(phi, (And, Or)):
        return phi.items
    if isinstance(phi, (Not, Exists, Forall, ExistsAtLeast)):
        return (phi.body,)
    return ()


def subformulas(phi: Formula) -> Iterator[Formula]:
    """``phi`` and all its subformulas, parents before children."""
    stack = [phi]
    while stack:
        x = stack.pop()
        yield x
        stack.extend(children(x))


def is_sentence(phi: Formula) -> bool:
    return not free_vars(phi)


def check(phi: Formula, sig: Signature) -> Formula:
    """Raise unless ``phi`` is well formed over ``sig``; returns ``phi``."""
    for sub in subformulas(phi):
        if isinstance(sub, Atom):
            arity = sig.arity(sub.rel)
            if len(sub.args) != arity:
                raise ArityError(f"{sub.rel} has arity {arity}, applied to {len(sub.args)} variables")
        elif isinstance(sub, Equal) and not sig.with_equality:
            raise EqualityNotEnabled("signature has no equality symbol")
    return phi


def rename_relations(phi: Formula, fn: Callable[[str], str]) -> Formula:
    if isinstance(phi, Atom):
        return Atom(fn(phi.rel), phi.args)
    if isinstance(phi, Equal):
        return phi
    if isinstance(phi, Not):
        return Not(rename_relations(phi.body, fn))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(rename_relations(x, fn) for x in phi.items))
    if isinstance(phi, Quantifier):
        return type(phi)(phi.var, rename_relations(phi.body, fn))
    return ExistsAtLeast(phi.n, phi.vars, rename_relations(phi.body, fn))


# ----------------------------------------------------------- normalization


@lru_cache(maxsize=None)
def normalize(phi: Formula) -> Formula:
    """Collapse double negation, flatten/dedupe/sort And and Or operands."""
    if isinstance(phi, (Atom, Equal)):
        return phi
    if isinstance(phi, Not):
        body = normalize(phi.body)
        return body.body if isinstance(body, Not) else Not(body)
    if isinstance(phi, (And, Or)):
        kind = type(phi)
        items = set()
        for x in phi.items:
            x = normalize(x)
            items.update(x.items if isinstance(x, kind) else (x,))
        if len(items) == 1:
            return items.pop()
        return kind(tuple(sorted(items, key=pretty)))
    if isinstance(phi, Quantifier):
        return type(phi)(phi.var, normalize(phi.body))
    return ExistsAtLeast(phi.n, phi.vars, normalize(phi.body))


def negate(phi: Formula) -> Formula:
    return normalize(Not(phi))


# --------------------------------------------------------------- printing


@lru_cache(maxsize=None)
def pretty(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return f"{phi.rel}({','.join(f'v{i}' for i in phi.args)})"
    if isinstance(phi, Equal):
        return f"v{phi.left}=v{phi.right}"
    if isinstance(phi, Not):
        return "~" + pretty(phi.body)
    if isinstance(phi, And):
        return "(" + " & ".join(pretty(x) for x in phi.items) + ")" if len(phi.items) > 1 else pretty(phi.items[0])
    if isinstance(phi, Or):
        return "(" + " | ".join(pretty(x) for x in phi.items) + ")" if len(phi.items) > 1 else pretty(phi.items[0])
    if isinstance(phi, Exists):
        return f"E v{phi.var}. {pretty(phi.body)}"
    if isinstance(phi, Forall):
        return f"A v{phi.var}. {pretty(phi.body)}"
    if isinstance(phi, ExistsAtLeast):
        return f"E^{phi.n}({','.join(f'v{i}' for i in phi.vars)}). {pretty(phi.body)}"
    raise TypeError(f"not a formula: {phi!r}")


# ----------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(E\^)|(v\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\d+)|([()~&|.,=]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", start)
        kinds = ("count", "var", "ident", "nat", "punct")
        for kind, val in zip(kinds, m.groups()):
            if val is not None:
                tokens.append((kind, val, m.start(m.lastindex)))
                break
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.tokens = _tokenize(text)
        self.i = 0
        self.sig = sig

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None, kind=None):
        tok = self.tokens[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = repr(value) if value is not None else kind
            got = repr(tok[1]) if tok[0] != "end" else "end of input"
            raise FormulaSyntaxError(f"expected {want}, found {got}", tok[2])
        self.i += 1
        return tok

    def var(self) -> int:
        return int(self.take(kind="var")[1][1:])

    def varlist(self, allow_empty=False) -> tuple[int, ...]:
        if allow_empty and self.peek()[1] == ")":
            return ()
        out = [self.var()]
        while self.peek()[1] == ",":
            self.take(",")
            out.append(self.var())
        return tuple(out)

    def formula(self) -> Formula:
        kind, val, pos = self.peek()
        if val == "~":
            self.take()
            return Not(self.formula())
        if val == "(":
            self.take()
            first = self.formula()
            op = self.peek()[1]
            if op not in ("&", "|"):
                raise FormulaSyntaxError("expected '&' or '|'", self.peek()[2])
            items = [first]
            while self.peek()[1] == op:
                self.take(op)
                items.append(self.formula())
            if self.peek()[1] in ("&", "|"):
                raise FormulaSyntaxError("mixed connectives need parentheses", self.peek()[2])
            self.take(")")
            return (And if op == "&" else Or)(tuple(items))
        if kind == "count":
            self.take()
            n = int(self.take(kind="nat")[1])
            self.take("(")
            vs = self.varlist(allow_empty=True)
            if len(set(vs)) != len(vs):
                raise FormulaSyntaxError("repeated variable in counting quantifier", pos)
            self.take(")")
            self.take(".")
            return ExistsAtLeast(n, vs, self.formula())
        if kind == "ident" and val in ("E", "A"):
            self.take()
            v = self.var()
            self.take(".")
            body = self.formula()
            return Exists(v, body) if val == "E" else Forall(v, body)
        if kind == "ident":
            if not val[0].isupper():
                raise FormulaSyntaxError(f"relation names start uppercase: {val!r}", pos)
            self.take()
            self.take("(")
            args = self.varlist()
            self.take(")")
            try:
                arity = self.sig.arity(val)
            except UnknownRelation:
                raise UnknownRelation(f"unknown relation {val!r} at position {pos}") from None
            if arity != len(args):
                raise ArityError(f"{val} has arity {arity}, got {len(args)} arguments at position {pos}")
            return Atom(val, args)
        if kind == "var":
            left = self.var()
            self.take("=")
            right = self.var()
            if not self.sig.with_equality:
                raise EqualityNotEnabled(f"equality used at position {pos} but signature lacks it")
            return Equal(left, right)
        got = repr(val) if kind != "end" else "end of input"
        raise FormulaSyntaxError(f"unexpected {got}", pos)


def parse(text: str, sig: Signature) -> Formula:
    p = _Parser(text, sig)
    phi = p.formula()
    p.take(kind="end")
    return phi


def parse_formula_list(text: str, sig: Signature) -> list[Formula]:
    """One formula per line; blank lines and ``#`` comments are skipped."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse(line, sig))
        except FormulaSyntaxError as exc:
            raise FormulaSyntaxError(f"line {lineno}: {exc}", exc.position) from None
        except (FormulaError, UnknownRelation) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    return out


# ------------------------------------------------------------- fragments


@dataclass(frozen=True)
class FormulaSet:
    signature: Signature
    formulas: tuple[Formula, ...]

    def __post_init__(self):
        object.__setattr__(self, "formulas", tuple(self.formulas))
        for phi in self.formulas:
            check(phi, self.signature)

    def __iter__(self):
        return iter(self.formulas)

    def __len__(self):
        return len(self.formulas)

    def __getitem__(self, i):
        return self.formulas[i]

    def sentences(self) -> list[Formula]:
        return [phi for phi in self.formulas if is_sentence(phi)]

    @property
    def max_free(self) -> int:
        return max((len(free_vars(phi)) for phi in self.formulas), default=0)


DEFAULT_CAP = 10 ** 6


def atoms(sig: Signature, nvars: int) -> list[Formula]:
    out: list[Formula] = []
    for name, arity in sig.relations:
        for args in itertools.product(range(nvars), repeat=arity):
            out.append(Atom(name, args))
    if sig.with_equality:
        out.extend(Equal(i, j) for i, j in itertools.combinations(range(nvars), 2))
    return out


def generate_fragment(sig: Signature, max_rank: int, max_vars: int, *,
                      cap: int = DEFAULT_CAP, counting: bool | None = None) -> FormulaSet:
    """A finite, closed slice of the fragment generated by ``sig``.

    Rank 0 holds the literals over ``v0..v{max_vars-1}`` and every binary
    conjunction and disjunction of two distinct literals.  Each later rank
    quantifies (E and A) the previous rank's formulas over one of their free
    variables.  With equality (the default for ``counting``), counting
    quantifiers ``E^k(v)`` for ``2 <= k`` are added at rank ``k + rank(body)``.
    Every layer is closed under negation.  Members come out ordered by rank,
    then by construction order, so atoms lead the list.
    """
    if max_vars < sig.max_arity:
        raise FormulaError(f"max_vars={max_vars} is below the largest arity {sig.max_arity}")
    counting = sig.with_equality if counting is None else counting
    seen: dict[Formula, None] = {}

    def add(phi):
        phi = normalize(phi)
        if phi not in seen:
            seen[phi] = None
            if len(seen) > cap:
                raise BudgetExceeded(f"fragment exceeds {cap} formulas")
        return phi

    lits = []
    for a in atoms(sig, max_vars):
        lits.append(add(a))
        lits.append(add(Not(a)))
    for a, b in itertools.combinations(lits, 2):
        for kind in (And, Or):
            phi = add(kind((a, b)))
            add(Not(phi))
    layers = [list(seen)]
    for r in range(1, max_rank + 1):
        layer = []
        for phi in layers[r - 1]:
            for v in free_vars(phi):
                for q in (Exists, Forall):
                    layer.append(add(q(v, phi)))
        if counting:
            for k in range(2, r + 1):
                for phi in layers[r - k]:
                    for v in free_vars(phi):
                        layer.append(add(ExistsAtLeast(k, (v,), phi)))
        for phi in list(layer):
            layer.append(add(Not(phi)))
        layers.append([phi for phi in dict.fromkeys(layer) if rank(phi) == r])
    return FormulaSet(sig, tuple(seen))


def closure_violations(fs: FormulaSet | Iterable[Formula]) -> dict[str, list[Formula]]:
    """Members whose subformulas or negations are missing from the set."""
    members = set(fs)
    missing_sub, missing_neg = [], []
    for phi in members:
        for sub in children(phi):
            if sub not in members:
                missing_sub.append(sub)
        if negate(phi) not in members:
            missing_neg.append(phi)
    return {"subformula": missing_sub, "negation": missing_neg}


def is_closed(fs) -> bool:
    v = closure_violations(fs)
    return not v["subformula"] and not v["negation"]


# ------------------------------------------------------- random formulas


def random_formula(rng, sig: Signature, depth: int, nvars: int, *, counting: bool = True) -> Formula:
    """Random well-formed formula; ``rng`` is a ``random.Random``."""
    def leaf():
        if sig.with_equality and rng.random() < 0.2:
            return Equal(rng.randrange(nvars), rng.randrange(nvars))
        name, arity = rng.choice(sig.relations)
        return Atom(name, tuple(rng.randrange(nvars) for _ in range(arity)))

    def go(d):
        if d == 0 or rng.random() < 0.2:
            return leaf()
        kind = rng.randrange(6 if counting else 5)
        if kind == 0:
            return Not(go(d - 1))
        if kind in (1, 2):
            items = tuple(go(d - 1) for _ in range(rng.randint(2, 3)))
            return (And if kind == 1 else Or)(items)
        if kind == 3:
            return Exists(rng.randrange(nvars), go(d - 1))
        if kind == 4:
            return Forall(rng.randrange(nvars), go(d - 1))
        k = rng.randint(1, min(2, nvars))
        return ExistsAtLeast(rng.randint(0, 3), tuple(rng.sample(range(nvars), k)), go(d - 1))

    return go(depth)
