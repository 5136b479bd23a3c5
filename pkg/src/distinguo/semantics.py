"""Satisfaction, realization sets and realization counts.

Two evaluation routes exist for finite structures: :func:`satisfies` walks the
formula directly and is the reference; :class:`TableEvaluator` computes the
truth table of every subformula at once over a batch of same-size
structures with numpy and backs :func:`realizations` and :func:`count`.

Countable unary structures are handled by color classes.  Elements of one
color class that are not named by the current assignment are exchanged by
an automorphism fixing the assignment, so quantifiers only need the named
elements plus one fresh element per class, and tuple counts reduce to
counting tuple "shapes".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import (
    ArityError,
    EqualityNotEnabled,
    SignatureMismatch,
    UnboundVariable,
    UnknownRelation,
)
from .formulas import (
    And,
    Atom,
    Equal,
    Exists,
    ExistsAtLeast,
    Forall,
    Formula,
    Not,
    Or,
    all_vars,
    check,
    free_vars,
    pretty,
)
from .structures import (
    Count,
    Finite,
    FiniteStructure,
    Infinite,
    PeriodicSet,
    PeriodicUnaryStructure,
    Signature,
    Structure,
)


@lru_cache(maxsize=None)
def _checked(sig: Signature, phi: Formula) -> Formula:
    try:
        return check(phi, sig)
    except (UnknownRelation, ArityError, EqualityNotEnabled) as exc:
        raise SignatureMismatch(f"{phi} is not a formula over [{sig}]: {exc}") from None


def _env(phi: Formula, s) -> dict[int, int]:
    fv = free_vars(phi)
    s = tuple(s)
    if len(s) != len(fv):
        raise UnboundVariable(f"{phi} has free variables {['v%d' % v for v in fv]}, got assignment {s}")
    return dict(zip(fv, s))


# ------------------------------------------------------------ satisfaction


def satisfies(M: Structure, phi: Formula, s: Sequence[int] = ()) -> bool:
    """Truth of ``phi`` in ``M`` with free variables (ascending) bound to ``s``."""
    _checked(M.signature, phi)
    env = _env(phi, s)
    if isinstance(M, FiniteStructure):
        if any(not 0 <= e < M.size for e in env.values()):
            raise UnboundVariable(f"assignment {tuple(s)} leaves universe of size {M.size}")
        return _holds_finite(M, phi, env)
    if any(e < 0 for e in env.values()):
        raise UnboundVariable("assignment must use natural numbers")
    return _holds_periodic(M, phi, env)


def _holds_finite(M: FiniteStructure, phi: Formula, env: dict) -> bool:
    if isinstance(phi, Atom):
        return tuple(env[v] for v in phi.args) in M.relation(phi.rel)
    if isinstance(phi, Equal):
        return env[phi.left] == env[phi.right]
    if isinstance(phi, Not):
        return not _holds_finite(M, phi.body, env)
    if isinstance(phi, And):
        return all(_holds_finite(M, x, env) for x in phi.items)
    if isinstance(phi, Or):
        return any(_holds_finite(M, x, env) for x in phi.items)
    if isinstance(phi, (Exists, Forall)):
        test = any if isinstance(phi, Exists) else all
        return test(_holds_finite(M, phi.body, {**env, phi.var: a}) for a in range(M.size))
    if isinstance(phi, ExistsAtLeast):
        hits = 0
        for t in itertools.product(range(M.size), repeat=len(phi.vars)):
            if _holds_finite(M, phi.body, {**env, **dict(zip(phi.vars, t))}):
                hits += 1
                if hits >= phi.n:
                    return True
        return hits >= phi.n
    raise TypeError(f"not a formula: {phi!r}")


# ------------------------------------------------------- periodic backend


def _fresh(cls: PeriodicSet, taken: set[int], k: int) -> list[int]:
    """The first ``k`` members of ``cls`` outside ``taken`` (fewer if they run out)."""
    out = []
    for m in cls.members():
        if len(out) == k:
            break
        if m not in taken:
            out.append(m)
    return out


def _candidates(M: PeriodicUnaryStructure, params: Iterable[int]) -> list[int]:
    """Named elements plus one unnamed representative per nonempty color class."""
    named = set(params)
    out = sorted(named)
    for cls in M.color_classes.values():
        out.extend(_fresh(cls, named, 1))
    return out


def _falling(size: Count, k: int) -> Count:
    if k == 0:
        return Finite(1)
    if not size.is_finite:
        return Infinite
    out = 1
    for i in range(k):
        out *= max(size.value - i, 0)
    return Finite(out)


def shapes(M: PeriodicUnaryStructure, d: int, params: Iterable[int] = ()) -> Iterator[tuple[tuple[int, ...], Count]]:
    """Partition of all ``d``-tuples of naturals into shapes relative to ``params``.

    A shape fixes which positions hold which named element, which of the
    remaining positions are equal, and the color class of each unnamed block.
    Yields one representative tuple per realizable shape with the number of
    tuples of that shape.  The multiplicities sum to the number of d-tuples.
    """
    named = sorted(set(params))
    taken = set(named)
    keys = list(M.color_classes)
    avail = {}
    for key, cls in M.color_classes.items():
        inside = sum(1 for e in named if e in cls)
        size = cls.cardinality()
        avail[key] = size if not size.is_finite else Finite(size.value - inside)

    def realize(slots, blocks):
        need = {}
        for key in blocks:
            need[key] = need.get(key, 0) + 1
        picks = {}
        mult = Finite(1)
        for key, k in need.items():
            got = _fresh(M.color_classes[key], taken, k)
            if len(got) < k:
                return None
            picks[key] = iter(got)
            mult = mult * _falling(avail[key], k)
        elems = [next(picks[key]) for key in blocks]
        return tuple(e if kind == "named" else elems[e] for kind, e in slots), mult

    def rec(slots, blocks):
        if len(slots) == d:
            got = realize(slots, blocks)
            if got is not None:
                yield got
            return
        for e in named:
            yield from rec(slots + [("named", e)], blocks)
        for j in range(len(blocks)):
            yield from rec(slots + [("block", j)], blocks)
        for key in keys:
            yield from rec(slots + [("block", len(blocks))], blocks + [key])

    yield from rec([], [])


def _count_periodic(M: PeriodicUnaryStructure, phi: Formula, bound: Sequence[int], env: dict) -> Count:
    params = [env[v] for v in free_vars(phi) if v not in bound]
    total = Finite(0)
    for rep, mult in shapes(M, len(bound), params):
        if _holds_periodic(M, phi, {**env, **dict(zip(bound, rep))}):
            total = total + mult
    return total


def _holds_periodic(M: PeriodicUnaryStructure, phi: Formula, env: dict) -> bool:
    if isinstance(phi, Atom):
        return M.holds(phi.rel, tuple(env[v] for v in phi.args))
    if isinstance(phi, Equal):
        return env[phi.left] == env[phi.right]
    if isinstance(phi, Not):
        return not _holds_periodic(M, phi.body, env)
    if isinstance(phi, And):
        return all(_holds_periodic(M, x, env) for x in phi.items)
    if isinstance(phi, Or):
        return any(_holds_periodic(M, x, env) for x in phi.items)
    if isinstance(phi, (Exists, Forall)):
        params = [env[v] for v in free_vars(phi.body) if v != phi.var]
        test = any if isinstance(phi, Exists) else all
        return test(_holds_periodic(M, phi.body, {**env, phi.var: a}) for a in _candidates(M, params))
    if isinstance(phi, ExistsAtLeast):
        return _count_periodic(M, phi.body, phi.vars, env).at_least(phi.n)
    raise TypeError(f"not a formula: {phi!r}")


@dataclass(frozen=True)
class ShapeRealizations:
    """Realizations of a formula with two or more free variables in a periodic structure.

    ``parts`` lists one representative tuple per satisfied shape together with
    the shape's multiplicity.
    """

    structure: PeriodicUnaryStructure
    formula: Formula
    parts: tuple[tuple[tuple[int, ...], Count], ...]

    @property
    def arity(self) -> int:
        return len(free_vars(self.formula))

    def __repr__(self) -> str:
        return f"ShapeRealizations({pretty(self.formula)!r}, shapes={len(self.parts)}, size={self.cardinality()})"

    def __contains__(self, t) -> bool:
        t = tuple(t)
        return len(t) == self.arity and all(e >= 0 for e in t) and \
            _holds_periodic(self.structure, self.formula, dict(zip(free_vars(self.formula), t)))

    def cardinality(self) -> Count:
        total = Finite(0)
        for _, mult in self.parts:
            total = total + mult
        return total

    def finite_members(self) -> frozenset:
        if not self.cardinality().is_finite:
            raise ValueError("realization set is infinite")
        pool = sorted(m for cls in self.structure.color_classes.values() if cls.is_finite
                      for m in cls.finite_members())
        return frozenset(t for t in itertools.product(pool, repeat=self.arity) if t in self)


RealizationSet = Union[frozenset, PeriodicSet, ShapeRealizations]


def cardinality(rs: RealizationSet) -> Count:
    if isinstance(rs, (frozenset, set)):
        return Finite(len(rs))
    return rs.cardinality()


def contains(rs: RealizationSet, t: Sequence[int]) -> bool:
    t = tuple(t)
    if isinstance(rs, PeriodicSet):
        return len(t) == 1 and t[0] in rs
    return t in rs


def explicit_members(rs: RealizationSet) -> frozenset:
    """All tuples of a finite realization set."""
    if isinstance(rs, (frozenset, set)):
        return frozenset(rs)
    if isinstance(rs, PeriodicSet):
        return frozenset((m,) for m in rs.finite_members())
    return rs.finite_members()


# --------------------------------------------------------- table evaluation


class TableEvaluator:
    """Truth tables of formulas over a batch of same-size finite structures.

    A table has shape ``(B, d_0, ..., d_{k-1})`` where axis ``i + 1`` carries
    variable ``v_i``; ``d_i`` is ``n`` when ``v_i`` is free and 1 otherwise,
    so tables broadcast against each other.  Tables are memoized per formula.
    """

    def __init__(self, sig: Signature, n: int, arrays: Mapping[str, np.ndarray], nvars: int):
        self.sig = sig
        self.n = n
        self.nvars = nvars
        self.arrays = {name: np.asarray(arrays[name], dtype=bool) for name in sig.names}
        self.batch = next(iter(self.arrays.values())).shape[0] if self.arrays else 1
        self.memo: dict[Formula, np.ndarray] = {}
        self._counts: dict[tuple, np.ndarray] = {}

    @classmethod
    def for_structures(cls, structures: Sequence[FiniteStructure], formulas: Iterable[Formula] = (),
                       nvars: int | None = None) -> "TableEvaluator":
        structures = list(structures)
        sig, n = structures[0].signature, structures[0].size
        for M in structures:
            if M.signature != sig or M.size != n:
                raise SignatureMismatch("a batch needs one signature and one universe size")
        if nvars is None:
            nvars = 1 + max((max(all_vars(phi), default=-1) for phi in formulas), default=0)
        arrays = {name: np.stack([M.array(name) for M in structures]) for name in sig.names}
        return cls(sig, n, arrays, max(nvars, 1))

    def _shape(self, axes: dict[int, int], batch=True) -> list[int]:
        shape = [self.batch if batch else 1] + [1] * self.nvars
        for v, size in axes.items():
            shape[v + 1] = size
        return shape

    def table(self, phi: Formula) -> np.ndarray:
        got = self.memo.get(phi)
        if got is None:
            got = self.memo[phi] = self._compute(phi)
        return got

    def _compute(self, phi: Formula) -> np.ndarray:
        if isinstance(phi, Atom):
            arr = self.arrays[phi.rel]
            letters = {v: chr(ord("c") + v) for v in sorted(set(phi.args))}
            if max(letters) >= self.nvars:
                raise ValueError(f"variable v{max(letters)} outside evaluator range")
            spec = "b" + "".join(letters[v] for v in phi.args) + "->b" + "".join(letters.values())
            out = np.einsum(spec, arr)
            return out.reshape(self._shape({v: self.n for v in letters}))
        if isinstance(phi, Equal):
            if phi.left == phi.right:
                return np.ones(self._shape({}, batch=False), dtype=bool)
            eye = np.eye(self.n, dtype=bool)
            return eye.reshape(self._shape({phi.left: self.n, phi.right: self.n}, batch=False))
        if isinstance(phi, Not):
            return ~self.table(phi.body)
        if isinstance(phi, And):
            out = self.table(phi.items[0])
            for x in phi.items[1:]:
                out = out & self.table(x)
            return out
        if isinstance(phi, Or):
            out = self.table(phi.items[0])
            for x in phi.items[1:]:
                out = out | self.table(x)
            return out
        if isinstance(phi, Exists):
            return self.table(phi.body).any(axis=phi.var + 1, keepdims=True)
        if isinstance(phi, Forall):
            return self.table(phi.body).all(axis=phi.var + 1, keepdims=True)
        if isinstance(phi, ExistsAtLeast):
            # the count table is shared by every threshold over the same body
            key = (phi.vars, phi.body)
            counts = self._counts.get(key)
            if counts is None:
                body = self.table(phi.body)
                wide = tuple(v + 1 for v in phi.vars if body.shape[v + 1] > 1)
                flat = len(phi.vars) - len(wide)
                counts = body.sum(axis=wide, keepdims=True, dtype=np.int64) if wide else body.astype(np.int64)
                counts = self._counts[key] = counts * self.n ** flat
            return counts >= phi.n
        raise TypeError(f"not a formula: {phi!r}")

    def full_table(self, phi: Formula) -> np.ndarray:
        """Table broadcast to ``n`` along the free-variable axes."""
        t = self.table(phi)
        return np.broadcast_to(t, self._shape({v: self.n for v in free_vars(phi)}))

    def counts(self, phi: Formula) -> np.ndarray:
        """Realization counts for every structure in the batch (int64)."""
        t = self.table(phi)
        fv = free_vars(phi)
        thin = sum(1 for v in fv if t.shape[v + 1] == 1)
        return t.reshape(t.shape[0], -1).sum(axis=1, dtype=np.int64) * self.n ** thin \
            if t.shape[0] == self.batch else np.full(self.batch, int(t.sum()) * self.n ** thin, dtype=np.int64)

    def truth(self, phi: Formula) -> np.ndarray:
        """Sentence truth values for the batch."""
        if free_vars(phi):
            raise ValueError(f"{phi} is not a sentence")
        return np.broadcast_to(self.table(phi).reshape(-1), (self.batch,))

    def tuples(self, phi: Formula, b: int) -> frozenset:
        """Realization set of structure ``b`` as explicit tuples over the free variables."""
        fv = free_vars(phi)
        t = self.full_table(phi)
        row = t[b if t.shape[0] > 1 else 0]
        sub = row[tuple(slice(None) if v in fv else 0 for v in range(self.nvars))]
        return frozenset(tuple(int(x) for x in idx) for idx in np.argwhere(sub))

    def release(self, keep: Iterable[Formula] = ()):
        keep = set(keep)
        self.memo = {phi: t for phi, t in self.memo.items() if phi in keep}
        self._counts = {}


def _evaluator(M: FiniteStructure, phi: Formula) -> TableEvaluator:
    return TableEvaluator.for_structures([M], [phi])


# ------------------------------------------------------ realizations/counts


def realizations(M: Structure, phi: Formula) -> RealizationSet:
    """``phi``'s realization set: satisfying tuples over its free variables."""
    _checked(M.signature, phi)
    fv = free_vars(phi)
    if isinstance(M, FiniteStructure):
        return _evaluator(M, phi).tuples(phi, 0)
    if not fv:
        return frozenset({()}) if _holds_periodic(M, phi, {}) else frozenset()
    if len(fv) == 1:
        out = PeriodicSet()
        for cls in M.color_classes.values():
            rep = next(cls.members())
            if _holds_periodic(M, phi, {fv[0]: rep}):
                out = out | cls
        return out
    parts = tuple((rep, mult) for rep, mult in shapes(M, len(fv))
                  if _holds_periodic(M, phi, dict(zip(fv, rep))))
    return ShapeRealizations(M, phi, parts)


@lru_cache(maxsize=1 << 16)
def _periodic_count(M: PeriodicUnaryStructure, phi: Formula) -> Count:
    fv = free_vars(phi)
    if len(fv) != 1:
        return cardinality(realizations(M, phi))
    total = Finite(0)
    for key, cls in M.color_classes.items():
        if _holds_periodic(M, phi, {fv[0]: next(cls.members())}):
            total = total + M.class_sizes[key]
    return total


def count(M: Structure, phi: Formula) -> Count:
    """Cardinality of ``phi``'s realization set in ``M``."""
    _checked(M.signature, phi)
    if isinstance(M, FiniteStructure):
        return Finite(int(_evaluator(M, phi).counts(phi)[0]))
    return _periodic_count(M, phi)


def count_vector(M: Structure, formulas: Iterable[Formula]) -> tuple[Count, ...]:
    formulas = list(formulas)
    for phi in formulas:
        _checked(M.signature, phi)
    if isinstance(M, FiniteStructure):
        ev = TableEvaluator.for_structures([M], formulas)
        return tuple(Finite(int(ev.counts(phi)[0])) for phi in formulas)
    return tuple(_periodic_count(M, phi) for phi in formulas)


def count_matrix(structures: Sequence[FiniteStructure], formulas: Sequence[Formula],
                 chunk: int = 4096) -> np.ndarray:
    """Counts of every formula in every finite structure, shape ``(S, F)``.

    Structures are grouped by universe size and evaluated in batches.
    """
    formulas = list(formulas)
    out = np.zeros((len(structures), len(formulas)), dtype=np.int64)
    if not structures:
        return out
    sig = structures[0].signature
    for phi in formulas:
        _checked(sig, phi)
    nvars = 1 + max((max(all_vars(phi), default=-1) for phi in formulas), default=0)
    by_size: dict[int, list[int]] = {}
    for i, M in enumerate(structures):
        by_size.setdefault(M.size, []).append(i)
    for idx in by_size.values():
        for start in range(0, len(idx), chunk):
            block = idx[start:start + chunk]
            ev = TableEvaluator.for_structures([structures[i] for i in block], nvars=nvars)
            for j, phi in enumerate(formulas):
                out[block, j] = ev.counts(phi)
    return out
