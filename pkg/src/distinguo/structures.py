"""Relational signatures, cardinalities and the two structure backends.

Finite structures live on ``{0..n-1}`` and may use relations of any arity.
Countable structures live on the naturals and are restricted to unary
relations, each given as an ultimately periodic set.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property, total_ordering
from typing import Iterable, Iterator, Mapping, Union

import numpy as np

from .errors import (
    ArityMismatch,
    EmptyCycle,
    OutOfUniverse,
    StructureError,
    UnknownRelation,
)

_REL_NAME = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")
RESERVED_NAMES = frozenset({"E", "A"})


# --------------------------------------------------------------------- counts


@total_ordering
@dataclass(frozen=True)
class Count:
    """A cardinality: a natural number, or infinity when ``value`` is None."""

    value: int | None = None

    @property
    def is_finite(self) -> bool:
        return self.value is not None

    def __lt__(self, other: "Count") -> bool:
        if not isinstance(other, Count):
            return NotImplemented
        if self.value is None:
            return False
        return other.value is None or self.value < other.value

    def __add__(self, other: "Count") -> "Count":
        if self.value is None or other.value is None:
            return Infinite
        return Count(self.value + other.value)

    def __mul__(self, other: "Count") -> "Count":
        # an empty factor kills the product even against infinity
        if self.value == 0 or other.value == 0:
            return Count(0)
        if self.value is None or other.value is None:
            return Infinite
        return Count(self.value * other.value)

    def at_least(self, k: int) -> bool:
        return self.value is None or self.value >= k

    def __str__(self) -> str:
        return "inf" if self.value is None else f"fin:{self.value}"

    def __repr__(self) -> str:
        return "Infinite" if self.value is None else f"Finite({self.value})"

    def to_json(self):
        return "inf" if self.value is None else {"fin": self.value}


def Finite(k: int) -> Count:
    if k < 0:
        raise ValueError("a finite count is a natural number")
    return Count(int(k))


Infinite = Count(None)


# ------------------------------------------------------------------ signature


@dataclass(frozen=True)
class Signature:
    relations: tuple[tuple[str, int], ...]
    with_equality: bool = False

    def __post_init__(self):
        rels = tuple((str(name), int(arity)) for name, arity in self.relations)
        object.__setattr__(self, "relations", rels)
        seen = set()
        for name, arity in rels:
            if not _REL_NAME.match(name) or name in RESERVED_NAMES:
                raise StructureError(f"bad relation name {name!r}")
            if name in seen:
                raise StructureError(f"duplicate relation name {name!r}")
            if arity < 1:
                raise StructureError(f"relation {name} needs arity >= 1, got {arity}")
            seen.add(name)

    @classmethod
    def of(cls, *, eq: bool = False, **arities: int) -> "Signature":
        """``Signature.of(R=1, S=2)``; keyword order fixes relation order."""
        return cls(tuple(arities.items()), eq)

    @cached_property
    def _arity(self) -> dict[str, int]:
        return dict(self.relations)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def arity(self, name: str) -> int:
        try:
            return self._arity[name]
        except KeyError:
            raise UnknownRelation(f"unknown relation {name!r}") from None

    def index(self, name: str) -> int:
        self.arity(name)
        return self.names.index(name)

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.relations), default=0)

    @property
    def is_unary(self) -> bool:
        return all(a == 1 for _, a in self.relations)

    def __str__(self) -> str:
        parts = [f"{n}:{a}" for n, a in self.relations]
        if self.with_equality:
            parts.append("eq")
        return " ".join(parts)


# ----------------------------------------------------------- finite backend


@dataclass(frozen=True)
class FiniteStructure:
    signature: Signature
    size: int
    interp: tuple[tuple[tuple[int, ...], ...], ...]

    @cached_property
    def _sets(self) -> dict[str, frozenset]:
        return {name: frozenset(ts) for name, ts in zip(self.signature.names, self.interp)}

    def relation(self, name: str) -> frozenset:
        self.signature.arity(name)
        return self._sets[name]

    def holds(self, name: str, args: tuple[int, ...]) -> bool:
        return tuple(args) in self.relation(name)

    @cached_property
    def _arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for (name, arity), tuples in zip(self.signature.relations, self.interp):
            arr = np.zeros((self.size,) * arity, dtype=bool)
            for t in tuples:
                arr[t] = True
            out[name] = arr
        return out

    def array(self, name: str) -> np.ndarray:
        """Boolean incidence array of shape ``(n,) * arity``; do not mutate."""
        self.signature.arity(name)
        return self._arrays[name]

    @property
    def universe(self) -> range:
        return range(self.size)

    def __str__(self) -> str:
        rels = ", ".join(
            f"{name}={sorted(t[0] for t in ts) if a == 1 else list(ts)}"
            for (name, a), ts in zip(self.signature.relations, self.interp)
        )
        return f"<finite n={self.size} {rels}>"


def make_finite(sig: Signature, n: int, interp: Mapping[str, Iterable]) -> FiniteStructure:
    """Build a canonical finite structure on ``{0..n-1}``.

    Unary relations may list bare integers instead of 1-tuples.  Relations
    missing from ``interp`` are empty.
    """
    if n < 1:
        raise StructureError("universe size must be positive")
    for name in interp:
        sig.arity(name)
    rels = []
    for name, arity in sig.relations:
        tuples = set()
        for item in interp.get(name, ()):
            t = (item,) if isinstance(item, (int, np.integer)) else tuple(item)
            if len(t) != arity:
                raise ArityMismatch(f"{name}: tuple {t} has length {len(t)}, arity is {arity}")
            for e in t:
                if not 0 <= int(e) < n:
                    raise OutOfUniverse(f"{name}: tuple {t} leaves universe of size {n}")
            tuples.add(tuple(int(e) for e in t))
        rels.append(tuple(sorted(tuples)))
    return FiniteStructure(sig, n, tuple(rels))


def finite_from_arrays(sig: Signature, arrays: Mapping[str, np.ndarray]) -> FiniteStructure:
    n = None
    interp = {}
    for name, arity in sig.relations:
        arr = np.asarray(arrays[name], dtype=bool)
        if arr.ndim != arity:
            raise ArityMismatch(f"{name}: array has {arr.ndim} axes, arity is {arity}")
        n = arr.shape[0] if n is None else n
        interp[name] = [tuple(int(e) for e in t) for t in zip(*np.nonzero(arr))]
    return make_finite(sig, n, interp)


def all_finite_structures(sig: Signature, n: int) -> Iterator[FiniteStructure]:
    """Every structure over ``sig`` with universe ``{0..n-1}``, in a fixed order."""
    spaces = []
    for _, arity in sig.relations:
        tuples = list(itertools.product(range(n), repeat=arity))
        spaces.append([[t for t, bit in zip(tuples, bits) if bit]
                       for bits in itertools.product((0, 1), repeat=len(tuples))])
    for choice in itertools.product(*spaces):
        yield make_finite(sig, n, dict(zip(sig.names, choice)))


def random_finite_structure(sig: Signature, n: int, rng, density: float = 0.5) -> FiniteStructure:
    """Random structure; ``rng`` is a ``numpy.random.Generator``."""
    arrays = {name: rng.random((n,) * arity) < density for name, arity in sig.relations}
    return finite_from_arrays(sig, arrays)


# --------------------------------------------------------- periodic backend


def _bits(seq) -> tuple[int, ...]:
    out = tuple(int(b) for b in seq)
    if any(b not in (0, 1) for b in out):
        raise StructureError(f"not a bit vector: {seq!r}")
    return out


def _primitive_root(word: tuple[int, ...]) -> tuple[int, ...]:
    c = len(word)
    for d in range(1, c + 1):
        if c % d == 0 and word[:d] * (c // d) == word:
            return word[:d]
    return word


@dataclass(frozen=True)
class PeriodicSet:
    """Ultimately periodic subset of the naturals, always held in normal form.

    ``m`` belongs to the set iff ``prefix[m]`` (for ``m < len(prefix)``) or
    ``cycle[(m - len(prefix)) % len(cycle)]`` is 1.  The normal form has the
    shortest primitive cycle and the shortest prefix, so two values compare
    equal exactly when they denote the same set.
    """

    prefix: tuple[int, ...] = ()
    cycle: tuple[int, ...] = (0,)

    def __post_init__(self):
        prefix, cycle = _bits(self.prefix), _bits(self.cycle)
        if not cycle:
            raise EmptyCycle("cycle must be nonempty")
        cycle = _primitive_root(cycle)
        while prefix and prefix[-1] == cycle[-1]:
            prefix = prefix[:-1]
            cycle = cycle[-1:] + cycle[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "cycle", cycle)

    @classmethod
    def from_members(cls, members: Iterable[int]) -> "PeriodicSet":
        members = set(members)
        top = max(members, default=-1)
        return cls(tuple(int(i in members) for i in range(top + 1)), (0,))

    @property
    def p(self) -> int:
        return len(self.prefix)

    @property
    def c(self) -> int:
        return len(self.cycle)

    def __contains__(self, m: int) -> bool:
        if m < 0:
            return False
        if m < self.p:
            return bool(self.prefix[m])
        return bool(self.cycle[(m - self.p) % self.c])

    @property
    def is_finite(self) -> bool:
        return not any(self.cycle)

    def cardinality(self) -> Count:
        return Finite(sum(self.prefix)) if self.is_finite else Infinite

    def is_empty(self) -> bool:
        return self.is_finite and not any(self.prefix)

    def members(self) -> Iterator[int]:
        """Members in increasing order; endless when the set is infinite."""
        for i, b in enumerate(self.prefix):
            if b:
                yield i
        if self.is_finite:
            return
        for base in itertools.count(self.p, self.c):
            for j, b in enumerate(self.cycle):
                if b:
                    yield base + j

    def finite_members(self) -> tuple[int, ...]:
        if not self.is_finite:
            raise ValueError("set is infinite")
        return tuple(i for i, b in enumerate(self.prefix) if b)

    def rank(self, a: int) -> int:
        """Number of members strictly below ``a``."""
        if a <= self.p:
            return sum(self.prefix[:max(a, 0)])
        full, rem = divmod(a - self.p, self.c)
        return sum(self.prefix) + full * sum(self.cycle) + sum(self.cycle[:rem])

    def select(self, i: int) -> int:
        """The ``i``-th member (0-based) in increasing order."""
        ones = [j for j, b in enumerate(self.prefix) if b]
        if i < len(ones):
            return ones[i]
        i -= len(ones)
        cyc = [j for j, b in enumerate(self.cycle) if b]
        if not cyc:
            raise IndexError("set has fewer members")
        full, r = divmod(i, len(cyc))
        return self.p + full * self.c + cyc[r]

    def window(self, p: int, c: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Unnormalized (prefix, cycle) of lengths ``p >= self.p`` and ``c``, a multiple of the period."""
        if p < self.p or c % self.c:
            raise ValueError("window must extend the normal form")
        return (tuple(int(m in self) for m in range(p)),
                tuple(int(m in self) for m in range(p, p + c)))

    def _combine(self, other: "PeriodicSet", op) -> "PeriodicSet":
        p, c = max(self.p, other.p), math.lcm(self.c, other.c)
        a, b = self.window(p, c), other.window(p, c)
        return PeriodicSet(tuple(map(op, a[0], b[0])), tuple(map(op, a[1], b[1])))

    def __and__(self, other):
        return self._combine(other, lambda x, y: x & y)

    def __or__(self, other):
        return self._combine(other, lambda x, y: x | y)

    def complement(self) -> "PeriodicSet":
        return PeriodicSet(tuple(1 - b for b in self.prefix), tuple(1 - b for b in self.cycle))

    def __str__(self) -> str:
        return "prefix:%s cycle:%s" % ("".join(map(str, self.prefix)), "".join(map(str, self.cycle)))


def periodic_normalize(prefix, cycle) -> PeriodicSet:
    return PeriodicSet(tuple(prefix), tuple(cycle))


def periodic_cardinality(s: PeriodicSet) -> Count:
    return s.cardinality()


def all_periodic_sets(max_prefix: int = 6, max_cycle: int = 4) -> list[PeriodicSet]:
    """Distinct normal forms reachable from prefixes/cycles within the bounds."""
    seen = {}
    for p in range(max_prefix + 1):
        for prefix in itertools.product((0, 1), repeat=p):
            for c in range(1, max_cycle + 1):
                for cycle in itertools.product((0, 1), repeat=c):
                    s = PeriodicSet(prefix, cycle)
                    seen.setdefault(s, None)
    return list(seen)


@dataclass(frozen=True)
class PeriodicUnaryStructure:
    signature: Signature
    interp: tuple[PeriodicSet, ...]

    def __post_init__(self):
        if not self.signature.is_unary:
            raise ArityMismatch("periodic structures allow unary relations only")
        if len(self.interp) != len(self.signature.relations):
            raise StructureError("one periodic set per relation required")

    size = None

    def relation(self, name: str) -> PeriodicSet:
        return self.interp[self.signature.index(name)]

    def holds(self, name: str, args: tuple[int, ...]) -> bool:
        return args[0] in self.relation(name)

    def color(self, a: int) -> tuple[int, ...]:
        return tuple(int(a in s) for s in self.interp)

    @cached_property
    def color_classes(self) -> dict[tuple[int, ...], PeriodicSet]:
        """Nonempty color classes, keyed by membership vector."""
        p = max((s.p for s in self.interp), default=0)
        c = math.lcm(*(s.c for s in self.interp)) if self.interp else 1
        colors = [self.color(m) for m in range(p + c)]
        classes = {}
        for key in sorted(set(colors)):
            bits = [int(col == key) for col in colors]
            classes[key] = PeriodicSet(tuple(bits[:p]), tuple(bits[p:]))
        return classes

    @cached_property
    def class_sizes(self) -> dict[tuple[int, ...], Count]:
        return {key: cls.cardinality() for key, cls in self.color_classes.items()}

    def __str__(self) -> str:
        rels = ", ".join(f"{n}=[{s}]" for n, s in zip(self.signature.names, self.interp))
        return f"<periodic {rels}>"


def make_periodic(sig: Signature, interp: Mapping[str, object]) -> PeriodicUnaryStructure:
    """Values may be PeriodicSet instances or ``(prefix, cycle)`` pairs."""
    for name in interp:
        sig.arity(name)
    sets = []
    for name in sig.names:
        v = interp.get(name, PeriodicSet())
        sets.append(v if isinstance(v, PeriodicSet) else PeriodicSet(*v))
    return PeriodicUnaryStructure(sig, tuple(sets))


Structure = Union[FiniteStructure, PeriodicUnaryStructure]


def backend(m: Structure) -> str:
    return "finite" if isinstance(m, FiniteStructure) else "periodic"
