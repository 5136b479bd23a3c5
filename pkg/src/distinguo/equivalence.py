"""Realization-count equivalence, isomorphism, the permutation action and EF equivalence."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence


from .errors import BackendMismatch, BudgetExceeded, NotABijection, SignatureMismatch
from .formulas import Formula, pretty
from .games import Move, budget_from_env, ef_game
from .semantics import count, count_matrix, count_vector
from .structures import (
    Count,
    FiniteStructure,
    PeriodicSet,
    PeriodicUnaryStructure,
    Structure,
    backend,
)


@dataclass(frozen=True)
class Distinction:
    """A formula whose realization counts differ in the two structures."""

    formula: Formula
    left: Count
    right: Count

    def __str__(self):
        return f"{pretty(self.formula)}: {self.left} vs {self.right}"


@dataclass(frozen=True)
class EquivReport:
    relation: str  # "E_A", "iso" or "ef_rank_<q>"
    verdict: bool
    witness: object = None


def _compatible(M: Structure, N: Structure):
    if backend(M) != backend(N):
        raise BackendMismatch(f"cannot compare a {backend(M)} and a {backend(N)} structure")
    if M.signature != N.signature:
        raise SignatureMismatch(f"signatures differ: [{M.signature}] vs [{N.signature}]")


# ------------------------------------------------------------------- E_A


def distinguishable(M: Structure, N: Structure, A: Iterable[Formula]) -> Distinction | None:
    """First formula of ``A`` (in order) on which the realization counts differ."""
    _compatible(M, N)
    for phi in A:
        cm, cn = count(M, phi), count(N, phi)
        if cm != cn:
            return Distinction(phi, cm, cn)
    return None


def e_equiv(M: Structure, N: Structure, A: Iterable[Formula]) -> EquivReport:
    d = distinguishable(M, N, A)
    return EquivReport("E_A", d is None, d)


# ------------------------------------------------------------ permutations


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``{0..len-1}``; as a map on the naturals it fixes everything beyond."""

    images: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(int(x) for x in self.images))
        if sorted(self.images) != list(range(len(self.images))):
            raise NotABijection(f"{self.images} is not a permutation of 0..{len(self.images) - 1}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def swap(cls, n: int, a: int, b: int) -> "Permutation":
        im = list(range(n))
        im[a], im[b] = b, a
        return cls(tuple(im))

    def __len__(self):
        return len(self.images)

    def __call__(self, x: int) -> int:
        return self.images[x] if x < len(self.images) else x

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other``: apply ``other`` first."""
        n = max(len(self), len(other))
        return Permutation(tuple(self(other(x)) for x in range(n)))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for x, y in enumerate(self.images):
            inv[y] = x
        return Permutation(tuple(inv))

    def as_dict(self) -> dict[int, int]:
        return dict(enumerate(self.images))


@dataclass(frozen=True)
class ClassMap:
    """Isomorphism between countable unary structures with matching color-class sizes.

    Each color class of ``source`` is sent order-preservingly onto the same
    color class of ``target``; for a single relation R this is the union of
    a bijection between the R-parts and one between the complements.
    """

    source: PeriodicUnaryStructure
    target: PeriodicUnaryStructure

    def __call__(self, a: int) -> int:
        key = self.source.color(a)
        i = self.source.color_classes[key].rank(a)
        return self.target.color_classes[key].select(i)

    def inverse(self) -> "ClassMap":
        return ClassMap(self.target, self.source)

    def parts(self) -> dict[tuple[int, ...], tuple[PeriodicSet, PeriodicSet]]:
        return {key: (cls, self.target.color_classes[key]) for key, cls in self.source.color_classes.items()}

    def segment(self, bound: int) -> dict[int, int]:
        return {a: self(a) for a in range(bound)}


def act(g: Permutation, M: Structure) -> Structure:
    """Relabel ``M`` along ``g``: ``R`` becomes ``{g(t) : t in R}``."""
    if not isinstance(g, Permutation):
        raise NotABijection("act needs a Permutation")
    if isinstance(M, FiniteStructure):
        if len(g) != M.size:
            raise NotABijection(f"permutation of {len(g)} points acting on universe of size {M.size}")
        interp = tuple(tuple(sorted(tuple(g(x) for x in t) for t in rel)) for rel in M.interp)
        return FiniteStructure(M.signature, M.size, interp)
    ginv = g.inverse()
    sets = []
    for s in M.interp:
        p = max(s.p, len(g))
        prefix, cycle = s.window(p, s.c)
        sets.append(PeriodicSet(tuple(int(ginv(a) in s) for a in range(p)), cycle))
    return PeriodicUnaryStructure(M.signature, tuple(sets))


# ------------------------------------------------------------- isomorphism


def element_invariant(M: FiniteStructure, a: int) -> tuple:
    """Per relation and position, how many tuples carry ``a`` there; plus loop counts."""
    inv = []
    for name, arity in M.signature.relations:
        rel = M.relation(name)
        inv.extend(sum(1 for t in rel if t[i] == a) for i in range(arity))
        inv.append(sum(1 for t in rel if all(x == a for x in t)))
    return tuple(inv)


def structure_invariant(M: Structure) -> tuple:
    """Isomorphism invariant used for bucketing; complete for periodic structures."""
    if isinstance(M, FiniteStructure):
        return (M.size, tuple(len(r) for r in M.interp),
                tuple(sorted(element_invariant(M, a) for a in range(M.size))))
    return tuple(sorted((key, cls.cardinality().value if cls.is_finite else -1)
                        for key, cls in M.color_classes.items()))


def _finite_iso(M: FiniteStructure, N: FiniteStructure, budget: int | None) -> Permutation | None:
    n = M.size
    if n != N.size or tuple(map(len, M.interp)) != tuple(map(len, N.interp)):
        return None
    inv_m = [element_invariant(M, a) for a in range(n)]
    inv_n = [element_invariant(N, b) for b in range(n)]
    if sorted(inv_m) != sorted(inv_n):
        return None
    rels = [(M.relation(name), N.relation(name)) for name in M.signature.names]
    touching_m = [[(i, t) for i, (rm, _) in enumerate(rels) for t in rm if a in t] for a in range(n)]
    touching_n = [[(i, t) for i, (_, rn) in enumerate(rels) for t in rn if b in t] for b in range(n)]
    order = sorted(range(n), key=lambda a: (sum(x == inv_m[a] for x in inv_m), a))
    fwd = [-1] * n
    back = [-1] * n
    nodes = 0

    def ok(a, b):
        for i, t in touching_m[a]:
            if all(fwd[x] >= 0 for x in t) and tuple(fwd[x] for x in t) not in rels[i][1]:
                return False
        for i, t in touching_n[b]:
            if all(back[y] >= 0 for y in t) and tuple(back[y] for y in t) not in rels[i][0]:
                return False
        return True

    def search(k):
        nonlocal nodes
        if k == n:
            return True
        nodes += 1
        if budget is not None and nodes > budget:
            raise BudgetExceeded(f"isomorphism search exceeded {budget} nodes")
        a = order[k]
        for b in range(n):
            if back[b] < 0 and inv_n[b] == inv_m[a]:
                fwd[a], back[b] = b, a
                if ok(a, b) and search(k + 1):
                    return True
                fwd[a], back[b] = -1, -1
        return False

    return Permutation(tuple(fwd)) if search(0) else None


def isomorphic(M: Structure, N: Structure, budget: int | None = None) -> EquivReport:
    """Isomorphism test; a positive verdict carries an explicit isomorphism."""
    _compatible(M, N)
    if isinstance(M, FiniteStructure):
        g = _finite_iso(M, N, budget if budget is not None else budget_from_env())
        return EquivReport("iso", g is not None, g)
    # class_sizes lists nonempty classes only, so equal dicts mean every
    # class (and hence every relation, a union of classes) has equal size
    same = M.class_sizes == N.class_sizes
    return EquivReport("iso", same, ClassMap(M, N) if same else None)


# ------------------------------------------------------------------ EF games


def _periodic_ef(M: PeriodicUnaryStructure, N: PeriodicUnaryStructure, q: int) -> tuple[bool, list[Move]]:
    cap = q if M.signature.with_equality else min(q, 1)
    empty = PeriodicSet()
    for key in sorted(set(M.color_classes) | set(N.color_classes)):
        cm = M.color_classes.get(key, empty)
        cn = N.color_classes.get(key, empty)
        km = min(cm.cardinality(), Count(cap)).value
        kn = min(cn.cardinality(), Count(cap)).value
        if km != kn:
            side, big = ("left", cm) if km > kn else ("right", cn)
            picks = [big.select(i) for i in range(min(km, kn) + 1)]
            return False, [Move(i + 1, side, x, None) for i, x in enumerate(picks)]
    return True, []


def ef_equiv(M: Structure, N: Structure, q: int, budget: int | None = None) -> EquivReport:
    """Outcome of the ``q``-round EF game (duplicator wins iff M and N agree up to rank q)."""
    _compatible(M, N)
    if isinstance(M, FiniteStructure):
        verdict, trace = ef_game(M, N, q, budget)
    else:
        verdict, trace = _periodic_ef(M, N, q)
    return EquivReport(f"ef_rank_{q}", verdict, None if verdict else trace)


# ---------------------------------------------------------------- classify


@dataclass
class Partition:
    classes: list[list[int]] = field(default_factory=list)
    keys: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.classes)

    def labels(self, size: int) -> list[int]:
        out = [-1] * size
        for c, members in enumerate(self.classes):
            for i in members:
                out[i] = c
        return out


def _by_representative(items: Sequence[int], same: Callable[[int, int], bool], part: Partition, key=None):
    local: list[list[int]] = []
    for i in items:
        for cls in local:
            if same(cls[0], i):
                cls.append(i)
                break
        else:
            local.append([i])
    part.classes.extend(local)
    part.keys.extend([key] * len(local))


def classify(structures: Sequence[Structure], relation: str, *, formulas: Iterable[Formula] | None = None,
             q: int | None = None) -> Partition:
    """Partition ``structures`` under ``relation``: ``"ea"``, ``"iso"`` or ``"ef"``.

    E_A classes are keyed by count vectors over ``formulas``; isomorphism
    compares within invariant buckets; EF compares against one member of each
    class found so far, which is valid because each relation is transitive.
    """
    structures = list(structures)
    for M in structures[1:]:
        _compatible(structures[0], M)
    part = Partition()
    if not structures:
        return part
    if relation == "ea":
        formulas = list(formulas or ())
        if isinstance(structures[0], FiniteStructure):
            mat = count_matrix(structures, formulas)
            vectors = [tuple(int(x) for x in row) for row in mat]
        else:
            vectors = [tuple(str(c) for c in count_vector(M, formulas)) for M in structures]
        groups: dict = defaultdict(list)
        for i, v in enumerate(vectors):
            groups[v].append(i)
        for v, members in groups.items():
            part.classes.append(members)
            part.keys.append(v)
    elif relation == "iso":
        buckets: dict = defaultdict(list)
        for i, M in enumerate(structures):
            buckets[structure_invariant(M)].append(i)
        for key, members in buckets.items():
            _by_representative(members, lambda i, j: isomorphic(structures[i], structures[j]).verdict, part, key)
    elif relation == "ef":
        if q is None:
            raise ValueError("EF classification needs a rank q")
        _by_representative(range(len(structures)),
                           lambda i, j: ef_equiv(structures[i], structures[j], q).verdict, part)
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return part
