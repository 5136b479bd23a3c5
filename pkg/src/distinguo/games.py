"""Ehrenfeucht-Fraisse games by exhaustive search.

Moves are pruned by twin classes: two unpebbled elements that are swapped by
an automorphism of their structure lead to equivalent positions, so only one
representative per class is tried.  In a finite structure, ``a`` and ``b``
are twins when the transposition ``(a b)`` is an automorphism; in a periodic
unary structure, color classes are twin classes.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from functools import lru_cache

from .errors import BudgetExceeded
from .semantics import _fresh
from .structures import FiniteStructure, Structure


def budget_from_env() -> int | None:
    raw = os.environ.get("DISTINGUO_BUDGET")
    return int(raw) if raw else None


@dataclass(frozen=True)
class Move:
    round: int
    side: str  # "left" or "right": where the spoiler played
    element: int
    reply: int | None  # duplicator's answer on the principal line; None if none survives


def _swap_is_automorphism(M: FiniteStructure, a: int, b: int) -> bool:
    def sw(x):
        return b if x == a else a if x == b else x

    for name in M.signature.names:
        rel = M.relation(name)
        for t in rel:
            if (a in t or b in t) and tuple(sw(x) for x in t) not in rel:
                return False
    return True


@lru_cache(maxsize=4096)
def twin_classes(M: FiniteStructure) -> tuple[tuple[int, ...], ...]:
    classes: list[list[int]] = []
    for a in range(M.size):
        for cls in classes:
            if _swap_is_automorphism(M, cls[0], a):
                cls.append(a)
                break
        else:
            classes.append([a])
    return tuple(tuple(c) for c in classes)


def representatives(M: Structure, pebbled: set[int]) -> list[int]:
    """One unpebbled element from each twin class that still has one."""
    out = []
    if isinstance(M, FiniteStructure):
        for cls in twin_classes(M):
            for a in cls:
                if a not in pebbled:
                    out.append(a)
                    break
    else:
        for cls in M.color_classes.values():
            out.extend(_fresh(cls, pebbled, 1))
    return out


class _Game:
    def __init__(self, M: Structure, N: Structure, budget: int | None):
        self.M, self.N = M, N
        self.sig = M.signature
        self.eq = self.sig.with_equality
        self.budget = budget
        self.nodes = 0
        self.memo: dict = {}

    def compatible(self, pos: tuple, pair: tuple[int, int]) -> bool:
        """Does extending the partial isomorphism ``pos`` by ``pair`` keep it one?"""
        a, b = pair
        if self.eq:
            for x, y in pos:
                if (x == a) != (y == b):
                    return False
        full = pos + (pair,)
        last = len(pos)
        for name, arity in self.sig.relations:
            for idx in itertools.product(range(last + 1), repeat=arity):
                if last not in idx:
                    continue
                left = tuple(full[i][0] for i in idx)
                right = tuple(full[i][1] for i in idx)
                if self.M.holds(name, left) != self.N.holds(name, right):
                    return False
        return True

    def replies(self, pos: tuple, side: int, x: int):
        other = self.N if side == 0 else self.M
        pebbled = [p[1 - side] for p in pos]
        for y in dict.fromkeys(pebbled + representatives(other, set(pebbled))):
            pair = (x, y) if side == 0 else (y, x)
            if self.compatible(pos, pair):
                yield pair

    def duplicator_wins(self, pos: tuple, k: int) -> bool:
        if k == 0:
            return True
        key = (frozenset(pos), k)
        if key in self.memo:
            return self.memo[key] is None
        self.nodes += 1
        if self.budget is not None and self.nodes > self.budget:
            raise BudgetExceeded(f"EF search exceeded {self.budget} nodes")
        for side, S in ((0, self.M), (1, self.N)):
            pebbled = {p[side] for p in pos}
            for x in representatives(S, pebbled):
                if not any(self.duplicator_wins(pos + (pair,), k - 1) for pair in self.replies(pos, side, x)):
                    self.memo[key] = (side, x)
                    return False
        self.memo[key] = None
        return True

    def trace(self, q: int) -> list[Move]:
        pos: tuple = ()
        out = []
        for r in range(q):
            win = self.memo.get((frozenset(pos), q - r))
            if win is None:
                break
            side, x = win
            pair = next(iter(self.replies(pos, side, x)), None)
            reply = None if pair is None else pair[1 - side]
            out.append(Move(r + 1, "left" if side == 0 else "right", x, reply))
            if pair is None:
                break
            pos = pos + (pair,)
        return out


def ef_game(M: Structure, N: Structure, q: int, budget: int | None = None) -> tuple[bool, list[Move]]:
    """Play the ``q``-round game; returns (duplicator wins, spoiler trace)."""
    game = _Game(M, N, budget if budget is not None else budget_from_env())
    if game.duplicator_wins((), q):
        return True, []
    return False, game.trace(q)
