"""Executable pieces of the Borel decomposition of E_A.

For each formula the pair (x, y) lies in E_A when either both realization
sets are finite of the same size, witnessed by injections ``f, g : n -> seqs``
with ``t in X <-> g(f^-1(t)) in Y`` and ``t in Y <-> f(g^-1(t)) in X``, or both
sets are infinite, i.e. ``mu(m)`` lands in each of them for arbitrarily large
``m``.  The unbounded unions and intersections are evaluated against bounds
certified by the finite or periodic representation of the sets.

The product language used for the equality encoding names the two copies of
a relation ``R`` as ``R_0`` and ``R_1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BackendMismatch, NoCertificate, SignatureMismatch, TruncationTooSmall
from .formulas import And, ExistsAtLeast, Formula, all_vars, free_vars, iff, rename_relations
from .semantics import (
    ShapeRealizations,
    TableEvaluator,
    cardinality,
    contains,
    count,
    explicit_members,
    realizations,
    satisfies,
)
from .structures import (
    FiniteStructure,
    PeriodicSet,
    PeriodicUnaryStructure,
    Signature,
    Structure,
    backend,
)

Seq = tuple[int, ...]

# ------------------------------------------------------------------------ mu
#
# A finite sequence (a1, ..., ak) is coded by the set of bit positions
# s_i = a1 + ... + ai + (i - 1); the gaps between consecutive set bits, minus
# one, give back the entries.  Finite subsets of N correspond to naturals by
# binary expansion, so this is a bijection, with mu_inv(()) = 0.


def mu_inv(t: Sequence[int]) -> int:
    code, pos = 0, -1
    for a in t:
        if a < 0:
            raise ValueError("sequence entries are natural numbers")
        pos += a + 1
        code |= 1 << pos
    return code


def mu(m: int) -> Seq:
    """The finite sequence coded by ``m``; inverse of :func:`mu_inv`."""
    if m < 0:
        raise ValueError("codes are natural numbers")
    out, prev = [], -1
    while m:
        low = (m & -m).bit_length() - 1
        out.append(low - prev - 1)
        prev = low
        m &= m - 1
    return tuple(out)


# ----------------------------------------------------------- infinitude


def _core(X) -> tuple[bool, frozenset, int, int]:
    """(is finite, members inside the certificate box, box side, arity).

    For finite X the members are all of X.  For infinite X the box covers
    the prefixes plus one full period of every color class per coordinate,
    so each satisfied shape has a member inside it.
    """
    if isinstance(X, (frozenset, set)):
        return True, frozenset(X), 0, len(next(iter(X))) if X else 1
    if isinstance(X, PeriodicSet):
        if X.is_finite:
            return True, frozenset((m,) for m in X.finite_members()), 0, 1
        return False, frozenset((m,) for m in range(X.p + X.c) if m in X), X.p + X.c, 1
    if isinstance(X, ShapeRealizations):
        d = X.arity
        if cardinality(X).is_finite:
            return True, explicit_members(X), 0, d
        sets = X.structure.interp
        box = max((s.p for s in sets), default=0) + math.lcm(*(s.c for s in sets)) * max(d, 1)
        return False, frozenset(t for t in itertools.product(range(box), repeat=d) if contains(X, t)), box, d
    raise NoCertificate(f"no decidable representation for {type(X).__name__}")


def stabilization_bound(X) -> int:
    """Largest code of a member inside the certificate box."""
    return max((mu_inv(t) for t in _core(X)[1]), default=0)


def _shell(side: int, d: int) -> Iterator[Seq]:
    """Tuples of length d whose largest entry is exactly ``side``."""
    for t in itertools.product(range(side + 1), repeat=d):
        if side in t:
            yield t


def is_infinite_via_mu(X) -> bool:
    """Decide ``for all n there is m > n with mu(m) in X``.

    The inner predicate only weakens as ``n`` grows, so it is evaluated at
    the stabilization bound ``B``.  A finite X has every member's code at
    most ``B``, which refutes it there.  An infinite X repeats its pattern
    forever; ``m > B`` is found as the code of a member from a shell beyond
    the certificate box.
    """
    finite, core, box, d = _core(X)
    bound = max((mu_inv(t) for t in core), default=0)
    if finite:
        return False
    # a shell past (d + 1) * box holds codes above any code in the box, and
    # every run of ``box`` consecutive shells meets each infinite class
    for side in range(box, (d + 3) * box + 1):
        for t in _shell(side, d):
            if contains(X, t) and mu_inv(t) > bound:
                return True
    raise NoCertificate(f"no member coded above {bound} in the searched shells")


# --------------------------------------------------- equal finite cardinality


@dataclass(frozen=True)
class InjectionWitness:
    n: int
    f: tuple[Seq, ...]
    g: tuple[Seq, ...]

    def verify(self, X: Iterable[Seq], Y: Iterable[Seq]) -> bool:
        """Check injectivity and both transfer conditions on the support of X, Y, f, g.

        Off that support ``t`` is in neither set and neither map hits it, so
        both sides of each condition are false there.
        """
        X, Y = frozenset(X), frozenset(Y)
        if len(self.f) != self.n or len(self.g) != self.n:
            return False
        finv = {t: i for i, t in enumerate(self.f)}
        ginv = {t: i for i, t in enumerate(self.g)}
        if len(finv) != self.n or len(ginv) != self.n:
            return False
        for t in X | Y | finv.keys() | ginv.keys():
            if (t in X) != (t in finv and self.g[finv[t]] in Y):
                return False
            if (t in Y) != (t in ginv and self.f[ginv[t]] in X):
                return False
        return True


def _fresh_sequences(avoid: set, k: int) -> list[Seq]:
    out, m = [], 0
    while len(out) < k:
        t = mu(m)
        if t not in avoid:
            out.append(t)
        m += 1
    return out


def equal_finite_card_witness(X: Iterable[Seq], Y: Iterable[Seq]) -> InjectionWitness | None:
    """Witness ``(n, f, g)`` for ``|X| = |Y|`` finite, or None.

    The candidate takes ``n = |X|``, ``f`` listing X and ``g`` listing Y in
    sorted order (cut or padded with sequences outside both sets); it is
    returned only if it verifies.
    """
    X, Y = frozenset(map(tuple, X)), frozenset(map(tuple, Y))
    n = len(X)
    f = tuple(sorted(X))
    ys = sorted(Y)[:n]
    g = tuple(ys + _fresh_sequences(set(X | Y), n - len(ys)))
    w = InjectionWitness(n, f, g)
    return w if w.verify(X, Y) else None


def image(h: Sequence[Seq], S: Iterable[int]) -> frozenset:
    """``h*(S)`` for a map given as the list of its values on ``0..n-1``."""
    return frozenset(h[i] for i in S)


def preimage(h: Sequence[Seq], T: Iterable[Seq]) -> frozenset:
    T = set(T)
    return frozenset(i for i, t in enumerate(h) if t in T)


# --------------------------------------------------------- Borel membership


@lru_cache(maxsize=1 << 20)
def _finite_branch(X: frozenset, Y: frozenset) -> bool:
    return equal_finite_card_witness(X, Y) is not None


def branch(X, Y) -> str | None:
    """Which part of the decomposition contains the pair: "finite", "infinite" or None."""
    fin_x, fin_y = cardinality(X).is_finite, cardinality(Y).is_finite
    if fin_x and fin_y and _finite_branch(explicit_members(X), explicit_members(Y)):
        return "finite"
    if is_infinite_via_mu(X) and is_infinite_via_mu(Y):
        return "infinite"
    return None


def borel_branches(M: Structure, N: Structure, A: Iterable[Formula]) -> Iterator[tuple[Formula, str | None]]:
    if backend(M) != backend(N):
        raise BackendMismatch("structures use different backends")
    if M.signature != N.signature:
        raise SignatureMismatch("structures use different signatures")
    for phi in A:
        yield phi, branch(realizations(M, phi), realizations(N, phi))


def borel_membership(M: Structure, N: Structure, A: Iterable[Formula]) -> bool:
    """Is ``(M, N)`` in the set assembled for E_A?  Stops at the first failing formula."""
    return all(b is not None for _, b in borel_branches(M, N, A))


# --------------------------------------------------------- product language


def copy_name(name: str, side: int) -> str:
    return f"{name}_{side}"


def product_signature(sig: Signature) -> Signature:
    rels = [(copy_name(n, s), a) for s in (0, 1) for n, a in sig.relations]
    return Signature(tuple(rels), sig.with_equality)


def product_structure(M: Structure, N: Structure) -> Structure:
    """One structure over the doubled language whose two reducts are M and N."""
    if backend(M) != backend(N) or M.signature != N.signature:
        raise SignatureMismatch("product needs two structures over one signature and backend")
    sig = product_signature(M.signature)
    if isinstance(M, FiniteStructure):
        if M.size != N.size:
            raise SignatureMismatch(f"product needs a common universe, got sizes {M.size} and {N.size}")
        return FiniteStructure(sig, M.size, M.interp + N.interp)
    return PeriodicUnaryStructure(sig, M.interp + N.interp)


def reduct(P: Structure, sig: Signature, side: int) -> Structure:
    k = len(sig.relations)
    interp = P.interp[side * k:(side + 1) * k]
    if isinstance(P, FiniteStructure):
        return FiniteStructure(sig, P.size, interp)
    return PeriodicUnaryStructure(sig, interp)


def relabel(phi: Formula, side: int) -> Formula:
    return rename_relations(phi, lambda name: copy_name(name, side))


@lru_cache(maxsize=1 << 14)
def star_encode(phi: Formula, n_max: int) -> Formula:
    """``AND_{1<=k<=n_max} (E^k x. phi_0) <-> (E^k x. phi_1)`` over the product language."""
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    xs = free_vars(phi)
    left, right = relabel(phi, 0), relabel(phi, 1)
    conj = [iff(ExistsAtLeast(k, xs, left), ExistsAtLeast(k, xs, right)) for k in range(1, n_max + 1)]
    return conj[0] if n_max == 1 else And(tuple(conj))


def lossless_nmax(M: Structure, N: Structure, A: Sequence[Formula]) -> int:
    """Smallest truncation for which the star sentences decide E_A exactly."""
    if isinstance(M, FiniteStructure):
        d = max((len(free_vars(phi)) for phi in A), default=0)
        return M.size ** d + 1
    finite = [c.value for phi in A for c in (count(M, phi), count(N, phi)) if c.is_finite]
    return max(finite, default=0) + 1


def remark_check(M: Structure, N: Structure, A: Sequence[Formula], n_max: int | None = None) -> bool:
    """Does the product of M and N satisfy every star sentence of ``A``?"""
    A = list(A)
    need = lossless_nmax(M, N, A)
    if n_max is None:
        n_max = need
    if n_max < need:
        raise TruncationTooSmall(f"n_max={n_max} below the lossless bound {need}")
    P = product_structure(M, N)
    if isinstance(P, FiniteStructure):
        stars = [star_encode(phi, n_max) for phi in A]
        nvars = 1 + max((max(all_vars(phi), default=-1) for phi in A), default=0)
        ev = TableEvaluator.for_structures([P], nvars=nvars)
        return all(bool(ev.truth(s)[0]) for s in stars)
    return all(satisfies(P, star_encode(phi, n_max), ()) for phi in A)


# ----------------------------------------------------- batched pair checks


def _size_groups(structures: Sequence[FiniteStructure], left: np.ndarray, right: np.ndarray):
    sizes = np.array([M.size for M in structures])
    if np.any(sizes[left] != sizes[right]):
        raise SignatureMismatch("batched pair checks need equal universe sizes within a pair")
    for n in np.unique(sizes[left]):
        yield int(n), np.nonzero(sizes[left] == n)[0]


def _stack(structures, idx):
    sig = structures[idx[0]].signature
    return {name: np.stack([structures[i].array(name) for i in idx]) for name in sig.names}


def _table_ids(full: np.ndarray) -> np.ndarray:
    """Row ids of a boolean table (one row per structure); equal rows share an id."""
    flat = full.reshape(len(full), -1)
    if flat.shape[1] <= 62:
        keys = flat.astype(np.int64) @ (np.int64(1) << np.arange(flat.shape[1], dtype=np.int64))
    else:
        keys = np.packbits(flat, axis=1)
        keys = np.unique(keys, axis=0, return_inverse=True)[1]
    return np.unique(keys.reshape(-1), return_inverse=True)[1].reshape(-1)


def borel_membership_pairs(structures: Sequence[FiniteStructure], left, right,
                           A: Sequence[Formula]) -> np.ndarray:
    """:func:`borel_membership` for many finite pairs at once.

    Realization sets are computed as truth tables per universe size and
    deduplicated; each distinct pair of sets goes through :func:`branch`
    once.  Pairs drop out at their first failing formula.
    """
    left, right = np.asarray(left), np.asarray(right)
    out = np.ones(len(left), dtype=bool)
    if not len(left):
        return out
    sig = structures[0].signature
    nvars = max(1, 1 + max((max(_vars(phi), default=-1) for phi in A), default=0))
    for n, sel in _size_groups(structures, left, right):
        members = np.unique(np.concatenate([left[sel], right[sel]]))
        pos = np.full(len(structures), -1)
        pos[members] = np.arange(len(members))
        ev = TableEvaluator(sig, n, _stack(structures, members), nvars)
        li, ri = pos[left[sel]], pos[right[sel]]
        live = np.arange(len(sel))
        for phi in A:
            if not live.size:
                break
            full = ev.full_table(phi)
            full = np.broadcast_to(full, (len(members),) + full.shape[1:])
            ids = _table_ids(full)
            width = int(ids.max()) + 1
            first = {}
            for k, i in zip(ids.tolist(), range(len(ids))):
                first.setdefault(k, i)
            sets = {}

            def tuples(k):
                if k not in sets:
                    sets[k] = ev.tuples(phi, first[k])
                return sets[k]

            key = ids[li[live]].astype(np.int64) * width + ids[ri[live]]
            uniq, inv = np.unique(key, return_inverse=True)
            ok_u = np.array([branch(tuples(u // width), tuples(u % width)) is not None
                             for u in uniq.tolist()], dtype=bool)
            ok = ok_u[inv.reshape(-1)]
            out[sel[live[~ok]]] = False
            live = live[ok]
            ev.release()
    return out


def remark_check_pairs(structures: Sequence[FiniteStructure], left, right, A: Sequence[Formula],
                       n_max: int | None = None, chunk: int = 500_000) -> np.ndarray:
    """:func:`remark_check` for many finite pairs; ``n_max`` defaults to the lossless bound per size.

    Each star sentence is evaluated on the product structures of the pairs
    still alive, ``chunk`` products at a time.
    """
    left, right = np.asarray(left), np.asarray(right)
    out = np.ones(len(left), dtype=bool)
    if not len(left):
        return out
    A = list(A)
    sig = structures[0].signature
    psig = product_signature(sig)
    d = max((len(free_vars(phi)) for phi in A), default=0)
    nvars = max(1, 1 + max((max(_vars(phi), default=-1) for phi in A), default=0))
    for n, sel in _size_groups(structures, left, right):
        need = n ** d + 1
        k = need if n_max is None else n_max
        if k < need:
            raise TruncationTooSmall(f"n_max={k} below the lossless bound {need} for size {n}")
        members = np.unique(np.concatenate([left[sel], right[sel]]))
        pos = np.full(len(structures), -1)
        pos[members] = np.arange(len(members))
        base = _stack(structures, members)
        li_all, ri_all = pos[left[sel]], pos[right[sel]]
        live = np.arange(len(sel))
        for phi in A:
            if not live.size:
                break
            star = star_encode(phi, k)
            keep = []
            for start in range(0, len(live), chunk):
                part = live[start:start + chunk]
                li, ri = li_all[part], ri_all[part]
                arrays = {}
                for name in sig.names:
                    arrays[copy_name(name, 0)] = base[name][li]
                    arrays[copy_name(name, 1)] = base[name][ri]
                ev = TableEvaluator(psig, n, arrays, nvars)
                ok = np.asarray(ev.truth(star), dtype=bool)
                out[sel[part[~ok]]] = False
                keep.append(part[ok])
            live = np.concatenate(keep)
    return out


def _vars(phi: Formula) -> set[int]:
    return all_vars(phi)
