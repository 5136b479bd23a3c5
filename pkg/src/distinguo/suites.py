"""Desk-scale experiment suites behind the acceptance criteria.

Each suite takes a frozen config and returns an :class:`Outcome` with the
number of checks made, the violations found and a few figures worth
printing.  The suites call the public operations; batched numpy paths are
cross-checked against the single-pair operations on a sample.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .borel import (
    borel_membership,
    borel_membership_pairs,
    equal_finite_card_witness,
    is_infinite_via_mu,
    mu,
    mu_inv,
    remark_check,
    remark_check_pairs,
)
from .equivalence import Permutation, act, e_equiv, ef_equiv, isomorphic, structure_invariant
from .formulas import generate_fragment, is_sentence, normalize, parse, pretty, random_formula
from .semantics import TableEvaluator, count_matrix
from .structures import (
    FiniteStructure,
    Signature,
    all_finite_structures,
    all_periodic_sets,
    make_periodic,
    random_finite_structure,
)


@dataclass
class Outcome:
    name: str
    checks: int = 0
    violations: int = 0
    elapsed: float = 0.0
    info: dict = field(default_factory=dict)
    examples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.checks > 0

    def fail(self, example):
        self.violations += 1
        if len(self.examples) < 5:
            self.examples.append(example)


class _Timer:
    def __init__(self, outcome: Outcome):
        self.outcome = outcome

    def __enter__(self):
        self.start = time.perf_counter()
        return self.outcome

    def __exit__(self, *exc):
        self.outcome.elapsed = time.perf_counter() - self.start
        return False


def _exhaustive(sig: Signature, max_n: int) -> list[FiniteStructure]:
    return [M for n in range(1, max_n + 1) for M in all_finite_structures(sig, n)]


def _row_ids(mat: np.ndarray) -> np.ndarray:
    return np.unique(mat, axis=0, return_inverse=True)[1].reshape(-1)


def truth_matrix(structures, sentences) -> np.ndarray:
    """Sentence truth values, shape ``(S, F)``, grouped by universe size."""
    out = np.zeros((len(structures), len(sentences)), dtype=bool)
    by_size: dict = {}
    for i, M in enumerate(structures):
        by_size.setdefault(M.size, []).append(i)
    for idx in by_size.values():
        ev = TableEvaluator.for_structures([structures[i] for i in idx], sentences)
        for j, phi in enumerate(sentences):
            out[idx, j] = ev.truth(phi)
    return out


# ------------------------------------------------------------ unary Vaught


@dataclass(frozen=True)
class VaughtConfig:
    max_prefix: int = 6
    max_cycle: int = 4


def vaught_suite(cfg: VaughtConfig = VaughtConfig()) -> Outcome:
    out = Outcome("unary isomorphism vs E_{R,~R}")
    with _Timer(out):
        sig = Signature.of(R=1)
        A = [parse("R(v0)", sig), parse("~R(v0)", sig)]
        structures = [make_periodic(sig, {"R": s}) for s in all_periodic_sets(cfg.max_prefix, cfg.max_cycle)]
        for i, M in enumerate(structures):
            for N in structures[i:]:
                out.checks += 1
                if isomorphic(M, N).verdict != e_equiv(M, N, A).verdict:
                    out.fail((str(M), str(N)))
        out.info["structures"] = len(structures)
    return out


# -------------------------------------------------------------- hierarchy


@dataclass(frozen=True)
class HierarchyConfig:
    max_n: int = 3
    random_n: int = 4
    random_pairs: int = 1000
    rank: int = 2
    vars: int = 2
    seed: int = 0


def hierarchy_suite(cfg: HierarchyConfig = HierarchyConfig()) -> Outcome:
    """iso => E_A => agreement on the sentences of A.

    Exhaustive part: pairs in different invariant buckets are not isomorphic
    (the invariant is tested for soundness separately), so isomorphism is
    decided pairwise inside buckets; E_A classes come from count vectors.
    """
    out = Outcome("iso => E_A => sentence agreement")
    with _Timer(out):
        sig = Signature.of(R=1, S=2)
        A = list(generate_fragment(sig, cfg.rank, cfg.vars))
        sent = [j for j, phi in enumerate(A) if is_sentence(phi)]
        structures = _exhaustive(sig, cfg.max_n)
        counts = count_matrix(structures, A)
        truth = truth_matrix(structures, [A[j] for j in sent])
        ea = _row_ids(counts)
        iso_pairs = 0
        buckets: dict = {}
        for i, M in enumerate(structures):
            buckets.setdefault(structure_invariant(M), []).append(i)
        for members in buckets.values():
            for a, b in itertools.combinations(members, 2):
                if isomorphic(structures[a], structures[b]).verdict:
                    iso_pairs += 1
                    if ea[a] != ea[b]:
                        out.fail(("iso but not E_A", str(structures[a]), str(structures[b])))
        ea_pairs = 0
        for cls in np.unique(ea):
            members = np.nonzero(ea == cls)[0]
            ea_pairs += len(members) * (len(members) - 1) // 2
            bad = np.any(truth[members] != truth[members[0]], axis=1)
            for i in members[bad]:
                out.fail(("E_A but sentences differ", str(structures[members[0]]), str(structures[i])))
        n = len(structures)
        out.checks += n * (n - 1) // 2

        rng = np.random.default_rng(cfg.seed)
        left, right = [], []
        for k in range(cfg.random_pairs):
            M = random_finite_structure(sig, cfg.random_n, rng)
            if k % 2 == 0:
                N = act(Permutation(tuple(rng.permutation(cfg.random_n))), M)
            else:
                N = random_finite_structure(sig, cfg.random_n, rng)
            left.append(M)
            right.append(N)
        rc = count_matrix(left + right, A)
        lc, rc_ = rc[:cfg.random_pairs], rc[cfg.random_pairs:]
        lt = truth_matrix(left, [A[j] for j in sent])
        rt = truth_matrix(right, [A[j] for j in sent])
        random_iso = random_ea = 0
        for k in range(cfg.random_pairs):
            out.checks += 1
            same_counts = bool(np.array_equal(lc[k], rc_[k]))
            if isomorphic(left[k], right[k]).verdict:
                random_iso += 1
                if not same_counts:
                    out.fail(("iso but not E_A", str(left[k]), str(right[k])))
            if same_counts:
                random_ea += 1
                if not np.array_equal(lt[k], rt[k]):
                    out.fail(("E_A but sentences differ", str(left[k]), str(right[k])))
        out.info.update(formulas=len(A), sentences=len(sent), structures=n, iso_pairs=iso_pairs,
                        ea_pairs=ea_pairs, ea_classes=int(ea.max()) + 1, iso_classes=_iso_class_count(structures, buckets),
                        random_pairs=cfg.random_pairs, random_iso=random_iso, random_ea=random_ea)
    return out


def _iso_class_count(structures, buckets) -> int:
    total = 0
    for members in buckets.values():
        reps: list[int] = []
        for i in members:
            if not any(isomorphic(structures[r], structures[i]).verdict for r in reps):
                reps.append(i)
        total += len(reps)
    return total


# --------------------------------------------------------- Borel oracle


@dataclass(frozen=True)
class BorelConfig:
    max_n: int = 3
    rank: int = 1
    vars: int = 2
    sample: int = 24
    seed: int = 0
    chunk: int = 10_000_000


def borel_suite(cfg: BorelConfig = BorelConfig()) -> Outcome:
    """borel_membership = e_equiv = remark_check on every same-size pair (i <= j)."""
    out = Outcome("Borel construction = E_A = product-language check")
    with _Timer(out):
        sig = Signature.of(R=1, S=2)
        A = list(generate_fragment(sig, cfg.rank, cfg.vars))
        structures = _exhaustive(sig, cfg.max_n)
        ea_ids = _row_ids(count_matrix(structures, A))
        sizes = np.array([M.size for M in structures])
        positives = 0
        for n in np.unique(sizes):
            idx = np.nonzero(sizes == n)[0].astype(np.int32)
            li, ri = np.triu_indices(len(idx))
            for start in range(0, len(li), cfg.chunk):
                left = idx[li[start:start + cfg.chunk]]
                right = idx[ri[start:start + cfg.chunk]]
                ea = ea_ids[left] == ea_ids[right]
                borel = borel_membership_pairs(structures, left, right, A)
                remark = remark_check_pairs(structures, left, right, A)
                bad = np.nonzero((borel != ea) | (remark != ea))[0]
                for k in bad:
                    out.fail((str(structures[left[k]]), str(structures[right[k]]),
                              bool(ea[k]), bool(borel[k]), bool(remark[k])))
                out.checks += len(left)
                positives += int(ea.sum())
        # single-pair operations against the batched verdicts
        rng = random.Random(cfg.seed)
        pool = []
        for n in range(1, cfg.max_n + 1):
            members = [int(i) for i in np.nonzero(sizes == n)[0]]
            pool += [tuple(sorted(rng.sample(members, 2))) for _ in range(cfg.sample // cfg.max_n)]
        same = _equal_pairs(ea_ids, sizes, rng, cfg.sample)
        for i, j in pool + same:
            M, N = structures[i], structures[j]
            verdict = e_equiv(M, N, A).verdict
            out.checks += 1
            if not (borel_membership(M, N, A) == verdict == remark_check(M, N, A)
                    == (ea_ids[i] == ea_ids[j])):
                out.fail(("single-pair mismatch", str(M), str(N)))
        out.info.update(formulas=len(A), structures=len(structures), equivalent_pairs=positives,
                        single_pair_checks=len(pool) + len(same))
    return out


def _equal_pairs(ids, sizes, rng, k):
    groups: dict = {}
    for i, (c, n) in enumerate(zip(ids, sizes)):
        groups.setdefault((int(c), int(n)), []).append(i)
    multi = [g for g in groups.values() if len(g) > 1]
    return [tuple(sorted(rng.sample(rng.choice(multi), 2))) for _ in range(k)] if multi else []


# ----------------------------------------------------- cardinality witness


FIVE_SEQUENCES = ((), (0,), (1,), (0, 1), (2, 0, 1))


def witness_suite(pool=FIVE_SEQUENCES) -> Outcome:
    out = Outcome("injection witness iff equal size")
    with _Timer(out):
        subsets = [frozenset(c) for r in range(len(pool) + 1) for c in itertools.combinations(pool, r)]
        for X in subsets:
            for Y in subsets:
                out.checks += 1
                try:
                    w = equal_finite_card_witness(X, Y)
                    ok = (w is not None and w.verify(X, Y)) == (len(X) == len(Y))
                except Exception as exc:  # any exception counts against the criterion
                    ok = False
                    out.info.setdefault("exceptions", []).append(repr(exc))
                if not ok:
                    out.fail((sorted(X), sorted(Y)))
    return out


# ------------------------------------------------------------------- mu


@dataclass(frozen=True)
class MuConfig:
    codes: int = 10 ** 5
    entries: int = 8
    length: int = 4
    cover_entries: int = 3
    cover_length: int = 3
    cover_limit: int = 10 ** 6


def mu_suite(cfg: MuConfig = MuConfig()) -> Outcome:
    out = Outcome("mu is a bijection")
    with _Timer(out):
        for m in range(cfg.codes + 1):
            out.checks += 1
            if mu_inv(mu(m)) != m:
                out.fail(("mu_inv(mu(m))", m))
        for L in range(cfg.length):
            for t in itertools.product(range(cfg.entries), repeat=L):
                out.checks += 1
                if mu(mu_inv(t)) != t:
                    out.fail(("mu(mu_inv(t))", t))
        target = {t for L in range(cfg.cover_length) for t in itertools.product(range(cfg.cover_entries), repeat=L)}
        seen, m = set(), 0
        while not target <= seen and m < cfg.cover_limit:
            seen.add(mu(m))
            m += 1
        out.checks += 1
        if not target <= seen:
            out.fail(("cover", sorted(target - seen)[:5]))
        out.info["cover_N"] = m - 1
    return out


# ------------------------------------------------------------- infinitude


def infinitude_suite(max_prefix: int = 6, max_cycle: int = 4) -> Outcome:
    out = Outcome("mu infinitude criterion vs periodic cardinality")
    with _Timer(out):
        for s in all_periodic_sets(max_prefix, max_cycle):
            out.checks += 1
            if is_infinite_via_mu(s) != (not s.cardinality().is_finite):
                out.fail(str(s))
    return out


# ------------------------------------------------------------------ EF games


@dataclass(frozen=True)
class EFConfig:
    max_n: int = 8
    max_q: int = 3
    equality: bool = True


def ef_suite(cfg: EFConfig = EFConfig()) -> Outcome:
    """EF game verdicts vs agreement on every sentence of the rank-q fragment, all pairs."""
    out = Outcome("EF game vs fragment sentences")
    with _Timer(out):
        sig = Signature.of(eq=cfg.equality, R=1)
        structures = _exhaustive(sig, cfg.max_n)
        per_q = {}
        for q in range(cfg.max_q + 1):
            sentences = [phi for phi in generate_fragment(sig, q, max(q, 1)) if is_sentence(phi)]
            ids = _row_ids(truth_matrix(structures, sentences)) if sentences else np.zeros(len(structures), int)
            agree = 0
            for i, M in enumerate(structures):
                for j in range(i, len(structures)):
                    out.checks += 1
                    game = ef_equiv(M, structures[j], q).verdict
                    agree += game
                    if game != (ids[i] == ids[j]):
                        out.fail((q, str(M), str(structures[j]), game))
            per_q[q] = {"sentences": len(sentences), "classes": int(ids.max()) + 1, "equivalent_pairs": agree}
        out.info.update(structures=len(structures), per_q=per_q)
    return out


# ---------------------------------------------------------------- parser


@dataclass(frozen=True)
class ParserConfig:
    formulas: int = 10 ** 4
    depth: int = 5
    nvars: int = 3
    seed: int = 0


def parser_suite(cfg: ParserConfig = ParserConfig()) -> Outcome:
    out = Outcome("pretty-print / parse round trip")
    with _Timer(out):
        rng = random.Random(cfg.seed)
        sigs = [Signature.of(R=1, S=2), Signature.of(eq=True, R=1, S=2, T=3)]
        for k in range(cfg.formulas):
            sig = sigs[k % 2]
            phi = random_formula(rng, sig, cfg.depth, cfg.nvars)
            out.checks += 1
            back = parse(pretty(phi), sig)
            if back != phi or parse(pretty(normalize(phi)), sig) != normalize(phi):
                out.fail(pretty(phi))
    return out


# ----------------------------------------------------------- group action


@dataclass(frozen=True)
class ActionConfig:
    max_n: int = 4
    structures: int = 100
    rank: int = 2
    vars: int = 2
    seed: int = 0


def action_suite(cfg: ActionConfig = ActionConfig()) -> Outcome:
    """Identity and composition laws, witness soundness and count invariance of act."""
    out = Outcome("permutation action laws")
    with _Timer(out):
        sig = Signature.of(R=1, S=2)
        A = list(generate_fragment(sig, cfg.rank, cfg.vars))
        rng = np.random.default_rng(cfg.seed)
        perms = {n: [Permutation(p) for p in itertools.permutations(range(n))] for n in range(1, cfg.max_n + 1)}
        sample = [random_finite_structure(sig, int(rng.integers(1, cfg.max_n + 1)), rng)
                  for _ in range(cfg.structures)]
        for M in sample:
            G = perms[M.size]
            images = {g: act(g, M) for g in G}
            out.checks += 1
            if act(Permutation.identity(M.size), M) != M:
                out.fail(("identity", str(M)))
            for g in G:
                for h in G:
                    out.checks += 1
                    if act(g, images[h]) != images[g.compose(h)]:
                        out.fail(("composition", str(M), g.images, h.images))
            # witness soundness, against an image and against an unrelated structure
            other = random_finite_structure(sig, M.size, rng)
            for N in (images[G[-1]], other):
                rep = isomorphic(M, N)
                reachable = any(img == N for img in images.values())
                out.checks += 1
                if rep.verdict != reachable or (rep.verdict and act(rep.witness, M) != N):
                    out.fail(("witness", str(M), str(N)))
            counts = count_matrix([M] + list(images.values()), A)
            out.checks += len(G)
            bad = np.any(counts[1:] != counts[0], axis=1)
            for k in np.nonzero(bad)[0]:
                out.fail(("count invariance", str(M), G[k].images))
        out.info.update(structures=len(sample), formulas=len(A))
    return out


# ---------------------------------------------------------------- registry


@dataclass(frozen=True)
class Criterion:
    number: int
    title: str
    run: object
    time_limit: float | None = None  # seconds, None when untimed


CRITERIA = (
    Criterion(1, "unary isomorphism = E_A, prefix <= 6, cycle <= 4", vaught_suite, 60.0),
    Criterion(2, "iso => E_A => sentence agreement, n <= 3 plus random n = 4", hierarchy_suite, 300.0),
    Criterion(3, "Borel decomposition = E_A = product-language check, n <= 3", borel_suite, 120.0),
    Criterion(4, "injection witness iff equal size, 1024 pairs", witness_suite),
    Criterion(5, "mu round trips and cover", mu_suite),
    Criterion(6, "infinitude via mu on periodic sets", infinitude_suite),
    Criterion(7, "EF game = fragment sentence agreement, n <= 8, q <= 3", ef_suite),
    Criterion(8, "pretty/parse round trip on 10^4 formulas", parser_suite),
    Criterion(9, "permutation action laws", action_suite),
)


def evaluate(c: Criterion) -> tuple[bool, Outcome, str]:
    """Run one criterion; returns (passed, outcome, one-line summary)."""
    out = c.run()
    in_time = c.time_limit is None or out.elapsed < c.time_limit
    ok = out.passed and in_time
    limit = f" (limit {c.time_limit:.0f}s)" if c.time_limit is not None else ""
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {c.number}: {c.title}: "
            f"{out.checks} checks, {out.violations} violations, {out.elapsed:.1f}s{limit}")
    return ok, out, line
