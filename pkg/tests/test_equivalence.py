import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distinguo.equivalence import (
    ClassMap,
    Permutation,
    act,
    classify,
    distinguishable,
    e_equiv,
    isomorphic,
    structure_invariant,
)
from distinguo.errors import BackendMismatch, BudgetExceeded, NotABijection, SignatureMismatch
from distinguo.formulas import generate_fragment, parse
from distinguo.structures import (
    Finite,
    Infinite,
    Signature,
    all_finite_structures,
    all_periodic_sets,
    make_finite,
    make_periodic,
    random_finite_structure,
)

from oracles import brute_iso

R1 = Signature.of(R=1)
S2 = Signature.of(S=2)
RS = Signature.of(R=1, S=2)
A_R = [parse("R(v0)", R1)]
A_RN = [parse("R(v0)", R1), parse("~R(v0)", R1)]


def unary(n, members):
    return make_finite(R1, n, {"R": members})


def periodic(prefix, cycle):
    return make_periodic(R1, {"R": (prefix, cycle)})


# ------------------------------------------------------------------- E_A


def test_distinguishable_witness():
    d = distinguishable(unary(4, {0, 1}), unary(4, {0, 1, 2}), A_R)
    assert d.formula == A_R[0] and (d.left, d.right) == (Finite(2), Finite(3))


def test_distinguishable_identity():
    M = unary(4, {1})
    assert distinguishable(M, M, A_R) is None


def test_evens_odds_not_distinguishable():
    assert distinguishable(periodic((), (1, 0)), periodic((), (0, 1)), A_RN) is None


def test_e_equiv_examples():
    M = periodic((1, 1, 1), (0,))
    N = periodic((0, 0, 0, 0, 0, 1, 1, 1), (0,))
    assert e_equiv(M, M, A_RN).verdict
    assert e_equiv(M, N, A_RN).verdict
    rep = e_equiv(unary(3, {0}), unary(3, {0, 1}), A_R)
    assert not rep.verdict and rep.relation == "E_A" and rep.witness is not None


def test_first_formula_in_list_order():
    A = [parse("~R(v0)", R1), parse("R(v0)", R1)]
    d = distinguishable(unary(3, {0}), unary(3, {0, 1}), A)
    assert d.formula == A[0]


def test_mismatches():
    with pytest.raises(BackendMismatch):
        e_equiv(unary(3, {0}), periodic((), (1,)), A_R)
    with pytest.raises(SignatureMismatch):
        e_equiv(unary(3, {0}), make_finite(Signature.of(R=1, T=1), 3, {}), A_R)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_e_equiv_is_an_equivalence(seed):
    rng = np.random.default_rng(seed)
    A = list(generate_fragment(RS, 1, 2))[::11]
    # small universes make collisions likely
    X, Y, Z = (random_finite_structure(RS, 2, rng, density=0.3) for _ in range(3))
    assert e_equiv(X, X, A).verdict
    assert e_equiv(X, Y, A).verdict == e_equiv(Y, X, A).verdict
    if e_equiv(X, Y, A).verdict and e_equiv(Y, Z, A).verdict:
        assert e_equiv(X, Z, A).verdict


# ------------------------------------------------------------ isomorphism


def test_periodic_iso_witness():
    M, N = periodic((1, 1, 1), (0,)), periodic((0, 0, 0, 0, 0, 1, 1, 1), (0,))
    rep = isomorphic(M, N)
    assert rep.verdict and isinstance(rep.witness, ClassMap)
    theta = rep.witness.segment(12)
    assert [theta[a] for a in range(3)] == [5, 6, 7]
    assert [theta[a] for a in range(3, 8)] == [0, 1, 2, 3, 4]
    assert len(set(theta.values())) == 12


def test_finite_iso_examples():
    assert not isomorphic(unary(3, {0}), unary(3, {0, 1})).verdict
    M = make_finite(S2, 2, {"S": [(0, 1)]})
    N = make_finite(S2, 2, {"S": [(1, 0)]})
    rep = isomorphic(M, N)
    assert rep.verdict and rep.witness == Permutation((1, 0))


def test_iso_matches_brute_force_exhaustive_n2():
    structures = list(all_finite_structures(RS, 2))
    for M, N in itertools.combinations(structures, 2):
        assert isomorphic(M, N).verdict == brute_iso(M, N)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_action_soundness(seed, n):
    rng = np.random.default_rng(seed)
    M = random_finite_structure(RS, n, rng)
    g = Permutation(tuple(rng.permutation(n)))
    N = act(g, M)
    rep = isomorphic(M, N)
    assert rep.verdict and act(rep.witness, M) == N
    other = random_finite_structure(RS, n, rng)
    rep = isomorphic(M, other)
    assert rep.verdict == brute_iso(M, other)
    if rep.verdict:
        assert act(rep.witness, M) == other


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_invariant_is_isomorphism_invariant(seed, n):
    rng = np.random.default_rng(seed)
    M = random_finite_structure(RS, n, rng)
    g = Permutation(tuple(rng.permutation(n)))
    assert structure_invariant(act(g, M)) == structure_invariant(M)


def test_iso_budget():
    M = make_finite(S2, 6, {"S": [(i, (i + 1) % 6) for i in range(6)]})
    N = make_finite(S2, 6, {"S": [(i, (i + 1) % 3) for i in range(3)] + [(3 + i, 3 + (i + 1) % 3) for i in range(3)]})
    with pytest.raises(BudgetExceeded):
        isomorphic(M, N, budget=2)
    assert not isomorphic(M, N).verdict


def test_unary_periodic_theorem_small():
    structures = [make_periodic(R1, {"R": s}) for s in all_periodic_sets(3, 2)]
    for M, N in itertools.product(structures, repeat=2):
        assert isomorphic(M, N).verdict == e_equiv(M, N, A_RN).verdict


def test_class_map_is_bijective_on_segment():
    M, N = periodic((1,), (1, 0)), periodic((0, 1, 1), (0, 1))
    rep = isomorphic(M, N)
    assert rep.verdict
    theta = rep.witness
    for a in range(40):
        b = theta(a)
        assert (a in M.relation("R")) == (b in N.relation("R"))
        assert theta.inverse()(b) == a


# ------------------------------------------------------------------- action


def test_act_swap():
    assert act(Permutation.swap(2, 0, 1), unary(2, {0})) == unary(2, {1})


def test_act_identity():
    M = make_finite(RS, 3, {"R": {1}, "S": [(0, 2)]})
    assert act(Permutation.identity(3), M) == M


def test_act_composition_all_permutations():
    rng = np.random.default_rng(1)
    M = random_finite_structure(RS, 3, rng)
    G = [Permutation(p) for p in itertools.permutations(range(3))]
    for g, h in itertools.product(G, repeat=2):
        assert act(g, act(h, M)) == act(g.compose(h), M)


def test_act_rejects_non_bijections():
    with pytest.raises(NotABijection):
        Permutation((0, 0, 1))
    with pytest.raises(NotABijection):
        act(Permutation((1, 0)), unary(3, {0}))


def test_act_periodic_finite_support():
    M = periodic((), (1, 0))
    N = act(Permutation.swap(3, 0, 1), M)
    assert [m in N.relation("R") for m in range(6)] == [False, True, True, False, True, False]
    assert isomorphic(M, N).verdict


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_distinguishable_invariant_under_action(seed):
    rng = np.random.default_rng(seed)
    A = list(generate_fragment(RS, 1, 2))[::7]
    M = random_finite_structure(RS, 3, rng)
    N = random_finite_structure(RS, 3, rng)
    g = Permutation(tuple(rng.permutation(3)))
    assert distinguishable(M, N, A) == distinguishable(act(g, M), N, A)


# ---------------------------------------------------------------- classify


EIGHT = list(all_finite_structures(R1, 3))


def test_classify_ea():
    part = classify(EIGHT, "ea", formulas=A_R)
    assert part.count == 4
    assert sorted(len(c) for c in part.classes) == [1, 1, 3, 3]


def test_classify_iso():
    assert classify(EIGHT, "iso").count == 4


def test_classify_ef():
    # one round only sees whether R and its complement are empty
    assert classify(EIGHT, "ef", q=1).count == 3
    assert classify(EIGHT, "ef", q=0).count == 1
    # without equality no number of rounds can count past one
    assert classify(EIGHT, "ef", q=2).count == 3
    with_eq = list(all_finite_structures(Signature.of(eq=True, R=1), 3))
    assert classify(with_eq, "ef", q=1).count == 3
    assert classify(with_eq, "ef", q=2).count == 4


def test_classify_periodic_ea():
    structures = [periodic((), (1, 0)), periodic((), (0, 1)), periodic((1,), (0,))]
    part = classify(structures, "ea", formulas=A_RN)
    assert sorted(map(sorted, part.classes)) == [[0, 1], [2]]


def test_classify_labels():
    part = classify(EIGHT, "ea", formulas=A_R)
    labels = part.labels(len(EIGHT))
    for i, M in enumerate(EIGHT):
        for j, N in enumerate(EIGHT):
            assert (labels[i] == labels[j]) == (len(M.relation("R")) == len(N.relation("R")))
    assert Infinite not in part.keys
