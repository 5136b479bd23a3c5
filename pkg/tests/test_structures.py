import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from distinguo.errors import ArityMismatch, EmptyCycle, OutOfUniverse, StructureError, UnknownRelation
from distinguo.structures import (
    Count,
    Finite,
    Infinite,
    PeriodicSet,
    Signature,
    all_finite_structures,
    all_periodic_sets,
    finite_from_arrays,
    make_finite,
    make_periodic,
    periodic_cardinality,
    periodic_normalize,
    random_finite_structure,
)

R1 = Signature.of(R=1)
S2 = Signature.of(S=2)
RS = Signature.of(R=1, S=2)

bits = st.lists(st.integers(0, 1), max_size=6)
cycles = st.lists(st.integers(0, 1), min_size=1, max_size=4)


# ---------------------------------------------------------------- Count


def test_count_order_and_text():
    assert Finite(2) < Finite(3) < Infinite
    assert not Infinite < Finite(10 ** 9)
    assert str(Finite(4)) == "fin:4" and str(Infinite) == "inf"
    assert Finite(4).to_json() == {"fin": 4} and Infinite.to_json() == "inf"


def test_count_arithmetic():
    assert Finite(2) + Finite(3) == Finite(5)
    assert Finite(2) + Infinite == Infinite
    assert Finite(0) * Infinite == Finite(0)
    assert Finite(3) * Infinite == Infinite
    assert Infinite.at_least(10 ** 6) and not Finite(2).at_least(3)


# ------------------------------------------------------------ Signature


def test_signature_rejects_bad_input():
    with pytest.raises(StructureError):
        Signature((("R", 1), ("R", 2)))
    with pytest.raises(StructureError):
        Signature((("R", 0),))
    with pytest.raises(StructureError):
        Signature((("r", 1),))
    with pytest.raises(StructureError):
        Signature((("E", 1),))


def test_signature_text():
    assert str(Signature.of(eq=True, R=1, S=2)) == "R:1 S:2 eq"
    assert RS.arity("S") == 2 and RS.max_arity == 2
    with pytest.raises(UnknownRelation):
        RS.arity("T")


# ---------------------------------------------------------- make_finite


def test_make_finite_unary():
    M = make_finite(R1, 3, {"R": {0, 2}})
    assert M.relation("R") == {(0,), (2,)}


def test_make_finite_dedups():
    M = make_finite(S2, 2, {"S": [(0, 1), (0, 1)]})
    assert M.interp == (((0, 1),),)


def test_make_finite_errors():
    with pytest.raises(OutOfUniverse):
        make_finite(R1, 2, {"R": [(5,)]})
    with pytest.raises(ArityMismatch):
        make_finite(S2, 2, {"S": [(0,)]})
    with pytest.raises(UnknownRelation):
        make_finite(R1, 2, {"T": [0]})


def test_error_names_offender():
    with pytest.raises(OutOfUniverse, match="R"):
        make_finite(R1, 2, {"R": [7]})


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2 ** 31 - 1))
def test_make_finite_idempotent(n, seed):
    M = random_finite_structure(RS, n, np.random.default_rng(seed))
    again = make_finite(RS, n, {name: M.relation(name) for name in RS.names})
    assert again == M
    assert finite_from_arrays(RS, {name: M.array(name) for name in RS.names}) == M


def test_enumeration_sizes():
    assert sum(1 for _ in all_finite_structures(RS, 2)) == 2 ** 2 * 2 ** 4
    assert len(set(all_finite_structures(R1, 3))) == 8


# ------------------------------------------------------------- periodic


def test_normalize_minimal_period():
    s = periodic_normalize([], [1, 0, 1, 0])
    assert (s.prefix, s.cycle) == ((), (1, 0))


def test_normalize_absorbs_prefix():
    s = periodic_normalize([1], [1])
    assert (s.prefix, s.cycle) == ((), (1,))


def test_normalize_keeps_finite_set():
    s = periodic_normalize([0, 1], [0])
    assert (s.prefix, s.cycle) == ((0, 1), (0,))
    assert periodic_cardinality(s) == Finite(1)


def test_empty_cycle():
    with pytest.raises(EmptyCycle):
        periodic_normalize([1], [])


@pytest.mark.parametrize("prefix,cycle,expected", [
    ([], [1, 0], Infinite),
    ([1, 1, 0], [0], Finite(2)),
    ([], [0], Finite(0)),
])
def test_cardinality_examples(prefix, cycle, expected):
    assert periodic_cardinality(periodic_normalize(prefix, cycle)) == expected


def _window(prefix, cycle, bound):
    p = len(prefix)
    return tuple(prefix[m] if m < p else cycle[(m - p) % len(cycle)] for m in range(bound))


def test_normal_form_is_canonical_exhaustive():
    """Same subset of N (checked up to p1+p2+lcm(c1,c2)) iff same normal form."""
    raw = [(pre, cyc) for p in range(7) for pre in itertools.product((0, 1), repeat=p)
           for c in range(1, 5) for cyc in itertools.product((0, 1), repeat=c)]
    bound = 6 + 6 + math.lcm(1, 2, 3, 4)
    by_window, by_form = {}, {}
    for pre, cyc in raw:
        s = PeriodicSet(pre, cyc)
        w = _window(pre, cyc, bound)
        by_window.setdefault(w, set()).add(s)
        by_form.setdefault(s, set()).add(w)
    assert all(len(v) == 1 for v in by_window.values())
    assert all(len(v) == 1 for v in by_form.values())
    assert len(by_form) == len(all_periodic_sets(6, 4))


@given(bits, cycles)
def test_normal_form_denotes_same_set(prefix, cycle):
    s = PeriodicSet(tuple(prefix), tuple(cycle))
    bound = len(prefix) + 2 * 12
    assert _window(s.prefix, s.cycle, bound) == _window(prefix, cycle, bound)
    assert PeriodicSet(s.prefix, s.cycle) == s


@given(bits, cycles)
def test_cardinality_by_brute_force(prefix, cycle):
    s = PeriodicSet(tuple(prefix), tuple(cycle))
    bound = len(prefix) + len(cycle)
    seen = sum(_window(prefix, cycle, bound))
    if s.cardinality().is_finite:
        assert s.cardinality() == Finite(seen)
        assert sum(_window(prefix, cycle, 10 * bound)) == seen
    else:
        for k in (1, 5, 20):
            assert sum(_window(prefix, cycle, bound + k * len(cycle))) > k


@given(bits, cycles, bits, cycles)
def test_set_operations(p1, c1, p2, c2):
    a, b = PeriodicSet(tuple(p1), tuple(c1)), PeriodicSet(tuple(p2), tuple(c2))
    for m in range(40):
        assert (m in (a & b)) == (m in a and m in b)
        assert (m in (a | b)) == (m in a or m in b)
        assert (m in a.complement()) == (m not in a)


@given(bits, cycles)
def test_rank_select(prefix, cycle):
    s = PeriodicSet(tuple(prefix), tuple(cycle))
    members = list(itertools.islice(s.members(), 15))
    assert members == [m for m in range(200) if m in s][:len(members)]
    for i, m in enumerate(members):
        assert s.select(i) == m and s.rank(m) == i


def test_color_classes_partition():
    M = make_periodic(Signature.of(P=1, Q=1), {"P": ((), (1, 0)), "Q": ((1, 1, 1), (0,))})
    classes = M.color_classes
    for m in range(30):
        owners = [k for k, cls in classes.items() if m in cls]
        assert owners == [M.color(m)]
    assert classes[(1, 1)].cardinality() == Finite(2)
    assert classes[(0, 0)].cardinality() == Infinite


def test_periodic_needs_unary():
    with pytest.raises(ArityMismatch):
        make_periodic(S2, {})
