"""Realization-count equivalence of relational structures."""

from .borel import (
    InjectionWitness,
    borel_membership,
    equal_finite_card_witness,
    is_infinite_via_mu,
    mu,
    mu_inv,
    product_structure,
    remark_check,
    star_encode,
)
from .docs import parse_structure, serialize_structure
from .equivalence import (
    EquivReport,
    Permutation,
    act,
    classify,
    distinguishable,
    e_equiv,
    ef_equiv,
    isomorphic,
)
from .formulas import FormulaSet, free_vars, generate_fragment, parse, pretty
from .semantics import count, realizations, satisfies
from .structures import (
    Count,
    Finite,
    FiniteStructure,
    Infinite,
    PeriodicSet,
    PeriodicUnaryStructure,
    Signature,
    make_finite,
    make_periodic,
    periodic_cardinality,
    periodic_normalize,
)

__all__ = [name for name in dir() if not name.startswith("_")]
