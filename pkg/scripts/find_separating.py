"""Search small structures for pairs separating the three relations.

Two kinds of pair are reported:

* E_A-equivalent but not isomorphic,
* agreeing on every sentence of A but not E_A-equivalent (with the formula
  whose realization counts differ).

Structures are all {R:1, S:2} structures of size --n, or --sample random ones
when that set is too large.  Found pairs are printed as structure documents
ready for ``distinguo distinguish``.
"""

import argparse

import numpy as np

from distinguo.docs import serialize_structure
from distinguo.equivalence import distinguishable, isomorphic
from distinguo.formulas import generate_fragment, is_sentence, pretty
from distinguo.semantics import count_matrix
from distinguo.structures import Signature, all_finite_structures, random_finite_structure
from distinguo.suites import truth_matrix


def groups(rows: np.ndarray) -> list[list[int]]:
    _, ids = np.unique(rows, axis=0, return_inverse=True)
    out: dict = {}
    for i, k in enumerate(ids.reshape(-1)):
        out.setdefault(int(k), []).append(i)
    return [g for g in out.values() if len(g) > 1]


def show(title, M, N, extra=""):
    print(f"== {title}{extra}")
    print(serialize_structure(M).rstrip())
    print("--")
    print(serialize_structure(N).rstrip())
    print()


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--rank", type=int, default=1)
    ap.add_argument("--vars", type=int, default=2)
    ap.add_argument("--sample", type=int, default=0, help="random structures instead of all (0 = all)")
    ap.add_argument("--limit", type=int, default=3, help="examples printed per kind")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    sig = Signature.of(R=1, S=2)
    if args.sample:
        rng = np.random.default_rng(args.seed)
        structures = list({random_finite_structure(sig, args.n, rng) for _ in range(args.sample)})
    else:
        structures = list(all_finite_structures(sig, args.n))
    A = list(generate_fragment(sig, args.rank, args.vars))
    sentences = [phi for phi in A if is_sentence(phi)]
    counts = count_matrix(structures, A)
    print(f"{len(structures)} structures of size {args.n}, {len(A)} formulas, {len(sentences)} sentences\n")

    found = 0
    for g in groups(counts):
        rep = structures[g[0]]
        for j in g[1:]:
            if not isomorphic(rep, structures[j]).verdict:
                found += 1
                if found <= args.limit:
                    show("E_A-equivalent, not isomorphic", rep, structures[j])
                break
    print(f"E_A classes containing non-isomorphic structures: {found}\n")

    found = 0
    if sentences:
        ea_ids = np.unique(counts, axis=0, return_inverse=True)[1].reshape(-1)
        for g in groups(truth_matrix(structures, sentences)):
            diff = [j for j in g[1:] if ea_ids[j] != ea_ids[g[0]]]
            if diff:
                found += 1
                if found <= args.limit:
                    M, N = structures[g[0]], structures[diff[0]]
                    d = distinguishable(M, N, A)
                    show("same sentences, not E_A-equivalent", M, N,
                         f": {pretty(d.formula)} has {d.left} vs {d.right}")
    print(f"sentence classes split by E_A: {found}")


if __name__ == "__main__":
    main()
