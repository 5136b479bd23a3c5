"""Class counts of isomorphism, E_A and sentence agreement on small structures.

For every universe size up to --max-n and every rank up to --max-rank, the
exhaustive set of {R:1, S:2} structures is partitioned three ways:

* isomorphism,
* equal realization counts for every formula of the fragment (E_A),
* agreement on the fragment's sentences.

Each partition refines the next, so the counts are non-increasing left to
right.  Gaps between columns are pairs separating the relations.
"""

import argparse
import time

import numpy as np

from distinguo.equivalence import isomorphic, structure_invariant
from distinguo.formulas import generate_fragment, is_sentence
from distinguo.semantics import count_matrix
from distinguo.structures import Signature, all_finite_structures
from distinguo.suites import truth_matrix


def n_classes(rows: np.ndarray) -> int:
    return len(np.unique(rows, axis=0)) if len(rows) else 0


def iso_classes(structures) -> int:
    """Isomorphism classes, deciding only inside invariant buckets."""
    buckets: dict = {}
    for M in structures:
        buckets.setdefault(structure_invariant(M), []).append(M)
    total = 0
    for members in buckets.values():
        reps = []
        for M in members:
            if not any(isomorphic(R, M).verdict for R in reps):
                reps.append(M)
        total += len(reps)
    return total


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-n", type=int, default=3)
    ap.add_argument("--max-rank", type=int, default=2)
    ap.add_argument("--vars", type=int, default=2)
    args = ap.parse_args()

    sig = Signature.of(R=1, S=2)
    print(f"{'n':>2} {'rank':>4} {'formulas':>8} {'structures':>10} {'iso':>6} {'E_A':>6} {'sentences':>9} {'secs':>6}")
    for n in range(1, args.max_n + 1):
        structures = list(all_finite_structures(sig, n))
        iso = iso_classes(structures)
        for r in range(args.max_rank + 1):
            start = time.perf_counter()
            A = list(generate_fragment(sig, r, args.vars))
            sentences = [phi for phi in A if is_sentence(phi)]
            ea = n_classes(count_matrix(structures, A))
            el = n_classes(truth_matrix(structures, sentences)) if sentences else 1
            print(f"{n:>2} {r:>4} {len(A):>8} {len(structures):>10} {iso:>6} {ea:>6} {el:>9} "
                  f"{time.perf_counter() - start:>6.1f}")


if __name__ == "__main__":
    main()
