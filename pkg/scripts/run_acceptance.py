"""Run the acceptance criteria and print one PASS/FAIL line each.

    python scripts/run_acceptance.py            # all nine
    python scripts/run_acceptance.py 1 3 5      # a subset
    python scripts/run_acceptance.py --json out.json
"""

import argparse
import json
import sys

from distinguo.suites import CRITERIA, evaluate


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("numbers", nargs="*", type=int, help="criterion numbers (default: all)")
    ap.add_argument("--json", metavar="PATH", help="also write the outcomes as JSON")
    ap.add_argument("-v", "--verbose", action="store_true", help="print suite figures")
    args = ap.parse_args()

    chosen = [c for c in CRITERIA if not args.numbers or c.number in args.numbers]
    results, failed = [], 0
    for c in chosen:
        ok, out, line = evaluate(c)
        print(line, flush=True)
        if args.verbose:
            for k, v in out.info.items():
                print(f"    {k}: {v}")
        for ex in out.examples:
            print(f"    violation: {ex}")
        failed += not ok
        results.append({"criterion": c.number, "title": c.title, "passed": ok, "checks": out.checks,
                        "violations": out.violations, "elapsed": round(out.elapsed, 3),
                        "time_limit": c.time_limit, "info": out.info})
    print(f"{len(chosen) - failed}/{len(chosen)} criteria passed")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, default=str)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
