#!/usr/bin/env python3
"""Run every verification suite and write one JSON report per suite.

Usage: python scripts/run_verification.py [outdir] [--quick]

--quick cuts the Monte Carlo suites to 20k replications for a fast smoke
run; the default uses the acceptance settings (10^5 replications).
"""

import json
import sys
import time
from pathlib import Path

from rtcnlab import verify

ORDER = ["coupling", "moments", "conjecture", "matcher",
         "theorem1", "theorem2a", "theorem2b", "theorem2c",
         "prop3", "prop4"]


def main(argv):
    outdir = Path(argv[1]) if len(argv) > 1 and not argv[1].startswith("-") \
        else Path("verification-reports")
    quick = "--quick" in argv
    outdir.mkdir(parents=True, exist_ok=True)
    opts = {"threads": 2}
    if quick:
        opts["reps"] = 20_000
    failures = []
    for suite in ORDER:
        t0 = time.time()
        report = verify.run_suite(suite, dict(opts))
        path = outdir / f"{suite}.json"
        path.write_text(json.dumps(report.to_dict(), sort_keys=True,
                                   indent=2) + "\n")
        status = "ok" if report.passed else "FAILED"
        print(f"{suite:10s} {status:7s} {time.time() - t0:7.1f}s -> {path}")
        if not report.passed:
            failures.append(suite)
    if failures:
        print("failed suites:", ", ".join(failures))
        return 3
    print("all suites passed")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
