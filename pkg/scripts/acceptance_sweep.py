"""Run the full identity sweep (seed 42) and write the JSON report.

With --freeze, also rewrite tests/data/sweep_expected.json, the per-cell
status table the acceptance test compares against.
"""

import argparse
import json
import time
from pathlib import Path

from canvar.identities import run_suite
from canvar.report import dumps, document, render_text
from canvar.variation import SampleSpec

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--output", default="sweep.json")
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--freeze", action="store_true")
    args = ap.parse_args()

    start = time.perf_counter()
    reps = run_suite(None, None, None, SampleSpec(args.samples, args.seed))
    elapsed = time.perf_counter() - start
    text = dumps(document(reps, args.seed, "forward_exact"))
    Path(args.output).write_text(text)
    print(render_text(reps).splitlines()[-1], f"({elapsed:.1f} s) -> {args.output}")

    if args.freeze:
        cells = json.loads(text)["cells"]
        status = {f"{c['identity']}|{c['manifold']}|{c['t']!r}":
                  "skip" if "skipped_reason" in c else "pass" if c["pass"] else "fail" for c in cells}
        out = ROOT / "tests" / "data" / "sweep_expected.json"
        out.write_text(json.dumps(status, indent=1, sort_keys=True) + "\n")
        print(f"froze {len(status)} cell statuses -> {out}")


if __name__ == "__main__":
    main()
