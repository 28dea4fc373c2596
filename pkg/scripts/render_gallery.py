"""Render the 16-panel regime gallery, one SVG per panel, plus an index of verdicts."""

import argparse
import json
from pathlib import Path

from vortexlab.gallery import matches_expectation, run_gallery


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="gallery")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--no-exponent", action="store_true", help="skip the separation exponent (fast preview)")
    args = ap.parse_args()

    results = run_gallery(args.out, args.seed, workers=args.workers, classify_regime=not args.no_exponent)
    index = []
    for r in results:
        ok = matches_expectation(r.panel, r.report.verdict)
        print(f"{r.panel.key:14s} expected={r.panel.expected:22s} verdict={r.report.verdict.value:20s} lambda={r.report.exponent:.3g} [{'ok' if ok else 'differs'}]")
        index.append({"panel": r.panel.key, "expected": r.panel.expected, "verdict": r.report.verdict.value, "matches": ok, "svg": r.path.name})
    Path(args.out, "index.json").write_text(json.dumps(index, indent=2) + "\n")


if __name__ == "__main__":
    main()
