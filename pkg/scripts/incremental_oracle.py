"""Replay random edit sequences through an IncrementalSession and compare
each end state against a from-scratch analysis.

    python scripts/incremental_oracle.py tests/fixtures/corpus5 --sequences 200 --every-step
"""

import argparse
import random
import time

from stexkit.analysis import Analysis
from stexkit.fuzz import EditConfig, random_edit_in
from stexkit.incremental import ActionKind, IncrementalSession
from stexkit.source_model import Workspace, apply_text_edit, scan_workspace


def fresh(analysis: Analysis) -> Analysis:
    return Analysis.build(Workspace.from_texts({d.value: t for d, t in analysis.workspace.texts().items()}))


def main() -> None:
    ap = argparse.ArgumentParser(description="incremental vs. full analysis oracle")
    ap.add_argument("root", help="directory of .tex files to start from")
    ap.add_argument("--sequences", type=int, default=1000)
    ap.add_argument("--max-steps", type=int, default=10)
    ap.add_argument("--min-len", type=int, default=1)
    ap.add_argument("--max-len", type=int, default=20)
    ap.add_argument("--backslash-rate", type=float, default=0.3)
    ap.add_argument("--every-step", action="store_true", help="compare after every edit, not just at the end")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    cfg = EditConfig(args.min_len, args.max_len, args.backslash_rate)
    texts = {d.value: t for d, t in scan_workspace(args.root).texts().items()}
    counts = {kind: 0 for kind in ActionKind}
    mismatches = 0
    t0 = time.perf_counter()
    for n in range(args.sequences):
        analysis = Analysis.build(Workspace.from_texts(texts))
        session = IncrementalSession(analysis)
        for _ in range(rng.randint(1, args.max_steps)):
            apply_text_edit(analysis.workspace, random_edit_in(rng, analysis.workspace, cfg))
            if args.every_step and analysis.snapshot() != fresh(analysis).snapshot():
                mismatches += 1
                print(f"sequence {n}: mismatch")
                break
        else:
            if analysis.snapshot() != fresh(analysis).snapshot():
                mismatches += 1
                print(f"sequence {n}: mismatch")
        for kind, k in session.counts.items():
            counts[kind] += k
        session.close()
    elapsed = time.perf_counter() - t0
    print(f"{args.sequences} sequences from {len(texts)} files in {elapsed:.1f}s")
    print("  " + ", ".join(f"{kind.name.lower()}: {k}" for kind, k in counts.items()))
    print(f"  mismatches: {mismatches}")
    raise SystemExit(1 if mismatches else 0)


if __name__ == "__main__":
    main()
