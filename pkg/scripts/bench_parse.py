"""Time parse + spot on a generated document.

    python scripts/bench_parse.py --bytes 50000 --runs 11
"""

import argparse
import statistics
import time

from stexkit.fuzz import generated_document
from stexkit.parser import parse
from stexkit.source_model import DocumentUri
from stexkit.spotters import run_spotters


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bytes", type=int, default=50_000, help="size of the generated document")
    ap.add_argument("--runs", type=int, default=11)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    text = generated_document(args.bytes, args.seed)
    doc = DocumentUri("bench.tex")
    result = run_spotters(parse(text), doc)  # warm-up
    parse_ms, spot_ms = [], []
    for _ in range(args.runs):
        t0 = time.perf_counter()
        tree = parse(text)
        t1 = time.perf_counter()
        run_spotters(tree, doc)
        t2 = time.perf_counter()
        parse_ms.append((t1 - t0) * 1000)
        spot_ms.append((t2 - t1) * 1000)
    total = [p + s for p, s in zip(parse_ms, spot_ms)]
    print(f"{len(text.encode())} bytes, {text.count(chr(10))} lines, "
          f"{len(result.symdefs)} symdefs, {len(result.diagnostics)} diagnostics")
    print(f"parse  median {statistics.median(parse_ms):7.1f} ms")
    print(f"spot   median {statistics.median(spot_ms):7.1f} ms")
    print(f"total  median {statistics.median(total):7.1f} ms  (min {min(total):.1f}, max {max(total):.1f})")


if __name__ == "__main__":
    main()
