#!/usr/bin/env python3
"""Download and verify the benchmark signed bipartite graph edge lists.

The acceptance suite's end-to-end criteria run against four public benchmark
datasets (review, senate, house1to10, bonanza). This script pulls them from
their public GitHub mirrors, checks the node/edge statistics against the
published values, and writes normalized whitespace-triple files into data/
(or --dest). Needs outbound network access.

Usage:
    python scripts/fetch_datasets.py [--dest data/] [--source-dir DIR]

With --source-dir, already-downloaded raw files are converted and verified
instead of being fetched.
"""

import argparse
import sys
import urllib.request
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from gegennet.graph import parse_edge_list  # noqa: E402
from gegennet.synthetic import write_edge_list  # noqa: E402

MIRRORS = (
    "https://raw.githubusercontent.com/wanghewen/GegenNet/main/",
    "https://raw.githubusercontent.com/wanghewen/GegenNet/master/",
    "https://raw.githubusercontent.com/huangjunjie-cs/SBGNN/master/experiments-data/",
)

# target file, candidate remote names, expected (u_count, v_count, edges)
DATASETS = {
    "review.tsv": (("review.txt", "data/review.txt"), (182, 304, 1170)),
    "senate.tsv": (("senate1to10.txt", "senate.txt", "data/senate1to10.txt"),
                   (145, 1056, 27083)),
    "house1to10.tsv": (("house1to10.txt", "data/house1to10.txt"), (515, 1281, 114378)),
    "bonanza.tsv": (("bonanza.txt", "data/bonanza.txt"), (7919, 1973, 36543)),
}


def fetch(url, timeout=60):
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read().decode("utf-8", errors="replace")


def verify_and_write(text, expected, dest):
    g = parse_edge_list(text)
    got = (g.u_count, g.v_count, g.n_edges)
    if got != expected:
        raise ValueError(f"statistics mismatch: got {got}, expected {expected}")
    write_edge_list(g, dest)
    print(f"  wrote {dest} ({g.n_edges} edges, "
          f"{g.n_positive / g.n_edges:.4f} positive)")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dest", default="data")
    parser.add_argument("--source-dir", help="convert local raw files instead of downloading")
    args = parser.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)

    failures = []
    for target, (candidates, expected) in DATASETS.items():
        out = dest / target
        if out.exists():
            print(f"{target}: already present, skipping")
            continue
        print(f"{target}: expected stats {expected}")
        texts = []
        if args.source_dir:
            for name in candidates:
                path = Path(args.source_dir) / Path(name).name
                if path.exists():
                    texts.append((str(path), path.read_text(encoding="utf-8")))
        else:
            for mirror in MIRRORS:
                for name in candidates:
                    url = mirror + name
                    try:
                        texts.append((url, fetch(url)))
                        break
                    except Exception:
                        continue
                if texts:
                    break
        ok = False
        for source, text in texts:
            try:
                verify_and_write(text, expected, out)
                print(f"  source: {source}")
                ok = True
                break
            except Exception as exc:
                print(f"  rejected {source}: {exc}")
        if not ok:
            failures.append(target)
            print(f"  FAILED: no verifiable source for {target}")

    if failures:
        print(f"\nunresolved datasets: {failures}", file=sys.stderr)
        return 1
    print("\nall datasets verified; run: pytest tests/test_acceptance.py -v -s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
