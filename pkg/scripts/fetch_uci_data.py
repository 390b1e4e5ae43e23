#!/usr/bin/env python3
"""Download and convert the UCI benchmark datasets used by the
acceptance suite into the CSV layout the loader expects
(numeric feature columns, integer label column last).

Usage: python scripts/fetch_uci_data.py [output_dir]   (default: ./data)
Requires internet access to archive.ics.uci.edu.
"""

import sys
import urllib.request
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"

PENDIGITS = [f"{UCI}/pendigits/pendigits.tra", f"{UCI}/pendigits/pendigits.tes"]
SEGMENTATION = [f"{UCI}/image/segmentation.data", f"{UCI}/image/segmentation.test"]


def fetch(url: str) -> list[str]:
    print(f"fetching {url}")
    with urllib.request.urlopen(url) as resp:
        return resp.read().decode("utf-8").splitlines()


def convert_pendigits(out: Path) -> None:
    # already numeric CSV: 16 features then the digit label
    rows = []
    for url in PENDIGITS:
        rows.extend(line.strip() for line in fetch(url) if line.strip())
    (out / "pendigits.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {out / 'pendigits.csv'} ({len(rows)} rows)")


def convert_segmentation(out: Path) -> None:
    # class name first, 19 numeric features after; 5 header lines per file
    rows = []
    classes: dict[str, int] = {}
    raw = []
    for url in SEGMENTATION:
        raw.extend(line.strip() for line in fetch(url)[5:] if line.strip())
    for name in sorted({line.split(",")[0] for line in raw}):
        classes[name] = len(classes)
    for line in raw:
        name, *feats = line.split(",")
        rows.append(",".join(feats + [str(classes[name])]))
    (out / "segmentation.csv").write_text("\n".join(rows) + "\n")
    print(f"wrote {out / 'segmentation.csv'} ({len(rows)} rows, classes {classes})")


def main() -> int:
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    convert_pendigits(out)
    convert_segmentation(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
