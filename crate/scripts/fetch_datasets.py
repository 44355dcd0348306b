#!/usr/bin/env python3
"""Fetch the six benchmark datasets from the UCI Machine Learning Repository
and convert them to the ARFF dialect this project reads.

Usage:
    python3 scripts/fetch_datasets.py [--only iris,glass,...] [--data-dir data]

Integrity: every download's SHA-256 is checked against data/checksums.json.
On the first successful fetch of a file the digest is recorded there
(pin-on-first-use); later fetches must match it. Commit checksums.json once
it is populated so that every machine verifies against the same bytes.

The raw files are redistributed by UCI for research use; they are converted,
not committed, to respect the source licensing. Conversions applied:

  iris               4 numeric attributes + 3-class label, verbatim.
  abalone            sex becomes a nominal {M,F,I}; rings (1..29) is the
                     class, one label per observed value.
  glass              the running id column is dropped; the type code
                     (1,2,3,5,6,7) is the class.
  echocardiogram     the name, group, and mult columns are dropped (the UCI
                     documentation marks them meaningless/derivable);
                     still-alive and pericardial-effusion are nominal {0,1};
                     alive-at-1 is the class. Short or over-long rows are
                     normalized; '?' marks missing cells, including missing
                     class labels.
  ozone (onehr)      the date column is dropped; 72 numeric attributes;
                     class {0,1}.
  breast-cancer      the sample code number is dropped; 9 ordinal attributes
                     kept numeric; class 2 -> benign, 4 -> malignant.

The bundled data/iris.arff is generated from scikit-learn's copy of the same
data; running this script replaces it with the canonical UCI file (they
differ in two single cells, a known historical discrepancy).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import urllib.request
from pathlib import Path

BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases"

SOURCES = {
    "iris": f"{BASE}/iris/iris.data",
    "abalone": f"{BASE}/abalone/abalone.data",
    "glass": f"{BASE}/glass/glass.data",
    "echocardiogram": f"{BASE}/echocardiogram/echocardiogram.data",
    "ozone": f"{BASE}/ozone/onehr.data",
    "breast-cancer": f"{BASE}/breast-cancer-wisconsin/breast-cancer-wisconsin.data",
}


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def fetch(url: str) -> bytes:
    print(f"  downloading {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read()


def arff_escape(label: str) -> str:
    if any(c in label for c in " ,{}'\"%"):
        return "'" + label.replace("'", "\\'") + "'"
    return label


def write_arff(path: Path, relation: str, attributes, rows) -> None:
    """attributes: list of (name, None | list-of-labels); None = numeric."""
    lines = [f"@relation {relation}", ""]
    for name, labels in attributes:
        if labels is None:
            lines.append(f"@attribute {name} numeric")
        else:
            joined = ",".join(arff_escape(l) for l in labels)
            lines.append(f"@attribute {name} {{{joined}}}")
    lines.append("")
    lines.append("@data")
    for row in rows:
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    print(f"  wrote {path} ({len(rows)} instances)")


def parse_csv(raw: bytes):
    text = raw.decode("utf-8", errors="replace")
    return [
        [f.strip() for f in line.split(",")]
        for line in text.splitlines()
        if line.strip()
    ]


def observed_labels(rows, col, key=None):
    seen = {r[col] for r in rows if r[col] != "?"}
    return sorted(seen, key=key)


def convert_iris(raw: bytes, out: Path) -> None:
    rows = parse_csv(raw)
    names = ["sepallength", "sepalwidth", "petallength", "petalwidth"]
    attrs = [(n, None) for n in names]
    attrs.append(("class", observed_labels(rows, 4)))
    write_arff(out, "iris", attrs, rows)


def convert_abalone(raw: bytes, out: Path) -> None:
    rows = parse_csv(raw)
    attrs = [("sex", ["M", "F", "I"])]
    for n in [
        "length",
        "diameter",
        "height",
        "whole_weight",
        "shucked_weight",
        "viscera_weight",
        "shell_weight",
    ]:
        attrs.append((n, None))
    attrs.append(("rings", observed_labels(rows, 8, key=int)))
    write_arff(out, "abalone", attrs, rows)


def convert_glass(raw: bytes, out: Path) -> None:
    rows = [r[1:] for r in parse_csv(raw)]  # drop the running id
    attrs = [(n, None) for n in ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"]]
    attrs.append(("type", observed_labels(rows, 9, key=int)))
    write_arff(out, "glass", attrs, rows)


def convert_echocardiogram(raw: bytes, out: Path) -> None:
    # Columns: survival, still-alive, age-at-heart-attack,
    # pericardial-effusion, fractional-shortening, epss, lvdd,
    # wall-motion-score, wall-motion-index, mult, name, group, alive-at-1.
    cleaned = []
    for r in parse_csv(raw):
        r = (r + ["?"] * 13)[:13]
        keep = r[:9] + [r[12]]  # drop mult, name, group
        keep = [v if v not in ("", "?") else "?" for v in keep]
        cleaned.append(keep)
    attrs = [
        ("survival", None),
        ("still_alive", ["0", "1"]),
        ("age_at_heart_attack", None),
        ("pericardial_effusion", ["0", "1"]),
        ("fractional_shortening", None),
        ("epss", None),
        ("lvdd", None),
        ("wall_motion_score", None),
        ("wall_motion_index", None),
        ("alive_at_1", ["0", "1"]),
    ]
    # Normalize stray non-binary codes in the nominal columns to missing.
    for row in cleaned:
        for col in (1, 3, 9):
            if row[col] not in ("0", "1", "?"):
                row[col] = "?"
    write_arff(out, "echocardiogram", attrs, cleaned)


def convert_ozone(raw: bytes, out: Path) -> None:
    rows = [r[1:] for r in parse_csv(raw)]  # drop the date column
    n_features = len(rows[0]) - 1
    attrs = [(f"v{i + 1}", None) for i in range(n_features)]
    attrs.append(("ozone_day", ["0", "1"]))
    write_arff(out, "ozone", attrs, rows)


def convert_breast_cancer(raw: bytes, out: Path) -> None:
    label = {"2": "benign", "4": "malignant"}
    rows = []
    for r in parse_csv(raw):
        rows.append(r[1:10] + [label[r[10]]])  # drop the sample code number
    attrs = [
        (n, None)
        for n in [
            "clump_thickness",
            "cell_size_uniformity",
            "cell_shape_uniformity",
            "marginal_adhesion",
            "single_epi_cell_size",
            "bare_nuclei",
            "bland_chromatin",
            "normal_nucleoli",
            "mitoses",
        ]
    ]
    attrs.append(("class", ["benign", "malignant"]))
    write_arff(out, "breast-cancer", attrs, rows)


CONVERTERS = {
    "iris": convert_iris,
    "abalone": convert_abalone,
    "glass": convert_glass,
    "echocardiogram": convert_echocardiogram,
    "ozone": convert_ozone,
    "breast-cancer": convert_breast_cancer,
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--only", help="comma-separated subset of dataset names")
    ap.add_argument("--data-dir", default="data", type=Path)
    args = ap.parse_args()

    names = list(SOURCES)
    if args.only:
        names = [n.strip() for n in args.only.split(",")]
        unknown = set(names) - set(SOURCES)
        if unknown:
            print(f"unknown dataset(s): {', '.join(sorted(unknown))}", file=sys.stderr)
            return 2

    args.data_dir.mkdir(parents=True, exist_ok=True)
    checksum_file = args.data_dir / "checksums.json"
    checksums = (
        json.loads(checksum_file.read_text()) if checksum_file.exists() else {}
    )

    failures = []
    for name in names:
        print(f"{name}:")
        try:
            raw = fetch(SOURCES[name])
        except Exception as e:  # noqa: BLE001 - report and continue
            print(f"  FAILED: {e}", file=sys.stderr)
            failures.append(name)
            continue
        digest = sha256(raw)
        pinned = checksums.get(name)
        if pinned is None:
            checksums[name] = digest
            print(f"  sha256 {digest} (pinned on first use)")
        elif pinned != digest:
            print(
                f"  FAILED: sha256 mismatch: expected {pinned}, got {digest}",
                file=sys.stderr,
            )
            failures.append(name)
            continue
        else:
            print(f"  sha256 {digest} (verified)")
        CONVERTERS[name](raw, args.data_dir / f"{name}.arff")

    checksum_file.write_text(json.dumps(checksums, indent=2, sort_keys=True) + "\n")
    if failures:
        print(f"failed: {', '.join(failures)}", file=sys.stderr)
        return 1
    print("all datasets fetched and converted")
    return 0


if __name__ == "__main__":
    sys.exit(main())
