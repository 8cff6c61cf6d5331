"""Regenerate the CSV files in ``data/`` from locally downloaded wheels.

The sandbox this project was built in could only reach PyPI, so the six UCI
tables were taken from two wheels that bundle them::

    pip download keel-ds orange3 --no-deps -d /tmp/wheels
    python tools/build_datasets.py /tmp/wheels/keel_ds-*.whl /tmp/wheels/orange3-*.whl

Glass is only shipped by keel-ds as one-vs-rest binary files (glass0 = type 1,
glass1 = type 2, glass4 = type 5, glass5 = type 6, glass6 = type 7, all in the
same row order); rows positive in none of them are type 3.  Ionosphere comes
from Orange's test data because the keel-ds copy drops the constant second
attribute.
"""

import csv
import sys
import zipfile
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "data"

HEADERS = {
    "iris": ["sepal_length", "sepal_width", "petal_length", "petal_width", "class"],
    "wine": ["alcohol", "malic_acid", "ash", "alcalinity_of_ash", "magnesium",
             "total_phenols", "flavanoids", "nonflavanoid_phenols",
             "proanthocyanins", "color_intensity", "hue", "od280_od315",
             "proline", "class"],
    "sonar": [f"band_{i:02d}" for i in range(1, 61)] + ["class"],
    "pima": ["preg", "plas", "pres", "skin", "insu", "mass", "pedi", "age", "class"],
    "glass": ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe", "type"],
    "ionosphere": [f"a{i:02d}" for i in range(1, 35)] + ["class"],
}


def _rows(text, sep=","):
    return [[v.strip() for v in line.split(sep)] for line in text.splitlines()
            if line.strip() and not line.startswith("@")]


def _write(name, rows):
    with open(OUT / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADERS[name])
        w.writerows(rows)
    print(f"{name}: {len(rows)} rows")


def main(keel_wheel, orange_wheel):
    keel = zipfile.ZipFile(keel_wheel)
    for name in ("iris", "wine", "sonar", "pima"):
        raw = keel.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
        _write(name, _rows(raw))

    parts = {1: "glass0", 2: "glass1", 5: "glass4", 6: "glass5", 7: "glass6"}
    glass = None
    for kind, fname in parts.items():
        rows = _rows(keel.read(f"keel_ds/data/imbalanced/raw/{fname}.dat").decode())
        if glass is None:
            glass = [[r[:-1], None] for r in rows]
        for entry, r in zip(glass, rows):
            if entry[0] != r[:-1]:
                raise SystemExit(f"{fname}: row order differs from glass0")
            if r[-1] == "positive":
                entry[1] = kind
    _write("glass", [attrs + [str(kind or 3)] for attrs, kind in glass])

    orange = zipfile.ZipFile(orange_wheel)
    tab = orange.read("Orange/tests/datasets/ionosphere.tab").decode()
    _write("ionosphere", _rows(tab, sep="\t")[3:])


if __name__ == "__main__":
    main(*sys.argv[1:3])
