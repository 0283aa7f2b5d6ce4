#!/usr/bin/env python3
"""Regenerate the CSV files under data/.

housing.csv comes from the California housing data (StatLib / OpenML id 537),
as redistributed by the PMLB benchmark suite:
    https://github.com/EpistasisLab/pmlb/raw/master/datasets/537_houses/537_houses.tsv.gz
Median income is rescaled to thousands of dollars and the target (median house
value) to hundreds of thousands of dollars.

diabete.csv is the diabetes regression dataset bundled with scikit-learn
(Efron et al.), with raw (unscaled) features.

Usage: python3 scripts/make_datasets.py [path/to/537_houses.tsv.gz]
"""
import gzip
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def fmt(x: float) -> str:
    return repr(float(x))


def make_housing(tsv_gz: Path) -> None:
    with gzip.open(tsv_gz, "rt") as f:
        header = f.readline().strip().split("\t")
        rows = [line.strip().split("\t") for line in f if line.strip()]
    expected = ["median_income", "housing_median_age", "total_rooms",
                "total_bedrooms", "population", "households",
                "latitude", "longitude", "target"]
    assert header == expected, header
    out = ROOT / "data" / "housing.csv"
    with open(out, "w") as f:
        f.write("MedInc,MedAge,TotalRooms,TotalBed,Population,Households,"
                "Latitude,Longitude,MedHouseVal\n")
        for r in rows:
            v = [float(x) for x in r]
            cols = [v[0] * 10.0, v[1], v[2], v[3], v[4], v[5], v[6], v[7],
                    v[8] / 100000.0]
            f.write(",".join(fmt(c) for c in cols) + "\n")
    print(f"wrote {out}: {len(rows)} rows")


def make_diabete() -> None:
    from sklearn.datasets import load_diabetes
    d = load_diabetes(scaled=False)
    out = ROOT / "data" / "diabete.csv"
    with open(out, "w") as f:
        f.write(",".join(list(d.feature_names) + ["target"]) + "\n")
        for x, y in zip(d.data, d.target):
            f.write(",".join(fmt(c) for c in list(x) + [y]) + "\n")
    print(f"wrote {out}: {len(d.target)} rows")


if __name__ == "__main__":
    src = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("/tmp/houses.tsv.gz")
    make_housing(src)
    make_diabete()
