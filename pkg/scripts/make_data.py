"""Regenerate the bundled benchmark CSVs under src/sdcluster/data/.

iris.csv and wine.csv are the UCI tables as shipped with scikit-learn.
hepatitis.csv is a synthetic stand-in shaped like UCI Hepatitis (155 rows,
class column first, 19 attributes, '?' missing markers) built so that
complete-case filtering leaves exactly 80 rows spanning both classes; the
real table is not redistributable from this environment. Deterministic.
"""

from pathlib import Path

import numpy as np
from sklearn.datasets import load_iris, load_wine

OUT = Path(__file__).resolve().parent.parent / "src" / "sdcluster" / "data"


def write_iris():
    data = load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width", "species"]
    with open(OUT / "iris.csv", "w") as fh:
        fh.write(",".join(names) + "\n")
        for row, target in zip(data.data, data.target):
            cells = [f"{v:g}" for v in row] + [data.target_names[target]]
            fh.write(",".join(cells) + "\n")


def write_wine():
    data = load_wine()
    names = [n.replace("/", "_") for n in data.feature_names] + ["class"]
    with open(OUT / "wine.csv", "w") as fh:
        fh.write(",".join(names) + "\n")
        for row, target in zip(data.data, data.target):
            cells = [f"{v:g}" for v in row] + [str(target)]
            fh.write(",".join(cells) + "\n")


def write_hepatitis():
    rng = np.random.default_rng(1737)
    n_total, n_die = 155, 32
    classes = np.array([1] * n_die + [2] * (n_total - n_die))
    rng.shuffle(classes)
    die = classes == 1

    def binary(p_live, p_die):
        p = np.where(die, p_die, p_live)
        return np.where(rng.random(n_total) < p, 2, 1)

    cols = {}
    cols["age"] = np.clip(np.round(rng.normal(44, 12, n_total) + 8 * die), 7, 78).astype(int)
    cols["sex"] = np.where(rng.random(n_total) < 0.88, 1, 2)
    for name, pl in [("steroid", 0.5), ("antivirals", 0.15), ("fatigue", 0.55),
                     ("malaise", 0.35), ("anorexia", 0.2), ("liver_big", 0.75),
                     ("liver_firm", 0.4), ("spleen_palpable", 0.2), ("spiders", 0.3),
                     ("ascites", 0.1), ("varices", 0.1)]:
        cols[name] = binary(pl, min(0.95, pl + 0.3))
    cols["bilirubin"] = np.round(np.clip(
        rng.lognormal(np.where(die, 0.55, 0.0), 0.45, n_total), 0.3, 8.0), 1)
    cols["alk_phosphate"] = np.clip(np.round(
        rng.normal(100, 45, n_total) + 35 * die), 26, 295).astype(int)
    cols["sgot"] = np.clip(np.round(
        rng.lognormal(4.0, 0.55, n_total) + 30 * die), 14, 648).astype(int)
    cols["albumin"] = np.round(np.clip(
        rng.normal(4.0, 0.5, n_total) - 0.8 * die, 2.1, 6.4), 1)
    cols["protime"] = np.clip(np.round(
        rng.normal(64, 16, n_total) - 18 * die), 0, 100).astype(int)
    cols["histology"] = binary(0.35, 0.85)

    table = [[str(c) for c in classes]] + [[str(v) for v in col] for col in cols.values()]
    rows = list(map(list, zip(*table)))

    # exactly 75 rows get missing cells so complete-case filtering keeps 80,
    # with both classes present among the complete rows
    die_idx = np.flatnonzero(die)
    live_idx = np.flatnonzero(~die)
    complete = set(rng.choice(die_idx, 14, replace=False)) | set(
        rng.choice(live_idx, 66, replace=False))
    incomplete = [i for i in range(n_total) if i not in complete]
    attr_cols = list(range(1, 20))
    protime_col = 1 + list(cols).index("protime")
    for i in incomplete:
        picks = {protime_col} if rng.random() < 0.7 else set()
        extra = rng.integers(0 if picks else 1, 3)
        picks |= set(rng.choice(attr_cols, int(extra), replace=False))
        for c in picks:
            rows[i][c] = "?"

    with open(OUT / "hepatitis.csv", "w") as fh:
        for row in rows:
            fh.write(",".join(row) + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write_iris()
    write_wine()
    write_hepatitis()
    print("wrote", sorted(p.name for p in OUT.glob("*.csv")))
