"""Reference values for the statistics and PCA tests.

Run with `python3 tools/oracles.py` from the repository root; writes
data/oracles/statistics.json, which the Rust tests read. scipy/numpy serve
only as an independent reference and are never needed at build or test time.
"""
import json
import os

import numpy as np
from scipy import stats

SAMPLES = [
    ([1, 2, 3], [4, 5, 6]),
    ([0.5, 1.5, 2.0, 2.5], [1.0, 1.2, 1.4]),
    ([10.1, 9.8, 10.4, 10.0, 9.9], [10.6, 10.9, 10.2, 10.8]),
    ([0.26, 0.24, 0.29, 0.27, 0.25, 0.28], [0.01, 0.03, -0.02, 0.04, 0.0]),
    ([3.0, 3.0, 4.0], [3.0, 4.0, 4.0]),
    ([1e-3, 2e-3, 1.5e-3], [5e-3, 4e-3, 6e-3, 5.5e-3]),
    ([-1.0, -2.0, -3.0, -4.0], [1.0, 2.0, 3.0, 4.0]),
    ([100.0, 102.0, 98.0, 101.0], [99.0, 100.5, 100.0, 101.5, 98.5]),
    ([0.0, 2.0], [1.0, 3.0]),
    ([5.0, 7.0, 6.0, 8.0, 9.0, 5.5, 6.5], [6.0, 6.2, 6.4]),
    ([0.1, 0.4, 0.2, 0.3], [0.35, 0.45, 0.55, 0.25, 0.5]),
    ([12.0, 15.0, 11.0, 14.0, 13.0], [12.5, 12.5, 13.0, 12.0]),
    ([2.2, 2.4, 2.1], [2.2, 2.4, 2.1, 2.3]),
    ([0.48, 0.31, 0.22, 0.27, 0.19, 0.33], [0.0, 0.001, 0.02, 0.005]),
    ([1.0, 1.0, 1.0, 2.0], [0.0, 0.0, 1.0, 1.0]),
    ([7.5, 8.5, 9.5, 6.5, 7.0], [7.2, 7.8, 8.1, 7.4, 7.9, 8.0]),
    ([-0.5, 0.5, 1.5, -1.5], [0.2, 0.1, -0.1]),
    ([42.0, 40.0, 44.0], [30.0, 31.0, 29.0]),
    ([0.9, 1.1, 1.0, 1.2, 0.8, 1.05], [1.3, 1.4, 1.25, 1.35, 1.5, 1.45]),
    ([3.14, 2.71, 1.41, 1.73], [2.0, 2.5, 3.0, 3.5, 4.0]),
]


def ttests():
    out = []
    for xs, ys in SAMPLES:
        t, p = stats.ttest_ind(xs, ys, equal_var=True)
        tw, pw = stats.ttest_ind(xs, ys, equal_var=False)
        out.append({
            "xs": list(map(float, xs)),
            "ys": list(map(float, ys)),
            "t": float(t),
            "p": float(p),
            "welch_t": float(tw),
            "welch_p": float(pw),
            "mean_x": float(np.mean(xs)),
            "sem_x": float(stats.sem(xs)),
        })
    return out


MATRICES = [
    [[0.0, 0.1, 0.3, 1.0],
     [0.2, 0.5, 0.2, 1.5],
     [0.4, 0.7, 0.9, 0.5],
     [0.6, 0.6, 1.4, 2.5],
     [0.8, 1.1, 0.7, 2.0]],
    [[1.0, 2.0, 0.5, -1.0],
     [2.0, 1.0, 1.5, 0.0],
     [3.0, 4.0, 0.0, 2.0],
     [4.0, 3.0, 2.5, 1.0],
     [5.0, 6.0, 1.0, 3.5]],
    [[0.00, 0.00, 0.00, 0.00],
     [0.10, 0.30, 0.05, 0.90],
     [0.20, 0.55, 0.15, 1.70],
     [0.30, 0.60, 0.40, 2.20],
     [0.40, 0.50, 0.80, 2.10]],
]


def pca():
    out = []
    for m in MATRICES:
        x = np.array(m)
        xc = x - x.mean(axis=0)
        u, s, vt = np.linalg.svd(xc, full_matrices=False)
        for r in range(vt.shape[0]):
            j = np.argmax(np.abs(vt[r]))
            if vt[r, j] < 0:
                vt[r] *= -1
        var = s ** 2
        out.append({
            "matrix": m,
            "components": vt.tolist(),
            "explained_variance_ratio": (var / var.sum()).tolist(),
            "projections": (xc @ vt.T).tolist(),
        })
    return out


def ols():
    xs = [0.0, 0.25, 0.5]
    ys = [0.0, 0.6, 0.9]
    slope, intercept = np.polyfit(xs, ys, 1)
    return [{"xs": xs, "ys": ys, "slope": float(slope), "intercept": float(intercept)}]


if __name__ == "__main__":
    os.makedirs("data/oracles", exist_ok=True)
    with open("data/oracles/statistics.json", "w") as f:
        json.dump({"ttest": ttests(), "pca": pca(), "ols": ols()}, f, indent=1)
        f.write("\n")
