#!/usr/bin/env python3
"""Convert the UCI Character Trajectories dataset to the dde-mgm CSV layout.

The dataset ships as a MATLAB file (mixoutALL_shifted.mat) holding 2858
pen-tip trajectories of 20 letter classes; each trajectory is a 3xT array
of x-velocity, y-velocity, and pen force. This script writes the long-form
CSV the CLI and test suite consume:

    series_id,label,v1,v2,v3

Usage:
    python3 scripts/convert_uci_chartraj.py mixoutALL_shifted.mat \
        testdata/uci_character_trajectories.csv

Requires scipy (for scipy.io.loadmat).
"""

import sys

import numpy as np
from scipy.io import loadmat


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    mat_path, csv_path = sys.argv[1], sys.argv[2]

    mat = loadmat(mat_path, squeeze_me=False)
    mixout = mat["mixout"].ravel()
    consts = mat["consts"][0, 0]
    # consts.key is a 1xK cell array of single-character class names;
    # consts.charlabels maps each trajectory to a 1-based key index.
    key = [str(cell[0]) for cell in consts["key"].ravel()]
    charlabels = consts["charlabels"].ravel().astype(int)

    if len(mixout) != len(charlabels):
        print(
            f"label/trajectory count mismatch: {len(charlabels)} vs {len(mixout)}",
            file=sys.stderr,
        )
        return 2

    n_rows = 0
    with open(csv_path, "w", encoding="utf-8") as out:
        out.write("series_id,label,v1,v2,v3\n")
        for i, (traj, label_idx) in enumerate(zip(mixout, charlabels)):
            label = key[label_idx - 1]
            data = np.asarray(traj, dtype=float)
            if data.shape[0] != 3:
                data = data.T
            series_id = f"s{i:04d}"
            for col in range(data.shape[1]):
                v = data[:, col]
                out.write(f"{series_id},{label},{v[0]!r},{v[1]!r},{v[2]!r}\n")
                n_rows += 1

    print(f"wrote {n_rows} samples from {len(mixout)} series to {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
