#!/usr/bin/env python3
"""Write heartbeat arrays as the CSV files the loader reads.

Input is a .npz archive or a pickle holding a dict (or a tuple) of arrays.
Samples may be shaped [n, 128] or [n, 1, 128]; labels are integers 0..4.
Output: a header line, then 128 values and the label per row.

    convert_heartbeats.py train.pkl --x x_train --y y_train -o data/train.csv
"""

import argparse
import pickle
import sys

import numpy as np


def load_arrays(path):
    if path.endswith(".npz"):
        with np.load(path) as z:
            return {k: z[k] for k in z.files}
    with open(path, "rb") as f:
        obj = pickle.load(f)
    if isinstance(obj, (tuple, list)):
        return {str(i): v for i, v in enumerate(obj)}
    return obj


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("input")
    ap.add_argument("--x", default="x", help="key (or tuple index) of the samples")
    ap.add_argument("--y", default="y", help="key (or tuple index) of the labels")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args()

    arrays = load_arrays(args.input)
    try:
        x = np.asarray(arrays[args.x], dtype=np.float32)
        y = np.asarray(arrays[args.y])
    except KeyError as e:
        sys.exit(f"missing key {e}; available: {', '.join(map(str, arrays))}")
    x = x.reshape(len(x), -1)
    if x.shape[1] != 128:
        sys.exit(f"expected 128 values per sample, got {x.shape[1]}")
    if y.ndim == 2:  # one-hot
        y = y.argmax(axis=1)
    y = y.astype(np.int64).reshape(-1)
    if len(y) != len(x):
        sys.exit(f"{len(x)} samples but {len(y)} labels")
    if y.min() < 0 or y.max() > 4:
        sys.exit("labels must lie in 0..4")

    with open(args.output, "w") as f:
        f.write(",".join([f"t{i}" for i in range(128)] + ["label"]) + "\n")
        for row, label in zip(x, y):
            f.write(",".join(f"{v:.9g}" for v in row) + f",{label}\n")
    print(f"wrote {len(x)} rows to {args.output}")


if __name__ == "__main__":
    main()
