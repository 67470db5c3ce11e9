#!/usr/bin/env python3
import argparse

import numpy as np

from gl3v.reporting import read_csv, write_csv


def main():
    parser = argparse.ArgumentParser(description="Merge envelope CSVs of several exponent-fit runs.")
    parser.add_argument("-i", "--input", type=str, nargs="+", required=True)
    parser.add_argument("-o", "--output", type=str, required=True)
    args = parser.parse_args()

    envelope = {}
    runs = {}
    for filename in args.input:
        kind, header, rows = read_csv(filename)
        if kind != "envelope":
            raise SystemExit("{0}: expected an envelope table, found {1}".format(filename, kind))
        for row in rows:
            T = int(row["T"])
            value = float(row["envelope"])
            envelope[T] = max(envelope.get(T, 0.0), value)
            runs[T] = runs.get(T, 0) + 1

    T_grid = sorted(envelope)
    rows = [{"T": T, "envelope": repr(envelope[T]), "runs": runs[T]} for T in T_grid]
    write_csv(args.output, "envelope", ["T", "envelope", "runs"], rows)

    # slope of the merged envelope
    if len(T_grid) >= 2:
        beta, _ = np.polyfit(np.log(T_grid), np.log([envelope[T] for T in T_grid]), 1)
        print("beta = {0:.4f} over {1} files".format(beta, len(args.input)))


if __name__ == '__main__':
    main()
