"""Scalar curvature of the varied Berger sphere against 2(3 - t) over a range of t."""

import argparse

import numpy as np

from canvar.catalog import get_entry
from canvar.geometry import curvature_bundle


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=10)
    args = ap.parse_args()
    e = get_entry("berger_s3")
    pts = e.chart.sample_points(args.points, 42)
    print(f"{'t':>6}  {'mean S_t':>20}  {'2(3-t)':>8}  max |err|")
    for t in np.linspace(-6, 6, 25):
        if abs(t + 1) < 1e-6:
            continue
        chart = e.variation(float(t)).chart
        S = np.array([curvature_bundle(chart, p).scalar for p in pts])
        print(f"{t:6.2f}  {S.mean():20.15f}  {2 * (3 - t):8.3f}  {np.abs(S - 2 * (3 - t)).max():.2e}")


if __name__ == "__main__":
    main()
