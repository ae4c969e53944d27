"""Evidence for the incompleteness of the varied plane.

Traces the geodesic from the origin along (1,1), measures the straight ray
at increasing horizons, and runs a seeded probe in the same direction.
"""

import math

from canvar.catalog import get_entry
from canvar.geodesics import Path, ProbeSeeds, completeness_probe, curve_length, integrate_geodesic


def main():
    e = get_entry("incomplete_plane")
    chart = e.variation(2.0).chart
    tr = integrate_geodesic(chart, (0.0, 0.0), (1.0, 1.0), 40.0)
    print(f"geodesic: {tr.termination} at s = {tr.final_param:.6f}, endpoint {tr.points[-1].round(3).tolist()}")
    ray = Path.line((0.0, 0.0), (1.0, 1.0))
    for T in (1, 5, 10, 20, 40):
        r = curve_length(chart, ray, (0.0, float(T)))
        digits = r.digits or 15
        print(f"length on [0,{T:>2}] = {r.value:.16f}  (sqrt(2)/2 - L = {math.sqrt(2) / 2 - r.value:.2e}, "
              f"{digits} digits)")
    s = completeness_probe(chart, ProbeSeeds(count=4, seed=42, direction=(1.0, 1.0)), 20.0)
    for r in s.records:
        print(f"probe from {[round(c, 3) for c in r.p0]}: {r.termination}, s = {r.final_param:.4f}")


if __name__ == "__main__":
    main()
