"""Probability of satisfiability as the number of sentences grows.

Small sample sizes keep this quick; the CLI ``phase-map`` and ``ksat``
commands run the full versions.  Run with ``python demos/03_phase_curves.py``.
"""

from nlsat.phasemap import Axis, crossing, ksat_psat, map_region

# random 3-SAT on 60 variables: the curve falls through 1/2 near m/n = 4.2
points = ksat_psat(3, 60, [3.6, 3.9, 4.2, 4.5, 4.8, 5.1], samples=40, seed=0)
for p in points:
    print(f"3-SAT m/n={p.ratio:.1f}  p={p.phat:.2f}  95% CI [{p.ci[0]:.2f}, {p.ci[1]:.2f}]")
print(f"crossing near {crossing(points):.2f}")

# the syllogistic fragment S over 6-16 nouns, alpha = m / n1
grid = map_region("S", Axis(0.25, 3.0, 0.25), samples=100, seed=0)
for cell in grid.cells:
    e = cell.estimate
    bar = "#" * round(40 * e.phat)
    print(f"S alpha={cell.alpha:4.2f}  p={e.phat:.2f} {bar}")
