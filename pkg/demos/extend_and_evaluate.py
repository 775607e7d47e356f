"""Extend a cyclically monotone pair set to a maximal map and evaluate it.

The extension is the subdifferential of a max-affine convex potential; at
the data sites it contains the prescribed values, between them it
interpolates monotonically, and at kinks it is genuinely multivalued.
"""

import numpy as np

from motlib import (
    PairSet, eval_subdifferential, is_cyclically_monotone,
    rockafellar_potential,
)

# graph samples of the map x -> 2x on a few points
xs = np.array([[0.0], [0.5], [1.0], [2.0]])
pairs = PairSet(xs, 2.0 * xs)
print(f"input pairs cyclically monotone: {is_cyclically_monotone(pairs).holds}")

psi = rockafellar_potential(pairs, base_index=0)
print("max-affine potential pieces (slope, intercept):")
for slope, c in zip(psi.slopes, psi.intercepts):
    print(f"  {slope[0]:+.3f} x - {c:+.3f}")

for x in [0.25, 0.5, 1.5, 3.0]:
    verts = np.asarray(eval_subdifferential(psi, [x]))
    vals = ", ".join(f"{v[0]:+.3f}" for v in verts)
    print(f"subdifferential at x={x:4.2f}: {{{vals}}}  (psi = {psi.value(np.array([x])):+.4f})")

# containment: every prescribed value appears in the extension
for xi, yi in zip(pairs.x, pairs.y):
    verts = np.asarray(eval_subdifferential(psi, xi))
    gap = np.abs(verts - yi).min()
    print(f"y = {yi[0]:+.2f} recovered at x = {xi[0]:+.2f} within {gap:.2e}")
