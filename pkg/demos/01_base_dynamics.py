"""Hyperbolic bases: the solenoid attractor and a toral Anosov map.

Run with ``python3 demos/01_base_dynamics.py``.
"""

import numpy as np

from lamina import make_base

rng = np.random.default_rng(0)
sol = make_base("solenoid")
cat = make_base("anosov")

# A solenoid point is an angle plus the symbols it came from; the z-coordinate
# is read off the backward itinerary.
b = sol.random_point(rng)
print("solenoid point", np.round(b.coords, 6))
print("h(b)          ", np.round(sol.forward(b).coords, 6))
print("h^-1(h(b)) = b:", sol.point_distance(sol.backward(sol.forward(b)), b))

# Stable discs {y} x D shrink by exactly lambda; unstable curves double.
X2 = b.coords + np.array([0.0, 1e-3, 0.0])
print("stable ratios   ", sol.manifold_contraction_rates(b, X2, 4))

# Charts straighten both directions: the map becomes diag(lambda, lambda, 2).
v = np.array([1e-3, -2e-3, 5e-3])
w = sol.manifold_to_chart(sol.forward(b), sol.map_coords(sol.chart_to_manifold(b, v)))
print("chart image of", v, "->", np.round(w, 9))

# Local product structure on the torus: b* lies on the unstable line of b and
# the stable line of b2.
p = cat.random_point(rng)
p2 = cat.point(*(p.coords + [0.01, -0.004]))
star = cat.product_point(p, p2)
print("torus b* =", np.round(star.coords, 6), "product constant", round(cat.product_constant, 4))
