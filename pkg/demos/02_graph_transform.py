"""Graph transform: pulling leaves back along an orbit and watching them contract."""

import numpy as np

from lamina import LeafSetup, SkewProduct, TrigFiberFamily, check_dominated_splitting, make_base
from lamina import contraction_sweep, make_standard_perturbation, solve_invariant_leaf

base = make_base("solenoid")
F = SkewProduct(base, TrigFiberFamily())
rep = check_dominated_splitting(F)
print(f"splitting: L = {rep.L:.4f} < {rep.threshold} -> {rep.passed}")

G = make_standard_perturbation(F, 1e-3, seed=0)
print(f"perturbation: measured C1 distance rho = {G.rho:.3e}")

setup = LeafSetup(G, n_x=5, n_m=64)
print(f"chart radius delta = {setup.delta:.4f}, Lipschitz budget D delta / 2 = {setup.lip_budget:.4f}")

rng = np.random.default_rng(1)
pts = [base.random_point(rng) for _ in range(4)]
ratios = contraction_sweep(setup, pts, pairs_per_point=3)
print("pair contraction ratios (mu = 0.5):\n", np.round(ratios, 4))

b = pts[0]
prev = None
for depth in (2, 4, 8, 16):
    leaf = solve_invariant_leaf("s", b, setup, depth)
    inc = "" if prev is None else f", change {leaf.distance(prev):.2e}"
    print(f"depth {depth:2d}: sup |beta^s| = {leaf.sup_norm():.3e}, error bound {leaf.error_bound:.1e}{inc}")
    prev = leaf
