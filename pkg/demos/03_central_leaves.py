"""Central leaves, the conjugated skew product and the semiconjugacy to the doubling map."""

import numpy as np

from lamina import LeafSetup, SkewProduct, TrigFiberFamily, central_leaf_pair, make_base
from lamina import make_standard_perturbation, semiconjugacy_q
from lamina.base_dynamics import wrap
from lamina.lamination import compare_fiber_maps, conjugacy_residual, invariance_residual

base = make_base("solenoid")
F = SkewProduct(base, TrigFiberFamily())
G = make_standard_perturbation(F, 1e-3, seed=0)
setup = LeafSetup(G, n_x=5, n_m=64)

b = base.random_point(np.random.default_rng(3))
W, W_next = central_leaf_pair(b, setup, depth=20)
print(f"central leaf at b: fixed point in {W.iterations} iterations, sup displacement "
      f"{np.max(np.abs(W.displacement())):.2e}")
print(f"G(W_b) vs W_h(b): {invariance_residual(W, W_next, G):.2e}")
print(f"conjugacy residual: {conjugacy_residual(W, W_next, G):.2e}")

cmp = compare_fiber_maps(W, W_next, G)
print(f"fiber maps: C0 {cmp.c0:.2e}, C1 {cmp.c1:.2e}, ratio to rho {cmp.c1 / G.rho:.3f}")

# q collapses each global center-stable leaf to its angle; on W_b it is y(b).
q = semiconjugacy_q(G, W.tilde_beta[::16], W.m_grid[::16])
print("q on W_b minus y(b):", f"{np.max(np.abs(wrap(q - b.angle))):.1e}")
