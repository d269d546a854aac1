"""Hölder exponents, box-counting dimension and the Falconer-type image bound."""

import math

import numpy as np

from lamina import AtypicalCover, PatternAvoidingSet, alpha_theoretical, box_dimension, falconer_check
from lamina import fit_power_law, make_base
from lamina.config import ExperimentConfig
from lamina.experiments import base_points, build_model, holder_pairs, solenoid_phi, solenoid_phi_alpha

print("alpha for (0.04, 0.05, 0.4, 0.5):", round(alpha_theoretical(lambda_minus=0.04, lambda_=0.05,
                                                                   mu_minus=0.4, mu=0.5), 4))
print("alpha for the solenoid:", alpha_theoretical(make_base("solenoid").constants))

cfg = ExperimentConfig.from_dict({"grid": {"n_x": 3, "n_m": 32, "central_n_m": 128}, "depth": 14, "n_points": 3})
model = build_model(cfg)
triples = holder_pairs(model, cfg, base_points(model, 3, 0))
fit = fit_power_law([t[1] for t in triples], [t[2] for t in triples])
print(f"central leaves: fitted exponent {fit.slope:.3f} (r^2 {fit.r_squared:.3f}) over {len(triples)} pairs")

cantor = box_dimension(PatternAvoidingSet("11"), range(8, 25))
print(f"'11'-free set: {cantor.slope:.4f} vs log2(golden) {math.log2((1 + 5 ** 0.5) / 2):.4f}")
cover = box_dimension(AtypicalCover("1", 0.1), range(8, 25))
print(f"atypical cover for w=1, kappa=0.1: {cover.slope:.4f}")

phi, z, vals = solenoid_phi(model)
alpha = min(1.0, solenoid_phi_alpha(z, vals))
v = falconer_check(AtypicalCover("1", 0.1), phi, alpha, range(8, 25), refine=1 / alpha, max_source_depth=24)
print(f"z -> beta^s_z(x): alpha {alpha:.3f}, dim A {v.dim_A:.4f}, dim image {v.dim_image:.4f}, "
      f"bound {v.bound:.4f}, image null: {v.measure_zero}")
print("image box counts:", np.array(v.estimate_image.counts)[[0, 4, 8, 12, 16]])
