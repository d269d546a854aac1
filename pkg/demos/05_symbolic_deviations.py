"""Counting words whose pattern frequency deviates, and what that says about dimension."""

import numpy as np

from lamina import count_atypical, cover_volume, frequency, nu_estimate, weak_ergodic_profile

print("a_6 of 010101 for w=01:", frequency("010101", "01", 6))
t = count_atypical("1", 0.1, 4)
print("w=1, kappa=0.1, N=4:", t.atypical_count, "atypical words, nu =", round(t.nu, 4))

curve = nu_estimate("1", 0.1, range(16, 65))
print(f"nu over N=16..64: min {curve.nu_min:.4f}, bound holds {curve.bound_holds()}")

counts = dict(zip(curve.Ns, curve.counts))
for N0 in (16, 24, 32):
    print(f"V_(1-0.01) of the cover from depth {N0}: {cover_volume(counts, 0.01, N0).total:.3e}")


def phi(y):
    return np.cos(2 * np.pi * y)


fixed = weak_ergodic_profile(phi, 0.0, 100, delta=0.5)
print("y = 0 stays at phi = 1, flagged at every n:", bool(fixed.flags.all()))
bits = np.random.default_rng(0).integers(0, 2, (1000, 460))
prof = weak_ergodic_profile(phi, bits, 400)
print(f"fraction of random y with |phi_400| <= 0.25: {np.mean(np.abs(prof.averages[:, -1]) <= 0.25):.3f}")
