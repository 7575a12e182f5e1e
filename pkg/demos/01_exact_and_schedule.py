"""Exact partition functions and the cooling schedule for a small Ising chain.

Run with ``python demos/01_exact_and_schedule.py``.
"""

import numpy as np

from qpartition import build_schedule, exact_partition, ising, physical_partition
from qpartition.classical import exact_moments

# three spins on a line with a weak field on the first site
system = ising(3, [(0, 1, 1.0), (1, 2, 1.0)], [(0, 0.3)])
beta_final = 1.5

print(f"{system.n_spins} spins, {system.size} configurations, ground energy {system.offset:+.3f}")
print(f"Z({beta_final}) = {physical_partition(system, beta_final):.12g}")

# each step keeps the Boltzmann weight ratio at or above one half
schedule = build_schedule(system, beta_final)
print(f"\nschedule of length {schedule.length}:")
for b0, b1 in schedule.steps():
    mean, var = exact_moments(system, b0, b1)
    print(f"  {b0:.4f} -> {b1:.4f}   ratio {mean:.4f}   relative variance {var / mean**2:.4f}")

# the telescoping product recovers the shifted partition function exactly
alphas = schedule.validate(system)
product = exact_partition(system, 0.0) * np.prod(alphas)
print(f"\nZ(0) * prod(ratios) = {product:.12g}")
print(f"shifted Z(beta)     = {exact_partition(system, beta_final):.12g}")
