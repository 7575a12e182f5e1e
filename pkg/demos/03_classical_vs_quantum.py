"""End-to-end estimates from the classical and quantum pipelines, and how their costs scale.

Run with ``python demos/03_classical_vs_quantum.py``. The walk-mode run takes a few seconds.
"""

import numpy as np

from qpartition import build_schedule, ising, physical_partition
from qpartition.classical import classical_cost, classical_fpras
from qpartition.qestimate import quantum_cost, quantum_fpras, separation_slopes

system = ising(2, [(0, 1, 1.0)], [(0, 0.5), (1, 0.5)])
beta, eps = 1.0, 0.25
schedule = build_schedule(system, beta)
z = physical_partition(system, beta)
print(f"exact Z = {z:.10f}, schedule length {schedule.length}, eps = {eps}\n")

rng = np.random.default_rng(2024)
est = classical_fpras(system, schedule, eps, rng)
print(f"classical      {est.value:.10f}   chain steps {est.chain_steps}")

for mode in ("perfect", "walk"):
    run, plans, cfg = quantum_fpras(system, schedule, eps, mode, rng)
    print(f"quantum {mode:<7} {run.estimate:.10f}   controlled walks {run.ledger.controlled_walk}")

# halving eps quadruples the classical work but only doubles the quantum work
eps_list = [0.4, 0.2, 0.1]
classical = [classical_cost(system, schedule, e) for e in eps_list]
quantum = [quantum_cost(schedule, e) for e in eps_list]
print("\n  eps   chain steps   walk queries")
for e, c, q in zip(eps_list, classical, quantum):
    print(f"  {e:<4}  {c:>11}  {q:>13}")
sc, sq = separation_slopes(eps_list, classical, quantum)
print(f"\nlog-log slopes: classical {sc:.2f}, quantum {sq:.2f}")
