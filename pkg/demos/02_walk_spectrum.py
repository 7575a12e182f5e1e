"""The quantum walk of a Metropolis chain and the approximate reflection built from it.

Run with ``python demos/02_walk_spectrum.py``.
"""

import math

from qpartition import ising
from qpartition.markov import chain_spectrum, metropolis_chain
from qpartition.qprep import approx_reflection, worst_reflection_error
from qpartition.szegedy import build_walk, walk_spectrum

system = ising(2, [(0, 1, 1.0)], [(0, 0.5), (1, 0.5)])
chain = metropolis_chain(system, 1.0)
spec = chain_spectrum(chain)
walk = build_walk(chain)
ws = walk_spectrum(walk)

print(f"chain spectral gap      {spec.gap:.6f}")
print(f"walk phase gap          {ws.phase_gap:.6f}")
print(f"2 sqrt(gap)             {2 * math.sqrt(spec.gap):.6f}   (phase gap is never smaller)")

print("\nchain eigenvalue   2 arccos(mu)   measured walk phase (occurs as a +/- pair)")
for mu, predicted, measured in ws.pairing():
    print(f"  {mu:+.6f}        {predicted:.6f}       {measured:.6f}")

# more phase-estimation ancillas make the reflection about the stationary lift sharper
print("\nancillas  controlled walks  worst error")
for b in range(2, 11, 2):
    refl = approx_reflection(walk, b)
    print(f"  {b:>6}  {refl.queries:>15}  {worst_reflection_error(refl):.3e}")
