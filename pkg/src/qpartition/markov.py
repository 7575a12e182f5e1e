"""Lazy Metropolis chains, their spectra, and classical chain sampling."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NotReversibleError
from .model import System, boltzmann


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix ``p[x, y]`` with its stationary distribution.

    ``system`` and ``beta`` are set for chains built from a physical system
    and left as ``None`` for chains given directly as matrices.
    """

    matrix: np.ndarray
    pi: np.ndarray
    beta: float | None = None
    system: System | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_array(cls, p, pi=None) -> "TransitionMatrix":
        p = np.array(p, dtype=float)
        check_stochastic(p)
        if pi is None:
            pi = stationary_distribution(p)
        pi = np.asarray(pi, dtype=float)
        p.setflags(write=False)
        return cls(p, pi / pi.sum())

    def lazy(self) -> "TransitionMatrix":
        p = 0.5 * (np.eye(self.size) + self.matrix)
        return TransitionMatrix(p, self.pi, self.beta, self.system)


def check_stochastic(p: np.ndarray, tol: float = 1e-12) -> None:
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("transition matrix must be square")
    if (p < -tol).any():
        raise ValueError("transition matrix has negative entries")
    if not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-10):
        raise ValueError("transition matrix rows must sum to 1")


def stationary_distribution(p: np.ndarray) -> np.ndarray:
    """Left eigenvector for eigenvalue 1, normalised to a distribution."""
    vals, vecs = np.linalg.eig(p.T)
    k = int(np.argmin(np.abs(vals - 1.0)))
    v = np.real(vecs[:, k])
    v = v / v.sum()
    return np.clip(v, 0.0, None) / np.clip(v, 0.0, None).sum()


def as_matrix(p) -> np.ndarray:
    return np.asarray(p.matrix if isinstance(p, TransitionMatrix) else p, dtype=float)


def metropolis_chain(system: System, beta: float) -> TransitionMatrix:
    """Lazy single-site-flip Metropolis chain targeting ``boltzmann(system, beta)``.

    A uniformly chosen neighbour is proposed and accepted with probability
    ``min(1, exp(-beta * dE))``; the result is then averaged with the identity.
    """
    pi = boltzmann(system, beta)
    d = system.size
    p = np.zeros((d, d))
    e = system.shifted
    for x in range(d):
        nbrs = system.neighbors(x)
        if not nbrs:
            continue
        for y in nbrs:
            p[x, y] += min(1.0, math.exp(-beta * (e[y] - e[x]))) / len(nbrs)
    p[np.diag_indices(d)] = 0.0
    p[np.diag_indices(d)] = 1.0 - p.sum(axis=1)
    p = 0.5 * (np.eye(d) + p)
    p.setflags(write=False)
    return TransitionMatrix(p, pi, float(beta), system)


@dataclass(frozen=True)
class ChainSpectrum:
    """Eigenvalues of a reversible chain in decreasing order, and its gap."""

    eigenvalues: np.ndarray
    flagged: bool = False

    @property
    def gap(self) -> float:
        if self.eigenvalues.size < 2:
            return 1.0
        return float(1.0 - self.eigenvalues[1])


def symmetrized(p: TransitionMatrix) -> np.ndarray:
    """``D_pi^{1/2} P D_pi^{-1/2}``, symmetric exactly when ``P`` is reversible."""
    s = np.sqrt(p.pi)
    return s[:, None] * p.matrix / s[None, :]


def chain_spectrum(p: TransitionMatrix, delta_min: float = 1e-6, tol: float = 1e-8) -> ChainSpectrum:
    """Real spectrum of a reversible chain through its symmetrization.

    Raises :class:`NotReversibleError` when the symmetrized matrix is not
    symmetric to ``tol``.  Chains with gap below ``delta_min`` are returned
    with ``flagged=True`` and a warning.
    """
    if not isinstance(p, TransitionMatrix):
        p = TransitionMatrix.from_array(p)
    a = symmetrized(p)
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol:
        raise NotReversibleError(f"symmetrized chain has asymmetry {asym:.3g}")
    vals = np.linalg.eigvalsh(0.5 * (a + a.T))[::-1]
    vals = np.clip(vals, -1.0, 1.0)
    vals.setflags(write=False)
    spec = ChainSpectrum(vals)
    if spec.gap < delta_min:
        warnings.warn(f"spectral gap {spec.gap:.3g} is below {delta_min:g}", stacklevel=2)
        spec = ChainSpectrum(vals, flagged=True)
    return spec


def detailed_balance_residual(p: TransitionMatrix) -> float:
    flow = p.pi[:, None] * p.matrix
    return float(np.max(np.abs(flow - flow.T)))


def mixing_steps(spectrum: ChainSpectrum | float, d: float, pi_min: float) -> int:
    """Relaxation-time bound ``ceil((1/gap) * ln(1 / (d * pi_min)))``."""
    gap = spectrum.gap if isinstance(spectrum, ChainSpectrum) else float(spectrum)
    if gap <= 0:
        raise ValueError("spectral gap must be positive")
    if not (d > 0 and 0 < pi_min <= 1):
        raise ValueError("need d > 0 and pi_min in (0, 1]")
    if d * pi_min >= 1:
        return 0
    x = math.log(1.0 / (d * pi_min)) / gap
    return max(0, math.ceil(x))


def sample_chain(p: TransitionMatrix, start: int, steps: int, rng: np.random.Generator) -> int:
    """State of a single chain after ``steps`` transitions."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    return int(sample_chains(p, np.array([start]), steps, rng)[0])


def sample_chains(
    p: TransitionMatrix, starts: np.ndarray, steps: int, rng: np.random.Generator
) -> np.ndarray:
    """Advance independent chains in lockstep; one uniform draw per chain per step."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    cdf = np.cumsum(as_matrix(p), axis=1)
    cdf[:, -1] = 1.0
    states = np.array(starts, dtype=np.intp, copy=True)
    for _ in range(steps):
        u = rng.random(states.size)
        states = (u[:, None] >= cdf[states]).sum(axis=1)
    return states


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def random_reversible_chain(d: int, rng: np.random.Generator, lazy: bool = True) -> TransitionMatrix:
    """Random irreducible reversible chain on ``d`` states.

    Built from a random stationary distribution and a dense symmetric flow
    matrix, so detailed balance holds by construction.
    """
    pi = rng.uniform(0.2, 1.0, size=d)
    pi /= pi.sum()
    flow = rng.uniform(0.05, 1.0, size=(d, d))
    flow = np.triu(flow, 1)
    flow = flow + flow.T
    # scale so that every row's off-diagonal mass stays below pi_x
    scale = float(np.min(pi / flow.sum(axis=1))) * rng.uniform(0.5, 1.0)
    flow *= scale
    p = flow / pi[:, None]
    p[np.diag_indices(d)] = 1.0 - p.sum(axis=1)
    chain = TransitionMatrix(p, pi)
    return chain.lazy() if lazy else chain


def dump_chain_csv(p: TransitionMatrix, spectrum: ChainSpectrum, path: str | Path) -> None:
    """Write ``P`` row-major then its eigenvalues, all with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        d = p.size
        w.writerow(["kind", "row"] + [f"c{j}" for j in range(d)])
        for x in range(d):
            w.writerow(["P", x] + [format(v, ".17g") for v in p.matrix[x]])
        w.writerow(["eigenvalues", ""] + [format(v, ".17g") for v in spectrum.eigenvalues])
        w.writerow(["gap", "", format(spectrum.gap, ".17g")])
