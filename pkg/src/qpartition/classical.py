"""Classical simulated-annealing estimator for the partition function.

Each ratio ``alpha_i = Z(beta_{i+1}) / Z(beta_i)`` is the mean of
``y_i(X) = exp(-(beta_{i+1} - beta_i) E'(X))`` over approximate samples
``X ~ pi_i``.  Samples come from independent restarts of the lazy Metropolis
chain, each run for enough steps to be within variation distance ``d`` of
``pi_i``.  With ``m = 64 l / eps^2`` samples per ratio and
``d = eps^2 / (512 l^2)`` the product lands within ``(1 +- eps) Z`` with
probability at least 3/4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .markov import (
    TransitionMatrix,
    chain_spectrum,
    metropolis_chain,
    mixing_steps,
    sample_chains,
)
from .model import Schedule, System, boltzmann


@dataclass(frozen=True)
class ClassicalConfig:
    epsilon: float
    length: int

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.length < 0:
            raise ValueError("schedule length must be nonnegative")

    @property
    def samples_exact(self) -> float:
        """``64 l / eps^2`` before rounding."""
        return 64.0 * self.length / self.epsilon**2

    @property
    def samples(self) -> int:
        return math.ceil(self.samples_exact - 1e-9)

    @property
    def distance(self) -> float:
        """Per-sample variation-distance budget ``eps^2 / (512 l^2)``."""
        if self.length == 0:
            return 1.0
        return self.epsilon**2 / (512.0 * self.length**2)


@dataclass
class Estimate:
    value: float
    ratios: list[float]
    samples: int
    distance: float
    burn_in: list[int]
    chain_steps: int
    seed: int | None = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "estimate": self.value,
            "per_ratio": list(self.ratios),
            "m": self.samples,
            "d": self.distance,
            "burn_in": list(self.burn_in),
            "total_steps": self.chain_steps,
            "seed": self.seed,
        }


def estimator_y(system: System, beta_i: float, beta_next: float, state) -> np.ndarray | float:
    """``exp(-(beta_next - beta_i) * E'(state))``; vectorised over states."""
    if beta_next < beta_i:
        raise ValueError("beta_next must not be below beta_i")
    y = np.exp(-(beta_next - beta_i) * system.shifted[state])
    return float(y) if np.ndim(y) == 0 else y


def exact_moments(system: System, beta_i: float, beta_next: float) -> tuple[float, float]:
    """Mean and variance of ``y_i`` under the exact ``pi_i``."""
    pi = boltzmann(system, beta_i)
    y = estimator_y(system, beta_i, beta_next, np.arange(system.size))
    mean = float(np.dot(pi, y))
    return mean, float(np.dot(pi, y**2)) - mean**2


def estimate_ratio_classical(
    chain: TransitionMatrix,
    beta_next: float,
    m: int,
    burn: int,
    rng: np.random.Generator,
) -> float:
    """Mean of ``m`` estimator values at states reached after ``burn`` steps.

    Every sample starts from its own uniformly random state.
    """
    if m < 1:
        raise ValueError("need at least one sample")
    if chain.system is None or chain.beta is None:
        raise ValueError("chain must come from metropolis_chain")
    starts = rng.integers(0, chain.size, size=m)
    states = sample_chains(chain, starts, burn, rng)
    return float(np.mean(estimator_y(chain.system, chain.beta, beta_next, states)))


def burn_in_plan(system: System, schedule: Schedule, epsilon: float) -> tuple[ClassicalConfig, list[TransitionMatrix], list[int]]:
    """Chains and per-level burn-in lengths for a run at accuracy ``epsilon``."""
    cfg = ClassicalConfig(epsilon, schedule.length)
    chains, burns = [], []
    for beta_i, _ in schedule.steps():
        chain = metropolis_chain(system, beta_i)
        spec = chain_spectrum(chain)
        pi_min = float(chain.pi.min())
        burns.append(mixing_steps(spec, cfg.distance, min(pi_min, 0.5)))
        chains.append(chain)
    return cfg, chains, burns


def classical_cost(system: System, schedule: Schedule, epsilon: float) -> int:
    """Total chain steps ``sum_i m * burn_i`` a run would consume."""
    cfg, _, burns = burn_in_plan(system, schedule, epsilon)
    return cfg.samples * sum(burns)


def classical_fpras(
    system: System,
    schedule: Schedule,
    epsilon: float,
    rng: np.random.Generator,
    seed: int | None = None,
) -> Estimate:
    """Telescoping-product estimate of the (physical) partition function at ``schedule.beta_final``."""
    schedule.validate(system)
    cfg, chains, burns = burn_in_plan(system, schedule, epsilon)
    ratios = []
    for chain, (_, beta_next), burn in zip(chains, schedule.steps(), burns):
        ratios.append(estimate_ratio_classical(chain, beta_next, cfg.samples, burn, rng))
    value = system.size * math.prod(ratios) * math.exp(-schedule.beta_final * system.energy_offset)
    return Estimate(
        value=value,
        ratios=ratios,
        samples=cfg.samples,
        distance=cfg.distance,
        burn_in=burns,
        chain_steps=cfg.samples * sum(burns),
        seed=seed,
    )
