"""Ratio estimation by phase estimation, median boosting, and the full pipelines.

For a level ``i`` the rotation ``V_i`` writes ``sqrt(y_i(s))`` into an extra
qubit, so that ``<psi_i| (I (x) |0><0|) |psi_i> = alpha_i`` for
``psi_i = V_i (|pi_i> (x) |0>)``.  Phase estimation of
``G = (2|psi_i><psi_i| - I)(2P - I)`` returns an angle ``theta'`` close to
``+-theta`` where ``cos theta = 2 alpha_i - 1``; the estimate is
``(1 + cos theta') / 2``.  Medians over ``ceil(8 ln(1/delta))`` independent
runs push each level's failure probability below ``delta = 1/(4l)`` and the
product of the per-level estimates gives ``Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import CapExceededError
from .markov import metropolis_chain
from .model import Schedule, System, exact_partition, physical_partition
from .qcore import (
    DEFAULT_CAP,
    Operator,
    PhaseEstimationResult,
    ancilla_count,
    measure_estimation,
    phase_estimation,
)
from .qprep import (
    ApproxReflection,
    PI3,
    choose_ancillas,
    exact_sample,
    fixed_point_depth_phases,
    fixed_point_prepare,
)
from .szegedy import build_walk


@dataclass(frozen=True)
class ObservableRotation:
    """``V = sum_s |s><s| (x) [[sqrt y, sqrt(1-y)], [-sqrt(1-y), sqrt y]]``."""

    y: np.ndarray
    alpha: float

    @property
    def size(self) -> int:
        return self.y.size

    def blocks(self) -> np.ndarray:
        """Per-state 2x2 blocks, shape ``(D, 2, 2)``."""
        c = np.sqrt(self.y)
        s = np.sqrt(np.clip(1.0 - self.y, 0.0, None))
        return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)

    def matrix(self) -> np.ndarray:
        """Dense ``2D x 2D`` matrix, index ``2 s + qubit``."""
        d = self.size
        m = np.zeros((2 * d, 2 * d))
        blk = self.blocks()
        for s in range(d):
            m[2 * s:2 * s + 2, 2 * s:2 * s + 2] = blk[s]
        return m


def build_rotation(system: System, beta_i: float, beta_next: float) -> ObservableRotation:
    if beta_next < beta_i:
        raise ValueError("beta_next must not be below beta_i")
    y = np.exp(-(beta_next - beta_i) * system.shifted)
    alpha = exact_partition(system, beta_next) / exact_partition(system, beta_i)
    return ObservableRotation(y, alpha)


def prepare_psi(sample: np.ndarray, rot: ObservableRotation) -> np.ndarray:
    """``V (|pi> (x) |0>)`` for a sample on a plain system register."""
    d = rot.size
    v = np.zeros((d, 2), dtype=complex)
    v[:, 0] = sample
    return np.einsum("sij,sj->si", rot.blocks(), v).ravel()


def project_zero(dim: int) -> np.ndarray:
    """``P = I (x) |0><0|`` on ``system (x) qubit``."""
    diag = np.zeros(dim)
    diag[0::2] = 1.0
    return np.diag(diag)


def grover_rotation(psi) -> Operator:
    """``G = (2|psi><psi| - I)(2P - I)`` for a state with the estimator qubit last."""
    v = np.asarray(psi, dtype=complex).ravel()
    n = v.size
    refl = 2.0 * np.outer(v, v.conj()) - np.eye(n)
    return Operator(n, matrix=refl @ (2.0 * project_zero(n) - np.eye(n)))


def grover_plane(psi: np.ndarray, alpha: float) -> np.ndarray:
    """Orthonormal columns ``(gamma_1, gamma_2)`` of the plane holding ``psi``."""
    p = project_zero(psi.size)
    g1 = (psi - p @ psi) / math.sqrt(1 - alpha)
    g2 = (p @ psi) / math.sqrt(alpha)
    return np.stack([g1, g2], axis=1)


class WalkGrover:
    """``G~ = V C V^dag (2P - I)`` on ``x (x) y (x) anc (x) est``.

    ``C`` applies the walk-based reflection when the estimator qubit is 0 and
    ``-I`` when it is 1, so that ``V C V^dag`` approximates
    ``2|psi><psi| - I``.  Only ``x`` and ``est`` are touched by ``V``.
    Ancilla qubits past the reflection's ``b`` are spectators.
    """

    def __init__(self, rot: ObservableRotation, refl: ApproxReflection, register: int):
        if register < refl.b:
            raise ValueError("register smaller than the reflection's ancilla count")
        self.rot = rot
        self.refl = refl
        self.d = rot.size
        self.register = register
        self.shape = (self.d, self.d, 2**register, 2)
        self._blk = rot.blocks()

    @property
    def dim(self) -> int:
        return math.prod(self.shape)

    def _v(self, t: np.ndarray, adjoint: bool = False) -> np.ndarray:
        blk = np.swapaxes(self._blk, 1, 2).conj() if adjoint else self._blk
        b = blk[:, None, None, :, :]
        out = np.empty(t.shape, dtype=complex)
        out[..., 0] = b[..., 0, 0] * t[..., 0] + b[..., 0, 1] * t[..., 1]
        out[..., 1] = b[..., 1, 0] * t[..., 0] + b[..., 1, 1] * t[..., 1]
        return out

    def apply(self, vec: np.ndarray) -> np.ndarray:
        if vec.ndim == 2:
            return np.stack([self.apply(col) for col in vec.T], axis=1)
        t = vec.reshape(self.shape).astype(complex)
        t[..., 1] *= -1.0
        t = self._v(t, adjoint=True)
        t[..., 0] = self.refl.apply(t[..., 0])
        t[..., 1] *= -1.0
        return self._v(t).reshape(vec.shape)

    def operator(self) -> Operator:
        return Operator(self.dim, apply=self.apply)

    def psi(self, sample: np.ndarray) -> np.ndarray:
        t = np.zeros(self.shape, dtype=complex)
        t[..., 0] = sample.reshape(self.shape[:-1])
        return self._v(t).ravel()

    def spectral_measure(self, vec: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
        """Eigenphases and weights of ``vec`` under ``G~``, without powering it.

        ``G~ = (2Q - I)(2P - I)`` with ``Q`` the rank-``D^2`` projector onto
        ``V(|e_w>|q_w>|0>)``.  The span ``S`` of ``range Q`` and ``P range Q``
        is invariant; on ``S`` the walk is a small unitary, and on its
        complement it is ``-1`` where ``est = 0`` and ``+1`` where ``est = 1``.
        """
        core = self if self.register == self.refl.b else WalkGrover(self.rot, self.refl, self.refl.b)
        d, n = self.d, 2**self.refl.b
        dw = d * d
        spare = 2 ** (self.register - self.refl.b)
        marked = self.refl.target_vectors().reshape(d, d, n, dw)
        t = np.zeros((d, d, n, dw, 2), dtype=complex)
        t[..., 0] = marked
        t = np.moveaxis(t, 3, 0)  # (dw, d, d, n, 2)
        q = np.stack([core._v(c) for c in t]).reshape(dw, -1)
        pq = q.reshape(dw, -1, 2).copy()
        pq[..., 1] = 0.0
        u, s, _ = np.linalg.svd(np.vstack([q, pq.reshape(dw, -1)]).T, full_matrices=False)
        basis = u[:, s > tol * s[0]]
        h = basis.conj().T @ np.stack([core.apply(c) for c in basis.T], axis=1)
        tf, z = scipy.linalg.schur(h, output="complex")
        # spectator-major layout of the input
        parts = np.moveaxis(np.asarray(vec).reshape(d, d, n, spare, 2), 3, 0).reshape(spare, -1)
        coef = parts @ basis.conj()
        w_s = (np.abs(coef @ z.conj()) ** 2).sum(axis=0)
        rest = (parts - coef @ basis.T).reshape(spare, -1, 2)
        w_minus = float((np.abs(rest[..., 0]) ** 2).sum())
        w_plus = float((np.abs(rest[..., 1]) ** 2).sum())
        phases = np.concatenate([np.angle(np.diag(tf)), [math.pi, 0.0]])
        return phases, np.concatenate([w_s, [w_minus, w_plus]])


def alpha_from_phase(phase) -> np.ndarray | float:
    """``(1 + cos theta') / 2``; ``theta'`` and ``2 pi - theta'`` agree."""
    out = 0.5 * (1.0 + np.cos(phase))
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class RatioEstimate:
    result: PhaseEstimationResult
    alpha: float
    eps_pe: float
    controlled_calls: int

    @property
    def t(self) -> int:
        return self.result.t

    @property
    def estimates(self) -> np.ndarray:
        return alpha_from_phase(self.result.phases)

    def within_band_mass(self) -> float:
        est = self.estimates
        lo = (1 - self.eps_pe) * self.alpha - 1e-12
        hi = (1 + self.eps_pe) * self.alpha + 1e-12
        return float(self.result.probabilities[(est >= lo) & (est <= hi)].sum())

    def draw(self, rng: np.random.Generator, size: int | None = None):
        k = rng.choice(self.result.probabilities.size, size=size, p=self.result.probabilities)
        return alpha_from_phase(self.result.phases[k])


def estimate_ratio_quantum(
    sample,
    rot: ObservableRotation,
    eps_pe: float,
    mode: str = "perfect",
    refl: ApproxReflection | None = None,
    p_f: float = 1 / 8,
    cap: int = DEFAULT_CAP,
) -> RatioEstimate:
    """Phase estimation of the Grover rotation on ``V(|pi> (x) |0>)``.

    ``sample`` is a plain-register amplitude vector in perfect mode and a
    walk-register vector (``x, y, anc``) in walk mode, where ``refl`` supplies
    the approximate reflection.  ``controlled_calls`` counts controlled
    reflections (perfect) or controlled walk steps (walk) per run.
    """
    t = ancilla_count(eps_pe, p_f)
    amps = sample.amplitudes if hasattr(sample, "amplitudes") else np.asarray(sample, dtype=complex)
    if mode == "perfect":
        psi = prepare_psi(amps, rot)
        g = grover_rotation(psi)
        res = phase_estimation(g, psi, t, cap=cap)
        calls = 2**t - 1
    elif mode == "walk":
        if refl is None:
            raise ValueError("walk mode needs an approximate reflection")
        register = int(round(math.log2(amps.size // rot.size**2)))
        g = WalkGrover(rot, refl, register)
        if g.dim > cap:
            raise CapExceededError(f"{g.dim} amplitudes exceed the cap {cap}")
        psi = g.psi(amps)
        res = measure_estimation(*g.spectral_measure(psi), t)
        calls = (2**t - 1) * refl.queries
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return RatioEstimate(res, rot.alpha, eps_pe, calls)


def median_runs(delta_boost: float) -> int:
    """``ceil(8 ln(1/delta))``: Hoeffding with per-run failure at most 1/4."""
    if not 0 < delta_boost < 1:
        raise ValueError("delta_boost must lie in (0, 1)")
    return math.ceil(8 * math.log(1 / delta_boost) - 1e-12)


def power_median(run: Callable[[], float], delta_boost: float) -> float:
    """Median of ``median_runs(delta_boost)`` independent calls of ``run``."""
    return float(np.median([run() for _ in range(median_runs(delta_boost))]))


def compose_product(estimates, z0: float, shift: float = 1.0) -> float:
    """``z0 * prod(estimates) * shift``."""
    return float(z0 * math.prod(estimates) * shift)


@dataclass(frozen=True)
class PipelineConfig:
    eps: float
    length: int
    mode: str = "perfect"
    p_f: float = 1 / 8
    eps_S: float = 1 / 32
    depth: int = 2

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.mode not in ("perfect", "walk"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def ell(self) -> int:
        return max(self.length, 1)

    @property
    def eps_pe(self) -> float:
        return self.eps / (2 * self.ell)

    @property
    def delta_boost(self) -> float:
        return 1 / (4 * self.ell)

    @property
    def eps_R(self) -> float:
        """Reflection budget inside estimation: ``eps_pe / 32``."""
        return self.eps_pe / 32

    @property
    def eps_R_prep(self) -> float:
        return self.eps_S / (8 * self.ell * 3**self.depth)

    @property
    def t(self) -> int:
        return ancilla_count(self.eps_pe, self.p_f)

    @property
    def k(self) -> int:
        return median_runs(self.delta_boost)

    def to_dict(self) -> dict:
        return {
            "eps": self.eps, "ell": self.length, "mode": self.mode, "eps_pe": self.eps_pe,
            "delta_boost": self.delta_boost, "p_f": self.p_f, "t": self.t, "k": self.k,
            "eps_S": self.eps_S, "eps_R": self.eps_R, "depth": self.depth,
        }


@dataclass
class QueryLedger:
    controlled_walk: int = 0
    controlled_reflections: int = 0
    samples: int = 0
    chain_steps: int = 0
    per_level: list[dict] = field(default_factory=list)

    def charge(self, level: int, **counts: int) -> None:
        while len(self.per_level) <= level:
            self.per_level.append({"controlled_walk": 0, "controlled_reflections": 0, "samples": 0})
        for key, n in counts.items():
            if n < 0:
                raise ValueError("ledger counts only grow")
            setattr(self, key, getattr(self, key) + n)
            self.per_level[level][key] += n

    def to_dict(self) -> dict:
        return {
            "controlled_walk": self.controlled_walk,
            "controlled_reflections": self.controlled_reflections,
            "samples": self.samples,
            "chain_steps": self.chain_steps,
            "per_level": [dict(x) for x in self.per_level],
        }


@dataclass
class LevelPlan:
    """Everything a level needs for repeated runs: the exact outcome distribution and costs."""

    ratio: RatioEstimate
    k: int
    prep_queries: int = 0
    prep_deviation: float = 0.0
    b: int = 0

    @property
    def run_walk_queries(self) -> int:
        return self.prep_queries + self.ratio.controlled_calls


def plan_levels(system: System, schedule: Schedule, cfg: PipelineConfig, cap: int = DEFAULT_CAP) -> list[LevelPlan]:
    """Exact per-level outcome distributions for a pipeline configuration."""
    steps = schedule.steps()
    plans = []
    if cfg.mode == "perfect":
        for beta_i, beta_next in steps:
            rot = build_rotation(system, beta_i, beta_next)
            ratio = estimate_ratio_quantum(exact_sample(system, beta_i), rot, cfg.eps_pe, "perfect", p_f=cfg.p_f, cap=cap)
            plans.append(LevelPlan(ratio, cfg.k))
        return plans

    walks = [build_walk(metropolis_chain(system, b)) for b in schedule.betas]
    b_prep = max(choose_ancillas(w, cfg.eps_R_prep, PI3, 1.0) for w in walks[:-1]) if steps else 1
    b_est = [choose_ancillas(w, cfg.eps_R) for w in walks[:-1]]
    register = max([b_prep] + b_est)
    prep = fixed_point_prepare(schedule, system, "walk", cfg.eps_S, cfg.depth, b=b_prep, register=register, cap=cap)
    for i, (beta_i, beta_next) in enumerate(steps):
        rot = build_rotation(system, beta_i, beta_next)
        refl = ApproxReflection(walks[i], b_est[i])
        ratio = estimate_ratio_quantum(prep.samples[i], rot, cfg.eps_pe, "walk", refl=refl, p_f=cfg.p_f, cap=cap)
        plans.append(
            LevelPlan(ratio, cfg.k, prep.samples[i].walk_queries, prep.samples[i].deviation or 0.0, b_est[i])
        )
    return plans


@dataclass
class QuantumRun:
    estimate: float
    ledger: QueryLedger
    level_estimates: list[float]


def run_trial(plans: list[LevelPlan], system: System, schedule: Schedule, rng: np.random.Generator, mode: str) -> QuantumRun:
    """One end-to-end estimate, drawing each median run from the exact distributions.

    Every median run is charged a fresh sample preparation.
    """
    ledger = QueryLedger()
    ests = []
    for i, plan in enumerate(plans):
        draws = plan.ratio.draw(rng, size=plan.k)
        ests.append(float(np.median(draws)))
        if mode == "perfect":
            ledger.charge(i, controlled_reflections=plan.k * plan.ratio.controlled_calls, samples=plan.k)
        else:
            ledger.charge(i, controlled_walk=plan.k * plan.run_walk_queries, samples=plan.k)
    shift = math.exp(-schedule.beta_final * system.energy_offset)
    return QuantumRun(compose_product(ests, system.size, shift), ledger, ests)


def quantum_cost(schedule: Schedule, eps: float) -> int:
    """Controlled reflections a perfect-mode run uses: ``l * k * (2^t - 1)``."""
    cfg = PipelineConfig(eps, schedule.length)
    return schedule.length * cfg.k * (2**cfg.t - 1)


def quantum_fpras(
    system: System,
    schedule: Schedule,
    eps: float,
    mode: str,
    rng: np.random.Generator,
    cap: int = DEFAULT_CAP,
    **config,
) -> tuple[QuantumRun, list[LevelPlan], PipelineConfig]:
    """Full quantum estimate of the physical partition function at ``schedule.beta_final``."""
    schedule.validate(system)
    cfg = PipelineConfig(eps, schedule.length, mode, **config)
    plans = plan_levels(system, schedule, cfg, cap=cap)
    return run_trial(plans, system, schedule, rng, mode), plans, cfg


def run_report(
    system: System,
    schedule: Schedule,
    run: QuantumRun,
    plans: list[LevelPlan],
    cfg: PipelineConfig,
    seed: int | None,
) -> dict:
    exact_z = physical_partition(system, schedule.beta_final)
    levels = []
    for plan, est in zip(plans, run.level_estimates):
        row = {
            "alpha_exact": plan.ratio.alpha,
            "estimate": est,
            "within_band_mass": plan.ratio.within_band_mass(),
            "t": plan.ratio.t,
            "k": plan.k,
        }
        if cfg.mode == "walk":
            row["b"] = plan.b
            row["prep_deviation"] = plan.prep_deviation
        levels.append(row)
    return {
        "mode": cfg.mode,
        "estimate": run.estimate,
        "exact_Z": exact_z,
        "relative_error": abs(run.estimate - exact_z) / exact_z,
        "per_level": levels,
        "ledger": run.ledger.to_dict(),
        "seed": seed,
        "config": cfg.to_dict(),
    }


def separation_slopes(eps_values, classical_steps, quantum_counts) -> tuple[float, float]:
    """Least-squares log-log slopes of both costs against ``eps``."""
    x = np.log(np.asarray(eps_values, dtype=float))
    sc = np.polyfit(x, np.log(np.asarray(classical_steps, dtype=float)), 1)[0]
    sq = np.polyfit(x, np.log(np.asarray(quantum_counts, dtype=float)), 1)[0]
    return float(sc), float(sq)

