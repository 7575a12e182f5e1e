"""Quantum samples: exact encodings, walk-based reflections, fixed-point preparation.

In walk mode every state lives on ``x (D) (x) y (D) (x) anc (2^b)``.  A sample
of ``pi`` is the stationary lift ``sum_x sqrt(pi_x) |x>|0>|0...0>``.
Reflections and selective phases about that lift are approximated by phase
estimation of the walk into the ``b`` ancillas, a phase conditioned on the
estimate, and uncomputation.  All such operations share one ancilla register;
error left behind by one stays there for the next.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import CapExceededError, ScheduleError
from .markov import metropolis_chain
from .model import Schedule, System, boltzmann
from .qcore import DEFAULT_CAP, Operator, StateVector, as_array, selective_phase_matrix, walsh_hadamard
from .szegedy import WalkOperator, build_walk

PI3 = np.exp(1j * np.pi / 3)


@dataclass(frozen=True)
class QuantumSample:
    state: StateVector
    mode: str
    eps_S: float | None = None
    walk_queries: int = 0
    selective_phases: int = 0
    deviation: float | None = None

    @property
    def amplitudes(self) -> np.ndarray:
        return self.state.amplitudes


def exact_sample(system: System, beta: float) -> QuantumSample:
    """``sum_s sqrt(pi(s)) |s>`` on a single register."""
    amp = np.sqrt(boltzmann(system, beta)).astype(complex)
    return QuantumSample(StateVector.single(amp, "sys"), "exact")


def lift_sample(system: System, beta: float, b: int = 0) -> QuantumSample:
    """Stationary lift ``sum_x sqrt(pi_x)|x>|0>`` with ``b`` clean ancillas."""
    return QuantumSample(StateVector(lifted(boltzmann(system, beta), b), _walk_registers(system.size, b)), "walk")


def lifted(pi: np.ndarray, b: int = 0) -> np.ndarray:
    d = pi.size
    t = np.zeros((d, d, 2**b), dtype=complex)
    t[:, 0, 0] = np.sqrt(pi)
    return t.ravel()


def _walk_registers(d: int, b: int) -> tuple[tuple[str, int], ...]:
    return (("x", d), ("y", d), ("anc", 2**b))


def overlap_sq(a, b) -> float:
    """``|<a|b>|^2``."""
    va = a.amplitudes if isinstance(a, QuantumSample) else as_array(a)
    vb = b.amplitudes if isinstance(b, QuantumSample) else as_array(b)
    if va.shape != vb.shape:
        raise ValueError("samples live on different registers")
    return float(abs(np.vdot(va, vb)) ** 2)


def aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_phi || e^{i phi} a - b ||`` for unit vectors."""
    return math.sqrt(max(0.0, 2.0 - 2.0 * abs(np.vdot(a, b))))


class ApproxReflection:
    """Phase-estimation-based phase about the walk's zero-phase eigenspace.

    On ``x (x) y (x) anc`` the circuit estimates the walk phase into ``b``
    ancillas, multiplies by ``zero_phase`` when the estimate is 0 and by
    ``other_phase`` otherwise, then uncomputes.  With the defaults
    ``(+1, -1)`` this approximates ``2|lift><lift| - I`` on ``A + B``;
    ``(omega, 1)`` gives the selective phase ``omega |lift><lift| + (I - |lift><lift|)``.

    The circuit is evaluated in the walk's eigenbasis, where the controlled
    powers are diagonal: for an eigenvector with phase ``phi`` the ancilla
    block is ``c I + (a - c)|q(phi)><q(phi)|`` with
    ``|q(phi)> = H^{(x)b} D(phi)^dag F |0>``.  :meth:`circuit_matrix` builds
    the same unitary gate by gate for cross-checking.
    """

    def __init__(self, walk: WalkOperator, b: int, zero_phase: complex = 1.0, other_phase: complex = -1.0):
        if b < 1:
            raise ValueError("need at least one ancilla")
        self.walk = walk
        self.b = int(b)
        self.zero_phase = complex(zero_phase)
        self.other_phase = complex(other_phase)
        self._basis, self._phases = _eigensystem(walk)
        self._q = _q_vectors(self._phases, self.b)

    @property
    def d(self) -> int:
        return self.walk.size

    @property
    def dim(self) -> int:
        return self.walk.dim * 2**self.b

    @property
    def queries(self) -> int:
        """Controlled-walk applications per use: estimation plus uncomputation."""
        return 2 * (2**self.b - 1)

    def _blocks(self, state: np.ndarray, a: complex, c: complex) -> np.ndarray:
        # trailing axes (spare ancillas, other registers) are spectators
        n = 2**self.b
        shp = state.shape
        dw = self.walk.dim
        coeffs = (self._basis.conj().T @ state.reshape(dw, -1)).reshape(dw, n, -1)
        proj = np.einsum("wn,wnr->wr", self._q.conj(), coeffs)
        coeffs = c * coeffs + (a - c) * self._q[:, :, None] * proj[:, None, :]
        return (self._basis @ coeffs.reshape(dw, -1)).reshape(shp)

    def target_vectors(self) -> np.ndarray:
        """Orthonormal columns ``|e_w> (x) |q(phi_w)>`` on which the circuit applies ``zero_phase``.

        Shape ``(D^2 * 2^b, D^2)``; the circuit is ``other_phase`` times the
        identity elsewhere.
        """
        dw = self.walk.dim
        return (self._basis[:, None, :] * self._q.T[None, :, :]).reshape(-1, dw)

    def apply(self, state: np.ndarray) -> np.ndarray:
        return self._blocks(state, self.zero_phase, self.other_phase)

    def apply_adjoint(self, state: np.ndarray) -> np.ndarray:
        return self._blocks(state, self.zero_phase.conjugate(), self.other_phase.conjugate())

    def operator(self) -> Operator:
        return Operator(self.dim, apply=self.apply, apply_adjoint=self.apply_adjoint)

    def ideal(self) -> np.ndarray:
        """Exact counterpart on the walk space: phase about the stationary lift."""
        lift = self.walk.stationary_lift()
        proj = np.outer(lift, lift.conj())
        return self.zero_phase * proj + self.other_phase * (np.eye(self.walk.dim) - proj)

    def predicted_error(self) -> float:
        """Worst error over unit vectors of ``A + B`` from the walk spectrum alone."""
        nz = np.abs(self._phases) > 1e-9
        if not nz.any():
            return 0.0
        p0 = np.abs(self._q[nz, 0]) ** 2
        return float(abs(self.zero_phase - self.other_phase) * np.sqrt(p0.max()))

    def circuit_matrix(self, cap: int = 2**12) -> np.ndarray:
        """Gate-by-gate unitary on ``x (x) y (x) anc`` (small ``b`` only)."""
        n = 2**self.b
        dim = self.walk.dim * n
        if dim > cap:
            raise CapExceededError(f"circuit matrix of dimension {dim} exceeds cap {cap}")
        w = self.walk.matrix
        eye_w = np.eye(self.walk.dim)
        h1 = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
        hb = np.ones((1, 1))
        for _ in range(self.b):
            hb = np.kron(hb, h1)
        # ancilla bit j (least significant = 0) controls W^(2^j)
        ctrl = np.zeros((dim, dim), dtype=complex)
        for a in range(n):
            ctrl_block = np.linalg.matrix_power(w, a)
            sel = np.zeros((n, n))
            sel[a, a] = 1.0
            ctrl += np.kron(ctrl_block, sel)
        k = np.arange(n)
        idft = np.exp(-2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)
        forward = np.kron(eye_w, idft) @ ctrl @ np.kron(eye_w, hb)
        phase = np.full(n, self.other_phase)
        phase[0] = self.zero_phase
        mid = np.kron(eye_w, np.diag(phase))
        return forward.conj().T @ mid @ forward


def _eigensystem(walk: WalkOperator) -> tuple[np.ndarray, np.ndarray]:
    t, z = scipy.linalg.schur(walk.matrix, output="complex")
    return z, np.angle(np.diag(t))


def _q_vectors(phases: np.ndarray, b: int) -> np.ndarray:
    n = 2**b
    a = np.arange(n)
    # D(phi)^dag F|0> = n^{-1/2} sum_a e^{-i a phi} |a>
    v = np.exp(-1j * np.outer(phases, a)) / math.sqrt(n)
    return walsh_hadamard(v, axis=1)


def approx_reflection(walk: WalkOperator, b: int, cap: int = DEFAULT_CAP) -> ApproxReflection:
    """Approximate ``2|lift><lift| - I`` using ``b`` phase-estimation ancillas."""
    if walk.dim * 2**b > cap:
        raise CapExceededError(f"{walk.dim * 2**b} amplitudes exceed the cap {cap}")
    return ApproxReflection(walk, b, 1.0, -1.0)


def reflection_errors(refl: ApproxReflection, basis: np.ndarray | None = None) -> np.ndarray:
    """``|| R~(phi (x) |0^b>) - (R phi) (x) |0^b> ||`` for each basis column of ``A + B``."""
    if basis is None:
        basis = refl.walk.ab_basis()
    n = 2**refl.b
    inp = np.zeros((refl.walk.dim, n, basis.shape[1]), dtype=complex)
    inp[:, 0, :] = basis
    out = refl.apply(inp)
    ideal = refl.ideal() @ basis
    out[:, 0, :] -= ideal
    return np.linalg.norm(out.reshape(-1, basis.shape[1]), axis=0)


def worst_reflection_error(refl: ApproxReflection) -> float:
    """Largest error over all unit vectors of ``A + B`` (spectral norm of the error map)."""
    basis = refl.walk.ab_basis()
    n = 2**refl.b
    inp = np.zeros((refl.walk.dim, n, basis.shape[1]), dtype=complex)
    inp[:, 0, :] = basis
    out = refl.apply(inp)
    out[:, 0, :] -= refl.ideal() @ basis
    return float(np.linalg.norm(out.reshape(-1, basis.shape[1]), 2))


def choose_ancillas(walk: WalkOperator, eps_R: float, zero_phase: complex = 1.0, other_phase: complex = -1.0, b_max: int = 22) -> int:
    """Smallest ``b`` whose predicted worst error on ``A + B`` is at most ``eps_R``."""
    for b in range(1, b_max + 1):
        if ApproxReflection(walk, b, zero_phase, other_phase).predicted_error() <= eps_R:
            return b
    raise CapExceededError(f"no ancilla count up to {b_max} reaches eps_R = {eps_R:g}")


def selective_phase(target, omega: complex, b: int | None = None):
    """``omega |pi><pi| + (I - |pi><pi|)``.

    ``target`` may be a sample or vector (exact dense operator) or a
    :class:`WalkOperator` (walk-based approximation with ``b`` ancillas).
    """
    if isinstance(target, WalkOperator):
        if b is None:
            raise ValueError("walk-mode selective phase needs an ancilla count")
        return ApproxReflection(target, b, omega, 1.0)
    v = target.amplitudes if isinstance(target, QuantumSample) else as_array(target)
    return Operator(v.size, matrix=selective_phase_matrix(v, omega))


def fixed_point_depth_phases(depth: int) -> int:
    """Selective phases in a depth-``depth`` pi/3 recursion: ``3^depth - 1``."""
    return 3**depth - 1


@dataclass
class PreparationReport:
    samples: list[QuantumSample]
    stage_queries: list[int] = field(default_factory=list)
    stage_deviation: list[float] = field(default_factory=list)
    b: int = 0

    @property
    def final(self) -> QuantumSample:
        return self.samples[-1]


def _recursion(v, depth, s_src, s_src_dag, s_tgt, s_tgt_dag):
    """Apply ``A_depth`` where ``A_{m+1} = A_m S_src A_m^dag S_tgt A_m``."""

    def fwd(m, x):
        if m == 0:
            return x
        x = fwd(m - 1, x)
        x = s_tgt(x)
        x = back(m - 1, x)
        x = s_src(x)
        return fwd(m - 1, x)

    def back(m, x):
        if m == 0:
            return x
        x = back(m - 1, x)
        x = s_src_dag(x)
        x = fwd(m - 1, x)
        x = s_tgt_dag(x)
        return back(m - 1, x)

    return fwd(depth, v)


def fixed_point_prepare(
    schedule: Schedule,
    system: System,
    mode: str = "exact",
    eps_S: float = 1 / 32,
    depth: int = 2,
    b: int | None = None,
    register: int | None = None,
    cap: int = DEFAULT_CAP,
) -> PreparationReport:
    """Drive ``|pi_0>`` through every schedule stage with the pi/3 recursion.

    Returns the prepared sample after each stage (index ``i`` approximates
    ``|pi_i>``).  In walk mode ``b`` defaults to the smallest ancilla count
    whose selective-phase error is at most ``eps_S / (8 l 3^depth)`` for
    every walk in the schedule.  ``register`` (default ``b``) sizes the
    shared ancilla register; the selective phases use its leading ``b``
    qubits.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if mode not in ("exact", "walk"):
        raise ValueError(f"unknown mode {mode!r}")
    betas = schedule.betas
    ell = max(schedule.length, 1)
    exact = [np.sqrt(boltzmann(system, bt)).astype(complex) for bt in betas]
    for i, (u, v) in enumerate(zip(exact[:-1], exact[1:])):
        ov = abs(np.vdot(u, v)) ** 2
        if ov < 0.5 - 1e-12:
            raise ScheduleError(f"stage {i} overlap {ov:.4g} is below 1/2")

    if mode == "exact":
        state = exact[0].copy()
        report = PreparationReport([QuantumSample(StateVector.single(state), "exact", eps_S)])
        for i in range(schedule.length):
            if betas[i + 1] == betas[i]:
                nq = 0
            else:
                src = selective_phase_matrix(exact[i], PI3)
                tgt = selective_phase_matrix(exact[i + 1], PI3)
                state = _recursion(
                    state, depth,
                    lambda x: src @ x, lambda x: src.conj().T @ x,
                    lambda x: tgt @ x, lambda x: tgt.conj().T @ x,
                )
                nq = fixed_point_depth_phases(depth)
            dev = aligned_distance(state, exact[i + 1])
            report.stage_queries.append(nq)
            report.stage_deviation.append(dev)
            report.samples.append(
                QuantumSample(StateVector.single(state), "exact", eps_S, selective_phases=sum(report.stage_queries), deviation=dev)
            )
        return report

    walks = [build_walk(metropolis_chain(system, bt)) for bt in betas]
    if b is None:
        eps_R = eps_S / (8 * ell * 3**depth)
        b = max(choose_ancillas(w, eps_R, PI3, 1.0) for w in walks) if schedule.length else 1
    register = b if register is None else register
    if register < b:
        raise ValueError("register must hold at least b ancillas")
    d = system.size
    if d * d * 2**register > cap:
        raise CapExceededError(f"{d * d * 2**register} amplitudes exceed the cap {cap}")
    regs = _walk_registers(d, register)
    state = lifted(boltzmann(system, 0.0), register)
    report = PreparationReport([QuantumSample(StateVector(state, regs), "walk", eps_S, deviation=0.0)], b=b)
    phases = [ApproxReflection(w, b, PI3, 1.0) for w in walks]
    total = n_phases = 0
    for i in range(schedule.length):
        if betas[i + 1] == betas[i]:
            nq = 0
        else:
            n_phases += fixed_point_depth_phases(depth)
            src, tgt = phases[i], phases[i + 1]
            state = _recursion(state, depth, src.apply, src.apply_adjoint, tgt.apply, tgt.apply_adjoint)
            nq = fixed_point_depth_phases(depth) * src.queries
        total += nq
        dev = aligned_distance(state, lifted(boltzmann(system, betas[i + 1]), register))
        report.stage_queries.append(nq)
        report.stage_deviation.append(dev)
        report.samples.append(
            QuantumSample(
                StateVector(state, regs), "walk", eps_S,
                walk_queries=total,
                selective_phases=n_phases,
                deviation=dev,
            )
        )
    return report
