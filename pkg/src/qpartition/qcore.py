"""Dense state-vector algebra and an exact phase-estimation engine.

Operators are either dense matrices or composed products applied factor by
factor, so large nested constructions never need to be materialised.
Phase estimation returns the exact outcome distribution of the textbook
circuit (Hadamards, controlled powers, inverse Fourier transform); nothing
is sampled here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import CapExceededError

DEFAULT_CAP = 2**28
# dense circuit simulation of phase estimation is used below this many amplitudes
CIRCUIT_LIMIT = 2**21

Apply = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class StateVector:
    """Normalised amplitudes over named tensor-factor registers.

    ``registers`` is an ordered sequence of ``(name, dim)``; the first
    register is the most significant index.
    """

    amplitudes: np.ndarray
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        regs = tuple((str(n), int(d)) for n, d in self.registers)
        if math.prod(d for _, d in regs) != amp.size:
            raise ValueError("register dimensions do not match the amplitude count")
        if abs(np.linalg.norm(amp) - 1.0) > 1e-10:
            raise ValueError(f"state is not normalised (norm {np.linalg.norm(amp):.12g})")
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "registers", regs)

    @classmethod
    def single(cls, amplitudes, name: str = "sys") -> "StateVector":
        a = np.asarray(amplitudes, dtype=complex).ravel()
        return cls(a, ((name, a.size),))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.registers)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def as_array(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex).ravel()


class Operator:
    """Linear map on a ``dim``-dimensional space.

    Built either from a dense matrix or from a function applying the map to a
    vector (``apply``) plus, optionally, its adjoint (``apply_adjoint``).
    Composition with ``@`` keeps composed operators lazy.
    """

    def __init__(
        self,
        dim: int,
        matrix: np.ndarray | None = None,
        apply: Apply | None = None,
        apply_adjoint: Apply | None = None,
        unitary: bool = True,
    ):
        if matrix is None and apply is None:
            raise ValueError("need a matrix or an apply function")
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.shape != (dim, dim):
                raise ValueError(f"matrix shape {matrix.shape} does not match dim {dim}")
        self.dim = int(dim)
        self.matrix = matrix
        self._apply = apply
        self._apply_adjoint = apply_adjoint
        self.unitary = unitary

    @classmethod
    def dense(cls, matrix, unitary: bool = True, check: bool = True) -> "Operator":
        m = np.asarray(matrix, dtype=complex)
        if unitary and check:
            check_unitary(m)
        return cls(m.shape[0], matrix=m, unitary=unitary)

    @property
    def is_dense(self) -> bool:
        return self.matrix is not None

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Apply to a vector of length ``dim`` or to the columns of a ``(dim, k)`` array."""
        if self.matrix is not None:
            return self.matrix @ vec
        return self._apply(vec)

    def adjoint(self) -> "Operator":
        if self.matrix is not None:
            return Operator(self.dim, matrix=self.matrix.conj().T, unitary=self.unitary)
        if self._apply_adjoint is None:
            raise ValueError("adjoint not available for this operator")
        return Operator(self.dim, apply=self._apply_adjoint, apply_adjoint=self._apply, unitary=self.unitary)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return compose(self, other)
        return self.apply(np.asarray(other))

    def to_matrix(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix
        return self.apply(np.eye(self.dim, dtype=complex))


def compose(*ops: Operator) -> Operator:
    """Product ``ops[0] @ ops[1] @ ...``; the last factor acts first."""
    dim = ops[0].dim
    if any(op.dim != dim for op in ops):
        raise ValueError("dimension mismatch in composition")
    if all(op.is_dense for op in ops):
        m = ops[0].matrix
        for op in ops[1:]:
            m = m @ op.matrix
        return Operator(dim, matrix=m, unitary=all(op.unitary for op in ops))

    def fwd(v):
        for op in reversed(ops):
            v = op.apply(v)
        return v

    def back(v):
        for op in ops:
            v = op.adjoint().apply(v)
        return v

    return Operator(dim, apply=fwd, apply_adjoint=back, unitary=all(op.unitary for op in ops))


def check_unitary(m: np.ndarray, tol: float = 1e-10) -> None:
    err = float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))))
    if err > tol:
        raise ValueError(f"operator is not unitary (max |U^dag U - I| = {err:.3g})")


def apply_local(state: np.ndarray, dims: Sequence[int], matrix: np.ndarray, register: int) -> np.ndarray:
    """Apply ``matrix`` to one register of a tensor-factored state."""
    t = np.asarray(state).reshape(dims)
    t = np.tensordot(matrix, t, axes=([1], [register]))
    return np.moveaxis(t, 0, register).reshape(-1)


def kron(*mats: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def reflect_about(psi) -> Operator:
    """Exact reflection ``2|psi><psi| - I``."""
    v = as_array(psi)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise ValueError("reflection needs a normalised vector")
    return Operator(v.size, matrix=2.0 * np.outer(v, v.conj()) - np.eye(v.size))


def selective_phase_matrix(psi, omega: complex) -> np.ndarray:
    """``omega |psi><psi| + (I - |psi><psi|)``."""
    v = as_array(psi)
    return np.eye(v.size, dtype=complex) + (omega - 1.0) * np.outer(v, v.conj())


def eigenphases(u, cap: int = 4096) -> list[tuple[float, np.ndarray]]:
    """Eigenphases in ``[0, 2 pi)`` with orthonormal eigenvectors.

    Uses the complex Schur form, which is diagonal for normal matrices and
    keeps degenerate eigenspaces orthonormal.
    """
    m = u.to_matrix() if isinstance(u, Operator) else np.asarray(u, dtype=complex)
    if m.shape[0] > cap:
        raise CapExceededError(f"dimension {m.shape[0]} exceeds eigendecomposition cap {cap}")
    check_unitary(m, tol=1e-8)
    t, z = scipy.linalg.schur(m, output="complex")
    phases = np.mod(np.angle(np.diag(t)), 2 * np.pi)
    phases[np.isclose(phases, 2 * np.pi, rtol=0, atol=1e-13)] = 0.0
    return [(float(phases[k]), z[:, k]) for k in range(m.shape[0])]


def ancilla_count(eps_pe: float, p_f: float) -> int:
    """Ancillas for an ``eps_pe``-accurate phase with failure probability ``p_f``."""
    if not 0 < eps_pe <= math.pi:
        raise ValueError("eps_pe must lie in (0, pi]")
    if not 0 < p_f < 0.5:
        raise ValueError("p_f must lie in (0, 1/2)")
    return _ceil_log2(2 * math.pi / eps_pe) + _ceil_log2(2 + 1 / (2 * p_f))


def _ceil_log2(x: float) -> int:
    k = math.ceil(math.log2(x) - 1e-12)
    return max(k, 0)


@dataclass(frozen=True)
class PhaseEstimationResult:
    probabilities: np.ndarray
    t: int

    @property
    def phases(self) -> np.ndarray:
        """Phase estimate ``2 pi k / 2^t`` for each outcome ``k``."""
        return 2 * np.pi * np.arange(2**self.t) / 2**self.t

    @property
    def controlled_calls(self) -> int:
        return 2**self.t - 1


def phase_estimation(u: Operator, psi, t: int, cap: int = DEFAULT_CAP, method: str = "auto") -> PhaseEstimationResult:
    """Exact outcome distribution of phase estimation of ``u`` on ``psi``.

    ``method="circuit"`` simulates the ancilla register explicitly;
    ``method="correlation"`` uses the identity
    ``p(x) = 2^{-2t} sum_m (2^t - |m|) <psi|u^m|psi> e^{-2 pi i m x / 2^t}``,
    which needs only ``2^t - 1`` applications of ``u`` and no ancilla
    register.  Both describe the same circuit; when the spectral measure of
    ``psi`` is known, :func:`measure_estimation` gives it directly.
    """
    if t < 1:
        raise ValueError("need at least one ancilla")
    v = as_array(psi)
    if v.size != u.dim:
        raise ValueError("state and operator dimensions differ")
    if not u.unitary:
        raise ValueError("phase estimation needs a unitary")
    if u.is_dense:
        check_unitary(u.matrix, tol=1e-8)
    n = 2**t
    if method == "auto":
        method = "circuit" if u.is_dense and n * u.dim <= min(cap, CIRCUIT_LIMIT) else "correlation"
    if method == "circuit":
        if n * u.dim > cap:
            raise CapExceededError(f"{n * u.dim} amplitudes exceed the cap {cap}")
        probs = _pe_circuit(u, v, t)
    elif method == "correlation":
        if u.dim > cap:
            raise CapExceededError(f"{u.dim} amplitudes exceed the cap {cap}")
        probs = _pe_correlation(u, v, t)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _normalised(probs, t)


def measure_estimation(phases, weights, t: int) -> PhaseEstimationResult:
    """Phase estimation outcome distribution for a state with spectral measure
    ``sum_k weights[k] delta(phases[k])``; same formula as the correlation route."""
    if t < 1:
        raise ValueError("need at least one ancilla")
    return _normalised(_pe_from_measure(np.asarray(phases, float), np.asarray(weights, float), t), t)


def _normalised(probs: np.ndarray, t: int) -> PhaseEstimationResult:
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if abs(total - 1.0) > 1e-8:
        raise RuntimeError(f"outcome distribution sums to {total}")
    return PhaseEstimationResult(probs / total, t)


def _pe_circuit(u: Operator, v: np.ndarray, t: int) -> np.ndarray:
    n = 2**t
    # ancilla index a, bit j of a controls u^(2^j)
    state = np.tile(v / math.sqrt(n), (n, 1)).T  # (dim, n)
    a = np.arange(n)
    power = u
    for j in range(t):
        rows = (a >> j) & 1 == 1
        state[:, rows] = power.apply(state[:, rows])
        if j + 1 < t:
            power = compose(power, power) if power.is_dense else _square(power)
    # inverse QFT on the ancilla: amplitude x = n^{-1/2} sum_a e^{-2 pi i a x / n} state_a
    out = np.fft.fft(state, axis=1) / math.sqrt(n)
    return np.sum(np.abs(out) ** 2, axis=0)


def _square(op: Operator) -> Operator:
    return Operator(op.dim, apply=lambda x: op.apply(op.apply(x)), unitary=op.unitary)


def _pe_correlation(u: Operator, v: np.ndarray, t: int) -> np.ndarray:
    n = 2**t
    c = np.empty(n, dtype=complex)
    w = v.copy()
    c[0] = np.vdot(v, w)
    for m in range(1, n):
        w = u.apply(w)
        c[m] = np.vdot(v, w)
    g = (n - np.arange(n)) * c
    s = np.fft.fft(g)
    return (2.0 * s.real - n * c[0].real) / n**2


def _pe_from_measure(phases: np.ndarray, weights: np.ndarray, t: int) -> np.ndarray:
    n = 2**t
    m = np.arange(n)
    c = np.exp(1j * np.outer(m, phases)) @ weights
    s = np.fft.fft((n - m) * c)
    return (2.0 * s.real - n * c[0].real) / n**2


def kernel_probabilities(phase: float, t: int) -> np.ndarray:
    """Outcome distribution for an exact eigenvector with eigenphase ``phase``."""
    n = 2**t
    a = np.arange(n)
    amps = np.exp(1j * a[:, None] * (phase - 2 * np.pi * a[None, :] / n)).sum(axis=0) / n
    return np.abs(amps) ** 2


def walsh_hadamard(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Normalised ``H^{(x)b}`` along one axis of length ``2^b``."""
    x = np.moveaxis(np.asarray(x, dtype=complex), axis, -1)
    n = x.shape[-1]
    b = n.bit_length() - 1
    if 2**b != n:
        raise ValueError("length must be a power of two")
    shape = x.shape
    y = x.reshape(shape[:-1] + (2,) * b)
    for k in range(b):
        ax = len(shape) - 1 + k
        y0 = np.take(y, 0, axis=ax)
        y1 = np.take(y, 1, axis=ax)
        y = np.stack([y0 + y1, y0 - y1], axis=ax)
    y = y.reshape(shape) / math.sqrt(n)
    return np.moveaxis(y, -1, axis)
