"""Quantum walks built from reversible Markov chains.

The walk acts on two ``D``-dimensional registers (index ``x * D + y``) as
``W = R_B R_A`` where ``A = span{|x>|0>}`` and ``B = U^dag S U A`` for the
quantum update ``U|x>|0> = |x>|p_x>`` and the register swap ``S``.
On ``A + B`` its non-real eigenvalues are ``exp(+-2i theta_j)`` with
``cos theta_j = mu_j``, the chain's eigenvalues.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapExceededError, GuaranteeError
from .markov import ChainSpectrum, TransitionMatrix, check_stochastic, chain_spectrum

WALK_CAP = 2**12
AB_THRESHOLD = 1e-8


def quantum_update(p) -> np.ndarray:
    """Block-diagonal ``U = sum_x |x><x| (x) V_x`` with ``V_x|0> = |p_x>``.

    ``V_x`` is the Householder reflection exchanging ``|0>`` and ``|p_x>``
    (the identity when they coincide).
    """
    m = np.asarray(p.matrix if isinstance(p, TransitionMatrix) else p, dtype=float)
    check_stochastic(m)
    d = m.shape[0]
    u = np.zeros((d * d, d * d))
    e0 = np.zeros(d)
    e0[0] = 1.0
    for x in range(d):
        px = np.sqrt(np.clip(m[x], 0.0, None))
        w = e0 - px
        nw = float(w @ w)
        if nw < 1e-30:
            vx = np.eye(d)
        else:
            vx = np.eye(d) - 2.0 * np.outer(w, w) / nw
        u[x * d:(x + 1) * d, x * d:(x + 1) * d] = vx
    return u


def swap_matrix(d: int) -> np.ndarray:
    idx = np.arange(d * d)
    s = np.zeros((d * d, d * d))
    s[(idx % d) * d + idx // d, idx] = 1.0
    return s


def a_projector(d: int) -> np.ndarray:
    diag = np.zeros(d * d)
    diag[np.arange(d) * d] = 1.0
    return np.diag(diag)


@dataclass(frozen=True)
class WalkOperator:
    matrix: np.ndarray
    update: np.ndarray
    chain: TransitionMatrix
    spectrum: ChainSpectrum

    @property
    def size(self) -> int:
        return self.chain.size

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def stationary_lift(self) -> np.ndarray:
        """``sum_x sqrt(pi_x) |x>|0>``, the walk's fixed vector."""
        d = self.size
        v = np.zeros(d * d, dtype=complex)
        v[np.arange(d) * d] = np.sqrt(self.chain.pi)
        return v

    def ab_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of ``A + B``."""
        d = self.size
        a = np.zeros((d * d, d))
        a[np.arange(d) * d, np.arange(d)] = 1.0
        involution = self.update.T @ swap_matrix(d) @ self.update
        b = involution @ a
        q, s, _ = np.linalg.svd(np.hstack([a, b]), full_matrices=False)
        return q[:, s > AB_THRESHOLD].astype(complex)


def build_walk(p, cap: int = WALK_CAP) -> WalkOperator:
    """``W = R_B R_A`` with ``R_B = (U^dag S U) R_A (U^dag S U)``."""
    chain = p if isinstance(p, TransitionMatrix) else TransitionMatrix.from_array(p)
    d = chain.size
    if d * d > cap:
        raise CapExceededError(f"walk dimension {d * d} exceeds cap {cap}")
    spec = chain_spectrum(chain)
    u = quantum_update(chain)
    involution = u.T @ swap_matrix(d) @ u
    r_a = 2.0 * a_projector(d) - np.eye(d * d)
    r_b = involution @ r_a @ involution
    w = (r_b @ r_a).astype(complex)
    w.setflags(write=False)
    return WalkOperator(w, u, chain, spec)


@dataclass(frozen=True)
class WalkSpectrum:
    """Eigenphases of ``W`` restricted to ``A + B``, in ``(-pi, pi]``."""

    phases: np.ndarray
    chain_eigenvalues: np.ndarray

    @property
    def phase_gap(self) -> float:
        nz = np.abs(self.phases[np.abs(self.phases) > AB_THRESHOLD])
        return float(nz.min()) if nz.size else math.pi

    @property
    def gap(self) -> float:
        return float(1.0 - self.chain_eigenvalues[1]) if self.chain_eigenvalues.size > 1 else 1.0

    def gap_relation_holds(self) -> bool:
        """``Delta >= 2 sqrt(delta)``."""
        return self.phase_gap >= 2.0 * math.sqrt(self.gap) - 1e-12

    def pairing(self) -> list[tuple[float, float, float]]:
        """Rows ``(mu_j, +2 arccos mu_j, matched |phase|)`` for ``j >= 1``."""
        mags = np.sort(np.abs(self.phases))
        mags = mags[mags > AB_THRESHOLD]
        mus = np.sort(self.chain_eigenvalues[1:][self.chain_eigenvalues[1:] < 1 - 1e-12])[::-1]
        predicted = 2 * np.arccos(np.clip(mus, -1, 1))
        rows = []
        for mu, ph, got in zip(mus, predicted, mags[::2]):
            rows.append((float(mu), float(ph), float(got)))
        return rows


def walk_spectrum(walk: WalkOperator, tol: float = 1e-8) -> WalkSpectrum:
    """Spectrum of ``W`` on the invariant subspace ``A + B``."""
    q = walk.ab_basis()
    wq = walk.matrix @ q
    h = q.conj().T @ wq
    resid = float(np.max(np.abs(wq - q @ h)))
    if resid > tol:
        raise GuaranteeError(f"A + B is not invariant under W (residual {resid:.3g})")
    vals = np.linalg.eigvals(h)
    phases = np.angle(vals)
    phases[np.abs(phases) < 1e-13] = 0.0
    return WalkSpectrum(np.sort(phases), walk.spectrum.eigenvalues)


def expected_phases(mu: np.ndarray) -> np.ndarray:
    """Predicted ``A + B`` eigenphases: 0 once for ``mu = 1``, ``+-2 arccos mu`` otherwise."""
    out = []
    for m in np.asarray(mu):
        if m >= 1 - 1e-12:
            out.append(0.0)
        else:
            th = 2 * math.acos(max(-1.0, min(1.0, float(m))))
            out.extend([th, -th])
    return np.sort(np.array(out))


def spectrum_csv(ws: WalkSpectrum) -> str:
    """Eigenphase list, gaps, and the pairing table, 17 significant digits."""
    f = lambda v: format(v, ".17g")  # noqa: E731
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "index", "value", "predicted", "matched"])
    for k, ph in enumerate(ws.phases):
        w.writerow(["eigenphase", k, f(ph), "", ""])
    w.writerow(["phase_gap", "", f(ws.phase_gap), "", ""])
    w.writerow(["spectral_gap", "", f(ws.gap), "", ""])
    w.writerow(["two_sqrt_gap", "", f(2 * math.sqrt(ws.gap)), "", ""])
    for j, (mu, pred, got) in enumerate(ws.pairing(), 1):
        w.writerow(["pairing", j, f(mu), f(pred), f(got)])
    return buf.getvalue()


def dump_spectrum_csv(ws: WalkSpectrum, path: str | Path) -> None:
    Path(path).write_text(spectrum_csv(ws))
