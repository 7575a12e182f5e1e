"""Finite physical systems, exact partition functions and cooling schedules.

Energies are dimensionless with the Boltzmann constant set to one, so an
inverse temperature ``beta`` multiplies energies directly.  Every system keeps
its energies shifted by a reference energy (the ground energy by default), so
that all Boltzmann weights ``exp(-beta * E')`` lie in ``(0, 1]``.  Partition
functions are computed on the shifted energies; multiply by
``exp(-beta * energy_offset)`` to get the physical value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ScheduleError

MAX_STATES = 2**12
# exp(-x) underflows to zero in double precision somewhere past x ~ 745
_MAX_EXPONENT = 700.0


@dataclass(frozen=True)
class System:
    """Finite state space with a real energy per state index.

    Parameters
    ----------
    energies : array_like
        Energy of every state, indexed ``0 .. D-1``.
    n_spins : int, optional
        When set, states are spin configurations encoded as bit strings
        (bit ``u`` of the index is site ``u``, bit 0 meaning spin +1) and
        ``D`` must equal ``2**n_spins``.  This fixes the single-flip
        neighbourhood used by :func:`qpartition.markov.metropolis_chain`.
    offset : float, optional
        Reference energy subtracted from every state.  Defaults to the
        minimum energy.  Must not exceed the minimum energy.
    """

    energies: np.ndarray
    n_spins: int | None = None
    offset: float | None = None
    shifted: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).ravel()
        if e.size < 1:
            raise ConfigError("a system needs at least one state")
        if e.size > MAX_STATES:
            raise ConfigError(
                f"state space of size {e.size} exceeds the exact-enumeration cap {MAX_STATES}"
            )
        if not np.all(np.isfinite(e)):
            raise ConfigError("energies must be finite")
        if self.n_spins is not None and e.size != 2**self.n_spins:
            raise ConfigError(f"{self.n_spins} spins need {2**self.n_spins} energies, got {e.size}")
        e_min = float(e.min())
        offset = e_min if self.offset is None else float(self.offset)
        if offset > e_min + 1e-12:
            raise ConfigError("offset must not exceed the minimum energy")
        e.setflags(write=False)
        shifted = e - offset
        shifted = np.maximum(shifted, 0.0)
        shifted.setflags(write=False)
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "shifted", shifted)

    @property
    def size(self) -> int:
        return int(self.energies.size)

    @property
    def energy_offset(self) -> float:
        return float(self.offset)

    def neighbors(self, state: int) -> list[int]:
        """Proposal neighbourhood: single spin flips, or all other states."""
        if self.n_spins is not None:
            return [state ^ (1 << u) for u in range(self.n_spins)]
        return [s for s in range(self.size) if s != state]


def spins_of(state: int, n: int) -> np.ndarray:
    """Spin values (+1/-1) for a state index."""
    return 1 - 2 * ((state >> np.arange(n)) & 1)


def ising(
    n: int,
    edges: Iterable[tuple[int, int, float]] = (),
    fields: Iterable[tuple[int, float]] = (),
) -> System:
    """Ising system ``E(s) = -sum J_uv s_u s_v - sum h_u s_u``."""
    if n < 1:
        raise ConfigError("need at least one spin")
    if 2**n > MAX_STATES:
        raise ConfigError(f"{n} spins exceed the exact-enumeration cap of {MAX_STATES} states")
    idx = np.arange(2**n)
    spins = 1 - 2 * ((idx[:, None] >> np.arange(n)[None, :]) & 1)
    energy = np.zeros(2**n)
    for u, v, j in edges:
        _check_site(u, n)
        _check_site(v, n)
        energy -= j * spins[:, u] * spins[:, v]
    for u, h in fields:
        _check_site(u, n)
        energy -= h * spins[:, u]
    return System(energy, n_spins=n)


def _check_site(u: int, n: int) -> None:
    if not 0 <= u < n:
        raise ConfigError(f"site {u} out of range for {n} spins")


def parse_model(text: str) -> System:
    """Parse the line-oriented model format.

    ::

        # comment
        spins 3
        edge 0 1 1.0
        edge 1 2 -0.5
        field 0 0.25

    ``spins`` must come before any ``edge`` or ``field`` record.
    """
    n = None
    edges: list[tuple[int, int, float]] = []
    fields: list[tuple[int, float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key, args = parts[0].lower(), parts[1:]
        try:
            if key == "spins" and len(args) == 1:
                if n is not None:
                    raise ConfigError("duplicate spins record")
                n = int(args[0])
            elif key == "edge" and len(args) == 3:
                edges.append((int(args[0]), int(args[1]), float(args[2])))
            elif key == "field" and len(args) == 2:
                fields.append((int(args[0]), float(args[1])))
            else:
                raise ConfigError(f"unrecognised record {line!r}")
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
        if key != "spins" and n is None:
            raise ConfigError(f"line {lineno}: 'spins' must precede edges and fields")
    if n is None:
        raise ConfigError("model file has no 'spins' record")
    return ising(n, edges, fields)


def load_model(path: str | Path) -> System:
    return parse_model(Path(path).read_text())


def _check_beta(system: System, beta: float) -> None:
    if beta < 0 or not math.isfinite(beta):
        raise ValueError(f"beta must be finite and nonnegative, got {beta}")
    spread = float(system.shifted.max())
    if beta * spread > _MAX_EXPONENT:
        raise OverflowError(
            f"beta * energy range = {beta * spread:.4g} exceeds the representable exponent"
        )


def weights(system: System, beta: float) -> np.ndarray:
    """Boltzmann weights ``exp(-beta * E')`` on shifted energies."""
    _check_beta(system, beta)
    return np.exp(-beta * system.shifted)


def exact_partition(system: System, beta: float) -> float:
    """Partition function on shifted energies, by full enumeration.

    The physical value is ``exact_partition(system, beta) * exp(-beta * system.energy_offset)``.
    """
    return float(math.fsum(weights(system, beta)))


def physical_partition(system: System, beta: float) -> float:
    """Partition function on the unshifted energies."""
    return exact_partition(system, beta) * math.exp(-beta * system.energy_offset)


def boltzmann(system: System, beta: float) -> np.ndarray:
    """Gibbs distribution at inverse temperature ``beta``."""
    w = weights(system, beta)
    return w / math.fsum(w)


@dataclass(frozen=True)
class Schedule:
    """Nondecreasing inverse temperatures starting at zero."""

    betas: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(x) for x in self.betas)
        if not b or b[0] != 0.0:
            raise ScheduleError("a schedule starts at beta = 0")
        if any(y < x for x, y in zip(b, b[1:])):
            raise ScheduleError("schedule must be nondecreasing")
        object.__setattr__(self, "betas", b)

    @property
    def length(self) -> int:
        """Number of ratios in the telescoping product."""
        return len(self.betas) - 1

    @property
    def beta_final(self) -> float:
        return self.betas[-1]

    def steps(self) -> list[tuple[float, float]]:
        return list(zip(self.betas[:-1], self.betas[1:]))

    def ratios(self, system: System) -> np.ndarray:
        """Exact ratios ``Z(beta_{i+1}) / Z(beta_i)`` on shifted energies."""
        z = [exact_partition(system, b) for b in self.betas]
        return np.array([z1 / z0 for z0, z1 in zip(z[:-1], z[1:])])

    def validate(self, system: System, lower: float = 0.5) -> np.ndarray:
        """Return the exact ratios, raising if any falls below ``lower``."""
        alphas = self.ratios(system)
        bad = np.flatnonzero(alphas < lower - 1e-12)
        if bad.size:
            i = int(bad[0])
            raise ScheduleError(f"ratio alpha_{i} = {alphas[i]:.6g} is below {lower}")
        return alphas

    def refine(self, factor: int) -> "Schedule":
        """Split every step into ``factor`` equal sub-steps in beta."""
        if factor < 1:
            raise ValueError("factor must be positive")
        out = [0.0]
        for b0, b1 in self.steps():
            out.extend(b0 + (b1 - b0) * k / factor for k in range(1, factor + 1))
        return Schedule(tuple(out))


def build_schedule(
    system: System,
    beta_final: float,
    target_low: float = 0.5,
    target_high: float = 0.75,
    tol: float = 1e-10,
) -> Schedule:
    """Cooling schedule from ``beta = 0`` to ``beta_final`` by bisection.

    Each intermediate step is chosen so that ``Z(beta_{i+1}) / Z(beta_i)``
    sits at the midpoint of ``[target_low, target_high]`` (to within the
    bisection tolerance on beta).  The last step jumps straight to
    ``beta_final`` once that keeps the ratio at or above ``target_low``.
    """
    if not 0 < target_low <= target_high < 1:
        raise ValueError("need 0 < target_low <= target_high < 1")
    if beta_final < 0 or not math.isfinite(beta_final):
        raise ScheduleError(f"beta_final must be finite and nonnegative, got {beta_final}")
    _check_beta(system, beta_final)
    target = 0.5 * (target_low + target_high)
    z_final = exact_partition(system, beta_final)
    betas = [0.0]
    while betas[-1] < beta_final:
        b0 = betas[-1]
        z0 = exact_partition(system, b0)
        if z_final / z0 >= target_low:
            betas.append(beta_final)
            break
        lo, hi = b0, beta_final
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if exact_partition(system, mid) / z0 >= target:
                lo = mid
            else:
                hi = mid
        if lo <= b0:
            raise ScheduleError(f"bisection did not advance from beta = {b0}")
        # each step undershoots by up to tol; do not leave a sliver at the end
        if beta_final - lo <= 2 * tol * len(betas):
            lo = beta_final
        betas.append(lo)
    return Schedule(tuple(betas))


def random_ising(n: int, rng: np.random.Generator, field_scale: float = 0.5) -> System:
    """Ising chain/ring with random couplings in [-1, 1] and random fields."""
    pairs: Sequence[tuple[int, int]]
    if n == 1:
        pairs = []
    elif n == 2:
        pairs = [(0, 1)]
    else:
        pairs = [(u, (u + 1) % n) for u in range(n)]
    edges = [(u, v, float(rng.uniform(-1, 1))) for u, v in pairs]
    fields = [(u, float(rng.uniform(-field_scale, field_scale))) for u in range(n)]
    return ising(n, edges, fields)
