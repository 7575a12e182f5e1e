"""Partition-function estimation by simulated annealing, classical and quantum.

Exact enumeration and cooling schedules live in :mod:`qpartition.model`;
Metropolis chains and their spectra in :mod:`qpartition.markov`; the
classical annealing estimator in :mod:`qpartition.classical`.  The quantum
side is a dense state-vector simulation: :mod:`qpartition.qcore` (operators
and phase estimation), :mod:`qpartition.szegedy` (quantum walks),
:mod:`qpartition.qprep` (approximate reflections and sample preparation) and
:mod:`qpartition.qestimate` (ratio estimation and the full pipelines).
"""

from .classical import ClassicalConfig, classical_cost, classical_fpras
from .errors import CapExceededError, ConfigError, GuaranteeError, NotReversibleError, ScheduleError
from .markov import TransitionMatrix, chain_spectrum, metropolis_chain, mixing_steps
from .model import (
    Schedule,
    System,
    boltzmann,
    build_schedule,
    exact_partition,
    ising,
    load_model,
    parse_model,
    physical_partition,
    random_ising,
)
from .qcore import Operator, StateVector, phase_estimation
from .qestimate import PipelineConfig, plan_levels, quantum_cost, quantum_fpras, run_trial
from .qprep import ApproxReflection, fixed_point_prepare
from .szegedy import build_walk, walk_spectrum

__version__ = "0.1.0"
