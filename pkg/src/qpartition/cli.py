"""Command-line front end.

    qpartition exact --model m.txt --beta 1
    qpartition schedule --model m.txt --beta 1
    qpartition classical --model m.txt --beta 1 --eps 0.3 --seed 7
    qpartition quantum --model m.txt --beta 1 --eps 0.2 --mode perfect --seed 7
    qpartition walk-analyze --model m.txt --beta 1 --out spectrum.csv
    qpartition bench --model m.txt --beta 1 --out sweep.csv

Exit codes: 0 success, 2 configuration error, 3 cap exceeded, 4 guarantee check failed.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import reports
from .classical import ClassicalConfig, classical_cost, classical_fpras
from .errors import CapExceededError, ConfigError, GuaranteeError, NotReversibleError
from .markov import TransitionMatrix, chain_spectrum, metropolis_chain
from .model import Schedule, boltzmann, build_schedule, exact_partition, load_model, physical_partition
from .qcore import DEFAULT_CAP
from .qestimate import quantum_cost, quantum_fpras, run_report, run_trial, separation_slopes
from .szegedy import WALK_CAP, build_walk, spectrum_csv, walk_spectrum

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_GUARANTEE = 0, 2, 3, 4


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpartition", description="Partition-function estimation, classical and quantum.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p, eps=False, seed=False):
        p.add_argument("--model", type=Path, help="model file (spins / edge / field lines)")
        p.add_argument("--beta", type=float, help="final inverse temperature")
        p.add_argument("--betas", type=_float_list, help="explicit schedule, comma separated, starting at 0")
        p.add_argument("--out", type=Path, help="output path (stdout if omitted)")
        p.add_argument("--cap-amplitudes", type=int, default=DEFAULT_CAP, help="largest simulated state")
        if eps:
            p.add_argument("--eps", type=float, required=True, help="target relative error")
        if seed:
            p.add_argument("--seed", type=int, help="RNG seed (required)")
            p.add_argument("--trials", type=int, default=1, help="independent repetitions, reported with a success rate")

    common(sub.add_parser("exact", help="exact Z and Boltzmann summary"))
    common(sub.add_parser("schedule", help="cooling schedule and ratio table"))
    common(sub.add_parser("classical", help="classical annealing estimate"), eps=True, seed=True)
    q = sub.add_parser("quantum", help="quantum estimate (perfect or walk samples)")
    common(q, eps=True, seed=True)
    q.add_argument("--mode", choices=("perfect", "walk"), default="perfect", help="exact samples, or samples prepared with walk reflections")
    w = sub.add_parser("walk-analyze", help="walk spectrum and phase-gap check")
    common(w)
    w.add_argument("--chain", type=Path, help="transition matrix as whitespace/comma separated text")
    b = sub.add_parser("bench", help="cost sweep over eps and schedule length")
    common(b)
    b.add_argument("--eps-list", type=_float_list, default=[0.4, 0.2, 0.1])
    b.add_argument("--refine", type=_float_list, default=[1.0, 2.0], help="schedule refinement factors")
    return parser


def _system(args):
    if args.model is None:
        raise ConfigError("--model is required")
    return load_model(args.model)


def _schedule(args, system) -> Schedule:
    if args.betas is not None:
        sch = Schedule(tuple(args.betas))
        if args.beta is not None and not math.isclose(sch.beta_final, args.beta):
            raise ConfigError("--betas must end at --beta")
        return sch
    if args.beta is None:
        raise ConfigError("--beta is required")
    return build_schedule(system, args.beta)


def _rng(args) -> np.random.Generator:
    if args.seed is None:
        raise ConfigError("--seed is required for stochastic runs")
    if args.seed < 0 or args.trials < 1:
        raise ConfigError("seed must be nonnegative and trials positive")
    return np.random.default_rng(args.seed)


def cmd_exact(args) -> int:
    system = _system(args)
    if args.beta is None:
        raise ConfigError("--beta is required")
    pi = boltzmann(system, args.beta)
    z = physical_partition(system, args.beta)
    order = np.argsort(-pi, kind="stable")[:4]
    if args.out is None:
        print(f"Z = {reports.fmt(z)}")
        print(f"Z_shifted = {reports.fmt(exact_partition(system, args.beta))} (offset {reports.fmt(system.energy_offset)})")
        print(f"pi: min {reports.fmt(pi.min())}, max {reports.fmt(pi.max())}, states {system.size}")
        for s in order:
            print(f"  state {int(s)}: E = {reports.fmt(system.energies[s])}, pi = {reports.fmt(pi[s])}")
    else:
        reports.write_text(
            reports.to_json(
                {
                    "beta": args.beta,
                    "Z": z,
                    "Z_shifted": exact_partition(system, args.beta),
                    "offset": system.energy_offset,
                    "pi": pi,
                }
            ),
            args.out,
        )
    return EXIT_OK


def cmd_schedule(args) -> int:
    system = _system(args)
    sch = _schedule(args, system)
    alphas = sch.ratios(system)
    rows = [(i, b0, b1, a) for i, ((b0, b1), a) in enumerate(zip(sch.steps(), alphas))]
    reports.write_text(reports.to_csv(["level", "beta_i", "beta_next", "alpha"], rows), args.out)
    return EXIT_OK


def _trial_summary(values, exact_z: float, eps: float) -> dict:
    hits = [abs(v - exact_z) <= eps * exact_z for v in values]
    return {"estimates": list(values), "within_eps": int(sum(hits)), "success_rate": sum(hits) / len(hits)}


def cmd_classical(args) -> int:
    system = _system(args)
    sch = _schedule(args, system)
    rng = _rng(args)
    runs = [classical_fpras(system, sch, args.eps, rng, seed=args.seed) for _ in range(args.trials)]
    exact_z = physical_partition(system, sch.beta_final)
    cfg = ClassicalConfig(args.eps, sch.length)
    report = runs[0].to_dict()
    report.update(
        exact_Z=exact_z,
        relative_error=abs(runs[0].value - exact_z) / exact_z,
        config={"eps": args.eps, "ell": sch.length, "betas": list(sch.betas), "d_m_ell": cfg.distance * cfg.samples_exact * cfg.length},
    )
    if args.trials > 1:
        report["trials"] = _trial_summary([r.value for r in runs], exact_z, args.eps)
    reports.write_text(reports.to_json(report), args.out)
    return EXIT_OK


def cmd_quantum(args) -> int:
    system = _system(args)
    sch = _schedule(args, system)
    rng = _rng(args)
    run, plans, cfg = quantum_fpras(system, sch, args.eps, args.mode, rng, cap=args.cap_amplitudes)
    report = run_report(system, sch, run, plans, cfg, args.seed)
    if args.trials > 1:
        more = [run.estimate] + [run_trial(plans, system, sch, rng, args.mode).estimate for _ in range(args.trials - 1)]
        report["trials"] = _trial_summary(more, report["exact_Z"], args.eps)
    reports.write_text(reports.to_json(report), args.out)
    return EXIT_OK


def cmd_walk_analyze(args) -> int:
    cap = WALK_CAP if args.cap_amplitudes == DEFAULT_CAP else args.cap_amplitudes
    if args.chain is not None:
        text = args.chain.read_text().replace(",", " ")
        try:
            rows = [[float(v) for v in line.split()] for line in text.splitlines() if line.strip() and not line.startswith("#")]
            chain = TransitionMatrix.from_array(np.array(rows))
        except ValueError as exc:
            raise ConfigError(f"bad chain file: {exc}") from exc
    else:
        system = _system(args)
        if args.beta is None:
            raise ConfigError("--beta is required")
        chain = metropolis_chain(system, args.beta)
    chain_spectrum(chain)  # raises on irreversible input before the walk is built
    spec = walk_spectrum(build_walk(chain, cap=cap))
    reports.write_text(spectrum_csv(spec), args.out)
    ok = spec.gap_relation_holds()
    print(f"phase gap {reports.fmt(spec.phase_gap)}, 2*sqrt(gap) {reports.fmt(2 * math.sqrt(spec.gap))}")
    print(f"Δ ≥ 2√δ: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_GUARANTEE


def cmd_bench(args) -> int:
    system = _system(args)
    base = _schedule(args, system)
    rows, eps_used, cl, qu = [], [], [], []
    for factor in args.refine:
        if factor < 1 or factor != int(factor):
            raise ConfigError("refinement factors must be positive integers")
        sch = base.refine(int(factor))
        for eps in args.eps_list:
            c = classical_cost(system, sch, eps)
            q = quantum_cost(sch, eps)
            rows.append((eps, sch.length, c, q))
            if factor == args.refine[0]:
                eps_used.append(eps)
                cl.append(c)
                qu.append(q)
    reports.write_text(reports.to_csv(["eps", "ell", "classical_steps", "quantum_queries"], rows), args.out)
    if len(eps_used) > 1:
        sc, sq = separation_slopes(eps_used, cl, qu)
        print(f"slope classical {sc:.3f}, quantum {sq:.3f}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "exact": cmd_exact,
    "schedule": cmd_schedule,
    "classical": cmd_classical,
    "quantum": cmd_quantum,
    "walk-analyze": cmd_walk_analyze,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (GuaranteeError, NotReversibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARANTEE
    except (ConfigError, ValueError, OverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
