import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpartition.classical import classical_cost
from qpartition.errors import CapExceededError
from qpartition.markov import metropolis_chain
from qpartition.model import Schedule, build_schedule, ising, physical_partition, random_ising
from qpartition.qcore import ancilla_count, measure_estimation, phase_estimation
from qpartition.qestimate import (
    ObservableRotation,
    PipelineConfig,
    QueryLedger,
    WalkGrover,
    alpha_from_phase,
    build_rotation,
    compose_product,
    estimate_ratio_quantum,
    grover_plane,
    grover_rotation,
    median_runs,
    plan_levels,
    power_median,
    prepare_psi,
    project_zero,
    quantum_cost,
    quantum_fpras,
    run_report,
    run_trial,
    separation_slopes,
)
from qpartition.qprep import ApproxReflection, exact_sample
from qpartition.szegedy import build_walk


def test_rotation_trivial_cases(two_spin):
    rot = build_rotation(two_spin, 0.4, 0.4)
    np.testing.assert_allclose(rot.matrix(), np.eye(8), atol=1e-15)
    rot = build_rotation(two_spin, 0.0, 1.0)
    ground = int(np.argmin(two_spin.shifted))
    np.testing.assert_allclose(rot.blocks()[ground], np.eye(2), atol=1e-15)
    np.testing.assert_allclose(rot.matrix().T @ rot.matrix(), np.eye(8), atol=1e-14)
    with pytest.raises(ValueError):
        build_rotation(two_spin, 1.0, 0.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_projector_expectation_is_ratio(n, seed):
    s = random_ising(n, np.random.default_rng(seed))
    sch = build_schedule(s, 1.5)
    for b0, b1 in sch.steps():
        rot = build_rotation(s, b0, b1)
        psi = prepare_psi(exact_sample(s, b0).amplitudes, rot)
        p = project_zero(psi.size)
        assert np.vdot(psi, p @ psi).real == pytest.approx(rot.alpha, rel=1e-12)


def test_grover_rotation_on_its_plane(two_spin_field):
    s = two_spin_field
    sch = build_schedule(s, 1.0)
    for b0, b1 in sch.steps():
        rot = build_rotation(s, b0, b1)
        psi = prepare_psi(exact_sample(s, b0).amplitudes, rot)
        g = grover_rotation(psi).matrix
        plane = grover_plane(psi, rot.alpha)
        theta = math.acos(2 * rot.alpha - 1)
        restricted = plane.conj().T @ g @ plane
        expected = np.array([[math.cos(theta), math.sin(theta)], [-math.sin(theta), math.cos(theta)]])
        np.testing.assert_allclose(restricted, expected, atol=1e-8)
        # the plane is invariant
        np.testing.assert_allclose(plane @ restricted, g @ plane, atol=1e-12)
        got = np.sort(np.angle(np.linalg.eigvals(restricted)))
        np.testing.assert_allclose(got, [-theta, theta], atol=1e-8)


def test_alpha_one_is_fixed(two_spin):
    rot = build_rotation(two_spin, 0.7, 0.7)
    psi = prepare_psi(exact_sample(two_spin, 0.7).amplitudes, rot)
    np.testing.assert_allclose(grover_rotation(psi).matrix @ psi, psi, atol=1e-14)
    est = estimate_ratio_quantum(exact_sample(two_spin, 0.7), rot, 0.1)
    assert est.result.probabilities[0] == pytest.approx(1.0, abs=1e-12)
    assert est.estimates[0] == 1.0


def test_alpha_half_is_sharp():
    # y = (1, 0) under the uniform two-state sample gives alpha = 1/2 and theta = pi/2
    rot = ObservableRotation(np.array([1.0, 0.0]), 0.5)
    sample = np.full(2, 1 / math.sqrt(2))
    for eps_pe in (0.2, 0.1):
        est = estimate_ratio_quantum(sample, rot, eps_pe)
        assert est.t >= 5
        assert est.within_band_mass() >= 7 / 8


def test_phase_conversion():
    assert alpha_from_phase(math.pi / 3) == pytest.approx(0.75)
    assert alpha_from_phase(2 * math.pi - math.pi / 3) == pytest.approx(0.75)
    assert alpha_from_phase(0.0) == 1.0


@settings(max_examples=100)
@given(st.floats(0, 2 * math.pi), st.floats(0, 2 * math.pi))
def test_conversion_is_lipschitz(a, b):
    assert abs(alpha_from_phase(a) - alpha_from_phase(b)) <= 0.5 * abs(a - b) + 1e-15


@pytest.mark.parametrize("eps_pe", [0.2, 0.1, 0.05])
def test_perfect_mode_band_mass(eps_pe):
    rng = np.random.default_rng(8)
    for _ in range(5):
        s = random_ising(int(rng.integers(1, 4)), rng)
        sch = build_schedule(s, 2.0)
        for b0, b1 in sch.steps():
            est = estimate_ratio_quantum(exact_sample(s, b0), build_rotation(s, b0, b1), eps_pe)
            assert est.t == ancilla_count(eps_pe, 1 / 8)
            assert est.within_band_mass() >= 7 / 8


def test_median_runs_example():
    k = median_runs(1 / 20)
    assert k == 24 == math.ceil(8 * math.log(20))
    assert math.exp(-k / 8) <= 0.05


def test_power_median_certain_runs():
    assert power_median(lambda: 0.37, 0.1) == 0.37


def test_power_median_bernoulli():
    rng = np.random.default_rng(21)
    delta = 1 / 20
    trials = 10_000

    def run():
        return 1.0 if rng.random() < 0.75 else 50.0

    fails = sum(power_median(run, delta) != 1.0 for _ in range(trials))
    sigma = math.sqrt(delta * (1 - delta) / trials)
    assert fails / trials <= delta + 3 * sigma


@pytest.mark.parametrize("ell", [1, 3, 10])
@pytest.mark.parametrize("eps", [0.05, 0.2, 0.5])
def test_composition_error_bounds(ell, eps):
    alphas = np.linspace(0.55, 0.95, ell)
    z = 7.0 * math.prod(alphas)
    up = compose_product(alphas * (1 + eps / (2 * ell)), 7.0)
    down = compose_product(alphas * (1 - eps / (2 * ell)), 7.0)
    assert compose_product(alphas, 7.0) == pytest.approx(z, rel=1e-15)
    assert up / z - 1 <= math.exp(eps / 2) - 1 <= eps
    assert 1 - down / z <= ell * eps / (2 * ell) + 1e-15 <= eps + 1e-15


def test_infinite_temperature_returns_state_count(two_spin, rng):
    for mode in ("perfect", "walk"):
        run, plans, _ = quantum_fpras(two_spin, Schedule((0.0,)), 0.2, mode, rng)
        assert run.estimate == 4.0 and plans == []


def test_ledger_grows_and_doubles_roughly_fourfold():
    ledger = QueryLedger()
    ledger.charge(1, controlled_walk=5)
    assert ledger.to_dict()["per_level"][1]["controlled_walk"] == 5
    with pytest.raises(ValueError):
        ledger.charge(0, samples=-1)
    sch = Schedule((0.0, 0.25, 0.5, 0.75, 1.0))
    ratio = quantum_cost(sch.refine(2), 0.1) / quantum_cost(sch, 0.1)
    assert 3.5 < ratio < 5.5


def test_cost_slopes():
    s = ising(2, [(0, 1, 1.0)])
    sch = build_schedule(s, 1.0)
    eps = [0.4, 0.2, 0.1]
    sc, sq = separation_slopes(eps, [classical_cost(s, sch, e) for e in eps], [quantum_cost(sch, e) for e in eps])
    assert abs(sc + 2) <= 0.5 and abs(sq + 1) <= 0.25


def test_walk_grover_measure_matches_powering(two_spin_field, rng):
    s = two_spin_field
    sch = build_schedule(s, 1.0)
    b0, b1 = sch.steps()[1]
    rot = build_rotation(s, b0, b1)
    refl = ApproxReflection(build_walk(metropolis_chain(s, b0)), 3)
    for register in (3, 5):
        g = WalkGrover(rot, refl, register)
        psi = rng.normal(size=g.dim) + 1j * rng.normal(size=g.dim)
        psi /= np.linalg.norm(psi)
        a = measure_estimation(*g.spectral_measure(psi), 6).probabilities
        b = phase_estimation(g.operator(), psi, 6, method="correlation").probabilities
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_walk_grover_is_unitary(two_spin, rng):
    rot = build_rotation(two_spin, 0.0, 1.0)
    refl = ApproxReflection(build_walk(metropolis_chain(two_spin, 0.0)), 2)
    g = WalkGrover(rot, refl, 3)
    m = g.operator().to_matrix()
    np.testing.assert_allclose(m.conj().T @ m, np.eye(g.dim), atol=1e-12)


def test_walk_mode_levels_keep_three_quarters(two_spin_field):
    s = two_spin_field
    sch = build_schedule(s, 1.0)
    cfg = PipelineConfig(0.25, sch.length, "walk")
    plans = plan_levels(s, sch, cfg)
    assert len(plans) == sch.length == 3
    for plan in plans:
        assert plan.ratio.within_band_mass() >= 3 / 4
        assert plan.prep_deviation <= cfg.eps_S
        assert plan.run_walk_queries == plan.prep_queries + plan.ratio.controlled_calls


def test_walk_mode_cap(two_spin):
    sch = build_schedule(two_spin, 1.0)
    with pytest.raises(CapExceededError):
        quantum_fpras(two_spin, sch, 0.25, "walk", np.random.default_rng(0), cap=2**10)


def test_report_and_determinism(two_spin):
    sch = build_schedule(two_spin, 1.0)
    out = []
    for _ in range(2):
        run, plans, cfg = quantum_fpras(two_spin, sch, 0.2, "perfect", np.random.default_rng(7))
        out.append(run_report(two_spin, sch, run, plans, cfg, 7))
    assert out[0] == out[1]
    assert out[0]["exact_Z"] == pytest.approx(physical_partition(two_spin, 1.0))
    assert out[0]["ledger"]["controlled_reflections"] == cfg.k * (2**cfg.t - 1) * sch.length


def test_single_spin_perfect_success_rate():
    s = ising(1, fields=[(0, 0.8)])
    sch = build_schedule(s, 1.0)
    cfg = PipelineConfig(0.2, sch.length)
    plans = plan_levels(s, sch, cfg)
    rng = np.random.default_rng(13)
    z = physical_partition(s, 1.0)
    hits = sum(abs(run_trial(plans, s, sch, rng, "perfect").estimate - z) <= 0.2 * z for _ in range(200))
    assert hits >= 0.72 * 200
