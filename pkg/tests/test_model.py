import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpartition.errors import ConfigError, ScheduleError
from qpartition.model import (
    Schedule,
    System,
    boltzmann,
    build_schedule,
    exact_partition,
    ising,
    parse_model,
    physical_partition,
    random_ising,
)

from conftest import brute_force_z


def test_beta_zero_gives_state_count(rng):
    for n in (1, 2, 3, 4):
        assert exact_partition(random_ising(n, rng), 0.0) == 2**n


def test_single_free_spin_is_two_at_any_beta():
    s = ising(1)
    for beta in (0.0, 0.3, 5.0):
        assert exact_partition(s, beta) == pytest.approx(2.0, abs=1e-15)


def test_two_spin_unshifted_partition(two_spin):
    # brute force: ++ and -- have E = -1, +- and -+ have E = +1
    expected = 2 * math.e + 2 / math.e
    assert expected == pytest.approx(6.17232, abs=1e-5)
    assert physical_partition(two_spin, 1.0) == pytest.approx(expected, rel=1e-14)
    assert brute_force_z(two_spin.energies, 1.0) == pytest.approx(expected, rel=1e-14)


def test_two_spin_boltzmann(two_spin):
    z = 2 * math.e + 2 / math.e
    pi = boltzmann(two_spin, 1.0)
    # index bits: 0 -> ++, 1 -> -+, 2 -> +-, 3 -> --
    np.testing.assert_allclose(pi, [math.e / z, 1 / (math.e * z), 1 / (math.e * z), math.e / z], atol=1e-15)


def test_boltzmann_uniform_at_infinite_temperature(rng):
    s = random_ising(3, rng)
    np.testing.assert_allclose(boltzmann(s, 0.0), np.full(8, 1 / 8), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.floats(0, 3), st.integers(0, 2**31))
def test_shift_bookkeeping_and_normalisation(n, beta, seed):
    s = random_ising(n, np.random.default_rng(seed))
    assert boltzmann(s, beta).sum() == pytest.approx(1.0, abs=1e-12)
    assert physical_partition(s, beta) == pytest.approx(brute_force_z(s.energies, beta), rel=1e-10)
    assert s.shifted.min() == 0.0 and (s.shifted >= 0).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5))
def test_boltzmann_invariant_under_constant_shift(seed, c):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=8)
    a = boltzmann(System(e), 0.7)
    b = boltzmann(System(e + c), 0.7)
    np.testing.assert_allclose(a, b, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_partition_nonincreasing_in_beta(n, seed):
    s = random_ising(n, np.random.default_rng(seed))
    zs = [exact_partition(s, b) for b in np.linspace(0, 3, 13)]
    assert all(z1 <= z0 * (1 + 1e-14) for z0, z1 in zip(zs, zs[1:]))


def test_ising_global_flip_symmetry_without_field(rng):
    s = ising(3, [(0, 1, 0.4), (1, 2, -1.3), (0, 2, 0.2)])
    idx = np.arange(8)
    np.testing.assert_allclose(s.energies, s.energies[idx ^ 0b111])


def test_overflow_guard():
    s = System([0.0, 10.0])
    with pytest.raises(OverflowError):
        exact_partition(s, 100.0)


def test_state_space_cap():
    with pytest.raises(ConfigError):
        ising(13)


def test_schedule_beta_zero():
    s = ising(2, [(0, 1, 1.0)])
    sch = build_schedule(s, 0.0)
    assert sch.betas == (0.0,)
    assert sch.length == 0


def test_constant_energy_schedule_steps_uniformly():
    e0 = 1.7
    # reference energy 0 so that every shifted energy is e0 and Z(beta) = D exp(-beta e0)
    s = System(np.full(4, e0), offset=0.0)
    step = math.log(2) / e0
    sch = build_schedule(s, 5 * step, 0.5, 0.5)
    np.testing.assert_allclose(np.diff(sch.betas), step, atol=1e-9)
    np.testing.assert_allclose(sch.ratios(s), 0.5, atol=1e-9)


def test_four_spin_schedule_ratios_checked_by_oracle():
    s = ising(4, [(u, (u + 1) % 4, 1.0) for u in range(4)])
    sch = build_schedule(s, 2.0)
    assert sch.beta_final == 2.0
    zs = [brute_force_z(s.energies - s.energies.min(), b) for b in sch.betas]
    alphas = [z1 / z0 for z0, z1 in zip(zs, zs[1:])]
    assert all(0.5 - 1e-12 <= a <= 1.0 for a in alphas)
    inner = alphas[:-1]
    assert all(a <= 0.75 + 1e-9 for a in inner)


def test_schedule_rejects_bad_input(two_spin):
    with pytest.raises(ScheduleError):
        build_schedule(two_spin, -1.0)
    with pytest.raises(ValueError):
        build_schedule(two_spin, 1.0, 0.8, 0.6)
    with pytest.raises(ScheduleError):
        Schedule((0.5, 1.0))
    with pytest.raises(ScheduleError):
        Schedule((0.0, 1.0, 0.5))


def test_validate_flags_small_ratio():
    s = ising(3, [(0, 1, 2.0), (1, 2, 2.0)], [(0, 1.0)])
    with pytest.raises(ScheduleError):
        Schedule((0.0, 4.0)).validate(s)


def test_parse_model_grammar():
    text = """
    # ring of three
    spins 3
    edge 0 1 1.0
    edge 1 2 -0.5   # antiferro
    field 2 0.25
    """
    s = parse_model(text)
    ref = ising(3, [(0, 1, 1.0), (1, 2, -0.5)], [(2, 0.25)])
    np.testing.assert_array_equal(s.energies, ref.energies)


@pytest.mark.parametrize(
    "text",
    ["edge 0 1 1.0\nspins 2", "spins 2\nedge 0 5 1.0", "spins 2\nbogus 1", "", "spins x"],
)
def test_parse_model_errors(text):
    with pytest.raises(ConfigError):
        parse_model(text)
