import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpartition.errors import NotReversibleError
from qpartition.markov import (
    TransitionMatrix,
    chain_spectrum,
    detailed_balance_residual,
    dump_chain_csv,
    metropolis_chain,
    mixing_steps,
    random_reversible_chain,
    sample_chain,
    sample_chains,
    total_variation,
)
from qpartition.model import boltzmann, ising, random_ising


def test_single_spin_infinite_temperature():
    p = metropolis_chain(ising(1), 0.0)
    np.testing.assert_allclose(p.matrix, [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)
    np.testing.assert_allclose(p.pi, [0.5, 0.5], atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.floats(0, 3), st.integers(0, 2**31))
def test_metropolis_invariants(n, beta, seed):
    s = random_ising(n, np.random.default_rng(seed))
    p = metropolis_chain(s, beta)
    pi = boltzmann(s, beta)
    np.testing.assert_allclose(p.matrix.sum(axis=1), 1.0, atol=1e-14)
    assert (np.diag(p.matrix) >= 0.5 - 1e-15).all()
    assert np.abs(pi @ p.matrix - pi).max() < 1e-12
    assert detailed_balance_residual(p) < 1e-12
    assert chain_spectrum(p).eigenvalues.min() >= -1e-12


def test_only_single_flips_are_proposed():
    p = metropolis_chain(ising(3, [(0, 1, 1.0), (1, 2, 1.0)]), 0.7)
    for x in range(8):
        for y in range(8):
            if x != y and bin(x ^ y).count("1") != 1:
                assert p.matrix[x, y] == 0.0


def test_uniform_chain_spectrum():
    d = 6
    p = TransitionMatrix.from_array(np.full((d, d), 1 / d)).lazy()
    assert p.matrix[0, 0] == pytest.approx(0.5 + 0.5 / d)
    spec = chain_spectrum(p)
    np.testing.assert_allclose(spec.eigenvalues, [1.0] + [0.5] * (d - 1), atol=1e-14)
    assert spec.gap == pytest.approx(0.5)


def test_two_state_spectrum():
    spec = chain_spectrum(TransitionMatrix.from_array([[0.75, 0.25], [0.25, 0.75]]))
    np.testing.assert_allclose(spec.eigenvalues, [1.0, 0.5], atol=1e-15)
    assert spec.gap == pytest.approx(0.5)


def test_small_gap_is_flagged():
    eps = 1e-9
    p = TransitionMatrix.from_array([[1 - eps, eps], [eps, 1 - eps]])
    with pytest.warns(UserWarning):
        spec = chain_spectrum(p, delta_min=1e-6)
    assert spec.flagged and spec.gap == pytest.approx(2 * eps, rel=1e-6)


def test_irreversible_chain_rejected():
    # a biased three-cycle has uniform stationary law but circulating flow
    p = np.array([[0.1, 0.8, 0.1], [0.1, 0.1, 0.8], [0.8, 0.1, 0.1]])
    with pytest.raises(NotReversibleError):
        chain_spectrum(TransitionMatrix.from_array(p))


def test_mixing_steps_examples():
    assert mixing_steps(0.5, 1 / 8, 1 / 4) == 7 == math.ceil(2 * math.log(32))
    assert mixing_steps(0.25, 1 / 8, 1 / 4) == 14
    assert mixing_steps(0.5, 1.0, 1.0) == 0
    with pytest.raises(ValueError):
        mixing_steps(0.0, 0.1, 0.1)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**31), st.floats(1e-3, 0.2))
def test_mixing_bound_holds_by_matrix_powers(d, seed, dist):
    p = random_reversible_chain(d, np.random.default_rng(seed))
    steps = mixing_steps(chain_spectrum(p), dist, float(p.pi.min()))
    pt = np.linalg.matrix_power(p.matrix, steps)
    worst = max(total_variation(pt[x], p.pi) for x in range(d))
    assert worst <= dist


def test_sampling_edge_cases(rng):
    p = metropolis_chain(ising(2, [(0, 1, 1.0)]), 1.0)
    assert sample_chain(p, 3, 0, rng) == 3
    a = sample_chains(p, np.arange(4), 50, np.random.default_rng(9))
    b = sample_chains(p, np.arange(4), 50, np.random.default_rng(9))
    np.testing.assert_array_equal(a, b)


def test_long_run_matches_uniform_at_beta_zero():
    p = metropolis_chain(ising(3, [(0, 1, 1.0), (1, 2, 1.0)]), 0.0)
    rng = np.random.default_rng(2024)
    states = sample_chains(p, np.zeros(100_000, dtype=int), 40, rng)
    emp = np.bincount(states, minlength=8) / states.size
    assert total_variation(emp, np.full(8, 1 / 8)) < 0.02


def test_empirical_law_tracks_matrix_power():
    p = random_reversible_chain(5, np.random.default_rng(3))
    steps = 4
    states = sample_chains(p, np.full(200_000, 2), steps, np.random.default_rng(4))
    emp = np.bincount(states, minlength=5) / states.size
    exact = np.linalg.matrix_power(p.matrix, steps)[2]
    assert total_variation(emp, exact) < 0.01


def test_chain_csv_round_trip(tmp_path):
    p = random_reversible_chain(4, np.random.default_rng(0))
    spec = chain_spectrum(p)
    path = tmp_path / "chain.csv"
    dump_chain_csv(p, spec, path)
    text = path.read_text()
    values = [float(v) for line in text.splitlines() for v in line.split(",") if _is_number(v)]
    assert p.matrix[0, 0] in values and spec.eigenvalues[1] in values


def _is_number(v):
    try:
        float(v)
    except ValueError:
        return False
    return True
