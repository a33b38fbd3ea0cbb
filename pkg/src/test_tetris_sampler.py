# test_tetris_sampler.py
"""
Poisson-rotation sampler: schedules, attenuation, determinism and the
unbiasedness of the averaged draw against the time-ordered ODE solution.
"""
import math

import numpy as np
import pytest
from scipy import stats

from circuit_builder import GateCostModel
from pauli_core import PauliHamiltonian
from simulator import time_ordered_unitary
from symmetry_shift import split
from tetris_sampler import (
    Direction,
    SampledEvolution,
    SamplerConfig,
    SweepSchedule,
    attenuation_factor,
    expected_tqg,
    make_rng,
    sample_evolution,
)

# sum over H_I of |a_n| * 2 (weight - 1) for the bundled Hamiltonian
UNCONTROLLED_WEIGHTED_COST = 5.012432
MU_I = 0.933816


def test_make_rng_is_keyed_by_seed_and_stream():
    a = make_rng(3, 1, 2).random(5)
    assert np.array_equal(a, make_rng(3, 1, 2).random(5))
    assert not np.array_equal(a, make_rng(3, 2, 1).random(5))
    assert not np.array_equal(a, make_rng(4, 1, 2).random(5))


def test_schedules():
    linear, constant = SweepSchedule.linear(), SweepSchedule.constant()
    assert linear.w(0.0) == 0.0 and linear.w(1.0) == 1.0
    assert np.all(constant.w(np.linspace(0, 1, 5)) == 1.0)
    assert linear.zeta == 0.5 and constant.zeta == 1.0
    u = np.linspace(0.0, 1.0, 1000)
    for schedule in (linear, constant):
        assert np.max(np.abs(schedule.z_inverse(schedule.z(u)) - u)) <= 1e-12
    assert np.allclose(linear.z(u), u * u / 2)


def test_attenuation_values():
    assert attenuation_factor(0.9337, 0.5, 8.0, 0.1) == pytest.approx(0.830, abs=2e-3)
    assert attenuation_factor(0.9337, 1.0, 10.0, 0.1) == pytest.approx(0.628, abs=2e-3)
    assert attenuation_factor(0.9337, 0.5, 8.0, 1e-9) == pytest.approx(1.0)
    assert attenuation_factor(0.0, 0.5, 8.0, 0.1) == 1.0
    with pytest.raises(ValueError):
        attenuation_factor(1.0, 0.5, 8.0, math.pi / 2)
    with pytest.raises(ValueError):
        attenuation_factor(-1.0, 0.5, 8.0, 0.1)


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(8.0, 0.0)
    with pytest.raises(ValueError):
        SamplerConfig(0.0, 0.1)
    with pytest.raises(ValueError):
        SamplerConfig(8.0, 0.1, time_sign=2)
    assert SamplerConfig(8.0, 0.1, Direction.REVERSE, -1).direction_sign == 1


def test_draw_is_deterministic_and_well_formed(h3plus_split):
    config = SamplerConfig(8.0, 0.1, seed=17, stream_id=4)
    draw = sample_evolution(h3plus_split, SweepSchedule.linear(), config)
    again = sample_evolution(h3plus_split, SweepSchedule.linear(), config)
    assert draw == again
    assert draw.to_json() == again.to_json()
    assert SampledEvolution.from_json(draw.to_json()) == draw

    times = np.array([e.time for e in draw.events])
    assert np.all(np.diff(times) > 0.0)
    assert np.all((times >= 0.0) & (times <= 8.0))
    coefficients = h3plus_split.h_i.coefficients
    for event in draw.events:
        assert event.rotation_sign == np.sign(coefficients[event.term_index])
    assert draw.attenuation == attenuation_factor(h3plus_split.mu_i, 0.5, 8.0, 0.1)

    reverse = sample_evolution(h3plus_split, SweepSchedule.linear(),
                               SamplerConfig(8.0, 0.1, Direction.REVERSE, seed=17, stream_id=4))
    for event in reverse.events:
        assert event.rotation_sign == -np.sign(coefficients[event.term_index])


def test_mean_event_count(h3plus_split):
    expected = 0.5 * 8.0 * MU_I / math.sin(0.1)
    counts = np.array([
        sample_evolution(h3plus_split, SweepSchedule.linear(), SamplerConfig(8.0, 0.1, seed=2, stream_id=k)).event_count
        for k in range(2000)
    ])
    assert expected == pytest.approx(37.4, abs=0.05)
    assert abs(counts.mean() - expected) < 4.0 * math.sqrt(expected / len(counts))


def test_per_term_counts_are_poisson(h3plus_split):
    """Pooled per-term event counts against their Poisson means, and event times against w(u) = u."""
    n_draws, duration, tau = 3000, 8.0, 0.1
    coefficients = h3plus_split.h_i.coefficients
    counts = np.zeros(len(coefficients))
    times = []
    for k in range(n_draws):
        draw = sample_evolution(h3plus_split, SweepSchedule.linear(), SamplerConfig(duration, tau, seed=9, stream_id=k))
        for event in draw.events:
            counts[event.term_index] += 1
            times.append(event.time)

    expected = n_draws * np.abs(coefficients) * 0.5 * duration / math.sin(tau)
    statistic = float(np.sum((counts - expected) ** 2 / expected))
    assert stats.chi2.sf(statistic, df=len(coefficients)) > 1e-3
    assert stats.kstest(np.asarray(times) / duration, lambda u: u ** 2).pvalue > 1e-3


def test_empty_interaction_gives_diagonal_evolution():
    hamiltonian = PauliHamiltonian.from_dict(2, {"ZI": 0.3, "IZ": -0.2}, 0.1)
    parts = split(hamiltonian)
    draw = sample_evolution(parts, SweepSchedule.linear(), SamplerConfig(2.0, 0.1, seed=1))
    assert draw.event_count == 0
    assert draw.attenuation == 1.0
    expected = np.diag(np.exp(2.0j * hamiltonian.diagonal()))
    assert np.allclose(draw.unitary(parts), expected)


def test_time_sign_conjugates_real_hamiltonians(toy_hamiltonian):
    parts = split(toy_hamiltonian)
    forward = sample_evolution(parts, SweepSchedule.linear(), SamplerConfig(1.5, 0.3, seed=8))
    flipped = sample_evolution(parts, SweepSchedule.linear(), SamplerConfig(1.5, 0.3, time_sign=-1, seed=8))
    assert np.allclose(flipped.unitary(parts), forward.unitary(parts).conj(), atol=1e-12)


def test_adjoint_inverts_the_draw(toy_hamiltonian):
    parts = split(toy_hamiltonian)
    draw = sample_evolution(parts, SweepSchedule.linear(), SamplerConfig(1.5, 0.3, seed=8))
    product = draw.adjoint().unitary(parts) @ draw.unitary(parts)
    assert np.allclose(product, np.eye(4), atol=1e-12)


@pytest.mark.parametrize("direction", [Direction.FORWARD, Direction.REVERSE])
def test_average_draw_is_attenuated_exact_evolution(toy_hamiltonian, direction):
    parts = split(toy_hamiltonian)
    schedule = SweepSchedule.linear()
    total_time, tau, n = 1.0, 0.3, 4000
    mean = sum(
        sample_evolution(parts, schedule, SamplerConfig(total_time, tau, direction, seed=3, stream_id=k)).unitary(parts)
        for k in range(n)
    ) / n
    exact = time_ordered_unitary(parts, schedule, total_time)
    if direction is Direction.REVERSE:
        exact = exact.conj().T
    target = attenuation_factor(parts.mu_i, schedule.zeta, total_time, tau) * exact
    assert np.linalg.norm(mean - target, 2) < 0.05


def test_expected_tqg_formula(h3plus_split):
    single = split(PauliHamiltonian.from_dict(3, {"XYZ": -1.0}))
    tau = 0.5
    config = SamplerConfig(10.0 * math.sin(tau), tau)
    assert expected_tqg(single, SweepSchedule.constant(), config, GateCostModel()) == pytest.approx(40.0)

    sweep = SamplerConfig(8.0, 0.1)
    uncontrolled = expected_tqg(h3plus_split, SweepSchedule.linear(), sweep, GateCostModel())
    controlled = expected_tqg(h3plus_split, SweepSchedule.linear(), sweep, GateCostModel(), controlled=True)
    assert uncontrolled == pytest.approx(0.5 * 8.0 * UNCONTROLLED_WEIGHTED_COST / math.sin(0.1), rel=1e-6)
    assert uncontrolled == pytest.approx(200.83, abs=0.05)
    assert controlled - uncontrolled == pytest.approx(0.5 * 8.0 * h3plus_split.mu_i / math.sin(0.1), rel=1e-9)

    halved = expected_tqg(h3plus_split, SweepSchedule.linear(), SamplerConfig(8.0, 0.05), GateCostModel())
    assert halved / uncontrolled == pytest.approx(math.sin(0.1) / math.sin(0.05))
    assert halved / uncontrolled == pytest.approx(2.0, rel=0.01)
