import numpy as np
import pytest

from thzirs.channel import SubBand, absorption_coefficient, cascaded_gain, water_vapor_mixing_ratio
from thzirs.channel import Atmosphere
from thzirs.geometry import IrsPlacement, Scene, path_length
from thzirs.phase_opt import (
    PhaseProblem,
    effective_vector,
    exact_values,
    penalized_phase_update,
    price_update,
    sca_phase_optimize,
    sgd_solve,
    surrogate,
    surrogate_values,
)


def random_vectors(rng, k, n, scale=1.0):
    return scale * (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n)))


def test_surrogate_minorizes_everywhere():
    rng = np.random.default_rng(17)
    for _ in range(300):
        k = rng.integers(1, 5)
        n = rng.integers(1, 9)
        vectors = random_vectors(rng, k, n)
        anchor = rng.uniform(0, 2 * np.pi, n)
        probe = rng.uniform(0, 2 * np.pi, n)
        surr = surrogate(vectors, anchor)
        lo = surrogate_values(surr, probe)
        hi = exact_values(vectors, probe)
        assert np.all(lo <= hi + 1e-10 * np.maximum(1.0, np.abs(hi)))


def test_surrogate_tight_at_anchor():
    rng = np.random.default_rng(18)
    for _ in range(100):
        vectors = random_vectors(rng, 3, 6)
        anchor = rng.uniform(0, 2 * np.pi, 6)
        surr = surrogate(vectors, anchor)
        np.testing.assert_allclose(
            surrogate_values(surr, anchor),
            exact_values(vectors, anchor),
            rtol=1e-10,
            atol=1e-12,
        )


def test_penalized_phase_update_closed_form():
    rng = np.random.default_rng(19)
    vectors = random_vectors(rng, 4, 8)
    anchor = rng.uniform(0, 2 * np.pi, 8)
    surr = surrogate(vectors, anchor)
    prices = rng.uniform(0.1, 2.0, 4)
    angles, flat = penalized_phase_update(surr, prices)
    assert not flat
    np.testing.assert_allclose(angles, -np.angle(2.0 * (prices @ surr.theta)))
    # entrywise optimality: no single-entry angle perturbation can raise the
    # priced objective
    phi = np.exp(1j * angles)
    base = prices @ (2.0 * np.real(surr.theta @ phi))
    for n in range(8):
        for delta in (0.05, -0.05):
            bumped = phi.copy()
            bumped[n] *= np.exp(1j * delta)
            assert prices @ (2.0 * np.real(surr.theta @ bumped)) <= base + 1e-12


def test_penalized_phase_update_flat_prices():
    rng = np.random.default_rng(20)
    surr = surrogate(random_vectors(rng, 2, 5), np.zeros(5))
    angles, flat = penalized_phase_update(surr, np.zeros(2))
    assert flat
    np.testing.assert_allclose(angles, np.zeros(5))
    with pytest.raises(ValueError):
        penalized_phase_update(surr, np.array([-1.0, 0.5]))


def test_price_update_projects_to_nonnegative():
    prices = np.array([0.5, 0.1, 2.0])
    slacks = np.array([10.0, -1.0, 0.0])
    out = price_update(prices, slacks, 0.2)
    np.testing.assert_allclose(out, [0.0, 0.3, 2.0])


def test_effective_vector_matched_phase_power():
    scene = Scene(8.0, 5.0, 3.0, [0.0, 0.0, 2.0], [[4.0, 6.0, 1.0]])
    placement = IrsPlacement(2.0, 3.0, 12, 0.005)
    mu = water_vapor_mixing_ratio(Atmosphere())
    band = SubBand(300e9, 50e9, 1e-20)
    k = absorption_coefficient(band.center_hz, mu)
    e = effective_vector(band, 0.7, placement, scene, 0, k)
    g = cascaded_gain(band.center_hz, path_length(placement, scene, 0), k)
    np.testing.assert_allclose(e[0], np.sqrt(0.7) * g, rtol=1e-12)
    np.testing.assert_allclose(np.abs(e), np.sqrt(0.7) * abs(g), rtol=1e-12)
    # aligning phi with the steering restores the coherent sum
    phi = np.exp(-1j * np.angle(e))
    np.testing.assert_allclose(abs(e @ phi) ** 2, 0.7 * 144 * abs(g) ** 2, rtol=1e-10)


def test_sgd_reaches_feasible_targets():
    rng = np.random.default_rng(23)
    for _ in range(40):
        k = rng.integers(1, 4)
        n = rng.integers(2, 7)
        vectors = random_vectors(rng, k, n)
        witness = rng.uniform(0, 2 * np.pi, n)
        targets = 0.8 * exact_values(vectors, witness)
        surr = surrogate(vectors, witness)
        res = sgd_solve(surr, targets)
        assert res.feasible
        assert res.min_slack >= -1e-6 * max(targets.max(), 1e-300)


def test_sgd_certifies_impossible_targets():
    rng = np.random.default_rng(24)
    vectors = random_vectors(rng, 2, 5)
    # above the coherent optimum of every phase profile
    impossible = 2.0 * np.sum(np.abs(vectors), axis=1) ** 2
    surr = surrogate(vectors, np.zeros(5))
    res = sgd_solve(surr, impossible)
    assert res.infeasible
    assert not res.feasible


def test_sgd_keeps_best_iterate_not_last():
    rng = np.random.default_rng(25)
    vectors = random_vectors(rng, 3, 6)
    witness = rng.uniform(0, 2 * np.pi, 6)
    targets = 0.9 * exact_values(vectors, witness)
    surr = surrogate(vectors, witness)
    res = sgd_solve(surr, targets, max_iters=200)
    returned = float(np.min(surrogate_values(surr, res.phases.angles) - targets))
    np.testing.assert_allclose(returned, res.min_slack, rtol=1e-12, atol=1e-15)


def test_sca_trace_is_monotone_and_feasible():
    rng = np.random.default_rng(26)
    for _ in range(30):
        k = rng.integers(1, 4)
        n = rng.integers(2, 8)
        vectors = random_vectors(rng, k, n)
        witness = rng.uniform(0, 2 * np.pi, n)
        targets = 0.7 * exact_values(vectors, witness)
        anchor = rng.uniform(0, 2 * np.pi, n)
        problem = PhaseProblem(vectors=vectors, targets=targets, anchor=anchor)
        res = sca_phase_optimize(problem)
        trace = np.asarray(res.slack_trace)
        assert np.all(np.diff(trace) >= -1e-12 * max(1.0, abs(trace[0])))
        # never worse than the anchor it started from
        anchor_slack = float(np.min(exact_values(vectors, anchor) - targets))
        assert res.min_slack >= anchor_slack - 1e-12


def test_sca_strictly_feasible_anchor_single_pass():
    rng = np.random.default_rng(27)
    vectors = random_vectors(rng, 2, 6)
    anchor = rng.uniform(0, 2 * np.pi, 6)
    targets = 0.5 * exact_values(vectors, anchor)
    problem = PhaseProblem(vectors=vectors, targets=targets, anchor=anchor)
    res = sca_phase_optimize(problem)
    assert res.converged
    assert res.outer_iterations == 1
    assert res.feasible


def test_phase_problem_validation():
    with pytest.raises(ValueError):
        PhaseProblem(vectors=np.ones((2, 3), dtype=complex), targets=np.ones(3), anchor=np.zeros(3))
    with pytest.raises(ValueError):
        PhaseProblem(vectors=np.ones((2, 3), dtype=complex), targets=np.ones(2), anchor=np.zeros(4))
    with pytest.raises(ValueError):
        PhaseProblem(vectors=np.ones((1, 3), dtype=complex), targets=[-1.0], anchor=np.zeros(3))
