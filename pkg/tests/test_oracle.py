import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from bimetro._errors import InfeasibleGrid
from bimetro.bounds import max_qfi
from bimetro.circuit import CircuitSpec, generator, generator_from_coefficients
from bimetro.fock import from_amplitudes, qfi_pure
from bimetro.oracle import (
    FAULTS,
    distribution_energy_variance,
    fd_generator,
    qfi_by_state_derivative,
    random_circuit,
    run_checks,
    sample_constrained_batch,
    sample_constrained_distribution,
    variance_by_operator,
)
from bimetro.states import NumberBudget, noon, physical_input, quasi_noon


def test_fd_generator_matches_analytic(rng):
    for _ in range(20):
        spec = random_circuit(rng)
        phi = rng.uniform(-np.pi, np.pi)
        assert_allclose(fd_generator(spec, phi).matrix(), generator(spec, phi).matrix(), atol=1e-6)


@pytest.mark.parametrize("step", [1e-9, 1e-2])
def test_fd_step_range(step):
    with pytest.raises(ValueError):
        fd_generator(CircuitSpec.from_catalog("mach_zehnder"), 0.0, step=step)


def test_constrained_distribution_meets_the_budget():
    budget = NumberBudget(4.0, 2.0)
    dist = sample_constrained_distribution(budget, grid_max=30, seed=7)
    assert sum(dist.probs.values()) == pytest.approx(1.0)
    assert all(p >= 0 for p in dist.probs.values())
    assert dist.residuals[0] <= 1e-6
    assert dist.residuals[1] <= 1e-6 * (budget.n_mean**2 + budget.var)
    assert 4.0 * dist.energy_variance((1.0, -1.0)) <= max_qfi(budget, (1.0, -1.0)) * (1 + 1e-6)


def test_sampler_is_deterministic():
    budget = NumberBudget(3.0, 1.5)
    a = sample_constrained_batch(budget, 20, 5, seed=11)
    b = sample_constrained_batch(budget, 20, 5, seed=11)
    assert_array_equal(a, b)


def test_batch_moments_and_bound():
    budget = NumberBudget(4.0, 2.0)
    tables = sample_constrained_batch(budget, 30, 200, seed=3)
    s = np.add.outer(np.arange(31), np.arange(31))
    p = tables.reshape(200, -1)
    mean = p @ s.ravel()
    second = p @ (s.ravel() ** 2)
    assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert_allclose(mean, 4.0, atol=1e-6)
    assert_allclose(second - mean**2, 2.0, atol=1e-5)
    for eps in ((1.0, -1.0), (1.0, 1.0), (1.0, 0.0), (0.7, 0.3)):
        ratio = 4.0 * distribution_energy_variance(tables, eps) / max_qfi(budget, eps)
        assert np.max(ratio) <= 1.0 + 1e-6


@pytest.mark.parametrize(
    "budget, grid_max",
    [(NumberBudget(4.0, 2.0), 30), (NumberBudget(1.0, 0.5), 12), (NumberBudget(10.0, 40.0), 60), (NumberBudget(3.0, 1.5), 20)],
)
def test_marginals_hit_the_moments_exactly(budget, grid_max):
    count = 50
    tables = sample_constrained_batch(budget, grid_max, count, seed=17)
    s = np.add.outer(np.arange(grid_max + 1), np.arange(grid_max + 1)).ravel()
    p = tables.reshape(count, -1)
    second = budget.n_mean**2 + budget.var
    assert np.all(p >= 0)
    assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.max(np.abs(p @ s - budget.n_mean)) <= 1e-8 * max(1.0, budget.n_mean)
    assert np.max(np.abs(p @ s**2 - second)) <= 1e-8 * max(1.0, second)


def test_unreachable_moment_matching_raises():
    with pytest.raises(InfeasibleGrid, match="Moment matching"):
        sample_constrained_batch(NumberBudget(4.0, 2.0), 30, 3, seed=0, max_iterations=1, tolerance=1e-14)


def test_biased_samples_approach_the_maximum():
    budget = NumberBudget(4.0, 2.0)
    tables = sample_constrained_batch(budget, 30, 10, seed=5, bias=0.999)
    best = np.max(4.0 * distribution_energy_variance(tables, (1.0, -1.0)))
    assert best / 72.0 >= 0.99


def test_zero_variance_budget():
    tables = sample_constrained_batch(NumberBudget(3.0, 0.0), 10, 4, seed=1)
    totals = np.add.outer(np.arange(11), np.arange(11))
    assert np.all(tables[:, totals != 3] == 0)
    with pytest.raises(InfeasibleGrid):
        sample_constrained_batch(NumberBudget(2.5, 0.0), 10, 1, seed=1)


@pytest.mark.parametrize("budget, grid_max", [(NumberBudget(10.0, 1.0), 5), (NumberBudget(4.0, 100.0), 10)])
def test_infeasible_grids(budget, grid_max):
    with pytest.raises(InfeasibleGrid):
        sample_constrained_batch(budget, grid_max, 1, seed=0)


def test_bias_range():
    with pytest.raises(ValueError):
        sample_constrained_batch(NumberBudget(4.0, 2.0), 30, 1, seed=0, bias=1.5)


def test_operator_variance_matches_moment_formula():
    gen = generator_from_coefficients(1.3, -0.2, 0.4 - 0.1j)
    state = from_amplitudes({(3, 0): 1.0, (1, 2): 0.5j, (0, 5): -0.7, (2, 2): 0.2})
    assert 4.0 * variance_by_operator(state, gen) == pytest.approx(qfi_pure(state, gen), rel=1e-12)


@pytest.mark.parametrize("phi", [0.0, 0.9])
def test_state_derivative_of_noon_through_mach_zehnder(phi):
    spec = CircuitSpec.from_catalog("mach_zehnder")
    physical = physical_input(noon(4), generator(spec, phi))
    assert qfi_by_state_derivative(physical, spec, phi) == pytest.approx(16.0, rel=1e-6)


def test_state_derivative_of_quasi_noon():
    spec = CircuitSpec.from_catalog("antisymmetric")
    physical = physical_input(quasi_noon(NumberBudget(4.0, 2.0)), generator(spec, 0.3))
    assert qfi_by_state_derivative(physical, spec, 0.3) == pytest.approx(72.0, rel=1e-6)


def test_checks_pass_on_a_small_sample():
    results = run_checks(seed=1234, samples=200)
    failed = [r for r in results if not r.passed]
    assert not failed, [r.to_json() for r in failed]
    assert {r.group for r in results} == {"generator", "bound", "gaussian", "fock_gaussian"}


def test_injected_fault_is_caught():
    results = run_checks(seed=1234, samples=200, fault=FAULTS[0])
    failed_groups = {r.group for r in results if not r.passed}
    assert "bound" in failed_groups
    assert "fock_gaussian" in failed_groups


def test_check_arguments():
    with pytest.raises(ValueError):
        run_checks(seed=0, samples=10, fault="no-such-fault")
    with pytest.raises(ValueError):
        run_checks(seed=0, samples=0)


@pytest.mark.slow
def test_full_check_suite():
    results = run_checks(seed=20240601, samples=10_000)
    assert all(r.passed for r in results)


def test_checks_pass_with_the_default_seed():
    results = run_checks(seed=42, samples=100)
    assert not [r.name for r in results if not r.passed]


def test_raising_group_keeps_earlier_results(monkeypatch):
    def refuse(*args, **kwargs):
        raise InfeasibleGrid("grid refused")

    monkeypatch.setattr("bimetro.oracle.sample_constrained_batch", refuse)
    results = run_checks(seed=3, samples=50)
    bound = {r.name: r for r in results if r.group == "bound"}
    assert bound["quasi_noon_achieves_max"].passed
    assert bound["poisson_cat_achieves_max"].passed
    assert not bound["raised"].passed
    assert "INFEASIBLE_GRID" in bound["raised"].detail
    assert all(r.passed for r in results if r.group != "bound")
