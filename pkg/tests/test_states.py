import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bimetro._errors import InvalidBudget, InvalidState, NonIntegerOccupation, TruncationExceeded, VarianceTooSmall
from bimetro.bounds import max_qfi
from bimetro.circuit import CircuitSpec, generator, generator_from_coefficients
from bimetro.fock import mode_rotate, number_moments, probabilities, qfi_pure
from bimetro.states import (
    CONSTRUCTORS,
    NumberBudget,
    minimal_squeezed_cutoff,
    noon,
    physical_input,
    poissonian_cat,
    poissonian_cat_weights,
    quasi_noon,
    quasi_noon_occupations,
    quasi_noon_rounded,
    schrodinger_cat,
    sigma,
    squeezed_vacuum_fock,
)

ANTISYMMETRIC = generator_from_coefficients(1.0, -1.0, 0j)


def test_budget_validation():
    with pytest.raises(InvalidBudget):
        NumberBudget(0.0, 1.0)
    with pytest.raises(InvalidBudget):
        NumberBudget(2.0, -0.1)
    assert NumberBudget(4.0, 9.0).delta_n == 3.0


@given(st.floats(0.1, 100.0), st.floats(0.0, 1000.0))
def test_sigma_roots(n, var):
    pair = sigma(NumberBudget(n, var))
    s = 1.0 + 2.0 * var / n**2
    assert pair.sigma_plus * pair.sigma_minus == pytest.approx(1.0)
    assert pair.sigma_plus + pair.sigma_minus == pytest.approx(2.0 * s, rel=1e-12)
    assert pair.sigma_plus >= 1.0 >= pair.sigma_minus


def test_noon_state():
    state = noon(3, phase=0.4)
    assert state.amplitude(3, 0) == pytest.approx(1 / np.sqrt(2))
    assert state.amplitude(0, 3) == pytest.approx(np.exp(0.4j) / np.sqrt(2))
    assert qfi_pure(state, ANTISYMMETRIC) == pytest.approx(36.0)
    for bad in (0, 2.5, -1):
        with pytest.raises(InvalidState):
            noon(bad)


def test_quasi_noon_reference_budget():
    # N = 4, DeltaN^2 = 2 gives sigma+- = 2, 1/2 and occupations 6 and 3
    budget = NumberBudget(4.0, 2.0)
    assert quasi_noon_occupations(budget) == pytest.approx((6.0, 3.0))
    state = quasi_noon(budget)
    moments = number_moments(state)
    assert moments.mean_m == pytest.approx(2.0)
    assert moments.mean_n == pytest.approx(2.0)
    assert moments.mean_total == pytest.approx(4.0)
    assert moments.var_total == pytest.approx(2.0)
    assert qfi_pure(state, ANTISYMMETRIC) == pytest.approx(72.0, rel=1e-12)


def test_quasi_noon_without_variance_is_noon():
    state = quasi_noon(NumberBudget(4.0, 0.0))
    assert set(state.amplitudes) == {(4, 0), (0, 4)}
    assert qfi_pure(state, ANTISYMMETRIC) == pytest.approx(64.0)


@pytest.mark.parametrize(
    "n, var",
    [(4.0, 2.0), (8.0, 8.0), (4.0, 0.0), (3.0, 3.0)],
)
@pytest.mark.parametrize("eps", [(1.0, -1.0), (1.0, 1.0), (1.0, 0.0), (2.0, -0.5), (-1.5, 0.5)])
def test_quasi_noon_saturates_the_bound(n, var, eps):
    budget = NumberBudget(n, var)
    state = quasi_noon(budget)
    gen = generator_from_coefficients(eps[0], eps[1], 0j)
    assert qfi_pure(state, gen) == pytest.approx(max_qfi(budget, gen.eps), rel=1e-10)


def test_quasi_noon_rejects_fractional_occupations():
    with pytest.raises(NonIntegerOccupation):
        quasi_noon(NumberBudget(2.0, 4.0))


def test_rounded_quasi_noon_reports_the_realised_budget(caplog):
    budget = NumberBudget(2.0, 4.0)
    with caplog.at_level(logging.WARNING, logger="bimetro"):
        state, realized = quasi_noon_rounded(budget)
    moments = number_moments(state)
    assert realized.n_mean == pytest.approx(moments.mean_total)
    assert realized.var == pytest.approx(moments.var_total)
    assert "rounded" in caplog.text


def test_rounded_quasi_noon_is_exact_on_integer_budgets():
    budget = NumberBudget(4.0, 2.0)
    state, realized = quasi_noon_rounded(budget)
    assert realized.n_mean == pytest.approx(4.0)
    assert realized.var == pytest.approx(2.0)


def test_poissonian_cat_weights():
    mu_plus, mu_minus, mean_plus, mean_minus = poissonian_cat_weights(NumberBudget(2.0, 4.0))
    assert mu_plus + mu_minus == pytest.approx(1.0)
    root = np.sqrt(2.0 / 6.0)
    assert mu_plus == pytest.approx(0.5 * (1 + root))
    assert mu_plus * mean_plus == pytest.approx(1.0)
    assert mu_minus * mean_minus == pytest.approx(1.0)
    with pytest.raises(VarianceTooSmall):
        poissonian_cat_weights(NumberBudget(4.0, 2.0))


def test_poissonian_cat_reaches_the_bound():
    state = poissonian_cat(NumberBudget(2.0, 4.0))
    moments = number_moments(state)
    assert moments.mean_total == pytest.approx(2.0, rel=1e-7)
    assert moments.var_total == pytest.approx(4.0, rel=1e-6)
    assert moments.mean_m == pytest.approx(1.0, rel=1e-7)
    assert qfi_pure(state, ANTISYMMETRIC) == pytest.approx(32.0, rel=1e-6)
    assert state.truncation_loss <= 1e-8


def test_poissonian_cat_at_minimal_variance():
    # DeltaN^2 = N: equal weights, both branches Poisson with mean N
    state = poissonian_cat(NumberBudget(3.0, 3.0))
    assert qfi_pure(state, ANTISYMMETRIC) == pytest.approx(4.0 * (9.0 + 3.0), rel=1e-6)


def test_poissonian_cat_cutoff_too_small():
    with pytest.raises(TruncationExceeded):
        poissonian_cat(NumberBudget(2.0, 4.0), cutoff=3)


@pytest.mark.parametrize("phases", [(0.0, 0.0, 0.0, 0.0), (0.3, -1.1, 2.0, 0.7)])
def test_schrodinger_cat_matches_poissonian_cat(phases):
    budget = NumberBudget(2.0, 5.0)
    a = poissonian_cat(budget, phases)
    b = schrodinger_cat(budget, phases)
    assert a.cutoff == b.cutoff
    for key in set(a.amplitudes) | set(b.amplitudes):
        assert b.amplitude(*key) == pytest.approx(a.amplitude(*key), abs=1e-12)


@pytest.mark.parametrize("n", [1.0, 2.0, 4.0])
def test_squeezed_vacuum_statistics(n):
    r = float(np.arcsinh(np.sqrt(n)))
    state = squeezed_vacuum_fock(r)
    moments = number_moments(state)
    assert all(m % 2 == 0 and k == 0 for m, k in state.amplitudes)
    assert moments.mean_total == pytest.approx(n, rel=1e-5)
    assert moments.var_total == pytest.approx(2.0 * n * (n + 1.0), rel=1e-4)


def test_squeezed_vacuum_amplitude_signs():
    state = squeezed_vacuum_fock(0.5, cutoff=40)
    t = np.tanh(0.5)
    ratio = state.amplitude(2, 0) / state.amplitude(0, 0)
    assert ratio == pytest.approx(-t * np.sqrt(2) / 2)


def test_minimal_squeezed_cutoff():
    assert minimal_squeezed_cutoff(0.0, 1e-10) == 0
    cutoff = minimal_squeezed_cutoff(1.0, 1e-10)
    assert cutoff % 2 == 0
    squeezed_vacuum_fock(1.0, cutoff, tolerance=1e-10)
    with pytest.raises(TruncationExceeded):
        squeezed_vacuum_fock(1.0, cutoff - 2, tolerance=1e-10)


def test_physical_input_inverts_the_mixing():
    gen = generator(CircuitSpec.from_catalog("mach_zehnder"), 0.0)
    normal = quasi_noon(NumberBudget(4.0, 2.0))
    physical = physical_input(normal, gen)
    back = mode_rotate(physical, gen.mixing)
    for key, amp in normal.amplitudes.items():
        assert back.amplitude(*key) == pytest.approx(amp, abs=1e-10)
    assert qfi_pure(back, gen) == pytest.approx(18.0, rel=1e-9)


def test_constructor_registry():
    assert set(CONSTRUCTORS) == {"noon", "quasi-noon", "poisson-cat", "squeezed-vacuum", "coherent", "fock"}
    state = CONSTRUCTORS["fock"].build(m=2, n=1)
    assert dict(state.amplitudes) == {(2, 1): 1.0}
    coherent = CONSTRUCTORS["coherent"].build(alpha_plus=1.0 + 0.5j, alpha_minus=0j, cutoff=None)
    assert number_moments(coherent).mean_total == pytest.approx(1.25, rel=1e-7)


@settings(max_examples=50, deadline=None)
@given(st.floats(1.0, 20.0), st.floats(0.0, 50.0))
def test_rounded_quasi_noon_never_beats_the_bound(n, var):
    state, realized = quasi_noon_rounded(NumberBudget(n, var))
    for eps in ((1.0, -1.0), (1.0, 0.3)):
        assert qfi_pure(state, generator_from_coefficients(eps[0], eps[1], 0j)) <= max_qfi(realized, eps) * (1 + 1e-9) + 1e-9


@pytest.mark.parametrize("weight", [0.0, 0.3, 0.7, 1.0])
def test_mixed_cat_and_quasi_noon_tables_stay_optimal(weight):
    budget = NumberBudget(6.0, 12.0)
    cat = probabilities(poissonian_cat(budget, tolerance=1e-14))
    qn = probabilities(quasi_noon(budget))
    mixed = {key: weight * cat.get(key, 0.0) + (1.0 - weight) * qn.get(key, 0.0) for key in set(cat) | set(qn)}
    keys = list(mixed)
    p = np.array([mixed[k] for k in keys])
    m = np.array([k[0] for k in keys], dtype=float)
    n = np.array([k[1] for k in keys], dtype=float)

    assert p.sum() == pytest.approx(1.0, abs=1e-12)
    assert p @ m == pytest.approx(3.0, rel=1e-8)
    assert p @ n == pytest.approx(3.0, rel=1e-8)
    assert p @ (m**2) + p @ (n**2) == pytest.approx(48.0, rel=1e-8)
    assert p @ (m * n) == pytest.approx(0.0, abs=1e-8)
    antisymmetric = 4.0 * (p @ (m - n) ** 2 - (p @ (m - n)) ** 2)
    assert antisymmetric == pytest.approx(max_qfi(budget, (1.0, -1.0)), rel=1e-8)
    for eps in ((1.0, 1.0), (1.0, 0.0), (2.0, -0.5), (0.7, 0.3)):
        energy = eps[0] * m + eps[1] * n
        assert 4.0 * (p @ energy**2 - (p @ energy) ** 2) <= max_qfi(budget, eps) * (1 + 1e-8)
