"""
Brute-force verifiers, independent of the closed forms they check.

Provides:
- fd_generator: the generator from a finite-difference derivative of the
  single-particle unitary
- sample_constrained_distribution / sample_constrained_batch: random
  occupation tables with prescribed number mean and variance
- variance_by_operator and qfi_by_state_derivative: the QFI without moment
  formulas
- run_checks: the cross-check suite behind ``bimetro verify``
"""

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np
from scipy import optimize, special

from bimetro import _config
from bimetro._errors import BimetroError, InfeasibleGrid
from bimetro._logger import logger
from bimetro.bounds import max_qfi, noon_qfi, special_case_qfi
from bimetro.circuit import (
    Affine,
    CircuitSpec,
    GeneratorSpectrum,
    generator,
    generator_from_coefficients,
    generator_from_matrix,
    transfer_matrix,
)
from bimetro.fock import TwoModeFockState, mode_rotate, qfi_pure
from bimetro.gaussian import (
    GaussianPureState,
    UnitaryAngles,
    coherent_state,
    covariance_qfi,
    gaussian_number_moments,
    gaussian_qfi,
    optimal_gaussian,
    to_covariance,
)
from bimetro.states import (
    NumberBudget,
    minimal_squeezed_cutoff,
    noon,
    physical_input,
    poissonian_cat,
    quasi_noon,
    quasi_noon_occupations,
    sigma,
    squeezed_vacuum_fock,
)

logger.debug(f"Loading module {__name__}.")

__all__ = [
    "CheckResult",
    "ConstrainedDistribution",
    "FAULTS",
    "distribution_energy_variance",
    "fd_generator",
    "qfi_by_state_derivative",
    "random_circuit",
    "run_checks",
    "sample_constrained_batch",
    "sample_constrained_distribution",
    "variance_by_operator",
]

FAULTS = ("eps-sign-flip",)


@dataclass(frozen=True, eq=False)
class ConstrainedDistribution:
    """
    Occupation table P_{m,n} on a bounded grid with prescribed number mean
    and variance; ``residuals`` are the absolute errors of both.
    """

    probs: Mapping
    budget: NumberBudget
    residuals: tuple

    def energy_variance(self, eps: Sequence[float]) -> float:
        ep, em = (float(e) for e in eps)
        energy = np.array([ep * m + em * n for m, n in self.probs])
        p = np.array(list(self.probs.values()))
        mean = p @ energy
        return float(p @ (energy - mean) ** 2)


@dataclass(frozen=True)
class CheckResult:
    group: str
    name: str
    passed: bool
    value: float
    expected: float
    tolerance: float
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def fd_generator(spec: CircuitSpec, phi: float, step: float = 1e-5) -> GeneratorSpectrum:
    """
    Generator i U^dag dU/dphi from a central difference of the single-particle
    unitary, Hermitised before diagonalisation.
    """
    if not 1e-8 <= step <= 1e-3:
        raise ValueError(f"Finite-difference step must lie in [1e-8, 1e-3], got {step}")
    u = transfer_matrix(spec, phi).matrix()
    du = (transfer_matrix(spec, phi + step).matrix() - transfer_matrix(spec, phi - step).matrix()) / (2.0 * step)
    return generator_from_matrix(1j * u.conj().T @ du)


def random_circuit(rng: np.random.Generator, slope: float = 2.0) -> CircuitSpec:
    """
    Circuit with random affine angle functions.
    """
    functions = [Affine(rng.uniform(-np.pi, np.pi), rng.uniform(-slope, slope)) for _ in range(4)]
    return CircuitSpec(*functions)


def _check_feasible(budget: NumberBudget, grid_max: int) -> None:
    n, second = budget.n_mean, budget.n_mean**2 + budget.var
    # on [0, S] the second moment at mean N is at most S N
    if n > grid_max or second > grid_max * n * (1.0 + 1e-12):
        raise InfeasibleGrid(
            f"No distribution on totals 0..{grid_max} has N={n} and DeltaN^2={budget.var}; enlarge the grid."
        )


def _quasi_noon_marginal(budget: NumberBudget, grid_max: int) -> np.ndarray:
    # two-point marginal of the quasi-NOON state, spread over neighbouring totals
    target = np.zeros(grid_max + 1)
    pair = sigma(budget)
    weight_plus = 1.0 / (1.0 + pair.sigma_plus)
    for occ, weight in zip(quasi_noon_occupations(budget), (weight_plus, 1.0 - weight_plus)):
        if occ >= grid_max:
            target[grid_max] += weight
            continue
        low = int(np.floor(occ))
        frac = occ - low
        target[low] += weight * (1.0 - frac)
        if frac > 0:
            target[low + 1] += weight * frac
    return target


def _tilt_row(
    q: np.ndarray,
    features: np.ndarray,
    target: np.ndarray,
    gtol: float,
    max_iterations: int,
) -> np.ndarray:
    """
    Closest distribution to ``q`` in relative entropy with the moments
    ``features @ p = target``: p ~ q exp(lam . features), with lam minimising
    the convex dual log Z(lam) - lam . target.
    """
    with np.errstate(divide="ignore"):
        log_q = np.log(q)

    def weights(lam):
        logits = log_q + lam @ features
        return np.exp(logits - special.logsumexp(logits))

    def dual(lam):
        return special.logsumexp(log_q + lam @ features) - lam @ target

    def gradient(lam):
        return features @ weights(lam) - target

    def hessian(lam):
        p = weights(lam)
        centred = features - (features @ p)[:, None]
        return (centred * p) @ centred.T

    result = optimize.minimize(
        dual,
        np.zeros(len(target)),
        jac=gradient,
        hess=hessian,
        method="trust-exact",
        options={"gtol": gtol, "maxiter": max_iterations},
    )
    return weights(result.x)


def _tilt_marginals(
    q: np.ndarray,
    budget: NumberBudget,
    max_iterations: int,
    tolerance: float,
) -> np.ndarray:
    """
    Tilt every row of ``q`` onto {sum p = 1, E[s] = N, E[s^2] = N^2 + DeltaN^2}.
    Moments are matched on s / grid_max to keep the dual well scaled.

    Raises:
        InfeasibleGrid: a row misses the moments by more than ``tolerance``
            (relative) after ``max_iterations`` Newton steps.
    """
    grid_max = q.shape[1] - 1
    x = np.arange(grid_max + 1, dtype=float) / grid_max
    features = np.vstack([x, x**2])
    second = budget.n_mean**2 + budget.var
    target = np.array([budget.n_mean / grid_max, second / grid_max**2])
    scale = np.array([max(1.0, budget.n_mean) / grid_max, max(1.0, second) / grid_max**2])
    gtol = 1e-3 * tolerance * float(np.min(scale))

    out = np.empty_like(q)
    for k, row in enumerate(q):
        out[k] = _tilt_row(row, features, target, gtol, max_iterations)
    error = np.max(np.abs(out @ features.T - target) / scale, axis=1)
    unconverged = int(np.count_nonzero(error > tolerance))
    if unconverged:
        raise InfeasibleGrid(
            f"Moment matching left {unconverged} rows off by up to {float(np.max(error)):.3g} "
            f"after {max_iterations} iterations."
        )
    logger.debug(f"Oracle: {len(q)} marginals matched, worst relative residual {float(np.max(error)):.3g}.")
    return out


def _edge_split(marginal: np.ndarray, n_mean: float) -> np.ndarray:
    """
    Put the largest totals on the m axis until E[m] = N / 2, the rest on the
    n axis, splitting the boundary total between both.
    """
    grid_max = marginal.shape[0] - 1
    table = np.zeros((grid_max + 1, grid_max + 1))
    remaining = 0.5 * n_mean
    for s in range(grid_max, -1, -1):
        mass = marginal[s]
        if mass == 0:
            continue
        if s == 0:
            table[0, 0] += mass
            continue
        to_m = min(mass, remaining / s) if remaining > 0 else 0.0
        table[s, 0] += to_m
        table[0, s] += mass - to_m
        remaining -= to_m * s
    return table


def sample_constrained_batch(
    budget: NumberBudget,
    grid_max: int,
    count: int,
    seed: int,
    bias: float = 0.0,
    max_iterations: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> np.ndarray:
    """
    ``count`` random tables P[k, m, n] on m + n <= ``grid_max`` with number
    mean N and variance DeltaN^2.

    The total-number marginal is drawn around N and exponentially tilted
    onto the moment constraints; each total s is then split at random over
    the cells (m, s - m). ``bias`` in [0, 1] pulls both steps toward the quasi-NOON
    pattern (two totals, all weight on the axes).

    Raises:
        InfeasibleGrid: the grid cannot carry the budget, or the moment
            matching does not converge.
    """
    if not 0.0 <= bias <= 1.0:
        raise ValueError(f"bias must lie in [0, 1], got {bias}")
    settings = _config.config("bimetro")
    if max_iterations is None:
        max_iterations = int(settings["sampler_max_iterations"])
    if tolerance is None:
        tolerance = float(settings["sampler_tolerance"])
    _check_feasible(budget, grid_max)
    rng = np.random.default_rng(seed)
    s = np.arange(grid_max + 1, dtype=float)

    if budget.var == 0:
        if abs(budget.n_mean - round(budget.n_mean)) > 1e-12:
            raise InfeasibleGrid(f"Zero variance needs an integer mean, got N={budget.n_mean}")
        marginals = np.zeros((count, grid_max + 1))
        marginals[:, int(round(budget.n_mean))] = 1.0
    else:
        width2 = budget.var + 1.0
        envelope = np.exp(-((s - budget.n_mean) ** 2) / (2.0 * width2))
        marginals = envelope * rng.uniform(0.05, 1.0, size=(count, grid_max + 1))
        marginals /= marginals.sum(axis=1, keepdims=True)
        if bias > 0:
            marginals = (1.0 - bias) * marginals + bias * _quasi_noon_marginal(budget, grid_max)
        marginals = _tilt_marginals(marginals, budget, max_iterations, tolerance)

    tables = np.zeros((count, grid_max + 1, grid_max + 1))
    for total in range(grid_max + 1):
        m = np.arange(total + 1)
        weights = rng.gamma(1.0, size=(count, total + 1))
        weights /= weights.sum(axis=1, keepdims=True)
        tables[:, m, total - m] = (1.0 - bias) * marginals[:, [total]] * weights
    if bias > 0:
        for k in range(count):
            tables[k] += bias * _edge_split(marginals[k], budget.n_mean)
    return tables


def sample_constrained_distribution(
    budget: NumberBudget,
    grid_max: int = 30,
    seed: Optional[int] = None,
    bias: float = 0.0,
) -> ConstrainedDistribution:
    """
    A single constrained random table; deterministic given ``seed``.
    """
    if seed is None:
        seed = _config.default_seed()
    table = sample_constrained_batch(budget, grid_max, 1, seed, bias=bias)[0]
    m, n = np.nonzero(table > 0)
    probs = {(int(i), int(j)): float(table[i, j]) for i, j in zip(m, n)}
    total = m + n
    p = table[m, n]
    mean = float(p @ total)
    var = float(p @ (total - mean) ** 2)
    return ConstrainedDistribution(
        probs=MappingProxyType(probs),
        budget=budget,
        residuals=(abs(mean - budget.n_mean), abs(var - budget.var)),
    )


def distribution_energy_variance(tables: np.ndarray, eps: Sequence[float]) -> np.ndarray:
    """
    Var[eps+ m + eps- n] for every table of a batch.
    """
    ep, em = (float(e) for e in eps)
    size = tables.shape[-1]
    m, n = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    energy = (ep * m + em * n).ravel()
    p = tables.reshape(tables.shape[0], -1)
    mean = p @ energy
    second = p @ energy**2
    return np.maximum(second - mean**2, 0.0)


def variance_by_operator(state: TwoModeFockState, gen: GeneratorSpectrum) -> float:
    """
    Var[H] by applying H = eps+ n+ + eps- n- to the amplitudes.
    """
    applied = {
        (m, n): (gen.eps_plus * m + gen.eps_minus * n) * c for (m, n), c in state.amplitudes.items()
    }
    second = sum(abs(c) ** 2 for c in applied.values())
    first = sum(np.conj(state.amplitudes[k]) * c for k, c in applied.items())
    return float(max(second - abs(first) ** 2, 0.0))


def qfi_by_state_derivative(
    state: TwoModeFockState,
    spec: CircuitSpec,
    phi: float,
    step: float = 1e-4,
) -> float:
    """
    4 (<d psi|d psi> - |<psi|d psi>|^2) for the physical-mode input ``state``
    sent through the circuit, with a central-difference derivative.
    """
    def evolved(x):
        return mode_rotate(state, transfer_matrix(spec, x).matrix())

    centre, ahead, behind = evolved(phi), evolved(phi + step), evolved(phi - step)
    keys = set(centre.amplitudes) | set(ahead.amplitudes) | set(behind.amplitudes)
    psi = np.array([centre.amplitude(*k) for k in keys])
    d_psi = np.array([ahead.amplitude(*k) - behind.amplitude(*k) for k in keys]) / (2.0 * step)
    overlap = np.vdot(psi, d_psi)
    return float(4.0 * (np.vdot(d_psi, d_psi).real - abs(overlap) ** 2))


def _result(group, name, value, expected, tolerance, relative=True, detail=""):
    scale = max(1.0, abs(expected)) if relative else 1.0
    passed = bool(np.isfinite(value) and abs(value - expected) <= tolerance * scale)
    return CheckResult(
        group=group,
        name=name,
        passed=passed,
        value=float(value),
        expected=float(expected),
        tolerance=float(tolerance),
        detail=detail,
    )


def _generator_checks(rng: np.random.Generator, samples: int) -> Iterator[CheckResult]:
    mz = generator(CircuitSpec.from_catalog("mach_zehnder"), 0.7)
    yield _result("generator", "mach_zehnder_b", abs(mz.b - 0.5j), 0.0, 1e-15, relative=False)
    yield _result("generator", "mach_zehnder_eps_plus", mz.eps_plus, 0.5, 1e-15)
    worst = 0.0
    for _ in range(max(1, samples // 10)):
        spec = random_circuit(rng)
        phi = rng.uniform(-np.pi, np.pi)
        worst = max(worst, float(np.max(np.abs(fd_generator(spec, phi).matrix() - generator(spec, phi).matrix()))))
    yield _result("generator", "finite_difference_vs_analytic", worst, 0.0, 1e-6, relative=False)


def _bound_checks(rng: np.random.Generator, samples: int, seed: int, eps_map) -> Iterator[CheckResult]:
    budget = NumberBudget(4.0, 2.0)
    true_eps = (1.0, -1.0)
    achieved = qfi_pure(quasi_noon(budget), generator_from_coefficients(*_coefficients(eps_map(true_eps))))
    yield _result("bound", "quasi_noon_achieves_max", achieved, max_qfi(budget, true_eps), 1e-10)

    cat = poissonian_cat(NumberBudget(2.0, 4.0))
    cat_qfi = qfi_pure(cat, generator_from_coefficients(*_coefficients(eps_map(true_eps))))
    yield _result("bound", "poisson_cat_achieves_max", cat_qfi, 32.0, 1e-6)

    worst = -np.inf
    tables = sample_constrained_batch(budget, 30, samples, seed)
    for eps in ((1.0, -1.0), (1.0, 1.0), (1.0, 0.0), (2.0, -0.5), (0.7, 0.3)):
        ratio = 4.0 * distribution_energy_variance(tables, eps_map(eps)) / max_qfi(budget, eps)
        worst = max(worst, float(np.max(ratio)))
    yield (
        CheckResult(
            group="bound",
            name="sampled_distributions_below_max",
            passed=bool(worst <= 1.0 + 1e-6),
            value=worst,
            expected=1.0,
            tolerance=1e-6,
            detail=f"{samples} tables on a 30x30 grid",
        )
    )

    biased = sample_constrained_batch(budget, 30, max(1, samples // 100), seed + 1, bias=0.999)
    best = float(np.max(4.0 * distribution_energy_variance(biased, eps_map(true_eps)))) / max_qfi(budget, true_eps)
    yield (
        CheckResult(
            group="bound",
            name="biased_samples_approach_max",
            passed=bool(best >= 0.99),
            value=best,
            expected=1.0,
            tolerance=0.01,
        )
    )


def _gaussian_checks(rng: np.random.Generator, samples: int, eps_map) -> Iterator[CheckResult]:
    worst = 0.0
    ceiling_ratio = 0.0
    for _ in range(max(1, samples // 10)):
        r_plus = rng.uniform(0.0, 1.5)
        state = GaussianPureState(
            r_plus=r_plus,
            r_minus=rng.uniform(0.0, r_plus),
            angles=UnitaryAngles(*rng.uniform(-np.pi, np.pi, size=4)),
            alpha=tuple(rng.normal(size=2) + 1j * rng.normal(size=2)),
        )
        eps = tuple(sorted(rng.uniform(-2.0, 2.0, size=2), key=abs, reverse=True))
        split = gaussian_qfi(state, eps, tolerance=np.inf)
        direct = covariance_qfi(to_covariance(state), eps)
        worst = max(worst, abs(split - direct) / max(1.0, abs(split)))
        mean, _ = gaussian_number_moments(state)
        ceiling_ratio = max(ceiling_ratio, split / (8.0 * eps[0] ** 2 * mean * (mean + 1.0)))
    yield _result("gaussian", "two_path_agreement", worst, 0.0, 1e-8, relative=False)
    yield (
        CheckResult(
            group="gaussian",
            name="below_gaussian_ceiling",
            passed=bool(ceiling_ratio <= 1.0 + 1e-8),
            value=float(ceiling_ratio),
            expected=1.0,
            tolerance=1e-8,
        )
    )
    for n in (1.0, 2.0, 4.0, 8.0):
        state, closed = optimal_gaussian(n, eps_map((1.0, -1.0)))
        yield _result("gaussian", f"optimal_qfi_N{n:g}", gaussian_qfi(state, (1.0, -1.0)), closed, 1e-10)
        mean, var = gaussian_number_moments(state)
        yield _result("gaussian", f"optimal_variance_N{n:g}", var, 2.0 * n * (n + 1.0), 1e-10)
        yield _result("gaussian", f"optimal_mean_N{n:g}", mean, n, 1e-10)


def _fock_gaussian_checks(eps_map) -> Iterator[CheckResult]:
    gen = generator_from_coefficients(*_coefficients(eps_map((1.0, -1.0))))
    for n in (1.0, 2.0, 4.0, 8.0):
        state, closed = optimal_gaussian(n, (1.0, -1.0))
        cutoff = minimal_squeezed_cutoff(state.r_plus, 1e-10)
        fock = squeezed_vacuum_fock(state.r_plus, cutoff, tolerance=1e-10)
        yield (
            _result("fock_gaussian", f"squeezed_vacuum_N{n:g}", qfi_pure(fock, gen), closed, 1e-4, detail=f"cutoff {cutoff}")
        )
    alpha = 1.3 - 0.4j
    coherent = coherent_state(alpha)
    yield (
        _result("fock_gaussian", "coherent_shot_noise", gaussian_qfi(coherent, (1.0, -1.0)), 4.0 * abs(alpha) ** 2, 1e-10)
    )
    for k in range(1, 13):
        yield _result("fock_gaussian", f"noon_heisenberg_N{k}", qfi_pure(noon(k), gen), noon_qfi(k, (1.0, -1.0)), 1e-12)

    spec = CircuitSpec.from_catalog("antisymmetric")
    physical = physical_input(quasi_noon(NumberBudget(4.0, 2.0)), generator(spec, 0.3))
    yield (
        _result("fock_gaussian", "state_derivative_quasi_noon", qfi_by_state_derivative(physical, spec, 0.3), 72.0, 1e-5)
    )
    for case in ("antisymmetric", "symmetric", "unbalanced"):
        budget = NumberBudget(4.0, 2.0)
        closed, _ = special_case_qfi(case, budget)
        yield (
            _result("fock_gaussian", f"special_case_{case}", closed, max_qfi(budget, generator(CircuitSpec.from_catalog(case), 0.0).eps), 1e-12)
        )


def _coefficients(eps: Sequence[float]) -> tuple:
    # diagonal generator with the given eigenvalues
    ep, em = eps
    return ep, em, 0j


def run_checks(
    seed: Optional[int] = None,
    samples: int = 10_000,
    fault: Optional[str] = None,
) -> list:
    """
    Run every cross-check and collect the results.

    Args:
        seed: seed for all random draws; the configured default when None.
        samples: number of constrained tables for the bound check; other
            random sweeps scale with it.
        fault: inject a known defect, one of ``FAULTS``, to confirm the
            checks can fail.
    """
    if seed is None:
        seed = _config.default_seed()
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"Unknown fault {fault!r}, expected one of {FAULTS}")
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")

    def eps_map(eps):
        ep, em = eps
        return (ep, -em) if fault == "eps-sign-flip" else (ep, em)

    rng = np.random.default_rng(seed)
    results = []
    groups = (
        ("generator", lambda: _generator_checks(rng, samples)),
        ("bound", lambda: _bound_checks(rng, samples, seed, eps_map)),
        ("gaussian", lambda: _gaussian_checks(rng, samples, eps_map)),
        ("fock_gaussian", lambda: _fock_gaussian_checks(eps_map)),
    )
    for group, check in groups:
        group_results = []
        try:
            for result in check():
                group_results.append(result)
        except BimetroError as e:
            logger.warning(f"Oracle: check group {group} raised after {len(group_results)} result(s): {e}")
            group_results.append(CheckResult(group=group, name="raised", passed=False, value=np.nan, expected=np.nan, tolerance=0.0, detail=str(e)))
        failed = [r.name for r in group_results if not r.passed]
        if failed:
            logger.warning(f"Oracle: {group} failed {len(failed)} check(s): {', '.join(failed)}")
        else:
            logger.info(f"Oracle: {group} passed {len(group_results)} check(s).")
        results.extend(group_results)
    return results
