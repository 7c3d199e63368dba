"""
Input states that saturate the maximal QFI at fixed mean and variance of the
total particle number.

Provides:
- NumberBudget, SigmaPair and the corner parameters sigma+-
- NOON, quasi-NOON (strict and rounded) and Poissonian Schrodinger-cat states
- the single-mode squeezed vacuum, in the Fock basis
- physical_input: from the normal-mode basis back to the physical ports

All constructors return states in the normal-mode basis c+- of a generator.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaln

from bimetro import _config
from bimetro._errors import InvalidBudget, InvalidState, NonIntegerOccupation, VarianceTooSmall
from bimetro._logger import logger
from bimetro.circuit import GeneratorSpectrum
from bimetro.fock import (
    TwoModeFockState,
    check_truncation,
    coherent,
    coherent_amplitudes,
    fock_state,
    from_amplitudes,
    mode_rotate,
)

logger.debug(f"Loading module {__name__}.")

__all__ = [
    "CONSTRUCTORS",
    "NumberBudget",
    "REQUIRED",
    "SigmaPair",
    "StateConstructor",
    "minimal_squeezed_cutoff",
    "noon",
    "physical_input",
    "poissonian_cat",
    "poissonian_cat_weights",
    "quasi_noon",
    "quasi_noon_occupations",
    "quasi_noon_rounded",
    "schrodinger_cat",
    "sigma",
    "squeezed_vacuum_fock",
]

_INTEGER_TOLERANCE = 1e-9


@dataclass(frozen=True)
class NumberBudget:
    """
    Mean ``n_mean`` = N and variance ``var`` = DeltaN^2 of the total particle
    number.
    """

    n_mean: float
    var: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.n_mean) or self.n_mean <= 0:
            raise InvalidBudget(f"Mean particle number must be positive, got {self.n_mean!r}")
        if not np.isfinite(self.var) or self.var < 0:
            raise InvalidBudget(f"Number variance must be nonnegative, got {self.var!r}")

    @property
    def delta_n(self) -> float:
        return float(np.sqrt(self.var))

    def to_json(self) -> dict:
        return {"n_mean": float(self.n_mean), "var": float(self.var)}


@dataclass(frozen=True)
class SigmaPair:
    sigma_plus: float
    sigma_minus: float


def sigma(budget: NumberBudget) -> SigmaPair:
    """
    Roots ``sigma+- = s +- sqrt(s^2 - 1)`` with ``s = 1 + 2 DeltaN^2 / N^2``.
    sigma- is taken as 1 / sigma+, the conjugate root, which avoids the
    cancellation in s - sqrt(s^2 - 1) for large s.
    """
    ratio = budget.var / budget.n_mean**2
    s = 1.0 + 2.0 * ratio
    # s^2 - 1 = 4 ratio (1 + ratio), exact for small ratios
    root = 2.0 * np.sqrt(ratio * (1.0 + ratio))
    sigma_plus = float(s + root)
    return SigmaPair(sigma_plus=sigma_plus, sigma_minus=1.0 / sigma_plus)


def noon(n: int, phase: float = 0.0) -> TwoModeFockState:
    """
    NOON state ``(|n, 0> + e^{i phase} |0, n>) / sqrt(2)``.
    """
    if int(n) != n or n < 1:
        raise InvalidState(f"A NOON state needs a positive integer particle number, got {n!r}")
    n = int(n)
    amp = 1.0 / np.sqrt(2.0)
    return from_amplitudes(
        {(n, 0): amp, (0, n): amp * np.exp(1j * phase)},
        cutoff=n,
        normalize=False,
    )


def quasi_noon_occupations(budget: NumberBudget) -> tuple:
    """
    Real-valued occupations ``N (1 + sigma+-) / 2`` of the two branches.
    """
    pair = sigma(budget)
    half = 0.5 * budget.n_mean
    return half * (1.0 + pair.sigma_plus), half * (1.0 + pair.sigma_minus)


def _quasi_noon_state(occ_plus: int, occ_minus: int, pair: SigmaPair, phase: float) -> TwoModeFockState:
    if occ_plus == occ_minus == 0:
        raise InvalidState("Both quasi-NOON branches are empty.")
    weight_plus = 1.0 / (1.0 + pair.sigma_plus)
    weight_minus = 1.0 / (1.0 + pair.sigma_minus)
    return from_amplitudes(
        {
            (occ_plus, 0): np.sqrt(weight_plus),
            (0, occ_minus): np.sqrt(weight_minus) * np.exp(1j * phase),
        },
        cutoff=max(occ_plus, occ_minus),
        normalize=False,
    )


def quasi_noon(budget: NumberBudget, phase: float = 0.0) -> TwoModeFockState:
    """
    Deformed NOON state

        sqrt(1 / (1 + sigma+)) |N (1 + sigma+) / 2, 0>
        + sqrt(1 / (1 + sigma-)) e^{i phase} |0, N (1 + sigma-) / 2>

    with E[m] = E[n] = N / 2 and Var[m + n] = DeltaN^2.

    Raises:
        NonIntegerOccupation: an occupation is not an integer; use
            ``quasi_noon_rounded`` or adjust the budget.
    """
    occ_plus, occ_minus = quasi_noon_occupations(budget)
    rounded = (round(occ_plus), round(occ_minus))
    if abs(occ_plus - rounded[0]) > _INTEGER_TOLERANCE or abs(occ_minus - rounded[1]) > _INTEGER_TOLERANCE:
        raise NonIntegerOccupation(
            f"Quasi-NOON occupations ({occ_plus!r}, {occ_minus!r}) for N={budget.n_mean}, "
            f"DeltaN^2={budget.var} are not integers."
        )
    return _quasi_noon_state(int(rounded[0]), int(rounded[1]), sigma(budget), phase)


def quasi_noon_rounded(budget: NumberBudget, phase: float = 0.0) -> tuple:
    """
    Quasi-NOON state with the occupations rounded to the nearest integers.

    Returns:
        The state and the NumberBudget it actually realises.
    """
    occ_plus, occ_minus = quasi_noon_occupations(budget)
    pair = sigma(budget)
    rounded_plus, rounded_minus = int(round(occ_plus)), int(round(occ_minus))
    state = _quasi_noon_state(rounded_plus, rounded_minus, pair, phase)

    weight_plus = 1.0 / (1.0 + pair.sigma_plus)
    weight_minus = 1.0 - weight_plus
    mean = weight_plus * rounded_plus + weight_minus * rounded_minus
    second = weight_plus * rounded_plus**2 + weight_minus * rounded_minus**2
    realized = NumberBudget(n_mean=mean, var=max(second - mean**2, 0.0))
    if realized != budget:
        logger.warning(
            f"States: quasi-NOON occupations rounded from ({occ_plus:.6g}, {occ_minus:.6g}) "
            f"to ({rounded_plus}, {rounded_minus}); realised N={realized.n_mean:.12g}, "
            f"DeltaN^2={realized.var:.12g}."
        )
    return state, realized


def poissonian_cat_weights(budget: NumberBudget) -> tuple:
    """
    Branch weights mu+- and Poisson means N / (2 mu+-) of the Poissonian cat.

    Raises:
        VarianceTooSmall: DeltaN^2 < N.
    """
    n, var = budget.n_mean, budget.var
    if var < n:
        raise VarianceTooSmall(
            f"Poissonian cat needs DeltaN^2 >= N, got DeltaN^2={var} < N={n}"
        )
    root = np.sqrt((var - n) / (n**2 + var - n))
    mu_plus = 0.5 * (1.0 + root)
    mu_minus = 0.5 * (1.0 - root)
    return mu_plus, mu_minus, n / (2.0 * mu_plus), n / (2.0 * mu_minus)


def _resolve_tolerance(tolerance: Optional[float]) -> float:
    if tolerance is None:
        return float(_config.config("bimetro", "truncation_tolerance"))
    return float(tolerance)


def _cat_truncation(budget: NumberBudget, cutoff: Optional[int], tolerance: Optional[float], what: str) -> tuple:
    mu_plus, mu_minus, mean_plus, mean_minus = poissonian_cat_weights(budget)
    tolerance = _resolve_tolerance(tolerance)
    if cutoff is None:
        # the branch with the larger Poisson mean dominates the tail
        cutoff = int(stats.poisson.isf(tolerance, max(mean_plus, mean_minus))) + 1
        logger.debug(f"States: {what} cutoff chosen as {cutoff}.")
    loss = mu_plus * float(stats.poisson.sf(cutoff, mean_plus)) + mu_minus * float(
        stats.poisson.sf(cutoff, mean_minus)
    )
    check_truncation(loss, tolerance, what=what)
    return mu_plus, mu_minus, mean_plus, mean_minus, int(cutoff), loss


def _poisson_probabilities(mean: float, cutoff: int) -> np.ndarray:
    return stats.poisson.pmf(np.arange(cutoff + 1), mean)


def poissonian_cat(
    budget: NumberBudget,
    phases: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
    cutoff: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> TwoModeFockState:
    """
    Optimal state with Poissonian branches,

        sqrt(mu p_0 + (1 - mu) q_0) |0, 0>
        + sum_{m>0} sqrt(mu p_m) e^{i (m dphi + phi0)} |m, 0>
        + sum_{n>0} sqrt((1 - mu) q_n) e^{i (n dphi~ + phi0~)} |0, n>

    where p and q are Poisson with means N / (2 mu+) and N / (2 mu-), mu = mu+.

    Args:
        budget: number mean and variance; DeltaN^2 >= N.
        phases: (dphi, phi0, dphi~, phi0~).
        cutoff: largest occupation kept in either branch; chosen from the
            tolerance when omitted.
        tolerance: largest acceptable discarded probability.
    """
    d_phi, phi0, d_phi_t, phi0_t = (float(p) for p in phases)
    mu_plus, mu_minus, mean_plus, mean_minus, cutoff, loss = _cat_truncation(
        budget, cutoff, tolerance, what="Poissonian cat"
    )

    p = _poisson_probabilities(mean_plus, cutoff)
    q = _poisson_probabilities(mean_minus, cutoff)
    k = np.arange(1, cutoff + 1)
    amplitudes = {(0, 0): np.sqrt(mu_plus * p[0] + mu_minus * q[0])}
    branch_plus = np.sqrt(mu_plus * p[1:]) * np.exp(1j * (k * d_phi + phi0))
    branch_minus = np.sqrt(mu_minus * q[1:]) * np.exp(1j * (k * d_phi_t + phi0_t))
    for j, (cp, cm) in enumerate(zip(branch_plus, branch_minus), start=1):
        amplitudes[(j, 0)] = cp
        amplitudes[(0, j)] = cm
    return from_amplitudes(amplitudes, cutoff=cutoff, normalize=True, truncation_loss=loss)


def schrodinger_cat(
    budget: NumberBudget,
    phases: Sequence[float] = (0.0, 0.0, 0.0, 0.0),
    cutoff: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> TwoModeFockState:
    """
    The Poissonian cat written as three coherent components,

        c0 |0, 0> + sqrt(mu) e^{i phi0} |alpha, 0> + sqrt(1 - mu) e^{i phi0~} |0, alpha~>

    with alpha = sqrt(N / 2 mu+) e^{i dphi}, alpha~ = sqrt(N / 2 mu-) e^{i dphi~}.
    Agrees with ``poissonian_cat`` amplitude by amplitude.
    """
    d_phi, phi0, d_phi_t, phi0_t = (float(p) for p in phases)
    mu_plus, mu_minus, mean_plus, mean_minus, cutoff, loss = _cat_truncation(
        budget, cutoff, tolerance, what="Schrodinger cat"
    )

    alpha = np.sqrt(mean_plus) * np.exp(1j * d_phi)
    alpha_t = np.sqrt(mean_minus) * np.exp(1j * d_phi_t)
    w_plus = np.sqrt(mu_plus) * np.exp(1j * phi0)
    w_minus = np.sqrt(mu_minus) * np.exp(1j * phi0_t)
    c0 = (
        np.sqrt(mu_plus * np.exp(-mean_plus) + mu_minus * np.exp(-mean_minus))
        - np.sqrt(mu_plus * np.exp(-mean_plus)) * np.exp(1j * phi0)
        - np.sqrt(mu_minus * np.exp(-mean_minus)) * np.exp(1j * phi0_t)
    )

    plus = w_plus * coherent_amplitudes(alpha, cutoff)
    minus = w_minus * coherent_amplitudes(alpha_t, cutoff)
    amplitudes = {(0, 0): c0 + plus[0] + minus[0]}
    for j in range(1, cutoff + 1):
        amplitudes[(j, 0)] = plus[j]
        amplitudes[(0, j)] = minus[j]
    return from_amplitudes(amplitudes, cutoff=cutoff, normalize=True, truncation_loss=loss)


def _squeezed_log_probabilities(r: float, kmax: int) -> np.ndarray:
    # log |c_{2k}|^2 for k = 0..kmax
    k = np.arange(kmax + 1)
    log_p = gammaln(2 * k + 1) - 2.0 * gammaln(k + 1) - 2.0 * k * np.log(2.0) - np.log(np.cosh(r))
    if r != 0:
        log_p = log_p + 2.0 * k * np.log(abs(np.tanh(r)))
    else:
        log_p[1:] = -np.inf
    return log_p


def minimal_squeezed_cutoff(r: float, tolerance: float, limit: int = 100_000) -> int:
    """
    Smallest even cutoff whose squeezed-vacuum truncation discards at most
    ``tolerance``.
    """
    if r == 0:
        return 0
    kmax = 16
    while 2 * kmax <= limit:
        p = np.exp(_squeezed_log_probabilities(r, kmax))
        tail = 1.0 - np.cumsum(p)
        hits = np.flatnonzero(tail <= tolerance)
        if hits.size:
            return int(2 * hits[0])
        kmax *= 2
    raise InvalidState(f"No cutoff below {limit} reaches tolerance {tolerance} at r={r}")


def squeezed_vacuum_fock(
    r: float,
    cutoff: Optional[int] = None,
    tolerance: Optional[float] = None,
    phase: float = 0.0,
) -> TwoModeFockState:
    """
    Single-mode squeezed vacuum in mode + and vacuum in mode -:

        c_{2k} = (-e^{i phase} tanh r)^k sqrt((2k)!) / (2^k k!) / sqrt(cosh r)

    The smallest even cutoff meeting the tolerance is used when ``cutoff`` is
    omitted.
    """
    r = float(r)
    if cutoff is None:
        cutoff = minimal_squeezed_cutoff(r, _resolve_tolerance(tolerance))
    if r == 0:
        return from_amplitudes({(0, 0): 1.0}, cutoff=cutoff, normalize=False)
    kmax = cutoff // 2
    log_p = _squeezed_log_probabilities(r, kmax)
    p = np.exp(log_p)
    loss = max(1.0 - float(np.sum(p)), 0.0)
    check_truncation(loss, tolerance, what="squeezed vacuum")

    k = np.arange(kmax + 1)
    sign = -np.sign(r) * np.exp(1j * phase)
    c = np.exp(0.5 * log_p) * sign**k
    amplitudes = {(int(2 * j), 0): c[j] for j in k if p[j] > 0}
    return from_amplitudes(amplitudes, cutoff=cutoff, normalize=True, truncation_loss=loss)


def physical_input(state: TwoModeFockState, gen: GeneratorSpectrum) -> TwoModeFockState:
    """
    Express a normal-mode state in the physical modes: ``a = mixing^dag c``.
    """
    return mode_rotate(state, gen.mixing.conj().T)


@dataclass(frozen=True)
class StateConstructor:
    """
    Command-line entry for a state family: the builder and its parameters as
    (name, converter, default) triples, in positional order. A default of
    ``REQUIRED`` marks a mandatory parameter.
    """

    name: str
    builder: Callable
    params: tuple

    def build(self, **kwargs) -> TwoModeFockState:
        return self.builder(**kwargs)


REQUIRED = object()


def _build_noon(n: int, phase: float) -> TwoModeFockState:
    return noon(n, phase)


def _build_quasi_noon(N: float, var: float, phase: float) -> TwoModeFockState:
    return quasi_noon(NumberBudget(N, var), phase)


def _build_poisson_cat(N: float, var: float, cutoff: Optional[int]) -> TwoModeFockState:
    return poissonian_cat(NumberBudget(N, var), cutoff=cutoff)


def _build_squeezed(r: float, cutoff: Optional[int]) -> TwoModeFockState:
    return squeezed_vacuum_fock(r, cutoff)


def _build_coherent(alpha_plus: complex, alpha_minus: complex, cutoff: Optional[int]) -> TwoModeFockState:
    if cutoff is None:
        mean = abs(alpha_plus) ** 2 + abs(alpha_minus) ** 2
        cutoff = int(stats.poisson.isf(_resolve_tolerance(None), mean)) + 1 if mean > 0 else 0
    return coherent(alpha_plus, alpha_minus, cutoff)


def _build_fock(m: int, n: int) -> TwoModeFockState:
    return fock_state(m, n)


CONSTRUCTORS = {
    entry.name: entry
    for entry in (
        StateConstructor("noon", _build_noon, (("n", int, REQUIRED), ("phase", float, 0.0))),
        StateConstructor(
            "quasi-noon",
            _build_quasi_noon,
            (("N", float, REQUIRED), ("var", float, 0.0), ("phase", float, 0.0)),
        ),
        StateConstructor(
            "poisson-cat",
            _build_poisson_cat,
            (("N", float, REQUIRED), ("var", float, REQUIRED), ("cutoff", int, None)),
        ),
        StateConstructor("squeezed-vacuum", _build_squeezed, (("r", float, REQUIRED), ("cutoff", int, None))),
        StateConstructor(
            "coherent",
            _build_coherent,
            (("alpha_plus", complex, REQUIRED), ("alpha_minus", complex, 0j), ("cutoff", int, None)),
        ),
        StateConstructor("fock", _build_fock, (("m", int, REQUIRED), ("n", int, 0))),
    )
}
