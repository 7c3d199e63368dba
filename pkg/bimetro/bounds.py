"""
Closed-form bounds on the QFI at fixed mean and variance of the particle
number.

Provides:
- max_qfi and its generator-coefficient form, noon_qfi, cramer_rao
- the geometry of the admissible (Var[m], Var[n]) domain: corners, the
  bounding parabola and line, and h^2 = Var[E] / 4 along both
- the three special circuits and the Gaussian gap
"""

from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Callable, Sequence, Union

import numpy as np

from bimetro._errors import InvalidBudget, OutOfArc, ParseError, ZeroInformation
from bimetro._logger import logger
from bimetro.circuit import CircuitCatalog, GeneratorSpectrum
from bimetro.states import NumberBudget, sigma

logger.debug(f"Loading module {__name__}.")

__all__ = [
    "GaussianGap",
    "MaxQfi",
    "SpecialCase",
    "VariancePoint",
    "cramer_rao",
    "domain_corners",
    "gaussian_gap",
    "h2_corners",
    "h2_on_line",
    "h2_on_parabola",
    "line_residual",
    "max_qfi",
    "max_qfi_from_generator",
    "noon_qfi",
    "parabola_residual",
    "special_case_qfi",
]

_ARC_SLACK = 1e-12
_CAUCHY_SCHWARZ_SLACK = 1e-9


@dataclass(frozen=True)
class VariancePoint:
    """
    x = Var[m], y = Var[n], z = Cov[m, n] of the normal-mode occupations.
    """

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if self.x < 0 or self.y < 0:
            raise InvalidBudget(f"Negative variance in ({self.x}, {self.y})")
        if self.z**2 > self.x * self.y * (1.0 + _CAUCHY_SCHWARZ_SLACK) + _CAUCHY_SCHWARZ_SLACK:
            raise InvalidBudget(f"Covariance {self.z} exceeds sqrt(Var[m] Var[n])")

    @property
    def xi(self) -> float:
        return 0.5 * (self.x - self.y)


@dataclass(frozen=True)
class MaxQfi:
    """
    h^2 at the two corners of the domain and the resulting QFI. The maximum
    is flagged degenerate when both corners tie.
    """

    h2_plus: float
    h2_minus: float
    degenerate_maximum: bool

    @property
    def qfi(self) -> float:
        return 4.0 * max(self.h2_plus, self.h2_minus)


class SpecialCase(Enum):
    ANTISYMMETRIC = "antisymmetric"
    SYMMETRIC = "symmetric"
    UNBALANCED = "unbalanced"

    @property
    def eps(self) -> tuple:
        return _SPECIAL_EPS[self]


_SPECIAL_EPS = {
    SpecialCase.ANTISYMMETRIC: (1.0, -1.0),
    SpecialCase.SYMMETRIC: (1.0, 1.0),
    SpecialCase.UNBALANCED: (1.0, 0.0),
}


@dataclass(frozen=True)
class GaussianGap:
    f_tilde: float
    f_gauss: float
    relative_gap: float
    asymptotic_gap: float


def _unpack(eps: Sequence[float]) -> tuple:
    ep, em = (float(e) for e in eps)
    return ep, em


def max_qfi(budget: NumberBudget, eps: Sequence[float]) -> float:
    """
    Maximal QFI over pure states with number mean N and variance DeltaN^2:

        (|eps+ - eps-| sqrt(N^2 + DeltaN^2) + |eps+ + eps-| DeltaN)^2
    """
    ep, em = _unpack(eps)
    n, dn = budget.n_mean, budget.delta_n
    return float((abs(ep - em) * np.sqrt(n**2 + budget.var) + abs(ep + em) * dn) ** 2)


def max_qfi_from_generator(budget: NumberBudget, gen: GeneratorSpectrum) -> float:
    """
    ``max_qfi`` in terms of the generator coefficients, using
    |eps+ - eps-| = sqrt((A+ - A-)^2 + 4|B|^2) and |eps+ + eps-| = |A+ + A-|.
    """
    split = np.sqrt((gen.a_plus - gen.a_minus) ** 2 + 4.0 * abs(gen.b) ** 2)
    trace = abs(gen.a_plus + gen.a_minus)
    return float((split * np.sqrt(budget.n_mean**2 + budget.var) + trace * budget.delta_n) ** 2)


def noon_qfi(n: int, eps: Sequence[float]) -> float:
    """
    Heisenberg value N^2 (eps+ - eps-)^2 at fixed particle number.
    """
    ep, em = _unpack(eps)
    return float(n**2 * (ep - em) ** 2)


def cramer_rao(fisher: float, trials: int = 1) -> float:
    """
    Smallest phase uncertainty 1 / sqrt(nu F) after ``trials`` repetitions.

    Raises:
        ZeroInformation: ``fisher`` is zero, the uncertainty is unbounded.
    """
    if trials < 1:
        raise ValueError(f"The number of trials must be positive, got {trials}")
    if fisher < 0:
        raise ValueError(f"Fisher information cannot be negative, got {fisher}")
    if fisher == 0:
        raise ZeroInformation("Zero Fisher information: the phase cannot be estimated.")
    return float(1.0 / np.sqrt(trials * fisher))


def domain_corners(budget: NumberBudget) -> tuple:
    """
    Corners C+- = (N^2 sigma+- / 4, N^2 sigma-+ / 4) where the bounding
    parabola meets the line; the covariance there is -N^2 / 4.
    """
    pair = sigma(budget)
    quarter = 0.25 * budget.n_mean**2
    z = -quarter
    return (
        VariancePoint(quarter * pair.sigma_plus, quarter * pair.sigma_minus, z),
        VariancePoint(quarter * pair.sigma_minus, quarter * pair.sigma_plus, z),
    )


def parabola_residual(point: VariancePoint, budget: NumberBudget) -> float:
    """
    (x - y)^2 - 2 DeltaN^2 (x + y) + DeltaN^4, zero on the parabola where
    Cov[m, n]^2 = Var[m] Var[n].
    """
    x, y, v = point.x, point.y, budget.var
    return float((x - y) ** 2 - 2.0 * v * (x + y) + v**2)


def line_residual(point: VariancePoint, budget: NumberBudget) -> float:
    """
    x + y - N^2 / 2 - DeltaN^2, zero on the line E[mn] = 0.
    """
    return float(point.x + point.y - 0.5 * budget.n_mean**2 - budget.var)


def _arc_half_width(budget: NumberBudget) -> float:
    pair = sigma(budget)
    return 0.125 * budget.n_mean**2 * (pair.sigma_plus - pair.sigma_minus)


def _check_arc(budget: NumberBudget, xi: float) -> None:
    half = _arc_half_width(budget)
    if abs(xi) > half * (1.0 + _ARC_SLACK) + _ARC_SLACK:
        raise OutOfArc(f"xi={xi!r} outside the segment [-{half!r}, {half!r}] between the corners")


def h2_on_parabola(budget: NumberBudget, eps: Sequence[float], xi: float) -> float:
    """
    h^2 along the parabolic arc between the corners, with xi = (x - y) / 2:

        (eps+ - eps-)^2 xi^2 / DeltaN^2 + (eps+^2 - eps-^2) xi + (eps+ + eps-)^2 DeltaN^2 / 4
    """
    if budget.var == 0:
        raise InvalidBudget("The parabolic arc needs a positive number variance.")
    _check_arc(budget, xi)
    ep, em = _unpack(eps)
    v = budget.var
    return float((ep - em) ** 2 * xi**2 / v + (ep**2 - em**2) * xi + 0.25 * (ep + em) ** 2 * v)


def h2_on_line(budget: NumberBudget, eps: Sequence[float], xi: float) -> float:
    """
    h^2 along the straight segment between the corners:

        (eps+^2 - eps-^2) xi + (eps+ - eps-)^2 N^2 / 4 + (eps+^2 + eps-^2) DeltaN^2 / 2
    """
    _check_arc(budget, xi)
    ep, em = _unpack(eps)
    return float(
        (ep**2 - em**2) * xi + 0.25 * (ep - em) ** 2 * budget.n_mean**2 + 0.5 * (ep**2 + em**2) * budget.var
    )


def h2_corners(budget: NumberBudget, eps: Sequence[float]) -> MaxQfi:
    """
    h^2 at C+ and C-; by convexity the maximum over the domain is attained
    at one of them. At the corners the arc expression reduces to

        h^2(C+-) = ((eps+ - eps-) sqrt(N^2 + DeltaN^2) +- (eps+ + eps-) DeltaN)^2 / 4

    which stays accurate when DeltaN^2 is tiny.
    """
    ep, em = _unpack(eps)
    spread = (ep - em) * np.sqrt(budget.n_mean**2 + budget.var)
    shift = (ep + em) * budget.delta_n
    h2_plus = float(0.25 * (spread + shift) ** 2)
    h2_minus = float(0.25 * (spread - shift) ** 2)
    degenerate = bool(np.isclose(h2_plus, h2_minus, rtol=1e-12, atol=1e-300))
    if degenerate:
        logger.debug(f"Bounds: both corners give h^2 = {h2_plus!r} for eps={tuple(eps)}.")
    return MaxQfi(h2_plus=h2_plus, h2_minus=h2_minus, degenerate_maximum=degenerate)


def special_case_qfi(case: Union[str, SpecialCase, CircuitCatalog], budget: NumberBudget) -> tuple:
    """
    Maximal QFI of the three paradigmatic circuits:

    - antisymmetric, eps = (1, -1): 4 (N^2 + DeltaN^2)
    - symmetric, eps = (1, 1): 4 DeltaN^2
    - unbalanced, eps = (1, 0): (sqrt(N^2 + DeltaN^2) + DeltaN)^2

    Returns:
        The QFI and the Cramer-Rao uncertainty as a function of the number
        of trials.
    """
    if isinstance(case, CircuitCatalog):
        case = case.value
    try:
        case = SpecialCase(case)
    except ValueError:
        raise ParseError(f"Unknown special case {case!r}") from None

    n2, v = budget.n_mean**2, budget.var
    if case is SpecialCase.ANTISYMMETRIC:
        qfi = 4.0 * (n2 + v)
    elif case is SpecialCase.SYMMETRIC:
        qfi = 4.0 * v
    else:
        qfi = (np.sqrt(n2 + v) + np.sqrt(v)) ** 2
    qfi = float(qfi)
    delta_phi: Callable[[int], float] = partial(cramer_rao, qfi)
    return qfi, delta_phi


def gaussian_gap(eps: Sequence[float], n_mean: float) -> GaussianGap:
    """
    Compare the Gaussian optimum 8 eps+^2 N (N + 1) with the general maximum
    at the same number variance DeltaN^2 = 2 N (N + 1). The asymptotic value
    for N -> infinity is, with d = eps+ - eps- and s = eps+ + eps-,

        |d| (|d| + 2 (sqrt 6 - 2) |s|) / (sqrt 3 |d| + sqrt 2 |s|)^2
    """
    if n_mean <= 0:
        raise InvalidBudget(f"Mean particle number must be positive, got {n_mean!r}")
    ep, em = sorted(_unpack(eps), key=abs, reverse=True)
    n = float(n_mean)
    d, s = abs(ep - em), abs(ep + em)
    n_n1 = n * (n + 1.0)
    # expanded square; with d = 0 it reduces to f_gauss term by term
    f_tilde = d**2 * n * (3.0 * n + 2.0) + 2.0 * d * s * np.sqrt(2.0 * n * (3.0 * n + 2.0) * n_n1) + 2.0 * s**2 * n_n1
    f_gauss = 8.0 * ep**2 * n_n1
    relative = (f_tilde - f_gauss) / f_tilde if f_tilde > 0 else 0.0

    denominator = (np.sqrt(3.0) * d + np.sqrt(2.0) * s) ** 2
    asymptotic = d * (d + 2.0 * (np.sqrt(6.0) - 2.0) * s) / denominator if denominator > 0 else 0.0
    return GaussianGap(
        f_tilde=float(f_tilde),
        f_gauss=float(f_gauss),
        relative_gap=float(relative),
        asymptotic_gap=float(asymptotic),
    )
