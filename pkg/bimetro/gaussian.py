"""
Pure two-mode Gaussian states and their QFI.

Quadratures are ordered (x+, x-, y+, y-) with x = (a + a^dag) / sqrt 2 and
y = (a - a^dag) / (i sqrt 2); the symplectic form is Omega = [[0, I], [-I, 0]].
A pure state is Gamma = R Q^2 R^T / 2 with Q = diag(e^{r+}, e^{r-}, e^{-r+},
e^{-r-}) and R the orthogonal symplectic image of a 2x2 unitary U. States are
given in the normal-mode basis of the generator unless stated otherwise.
"""

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from bimetro import _config
from bimetro._errors import (
    InconsistentResult,
    InvalidBudget,
    InvalidState,
    NonUnitaryError,
    ParseError,
    SingularCovariance,
)
from bimetro._logger import logger
from bimetro.circuit import GeneratorSpectrum, TransferMatrix

logger.debug(f"Loading module {__name__}.")

__all__ = [
    "CovarianceState",
    "GaussianPureState",
    "UnitaryAngles",
    "bound_f_g2",
    "coherent_state",
    "covariance_qfi",
    "evolve",
    "f_g1_closed_form",
    "f_g2_block",
    "gaussian_number_moments",
    "gaussian_qfi",
    "max_qfi_given_displacement",
    "max_qfi_over_angles",
    "optimal_gaussian",
    "rotation_matrix",
    "rotate",
    "saturating_displacement",
    "squeezed_vacuum",
    "symplectic_eigenvalues",
    "symplectic_form",
]

_SYMMETRY_TOLERANCE = 1e-12
_PHYSICALITY_TOLERANCE = 1e-10
_INVERSE_TOLERANCE = 1e-6


def symplectic_form() -> np.ndarray:
    eye = np.eye(2)
    zero = np.zeros((2, 2))
    return np.block([[zero, eye], [-eye, zero]])


def rotation_matrix(unitary: np.ndarray) -> np.ndarray:
    """
    Orthogonal symplectic R = W^dag diag(U, U*) W = [[Re U, -Im U], [Im U, Re U]],
    which maps the displacement of alpha to that of U alpha.
    """
    u = np.asarray(unitary, dtype=complex)
    return np.block([[u.real, -u.imag], [u.imag, u.real]])


def symplectic_eigenvalues(gamma: np.ndarray) -> np.ndarray:
    """
    Williamson eigenvalues of a 4x4 covariance matrix, ascending.
    """
    eig = np.linalg.eigvals(1j * symplectic_form() @ np.asarray(gamma, dtype=float))
    return np.sort(np.abs(eig))[::2]


@dataclass(frozen=True)
class UnitaryAngles:
    """
    Angles (eta, chi, phi, theta) of the 2x2 unitary

        U = e^{-i eta / 2} [[e^{-i (chi + phi) / 2} cos(theta / 2), -e^{i (chi - phi) / 2} sin(theta / 2)],
                            [e^{-i (chi - phi) / 2} sin(theta / 2),  e^{i (chi + phi) / 2} cos(theta / 2)]]
    """

    eta: float = 0.0
    chi: float = 0.0
    phi: float = 0.0
    theta: float = 0.0

    def matrix(self) -> np.ndarray:
        c, s = np.cos(0.5 * self.theta), np.sin(0.5 * self.theta)
        u = np.array(
            [
                [np.exp(-0.5j * (self.chi + self.phi)) * c, -np.exp(0.5j * (self.chi - self.phi)) * s],
                [np.exp(-0.5j * (self.chi - self.phi)) * s, np.exp(0.5j * (self.chi + self.phi)) * c],
            ],
            dtype=complex,
        )
        return np.exp(-0.5j * self.eta) * u

    def to_json(self) -> list:
        return [float(self.eta), float(self.chi), float(self.phi), float(self.theta)]


@dataclass(frozen=True)
class GaussianPureState:
    """
    Pure Gaussian state: squeezing r+ >= r- >= 0, the unitary U rotating the
    squeezed quadratures, and the displacement alpha = (<a+>, <a->).
    """

    r_plus: float = 0.0
    r_minus: float = 0.0
    angles: UnitaryAngles = field(default_factory=UnitaryAngles)
    alpha: tuple = (0j, 0j)

    def __post_init__(self):
        if not (self.r_plus >= self.r_minus >= 0):
            raise InvalidState(f"Squeezing must satisfy r+ >= r- >= 0, got ({self.r_plus}, {self.r_minus})")
        if len(self.alpha) != 2:
            raise InvalidState(f"Displacement needs two amplitudes, got {self.alpha!r}")
        object.__setattr__(self, "alpha", tuple(complex(a) for a in self.alpha))

    def alpha_vector(self) -> np.ndarray:
        return np.array(self.alpha, dtype=complex)

    @property
    def alpha_norm2(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.alpha))

    def to_json(self) -> dict:
        return {
            "r": [float(self.r_plus), float(self.r_minus)],
            "u": self.angles.to_json(),
            "alpha": [[a.real, a.imag] for a in self.alpha],
        }

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "GaussianPureState":
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as e:
                raise ParseError(f"Invalid Gaussian state JSON: {e}") from None
        if not isinstance(obj, dict):
            raise ParseError("Gaussian state JSON must be an object.")
        unknown = set(obj) - {"r", "u", "alpha"}
        if unknown:
            raise ParseError(f"Unknown Gaussian state keys: {sorted(unknown)}")
        try:
            r_plus, r_minus = (float(r) for r in obj.get("r", [0.0, 0.0]))
            angles = UnitaryAngles(*(float(a) for a in obj.get("u", [0.0, 0.0, 0.0, 0.0])))
            alpha = tuple(complex(float(re), float(im)) for re, im in obj.get("alpha", [[0, 0], [0, 0]]))
        except (TypeError, ValueError) as e:
            raise ParseError(f"Malformed Gaussian state JSON: {e}") from None
        return cls(r_plus=r_plus, r_minus=r_minus, angles=angles, alpha=alpha)


@dataclass(frozen=True, eq=False)
class CovarianceState:
    """
    Covariance matrix ``gamma`` and displacement ``d`` in the ordering
    (x+, x-, y+, y-).
    """

    gamma: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if gamma.shape != (4, 4) or d.shape != (4,):
            raise InvalidState(f"Expected a 4x4 covariance and 4-vector, got {gamma.shape} and {d.shape}")
        scale = max(1.0, float(np.max(np.abs(gamma))))
        if np.max(np.abs(gamma - gamma.T)) > _SYMMETRY_TOLERANCE * scale:
            raise InvalidState("Covariance matrix is not symmetric.")
        lowest = float(np.min(np.linalg.eigvalsh(gamma + 0.5j * symplectic_form())))
        if lowest < -_PHYSICALITY_TOLERANCE * scale:
            raise InvalidState(f"Covariance violates the uncertainty relation (eigenvalue {lowest:.3g}).")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "d", d)


def _displacement(alpha: np.ndarray) -> np.ndarray:
    return np.sqrt(2.0) * np.concatenate([alpha.real, alpha.imag])


def to_covariance(state: GaussianPureState) -> CovarianceState:
    r = rotation_matrix(state.angles.matrix())
    q2 = np.exp(2.0 * np.array([state.r_plus, state.r_minus, -state.r_plus, -state.r_minus]))
    gamma = 0.5 * (r * q2) @ r.T
    gamma = 0.5 * (gamma + gamma.T)
    return CovarianceState(gamma=gamma, d=_displacement(state.alpha_vector()))


def rotate(state: CovarianceState, unitary: np.ndarray) -> CovarianceState:
    """
    Apply the passive transformation with single-particle matrix ``unitary``.
    """
    r = rotation_matrix(unitary)
    gamma = r @ state.gamma @ r.T
    return CovarianceState(gamma=0.5 * (gamma + gamma.T), d=r @ state.d)


def evolve(state: CovarianceState, tm: TransferMatrix) -> CovarianceState:
    """
    Gamma -> R Gamma R^T and d -> R d through the circuit.

    Raises:
        NonUnitaryError: the transfer matrix is not unitary.
    """
    if not tm.is_unitary():
        raise NonUnitaryError(f"Transfer matrix residuals {tm.residuals()} exceed the tolerance")
    return rotate(state, tm.matrix())


def _eps_of(gen: Union[GeneratorSpectrum, Sequence[float]]) -> tuple:
    if isinstance(gen, GeneratorSpectrum):
        return gen.eps_plus, gen.eps_minus
    ep, em = (float(e) for e in gen)
    return ep, em


def _pure_inverse(gamma: np.ndarray) -> np.ndarray:
    omega = symplectic_form()
    inverse = 4.0 * omega.T @ gamma @ omega
    residual = float(np.max(np.abs(gamma @ inverse - np.eye(4))))
    if residual > _INVERSE_TOLERANCE:
        raise SingularCovariance(f"Covariance is not pure to working precision (residual {residual:.3g}).")
    return inverse


def covariance_qfi(state: CovarianceState, gen: Union[GeneratorSpectrum, Sequence[float]]) -> float:
    """
    QFI of a pure state from (Gamma, d) with the real generator
    G = [[0, E], [-E, 0]], E = diag(eps+, eps-):

        F = (Tr G^2 - Tr Gamma^-1 G Gamma G) / 2 + (G d)^T Gamma^-1 (G d)
    """
    ep, em = _eps_of(gen)
    e = np.diag([ep, em])
    zero = np.zeros((2, 2))
    g = np.block([[zero, e], [-e, zero]])
    gamma = state.gamma
    inverse = _pure_inverse(gamma)
    gd = g @ state.d
    first = 0.5 * (np.trace(g @ g) - np.trace(inverse @ g @ gamma @ g))
    second = gd @ inverse @ gd
    return float(first + second)


def f_g1_closed_form(
    r_plus: float,
    r_minus: float,
    angles: UnitaryAngles,
    gen: Union[GeneratorSpectrum, Sequence[float]],
) -> float:
    """
    Squeezing part of the QFI, with eps_bar = (eps+ + eps-) / 2 and
    d_eps = eps+ - eps-:

        2 (eps_bar + d_eps cos(theta) / 2)^2 sinh^2(2 r+)
        + 2 (eps_bar - d_eps cos(theta) / 2)^2 sinh^2(2 r-)
        + d_eps^2 sin^2(theta) (sinh^2(r+ + r-) - sin^2(chi) sinh(2 r+) sinh(2 r-))
    """
    ep, em = _eps_of(gen)
    bar = 0.5 * (ep + em)
    delta = ep - em
    cos_t, sin_t = np.cos(angles.theta), np.sin(angles.theta)
    sp, sm = np.sinh(2.0 * r_plus), np.sinh(2.0 * r_minus)
    value = (
        2.0 * (bar + 0.5 * delta * cos_t) ** 2 * sp**2
        + 2.0 * (bar - 0.5 * delta * cos_t) ** 2 * sm**2
        + delta**2 * sin_t**2 * (np.sinh(r_plus + r_minus) ** 2 - np.sin(angles.chi) ** 2 * sp * sm)
    )
    return float(value)


def f_g2_block(state: GaussianPureState, gen: Union[GeneratorSpectrum, Sequence[float]]) -> float:
    """
    Displacement part of the QFI,

        2 (gamma^dag | gamma^T) [[cosh 2r, sinh 2r], [sinh 2r, cosh 2r]] (gamma ; gamma*)

    with gamma = U^dag E alpha.
    """
    ep, em = _eps_of(gen)
    u = state.angles.matrix()
    gamma = u.conj().T @ (np.array([ep, em]) * state.alpha_vector())
    r = np.array([state.r_plus, state.r_minus])
    c, s = np.diag(np.cosh(2.0 * r)), np.diag(np.sinh(2.0 * r))
    block = np.block([[c, s], [s, c]])
    column = np.concatenate([gamma, gamma.conj()])
    return float(2.0 * np.real(column.conj() @ block @ column))


def bound_f_g2(state: GaussianPureState, gen: Union[GeneratorSpectrum, Sequence[float]]) -> float:
    """
    Upper bound 4 eps+^2 ||alpha||^2 e^{2 r+} on the displacement part.
    """
    ep, em = _eps_of(gen)
    return float(4.0 * max(ep**2, em**2) * state.alpha_norm2 * np.exp(2.0 * state.r_plus))


def gaussian_qfi(
    state: GaussianPureState,
    gen: Union[GeneratorSpectrum, Sequence[float]],
    tolerance: Optional[float] = None,
) -> float:
    """
    QFI of a pure Gaussian input, as the sum of the closed-form squeezing
    part and the block-form displacement part. The direct covariance-matrix
    evaluation is computed alongside and must agree.

    Raises:
        InconsistentResult: the two evaluations differ by more than
            ``tolerance`` (relative).
        SingularCovariance: the covariance cannot be inverted.
    """
    if tolerance is None:
        tolerance = _config.config("bimetro", "consistency_tolerance")
    split = f_g1_closed_form(state.r_plus, state.r_minus, state.angles, gen) + f_g2_block(state, gen)
    direct = covariance_qfi(to_covariance(state), gen)
    if abs(split - direct) > tolerance * max(1.0, abs(split)):
        raise InconsistentResult(f"Gaussian QFI paths disagree: closed form {split!r}, covariance {direct!r}")
    return split


def gaussian_number_moments(state: Union[GaussianPureState, CovarianceState]) -> tuple:
    """
    Mean and variance of the total number from (Gamma, d):

        <N>   = (Tr Gamma + |d|^2) / 2 - 1
        Var N = Tr Gamma^2 / 2 - 1 / 2 + d^T Gamma d

    the variance following from Wick's theorem for the quartic quadrature
    moments.
    """
    cov = to_covariance(state) if isinstance(state, GaussianPureState) else state
    gamma, d = cov.gamma, cov.d
    mean = 0.5 * (np.trace(gamma) + d @ d) - 1.0
    var = 0.5 * np.trace(gamma @ gamma) - 0.5 + d @ gamma @ d
    return float(mean), float(var)


def squeezed_vacuum(r: float) -> GaussianPureState:
    """
    Squeezed vacuum in mode +, vacuum in mode -.
    """
    return GaussianPureState(r_plus=float(r))


def coherent_state(alpha_plus: complex, alpha_minus: complex = 0j) -> GaussianPureState:
    return GaussianPureState(alpha=(complex(alpha_plus), complex(alpha_minus)))


def optimal_gaussian(n_mean: float, gen: Union[GeneratorSpectrum, Sequence[float]]) -> tuple:
    """
    Best pure Gaussian state with mean particle number N: the squeezed vacuum
    with sinh^2 r = N in the normal mode of largest |eps|, vacuum elsewhere.

    Returns:
        The state and its QFI 8 eps+^2 N (N + 1).
    """
    if n_mean <= 0:
        raise InvalidBudget(f"Mean particle number must be positive, got {n_mean!r}")
    ep, em = _eps_of(gen)
    r = float(np.arcsinh(np.sqrt(n_mean)))
    # theta = pi exchanges the modes when the - mode carries the larger |eps|
    theta = np.pi if em**2 > ep**2 else 0.0
    state = GaussianPureState(r_plus=r, angles=UnitaryAngles(theta=theta))
    qfi = 8.0 * max(ep**2, em**2) * n_mean * (n_mean + 1.0)
    return state, float(qfi)


def max_qfi_over_angles(
    r_plus: float,
    r_minus: float,
    alpha_norm2: float,
    gen: Union[GeneratorSpectrum, Sequence[float]],
) -> float:
    """
    QFI maximised over theta and the direction of alpha at fixed squeezing
    and ||alpha||^2:

        2 (eps+^2 (sinh^2 2r+ + 2 ||alpha||^2 e^{2 r+}) + eps-^2 sinh^2 2r-)
    """
    ep, em = _eps_of(gen)
    return float(
        2.0 * (ep**2 * (np.sinh(2.0 * r_plus) ** 2 + 2.0 * alpha_norm2 * np.exp(2.0 * r_plus)) + em**2 * np.sinh(2.0 * r_minus) ** 2)
    )


def max_qfi_given_displacement(
    n_mean: float,
    alpha_norm2: float,
    gen: Union[GeneratorSpectrum, Sequence[float]],
) -> float:
    """
    Best Gaussian QFI at mean N when ||alpha||^2 = a of it is displacement,
    the rest squeezing in the + mode:

        4 eps+^2 (2 (N - a)(1 + N - a) + a (1 + 2N - 2a + 2 sqrt((N - a)(1 + N - a))))

    Decreasing in a.
    """
    if not 0 <= alpha_norm2 <= n_mean:
        raise InvalidBudget(f"Displacement {alpha_norm2!r} must lie in [0, N={n_mean!r}]")
    ep, _ = _eps_of(gen)
    squeeze = n_mean - alpha_norm2
    root = np.sqrt(squeeze * (1.0 + squeeze))
    return float(4.0 * ep**2 * (2.0 * squeeze * (1.0 + squeeze) + alpha_norm2 * (1.0 + 2.0 * squeeze + 2.0 * root)))


def saturating_displacement(
    norm: float,
    angles: UnitaryAngles,
    gen: Union[GeneratorSpectrum, Sequence[float]],
) -> np.ndarray:
    """
    Direction of alpha that saturates the displacement bound for the given
    unitary: ``norm e^{-i (eta + chi + phi) / 2} (1, 0)`` (with theta = 0)
    when eps+^2 > eps-^2, otherwise
    ``norm e^{-i (eta + chi) / 2} (e^{-i phi / 2} cos(theta / 2), e^{i phi / 2} sin(theta / 2))``.
    """
    ep, em = _eps_of(gen)
    if ep**2 > em**2:
        if angles.theta != 0:
            logger.warning(f"Gaussian: the displacement bound is only saturated at theta = 0, got {angles.theta}.")
        phase = np.exp(-0.5j * (angles.eta + angles.chi + angles.phi))
        return norm * phase * np.array([1.0, 0.0], dtype=complex)
    phase = np.exp(-0.5j * (angles.eta + angles.chi))
    return (
        norm
        * phase
        * np.array(
            [np.exp(-0.5j * angles.phi) * np.cos(0.5 * angles.theta), np.exp(0.5j * angles.phi) * np.sin(0.5 * angles.theta)],
            dtype=complex,
        )
    )
