"""
Two-mode particle-preserving linear circuits.

Provides:
- CircuitSpec: affine parameterisation (beta, chi, tau, rho) of the
  scattering matrix, with a catalog of standard configurations
- TransferMatrix: the complex amplitudes T+-, R+- at a given phase
- GeneratorSpectrum: generator coefficients A+-, B, normal-mode eigenvalues
  eps+- and the mixing matrix to the normal modes
- single-particle classical and quantum Fisher information
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from bimetro import _config
from bimetro._errors import ParseError
from bimetro._logger import logger

logger.debug(f"Loading module {__name__}.")

__all__ = [
    "Affine",
    "CircuitCatalog",
    "CircuitSpec",
    "GeneratorSpectrum",
    "TransferMatrix",
    "classical_fi_single_particle",
    "generator",
    "generator_from_coefficients",
    "generator_from_matrix",
    "qfi_single_particle",
    "single_particle_qfi_via_generator",
    "transfer_matrix",
]

# below this value of P+ P- the single-particle FI is taken as its limit
_SINGULAR_PROBABILITY = 1e-24


class CircuitCatalog(Enum):
    """
    Named circuit configurations.
    """

    MACH_ZEHNDER = "mach_zehnder"
    ANTISYMMETRIC = "antisymmetric"
    SYMMETRIC = "symmetric"
    UNBALANCED = "unbalanced"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Affine:
    """
    Real function ``offset + slope * phi``.
    """

    offset: float = 0.0
    slope: float = 0.0

    def __call__(self, phi: float) -> float:
        return self.offset + self.slope * phi

    def to_json(self) -> list:
        return [float(self.offset), float(self.slope)]


# (beta, chi, tau, rho) for every catalog entry
_CATALOG = {
    CircuitCatalog.MACH_ZEHNDER: (
        Affine(0.0, 0.5),
        Affine(),
        Affine(),
        Affine(-np.pi / 2, 0.0),
    ),
    CircuitCatalog.ANTISYMMETRIC: (Affine(), Affine(), Affine(0.0, 1.0), Affine()),
    CircuitCatalog.SYMMETRIC: (Affine(), Affine(0.0, 1.0), Affine(), Affine()),
    CircuitCatalog.UNBALANCED: (Affine(), Affine(0.0, 0.5), Affine(0.0, 0.5), Affine()),
}

_FUNCTION_KEYS = ("beta", "chi", "tau", "rho")


@dataclass(frozen=True)
class CircuitSpec:
    """
    Scattering matrix parameterisation

        T+- = exp(-i chi) exp(-+i tau) cos(beta)
        R+- = -i exp(-i chi) exp(-+i rho) sin(beta)

    with every angle an affine function of the unknown phase phi.

    Args:
        beta, chi, tau, rho: the four angle functions.
        catalog_tag: name of the configuration, CUSTOM for hand-made specs.
    """

    beta: Affine = field(default_factory=Affine)
    chi: Affine = field(default_factory=Affine)
    tau: Affine = field(default_factory=Affine)
    rho: Affine = field(default_factory=Affine)
    catalog_tag: CircuitCatalog = CircuitCatalog.CUSTOM

    @classmethod
    def from_catalog(cls, tag: Union[str, CircuitCatalog]) -> "CircuitSpec":
        try:
            tag = CircuitCatalog(tag)
        except ValueError:
            raise ParseError(f"Unknown circuit catalog entry: {tag!r}") from None
        if tag is CircuitCatalog.CUSTOM:
            raise ParseError("The custom tag needs explicit angle functions.")
        beta, chi, tau, rho = _CATALOG[tag]
        return cls(beta=beta, chi=chi, tau=tau, rho=rho, catalog_tag=tag)

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "CircuitSpec":
        """
        Build a spec from ``{"catalog": name}`` or from
        ``{"beta": [b0, b1], "chi": [...], "tau": [...], "rho": [...]}``.
        A bare catalog name is accepted as a shortcut.
        """
        if isinstance(obj, str):
            text = obj.strip()
            if not text.startswith("{"):
                return cls.from_catalog(text)
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as e:
                raise ParseError(f"Invalid circuit JSON: {e}") from None
        if not isinstance(obj, dict):
            raise ParseError(f"Circuit JSON must be an object, got {type(obj).__name__}")

        if "catalog" in obj:
            if len(obj) != 1:
                raise ParseError("A catalog circuit takes no other keys.")
            return cls.from_catalog(obj["catalog"])

        unknown = set(obj) - set(_FUNCTION_KEYS)
        if unknown:
            raise ParseError(f"Unknown circuit keys: {sorted(unknown)}")
        functions = {}
        for key in _FUNCTION_KEYS:
            pair = obj.get(key, [0.0, 0.0])
            try:
                offset, slope = (float(v) for v in pair)
            except (TypeError, ValueError):
                raise ParseError(f"Circuit key {key!r} needs an [offset, slope] pair, got {pair!r}") from None
            functions[key] = Affine(offset, slope)
        return cls(**functions)

    def to_json(self) -> dict:
        if self.catalog_tag is not CircuitCatalog.CUSTOM:
            return {"catalog": self.catalog_tag.value}
        return {key: getattr(self, key).to_json() for key in _FUNCTION_KEYS}

    def angles(self, phi: float) -> tuple:
        return self.beta(phi), self.chi(phi), self.tau(phi), self.rho(phi)

    def derivatives(self) -> tuple:
        return self.beta.slope, self.chi.slope, self.tau.slope, self.rho.slope


@dataclass(frozen=True)
class TransferMatrix:
    """
    Canonical transformation of the creation operators,

        S (a+^dag, a-^dag)^T S^dag = [[T+, R+], [R-, T-]] (a+^dag, a-^dag)^T.
    """

    t_plus: complex
    t_minus: complex
    r_plus: complex
    r_minus: complex

    def matrix(self) -> np.ndarray:
        """
        Single-particle unitary: column k holds the output amplitudes of a
        particle injected in port k (k = +, -).
        """
        return np.array(
            [[self.t_plus, self.r_minus], [self.r_plus, self.t_minus]],
            dtype=complex,
        )

    def residuals(self) -> np.ndarray:
        """
        Deviations from the four unitarity relations.
        """
        tp, tm, rp, rm = self.t_plus, self.t_minus, self.r_plus, self.r_minus
        return np.array(
            [
                abs(abs(tp) ** 2 + abs(rm) ** 2 - 1.0),
                abs(abs(tm) ** 2 + abs(rp) ** 2 - 1.0),
                abs(np.conj(tp) * rm + np.conj(rp) * tm),
                abs(np.conj(tm) * rp + np.conj(rm) * tp),
            ]
        )

    def is_unitary(self, tol: float = None) -> bool:
        if tol is None:
            tol = _config.config("bimetro", "unitarity_tolerance")
        return bool(np.all(self.residuals() <= tol))


def transfer_matrix(spec: CircuitSpec, phi: float) -> TransferMatrix:
    """
    Evaluate T+- and R+- at phase ``phi``.
    """
    beta, chi, tau, rho = spec.angles(phi)
    common = np.exp(-1j * chi)
    return TransferMatrix(
        t_plus=complex(common * np.exp(-1j * tau) * np.cos(beta)),
        t_minus=complex(common * np.exp(1j * tau) * np.cos(beta)),
        r_plus=complex(-1j * common * np.exp(-1j * rho) * np.sin(beta)),
        r_minus=complex(-1j * common * np.exp(1j * rho) * np.sin(beta)),
    )


@dataclass(frozen=True, eq=False)
class GeneratorSpectrum:
    """
    Generator ``H = A+ n+ + A- n- + B a-^dag a+ + B* a+^dag a-`` and its
    normal-mode form ``H = eps+ c+^dag c+ + eps- c-^dag c-``.

    ``mixing`` maps physical to normal modes, ``c = mixing @ a``; its rows are
    the conjugated eigenvectors of ``matrix()``. ``degenerate`` is set when
    the generator is a multiple of the identity and the mixing was fixed to
    the identity by convention.
    """

    a_plus: float
    a_minus: float
    b: complex
    eps_plus: float
    eps_minus: float
    mixing: np.ndarray
    degenerate: bool = False

    @property
    def eps(self) -> tuple:
        return self.eps_plus, self.eps_minus

    def matrix(self) -> np.ndarray:
        """
        Single-particle generator [[A+, B*], [B, A-]].
        """
        return np.array(
            [[self.a_plus, np.conj(self.b)], [self.b, self.a_minus]],
            dtype=complex,
        )

    def diagonalised(self) -> np.ndarray:
        return self.mixing @ self.matrix() @ self.mixing.conj().T


def _sgn(x: float) -> float:
    return 1.0 if x >= 0 else -1.0


def _phase_fix(vector: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    # first nonzero entry real and positive
    for entry in vector:
        if abs(entry) > tol:
            return vector * (abs(entry) / entry)
    return vector


def _eigenvector(a_plus: float, a_minus: float, b: complex, eps: float) -> np.ndarray:
    # two equivalent solutions of (M - eps) v = 0, keep the better conditioned
    from_first_row = np.array([np.conj(b), eps - a_plus], dtype=complex)
    from_second_row = np.array([eps - a_minus, b], dtype=complex)
    v = from_first_row
    if np.linalg.norm(from_second_row) > np.linalg.norm(from_first_row):
        v = from_second_row
    return _phase_fix(v / np.linalg.norm(v))


def generator_from_coefficients(a_plus: float, a_minus: float, b: complex) -> GeneratorSpectrum:
    """
    Normal-mode eigenvalues and mixing matrix of the single-particle generator
    [[A+, B*], [B, A-]].

    The eigenvalues follow
    ``eps+- = sgn(A+ + A-) (|A+ + A-| +- sqrt((A+ - A-)^2 + 4|B|^2)) / 2``
    with sgn(0) = +1, ordered so that eps+^2 >= eps-^2.
    """
    a_plus = float(a_plus)
    a_minus = float(a_minus)
    b = complex(b)

    total = a_plus + a_minus
    root = np.sqrt((a_plus - a_minus) ** 2 + 4.0 * abs(b) ** 2)
    sign = _sgn(total)
    eps_plus = 0.5 * sign * (abs(total) + root)
    eps_minus = 0.5 * sign * (abs(total) - root)
    if eps_minus**2 > eps_plus**2:
        eps_plus, eps_minus = eps_minus, eps_plus

    if b == 0 and a_plus == a_minus:
        logger.debug(
            f"Circuit: scalar generator (A+ = A- = {a_plus}, B = 0), "
            "identity mixing by convention."
        )
        return GeneratorSpectrum(
            a_plus=a_plus,
            a_minus=a_minus,
            b=b,
            eps_plus=a_plus,
            eps_minus=a_plus,
            mixing=np.eye(2, dtype=complex),
            degenerate=True,
        )

    vectors = [_eigenvector(a_plus, a_minus, b, e) for e in (eps_plus, eps_minus)]
    mixing = np.array([v.conj() for v in vectors])
    return GeneratorSpectrum(
        a_plus=a_plus,
        a_minus=a_minus,
        b=b,
        eps_plus=float(eps_plus),
        eps_minus=float(eps_minus),
        mixing=mixing,
    )


def generator_from_matrix(matrix: np.ndarray) -> GeneratorSpectrum:
    """
    Spectrum of a 2x2 single-particle generator; the matrix is Hermitised
    first.
    """
    m = np.asarray(matrix, dtype=complex)
    m = 0.5 * (m + m.conj().T)
    return generator_from_coefficients(m[0, 0].real, m[1, 1].real, m[1, 0])


def generator(spec: CircuitSpec, phi: float) -> GeneratorSpectrum:
    """
    Generator ``H = i S^dag dS/dphi`` of the circuit at ``phi``:

        A+- = chi' +- ((tau + rho)' + (tau - rho)' cos 2beta) / 2
        B   = (beta' + i (tau - rho)' sin(2beta) / 2) exp(-i (tau + rho))
    """
    beta, _, tau, rho = spec.angles(phi)
    d_beta, d_chi, d_tau, d_rho = spec.derivatives()

    half = 0.5 * ((d_tau + d_rho) + (d_tau - d_rho) * np.cos(2 * beta))
    a_plus = d_chi + half
    a_minus = d_chi - half
    b = (d_beta + 0.5j * (d_tau - d_rho) * np.sin(2 * beta)) * np.exp(-1j * (tau + rho))
    return generator_from_coefficients(a_plus, a_minus, b)


def _single_particle_probabilities(spec: CircuitSpec, phi: float) -> tuple:
    beta = spec.beta(phi)
    p_plus = np.cos(beta) ** 2
    return p_plus, 1.0 - p_plus


def classical_fi_single_particle(spec: CircuitSpec, phi: float) -> float:
    """
    Fisher information of counting which port a single particle, injected
    in port +, leaves from: ``(dP+/dphi)^2 / (P+ P-)`` with ``P+ = cos^2 beta``.

    Where P+ P- vanishes the limit ``4 beta'^2`` is returned.
    """
    beta = spec.beta(phi)
    d_beta = spec.beta.slope
    p_plus = np.cos(beta) ** 2
    p_minus = np.sin(beta) ** 2
    denominator = p_plus * p_minus
    if denominator < _SINGULAR_PROBABILITY:
        logger.debug(
            f"Circuit: P+ P- = {denominator:.3g} at phi={phi}, returning the limiting value."
        )
        return float(4.0 * d_beta**2)
    d_p_plus = -np.sin(2 * beta) * d_beta
    return float(d_p_plus**2 / denominator)


def qfi_single_particle(spec: CircuitSpec, phi: float) -> float:
    """
    Quantum Fisher information of the input a+^dag|0>:
    ``F + 4 P+ P- ((tau - rho)')^2``.
    """
    p_plus, p_minus = _single_particle_probabilities(spec, phi)
    d_tau_rho = spec.tau.slope - spec.rho.slope
    return classical_fi_single_particle(spec, phi) + float(4.0 * p_plus * p_minus * d_tau_rho**2)


def single_particle_qfi_via_generator(spec: CircuitSpec, phi: float) -> float:
    """
    Same quantity as ``qfi_single_particle``, as four times the variance of
    the generator on a+^dag|0>, i.e. ``4 |B|^2``.
    """
    return float(4.0 * abs(generator(spec, phi).b) ** 2)
