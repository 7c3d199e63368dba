"""
Truncated two-mode Fock-space states.

States are sparse maps (m, n) -> amplitude in the basis |m, n> of two bosonic
modes, with a cutoff on the total occupation m + n. The QFI of a pure state
under a number-conserving generator only depends on the classical
distribution P_{m,n} = |amplitude|^2 in the normal-mode basis, so most of
this module works on that distribution.
"""

import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional, Union

import numpy as np
from scipy import linalg, stats
from scipy.special import gammaln

from bimetro import _config
from bimetro._errors import InvalidState, NonUnitaryError, ParseError, TruncationExceeded
from bimetro._logger import logger
from bimetro.circuit import GeneratorSpectrum

logger.debug(f"Loading module {__name__}.")

__all__ = [
    "NumberMoments",
    "TwoModeFockState",
    "check_truncation",
    "coherent",
    "coherent_amplitudes",
    "energy_distribution",
    "fock_state",
    "from_amplitudes",
    "mode_rotate",
    "number_moments",
    "probabilities",
    "qfi_pure",
    "vacuum",
]

_NORM_TOLERANCE = 1e-10
# amplitudes below this modulus squared are dropped after a rotation
_PRUNE = 1e-30


@dataclass(frozen=True, eq=False)
class TwoModeFockState:
    """
    Normalised pure state of two bosonic modes.

    Args:
        amplitudes: read-only map (m, n) -> complex amplitude.
        cutoff: largest total occupation m + n kept.
        truncation_loss: probability discarded when the state was truncated,
            recorded before renormalisation.
    """

    amplitudes: Mapping
    cutoff: int
    truncation_loss: float = 0.0

    def __post_init__(self):
        if self.cutoff < 0:
            raise InvalidState(f"Negative cutoff {self.cutoff}")
        for m, n in self.amplitudes:
            if m < 0 or n < 0:
                raise InvalidState(f"Negative occupation ({m}, {n})")
            if m + n > self.cutoff:
                raise InvalidState(f"Occupation ({m}, {n}) above cutoff {self.cutoff}")
        norm2 = sum(abs(c) ** 2 for c in self.amplitudes.values())
        if abs(norm2 - 1.0) > _NORM_TOLERANCE:
            raise InvalidState(f"State not normalised, norm^2 = {norm2!r}")

    def amplitude(self, m: int, n: int) -> complex:
        return self.amplitudes.get((m, n), 0j)

    def arrays(self) -> tuple:
        """
        Occupations and amplitudes as aligned numpy arrays (m, n, c).
        """
        keys = sorted(self.amplitudes)
        m = np.array([k[0] for k in keys], dtype=float)
        n = np.array([k[1] for k in keys], dtype=float)
        c = np.array([self.amplitudes[k] for k in keys], dtype=complex)
        return m, n, c

    def to_json(self) -> dict:
        return {
            "cutoff": int(self.cutoff),
            "amplitudes": [
                [int(m), int(n), float(c.real), float(c.imag)]
                for (m, n), c in sorted(self.amplitudes.items())
            ],
        }

    @classmethod
    def from_json(cls, obj: Union[str, dict]) -> "TwoModeFockState":
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as e:
                raise ParseError(f"Invalid state JSON: {e}") from None
        try:
            rows = obj["amplitudes"]
            cutoff = int(obj["cutoff"])
            amplitudes = {(int(m), int(n)): complex(re, im) for m, n, re, im in rows}
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"State JSON needs 'cutoff' and [m, n, re, im] rows: {e}") from None
        return from_amplitudes(amplitudes, cutoff=cutoff, normalize=False)


@dataclass(frozen=True)
class NumberMoments:
    """
    First and second moments of the occupations (m, n) under P_{m,n}.
    """

    mean_m: float
    mean_n: float
    var_m: float
    var_n: float
    cov_mn: float
    mean_total: float
    var_total: float


def check_truncation(loss: float, tolerance: Optional[float] = None, what: str = "state") -> None:
    """
    Refuse a truncation that discards more than ``tolerance`` probability.
    """
    if tolerance is None:
        tolerance = _config.config("bimetro", "truncation_tolerance")
    if loss > tolerance:
        raise TruncationExceeded(
            f"Truncating the {what} discards probability {loss:.3g} > {tolerance:.3g}; raise the cutoff."
        )


def from_amplitudes(
    amplitudes: Mapping,
    cutoff: Optional[int] = None,
    normalize: bool = True,
    truncation_loss: float = 0.0,
) -> TwoModeFockState:
    """
    Build a state from a map (m, n) -> amplitude; zero amplitudes are dropped.

    Args:
        amplitudes: the coefficients.
        cutoff: total-occupation cutoff; defaults to the largest m + n present.
        normalize: rescale to unit norm (logged when it changes the norm).
        truncation_loss: probability already discarded by the caller.
    """
    cleaned = {(int(m), int(n)): complex(c) for (m, n), c in amplitudes.items() if c != 0}
    if not cleaned:
        raise InvalidState("A state needs at least one nonzero amplitude.")
    if cutoff is None:
        cutoff = max(m + n for m, n in cleaned)

    if normalize:
        norm2 = sum(abs(c) ** 2 for c in cleaned.values())
        if abs(norm2 - 1.0) > 1e-15:
            logger.info(f"Fock: renormalising state (norm^2 = {norm2:.15g}).")
            scale = 1.0 / np.sqrt(norm2)
            cleaned = {k: c * scale for k, c in cleaned.items()}

    return TwoModeFockState(
        amplitudes=MappingProxyType(cleaned),
        cutoff=int(cutoff),
        truncation_loss=float(truncation_loss),
    )


def vacuum() -> TwoModeFockState:
    return from_amplitudes({(0, 0): 1.0}, cutoff=0)


def fock_state(m: int, n: int) -> TwoModeFockState:
    """
    Number state |m, n>.
    """
    if m < 0 or n < 0:
        raise InvalidState(f"Negative occupation ({m}, {n})")
    return from_amplitudes({(m, n): 1.0}, cutoff=m + n)


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """
    Unnormalised single-mode coherent amplitudes
    ``exp(-|alpha|^2 / 2) alpha^k / sqrt(k!)`` for k = 0..cutoff, in the log
    domain so large k does not overflow.
    """
    alpha = complex(alpha)
    k = np.arange(cutoff + 1)
    out = np.zeros(cutoff + 1, dtype=complex)
    out[0] = np.exp(-0.5 * abs(alpha) ** 2)
    if alpha == 0:
        return out
    log_mod = -0.5 * abs(alpha) ** 2 + k * np.log(abs(alpha)) - 0.5 * gammaln(k + 1)
    return np.exp(log_mod + 1j * k * np.angle(alpha))


def coherent(
    alpha_plus: complex,
    alpha_minus: complex,
    cutoff: int,
    tolerance: Optional[float] = None,
) -> TwoModeFockState:
    """
    Product coherent state |alpha_plus> |alpha_minus>, truncated at total
    occupation ``cutoff``. The total occupation is Poissonian with mean
    |alpha_plus|^2 + |alpha_minus|^2, which gives the discarded probability
    exactly.
    """
    mean = abs(complex(alpha_plus)) ** 2 + abs(complex(alpha_minus)) ** 2
    loss = float(stats.poisson.sf(cutoff, mean)) if mean > 0 else 0.0
    check_truncation(loss, tolerance, what="coherent state")

    plus = coherent_amplitudes(alpha_plus, cutoff)
    minus = coherent_amplitudes(alpha_minus, cutoff)
    amplitudes = {}
    for total in range(cutoff + 1):
        for m in range(total + 1):
            c = plus[m] * minus[total - m]
            if c != 0:
                amplitudes[(m, total - m)] = c

    return from_amplitudes(amplitudes, cutoff=cutoff, normalize=True, truncation_loss=loss)


def probabilities(state: TwoModeFockState) -> dict:
    """
    Classical distribution P_{m,n} = |amplitude|^2; phases drop out.
    """
    return {k: float(abs(c) ** 2) for k, c in state.amplitudes.items()}


def number_moments(state: TwoModeFockState) -> NumberMoments:
    m, n, c = state.arrays()
    p = np.abs(c) ** 2
    mean_m = float(p @ m)
    mean_n = float(p @ n)
    dm = m - mean_m
    dn = n - mean_n
    var_m = float(p @ (dm * dm))
    var_n = float(p @ (dn * dn))
    cov_mn = float(p @ (dm * dn))
    return NumberMoments(
        mean_m=mean_m,
        mean_n=mean_n,
        var_m=var_m,
        var_n=var_n,
        cov_mn=cov_mn,
        mean_total=mean_m + mean_n,
        var_total=var_m + var_n + 2.0 * cov_mn,
    )


def qfi_pure(state: TwoModeFockState, gen: GeneratorSpectrum) -> float:
    """
    QFI of a pure input state, given in the normal-mode basis of ``gen``:

        4 Var[E_{m,n}] = 4 (eps+^2 Var[m] + eps-^2 Var[n] + 2 eps+ eps- Cov[m, n])
    """
    moments = number_moments(state)
    ep, em = gen.eps_plus, gen.eps_minus
    variance = ep**2 * moments.var_m + em**2 * moments.var_n + 2.0 * ep * em * moments.cov_mn
    return 4.0 * max(variance, 0.0)


def energy_distribution(state: TwoModeFockState, gen: GeneratorSpectrum) -> dict:
    """
    Distribution of the generator eigenvalues E = eps+ m + eps- n.
    """
    dist = {}
    for (m, n), p in probabilities(state).items():
        energy = gen.eps_plus * m + gen.eps_minus * n
        dist[energy] = dist.get(energy, 0.0) + p
    return dist


def _hermitian_log(unitary: np.ndarray) -> np.ndarray:
    # U = Z diag(exp(i theta)) Z^dag, K = Z diag(theta) Z^dag with U = exp(iK)
    t, z = linalg.schur(unitary, output="complex")
    theta = np.angle(np.diag(t))
    return z @ np.diag(theta) @ z.conj().T


def _sector_matrix(k: np.ndarray, total: int) -> np.ndarray:
    """
    Unitary induced on the sector m + n = ``total`` by exp(iK); row/column j
    is the basis vector |j, total - j>.
    """
    j = np.arange(total + 1, dtype=float)
    g = np.diag(k[0, 0] * j + k[1, 1] * (total - j)).astype(complex)
    if total:
        raise_amp = np.sqrt((j[:-1] + 1.0) * (total - j[:-1]))
        # a+^dag a- moves |j> to |j + 1>, a-^dag a+ moves |j + 1> to |j>
        g[np.arange(1, total + 1), np.arange(total)] = k[0, 1] * raise_amp
        g[np.arange(total), np.arange(1, total + 1)] = k[1, 0] * raise_amp
    w, v = linalg.eigh(g)
    return (v * np.exp(1j * w)) @ v.conj().T


def mode_rotate(
    state: TwoModeFockState,
    mixing: np.ndarray,
    tol: Optional[float] = None,
) -> TwoModeFockState:
    """
    Apply the number-preserving unitary induced by the 2x2 matrix ``mixing``,
    which sends a_k^dag to sum_j mixing[j, k] a_j^dag; the single-particle
    sector transforms by ``mixing`` itself.

    Raises:
        NonUnitaryError: ``mixing`` is not unitary to ``tol``.
    """
    u = np.asarray(mixing, dtype=complex)
    if tol is None:
        tol = _config.config("bimetro", "unitarity_tolerance")
    if u.shape != (2, 2):
        raise NonUnitaryError(f"Mixing matrix must be 2x2, got shape {u.shape}")
    deviation = float(np.max(np.abs(u.conj().T @ u - np.eye(2))))
    if deviation > tol:
        raise NonUnitaryError(f"Mixing matrix deviates from unitarity by {deviation:.3g}")

    k = _hermitian_log(u)
    sectors = {}
    for (m, n), c in state.amplitudes.items():
        sectors.setdefault(m + n, {})[m] = c

    rotated = {}
    for total, entries in sectors.items():
        vector = np.zeros(total + 1, dtype=complex)
        for m, c in entries.items():
            vector[m] = c
        out = _sector_matrix(k, total) @ vector
        for m, c in enumerate(out):
            if abs(c) ** 2 > _PRUNE:
                rotated[(m, total - m)] = c

    return TwoModeFockState(
        amplitudes=MappingProxyType(rotated),
        cutoff=state.cutoff,
        truncation_loss=state.truncation_loss,
    )
