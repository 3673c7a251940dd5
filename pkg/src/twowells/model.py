"""Physical parameters and the operators shared by all engines.

Units use hbar = 1 throughout. The three-state basis is ordered

    index 0:  |0>  both wells empty (the particle is in the reservoir)
    index 1:  |1>  particle in the left well
    index 2:  |2>  particle in the right well

Level widths follow the golden rule, ``gamma_i = 2*pi*rho*omega_i**2``.
All containers in this module are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidParamsError, InvalidStateError

EMPTY, LEFT, RIGHT = 0, 1, 2


@dataclass(frozen=True)
class WellParams:
    """Bare parameters of the two wells and the flat reservoir.

    Attributes
    ----------
    e1, e2 : float
        Level energies of the left and right well.
    omega1, omega2 : float
        Real tunneling couplings of each well to the reservoir; signs are
        allowed (relative parity of the well states), but they must not both
        vanish.
    rho_dos : float
        Reservoir density of states (states per unit energy), > 0.
    """

    e1: float
    e2: float
    omega1: float
    omega2: float
    rho_dos: float

    def __post_init__(self):
        values = (self.e1, self.e2, self.omega1, self.omega2, self.rho_dos)
        if not all(math.isfinite(v) for v in values):
            raise InvalidParamsError("all well parameters must be finite")
        if self.rho_dos <= 0.0:
            raise InvalidParamsError("rho_dos must be positive")
        if self.omega1 == 0.0 and self.omega2 == 0.0:
            raise InvalidParamsError("omega1 and omega2 must not both vanish")


@dataclass(frozen=True)
class RateSet:
    """Rates and dimensionless combinations derived from :class:`WellParams`.

    ``omega_rabi`` is the principal square root of ``gamma**2 - eps**2``
    (purely imaginary for eps > gamma); it is only defined for the symmetric
    case gamma1 == gamma2 and is ``None`` otherwise.  ``chi`` is the coupling
    ratio omega2/omega1 (signed infinity when omega1 == 0) and ``eta`` its
    sign (+1 when either coupling vanishes).
    """

    gamma1: float
    gamma2: float
    eps: float
    chi: float
    eta: int
    omega_rabi: complex | None


class JumpOperator(NamedTuple):
    """A reservoir-detection operator together with its overall rate.

    The dissipator of the unconditional master equation is
    ``rate * (a s a^+ - {a^+ a, s}/2)`` with ``a = matrix``.
    """

    matrix: np.ndarray
    rate: float


def derive_rates(p: WellParams) -> RateSet:
    """Golden-rule widths and coupling asymmetry for a parameter set."""
    gamma1 = 2.0 * math.pi * p.rho_dos * p.omega1**2
    gamma2 = 2.0 * math.pi * p.rho_dos * p.omega2**2
    eps = p.e1 - p.e2
    if p.omega1 != 0.0:
        chi = p.omega2 / p.omega1
    else:
        chi = math.copysign(math.inf, p.omega2)
    product = p.omega1 * p.omega2
    eta = 1 if product >= 0.0 else -1
    omega_rabi: complex | None = None
    if gamma1 == gamma2:
        omega_rabi = complex(np.sqrt(complex(gamma1**2 - eps**2)))
    return RateSet(gamma1, gamma2, eps, chi, eta, omega_rabi)


def params_from_rates(
    gamma1: float,
    gamma2: float,
    eps: float,
    eta: int = 1,
    rho_dos: float = 1.0 / (2.0 * math.pi),
) -> WellParams:
    """Build :class:`WellParams` from target widths.

    The couplings are fixed by inverting the golden rule at the given
    density of states; ``eta`` sets the sign of omega2, and the level
    displacement is split symmetrically, ``e1 = eps/2 = -e2``.
    """
    if gamma1 < 0.0 or gamma2 < 0.0:
        raise InvalidParamsError("widths must be nonnegative")
    if eta not in (-1, 1):
        raise InvalidParamsError("eta must be +1 or -1")
    omega1 = math.sqrt(gamma1 / (2.0 * math.pi * rho_dos))
    omega2 = eta * math.sqrt(gamma2 / (2.0 * math.pi * rho_dos))
    return WellParams(e1=0.5 * eps, e2=-0.5 * eps, omega1=omega1, omega2=omega2, rho_dos=rho_dos)


def system_hamiltonian(p: WellParams) -> np.ndarray:
    """Hamiltonian of the wells alone, diag(0, e1, e2)."""
    return np.diag([0.0, p.e1, p.e2]).astype(complex)


def build_jump_operator(p: WellParams) -> JumpOperator:
    """Detection operator for a particle entering the reservoir.

    The operator annihilates |0> and maps the wells onto |0> with relative
    amplitudes (1, chi); the overall rate gamma1 is carried separately.  When
    omega1 == 0 the ratio chi is undefined, so the reversed parametrization
    with relative amplitudes (omega1/omega2, 1) at rate gamma2 is used; both
    describe the identical dissipator whenever both are defined.
    """
    rates = derive_rates(p)
    a = np.zeros((3, 3), dtype=complex)
    if p.omega1 != 0.0:
        a[EMPTY, LEFT] = 1.0
        a[EMPTY, RIGHT] = p.omega2 / p.omega1
        return JumpOperator(a, rates.gamma1)
    a[EMPTY, LEFT] = p.omega1 / p.omega2
    a[EMPTY, RIGHT] = 1.0
    return JumpOperator(a, rates.gamma2)


def dark_bright_states(omega1: float, omega2: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal wells combinations decoupled from / coupled to the reservoir.

    Returns (dark, bright) as length-2 real vectors over (|1>, |2>):
    dark = (omega2, -omega1)/s and bright = (omega1, omega2)/s.  For aligned
    levels the dark state is an exact eigenstate embedded in the continuum.
    """
    s = math.hypot(omega1, omega2)
    if s == 0.0:
        raise InvalidParamsError("omega1 and omega2 must not both vanish")
    dark = np.array([omega2, -omega1]) / s
    bright = np.array([omega1, omega2]) / s
    return dark, bright


def check_density_matrix(
    sigma: np.ndarray,
    dim: int,
    herm_tol: float = 1e-12,
    trace_tol: float = 1e-10,
    psd_tol: float = 1e-10,
) -> np.ndarray:
    """Validate a density matrix and return it as a complex ndarray.

    Checks shape, Hermiticity, unit trace and positive semidefiniteness at
    the given tolerances; raises :class:`InvalidStateError` otherwise.
    """
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (dim, dim):
        raise InvalidStateError(f"expected a {dim}x{dim} matrix, got {sigma.shape}")
    if not np.all(np.isfinite(sigma.view(float))):
        raise InvalidStateError("density matrix has non-finite entries")
    if np.max(np.abs(sigma - sigma.conj().T)) > herm_tol:
        raise InvalidStateError("density matrix is not Hermitian")
    if abs(sigma.trace().real - 1.0) > trace_tol or abs(sigma.trace().imag) > trace_tol:
        raise InvalidStateError("density matrix trace differs from 1")
    if np.linalg.eigvalsh(sigma).min() < -psd_tol:
        raise InvalidStateError("density matrix is not positive semidefinite")
    return sigma


def density_from_pure(vec: np.ndarray) -> np.ndarray:
    """Projector |v><v| of a normalized state vector."""
    vec = np.asarray(vec, dtype=complex)
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        raise InvalidStateError("cannot normalize the zero vector")
    vec = vec / norm
    return np.outer(vec, vec.conj())
