"""Closed-form occupations for equal level widths (gamma1 == gamma2 == gamma).

All functions take the common width ``gamma``, the level displacement
``eps = e1 - e2`` and a time ``t`` (with the particle starting in the left
well), and only ever depend on ``eps**2``.  Passing ``t = math.inf`` requests
the exact asymptotic value instead of evaluating at a huge time.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import InvalidParamsError

# |omega|*t below which the degenerate (omega -> 0) power series is used.
_SERIES_CUTOFF = 1e-4


class OccupationPair(NamedTuple):
    """Occupation probabilities (left well, right well)."""

    p1: float
    p2: float


def _check_args(gamma: float, t: float) -> None:
    if not (gamma > 0.0) or not math.isfinite(gamma):
        raise InvalidParamsError("gamma must be positive and finite")
    if math.isnan(t) or t < 0.0:
        raise InvalidParamsError("t must be nonnegative")


def _sinhc2(w2: float, t: float) -> float:
    """sinh(omega*t/2)**2 / omega**2 for omega**2 = w2 of either sign.

    For negative w2 this is sin(v*t/2)**2 / v**2 with v = sqrt(-w2); the
    function is analytic in w2, and the removable point w2 -> 0 is evaluated
    by its even power series once |omega|*t drops below the cutoff.
    """
    z2 = 0.25 * w2 * t * t  # (omega*t/2)**2, signed
    if abs(z2) < 0.25 * _SERIES_CUTOFF**2:
        g = 1.0 + z2 / 3.0 + 2.0 * z2 * z2 / 45.0 + z2**3 / 315.0
        return 0.25 * t * t * g
    if w2 > 0.0:
        w = math.sqrt(w2)
        return (math.sinh(0.5 * w * t) / w) ** 2
    v = math.sqrt(-w2)
    return (math.sin(0.5 * v * t) / v) ** 2


def _transfer_term(gamma: float, w2: float, t: float) -> float:
    """gamma**2 * sinh(omega t/2)**2 * exp(-gamma t) / omega**2, overflow-safe."""
    z = 0.5 * t * math.sqrt(abs(w2)) if w2 != 0.0 else 0.0
    if w2 > 0.0 and z > 300.0:
        # sinh**2 would overflow; fold the decay into the exponent first.
        w = math.sqrt(w2)
        em = -math.expm1(-w * t)  # 1 - exp(-w t)
        return (gamma * gamma / (4.0 * w2)) * math.exp((w - gamma) * t) * em * em
    return gamma * gamma * _sinhc2(w2, t) * math.exp(-gamma * t)


def unconditional_occupations(gamma: float, eps: float, t: float) -> OccupationPair:
    """Well occupations with the reservoir traced out (all records counted).

    The symmetric-width solution, started from the left well, is

        p1 = exp(-gamma t) * [gamma^2 cosh^2(omega t/2) - eps^2] / omega^2
        p2 = exp(-gamma t) *  gamma^2 sinh^2(omega t/2) / omega^2

    with omega = sqrt(gamma^2 - eps^2); both are evaluated in the
    cancellation-free form p1 = exp(-gamma t) + p2-term, which is real for
    every eps (trigonometric regime included).
    """
    _check_args(gamma, t)
    if math.isinf(t):
        if eps == 0.0:
            return OccupationPair(0.25, 0.25)
        return OccupationPair(0.0, 0.0)
    w2 = gamma * gamma - eps * eps
    q = _transfer_term(gamma, w2, t)
    return OccupationPair(math.exp(-gamma * t) + q, q)


def survival_probability(gamma: float, eps: float, t: float) -> float:
    """Probability p1 + p2 that the particle is still inside the wells."""
    _check_args(gamma, t)
    if math.isinf(t):
        return 0.5 if eps == 0.0 else 0.0
    w2 = gamma * gamma - eps * eps
    return math.exp(-gamma * t) + 2.0 * _transfer_term(gamma, w2, t)


def conditional_occupations(gamma: float, eps: float, t: float) -> OccupationPair:
    """Well occupations conditioned on the reservoir never having fired.

    Equivalent closed form of the null-record state,

        p1 = [cosh(omega t) + 1 - 2 eps^2/gamma^2] / [2 (cosh(omega t) - eps^2/gamma^2)]
        p2 = [cosh(omega t) - 1]                   / [2 (cosh(omega t) - eps^2/gamma^2)]

    evaluated as p1 = (S + w)/(2S + w), p2 = S/(2S + w) with
    S = sinh^2(omega t/2) and w = omega^2/gamma^2, which is stable for every
    eps.  The t -> inf limit is (1/2, 1/2) for eps <= gamma; for eps > gamma
    the pair oscillates forever and the asymptotic query is rejected.
    """
    _check_args(gamma, t)
    w2 = gamma * gamma - eps * eps
    if math.isinf(t):
        if w2 < 0.0:
            raise InvalidParamsError(
                "conditional occupations have no t->inf limit for eps > gamma"
            )
        return OccupationPair(0.5, 0.5)
    wg = w2 / (gamma * gamma)
    z = 0.5 * t * math.sqrt(abs(w2)) if w2 != 0.0 else 0.0
    if abs(w2) * t * t < _SERIES_CUTOFF**2:
        # omega -> 0: divide numerator and denominator by omega**2.
        r = _sinhc2(w2, t)  # sinh^2(omega t/2)/omega^2
        ginv = 1.0 / (gamma * gamma)
        den = 2.0 * r + ginv
        return OccupationPair((r + ginv) / den, r / den)
    if w2 > 0.0 and z > 300.0:
        # sinh**2 would overflow; expand around the saturated limit.
        u = 4.0 * wg * math.exp(-2.0 * z)
        return OccupationPair((1.0 + u) / (2.0 + u), 1.0 / (2.0 + u))
    if w2 > 0.0:
        s = math.sinh(z) ** 2
        den = 2.0 * s + wg
        return OccupationPair((s + wg) / den, s / den)
    s = math.sin(z) ** 2
    den = 2.0 * s - wg  # wg < 0 here, denominator stays positive
    return OccupationPair((s - wg) / den, s / den)


def steady_conditional(chi: float) -> OccupationPair:
    """Stationary null-record occupations versus the coupling ratio chi.

    Closed form (chi^2/(1+chi^2), 1/(1+chi^2)): the null-record state relaxes
    onto the reservoir-decoupled wells combination, whose weights depend only
    on chi^2.  At chi == 0 this returns the chi -> 0 limit of the long-time
    value; the opposite order of limits would instead pin the particle in the
    left well, so the curve is nonanalytic there.
    """
    if not math.isfinite(chi):
        raise InvalidParamsError("chi must be finite")
    c2 = chi * chi
    return OccupationPair(c2 / (1.0 + c2), 1.0 / (1.0 + c2))


def occupations_on_grid(gamma: float, eps: float, times: np.ndarray, conditional: bool = False):
    """Vectorized convenience wrapper returning an (n, 2) array over a grid."""
    times = np.asarray(times, dtype=float)
    fn = conditional_occupations if conditional else unconditional_occupations
    return np.array([fn(gamma, eps, float(t)) for t in times])
