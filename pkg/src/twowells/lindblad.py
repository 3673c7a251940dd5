"""Unconditional evolution of the 3-state reduced density matrix.

Two independent propagation routes are provided: the matrix exponential of
the 9x9 generator over vectorized density matrices (the reference, exact to
round-off for this time-independent problem) and an adaptive explicit
integrator.  The generator itself can also be assembled term by term from
the wells-block master equations, which the tests pit against the
superoperator form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import InvalidStateError, StepFailureError, VanishingSurvivalError
from .model import (
    RateSet,
    WellParams,
    build_jump_operator,
    check_density_matrix,
    system_hamiltonian,
)

_I3 = np.eye(3, dtype=complex)


def _vec(sigma: np.ndarray) -> np.ndarray:
    return np.asarray(sigma, dtype=complex).flatten(order="F")


def _unvec(v: np.ndarray) -> np.ndarray:
    return v.reshape((3, 3), order="F")


@dataclass(frozen=True)
class Liouvillian:
    """Generator of the unconditional dynamics as a 9x9 matrix.

    Acts on column-stacked 3x3 density matrices; it is trace preserving and
    Hermiticity preserving by construction.
    """

    matrix: np.ndarray

    def apply(self, sigma: np.ndarray) -> np.ndarray:
        """Time derivative of a density matrix."""
        return _unvec(self.matrix @ _vec(sigma))


@dataclass
class TimeSeries:
    """States sampled on a strictly increasing time grid.

    ``states`` is an ndarray whose first axis matches ``times``; ``meta``
    carries the parameter snapshot that produced the series.
    """

    times: np.ndarray
    states: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states)
        if self.times.ndim != 1:
            raise InvalidStateError("times must be one-dimensional")
        if len(self.states) != len(self.times):
            raise InvalidStateError("times and states lengths differ")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0.0):
            raise InvalidStateError("times must be strictly increasing")


def build_liouvillian(p: WellParams) -> Liouvillian:
    """Assemble the generator -i[H, s] + rate * D[a]s in superoperator form."""
    h = system_hamiltonian(p)
    a, rate = build_jump_operator(p)
    ada = a.conj().T @ a
    mat = -1j * (np.kron(_I3, h) - np.kron(h.T, _I3))
    mat += rate * (
        np.kron(a.conj(), a)
        - 0.5 * (np.kron(_I3, ada) + np.kron(ada.T, _I3))
    )
    return Liouvillian(mat)


def master_rhs_explicit(sigma: np.ndarray, rates: RateSet) -> np.ndarray:
    """Wells-block master equations assembled term by term.

    The cross coupling is eta*sqrt(gamma1*gamma2)/2 and the empty-state rate
    balances the wells by trace conservation.  Coherences between the empty
    state and the wells are outside the scope of these equations; states
    carrying them are rejected.
    """
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape != (3, 3):
        raise InvalidStateError("expected a 3x3 density matrix")
    if np.max(np.abs(sigma[0, 1:])) > 1e-12 or np.max(np.abs(sigma[1:, 0])) > 1e-12:
        raise InvalidStateError(
            "empty-wells coherences are not covered by the explicit master equations"
        )
    g1, g2 = rates.gamma1, rates.gamma2
    cross = 0.5 * rates.eta * np.sqrt(g1 * g2)
    s11, s22, s12, s21 = sigma[1, 1], sigma[2, 2], sigma[1, 2], sigma[2, 1]
    d = np.zeros((3, 3), dtype=complex)
    d[1, 1] = -g1 * s11 - cross * (s12 + s21)
    d[2, 2] = -g2 * s22 - cross * (s12 + s21)
    d[1, 2] = 1j * (-rates.eps) * s12 - cross * (s11 + s22) - 0.5 * (g1 + g2) * s12
    d[2, 1] = np.conj(d[1, 2])
    d[0, 0] = -(d[1, 1] + d[2, 2])
    return d


def _validate_series_state(sigma: np.ndarray, t: float) -> None:
    try:
        check_density_matrix(sigma, 3, herm_tol=1e-10, trace_tol=1e-10, psd_tol=1e-8)
    except InvalidStateError as exc:
        raise StepFailureError(f"propagated state invalid at t={t}: {exc}") from exc


def evolve_unconditional(
    p: WellParams,
    sigma0: np.ndarray,
    times: np.ndarray,
    method: str = "expm",
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> TimeSeries:
    """Propagate a density matrix on a time grid starting at 0.

    ``method="expm"`` evaluates expm(L t) per grid point (reference route);
    ``method="ode"`` integrates the same generator with an adaptive
    high-order scheme.  Every output state is validated against the density
    matrix invariants; a violation raises instead of degrading silently.
    """
    sigma0 = check_density_matrix(sigma0, 3)
    times = np.asarray(times, dtype=float)
    if times.size == 0 or times[0] != 0.0:
        raise InvalidStateError("time grid must start at 0")
    liou = build_liouvillian(p)
    v0 = _vec(sigma0)
    if method == "expm":
        states = np.empty((times.size, 3, 3), dtype=complex)
        for i, t in enumerate(times):
            states[i] = _unvec(expm(liou.matrix * t) @ v0)
    elif method == "ode":
        sol = solve_ivp(
            lambda _t, y: liou.matrix @ y,
            (times[0], times[-1]),
            v0,
            t_eval=times,
            method="DOP853",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise StepFailureError(f"integrator failed: {sol.message}")
        states = sol.y.T.reshape(-1, 3, 3).transpose(0, 2, 1)  # undo column stacking
    else:
        raise ValueError(f"unknown method {method!r}")
    for t, s in zip(times, states):
        _validate_series_state(s, float(t))
    meta = {"params": p, "engine": "lindblad", "method": method}
    return TimeSeries(times, states, meta)


def conditional_from_unconditional(series: TimeSeries, tol: float = 1e-12) -> TimeSeries:
    """Normalize the wells block of each state by its survival probability.

    Returns a series of 2x2 conditional states over (|1>, |2>); the survival
    probabilities are passed along in ``meta["survival"]``.  Underflowing
    survival raises with the first offending time.
    """
    survival = np.real(series.states[:, 1, 1] + series.states[:, 2, 2])
    bad = np.nonzero(survival <= tol)[0]
    if bad.size:
        raise VanishingSurvivalError(
            f"survival probability below {tol} first at t={series.times[bad[0]]}"
        )
    cond = series.states[:, 1:, 1:] / survival[:, None, None]
    meta = dict(series.meta)
    meta["survival"] = survival
    return TimeSeries(series.times, cond, meta)
