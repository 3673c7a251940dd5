"""Measurement-conditioned dynamics on the wells subspace.

The reservoir detector defines a record: either it never fires (null
record), in which case the state follows the non-Hermitian propagator
``exp(-i (H_S - i K/2) t)`` renormalized by its trace, or it fires once and
the particle is absorbed into the reservoir for good (the empty state is
dark to both the Hamiltonian and the detector, so at most one jump can ever
occur).

Stochastic unraveling uses waiting-time sampling: a single uniform draw per
trajectory thresholds the decaying squared norm of the unnormalized
conditional state, which reproduces the jump-time distribution without any
finite-step bias.

Reproducibility contract: trajectory ``k`` of an ensemble with master seed
``m`` draws its uniforms from ``numpy.random.Generator(Philox(key=m,
counter=k * 2**192))``, i.e. the counter-partitioned Philox stream; results
are therefore identical across machines and any execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidParamsError, InvalidStateError, StepFailureError, VanishingSurvivalError
from .lindblad import TimeSeries
from .model import WellParams, derive_rates

_JUMP_TIME_RTOL = 1e-9


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic record: jump time (None if none) and the occupations.

    ``occupations`` holds (empty, left, right) probabilities per grid time;
    rows sum to one before the jump and equal (1, 0, 0) after it.
    """

    seed: int
    jump_time: float | None
    occupations: TimeSeries


def decay_matrix(p: WellParams) -> np.ndarray:
    """Positive semidefinite wells-block rate matrix K of the detector.

    K = [[gamma1, eta*sqrt(gamma1*gamma2)], [eta*sqrt(gamma1*gamma2), gamma2]];
    this is rate * (a^+ a) restricted to the wells in either parametrization
    of the jump operator.
    """
    r = derive_rates(p)
    cross = r.eta * math.sqrt(r.gamma1 * r.gamma2)
    return np.array([[r.gamma1, cross], [cross, r.gamma2]], dtype=complex)


def effective_hamiltonian(p: WellParams) -> np.ndarray:
    """Non-Hermitian wells Hamiltonian H_S - i K / 2 driving null records."""
    return np.diag([p.e1, p.e2]).astype(complex) - 0.5j * decay_matrix(p)


def _phi(z: np.ndarray) -> np.ndarray:
    """(1 - exp(-2z)) / (2z), the phi(0)=1 branch, for Re(z) >= 0."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 1.0 - zs + (2.0 / 3.0) * zs**2 - (1.0 / 3.0) * zs**3
    zb = z[~small]
    out[~small] = (1.0 - np.exp(-2.0 * zb)) / (2.0 * zb)
    return out


def propagator(p: WellParams, times: np.ndarray | float) -> np.ndarray:
    """exp(-i H_eff t) for scalar or vector t, in closed 2x2 form.

    Splits the generator A = -i H_eff into trace and traceless parts,
    A = a I + B with B^2 = s^2 I, and evaluates
    exp(A t) = exp((a+s)t) [ (1+exp(-2st))/2 I + t phi(st) B ]
    with the square-root branch chosen so Re(s) >= 0.  All exponents have
    nonpositive real part for a decaying H_eff, so nothing overflows.
    """
    t = np.atleast_1d(np.asarray(times, dtype=float))
    gen = -1j * effective_hamiltonian(p)
    a = 0.5 * (gen[0, 0] + gen[1, 1])
    b = gen - a * np.eye(2)
    s = np.sqrt(b[0, 0] ** 2 + b[0, 1] * b[1, 0])
    if s.real < 0.0:
        s = -s
    z = s * t
    lead = np.exp((a + s) * t)
    u = np.empty((t.size, 2, 2), dtype=complex)
    cosh_term = lead * 0.5 * (1.0 + np.exp(-2.0 * z))
    sinh_term = lead * t * _phi(z)
    u[:] = cosh_term[:, None, None] * np.eye(2)
    u += sinh_term[:, None, None] * b[None, :, :]
    if np.isscalar(times) or np.ndim(times) == 0:
        return u[0]
    return u


def _check_conditional_state(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidStateError("expected a 2x2 wells-subspace state")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise InvalidStateError("conditional state is not Hermitian")
    if abs(rho.trace().real - 1.0) > 1e-10:
        raise InvalidStateError("conditional state trace differs from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise InvalidStateError("conditional state is not positive semidefinite")
    return rho


def null_result_evolve(
    p: WellParams, rho0: np.ndarray, t: float
) -> tuple[np.ndarray, float]:
    """State after a null record of duration t, plus the record probability.

    Propagates the unnormalized state U rho0 U^+ and divides by its trace;
    the trace itself is returned as the probability of the detector staying
    silent over [0, t].
    """
    rho0 = _check_conditional_state(rho0)
    if not (t >= 0.0):
        raise InvalidParamsError("t must be nonnegative")
    u = propagator(p, float(t))
    raw = u @ rho0 @ u.conj().T
    norm = float(raw.trace().real)
    if norm < 1e-300:
        raise VanishingSurvivalError(f"null-record probability underflowed at t={t}")
    return raw / norm, norm


def null_result_evolve_nonlinear(
    p: WellParams,
    rho0: np.ndarray,
    t: float,
    rtol: float = 1e-11,
    atol: float = 1e-13,
) -> np.ndarray:
    """Integrate the nonlinear null-record equation of motion directly.

    drho/dt = -i[H_S, rho] + Tr[K rho] rho - {K, rho}/2; the trace-restoring
    term makes it nonlinear.  Used as an independent check of the
    propagate-then-normalize route.
    """
    rho0 = _check_conditional_state(rho0)
    hs = np.diag([p.e1, p.e2]).astype(complex)
    k = decay_matrix(p)

    def rhs(_t, y):
        rho = y.reshape(2, 2)
        drho = -1j * (hs @ rho - rho @ hs)
        drho += np.trace(k @ rho) * rho - 0.5 * (k @ rho + rho @ k)
        return drho.ravel()

    sol = solve_ivp(rhs, (0.0, float(t)), rho0.ravel(), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise StepFailureError(f"null-record integrator failed: {sol.message}")
    return sol.y[:, -1].reshape(2, 2)


def _pure_vector(state: np.ndarray) -> np.ndarray:
    """Extract the normalized amplitude vector of a pure wells state."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        if state.shape != (2,):
            raise InvalidStateError("expected 2 amplitudes")
        norm = np.linalg.norm(state)
        if norm == 0.0:
            raise InvalidStateError("cannot normalize the zero vector")
        return state / norm
    rho = _check_conditional_state(state)
    vals, vecs = np.linalg.eigh(rho)
    if vals[0] > 1e-10:  # smaller eigenvalue should vanish for a pure state
        raise InvalidStateError("initial state is not pure; decompose it first")
    return vecs[:, 1]


def _stream(master_seed: int, k: int) -> np.random.Generator:
    """Counter-partitioned Philox stream for trajectory k (see module docs)."""
    return np.random.Generator(np.random.Philox(key=master_seed, counter=k << 192))


def _check_uniform_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2 or grid[0] != 0.0:
        raise InvalidParamsError("grid must start at 0 and contain at least two points")
    steps = np.diff(grid)
    if not np.all(steps > 0.0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise InvalidParamsError("grid must be uniform and increasing")
    return grid


def _norm_series(p: WellParams, psi: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    amps = propagator(p, grid) @ psi
    return amps, np.einsum("ij,ij->i", amps, amps.conj()).real


def _refine_jump_time(p: WellParams, psi: np.ndarray, lo: float, hi: float, u: float) -> float:
    """Bisect the first passage of the squared norm below u inside (lo, hi]."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= _JUMP_TIME_RTOL * max(abs(mid), 1e-30):
            break
        amp = propagator(p, mid) @ psi
        if float(np.vdot(amp, amp).real) < u:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def sample_trajectory(
    p: WellParams, psi0: np.ndarray, grid: np.ndarray, seed: int
) -> TrajectoryRecord:
    """Sample one record of the continuously monitored pair of wells.

    Draws a single uniform u and propagates the unnormalized pure state
    under the non-Hermitian Hamiltonian; the detector fires when the squared
    norm first drops below u (refined inside the bracketing step to 1e-9
    relative), after which the state is pinned to the empty wells.
    """
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise InvalidParamsError("seed must be a nonnegative integer")
    grid = _check_uniform_grid(grid)
    psi = _pure_vector(psi0)
    u = _stream(int(seed), 0).random()
    occupations, jump_time = _trajectory_occupations(p, psi, grid, u)
    series = TimeSeries(grid, occupations, {"params": p, "seed": int(seed)})
    return TrajectoryRecord(int(seed), jump_time, series)


def _trajectory_occupations(
    p: WellParams, psi: np.ndarray, grid: np.ndarray, u: float
) -> tuple[np.ndarray, float | None]:
    amps, norms = _norm_series(p, psi, grid)
    alive = norms >= u  # the detector has not yet fired while the norm is >= u
    occ = np.zeros((grid.size, 3))
    occ[:, 0] = 1.0
    if np.any(alive):
        occ[alive, 1] = np.abs(amps[alive, 0]) ** 2 / norms[alive]
        occ[alive, 2] = np.abs(amps[alive, 1]) ** 2 / norms[alive]
        occ[alive, 0] = 0.0
    jump_time = None
    if not alive[-1]:
        first_dead = int(np.argmin(alive))  # first False; alive[0] is True since norms[0]=1>=u
        jump_time = _refine_jump_time(p, psi, float(grid[first_dead - 1]), float(grid[first_dead]), u)
    return occ, jump_time


def ensemble_average(
    p: WellParams,
    rho0: np.ndarray,
    grid: np.ndarray,
    n_traj: int,
    master_seed: int,
) -> TimeSeries:
    """Mean (empty, left, right) occupations over n_traj records.

    A mixed initial state is split into its eigenstates; each trajectory
    first draws the component (by weight) and then its waiting-time uniform,
    both from its own counter-partitioned stream.  The mean and its standard
    error are accumulated in closed form from the per-component survivor
    counts, which is exactly order-insensitive; reruns with the same master
    seed are bit-identical.

    Returns a series of shape (n, 3) with ``meta["stderr"]`` of the same
    shape and ``meta["no_jump_fraction"]`` the surviving fraction at the
    final grid time.
    """
    if n_traj < 1:
        raise InvalidParamsError("n_traj must be at least 1")
    if master_seed < 0:
        raise InvalidParamsError("master_seed must be a nonnegative integer")
    grid = _check_uniform_grid(grid)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim == 1:
        components = [(1.0, _pure_vector(rho0))]
    else:
        rho0 = _check_conditional_state(rho0)
        vals, vecs = np.linalg.eigh(rho0)
        order = np.argsort(vals)[::-1]  # heaviest component first
        components = [
            (float(vals[i]), vecs[:, i]) for i in order if vals[i] > 1e-12
        ]
    weights = np.array([w for w, _ in components])
    weights = weights / weights.sum()
    cum = np.cumsum(weights)

    # Per-component unnormalized amplitudes and norms on the grid.
    amps = [_norm_series(p, psi, grid) for _, psi in components]

    comp_idx = np.empty(n_traj, dtype=np.intp)
    us = np.empty(n_traj)
    single = len(components) == 1
    for k in range(n_traj):
        rng = _stream(master_seed, k)
        if single:
            comp_idx[k] = 0
        else:
            comp_idx[k] = int(np.searchsorted(cum, rng.random(), side="right"))
        us[k] = rng.random()

    nt = grid.size
    mean = np.zeros((nt, 3))
    second = np.zeros((nt, 3))
    survivors_total = np.zeros(nt)
    empty_occ = np.array([1.0, 0.0, 0.0])
    for c, (amp, norms) in enumerate(amps):
        u_c = us[comp_idx == c]
        if u_c.size == 0:
            continue
        survivors = (u_c[None, :] <= norms[:, None]).sum(axis=1).astype(float)
        survivors_total += survivors
        live = np.zeros((nt, 3))
        live[:, 1] = np.abs(amp[:, 0]) ** 2 / norms
        live[:, 2] = np.abs(amp[:, 1]) ** 2 / norms
        dead_count = u_c.size - survivors
        mean += survivors[:, None] * live + dead_count[:, None] * empty_occ
        second += survivors[:, None] * live**2 + dead_count[:, None] * empty_occ**2
    mean /= n_traj
    second /= n_traj
    var = np.maximum(second - mean**2, 0.0)
    if n_traj > 1:
        var *= n_traj / (n_traj - 1.0)
    stderr = np.sqrt(var / n_traj)
    meta = {
        "params": p,
        "engine": "trajectory-ensemble",
        "n_traj": n_traj,
        "master_seed": master_seed,
        "stderr": stderr,
        "no_jump_fraction": float(survivors_total[-1] / n_traj),
    }
    return TimeSeries(grid, mean, meta)
