"""Exact eigensolver for real symmetric arrowhead matrices.

An arrowhead matrix has one dense row/column (the head) bordering a
diagonal block (the tail):

    M = [[alpha, z^T ],
         [z,     diag(d)]]

Its eigenvalues are the roots of the secular function

    f(lam) = lam - alpha - sum_j z_j^2 / (lam - d_j),

which strictly interlace the sorted tail diagonal.  The solver finds every
root to high relative accuracy with respect to its nearest pole and then
rebuilds the couplings from the computed roots (inverse eigenvalue problem),
so the assembled eigenvectors are mutually orthogonal to round-off even for
tightly clustered eigenvalues.  Total cost is O(K^2) time and memory, far
below dense O(K^3) diagonalization for the band sizes used here.

Zero couplings deflate exactly; (near-)duplicate tail entries are merged by
an orthogonal reflection first, as in divide-and-conquer eigensolvers.
"""

from __future__ import annotations

import numpy as np

from .errors import StepFailureError

_EPS = float(np.finfo(float).eps)
_CHUNK = 512
_MAX_NEWTON = 80


def _secular_at(alpha: float, d: np.ndarray, z2: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """f(lam) for a vector of points well away from the poles."""
    diff = lam[:, None] - d[None, :]
    return lam - alpha - (z2[None, :] / diff).sum(axis=1)


def _newton_chunk(alpha, d, z2, centers, lo, hi):
    """Bracketed Newton iteration on the offset mu = lam - d[center].

    The bracket (lo, hi) always contains the root with f(lo) < 0 < f(hi)
    in the limit sense; every evaluation computes the own-pole term as
    z_c^2 / mu exactly, which preserves relative accuracy of mu.
    """
    cd = d[centers][:, None] - d[None, :]  # exact float differences between poles
    base = d[centers] - alpha

    # Two-term initial guess: freeze the far poles at mu = 0 and solve the
    # remaining quadratic mu^2 + A mu - z_c^2 = 0 on the bracket side.
    far = cd.copy()
    rows = np.arange(centers.size)
    far[rows, centers] = np.inf
    a_coef = base - (z2[None, :] / far).sum(axis=1)
    zc2 = z2[centers]
    disc = np.sqrt(a_coef * a_coef + 4.0 * zc2)
    side = np.where(hi > 0.0, 1.0, -1.0)
    mu = 0.5 * (-a_coef + side * disc)
    bad = ~((mu > lo) & (mu < hi))
    mu[bad] = 0.5 * (lo[bad] + hi[bad])

    converged = np.zeros(centers.size, dtype=bool)
    for _ in range(_MAX_NEWTON):
        diff = cd + mu[:, None]
        ratio = z2[None, :] / diff
        g = base + mu - ratio.sum(axis=1)
        gp = 1.0 + (ratio / diff).sum(axis=1)
        neg = g < 0.0
        lo = np.where(~converged & neg, mu, lo)
        hi = np.where(~converged & ~neg, mu, hi)
        newton = mu - g / gp
        inside = (newton > lo) & (newton < hi)
        mu_new = np.where(inside, newton, 0.5 * (lo + hi))
        done = (np.abs(mu_new - mu) <= 4.0 * _EPS * np.abs(mu_new)) | (g == 0.0)
        mu = np.where(converged, mu, mu_new)
        converged |= done
        if converged.all():
            break
    return mu


def _solve_secular(alpha: float, d: np.ndarray, z: np.ndarray):
    """All K+1 roots for strictly increasing d and nonzero z.

    Returns (centers, mus): root i equals d[centers[i]] + mus[i] with the
    offset accurate to a few ulp relative to itself.
    """
    k = d.size
    z2 = z * z
    znorm = float(np.sqrt(z2.sum()))
    scale = max(abs(alpha), float(np.abs(d).max()), znorm)
    pad = 1.0 + 1e-3 * scale
    lb = min(float(d[0]), alpha) - znorm - pad
    ub = max(float(d[-1]), alpha) + znorm + pad

    centers = np.empty(k + 1, dtype=np.intp)
    lo = np.empty(k + 1)
    hi = np.empty(k + 1)
    centers[0], lo[0], hi[0] = 0, lb - d[0], 0.0
    centers[k], lo[k], hi[k] = k - 1, 0.0, ub - d[k - 1]
    if k > 1:
        mids = 0.5 * (d[:-1] + d[1:])
        fmid = np.empty(k - 1)
        for start in range(0, k - 1, _CHUNK):
            sl = slice(start, min(start + _CHUNK, k - 1))
            fmid[sl] = _secular_at(alpha, d, z2, mids[sl])
        left = fmid > 0.0  # root lies in the lower half of the interval
        centers[1:k] = np.where(left, np.arange(k - 1), np.arange(1, k))
        lo[1:k] = np.where(left, 0.0, mids - d[1:])
        hi[1:k] = np.where(left, mids - d[:-1], 0.0)

    mus = np.empty(k + 1)
    for start in range(0, k + 1, _CHUNK):
        sl = slice(start, min(start + _CHUNK, k + 1))
        mus[sl] = _newton_chunk(alpha, d, z2, centers[sl], lo[sl].copy(), hi[sl].copy())
    return centers, mus


def _rebuild_couplings(d, centers, mus, z):
    """Couplings consistent with the computed roots (inverse problem).

    With interlacing lam_0 < d_0 < lam_1 < ... < d_{K-1} < lam_K, pairing
    each root factor with a neighbouring pole difference keeps every ratio
    positive and of moderate size:

        zt_j^2 = (d_j - lam_0)(lam_{j+1} - d_j)
                 * prod_{i != j} (d_j - lam_{i+1}) / (d_j - d_i).
    """
    k = d.size
    zt = np.empty(k)
    idx = np.arange(k)
    for start in range(0, k, _CHUNK):
        sl = slice(start, min(start + _CHUNK, k))
        j = idx[sl]
        dl = (d[j][:, None] - d[centers][None, :]) - mus[None, :]  # d_j - lam_i
        dd = d[j][:, None] - d[None, :]
        np.put_along_axis(dd, j[:, None], 1.0, axis=1)
        ratios = dl[:, 1:] / dd
        np.put_along_axis(ratios, j[:, None], 1.0, axis=1)
        own = np.take_along_axis(dl, j[:, None] + 1, axis=1)[:, 0]  # d_j - lam_{j+1}
        zt2 = -dl[:, 0] * own * np.prod(ratios, axis=1)
        if not np.all(np.isfinite(zt2)) or np.any(zt2 <= 0.0):
            raise StepFailureError("secular roots inconsistent with interlacing")
        zt[sl] = np.sqrt(zt2)
    return np.copysign(zt, z)


def _assemble_vectors(d, centers, mus, zt):
    """Orthonormal eigenvectors (head row first) from rebuilt couplings."""
    k = d.size
    v = np.empty((k + 1, k + 1))
    for start in range(0, k + 1, _CHUNK):
        sl = slice(start, min(start + _CHUNK, k + 1))
        den = (d[centers[sl]][:, None] - d[None, :]) + mus[sl][:, None]  # lam_i - d_j
        comp = zt[None, :] / den
        nrm = np.sqrt(1.0 + (comp * comp).sum(axis=1))
        v[0, sl] = 1.0 / nrm
        v[1:, sl] = (comp / nrm[:, None]).T
    return v


def eigh_arrowhead(alpha: float, d: np.ndarray, z: np.ndarray):
    """Eigenvalues (ascending) and orthonormal eigenvectors of an arrowhead.

    Row order of the returned eigenvector matrix: head first, then the tail
    in the order given.
    """
    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float)
    if d.shape != z.shape or d.ndim != 1:
        raise ValueError("d and z must be 1-D arrays of equal length")
    k = d.size
    n = k + 1
    if k == 0:
        return np.array([float(alpha)]), np.eye(1)

    scale = max(abs(alpha), float(np.abs(d).max()), float(np.abs(z).max()))
    tol = 16.0 * _EPS * max(scale, np.finfo(float).tiny)

    pairs: list[tuple[float, np.ndarray]] = []  # deflated exact eigenpairs

    active = np.abs(z) > tol
    for j in np.nonzero(~active)[0]:
        e = np.zeros(n)
        e[1 + j] = 1.0
        pairs.append((float(d[j]), e))

    idx = np.nonzero(active)[0]
    if idx.size == 0:
        e = np.zeros(n)
        e[0] = 1.0
        pairs.append((float(alpha), e))
        w_all = np.asarray([val for val, _ in pairs])
        v_all = np.column_stack([vec for _, vec in pairs])
        order_all = np.argsort(w_all, kind="stable")
        return w_all[order_all], v_all[:, order_all]

    order = idx[np.argsort(d[idx], kind="stable")]
    ds = d[order]
    zs = z[order]

    # Merge (near-)duplicate tail entries: reflect each group's coupling
    # vector onto one coordinate and deflate the orthogonal complement.
    reps: list[np.ndarray] = []  # embedding of each secular pole in the tail
    du: list[float] = []
    zu: list[float] = []
    i = 0
    while i < order.size:
        jj = i + 1
        while jj < order.size and ds[jj] - ds[jj - 1] <= tol:
            jj += 1
        group = order[i:jj]
        if group.size == 1:
            w = np.zeros(n)
            w[1 + group[0]] = 1.0
            reps.append(w)
            du.append(float(ds[i]))
            zu.append(float(zs[i]))
        else:
            zg = zs[i:jj].astype(float)
            u = zg.copy()
            u[0] += np.copysign(np.linalg.norm(zg), u[0] if u[0] != 0.0 else 1.0)
            u /= np.linalg.norm(u)
            r = np.eye(group.size) - 2.0 * np.outer(u, u)
            for row in range(1, group.size):
                e = np.zeros(n)
                e[1 + group] = r[row]
                pairs.append((float(ds[i]), e))
            w = np.zeros(n)
            w[1 + group] = r[0]
            reps.append(w)
            du.append(float(ds[i]))
            zu.append(float((r @ zg)[0]))
        i = jj

    du_arr = np.asarray(du)
    zu_arr = np.asarray(zu)
    centers, mus = _solve_secular(float(alpha), du_arr, zu_arr)
    zt = _rebuild_couplings(du_arr, centers, mus, zu_arr)
    vr = _assemble_vectors(du_arr, centers, mus, zt)
    lam = du_arr[centers] + mus

    # Scatter the reduced eigenvectors back onto the original basis; the
    # basis embedding is orthonormal so the result stays orthonormal.
    basis = np.zeros((n, len(reps) + 1))
    basis[0, 0] = 1.0
    for col, w in enumerate(reps, start=1):
        basis[:, col] = w
    vfull = basis @ vr

    values = list(lam) + [val for val, _ in pairs]
    vectors = [vfull[:, c] for c in range(vfull.shape[1])] + [vec for _, vec in pairs]
    w_all = np.asarray(values)
    v_all = np.column_stack(vectors)
    order_all = np.argsort(w_all, kind="stable")
    return w_all[order_all], v_all[:, order_all]
