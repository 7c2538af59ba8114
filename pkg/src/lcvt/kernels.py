"""Hot inner loops: coordinate descent along a penalty path and residual moments.

Every kernel exists twice, a numba version written with explicit loops and a
numpy version written with vectorised column operations. Both follow the same
update sequence; they agree to rounding, not bit-for-bit, because BLAS and a
compiled loop sum in different orders. The dispatchers at the bottom pick one
according to :data:`lcvt._accel.USE_NUMBA`.

The working problem is

    minimise  (1/(2n)) ||r||^2 + lam * ||b||_1,   r = y - X b

on already centred/scaled data, with ``v[j] = ||X[:, j]||^2 / n``. Columns
flagged in ``excluded`` (zero variance) are never touched.

Per penalty value the solver alternates two phases until both are quiet:

1. cycles over the active set, updating the active gradients through a cached
   Gram block (cost O(|A|) per coefficient change instead of O(n));
2. one gradient pass over every column, which admits inactive violators
   (``|g_j| > lam``) to the active set and measures the worst stationarity
   violation of the active ones.

The fit is declared converged when the last active cycle moved no
coefficient by more than ``tol * max(1, max|b|)``, no inactive column
violates, and every active stationarity violation is at most ``kkt_tol``.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# reassociation lets numba vectorise the dot-product reductions; no
# nnan/ninf so non-finite values still propagate
_REASSOC = {"reassoc", "contract"}


# --------------------------------------------------------------------------
# numba kernels


@njit
def _soft(z, gamma):
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


@njit(fastmath=_REASSOC)
def _grow_gram(X, G, act, m, n):
    # row/column m of the active Gram block, for variable act[m]
    k = act[m]
    for c in range(m + 1):
        j = act[c]
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, k]
        G[c, m] = s / n
        G[m, c] = s / n


@njit(fastmath=_REASSOC)
def _active_cycles(X, r, b, v, act, m, G, ga, b0, lam, thr, iters, max_iters, n):
    for a in range(m):
        j = act[a]
        s = 0.0
        for i in range(n):
            s += X[i, j] * r[i]
        ga[a] = s / n
        b0[a] = b[j]
    while iters < max_iters:
        dlx = 0.0
        for a in range(m):
            j = act[a]
            old = b[j]
            new = _soft(ga[a] + v[j] * old, lam) / v[j]
            d = new - old
            if d != 0.0:
                b[j] = new
                for c in range(m):
                    ga[c] -= d * G[a, c]
                if abs(d) > dlx:
                    dlx = abs(d)
        iters += 1
        if dlx <= thr:
            break
    # bring r back in sync with b
    for a in range(m):
        j = act[a]
        d = b[j] - b0[a]
        if d != 0.0:
            for i in range(n):
                r[i] -= d * X[i, j]
    return iters


@njit(fastmath=_REASSOC)
def _screen(X, r, b, excluded, is_act, lam, n, p, enter):
    worst = 0.0
    n_enter = 0
    for j in range(p):
        if excluded[j]:
            continue
        g = 0.0
        for i in range(n):
            g += X[i, j] * r[i]
        g /= n
        if not is_act[j]:
            if abs(g) > lam:
                enter[n_enter] = j
                n_enter += 1
        else:
            if b[j] > 0.0:
                e = abs(g - lam)
            elif b[j] < 0.0:
                e = abs(g + lam)
            else:
                e = abs(g) - lam
            if e > worst:
                worst = e
    return n_enter, worst


@njit
def _cd_path_numba(X, r, b, v, excluded, lambdas, tol, kkt_tol, max_iters,
                   out_betas, out_iters, out_conv):
    n, p = X.shape
    act = np.empty(p, dtype=np.int64)
    is_act = np.zeros(p, dtype=np.bool_)
    enter = np.empty(p, dtype=np.int64)
    ga = np.empty(p)
    b0 = np.empty(p)
    m = 0
    cap = 16
    G = np.empty((cap, cap))
    n_enter = 0
    for j in range(p):
        if b[j] != 0.0 and not excluded[j]:
            enter[n_enter] = j
            n_enter += 1
    for k in range(lambdas.shape[0]):
        lam = lambdas[k]
        iters = 0
        converged = False
        while iters < max_iters:
            for e in range(n_enter):
                if m >= cap:
                    cap *= 2
                    G2 = np.empty((cap, cap))
                    G2[:m, :m] = G[:m, :m]
                    G = G2
                act[m] = enter[e]
                is_act[enter[e]] = True
                _grow_gram(X, G, act, m, n)
                m += 1
            n_enter = 0
            bmax = 1.0
            for a in range(m):
                if abs(b[act[a]]) > bmax:
                    bmax = abs(b[act[a]])
            iters = _active_cycles(X, r, b, v, act, m, G, ga, b0, lam,
                                   tol * bmax, iters, max_iters, n)
            n_enter, worst = _screen(X, r, b, excluded, is_act, lam, n, p, enter)
            if n_enter == 0 and worst <= kkt_tol:
                converged = True
                break
        for j in range(p):
            out_betas[j, k] = b[j]
        out_iters[k] = iters
        out_conv[k] = converged


@njit
def _moments_numba(e):
    # Neumaier-compensated sums of e^2 and e^4
    s2 = 0.0
    c2 = 0.0
    s4 = 0.0
    c4 = 0.0
    for i in range(e.shape[0]):
        x2 = e[i] * e[i]
        x4 = x2 * x2
        t = s2 + x2
        if abs(s2) >= abs(x2):
            c2 += (s2 - t) + x2
        else:
            c2 += (x2 - t) + s2
        s2 = t
        t = s4 + x4
        if abs(s4) >= abs(x4):
            c4 += (s4 - t) + x4
        else:
            c4 += (x4 - t) + s4
        s4 = t
    return s2 + c2, s4 + c4


# --------------------------------------------------------------------------
# pure-numpy kernels


def _cd_path_numpy(X, r, b, v, excluded, lambdas, tol, kkt_tol, max_iters,
                   out_betas, out_iters, out_conv):
    n, p = X.shape
    act = []
    is_act = np.zeros(p, dtype=bool)
    G = np.empty((0, 0))
    enter = np.flatnonzero((b != 0.0) & ~excluded)
    for k, lam in enumerate(lambdas):
        lam = float(lam)
        iters = 0
        converged = False
        while iters < max_iters:
            if len(enter):
                act.extend(int(j) for j in enter)
                is_act[enter] = True
                XA = X[:, act]
                G = XA.T @ XA / n
            enter = ()
            m = len(act)
            XA = X[:, act]
            thr = tol * max(1.0, float(np.abs(b[act]).max(initial=0.0)))
            ga = XA.T @ r / n
            b0 = b[act]
            while iters < max_iters:
                dlx = 0.0
                for a in range(m):
                    j = act[a]
                    old = b[j]
                    z = ga[a] + v[j] * old
                    new = math.copysign(max(abs(z) - lam, 0.0), z) / v[j]
                    d = new - old
                    if d != 0.0:
                        b[j] = new
                        ga -= d * G[a]
                        dlx = max(dlx, abs(d))
                iters += 1
                if dlx <= thr:
                    break
            if m:
                r -= XA @ (b[act] - b0)
            g = X.T @ r / n
            enter = np.flatnonzero(~is_act & ~excluded & (np.abs(g) > lam))
            bA = b[is_act]
            gA = g[is_act]
            viol = np.where(bA > 0, np.abs(gA - lam),
                            np.where(bA < 0, np.abs(gA + lam), np.abs(gA) - lam))
            if len(enter) == 0 and viol.max(initial=0.0) <= kkt_tol:
                converged = True
                break
        out_betas[:, k] = b
        out_iters[k] = iters
        out_conv[k] = converged


def _moments_numpy(e):
    e2 = e * e
    return math.fsum(e2), math.fsum(e2 * e2)


# --------------------------------------------------------------------------
# dispatchers


def cd_path(X, y, v, excluded, lambdas, beta_init, tol, kkt_tol, max_iters,
            use_numba=None):
    """Run coordinate descent over ``lambdas`` with warm starts.

    Returns ``(betas, iters, converged)`` with ``betas`` of shape (p, L).
    ``X`` is copied to Fortran order if needed so columns are contiguous.
    Leading penalties at or above ``max_j |<x_j, y>| / n`` have the exact
    solution zero and skip the solver, so rounding in the gradient cannot
    admit a spurious coefficient there.
    """
    if use_numba is None:
        use_numba = USE_NUMBA
    X = np.asfortranarray(X, dtype=np.float64)
    excluded = np.ascontiguousarray(excluded, dtype=np.bool_)
    b = np.array(beta_init, dtype=np.float64)
    b[excluded] = 0.0
    r = np.ascontiguousarray(y, dtype=np.float64) - X @ b
    lambdas = np.ascontiguousarray(lambdas, dtype=np.float64)
    L = lambdas.shape[0]
    p = X.shape[1]
    out_betas = np.zeros((p, L))
    out_iters = np.zeros(L, dtype=np.int64)
    out_conv = np.zeros(L, dtype=np.bool_)
    y = np.ascontiguousarray(y, dtype=np.float64)
    lmax = float(np.abs(X.T @ y).max()) / X.shape[0] if p else 0.0
    k = 0
    while k < L and lambdas[k] >= lmax:
        k += 1
    out_conv[:k] = True
    if k == L:
        return out_betas, out_iters, out_conv
    if k:
        b[:] = 0.0
        r = y.copy()
    kernel = _cd_path_numba if use_numba else _cd_path_numpy
    kernel(X, r, b, np.ascontiguousarray(v, dtype=np.float64), excluded,
           lambdas[k:], float(tol), float(kkt_tol), int(max_iters),
           out_betas[:, k:], out_iters[k:], out_conv[k:])
    return out_betas, out_iters, out_conv


def residual_moments(e, use_numba=None):
    """Compensated ``(sum e^2, sum e^4)``."""
    if use_numba is None:
        use_numba = USE_NUMBA
    e = np.ascontiguousarray(e, dtype=np.float64)
    if use_numba:
        return _moments_numba(e)
    return _moments_numpy(e)
