"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np


def _row_sums_in_order(X):
    # ascending agent order, matching the compiled kernel bit for bit
    S = X[0].copy()
    for n in range(1, X.shape[0]):
        S += X[n]
    return S


def project_rows(Y, E, L, U, out):
    N, T = Y.shape
    sl = L.sum(axis=1)
    su = U.sum(axis=1)
    tol = 1e-12 * np.maximum(1.0, np.abs(E))
    bad = np.flatnonzero((sl > E + tol) | (su < E - tol))
    if bad.size:
        return int(bad[0])

    bp = np.sort(np.concatenate([L - Y, U - Y], axis=1), axis=1)  # (N, 2T)
    # excess g at every breakpoint: (N, 2T)
    g = np.clip(Y[:, None, :] + bp[:, :, None], L[:, None, :], U[:, None, :]).sum(axis=2)
    g -= E[:, None]
    reached = g >= 0.0
    # rounding can leave g(last) a hair below zero when E = sum(U); use the last interval
    first = np.where(reached.any(axis=1), np.argmax(reached, axis=1), 2 * T - 1)

    rows = np.arange(N)
    lo = bp[rows, np.maximum(first - 1, 0)]
    hi = bp[rows, first]
    mid = 0.5 * (lo + hi)
    v = Y + mid[:, None]
    at_lo = v <= L
    at_hi = ~at_lo & (v >= U)
    free = ~(at_lo | at_hi)
    rest = E - np.where(at_lo, L, 0.0).sum(axis=1) - np.where(at_hi, U, 0.0).sum(axis=1)
    rest -= np.where(free, Y, 0.0).sum(axis=1)
    nfree = free.sum(axis=1)
    tau = np.where(nfree > 0, rest / np.maximum(nfree, 1), lo)
    tau = np.where(first == 0, bp[:, 0], tau)
    np.clip(Y + tau[:, None], L, U, out=out)
    return -1


def apm_step(Y, E, L, U, p, X_out, Y_out, nu_out):
    bad = project_rows(Y, E, L, U, X_out)
    if bad >= 0:
        return bad
    nu_out[:] = (p - _row_sums_in_order(X_out)) / X_out.shape[0]
    np.add(X_out, nu_out[None, :], out=Y_out)
    return -1
