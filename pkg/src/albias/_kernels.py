"""Compiled reductions over (parameter sample x design) logit tables."""

import numpy as np
from numba import njit

_LOG1P_TABLE_N = 4096
_LOG1P_TABLE = np.log1p(np.linspace(0.0, 1.0, _LOG1P_TABLE_N + 1))


@njit(cache=True)
def _accumulate_row(zrow, erow, srow, wi, pbar, qbar, ent, with_entropy, table, table_n):
    # separate passes keep each loop simple enough to vectorize
    m = zrow.size
    for j in range(m):
        erow[j] = np.exp(-abs(zrow[j]))
    for j in range(m):
        inv = 1.0 / (1.0 + erow[j])
        small = erow[j] * inv
        srow[j] = small
        pos = zrow[j] >= 0.0
        pbar[j] += wi * (inv if pos else small)
        qbar[j] += wi * (small if pos else inv)
    if with_entropy:
        # H(expit(z)) = log1p(e^-|z|) + |z| e^-|z| / (1 + e^-|z|)
        for j in range(m):
            u = erow[j] * table_n
            k = min(int(u), table_n - 1)
            fr = u - k
            ent[j] += wi * (table[k] * (1.0 - fr) + table[k + 1] * fr + abs(zrow[j]) * srow[j])


@njit(cache=True)
def _mixture_stats(Z, w, with_entropy, min_weight, table, table_n):
    n, m = Z.shape
    pbar = np.zeros(m)
    qbar = np.zeros(m)
    ent = np.zeros(m)
    erow = np.empty(m)
    srow = np.empty(m)
    for i in range(n):
        if w[i] > min_weight:
            _accumulate_row(Z[i], erow, srow, w[i], pbar, qbar, ent, with_entropy, table, table_n)
    return pbar, qbar, ent


@njit(cache=True)
def _poly_mixture_stats(coef, x, eps, w, with_entropy, min_weight, table, table_n):
    n, d = coef.shape
    m = x.size
    pbar = np.zeros(m)
    qbar = np.zeros(m)
    ent = np.zeros(m)
    zrow = np.empty(m)
    erow = np.empty(m)
    srow = np.empty(m)
    for i in range(n):
        if w[i] <= min_weight:
            continue
        top = eps * coef[i, d - 1]
        for j in range(m):
            zrow[j] = top
        for k in range(d - 2, -1, -1):
            c = eps * coef[i, k]
            for j in range(m):
                zrow[j] = zrow[j] * x[j] + c
        _accumulate_row(zrow, erow, srow, w[i], pbar, qbar, ent, with_entropy, table, table_n)
    return pbar, qbar, ent


def mixture_stats(Z, w, with_entropy=True, min_weight=0.0):
    """Posterior-mixture summaries of a binary model at each design.

    ``Z`` is the (n_samples, n_designs) logit table and ``w`` the normalized
    sample weights. Returns ``(pbar, qbar, mean_entropy)`` where
    ``pbar = sum_i w_i expit(z_ij)``, ``qbar = sum_i w_i expit(-z_ij)`` (kept
    separately so that log(1 - pbar) stays accurate near 1) and
    ``mean_entropy = sum_i w_i H(expit(z_ij))``. Samples with weight at or
    below ``min_weight`` are skipped, which perturbs each sum by at most
    ``n * min_weight``.
    """
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    return _mixture_stats(Z, w, with_entropy, float(min_weight), _LOG1P_TABLE, _LOG1P_TABLE_N)


def poly_mixture_stats(coef, x, epsilon, w, with_entropy=True, min_weight=0.0):
    """:func:`mixture_stats` for logits ``epsilon * sum_k coef[i, k] x_j^k``.

    Evaluates the polynomial on the fly instead of materializing the logit table.
    """
    coef = np.ascontiguousarray(coef, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    w = np.ascontiguousarray(w, dtype=np.float64)
    return _poly_mixture_stats(coef, x, float(epsilon), w, with_entropy, float(min_weight),
                               _LOG1P_TABLE, _LOG1P_TABLE_N)
