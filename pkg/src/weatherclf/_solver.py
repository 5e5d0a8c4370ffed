"""Dual coordinate descent for the L1-loss (hinge) linear SVM.

Solves ``min_w 0.5 * ||w||^2 + C * sum_i max(0, 1 - y_i * w . x_i)`` through
its dual ``min_a 0.5 * a^T Q a - sum(a)`` subject to ``0 <= a_i <= C`` with
``Q_ij = y_i y_j x_i . x_j``, one coordinate at a time, maintaining
``w = sum_i a_i y_i x_i``.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _max_violation(X, y, w, alpha, C):
    n, d = X.shape
    worst = 0.0
    for i in range(n):
        g = 0.0
        for j in range(d):
            g += w[j] * X[i, j]
        g = y[i] * g - 1.0
        if alpha[i] == 0.0:
            pg = min(g, 0.0)
        elif alpha[i] == C:
            pg = max(g, 0.0)
        else:
            pg = g
        if abs(pg) > worst:
            worst = abs(pg)
    return worst


@njit(cache=True, nogil=True)
def dual_cd(X, y, C, tol, max_iter, seed):
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    qii = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += X[i, j] * X[i, j]
        qii[i] = s
    primal = np.full(max_iter, np.nan)
    dual = np.full(max_iter, np.nan)
    np.random.seed(seed)
    order = np.arange(n)
    violation = np.inf
    sweeps = 0
    converged = False
    for it in range(max_iter):
        np.random.shuffle(order)
        violation = 0.0
        for s_idx in range(n):
            i = order[s_idx]
            g = 0.0
            for j in range(d):
                g += w[j] * X[i, j]
            g = y[i] * g - 1.0
            a = alpha[i]
            if a == 0.0:
                pg = min(g, 0.0)
            elif a == C:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > violation:
                violation = abs(pg)
            if pg != 0.0 and qii[i] > 0.0:
                new = min(max(a - g / qii[i], 0.0), C)
                delta = (new - a) * y[i]
                alpha[i] = new
                for j in range(d):
                    w[j] += delta * X[i, j]
        sweeps = it + 1
        ww = 0.0
        for j in range(d):
            ww += w[j] * w[j]
        hinge = 0.0
        for i in range(n):
            m = 0.0
            for j in range(d):
                m += w[j] * X[i, j]
            m = 1.0 - y[i] * m
            if m > 0.0:
                hinge += m
        primal[it] = 0.5 * ww + C * hinge
        dual[it] = 0.5 * ww - alpha.sum()
        if violation < tol:
            # the in-sweep test saw a moving w; confirm at the final one
            violation = _max_violation(X, y, w, alpha, C)
            if violation < tol:
                converged = True
                break
    return w, alpha, sweeps, converged, violation, primal[:sweeps], dual[:sweeps]
