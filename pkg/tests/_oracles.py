"""Independent reference computations used across the test modules.

None of these helpers import the code under test for the quantity they
compute; they rebuild it from first principles.
"""
from __future__ import annotations

import numpy as np


def central_difference(f, arrays, h=1e-5):
    """Numerical gradient of scalar ``f()`` w.r.t. every entry of every
    array in ``arrays`` (perturbed in place and restored)."""
    out = []
    for a in arrays:
        g = np.zeros_like(a)
        it = np.nditer(a, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            old = a[i]
            a[i] = old + h
            fp = f()
            a[i] = old - h
            fm = f()
            a[i] = old
            g[i] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def max_rel_error(analytic, numeric, floor=1e-6):
    """Largest |a - n| / max(|a|, |n|, floor) over all entries."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        a = np.asarray(a, dtype=float)
        n = np.asarray(n, dtype=float)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        if a.size:
            worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def brute_force_window(y, x, p, S, P, Q, K, t):
    """Materialise one window term by term with explicit loops.

    Returns (encoder input lists, decoder rows, targets) using plain python
    floats: encoder rows are [x(tau)..., y(tau)], decoder rows are
    [x(t+k)..., then for i=1..P: x(t+k-iS)..., y(t+k-iS)].
    """
    m = 0 if x is None else len(x[0])

    def pair(tau):
        return [float(x[tau][j]) for j in range(m)] + [float(y[tau])]

    enc = [[pair(tau) for tau in range(t - p, t)]]
    for i in range(1, P + 1):
        enc.append([pair(tau) for tau in range(t - i * S - Q[i - 1], t - i * S)])
    dec = []
    for k in range(K + 1):
        row = [float(x[t + k][j]) for j in range(m)]
        for i in range(1, P + 1):
            row += pair(t + k - i * S)
        dec.append(row)
    targets = [float(y[t + k]) for k in range(K + 1)]
    return enc, dec, targets


def polymul(a, b):
    """Coefficients of the product of two polynomials in ascending powers."""
    out = [0.0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def lag_polynomial(psi, Psi, S):
    """Ascending coefficients of (1 - sum psi_i L^i)(1 - sum Psi_k L^{kS})."""
    std = [1.0] + [-float(c) for c in psi]
    seas = [0.0] * (len(Psi) * S + 1)
    seas[0] = 1.0
    for k, c in enumerate(Psi, start=1):
        seas[k * S] = -float(c)
    return polymul(std, seas)


def random_spec(rng, p_max=5, S_max=12, P_max=3, Q_max=4):
    S = int(rng.integers(2, S_max + 1))
    p = int(rng.integers(1, min(p_max, S - 1) + 1))
    P = int(rng.integers(0, P_max + 1))
    Q = tuple(int(q) for q in rng.integers(1, Q_max + 1, size=P))
    K = int(rng.integers(0, S))
    return p, S, P, Q, K
