"""Closed-form 1-D W_p^p between discrete measures.

Both quantile functions are piecewise constant, so the quantile integral is
a finite sum over the merged breakpoint sequence of the two cumulative
weight vectors.  Cumulative weights use compensated summation to keep
breakpoints accurate to ~1e-16.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .exact import CostSpec
from .measures import ATOM_TOL, DiscreteMeasure, canonicalize

__all__ = ["w1d"]


@njit(cache=True, nogil=True)
def _cumsum_comp(w):
    # Neumaier compensated running sums
    out = np.empty(w.shape[0])
    s = 0.0
    c = 0.0
    for i in range(w.shape[0]):
        x = w[i]
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        out[i] = s + c
    return out


@njit(cache=True, nogil=True)
def _quantile_merge(ax, ca, bx, cb, p):
    ia = 0
    ib = 0
    na = ax.shape[0]
    nb = bx.shape[0]
    t_prev = 0.0
    total = 0.0
    while ia < na and ib < nb:
        ta = ca[ia]
        tb = cb[ib]
        t = ta if ta < tb else tb
        seg = t - t_prev
        if seg > 0.0:
            d = ax[ia] - bx[ib]
            if d < 0.0:
                d = -d
            if p == 2.0:
                total += seg * d * d
            elif p == 1.0:
                total += seg * d
            else:
                total += seg * d**p
        t_prev = t
        if ta <= t:
            ia += 1
        if tb <= t:
            ib += 1
    return total


@njit(cache=True, nogil=True)
def _matched_segments(ax, ca, bx, cb):
    # segment decomposition of the quantile coupling:
    # (index into ax, index into bx, segment mass)
    na = ax.shape[0]
    nb = bx.shape[0]
    idx_a = np.empty(na + nb, np.int64)
    idx_b = np.empty(na + nb, np.int64)
    seg = np.empty(na + nb)
    ia = 0
    ib = 0
    t_prev = 0.0
    n_seg = 0
    while ia < na and ib < nb:
        ta = ca[ia]
        tb = cb[ib]
        t = ta if ta < tb else tb
        if t - t_prev > 0.0:
            idx_a[n_seg] = ia
            idx_b[n_seg] = ib
            seg[n_seg] = t - t_prev
            n_seg += 1
        t_prev = t
        if ta <= t:
            ia += 1
        if tb <= t:
            ib += 1
    return idx_a[:n_seg], idx_b[:n_seg], seg[:n_seg]


def _sorted_atoms(m: DiscreteMeasure):
    x = m.points[:, 0]
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ws = m.weights[order]
    if xs.shape[0] > 1 and np.min(np.diff(xs)) <= ATOM_TOL:
        mc = canonicalize(m)
        xs = mc.points[:, 0]
        ws = mc.weights
    return np.ascontiguousarray(xs), np.ascontiguousarray(ws)


def w1d(
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    cost: CostSpec = CostSpec(),
) -> float:
    """Exact W_p^p between two 1-D measures via merged quantile breakpoints.

    Atom ties are resolved by canonicalization before the merge.
    """
    if source.dim != 1 or target.dim != 1:
        raise ValueError("w1d requires 1-D measures")
    ax, aw = _sorted_atoms(source)
    bx, bw = _sorted_atoms(target)
    return float(_quantile_merge(ax, _cumsum_comp(aw), bx, _cumsum_comp(bw), float(cost.p)))
