"""BFS-expansion kernels for the explorer and the fire-count state space.

Both kernels are written as plain loops over preallocated NumPy arrays so
the same source runs compiled under numba or interpreted as the fallback.
Set ``CHIPFIRE_NUMBA=0`` to force the interpreted path; the ``*_py``
aliases stay importable either way for equivalence tests and benchmarks.

Labeled states are rows of ``2 * nchips`` int8 entries, the (site, value)
pairs of all chips sorted lexicographically.  Fire-count states are rows
of int16 fire counters over the window of sites that ever fire.
"""

from __future__ import annotations

import os

import numpy as np

PAD = 127  # filler in fixed-width chosen-values records

_env = os.environ.get("CHIPFIRE_NUMBA", "1") != "0"
try:
    from numba import njit as _njit
    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

NUMBA_ENABLED = NUMBA_AVAILABLE and _env


def _site_choices_py(row, run_start, cnt, th, nleft, nright, nchips, do_write,
                     out_states, out_vals, out_pos):
    """Emit every distinct value-multiset choice of size th from one site run.

    Within runs of equal values only prefix copies are chosen, so each value
    multiset appears exactly once.  Returns the number of choices; successors
    are written (already re-sorted) only when ``do_write``.
    """
    total = 0
    comb = np.empty(th, np.int64)
    for c in range(th):
        comb[c] = c
    while True:
        canonical = True
        for c in range(th):
            p = comb[c]
            if p > 0:
                g = run_start + p
                if row[2 * g + 1] == row[2 * g - 1] and (c == 0 or comb[c - 1] != p - 1):
                    canonical = False
                    break
        if canonical:
            if do_write:
                q = out_pos + total
                for z in range(2 * nchips):
                    out_states[q, z] = row[z]
                site = row[2 * run_start]
                for c in range(th):
                    g = run_start + comb[c]
                    if c < nleft:
                        out_states[q, 2 * g] = site - 1
                    elif c >= th - nright:
                        out_states[q, 2 * g] = site + 1
                    out_vals[q, c] = row[2 * g + 1]
                for a in range(1, nchips):
                    ks = out_states[q, 2 * a]
                    kv = out_states[q, 2 * a + 1]
                    b = a - 1
                    while b >= 0 and (out_states[q, 2 * b] > ks
                                      or (out_states[q, 2 * b] == ks
                                          and out_states[q, 2 * b + 1] > kv)):
                        out_states[q, 2 * b + 2] = out_states[q, 2 * b]
                        out_states[q, 2 * b + 3] = out_states[q, 2 * b + 1]
                        b -= 1
                    out_states[q, 2 * b + 2] = ks
                    out_states[q, 2 * b + 3] = kv
            total += 1
        k = th - 1
        while k >= 0 and comb[k] == cnt - th + k:
            k -= 1
        if k < 0:
            break
        comb[k] += 1
        for z in range(k + 1, th):
            comb[z] = comb[z - 1] + 1
    return total


def _make_labeled_count(site_choices):
    def _labeled_count(states, thresh_idx, off, dummy_states, dummy_vals):
        """Successor count per labeled state row (0 marks a terminal row)."""
        nrows = states.shape[0]
        nchips = states.shape[1] // 2
        counts = np.zeros(nrows, np.int64)
        for r in range(nrows):
            row = states[r]
            i = 0
            while i < nchips:
                site = row[2 * i]
                j = i
                while j < nchips and row[2 * j] == site:
                    j += 1
                th = thresh_idx[site + off]
                if j - i >= th:
                    counts[r] += site_choices(row, i, j - i, th, 0, 0, nchips,
                                              False, dummy_states, dummy_vals, 0)
                i = j
        return counts
    return _labeled_count


def _make_labeled_fill(site_choices):
    def _labeled_fill(states, left_idx, right_idx, thresh_idx, off, offsets,
                      out_states, out_parent, out_site, out_vals):
        """Write all successors row-block by row-block at ``offsets``."""
        nrows = states.shape[0]
        nchips = states.shape[1] // 2
        for r in range(nrows):
            row = states[r]
            pos = offsets[r]
            i = 0
            while i < nchips:
                site = row[2 * i]
                j = i
                while j < nchips and row[2 * j] == site:
                    j += 1
                th = thresh_idx[site + off]
                if j - i >= th:
                    nleft = left_idx[site + off]
                    nright = right_idx[site + off]
                    emitted = site_choices(row, i, j - i, th, nleft, nright,
                                           nchips, True, out_states, out_vals, pos)
                    for q in range(pos, pos + emitted):
                        out_parent[q] = r
                        out_site[q] = site
                    pos += emitted
                i = j
    return _labeled_fill


def _fire_count_expand_py(states, init, leftx, rightx, threshx, totals,
                          out_states, had_succ):
    """One BFS level over fire-count vectors.

    leftx/rightx/threshx cover the window plus one virtual site on each
    side (index = window position + 1).  Returns (rows written, err) where
    err flags 1 = a site outside the window became enabled, 2 = a counter
    would exceed its known total, 3 = a negative chip count.
    """
    nrows, w = states.shape
    m = 0
    err = 0
    for r in range(nrows):
        emitted = 0
        for i in range(-1, w + 1):
            chips = 0
            if 0 <= i < w:
                chips += init[i] - (leftx[i + 1] + rightx[i + 1]) * states[r, i]
            if 1 <= i and i - 1 < w:
                chips += rightx[i] * states[r, i - 1]
            if i + 1 >= 0 and i + 1 < w:
                chips += leftx[i + 2] * states[r, i + 1]
            if chips < 0:
                err = 3
            if chips >= threshx[i + 1]:
                if i < 0 or i >= w:
                    err = 1
                elif states[r, i] >= totals[i]:
                    err = 2
                else:
                    for z in range(w):
                        out_states[m, z] = states[r, z]
                    out_states[m, i] += 1
                    m += 1
                    emitted += 1
        had_succ[r] = 1 if emitted > 0 else 0
    return m, err


_labeled_count_py = _make_labeled_count(_site_choices_py)
_labeled_fill_py = _make_labeled_fill(_site_choices_py)

if NUMBA_AVAILABLE:
    _site_choices_jit = _njit(cache=True)(_site_choices_py)
    _labeled_count_jit = _njit(cache=True)(_make_labeled_count(_site_choices_jit))
    _labeled_fill_jit = _njit(cache=True)(_make_labeled_fill(_site_choices_jit))
    _fire_count_expand_jit = _njit(cache=True)(_fire_count_expand_py)

if NUMBA_ENABLED:
    labeled_count = _labeled_count_jit
    labeled_fill = _labeled_fill_jit
    fire_count_expand = _fire_count_expand_jit
else:
    labeled_count = _labeled_count_py
    labeled_fill = _labeled_fill_py
    fire_count_expand = _fire_count_expand_py
