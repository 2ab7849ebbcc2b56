"""Finite-difference stencils on uniform axes.

Two layouts are supported.  ``diff`` works on an axis without ghost cells and
switches to one-sided stencils near the ends.  ``diff_padded`` expects the
caller to have padded the axis (periodic wrap, or even reflection through a
pole) and returns only the unpadded nodes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["stencil_weights", "half_width", "diff", "diff_padded", "pad_axis"]


@lru_cache(maxsize=None)
def _weights(offsets, deriv):
    offs = np.asarray(offsets, dtype=float)
    k = len(offs)
    V = np.vander(offs, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[deriv] = float(np.prod(np.arange(1, deriv + 1)))
    return np.linalg.solve(V, rhs)


def stencil_weights(offsets, deriv):
    """Weights ``w`` with ``sum(w * f(x + o*h)) / h**deriv ~ f^(deriv)(x)``."""
    return _weights(tuple(int(o) for o in offsets), int(deriv))


def half_width(deriv, accuracy):
    return (deriv + accuracy - 1) // 2


def _apply(arr, axis, offsets, w, start, stop):
    out = 0.0
    for o, wk in zip(offsets, w):
        sl = [slice(None)] * arr.ndim
        sl[axis] = slice(start + o, stop + o)
        out = out + wk * arr[tuple(sl)]
    return out


def diff(arr, axis, h, deriv, accuracy=4):
    """Derivative along an axis with one-sided closures at both ends."""
    arr = np.asarray(arr)
    axis = axis % arr.ndim
    N = arr.shape[axis]
    w = half_width(deriv, accuracy)
    npts = deriv + accuracy
    if N < npts:
        raise ValueError(f"axis of length {N} too short for the stencil")
    out = np.empty(arr.shape, dtype=np.result_type(arr, float))
    centered = tuple(range(-w, w + 1))
    cw = stencil_weights(centered, deriv)
    sl = [slice(None)] * arr.ndim
    sl[axis] = slice(w, N - w)
    out[tuple(sl)] = _apply(arr, axis, centered, cw, w, N - w)
    for i in list(range(w)) + list(range(N - w, N)):
        lo = min(max(i - w, 0), N - npts)
        offs = tuple(range(lo - i, lo - i + npts))
        ow = stencil_weights(offs, deriv)
        sl[axis] = slice(i, i + 1)
        out[tuple(sl)] = _apply(arr, axis, offs, ow, i, i + 1)
    return out / h**deriv


def pad_axis(arr, axis, width, mode):
    """Ghost cells: ``'wrap'`` (periodic) or ``'reflect'`` (even about the end nodes)."""
    pad = [(0, 0)] * np.ndim(arr)
    pad[axis] = (width, width)
    return np.pad(arr, pad, mode=mode)


def diff_padded(arr, axis, h, deriv, accuracy=4, width=None):
    """Centered derivative on an axis carrying ``width`` ghost cells per side."""
    arr = np.asarray(arr)
    axis = axis % arr.ndim
    w = half_width(deriv, accuracy)
    width = w if width is None else width
    N = arr.shape[axis] - 2 * width
    offs = tuple(range(-w, w + 1))
    return _apply(arr, axis, offs, stencil_weights(offs, deriv), width, width + N) / h**deriv
