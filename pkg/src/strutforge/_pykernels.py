"""Pure-Python/numpy versions of the hot kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when
the extension is not built or ``STRUTFORGE_PURE=1`` is set.
"""

import math

import numpy as np

_EMPTY = np.zeros((0, 2))


def clip_halfplane(poly, a, b, c, tol):
    """Part of a convex polygon where ``a*x + b*y + c <= tol``.

    Intersections are placed on the zero level, classification uses ``tol``.
    """
    k = poly.shape[0]
    if k == 0:
        return _EMPTY
    vals = poly[:, 0] * a + poly[:, 1] * b + c
    inside = vals <= tol
    if inside.all():
        return poly
    if not inside.any():
        return _EMPTY
    out = []
    for idx in range(k):
        jdx = idx + 1 if idx + 1 < k else 0
        vp = vals[idx]
        vq = vals[jdx]
        ip = inside[idx]
        if ip:
            out.append(poly[idx])
        if ip != inside[jdx]:
            den = vp - vq
            t = vp / den if den != 0.0 else 0.0
            t = min(1.0, max(0.0, t))
            out.append(poly[idx] + t * (poly[jdx] - poly[idx]))
    if not out:
        return _EMPTY
    return np.array(out)


def envelope_cell(grads, offsets, i, domain, tol):
    """Region of ``domain`` where plane ``i`` is not above any other plane."""
    poly = domain
    gi0 = grads[i, 0]
    gi1 = grads[i, 1]
    ci = offsets[i]
    for j in range(grads.shape[0]):
        if j == i:
            continue
        a = gi0 - grads[j, 0]
        b = gi1 - grads[j, 1]
        c = ci - offsets[j]
        g = math.hypot(a, b)
        if g == 0.0:
            if c > 0.0:
                return _EMPTY
            continue
        poly = clip_halfplane(poly, a / g, b / g, c / g, tol)
        if poly.shape[0] == 0:
            return _EMPTY
    return poly


def pivot(T, r, c):
    """In-place Gauss-Jordan pivot of tableau ``T`` on entry ``(r, c)``."""
    T[r] *= 1.0 / T[r, c]
    T[r, c] = 1.0
    col = T[:, c].copy()
    col[r] = 0.0
    nz = np.flatnonzero(col)
    if nz.size:
        T[nz] -= np.outer(col[nz], T[r])
        T[nz, c] = 0.0
