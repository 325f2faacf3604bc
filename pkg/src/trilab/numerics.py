"""Floating-point Martin kernels for levels where exact rationals are too slow.

Two engines:

* :func:`float_martin_window` sweeps backwards from one target with rows
  rescaled by powers of two.  Every entry is a sum of positive products, so
  relative error grows linearly with depth and is bounded a priori; the dtype
  is chosen so that the bound meets the requested tolerance.
* :func:`kernel_profile` runs forwards once and yields ``V^{nu,kappa}[n,k]`` for
  one window node and *all* ``kappa`` at every requested ``nu``.  It propagates
  conditional probabilities with the backward transition weights, computed
  from ratios of neighbouring dimensions.  No a priori bound is claimed; the
  test suite compares it with exact arithmetic.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .core import KernelArray, Triangle, as_node, dimensions

DEFAULT_MAX_ERROR = 1e-12


def sweep_error_ulps(tri: Triangle, nu: int) -> float:
    """First-order error of a backward sweep over ``nu`` levels, in roundoffs."""
    return sum(tri.float_ulps(n) + 2.0 for n in range(nu))


def choose_dtype(tri: Triangle, nu: int, max_error: float = DEFAULT_MAX_ERROR):
    """Cheapest dtype whose a priori bound is below ``max_error``.

    Returns ``(dtype, bound)``; when even extended precision misses the target
    the widest dtype is returned together with its (larger) bound.
    """
    ulps = sweep_error_ulps(tri, nu)
    best = None
    for dtype in (np.float64, np.longdouble):
        u = float(np.finfo(dtype).eps) / 2
        bound = 2 * ulps * u + u
        best = (dtype, bound)
        if bound < max_error:
            break
    return best


def float_martin_window(
    tri: Triangle, target, n_max: int, dtype=None, max_error: float = DEFAULT_MAX_ERROR
) -> KernelArray:
    """``V^{nu,kappa}`` on levels ``0..n_max`` by a rescaled float sweep.

    The returned array has ``exact=False`` and ``error_bound`` set to the
    relative error bound of every entry (underflow of entries below the
    dtype's range, relative to their row maximum, is not accounted for).
    """
    target = as_node(target)
    nu, kappa = target
    if dtype is None:
        dtype, bound = choose_dtype(tri, nu, max_error)
    else:
        u = float(np.finfo(dtype).eps) / 2
        bound = 2 * sweep_error_ulps(tri, nu) * u + u
    buf = np.zeros(kappa + 2, dtype=dtype)
    buf[kappa] = 1
    scale = 0
    saved = {}
    if nu <= n_max:
        saved[nu] = (buf[: nu + 1].copy(), 0)
    hi_prev = kappa
    for n in range(nu - 1, -1, -1):
        lo = max(0, kappa - (nu - n))
        hi = min(n, kappa)
        left = tri.left_row(n, dtype, lo, hi)
        right = tri.right_row(n, dtype, lo, hi)
        buf[lo : hi + 1] = left * buf[lo : hi + 1] + right * buf[lo + 1 : hi + 2]
        buf[hi + 1 : hi_prev + 1] = 0
        hi_prev = hi
        _, exponent = np.frexp(buf[lo : hi + 1].max())
        buf[lo : hi + 1] = np.ldexp(buf[lo : hi + 1], -int(exponent))
        scale += int(exponent)
        if n <= n_max:
            saved[n] = (buf[: n + 1].copy(), scale)
    root, root_scale = saved[0][0][0], saved[0][1]
    rows = []
    for n in range(n_max + 1):
        if n in saved:
            row, s = saved[n]
            values = np.ldexp(row / root, s - root_scale)
            padding = (0.0,) * (n + 1 - len(values))
            rows.append(tuple(float(v) for v in values) + padding)
        else:
            rows.append((0.0,) * (n + 1))
    return KernelArray(n_max, tuple(rows), exact=False, error_bound=bound)


def kernel_profile(
    tri: Triangle, node, nu_list: Iterable[int], dtype=np.float64
) -> dict[int, np.ndarray]:
    """``{nu: array over kappa of V^{nu,kappa}[n,k]}`` for one node ``(n, k)``."""
    node = as_node(node)
    wanted = sorted(set(int(v) for v in nu_list))
    if not wanted:
        return {}
    if wanted[0] < node.n:
        raise ValueError(f"every nu must be at least n = {node.n}")
    d_node = float(dimensions(tri, node.n)[node.n, node.k])
    out = {}
    # ratio[j] = D[a, j-1] / D[a, j] for j >= 1 at the current level a
    ratio = np.zeros(1, dtype=dtype)
    prob = None
    if node.n == 0:
        prob = np.ones(1, dtype=dtype)
    for a in range(0, wanted[-1] + 1):
        if a == node.n:
            prob = np.zeros(a + 1, dtype=dtype)
            prob[node.k] = 1
        if prob is not None and a in wanted:
            out[a] = (prob / d_node).astype(np.float64)
        if a == wanted[-1]:
            break
        left = tri.left_row(a, dtype)
        right = tri.right_row(a, dtype)
        # backward step (a+1, kappa) -> (a, kappa): stay weight l, move weight r * ratio
        move = np.zeros(a + 2, dtype=dtype)
        stay = np.zeros(a + 2, dtype=dtype)
        stay[0] = 1
        if a >= 1:
            w = right[: a] * ratio[1 : a + 1]
            den = left[1 : a + 1] + w
            stay[1 : a + 1] = left[1 : a + 1] / den
            move[1 : a + 1] = w / den
        move[a + 1] = 1
        if prob is not None and a >= node.n:
            nxt = np.zeros(a + 2, dtype=dtype)
            nxt[: a + 1] += stay[: a + 1] * prob
            nxt[1:] += move[1:] * prob
            prob = nxt
        new_ratio = np.zeros(a + 2, dtype=dtype)
        num = left.copy()
        if a >= 1:
            num[1:] += right[:a] * ratio[1 : a + 1]
        den = right.copy()
        den[:a] += left[1 : a + 1] / ratio[1 : a + 1]
        new_ratio[1:] = num / den
        ratio = new_ratio
    return out

