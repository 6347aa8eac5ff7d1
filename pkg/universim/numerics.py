"""
Numerical routines: adaptive Simpson quadrature, monotone inversion, sup refinement
"""

import math
from typing import Callable, Tuple

import numpy as np
from scipy import optimize

from loguru import logger

DEFAULT_TOL = 1e-8
DEFAULT_MAX_DEPTH = 40

# Endpoint values that are not finite (log / power-law poles) are sampled this far inside.
_ENDPOINT_NUDGE = 1e-12


def _finite_eval(f: Callable[[float], float], x: float, toward: float) -> float:
    value = f(x)
    if math.isfinite(value):
        return float(value)
    nudged = x + (toward - x) * _ENDPOINT_NUDGE
    return float(f(nudged))


def integrate_adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Tuple[float, float]:
    """
    Adaptive Simpson integration with Richardson correction

    Args:
        f: Scalar integrand
        a: Lower bound
        b: Upper bound
        tol: Absolute error tolerance
        max_depth: Maximum bisection depth

    Returns:
        Tuple of (integral value, error estimate). The error estimate exceeds
        tol only when the depth cap was hit somewhere.
    """
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, err = integrate_adaptive_simpson(f, b, a, tol, max_depth)
        return -value, err

    def simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    capped = [False]

    def recurse(lo, hi, flo, fmid, fhi, whole, depth, eps):
        mid = 0.5 * (lo + hi)
        h = 0.5 * (hi - lo)
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm = f(lm)
        frm = f(rm)
        left = simpson(flo, flm, fmid, h / 2.0)
        right = simpson(fmid, frm, fhi, h / 2.0)
        delta = (left + right - whole) / 15.0

        if abs(delta) <= eps:
            return left + right + delta, abs(delta)
        if depth >= max_depth:
            capped[0] = True
            return left + right + delta, abs(delta)

        lv, le = recurse(lo, mid, flo, flm, fmid, left, depth + 1, eps / 2.0)
        rv, re = recurse(mid, hi, fmid, frm, fhi, right, depth + 1, eps / 2.0)
        return lv + rv, le + re

    fa = _finite_eval(f, a, b)
    fb = _finite_eval(f, b, a)
    fm = f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, 0.5 * (b - a))
    value, err = recurse(a, b, fa, fm, fb, whole, 0, tol)

    if capped[0]:
        logger.debug(f"Simpson depth cap {max_depth} hit on [{a:.6g}, {b:.6g}], err~{err:.3g}")
    return value, err


def integrate_pieces(
    f: Callable[[float], float],
    breakpoints,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Tuple[float, float]:
    """
    Integrate over consecutive [breakpoints[i], breakpoints[i+1]], splitting tol evenly

    Each piece is sampled strictly inside its endpoints, so jumps of f located at
    breakpoints are seen as one-sided limits.
    """
    pieces = len(breakpoints) - 1
    if pieces <= 0:
        return 0.0, 0.0
    total = 0.0
    total_err = 0.0
    eps = tol / pieces
    for lo, hi in zip(breakpoints[:-1], breakpoints[1:]):
        if hi <= lo:
            continue
        inset = (hi - lo) * _ENDPOINT_NUDGE
        value, err = integrate_adaptive_simpson(f, lo + inset, hi - inset, eps, max_depth)
        total += value
        total_err += err
    return total, total_err


def bisect_increasing(
    func: Callable[[np.ndarray], np.ndarray],
    targets: np.ndarray,
    lo: float,
    hi: float,
    tol: float = 1e-10,
) -> np.ndarray:
    """
    Vectorized min{y : func(y) >= t} for a non-decreasing func

    Args:
        func: Non-decreasing evaluator accepting arrays
        targets: Levels t to invert
        lo: Bracket start, func(lo) < t is assumed (values at or below lo return lo)
        hi: Bracket end, func(hi) >= t is assumed (values above return hi)
        tol: Bracket width at termination

    Returns:
        Right bracket ends, within tol of the generalized inverse
    """
    t = np.atleast_1d(np.asarray(targets, dtype=float))
    left = np.full(t.shape, float(lo))
    right = np.full(t.shape, float(hi))
    width = float(hi) - float(lo)
    steps = max(1, int(math.ceil(math.log2(max(width, tol) / tol))))

    below = np.asarray(func(left)) >= t
    for _ in range(steps):
        mid = 0.5 * (left + right)
        reached = np.asarray(func(mid)) >= t
        right = np.where(reached, mid, right)
        left = np.where(reached, left, mid)

    return np.where(below, float(lo), right)


def refine_maximum(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    xatol: float = 1e-9,
) -> float:
    """Golden-section/Brent refinement of a local maximum of func on [lo, hi]; returns the value"""
    if hi <= lo:
        return float(func(lo))
    result = optimize.minimize_scalar(
        lambda x: -float(func(x)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": xatol},
    )
    return max(-float(result.fun), float(func(lo)), float(func(hi)))


def top_local_maxima(values: np.ndarray, count: int = 3) -> np.ndarray:
    """Indices of the largest local maxima of a sampled curve, largest first"""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return np.argsort(v)[::-1][:count]
    interior = np.flatnonzero((v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:])) + 1
    candidates = np.concatenate(([0, v.size - 1], interior))
    order = np.argsort(v[candidates], kind="stable")[::-1]
    return candidates[order[:count]]
