"""Adaptive Simpson quadrature and bracketed root finding.

Both routines are deliberately small and dependency-free: they back the
optimizer and serve as independent oracles in the test suite.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

from .errors import DomainError, NoFiniteRootError, NumericError

__all__ = ["RootConfig", "QuadConfig", "integrate", "find_root_increasing"]


@dataclass(frozen=True)
class RootConfig:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    max_iter: int = 200

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("root tolerances must be > 0")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_depth: int = 50

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise DomainError("quadrature tolerances must be > 0")
        if self.max_depth < 1:
            raise DomainError("max_depth must be >= 1")


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    cfg: QuadConfig = QuadConfig(),
) -> float:
    """Adaptive Simpson estimate of the integral of f over [a, b].

    The error target is max(abs_tol, rel_tol * |coarse estimate|), split in
    half at every subdivision. Each accepted panel gets a Richardson
    correction.

    Raises:
        DomainError: if a > b.
        NumericError: if f returns a non-finite value; the message names the
            abscissa.
    """
    if a > b:
        raise DomainError(f"integration bounds reversed: a={a} > b={b}")
    if a == b:
        return 0.0

    def fx(x: float) -> float:
        y = f(x)
        if not math.isfinite(y):
            raise NumericError(f"integrand is not finite at x={x!r}: {y!r}")
        return y

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    fa, fb = fx(a), fx(b)
    m = 0.5 * (a + b)
    fm = fx(m)
    whole = simpson(fa, fm, fb, b - a)
    # A coarse 5-point pass gives a scale for the relative tolerance that is
    # less easily fooled by a lucky 3-point estimate.
    fl, fr = fx(0.5 * (a + m)), fx(0.5 * (m + b))
    scale = abs(simpson(fa, fl, fm, m - a)) + abs(simpson(fm, fr, fb, b - m))
    tol = max(cfg.abs_tol, cfg.rel_tol * scale)

    # Explicit stack instead of recursion; panels are summed left to right.
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    pieces = []
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fx(lm), fx(rm)
        left = simpson(flo, flm, fmid, mid - lo)
        right = simpson(fmid, frm, fhi, hi - mid)
        err = (left + right - s) / 15.0
        if depth >= cfg.max_depth or abs(err) <= eps or mid in (lo, hi):
            pieces.append((lo, left + right + err))
            continue
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
    pieces.sort()
    return math.fsum(v for _, v in pieces)


def find_root_increasing(
    g: Callable[[float], float],
    lo: float,
    hi_hint: float,
    cfg: RootConfig = RootConfig(),
    g_lo: float | None = None,
) -> float:
    """Root of a strictly increasing function with g(lo+) < 0.

    The upper end of the bracket starts at ``hi_hint`` and doubles until g
    turns positive; bisection then narrows the bracket until its width is at
    most max(abs_tol, rel_tol * |x|).

    Args:
        g: Strictly increasing function on (lo, inf).
        lo: Lower end. g is never evaluated here; ``g_lo`` may document its
            known sign.
        hi_hint: First upper-bracket candidate, > lo.
        cfg: Tolerances and iteration cap.
        g_lo: Known value of g at lo, if any. Must be negative when given.

    Raises:
        DomainError: hi_hint <= lo, or g_lo >= 0.
        NoFiniteRootError: no sign change up to 2**64 * hi_hint.
        NumericError: g returned NaN or bisection hit max_iter.
    """
    lo, hi = float(lo), float(hi_hint)
    if not hi > lo:
        raise DomainError(f"hi_hint must exceed lo, got lo={lo}, hi_hint={hi}")
    if g_lo is not None and not g_lo < 0:
        raise DomainError(f"g(lo) must be negative, got {g_lo}")

    def gx(x: float) -> float:
        y = g(x)
        if math.isnan(y):
            raise NumericError(f"root function returned NaN at x={x!r}")
        return y

    limit = math.ldexp(abs(hi), 64)
    ghi = gx(hi)
    while ghi <= 0.0:
        if ghi == 0.0:
            return hi
        lo = hi
        hi *= 2.0
        if hi > limit or math.isinf(hi):
            raise NoFiniteRootError(
                f"no sign change found below {limit:.6g}; the cost function may be bounded "
                "or the update rate too small"
            )
        ghi = gx(hi)

    for _ in range(cfg.max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= max(cfg.abs_tol, cfg.rel_tol * abs(mid)) or mid in (lo, hi):
            return mid
        gm = gx(mid)
        if gm == 0.0:
            return mid
        if gm < 0.0:
            lo = mid
        else:
            hi = mid
    raise NumericError(f"bisection did not converge in {cfg.max_iter} iterations")
