"""Slow, independent reference computations used as test oracles.

Nothing here imports the package under test.
"""

from __future__ import annotations

import math
from decimal import Decimal, getcontext


def erf_maclaurin(x: float) -> float:
    """erf by its Maclaurin series, summed until terms stop changing the total.

    Accurate for |x| <= 3; summed in Decimal to avoid cancellation.
    """
    getcontext().prec = 50
    X = Decimal(x)
    term = X
    total = X
    n = 0
    while True:
        n += 1
        term = -term * X * X / n
        add = term / (2 * n + 1)
        if abs(add) < Decimal(10) ** -45:
            break
        total += add
    return float(total * 2 / Decimal(math.pi).sqrt())


def bisect(f, lo: float, hi: float, tol: float = 1e-13) -> float:
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def simpson(f, lo: float, hi: float, n: int = 20000) -> float:
    """Composite Simpson's rule with ``n`` (even) panels."""
    n += n % 2
    h = (hi - lo) / n
    s = f(lo) + f(hi)
    for i in range(1, n):
        s += (4 if i % 2 else 2) * f(lo + i * h)
    return s * h / 3


def cosh_over_sinh_decimal(h: float, x: float, a: float) -> float:
    """h cosh(hx)/sinh(ha) evaluated naively in 60-digit decimal arithmetic."""
    getcontext().prec = 60
    H, X, A = Decimal(h), Decimal(x), Decimal(a)
    ch = ((H * X).exp() + (-H * X).exp()) / 2
    sh = ((H * A).exp() - (-H * A).exp()) / 2
    return float(H * ch / sh)


def mfpt_series(params_p, s, v, D, a, x, terms=60):
    """Eq-free check of W via the power series of the exponential difference.

    W(1-s) = (a-x)/(pv) - (qD/(pv)^2) (e^{-phi x} - e^{-phi a}), expanded in
    phi so it stays accurate when phi*a is small.
    """
    getcontext().prec = 60
    p, q = Decimal(params_p), 1 - Decimal(params_p)
    pv, qD = p * Decimal(v), q * Decimal(D)
    phi = pv / qD
    A, Xd = Decimal(a), Decimal(x)
    diff = Decimal(0)
    fact = Decimal(1)
    for k in range(1, terms):
        fact *= k
        diff += (-phi) ** k * (Xd ** k - A ** k) / fact
    w = (A - Xd) / pv - qD / (pv * pv) * diff
    return float(w / (1 - Decimal(s)))
