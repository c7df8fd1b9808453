"""Arbitrary-precision special functions: Legendre P_r / Q_r, Gauss 2F1,
incomplete Gamma.

Precision convention: every routine takes a binary precision ``prec`` (bits)
and returns an mpmath mpf computed with guard bits, so the result carries at
least ``prec - GUARD_BASE`` valid bits.  The guard policy is

    guard = GUARD_BASE + ceil(log2(number of series terms))

applied uniformly to all series evaluation in this module.

Normalizations:
  * Q_r(t) = P_r(t) * (1/2) log((t+1)/(t-1)) - W_{r-1}(t) for t > 1, with
    W_{r-1} the degree-(r-1) rational polynomial from the Legendre three-term
    recurrence.  This needs one transcendental call (the log) per evaluation,
    which the lattice-sum inner loop depends on.
  * 2F1 is evaluated by the defining series only; all callers in this package
    stay inside |z| < 1 (or z = 1 with c - a - b > 0).
"""

from __future__ import annotations

import math
from functools import lru_cache

from gmpy2 import mpq
from mpmath import mp, mpf

GUARD_BASE = 16


class DomainError(ValueError):
    """Argument outside the supported domain of a special function."""


def _guard(nterms: int) -> int:
    return GUARD_BASE + max(0, math.ceil(math.log2(max(2, nterms))))


def _mpfify(x):
    """Convert ints, floats, mpq and mpf to mpf at the current precision."""
    if isinstance(x, mpq):
        return mpf(x.numerator) / mpf(x.denominator)
    return mpf(x)


def legendre_P(r: int, x):
    """Legendre polynomial P_r(x) by the three-term recurrence.

    Exact on exact inputs (int, mpq, Fraction, QuadExt); returns whatever
    number type the recurrence produces, so floats stay floats.
    """
    if r < 0:
        raise DomainError("legendre_P: r must be >= 0")
    inexact = isinstance(x, float) or hasattr(x, "_mpf_")
    if isinstance(x, int):
        x = mpq(x)
    if r == 0:
        return x * 0 + 1
    p_prev = x * 0 + 1
    p_cur = x
    for k in range(1, r):
        # (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
        combo = (2 * k + 1) * x * p_cur - k * p_prev
        p_next = combo / (k + 1) if inexact else combo * mpq(1, k + 1)
        p_prev, p_cur = p_cur, p_next
    return p_cur


@lru_cache(maxsize=None)
def legendre_q_polys(r: int):
    """Rational coefficient lists (P_r, W_{r-1}) with
    Q_r(t) = P_r(t) * Q_0(t) - W_{r-1}(t).

    Both families satisfy the Legendre recurrence; W starts from
    W_{-1} = 0, W_0 = 1.
    """
    p_prev, p_cur = [mpq(1)], [mpq(0), mpq(1)]          # P_0, P_1
    w_prev, w_cur = [], [mpq(1)]                         # W_{-1}, W_0
    if r == 0:
        return [mpq(1)], []
    for k in range(1, r):
        def step(prev, cur):
            nxt = [mpq(0)] * (len(cur) + 1)
            for i, c in enumerate(cur):
                nxt[i + 1] += mpq(2 * k + 1, k + 1) * c
            for i, c in enumerate(prev):
                nxt[i] -= mpq(k, k + 1) * c
            while nxt and nxt[-1] == 0:
                nxt.pop()
            return nxt
        p_prev, p_cur = p_cur, step(p_prev, p_cur)
        w_prev, w_cur = w_cur, step(w_prev, w_cur)
    return p_cur, w_cur


def _horner(coeffs, t):
    acc = mpf(0)
    for c in reversed(coeffs):
        acc = acc * t + mpf(c.numerator) / mpf(c.denominator)
    return acc


def legendre_Q(r: int, t, prec: int = 53):
    """Legendre function of the second kind Q_r(t) for real t > 1."""
    if r < 0:
        raise DomainError("legendre_Q: r must be >= 0")
    g = _guard(r + 4)
    with mp.workprec(prec + g):
        t = _mpfify(t)
        if not t > 1:
            raise DomainError(f"legendre_Q: t must be > 1 (Green-function singularity), got {t}")
        p_coeffs, w_coeffs = legendre_q_polys(r)
        halflog = mp.log((t + 1) / (t - 1)) / 2
        val = _horner(p_coeffs, t) * halflog - _horner(w_coeffs, t)
    with mp.workprec(prec):
        return +val


def gauss_2f1(a, b, c, z, prec: int = 53, max_terms: int = 10 ** 7):
    """Gauss hypergeometric 2F1(a, b; c; z) by direct series summation.

    Domain: |z| < 1, or z = 1 with c - a - b > 0.  A geometric tail bound
    controls truncation; the term count enters the guard-bit budget.
    """
    with mp.workprec(prec + GUARD_BASE + 32):
        a, b, c, z = _mpfify(a), _mpfify(b), _mpfify(c), _mpfify(z)
        if c <= 0 and c == mp.floor(c):
            raise DomainError("gauss_2f1: c is a non-positive integer")
        if abs(z) > 1:
            raise DomainError("gauss_2f1: |z| > 1 outside the series domain")
        if abs(z) == 1 and not (z == 1 and c - a - b > 0):
            raise DomainError("gauss_2f1: divergent series at |z| = 1")
        eps = mpf(2) ** (-(prec + GUARD_BASE + 16))
        term = mpf(1)
        total = mpf(1)
        n = 0
        while True:
            ratio = (a + n) * (b + n) / ((c + n) * (n + 1)) * z
            term = term * ratio
            total += term
            n += 1
            if n >= max_terms:
                raise DomainError("gauss_2f1: series did not converge within max_terms")
            # once the term ratio is bounded away from 1, the tail is geometric
            if abs(term) < eps * max(mpf(1), abs(total)):
                rbound = abs(z) * (1 + (abs(a - c) + abs(b - c) + 1) / (n + 1))
                if rbound < mpf("0.999"):
                    break
        val = total
    with mp.workprec(prec):
        return +val


# Switchover between the series and the continued fraction for Gamma(s, x):
# the CF converges fast for x >~ s + 1; we use x > s + 1.5 uniformly.
_GAMMA_CF_SHIFT = 1.5


def incomplete_gamma(s, x, prec: int = 53):
    """Upper incomplete Gamma function Gamma(s, x) = int_x^inf t^(s-1) e^-t dt.

    x > 0 required; s = 0 is admitted (exponential integral E_1).  Small x
    uses the lower-Gamma series, large x the Lentz-evaluated continued
    fraction; the switchover is x = s + _GAMMA_CF_SHIFT.
    """
    with mp.workprec(prec + GUARD_BASE + 32):
        s, x = _mpfify(s), _mpfify(x)
        if x <= 0:
            if s > 0 and x == 0:
                val = mp.gamma(s)
                with mp.workprec(prec):
                    return +val
            raise DomainError("incomplete_gamma: x must be > 0")
        if s < 0:
            raise DomainError("incomplete_gamma: s must be >= 0")
        if x > s + _GAMMA_CF_SHIFT:
            val = _gamma_cf(s, x, prec + GUARD_BASE + 16)
        elif s == 0:
            val = _e1_series(x, prec + GUARD_BASE + 16)
        else:
            val = _gamma_series(s, x, prec + GUARD_BASE + 16)
    with mp.workprec(prec):
        return +val


def _gamma_series(s, x, wp):
    # Gamma(s,x) = Gamma(s) - x^s sum_n (-x)^n / (n! (s+n))
    eps = mpf(2) ** (-wp)
    total = mpf(0)
    term = mpf(1)  # x^n / n!
    n = 0
    while True:
        contrib = term / (s + n)
        total += contrib if n % 2 == 0 else -contrib
        n += 1
        term *= x / n
        if term / (s + n) < eps * (1 + abs(total)):
            break
    return mp.gamma(s) - mp.power(x, s) * total


def _e1_series(x, wp):
    # E_1(x) = -euler - log x + sum_{k>=1} (-1)^(k+1) x^k / (k k!)
    eps = mpf(2) ** (-wp)
    total = mpf(0)
    term = mpf(1)
    k = 0
    while True:
        k += 1
        term *= x / k
        contrib = term / k
        total += contrib if k % 2 == 1 else -contrib
        if contrib < eps * (1 + abs(total)):
            break
    return -mp.euler - mp.log(x) + total


def _gamma_cf(s, x, wp):
    # Gamma(s,x) = e^-x x^s / (x + 1 - s - 1(1-s)/(x + 3 - s - 2(2-s)/(...)))
    # evaluated by the modified Lentz algorithm.
    tiny = mpf(2) ** (-wp * 4)
    eps = mpf(2) ** (-wp)
    b = x + 1 - s
    c = 1 / tiny
    d = 1 / b if b != 0 else 1 / tiny
    h = d
    for i in range(1, 10 ** 6):
        an = -i * (i - s)
        b += 2
        d = an * d + b
        if d == 0:
            d = tiny
        c = b + an / c
        if c == 0:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < eps:
            break
    return mp.exp(-x) * mp.power(x, s) * h
