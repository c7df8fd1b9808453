"""Exact arithmetic building blocks shared across the package.

Rationals are gmpy2.mpq throughout (hashable, fast).  QuadExt adds exact
arithmetic in a real quadratic extension Q(sqrt(D)), which is needed when
operator identities are checked on exponentials with conjugate exponents.
Dense univariate polynomials over Q are plain lists of mpq, lowest degree
first.
"""

from __future__ import annotations

from gmpy2 import mpq, mpz

QQ = mpq


def as_mpq(x) -> mpq:
    if isinstance(x, mpq):
        return x
    return mpq(x)


class QuadExt:
    """An element a + b*sqrt(D) of Q(sqrt(D)) with a, b rational, D a fixed
    non-square rational.  Only ring operations and conjugation are needed."""

    __slots__ = ("a", "b", "D")

    def __init__(self, a, b=0, D=5):
        self.a = as_mpq(a)
        self.b = as_mpq(b)
        self.D = as_mpq(D)

    def _check(self, other: "QuadExt"):
        if self.D != other.D:
            raise ValueError("mixed quadratic extensions")

    def conj(self) -> "QuadExt":
        return QuadExt(self.a, -self.b, self.D)

    def trace(self) -> mpq:
        return 2 * self.a

    def norm(self) -> mpq:
        return self.a * self.a - self.D * self.b * self.b

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def __add__(self, other):
        other = self._coerce(other)
        self._check(other)
        return QuadExt(self.a + other.a, self.b + other.b, self.D)

    __radd__ = __add__

    def __neg__(self):
        return QuadExt(-self.a, -self.b, self.D)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        self._check(other)
        return QuadExt(
            self.a * other.a + self.D * self.b * other.b,
            self.a * other.b + self.b * other.a,
            self.D,
        )

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers not supported")
        out = QuadExt(1, 0, self.D)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def _coerce(self, other):
        if isinstance(other, QuadExt):
            return other
        return QuadExt(as_mpq(other), 0, self.D)

    def __eq__(self, other):
        if isinstance(other, QuadExt):
            return self.D == other.D and self.a == other.a and self.b == other.b
        if self.b != 0:
            return False
        return self.a == other

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.D))

    def __repr__(self):
        if self.b == 0:
            return f"{self.a}"
        return f"({self.a}+{self.b}*sqrt({self.D}))"


# ---------------------------------------------------------------------------
# dense polynomials over Q: list of mpq coefficients, index = degree


def poly_trim(p):
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_add(p, q):
    n = max(len(p), len(q))
    out = [mpq(0)] * n
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] += c
    return poly_trim(out)


def poly_scale(p, s):
    s = as_mpq(s)
    return poly_trim([c * s for c in p])


def poly_mul(p, q):
    if not p or not q:
        return []
    out = [mpq(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return poly_trim(out)


def poly_divmod(p, q):
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    p = list(p)
    quo = [mpq(0)] * max(0, len(p) - len(q) + 1)
    inv_lead = 1 / q[-1]
    while len(p) >= len(q) and poly_trim(p):
        if len(p) < len(q):
            break
        c = p[-1] * inv_lead
        d = len(p) - len(q)
        quo[d] = c
        for i, b in enumerate(q):
            p[d + i] -= c * b
        poly_trim(p)
    return poly_trim(quo), poly_trim(p)


def poly_xgcd(p, q):
    """Extended Euclid in Q[x]: returns (g, u, v) with u*p + v*q = g, g monic
    (or zero)."""
    r0, r1 = list(p), list(q)
    s0, s1 = [mpq(1)], []
    t0, t1 = [], [mpq(1)]
    while poly_trim(list(r1)):
        quo, rem = poly_divmod(r0, r1)
        r0, r1 = r1, rem
        s0, s1 = s1, poly_add(s0, poly_scale(poly_mul(quo, s1), -1))
        t0, t1 = t1, poly_add(t0, poly_scale(poly_mul(quo, t1), -1))
    if not r0:
        return [], s0, t0
    lead = r0[-1]
    return poly_scale(r0, 1 / lead), poly_scale(s0, 1 / lead), poly_scale(t0, 1 / lead)


def poly_eval(p, x):
    out = 0
    for c in reversed(p):
        out = out * x + c
    return out


def poly_str(p, var="x"):
    if not p:
        return "0"
    parts = []
    for i, c in enumerate(p):
        if c == 0:
            continue
        if i == 0:
            parts.append(f"{c}")
        elif i == 1:
            parts.append(f"{c}*{var}")
        else:
            parts.append(f"{c}*{var}^{i}")
    return " + ".join(parts)


def binomial_general(m, n: int) -> mpq:
    """binom(m, n) = m(m-1)...(m-n+1)/n! for rational m and integer n >= 0."""
    if n < 0:
        return mpq(0)
    m = as_mpq(m)
    num = mpq(1)
    for i in range(n):
        num *= m - i
    den = mpq(1)
    for i in range(2, n + 1):
        den *= i
    return num / den


def lll_reduce_gram(gram, delta=mpq(99, 100)):
    """Exact LLL reduction operating on a Gram matrix.

    Returns (reduced_gram, U) with reduced_gram = U * gram * U^T and U an
    integer unimodular matrix.  Vector counts and determinants are invariant;
    this tames skewed bases (Cartan, HNF) before enumeration."""
    n = len(gram)
    g = [[as_mpq(x) for x in row] for row in gram]
    U = [[mpq(1) if i == j else mpq(0) for j in range(n)] for i in range(n)]

    def inner(i, j):
        return g[i][j]

    def gram_schmidt():
        B = [mpq(0)] * n
        mu = [[mpq(0)] * n for _ in range(n)]
        for i in range(n):
            B[i] = inner(i, i)
            for j in range(i):
                mu[i][j] = (inner(i, j)
                            - sum(mu[i][k] * mu[j][k] * B[k] for k in range(j))) / B[j]
                B[i] -= mu[i][j] ** 2 * B[j]
        return B, mu

    def row_op_sub(k, j, q):
        # b_k -= q b_j: update Gram and U
        for t in range(n):
            U[k][t] -= q * U[j][t]
        for t in range(n):
            g[k][t] -= q * g[j][t]
        for t in range(n):
            g[t][k] -= q * g[t][j]

    def swap(k):
        g[k], g[k - 1] = g[k - 1], g[k]
        for t in range(n):
            g[t][k], g[t][k - 1] = g[t][k - 1], g[t][k]
        U[k], U[k - 1] = U[k - 1], U[k]

    B, mu = gram_schmidt()
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100000:
            raise RuntimeError("LLL did not terminate")
        for j in range(k - 1, -1, -1):
            q = mu[k][j]
            qi = int(q + mpq(1, 2)) if q >= 0 else -int(-q + mpq(1, 2))
            if qi:
                row_op_sub(k, j, mpq(qi))
                for t in range(j):
                    mu[k][t] -= qi * mu[j][t]
                mu[k][j] -= qi
        if B[k] >= (delta - mu[k][k - 1] ** 2) * B[k - 1]:
            k += 1
        else:
            swap(k)
            B, mu = gram_schmidt()
            k = max(k - 1, 1)
    red = tuple(tuple(int(x) for x in row) for row in g)
    Uout = [[int(x) for x in row] for row in U]
    return red, Uout


def integer_det_bareiss(rows) -> int:
    """Exact determinant of an integer matrix (Bareiss fraction-free)."""
    a = [[mpz(x) for x in row] for row in rows]
    n = len(a)
    sign = 1
    prev = mpz(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return int(sign * a[n - 1][n - 1])
