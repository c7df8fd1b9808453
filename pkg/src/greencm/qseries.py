"""Exact rational q-expansions of level-1 modular forms.

A QExpansion stores a weight tag, an offset (the minimal exponent, possibly
negative) and a dense list of gmpy2 rationals.  Coefficients are complete for
all exponents n < trunc; arithmetic propagates truncation pessimistically
(min rule), so callers request headroom explicitly.  All coefficient
arithmetic is exact; floating point enters only in evaluate_at.
"""

from __future__ import annotations

import threading
from gmpy2 import mpq, mpz
from mpmath import mp, mpf, mpc

from .nums import as_mpq, poly_trim

_INF = 10 ** 18


class TruncationError(ValueError):
    """Requested data lies beyond the valid truncation order."""

    def __init__(self, msg, required_order=None):
        super().__init__(msg)
        self.required_order = required_order


class QExpansion:
    __slots__ = ("weight", "n_min", "vals", "trunc")

    def __init__(self, weight, n_min, vals, trunc):
        self.weight = weight
        self.n_min = int(n_min)
        self.vals = [as_mpq(v) for v in vals]
        self.trunc = int(trunc)
        self._normalize()

    def _normalize(self):
        while self.vals and self.vals[0] == 0:
            self.vals.pop(0)
            self.n_min += 1
        keep = self.trunc - self.n_min
        if len(self.vals) > keep:
            del self.vals[keep:]
        while self.vals and self.vals[-1] == 0:
            self.vals.pop()
        if not self.vals:
            self.n_min = self.trunc

    @classmethod
    def zero(cls, weight=0, trunc=_INF):
        return cls(weight, 0, [], trunc)

    @classmethod
    def one(cls, trunc=_INF, weight=0):
        return cls(weight, 0, [1], trunc)

    @classmethod
    def monomial(cls, n, coeff=1, weight=0, trunc=_INF):
        return cls(weight, n, [coeff], trunc)

    def __getitem__(self, n: int) -> mpq:
        if n >= self.trunc:
            raise TruncationError(
                f"coefficient of q^{n} beyond truncation order {self.trunc}",
                required_order=n + 1,
            )
        if n < self.n_min or n - self.n_min >= len(self.vals):
            return mpq(0)
        return self.vals[n - self.n_min]

    def coefficients(self):
        return {self.n_min + i: c for i, c in enumerate(self.vals) if c != 0}

    @property
    def is_zero(self) -> bool:
        return not self.vals

    @property
    def valuation(self) -> int:
        if self.is_zero:
            raise ValueError("zero series has no valuation")
        return self.n_min

    def principal_part(self):
        """Map m -> c(-m) for m >= 1."""
        return {-n: c for n, c in self.coefficients().items() if n < 0}

    def is_holomorphic_expansion(self) -> bool:
        return self.is_zero or self.n_min >= 0

    # -- ring operations ---------------------------------------------------

    def _require_same_weight(self, other):
        if self.weight != other.weight and not (self.is_zero or other.is_zero):
            raise ValueError(f"weight mismatch: {self.weight} vs {other.weight}")

    def __add__(self, other):
        if isinstance(other, (int, mpq)):
            other = QExpansion(self.weight, 0, [other], _INF)
        self._require_same_weight(other)
        trunc = min(self.trunc, other.trunc)
        n0 = min(self.n_min, other.n_min)
        n1 = min(trunc, max(self.n_min + len(self.vals), other.n_min + len(other.vals)))
        vals = [self[n] + other[n] for n in range(n0, max(n0, n1))]
        w = other.weight if self.is_zero else self.weight
        return QExpansion(w, n0, vals, trunc)

    __radd__ = __add__

    def __neg__(self):
        return QExpansion(self.weight, self.n_min, [-v for v in self.vals], self.trunc)

    def __sub__(self, other):
        if isinstance(other, (int, mpq)):
            other = QExpansion(self.weight, 0, [other], _INF)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, mpq)):
            other = as_mpq(other)
            return QExpansion(self.weight, self.n_min,
                              [v * other for v in self.vals], self.trunc)
        if self.is_zero or other.is_zero:
            return QExpansion.zero(self.weight + other.weight,
                                   min(self.trunc, other.trunc))
        trunc = min(self.trunc + other.n_min, other.trunc + self.n_min)
        n0 = self.n_min + other.n_min
        length = max(0, trunc - n0)
        out = [mpq(0)] * length
        for i, a in enumerate(self.vals):
            if a == 0:
                continue
            jmax = min(len(other.vals), length - i)
            for j in range(jmax):
                b = other.vals[j]
                if b != 0:
                    out[i + j] += a * b
        return QExpansion(self.weight + other.weight, n0, out, trunc)

    __rmul__ = __mul__

    def inverse(self):
        """Multiplicative inverse; requires a nonzero leading coefficient."""
        if self.is_zero:
            raise ZeroDivisionError("inverse of zero series")
        lead = self.vals[0]
        if lead == 0:
            raise ZeroDivisionError("leading coefficient vanishes")
        n0 = self.n_min
        length = self.trunc - n0
        inv = [mpq(0)] * length
        inv[0] = 1 / lead
        for n in range(1, length):
            acc = mpq(0)
            for k in range(1, min(n, len(self.vals) - 1) + 1):
                acc += self.vals[k] * inv[n - k]
            inv[n] = -acc / lead
        return QExpansion(-self.weight, -n0, inv, self.trunc - 2 * n0)

    def __truediv__(self, other):
        if isinstance(other, (int, mpq)):
            inv = 1 / as_mpq(other)
            return self * inv
        return self * other.inverse()

    def __pow__(self, n: int):
        if n == 0:
            return QExpansion.one(self.trunc)
        base = self if n > 0 else self.inverse()
        n = abs(n)
        out = None
        while n:
            if n & 1:
                out = base if out is None else out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def qderivative(self):
        """q d/dq, the normalized derivative (2 pi i)^-1 d/dtau."""
        vals = [(self.n_min + i) * v for i, v in enumerate(self.vals)]
        return QExpansion(self.weight + 2, self.n_min, vals, self.trunc)

    def truncate(self, trunc: int):
        return QExpansion(self.weight, self.n_min, self.vals, min(self.trunc, trunc))

    def with_weight(self, weight):
        return QExpansion(weight, self.n_min, self.vals, self.trunc)

    def __eq__(self, other):
        if not isinstance(other, QExpansion):
            return NotImplemented
        trunc = min(self.trunc, other.trunc)
        a = {n: c for n, c in self.coefficients().items() if n < trunc}
        b = {n: c for n, c in other.coefficients().items() if n < trunc}
        return a == b

    def __repr__(self):
        items = sorted(self.coefficients().items())[:6]
        body = " + ".join(f"{c}*q^{n}" for n, c in items) or "0"
        return f"QExpansion(wt={self.weight}, {body} + O(q^{min(self.trunc, _INF)}))"

    # -- serialization -----------------------------------------------------

    def to_json_dict(self):
        return {
            "weight": self.weight,
            "n_min": self.n_min,
            "N": self.trunc,
            "coeffs": [[n, str(c)] for n, c in sorted(self.coefficients().items())],
        }

    @classmethod
    def from_json_dict(cls, d):
        vals = {}
        for n, s in d["coeffs"]:
            vals[int(n)] = mpq(s)
        n0 = min(vals) if vals else 0
        n1 = max(vals) + 1 if vals else 0
        return cls(d["weight"], n0, [vals.get(n, 0) for n in range(n0, n1)], d["N"])


# ---------------------------------------------------------------------------
# standard level-1 generators, with a process-wide memo cache

_cache_lock = threading.Lock()
_form_cache: dict = {}


def _sigma_list(k: int, N: int):
    """[sigma_k(1), ..., sigma_k(N-1)] by divisor sieve."""
    out = [mpz(0)] * N
    for d in range(1, N):
        dk = mpz(d) ** k
        for n in range(d, N, d):
            out[n] += dk
    return out


def standard_form(name: str, order: int) -> QExpansion:
    """Exact expansion of E4, E6, Delta or J to the given order
    (coefficients valid for n < order)."""
    if order < 1:
        raise ValueError("order must be >= 1")
    key = (name, order)
    with _cache_lock:
        if key in _form_cache:
            return _form_cache[key]
    if name == "E4":
        sig = _sigma_list(3, order)
        form = QExpansion(4, 0, [1] + [240 * s for s in sig[1:]], order)
    elif name == "E6":
        sig = _sigma_list(5, order)
        form = QExpansion(6, 0, [1] + [-504 * s for s in sig[1:]], order)
    elif name == "Delta":
        e4 = standard_form("E4", order)
        e6 = standard_form("E6", order)
        form = (e4 ** 3 - e6 ** 2) / 1728
        form = QExpansion(12, form.n_min, form.vals, order)
    elif name == "J":
        e4 = standard_form("E4", order + 2)
        delta = standard_form("Delta", order + 2)
        form = (e4 ** 3 / delta).truncate(order)
    else:
        raise ValueError(f"unknown standard form {name!r}")
    with _cache_lock:
        _form_cache[key] = form
    return form


# ---------------------------------------------------------------------------
# weakly holomorphic basis (reduced echelon / Faber-style construction)

_EK_FACTORS = {0: [], 4: ["E4"], 6: ["E6"], 8: ["E4", "E4"],
               10: ["E4", "E6"], 14: ["E4", "E4", "E6"]}


class ObstructionError(ValueError):
    """No weakly holomorphic form with the requested principal part exists."""


def _decompose_weight(k: int):
    if k % 2 != 0:
        raise ValueError("weight must be even")
    kp = k % 12
    if kp == 2:
        kp = 14
    l0 = (k - kp) // 12
    return l0, kp


def _wh_ladder(k: int, mmax: int, order: int):
    """Echelon family f_{k,m} = q^(-m) + O(q^(l0+1)) for -l0 <= m <= mmax,
    together with the companion polynomials P_m with f_{k,m} = Delta^l0 *
    E_k' * P_m(j)."""
    l0, kp = _decompose_weight(k)
    work = order + mmax + abs(l0) + 4
    base = QExpansion.one(work, weight=0)
    for nm in _EK_FACTORS[kp]:
        base = base * standard_form(nm, work)
    base = base * (standard_form("Delta", work) ** l0)
    base = base.with_weight(k)
    jf = standard_form("J", work)
    ladder = {-l0: base}
    polys = {-l0: [mpq(1)]}
    for m in range(-l0, mmax):
        f = ladder[m] * jf
        poly = [mpq(0)] + polys[m]
        # clear coefficients q^n for -m <= n <= l0 using lower rungs
        for n in range(-m, l0 + 1):
            c = f[n]
            if c != 0 and -n in ladder:
                f = f - ladder[-n] * c
                pp = polys[-n]
                poly = poly_trim([a - c * (pp[i] if i < len(pp) else 0)
                                  for i, a in enumerate(poly)])
        ladder[m + 1] = f
        polys[m + 1] = poly
    return ladder, polys, l0


def dim_modular_forms(w: int) -> int:
    """dim M_w(SL2(Z)) for even w >= 0."""
    if w < 0 or w % 2:
        return 0
    if w % 12 == 2:
        return w // 12
    return w // 12 + 1


def modular_space_basis(w: int, order: int):
    """Echelon (Victor Miller) basis of M_w(SL2(Z)): g_i = q^i + O(q^dim)."""
    d = dim_modular_forms(w)
    if d == 0:
        return []
    basis = []
    for i in range(d):
        wi = w - 12 * i  # even, >= 0, never 2
        b = 1 if wi % 4 else 0
        a = (wi - 6 * b) // 4
        g = standard_form("E4", order) ** a if a else QExpansion.one(order)
        if b:
            g = g * standard_form("E6", order)
        if i:
            g = g * standard_form("Delta", order) ** i
        basis.append(g.with_weight(w))
    # echelon-reduce: basis[i] = q^i + O(q^d)
    for i in reversed(range(d)):
        lead = basis[i][i]
        basis[i] = basis[i] / lead
        for j in range(i):
            c = basis[j][i]
            if c != 0:
                basis[j] = basis[j] - basis[i] * c
    return basis


def weakly_holomorphic_basis(k: int, m: int, order: int) -> QExpansion:
    """The reduced basis element f_{k,m} = q^(-m) + O(q^(l0+1)) of M^!_k,
    level 1, weight k <= 0 even, with integer coefficients.

    Raises ObstructionError when no form with principal part exactly q^(-m)
    exists (the pairing against the obstruction space S_{2-k} is nonzero).
    """
    if k > 0 or k % 2 != 0:
        raise ValueError("weight must be a non-positive even integer")
    l0, _ = _decompose_weight(k)
    if m < -l0:
        dim_obstruction = max(0, -l0 - 1)  # dim S_{2-k} at level 1
        raise ObstructionError(
            f"no f in M^!_{k} with principal part q^(-{m}): the pairing with "
            f"the obstruction space S_{2 - k} (dimension {dim_obstruction}) "
            f"does not vanish")
    ladder, _, _ = _wh_ladder(k, m, order)
    return ladder[m].truncate(order)


# ---------------------------------------------------------------------------
# evaluation and j-polynomial recognition


def evaluate_at(f: QExpansion, tau, prec: int = 53):
    """Evaluate a q-expansion at tau in the upper half-plane.

    The geometric tail beyond the truncation order is estimated from the
    computed coefficients; if it cannot be pushed below the target precision,
    a TruncationError carrying a sufficient order is raised.
    """
    guard = 16

    def q2f(c):
        return mpf(int(c.numerator)) / mpf(int(c.denominator))

    with mp.workprec(prec + guard + 16):
        tau = mpc(tau)
        if not tau.imag > 0:
            raise ValueError("tau must be in the upper half-plane")
        q = mp.exp(2j * mp.pi * tau)
        absq = abs(q)
        coeffs = sorted(f.coefficients().items())
        if not coeffs:
            return mpc(0)
        # growth-ratio estimate from the last computed coefficients
        tail_ratio = absq
        items = [c for c in coeffs if c[0] > 0][-6:]
        for (n1, c1), (n2, c2) in zip(items, items[1:]):
            r = (abs(q2f(c2)) / abs(q2f(c1))) ** (mpf(1) / (n2 - n1))
            tail_ratio = max(tail_ratio, r * absq)
        if tail_ratio >= mpf("0.75"):
            raise TruncationError(
                "truncation order insufficient at this height: geometric tail "
                f"ratio {float(tail_ratio):.3f} >= 0.75",
                required_order=4 * max(2, f.trunc))
        value = mpc(0)
        for n, c in coeffs:
            value += q2f(c) * q ** n
        n_last = coeffs[-1][0]
        tail = abs(q2f(coeffs[-1][1])) * absq ** n_last * tail_ratio / (1 - tail_ratio)
        scale = max(abs(value), mpf(1))
        if tail > scale * mpf(2) ** (-prec):
            # extra orders needed at the observed geometric rate
            deficit = mp.log(tail / (scale * mpf(2) ** (-prec)))
            extra = int(mp.ceil(deficit / (-mp.log(tail_ratio)))) + 8
            raise TruncationError(
                f"truncation order {f.trunc} leaves tail {mp.nstr(tail, 5)} above "
                f"2^-{prec}",
                required_order=f.trunc + extra)
    with mp.workprec(prec):
        return +value


def as_j_polynomial(f: QExpansion):
    """Write a weight-0 form holomorphic on H (pole only at infinity) as a
    polynomial in j; returns mpq coefficients, lowest degree first.

    The result is re-expanded and compared to f's truncation order; a nonzero
    residual means f is not in Q[j].
    """
    if f.weight != 0:
        raise ValueError("as_j_polynomial needs weight 0")
    if f.is_zero:
        return []
    pole = max(0, -f.n_min)
    if f.trunc < 1:
        raise TruncationError("need coefficients at least to q^0", required_order=1)
    g = f
    out = [mpq(0)] * (pole + 1)
    ladder, polys, _ = _wh_ladder(0, pole, max(2, f.trunc))
    for n in range(pole, 0, -1):
        c = g[-n]
        if c != 0:
            g = g - ladder[n] * c
            for i, a in enumerate(polys[n]):
                out[i] += c * a
    out[0] += g[0]
    g = g - g[0]
    poly = poly_trim(out)
    # re-expansion check over the full valid range
    jf = standard_form("J", max(2, f.trunc) + pole + 2)
    acc = QExpansion.zero(0, jf.trunc)
    for c in reversed(poly):
        acc = acc * jf + QExpansion(0, 0, [c], _INF) if not acc.is_zero else QExpansion(0, 0, [c], jf.trunc)
    if not (acc.truncate(f.trunc) == f.truncate(f.trunc)):
        raise ValueError("input is not a polynomial in j (nonzero residual)")
    return poly
