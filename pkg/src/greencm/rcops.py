"""Formal raising/lowering operators, Rankin-Cohen brackets and their
multi-variable diagonal-restriction relatives, on exact series.

Conventions.  The formal symbol w stands for 1/(4 pi v), so that with the
normalized derivative dt := (2 pi i)^-1 d/dtau the operators act rationally:

    dt   (w^i q^e) = e w^i q^e + i w^(i+1) q^e
    Rt_k (w^i q^e) = (k - i) w^(i+1) q^e - e w^i q^e      (Rt_k = k w - dt)
    L    (w^i q^e) = -(i/4) (1/pi) w^(i-1) q^e

Rt is the raising operator divided by 4 pi and L the lowering operator; the
lone 1/pi produced by L is tracked as an explicit power so every coefficient
stays an exact rational (or an exact element of a real quadratic field, which
is what conjugate-exponent checks need).

The Rankin-Cohen bracket uses generalized binomials binom(m, n) =
m(m-1)...(m-n+1)/n!, so rational (including half-integral) weights are fine.

The multi-variable operator first restricting variables 2..d to a diagonal
keeps the first variable in the first bracket slot; on pure monomials
q1^a1 ... qd^ad it produces exactly

    sum_s (-1)^s binom(k1+r-1, s) binom(k2+..+kd+r-1, r-s)
          a1^(r-s) (a - a1)^s q^a .
"""

from __future__ import annotations

import itertools
from gmpy2 import mpq
from mpmath import mp, mpc, mpf

from .nums import QuadExt, as_mpq, binomial_general


def _czero(x) -> bool:
    return x == 0


def _coerce_coeff(c):
    if isinstance(c, int):
        return mpq(c)
    if isinstance(c, (mpq, QuadExt)):
        return c
    if isinstance(c, float):
        raise TypeError("inexact coefficient; these series are exact-only")
    return as_mpq(c)


def _cinv(c):
    c = _coerce_coeff(c)
    if isinstance(c, QuadExt):
        n = c.norm()
        if n == 0:
            raise ZeroDivisionError("non-invertible quadratic element")
        return c.conj() * (1 / n)
    return 1 / c


def _factorial(n: int) -> mpq:
    out = mpq(1)
    for i in range(2, n + 1):
        out *= i
    return out


def _num_to_mpf(x):
    if isinstance(x, mpq):
        return mpf(int(x.numerator)) / mpf(int(x.denominator))
    if isinstance(x, QuadExt):
        a = _num_to_mpf(x.a)
        b = _num_to_mpf(x.b)
        D = _num_to_mpf(x.D)
        return a + b * mp.sqrt(D)
    return mpf(x)


class NearlyHoloSeries:
    """Finite sum  pi^pi_pow * sum c_(i,e) w^i q^e  with weight tag."""

    __slots__ = ("weight", "terms", "pi_pow")

    def __init__(self, weight, terms=None, pi_pow: int = 0):
        self.weight = as_mpq(weight) if not isinstance(weight, QuadExt) else weight
        self.terms = {}
        if terms:
            for key, c in terms.items():
                c = _coerce_coeff(c)
                if not _czero(c):
                    self.terms[key] = self.terms.get(key, 0) + c
            self.terms = {k: c for k, c in self.terms.items() if not _czero(c)}
        self.pi_pow = pi_pow

    @classmethod
    def monomial(cls, weight, exponent, coeff=1, wpow: int = 0, pi_pow: int = 0):
        return cls(weight, {(wpow, exponent): coeff}, pi_pow)

    @classmethod
    def zero(cls, weight=0):
        return cls(weight, {})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def depth(self) -> int:
        return max((i for (i, _) in self.terms), default=0)

    def component(self, i: int):
        """The coefficient series of w^i as {exponent: coeff}."""
        return {e: c for (j, e), c in self.terms.items() if j == i}

    def _sorted_keys(self):
        return sorted(self.terms, key=lambda k: (k[0], repr(k[1])))

    def __add__(self, other):
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.weight != other.weight:
            raise ValueError("weight mismatch in addition")
        if self.pi_pow != other.pi_pow:
            raise ValueError("pi-power mismatch in addition")
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0) + c
        return NearlyHoloSeries(self.weight, terms, self.pi_pow)

    def __neg__(self):
        return NearlyHoloSeries(self.weight, {k: -c for k, c in self.terms.items()},
                                self.pi_pow)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        return NearlyHoloSeries(self.weight,
                                {k: c * s for k, c in self.terms.items()},
                                self.pi_pow)

    def pi_shift(self, n: int):
        return NearlyHoloSeries(self.weight, dict(self.terms), self.pi_pow + n)

    def __mul__(self, other):
        if isinstance(other, (int, mpq, QuadExt)):
            return self.scale(other)
        terms = {}
        for (i1, e1), c1 in self.terms.items():
            for (i2, e2), c2 in other.terms.items():
                key = (i1 + i2, e1 + e2)
                terms[key] = terms.get(key, 0) + c1 * c2
        return NearlyHoloSeries(self.weight + other.weight, terms,
                                self.pi_pow + other.pi_pow)

    __rmul__ = __mul__

    def __eq__(self, other):
        return (self.weight == other.weight and self.pi_pow == other.pi_pow
                and self.terms == other.terms) or (self.is_zero and other.is_zero)

    def __repr__(self):
        parts = []
        for (i, e) in self._sorted_keys()[:8]:
            c = self.terms[(i, e)]
            parts.append(f"{c}*w^{i}*q^({e})")
        body = " + ".join(parts) or "0"
        pi = f" * pi^{self.pi_pow}" if self.pi_pow else ""
        return f"NHS(wt={self.weight}, {body}{pi})"

    def dtilde(self):
        """Normalized holomorphic derivative (2 pi i)^-1 d/dtau."""
        terms = {}
        for (i, e), c in self.terms.items():
            if not _czero(c * e):
                terms[(i, e)] = terms.get((i, e), 0) + c * e
            if i:
                key = (i + 1, e)
                terms[key] = terms.get(key, 0) + c * i
        return NearlyHoloSeries(self.weight + 2, terms, self.pi_pow)

    def evaluate(self, tau, prec: int = 53):
        with mp.workprec(prec + 16):
            tau = mpc(tau)
            w = 1 / (4 * mp.pi * tau.imag)
            out = mpc(0)
            for (i, e), c in self.terms.items():
                out += _num_to_mpf(c) * w ** i * mp.exp(2j * mp.pi * _num_to_mpf(e) * tau)
            out *= mp.pi ** self.pi_pow
        with mp.workprec(prec):
            return +out


def raise_once(f: NearlyHoloSeries) -> NearlyHoloSeries:
    """One application of the normalized raising operator at f's weight."""
    k = f.weight
    terms = {}
    for (i, e), c in f.terms.items():
        c1 = c * (k - i)
        if not _czero(c1):
            key = (i + 1, e)
            terms[key] = terms.get(key, 0) + c1
        c2 = c * e
        if not _czero(c2):
            key = (i, e)
            terms[key] = terms.get(key, 0) - c2
    return NearlyHoloSeries(k + 2, terms, f.pi_pow)


def raise_op(f: NearlyHoloSeries, times: int = 1) -> NearlyHoloSeries:
    if times < 0:
        raise ValueError("times must be >= 0")
    for _ in range(times):
        f = raise_once(f)
    return f


def lower_op(f: NearlyHoloSeries) -> NearlyHoloSeries:
    """The lowering operator; introduces one inverse power of pi."""
    terms = {}
    for (i, e), c in f.terms.items():
        if i:
            key = (i - 1, e)
            terms[key] = terms.get(key, 0) - c * mpq(i, 4)
    return NearlyHoloSeries(f.weight - 2, terms, f.pi_pow - 1)


def laplacian(f: NearlyHoloSeries) -> NearlyHoloSeries:
    """Delta_k = -L_(k+2) R_k - k on the formal series (pi-free)."""
    lr = lower_op(raise_once(f)).pi_shift(1).scale(-4)
    out_terms = dict(lr.terms)
    for key, c in f.terms.items():
        out_terms[key] = out_terms.get(key, 0) - f.weight * c
    return NearlyHoloSeries(f.weight, out_terms, f.pi_pow)


def rc_bracket(f: NearlyHoloSeries, g: NearlyHoloSeries, r: int) -> NearlyHoloSeries:
    """Rankin-Cohen bracket [f, g]_r of weights (k1, k2), by the raising-
    operator form; on holomorphic inputs the w-terms cancel exactly."""
    if r < 0:
        raise ValueError("r must be >= 0")
    k1, k2 = f.weight, g.weight
    out = NearlyHoloSeries.zero(k1 + k2 + 2 * r)
    fpows = [f]
    for _ in range(r):
        fpows.append(raise_once(fpows[-1]))
    gpows = [g]
    for _ in range(r):
        gpows.append(raise_once(gpows[-1]))
    for s in range(r + 1):
        coeff = binomial_general(k1 + r - 1, s) * binomial_general(k2 + r - 1, r - s)
        if s % 2 != r % 2:
            coeff = -coeff
        term = (fpows[r - s] * gpows[s]).scale(coeff)
        out = out + NearlyHoloSeries(out.weight, term.terms, term.pi_pow)
    return out


# ---------------------------------------------------------------------------
# multi-variable series


class MultiSeries:
    """Exact series in q1..qd with an optional power of w1 = 1/(4 pi v1) on
    each term; the only non-holomorphic structure needed is in variable 1."""

    __slots__ = ("d", "kappa", "terms", "pi_pow")

    def __init__(self, d: int, kappa, terms=None, pi_pow: int = 0):
        self.d = d
        self.kappa = tuple(as_mpq(k) for k in kappa)
        if len(self.kappa) != d:
            raise ValueError("kappa must have length d")
        self.terms = {}
        if terms:
            for key, c in terms.items():
                c = _coerce_coeff(c)
                if not _czero(c):
                    self.terms[key] = self.terms.get(key, 0) + c
            self.terms = {k: c for k, c in self.terms.items() if not _czero(c)}
        self.pi_pow = pi_pow

    @classmethod
    def monomial(cls, kappa, exps, coeff=1, w1pow: int = 0, pi_pow: int = 0):
        exps = tuple(exps)
        return cls(len(exps), kappa, {(w1pow, exps): coeff}, pi_pow)

    @classmethod
    def one(cls, kappa):
        d = len(kappa)
        return cls.monomial(kappa, (0,) * d)

    @property
    def is_zero(self):
        return not self.terms

    def with_kappa(self, kappa):
        return MultiSeries(self.d, kappa, dict(self.terms), self.pi_pow)

    def __add__(self, other):
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.pi_pow != other.pi_pow:
            raise ValueError("pi-power mismatch in addition")
        terms = dict(self.terms)
        for k, c in other.terms.items():
            terms[k] = terms.get(k, 0) + c
        return MultiSeries(self.d, self.kappa, terms, self.pi_pow)

    def __neg__(self):
        return MultiSeries(self.d, self.kappa,
                           {k: -c for k, c in self.terms.items()}, self.pi_pow)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        return MultiSeries(self.d, self.kappa,
                           {k: c * s for k, c in self.terms.items()}, self.pi_pow)

    def __mul__(self, other):
        if isinstance(other, (int, mpq, QuadExt)):
            return self.scale(other)
        if self.d != other.d:
            raise ValueError("variable count mismatch")
        terms = {}
        for (i1, e1), c1 in self.terms.items():
            for (i2, e2), c2 in other.terms.items():
                key = (i1 + i2, tuple(a + b for a, b in zip(e1, e2)))
                terms[key] = terms.get(key, 0) + c1 * c2
        kappa = tuple(a + b for a, b in zip(self.kappa, other.kappa))
        return MultiSeries(self.d, kappa, terms, self.pi_pow + other.pi_pow)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("use inverse() for negative powers")
        out = MultiSeries.one((0,) * self.d)
        for _ in range(n):
            out = out * self
        return out

    def truncate(self, order):
        """Keep terms of total exponent degree < order."""
        terms = {k: c for k, c in self.terms.items() if sum(k[1]) < order}
        return MultiSeries(self.d, self.kappa, terms, self.pi_pow)

    def total_degrees(self):
        return sorted({sum(e) for (_, e) in self.terms})

    def inverse(self, order) -> "MultiSeries":
        """Inverse as a formal series up to total degree < order; requires an
        invertible constant term and no w1 part."""
        zero_exp = (0,) * self.d
        c0 = self.terms.get((0, zero_exp))
        if c0 is None or _czero(c0):
            raise ValueError("series not invertible at this truncation "
                             "(vanishing constant term)")
        if any(i for (i, _) in self.terms):
            raise ValueError("inverse of w1-carrying series not supported")
        kappa0 = tuple(-k for k in self.kappa)
        c0inv = _cinv(c0)
        h = MultiSeries(self.d, (0,) * self.d,
                        {k: -(c * c0inv) for k, c in self.terms.items()
                         if k != (0, zero_exp)}, 0)
        inv = MultiSeries.one((0,) * self.d)
        power = MultiSeries.one((0,) * self.d)
        min_deg = min((sum(e) for (_, e) in h.terms), default=None)
        if min_deg is None:
            return MultiSeries(self.d, kappa0, {(0, zero_exp): _cinv(c0)}, -self.pi_pow)
        if min_deg <= 0:
            raise ValueError("inverse needs positive-degree tail")
        kmax = int(order / min_deg) + 1
        for _ in range(kmax):
            power = (power * h).truncate(order)
            if power.is_zero:
                break
            inv = inv + power
        inv = inv.scale(_cinv(c0)).truncate(order)
        return MultiSeries(self.d, kappa0, inv.terms, -self.pi_pow)

    def dtilde(self, j: int) -> "MultiSeries":
        """Normalized partial derivative in variable j (1-based); in variable
        1 it also differentiates the w1 powers."""
        terms = {}
        for (i, e), c in self.terms.items():
            ce = c * e[j - 1]
            if not _czero(ce):
                terms[(i, e)] = terms.get((i, e), 0) + ce
            if j == 1 and i:
                key = (i + 1, e)
                terms[key] = terms.get(key, 0) + c * i
        kappa = tuple(k + (2 if idx == j - 1 else 0) for idx, k in enumerate(self.kappa))
        return MultiSeries(self.d, kappa, terms, self.pi_pow)

    def dtilde_rest(self) -> "MultiSeries":
        """Sum of the normalized partials in variables 2..d (the derivative
        along the diagonal of the non-first variables)."""
        out = MultiSeries(self.d, self.kappa, {}, self.pi_pow)
        terms = {}
        for (i, e), c in self.terms.items():
            s = sum(e[1:])
            cs = c * s
            if not _czero(cs):
                terms[(i, e)] = terms.get((i, e), 0) + cs
        kappa = list(self.kappa)
        if self.d >= 2:
            kappa[1] = kappa[1] + 2
        return MultiSeries(self.d, tuple(kappa), terms, self.pi_pow)

    def lower_1(self) -> "MultiSeries":
        """Lowering operator in variable 1."""
        terms = {}
        for (i, e), c in self.terms.items():
            if i:
                key = (i - 1, e)
                terms[key] = terms.get(key, 0) - c * mpq(i, 4)
        kappa = tuple(k - (2 if idx == 0 else 0) for idx, k in enumerate(self.kappa))
        return MultiSeries(self.d, kappa, terms, self.pi_pow - 1)

    def diagonal(self) -> NearlyHoloSeries:
        """Restrict all variables to the diagonal: exponents add, w1 -> w."""
        terms = {}
        for (i, e), c in self.terms.items():
            total = e[0]
            for x in e[1:]:
                total = total + x
            key = (i, total)
            terms[key] = terms.get(key, 0) + c
        return NearlyHoloSeries(sum(self.kappa, mpq(0)), terms, self.pi_pow)

    def is_holomorphic(self) -> bool:
        return all(i == 0 for (i, _) in self.terms)

    def __repr__(self):
        items = sorted(self.terms.items(), key=lambda kv: (kv[0][0], repr(kv[0][1])))[:6]
        body = " + ".join(f"{c}*w1^{i}*q^{list(e)}" for (i, e), c in items) or "0"
        return f"MultiSeries(d={self.d}, kappa={self.kappa}, {body})"


def a_e_table(kappa, r: int):
    """The integer constants multiplying g^(r+1) d^e (f/g) in the displayed
    expansion of the diagonal-restriction operator; s! is read as
    (e2+...+ed)!, consistent with the multinomial structure."""
    kappa = tuple(as_mpq(k) for k in kappa)
    d = len(kappa)
    k1 = kappa[0]
    krest = sum(kappa[1:], mpq(0))
    table = {}
    for e in itertools.product(range(r + 1), repeat=d):
        if sum(e) != r:
            continue
        s = sum(e[1:])
        mult = _factorial(s)
        for ej in e[1:]:
            mult /= _factorial(ej)
        val = (binomial_general(k1 + r - 1, s)
               * binomial_general(krest + r - 1, e[0]) * mult)
        if s % 2:
            val = -val
        table[e] = val
    return table


def c1_restrict(f: MultiSeries, r: int) -> NearlyHoloSeries:
    """Diagonal-restriction Rankin-Cohen operator, first variable kept in the
    first slot; on monomials this is exactly

        sum_s (-1)^s binom(k1+r-1, s) binom(k'+r-1, r-s) a1^(r-s) (a-a1)^s q^a
    """
    if f.d < 2:
        raise ValueError("need at least two variables")
    k1 = f.kappa[0]
    krest = sum(f.kappa[1:], mpq(0))
    d1 = [f]
    for _ in range(r):
        d1.append(d1[-1].dtilde(1))
    acc = NearlyHoloSeries.zero(sum(f.kappa, mpq(0)) + 2 * r)
    for s in range(r + 1):
        g = d1[r - s]
        for _ in range(s):
            g = g.dtilde_rest()
        coeff = binomial_general(k1 + r - 1, s) * binomial_general(krest + r - 1, r - s)
        if s % 2:
            coeff = -coeff
        term = g.diagonal().scale(coeff)
        acc = acc + NearlyHoloSeries(acc.weight, term.terms, term.pi_pow)
    return acc


def _c1_via_raising(f: MultiSeries, r: int) -> NearlyHoloSeries:
    """Independent route: restrict variables 2..d to a diagonal, then apply
    the two-variable bracket via raising operators (first slot = variable 1,
    weight k1; second slot = the diagonal, weight k2+..+kd)."""
    k1 = f.kappa[0]
    krest = sum(f.kappa[1:], mpq(0))

    # two-variable representation: key (i1, i2, e1, erest)
    def to2(ms):
        out = {}
        for (i, e), c in ms.terms.items():
            tot = e[1]
            for x in e[2:]:
                tot = tot + x
            key = (i, 0, e[0], tot)
            out[key] = out.get(key, 0) + c
        return out

    def raise2(terms, slot, k):
        new = {}
        for (i1, i2, e1, e2), c in terms.items():
            i = (i1, i2)[slot]
            e = (e1, e2)[slot]
            up = list((i1, i2))
            up[slot] += 1
            c1 = c * (k - i)
            if not _czero(c1):
                key = (up[0], up[1], e1, e2)
                new[key] = new.get(key, 0) + c1
            ce = c * e
            if not _czero(ce):
                key = (i1, i2, e1, e2)
                new[key] = new.get(key, 0) - ce
        return new

    base = to2(f)
    f_raised = [base]
    for j in range(r):
        f_raised.append(raise2(f_raised[-1], 0, k1 + 2 * j))
    acc = {}
    for s in range(r + 1):
        terms = f_raised[r - s]
        for j in range(s):
            terms = raise2(terms, 1, krest + 2 * j)
        coeff = binomial_general(k1 + r - 1, s) * binomial_general(krest + r - 1, r - s)
        if s % 2 != r % 2:
            coeff = -coeff
        for (i1, i2, e1, e2), c in terms.items():
            key = (i1 + i2, e1 + e2)
            acc[key] = acc.get(key, 0) + coeff * c
    return NearlyHoloSeries(sum(f.kappa, mpq(0)) + 2 * r, acc, f.pi_pow)


def dc_operator(f: MultiSeries, g: MultiSeries, kappa, r: int, order,
                route: str = "displayed") -> NearlyHoloSeries:
    """(g^(r+1))^diag * C1_(kappa,r)(f/g), computed either termwise from the
    displayed constants a_e ("displayed") or through the operator definition
    ("definition"); both routes agree and the tests cross-check them.

    kappa is the operator parameter (the weight vector of f/g); division
    happens at the given total-degree truncation.
    """
    kappa = tuple(as_mpq(k) for k in kappa)
    if g.pi_pow != 0 or not g.is_holomorphic():
        raise ValueError("g must be holomorphic with trivial pi power")
    ginv = g.inverse(order)
    quot = (f * ginv).truncate(order).with_kappa(kappa)
    weight = sum(kappa, mpq(0)) + (r + 1) * sum(g.kappa, mpq(0)) + 2 * r
    if route == "definition":
        c1 = c1_restrict(quot, r)
        gd = (g ** (r + 1)).truncate(order).diagonal()
        return _weighted(gd * c1, weight)
    if route != "displayed":
        raise ValueError("route must be 'displayed' or 'definition'")
    table = a_e_table(kappa, r)
    gd = (g ** (r + 1)).truncate(order + r)
    acc_terms = {}
    acc_pi = None
    for e, a_e in table.items():
        if _czero(a_e):
            continue
        de = quot
        for j, ej in enumerate(e):
            for _ in range(ej):
                de = de.dtilde(j + 1)
        piece = (gd * de).truncate(order).diagonal().scale(a_e)
        if acc_pi is None:
            acc_pi = piece.pi_pow
        elif not piece.is_zero and piece.pi_pow != acc_pi:
            raise AssertionError("pi bookkeeping mismatch")
        for k, c in piece.terms.items():
            acc_terms[k] = acc_terms.get(k, 0) + c
    return NearlyHoloSeries(weight, acc_terms, acc_pi or 0)


def _weighted(nhs: NearlyHoloSeries, weight) -> NearlyHoloSeries:
    return NearlyHoloSeries(weight, dict(nhs.terms), nhs.pi_pow)


# ---------------------------------------------------------------------------
# constructive coefficients for rewriting products of raised forms


class RRCHypothesisError(ValueError):
    pass


def rrc_coefficients(k, ell, r0: int):
    """Rational constants c_(r,a,j) expressing Rt^a f * Rt^(r-a) g in terms of
    Rt^(r-j) [f, g]_j for all 0 <= a <= r <= r0, built by the inductive
    linear-system procedure; requires k + ell + 2r - 2 != 0 for 0 <= r <= r0.

    Returns {(r, a): [c_(r,a,0), ..., c_(r,a,r)]}.
    """
    k = as_mpq(k)
    ell = as_mpq(ell)
    for r in range(r0 + 1):
        if k + ell + 2 * r - 2 == 0:
            raise RRCHypothesisError(
                f"hypothesis fails at r={r}: k + ell + 2r - 2 = 0")
    out = {(0, 0): [mpq(1)]}
    for r in range(r0):
        n = r + 2  # unknowns x_0..x_{r+1}, basis j = 0..r+1
        rows = []
        rhs = []
        for a in range(r + 1):
            row = [mpq(0)] * n
            row[a] = mpq(1)
            row[a + 1] = mpq(1)
            rows.append(row)
            vec = [mpq(0)] * n
            for j, c in enumerate(out[(r, a)]):
                vec[j] = c
            rhs.append(vec)
        cert = binomial_general(k + ell + 2 * r, r + 1)
        if cert == 0:
            raise RRCHypothesisError(
                f"linear system singular at r={r + 1}: binom(k+ell+2r, r+1) = 0")
        row = [mpq(0)] * n
        for a in range(n):
            c = binomial_general(k + r, r + 1 - a) * binomial_general(ell + r, a)
            if (r + 1 - a) % 2:
                c = -c
            row[a] = c
        rows.append(row)
        vec = [mpq(0)] * n
        vec[r + 1] = mpq(-1) if (r + 1) % 2 else mpq(1)
        rhs.append(vec)
        sol = _solve_vec(rows, rhs)
        for a in range(n):
            out[(r + 1, a)] = sol[a]
    return out


def _solve_vec(rows, rhs):
    """Gaussian elimination over Q with vector-valued right-hand sides."""
    n = len(rows)
    m = [list(map(as_mpq, row)) + list(map(as_mpq, vec)) for row, vec in zip(rows, rhs)]
    width = len(m[0])
    for col in range(n):
        piv = next((i for i in range(col, n) if m[i][col] != 0), None)
        if piv is None:
            raise RRCHypothesisError("singular linear system")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for i in range(n):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[col])]
    return [row[n:] for row in m]
