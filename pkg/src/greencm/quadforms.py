"""Binary quadratic forms, class groups and Heegner points.

Forms are positive definite (a > 0, discriminant < 0) and primitive;
imprimitive input is rejected rather than silently normalized.  Composition
works through concordant representatives (equivalent forms with coprime
leading coefficients and a common middle coefficient), which is easy to
audit and fast enough for the class numbers this package meets.

Galois orbits of pairs of CM points cover the coprime-discriminant case:
with gcd(d1, d2) = 1 the intersection of the two ring class fields is Q, so
Gal(H/E) is the full product Cl(d1) x Cl(d2).  The action direction is fixed
as composition with the inverse class; only full-orbit statistics are
consumed downstream, so the convention choice is test-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd, isqrt

from gmpy2 import gcdext, mpz
from mpmath import mp, mpc


class QuadFormError(ValueError):
    pass


@dataclass(frozen=True)
class BinaryQuadraticForm:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.disc >= 0:
            raise QuadFormError(f"discriminant {self.disc} must be negative")
        if self.a <= 0:
            raise QuadFormError("form must be positive definite (a > 0)")
        if gcd(gcd(abs(self.a), abs(self.b)), abs(self.c)) != 1:
            raise QuadFormError("form must be primitive (gcd(a,b,c) = 1)")

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        return abs(b) <= a <= c and (b >= 0 if (abs(b) == a or a == c) else True)

    def reduce(self) -> "BinaryQuadraticForm":
        a, b, c = self.a, self.b, self.c
        while True:
            if not (-a < b <= a):
                t = (a - b) // (2 * a)
                c = a * t * t + b * t + c
                b = b + 2 * t * a
            if a > c:
                a, b, c = c, -b, a
                continue
            if a == c and b < 0:
                b = -b
            return BinaryQuadraticForm(a, b, c)

    def transform(self, x: int, r: int, y: int, s: int) -> "BinaryQuadraticForm":
        """Apply the SL2(Z) matrix (x r; y s) on the right."""
        if x * s - r * y != 1:
            raise QuadFormError("transform matrix must have determinant 1")
        a, b, c = self.a, self.b, self.c
        a2 = self(x, y)
        c2 = self(r, s)
        b2 = 2 * (a * x * r + c * y * s) + b * (x * s + y * r)
        return BinaryQuadraticForm(a2, b2, c2)

    def _coprime_representative(self, coprime_to: int) -> "BinaryQuadraticForm":
        """An equivalent form whose leading coefficient is coprime to the
        given integer, found over primitive vectors of small height."""
        for height in range(1, 64):
            for x in range(-height, height + 1):
                for y in range(-height, height + 1):
                    if max(abs(x), abs(y)) != height and height > 1:
                        continue
                    if gcd(x, y) != 1:
                        continue
                    val = self(x, y)
                    if val != 0 and gcd(val, coprime_to) == 1:
                        g, s, t = gcdext(mpz(x), mpz(y))
                        # x*s' + y*t' = 1 -> matrix (x, -t'; y, s') in SL2
                        return self.transform(x, int(-t), y, int(s))
        raise QuadFormError("no representative with coprime leading coefficient found")

    def compose(self, other: "BinaryQuadraticForm") -> "BinaryQuadraticForm":
        """Gauss composition of classes, via concordant representatives."""
        if self.disc != other.disc:
            raise QuadFormError("cannot compose forms of different discriminants")
        d = self.disc
        f1 = self
        f2 = other._coprime_representative(2 * f1.a)
        # common middle coefficient: B == b1 mod 2a1 and B == b2 mod 2a2
        B = crt_pair(f1.b, 2 * f1.a, f2.b, 2 * f2.a)
        A = f1.a * f2.a
        num = B * B - d
        if num % (4 * A) != 0:
            raise QuadFormError("concordance failed (internal error)")
        return BinaryQuadraticForm(A, B, num // (4 * A)).reduce()

    def inverse(self) -> "BinaryQuadraticForm":
        return BinaryQuadraticForm(self.a, -self.b, self.c).reduce()

    def power(self, n: int) -> "BinaryQuadraticForm":
        result = principal_form(self.disc)
        base = self if n >= 0 else self.inverse()
        n = abs(n)
        while n:
            if n & 1:
                result = result.compose(base)
            base = base.compose(base)
            n >>= 1
        return result

    def __repr__(self):
        return f"BQF({self.a},{self.b},{self.c})"


def crt_pair(r1: int, m1: int, r2: int, m2: int) -> int:
    g, u, v = gcdext(mpz(m1), mpz(m2))
    g = int(g)
    if (r2 - r1) % g != 0:
        raise QuadFormError("CRT has no solution")
    lcm = m1 // g * m2
    x = (r1 + (r2 - r1) // g * int(u) % (m2 // g) * m1) % lcm
    return int(x)


def principal_form(d: int) -> BinaryQuadraticForm:
    if d >= 0 or d % 4 not in (0, 1):
        raise QuadFormError(f"{d} is not a negative discriminant")
    k = d % 2
    return BinaryQuadraticForm(1, k, (k * k - d) // 4)


def is_discriminant(d: int) -> bool:
    return d < 0 and d % 4 in (0, 1)


def is_fundamental(d: int) -> bool:
    if not is_discriminant(d):
        return False

    def squarefree(n):
        n = abs(n)
        i = 2
        while i * i <= n:
            if n % (i * i) == 0:
                return False
            i += 1
        return True

    if d % 4 == 1:
        return squarefree(d)
    m = d // 4
    return m % 4 in (2, 3) and squarefree(m)


def reduced_forms(d: int):
    """All primitive reduced forms of discriminant d, sorted."""
    if not is_discriminant(d):
        raise QuadFormError(f"{d} is not a negative discriminant (d = 0,1 mod 4, d < 0)")
    out = []
    bmax = isqrt(-d // 3)
    for b in range(abs(d) % 2, bmax + 1, 2):
        n4 = b * b - d
        assert n4 % 4 == 0
        n = n4 // 4
        a = max(b, 1)
        while a * a <= n:
            if n % a == 0:
                c = n // a
                if gcd(gcd(a, b), c) == 1:
                    out.append(BinaryQuadraticForm(a, b, c))
                    if 0 < b < a < c:
                        out.append(BinaryQuadraticForm(a, -b, c))
            a += 1
    assert all(f.is_reduced() for f in out)
    return sorted(out, key=lambda f: (f.a, f.b, f.c))


def class_number_bruteforce(d: int) -> int:
    """Independent count of reduced primitive forms by direct (a, b) sweep."""
    count = 0
    amax = isqrt(-d // 3)
    for a in range(1, amax + 1):
        for b in range(-a, a + 1):
            n4 = b * b - d
            if n4 % (4 * a) != 0:
                continue
            c = n4 // (4 * a)
            if c < a:
                continue
            if gcd(gcd(a, abs(b)), c) != 1:
                continue
            if (abs(b) == a or a == c) and b < 0:
                continue
            count += 1
    return count


class ClassGroup:
    """The form class group Cl(d): reduced representatives, composition
    table, identity, inverses."""

    def __init__(self, d: int):
        self.d = d
        self.forms = reduced_forms(d)
        self.index = {f: i for i, f in enumerate(self.forms)}
        self.identity = principal_form(d).reduce()
        h = len(self.forms)
        self.table = [[self.index[self.forms[i].compose(self.forms[j])]
                       for j in range(h)] for i in range(h)]
        self._validate()

    def _validate(self):
        h = self.h
        e = self.index[self.identity]
        for i in range(h):
            if self.table[e][i] != i or self.table[i][e] != i:
                raise QuadFormError("composition table: identity axiom failed")
            if e not in self.table[i]:
                raise QuadFormError("composition table: missing inverse")
        for i in range(h):
            for j in range(h):
                for k in range(h):
                    if self.table[self.table[i][j]][k] != self.table[i][self.table[j][k]]:
                        raise QuadFormError("composition table: associativity failed")

    @property
    def h(self) -> int:
        return len(self.forms)

    def compose_idx(self, i: int, j: int) -> int:
        return self.table[i][j]

    def inverse_idx(self, i: int) -> int:
        e = self.index[self.identity]
        return self.table[i].index(e)

    def element_order(self, i: int) -> int:
        e = self.index[self.identity]
        k, cur = 1, i
        while cur != e:
            cur = self.table[cur][i]
            k += 1
        return k

    def is_cyclic(self) -> bool:
        return any(self.element_order(i) == self.h for i in range(self.h))

    def to_json_dict(self):
        return {
            "d": self.d,
            "forms": [[f.a, f.b, f.c] for f in self.forms],
            "table": [[i, j, self.table[i][j]]
                      for i in range(self.h) for j in range(self.h)],
        }

    @classmethod
    def from_json_dict(cls, data):
        obj = cls.__new__(cls)
        obj.d = int(data["d"])
        obj.forms = [BinaryQuadraticForm(*map(int, t)) for t in data["forms"]]
        obj.index = {f: i for i, f in enumerate(obj.forms)}
        obj.identity = principal_form(obj.d).reduce()
        h = len(obj.forms)
        obj.table = [[0] * h for _ in range(h)]
        for i, j, k in data["table"]:
            obj.table[int(i)][int(j)] = int(k)
        obj._validate()
        return obj


def class_group(d: int) -> ClassGroup:
    """ClassGroup(d) with an optional on-disk memo (GREENCM_CACHE)."""
    from . import cache
    key = f"classgroup_{d}"
    data = cache.get_json(key)
    if data is not None:
        try:
            return ClassGroup.from_json_dict(data)
        except (QuadFormError, KeyError, ValueError):
            pass
    grp = ClassGroup(d)
    cache.put_json(key, grp.to_json_dict())
    return grp


@dataclass(frozen=True)
class HeegnerPoint:
    """CM point z = (-b + sqrt(d)) / (2a) attached to a form class."""

    form: BinaryQuadraticForm

    @property
    def root_data(self):
        f = self.form
        return (f.a, f.b, f.disc)

    def to_mpc(self, prec: int = 53) -> mpc:
        a, b, d = self.root_data
        with mp.workprec(prec + 8):
            z = mpc(-b, mp.sqrt(-d)) / (2 * a)
        with mp.workprec(prec):
            return +z

    def __repr__(self):
        a, b, d = self.root_data
        return f"HeegnerPoint((-({b})+sqrt({d}))/(2*{a}))"


class OrbitError(ValueError):
    pass


def galois_orbit_pairs(d1: int, d2: int):
    """All pairs of form classes indexing the Gal(H/E)-orbit of (z1, z2)
    attached to the principal forms, in the coprime-discriminant case.

    Returns a list of (HeegnerPoint, HeegnerPoint) of length h(d1) * h(d2).
    Each Galois element (s1, s2) acts by composing with the inverse class.
    """
    for d in (d1, d2):
        if not is_discriminant(d):
            raise OrbitError(f"{d} is not a negative discriminant")
    if gcd(d1, d2) != 1:
        raise OrbitError(
            f"gcd({d1}, {d2}) != 1: the intersection field H0 may be nontrivial; "
            "non-coprime discriminants are unsupported")
    if not (is_fundamental(d1) or is_fundamental(d2)):
        raise OrbitError("at least one discriminant must be fundamental")
    g1 = class_group(d1)
    g2 = class_group(d2)
    base1, base2 = g1.identity, g2.identity
    pairs = []
    for s1 in g1.forms:
        for s2 in g2.forms:
            f1 = base1.compose(s1.inverse())
            f2 = base2.compose(s2.inverse())
            pairs.append((HeegnerPoint(f1), HeegnerPoint(f2)))
    return pairs
