"""Positive definite even lattices: theta series, unimodularity checks, and
the constructive partition of unity over the graded ring they span.

Gram conventions: a lattice is given by an integer Gram matrix G with
Q(x) = (1/2) x^T G x; even means the diagonal of G is even, so Q is
integer-valued.  Z-unimodular means even with det G = 1.

Theta series are Sum_x q^Q(x), weight rank/2.  Small lattices are counted by
direct short-vector enumeration; from rank 24 on the series is pinned down
inside the finite-dimensional space of level-1 forms of weight rank/2 by the
few coefficients that cheap enumeration provides (dim M_12 = 2, so the Leech
theta needs vector counts only up to Q = 1).

The built-in Leech Gram matrix is constructed from the extended binary Golay
code (even words scaled by 2 plus the (-3, 1, ..., 1) glue vector, in the
scaled-by-sqrt(8) integer model) and verified: even, determinant 1, minimal
norm Q = 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq, mpz
from mpmath import mp, mpf

from .nums import (integer_det_bareiss, lll_reduce_gram, poly_mul,
                   poly_scale, poly_trim, poly_xgcd)
from .qseries import (QExpansion, as_j_polynomial, dim_modular_forms,
                      modular_space_basis, standard_form)
from .special import incomplete_gamma


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class IntegralLattice:
    gram: tuple
    label: str = ""

    def __post_init__(self):
        g = self.gram
        n = len(g)
        if any(len(row) != n for row in g):
            raise LatticeError("Gram matrix must be square")
        for i in range(n):
            for j in range(n):
                if g[i][j] != g[j][i]:
                    raise LatticeError("Gram matrix must be symmetric")

    @property
    def rank(self) -> int:
        return len(self.gram)

    def is_even(self) -> bool:
        return all(self.gram[i][i] % 2 == 0 for i in range(self.rank))

    def det(self) -> int:
        if self.rank == 0:
            return 1
        return integer_det_bareiss([list(r) for r in self.gram])

    def is_positive_definite(self) -> bool:
        a = [list(map(mpz, row)) for row in self.gram]
        n = self.rank
        for k in range(1, n + 1):
            minor = [row[:k] for row in a[:k]]
            if integer_det_bareiss(minor) <= 0:
                return False
        return True

    def direct_sum(self, other: "IntegralLattice") -> "IntegralLattice":
        n, m = self.rank, other.rank
        g = [[0] * (n + m) for _ in range(n + m)]
        for i in range(n):
            for j in range(n):
                g[i][j] = self.gram[i][j]
        for i in range(m):
            for j in range(m):
                g[n + i][n + j] = other.gram[i][j]
        lab = f"{self.label}+{other.label}" if self.label and other.label else ""
        return IntegralLattice(tuple(tuple(r) for r in g), lab)


def is_Z_unimodular(L: IntegralLattice):
    """(flag, diagnostic): even and unimodular for the trace form."""
    if L.rank == 0:
        return True, "trivial lattice (Z-unimodular by convention)"
    if not L.is_even():
        i = next(i for i in range(L.rank) if L.gram[i][i] % 2)
        return False, f"odd lattice: Gram diagonal entry {L.gram[i][i]} at index {i}"
    d = L.det()
    if d != 1:
        return False, f"Gram determinant {d} != 1"
    return True, "even with Gram determinant 1"


# ---------------------------------------------------------------------------
# built-in Gram matrices

_E8_GRAM = (
    (2, -1, 0, 0, 0, 0, 0, 0),
    (-1, 2, -1, 0, 0, 0, 0, 0),
    (0, -1, 2, -1, 0, 0, 0, 0),
    (0, 0, -1, 2, -1, 0, 0, 0),
    (0, 0, 0, -1, 2, -1, 0, -1),
    (0, 0, 0, 0, -1, 2, -1, 0),
    (0, 0, 0, 0, 0, -1, 2, 0),
    (0, 0, 0, 0, -1, 0, 0, 2),
)


def _golay_generator():
    """Generator matrix [I | B] of the extended binary Golay code, from the
    quadratic residues mod 11."""
    qr = {1, 3, 4, 5, 9}
    B = [[0] * 12 for _ in range(12)]
    for j in range(1, 12):
        B[0][j] = 1
        B[j][0] = 1
    for i in range(11):
        for j in range(11):
            if i != j and (i - j) % 11 in qr:
                B[i + 1][j + 1] = 1
            elif i == j:
                B[i + 1][j + 1] = 1
    rows = []
    for i in range(12):
        row = [0] * 24
        row[i] = 1
        for j in range(12):
            row[12 + j] = B[i][j]
        rows.append(row)
    return rows


def _golay_words():
    gen = _golay_generator()
    words = []
    for mask in range(4096):
        w = [0] * 24
        for i in range(12):
            if (mask >> i) & 1:
                w = [(a + b) % 2 for a, b in zip(w, gen[i])]
        words.append(tuple(w))
    return words


def _hnf_rows(rows):
    """Row Hermite normal form over Z (returns a square full-rank basis)."""
    rows = [list(map(int, r)) for r in rows]
    n = len(rows[0])
    basis = []
    col = 0
    while col < n and rows:
        pivs = [r for r in rows if any(r[col:])]
        rows = pivs
        nz = [r for r in rows if r[col] != 0]
        if not nz:
            col += 1
            continue
        while True:
            nz.sort(key=lambda r: abs(r[col]))
            p = nz[0]
            done = True
            for r in nz[1:]:
                q = r[col] // p[col]
                for k in range(n):
                    r[k] -= q * p[k]
                if r[col] != 0:
                    done = False
            nz = [p] + [r for r in nz[1:] if r[col] != 0]
            if done and len(nz) == 1:
                break
        pivot = nz[0]
        if pivot[col] < 0:
            pivot = [-x for x in pivot]
        basis.append(pivot)
        rows = [r for r in rows if r is not nz[0] and any(r[col + 1:] or [0])
                or (r[col] == 0 and any(r[col:]))]
        rows = [r for r in rows if any(r)]
        rows = [r for r in rows if r != pivot]
        # eliminate the column from the remaining rows
        rest = []
        for r in rows:
            if r[col] != 0:
                q = r[col] // pivot[col]
                r = [a - q * b for a, b in zip(r, pivot)]
            if any(r):
                rest.append(r)
        rows = rest
        col += 1
    return basis


def _leech_gram():
    """Integer Gram matrix of the Leech lattice with Q(x) = (1/2) x^T G x:
    build a generator of the scaled lattice in Z^24 (doubled Golay words with
    coordinate-sum divisible by 4, 4 Z^24 with even coordinate sum, and the
    odd glue vector (-3, 1^23)), then G = M M^T / 8."""
    gen_rows = []
    for g in _golay_generator():
        gen_rows.append([2 * x for x in g])
    for j in range(1, 24):
        row = [0] * 24
        row[0], row[j] = 4, -4
        gen_rows.append(row)
    row = [0] * 24
    row[0] = 8
    gen_rows.append(row)
    glue = [1] * 24
    glue[0] = -3
    gen_rows.append(glue)
    basis = _hnf_rows(gen_rows)
    if len(basis) != 24:
        raise LatticeError("Leech construction failed: rank != 24")
    M = np.array(basis, dtype=np.int64)
    G8 = M @ M.T
    if np.any(G8 % 8 != 0):
        raise LatticeError("Leech construction failed: non-integral Gram")
    G = (G8 // 8).tolist()
    return tuple(tuple(int(x) for x in row) for row in G)


_BUILTINS = {}


def builtin_lattice(name: str) -> IntegralLattice:
    key = name.upper()
    if key in _BUILTINS:
        return _BUILTINS[key]
    if key == "E8":
        lat = IntegralLattice(_E8_GRAM, "E8")
    elif key == "LEECH":
        lat = IntegralLattice(_leech_gram(), "Leech")
        ok, diag = is_Z_unimodular(lat)
        if not ok or not lat.is_positive_definite():
            raise LatticeError(f"Leech construction failed validation: {diag}")
    else:
        raise LatticeError(f"unknown built-in lattice {name!r}")
    _BUILTINS[key] = lat
    return lat


# ---------------------------------------------------------------------------
# short-vector enumeration (numpy, exact final filter)


def short_vector_counts(L: IntegralLattice, qmax: int):
    """counts[q] = #{x in L : Q(x) = q} for 0 <= q <= qmax, by depth-first
    Fincke-Pohst with float bounds (eps-padded) and an exact integer check."""
    n = L.rank
    if n == 0:
        return [1] + [0] * qmax
    reduced, _ = lll_reduce_gram(L.gram)
    G = np.array(reduced, dtype=np.int64)
    Gf = G.astype(np.float64)
    R = np.linalg.cholesky(Gf).T  # upper triangular, Q(x) = |R x|^2 / 2
    budget = 2.0 * qmax * (1 + 1e-9) + 1e-9
    counts = np.zeros(qmax + 1, dtype=np.int64)

    # state: suffix coordinate matrix X with columns (x_{i+1}, ..., x_{n-1});
    # levels run from i = n-1 down to 0, expanding x_i ranges vectorized
    chunk = 1 << 20

    def expand(i, X):
        """X: (m, n-1-i) suffix matrix (columns are x_{i+1}..x_{n-1}).
        Retur" (a, b, ...) expansion at level i."""
        m = X.shape[0]
        if X.shape[1]:
            w = R[i, i + 1:] @ X.T  # projected center contribution
            sub = np.zeros(m)
            for k in range(i + 1, n):
                rowk = R[k, k:] @ X[:, k - i - 1:].T
                sub += rowk ** 2
        else:
            w = np.zeros(m)
            sub = np.zeros(m)
        rem = budget - sub
        ok = rem >= 0
        Xo, w, rem = X[ok], w[ok], rem[ok]
        if Xo.shape[0] == 0:
            return None
        rad = np.sqrt(np.maximum(rem, 0.0)) / R[i, i]
        ctr = -w / R[i, i]
        lo = np.ceil(ctr - rad - 1e-9).astype(np.int64)
        hi = np.floor(ctr + rad + 1e-9).astype(np.int64)
        cnt = np.maximum(0, hi - lo + 1)
        keep = cnt > 0
        Xo, lo, cnt = Xo[keep], lo[keep], cnt[keep]
        if Xo.shape[0] == 0:
            return None
        idx = np.repeat(np.arange(len(cnt)), cnt)
        offs = np.arange(cnt.sum()) - np.repeat(
            np.concatenate(([0], np.cumsum(cnt)[:-1])), cnt)
        xi = (lo[idx] + offs).astype(np.int64)
        Xn = np.column_stack([xi, Xo[idx]])
        return Xn

    states = np.zeros((1, 0), dtype=np.int64)
    for i in range(n - 1, 0, -1):
        nxt = []
        for s0 in range(0, states.shape[0], chunk):
            out = expand(i, states[s0:s0 + chunk])
            if out is not None:
                nxt.append(out)
        if not nxt:
            return counts.tolist()
        states = np.concatenate(nxt, axis=0)

    # final level: count exactly without materializing the leaves
    for s0 in range(0, states.shape[0], chunk):
        X = states[s0:s0 + chunk]
        m = X.shape[0]
        # exact suffix quadratic and linear parts
        S2 = np.einsum("ij,jk,ik->i", X, G[1:, 1:], X)
        s1 = X @ G[0, 1:]
        w = R[0, 1:] @ X.T
        sub = np.zeros(m)
        for k in range(1, n):
            rowk = R[k, k:] @ X[:, k - 1:].T
            sub += rowk ** 2
        rem = budget - sub
        ok = rem >= 0
        X, S2, s1, w, rem = X[ok], S2[ok], s1[ok], w[ok], rem[ok]
        rad = np.sqrt(np.maximum(rem, 0.0)) / R[0, 0]
        ctr = -w / R[0, 0]
        lo = np.ceil(ctr - rad - 1e-9).astype(np.int64)
        hi = np.floor(ctr + rad + 1e-9).astype(np.int64)
        cnt = np.maximum(0, hi - lo + 1)
        keep = cnt > 0
        S2, s1, lo, cnt = S2[keep], s1[keep], lo[keep], cnt[keep]
        if len(cnt) == 0:
            continue
        idx = np.repeat(np.arange(len(cnt)), cnt)
        offs = np.arange(cnt.sum()) - np.repeat(
            np.concatenate(([0], np.cumsum(cnt)[:-1])), cnt)
        x0 = lo[idx] + offs
        g00 = int(G[0, 0])
        qq = g00 * x0 * x0 + 2 * x0 * s1[idx] + S2[idx]
        assert np.all(qq % 2 == 0)
        qq //= 2
        sel = (qq >= 0) & (qq <= qmax)
        counts += np.bincount(qq[sel], minlength=qmax + 1)
    # the zero vector was enumerated exactly once and sits in counts[0]
    return counts.tolist()


LEAF_CAP = 5 * 10 ** 7  # enumeration ceiling (ball-volume estimate)


def _enumeration_cost(rank: int, qmax: int) -> float:
    """Ball-volume estimate of the number of lattice vectors with Q <= qmax
    for a determinant-1 lattice."""
    import math as _m
    r2 = 2.0 * max(1, qmax)
    return _m.pi ** (rank / 2) * r2 ** (rank / 2) / _m.gamma(rank / 2 + 1)


def theta_series(L: IntegralLattice, order: int, method: str = "auto") -> QExpansion:
    """Theta series of a positive definite even lattice to the given order
    (coefficients valid for n < order), weight rank/2.

    method "enumerate" counts vectors directly; "determine" pins the series
    down inside M_{rank/2}(SL2(Z)) using only dim M_{rank/2} enumerated
    coefficients (requires Z-unimodularity); "auto" determines whenever the
    lattice has rank >= 24 or the ball-volume estimate of the enumeration
    exceeds LEAF_CAP."""
    if L.rank == 0:
        return QExpansion.one(order, weight=0)
    if not L.is_even():
        raise LatticeError("theta_series requires an even lattice "
                           "(odd diagonal unsupported)")
    if not L.is_positive_definite():
        raise LatticeError("theta_series requires a positive definite lattice")
    if L.rank % 2:
        raise LatticeError("odd rank is unsupported (half-integral weight)")
    w = L.rank // 2
    if method == "auto":
        heavy = L.rank >= 24 or _enumeration_cost(L.rank, order - 1) > LEAF_CAP
        method = "determine" if heavy else "enumerate"
    if method == "determine":
        ok, diag = is_Z_unimodular(L)
        if not ok:
            raise LatticeError(
                f"the level-1 modular determination shortcut requires a "
                f"Z-unimodular lattice: {diag}")
        d = dim_modular_forms(w)
        counts = short_vector_counts(L, d - 1)
        basis = modular_space_basis(w, order)
        # echelon basis g_i = q^i + O(q^dim): coefficients decouple
        out = QExpansion.zero(w, order)
        for i, g in enumerate(basis):
            out = out + g * mpq(int(counts[i]))
        return out.truncate(order)
    if method != "enumerate":
        raise ValueError("method must be 'auto', 'enumerate' or 'determine'")
    if _enumeration_cost(L.rank, order - 1) > 4 * LEAF_CAP:
        raise LatticeError(
            f"enumeration to order {order} in rank {L.rank} is beyond the "
            f"desk-scale ceiling (~{_enumeration_cost(L.rank, order - 1):.2g} "
            "vectors); use the determination shortcut")
    counts = short_vector_counts(L, order - 1)
    return QExpansion(w, 0, [mpq(c) for c in counts], order)


# ---------------------------------------------------------------------------
# partition of unity


class PartitionError(ValueError):
    def __init__(self, msg, gcd_poly=None):
        super().__init__(msg)
        self.gcd_poly = gcd_poly


@dataclass
class PartitionCertificate:
    """Constructive partition of unity sum_i g_i * theta_i^{e_i} = 1.

    Holds the inputs (theta expansions and exponents), the weight-0
    polynomials A_i (as coefficient lists in j, lowest degree first), the
    Bezout cofactors B_i, the assembled weakly holomorphic g_i, and the order
    up to which the identity was verified exactly."""

    labels: list
    weights: list
    exponents: list
    thetas: list
    a_polys: list
    b_polys: list
    cofactors: list
    verified_order: int

    def verify(self, order=None) -> bool:
        order = order or self.verified_order
        acc = None
        for th, e, g in zip(self.thetas, self.exponents, self.cofactors):
            term = g * (th ** e)
            acc = term if acc is None else acc + term.with_weight(acc.weight)
        one = QExpansion.one(order, weight=acc.weight)
        return acc.truncate(order) == one

    def to_json_dict(self):
        return {
            "labels": self.labels,
            "weights": self.weights,
            "exponents": self.exponents,
            "thetas": [t.to_json_dict() for t in self.thetas],
            "A": [[str(c) for c in p] for p in self.a_polys],
            "B": [[str(c) for c in p] for p in self.b_polys],
            "g": [g.to_json_dict() for g in self.cofactors],
            "verified_order": self.verified_order,
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(
            labels=list(d["labels"]),
            weights=list(d["weights"]),
            exponents=list(d["exponents"]),
            thetas=[QExpansion.from_json_dict(t) for t in d["thetas"]],
            a_polys=[[mpq(c) for c in p] for p in d["A"]],
            b_polys=[[mpq(c) for c in p] for p in d["B"]],
            cofactors=[QExpansion.from_json_dict(g) for g in d["g"]],
            verified_order=int(d["verified_order"]),
        )


def _poly_rational_roots(p):
    """Rational roots of a polynomial over Q (for diagnostics)."""
    p = poly_trim(list(p))
    if not p:
        return []
    roots = []
    if p[0] == 0:
        roots.append(mpq(0))
    # clear denominators
    den = 1
    for c in p:
        den = den * c.denominator // __import__("math").gcd(int(den), int(c.denominator))
    ip = [int(c * den) for c in p]
    while ip and ip[0] == 0:
        ip.pop(0)
    if not ip:
        return roots
    a0, an = abs(ip[0]), abs(ip[-1])

    def divisors(n):
        n = abs(n)
        out = [d for d in range(1, min(n, 10 ** 5) + 1) if n % d == 0]
        return out

    for num in divisors(a0):
        for dd in divisors(an):
            for sgn in (1, -1):
                r = mpq(sgn * num, dd)
                val = mpq(0)
                for c in reversed(p):
                    val = val * r + c
                if val == 0 and r not in roots:
                    roots.append(r)
    return roots


def partition_of_unity(thetas, order: int, labels=None) -> PartitionCertificate:
    """Constructive partition of unity for a family (theta_i, e_i).

    A_i := Delta^(-w_i e_i) (theta_i^{e_i})^12 is a polynomial in j; a Bezout
    relation sum B_i A_i = 1 (which exists iff gcd(A_i) = 1) assembles
    g_i := B_i(j) Delta^(-w_i e_i) theta_i^(11 e_i) with
    sum g_i theta_i^{e_i} = 1, verified exactly to the requested order before
    the certificate is returned.

    A common zero of all A_i (gcd != 1) raises PartitionError with the gcd
    and its rational roots; single-lattice calls may legitimately fail this
    way."""
    if order < 2:
        raise ValueError("order must be >= 2")
    items = []
    for th, e in thetas:
        if int(e) < 1:
            raise ValueError("exponents must be >= 1")
        if th.is_zero or th[0] != 1:
            raise PartitionError("each theta must have constant term 1")
        if not th.is_holomorphic_expansion():
            raise PartitionError("each theta must be holomorphic")
        items.append((th, int(e)))
    labels = labels or [f"theta{i}" for i in range(len(items))]

    # working order: need j-polynomials of degree up to max(w_i e_i)
    rmax = max(th.weight * e for th, e in items)
    work = order + 12 * rmax + 8
    delta = standard_form("Delta", work)
    jf = standard_form("J", work)

    a_polys = []
    for th, e in items:
        r_i = th.weight * e
        th_w = th.truncate(work) if th.trunc >= work else _extend_theta(th, work)
        a_form = (th_w ** (12 * e)) * (delta ** (-r_i))
        a_polys.append(as_j_polynomial(a_form.with_weight(0).truncate(order + rmax + 2)))

    g, cof = a_polys[0], [[mpq(1)]]
    for p in a_polys[1:]:
        g, u, v = poly_xgcd(g, p)
        cof = [poly_mul(c, u) for c in cof] + [[x for x in v]]
    if len(g) != 1:
        roots = _poly_rational_roots(g)
        root_str = (", common zero(s) at j = " +
                    ", ".join(str(r) for r in roots)) if roots else ""
        raise PartitionError(
            f"gcd(A_1, ..., A_m) != 1 (degree {len(g) - 1}){root_str}; "
            "the theta divisors share a point, so no partition of unity "
            "exists for this family", gcd_poly=g)
    # normalize so that sum B_i A_i = 1 exactly
    scale = 1 / g[0]
    b_polys = [poly_scale(c, scale) for c in cof]

    cofactors = []
    for (th, e), b in zip(items, b_polys):
        r_i = th.weight * e
        th_w = th.truncate(work) if th.trunc >= work else _extend_theta(th, work)
        acc = QExpansion.zero(0, work)
        for c in reversed(b):
            if acc.is_zero:
                acc = QExpansion(0, 0, [c], work)
            else:
                acc = acc * jf + QExpansion(0, 0, [c], work)
        g_i = acc * (delta ** (-r_i)) * (th_w ** (11 * e))
        cofactors.append(g_i.truncate(order).with_weight(-r_i))

    cert = PartitionCertificate(
        labels=list(labels),
        weights=[th.weight for th, _ in items],
        exponents=[e for _, e in items],
        thetas=[th.truncate(order) for th, _ in items],
        a_polys=a_polys,
        b_polys=b_polys,
        cofactors=cofactors,
        verified_order=order,
    )
    if not cert.verify(order):
        raise PartitionError("internal error: assembled partition failed "
                             "its exactness check")
    return cert


def _extend_theta(th: QExpansion, work: int) -> QExpansion:
    """Extend a unimodular theta series past its truncation via the modular
    determination shortcut (it lies in M_{weight})."""
    d = dim_modular_forms(th.weight)
    if th.trunc < d:
        raise PartitionError(
            f"theta truncation {th.trunc} too short to determine a weight-"
            f"{th.weight} form (need {d} coefficients)")
    basis = modular_space_basis(th.weight, work)
    out = QExpansion.zero(th.weight, work)
    for i, g in enumerate(basis):
        out = out + g * th[i]
    return out


# ---------------------------------------------------------------------------
# non-holomorphic theta coefficient profile


def theta_star_profile(norms, n: int, v1, prec: int = 64):
    """Coefficient profile of the preimage-of-theta object for a negative
    definite first archimedean place:

        -(sum over entries) mult * (4 pi |Q1|)^(1 - n/2) Gamma(n/2 - 1, 4 pi |Q1| v1)
        + [v1^(n/2-1)/(n/2-1)   if n > 2,  log v1   if n = 2]

    where the constant term is the Laurent constant term at s = 0 of
    v1^(s + n/2 - 1)/(s + n/2 - 1).  norms is a list of (|Q1| > 0, mult)."""
    if n < 2 or n % 2:
        raise ValueError("n must be even and >= 2 (odd rank is metaplectic "
                         "territory, unsupported)")
    with mp.workprec(prec + 16):
        v1 = mpf(v1)
        if not v1 > 0:
            raise ValueError("v1 must be positive")
        if n == 2:
            out = mp.log(v1)
        else:
            out = v1 ** (n // 2 - 1) / (n // 2 - 1)
        for qabs, mult in norms:
            qabs = mpf(qabs)
            if not qabs > 0:
                raise ValueError("norm entries must be positive")
            x = 4 * mp.pi * qabs
            out -= mult * x ** (1 - n // 2) * incomplete_gamma(n // 2 - 1, x * v1,
                                                               prec + 16)
    with mp.workprec(prec):
        return +out
