"""Exact arithmetic for finite-index subgroups of (Z/p^N)^n.

A subgroup L of the homocyclic group (Z/p^N)^n is the same thing as a
lattice between p^N Z^n and Z^n, and every such lattice has a unique
basis in column Hermite normal form: an upper-triangular integer matrix
whose diagonal entries are p-powers p^(d_i) and whose entry in row i of
a later column is reduced modulo p^(d_i).  Canonical HNF matrices are
what we store, so equality of subgroups is equality of matrices.

The isomorphism class of the quotient (Z/p^N)^n / L is recorded by the
decreasing tuple of invariant-factor exponents, called the cotype here.
Cotypes with last entry 0 index double cosets of GL_n(Z_p) and drive
everything in :mod:`heckeamp.hecke`; raw (unshifted) cotypes show up
when classifying all subgroups or measuring one lattice inside another.

Everything in this module is an exact integer computation.  All values
are immutable and all operations are pure functions; independent calls
are safe to run in parallel.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from sympy import isprime

__all__ = [
    "CapacityError",
    "Cotype",
    "PrimeContext",
    "SubgroupHNF",
    "AdaptedLattice",
    "normalize_cotype",
    "enumerate_subgroups",
    "subgroup_count",
    "cotype_of",
    "dual_subgroup",
    "enumerate_adapted_overlattices",
    "relative_cotype",
]

#: valuation assigned to 0, larger than any real valuation we can meet
INF = 1 << 30

DEFAULT_CEILING = 10**7

# candidate matrices scanned per enumeration call before we give up;
# the scan space can exceed the subgroup count by a polynomial factor
SCAN_CEILING = 2 * 10**8


class CapacityError(RuntimeError):
    """An enumeration would exceed the configured subgroup ceiling."""


def _val(x: int, p: int) -> int:
    """p-adic valuation of an integer, with val(0) = INF."""
    if x == 0:
        return INF
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


# ---------------------------------------------------------------------------
# cotypes


@dataclass(frozen=True, order=True)
class Cotype:
    """Decreasing tuple of invariant-factor exponents of a finite quotient.

    ``reduced`` cotypes (last entry 0) are the translation-class
    representatives used as Hecke-operator indices.  Raw cotypes (last
    entry possibly positive) are what classification and relative
    measurements produce; ``normalize()`` shifts them back.
    """

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        object.__setattr__(self, "exponents", exps)
        if not exps:
            raise ValueError("cotype must be nonempty")
        if any(e < 0 for e in exps):
            raise ValueError(f"cotype entries must be nonnegative: {exps}")
        if any(exps[i] < exps[i + 1] for i in range(len(exps) - 1)):
            raise ValueError(f"cotype entries must be decreasing: {exps}")

    @property
    def n(self) -> int:
        return len(self.exponents)

    @property
    def reduced(self) -> bool:
        """True when the last entry is 0 (double-coset representative)."""
        return self.exponents[-1] == 0

    @property
    def size(self) -> int:
        """Sum of the exponents; the index of any subgroup of this cotype
        is p**size."""
        return sum(self.exponents)

    def normalize(self) -> "Cotype":
        shift = self.exponents[-1]
        if shift == 0:
            return self
        return Cotype(tuple(e - shift for e in self.exponents))

    def __iter__(self):
        return iter(self.exponents)

    def __getitem__(self, i):
        return self.exponents[i]

    def __len__(self):
        return len(self.exponents)

    def to_json(self) -> list[int]:
        return list(self.exponents)

    def __str__(self):
        return "(" + ",".join(str(e) for e in self.exponents) + ")"


def normalize_cotype(raw) -> Cotype:
    """Sort a tuple of integers decreasingly and shift so the last entry is 0.

    Accepts negative entries; only the translation class matters.
    """
    entries = tuple(int(e) for e in raw)
    if not entries:
        raise ValueError("cotype must be nonempty")
    ordered = tuple(sorted(entries, reverse=True))
    shift = ordered[-1]
    return Cotype(tuple(e - shift for e in ordered))


# ---------------------------------------------------------------------------
# contexts and subgroup values


@dataclass(frozen=True)
class PrimeContext:
    """Ambient data: the module (Z/p^N)^n.

    N only needs to dominate the cotype entries in play; the HNF
    matrices themselves are independent of N.
    """

    p: int
    n: int
    N: int
    ceiling: int = field(default=DEFAULT_CEILING, compare=False)

    def __post_init__(self):
        if not isprime(self.p):
            raise ValueError(f"p = {self.p} is not prime")
        if self.n < 1:
            raise ValueError("rank n must be >= 1")
        if self.N < 1:
            raise ValueError("working exponent N must be >= 1")

    @property
    def modulus(self) -> int:
        return self.p**self.N


@dataclass(frozen=True)
class SubgroupHNF:
    """A subgroup of (Z/p^N)^n in canonical column Hermite normal form.

    ``matrix`` is the row-major upper-triangular basis matrix of the
    lattice lift; two values are equal iff they are the same subgroup.
    """

    ctx: PrimeContext
    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n, p, N = self.ctx.n, self.ctx.p, self.ctx.N
        m = tuple(tuple(int(x) for x in row) for row in self.matrix)
        object.__setattr__(self, "matrix", m)
        if len(m) != n or any(len(row) != n for row in m):
            raise ValueError("matrix must be n x n")
        for i in range(n):
            piv = m[i][i]
            v = _val(piv, p)
            if piv <= 0 or v > N or piv != p**v:
                raise ValueError(f"pivot {piv} at row {i} is not a p-power <= p^N")
            for j in range(n):
                if j < i and m[i][j] != 0:
                    raise ValueError("matrix must be upper triangular")
                if j > i and not (0 <= m[i][j] < piv):
                    raise ValueError("entries must be reduced modulo the row pivot")

    @classmethod
    def from_generators(cls, ctx: PrimeContext, vectors) -> "SubgroupHNF":
        """Subgroup generated by the given vectors of (Z/p^N)^n."""
        cols = [list(v) for v in vectors]
        mod = ctx.modulus
        for i in range(ctx.n):
            e = [0] * ctx.n
            e[i] = mod
            cols.append(e)
        return cls(ctx, hermite_normal_form(cols, ctx.n))

    @property
    def pivot_exponents(self) -> tuple[int, ...]:
        p = self.ctx.p
        return tuple(_val(self.matrix[i][i], p) for i in range(self.ctx.n))

    @property
    def index(self) -> int:
        """Index of the subgroup inside (Z/p^N)^n."""
        return self.ctx.p ** sum(self.pivot_exponents)

    def contains_vector(self, vector) -> bool:
        """Membership of an integer vector modulo p^N."""
        n, mod = self.ctx.n, self.ctx.modulus
        x = [int(v) % mod for v in vector]
        # back-substitute against the triangular basis, mod p^N
        for i in range(n - 1, -1, -1):
            piv = self.matrix[i][i]
            if x[i] % piv:
                # a p^N e_i generator can absorb the rest only if piv | x_i
                return False
            q = x[i] // piv
            for k in range(i + 1):
                x[k] = (x[k] - q * self.matrix[k][i]) % mod
        return all(v % mod == 0 for v in x)

    def to_json(self) -> dict:
        return {
            "p": self.ctx.p,
            "n": self.ctx.n,
            "N": self.ctx.N,
            "matrix": [list(row) for row in self.matrix],
        }


@dataclass(frozen=True)
class AdaptedLattice:
    """The lattice  sum_i p^(t_i) Z_p e_i,  a diagonal-torus translate of Z_p^n.

    Exponents may be negative; equality is tuple equality.
    """

    ctx: PrimeContext
    t: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(int(x) for x in self.t))
        if len(self.t) != self.ctx.n:
            raise ValueError("t must have length n")

    def to_json(self) -> list[int]:
        return list(self.t)


# ---------------------------------------------------------------------------
# Hermite normal form and Smith invariants for small integer matrices


def hermite_normal_form(columns, n: int) -> tuple[tuple[int, ...], ...]:
    """Canonical upper-triangular column HNF of the lattice spanned by
    ``columns`` (each a length-n integer vector).  The lattice must have
    full rank n."""
    cols = [list(c) for c in columns]
    basis = [None] * n
    for i in range(n - 1, -1, -1):
        # clear row i across the active columns with column operations
        live = [c for c in cols if any(c[k] for k in range(i + 1))]
        pivot = None
        for c in live:
            if c[i] == 0:
                continue
            if pivot is None:
                pivot = c
                continue
            # (pivot, c) -> (gcd combination, 0) in row i
            a, b = pivot[i], c[i]
            g, x, y = _xgcd(a, b)
            u, v = a // g, b // g
            for k in range(i + 1):
                pk, ck = pivot[k], c[k]
                pivot[k] = x * pk + y * ck
                c[k] = u * ck - v * pk
        if pivot is None:
            raise ValueError("columns do not span a full-rank lattice")
        if pivot[i] < 0:
            for k in range(i + 1):
                pivot[k] = -pivot[k]
        basis[i] = pivot
        cols = [c for c in live if c is not pivot]
    # reduce off-diagonal entries modulo the row pivots, bottom-up per column
    for j in range(n):
        col = basis[j]
        for i in range(j - 1, -1, -1):
            q = col[i] // basis[i][i]
            if q:
                for k in range(i + 1):
                    col[k] -= q * basis[i][k]
    rows = tuple(
        tuple(basis[j][i] if j >= i else 0 for j in range(n)) for i in range(n)
    )
    return rows


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _snf_right_transform(A, n: int):
    """Diagonalize the nonsingular integer matrix A as U A V = D and
    return (diag(D), V).  Only the right transform is tracked."""
    M = [list(row) for row in A]
    V = [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def col_op(j1, j2, x, y, u, v):
        # (c1, c2) <- (x c1 + y c2, u c1 + v c2), applied to M and V
        for R in (M, V):
            for row in R:
                a, b = row[j1], row[j2]
                row[j1] = x * a + y * b
                row[j2] = u * a + v * b

    for k in range(n):
        while True:
            # move a nonzero entry of the trailing block to (k, k)
            pos = min(
                (
                    (abs(M[i][j]), i, j)
                    for i in range(k, n)
                    for j in range(k, n)
                    if M[i][j]
                ),
                default=None,
            )
            if pos is None:
                raise ValueError("matrix is singular")
            _, i, j = pos
            if i != k:
                M[k], M[i] = M[i], M[k]
            if j != k:
                for R in (M, V):
                    for row in R:
                        row[k], row[j] = row[j], row[k]
            # clear row k with column ops
            for j in range(k + 1, n):
                if M[k][j]:
                    a, b = M[k][k], M[k][j]
                    g, x, y = _xgcd(a, b)
                    col_op(k, j, x, y, -(b // g), a // g)
            # clear column k with row ops (V untouched)
            for i in range(k + 1, n):
                if M[i][k]:
                    q = M[i][k] // M[k][k]
                    for j in range(k, n):
                        M[i][j] -= q * M[k][j]
            if all(M[k][j] == 0 for j in range(k + 1, n)) and all(
                M[i][k] == 0 for i in range(k + 1, n)
            ):
                break
    return [M[k][k] for k in range(n)], V


def invariant_factor_exponents(matrix, p: int, n: int, cap: int | None = None):
    """Decreasing invariant-factor exponents of  Z^n / (column lattice).

    Computed from valuations of minor gcds, so the matrix need not be in
    any normal form.  Entries above ``cap`` are clamped when given.
    """
    rows = [list(r) for r in matrix]
    prev = 0
    ascending = []
    for k in range(1, n + 1):
        best = INF
        for rsel in itertools.combinations(range(n), k):
            for csel in itertools.combinations(range(n), k):
                m = _minor(rows, rsel, csel)
                v = _val(m, p)
                if v < best:
                    best = v
                    if best == prev:
                        break
            if best == prev:
                break
        ascending.append(best - prev)
        prev = best
    exps = tuple(reversed(ascending))
    if cap is not None:
        exps = tuple(min(e, cap) for e in exps)
    return exps


def _minor(rows, rsel, csel) -> int:
    k = len(rsel)
    if k == 1:
        return rows[rsel[0]][csel[0]]
    if k == 2:
        (i1, i2), (j1, j2) = rsel, csel
        return rows[i1][j1] * rows[i2][j2] - rows[i1][j2] * rows[i2][j1]
    return sum(
        (-1 if s % 2 else 1) * rows[rsel[0]][csel[s]] * _minor(rows, rsel[1:], csel[:s] + csel[s + 1 :])
        for s in range(k)
    )


# ---------------------------------------------------------------------------
# enumeration by cotype


def _phi(k: int, x: Fraction) -> Fraction:
    out = Fraction(1)
    for i in range(1, k + 1):
        out *= 1 - x**i
    return out


@lru_cache(maxsize=None)
def subgroup_count(p: int, n: int, lam: tuple[int, ...]) -> int:
    """Number of subgroups of (Z/p^N)^n of cotype ``lam`` (any N >= lam[0]).

    Classical product formula; serves as the capacity predictor for
    :func:`enumerate_subgroups` and as an independent cross-check of the
    enumerated counts.
    """
    x = Fraction(1, p)
    weight = sum((n + 1 - 2 * (i + 1)) * e for i, e in enumerate(lam))
    mult: dict[int, int] = {}
    for e in lam:
        mult[e] = mult.get(e, 0) + 1
    value = Fraction(p) ** weight * _phi(n, x)
    for m in mult.values():
        value /= _phi(m, x)
    assert value.denominator == 1
    return int(value)


def _compositions(total: int, n: int, bound: int):
    """All (d_1..d_n) with 0 <= d_i <= bound summing to total, lex order."""
    if n == 1:
        if 0 <= total <= bound:
            yield (total,)
        return
    for d in range(max(0, total - (n - 1) * bound), min(bound, total) + 1):
        for rest in _compositions(total - d, n - 1, bound):
            yield (d,) + rest


def _scan_cost(p: int, n: int, lam: tuple[int, ...]) -> int:
    total, bound = sum(lam), lam[0]
    cost = 0
    for d in _compositions(total, n, bound):
        cost += p ** sum(d[i] * (n - 1 - i) for i in range(n))
    return cost


def _type3(p, d1, d2, d3, x12, x13, x23, size):
    """Cotype of the 3x3 HNF [[p^d1,x12,x13],[0,p^d2,x23],[0,0,p^d3]]."""
    v12 = _val(x12, p)
    v13 = _val(x13, p)
    v23 = _val(x23, p)
    v1 = min(d1, d2, d3, v12, v13, v23)
    cross = x12 * x23 - x13 * p**d2
    v2 = min(d1 + d2, d1 + d3, d2 + d3, d1 + v23, v12 + d3, _val(cross, p))
    return size - v2, v2 - v1, v1


def _iter_type_matrices_direct(p: int, n: int, lam: tuple[int, ...]):
    """Scan candidate HNF matrices in lex order on (pivots, digits) and keep
    those whose quotient cotype is exactly ``lam``."""
    size, bound = sum(lam), lam[0]
    if n == 2:
        for d1, d2 in _compositions(size, 2, bound):
            q1, q2 = p**d1, p**d2
            for x in range(q1):
                v1 = min(d1, d2, _val(x, p))
                if (size - v1, v1) == lam:
                    yield ((q1, x), (0, q2))
    elif n == 3:
        for d1, d2, d3 in _compositions(size, 3, bound):
            q1, q2, q3 = p**d1, p**d2, p**d3
            for x12 in range(q1):
                for x13 in range(q1):
                    for x23 in range(q2):
                        if _type3(p, d1, d2, d3, x12, x13, x23, size) == lam:
                            yield ((q1, x12, x13), (0, q2, x23), (0, 0, q3))
    else:
        for d in _compositions(size, n, bound):
            pivots = [p**e for e in d]
            ranges = [range(pivots[i]) for i in range(n) for _ in range(n - 1 - i)]
            for digits in itertools.product(*ranges):
                mat = [[0] * n for _ in range(n)]
                pos = 0
                for i in range(n):
                    mat[i][i] = pivots[i]
                    for j in range(i + 1, n):
                        mat[i][j] = digits[pos]
                        pos += 1
                if invariant_factor_exponents(mat, p, n) == lam:
                    yield tuple(tuple(row) for row in mat)


def _dual_matrix(matrix, p: int, n: int, N: int):
    """HNF matrix of the annihilator of the given subgroup of (Z/p^N)^n
    under the componentwise pairing."""
    mod = p**N
    AT = [[matrix[j][i] for j in range(n)] for i in range(n)]
    diag, V = _snf_right_transform(AT, n)
    cols = []
    for j in range(n):
        g = _gcd(abs(diag[j]), mod)
        scale = mod // g
        cols.append([V[i][j] * scale for i in range(n)])
    for i in range(n):
        e = [0] * n
        e[i] = mod
        cols.append(e)
    return hermite_normal_form(cols, n)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


@lru_cache(maxsize=256)
def _type_matrices(p: int, n: int, lam: tuple[int, ...], ceiling: int):
    """Sorted tuple of all HNF matrices of cotype ``lam``, choosing the
    cheaper of a direct scan and a scan of the dual cotype."""
    predicted = subgroup_count(p, n, lam)
    if predicted > ceiling:
        raise CapacityError(
            f"cotype {lam} at p={p} has {predicted} subgroups; ceiling {ceiling}"
        )
    N0 = max(lam[0], 1)
    dual_lam = tuple(N0 - e for e in reversed(lam))
    direct_cost = _scan_cost(p, n, lam)
    dual_cost = _scan_cost(p, n, dual_lam)
    if min(direct_cost, dual_cost) > SCAN_CEILING:
        raise CapacityError(
            f"cotype {lam} at p={p} needs a scan of {min(direct_cost, dual_cost)}"
            f" candidate matrices; ceiling {SCAN_CEILING}"
        )
    if direct_cost <= dual_cost:
        return tuple(_iter_type_matrices_direct(p, n, lam))
    mats = [
        _dual_matrix(m, p, n, N0) for m in _iter_type_matrices_direct(p, n, dual_lam)
    ]

    def key(mat):
        pivots = tuple(_val(mat[i][i], p) for i in range(n))
        digits = tuple(mat[i][j] for i in range(n) for j in range(i + 1, n))
        return pivots, digits

    mats.sort(key=key)
    return tuple(mats)


def enumerate_subgroups(ctx: PrimeContext, cotype: Cotype, ceiling: int | None = None):
    """Yield every subgroup of (Z/p^N)^n whose quotient has invariant
    factors exactly p^(cotype_i), once each, in canonical HNF, ordered
    lexicographically on (pivot valuations, off-diagonal digits).

    Raises :class:`CapacityError` when the predicted count exceeds the
    ceiling (default from the context).
    """
    lam = tuple(cotype) if isinstance(cotype, Cotype) else tuple(cotype)
    if len(lam) != ctx.n:
        raise ValueError(f"cotype length {len(lam)} != rank {ctx.n}")
    if lam[0] > ctx.N:
        raise ValueError(f"cotype entry {lam[0]} exceeds working exponent N={ctx.N}")
    cap = ctx.ceiling if ceiling is None else ceiling
    for mat in _type_matrices(ctx.p, ctx.n, lam, cap):
        yield SubgroupHNF(ctx, mat)


def cotype_of(L: SubgroupHNF) -> Cotype:
    """Invariant factors of (Z/p^N)^n / L as a raw cotype (valuations
    capped at N).  Round-trips with :func:`enumerate_subgroups`."""
    exps = invariant_factor_exponents(L.matrix, L.ctx.p, L.ctx.n, cap=L.ctx.N)
    return Cotype(exps)


def dual_subgroup(L: SubgroupHNF) -> SubgroupHNF:
    """Annihilator of L under the componentwise pairing on (Z/p^N)^n."""
    ctx = L.ctx
    return SubgroupHNF(ctx, _dual_matrix(L.matrix, ctx.p, ctx.n, ctx.N))


def enumerate_adapted_overlattices(ctx: PrimeContext, a: Cotype, b: Cotype):
    """All adapted lattices compatible with a pair measurement of cotypes
    (a, b): exponent tuples t with -b[0] <= t_i <= a[0] and
    sum(t) = |a| - |b|, in lex order."""
    if not (a.reduced and b.reduced):
        raise ValueError("cotypes must be reduced (last entry 0)")
    lo, hi = -b[0], a[0]
    target = a.size - b.size
    out = []
    for t in itertools.product(range(lo, hi + 1), repeat=ctx.n):
        if sum(t) == target:
            out.append(AdaptedLattice(ctx, t))
    return out


def relative_cotype(L: SubgroupHNF, L1: AdaptedLattice) -> Cotype | None:
    """Invariant factors of L1 / L when L is contained in L1, else None.

    The result is raw (not translation-normalized): measuring L inside
    p*L1 shifts every exponent up by one.
    """
    if L.ctx.p != L1.ctx.p or L.ctx.n != L1.ctx.n:
        raise ValueError("mismatched contexts")
    p, n = L.ctx.p, L.ctx.n
    t = L1.t
    # the basis matrix of L in the basis (p^{t_i} e_i) of L1 is
    # diag(p^{-t_i}) * matrix; containment means it is integral
    for i in range(n):
        for j in range(i, n):
            if L.matrix[i][j] and _val(L.matrix[i][j], p) < t[i]:
                return None
    rows = []
    for i in range(n):
        if t[i] >= 0:
            q = p ** t[i]
            rows.append([L.matrix[i][j] // q for j in range(n)])
        else:
            q = p ** (-t[i])
            rows.append([L.matrix[i][j] * q for j in range(n)])
    return Cotype(invariant_factor_exponents(rows, p, n))
