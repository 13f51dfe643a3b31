"""Degrees, torus orbital integrals and structure constants for the
elementary double-coset operators on PGL_n(Q_p).

With both the maximal compact and its torus part given volume 1, every
integral in sight is an integer count of lattices.  The degree of the
operator indexed by a reduced cotype ``a`` counts subgroups of cotype
``a``; the torus integral of a convolution counts pairs (L1, L) with L1
an adapted lattice, L contained in L0 and L1, and the two quotients
having invariant factors ``a`` and ``b`` exactly.  The pair counts are
driven by precomputed valuation profiles of the enumerated HNF matrices,
so a single enumeration per (p, cotype) serves every adapted lattice.

All functions are pure; sweeps over (p, a, b) grids can run in parallel
processes and merge deterministically by key order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt

from heckeamp.lattices import (
    INF,
    AdaptedLattice,
    CapacityError,
    Cotype,
    DEFAULT_CEILING,
    PrimeContext,
    SubgroupHNF,
    _type_matrices,
    _val,
    enumerate_adapted_overlattices,
    invariant_factor_exponents,
    normalize_cotype,
    subgroup_count,
)

__all__ = [
    "HeckeCombination",
    "OrbitalResult",
    "KeyBoundStatistic",
    "degree",
    "adjoint_cotype",
    "torus_orbital_single",
    "torus_orbital_pair",
    "hall_coefficients",
    "convolution_at_identity",
    "restricted_cotype_count",
    "key_bound_statistic",
    "key_bound_sweep",
    "truncation_norm",
]


def _require_reduced(c: Cotype, name: str) -> Cotype:
    if not isinstance(c, Cotype):
        c = Cotype(tuple(c))
    if not c.reduced:
        raise ValueError(f"{name} must be a reduced cotype (last entry 0), got {c}")
    return c


# ---------------------------------------------------------------------------
# formal combinations


@dataclass(frozen=True)
class HeckeCombination:
    """Finite formal sum of reduced cotypes with exact rational coefficients:
    an element of the local Hecke algebra in the double-coset basis."""

    ctx: PrimeContext
    terms: tuple[tuple[Cotype, Fraction], ...]

    def __post_init__(self):
        clean: dict[Cotype, Fraction] = {}
        for cot, coeff in self.terms:
            cot = _require_reduced(cot, "cotype key").normalize()
            coeff = Fraction(coeff)
            clean[cot] = clean.get(cot, Fraction(0)) + coeff
        ordered = tuple(sorted((c, q) for c, q in clean.items() if q))
        object.__setattr__(self, "terms", ordered)

    @classmethod
    def tau(cls, ctx: PrimeContext, cotype) -> "HeckeCombination":
        return cls(ctx, ((Cotype(tuple(cotype)), Fraction(1)),))

    @classmethod
    def zero(cls, ctx: PrimeContext) -> "HeckeCombination":
        return cls(ctx, ())

    def coefficient(self, cotype) -> Fraction:
        key = Cotype(tuple(cotype))
        for c, q in self.terms:
            if c == key:
                return q
        return Fraction(0)

    def __add__(self, other: "HeckeCombination") -> "HeckeCombination":
        if self.ctx != other.ctx:
            raise ValueError("mismatched contexts")
        return HeckeCombination(self.ctx, self.terms + other.terms)

    def scale(self, scalar) -> "HeckeCombination":
        s = Fraction(scalar)
        return HeckeCombination(self.ctx, tuple((c, s * q) for c, q in self.terms))

    __rmul__ = scale

    def adjoint(self) -> "HeckeCombination":
        return HeckeCombination(
            self.ctx, tuple((adjoint_cotype(c), q) for c, q in self.terms)
        )

    def to_json(self) -> dict:
        return {
            "p": self.ctx.p,
            "n": self.ctx.n,
            "terms": [
                {"cotype": c.to_json(), "coefficient": str(q)} for c, q in self.terms
            ],
        }


@dataclass(frozen=True)
class OrbitalResult:
    """Split of a torus pair integral into the adapted-lattice-at-origin
    part and the rest."""

    total: int
    diagonal: int
    off_diagonal: int

    def __post_init__(self):
        if self.total != self.diagonal + self.off_diagonal:
            raise ValueError("total must equal diagonal + off_diagonal")
        if min(self.total, self.diagonal, self.off_diagonal) < 0:
            raise ValueError("counts must be nonnegative")

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "diagonal": self.diagonal,
            "off_diagonal": self.off_diagonal,
        }


# ---------------------------------------------------------------------------
# valuation profiles: everything needed to measure one subgroup inside
# every adapted lattice, without touching the matrix again


@lru_cache(maxsize=128)
def _profiles(p: int, n: int, lam: tuple[int, ...], ceiling: int):
    """Per-subgroup valuation data for all subgroups of cotype ``lam``.

    n = 2: (rowmin_0, rowmin_1)
    n = 3: (rowmin_0, rowmin_1, rowmin_2, pairmin_01, pairmin_02, pairmin_12)

    rowmin_i is the minimal entry valuation in row i, pairmin_ij the
    minimal valuation of a 2x2 minor taken from rows i and j.  Scaling
    row i by p^(-t_i) shifts rowmin_i by -t_i and pairmin_ij by
    -(t_i + t_j), which is all an adapted-lattice measurement needs.
    """
    mats = _type_matrices(p, n, lam, ceiling)
    out = []
    if n == 2:
        for m in mats:
            d0, x, d1 = _val(m[0][0], p), m[0][1], _val(m[1][1], p)
            out.append((min(d0, _val(x, p)), d1))
    elif n == 3:
        for m in mats:
            d0, d1, d2 = _val(m[0][0], p), _val(m[1][1], p), _val(m[2][2], p)
            x01, x02, x12 = m[0][1], m[0][2], m[1][2]
            v01, v02, v12 = _val(x01, p), _val(x02, p), _val(x12, p)
            rm0 = min(d0, v01, v02)
            rm1 = min(d1, v12)
            cross = x01 * x12 - x02 * m[1][1]
            pm01 = min(d0 + d1, d0 + v12, _val(cross, p))
            pm02 = min(d0 + d2, v01 + d2)
            pm12 = d1 + d2
            out.append((rm0, rm1, d2, pm01, pm02, pm12))
    else:
        raise ValueError("profiles are only built for n in {2, 3}")
    return tuple(out)


def _pair_count_for_t(p, n, a, b, t, ceiling) -> int:
    """Number of cotype-``a`` subgroups L with invariant factors of L1/L
    exactly ``b``, for the adapted lattice L1 with exponents ``t``."""
    if n == 2:
        profs = _profiles(p, n, a, ceiling)
        t0, t1 = t
        want = b[1]
        return sum(1 for rm0, rm1 in profs if min(rm0 - t0, rm1 - t1) == want)
    if n == 3:
        profs = _profiles(p, n, a, ceiling)
        t0, t1, t2 = t
        w1 = b[2]
        w2 = b[2] + b[1]
        s01, s02, s12 = t0 + t1, t0 + t2, t1 + t2
        count = 0
        for rm0, rm1, rm2, pm01, pm02, pm12 in profs:
            if (
                min(rm0 - t0, rm1 - t1, rm2 - t2) == w1
                and min(pm01 - s01, pm02 - s02, pm12 - s12) == w2
            ):
                count += 1
        return count
    # generic rank: measure every subgroup directly
    ctx = PrimeContext(p, n, max(a[0], 1), ceiling=ceiling)
    L1 = AdaptedLattice(ctx, t)
    count = 0
    for mat in _type_matrices(p, n, a, ceiling):
        rel = _relative_exponents(mat, p, n, t)
        if rel == b:
            count += 1
    return count


def _relative_exponents(mat, p, n, t):
    for i in range(n):
        for j in range(i, n):
            if mat[i][j] and _val(mat[i][j], p) < t[i]:
                return None
    rows = []
    for i in range(n):
        if t[i] >= 0:
            q = p ** t[i]
            rows.append([mat[i][j] // q for j in range(n)])
        else:
            q = p ** (-t[i])
            rows.append([mat[i][j] * q for j in range(n)])
    return invariant_factor_exponents(rows, p, n)


# ---------------------------------------------------------------------------
# public operations


def degree(ctx: PrimeContext, a: Cotype, ceiling: int | None = None) -> int:
    """Number of left cosets in the double coset indexed by ``a``; equals
    the squared L2 norm of its indicator."""
    a = _require_reduced(a, "a")
    if len(a) != ctx.n:
        raise ValueError("cotype length must equal the rank")
    cap = ctx.ceiling if ceiling is None else ceiling
    return len(_type_matrices(ctx.p, ctx.n, a.exponents, cap))


def adjoint_cotype(a: Cotype) -> Cotype:
    """Index of the adjoint operator: negate and renormalize.  Involutive
    and degree-preserving."""
    a = a if isinstance(a, Cotype) else Cotype(tuple(a))
    return normalize_cotype(tuple(-e for e in a))


def torus_orbital_single(ctx: PrimeContext, a: Cotype) -> int:
    """Torus integral of a single elementary operator: the number of
    adapted lattices inside Z_p^n with invariant factors ``a``, i.e. the
    number of distinct rearrangements of ``a``."""
    a = _require_reduced(a, "a")
    if len(a) != ctx.n:
        raise ValueError("cotype length must equal the rank")
    count = factorial(ctx.n)
    for e in set(a.exponents):
        count //= factorial(a.exponents.count(e))
    return count


def torus_orbital_pair(
    ctx: PrimeContext, a: Cotype, b: Cotype, ceiling: int | None = None
) -> OrbitalResult:
    """Torus integral of tau(a) * tau(-b) as an exact pair count.

    ``total`` counts pairs (L1 adapted, L in L0 and L1) whose quotients
    have invariant factors ``a`` and ``b``; ``diagonal`` is the L1 = L0
    contribution, which is degree(a) when a == b and 0 otherwise.
    """
    a = _require_reduced(a, "a")
    b = _require_reduced(b, "b")
    if len(a) != ctx.n or len(b) != ctx.n:
        raise ValueError("cotype lengths must equal the rank")
    cap = ctx.ceiling if ceiling is None else ceiling
    p, n = ctx.p, ctx.n
    work = PrimeContext(p, n, max(a[0] + b[0], 1), ceiling=cap)
    total = diagonal = 0
    for L1 in enumerate_adapted_overlattices(work, a, b):
        cnt = _pair_count_for_t(p, n, a.exponents, b.exponents, L1.t, cap)
        total += cnt
        if not any(L1.t):
            diagonal = cnt
    return OrbitalResult(total, diagonal, total - diagonal)


def convolution_at_identity(ctx: PrimeContext, a: Cotype, b: Cotype) -> int:
    """Value of tau(a) * tau(-b) at the identity coset: degree(a) when the
    cotypes agree and 0 otherwise.  Recomputed through the adapted-lattice
    branch at the origin as a consistency check."""
    a = _require_reduced(a, "a")
    b = _require_reduced(b, "b")
    expected = degree(ctx, a) if a.normalize() == b.normalize() else 0
    recount = _pair_count_for_t(
        ctx.p, ctx.n, a.exponents, b.exponents, (0,) * ctx.n, ctx.ceiling
    )
    if recount != expected:
        raise RuntimeError(
            f"identity-coset consistency failed: {recount} != {expected}"
        )
    return expected


def hall_coefficients(
    ctx: PrimeContext, a: Cotype, b: Cotype, ceiling: int | None = None
) -> HeckeCombination:
    """Expansion of tau(a) * tau(b) in the double-coset basis.

    The coefficient of c counts chains L'' <= L' <= L0 with quotient
    invariant factors a and b, for one fixed L'' of invariant factors c;
    brute-force structure constants, kept as an independent oracle for
    the integral identities.
    """
    a = _require_reduced(a, "a")
    b = _require_reduced(b, "b")
    if len(a) != ctx.n or len(b) != ctx.n:
        raise ValueError("cotype lengths must equal the rank")
    cap = ctx.ceiling if ceiling is None else ceiling
    p, n = ctx.p, ctx.n
    size = a.size + b.size
    bound = a[0] + b[0]
    terms = []
    for c in _partitions(size, n, bound):
        count = 0
        diag = [p ** c[i] for i in range(n)]
        for mat in _type_matrices(p, n, a.exponents, cap):
            rel = _measure_diagonal_in(mat, diag, p, n)
            if rel == b.exponents:
                count += 1
        if count:
            terms.append((normalize_cotype(c), Fraction(count)))
    return HeckeCombination(PrimeContext(p, n, max(bound, 1), ceiling=cap), tuple(terms))


def _partitions(total: int, n: int, bound: int):
    """Decreasing tuples of length n with entries in [0, bound] and the
    given sum, lex-descending."""
    out = []

    def rec(prefix, remaining, cap_):
        k = len(prefix)
        if k == n:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        lo = -(-remaining // (n - k))  # ceil: keep entries decreasing
        for e in range(min(cap_, remaining), max(lo, 0) - 1, -1):
            rec(prefix + [e], remaining - e, e)

    rec([], total, bound)
    return out


def _measure_diagonal_in(mat, diag, p, n):
    """Invariant factors of L' / L'' for L' given by the HNF ``mat`` and
    L'' the diagonal lattice, or None when L'' is not inside L'."""
    # solve mat * Y = diag(d) by back substitution; integrality <=> containment
    cols = []
    for j in range(n):
        y = [0] * n
        rhs = [diag[j] if i == j else 0 for i in range(n)]
        for i in range(n - 1, -1, -1):
            num = rhs[i] - sum(mat[i][k] * y[k] for k in range(i + 1, n))
            piv = mat[i][i]
            if num % piv:
                return None
            y[i] = num // piv
        cols.append(y)
    rows = [[cols[j][i] for j in range(n)] for i in range(n)]
    return invariant_factor_exponents(rows, p, n)


def restricted_cotype_count(
    ctx: PrimeContext, a: Cotype, m: int, mode: str, ceiling: int | None = None
) -> int:
    """Exact count of cotype-``a`` subgroups of (Z/p^(a_1))^n that are
    contained in (pZ)^m + Z^(n-m) (``contained``) or that contain
    (p^(a_1 - 1) Z)^m + 0 (``contains``)."""
    a = _require_reduced(a, "a")
    if not 1 <= m <= ctx.n:
        raise ValueError("need 1 <= m <= n")
    if mode not in ("contained", "contains"):
        raise ValueError("mode must be 'contained' or 'contains'")
    cap = ctx.ceiling if ceiling is None else ceiling
    p, n = ctx.p, ctx.n
    if a[0] == 0:
        return 1  # trivial ambient, both restrictions are vacuous
    work = PrimeContext(p, n, a[0], ceiling=cap)
    count = 0
    if mode == "contained":
        for mat in _type_matrices(p, n, a.exponents, cap):
            if all(mat[i][j] % p == 0 for i in range(m) for j in range(i, n)):
                count += 1
    else:
        scale = p ** (a[0] - 1)
        probes = []
        for i in range(m):
            e = [0] * n
            e[i] = scale
            probes.append(e)
        for mat in _type_matrices(p, n, a.exponents, cap):
            L = SubgroupHNF(work, mat)
            if all(L.contains_vector(v) for v in probes):
                count += 1
    return count


@dataclass(frozen=True)
class KeyBoundStatistic:
    """Scaled off-diagonal mass of a pair integral:
    p * off_diagonal / sqrt(degree(a) degree(b)), carried exactly as its
    square to stay rational."""

    p: int
    a: Cotype
    b: Cotype
    off_diagonal: int
    degree_a: int
    degree_b: int
    square: Fraction

    @property
    def value(self) -> float:
        return sqrt(float(self.square))

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "a": self.a.to_json(),
            "b": self.b.to_json(),
            "off_diagonal": self.off_diagonal,
            "degree_a": self.degree_a,
            "degree_b": self.degree_b,
            "statistic_sq": str(self.square),
            "statistic": self.value,
        }


def key_bound_statistic(
    ctx: PrimeContext, a: Cotype, b: Cotype, ceiling: int | None = None
) -> KeyBoundStatistic:
    a = _require_reduced(a, "a")
    b = _require_reduced(b, "b")
    if ctx.n < 3:
        raise ValueError("the key-bound statistic is defined for rank >= 3")
    off = torus_orbital_pair(ctx, a, b, ceiling=ceiling).off_diagonal
    da = degree(ctx, a, ceiling=ceiling)
    db = degree(ctx, b, ceiling=ceiling)
    square = Fraction(ctx.p**2 * off**2, da * db)
    return KeyBoundStatistic(ctx.p, a, b, off, da, db, square)


def key_bound_sweep(
    primes, n: int = 3, max_entry: int = 2, ceiling: int = DEFAULT_CEILING
):
    """All key-bound statistics for reduced cotype pairs with entries up to
    ``max_entry``, over the given primes; rows sorted by (p, a, b)."""
    cotypes = sorted(
        {
            normalize_cotype(t)
            for t in itertools.product(range(max_entry + 1), repeat=n)
            if min(t) == 0
        }
    )
    rows = []
    for p in sorted(primes):
        ctx = PrimeContext(p, n, 2 * max_entry + 1, ceiling=ceiling)
        for a in cotypes:
            for b in cotypes:
                rows.append(key_bound_statistic(ctx, a, b, ceiling=ceiling))
    return rows


def truncation_norm(a) -> Fraction:
    """Norm of a cotype as a cocharacter: the largest pairing of a Weyl
    translate with the half-sum of positive roots.  Translation-invariant,
    so raw and reduced cotypes agree."""
    exps = tuple(a) if not isinstance(a, Cotype) else a.exponents
    n = len(exps)
    rho = [Fraction(n - 1 - 2 * i, 2) for i in range(n)]
    ordered = sorted(exps, reverse=True)
    return sum(Fraction(e) * r for e, r in zip(ordered, rho))
