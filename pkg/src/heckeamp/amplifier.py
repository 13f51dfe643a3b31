"""Resonator construction over squarefree supports and its exact
torus-mass to identity-mass ratio.

The resonator attaches to every admitted prime p the self-adjoint local
combination  omega_p = a_p (tau(a) + tau(a)^*)  with a_p = c/p, and sums
the products of the omega_p over squarefree integers n <= M supported on
admitted primes.  Admitted means: p passes the congruence good-prime
rule and p <= c1 * log(M) (natural log).  For the self-convolution
k = omega * omega^* the global torus integral and the identity value
both factor over the squarefree supports, so the ratio is a finite sum
of products of per-prime rationals, evaluated here exactly.

The per-prime ingredients come from :mod:`heckeamp.hecke` as integer
lattice counts; nothing in the ratio path is floating point.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from sympy import isprime, primerange

from heckeamp.lattices import CapacityError, Cotype, DEFAULT_CEILING, PrimeContext
from heckeamp.hecke import (
    adjoint_cotype,
    degree,
    torus_orbital_pair,
    torus_orbital_single,
    truncation_norm,
)

__all__ = [
    "GoodPrimeRule",
    "AmplifierConfig",
    "LocalWeight",
    "RatioReport",
    "EnvelopeReport",
    "good_primes",
    "local_weight",
    "amplifier_ratio",
    "lower_bound_constant",
    "optimal_c",
    "upper_bound_envelope",
]

ALL_PRIMES_RULE_MODULUS = 1


@dataclass(frozen=True)
class GoodPrimeRule:
    """Congruence surrogate for a splitting condition: a prime is good when
    it is coprime to the modulus, lies in one of the allowed residue
    classes, and is not explicitly excluded.

    ``density`` is the Dirichlet density |residues| / phi(modulus) of the
    selected primes; modulus 1 selects every prime (density 1).
    """

    modulus: int = ALL_PRIMES_RULE_MODULUS
    residues: frozenset[int] = frozenset()
    excluded: frozenset[int] = frozenset()

    def __post_init__(self):
        m = self.modulus
        if m < 1:
            raise ValueError("modulus must be >= 1")
        object.__setattr__(self, "excluded", frozenset(int(q) for q in self.excluded))
        if m == 1:
            object.__setattr__(self, "residues", frozenset({0}))
            return
        res = frozenset(int(r) % m for r in self.residues)
        if not res:
            raise ValueError("residue set must be nonempty for modulus > 1")
        for r in res:
            if _gcd(r, m) != 1:
                raise ValueError(f"residue {r} is not coprime to modulus {m}")
        object.__setattr__(self, "residues", res)

    @property
    def density(self) -> Fraction:
        if self.modulus == 1:
            return Fraction(1)
        return Fraction(len(self.residues), _euler_phi(self.modulus))

    def admits(self, p: int) -> bool:
        if p in self.excluded:
            return False
        if self.modulus == 1:
            return True
        return p % self.modulus in self.residues


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _euler_phi(m: int) -> int:
    out, q, mm = 1, 2, m
    while q * q <= mm:
        if mm % q == 0:
            out *= q - 1
            mm //= q
            while mm % q == 0:
                out *= q
                mm //= q
        q += 1
    if mm > 1:
        out *= mm - 1
    return out


def good_primes(rule: GoodPrimeRule, limit: int) -> list[int]:
    """Good primes up to ``limit``, ascending."""
    if limit < 2:
        return []
    return [p for p in primerange(2, limit + 1) if rule.admits(p)]


# ---------------------------------------------------------------------------
# local weights


@dataclass(frozen=True)
class LocalWeight:
    """Per-prime resonator data: the coefficient a_p = c/p, the squared
    norm of omega_p, and the local torus integral of
    omega_p + omega_p^* + omega_p * omega_p^*."""

    p: int
    cotype: Cotype
    a_p: Fraction
    norm_sq: Fraction
    torus_term: Fraction

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "cotype": self.cotype.to_json(),
            "a_p": str(self.a_p),
            "norm_sq": str(self.norm_sq),
            "torus_term": str(self.torus_term),
        }


def local_weight(
    p: int, c, cotype=Cotype((1, 0, 0)), ceiling: int = DEFAULT_CEILING
) -> LocalWeight:
    """Local resonator weight at a good prime.

    The torus term is assembled from single and pairwise torus integrals
    of the cotype and its adjoint; for cotype (1,0,0) it collapses to the
    closed form 12 a_p + (6p + 24) a_p^2 + norm_sq, which the tests pin.
    """
    cot = cotype if isinstance(cotype, Cotype) else Cotype(tuple(cotype))
    a_p = Fraction(c) / p
    ctx = PrimeContext(p, len(cot), max(2 * cot[0], 1), ceiling=ceiling)
    if a_p == 0:
        return LocalWeight(p, cot, Fraction(0), Fraction(0), Fraction(0))
    deg = degree(ctx, cot)
    adj = adjoint_cotype(cot)
    norm_sq = 2 * a_p**2 * deg
    singles = torus_orbital_single(ctx, cot) + torus_orbital_single(ctx, adj)
    pair_mass = (
        torus_orbital_pair(ctx, cot, adj).total
        + torus_orbital_pair(ctx, cot, cot).total
        + torus_orbital_pair(ctx, adj, adj).total
        + torus_orbital_pair(ctx, adj, cot).total
    )
    torus_term = 2 * a_p * singles + a_p**2 * pair_mass
    return LocalWeight(p, cot, a_p, norm_sq, torus_term)


# ---------------------------------------------------------------------------
# global ratio


@dataclass(frozen=True)
class AmplifierConfig:
    """Resonator parameters.

    Primes are admitted when good and at most c1 * ln(M); the threshold
    comparison is decided at 60 decimal digits, which is exact for
    rational c1 (the threshold is transcendental, so ties cannot occur).
    """

    c: Fraction = Fraction(1)
    c1: Fraction = Fraction(4)
    M: int = 100
    rule: GoodPrimeRule = field(default_factory=GoodPrimeRule)
    cotype: Cotype = Cotype((1, 0, 0))
    ceiling: int = DEFAULT_CEILING
    max_terms: int = 5 * 10**6

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))
        object.__setattr__(self, "c1", Fraction(self.c1))
        if self.c < 0 or self.c1 <= 0 or self.M < 1:
            raise ValueError("need c >= 0, c1 > 0, M >= 1")

    def admits_prime(self, p: int) -> bool:
        if not self.rule.admits(p):
            return False
        with mpmath.workdps(60):
            threshold = mpmath.log(self.M) * self.c1.numerator / self.c1.denominator
            return mpmath.mpf(p) <= threshold

    def admitted_primes(self) -> list[int]:
        if self.M == 1:
            return []
        bound = int(mpmath.floor(mpmath.log(self.M) * float(self.c1))) + 2
        return [p for p in good_primes(self.rule, min(bound, self.M)) if self.admits_prime(p)]

    def to_json(self) -> dict:
        return {
            "c": str(self.c),
            "c1": str(self.c1),
            "M": self.M,
            "modulus": self.rule.modulus,
            "residues": sorted(self.rule.residues),
            "excluded": sorted(self.rule.excluded),
            "cotype": self.cotype.to_json(),
        }


@dataclass(frozen=True)
class RatioReport:
    """Exact numerator, denominator and ratio of the global torus mass to
    the identity mass of the resonator self-convolution."""

    config: AmplifierConfig
    numerator: Fraction
    denominator: Fraction
    ratio: Fraction
    term_count: int
    primes_used: tuple[int, ...]

    def __post_init__(self):
        if not (self.numerator >= self.denominator > 0):
            raise ValueError("expected numerator >= denominator > 0")

    @property
    def ratio_float(self) -> float:
        return float(self.ratio)

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "numerator": str(self.numerator),
            "denominator": str(self.denominator),
            "ratio": str(self.ratio),
            "ratio_float": self.ratio_float,
            "term_count": self.term_count,
            "primes_used": list(self.primes_used),
        }

    def csv_row(self) -> list:
        cfg = self.config
        return [
            str(cfg.c),
            str(cfg.c1),
            cfg.M,
            cfg.rule.modulus,
            str(self.numerator),
            str(self.denominator),
            str(self.ratio),
            self.ratio_float,
            self.term_count,
        ]


CSV_HEADER_RATIO = [
    "c",
    "c1",
    "M",
    "modulus",
    "numerator",
    "denominator",
    "ratio",
    "ratio_float",
    "term_count",
]


def amplifier_ratio(config: AmplifierConfig) -> RatioReport:
    """Exact ratio report for the given resonator parameters.

    Both sums run over squarefree n <= M supported on admitted primes
    (including n = 1); each summand is the product of per-prime local
    terms, enumerated by a depth-first scan over the sorted primes with
    product-bound pruning.
    """
    primes = config.admitted_primes()
    weights = [local_weight(p, config.c, config.cotype, config.ceiling) for p in primes]
    num = Fraction(0)
    den = Fraction(0)
    count = 0
    M = config.M

    stack = [(0, 1, Fraction(1), Fraction(1))]
    while stack:
        i, prod, tnum, tden = stack.pop()
        num += tnum
        den += tden
        count += 1
        if count > config.max_terms:
            raise CapacityError(
                f"squarefree support enumeration exceeded {config.max_terms} terms"
            )
        for j in range(i, len(primes)):
            nxt = prod * primes[j]
            if nxt > M:
                break  # primes sorted, no deeper product fits
            stack.append(
                (j + 1, nxt, tnum * weights[j].torus_term, tden * weights[j].norm_sq)
            )
    return RatioReport(config, num, den, num / den, count, tuple(primes))


# ---------------------------------------------------------------------------
# bound constants


def lower_bound_constant(c, density) -> Fraction:
    """Per-log-log exponent of the resonator lower bound:
    density * (12c + 6c^2) / (1 + 2c^2)."""
    c = Fraction(c)
    d = Fraction(density)
    if c < 0 or not 0 < d <= 1:
        raise ValueError("need c >= 0 and density in (0, 1]")
    return d * (12 * c + 6 * c**2) / (1 + 2 * c**2)


def optimal_c() -> tuple[Fraction, Fraction]:
    """Exact maximizer of (12c + 6c^2)/(1 + 2c^2) over c > 0.

    The derivative has numerator 12(1 - c)(1 + 2c), so the unique
    positive critical point is c = 1 with value 6.
    """
    return Fraction(1), Fraction(6)


@dataclass(frozen=True)
class EnvelopeReport:
    """Divisor-sum envelope at the extremal squarefree support (the largest
    primorial below the cutoff), in both expanded and product form."""

    M: int
    weight: Fraction
    primorial: int
    primes: tuple[int, ...]
    divisor_sum: Fraction
    product_form: Fraction

    def to_json(self) -> dict:
        return {
            "M": self.M,
            "weight": str(self.weight),
            "primorial": self.primorial,
            "primes": list(self.primes),
            "divisor_sum": str(self.divisor_sum),
            "product_form": str(self.product_form),
            "value_float": float(self.divisor_sum),
        }


def upper_bound_envelope(M: int, weight) -> EnvelopeReport:
    """sum over d | n of weight^(number of prime factors of d) / d, for n
    the largest primorial <= M, together with the equal product form
    prod (1 + weight/p) over the primorial primes."""
    if M < 1:
        raise ValueError("M must be >= 1")
    w = Fraction(weight)
    primes = []
    prod = 1
    for p in primerange(2, M + 1):
        if prod * p > M:
            break
        prod *= p
        primes.append(p)
    product_form = Fraction(1)
    for p in primes:
        product_form *= 1 + w / p
    divisor_sum = Fraction(0)
    for k in range(len(primes) + 1):
        for subset in itertools.combinations(primes, k):
            d = 1
            for p in subset:
                d *= p
            divisor_sum += w**k / d
    if divisor_sum != product_form:
        raise RuntimeError("divisor expansion disagrees with product form")
    return EnvelopeReport(M, w, prod, tuple(primes), divisor_sum, product_form)
