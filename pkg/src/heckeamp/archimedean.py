"""Numerical spherical functions, oscillatory model integrals and
stationary-phase diagnostics for SL(2,R) and SL(3,R).

Conventions.  The Iwasawa decomposition is g = n * exp(H) * k with n
unit upper triangular, H a traceless real diagonal and k in SO(n).  The
inner product on diagonal matrices is tr(XY), i.e. the Euclidean dot of
the diagonal n-vectors; the Killing form is 2n times this, and only
rescales the pinned brackets.  Haar measure on the diagonal subgroup is
Lebesgue in the log coordinates of an orthonormal basis.

The spherical function of real parameter nu (a traceless n-vector, dual
via the trace form) is the SO(n)-average of exp((rho + i nu)(H(kg))),
computed by trapezoid quadrature on the circle for n = 2 and by
Euler-angle quadrature with Gauss-Legendre in the polar angle for n = 3.
Results carry a convergence flag: two consecutive grid doublings agreed
within the requested tolerance.

The stationary-phase side works with the phase (a, k) -> <H0, H(k a)>:
its critical set sits over the rotations whose conjugate of H0 has zero
diagonal part, located here by Gauss-Newton from random seeds, with
Hessian signatures measured by central differences.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GroupModel",
    "SpectralPoint",
    "BumpFunction",
    "QuadratureSpec",
    "IntegralResult",
    "CriticalSetNotFound",
    "iwasawa_height",
    "spherical_function",
    "model_integral_I",
    "orbital_integral_J",
    "critical_set_solve",
    "hessian_signature",
    "flat_critical_point",
    "distance_to_levi_K",
    "levi_pattern_distance",
    "random_element",
]


class CriticalSetNotFound(RuntimeError):
    """No critical point survived verification; says nothing about the
    true critical set, only that the seeds were insufficient."""


class GroupModel:
    """Structure constants of SL(n,R) for n in {2, 3}: split rank, root
    data, half-sum of positive roots, and an orthonormal basis of the
    diagonal subalgebra."""

    def __init__(self, n: int):
        if n not in (2, 3):
            raise ValueError("only n = 2 and n = 3 are modeled")
        self.n = n
        self.r = n - 1
        self.dim_k = n * (n - 1) // 2
        self.rho = np.array([(n - 1 - 2 * i) / 2.0 for i in range(n)])
        if n == 2:
            self.a_basis = np.array([[1.0, -1.0]]) / math.sqrt(2.0)
        else:
            self.a_basis = np.array(
                [
                    np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0),
                    np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0),
                ]
            )
        # positive roots as coordinate functionals e_i - e_j, i < j
        self.positive_roots = [
            tuple((1 if k == i else -1 if k == j else 0) for k in range(n))
            for i in range(n)
            for j in range(n)
            if i < j
        ]
        self._k_basis = _so_basis(n)
        self._signed_perms = _signed_permutations(n)

    def __repr__(self):
        return f"GroupModel(n={self.n})"

    def __eq__(self, other):
        return isinstance(other, GroupModel) and other.n == self.n

    def __hash__(self):
        return hash(("GroupModel", self.n))

    # -- coordinates on the diagonal subalgebra

    def to_a_vector(self, h) -> np.ndarray:
        """Accept either r coordinates in the orthonormal basis or a
        traceless n-vector; return the traceless n-vector."""
        h = np.asarray(h, dtype=float)
        if h.shape == (self.r,):
            return h @ self.a_basis
        if h.shape == (self.n,):
            if abs(h.sum()) > 1e-9 * (1.0 + np.abs(h).max()):
                raise ValueError("diagonal vector must be traceless")
            return h
        raise ValueError(f"expected length {self.r} or {self.n}, got shape {h.shape}")

    def coords(self, h) -> np.ndarray:
        return self.a_basis @ np.asarray(h, dtype=float)

    def weyl_orbit(self, h) -> list[np.ndarray]:
        h = self.to_a_vector(h)
        return [np.array(p) for p in {tuple(h[list(s)]) for s in itertools.permutations(range(self.n))}]

    def point(self, h0, t: float) -> "SpectralPoint":
        return SpectralPoint(self, h0, t)


def _so_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            X = np.zeros((n, n))
            X[i, j] = 1.0 / math.sqrt(2.0)
            X[j, i] = -1.0 / math.sqrt(2.0)
            out.append(X)
    return out


def _signed_permutations(n: int) -> np.ndarray:
    """All monomial matrices with entries +-1 and determinant +1."""
    mats = []
    for perm in itertools.permutations(range(n)):
        P = np.zeros((n, n))
        for i, j in enumerate(perm):
            P[j, i] = 1.0
        for signs in itertools.product((1.0, -1.0), repeat=n):
            S = P * np.array(signs)[None, :]
            if np.linalg.det(S) > 0:
                mats.append(S)
    return np.array(mats)


def _exp_so(model: GroupModel, x) -> np.ndarray:
    """Exponential of sum_l x_l X_l for the orthonormal so(n) basis."""
    x = np.asarray(x, dtype=float)
    if model.n == 2:
        th = x[0] / math.sqrt(2.0)
        c, s = math.cos(th), math.sin(th)
        return np.array([[c, s], [-s, c]])
    A = sum(xl * X for xl, X in zip(x, model._k_basis))
    # Rodrigues formula for 3x3 skew matrices
    phi = math.sqrt(0.5 * float(np.sum(A * A)))
    if phi < 1e-30:
        return np.eye(3) + A
    return (
        np.eye(3)
        + (math.sin(phi) / phi) * A
        + ((1.0 - math.cos(phi)) / phi**2) * (A @ A)
    )


# ---------------------------------------------------------------------------
# spectral points, bumps, quadrature specs


class SpectralPoint:
    """A spectral direction H0 in the diagonal subalgebra plus a scale t.

    ``regular`` means no root vanishes on H0; ``generic`` additionally
    keeps H0 away from every proper subspace spanned by roots (for rank
    2 these are the three root lines).  Both use a relative tolerance of
    1e-6 * |H0|.
    """

    def __init__(self, model: GroupModel, h0, t: float = 1.0):
        self.model = model
        self.H0 = model.to_a_vector(h0)
        self.t = float(t)
        if self.t < 0:
            raise ValueError("t must be nonnegative")
        norm = float(np.linalg.norm(self.H0))
        if norm == 0:
            raise ValueError("H0 must be nonzero")
        tol = 1e-6 * norm
        self.regular = all(
            abs(float(np.dot(self.H0, np.array(alpha)))) > tol * math.sqrt(2.0)
            for alpha in model.positive_roots
        )
        self.generic = self.regular and all(
            _line_distance(self.H0, np.array(alpha, dtype=float)) > tol
            for alpha in (model.positive_roots if model.r >= 2 else [])
        )
        self.positive_chamber = all(
            self.H0[i] > self.H0[i + 1] for i in range(model.n - 1)
        )

    def __repr__(self):
        return f"SpectralPoint(H0={self.H0.tolist()}, t={self.t}, generic={self.generic})"


def _line_distance(v: np.ndarray, u: np.ndarray) -> float:
    u = u / np.linalg.norm(u)
    return float(np.linalg.norm(v - np.dot(v, u) * u))


@dataclass(frozen=True)
class BumpFunction:
    """Smooth compactly supported radial profile with value 1 at the
    origin; evaluated on the log-coordinate radius over the support
    radius."""

    radius: float = 0.75

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        inside = np.abs(s) < 1.0
        si = s[inside]
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
        return out

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        radii = np.linalg.norm(u, axis=-1) / self.radius
        return self.profile(radii)


@dataclass(frozen=True)
class QuadratureSpec:
    """Base resolutions, refinement policy and absolute tolerance for the
    convergence flag (two consecutive refinements within tol).

    Each refinement doubles the rotation grid; the diagonal grid grows by
    ``a_growth`` per level (the default doubles it too, but the double
    diagonal average is much cheaper with a gentler factor, since its
    amplitude stays smooth while the rotation integrand oscillates)."""

    k_res: int = 16
    a_res: int = 8
    max_refinements: int = 3
    tol: float = 1e-6
    a_growth: float = 2.0

    def __post_init__(self):
        if self.k_res < 4 or self.a_res < 2 or self.max_refinements < 1:
            raise ValueError("quadrature resolutions too small")
        if self.a_growth < 1.0:
            raise ValueError("a_growth must be >= 1")

    def a_res_at(self, level: int) -> int:
        return max(2, round(self.a_res * self.a_growth**level))


@dataclass(frozen=True)
class IntegralResult:
    value: complex
    converged: bool
    error: float
    levels: int

    def to_json(self) -> dict:
        return {
            "re": self.value.real,
            "im": self.value.imag,
            "abs": abs(self.value),
            "converged": self.converged,
            "error": self.error,
            "levels": self.levels,
        }


# ---------------------------------------------------------------------------
# Iwasawa projection


def _heights(mats: np.ndarray) -> np.ndarray:
    """Log of the diagonal Iwasawa component for a batch of matrices,
    by bottom-up Gram-Schmidt on rows."""
    m = np.asarray(mats, dtype=float)
    n = m.shape[-1]
    H = np.empty(m.shape[:-2] + (n,))
    basis = []
    for i in range(n - 1, -1, -1):
        v = np.array(m[..., i, :], copy=True)
        for u in basis:
            v -= np.sum(v * u, axis=-1)[..., None] * u
        norm = np.linalg.norm(v, axis=-1)
        H[..., i] = np.log(norm)
        basis.append(v / norm[..., None])
    return H


def _nak(g: np.ndarray):
    """Full Iwasawa factorization of one matrix: (n, H, k)."""
    n = g.shape[0]
    k_rows = np.empty_like(g)
    H = np.empty(n)
    for i in range(n - 1, -1, -1):
        v = g[i].astype(float).copy()
        for j in range(i + 1, n):
            v -= np.dot(v, k_rows[j]) * k_rows[j]
        a = np.linalg.norm(v)
        H[i] = math.log(a)
        k_rows[i] = v / a
    nilp = g @ k_rows.T @ np.diag(np.exp(-H))
    return nilp, H, k_rows


def iwasawa_height(model: GroupModel, g) -> np.ndarray:
    """Traceless n-vector H with g = n * exp(diag(H)) * k; raises on
    singular input or when the reconstruction residual exceeds 1e-10."""
    g = np.asarray(g, dtype=float)
    if g.shape != (model.n, model.n):
        raise ValueError(f"matrix must be {model.n} x {model.n}")
    det = float(np.linalg.det(g))
    if abs(det - 1.0) > 1e-8 * max(1.0, float(np.abs(g).max()) ** model.n):
        raise ValueError(f"determinant {det} != 1")
    nilp, H, k = _nak(g)
    recon = nilp @ np.diag(np.exp(H)) @ k
    if float(np.abs(recon - g).max()) > 1e-10 * max(1.0, float(np.abs(g).max())):
        raise ArithmeticError("Iwasawa reconstruction residual too large")
    return H


def kappa(model: GroupModel, g) -> np.ndarray:
    """SO(n) component of the Iwasawa factorization."""
    return _nak(np.asarray(g, dtype=float))[2]


def random_element(model: GroupModel, rng, spread: float = 0.5) -> np.ndarray:
    """Well-conditioned random SL(n) element n * a * k."""
    n = model.n
    nilp = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            nilp[i, j] = spread * rng.standard_normal()
    u = spread * rng.standard_normal(model.r)
    a = np.diag(np.exp(u @ model.a_basis))
    k = _random_so(n, rng)
    return nilp @ a @ k


def _random_so(n: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ---------------------------------------------------------------------------
# K-quadrature


def _k_nodes(model: GroupModel, res: int):
    """Quadrature nodes and weights for normalized Haar measure on SO(n)."""
    if model.n == 2:
        theta = np.arange(res) * (2.0 * math.pi / res)
        c, s = np.cos(theta), np.sin(theta)
        mats = np.zeros((res, 2, 2))
        mats[:, 0, 0] = c
        mats[:, 0, 1] = s
        mats[:, 1, 0] = -s
        mats[:, 1, 1] = c
        return mats, np.full(res, 1.0 / res)
    # SO(3): z-y-z Euler angles, trapezoid in alpha/gamma, Gauss-Legendre
    # in cos(beta)
    u, wu = np.polynomial.legendre.leggauss(res)
    beta = np.arccos(u)
    alpha = np.arange(res) * (2.0 * math.pi / res)
    gamma = np.arange(res) * (2.0 * math.pi / res)

    def rz(angles):
        c, s = np.cos(angles), np.sin(angles)
        out = np.zeros(angles.shape + (3, 3))
        out[..., 0, 0] = c
        out[..., 0, 1] = -s
        out[..., 1, 0] = s
        out[..., 1, 1] = c
        out[..., 2, 2] = 1.0
        return out

    def ry(angles):
        c, s = np.cos(angles), np.sin(angles)
        out = np.zeros(angles.shape + (3, 3))
        out[..., 0, 0] = c
        out[..., 0, 2] = s
        out[..., 2, 0] = -s
        out[..., 2, 2] = c
        out[..., 1, 1] = 1.0
        return out

    ra = rz(alpha)
    rb = ry(beta)
    rg = rz(gamma)
    mats = np.einsum("aij,bjk,ckl->abcil", ra, rb, rg).reshape(-1, 3, 3)
    w = (wu / 2.0)[None, :, None] * np.full((res, 1, res), 1.0 / res**2)
    return mats, w.reshape(-1)


_CHUNK = 5 * 10**5  # (K-node, batch-element) pairs evaluated per chunk


def _phi_sweep(model: GroupModel, nu: np.ndarray, ts, mats: np.ndarray, k_res: int):
    """Spherical-function values phi_{i t nu}, for several scales t at once,
    on a batch of group elements with one shared K-grid.  The Iwasawa
    heights do not depend on t, so a sweep costs little more than a
    single scale."""
    ks, w = _k_nodes(model, k_res)
    batch_shape = mats.shape[:-2]
    flat = mats.reshape((-1, model.n, model.n))
    ts = np.asarray(ts, dtype=float)
    out = np.zeros((ts.shape[0], flat.shape[0]), dtype=complex)
    step = max(1, _CHUNK // max(1, flat.shape[0]))
    for start in range(0, ks.shape[0], step):
        kc = ks[start : start + step]
        wc = w[start : start + step]
        prod = np.einsum("kab,mbc->kmac", kc, flat)
        H = _heights(prod)
        growth = np.exp(H @ model.rho) * wc[:, None]
        phase = H @ nu
        for idx, t in enumerate(ts):
            out[idx] += np.einsum("km,km->m", growth, np.exp(1j * t * phase))
    return out.reshape((ts.shape[0],) + batch_shape)


def _phi_batch(model: GroupModel, nu: np.ndarray, t: float, mats: np.ndarray, k_res: int):
    return _phi_sweep(model, nu, [t], mats, k_res)[0]


def _refined(evaluate, quad: QuadratureSpec) -> IntegralResult:
    prev = None
    value = None
    err = math.inf
    converged = False
    level = 0
    for level in range(quad.max_refinements + 1):
        value = evaluate(quad.k_res << level, quad.a_res_at(level))
        if prev is not None:
            err = abs(value - prev)
            if err <= quad.tol:
                converged = True
                break
        prev = value
    return IntegralResult(value, converged, err, level + 1)


def spherical_function(model: GroupModel, nu, g, quad: QuadratureSpec | None = None) -> IntegralResult:
    """phi_nu(g) for real spectral parameter nu (r coordinates or a
    traceless n-vector)."""
    quad = quad or QuadratureSpec()
    nu_vec = model.to_a_vector(nu)
    g = np.asarray(g, dtype=float)

    def evaluate(k_res, _a_res):
        return complex(_phi_batch(model, nu_vec, 1.0, g[None, :, :], k_res)[0])

    return _refined(evaluate, quad)


def model_integral_I(
    model: GroupModel,
    point: SpectralPoint,
    bump: BumpFunction | None = None,
    quad: QuadratureSpec | None = None,
) -> IntegralResult:
    """The bump-weighted integral of phi_{i t nu} over the diagonal
    subgroup, the stationary-phase model integral.  The scaled magnitude
    t^r * |I| is the bracket-stable diagnostic."""
    bump = bump or BumpFunction()
    quad = quad or QuadratureSpec()

    def evaluate(k_res, a_res):
        u, wu, amps = _a_grid(model, bump, a_res)
        av = np.exp(u @ model.a_basis)
        mats = av[:, None, :] * np.eye(model.n)[None, :, :]
        phi = _phi_batch(model, point.H0, point.t, mats, k_res)
        return complex(np.sum(wu * amps * phi))

    return _refined(evaluate, quad)


def model_integral_sweep(
    model: GroupModel,
    h0,
    ts,
    bump: BumpFunction | None = None,
    quad: QuadratureSpec | None = None,
) -> list[IntegralResult]:
    """Model integrals for a whole sweep of scales t over shared grids.

    Refinement doubles both grids until every scale has stabilized (or
    the refinement budget runs out); heights are shared across scales,
    so this is much cheaper than independent calls."""
    bump = bump or BumpFunction()
    quad = quad or QuadratureSpec()
    H0 = GroupModel.to_a_vector(model, h0)
    ts = [float(t) for t in ts]

    def evaluate(k_res, a_res):
        u, wu, amps = _a_grid(model, bump, a_res)
        av = np.exp(u @ model.a_basis)
        mats = av[:, None, :] * np.eye(model.n)[None, :, :]
        phi = _phi_sweep(model, H0, ts, mats, k_res)
        return phi @ (wu * amps)

    prev = None
    values = None
    errs = [math.inf] * len(ts)
    converged = [False] * len(ts)
    level = 0
    for level in range(quad.max_refinements + 1):
        values = evaluate(quad.k_res << level, quad.a_res_at(level))
        if prev is not None:
            errs = [abs(v - p) for v, p in zip(values, prev)]
            converged = [e <= quad.tol for e in errs]
            if all(converged):
                break
        prev = values
    return [
        IntegralResult(complex(v), c, e, level + 1)
        for v, c, e in zip(values, converged, errs)
    ]


def _a_grid(model: GroupModel, bump: BumpFunction, a_res: int):
    """Tensor Gauss-Legendre grid over the bump support in orthonormal
    log coordinates: (points (M, r), weights (M,), amplitudes (M,))."""
    x, w = np.polynomial.legendre.leggauss(a_res)
    x = x * bump.radius
    w = w * bump.radius
    grids = np.meshgrid(*([x] * model.r), indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w] * model.r), indexing="ij")
    wu = np.ones(u.shape[0])
    for g in wgrids:
        wu = wu * g.ravel()
    return u, wu, bump(u)


def orbital_integral_J(
    model: GroupModel,
    point: SpectralPoint,
    g,
    bump: BumpFunction | None = None,
    quad: QuadratureSpec | None = None,
) -> IntegralResult:
    """Double diagonal-average of the spherical function around a group
    element g, with a product bump amplitude.  The companion scalar
    ``levi_pattern_distance(model, g)`` locates g relative to the
    monomial Levi cosets where the decay degrades."""
    bump = bump or BumpFunction()
    quad = quad or QuadratureSpec()
    g = np.asarray(g, dtype=float)

    def evaluate(k_res, a_res):
        u, wu, amps = _a_grid(model, bump, a_res)
        av = np.exp(u @ model.a_basis)
        # a1^{-1} g a2 scales rows by exp(-u1) and columns by exp(u2)
        mats = (1.0 / av)[:, None, :, None] * g[None, None, :, :] * av[None, :, None, :]
        phi = _phi_batch(model, point.H0, point.t, mats, k_res)
        weights = (wu * amps)[:, None] * (wu * amps)[None, :]
        return complex(np.sum(weights * phi))

    return _refined(evaluate, quad)


# ---------------------------------------------------------------------------
# critical sets and Hessians


def _f_and_jacobian(model: GroupModel, H0: np.ndarray, k: np.ndarray):
    X = k.T @ (H0[:, None] * k)  # Ad_{k^{-1}} H0
    F = model.coords(np.diagonal(X))
    J = np.empty((model.r, model.dim_k))
    for col, B in enumerate(model._k_basis):
        comm = X @ B - B @ X  # [Ad_{k^{-1}} H0, X_l]
        J[:, col] = model.coords(np.diagonal(comm))
    return F, J


def critical_set_solve(
    model: GroupModel,
    h0,
    seed_count: int = 40,
    rng=None,
    residual_tol: float = 1e-8,
    levi_tol: float = 1e-6,
    _continue_from=None,
):
    """Rotations k with the diagonal part of Ad_{k^{-1}} H0 equal to zero,
    found by Gauss-Newton from random seeds and deduplicated.

    Every returned solution has residual below ``residual_tol``, a
    derivative of full rank r, and distance above ``levi_tol`` from the
    monomial Levi cosets inside SO(n).  Raises
    :class:`CriticalSetNotFound` when no seed converges; that flags seed
    insufficiency, never emptiness.  ``_continue_from`` seeds the solver
    with explicit starting rotations (continuation along a moving H0).
    """
    H0 = model.to_a_vector(h0)
    point = SpectralPoint(model, H0, 1.0)
    if not point.generic:
        raise ValueError("H0 must be generic for the critical-set solve")
    rng = np.random.default_rng(0) if rng is None else rng
    starts = [np.asarray(k, dtype=float) for k in (_continue_from or [])]
    found: list[np.ndarray] = []
    for idx in range(len(starts) + seed_count):
        k = starts[idx] if idx < len(starts) else _random_so(model.n, rng)
        ok = False
        for _ in range(80):
            F, J = _f_and_jacobian(model, H0, k)
            if np.linalg.norm(F) < 1e-13 * np.linalg.norm(H0):
                ok = True
                break
            step, *_ = np.linalg.lstsq(J, -F, rcond=None)
            if np.linalg.norm(step) > 2.0:
                step *= 2.0 / np.linalg.norm(step)
            k = k @ _exp_so(model, step)
        if not ok:
            continue
        F, J = _f_and_jacobian(model, H0, k)
        if np.linalg.norm(F) > residual_tol:
            continue
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[model.r - 1] <= 1e-6 * max(sv[0], 1e-30):
            continue
        if distance_to_levi_K(model, k) <= levi_tol:
            continue
        if any(np.abs(k - other).max() < 1e-6 for other in found):
            continue
        found.append(k)
    if not found:
        raise CriticalSetNotFound(
            f"no critical point survived from {seed_count} seeds; try more seeds"
        )
    found.sort(key=lambda m: tuple(np.round(m.ravel(), 9)))
    return found


def _phase_value(model: GroupModel, H0: np.ndarray, k0: np.ndarray, z: np.ndarray) -> float:
    """Phase <H0, H(k a)> in normal coordinates z = (u, x) around (1, k0)."""
    u = z[: model.r]
    x = z[model.r :]
    k = k0 @ _exp_so(model, x)
    a = np.diag(np.exp(u @ model.a_basis))
    H = _heights((k @ a)[None, :, :])[0]
    return float(np.dot(H0, H))


def _fd_hessian(fun, dim: int, h: float) -> np.ndarray:
    H = np.empty((dim, dim))
    e = np.eye(dim)
    f0 = fun(np.zeros(dim))
    for i in range(dim):
        H[i, i] = (fun(h * e[i]) - 2.0 * f0 + fun(-h * e[i])) / h**2
        for j in range(i + 1, dim):
            val = (
                fun(h * (e[i] + e[j]))
                - fun(h * (e[i] - e[j]))
                - fun(h * (-e[i] + e[j]))
                + fun(h * (-e[i] - e[j]))
            ) / (4.0 * h**2)
            H[i, j] = H[j, i] = val
    return H


def hessian_signature(
    model: GroupModel,
    h0,
    k_crit: np.ndarray,
    step: float = 1e-4,
    zero_tol: float = 1e-3,
) -> tuple[int, int, int]:
    """Signature (n_zero, n_plus, n_minus) of the phase Hessian at the
    critical point (1, k_crit) on A x K, by central differences with a
    halved-step cross-check.  Raises ArithmeticError when the two steps
    classify differently (ill-conditioning)."""
    H0 = model.to_a_vector(h0)
    dim = model.r + model.dim_k

    def fun(z):
        return _phase_value(model, H0, k_crit, z)

    def classify(h):
        He = _fd_hessian(fun, dim, h)
        eigs = np.linalg.eigvalsh(0.5 * (He + He.T))
        scale = max(np.abs(eigs).max(), 1e-12)
        zero = np.abs(eigs) <= zero_tol * scale
        return (
            int(zero.sum()),
            int(np.sum(~zero & (eigs > 0))),
            int(np.sum(~zero & (eigs < 0))),
        )

    sig = classify(step)
    if classify(step / 2.0) != sig:
        raise ArithmeticError("Hessian signature unstable under step halving")
    return sig


@dataclass(frozen=True)
class FlatCriticalPoint:
    """Unique interior maximizer of a height function on the diagonal
    subgroup, with its log-coordinate location and Hessian eigenvalues."""

    u: np.ndarray
    H: np.ndarray
    value: float
    gradient_norm: float
    hessian_eigenvalues: np.ndarray


def flat_critical_point(
    model: GroupModel,
    h0,
    g,
    max_iters: int = 120,
    grad_tol: float = 1e-8,
) -> FlatCriticalPoint | None:
    """Ascend a -> <H0, H(g a)> on the diagonal subgroup.

    H0 must lie in the positive generic chamber.  Returns the maximizer
    when the ascent converges (gradient norm below tol, negative
    definite difference Hessian), or None on divergence, meaning the
    height function of g has no critical point.
    """
    H0 = model.to_a_vector(h0)
    point = SpectralPoint(model, H0, 1.0)
    if not (point.generic and point.positive_chamber):
        raise ValueError("H0 must be in the positive generic chamber")
    g = np.asarray(g, dtype=float)

    def height(u):
        a = np.diag(np.exp(u @ model.a_basis))
        return float(np.dot(H0, _heights((g @ a)[None])[0]))

    def gradient(u):
        a = np.diag(np.exp(u @ model.a_basis))
        k = kappa(model, g @ a)
        return model.coords(np.diagonal(k.T @ (H0[:, None] * k)))

    u = np.zeros(model.r)
    fd = 1e-5
    for _ in range(max_iters):
        grad = gradient(u)
        gn = float(np.linalg.norm(grad))
        if gn < grad_tol:
            break
        # difference Jacobian of the gradient for a Newton step
        Jg = np.empty((model.r, model.r))
        for i in range(model.r):
            e = np.zeros(model.r)
            e[i] = fd
            Jg[:, i] = (gradient(u + e) - gradient(u - e)) / (2 * fd)
        Jg = 0.5 * (Jg + Jg.T)
        eigs = np.linalg.eigvalsh(Jg)
        if eigs.max() < -1e-12:
            step = np.linalg.solve(Jg, -grad)
        else:
            step = grad / max(gn, 1.0)
        # backtracking ascent on the height
        base = height(u)
        lam = 1.0
        while lam > 1e-6 and height(u + lam * step) < base:
            lam *= 0.5
        u = u + lam * step
        if np.linalg.norm(u) > 60.0:
            return None
    else:
        return None
    grad = gradient(u)
    gn = float(np.linalg.norm(grad))
    if gn >= grad_tol:
        return None
    hess = _fd_hessian(lambda z: height(u + z), model.r, 1e-4)
    eigs = np.linalg.eigvalsh(0.5 * (hess + hess.T))
    if eigs.max() >= 0:
        raise ArithmeticError(
            "converged to a critical point whose Hessian is not negative definite"
        )
    return FlatCriticalPoint(u, u @ model.a_basis, height(u), gn, eigs)


# ---------------------------------------------------------------------------
# Levi coset diagnostics


def _block_patterns(n: int) -> list[np.ndarray]:
    pats = []
    for i in range(n):
        for j in range(i + 1, n):
            mask = np.zeros((n, n))
            idx = [i, j]
            for a in idx:
                for b in idx:
                    mask[a, b] = 1.0
            for l in range(n):
                if l not in idx:
                    mask[l, l] = 1.0
            pats.append(mask)
    return pats


def distance_to_levi_K(model: GroupModel, k: np.ndarray) -> float:
    """Frobenius distance from k in SO(n) to the union of monomial Levi
    cosets inside SO(n) (exact minimization over the circle factors)."""
    k = np.asarray(k, dtype=float)
    best = math.inf
    for mp in model._signed_perms:
        best = min(best, float(np.linalg.norm(k - mp)))
    if model.n == 2:
        return best
    for mp in model._signed_perms:
        X = mp.T @ k
        for i in range(3):
            for j in range(i + 1, 3):
                l = 3 - i - j
                B = X[np.ix_([i, j], [i, j])]
                rot = math.hypot(B[0, 0] + B[1, 1], B[1, 0] - B[0, 1])
                ref = math.hypot(B[0, 0] - B[1, 1], B[0, 1] + B[1, 0])
                tr_best = max(rot + X[l, l], ref - X[l, l])
                d2 = max(6.0 - 2.0 * tr_best, 0.0)
                best = min(best, math.sqrt(d2))
    return best


def levi_pattern_distance(model: GroupModel, g) -> float:
    """Diagnostic distance from a group element to the monomial Levi
    patterns: the smallest Frobenius mass outside a signed-permuted
    block-diagonal support.  A surrogate coordinate for decay plots, not
    an intrinsic metric."""
    g = np.asarray(g, dtype=float)
    pats = [np.eye(model.n)]
    if model.n == 3:
        pats += _block_patterns(3)
    best = math.inf
    for mp in model._signed_perms:
        X = mp.T @ g
        for mask in pats:
            best = min(best, float(np.linalg.norm(X * (1.0 - mask))))
    return best
