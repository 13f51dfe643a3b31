"""Command-line front end: every computation as a reproducible table.

Exact subcommands (degree, orbital, hall, bound-scan, restricted-count,
amp-ratio, amp-bounds, optimal-c) print integer/rational tables whose
bytes depend only on argv.  Numeric subcommands (spherical, model-int,
orbital-int, critical-set) carry convergence flags.  ``verify`` replays
the pinned identity suite and exits 1 on any mismatch.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 capacity
ceiling hit.  The resolved configuration of every run is logged to
stderr so stdout stays byte-reproducible.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from heckeamp.lattices import (
    CapacityError,
    Cotype,
    DEFAULT_CEILING,
    PrimeContext,
    normalize_cotype,
)
from heckeamp import hecke
from heckeamp import amplifier as amp

CSV_VERSION = "v1"


# ---------------------------------------------------------------------------
# parsing helpers


def _cotype_arg(text: str) -> Cotype:
    return Cotype(tuple(int(x) for x in text.split(",")))


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _fraction_arg(text: str) -> Fraction:
    return Fraction(text)


def load_flat_config(path: str) -> dict[str, str]:
    """Flat key=value file; blank lines and #-comments ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


# ---------------------------------------------------------------------------
# output


class TableWriter:
    def __init__(self, name: str, fmt: str, path: str | None):
        self.name = name
        self.fmt = fmt
        self.path = path

    def emit(self, header: list[str], rows: list[list], json_obj=None):
        if self.fmt == "json":
            payload = json_obj
            if payload is None:
                payload = [dict(zip(header, row)) for row in rows]
            text = json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"
        elif self.fmt == "csv":
            lines = [f"# heckeamp {self.name} csv {CSV_VERSION}"]
            lines.append(",".join(header))
            for row in rows:
                lines.append(",".join(_csv_cell(v) for v in row))
            text = "\n".join(lines) + "\n"
        else:
            widths = [
                max(len(str(h)), *(len(_csv_cell(r[i])) for r in rows)) if rows else len(str(h))
                for i, h in enumerate(header)
            ]
            lines = ["  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip()]
            for row in rows:
                lines.append(
                    "  ".join(_csv_cell(v).ljust(w) for v, w in zip(row, widths)).rstrip()
                )
            text = "\n".join(lines) + "\n"
        if self.path:
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _csv_cell(v) -> str:
    if isinstance(v, float):
        return "%.12g" % v
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, Cotype):
        return "(" + " ".join(str(e) for e in v) + ")"
    return str(v)


def _log_config(args: argparse.Namespace):
    resolved = {k: str(v) for k, v in sorted(vars(args).items()) if k != "func"}
    print(f"heckeamp config: {resolved}", file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_degree(args) -> int:
    ctx = PrimeContext(args.p, len(args.cotype), max(args.cotype[0], 1), ceiling=args.ceiling)
    d = hecke.degree(ctx, args.cotype)
    TableWriter("degree", args.format, args.output).emit(
        ["p", "n", "cotype", "degree"],
        [[args.p, ctx.n, args.cotype, d]],
        json_obj={"p": args.p, "n": ctx.n, "cotype": args.cotype.to_json(), "degree": d},
    )
    return 0


def cmd_orbital(args) -> int:
    if len(args.a) != len(args.b):
        raise SystemExit2("cotypes a and b must have the same length")
    ctx = PrimeContext(
        args.p, len(args.a), max(args.a[0] + args.b[0], 1), ceiling=args.ceiling
    )
    single_a = hecke.torus_orbital_single(ctx, args.a)
    res = hecke.torus_orbital_pair(ctx, args.a, args.b)
    TableWriter("orbital", args.format, args.output).emit(
        ["p", "a", "b", "total", "diagonal", "off_diagonal", "single_a"],
        [[args.p, args.a, args.b, res.total, res.diagonal, res.off_diagonal, single_a]],
        json_obj={
            "p": args.p,
            "a": args.a.to_json(),
            "b": args.b.to_json(),
            **res.to_json(),
            "single_a": single_a,
        },
    )
    return 0


def cmd_hall(args) -> int:
    ctx = PrimeContext(
        args.p, len(args.a), max(args.a[0] + args.b[0], 1), ceiling=args.ceiling
    )
    comb = hecke.hall_coefficients(ctx, args.a, args.b)
    rows = [[args.p, args.a, args.b, c, q] for c, q in comb.terms]
    TableWriter("hall", args.format, args.output).emit(
        ["p", "a", "b", "cotype", "coefficient"], rows, json_obj=comb.to_json()
    )
    return 0


def _scan_one_prime(task):
    p, n, max_entry, ceiling = task
    return [r.to_json() for r in hecke.key_bound_sweep([p], n, max_entry, ceiling)]


def cmd_bound_scan(args) -> int:
    tasks = [(p, args.n, args.max_entry, args.ceiling) for p in sorted(args.p_list)]
    if args.jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            chunks = list(pool.map(_scan_one_prime, tasks))
    else:
        chunks = [_scan_one_prime(t) for t in tasks]
    dicts = [row for chunk in chunks for row in chunk]
    rows = [
        [
            d["p"],
            Cotype(tuple(d["a"])),
            Cotype(tuple(d["b"])),
            d["off_diagonal"],
            d["degree_a"],
            d["degree_b"],
            Fraction(d["statistic_sq"]),
            d["statistic"],
        ]
        for d in dicts
    ]
    TableWriter("bound-scan", args.format, args.output).emit(
        ["p", "a", "b", "off_diagonal", "degree_a", "degree_b", "statistic_sq", "statistic"],
        rows,
        json_obj=dicts,
    )
    return 0


def cmd_restricted_count(args) -> int:
    ctx = PrimeContext(
        args.p, len(args.cotype), max(args.cotype[0], 1), ceiling=args.ceiling
    )
    count = hecke.restricted_cotype_count(ctx, args.cotype, args.m, args.mode)
    deg = hecke.degree(ctx, args.cotype)
    TableWriter("restricted-count", args.format, args.output).emit(
        ["p", "cotype", "m", "mode", "count", "degree"],
        [[args.p, args.cotype, args.m, args.mode, count, deg]],
        json_obj={
            "p": args.p,
            "cotype": args.cotype.to_json(),
            "m": args.m,
            "mode": args.mode,
            "count": count,
            "degree": deg,
        },
    )
    return 0


def _rule_from_args(args) -> amp.GoodPrimeRule:
    residues = frozenset(args.residues) if args.residues else frozenset()
    if args.modulus > 1 and not residues:
        residues = frozenset(
            r for r in range(1, args.modulus) if math.gcd(r, args.modulus) == 1
        )
    return amp.GoodPrimeRule(args.modulus, residues, frozenset(args.exclude))


def cmd_amp_ratio(args) -> int:
    cfg = amp.AmplifierConfig(
        c=args.c,
        c1=args.c1,
        M=args.M,
        rule=_rule_from_args(args),
        cotype=args.cotype,
        ceiling=args.ceiling,
    )
    rep = amp.amplifier_ratio(cfg)
    TableWriter("amp-ratio", args.format, args.output).emit(
        amp.CSV_HEADER_RATIO, [rep.csv_row()], json_obj=rep.to_json()
    )
    return 0


def cmd_amp_bounds(args) -> int:
    rep = amp.upper_bound_envelope(args.M, args.weight)
    TableWriter("amp-bounds", args.format, args.output).emit(
        ["M", "weight", "primorial", "divisor_sum", "product_form", "value_float"],
        [[rep.M, rep.weight, rep.primorial, rep.divisor_sum, rep.product_form,
          float(rep.divisor_sum)]],
        json_obj=rep.to_json(),
    )
    return 0


def cmd_optimal_c(args) -> int:
    c_star, value = amp.optimal_c()
    rows = [[c_star, value, amp.lower_bound_constant(c_star, 1)]]
    TableWriter("optimal-c", args.format, args.output).emit(
        ["c_star", "value", "lower_bound_constant"],
        rows,
        json_obj={"c_star": str(c_star), "value": str(value)},
    )
    return 0


# -- numeric subcommands (archimedean imports deferred: numpy is heavier)


def _parse_matrix(text: str, n: int):
    import numpy as np

    vals = [float(x) for x in text.split(",")]
    if len(vals) != n * n:
        raise SystemExit2(f"expected {n*n} matrix entries, got {len(vals)}")
    return np.array(vals).reshape(n, n)


def _resolve_g(args, model):
    import numpy as np

    from heckeamp import archimedean as arc

    if args.g is not None:
        return _parse_matrix(args.g, model.n)
    rng = np.random.default_rng(args.g_seed)
    return arc.random_element(model, rng, spread=0.5)


def cmd_spherical(args) -> int:
    from heckeamp import archimedean as arc

    model = arc.GroupModel(args.n)
    g = _resolve_g(args, model)
    quad = arc.QuadratureSpec(args.k_res, args.a_res, args.refinements, args.tol)
    res = arc.spherical_function(model, args.nu, g, quad)
    TableWriter("spherical", args.format, args.output).emit(
        ["n", "nu", "re", "im", "abs", "converged", "error"],
        [[args.n, args.nu, res.value.real, res.value.imag, abs(res.value),
          res.converged, res.error]],
        json_obj={"n": args.n, "nu": args.nu, **res.to_json()},
    )
    return 0


def cmd_model_int(args) -> int:
    from heckeamp import archimedean as arc

    model = arc.GroupModel(args.n)
    bump = arc.BumpFunction(args.radius)
    quad = arc.QuadratureSpec(args.k_res, args.a_res, args.refinements, args.tol)
    results = arc.model_integral_sweep(model, args.h0, args.t_list, bump, quad)
    rows = []
    for t, res in zip(args.t_list, results):
        scaled = (t**model.r) * abs(res.value) if t else abs(res.value)
        rows.append(
            [t, res.value.real, res.value.imag, abs(res.value), scaled,
             res.converged, res.error]
        )
    TableWriter("model-int", args.format, args.output).emit(
        ["t", "re", "im", "abs", "scaled_abs", "converged", "error"], rows
    )
    return 0


def cmd_orbital_int(args) -> int:
    from heckeamp import archimedean as arc

    model = arc.GroupModel(args.n)
    bump = arc.BumpFunction(args.radius)
    quad = arc.QuadratureSpec(args.k_res, args.a_res, args.refinements, args.tol)
    g = _resolve_g(args, model)
    levi = arc.levi_pattern_distance(model, g)
    rows = []
    for t in args.t_list:
        pt = arc.SpectralPoint(model, args.h0, t)
        res = arc.orbital_integral_J(model, pt, g, bump, quad)
        scaled = (t**model.r) * abs(res.value) if t else abs(res.value)
        rows.append(
            [t, res.value.real, res.value.imag, abs(res.value), scaled,
             levi, res.converged, res.error]
        )
    TableWriter("orbital-int", args.format, args.output).emit(
        ["t", "re", "im", "abs", "scaled_abs", "levi_distance", "converged", "error"],
        rows,
    )
    return 0


def cmd_critical_set(args) -> int:
    import numpy as np

    from heckeamp import archimedean as arc

    model = arc.GroupModel(args.n)
    rng = np.random.default_rng(args.g_seed)
    points = arc.critical_set_solve(model, args.h0, args.seeds, rng)
    rows = []
    for k in points:
        sig = arc.hessian_signature(model, args.h0, k)
        rows.append(
            [" ".join("%.9f" % x for x in k.ravel()),
             arc.distance_to_levi_K(model, k),
             "%d,%d,%d" % sig]
        )
    TableWriter("critical-set", args.format, args.output).emit(
        ["k_matrix_row_major", "levi_distance", "signature"], rows
    )
    return 0


# ---------------------------------------------------------------------------
# verify: the pinned identity suite


class _Verifier:
    def __init__(self):
        self.failures = 0
        use_color = sys.stdout.isatty() and not os.environ.get("NO_COLOR")
        self.ok_tag = "\x1b[32mPASS\x1b[0m" if use_color else "PASS"
        self.bad_tag = "\x1b[31mFAIL\x1b[0m" if use_color else "FAIL"

    def check(self, name: str, fn):
        try:
            fn()
        except AssertionError as exc:
            self.failures += 1
            print(f"{self.bad_tag} {name}: {exc}")
        except Exception as exc:  # noqa: BLE001 - verification must report, not crash
            self.failures += 1
            print(f"{self.bad_tag} {name}: {type(exc).__name__}: {exc}")
        else:
            print(f"{self.ok_tag} {name}")


def _verify_padic(v: _Verifier):
    from heckeamp.lattices import enumerate_subgroups

    def deg_suite():
        for p in (2, 3, 5, 7, 11, 13):
            ctx = PrimeContext(p, 3, 2)
            assert hecke.degree(ctx, Cotype((1, 0, 0))) == p * p + p + 1
            assert hecke.degree(ctx, Cotype((1, 1, 0))) == p * p + p + 1
        assert hecke.degree(PrimeContext(5, 3, 1), Cotype((1, 0, 0))) == 31

    v.check("degree rank 3: p^2+p+1 for both fundamental cotypes", deg_suite)

    def enum_example():
        assert sum(1 for _ in enumerate_subgroups(PrimeContext(2, 3, 1), Cotype((1, 0, 0)))) == 7

    v.check("enumeration count at p=2 equals 7", enum_example)

    def dual_diag():
        from heckeamp.lattices import SubgroupHNF, dual_subgroup, cotype_of

        ctx = PrimeContext(3, 3, 2)
        for a in ((0, 0, 0), (1, 0, 0), (2, 1, 0), (2, 2, 1)):
            mat = [[0] * 3 for _ in range(3)]
            for i in range(3):
                mat[i][i] = 3 ** (2 - a[2 - i])
            L = SubgroupHNF(ctx, tuple(tuple(r) for r in mat))
            want = tuple(sorted(a, reverse=True))
            assert cotype_of(dual_subgroup(L)).exponents == want

    v.check("dual of a diagonal subgroup flips the exponents against N", dual_diag)

    def single_suite():
        for p in (2, 3, 5, 7, 11, 13):
            ctx = PrimeContext(p, 3, 2)
            assert hecke.torus_orbital_single(ctx, Cotype((1, 0, 0))) == 3
            assert hecke.torus_orbital_single(ctx, Cotype((1, 1, 0))) == 3

    v.check("single torus integral equals 3 for the fundamental cotypes", single_suite)

    def pair_suite():
        for p in (2, 3, 5, 7, 11, 13):
            ctx = PrimeContext(p, 3, 2)
            res = hecke.torus_orbital_pair(ctx, Cotype((1, 0, 0)), Cotype((1, 0, 0)))
            assert res.off_diagonal == 6 and res.total == p * p + p + 7
            res2 = hecke.torus_orbital_pair(ctx, Cotype((1, 0, 0)), Cotype((1, 1, 0)))
            assert res2.total == 3 * (p + 2)

    v.check("pair integrals: off-diagonal 6 and total 3(p+2)", pair_suite)

    def rank2_suite():
        for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31):
            ctx = PrimeContext(p, 2, 2)
            assert hecke.degree(ctx, Cotype((1, 0))) == p + 1
            res = hecke.torus_orbital_pair(ctx, Cotype((1, 0)), Cotype((1, 0)))
            assert res.total == p + 3 and res.off_diagonal == 2
            assert hecke.torus_orbital_single(ctx, Cotype((1, 0))) == 2
            comb = hecke.hall_coefficients(ctx, Cotype((1, 0)), Cotype((1, 0)))
            assert comb.coefficient((2, 0)) == 1
            assert comb.coefficient((0, 0)) == p + 1

    v.check("rank 2 suite: degree p+1, off-diagonal 2, product relation", rank2_suite)

    def adjoint_suite():
        assert hecke.adjoint_cotype(Cotype((1, 0))) == Cotype((1, 0))
        assert hecke.adjoint_cotype(Cotype((1, 0, 0))) == Cotype((1, 1, 0))
        for p in (2, 3, 5):
            ctx = PrimeContext(p, 3, 2)
            for a in ((1, 0, 0), (2, 1, 0), (2, 0, 0)):
                ca = Cotype(a)
                assert hecke.degree(ctx, hecke.adjoint_cotype(ca)) == hecke.degree(ctx, ca)

    v.check("adjoint cotypes: involution and degree preservation", adjoint_suite)

    def identity_suite():
        ctx = PrimeContext(7, 3, 2)
        assert hecke.convolution_at_identity(ctx, Cotype((1, 0, 0)), Cotype((1, 0, 0))) == 57
        assert hecke.convolution_at_identity(ctx, Cotype((1, 0, 0)), Cotype((1, 1, 0))) == 0

    v.check("convolution at the identity coset", identity_suite)

    def stat_suite():
        for p in (2, 3, 5, 7, 11, 13):
            ctx = PrimeContext(p, 3, 2)
            st = hecke.key_bound_statistic(ctx, Cotype((1, 0, 0)), Cotype((1, 0, 0)))
            assert st.square == Fraction(36 * p * p, (p * p + p + 1) ** 2)

    v.check("key-bound statistic closed form 6p/(p^2+p+1)", stat_suite)


def _verify_amplifier(v: _Verifier):
    def local_closed_form():
        for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
            lw = amp.local_weight(p, 1)
            a_p = Fraction(1, p)
            deg = p * p + p + 1
            assert lw.norm_sq == 2 * a_p**2 * deg
            assert lw.torus_term == 12 * a_p + (6 * p + 24) * a_p**2 + lw.norm_sq

    v.check("local torus term matches 12a_p + (6p+24)a_p^2 + |omega|^2", local_closed_form)

    def constants():
        assert amp.lower_bound_constant(1, 1) == 6
        assert amp.optimal_c() == (Fraction(1), Fraction(6))
        assert amp.upper_bound_envelope(30, 1).divisor_sum == Fraction(12, 5)

    v.check("resonator constants: maximum 6 at c=1; envelope 12/5", constants)

    def ratio_growth():
        vals = [
            amp.amplifier_ratio(amp.AmplifierConfig(c=1, c1=Fraction(4), M=M)).ratio
            for M in (10**2, 10**3, 10**4)
        ]
        assert vals[0] < vals[1] < vals[2]
        assert amp.amplifier_ratio(amp.AmplifierConfig(M=1)).ratio == 1

    v.check("ratio grows along M = 100, 1000, 10000 and is 1 at M=1", ratio_growth)


def _verify_archimedean(v: _Verifier):
    import numpy as np

    from heckeamp import archimedean as arc

    m2, m3 = arc.GroupModel(2), arc.GroupModel(3)
    rng = np.random.default_rng(2024)

    def unit_value():
        for model in (m2, m3):
            nu = model.to_a_vector(0.8 * np.arange(1, model.r + 1, dtype=float))
            res = arc.spherical_function(model, nu, np.eye(model.n))
            assert abs(res.value - 1) < 1e-8, abs(res.value - 1)

    v.check("spherical function equals 1 at the identity", unit_value)

    def weyl_invariance():
        for model, kr in ((m2, 64), (m3, 24)):
            quad = arc.QuadratureSpec(k_res=kr, a_res=8, max_refinements=3, tol=1e-8)
            for _ in range(3):
                g = arc.random_element(model, rng, spread=0.4)
                nu = model.to_a_vector(rng.standard_normal(model.r))
                base = arc.spherical_function(model, nu, g, quad).value
                perm = rng.permutation(model.n)
                other = arc.spherical_function(model, nu[perm], g, quad).value
                assert abs(base - other) < 1e-6, abs(base - other)
                k1, k2 = arc._random_so(model.n, rng), arc._random_so(model.n, rng)
                third = arc.spherical_function(model, nu, k1 @ g @ k2, quad).value
                assert abs(base - third) < 1e-6, abs(base - third)

    v.check("Weyl and bi-K invariance of the spherical function", weyl_invariance)

    def critical_n2():
        sols = arc.critical_set_solve(m2, [1.0], seed_count=16, rng=np.random.default_rng(5))
        assert sols, "no solutions"
        for k in sols:
            theta = math.atan2(k[0, 1], k[0, 0])
            assert abs(math.cos(2 * theta)) < 1e-6

    v.check("rank 1 critical set sits at the +-pi/4 rotations", critical_n2)

    def critical_n3():
        H0 = m3.to_a_vector(np.array([0.9, 0.35, -1.25]))
        sols = arc.critical_set_solve(m3, H0, seed_count=12, rng=np.random.default_rng(6))
        assert sols, "no solutions"
        assert arc.hessian_signature(m3, H0, sols[0]) == (1, 2, 2)
        assert arc.hessian_signature(m2, [1.0], arc.critical_set_solve(
            m2, [1.0], seed_count=8, rng=np.random.default_rng(7))[0]) == (0, 1, 1)

    v.check("rank 2 critical set nonempty with signatures (1,2,2)/(0,1,1)", critical_n3)

    def flat_points():
        H0 = m3.to_a_vector(np.array([1.3, 0.2, -1.5]))
        sols = arc.critical_set_solve(m3, H0, seed_count=8, rng=np.random.default_rng(8))
        res = arc.flat_critical_point(m3, H0, sols[0])
        assert res is not None and np.linalg.norm(res.u) < 1e-6
        assert res.hessian_eigenvalues.max() < 0

    v.check("height maximizer at the origin for critical rotations", flat_points)

    def j_weyl():
        quad = arc.QuadratureSpec(k_res=48, a_res=12, max_refinements=2, tol=1e-7)
        g = arc.random_element(m2, np.random.default_rng(9), spread=0.4)
        pt = arc.SpectralPoint(m2, [1.0], 5.0)
        ptw = arc.SpectralPoint(m2, [-1.0], 5.0)
        bump = arc.BumpFunction(0.6)
        a = arc.orbital_integral_J(m2, pt, g, bump, quad).value
        b = arc.orbital_integral_J(m2, ptw, g, bump, quad).value
        assert abs(a - b) < 1e-6, abs(a - b)

    v.check("double orbital average is Weyl invariant (rank 1)", j_weyl)


def cmd_verify(args) -> int:
    v = _Verifier()
    sections = args.sections.split(",") if args.sections else ["padic", "amplifier", "archimedean"]
    if "padic" in sections:
        _verify_padic(v)
    if "amplifier" in sections:
        _verify_amplifier(v)
    if "archimedean" in sections:
        _verify_archimedean(v)
    if v.failures:
        print(f"{v.failures} verification failure(s)")
        return 1
    print("all identities verified")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


class SystemExit2(SystemExit):
    def __init__(self, message: str):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heckeamp",
        description="Exact Hecke lattice counts, resonator ratios and "
        "spherical-function diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("pretty", "csv", "json"), default="pretty")
    common.add_argument("--output", default=None, help="write the table to a file")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")
    common.add_argument("--ceiling", type=int, default=DEFAULT_CEILING,
                        help="per-call subgroup enumeration ceiling")
    common.add_argument("--config", default=None, help="flat key=value defaults file")

    def add(name, fn, help_, parents=(common,)):
        p = sub.add_parser(name, parents=list(parents), help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("degree", cmd_degree, "double-coset degree of a cotype")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--cotype", type=_cotype_arg, required=True)

    p = add("orbital", cmd_orbital, "torus pair integral split")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--a", type=_cotype_arg, required=True)
    p.add_argument("--b", type=_cotype_arg, required=True)

    p = add("hall", cmd_hall, "structure constants of a double-coset product")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--a", type=_cotype_arg, required=True)
    p.add_argument("--b", type=_cotype_arg, required=True)

    p = add("bound-scan", cmd_bound_scan, "key-bound statistic sweep")
    p.add_argument("--p-list", type=_int_list, default=[2, 3, 5, 7, 11, 13])
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--max-entry", type=int, default=2)

    p = add("restricted-count", cmd_restricted_count,
            "cotype count under a containment restriction")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--cotype", type=_cotype_arg, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--mode", choices=("contained", "contains"), required=True)

    p = add("amp-ratio", cmd_amp_ratio, "exact resonator mass ratio")
    p.add_argument("--c", type=_fraction_arg, default=Fraction(1))
    p.add_argument("--c1", type=_fraction_arg, default=Fraction(4))
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--modulus", type=int, default=1)
    p.add_argument("--residues", type=_int_list, default=[])
    p.add_argument("--exclude", type=_int_list, default=[])
    p.add_argument("--cotype", type=_cotype_arg, default=Cotype((1, 0, 0)))

    p = add("amp-bounds", cmd_amp_bounds, "divisor-sum envelope at the primorial")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--weight", type=_fraction_arg, default=Fraction(1))

    add("optimal-c", cmd_optimal_c, "exact maximizer of the resonator exponent")

    numeric = argparse.ArgumentParser(add_help=False)
    numeric.add_argument("--k-res", type=int, default=16)
    numeric.add_argument("--a-res", type=int, default=8)
    numeric.add_argument("--refinements", type=int, default=3)
    numeric.add_argument("--tol", type=float, default=1e-6)
    numeric.add_argument("--radius", type=float, default=0.6)
    numeric.add_argument("--g", default=None, help="row-major matrix entries")
    numeric.add_argument("--g-seed", type=int, default=0)

    p = add("spherical", cmd_spherical, "spherical function value",
            parents=(common, numeric))
    p.add_argument("--n", type=int, choices=(2, 3), required=True)
    p.add_argument("--nu", type=_float_list, required=True)

    p = add("model-int", cmd_model_int, "bump-weighted diagonal average sweep",
            parents=(common, numeric))
    p.add_argument("--n", type=int, choices=(2, 3), required=True)
    p.add_argument("--h0", type=_float_list, required=True)
    p.add_argument("--t-list", type=_float_list, required=True)

    p = add("orbital-int", cmd_orbital_int, "double diagonal average around g",
            parents=(common, numeric))
    p.add_argument("--n", type=int, choices=(2, 3), required=True)
    p.add_argument("--h0", type=_float_list, required=True)
    p.add_argument("--t-list", type=_float_list, required=True)

    p = add("critical-set", cmd_critical_set, "stationary rotations of a direction",
            parents=(common, numeric))
    p.add_argument("--n", type=int, choices=(2, 3), required=True)
    p.add_argument("--h0", type=_float_list, required=True)
    p.add_argument("--seeds", type=int, default=24)

    p = add("verify", cmd_verify, "replay the pinned identity suite")
    p.add_argument("--sections", default=None,
                   help="comma list from padic,amplifier,archimedean")

    return parser


def _apply_config(args: argparse.Namespace, argv):
    """Config values fill in for flags not given on the command line;
    explicit flags always win."""
    if not getattr(args, "config", None):
        return
    explicit = {
        token.split("=", 1)[0].lstrip("-").replace("-", "_")
        for token in argv
        if token.startswith("--")
    }
    values = load_flat_config(args.config)
    for key, raw in values.items():
        if key in explicit or not hasattr(args, key):
            continue
        current = getattr(args, key)
        if isinstance(current, Cotype):
            setattr(args, key, _cotype_arg(raw))
        elif isinstance(current, Fraction):
            setattr(args, key, Fraction(raw))
        elif isinstance(current, bool):
            setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif isinstance(current, int):
            setattr(args, key, int(raw))
        elif isinstance(current, float):
            setattr(args, key, float(raw))
        elif isinstance(current, list):
            setattr(args, key, _int_list(raw))
        else:
            setattr(args, key, raw)


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, argv)
        _log_config(args)
        return args.func(args)
    except CapacityError as exc:
        print(f"capacity ceiling: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
