"""Command-line front end: ``lightcone analyze | check | export``.

Reports are JSON documents.  Every numeric result is stored next to its
sample size, seed and tolerance so that a run can be reproduced.  Exit codes:
0 when every verdict passes, 1 on the first failing verdict, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import __version__
from . import atlas as A
from . import catalogue as C
from . import core
from . import inequalities as I
from . import legendre as Lg
from .autodiff import DomainError
from .expr import ExpressionError, validate_homogeneity

SEED_ENV = "LIGHTCONE_SEED"
PROPERTIES = ("euler", "cones", "convexity", "cs", "triangle", "legendre", "hamiltonian", "dualnorm",
              "borsuk")

EULER_FAIL = 0.1  # residual (ii) above this flags a non-Finsler metric field
EULER_PASS = 1e-6  # finite-difference noise floor for genuine Lagrangians
ROUND_TRIP_TOL = 1e-8
HAMILTONIAN_TOL = 1e-9
DUAL_HESSIAN_TOL = 1e-5
DUAL_NORM_GAP = 0.01
SOLVER_TOL = 1e-8
TRIVIAL_TOL = 1e-10


class InputError(Exception):
    """Bad command-line input (exit code 2)."""


@dataclass
class Context:
    name: str
    source: object  # LagrangianSpec or HopfMetricField
    entry: Optional[C.CatalogueEntry]
    seed: int = 0
    samples: Optional[int] = None
    pairs: int = 10_000
    chords: int = 10_000
    dual_samples: int = 100_000
    points: int = 20

    @property
    def spec(self) -> core.LagrangianSpec:
        return self.source

    @property
    def is_field(self) -> bool:
        return isinstance(self.source, core.HopfMetricField)

    def expected(self, key):
        if self.entry is None or key not in self.entry.expected:
            return None
        return self.entry.expected[key].value

    @cached_property
    def validity(self) -> core.ValidityVerdict:
        return core.beem_validity_scan(self.spec, samples=4000, seed=self.seed)

    @cached_property
    def atlases(self):
        coarse, fine = A.sample_pair(self.source.dimension, self.samples, self.seed)
        return A.build_atlas(self.spec, coarse), A.build_atlas(self.spec, fine)

    @property
    def atlas(self) -> A.ConeAtlas:
        return self.atlases[0]

    @property
    def cones(self) -> list:
        if self.is_field:
            return []
        return [c.id for c in self.atlas.of_class(A.TIMELIKE_REGION)]


# helpers ------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else str(x)
    return x


def _timelike_vectors(spec, count, seed, cone=None, atlas=None, depth=0.25):
    """Random timelike vectors (log-uniform radii), optionally from one cone.

    Directions satisfy ``-2L(u) >= depth |u|^2``: near the null boundary the
    sampled dual-norm infimum converges much more slowly.
    """
    rng = np.random.default_rng(seed)
    out = []
    while sum(len(o) for o in out) < count:
        U = core.random_directions(spec.dimension, 4 * count, int(rng.integers(2**31)))
        ok, L = core.evaluate_many(spec, U, order=0)
        keep = ok & (-2 * L >= depth)
        if cone is not None:
            keep &= atlas.locate_many(U) == cone
        out.append(U[keep])
    U = np.concatenate(out)[:count]
    return U * np.exp(rng.uniform(np.log(0.1), np.log(10.0), count))[:, None]


def _not_applicable(reason):
    return {"applicable": False, "reason": reason, "passed": True, "verdict": "NOT_APPLICABLE"}


# property suites ------------------------------------------------------------------


def check_validity(ctx: Context) -> dict:
    if ctx.is_field:
        U = core.random_directions(4, 1000, ctx.seed)
        g = ctx.source.metric(U)
        quad = np.einsum("ni,nij,nj->n", U, g, U)
        return {"verdict": C.NON_FINSLER, "samples": 1000, "seed": ctx.seed,
                "quadratic_form_min": float(quad.min()),
                "quadratic_equals_norm2": float(np.max(np.abs(quad - 1))),
                "passed": False}
    v = ctx.validity
    return {"verdict": v.kind, "samples": v.samples, "seed": ctx.seed,
            "witness": v.witness, "detail": v.detail, "passed": v.valid}


def check_euler(ctx: Context) -> dict:
    rng = np.random.default_rng(ctx.seed)
    dim = ctx.source.dimension
    res, skipped = [], 0
    for v in core.random_directions(dim, 100, int(rng.integers(2**31))):
        try:
            res.append(core.euler_residuals(ctx.source, v))
        except DomainError:
            skipped += 1
    if not res:
        return {"verdict": "UNDETERMINED", "samples": 0, "skipped": skipped, "passed": False}
    res = np.array(res)
    worst = res.max(axis=0)
    if worst[1] > EULER_FAIL:
        verdict = C.NON_FINSLER
    elif worst.max() < EULER_PASS:
        verdict = "FINSLER"
    else:
        verdict = "UNDETERMINED"
    return {"verdict": verdict, "samples": len(res), "skipped": skipped, "seed": ctx.seed,
            "max_residual_gradient": worst[0], "max_residual_contracted_index": worst[1],
            "max_residual_contracted_direction": worst[2],
            "min_residual_contracted_index": res[:, 1].min(),
            "tolerance": {"finsler_below": EULER_PASS, "non_finsler_above": EULER_FAIL},
            "passed": verdict == "FINSLER"}


def check_cones(ctx: Context) -> dict:
    if ctx.is_field:
        return {"timelike_components": 0, "reason": "g_v(v, v) = |v|^2 > 0", "passed": False}
    coarse, fine = ctx.atlases
    c1, c2 = coarse.counts(), fine.counts()
    sharp = A.sharpness_check(coarse)
    out = {"samples": [len(coarse.sample), len(fine.sample)], "seed": ctx.seed,
           "strategy": coarse.sample.strategy, "counts": c1, "counts_fine": c2,
           "resolutions_agree": c1 == c2,
           "holes": int(np.sum(coarse.labels == core.HOLE)),
           "opposites": {c.id: c.opposite for c in coarse.of_class(A.TIMELIKE_REGION)},
           "sharp": sharp.passed}
    expected = {k: ctx.expected(f"{k}_components") for k in ("timelike", "null", "spacelike")}
    got = {"timelike": c1[A.TIMELIKE_REGION], "null": c1[A.NULL_SHELL],
           "spacelike": c1[A.SPACELIKE_REGION]}
    mismatch = {k: (got[k], e) for k, e in expected.items() if e is not None and got[k] != e}
    out["expected_mismatch"] = mismatch
    passed = c1 == c2 and not mismatch and ctx.validity.valid
    if ctx.validity.valid and ctx.source.dimension >= 3:
        passed &= got["timelike"] == 2 and sharp.passed
    out["passed"] = bool(passed)
    return out


def check_convexity(ctx: Context) -> dict:
    if not ctx.cones:
        return _not_applicable("no timelike component")
    certs = {}
    passed = True
    for cid in ctx.cones:
        for level in (1.0, 0.0):
            cert = A.convexity_certificate(ctx.spec, ctx.atlas, cid, level, chords=ctx.chords,
                                           seed=ctx.seed)
            certs[f"component_{cid}_level_{level:g}"] = cert.__dict__
            passed &= cert.passed
    return {"chords": ctx.chords, "seed": ctx.seed, "certificates": certs, "passed": bool(passed)}


def _inequality(ctx: Context, which: str) -> dict:
    if not ctx.cones:
        return _not_applicable("no timelike component")
    out = {"pairs": ctx.pairs, "seed": ctx.seed, "tolerance": I.MARGIN_TOL,
           "equality_angle": I.EQUALITY_ANGLE, "components": {}}
    passed = True
    for cid in ctx.cones:
        scan = I.inequality_scan(ctx.spec, ctx.atlas, cid, ctx.pairs, ctx.seed)
        margin = scan.min_cs_margin if which == "cs" else scan.min_triangle_margin
        ok = margin >= -I.MARGIN_TOL and scan.improper_equalities == 0
        out["components"][cid] = {"min_margin": margin, "equality_cases": scan.equality_cases,
                                  "proportional_pairs": scan.proportional_pairs,
                                  "improper_equalities": scan.improper_equalities, "passed": ok}
        passed &= ok
    out["passed"] = bool(passed)
    return out


def check_cs(ctx):
    return _inequality(ctx, "cs")


def check_triangle(ctx):
    return _inequality(ctx, "triangle")


def check_legendre(ctx: Context) -> dict:
    if ctx.is_field:
        return _not_applicable("a metric field has no Legendre map")
    n = 1000
    rng = np.random.default_rng(ctx.seed)
    U = core.random_directions(ctx.spec.dimension, 4 * n, int(rng.integers(2**31)))
    U = U[core.in_domain(ctx.spec, U)][:n]
    V = U * np.exp(rng.uniform(np.log(0.1), np.log(10.0), len(U)))[:, None]
    ok, P = Lg.legendre_many(ctx.spec, V)
    V, P = V[ok], P[ok]
    W, rn = Lg.legendre_inverse_many(ctx.spec, P)
    err = np.linalg.norm(W - V, axis=1) / np.linalg.norm(V, axis=1)
    worst = float(err.max()) if len(err) else float("nan")
    return {"round_trips": len(V), "seed": ctx.seed, "max_relative_error": worst,
            "max_residual": float(rn.max()) if len(rn) else float("nan"),
            "tolerance": ROUND_TRIP_TOL, "nonunique_possible": ctx.spec.dimension == 2,
            "passed": bool(len(V) and worst < ROUND_TRIP_TOL)}


def check_hamiltonian(ctx: Context) -> dict:
    if ctx.is_field:
        return _not_applicable("a metric field has no Hamiltonian")
    rng = np.random.default_rng(ctx.seed)
    U = core.random_directions(ctx.spec.dimension, 400, int(rng.integers(2**31)))
    U = U[core.in_domain(ctx.spec, U)][:100]
    ok, L, P, _ = core.evaluate_many(ctx.spec, U)
    H, conv = Lg.hamiltonian_many(ctx.spec, P[ok])
    scale = np.maximum(1.0, np.abs(L[ok]))
    pullback = float(np.max(np.abs(H - L[ok]) / scale))
    out = {"pullback_samples": int(ok.sum()), "seed": ctx.seed, "pullback_max_error": pullback,
           "pullback_tolerance": HAMILTONIAN_TOL, "converged": int(conv.sum())}
    passed = pullback < HAMILTONIAN_TOL and conv.all()
    if ctx.cones:
        T = _timelike_vectors(ctx.spec, ctx.points, ctx.seed + 1)
        devs = []
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", Lg.NonUniqueWarning)
            for v in T:
                devs.append(Lg.dual_hessian_check(ctx.spec, Lg.legendre(ctx.spec, v)).error)
        out.update(dual_hessian_points=len(devs), dual_hessian_max_deviation=max(devs),
                   dual_hessian_tolerance=DUAL_HESSIAN_TOL)
        passed &= max(devs) < DUAL_HESSIAN_TOL
    out["passed"] = bool(passed)
    return out


def check_dualnorm(ctx: Context) -> dict:
    if not ctx.cones:
        return _not_applicable("no timelike component")
    cid = ctx.cones[0]
    T = _timelike_vectors(ctx.spec, ctx.points, ctx.seed + 2, cid, ctx.atlas)
    _, P = Lg.legendre_many(ctx.spec, T)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", Lg.NonUniqueWarning)
        res = Lg.dual_norm_many(ctx.spec, ctx.atlas, P, ctx.dual_samples, ctx.seed, cid)
    gaps = np.array([r.relative_gap for r in res])
    return {"points": len(res), "samples": ctx.dual_samples, "seed": ctx.seed, "component": cid,
            "max_relative_gap": gaps.max(), "min_relative_gap": gaps.min(),
            "tolerance": DUAL_NORM_GAP,
            "passed": bool(gaps.min() >= -1e-9 and gaps.max() <= DUAL_NORM_GAP)}


def check_borsuk(ctx: Context) -> dict:
    if ctx.is_field:
        return _not_applicable("a metric field has no Legendre map")
    spec = ctx.spec
    if spec.dimension < 3:
        return _not_applicable("the antipodal solvers need dimension >= 3")
    if spec.domain is not None:
        return _not_applicable("the solvers need v and -v both in the domain")
    rng = np.random.default_rng(ctx.seed)
    trivial = spec.reversible is True
    tol = TRIVIAL_TOL if trivial else SOLVER_TOL
    out = {"seed": ctx.seed, "tolerance": tol, "reversible": spec.reversible}
    passed = True
    try:
        pairs = []
        for w in rng.normal(size=(3, spec.dimension)):
            pair = Lg.antipodal_momentum_pair(spec, w)
            sub = np.linalg.norm(Lg.legendre(spec, pair.v1) + Lg.legendre(spec, pair.v2))
            sub /= np.linalg.norm(Lg.legendre(spec, w))
            gap = np.linalg.norm(pair.v2 - pair.v1 - 2 * w)
            dist = np.linalg.norm(pair.v1 + w) if trivial else 0.0
            pairs.append({"w": w, "v1": pair.v1, "v2": pair.v2, "substitution": sub,
                          "difference_error": gap, "distance_from_trivial": dist})
            passed &= sub < tol and gap < tol and dist < tol
        sols = []
        for q in rng.normal(size=(3, spec.dimension)):
            sol = Lg.symmetrized_legendre_solve(spec, q)
            v = sol.v
            sub = np.linalg.norm((Lg.legendre(spec, v) - Lg.legendre(spec, -v)) / 2 - q)
            sub /= np.linalg.norm(q)
            sols.append({"q": q, "v": v, "substitution": sub})
            passed &= sub < tol
        ray = Lg.antisymmetry_ray(spec, seed=ctx.seed)
        sub = np.linalg.norm(Lg.legendre(spec, -ray.v) + ray.s * Lg.legendre(spec, ray.v))
        ray_ok = sub < tol and ray.s > 0 and (not trivial or abs(ray.s - 1) < TRIVIAL_TOL)
        passed &= ray_ok
        out.update(antipodal_pairs=pairs, symmetrized=sols,
                   antisymmetry={"v": ray.v, "s": ray.s, "substitution": sub})
    except (Lg.ConvergenceError, DomainError) as exc:
        out["error"] = str(exc)
        passed = False
    out["passed"] = bool(passed)
    return out


SUITES: dict[str, Callable[[Context], dict]] = {
    "euler": check_euler,
    "cones": check_cones,
    "convexity": check_convexity,
    "cs": check_cs,
    "triangle": check_triangle,
    "legendre": check_legendre,
    "hamiltonian": check_hamiltonian,
    "dualnorm": check_dualnorm,
    "borsuk": check_borsuk,
}


# reports ----------------------------------------------------------------------------


def spec_echo(ctx: Context) -> dict:
    src = ctx.source
    out = {"name": ctx.name, "dimension": src.dimension}
    if ctx.is_field:
        out["kind"] = "metric_field"
        return out
    out.update(kind=src.kind, text=src.text(), parameters=dict(src.params),
               reversible=src.reversible)
    if src.domain is not None:
        out["domain"] = src.domain.text()
    if ctx.entry is not None:
        out["expected"] = {k: {"value": e.value, "provenance": e.provenance, "note": e.note}
                           for k, e in ctx.entry.expected.items()}
    return out


def run(ctx: Context, properties, deterministic: bool = False) -> dict:
    report = {"tool": "lightcone", "version": __version__, "spec": spec_echo(ctx),
              "seed": ctx.seed, "checks": {}}
    if not deterministic:
        report["generated"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    report["checks"]["validity"] = check_validity(ctx)
    skip_invalid = not ctx.is_field and not ctx.validity.valid
    for prop in properties:
        if skip_invalid and prop not in ("euler", "cones"):
            report["checks"][prop] = _not_applicable("spec is not Lorentz-Finsler")
            continue
        report["checks"][prop] = SUITES[prop](ctx)
    failing = [k for k, v in report["checks"].items() if not v["passed"]]
    report["passed"] = not failing
    report["first_failure"] = failing[0] if failing else None
    return _jsonable(report)


# argument handling ---------------------------------------------------------------------


def _parse_params(text: Optional[str]) -> dict:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"parameter {item!r} is not of the form name=value")
        try:
            out[key.strip()] = float(value)
        except ValueError:
            raise InputError(f"parameter {key.strip()!r} has non-numeric value {value!r}") from None
    return out


def build_context(args) -> Context:
    params = _parse_params(args.params)
    if args.alpha is not None:
        params["alpha"] = args.alpha
    name = args.builtin or args.spec
    if args.expr:
        if name:
            raise InputError("give either a catalogue name or --expr, not both")
        if not args.dim:
            raise InputError("--expr needs --dim")
        spec = core.from_expression(args.expr, args.dim, params or None, args.domain,
                                    name=args.name or "")
        verdict = validate_homogeneity(spec.ast, domain=spec.domain)
        if not verdict.passed:
            raise InputError(f"expression is not 2-homogeneous (residual {verdict.residual:.3g})")
        entry = None
        label = spec.label()
    else:
        if not name:
            raise InputError("give a catalogue name (positional or --builtin) or --expr")
        try:
            entry = C.get(name)
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
        spec = entry.source
        if params:
            if entry.is_metric_field:
                raise InputError(f"{name} takes no parameters")
            unknown = set(params) - set(spec.p)
            if unknown:
                raise InputError(f"{name} has no parameter(s) {', '.join(sorted(unknown))}")
            spec = spec.with_params(**params)
            entry = None  # expected verdicts belong to the default parameters
        if args.dim and args.dim != spec.dimension:
            raise InputError(f"{name} has dimension {spec.dimension}")
        label = name
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env else 0
        except ValueError:
            raise InputError(f"{SEED_ENV} must be an integer") from None
    ctx = Context(label, spec, entry, seed=seed, samples=args.samples)
    for attr in ("pairs", "chords", "dual_samples", "points"):
        value = getattr(args, attr, None)
        if value is not None:
            if value < 1:
                raise InputError(f"--{attr.replace('_', '-')} must be positive")
            setattr(ctx, attr, value)
    if args.samples is not None and args.samples < 8:
        raise InputError("--samples must be at least 8")
    return ctx


def _add_spec_arguments(p):
    p.add_argument("spec", nargs="?", help=f"catalogue name ({', '.join(C.NAMES)})")
    p.add_argument("--builtin", choices=C.NAMES, help="catalogue name")
    p.add_argument("--expr", help="Lagrangian expression in v0..vn")
    p.add_argument("--dim", type=int, help="dimension n+1 for --expr")
    p.add_argument("--domain", help="expression that must be positive where L is defined")
    p.add_argument("--name", help="label for an --expr spec")
    p.add_argument("--params", help="comma-separated name=value pairs")
    p.add_argument("--alpha", type=float, help="shorthand for --params alpha=...")
    p.add_argument("--samples", type=int, help="sphere samples at the coarse resolution")
    p.add_argument("--seed", type=int, help=f"random seed (default ${SEED_ENV} or 0)")


def _add_run_arguments(p):
    p.add_argument("--pairs", type=int, help="pairs for the inequality scans")
    p.add_argument("--chords", type=int, help="chords per convexity certificate")
    p.add_argument("--dual-samples", type=int, help="directions for the dual-norm infimum")
    p.add_argument("--points", type=int, help="covectors for the dual checks")
    p.add_argument("--deterministic", action="store_true", help="omit the timestamp")
    p.add_argument("--out", help="write the report here instead of stdout")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lightcone",
                                     description="Light cones of Lorentz-Finsler Lagrangians.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    analyze = sub.add_parser("analyze", help="run the full pipeline")
    _add_spec_arguments(analyze)
    _add_run_arguments(analyze)
    check = sub.add_parser("check", help="run one property suite")
    _add_spec_arguments(check)
    _add_run_arguments(check)
    check.add_argument("--property", required=True, choices=PROPERTIES + ("all",))
    export = sub.add_parser("export", help="write labelled sphere samples as CSV")
    _add_spec_arguments(export)
    export.add_argument("--level", type=float, help="also write points of the level set 2L = -c^2")
    export.add_argument("--out", required=True, help="CSV path")
    return parser


def _emit(report: dict, out: Optional[str]):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        try:
            ctx = build_context(args)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        if args.command == "export":
            if ctx.is_field:
                raise InputError("a metric field has no Lagrangian to sample")
            if args.level is not None and args.level <= 0:
                raise InputError("--level must be positive")
            coarse = A.sample_sphere(ctx.spec.dimension,
                                     ctx.samples or A.default_count(ctx.spec.dimension),
                                     seed=ctx.seed)
            atlas = A.build_atlas(ctx.spec, coarse)
            A.export_csv(atlas, args.out, level=args.level)
            print(f"wrote {len(coarse)} samples to {args.out}", file=sys.stderr)
            return 0
        if args.command == "analyze":
            props = list(PROPERTIES)
        else:
            props = list(PROPERTIES) if args.property == "all" else [args.property]
        report = run(ctx, props, deterministic=args.deterministic)
        _emit(report, args.out)
    except (InputError, ExpressionError) as exc:
        print(f"lightcone: input error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lightcone: {exc}", file=sys.stderr)
        return 2
    if not report["passed"]:
        failing = report["first_failure"]
        verdict = report["checks"][failing].get("verdict", "FAILED")
        print(f"lightcone: {failing}: {verdict}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
