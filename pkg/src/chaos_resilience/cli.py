"""Command-line surface: profiles, certificate sweeps, empirical runs, checks.

Subcommands
-----------
profile    norm/support/diameter statistics of the input as JSON
certify    certificate rows over a radius range, CSV (default) or JSON
empirical  seeded Monte-Carlo resilience CDF as CSV
verify     self-validation suites (gamma, concentration, radius, decoupling)

Inputs come from exactly one source: ``--identity N``, ``--block n=.. w=..
d=.. [scale=..]``, ``--random d=.. n=.. [density=..] [seed=..]``, or
``--file tensor.json``.  Every command is deterministic given its flags and
seed, and floating output uses 17 significant digits.

Exit codes: 0 success / all checks pass, 2 usage, 3 input parse, 4 guard or
degeneracy refusal, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bounds, empirical, generators
from .errors import DegenerateChaosError, GuardExceededError, TensorFormatError
from .gamma import gamma_norm, gamma_oracle
from .io import float_repr, load_tensor, reports_to_csv
from .norms import matrix_profile, tensor_profile
from .tensor import CoeffTensor, sample_ensemble

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_GUARD = 4
EXIT_VERIFY_FAILED = 5

VERIFY_ORACLE_COORDINATE_BUDGET = 16  # stricter than the library oracle guard


def _parse_kv(tokens: list[str], allowed: dict[str, type], what: str) -> dict:
    out = {}
    for token in tokens:
        if "=" not in token:
            raise ValueError(f"{what}: expected key=value, got {token!r}")
        key, _, raw = token.partition("=")
        if key not in allowed:
            raise ValueError(f"{what}: unknown key {key!r} (allowed: {sorted(allowed)})")
        try:
            out[key] = allowed[key](raw)
        except ValueError as exc:
            raise ValueError(f"{what}: bad value for {key}: {raw!r}") from exc
    return out


def _add_input_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--identity", type=int, metavar="N",
                       help="identity matrix of size N")
    group.add_argument("--block", nargs="+", metavar="K=V",
                       help="block tensor: n=.. w=.. d=.. [scale=..]")
    group.add_argument("--random", nargs="+", metavar="K=V",
                       help="random sparse square tensor: d=.. n=.. [density=..] [seed=..]")
    group.add_argument("--file", metavar="PATH", help="tensor JSON file")


def _block_params(args) -> dict:
    params = _parse_kv(args.block, {"n": int, "w": int, "d": int, "scale": float}, "--block")
    for required in ("n", "w", "d"):
        if required not in params:
            raise ValueError(f"--block requires {required}=..")
    params.setdefault("scale", 1.0)
    return params


def build_input(args) -> CoeffTensor:
    if args.identity is not None:
        return generators.identity_matrix(args.identity)
    if args.block is not None:
        p = _block_params(args)
        return generators.block_tensor(p["n"], p["w"], p["d"], p["scale"])
    if args.random is not None:
        p = _parse_kv(args.random, {"d": int, "n": int, "density": float, "seed": int}, "--random")
        for required in ("d", "n"):
            if required not in p:
                raise ValueError(f"--random requires {required}=..")
        return generators.random_sparse(p["d"], p["n"], p.get("density", 0.5), p.get("seed", 0))
    return load_tensor(args.file)


def _parse_r_range(spec: str) -> list[int]:
    if ".." in spec:
        lo, _, hi = spec.partition("..")
        values = list(range(int(lo), int(hi) + 1))
    else:
        values = [int(spec)]
    if not values:
        raise ValueError(f"empty radius range {spec!r}")
    return values


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _constants_from(args) -> bounds.ConstantSet:
    return bounds.ConstantSet(
        c1=args.c1, c2=args.c2, c3=args.c3, c4=args.c4,
        c_sum=args.c_sum, c_exp=args.c_exp, theta=args.theta,
    )


def cmd_profile(args) -> int:
    f = build_input(args)
    if f.degree == 2:
        payload = matrix_profile(f).as_dict()
    else:
        frob, max_abs = tensor_profile(f)
        payload = {"degree": f.degree, "dims": list(f.dims),
                   "frobenius": frob, "max_abs": max_abs}
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_certify(args) -> int:
    consts = _constants_from(args)
    radii = _parse_r_range(args.r)
    if args.closed_form:
        if args.block is None:
            raise ValueError("--closed-form requires a --block input")
        p = _block_params(args)
        reports = [bounds.block_tensor_bound(p["n"], p["w"], p["d"], r, consts, p["scale"])
                   for r in radii]
    else:
        f = build_input(args)
        if args.quadratic:
            reports = [bounds.quadratic_bound(f, r, consts) for r in radii]
        elif f.degree == 2 and not args.multilinear:
            reports = [bounds.bilinear_bound(f, r, consts) for r in radii]
        else:
            reports = [bounds.multilinear_bound(f, r, consts) for r in radii]
    if args.format == "json":
        _emit(json.dumps([rep.to_json_dict() for rep in reports], indent=2) + "\n", args.out)
    else:
        _emit(reports_to_csv(reports), args.out)
    return EXIT_OK


def cmd_empirical(args) -> int:
    if args.trials <= 0:
        raise ValueError("--trials must be positive")
    f = build_input(args)
    r_max = args.r_max if args.r_max is not None else sum(f.dims)
    cdf = empirical.resilience_distribution(
        f, args.x, r_max=r_max, trials=args.trials, seed=args.seed,
        method=args.method, threads=args.threads,
    )
    _emit(cdf.to_csv(), args.out)
    return EXIT_OK


def _verify_gamma(f: CoeffTensor, lines: list[str]) -> bool:
    n_vars = (f.degree - 1) * f.dims[0]
    if n_vars > VERIFY_ORACLE_COORDINATE_BUDGET:
        raise GuardExceededError(
            f"gamma suite refuses (d-1)*n = {n_vars} > {VERIFY_ORACLE_COORDINATE_BUDGET}: "
            "the exhaustive derivative oracle enumerates 2^((d-1)n) sign assignments"
        )
    ok = True
    for i in range(1, f.degree + 1):
        for k in range(2, 2 * (f.degree - 1) + 1, 2):
            a = gamma_norm(f, i, k)
            b = gamma_oracle(f, i, k)
            rel = abs(a - b) / max(1.0, abs(a), abs(b))
            good = rel <= 1e-9
            ok &= good
            lines.append(
                f"{'PASS' if good else 'FAIL'} gamma i={i} k={k} "
                f"norm={float_repr(a)} oracle={float_repr(b)} rel={float_repr(rel)}"
            )
    return ok


def _verify_concentration(f: CoeffTensor, trials: int, seed: int, lines: list[str]) -> bool:
    rep = empirical.verify_concentration(f, 1, max(trials, 1000), seed)
    lines.append(
        f"PASS concentration freq_below_half={float_repr(rep.freq_below_half)} "
        f"stderr={float_repr(rep.freq_stderr)} (informational)"
    )
    ok = True
    if rep.dudley_mean is not None:
        margin = rep.dudley_ceiling + 4 * rep.dudley_stderr - rep.dudley_mean
        good = margin >= 0
        ok &= good
        lines.append(
            f"{'PASS' if good else 'FAIL'} dudley mean={float_repr(rep.dudley_mean)} "
            f"ceiling={float_repr(rep.dudley_ceiling)} margin={float_repr(margin)}"
        )
        lines.append(
            f"PASS smallball levy={float_repr(rep.levy_value)} "
            f"shape={float_repr(rep.bound_shape)} ratio={float_repr(rep.ratio)} (informational)"
        )
    return ok


def _verify_radius(f: CoeffTensor, trials: int, seed: int, lines: list[str]) -> bool:
    ok = True
    budget_vectors = [
        budgets
        for budgets in _budget_vectors(f.degree)
        if all(b <= n for b, n in zip(budgets, f.dims))
    ]
    for t in range(min(trials, 20)):
        ensemble = sample_ensemble(f.dims, seed, t)
        for budgets in budget_vectors:
            delta = empirical.delta_exhaustive(f, ensemble, budgets)
            radius = bounds.flip_radius_multilinear(f, ensemble, sum(budgets))
            good = delta <= radius + 1e-12 * max(1.0, radius)
            ok &= good
            if not good:
                lines.append(
                    f"FAIL radius trial={t} budgets={budgets} "
                    f"delta={float_repr(delta)} radius={float_repr(radius)}"
                )
    if ok:
        lines.append(
            f"PASS radius delta<=radius on {min(trials, 20)} ensembles x "
            f"{len(budget_vectors)} budget vectors"
        )
    return ok


def _budget_vectors(d: int):
    """All per-slot budget vectors with total flips 1 or 2."""
    out = []
    for total in (1, 2):
        def rec(prefix, remaining, slots_left):
            if slots_left == 0:
                if remaining == 0:
                    out.append(tuple(prefix))
                return
            for b in range(remaining + 1):
                rec(prefix + [b], remaining - b, slots_left - 1)
        rec([], total, d)
    return out


def _verify_decoupling(f: CoeffTensor, trials: int, seed: int, lines: list[str]) -> bool:
    if f.degree != 2 or f.dims[0] != f.dims[1]:
        raise ValueError("the decoupling suite needs a square degree-2 input")
    M, _ = bounds.quadratic_normalize(f, 0.0)
    if M.nnz == 0:
        raise DegenerateChaosError("input normalizes to zero; nothing to partition")
    part = empirical.find_decoupling_partition(M, seed)
    lines.append(
        f"PASS decoupling tries={part.tries} ratio={float_repr(part.ratio)} "
        f"(threshold 0.125)"
    )
    return True


def cmd_verify(args) -> int:
    f = build_input(args)
    lines: list[str] = []
    if args.suite == "gamma":
        ok = _verify_gamma(f, lines)
    elif args.suite == "concentration":
        ok = _verify_concentration(f, args.trials, args.seed, lines)
    elif args.suite == "radius":
        ok = _verify_radius(f, args.trials, args.seed, lines)
    else:
        ok = _verify_decoupling(f, args.trials, args.seed, lines)
    lines.append("ALL PASS" if ok else "FAILURES PRESENT")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def _default_threads() -> int:
    raw = os.environ.get("CHAOS_RESILIENCE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaos-resilience",
        description="Resilience certificates and desk-scale oracles for sign chaos.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_profile = sub.add_parser("profile", help="norm statistics as JSON")
    _add_input_options(p_profile)
    p_profile.add_argument("--out", help="write output to this path")
    p_profile.set_defaults(func=cmd_profile)

    p_certify = sub.add_parser("certify", help="certificate rows over a radius range")
    _add_input_options(p_certify)
    p_certify.add_argument("--r", required=True, metavar="LO..HI",
                           help="radius range, e.g. 1..8 or a single value")
    p_certify.add_argument("--quadratic", action="store_true",
                           help="coupled quadratic certificate (degree-2 input)")
    p_certify.add_argument("--multilinear", action="store_true",
                           help="force the multilinear certificate for degree-2 input")
    p_certify.add_argument("--closed-form", action="store_true",
                           help="block closed form, without materializing the tensor")
    for name in ("c1", "c2", "c3", "c4", "c-sum", "c-exp"):
        p_certify.add_argument(f"--{name}", type=float, default=1.0,
                               dest=name.replace("-", "_"))
    p_certify.add_argument("--theta", type=float, default=None,
                           help="exponent denominator; default: the degree")
    p_certify.add_argument("--format", choices=("csv", "json"), default="csv")
    p_certify.add_argument("--out", help="write output to this path")
    p_certify.set_defaults(func=cmd_certify)

    p_emp = sub.add_parser("empirical", help="Monte-Carlo resilience CDF as CSV")
    _add_input_options(p_emp)
    p_emp.add_argument("--x", type=float, required=True, help="target value")
    p_emp.add_argument("--trials", type=int, required=True)
    p_emp.add_argument("--seed", type=int, default=0)
    p_emp.add_argument("--r-max", type=int, default=None)
    p_emp.add_argument("--method", choices=("auto", "exhaustive-bfs", "meet-in-middle"),
                       default="auto")
    p_emp.add_argument("--threads", type=int, default=_default_threads())
    p_emp.add_argument("--out", help="write output to this path")
    p_emp.set_defaults(func=cmd_empirical)

    p_verify = sub.add_parser("verify", help="self-validation suites")
    _add_input_options(p_verify)
    p_verify.add_argument("--suite", required=True,
                          choices=("gamma", "concentration", "radius", "decoupling"))
    p_verify.add_argument("--trials", type=int, default=2000)
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--out", help="write output to this path")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except TensorFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (GuardExceededError, DegenerateChaosError) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
