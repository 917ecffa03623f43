"""Command line interface.

Subcommands: ``discretize``, ``benchmark``, ``montecarlo``,
``expected-cost``, ``solve``.  Models are JSON files; results go to
stdout or ``-o``.  Exit codes: 0 success, 2 bad usage/arguments,
3 invalid model data, 4 numerical failure (divergence, singular pivot,
non-convex stage), 5 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import statistics
import sys
import time

import numpy as np

from . import __version__
from .butcher import SCHEMES
from .doubling import discretize_step_doubling
from .errors import (
    ConvexityError,
    DivergenceError,
    LqdiscError,
    ResourceLimitError,
    SingularMatrixError,
    ValidationError,
)
from .expm_method import discretize_expm
from .lqsolve import solve_finite_horizon
from .model import (
    continuous_model_from_dict,
    discrete_model_to_dict,
)
from .ode_method import discretize_ode
from .stochastic import (
    cost_moments,
    em_reformulate,
    expected_cost,
    monte_carlo,
)

_PROG = "lqdisc"


class _UsageError(Exception):
    """Bad arguments or unreadable input file (exit code 2)."""


def _fail(message: str) -> None:
    print(f"{_PROG}: {message}", file=sys.stderr)


def _load_model(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read model file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"model file is not valid JSON: {exc}") from exc
    return continuous_model_from_dict(data)


def _parse_method(method: str):
    """Split a method string into (kind, scheme)."""
    if method == "expm":
        return "expm", None
    for prefix, kind in (("ode:", "ode"), ("sqr:", "sqr")):
        if method.startswith(prefix):
            scheme = method[len(prefix):]
            if scheme not in SCHEMES:
                raise _UsageError(
                    f"unknown scheme {scheme!r}; choose from "
                    + ", ".join(sorted(SCHEMES))
                )
            return kind, scheme
    raise _UsageError(
        f"unknown method {method!r}; expected 'expm', 'ode:<scheme>' or 'sqr:<scheme>'"
    )


def _doublings_for(n_steps: int) -> int:
    if n_steps < 1 or n_steps & (n_steps - 1):
        raise _UsageError(
            f"squaring method needs a power-of-two step count, got {n_steps}"
        )
    return n_steps.bit_length() - 1


def _run_method(model, method: str, n_steps: int):
    kind, scheme = _parse_method(method)
    if kind == "expm":
        return discretize_expm(model)
    if kind == "ode":
        return discretize_ode(model, scheme=scheme, n_steps=n_steps)
    return discretize_step_doubling(
        model, scheme=scheme, doublings=_doublings_for(n_steps)
    )


def _require_at_least(value: int, minimum: int, name: str) -> None:
    if value < minimum:
        raise _UsageError(f"{name} must be >= {minimum}, got {value}")


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_discretize(args) -> int:
    model = _load_model(args.model)
    if args.doubling is not None:
        _require_at_least(args.doubling, 0, "--doubling")
    steps = args.steps if args.doubling is None else 2 ** args.doubling
    _require_at_least(steps, 1, "--steps")
    disc = _run_method(model, args.method, steps)
    _emit(_json_text(discrete_model_to_dict(disc)), args.output)
    if args.output is not None:
        n_x, n_u = disc.b.shape
        print(
            f"wrote {args.output}: method={args.method} N={steps} "
            f"n_x={n_x} n_u={n_u} T_s={disc.t_s}"
        )
    return 0


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def _median_seconds(fn, reps: int, warmups: int = 2) -> float:
    for _ in range(warmups):
        fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _cmd_benchmark(args) -> int:
    model = _load_model(args.model)
    schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    for s in schemes:
        if s not in SCHEMES:
            raise _UsageError(
                f"unknown scheme {s!r}; choose from " + ", ".join(sorted(SCHEMES))
            )
    _require_at_least(args.max_exp, 0, "--max-exp")
    steps = [2 ** j for j in range(args.max_exp + 1)]
    reps = args.reps
    _require_at_least(reps, 1, "--reps")

    truth = discretize_expm(model)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["scheme", "method", "N", "e_A", "e_B", "e_Rww", "e_M", "e_Q",
         "cpu_seconds"]
    )

    def error_row(disc):
        return [
            repr(_max_abs(disc.a, truth.a)),
            repr(_max_abs(disc.b, truth.b)),
            repr(_max_abs(disc.r_ww, truth.r_ww)),
            repr(_max_abs(disc.m, truth.m)),
            repr(_max_abs(disc.q, truth.q)),
        ]

    expm_t = _median_seconds(lambda: discretize_expm(model), reps)
    writer.writerow(["expm", "expm", 1] + error_row(truth) + [repr(expm_t)])

    for scheme in schemes:
        for n in steps:
            doublings = _doublings_for(n)
            ode_disc = discretize_ode(model, scheme=scheme, n_steps=n)
            ode_t = _median_seconds(
                lambda: discretize_ode(model, scheme=scheme, n_steps=n), reps
            )
            writer.writerow(
                [scheme, "ode", n] + error_row(ode_disc) + [repr(ode_t)]
            )
            sqr_disc = discretize_step_doubling(
                model, scheme=scheme, doublings=doublings
            )
            sqr_t = _median_seconds(
                lambda: discretize_step_doubling(
                    model, scheme=scheme, doublings=doublings
                ),
                reps,
            )
            writer.writerow(
                [scheme, "sqr", n] + error_row(sqr_disc) + [repr(sqr_t)]
            )
    _emit(buf.getvalue(), args.output)
    return 0


def _resolve_workers(value: int | None) -> int:
    if value is not None:
        return value
    raw = os.environ.get("LQDISC_WORKERS", "1")
    try:
        return int(raw)
    except ValueError as exc:
        raise _UsageError(f"LQDISC_WORKERS must be an integer, got {raw!r}") from exc


def _histogram_csv(summary) -> str:
    """Histogram as CSV: one row per bin, one count column per stream."""
    hist = summary.histogram
    edges = hist["edges"]
    counts = hist["counts"]
    streams = sorted(counts)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_left", "bin_right"] + streams)
    for i in range(len(edges) - 1):
        writer.writerow(
            [repr(edges[i]), repr(edges[i + 1])]
            + [counts[name][i] for name in streams]
        )
    return buf.getvalue()


def _cmd_montecarlo(args) -> int:
    _require_at_least(args.sims, 1, "--sims")
    _require_at_least(args.subdiv, 1, "--subdiv")
    _require_at_least(args.bins, 1, "--bins")
    if args.workers is not None:
        _require_at_least(args.workers, 1, "--workers")
    model = _load_model(args.model)
    disc = discretize_expm(model)
    ref = em_reformulate(model, args.subdiv, dim_cap=args.dim_cap, disc=disc)
    summary = monte_carlo(
        model,
        disc,
        ref,
        n_sims=args.sims,
        seed=args.seed,
        workers=_resolve_workers(args.workers),
        n_bins=args.bins,
    )
    json_path = f"{args.output}.json"
    csv_path = f"{args.output}.csv"
    _emit(_json_text(summary.to_dict()), json_path)
    _emit(_histogram_csv(summary), csv_path)
    print(
        f"wrote {json_path} and {csv_path}: sims={summary.n_sims} "
        f"seed={summary.seed} analytic_mean={summary.analytic_mean!r}"
    )
    return 0


def _cmd_expected_cost(args) -> int:
    _require_at_least(args.quad_steps, 1, "--quad-steps")
    _require_at_least(args.subdiv, 1, "--subdiv")
    model = _load_model(args.model)
    disc = discretize_expm(model)
    values = {
        route: expected_cost(
            model,
            disc,
            trace_route=route,
            quad_steps=args.quad_steps,
            n_sub=args.subdiv,
        )
        for route in ("ode", "em")
    }
    _emit(_json_text({"expected_cost": values}), args.output)
    return 0


def _cmd_solve(args) -> int:
    _require_at_least(args.steps, 1, "--steps")
    model = _load_model(args.model)
    disc = _run_method(model, args.method, args.steps)
    sol = solve_finite_horizon(disc, model.x0_mean)
    n_x = sol.states.shape[1]
    n_u = sol.inputs.shape[1]
    horizon = sol.inputs.shape[0]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["k"]
        + [f"x{i}" for i in range(n_x)]
        + [f"u{i}" for i in range(n_u)]
    )
    for k in range(horizon + 1):
        row = [k] + [repr(float(v)) for v in sol.states[k]]
        if k < horizon:
            row += [repr(float(v)) for v in sol.inputs[k]]
        else:
            row += [""] * n_u
        writer.writerow(row)
    _emit(buf.getvalue(), args.output)
    if args.output is not None:
        print(f"wrote {args.output}: value={sol.value!r}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=_PROG,
        description="Exact discrete equivalents of sampled linear-quadratic "
        "tracking problems.",
    )
    parser.add_argument("--version", action="version", version=f"{_PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discretize", help="discretize a continuous model")
    p.add_argument("model", help="path to a continuous model JSON file")
    p.add_argument("--method", default="expm",
                   help="expm, ode:<scheme> or sqr:<scheme>")
    p.add_argument("--steps", type=int, default=256,
                   help="sub-steps per interval (power of two for sqr)")
    p.add_argument("--doubling", type=int, default=None, metavar="J",
                   help="shortcut for --steps 2**J")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_discretize)

    p = sub.add_parser("benchmark",
                       help="accuracy/time grid against the closed-form result")
    p.add_argument("model")
    p.add_argument("--schemes", default=",".join(sorted(SCHEMES)),
                   help="comma separated scheme names")
    p.add_argument("--max-exp", type=int, default=8, dest="max_exp",
                   metavar="J", help="run N = 2^0 .. 2^J sub-steps")
    p.add_argument("--reps", type=int, default=9,
                   help="timing repetitions (median is reported)")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("montecarlo", help="sample the stochastic cost")
    p.add_argument("model")
    p.add_argument("--sims", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subdiv", type=int, default=256,
                   help="noise refinement sub-steps per interval")
    p.add_argument("--workers", type=int, default=None,
                   help="thread count (default: LQDISC_WORKERS or 1)")
    p.add_argument("--bins", type=int, default=60)
    p.add_argument("--dim-cap", type=int, default=4096, dest="dim_cap")
    p.add_argument("-o", "--output", default="mc",
                   help="output prefix; writes <prefix>.json and <prefix>.csv")
    p.set_defaults(func=_cmd_montecarlo)

    p = sub.add_parser("expected-cost",
                       help="closed-form expected total cost (both noise-"
                       "integral routes)")
    p.add_argument("model")
    p.add_argument("--quad-steps", type=int, default=256, dest="quad_steps")
    p.add_argument("--subdiv", type=int, default=256)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_expected_cost)

    p = sub.add_parser("solve", help="finite-horizon optimal inputs and value")
    p.add_argument("model")
    p.add_argument("--method", default="expm")
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_solve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        _fail(str(exc))
        return 2
    except ValidationError as exc:
        _fail(str(exc))
        return 3
    except (DivergenceError, SingularMatrixError, ConvexityError) as exc:
        _fail(str(exc))
        return 4
    except ResourceLimitError as exc:
        _fail(str(exc))
        return 5
    except LqdiscError as exc:      # any other library failure
        _fail(str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
