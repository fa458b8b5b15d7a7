"""Command-line surface: simulate, fit, compare, moments, diagnose.

Exit codes: 0 success, 2 usage or parameter-validation errors, 3 data
errors, 4 numerical errors. Failures print a machine-readable error JSON
to standard output before exiting.
"""

from __future__ import annotations

import argparse
import secrets
import sys
import time

import numpy as np

from . import dataio
from .diagnostics import chain_diagnostics, model_score
from .distribution import GlkParams, GpParams, glk_moments, gp_moments
from .errors import (
    ConfigurationError,
    DataError,
    DiagnosticsError,
    DomainError,
    GlkInarError,
    InitializationError,
    NumericalError,
)
from .inference import AmcmcConfig, PriorSpec, amcmc_run
from .process import (
    CountSeries,
    InarModel,
    Variant,
    simulate,
    stationary_moments,
)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

_SEED_OFFSET = 1000  # per-model seed spacing used by `compare`


def _resolve_seed(args) -> int:
    if getattr(args, "ci", False) and args.seed is None:
        raise ConfigurationError("--ci requires an explicit --seed")
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(32)
    print(f"auto-selected seed: {seed}", file=sys.stderr)
    return seed


def _innovation_from_args(args, variant: Variant):
    def need(name):
        value = getattr(args, name.replace("-", "_"))
        if value is None:
            raise ConfigurationError(f"--{name} is required for model {variant.value}")
        return value

    if variant is Variant.GP:
        return GpParams(theta=need("gp-theta"), lam=need("gp-lambda"))
    if variant is Variant.NB:
        if args.b not in (None, 0.0):
            raise ConfigurationError("model nb fixes b = 0; do not pass --b")
        return GlkParams(a=need("a"), b=0.0, c=need("c"), beta=need("beta"))
    if variant is Variant.LK:
        if args.c is not None and args.c != args.beta:
            raise ConfigurationError("model lk ties c = beta; do not pass --c")
        return GlkParams(a=need("a"), b=need("b"), c=need("beta"), beta=need("beta"))
    return GlkParams(a=need("a"), b=need("b"), c=need("c"), beta=need("beta"))


def _moments_payload(model: InarModel, lags) -> dict:
    if isinstance(model.innovation, GlkParams):
        m = glk_moments(model.innovation)
        innovation = {
            "mean": m.mean, "variance": m.variance, "vmr": m.vmr, "cv": m.cv,
            "skewness": m.skewness, "kurtosis": m.kurtosis,
        }
    else:
        mean, var = gp_moments(model.innovation)
        innovation = {"mean": mean, "variance": var, "vmr": var / mean,
                      "cv": var ** 0.5 / mean}
    sm = stationary_moments(model, max_order=2)
    process = {
        "mean": sm.mean, "variance": sm.variance, "vmr": sm.vmr,
        "autocovariance": {str(k): sm.autocovariance(k) for k in lags},
    }
    return {"innovation": innovation, "process": process}


def _prior_from_args(args) -> PriorSpec:
    kwargs = {}
    if args.prior_alpha:
        kwargs["alpha_shape1"], kwargs["alpha_shape2"] = args.prior_alpha
    if args.prior_a:
        kwargs["a_shape"], kwargs["a_scale"] = args.prior_a
    if args.prior_b:
        kwargs["b_shape"], kwargs["b_scale"] = args.prior_b
    if args.prior_c:
        kwargs["c_shape"], kwargs["c_scale"] = args.prior_c
    if args.prior_beta:
        kwargs["beta_shape1"], kwargs["beta_shape2"] = args.prior_beta
    return PriorSpec(**kwargs)


def _parse_lags(text: str):
    try:
        lags = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigurationError(f"bad lag list {text!r}")
    if any(l < 0 for l in lags):
        raise ConfigurationError("lags must be nonnegative")
    return lags


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    if args.length < 1:
        raise ConfigurationError("--length must be positive")
    variant = Variant(args.variant)
    model = InarModel(alpha=args.alpha, innovation=_innovation_from_args(args, variant),
                      variant=variant)
    seed = _resolve_seed(args)
    rng = np.random.default_rng(seed)
    series = simulate(model, args.length, rng, initial=args.initial,
                      warmup=args.warmup)
    dataio.write_count_series(series, args.out)
    payload = _moments_payload(model, lags=(0, 1))
    payload["run"] = {"seed": seed, "length": args.length, "out": str(args.out)}
    sys.stdout.write(dataio.json_dumps(payload))
    return 0


def _fit_one(data: CountSeries, variant: Variant, prior: PriorSpec,
             args, seed: int):
    config = AmcmcConfig(iterations=args.iterations, burnin=args.burnin,
                         thin=args.thin, seed=seed,
                         gamma_exponent=args.gamma_exponent)
    started = time.perf_counter()
    draws = amcmc_run(data, prior, variant, config)
    scores = model_score(draws, data, prior)
    wall = time.perf_counter() - started
    diagnostics = chain_diagnostics(draws.draws, draws.parameter_names,
                                    lags=(1, 5, 10),
                                    acceptance_rate=draws.acceptance_rate)
    return draws, diagnostics, scores, wall


def cmd_fit(args) -> int:
    data = dataio.read_count_series(args.input)
    digest = dataio.sha256_digest(args.input)
    variant = Variant(args.model)
    prior = _prior_from_args(args)
    seed = _resolve_seed(args)
    draws, diagnostics, scores, wall = _fit_one(data, variant, prior, args, seed)
    report = dataio.build_fit_report(
        draws, diagnostics, scores, digest,
        wall_clock=None if args.ci else wall)
    dataio.write_json(report.to_dict(), args.out)
    if args.chain_out:
        dataio.write_chain_csv(draws.raw_chain, draws.parameter_names,
                               args.chain_out)
    sys.stdout.write(dataio.json_dumps(
        {"out": str(args.out), "model": variant.value,
         "acceptance_rate": draws.acceptance_rate, "dic": scores.dic}))
    return 0


def cmd_compare(args) -> int:
    tags = [t.strip() for t in args.models.split(",") if t.strip()]
    if not tags:
        raise ConfigurationError("--models must name at least one model")
    if len(set(tags)) != len(tags):
        raise ConfigurationError("duplicate model tags")
    try:
        variants = [Variant(tag) for tag in tags]
    except ValueError as exc:
        raise ConfigurationError(str(exc))
    data = dataio.read_count_series(args.input)
    digest = dataio.sha256_digest(args.input)
    prior = _prior_from_args(args)
    master_seed = _resolve_seed(args)
    rows = []
    payload = {"schema_version": dataio.SCHEMA_VERSION, "input_digest": digest,
               "models": rows}
    for index, variant in enumerate(variants):
        seed = master_seed + _SEED_OFFSET * index
        try:
            draws, _, scores, _ = _fit_one(data, variant, prior, args, seed)
        except GlkInarError as exc:
            payload["error"] = {"model": variant.value,
                                "type": type(exc).__name__, "message": str(exc)}
            dataio.write_json(payload, args.out)
            raise
        rows.append({"model": variant.value, "seed": seed, "dic": scores.dic,
                     "log_marginal_likelihood": scores.log_marginal_likelihood,
                     "acceptance_rate": draws.acceptance_rate})
    best_dic = min(rows, key=lambda r: r["dic"])["model"]
    best_lml = max(rows, key=lambda r: r["log_marginal_likelihood"])["model"]
    for row in rows:
        row["best_dic"] = row["model"] == best_dic
        row["best_log_marginal"] = row["model"] == best_lml
    payload["best"] = {"dic": best_dic, "log_marginal_likelihood": best_lml}
    dataio.write_json(payload, args.out)
    sys.stdout.write(_compare_table(rows))
    return 0


def _compare_table(rows) -> str:
    header = f"{'model':<8}{'DIC':>14}{'logML':>14}\n"
    lines = [header]
    for row in rows:
        dic_star = "*" if row["best_dic"] else " "
        lml_star = "*" if row["best_log_marginal"] else " "
        lines.append(f"{row['model']:<8}{row['dic']:>13.3f}{dic_star}"
                     f"{row['log_marginal_likelihood']:>13.3f}{lml_star}\n")
    return "".join(lines)


def cmd_moments(args) -> int:
    lags = _parse_lags(args.lags)
    variant = Variant(args.variant)
    innovation = _innovation_from_args(args, variant)
    if args.alpha is None:
        if isinstance(innovation, GlkParams):
            m = glk_moments(innovation)
            payload = {"innovation": {
                "mean": m.mean, "variance": m.variance, "vmr": m.vmr,
                "cv": m.cv, "skewness": m.skewness, "kurtosis": m.kurtosis}}
        else:
            mean, var = gp_moments(innovation)
            payload = {"innovation": {"mean": mean, "variance": var,
                                      "vmr": var / mean, "cv": var ** 0.5 / mean}}
    else:
        model = InarModel(alpha=args.alpha, innovation=innovation, variant=variant)
        payload = _moments_payload(model, lags)
    sys.stdout.write(dataio.json_dumps(payload))
    return 0


def cmd_diagnose(args) -> int:
    matrix, names = dataio.read_chain_csv(args.chain)
    lags = _parse_lags(args.lags)
    if max(lags) >= len(matrix):
        raise ConfigurationError("requested lag exceeds chain length")
    payload = {"before_thinning": _diag_block(matrix, names, lags)}
    if args.thin is not None:
        if args.thin < 1:
            raise ConfigurationError("--thin must be >= 1")
        thinned = matrix[args.burnin::args.thin]
        if max(lags) >= len(thinned):
            raise ConfigurationError("requested lag exceeds thinned chain length")
        payload["after_thinning"] = _diag_block(thinned, names, lags)
    text = dataio.json_dumps(payload)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    sys.stdout.write(text)
    return 0


def _diag_block(matrix, names, lags) -> dict:
    diag = chain_diagnostics(matrix, names, lags=lags)
    return {
        "draws": int(len(matrix)),
        "per_parameter": {
            name: {
                "acf": {str(lag): diag.acf[name][lag] for lag in lags},
                "ess_ratio": diag.ess_ratio[name],
                "ineff": diag.ineff[name],
                "nse": diag.nse[name],
                "geweke_z": diag.geweke_z[name],
                "geweke_p": diag.geweke_p[name],
            }
            for name in names
        },
    }


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glkinar",
        description="GLK-INAR(1) count time series: simulation, Bayesian "
                    "fitting, diagnostics and model comparison.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_innovation_flags(p):
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--a", type=float, default=None)
        p.add_argument("--b", type=float, default=None)
        p.add_argument("--c", type=float, default=None)
        p.add_argument("--beta", type=float, default=None)
        p.add_argument("--gp-theta", type=float, default=None)
        p.add_argument("--gp-lambda", type=float, default=None)
        p.add_argument("--variant", choices=[v.value for v in Variant],
                       default="glk")

    sim = sub.add_parser("simulate", help="simulate a path and write it as CSV")
    add_innovation_flags(sim)
    sim.add_argument("--length", type=int, required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", required=True)
    sim.add_argument("--initial", type=int, default=None,
                     help="fixed initial state; omit for a stationary warmup")
    sim.add_argument("--warmup", type=int, default=1000)
    sim.add_argument("--ci", action="store_true",
                     help="reproducibility mode: require an explicit seed")
    sim.set_defaults(func=cmd_simulate)

    def add_fit_flags(p):
        p.add_argument("--input", required=True)
        p.add_argument("--iterations", type=int, default=50_000)
        p.add_argument("--burnin", type=int, default=10_000)
        p.add_argument("--thin", type=int, default=10)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--gamma-exponent", type=float, default=0.6)
        p.add_argument("--prior-alpha", type=float, nargs=2, default=None,
                       metavar=("SHAPE1", "SHAPE2"))
        p.add_argument("--prior-a", type=float, nargs=2, default=None,
                       metavar=("SHAPE", "SCALE"))
        p.add_argument("--prior-b", type=float, nargs=2, default=None,
                       metavar=("SHAPE", "SCALE"))
        p.add_argument("--prior-c", type=float, nargs=2, default=None,
                       metavar=("SHAPE", "SCALE"))
        p.add_argument("--prior-beta", type=float, nargs=2, default=None,
                       metavar=("SHAPE1", "SHAPE2"))
        p.add_argument("--ci", action="store_true",
                       help="reproducibility mode: require a seed and omit "
                            "volatile metadata from the report")

    fit = sub.add_parser("fit", help="fit a model and write a JSON report")
    add_fit_flags(fit)
    fit.add_argument("--model", choices=[v.value for v in Variant], required=True)
    fit.add_argument("--out", required=True)
    fit.add_argument("--chain-out", default=None,
                     help="optional CSV export of the full raw chain")
    fit.set_defaults(func=cmd_fit)

    comp = sub.add_parser("compare", help="fit several models and rank them")
    add_fit_flags(comp)
    comp.add_argument("--models", required=True,
                      help="comma-separated model tags, e.g. glk,nb")
    comp.add_argument("--out", required=True)
    comp.set_defaults(func=cmd_compare)

    mom = sub.add_parser("moments", help="print closed-form moments as JSON")
    add_innovation_flags(mom)
    mom.add_argument("--lags", default="0,1,5", help="autocovariance lags")
    mom.set_defaults(func=cmd_moments)

    diag = sub.add_parser("diagnose", help="chain diagnostics from a CSV export")
    diag.add_argument("--chain", required=True)
    diag.add_argument("--lags", default="1,5,10")
    diag.add_argument("--thin", type=int, default=None)
    diag.add_argument("--burnin", type=int, default=0)
    diag.add_argument("--out", default=None)
    diag.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataError as exc:
        sys.stdout.write(dataio.json_dumps(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return EXIT_DATA
    except (DomainError, ConfigurationError) as exc:
        sys.stdout.write(dataio.json_dumps(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return EXIT_USAGE
    except (NumericalError, InitializationError, DiagnosticsError) as exc:
        sys.stdout.write(dataio.json_dumps(
            {"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
