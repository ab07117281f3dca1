from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any

from config import DEFAULT_K, DEFAULT_SCALE, DEFAULT_SEED, LOG_LEVEL, MAX_K, MIN_K, THREADS, resolve_threads
from src.models import CorrelationModel, RunConfig
from src.services.correlation_service import (
    CorrelationModelError,
    build_block_equicorrelated,
    build_equicorrelated,
    build_identity,
    build_nearly_independent,
    equicorrelation_block,
    max_abs_offdiag,
    mean_abs_offdiag,
    mean_offdiag,
    model_from_dict,
    nearly_independent_delta,
    rms_offdiag,
)
from src.services.fwer_service import (
    FwerError,
    FwerService,
    block_bound_limit,
    block_lower_bound,
    fwer_corrected,
    fwer_corrected_finite_n,
    tail_remainder_estimate,
)
from src.services.gaussian_service import GaussianError, bonferroni_cutoff
from src.services.mills_service import MillsError, make_orthant_problem, mills_bounds
from src.services.oracle_service import OracleError
from src.services.sampler_service import SamplerError
from src.services.table_service import (
    TableService,
    TableServiceError,
    rows_to_csv,
    rows_to_json,
    rows_to_preview,
)

logger = logging.getLogger(__name__)

RUNTIME_ERRORS = (
    CorrelationModelError,
    GaussianError,
    SamplerError,
    MillsError,
    FwerError,
    OracleError,
    TableServiceError,
)


# ============================================================================
# Argument types
# ============================================================================

def positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def truncation_order(text: str) -> int:
    value = positive_int(text)
    if not (MIN_K <= value <= MAX_K):
        raise argparse.ArgumentTypeError(f"K must lie in [{MIN_K}, {MAX_K}], got {value}")
    return value


def positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from exc
    if not (math.isfinite(value) and value > 0.0):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {text!r}")
    return value


def open_probability(text: str) -> float:
    value = float(text)
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {value}")
    return value


def unit_interval(text: str) -> float:
    value = float(text)
    if not (0.0 <= value <= 1.0):
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got {value}")
    return value


def thread_count(text: str) -> int:
    try:
        return resolve_threads(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a positive integer, got {text!r}") from exc


def seed_value(text: str) -> int:
    value = int(text)
    if not (0 <= value < 2**64):
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {value}")
    return value


# ============================================================================
# Parser
# ============================================================================

def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("correlation model")
    group.add_argument(
        "--model",
        choices=["identity", "equicorrelated", "block", "nearly-independent"],
        default="identity",
        help="Correlation structure (default: identity)",
    )
    group.add_argument("--n", type=positive_int, help="Number of hypotheses")
    group.add_argument("--rho", type=float, help="Within-block correlation (equicorrelated, block)")
    group.add_argument("--block-size", type=positive_int, help="Block size (block)")
    group.add_argument("--num-blocks", type=positive_int, help="Number of blocks (block)")
    group.add_argument("--beta", type=positive_float, help="Decay exponent (nearly-independent)")
    group.add_argument(
        "--scale",
        type=positive_float,
        default=DEFAULT_SCALE,
        help=f"Magnitude constant, delta = scale * n^(-beta) (default: {DEFAULT_SCALE})",
    )
    group.add_argument(
        "--model-file",
        type=Path,
        help="JSON model record or an earlier --output file; overrides the other model flags",
    )


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--replications", type=positive_int, default=10_000,
                        help="Monte Carlo replications (default: 10000)")
    parser.add_argument("--seed", type=seed_value, default=DEFAULT_SEED,
                        help=f"Random seed (default: {DEFAULT_SEED})")
    parser.add_argument("--threads", type=thread_count, default=None,
                        help=f"Worker threads or 'auto' (default: THREADS env, currently {THREADS!r})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.cli",
        description=(
            "Family-wise error rate of Bonferroni's procedure for correlated normal "
            "test statistics: Monte Carlo estimates, closed-form corrections and bounds."
        ),
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log progress to stderr")
    commands = parser.add_subparsers(dest="command", required=True)

    table = commands.add_parser("table", help="Reproduce the (beta, alpha) simulation table")
    table.add_argument("--n", type=positive_int, default=5000, help="Number of hypotheses (default: 5000)")
    table.add_argument("--betas", type=positive_float, nargs="+", default=[0.4, 0.6, 0.8, 1.0])
    table.add_argument("--alphas", type=open_probability, nargs="+", default=[0.01, 0.05, 0.1, 0.2])
    table.add_argument("--K", type=truncation_order, default=DEFAULT_K,
                       help=f"Series truncation order (default: {DEFAULT_K})")
    table.add_argument("--scale", type=positive_float, default=DEFAULT_SCALE)
    table.add_argument("--format", dest="output_format", choices=["csv", "json"], default="csv")
    table.add_argument("--digits", type=positive_int, default=4,
                       help="Significant digits of the rounded preview (default: 4)")
    table.add_argument("--output", type=Path, help="Write CSV/JSON here instead of stdout")
    _add_run_flags(table)
    table.set_defaults(handler=cmd_table)

    estimate = commands.add_parser("estimate", help="Monte Carlo FWER for one model")
    _add_model_flags(estimate)
    estimate.add_argument("--alpha", type=open_probability, default=0.05)
    estimate.add_argument("--K", type=truncation_order, default=DEFAULT_K)
    estimate.add_argument("--output", type=Path)
    _add_run_flags(estimate)
    estimate.set_defaults(handler=cmd_estimate)

    correct = commands.add_parser("correct", help="Corrected FWER approximation")
    correct.add_argument("--alpha", type=open_probability, required=True)
    correct.add_argument("--n", type=positive_int, required=True)
    source = correct.add_mutually_exclusive_group(required=True)
    source.add_argument("--rho-bar", type=float, help="Mean off-diagonal correlation")
    source.add_argument("--beta", type=positive_float, help="Use rho_bar = scale * n^(-beta)")
    correct.add_argument("--scale", type=positive_float, default=DEFAULT_SCALE)
    correct.add_argument("--K", type=truncation_order, default=DEFAULT_K)
    correct.add_argument("--finite-n", action="store_true",
                         help="Keep the binomial coefficients instead of their n -> infinity limits")
    correct.add_argument("--output", type=Path)
    correct.set_defaults(handler=cmd_correct)

    bound = commands.add_parser("bound", help="Orthant and block bounds")
    bounds = bound.add_subparsers(dest="bound_kind", required=True)
    mills = bounds.add_parser("mills", help="Savage's bounds on P(X > a 1_k)")
    mills.add_argument("--a", type=float, required=True, help="Common threshold")
    mills.add_argument("--dim", type=positive_int, default=1, help="Dimension k (default: 1)")
    mills.add_argument("--rho", type=float, default=0.0, help="Exchangeable correlation (default: 0)")
    mills.add_argument("--output", type=Path)
    mills.set_defaults(handler=cmd_bound_mills)
    block = bounds.add_parser("block", help="FWER bound for n blocks of M_n(rho)")
    block.add_argument("--n", type=positive_int, required=True, help="Block size and number of blocks")
    block.add_argument("--alpha", type=open_probability, required=True)
    block.add_argument("--rho", type=unit_interval, required=True)
    block.add_argument("--output", type=Path)
    block.set_defaults(handler=cmd_bound_block)

    diagnose = commands.add_parser("diagnose", help="Off-diagonal correlation summaries")
    _add_model_flags(diagnose)
    diagnose.add_argument("--output", type=Path)
    diagnose.set_defaults(handler=cmd_diagnose)
    return parser


# ============================================================================
# Helpers
# ============================================================================

def _load_model_file(path: Path, parser: argparse.ArgumentParser) -> CorrelationModel:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read model file {path}: {exc}")
    if isinstance(data, dict) and isinstance(data.get("model"), dict):
        data = data["model"]
    if not isinstance(data, dict):
        parser.error(f"model file {path} does not hold a JSON object")
    try:
        return model_from_dict(data)
    except CorrelationModelError as exc:
        parser.error(f"model file {path}: {exc}")
    raise AssertionError("unreachable")


def _model_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser) -> CorrelationModel:
    if args.model_file is not None:
        return _load_model_file(args.model_file, parser)
    kind = args.model

    def need(*names: str) -> None:
        missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name) is None]
        if missing:
            parser.error(f"--model {kind} requires {', '.join(missing)}")

    try:
        if kind == "identity":
            need("n")
            return build_identity(args.n)
        if kind == "equicorrelated":
            need("n", "rho")
            return build_equicorrelated(args.n, args.rho)
        if kind == "block":
            need("block_size", "num_blocks", "rho")
            model = build_block_equicorrelated(args.block_size, args.num_blocks, args.rho)
            if args.n is not None and args.n != model.n:
                parser.error(f"--n {args.n} does not match block size x blocks = {model.n}")
            return model
        need("n", "beta")
        return build_nearly_independent(args.n, args.beta, args.scale)
    except CorrelationModelError as exc:
        parser.error(str(exc))
    raise AssertionError("unreachable")


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(text, encoding="utf-8")
    logger.info("[CLI] Wrote %s", output)


def _emit_json(payload: dict[str, Any], output: Path | None) -> None:
    _emit(json.dumps(payload, indent=2) + "\n", output)


# ============================================================================
# Commands
# ============================================================================

def cmd_table(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    run = RunConfig(
        n=args.n,
        betas=list(args.betas),
        alphas=list(args.alphas),
        replications=args.replications,
        K=args.K,
        seed=args.seed,
        scale=args.scale,
        output_format=args.output_format,
        threads=args.threads,
    )
    rows = TableService().build(run)
    text = rows_to_csv(rows) if run.output_format == "csv" else rows_to_json(rows)
    _emit(text, args.output)
    preview = rows_to_preview(rows, args.digits)
    # stdout stays machine-readable when it carries the table itself
    (sys.stdout if args.output is not None else sys.stderr).write(preview)
    return 0


def cmd_estimate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    model = _model_from_args(args, parser)
    config = bonferroni_cutoff(model.n, args.alpha, K=args.K)
    service = FwerService(threads=args.threads)
    result = service.estimate_fwer_mc(model, config, args.replications, args.seed)
    payload = result.to_dict()
    payload["alpha"] = config.alpha
    payload["c"] = config.c
    payload["model"] = model.to_dict()
    _emit_json(payload, args.output)
    return 0


def cmd_correct(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    config = bonferroni_cutoff(args.n, args.alpha, K=args.K)
    if args.rho_bar is not None:
        rho_bar = args.rho_bar
    else:
        rho_bar = nearly_independent_delta(args.n, args.beta, args.scale)
    corrected = fwer_corrected_finite_n(config, rho_bar) if args.finite_n else fwer_corrected(config, rho_bar)
    payload = corrected.to_dict()
    payload["tail_remainder"] = tail_remainder_estimate(config)
    _emit_json(payload, args.output)
    return 0


def cmd_bound_mills(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        build_equicorrelated(args.dim, args.rho)
    except CorrelationModelError as exc:
        parser.error(str(exc))
    problem = make_orthant_problem([args.a] * args.dim, equicorrelation_block(args.dim, args.rho))
    _emit_json(mills_bounds(problem).to_dict(), args.output)
    return 0


def cmd_bound_block(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    payload = {
        "n": args.n,
        "alpha": args.alpha,
        "rho": args.rho,
        "bound": block_lower_bound(args.n, args.alpha, args.rho),
        "asymptote": args.alpha * (1.0 - args.rho),
        "limit": block_bound_limit(args.alpha, args.rho),
    }
    _emit_json(payload, args.output)
    return 0


def cmd_diagnose(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    model = _model_from_args(args, parser)
    payload = {
        "mean_offdiag": mean_offdiag(model),
        "rms_offdiag": rms_offdiag(model),
        "max_abs_offdiag": max_abs_offdiag(model),
        "mean_abs_offdiag": mean_abs_offdiag(model),
        "model": model.to_dict(),
    }
    _emit_json(payload, args.output)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else LOG_LEVEL,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args, parser)
    except RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
