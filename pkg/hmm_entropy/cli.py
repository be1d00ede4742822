import argparse
import csv
import io
import json
import logging
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

from . import __version__
from .channels import MarkovInput, bec_model, bsc_model, ge_model
from .errors import (
    BoundAgreementError,
    ChannelSpecError,
    HmmEntropyError,
    ModelFormatError,
    ReplayMismatchError,
)
from .expansion import birch_lower, birch_upper, expand, horizon
from .hmm import HmmModel, check_normal, classify
from .manifest import RunManifest, atomic_write, compare_payloads, to_json
from .modelfile import format_rational, model_hash, parse_rational, read_model_file, serialize_model
from .numeric import McConfig, eval_expansion, exact_hn, mc_entropy, remainder_law
from .series import LogSeries

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ACCEPTANCE = 3
EXIT_PARSE = 4

PRESETS = ("bsc", "bec", "ge")
DEFAULT_MANIFEST = "hmm-entropy.manifest.json"

# Arguments that steer where output goes, not what is computed.
_PLUMBING = ("command", "replay", "verbose", "manifest", "output", "csv", "threads")

Payload = Tuple[dict, int]


def _log(message: str) -> None:
    print(f"[hmm-entropy] {message}")


# =============================================================================
# Model sources
# =============================================================================

def _rational(name: str, text: Optional[str]) -> Fraction:
    if text is None:
        raise ChannelSpecError(f"--{name} is required for this preset")
    try:
        return parse_rational(text)
    except ModelFormatError:
        raise ChannelSpecError(f"--{name} must be an exact rational like \"1/3\", got {text!r}")


def preset_input(args: argparse.Namespace) -> MarkovInput:
    """
    First-order binary input from --pi (Pi = [[1-p, p], [1, 0]]) or from
    --pi00 and --pi11 (Pi = [[x, 1-x], [1-y, y]]).
    """
    if getattr(args, "pi", None) is not None:
        p = _rational("pi", args.pi)
        return MarkovInput.from_matrix([[1 - p, p], [1, 0]])
    x = _rational("pi00", getattr(args, "pi00", None))
    y = _rational("pi11", getattr(args, "pi11", None))
    return MarkovInput.from_matrix([[x, 1 - x], [1 - y, y]])


def preset_model(args: argparse.Namespace) -> HmmModel:
    source = preset_input(args)
    if args.preset == "bsc":
        return bsc_model(source)
    if args.preset == "bec":
        return bec_model(source)
    if args.preset == "ge":
        q0 = _rational("q0", args.q0)
        kappa = _rational("kappa", args.kappa)
        return ge_model(source, q0, 1 - q0, kappa)
    raise ChannelSpecError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")


def load_model(args: argparse.Namespace) -> HmmModel:
    if getattr(args, "model", None):
        return read_model_file(args.model)
    if getattr(args, "preset", None):
        return preset_model(args)
    raise ChannelSpecError("give a model file or --preset")


# =============================================================================
# Commands
# =============================================================================

def cmd_detect(args: argparse.Namespace) -> Payload:
    model = load_model(args)
    classification = classify(model)
    violations = check_normal(model)
    _log(f"{classification.kind.value}")
    for a, detail in enumerate(classification.detail):
        _log(f"  symbol {a}: {detail.value}")
    for v in violations:
        print(f"[WARNING] {v}")
    return {
        "kind": classification.kind.value,
        "detail": [d.value for d in classification.detail],
        "violations": violations,
    }, EXIT_VALIDATION if violations else EXIT_OK


def cmd_expand(args: argparse.Namespace) -> Payload:
    model = load_model(args)
    result = expand(model, args.k, verify=args.verify, n=args.n, threads=args.threads)
    _log(f"h0 = {result.h0}")
    for j, f in enumerate(result.f, start=1):
        _log(f"f_{j} = {format_rational(f)}")
    for j, g in enumerate(result.g, start=1):
        _log(f"g_{j} = {g}")
    if result.diagnostics.bound_agreement is not None:
        _log(f"bounds agree: {result.diagnostics.bound_agreement}")
    return result.to_document(), EXIT_OK


def _log_series_document(series: LogSeries) -> dict:
    return {
        "plain": [repr(float(c)) if isinstance(c, float) else str(c) for c in series.plain],
        "logpart": [format_rational(c) for c in series.logpart.coeffs],
    }


def cmd_bounds(args: argparse.Namespace) -> Payload:
    model = load_model(args)
    n = horizon(args.k) if args.n is None else args.n
    upper = birch_upper(model, n, args.k, threads=args.threads)
    lower = birch_lower(model, n, args.k, threads=args.threads)
    _log(f"H_{n}  upper: {upper}")
    _log(f"H~_{n} lower: {lower}")
    return {
        "n": n,
        "k": args.k,
        "upper": _log_series_document(upper),
        "lower": _log_series_document(lower),
    }, EXIT_OK


COMPARE_COLUMNS = ("eps", "expansion", "exact", "mc", "mc_stderr", "gap_exact", "gap_mc")


def _csv_text(rows: List[dict]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=COMPARE_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: "" if row[c] is None else repr(row[c]) for c in COMPARE_COLUMNS})
    return buffer.getvalue()


def cmd_compare(args: argparse.Namespace) -> Payload:
    model = load_model(args)
    result = expand(model, args.k, threads=args.threads)
    n = result.n0 if args.n is None else args.n
    rows = []
    for eps in args.eps:
        approx = eval_expansion(result, eps)
        exact = exact_hn(model, n, eps)
        mc = stderr = gap_mc = None
        if args.samples:
            run = mc_entropy(model, McConfig(samples=args.samples, burnin=args.burnin,
                                             seed=args.seed, eps=eps))
            mc, stderr, gap_mc = run.estimate, run.stderr, run.estimate - exact
        rows.append({"eps": eps, "expansion": approx, "exact": exact, "mc": mc,
                     "mc_stderr": stderr, "gap_exact": exact - approx, "gap_mc": gap_mc})
        _log(f"eps={eps:g}  expansion={approx:.12g}  exact={exact:.12g}  gap={exact - approx:.3e}"
             + ("" if mc is None else f"  mc={mc:.6g}+-{stderr:.2g}"))

    failures = remainder_law([r["gap_exact"] for r in rows], args.eps, args.k)
    for r in rows:
        if r["mc"] is not None and abs(r["gap_mc"]) > 3 * r["mc_stderr"]:
            failures.append(f"eps={r['eps']:g}: mc differs from exact by {r['gap_mc']:.3e} "
                            f"> 3 stderr ({3 * r['mc_stderr']:.3e})")
    for f in failures:
        print(f"[ERROR] {f}")
    if args.csv:
        atomic_write(args.csv, _csv_text(rows))
    return {"k": args.k, "n": n, "rows": rows, "failures": failures}, \
        EXIT_ACCEPTANCE if failures else EXIT_OK


def cmd_mc(args: argparse.Namespace) -> Payload:
    model = load_model(args)
    eps = args.eps[0]
    run = mc_entropy(model, McConfig(samples=args.samples, burnin=args.burnin, seed=args.seed, eps=eps))
    _log(f"H(Z) ~ {run.estimate:.12g} +- {run.stderr:.3g} (eps={eps:g}, N={args.samples})")
    return {"estimate": run.estimate, "stderr": run.stderr, "diagnostics": run.diagnostics}, EXIT_OK


def cmd_emit_model(args: argparse.Namespace) -> Payload:
    model = preset_model(args)
    text = serialize_model(model)
    if args.output:
        atomic_write(args.output, text)
        _log(f"Wrote {args.preset} model to {args.output}")
    else:
        print(text, end="")
    return {"model": json.loads(text), "model_hash": model_hash(model)}, EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], Payload]] = {
    "detect": cmd_detect,
    "expand": cmd_expand,
    "bounds": cmd_bounds,
    "compare": cmd_compare,
    "mc": cmd_mc,
    "emit-model": cmd_emit_model,
}


# =============================================================================
# Driver
# =============================================================================

def _params(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _PLUMBING}


def _model_hash(args: argparse.Namespace) -> Optional[str]:
    try:
        return model_hash(load_model(args))
    except HmmEntropyError:
        return None


def _run(args: argparse.Namespace) -> Tuple[dict, int]:
    # Errors become exit codes here, the same way for direct runs and replays.
    try:
        return COMMANDS[args.command](args)
    except ModelFormatError as e:
        print(f"[ERROR] {e}")
        return {}, EXIT_PARSE
    except (BoundAgreementError, ReplayMismatchError) as e:
        print(f"[ERROR] {e}")
        return {}, EXIT_ACCEPTANCE
    except HmmEntropyError as e:
        print(f"[ERROR] {e}")
        return {}, EXIT_VALIDATION


def replay(path: str, threads: Optional[int] = None) -> int:
    """
    Re-run a manifest and compare payloads: exact fields bit for bit,
    decimal fields to 1e-12.
    """
    try:
        manifest = RunManifest.read(path)
    except ReplayMismatchError as e:
        print(f"[ERROR] {e}")
        return EXIT_PARSE
    args = argparse.Namespace(**manifest.params, command=manifest.command, threads=threads,
                              output=None, csv=None)
    if manifest.model_hash is not None and _model_hash(args) != manifest.model_hash:
        print(f"[ERROR] model hash changed since {manifest.timestamp}")
        return EXIT_ACCEPTANCE
    payload, status = _run(args)
    if not payload:
        return status
    problems = compare_payloads(manifest.payload, json.loads(to_json(payload)))
    for p in problems:
        print(f"[ERROR] replay mismatch at {p}")
    if problems:
        return EXIT_ACCEPTANCE
    _log(f"Replay of {manifest.command} matches {path}")
    return EXIT_OK


def main(args: argparse.Namespace) -> int:
    """
    Run one command, write its output document and manifest, and return
    the exit code: 0 success, 2 validation, 3 acceptance, 4 parse.
    """
    if getattr(args, "replay", None):
        return replay(args.replay, threads=getattr(args, "threads", None))

    payload, status = _run(args)
    if not payload:
        return status

    text = to_json(payload)
    if args.command == "emit-model":
        pass  # writes the model document itself
    elif args.output:
        atomic_write(args.output, text)
    else:
        print(text, end="")

    manifest_path = args.manifest or (f"{args.output}.manifest.json" if args.output else DEFAULT_MANIFEST)
    RunManifest(
        command=args.command,
        params=_params(args),
        model_hash=_model_hash(args),
        version=__version__,
        payload=json.loads(to_json(payload)),
    ).write(manifest_path)
    logger.debug("manifest written to %s", manifest_path)
    return status
