"""Command-line entry point: ``estimate``, ``simulate``, ``balance``, ``sensitivity``."""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .abb import dump_imputations
from .io import ESTIMANDS, METHODS, RunConfig, load_dataset, write_report
from .matching import DISTANCES
from .pipeline import run_analysis
from .sensitivity import DEFAULT_GRID, sensitivity_grid
from .simlab import B_LEVELS, PRESETS, SimDesign, format_table, run_cell

log = logging.getLogger("gpsabb")


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _estimands(text: str) -> list[str]:
    vals = _csv_list(text)
    bad = [v for v in vals if v not in ESTIMANDS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown estimand(s) {bad}; choose from {ESTIMANDS}")
    return vals


def _methods(text: str) -> list[str]:
    vals = _csv_list(text)
    for v in vals:
        name, _, arg = v.partition(":")
        if name not in ("abb", "matching", "ipw", "oracle") or (arg and not arg.isdigit()):
            raise argparse.ArgumentTypeError(f"bad method {v!r}; use abb:Q, matching, ipw or oracle")
    return vals


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, type=Path, help="CSV input table")
    p.add_argument("--treatment", required=True, help="treatment column")
    p.add_argument("--outcome", required=True, help="outcome column")
    p.add_argument("--covariates", type=_csv_list, default=None,
                   help="comma-separated covariate columns (default: all others)")
    p.add_argument("--outcome-kind", choices=("binary", "ordinal"), default="binary")
    p.add_argument("--levels", type=int, default=None, help="number of ordinal levels")
    p.add_argument("--treatments", type=_csv_list, default=None,
                   help="declared treatment labels, in internal order")


def _run_args(p: argparse.ArgumentParser, method_default: str = "abb", Q_default: int = 5) -> None:
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--config", type=Path, help="JSON file with run settings")
    p.add_argument("--reference", help="reference treatment label (default: largest group)")
    p.add_argument("--method", choices=METHODS, default=None)
    p.add_argument("--estimands", type=_estimands, default=None)
    p.add_argument("--Q", type=int, default=None, help="number of clusters")
    p.add_argument("--M", type=int, default=None, help="number of imputations")
    p.add_argument("--L", type=int, default=None, help="matches per group")
    p.add_argument("--distance", choices=DISTANCES, default=None)
    p.add_argument("--without-replacement", action="store_true")
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--refit-after-trim", action="store_true")
    p.add_argument("--rubin-correction", action="store_true")
    p.add_argument("--ipw-truncation", type=float, default=None)
    p.set_defaults(method_default=method_default, Q_default=Q_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpsabb", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate pairwise ATTs for a dataset")
    _data_args(p)
    _run_args(p)
    p.add_argument("--out", required=True, type=Path, help="report CSV (a .json is written alongside)")
    p.add_argument("--balance-out", type=Path, help="balance table CSV")
    p.add_argument("--dump-imputations", type=Path, help="directory for completed datasets (ABB)")

    p = sub.add_parser("simulate", help="run simulation cells")
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--b", type=_float_list, default=list(B_LEVELS))
    p.add_argument("--eta", type=float, default=0.0)
    p.add_argument("--gamma", type=int, choices=(-1, 1), default=1)
    p.add_argument("--link", choices=("logistic", "probit"), default="logistic")
    p.add_argument("--outcome-kind", choices=("binary", "ordinal"), default="binary")
    p.add_argument("--methods", type=_methods, default=["abb:1", "abb:3", "abb:5", "abb:7", "matching", "ipw"])
    p.add_argument("--scale", choices=tuple(PRESETS), default="desk")
    p.add_argument("--R", type=int, default=None, help="replications (default: preset)")
    p.add_argument("--M", type=int, default=25)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", type=Path, help="CSV of per-method summaries")

    p = sub.add_parser("balance", help="Max2SB table before and after adjustment")
    _data_args(p)
    _run_args(p)
    p.add_argument("--out", type=Path, help="CSV output (default: stdout)")

    p = sub.add_parser("sensitivity", help="unmeasured-confounder sensitivity grid")
    _data_args(p)
    _run_args(p)
    p.add_argument("--delta", type=_float_list, default=list(DEFAULT_GRID),
                   help="comma-separated grid; write --delta=-0.5,0.5 when it starts with a minus")
    p.add_argument("--phi", type=_float_list, default=list(DEFAULT_GRID),
                   help="comma-separated grid, same syntax as --delta")
    p.add_argument("--out", type=Path, help="CSV output (default: stdout)")
    return parser


def _load(args):
    return load_dataset(
        args.data, args.treatment, args.outcome, args.covariates,
        args.outcome_kind, args.levels, args.treatments,
    )


def _config(args, data, **overrides) -> RunConfig:
    settings = {"method": args.method_default, "Q": args.Q_default}
    if args.config:
        settings.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
    flags = {
        "method": args.method, "estimands": args.estimands, "Q": args.Q, "M": args.M,
        "L": args.L, "distance": args.distance, "ridge": args.ridge,
        "ipw_truncation": args.ipw_truncation,
    }
    settings.update({k: v for k, v in flags.items() if v is not None})
    if args.without_replacement:
        settings["with_replacement"] = False
    if args.refit_after_trim:
        settings["refit_after_trim"] = True
    if args.rubin_correction:
        settings["rubin_correction"] = True
    if args.reference is not None:
        labels = [str(l) for l in data.treatment_labels]
        if args.reference not in labels:
            raise ValueError(f"reference label {args.reference!r} not among {labels}")
        settings["reference"] = labels.index(args.reference) + 1
    if data.outcome_kind == "ordinal" and "estimands" not in settings:
        settings["estimands"] = ("mean_difference",)
    settings["seed"] = args.seed
    settings.update(overrides)
    config = RunConfig.from_dict(settings)
    digest = hashlib.sha256(json.dumps(config.to_dict(), sort_keys=True).encode()).hexdigest()[:16]
    log.info("gpsabb %s seed=%d config=%s", __version__, config.seed, digest)
    return config


def _write_rows(path, header, rows) -> None:
    fh = open(path, "w", newline="", encoding="utf-8") if path else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            fh.close()


def _balance_rows(balances):
    return [(name, ctx, repr(v)) for b in balances for name, ctx, v in b.rows()]


def cmd_estimate(args) -> int:
    data = _load(args)
    config = _config(args, data)
    res = run_analysis(data, config)
    log.info("n_excluded=%d", res.support.n_excluded)
    write_report(res.report, args.out)
    if args.balance_out:
        _write_rows(args.balance_out, ("covariate", "context", "max2sb"), _balance_rows(res.balance))
    if args.dump_imputations and res.imputations is not None:
        dump_imputations(res.imputations, args.dump_imputations, res.data.treatment_labels)
    return 0


def cmd_balance(args) -> int:
    data = _load(args)
    config = _config(args, data)
    res = run_analysis(data, config)
    log.info("n_excluded=%d", res.support.n_excluded)
    _write_rows(args.out, ("covariate", "context", "max2sb"), _balance_rows(res.balance))
    return 0


def cmd_sensitivity(args) -> int:
    data = _load(args)
    config = _config(args, data, method="abb")
    grid = sensitivity_grid(data, config, args.delta, args.phi, seed=args.seed)
    for cell, err in grid.errors.items():
        log.warning("cell %s failed: %s", cell, err)
    labels = [str(l) for l in data.treatment_labels]
    rows = [
        (repr(d), repr(p), f"{labels[c[0] - 1]} vs {labels[c[1] - 1]}", repr(v))
        for d, p, c, v in grid.rows()
    ]
    for c, v in zip(grid.contrasts, grid.baseline):
        rows.append(("baseline", "baseline", f"{labels[c[0] - 1]} vs {labels[c[1] - 1]}", repr(float(v))))
    _write_rows(args.out, ("delta", "phi", "contrast", "standardized_effect"), rows)
    return 0 if not grid.errors else 1


def cmd_simulate(args) -> int:
    R = args.R if args.R is not None else PRESETS[args.scale]["R"]
    out_rows = []
    for b in args.b:
        design = SimDesign.preset(
            args.scale, b=b, eta=args.eta, gamma=args.gamma, link=args.link,
            outcome_kind=args.outcome_kind,
        )
        log.info("gpsabb %s seed=%d cell b=%s R=%d", __version__, args.seed, b, R)
        res = run_cell(design, args.methods, R=R, seed=args.seed, M=args.M, n_jobs=args.threads)
        print(format_table(res))
        for r in res.rows:
            out_rows.append((
                b, args.eta, args.gamma, args.link, args.outcome_kind, r["method"],
                f"{r['contrast'][0]} vs {r['contrast'][1]}", r["coverage"],
                r["mean_abs_bias"], r["sd_abs_bias"], r["median_se"], res.balance.get(r["method"], ""),
            ))
    if args.out:
        _write_rows(args.out, (
            "b", "eta", "gamma", "link", "outcome", "method", "contrast", "coverage",
            "mean_abs_bias", "sd_abs_bias", "median_se", "maxmax2sb",
        ), out_rows)
    return 0


COMMANDS = {
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "balance": cmd_balance,
    "sensitivity": cmd_sensitivity,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"gpsabb {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
