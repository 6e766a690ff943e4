"""Command-line interface.

Three subcommands:

* ``test``     -- run the lagged independence tests on a CSV of series.
* ``fit``      -- fit one dynamic model to one column, write it as JSON.
* ``simulate`` -- run a Monte-Carlo study described by a TOML/JSON file.

Exit status: 0 on success, 1 on any input or numerical error, 2 when
``test --fail-on-reject`` rejects independence.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .core import DataError, SeriesPanel, ConditionalDistributionTrace, \
    GeneralizedErrorPanel
from .dependogram import write_dependogram
from .models import (ModelFitError, conditional_trace, fit_gaussian_hmm,
                     fit_ingarch, fit_poisson_hmm, model_from_dict,
                     model_to_dict)
from .pipeline import DEFAULT_SCORE_KINDS, compute_report
from .pit import RandomizationPlan, randomized_pit
from .simulate import CopulaSpec, McStudySpec, run_study

__all__ = ["main"]


def _read_csv(path: str, columns: list[str] | None):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty")
        rows = [row for row in reader if row and any(c.strip() for c in row)]
    header = [h.strip() for h in header]
    if columns:
        missing = [c for c in columns if c not in header]
        if missing:
            raise DataError(f"columns not in {path}: {', '.join(missing)}")
        idx = [header.index(c) for c in columns]
    else:
        columns, idx = header, list(range(len(header)))
    try:
        data = np.array([[float(row[i]) for i in idx] for row in rows])
    except (ValueError, IndexError) as exc:
        raise DataError(f"non-numeric or ragged data in {path}: {exc}")
    return columns, data


def _load_structured(path: str) -> dict:
    if path.endswith((".toml", ".tml")):
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


_FITTERS = {
    "gaussian_hmm": lambda x, opt: fit_gaussian_hmm(
        x, n_regimes=int(opt.get("n_regimes", 2)),
        ar_order=int(opt.get("ar_order", 0)),
        zero_inflated=bool(opt.get("zero_inflated", False))),
    "poisson_hmm": lambda x, opt: fit_poisson_hmm(
        x, n_regimes=int(opt.get("n_regimes", 2)),
        ar_order=int(opt.get("ar_order", 0))),
    "ingarch": lambda x, opt: fit_ingarch(
        x, p=int(opt.get("p", 1)), q=int(opt.get("q", 1))),
}


def _resolve_models(config: dict, names, data: np.ndarray):
    """Per-column model specs from a config mapping.

    Each entry either carries full parameters (the ``fit`` subcommand's
    output) or a ``fit`` table with fitting options, in which case the
    model is estimated from the column right here.
    """
    specs, fitted = [], {}
    for j, name in enumerate(names):
        if name not in config:
            raise DataError(f"models file has no entry for column {name!r}")
        entry = config[name]
        kind = entry.get("kind")
        if "fit" in entry:
            if kind not in _FITTERS:
                raise DataError(f"cannot fit unknown model kind {kind!r}")
            result = _FITTERS[kind](data[:, j], entry["fit"] or {})
            specs.append(result.spec)
            fitted[name] = model_to_dict(result.spec)
        else:
            specs.append(model_from_dict(entry))
    return specs, fitted


def _cmd_test(args) -> int:
    columns = args.columns.split(",") if args.columns else None
    names, data = _read_csv(args.data, columns)
    if not 2 <= data.shape[1] <= 3:
        raise DataError("test needs 2 or 3 series; select with --columns")
    plan = RandomizationPlan(args.randomizations, args.seed)
    fitted = {}
    if args.errors:
        if np.any((data < 0) | (data > 1)):
            raise DataError("--errors expects values already in [0, 1]")
        errors = GeneralizedErrorPanel(data, seed=args.seed)
    else:
        if not args.models:
            raise DataError("provide --models, or --errors for pre-made "
                            "generalized errors")
        config = _load_structured(args.models)
        specs, fitted = _resolve_models(config, names, data)
        trace = ConditionalDistributionTrace(
            [conditional_trace(spec, data[:, j])
             for j, spec in enumerate(specs)])
        errors = randomized_pit(SeriesPanel(data, tuple(names)), trace, plan)

    score_kinds = tuple(args.scores.split(",")) if args.scores \
        else DEFAULT_SCORE_KINDS
    report = compute_report(
        errors, m2=args.m2, m3=args.m3,
        include_triples=not args.no_triples, score_kinds=score_kinds,
        exact_pvalues=args.exact_pvalues,
        metadata={"data": args.data, "columns": list(names),
                  "seed": args.seed, "randomizations": args.randomizations})

    stats_filter = args.stats.split(",") if args.stats else None
    if stats_filter:
        unknown = [s for s in stats_filter if s not in report.combined]
        if unknown:
            raise DataError(f"unknown statistics: {', '.join(unknown)} "
                            f"(have {', '.join(report.combined)})")
    shown = stats_filter or list(report.combined)
    print(f"n = {report.metadata['n_effective']}, "
          f"{report.metadata['total_terms']} (subset, lag) terms")
    for name in shown:
        stat = report.combined[name]
        flag = " *" if stat.p_value < args.alpha else ""
        print(f"  {name:16s} {stat.value:12.6f}   p = {stat.p_value:.4g}{flag}")
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)

    if args.save_models and fitted:
        with open(args.save_models, "w", encoding="utf-8") as fh:
            json.dump(fitted, fh, indent=2)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
    if args.dependogram:
        csv_path = args.dependogram_csv
        if csv_path is None and args.dependogram.endswith(".svg"):
            csv_path = args.dependogram[:-4] + ".csv"
        write_dependogram(report, args.dependogram, args.alpha, csv_path)

    rejected = report.rejected(args.alpha, stats_filter)
    print(("independence rejected" if rejected else "no evidence against "
           "independence") + f" at level {args.alpha}")
    return 2 if rejected and args.fail_on_reject else 0


def _cmd_fit(args) -> int:
    names, data = _read_csv(args.data, [args.column] if args.column else None)
    if data.shape[1] != 1:
        raise DataError("fit works on one column; pick it with --column")
    options = {"n_regimes": args.n_regimes, "ar_order": args.ar_order,
               "zero_inflated": args.zero_inflated, "p": args.p, "q": args.q}
    result = _FITTERS[args.kind](data[:, 0], options)
    payload = model_to_dict(result.spec)
    payload["fit_info"] = {
        "column": names[0],
        "loglik": float(result.loglik if hasattr(result, "loglik")
                        else result.loglik_path[-1]),
        "converged": bool(result.converged),
        "n_obs": int(data.shape[0]),
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"model written to {args.out}")
    else:
        print(text)
    if not result.converged:
        print("warning: fit did not converge", file=sys.stderr)
    return 0


def _study_spec(table: dict) -> McStudySpec:
    table = dict(table)
    cop = table.pop("copula", None)
    if isinstance(cop, dict):
        table["copula"] = CopulaSpec(**cop)
    elif isinstance(cop, str):
        table["copula"] = CopulaSpec(family=cop, tau=table.pop("tau", None),
                                     dim=table.get("d", 2))
    for key in ("m_grid", "statistics", "quantile_levels"):
        if key in table:
            table[key] = tuple(table[key])
    try:
        return McStudySpec(**table)
    except TypeError as exc:
        raise DataError(f"bad study table: {exc}")


def _cmd_simulate(args) -> int:
    config = _load_structured(args.study)
    tables = config.get("studies", [config.get("study", config)])
    if isinstance(tables, dict):
        tables = [tables]
    specs = [_study_spec(t) for t in tables]
    if args.workers:
        specs = [McStudySpec(**{**asdict(s), "copula": s.copula,
                                "workers": args.workers}) for s in specs]

    rows, manifest_studies = [], []
    for i, spec in enumerate(specs):
        result = run_study(spec)
        for row in result.rows():
            rows.append(dict(row, study=i))
        manifest_studies.append({
            "study": i,
            "spec": {**asdict(spec), "copula": asdict(spec.copula)},
            "runtime_seconds": round(result.runtime_seconds, 3),
            "failed_replicates": result.n_failures,
        })
        print(f"study {i}: {spec.dgp}, n = {spec.n}, "
              f"{spec.replicates} replicates, "
              f"{result.runtime_seconds:.1f}s, {result.n_failures} failures")

    fields = sorted({k for row in rows for k in row})
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    manifest = {
        "version": __version__,
        "study_file": args.study,
        "sha256": hashlib.sha256(
            json.dumps(manifest_studies[0]["spec"] if len(manifest_studies) == 1
                       else [m["spec"] for m in manifest_studies],
                       sort_keys=True, default=str).encode()).hexdigest(),
        "studies": manifest_studies,
    }
    manifest_path = args.manifest or args.out + ".manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
    print(f"results written to {args.out}; manifest to {manifest_path}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geitest",
        description="Lagged independence tests between time series of "
                    "arbitrary (continuous, discrete or mixed) distributions "
                    "via randomized probability integral transforms.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test independence between series")
    t.add_argument("data", help="CSV file with one header row")
    t.add_argument("--columns", help="comma-separated column subset")
    t.add_argument("--models", help="JSON mapping column name to model "
                                    "parameters or to a fit directive")
    t.add_argument("--errors", action="store_true",
                   help="columns are already generalized errors in [0, 1]")
    t.add_argument("--m2", type=int, default=5, help="maximum pair lag")
    t.add_argument("--m3", type=int, default=2, help="maximum triple lag")
    t.add_argument("--no-triples", action="store_true",
                   help="skip the triple subset when d = 3")
    t.add_argument("--randomizations", type=int, default=1, metavar="M",
                   help="number of PIT randomizations to average over")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--stats", help="comma-separated combined statistics "
                                   "to show and base the decision on")
    t.add_argument("--scores", help="comma-separated score families "
                                    "(spearman, vdw, savage, savage_classical)")
    t.add_argument("--exact-pvalues", action="store_true",
                   help="exact per-term tail probabilities (slower)")
    t.add_argument("--report", metavar="FILE", help="write the JSON report")
    t.add_argument("--dependogram", metavar="FILE",
                   help="write the per-lag bar chart (SVG)")
    t.add_argument("--dependogram-csv", metavar="FILE",
                   help="companion CSV (defaults next to the SVG)")
    t.add_argument("--save-models", metavar="FILE",
                   help="write models fitted via fit directives")
    t.add_argument("--fail-on-reject", action="store_true",
                   help="exit with status 2 when independence is rejected")
    t.set_defaults(func=_cmd_test)

    f = sub.add_parser("fit", help="fit a dynamic model to one column")
    f.add_argument("data")
    f.add_argument("--column", help="column name (default: the only column)")
    f.add_argument("--kind", required=True, choices=sorted(_FITTERS))
    f.add_argument("--n-regimes", type=int, default=2)
    f.add_argument("--ar-order", type=int, default=0)
    f.add_argument("--zero-inflated", action="store_true")
    f.add_argument("--p", type=int, default=1, help="INGARCH order p")
    f.add_argument("--q", type=int, default=1, help="INGARCH order q")
    f.add_argument("--out", metavar="FILE", help="write the model JSON here")
    f.set_defaults(func=_cmd_fit)

    s = sub.add_parser("simulate", help="run a Monte-Carlo study")
    s.add_argument("study", help="TOML or JSON study description")
    s.add_argument("--out", default="study_results.csv",
                   help="CSV output path")
    s.add_argument("--manifest", help="manifest path (defaults next to out)")
    s.add_argument("--workers", type=int,
                   help="process count (capped by GEI_THREADS)")
    s.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ModelFitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
