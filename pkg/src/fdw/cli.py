"""Command-line entry point.

Subcommands wire the library end to end: ``densities`` (per-variant density
report), ``run`` (cross-validated sweep), ``correlate`` (best-F1 and
FD-correlation table), ``recommend`` (band pruning with energy savings),
``schedule`` (coarse-to-fine sweep rounds), ``energy`` (standalone
energy/CO2 arithmetic), and ``replicate-paper`` (fixture reproduction
suite). Exit codes: 0 success, 1 usage error, 2 data error.

Reports meant for humans are always also written as CSV/JSON, and report
directories get matplotlib figures next to the delimited files unless
``--no-figures`` is passed. Warnings go to stderr; data goes to stdout or
files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import balance, corpus as corpus_mod, density, evaluation, figures, planner, replication
from .fixtures import FixtureError, load_tables
from .learners import (
    DEFAULT_HYPERPARAMS,
    UNAVAILABLE_KINDS,
    ClassifierSpec,
    UnavailableClassifierError,
)
from .pipelines import (
    CapabilityError,
    PipelineNameError,
    enumerate_pipelines,
    pipeline_name,
    required_layers,
    resolve_pipelines,
)

log = logging.getLogger("fdw")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _StderrHandler(logging.StreamHandler):
    """Resolves sys.stderr at emit time so redirection always works."""

    def __init__(self) -> None:
        logging.Handler.__init__(self)

    @property
    def stream(self):
        return sys.stderr


_LOG_CONFIGURED = False


def _configure_logging() -> None:
    global _LOG_CONFIGURED
    if _LOG_CONFIGURED:
        return
    handler = _StderrHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s %(message)s"))
    package_log = logging.getLogger("fdw")
    package_log.addHandler(handler)
    package_log.setLevel(logging.INFO)
    _LOG_CONFIGURED = True

DEFAULT_BAND = (0.05, 0.15)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fdw", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_corpus_args(p):
        p.add_argument("--corpus", required=True, help="corpus file path")
        p.add_argument(
            "--format", default="jsonl", choices=("jsonl", "conllu", "plain"),
            help="corpus file format (plain: one 'label<TAB>text' line per document)",
        )
        p.add_argument("--stopwords", default=None,
                       help="stopword list path (overrides FDW_STOPWORDS and the bundled list)")

    def add_out_args(p):
        p.add_argument("--out", default=None, help="output directory for report files")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering figures next to the delimited reports")

    p = sub.add_parser("densities", help="feature-density report per preprocessing variant")
    add_corpus_args(p)
    p.add_argument("--pipelines", default="all",
                   help="'all' or comma-separated canonical names (default: all)")
    p.add_argument("--band", default=None, help="FD band lo:hi to shade in the figure")
    add_out_args(p)

    p = sub.add_parser("run", help="cross-validated sweep over variants and classifiers")
    add_corpus_args(p)
    p.add_argument("--pipelines", default="all")
    p.add_argument("--classifiers", default="all",
                   help="'all' or comma-separated kinds (default: all implemented)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--smote-k", type=int, default=5)
    p.add_argument("--smote-ratio", type=float, default=1.0)
    p.add_argument("--no-smote", action="store_true")
    p.add_argument("--band", default=None,
                   help="run only variants whose measured FD falls in lo:hi")
    p.add_argument("--plan", default=None,
                   help="sweep plan JSON; runs the plan's most recent round")
    p.add_argument("--hp", action="append", default=[], metavar="KIND.PARAM=VALUE",
                   help="hyperparameter override, repeatable")
    p.add_argument("--jobs", type=int, default=0,
                   help="parallel workers (0 = all cores, 1 = sequential)")
    p.add_argument("--pooled", action="store_true",
                   help="also report pooled-confusion F1 in the summary")
    p.add_argument("--config", default=None,
                   help="re-run from a stored config.json, reproducing its outputs")
    add_out_args(p)

    p = sub.add_parser("correlate", help="best-F1 and rho(FD, F1) table from saved reports")
    p.add_argument("--results", required=True, help="results.csv from a run")
    p.add_argument("--densities", required=True, help="densities.csv from a run")
    p.add_argument("--include-poss", action="store_true",
                   help="keep the bare-POS-tag variants in the correlation")
    add_out_args(p)

    p = sub.add_parser("recommend", help="band pruning plus estimated energy savings")
    p.add_argument("--densities", default=None,
                   help="densities.csv (default: the bundled reference table)")
    p.add_argument("--band", default="0.05:0.15")
    p.add_argument("--power", type=float, default=planner.NON_NEURAL_POWER_W)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--grid-intensity", type=float, default=planner.DEFAULT_GRID_INTENSITY)
    p.add_argument("--car-g-per-km", type=float, default=planner.DEFAULT_CAR_G_PER_KM)
    p.add_argument("--runtime-estimate", type=float, default=None,
                   help="seconds for one full-sweep CV repetition (enables savings figures)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("schedule", help="emit or refine a coarse-to-fine sweep plan")
    p.add_argument("--densities", required=True)
    p.add_argument("--plan", required=True, help="plan JSON path (created when missing)")
    p.add_argument("--stride", type=int, default=4)
    p.add_argument("--refine-radius", type=float, default=0.02)
    p.add_argument("--budget", type=int, default=68)
    p.add_argument("--results", default=None,
                   help="results.csv for refining an existing plan")

    p = sub.add_parser("energy", help="standalone energy and CO2 arithmetic")
    p.add_argument("--runtime-s", type=float, required=True)
    p.add_argument("--power", type=float, default=planner.NON_NEURAL_POWER_W)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--grid-intensity", type=float, default=planner.DEFAULT_GRID_INTENSITY)
    p.add_argument("--car-g-per-km", type=float, default=planner.DEFAULT_CAR_G_PER_KM)

    p = sub.add_parser("replicate-paper", help="reproduction checks over the bundled tables")
    p.add_argument("--out", default=None)
    p.add_argument("--no-figures", action="store_true")

    return parser


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)

    handler = {
        "densities": _cmd_densities,
        "run": _cmd_run,
        "correlate": _cmd_correlate,
        "recommend": _cmd_recommend,
        "schedule": _cmd_schedule,
        "energy": _cmd_energy,
        "replicate-paper": _cmd_replicate,
    }[args.command]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PipelineNameError, UnavailableClassifierError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (corpus_mod.CorpusFormatError, corpus_mod.CorpusValidationError,
            CapabilityError, FixtureError, planner.PlanError, OSError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _load_corpus(args) -> corpus_mod.Corpus:
    stopwords = corpus_mod.resolve_stopwords(args.stopwords)
    path = Path(args.corpus)
    if not path.exists():
        raise corpus_mod.CorpusFormatError(f"corpus file not found: {path}")
    if args.format == "jsonl":
        return corpus_mod.load_jsonl(path)
    if args.format == "conllu":
        return corpus_mod.load_conllu(path, stopwords=stopwords)
    pairs = []
    for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        label, _, text = line.partition("\t")
        if label not in ("0", "1"):
            raise corpus_mod.CorpusFormatError(
                f"line {lineno}: plain format needs 'label<TAB>text' with label 0 or 1"
            )
        pairs.append((text, int(label)))
    return corpus_mod.annotate_plain(pairs, stopwords=stopwords)


def _parse_band(text: str) -> tuple[float, float]:
    try:
        lo_s, _, hi_s = text.partition(":")
        lo, hi = float(lo_s), float(hi_s)
    except ValueError as exc:
        raise UsageError(f"band must be lo:hi, got {text!r}") from exc
    if lo > hi:
        raise UsageError(f"band lower bound {lo} exceeds upper bound {hi}")
    return lo, hi


def _select_supported(specs, capabilities):
    """Split pipeline specs into runnable and capability-blocked."""
    runnable, blocked = [], []
    for spec in specs:
        missing = required_layers(spec) - capabilities
        if missing:
            blocked.append((spec, sorted(missing)))
        else:
            runnable.append(spec)
    for spec, missing in blocked:
        log.warning("skipping %s: corpus lacks %s", pipeline_name(spec), ", ".join(missing))
    return runnable


def _resolve_classifiers(selection: str) -> list[str]:
    if selection.strip().lower() == "all":
        return sorted(DEFAULT_HYPERPARAMS)
    kinds = []
    for part in selection.split(","):
        part = part.strip()
        if not part:
            continue
        if part in UNAVAILABLE_KINDS:
            raise UnavailableClassifierError(
                f"classifier {part!r} ({UNAVAILABLE_KINDS[part]}) is recognized but not "
                f"trainable here; implemented kinds: " + ", ".join(sorted(DEFAULT_HYPERPARAMS))
            )
        if part not in DEFAULT_HYPERPARAMS:
            raise UsageError(
                f"unknown classifier {part!r}; valid names: "
                + ", ".join(sorted(DEFAULT_HYPERPARAMS))
            )
        kinds.append(part)
    if not kinds:
        raise UsageError("empty classifier selection")
    return kinds


def _parse_hp_overrides(pairs: list[str]) -> dict[str, dict[str, object]]:
    out: dict[str, dict[str, object]] = {}
    for item in pairs:
        try:
            key, _, raw = item.partition("=")
            kind, _, param = key.partition(".")
            if not (kind and param and raw != ""):
                raise ValueError
        except ValueError:
            raise UsageError(f"--hp expects KIND.PARAM=VALUE, got {item!r}") from None
        out.setdefault(kind, {})[param] = _parse_value(raw)
    return out


def _parse_value(raw: str):
    low = raw.strip().lower()
    if low in ("none", "null"):
        return None
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def _out_dir(args) -> Path | None:
    if args.out is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_densities(args) -> int:
    corpus = _load_corpus(args)
    specs = _select_supported(resolve_pipelines(args.pipelines), corpus.capabilities)
    if not specs:
        raise CapabilityError("no requested pipeline is runnable on this corpus")
    records = density.density_report(corpus, specs)
    csv_text = density.format_density_csv(records)
    sys.stdout.write(csv_text)
    out = _out_dir(args)
    if out is not None:
        (out / "densities.csv").write_text(csv_text, encoding="utf-8")
        if not args.no_figures:
            band = _parse_band(args.band) if args.band else None
            figures.plot_density_profile(records, out / "density_profile.png", band=band)
        log.info("densities written to %s", out)
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.config:
        stored = json.loads(Path(args.config).read_text("utf-8"))
        for key, value in stored.items():
            if key != "out" and hasattr(args, key):
                setattr(args, key, value)

    corpus = _load_corpus(args)
    specs = _select_supported(resolve_pipelines(args.pipelines), corpus.capabilities)
    if not specs:
        raise CapabilityError("no requested pipeline is runnable on this corpus")
    kinds = _resolve_classifiers(args.classifiers)
    hp = _parse_hp_overrides(args.hp) if isinstance(args.hp, list) else args.hp

    records = density.density_report(corpus, specs)
    if args.band:
        lo, hi = _parse_band(args.band)
        kept, skipped = density.band_filter(records, lo, hi)
        for rec in skipped:
            log.info("band-pruned %s (fd=%.4f outside [%g, %g])", rec.name, rec.fd, lo, hi)
        records = kept
        specs = [r.pipeline for r in records]
        if not specs:
            raise CapabilityError("band pruning removed every pipeline")

    if args.plan:
        plan_obj = planner.read_plan(args.plan)
        order = {pipeline_name(s): i for i, s in enumerate(specs)}
        round_names = [n for n in plan_obj.rounds[-1] if n in order]
        if not round_names:
            raise planner.PlanError("the plan's most recent round has no runnable pipeline")
        specs = [specs[order[n]] for n in round_names]
        records = [r for r in records if r.name in set(round_names)]

    labels = [d.label for d in corpus.usable_docs]
    plan = evaluation.stratified_folds(labels, k=args.folds, seed=args.seed)
    smote_cfg = None if args.no_smote else balance.SmoteConfig(
        k=args.smote_k, target_ratio=args.smote_ratio, seed=args.seed
    )
    clf_specs = [ClassifierSpec(kind=k, params=hp.get(k, {}), seed=args.seed) for k in kinds]
    for spec in clf_specs:
        try:
            spec.resolved_params()  # fail fast on bad hyperparameters
        except UnavailableClassifierError:
            raise
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    probe = evaluation.LeakageProbe()
    jobs = args.jobs if args.jobs and args.jobs > 0 else None
    results = evaluation.run_sweep(corpus, specs, clf_specs, plan, smote_cfg,
                                   jobs=jobs, probe=probe)

    rows, warnings = evaluation.correlate_results(results, records)
    for msg in warnings:
        log.warning("%s", msg)

    results_csv = evaluation.format_results_csv(results)
    sys.stdout.write(results_csv)

    out = _out_dir(args)
    if out is not None:
        (out / "results.csv").write_text(results_csv, encoding="utf-8")
        (out / "densities.csv").write_text(density.format_density_csv(records), encoding="utf-8")
        (out / "f1_matrix.csv").write_text(evaluation.format_f1_matrix_csv(results),
                                           encoding="utf-8")
        (out / "correlation.csv").write_text(evaluation.format_correlation_csv(rows),
                                             encoding="utf-8")
        (out / "leakage.json").write_text(probe.to_json(), encoding="utf-8")
        config = {
            "corpus": str(args.corpus),
            "format": args.format,
            "stopwords": args.stopwords,
            "pipelines": args.pipelines,
            "classifiers": args.classifiers,
            "folds": args.folds,
            "seed": args.seed,
            "smote_k": args.smote_k,
            "smote_ratio": args.smote_ratio,
            "no_smote": args.no_smote,
            "band": args.band,
            "plan": args.plan,
            "hp": hp,
            "pooled": args.pooled,
        }
        (out / "config.json").write_text(json.dumps(config, indent=1, sort_keys=True) + "\n",
                                         encoding="utf-8")
        (out / "seed.txt").write_text(f"{args.seed}\n", encoding="utf-8")
        summary = _run_summary(args, results, rows, config)
        (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n",
                                          encoding="utf-8")
        if not args.no_figures:
            fd_by_name = {r.name: r.fd for r in records}
            points = {}
            for res in results:
                if res.pipeline in fd_by_name:
                    points.setdefault(res.classifier, []).append(
                        (fd_by_name[res.pipeline], res.mean_f1)
                    )
            if points:
                figures.plot_f1_vs_fd(points, out / "f1_vs_fd.png", band=DEFAULT_BAND)
        log.info("run reports written to %s", out)
    return EXIT_OK


def _run_summary(args, results, rows, config) -> dict:
    summary = {
        "config_fingerprint": evaluation.config_fingerprint(config),
        "seed": args.seed,
        "assumptions": {
            "smote": None if args.no_smote else
                     {"k": args.smote_k, "target_ratio": args.smote_ratio,
                      "placement": "inside each training fold"},
            "f1": "positive class, macro-averaged over folds",
        },
        "best_by_classifier": {
            r.classifier: {
                "best_f1": r.best_f1,
                "best_pipeline": r.best_pipeline,
                "best_fd": r.best_fd,
                "rho_fd_f1": r.rho,
                "n_pipelines": r.n_pipelines,
            }
            for r in rows
        },
        "total_runtime_s": float(sum(r.runtime_s for r in results)),
        "n_experiments": len(results),
    }
    if args.pooled:
        summary["pooled_f1_by_classifier"] = {
            clf: {
                res.pipeline: evaluation.pooled_f1(res)
                for res in results
                if res.classifier == clf
            }
            for clf in sorted({r.classifier for r in results})
        }
    return summary


def _cmd_correlate(args) -> int:
    results = evaluation.read_results_csv(args.results)
    records = density.read_density_csv(args.densities)
    exclude = None if args.include_poss else evaluation.exclude_poss_family
    rows, warnings = evaluation.correlate_results(results, records, exclude=exclude)
    for msg in warnings:
        log.warning("%s", msg)
    csv_text = evaluation.format_correlation_csv(rows)
    sys.stdout.write(csv_text)
    out = _out_dir(args)
    if out is not None:
        (out / "correlation.csv").write_text(csv_text, encoding="utf-8")
        if not args.no_figures:
            fd_by_name = {r.name: r.fd for r in records}
            points = {}
            for res in results:
                if res.pipeline in fd_by_name:
                    points.setdefault(res.classifier, []).append(
                        (fd_by_name[res.pipeline], res.mean_f1)
                    )
            if points:
                figures.plot_f1_vs_fd(points, out / "f1_vs_fd.png", band=DEFAULT_BAND)
        log.info("correlation report written to %s", out)
    return EXIT_OK


def _cmd_recommend(args) -> int:
    if args.densities:
        records = density.read_density_csv(args.densities)
    else:
        log.warning("no --densities given; using the bundled reference density table")
        records = _fixture_density_records()
    lo, hi = _parse_band(args.band)
    model = planner.EnergyModel(
        power_watts=args.power,
        folds=args.folds,
        grid_intensity_g_per_kwh=args.grid_intensity,
        car_g_per_km=args.car_g_per_km,
    )
    rec = planner.recommendation(records, lo, hi, model, runtime_s=args.runtime_estimate)
    text = json.dumps(rec, indent=1, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "recommend.json").write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _fixture_density_records() -> list[density.DensityRecord]:
    from .pipelines import parse_pipeline_name

    tables = load_tables()
    return [
        density.DensityRecord(
            pipeline=parse_pipeline_name(r.pipeline),
            unique_count=r.unique,
            total_count=r.total,
            fd=r.fd,
        )
        for r in tables.table2
    ]


def _cmd_schedule(args) -> int:
    records = density.read_density_csv(args.densities)
    plan_path = Path(args.plan)
    if not plan_path.exists():
        plan = planner.coarse_to_fine(records, args.stride, args.refine_radius, args.budget)
        planner.write_plan(plan, plan_path)
        print(json.dumps({"round": 1, "pipelines": plan.rounds[0],
                          "complete": plan.complete}, indent=1))
        return EXIT_OK
    plan = planner.read_plan(plan_path)
    if args.results is None:
        raise UsageError("refining an existing plan needs --results")
    observed = {r.pipeline: r.mean_f1 for r in evaluation.read_results_csv(args.results)}
    new_round = planner.refine_plan(plan, observed)
    planner.write_plan(plan, plan_path)
    print(json.dumps({"round": len(plan.rounds), "pipelines": new_round,
                      "complete": plan.complete}, indent=1))
    return EXIT_OK


def _cmd_energy(args) -> int:
    model = planner.EnergyModel(
        power_watts=args.power,
        folds=args.folds,
        grid_intensity_g_per_kwh=args.grid_intensity,
        car_g_per_km=args.car_g_per_km,
    )
    wh = planner.estimate_energy_wh(args.runtime_s, model)
    grams = planner.co2_grams(wh / 1000.0, model)
    print(json.dumps(
        {
            "runtime_s": args.runtime_s,
            "power_watts": model.power_watts,
            "folds": model.folds,
            "energy_wh": wh,
            "energy_kwh": wh / 1000.0,
            "co2_g": grams,
            "car_km": planner.car_km(grams, model),
        },
        indent=1,
        sort_keys=True,
    ))
    return EXIT_OK


def _cmd_replicate(args) -> int:
    tables = load_tables()
    checks = replication.run_all_checks(tables)
    for check in checks:
        print(check.line())
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        payload = {
            c.name: {"passed": c.passed, "detail": c.detail, "data": c.data} for c in checks
        }
        (out / "replication.json").write_text(
            json.dumps(payload, indent=1, sort_keys=True, default=float) + "\n",
            encoding="utf-8",
        )
        if not args.no_figures:
            fd = tables.fd_by_pipeline()
            points = {
                clf: [(fd[name], cells[clf]) for name, cells in tables.table5.items()]
                for clf in sorted({r.classifier for r in tables.table3})
            }
            figures.plot_f1_vs_fd(points, out / "f1_vs_fd_reference.png", band=DEFAULT_BAND)
        log.info("replication report written to %s", out)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_DATA
