"""Command-line pipeline: generate, train, evaluate, recommend, report.

Exit codes: 0 success, 2 usage or validation error, 3 I/O error,
4 numerical failure.  Path arguments fall back to the environment
variables SLABSELECT_DATASET, SLABSELECT_MODEL and SLABSELECT_OUTDIR.
"""
import argparse
import csv
import logging
import os
import sys
import tempfile

import numpy as np

from slabselect import CLASSES, FEATURES, SOLVERS
from slabselect import dataset as ds
from slabselect import evaluation as ev
from slabselect import ml
from slabselect.ml.persist import ModelFormatError
from slabselect.transport import SlabProblem, ZeroPivotError

log = logging.getLogger("slabselect")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

SEEDED_KINDS = ("rf", "mlp")


class UsageError(Exception):
    pass


def _env(name):
    value = os.environ.get(name)
    return value if value else None


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _hyperparameters(pairs):
    out = {}
    for item in pairs or ():
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise UsageError(f"hyperparameter must look like name=value, got {item!r}")
        out[key.strip()] = _value(raw.strip())
    return out


def _require(path, what, env):
    if path is None:
        raise UsageError(f"no {what} given (pass it explicitly or set {env})")
    return path


def _atomic_writer(path):
    """Temp file beside ``path``; created up front so unwritable targets fail fast."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".slabselect-", suffix=".tmp", dir=directory)
    os.close(fd)
    return tmp


# -- generate ---------------------------------------------------------------

def _grid(args):
    grid = ds.FeatureGrid()
    orders = args.orders or grid.sn_orders
    cells = args.cells or grid.cell_counts
    ratios = args.ratios if args.ratios is not None else grid.scattering_ratios
    if any(n < 2 or n % 2 for n in orders):
        raise UsageError(f"S_N orders must be positive even integers, got {orders}")
    if any(i < 1 for i in cells):
        raise UsageError(f"cell counts must be positive integers, got {cells}")
    if not ratios or any(not 0.0 <= c <= 1.0 for c in ratios):
        raise UsageError(f"scattering ratios must lie in [0, 1], got {ratios}")
    return ds.FeatureGrid(tuple(orders), tuple(cells), tuple(ratios))


def distribution_summary(records) -> str:
    lines = [f"{'label':<12}" + "".join(f"{'best_' + c:>20}" for c in ds.CRITERIA)]
    dists = {c: ds.label_distribution(records, c) for c in ds.CRITERIA}
    for s in SOLVERS:
        cells = []
        for c in ds.CRITERIA:
            total = sum(dists[c].values()) or 1
            cells.append(f"{dists[c][s]:>8} ({100.0 * dists[c][s] / total:6.2f}%)")
        lines.append(f"{s:<12}" + "".join(f"{x:>20}" for x in cells))
    return "\n".join(lines) + "\n"


def cmd_generate(args):
    out = _require(args.output or _env("SLABSELECT_DATASET"), "output path", "SLABSELECT_DATASET")
    grid = _grid(args)
    try:
        template = SlabProblem(tolerance=args.tolerance, max_sweeps=args.max_sweeps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.jobs < 1:
        raise UsageError(f"--jobs must be >= 1, got {args.jobs}")
    jobs = args.jobs
    if jobs > 1 and args.time_serial:
        log.warning("--time-serial is on, so cases run one at a time (pass --no-time-serial to use --jobs)")
        jobs = 1
    tmp = _atomic_writer(out)
    try:
        def progress(done, total):
            if done == total or done % max(total // 20, 1) == 0:
                log.info("solved %d/%d cases", done, total)

        records = ds.generate(grid, template, jobs=jobs, progress=progress)
        records = ds.label_best(records, "sweeps")
        records = ds.label_best(records, "runtime")
        ds.write_csv(records, tmp)
        os.replace(tmp, out)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
    sys.stdout.write(f"wrote {len(records)} cases to {out}\n")
    sys.stdout.write(distribution_summary(records))
    return EXIT_OK


# -- train -------------------------------------------------------------------

def _load_dataset(path, label):
    records = ds.read_csv(path)
    try:
        return ml.LabeledDataset.from_records(records, label)
    except ValueError as exc:
        raise ds.DatasetFormatError(f"{path}: {exc}") from None


def _model_factory(kind, hyper, seed):
    if kind not in ml.KINDS:
        raise UsageError(f"unknown model kind {kind!r}; choose from {', '.join(ml.KINDS)}")
    hyper = dict(hyper)
    if kind in SEEDED_KINDS:
        hyper.setdefault("seed", seed)
    try:
        ml.make_model(kind, **hyper)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad hyperparameters for {kind}: {exc}") from None
    return lambda: ml.make_model(kind, **hyper)


def cmd_train(args):
    data = _require(args.data or _env("SLABSELECT_DATASET"), "dataset path", "SLABSELECT_DATASET")
    out = _require(args.output or _env("SLABSELECT_MODEL"), "model output path", "SLABSELECT_MODEL")
    factory = _model_factory(args.model, _hyperparameters(args.set), args.seed)
    dataset = _load_dataset(data, args.label)
    model = factory().fit(dataset.features, dataset.labels)
    meta = {"seed": args.seed, "label": args.label, "features": list(FEATURES), "rows": len(dataset)}
    tmp = _atomic_writer(out)
    try:
        ml.save_model(model, tmp, meta)
        os.replace(tmp, out)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
    sys.stdout.write(f"trained {args.model} on {len(dataset)} rows ({args.label} labels) -> {out}\n")
    return EXIT_OK


# -- evaluate ----------------------------------------------------------------

def cmd_evaluate(args):
    data = _require(args.data or _env("SLABSELECT_DATASET"), "dataset path", "SLABSELECT_DATASET")
    if args.all == bool(args.model):
        raise UsageError("pass exactly one of --model KIND or --all")
    try:
        cv = ev.CVConfig(args.folds, args.repeats, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    kinds = ml.KINDS if args.all else (args.model,)
    hyper = _hyperparameters(args.set)
    factories = [(k, _model_factory(k, hyper if not args.all else {}, args.seed)) for k in kinds]
    dataset = _load_dataset(data, args.label)
    reports = []
    for kind, factory in factories:
        log.info("cross-validating %s", kind)
        try:
            reports.append(ev.repeated_stratified_kfold(dataset, factory, cv, kind=kind, label=args.label))
        except ev.StratificationError as exc:
            raise UsageError(str(exc)) from None
    ranked = ev.rank_models(reports)
    outdir = args.output_dir or _env("SLABSELECT_OUTDIR") or "."
    stem = "all" if args.all else args.model
    json_path = args.json or os.path.join(outdir, f"eval_{stem}_{args.label}.json")
    csv_path = args.folds_csv or os.path.join(outdir, f"eval_{stem}_{args.label}_folds.csv")
    ev.write_report_json(ranked, json_path, timing=not args.no_timing)
    ev.write_folds_csv(ranked, csv_path, timing=not args.no_timing)
    sys.stdout.write(ev.format_table(ranked))
    sys.stdout.write(f"report: {json_path}\nfolds:  {csv_path}\n")
    return EXIT_OK


# -- recommend ---------------------------------------------------------------

def class_scores(model, X):
    """Per-class scores for one row, keyed by solver name, or None."""
    kind = model.kind
    if kind == "rf":
        counts = model.vote_counts(X)[0]
        return {CLASSES[k]: counts[k] / model.n_trees for k in range(len(CLASSES))}
    if kind == "mlp":
        prob = model.predict_proba(X)[0]
        return {CLASSES[int(k)]: float(p) for k, p in zip(model.classes_, prob)}
    if kind == "lda":
        disc = model.discriminants(X)[0]
        return {CLASSES[int(k)]: float(d) for k, d in zip(model.classes_, disc)}
    if kind == "knn":
        votes = model.train_y[model.neighbours(X)[0]]
        return {CLASSES[int(k)]: float(np.mean(votes == k)) for k in model.classes_}
    if kind == "svm":
        values = model.decision_values(X)[0]
        votes = {CLASSES[int(k)]: 0 for k in model.classes_}
        for v, m in zip(values, model.machines):
            votes[CLASSES[m["positive"] if v > 0 else m["negative"]]] += 1
        return votes
    return None


def cmd_recommend(args):
    path = _require(args.model_file or _env("SLABSELECT_MODEL"), "model file", "SLABSELECT_MODEL")
    if args.sn_order < 1:
        raise UsageError(f"sn_order must be a positive integer, got {args.sn_order}")
    if args.num_cells < 1:
        raise UsageError(f"num_cells must be a positive integer, got {args.num_cells}")
    if not 0.0 <= args.scattering_ratio <= 1.0:
        raise UsageError(f"scattering_ratio must lie in [0, 1], got {args.scattering_ratio}")
    model, _ = ml.load_model(path)
    X = np.array([[args.sn_order, args.num_cells, args.scattering_ratio]], dtype=float)
    choice = CLASSES[int(model.predict(X)[0])]
    sys.stdout.write(choice + "\n")
    scores = class_scores(model, X)
    if scores:
        sys.stdout.write(" ".join(f"{k}={v:.6g}" for k, v in sorted(scores.items())) + "\n")
    return EXIT_OK


# -- report ------------------------------------------------------------------

def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def distribution_svg(records) -> str:
    """Grouped bar chart of label shares per criterion."""
    colours = {"richardson": "#4c72b0", "dsa": "#dd8452", "nda": "#55a868"}
    width, height, pad, bar = 420, 260, 40, 36
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">']
    plot_h = height - 2 * pad
    for gi, crit in enumerate(ds.CRITERIA):
        dist = ds.label_distribution(records, crit)
        total = sum(dist.values()) or 1
        x0 = pad + gi * (len(SOLVERS) * bar + 60)
        for si, s in enumerate(SOLVERS):
            share = dist[s] / total
            h = share * plot_h
            x = x0 + si * bar
            y = height - pad - h
            parts.append(f'<rect x="{x}" y="{y:.1f}" width="{bar - 4}" height="{h:.1f}" fill="{colours[s]}"/>')
            parts.append(f'<text x="{x + (bar - 4) / 2}" y="{y - 3:.1f}" text-anchor="middle">'
                         f'{100 * share:.1f}%</text>')
        parts.append(f'<text x="{x0 + len(SOLVERS) * bar / 2}" y="{height - pad + 16}" '
                     f'text-anchor="middle">best by {crit}</text>')
    for si, s in enumerate(SOLVERS):
        parts.append(f'<rect x="{width - 110}" y="{10 + 16 * si}" width="10" height="10" fill="{colours[s]}"/>')
        parts.append(f'<text x="{width - 95}" y="{19 + 16 * si}">{s}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_report(args):
    data = _require(args.data or _env("SLABSELECT_DATASET"), "dataset path", "SLABSELECT_DATASET")
    outdir = args.output_dir or _env("SLABSELECT_OUTDIR")
    outdir = _require(outdir, "output directory", "SLABSELECT_OUTDIR")
    records = ds.read_csv(data)
    model = None
    if args.model_file:
        model, _ = ml.load_model(args.model_file)
        if model.kind != "rf":
            raise UsageError(f"Gini importance needs an rf model, got {model.kind}")
    os.makedirs(outdir, exist_ok=True)
    written = []
    for crit in ds.CRITERIA:
        dist = ds.label_distribution(records, crit)
        total = sum(dist.values())
        rows = [[s, dist[s], f"{100.0 * dist[s] / total:.4f}" if total else "0"] for s in SOLVERS]
        path = os.path.join(outdir, f"distribution_{crit}.csv")
        _write_rows(path, ["label", "count", "percent"], rows)
        written.append(path)
    path = os.path.join(outdir, "feature_space.csv")
    _write_rows(path, list(FEATURES) + ["best_sweeps", "best_runtime"],
                [[r.sn_order, r.num_cells, repr(r.scattering_ratio), r.best_sweeps or "", r.best_runtime or ""]
                 for r in records])
    written.append(path)
    if model is not None:
        imp = model.gini_importance()
        path = os.path.join(outdir, "gini_importance.csv")
        _write_rows(path, ["feature", "mean_decrease_gini"],
                    [[name, f"{v:.10g}"] for name, v in zip(FEATURES, imp)])
        written.append(path)
        path = os.path.join(outdir, "tree.txt")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(model.trees[args.tree].export_text(max_depth=args.depth))
        written.append(path)
    if args.svg:
        path = os.path.join(outdir, "distribution.svg")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(distribution_svg(records))
        written.append(path)
    for p in written:
        sys.stdout.write(p + "\n")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="slabselect", description="Slab transport solver selection toolkit.")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="solve the feature grid with every solver and label winners")
    g.add_argument("-o", "--output", help="dataset CSV to write [$SLABSELECT_DATASET]")
    g.add_argument("--orders", type=_int_list, help="S_N orders, e.g. 2,4,8")
    g.add_argument("--cells", type=_int_list, help="cell counts, e.g. 16,128")
    g.add_argument("--ratios", type=_float_list, help="scattering ratios, e.g. 0,0.5,0.99")
    g.add_argument("--tolerance", type=float, default=1e-5)
    g.add_argument("--max-sweeps", type=int, default=10_000)
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--time-serial", action=argparse.BooleanOptionalAction, default=True,
                   help="solve cases one at a time so runtimes are comparable (default on)")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="fit one classifier on a dataset")
    t.add_argument("-d", "--data", help="dataset CSV [$SLABSELECT_DATASET]")
    t.add_argument("-o", "--output", help="model file to write [$SLABSELECT_MODEL]")
    t.add_argument("--model", required=True, help=f"one of {', '.join(ml.KINDS)}")
    t.add_argument("--label", choices=ds.CRITERIA, default="sweeps")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--set", action="append", metavar="NAME=VALUE", help="hyperparameter override (repeatable)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="repeated stratified k-fold cross-validation")
    e.add_argument("-d", "--data", help="dataset CSV [$SLABSELECT_DATASET]")
    e.add_argument("--model", help=f"one of {', '.join(ml.KINDS)}")
    e.add_argument("--all", action="store_true", help="evaluate and rank every model kind")
    e.add_argument("--label", choices=ds.CRITERIA, default="sweeps")
    e.add_argument("--folds", type=int, default=4)
    e.add_argument("--repeats", type=int, default=25)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--set", action="append", metavar="NAME=VALUE", help="hyperparameter override (single model)")
    e.add_argument("--output-dir", help="where reports go [$SLABSELECT_OUTDIR, else .]")
    e.add_argument("--json", help="report JSON path")
    e.add_argument("--folds-csv", help="per-fold CSV path")
    e.add_argument("--no-timing", action="store_true", help="omit wall-clock fields from the outputs")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("recommend", help="pick a solver for a new configuration")
    r.add_argument("-m", "--model-file", help="trained model [$SLABSELECT_MODEL]")
    r.add_argument("sn_order", type=int)
    r.add_argument("num_cells", type=int)
    r.add_argument("scattering_ratio", type=float)
    r.set_defaults(func=cmd_recommend)

    s = sub.add_parser("report", help="distribution, feature-space and importance summaries")
    s.add_argument("-d", "--data", help="dataset CSV [$SLABSELECT_DATASET]")
    s.add_argument("-o", "--output-dir", help="directory for the outputs [$SLABSELECT_OUTDIR]")
    s.add_argument("-m", "--model-file", help="trained rf model for importance and tree export")
    s.add_argument("--tree", type=int, default=0, help="which forest tree to export")
    s.add_argument("--depth", type=int, default=3, help="export depth")
    s.add_argument("--svg", action="store_true", help="also draw the distribution bar chart")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (ml.TrainingError, ds.LabelingError, ZeroPivotError, FloatingPointError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except (OSError, ds.DatasetFormatError, ModelFormatError) as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except IndexError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
