"""End-to-end study: do metric-learned spaces make SDCC track classifier error?

For each dataset the pipeline

1. fits NCA, MLKR and LMNN on every row and builds the transformed spaces;
2. discretizes each space with per-feature 1-D k-means (discrete original
   features pass through);
3. draws seeded 80/20 splits, trains every classifier on the raw training
   rows and splits the test rows into correctly and incorrectly classified;
4. computes ``SDCC^t(train, correct)`` and ``SDCC^t(train, incorrect)`` in
   every space, with the training set as the reference set;
5. compares each learned space against the original with paired t-tests over
   the pooled (fold, classifier) differences.

Sub-seeds (see :mod:`sdcc.seeding`)::

    folds               derive_seed(master_seed, dataset, "folds")
    discretization      derive_seed(master_seed, dataset, "bins")
    metric learning     derive_seed(master_seed, dataset, "metric", method)

The discretization seed does not depend on the space, so a space equal to
the original gets identical bins.
"""

import configparser
import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import discretize
from .classifiers import CLASSIFIERS, partition_by_correctness, train
from .coverage import combination_codes, sdcc_from_codes
from .dataset import (CONTINUOUS, BUILTIN_DIR, Dataset, DatasetManifest, Schema,
                      builtin_manifest, make_folds, read_manifest)
from .errors import (DegenerateX, IncompleteReport, InvalidArgument, ManifestError,
                     SdccError)
from .metric_learning import METHODS, OptimizerConfig, fit_method, identity_map, transform
from .seeding import derive_seed
from .stats import TTestResult, linear_regression, paired_t_test, pearson

ORIGINAL = "ORIGINAL"
IDENTITY = "IDENTITY"
SPACES = (ORIGINAL,) + METHODS + (IDENTITY,)
DIRECTIONS = ("correct_minus_incorrect", "incorrect_minus_correct")
OUTCOMES = ("Higher", "Same", "Lower")

RECORD_FIELDS = ("dataset", "fold_index", "classifier", "space", "t", "sdcc_correct",
                 "sdcc_incorrect", "difference", "accuracy", "n_correct", "n_incorrect")


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    spaces: tuple = (ORIGINAL,) + METHODS
    t_values: tuple = (2, 3, 4)
    n_folds: int = 10
    test_fraction: float = 0.2
    bins: int = 5
    classifiers: tuple = CLASSIFIERS
    alpha: float = 0.05
    master_seed: int = 0
    difference_direction: str = DIRECTIONS[0]
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    jobs: int = 1

    def __post_init__(self):
        if any(t < 1 for t in self.t_values):
            raise InvalidArgument("t values must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise InvalidArgument("alpha must lie in (0, 1)")
        bad = [s for s in self.spaces if s not in SPACES]
        if bad:
            raise InvalidArgument(f"unknown spaces {bad}; choose from {SPACES}")
        bad = [c for c in self.classifiers if c not in CLASSIFIERS]
        if bad:
            raise InvalidArgument(f"unknown classifiers {bad}")
        if self.difference_direction not in DIRECTIONS:
            raise InvalidArgument(f"difference_direction must be one of {DIRECTIONS}")
        if self.bins < 1 or self.n_folds < 1:
            raise InvalidArgument("bins and n_folds must be >= 1")
        names = [m.name for m in self.datasets]
        if len(set(names)) != len(names):
            raise InvalidArgument("dataset names must be unique")

    def to_dict(self):
        return {
            "datasets": [m.name for m in self.datasets],
            "spaces": list(self.spaces),
            "t_values": list(self.t_values),
            "n_folds": self.n_folds,
            "test_fraction": self.test_fraction,
            "bins": self.bins,
            "classifiers": list(self.classifiers),
            "alpha": self.alpha,
            "master_seed": self.master_seed,
            "difference_direction": self.difference_direction,
            "optimizer": asdict(self.optimizer),
        }


@dataclass(frozen=True)
class FoldRecord:
    dataset: str
    fold_index: int
    classifier: str
    space: str
    t: int
    sdcc_correct: float
    sdcc_incorrect: float
    difference: float
    accuracy: float
    n_correct: int
    n_incorrect: int


@dataclass(frozen=True)
class TTestSummary:
    dataset: str
    t: int
    results: dict          # method -> TTestResult
    best_method: str
    outcome: str

    def to_dict(self):
        return {"dataset": self.dataset, "t": self.t, "best_method": self.best_method,
                "outcome": self.outcome,
                "results": {m: r.to_dict() for m, r in self.results.items()}}


@dataclass(frozen=True)
class CorrelationExport:
    points: dict           # space -> list of (dataset, classifier, t, fold, accuracy, difference)
    global_fit: dict       # space -> RegressionResult or None
    global_pearson: dict   # space -> float
    per_dataset: dict      # (space, dataset) -> RegressionResult or None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    records: list
    summaries: list
    correlation: CorrelationExport
    accuracy: dict         # dataset -> classifier -> (mean, std)
    maps: dict             # dataset -> method -> LinearMap
    dataset_sizes: dict    # dataset -> (N, d, n_classes)

    def records_csv(self):
        return records_to_csv(self.records)

    def correlation_csv(self):
        return correlation_to_csv(self.correlation)

    def to_json(self):
        return report_to_json(self)


# -- configuration files ---------------------------------------------------------

def _split_list(text):
    return tuple(x.strip() for x in text.replace(";", ",").split(",") if x.strip())


def read_config(path):
    """Parse a sectioned ``key = value`` experiment file.

    ``[experiment]`` holds run settings, ``[optimizer]`` the metric-learning
    solver settings, and each ``[dataset NAME]`` section either points to a
    manifest (``manifest = path`` or ``builtin = wine``) or inlines the
    manifest keys.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"config {str(path)!r} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from None
    return config_from_parser(parser, path.parent)


def config_from_parser(parser, base_dir="."):
    base_dir = Path(base_dir)
    exp = dict(parser["experiment"]) if parser.has_section("experiment") else {}
    kwargs = {}
    if "spaces" in exp:
        kwargs["spaces"] = tuple(s.upper() for s in _split_list(exp.pop("spaces")))
    if "classifiers" in exp:
        kwargs["classifiers"] = tuple(s.upper() for s in _split_list(exp.pop("classifiers")))
    if "t_values" in exp:
        kwargs["t_values"] = tuple(int(v) for v in _split_list(exp.pop("t_values")))
    for key, conv in (("n_folds", int), ("test_fraction", float), ("bins", int),
                      ("alpha", float), ("master_seed", int), ("jobs", int),
                      ("difference_direction", str)):
        if key in exp:
            try:
                kwargs[key] = conv(exp.pop(key))
            except ValueError as exc:
                raise ManifestError(f"[experiment] {key}: {exc}") from None
    if exp:
        raise ManifestError(f"[experiment] unknown keys {sorted(exp)}")
    if parser.has_section("optimizer"):
        opt = dict(parser["optimizer"])
        conv = {"max_iterations": int, "initial_step": float, "objective_tolerance": float,
                "restarts": int}
        unknown = set(opt) - set(conv)
        if unknown:
            raise ManifestError(f"[optimizer] unknown keys {sorted(unknown)}")
        kwargs["optimizer"] = OptimizerConfig(**{k: conv[k](v) for k, v in opt.items()})
    manifests = []
    for section in parser.sections():
        if not section.startswith("dataset"):
            if section not in ("experiment", "optimizer"):
                raise ManifestError(f"unknown section [{section}]")
            continue
        name = section[len("dataset"):].strip()
        body = dict(parser[section])
        if "builtin" in body:
            m = builtin_manifest(body["builtin"])
        elif "manifest" in body:
            m = read_manifest(base_dir / body["manifest"])
        else:
            m = DatasetManifest.from_mapping(body, base_dir, name)
        manifests.append(replace(m, name=name or m.name))
    if not manifests:
        raise ManifestError("config lists no [dataset ...] sections")
    return ExperimentConfig(tuple(manifests), **kwargs)


def replica_config(master_seed=42, datasets=("wine", "rice", "yeast", "car", "cancer",
                                             "balance"), **overrides):
    """The six-dataset study with its default settings."""
    manifests = tuple(builtin_manifest(n) for n in datasets)
    return ExperimentConfig(manifests, master_seed=master_seed, **overrides)


REPLICA_CONFIG_PATH = BUILTIN_DIR / "replica.cfg"


# -- the pipeline ---------------------------------------------------------------

def _context(exc, **where):
    tag = ", ".join(f"{k}={v}" for k, v in where.items() if v is not None)
    try:
        return type(exc)(f"[{tag}] {exc}")
    except TypeError:
        return exc


def _space_dataset(ds, lmap, keep_schema=False):
    Xt = transform(lmap, ds.rows)
    if keep_schema:
        return Dataset(ds.schema, Xt, ds.labels, ds.encodings, ds.name)
    schema = Schema(tuple(f"latent_{j}" for j in range(Xt.shape[1])),
                    (CONTINUOUS,) * Xt.shape[1], ds.schema.label_name)
    return Dataset(schema, Xt, ds.labels, {}, ds.name)


def fold_plans(ds, cfg):
    """The pipeline's train/test splits for ``ds`` (seeded by dataset name)."""
    return make_folds(ds, cfg.n_folds, cfg.test_fraction,
                      derive_seed(cfg.master_seed, ds.name, "folds"))


def classifier_accuracy(ds, cfg):
    """Mean and population std of test accuracy per classifier over the pipeline's folds.

    Uses the same splits as :func:`run_experiment` without fitting any
    metric-learning space.
    """
    y = ds.y
    accs = {c: [] for c in cfg.classifiers}
    for plan in fold_plans(ds, cfg):
        tr, te = np.array(plan.train_indices), np.array(plan.test_indices)
        for clf in cfg.classifiers:
            model = train(clf, ds.rows[tr], y[tr])
            accs[clf].append(float(np.mean(model.predict(ds.rows[te]) == y[te])))
    return {c: (float(np.mean(v)), float(np.std(v))) for c, v in accs.items()}


def run_dataset(manifest, cfg):
    """All fold records, fitted maps and accuracies for one dataset."""
    name = manifest.name
    try:
        ds = manifest.load()
    except SdccError as exc:
        raise _context(exc, dataset=name) from exc
    seed = cfg.master_seed
    maps = {}
    spaces = {}
    for space in cfg.spaces:
        try:
            if space == ORIGINAL:
                sds = ds
            else:
                if space == IDENTITY:
                    lmap = identity_map(ds.d)
                else:
                    lmap = fit_method(space, ds.rows, ds.labels, cfg.optimizer,
                                      derive_seed(seed, name, "metric", space))
                maps[space] = lmap
                sds = _space_dataset(ds, lmap, keep_schema=space == IDENTITY)
            spaces[space] = discretize.fit_apply(sds, cfg.bins,
                                                 derive_seed(seed, name, "bins"))[1]
        except SdccError as exc:
            raise _context(exc, dataset=name, space=space) from exc

    codes = {}
    for space, dd in spaces.items():
        for t in cfg.t_values:
            try:
                codes[space, t] = combination_codes(dd, t)[0]
            except SdccError as exc:
                raise _context(exc, dataset=name, space=space, t=t) from exc

    try:
        folds = fold_plans(ds, cfg)
    except SdccError as exc:
        raise _context(exc, dataset=name) from exc
    y = ds.y
    records = []
    accuracy = {c: [] for c in cfg.classifiers}
    for plan in folds:
        train_idx = np.array(plan.train_indices)
        test_idx = np.array(plan.test_indices)
        train_sets = {key: np.unique(c[:, train_idx]) for key, c in codes.items()}
        for clf in cfg.classifiers:
            try:
                model = train(clf, ds.rows[train_idx], y[train_idx])
                ok, bad = partition_by_correctness(model, ds.rows[test_idx], y[test_idx])
            except SdccError as exc:
                raise _context(exc, dataset=name, fold=plan.fold_index, classifier=clf) from exc
            ok, bad = test_idx[ok], test_idx[bad]
            acc = ok.size / test_idx.size
            accuracy[clf].append(acc)
            for space in cfg.spaces:
                for t in cfg.t_values:
                    c = codes[space, t]
                    num_c, den = sdcc_from_codes(train_sets[space, t], c[:, ok])
                    num_i, _ = sdcc_from_codes(train_sets[space, t], c[:, bad])
                    s_ok, s_bad = num_c / den, num_i / den
                    diff = s_ok - s_bad
                    if cfg.difference_direction == "incorrect_minus_correct":
                        diff = -diff
                    records.append(FoldRecord(name, plan.fold_index, clf, space, t, s_ok, s_bad,
                                              diff, acc, int(ok.size), int(bad.size)))
    acc_summary = {c: (float(np.mean(v)), float(np.std(v))) for c, v in accuracy.items()}
    size = (ds.n, ds.d, len(ds.classes))
    return records, maps, acc_summary, size


def classify_outcome(tt, alpha=0.05):
    """``Identical`` for degenerate tests, else Higher/Lower when significant, else Same."""
    if tt.degenerate:
        return "Identical"
    if tt.p_value < alpha and tt.statistic > 0:
        return "Higher"
    if tt.p_value < alpha and tt.statistic < 0:
        return "Lower"
    return "Same"


def t_test_summaries(records, cfg):
    """Paired t-tests of each learned space against the original space."""
    if ORIGINAL not in cfg.spaces:
        return []
    methods = [s for s in cfg.spaces if s != ORIGINAL]
    table = {}
    for r in records:
        table[r.dataset, r.t, r.space, r.fold_index, r.classifier] = r.difference
    summaries = []
    for m in cfg.datasets:
        for t in cfg.t_values:
            keys = [(f, c) for f in range(cfg.n_folds) for c in cfg.classifiers]
            base = [table[m.name, t, ORIGINAL, f, c] for f, c in keys]
            results = {}
            for method in methods:
                vals = [table[m.name, t, method, f, c] for f, c in keys]
                results[method] = paired_t_test(vals, base)
            if not results:
                continue
            best = max(methods, key=lambda s: (results[s].statistic, -methods.index(s)))
            summaries.append(TTestSummary(m.name, t, results, best,
                                          classify_outcome(results[best], cfg.alpha)))
    return summaries


def summarize(summaries, datasets=None, t_values=None):
    """Outcome grid ``{dataset: {t: outcome}}`` and Higher/Same/Lower totals.

    ``Identical`` cells count as ``Same``.  Raises IncompleteReport when a
    requested (dataset, t) cell has no summary.
    """
    if isinstance(summaries, ExperimentReport):
        report = summaries
        summaries = report.summaries
        datasets = datasets or [m.name for m in report.config.datasets]
        t_values = t_values or list(report.config.t_values)
    summaries = list(summaries)
    datasets = datasets or list(dict.fromkeys(s.dataset for s in summaries))
    t_values = t_values or sorted({s.t for s in summaries})
    cells = {(s.dataset, s.t): s.outcome for s in summaries}
    grid = {}
    totals = dict.fromkeys(OUTCOMES, 0)
    for ds in datasets:
        grid[ds] = {}
        for t in t_values:
            if (ds, t) not in cells:
                raise IncompleteReport(f"no t-test summary for dataset={ds}, t={t}")
            outcome = cells[ds, t]
            grid[ds][t] = outcome
            totals["Same" if outcome == "Identical" else outcome] += 1
    return grid, totals


def _safe_regression(xs, ys):
    try:
        return linear_regression(xs, ys)
    except (DegenerateX, SdccError):
        return None


def correlation_export(records, cfg):
    points = {s: [] for s in cfg.spaces}
    for r in records:
        points[r.space].append((r.dataset, r.classifier, r.t, r.fold_index, r.accuracy,
                                r.difference))
    global_fit, global_r, per_dataset = {}, {}, {}
    for space, pts in points.items():
        acc = [p[4] for p in pts]
        diff = [p[5] for p in pts]
        global_fit[space] = _safe_regression(acc, diff)
        global_r[space] = pearson(acc, diff) if pts else 0.0
        for m in cfg.datasets:
            sel = [p for p in pts if p[0] == m.name]
            per_dataset[space, m.name] = _safe_regression([p[4] for p in sel],
                                                          [p[5] for p in sel])
    return CorrelationExport(points, global_fit, global_r, per_dataset)


def _sort_key(cfg):
    ds_order = {m.name: i for i, m in enumerate(cfg.datasets)}
    clf_order = {c: i for i, c in enumerate(cfg.classifiers)}
    space_order = {s: i for i, s in enumerate(cfg.spaces)}
    return lambda r: (ds_order[r.dataset], r.fold_index, clf_order[r.classifier],
                      space_order[r.space], r.t)


def run_experiment(cfg):
    """Run every dataset in ``cfg`` and assemble the report."""
    if cfg.jobs > 1 and len(cfg.datasets) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outputs = list(pool.map(run_dataset, cfg.datasets, [cfg] * len(cfg.datasets)))
    else:
        outputs = [run_dataset(m, cfg) for m in cfg.datasets]
    records, maps, accuracy, sizes = [], {}, {}, {}
    for m, (recs, mp, acc, size) in zip(cfg.datasets, outputs):
        records.extend(recs)
        maps[m.name] = mp
        accuracy[m.name] = acc
        sizes[m.name] = size
    records.sort(key=_sort_key(cfg))
    summaries = t_test_summaries(records, cfg)
    return ExperimentReport(cfg, records, summaries, correlation_export(records, cfg),
                            accuracy, maps, sizes)


# -- serialization ----------------------------------------------------------------

def _num(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def records_to_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([_num(getattr(r, f)) for f in RECORD_FIELDS])
    return buf.getvalue()


def correlation_to_csv(corr):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["space", "dataset", "classifier", "t", "fold_index", "accuracy", "difference"])
    for space, pts in corr.points.items():
        for ds, clf, t, fold, acc, diff in pts:
            w.writerow([space, ds, clf, t, fold, _num(acc), _num(diff)])
    return buf.getvalue()


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "inf" if v > 0 else "-inf" if v < 0 else "nan"
    return v


def report_to_json(report):
    cfg = report.config
    try:
        grid, totals = summarize(report)
    except IncompleteReport:
        grid, totals = {}, {}
    corr = report.correlation

    def fit_doc(fit):
        return None if fit is None else fit.to_dict()

    doc = {
        "config": cfg.to_dict(),
        "datasets": {name: {"n": n, "d": d, "classes": k}
                     for name, (n, d, k) in report.dataset_sizes.items()},
        "accuracy": {ds: {c: {"mean": m, "std": s} for c, (m, s) in accs.items()}
                     for ds, accs in report.accuracy.items()},
        "ttests": [{**s.to_dict(),
                    "results": {m: {k: _finite(v) for k, v in r.to_dict().items()}
                                for m, r in s.results.items()}}
                   for s in report.summaries],
        "grid": {ds: {str(t): o for t, o in row.items()} for ds, row in grid.items()},
        "totals": totals,
        "correlation": {
            space: {
                "n_points": len(corr.points[space]),
                "pearson": corr.global_pearson[space],
                "fit": fit_doc(corr.global_fit[space]),
                "per_dataset": {m.name: fit_doc(corr.per_dataset[space, m.name])
                                for m in cfg.datasets},
            }
            for space in cfg.spaces
        },
        "linear_maps": {
            ds: {method: {"final_objective": _finite(lm.final_objective),
                          "iterations_run": lm.iterations_run,
                          "matrix": [[float(v) for v in row] for row in lm.matrix]}
                 for method, lm in mp.items()}
            for ds, mp in report.maps.items()
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def format_grid(grid, totals, t_values):
    """Plain-text outcome table with a Higher/Same/Lower totals line."""
    names = list(grid)
    width = max([len("dataset")] + [len(n) for n in names])
    lines = ["dataset".ljust(width) + "".join(f"  t={t:<9}" for t in t_values)]
    for n in names:
        lines.append(n.ljust(width) + "".join(f"  {grid[n][t]:<11}" for t in t_values))
    lines.append("Higher/Same/Lower: "
                 f"{totals.get('Higher', 0)}/{totals.get('Same', 0)}/{totals.get('Lower', 0)}")
    return "\n".join(lines)


def write_report(report, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "records.csv").write_text(report.records_csv(), encoding="utf-8")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "correlation.csv").write_text(report.correlation_csv(), encoding="utf-8")
    return out
