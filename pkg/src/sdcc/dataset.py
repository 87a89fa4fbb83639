"""CSV ingestion, dataset manifests and seeded train/test splits."""

import configparser
import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (DatasetNotFound, DegenerateSplit, EmptyDataset,
                     InvalidArgument, ManifestError, MissingLabelColumn,
                     RaggedRow, UnparseableValue)
from .seeding import derive_seed

CONTINUOUS = "continuous"
DISCRETE = "discrete"
KINDS = (CONTINUOUS, DISCRETE)

DATA_DIR_ENV = "SDCC_DATA_DIR"
BUILTIN_DIR = Path(__file__).parent / "data"


@dataclass(frozen=True)
class Schema:
    feature_names: tuple
    feature_kinds: tuple
    label_name: str

    def __post_init__(self):
        names = tuple(self.feature_names)
        kinds = tuple(self.feature_kinds)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "feature_kinds", kinds)
        if len(names) != len(kinds):
            raise InvalidArgument("feature_names and feature_kinds differ in length")
        if any(not n for n in names) or len(set(names)) != len(names):
            raise InvalidArgument("feature names must be unique and nonempty")
        if self.label_name in names:
            raise InvalidArgument(f"label {self.label_name!r} is also a feature name")
        bad = [k for k in kinds if k not in KINDS]
        if bad:
            raise InvalidArgument(f"unknown feature kinds {bad}")

    @property
    def d(self):
        return len(self.feature_names)

    def is_discrete(self, j):
        return self.feature_kinds[j] == DISCRETE


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus class labels.

    Discrete features hold ordinal codes; ``encodings[name]`` maps each
    category string to its code.
    """

    schema: Schema
    rows: np.ndarray
    labels: tuple
    encodings: dict = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        rows = np.array(self.rows, dtype=float)
        if rows.ndim == 1 and rows.size == 0:
            rows = rows.reshape(0, self.schema.d)
        if rows.ndim != 2 or rows.shape[1] != self.schema.d:
            raise InvalidArgument(f"rows must be N x {self.schema.d}, got {rows.shape}")
        labels = tuple(str(v) for v in self.labels)
        if len(labels) != rows.shape[0]:
            raise InvalidArgument(f"{len(labels)} labels for {rows.shape[0]} rows")
        if any(not v for v in labels):
            raise InvalidArgument("labels must be nonempty")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.rows.shape[0]

    @property
    def n(self):
        return self.rows.shape[0]

    @property
    def d(self):
        return self.schema.d

    @property
    def classes(self):
        return tuple(sorted(set(self.labels)))

    @property
    def y(self):
        return np.array(self.labels, dtype=object)

    def label_codes(self):
        """Integer class codes in sorted-label order."""
        index = {c: i for i, c in enumerate(self.classes)}
        return np.array([index[v] for v in self.labels], dtype=np.int64)

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.schema, self.rows[idx], tuple(self.labels[i] for i in idx),
                       self.encodings, self.name)

    def decode(self, j, value):
        """Category string for an encoded value of discrete feature ``j``."""
        inverse = {v: k for k, v in self.encodings[self.schema.feature_names[j]].items()}
        return inverse[int(value)]


def _parse_float(text):
    try:
        return float(text)
    except ValueError:
        return None


def _category_order(values):
    """Sorted distinct categories; numerically if every category is a number."""
    distinct = set(values)
    numeric = {v: _parse_float(v) for v in distinct}
    if all(x is not None for x in numeric.values()):
        return sorted(distinct, key=lambda v: (numeric[v], v))
    return sorted(distinct)


def load_csv(path, label_column, kind_overrides=None, drop=(), features=None, name=None):
    """Read a headed, comma-separated file into a Dataset.

    Columns whose values all parse as numbers are continuous unless
    ``kind_overrides`` says otherwise; any other column is discrete and
    ordinal-encoded by sorted category order.  ``drop`` removes columns and
    ``features`` (if given) selects and orders the feature columns.
    """
    path = Path(path)
    kind_overrides = dict(kind_overrides or {})
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyDataset(f"{path}: file is empty") from None
        body = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise RaggedRow(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            body.append([c.strip() for c in row])
    if label_column not in header:
        raise MissingLabelColumn(f"{path}: no column named {label_column!r}")
    if not body:
        raise EmptyDataset(f"{path}: header only, no data rows")

    drop = set(drop or ())
    if features is None:
        features = [h for h in header if h != label_column and h not in drop]
    else:
        missing = [f for f in features if f not in header]
        if missing:
            raise MissingLabelColumn(f"{path}: feature columns {missing} not in header")
    unknown = set(kind_overrides) - set(features)
    if unknown:
        raise InvalidArgument(f"kind overrides for unknown features {sorted(unknown)}")

    label_idx = header.index(label_column)
    labels = []
    for r, row in enumerate(body):
        if not row[label_idx]:
            raise UnparseableValue(f"{path}: empty label in data row {r + 1}",
                                   row=r + 1, column=label_column)
        labels.append(row[label_idx])

    columns = []
    kinds = []
    encodings = {}
    for name_ in features:
        j = header.index(name_)
        raw = [row[j] for row in body]
        for r, v in enumerate(raw):
            if v == "":
                raise UnparseableValue(f"{path}: missing value at data row {r + 1}, "
                                       f"column {name_!r}", row=r + 1, column=name_)
        kind = kind_overrides.get(name_)
        if kind is not None and kind not in KINDS:
            raise InvalidArgument(f"unknown kind {kind!r} for {name_!r}")
        parsed = [_parse_float(v) for v in raw]
        if kind is None:
            kind = CONTINUOUS if all(p is not None for p in parsed) else DISCRETE
        if kind == CONTINUOUS:
            for r, p in enumerate(parsed):
                if p is None or not np.isfinite(p):
                    raise UnparseableValue(f"{path}: cannot parse {raw[r]!r} as a number at "
                                           f"data row {r + 1}, column {name_!r}",
                                           row=r + 1, column=name_)
            columns.append(np.array(parsed, dtype=float))
        else:
            order = _category_order(raw)
            enc = {c: i for i, c in enumerate(order)}
            encodings[name_] = enc
            columns.append(np.array([enc[v] for v in raw], dtype=float))
        kinds.append(kind)

    schema = Schema(tuple(features), tuple(kinds), label_column)
    rows = np.column_stack(columns) if columns else np.empty((len(body), 0))
    return Dataset(schema, rows, tuple(labels), encodings, name or path.stem)


def write_csv(ds, path, rows=None):
    """Write ``rows`` (default: ``ds.rows``) plus the label column as CSV."""
    rows = ds.rows if rows is None else np.asarray(rows)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(ds.schema.feature_names) + [ds.schema.label_name])
        for row, label in zip(rows, ds.labels):
            w.writerow([_fmt(v) for v in row] + [label])


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return format(v, ".17g")


# -- splits ----------------------------------------------------------------

@dataclass(frozen=True)
class SplitPlan:
    fold_index: int
    train_indices: tuple
    test_indices: tuple
    seed: int


def make_folds(ds, n_folds=10, test_fraction=0.2, seed=0):
    """Independent random train/test splits (not a cross-validation partition).

    Each split draws ``round(test_fraction * N)`` test indices without
    replacement (Python's round: halves go to even).  Fold ``f`` uses the
    generator seeded by ``derive_seed(seed, f)``.
    """
    n = ds if isinstance(ds, int) else len(ds)
    if n_folds < 1:
        raise InvalidArgument("n_folds must be >= 1")
    if not 0.0 < test_fraction < 1.0:
        raise InvalidArgument("test_fraction must lie strictly between 0 and 1")
    if n < 2:
        raise InvalidArgument("need at least 2 rows to split")
    n_test = round(test_fraction * n)
    if n_test == 0 or n_test == n:
        raise DegenerateSplit(f"test size round({test_fraction} * {n}) = {n_test}")
    plans = []
    for f in range(n_folds):
        sub = derive_seed(seed, f)
        perm = np.random.default_rng(sub).permutation(n)
        test = tuple(int(i) for i in np.sort(perm[:n_test]))
        train = tuple(int(i) for i in np.sort(perm[n_test:]))
        plans.append(SplitPlan(f, train, test, sub))
    return plans


# -- manifests ---------------------------------------------------------------

@dataclass(frozen=True)
class DatasetManifest:
    """Where a dataset lives and how to read it.

    Manifest files are ``key = value`` lines::

        name = wine
        path = wine.csv
        label = class
        drop = id
        features = a, b, c
        kind.<feature> = discrete
    """

    name: str
    path: str
    label: str
    kinds: dict = field(default_factory=dict)
    drop: tuple = ()
    features: tuple = None
    base_dir: str = "."

    @classmethod
    def from_mapping(cls, mapping, base_dir=".", default_name=""):
        mapping = {k.strip(): v.strip() for k, v in mapping.items()}
        for key in ("path", "label"):
            if not mapping.get(key):
                raise ManifestError(f"manifest {default_name!r} lacks {key!r}")
        kinds = {k[len("kind."):]: v.lower() for k, v in mapping.items()
                 if k.startswith("kind.")}
        for feat, kind in kinds.items():
            if kind not in KINDS:
                raise ManifestError(f"manifest {default_name!r}: bad kind {kind!r} for {feat!r}")
        known = {"name", "path", "label", "drop", "features", "manifest"}
        extra = [k for k in mapping if k not in known and not k.startswith("kind.")]
        if extra:
            raise ManifestError(f"manifest {default_name!r}: unknown keys {extra}")

        def _list(v):
            return tuple(x.strip() for x in v.split(",") if x.strip()) if v else ()

        feats = _list(mapping.get("features", "")) or None
        return cls(mapping.get("name") or default_name, mapping["path"], mapping["label"],
                   kinds, _list(mapping.get("drop", "")), feats, str(base_dir))

    def resolve_path(self):
        """Locate the data file: absolute, next to the manifest, or under $SDCC_DATA_DIR."""
        p = Path(os.path.expanduser(self.path))
        candidates = [p] if p.is_absolute() else [Path(self.base_dir) / p]
        env = os.environ.get(DATA_DIR_ENV)
        if env and not p.is_absolute():
            candidates.append(Path(env) / p)
        for c in candidates:
            if c.is_file():
                return c
        raise DatasetNotFound(
            f"dataset {self.name!r}: file {self.path!r} not found (looked in "
            + ", ".join(str(c) for c in candidates)
            + f"; set ${DATA_DIR_ENV} to the directory holding it)")

    def load(self):
        return load_csv(self.resolve_path(), self.label, self.kinds, self.drop,
                        self.features, name=self.name)


def read_manifest(path):
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest {str(path)!r} does not exist")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[manifest]\n" + path.read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise ManifestError(f"{path}: {exc}") from None
    return DatasetManifest.from_mapping(dict(parser["manifest"]), path.parent, path.stem)


def builtin_manifest(name):
    """Manifest for one of the bundled dataset descriptions (wine, rice, ...)."""
    path = BUILTIN_DIR / f"{name}.manifest"
    if not path.is_file():
        raise ManifestError(f"no built-in dataset named {name!r}")
    return read_manifest(path)


# -- UCI raw-file converters ---------------------------------------------------

CAR_COLUMNS = ["buying", "maint", "doors", "persons", "lug_boot", "safety", "class"]
YEAST_COLUMNS = ["sequence_name", "mcg", "gvh", "alm", "mit", "erl", "pox", "vac", "nuc",
                 "localization"]


def _write_table(header, rows, out_path):
    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def convert_car(raw_path, out_path):
    """``car.data`` (no header) to a headed CSV."""
    with open(raw_path, encoding="utf-8") as fh:
        rows = [line.strip().split(",") for line in fh if line.strip()]
    _write_table(CAR_COLUMNS, rows, out_path)


def convert_yeast(raw_path, out_path):
    """Whitespace-separated ``yeast.data`` to a headed CSV."""
    with open(raw_path, encoding="utf-8") as fh:
        rows = [line.split() for line in fh if line.strip()]
    _write_table(YEAST_COLUMNS, rows, out_path)


def convert_arff(raw_path, out_path):
    """Dense ARFF (e.g. ``Rice_Cammeo_Osmancik.arff``) to a headed CSV."""
    header = []
    rows = []
    in_data = False
    with open(raw_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("%"):
                continue
            low = line.lower()
            if not in_data:
                if low.startswith("@attribute"):
                    header.append(line.split(None, 2)[1].strip("'\""))
                elif low.startswith("@data"):
                    in_data = True
                continue
            rows.append([v.strip().strip("'\"") for v in line.split(",")])
    _write_table(header, rows, out_path)
