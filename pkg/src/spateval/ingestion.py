"""Reading and writing evaluation inputs and reports.

Point tables are UTF-8 text with a header row.  The delimiter (comma or tab)
is taken from the header.  Recognised columns::

    x, y, z            coordinates in meters
    gt                 ground-truth class id
    pred_<model>       predicted class id of one model
    prob_<model>_<c>   that model's probability for class id <c> (optional)
    hard               1 if the point is a hard point (written on export, ignored on input)

Any other column is ignored.  Configuration files are TOML.
"""

from __future__ import annotations

import csv
import json
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import LabeledCloud, PredictionSet
from .errors import (
    ConfigError,
    EmptyCloud,
    MissingColumn,
    MissingThreshold,
    NonFiniteCoordinate,
    ParseError,
    UnknownClass,
)
from .hard_points import MetricsReport
from .thresholds import PRESETS, ThresholdConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCOPES = ("full", "hard", "both")
REQUIRED = ("x", "y", "z", "gt")


# --------------------------------------------------------------------------- config


@dataclass(frozen=True)
class EvalConfig:
    class_names: tuple[str, ...]
    thresholds: ThresholdConfig
    models: Optional[tuple[str, ...]] = None
    scope: str = "both"
    dataset: str = ""
    input_path: Optional[str] = None
    output_path: Optional[str] = None

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def echo(self) -> dict:
        return {
            "dataset": self.dataset,
            "classes": [
                {"id": c, "name": n, "tau": self.thresholds.tau.get(c)}
                for c, n in enumerate(self.class_names)
            ],
            "models": list(self.models) if self.models is not None else None,
            "scope": self.scope,
        }


def config_from_dict(doc: dict) -> EvalConfig:
    doc = dict(doc)
    if "preset" in doc:
        name = str(doc["preset"]).lower()
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
        doc.setdefault("dataset", name)
        doc.setdefault(
            "classes", [{"id": i, "name": n, "tau": t} for i, (n, t) in enumerate(PRESETS[name])]
        )
    classes = doc.get("classes")
    if not classes:
        raise ConfigError("config declares no [[classes]]")

    by_id = {}
    for entry in classes:
        if "id" not in entry or "name" not in entry:
            raise ConfigError(f"class entry {entry!r} needs 'id' and 'name'")
        cid = entry["id"]
        if not isinstance(cid, int) or isinstance(cid, bool) or cid < 0:
            raise ConfigError(f"class id must be a non-negative integer, got {cid!r}")
        if cid in by_id:
            raise ConfigError(f"class id {cid} declared twice")
        by_id[cid] = entry
    if sorted(by_id) != list(range(len(by_id))):
        raise ConfigError(f"class ids must be contiguous from 0, got {sorted(by_id)}")
    names = tuple(str(by_id[c]["name"]) for c in range(len(by_id)))
    if len(set(names)) != len(names):
        raise ConfigError(f"class names must be unique, got {list(names)}")
    missing = [names[c] for c in range(len(names)) if "tau" not in by_id[c]]
    if missing:
        raise MissingThreshold(f"no threshold (tau) for class(es) {missing}")
    try:
        thresholds = ThresholdConfig({c: by_id[c]["tau"] for c in by_id})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, MissingThreshold):
            raise
        raise ConfigError(f"invalid threshold: {exc}") from None

    scope = doc.get("scope", "both")
    if scope not in SCOPES:
        raise ConfigError(f"scope must be one of {SCOPES}, got {scope!r}")
    models = doc.get("models")
    if models is not None:
        models = tuple(str(m) for m in models)
        if not models:
            raise ConfigError("'models' is empty")
    return EvalConfig(
        class_names=names,
        thresholds=thresholds,
        models=models,
        scope=scope,
        dataset=str(doc.get("dataset", "")),
        input_path=doc.get("input"),
        output_path=doc.get("output"),
    )


def load_config(path) -> EvalConfig:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc)


def preset_config(name: str) -> EvalConfig:
    return config_from_dict({"preset": name})


def _toml_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def config_to_toml(config: EvalConfig) -> str:
    lines = []
    if config.dataset:
        lines.append(f"dataset = {_toml_str(config.dataset)}")
    lines.append(f"scope = {_toml_str(config.scope)}")
    if config.models is not None:
        lines.append("models = [" + ", ".join(_toml_str(m) for m in config.models) + "]")
    for c, name in enumerate(config.class_names):
        lines += ["", "[[classes]]", f"id = {c}", f"name = {_toml_str(name)}",
                  f"tau = {config.thresholds.tau[c]!r}"]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- tables


@dataclass
class _Table:
    columns: list
    data: np.ndarray
    path: str

    def col(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def line_of(self, row: int) -> int:
        return row + 2


def _sniff_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def _locate_bad_row(path, delimiter: str, columns: list) -> ParseError:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        next(reader)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(columns):
                return ParseError(
                    f"{path}: expected {len(columns)} fields, found {len(row)}", line=lineno
                )
            for name, value in zip(columns, row):
                try:
                    float(value)
                except ValueError:
                    return ParseError(f"{path}: cannot parse {value!r} as a number", lineno, name)
    return ParseError(f"{path}: unreadable table")


def read_table(path) -> _Table:
    path = str(path)
    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline()
    if not header.strip():
        raise ParseError(f"{path}: missing header row", line=1)
    delimiter = _sniff_delimiter(header)
    columns = [c.strip() for c in header.rstrip("\r\n").split(delimiter)]
    if len(set(columns)) != len(columns):
        raise ParseError(f"{path}: duplicate column names in header", line=1)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            data = np.loadtxt(
                path,
                delimiter=delimiter,
                skiprows=1,
                dtype=np.float64,
                ndmin=2,
                encoding="utf-8",
                comments=None,
            )
    except ValueError:
        raise _locate_bad_row(path, delimiter, columns) from None
    if data.size == 0:
        data = np.empty((0, len(columns)))
    if data.shape[1] != len(columns):
        raise _locate_bad_row(path, delimiter, columns)
    return _Table(columns, data, path)


def _labels(table: _Table, name: str, n_classes: int) -> np.ndarray:
    values = table.col(name)
    bad = ~np.isfinite(values) | (values != np.floor(values)) | (values < 0)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ParseError(
            f"{table.path}: label {values[row]!r} is not a non-negative integer",
            table.line_of(row),
            name,
        )
    labels = values.astype(np.int64)
    out = labels >= n_classes
    if out.any():
        row = int(np.flatnonzero(out)[0])
        raise UnknownClass(
            f"{table.path}: line {table.line_of(row)}, column {name!r}: class {labels[row]} "
            f"is outside the {n_classes} declared classes"
        )
    return labels


def _positions(table: _Table) -> np.ndarray:
    pos = np.column_stack([table.col(a) for a in ("x", "y", "z")])
    finite = np.isfinite(pos).all(axis=1)
    if not finite.all():
        row = int(np.flatnonzero(~finite)[0])
        raise NonFiniteCoordinate(
            f"{table.path}: line {table.line_of(row)}: non-finite coordinate {pos[row].tolist()}"
        )
    return pos


def _model_columns(columns: Sequence[str]) -> tuple[list, dict]:
    preds = [c[len("pred_"):] for c in columns if c.startswith("pred_")]
    probs: dict = {}
    for c in columns:
        if c.startswith("prob_"):
            model, _, cls = c[len("prob_"):].rpartition("_")
            if model and cls.isdigit():
                probs.setdefault(model, {})[int(cls)] = c
    return preds, probs


def _prob_matrix(table: _Table, model: str, cols: dict, n_classes: int) -> np.ndarray:
    missing = [c for c in range(n_classes) if c not in cols]
    if missing:
        raise MissingColumn(f"{table.path}: model {model!r} lacks prob columns for classes {missing}")
    return np.column_stack([table.col(cols[c]) for c in range(n_classes)])


def parse_cloud_file(path, config: EvalConfig) -> tuple[LabeledCloud, list[PredictionSet]]:
    """Read a point table into a cloud and one prediction set per model.

    Models come from ``config.models`` when set, otherwise from every
    ``pred_<model>`` column in header order.
    """
    table = read_table(path)
    for name in REQUIRED:
        if name not in table.columns:
            raise MissingColumn(f"{path}: required column {name!r} is missing")
    if table.data.shape[0] == 0:
        raise EmptyCloud(f"{path}: table has no data rows")
    n_classes = config.n_classes
    cloud = LabeledCloud(_positions(table), _labels(table, "gt", n_classes), n_classes)

    pred_models, prob_models = _model_columns(table.columns)
    models = list(config.models) if config.models is not None else pred_models
    preds = []
    for model in models:
        if model not in pred_models:
            raise MissingColumn(f"{path}: no 'pred_{model}' column for model {model!r}")
        probs = None
        if model in prob_models:
            probs = _prob_matrix(table, model, prob_models[model], n_classes)
        preds.append(PredictionSet(model, _labels(table, f"pred_{model}", n_classes), probs))
    return cloud, preds


def _fmt_float_column(values) -> list:
    return list(map(repr, np.asarray(values, dtype=np.float64).tolist()))


def _fmt_int_column(values) -> list:
    return list(map(str, np.asarray(values, dtype=np.int64).tolist()))


def write_cloud_file(
    path,
    cloud: LabeledCloud,
    preds: Sequence[PredictionSet] = (),
    hard_mask=None,
    include_probabilities: bool = True,
    delimiter: str = ",",
) -> None:
    """Write a point table that :func:`parse_cloud_file` reads back exactly."""
    header = ["x", "y", "z", "gt"]
    cols = [_fmt_float_column(cloud.positions[:, k]) for k in range(3)]
    cols.append(_fmt_int_column(cloud.gt_labels))
    for p in preds:
        header.append(f"pred_{p.model_name}")
        cols.append(_fmt_int_column(p.pred_labels))
    if include_probabilities:
        for p in preds:
            if p.probabilities is None:
                continue
            for c in range(p.probabilities.shape[1]):
                header.append(f"prob_{p.model_name}_{c}")
                cols.append(_fmt_float_column(p.probabilities[:, c]))
    if hard_mask is not None:
        header.append("hard")
        cols.append(_fmt_int_column(np.asarray(hard_mask, dtype=np.int64)))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(delimiter.join(header) + "\n")
        fh.write("\n".join(map(delimiter.join, zip(*cols))))
        fh.write("\n")


# --------------------------------------------------------------------------- reports


def _scope_dict(result, class_names) -> dict:
    per_model = {}
    for name, m in result.per_model.items():
        cls = m.classification
        per_model[name] = {
            "classification": {
                "oa": cls.overall_accuracy,
                "iou": {class_names[c]: v for c, v in cls.iou_per_class.items()},
                "miou": cls.mean_iou,
                "defined_classes": cls.defined_class_count,
                "error_count": m.error_count,
                "confusion": m.confusion.counts.tolist(),
            },
            "distance": {
                "mmde": m.distance.mmde,
                "mmde_defined_classes": m.distance.mmde_defined_classes,
                "per_class": {
                    class_names[s.class_id]: {
                        "mde": s.mde,
                        "rho": s.rho,
                        "mu": s.mu,
                        "predicted_count": s.predicted_count,
                        "error_count": s.error_count,
                        "distant_count": s.distant_count,
                        "near_count": s.near_count,
                    }
                    for s in m.distance.per_class
                },
            },
        }
    out = {
        "label": result.label,
        "selected_count": result.selected_count,
        "point_count": result.scope.point_count,
        "fraction": result.scope.fraction,
        "per_model": per_model,
    }
    if result.label == "hard":
        out["point_indices"] = result.scope.indices.tolist()
    return out


def report_to_dict(report: MetricsReport, config_echo: Optional[dict] = None) -> dict:
    if config_echo is None:
        config_echo = {
            "classes": [
                {"id": c, "name": n, "tau": t}
                for c, (n, t) in enumerate(zip(report.class_names, report.thresholds))
            ]
        }
    return {
        "config_echo": config_echo,
        "models": list(report.models),
        "scopes": [_scope_dict(s, report.class_names) for s in report.scopes],
        "metadata": dict(report.metadata),
    }


CSV_COLUMNS = (
    "model", "scope", "row", "class", "selected_count",
    "oa", "miou", "defined_classes", "mmde", "mmde_defined_classes",
    "iou", "mde", "rho", "mu",
    "predicted_count", "error_count", "distant_count", "near_count",
)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def report_csv_rows(report: MetricsReport) -> list:
    rows = []
    for s in report.scopes:
        for name, m in s.per_model.items():
            cls = m.classification
            base = {"model": name, "scope": s.label, "selected_count": s.selected_count}
            rows.append({
                **base, "row": "summary",
                "oa": cls.overall_accuracy, "miou": cls.mean_iou,
                "defined_classes": cls.defined_class_count,
                "mmde": m.distance.mmde,
                "mmde_defined_classes": m.distance.mmde_defined_classes,
                "error_count": m.error_count,
            })
            for d in m.distance.per_class:
                rows.append({
                    **base, "row": "class", "class": report.class_names[d.class_id],
                    "iou": cls.iou_per_class[d.class_id],
                    "mde": d.mde, "rho": d.rho, "mu": d.mu,
                    "predicted_count": d.predicted_count, "error_count": d.error_count,
                    "distant_count": d.distant_count, "near_count": d.near_count,
                })
    return rows


def emit_report(report: MetricsReport, path, format: str = "json", config_echo: Optional[dict] = None) -> None:
    """Write ``report`` as JSON (full precision) or CSV (6 significant digits).

    Undefined values are ``null`` in JSON and empty cells in CSV.
    """
    if format == "json":
        text = json.dumps(report_to_dict(report, config_echo), indent=2, allow_nan=False)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in report_csv_rows(report):
                writer.writerow([_cell(row.get(k)) for k in CSV_COLUMNS])
    else:
        raise ValueError(f"unknown report format {format!r}")


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
