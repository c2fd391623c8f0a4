"""Tabular ingestion, missing-value preprocessing, and dataset bundles."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import jsonio

log = logging.getLogger(__name__)

_MISSING_TOKENS = {"", "na", "nan"}


class DatasetError(ValueError):
    """Raised for unreadable, malformed, or emptied-out input data."""


@dataclass
class DataTable:
    """Raw points-by-features values plus a mask of missing cells.

    ``points[i, j]`` is only meaningful where ``missing_mask[i, j]`` is False;
    masked cells hold NaN until :func:`impute_mean` fills them.
    """

    points: np.ndarray
    feature_names: list[str]
    point_ids: list[str]
    missing_mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise DatasetError("points must be a 2D matrix")
        n, d = self.points.shape
        if n < 1 or d < 1:
            raise DatasetError("table must have at least one point and one feature")
        if len(self.feature_names) != d:
            raise DatasetError("feature_names length must equal number of columns")
        if len(set(self.feature_names)) != d:
            raise DatasetError("feature names must be unique")
        if len(self.point_ids) != n:
            raise DatasetError("point_ids length must equal number of rows")
        if self.missing_mask is None:
            self.missing_mask = np.isnan(self.points)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        if self.missing_mask.shape != self.points.shape:
            raise DatasetError("missing_mask shape must equal points shape")

    @property
    def n_points(self) -> int:
        return self.points.shape[0]

    @property
    def n_features(self) -> int:
        return self.points.shape[1]


@dataclass
class EmbeddedDataset:
    """A :class:`DataTable` with its 2D embedding and cluster labels.

    Label -1 marks noise/outliers (rendered as "Z"); other labels must be
    the gapless range 0..l-1. ``labels=None`` means clustering is pending.
    """

    table: DataTable
    coords2d: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.table.n_points
        if self.coords2d is not None:
            self.coords2d = np.asarray(self.coords2d, dtype=np.float64)
            if self.coords2d.shape != (n, 2):
                raise DatasetError("coords2d must be an (n, 2) array")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (n,):
                raise DatasetError("labels length must equal number of points")
            _check_gapless(self.labels)

    @property
    def cluster_ids(self) -> list[int]:
        """Non-noise cluster ids ascending, then -1 if any noise points exist."""
        if self.labels is None:
            return []
        ids = sorted(int(c) for c in np.unique(self.labels) if c >= 0)
        if (self.labels == -1).any():
            ids.append(-1)
        return ids

    def with_labels(self, labels) -> "EmbeddedDataset":
        return EmbeddedDataset(self.table, self.coords2d, labels)


def _check_gapless(labels: np.ndarray) -> None:
    pos = np.unique(labels[labels >= 0])
    if pos.size and (pos[0] != 0 or pos[-1] != pos.size - 1):
        raise DatasetError("non-noise labels must be 0..l-1 with no gaps")
    if (labels < -1).any():
        raise DatasetError("labels below -1 are not allowed")


def _parse_cell(raw: str) -> tuple[float, bool, bool]:
    """Returns (value, is_missing, was_malformed)."""
    text = raw.strip()
    if text.lower() in _MISSING_TOKENS:
        return np.nan, True, False
    try:
        return float(text), False, False
    except ValueError:
        return np.nan, True, True


def load_table(source, fmt: str = "csv") -> DataTable:
    """Load a delimiter-separated file or a canonical JSON bundle as a table.

    The first row of a csv gives feature names; a leading column named
    ``id`` (case-insensitive) supplies point ids, otherwise row indices are
    used. Empty cells and "NA"/"NaN" (any case) are missing; any other
    non-numeric cell is treated as missing and counted in a warning.
    """
    if fmt == "json":
        return bundle_to_dataset(_read_json(source)).table
    if fmt != "csv":
        raise DatasetError("unknown format %r (expected 'csv' or 'json')" % fmt)

    try:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            sample = fh.read(8192)
            fh.seek(0)
            try:
                dialect = csv.Sniffer().sniff(sample, delimiters=",;\t")
            except csv.Error:
                dialect = csv.excel
            rows = list(csv.reader(fh, dialect))
    except OSError as exc:
        raise DatasetError("cannot read %s: %s" % (source, exc)) from exc
    if not rows:
        raise DatasetError("empty file: %s" % source)

    header = [h.strip() for h in rows[0]]
    has_id = bool(header) and header[0].lower() == "id"
    names = header[1:] if has_id else header
    if not names:
        raise DatasetError("file has zero feature columns")
    body = rows[1:]
    if not body:
        raise DatasetError("file has no data rows")

    values = np.empty((len(body), len(names)))
    mask = np.zeros((len(body), len(names)), dtype=bool)
    ids = []
    malformed = 0
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DatasetError(
                "ragged row %d: expected %d cells, got %d" % (i + 1, len(header), len(row))
            )
        ids.append(row[0].strip() if has_id else str(i))
        cells = row[1:] if has_id else row
        for j, cell in enumerate(cells):
            value, missing, bad = _parse_cell(cell)
            values[i, j] = value
            mask[i, j] = missing
            malformed += bad
    if malformed:
        log.warning("%d non-numeric cells treated as missing", malformed)
    return DataTable(values, names, ids, mask)


def _filter_indices(table: DataTable, feature_thresh: float, point_thresh: float):
    """Feature pass first, then point pass over the surviving features."""
    if not (0.0 <= feature_thresh <= 1.0 and 0.0 <= point_thresh <= 1.0):
        raise DatasetError("thresholds must lie in [0, 1]")
    feat_frac = table.missing_mask.mean(axis=0)
    keep_feats = np.flatnonzero(feat_frac <= feature_thresh)
    if keep_feats.size == 0:
        raise DatasetError("feature filter removed every feature")
    point_frac = table.missing_mask[:, keep_feats].mean(axis=1)
    keep_points = np.flatnonzero(point_frac <= point_thresh)
    if keep_points.size == 0:
        raise DatasetError("point filter removed every point")
    return keep_feats, keep_points


def filter_missing(table: DataTable, feature_thresh: float, point_thresh: float) -> DataTable:
    """Drop features, then points, whose missing fraction strictly exceeds its threshold."""
    keep_feats, keep_points = _filter_indices(table, feature_thresh, point_thresh)
    return DataTable(
        table.points[np.ix_(keep_points, keep_feats)],
        [table.feature_names[j] for j in keep_feats],
        [table.point_ids[i] for i in keep_points],
        table.missing_mask[np.ix_(keep_points, keep_feats)],
    )


def filter_dataset(
    dataset: EmbeddedDataset, feature_thresh: float, point_thresh: float
) -> EmbeddedDataset:
    """`filter_missing` applied consistently to the table, coords, and labels."""
    keep_feats, keep_points = _filter_indices(dataset.table, feature_thresh, point_thresh)
    table = DataTable(
        dataset.table.points[np.ix_(keep_points, keep_feats)],
        [dataset.table.feature_names[j] for j in keep_feats],
        [dataset.table.point_ids[i] for i in keep_points],
        dataset.table.missing_mask[np.ix_(keep_points, keep_feats)],
    )
    coords = None if dataset.coords2d is None else dataset.coords2d[keep_points]
    labels = None
    if dataset.labels is not None:
        labels = _compact_labels(dataset.labels[keep_points])
    return EmbeddedDataset(table, coords, labels)


def _compact_labels(labels: np.ndarray) -> np.ndarray:
    out = np.full_like(labels, -1)
    for new, old in enumerate(sorted(int(c) for c in np.unique(labels) if c >= 0)):
        out[labels == old] = new
    return out


def impute_mean(table: DataTable) -> DataTable:
    """Replace each missing cell with its feature's mean over observed cells."""
    if not table.missing_mask.any():
        return replace(table, points=table.points.copy(), missing_mask=table.missing_mask.copy())
    observed = ~table.missing_mask
    counts = observed.sum(axis=0)
    if (counts == 0).any():
        bad = table.feature_names[int(np.argmin(counts))]
        raise DatasetError("feature %r has no observed values to impute from" % bad)
    values = np.where(table.missing_mask, 0.0, table.points)
    means = values.sum(axis=0) / counts
    filled = np.where(table.missing_mask, means[None, :], table.points)
    return replace(
        table, points=filled, missing_mask=np.zeros_like(table.missing_mask)
    )


# ---------------------------------------------------------------------------
# Canonical JSON bundle
# ---------------------------------------------------------------------------

def _read_json(source) -> dict:
    try:
        with open(source, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DatasetError("cannot read %s: %s" % (source, exc)) from exc
    except json.JSONDecodeError as exc:
        raise DatasetError("invalid JSON in %s: %s" % (source, exc)) from exc


def bundle_to_dataset(doc: dict) -> EmbeddedDataset:
    """Build an :class:`EmbeddedDataset` from a parsed bundle document."""
    try:
        names = list(doc["features"])
        rows = doc["points"]
    except (KeyError, TypeError) as exc:
        raise DatasetError("bundle must contain 'features' and 'points'") from exc
    n = len(rows)
    d = len(names)
    values = np.empty((n, d))
    mask = np.zeros((n, d), dtype=bool)
    for i, row in enumerate(rows):
        if len(row) != d:
            raise DatasetError("bundle row %d has %d cells, expected %d" % (i, len(row), d))
        for j, cell in enumerate(row):
            if cell is None:
                values[i, j] = np.nan
                mask[i, j] = True
            else:
                values[i, j] = float(cell)
    ids = [str(x) for x in doc.get("ids", range(n))]
    table = DataTable(values, [str(x) for x in names], ids, mask)
    coords = doc.get("coords2d")
    labels = doc.get("labels")
    return EmbeddedDataset(
        table,
        None if coords is None else np.asarray(coords, dtype=np.float64),
        None if labels is None else np.asarray(labels, dtype=np.int64),
    )


def load_bundle(path) -> EmbeddedDataset:
    return bundle_to_dataset(_read_json(path))


def dataset_to_bundle(dataset: EmbeddedDataset) -> dict:
    table = dataset.table
    points = []
    for i in range(table.n_points):
        row = []
        for j in range(table.n_features):
            row.append(None if table.missing_mask[i, j] else float(table.points[i, j]))
        points.append(row)
    doc = {
        "features": list(table.feature_names),
        "points": points,
        "ids": list(table.point_ids),
    }
    if dataset.coords2d is not None:
        doc["coords2d"] = dataset.coords2d.tolist()
    if dataset.labels is not None:
        doc["labels"] = dataset.labels.tolist()
    return doc


def save_bundle(dataset: EmbeddedDataset, path) -> None:
    """Write the canonical bundle; finite values round-trip bit-exactly."""
    jsonio.dump(dataset_to_bundle(dataset), path)
