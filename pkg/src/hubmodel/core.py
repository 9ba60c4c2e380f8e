"""Domain types, validation and file formats.

Grouped data is a T x n binary matrix: one row per observed group, one
column per node. Model parameters are a symmetric adjacency matrix with
unit diagonal and a hub-probability vector summing to one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateLabel,
    EmptyGroup,
    HubNotMember,
    IoFailure,
    MalformedFile,
    NonBinaryEntry,
    ValidationError,
)

SUM_TOLERANCE = 1e-12
MATRIX_FORMATS = ("matrix-csv", "edge-list", "json")


def _frozen(values, dtype=np.float64):
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GroupedData:
    """Observed groups as a read-only T x n 0/1 matrix."""

    node_labels: tuple
    rows: np.ndarray

    def __init__(self, rows, node_labels=None):
        raw = np.asarray(rows)
        if raw.ndim != 2:
            raise MalformedFile(f"grouped data must be 2-D, got shape {raw.shape}")
        T, n = raw.shape
        if T < 1 or n < 1:
            raise MalformedFile("grouped data needs at least one row and one column")
        bad = np.argwhere((raw != 0) & (raw != 1))
        if len(bad):
            t, i = bad[0]
            raise NonBinaryEntry(f"row {t}, column {i}: entry {raw[t, i]!r} is not 0 or 1")
        if node_labels is None:
            node_labels = [f"v{i + 1}" for i in range(n)]
        labels = tuple(str(s) for s in node_labels)
        if len(labels) != n:
            raise DimensionMismatch(f"{len(labels)} labels for {n} columns")
        _check_unique(labels)
        values = _frozen(raw, dtype=np.uint8)
        empty = np.flatnonzero(values.sum(axis=1) == 0)
        if len(empty):
            raise EmptyGroup(f"row {empty[0]} is an empty group")
        object.__setattr__(self, "node_labels", labels)
        object.__setattr__(self, "rows", values)

    @property
    def T(self):
        return self.rows.shape[0]

    @property
    def n(self):
        return self.rows.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.rows, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, GroupedData):
            return NotImplemented
        return self.node_labels == other.node_labels and np.array_equal(self.rows, other.rows)

    def take(self, indices):
        """Return a new GroupedData holding the selected observations."""
        return GroupedData(self.rows[np.asarray(indices)], self.node_labels)

    def index_of(self, label):
        try:
            return self.node_labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown node label {label!r}") from None


@dataclass(frozen=True, eq=False)
class HubAssignments:
    """The hub node of each observation, stored as a T-vector of node indices."""

    hubs: np.ndarray
    n: int

    def __init__(self, hubs, n, groups: GroupedData | None = None):
        h = np.asarray(hubs, dtype=np.int64)
        if h.ndim != 1:
            raise MalformedFile("hub assignments must be one index per observation")
        if len(h) and (h.min() < 0 or h.max() >= n):
            raise ValidationError("hub index out of range")
        if groups is not None:
            if groups.T != len(h) or groups.n != n:
                raise DimensionMismatch("hub assignments do not match grouped data")
            missing = np.flatnonzero(groups.rows[np.arange(len(h)), h] == 0)
            if len(missing):
                t = missing[0]
                raise HubNotMember(
                    f"row {t}: hub {groups.node_labels[h[t]]!r} is not a member of its group"
                )
        object.__setattr__(self, "hubs", _frozen(h, dtype=np.int64))
        object.__setattr__(self, "n", int(n))

    @classmethod
    def from_indicators(cls, S, groups: GroupedData | None = None):
        S = np.asarray(S)
        if S.ndim != 2 or np.any(S.sum(axis=1) != 1) or np.any((S != 0) & (S != 1)):
            raise ValidationError("each hub indicator row must hold exactly one 1")
        return cls(S.argmax(axis=1), S.shape[1], groups)

    @property
    def T(self):
        return len(self.hubs)

    def indicators(self):
        """The T x n one-hot hub matrix."""
        S = np.zeros((self.T, self.n))
        S[np.arange(self.T), self.hubs] = 1.0
        return S

    def take(self, indices):
        return HubAssignments(self.hubs[np.asarray(indices)], self.n)


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    """Symmetric n x n matrix with entries in [0, 1] and unit diagonal."""

    values: np.ndarray

    def __init__(self, values):
        A = np.asarray(values, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"adjacency matrix must be square, got {A.shape}")
        if np.any(np.isnan(A)) or np.any(A < 0) or np.any(A > 1):
            raise ValidationError("adjacency entries must lie in [0, 1]")
        if not np.array_equal(A, A.T):
            raise ValidationError("adjacency matrix is not symmetric")
        if np.any(np.diag(A) != 1):
            raise ValidationError("adjacency matrix must have a unit diagonal")
        object.__setattr__(self, "values", _frozen(A))

    @property
    def n(self):
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class HubWeights:
    """Probability vector over nodes."""

    values: np.ndarray

    def __init__(self, values):
        rho = np.asarray(values, dtype=np.float64)
        if rho.ndim != 1 or len(rho) < 1:
            raise DimensionMismatch("hub weights must be a non-empty vector")
        if np.any(np.isnan(rho)) or np.any(rho < 0) or np.any(rho > 1):
            raise ValidationError("hub weights must lie in [0, 1]")
        if abs(math.fsum(rho) - 1.0) > SUM_TOLERANCE:
            raise ValidationError(f"hub weights sum to {math.fsum(rho)!r}, not 1")
        object.__setattr__(self, "values", _frozen(rho))

    @property
    def n(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True, eq=False)
class Responsibilities:
    """Posterior hub probabilities, one row per observation."""

    values: np.ndarray

    def __init__(self, values, groups: GroupedData | None = None):
        R = np.asarray(values, dtype=np.float64)
        if R.ndim != 2:
            raise DimensionMismatch("responsibilities must be a T x n matrix")
        if np.any(np.abs(R.sum(axis=1) - 1.0) > SUM_TOLERANCE):
            raise ValidationError("responsibility rows must sum to 1")
        if groups is not None:
            if groups.rows.shape != R.shape:
                raise DimensionMismatch("responsibilities do not match grouped data")
            if np.any(R[groups.rows == 0] != 0):
                raise ValidationError("non-members carry responsibility")
        object.__setattr__(self, "values", _frozen(R))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class RestartRecord:
    seed: int
    iterations: int
    final_ll: float
    converged: bool
    ll_trace: tuple = ()

    def to_dict(self):
        return {
            "seed": self.seed,
            "iterations": self.iterations,
            "final_ll": _encode_float(self.final_ll),
            "converged": self.converged,
            "ll_trace": [_encode_float(x) for x in self.ll_trace],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            seed=int(d["seed"]),
            iterations=int(d["iterations"]),
            final_ll=_decode_float(d["final_ll"]),
            converged=bool(d["converged"]),
            ll_trace=tuple(_decode_float(x) for x in d.get("ll_trace", ())),
        )


@dataclass(frozen=True, eq=False)
class FitResult:
    """Output of the EM fitter.

    ``A`` is the thresholded estimate; ``A_unthresholded`` is the same
    restart's final iterate before small entries were zeroed.
    """

    A: AdjacencyMatrix
    rho: HubWeights
    log_likelihood: float
    restarts: tuple
    chosen_restart: int
    zero_threshold: float
    seed: int
    labels: tuple
    A_unthresholded: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "labels": list(self.labels),
            "rho": self.rho.values.tolist(),
            "A": self.A.values.tolist(),
            "log_likelihood": _encode_float(self.log_likelihood),
            "restarts": [r.to_dict() for r in self.restarts],
            "chosen_restart": self.chosen_restart,
            "zero_threshold": self.zero_threshold,
            "seed": self.seed,
            "A_unthresholded": np.asarray(self.A_unthresholded).tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        A = AdjacencyMatrix(d["A"])
        return cls(
            A=A,
            rho=HubWeights(d["rho"]),
            log_likelihood=_decode_float(d["log_likelihood"]),
            restarts=tuple(RestartRecord.from_dict(r) for r in d.get("restarts", ())),
            chosen_restart=int(d.get("chosen_restart", 0)),
            zero_threshold=float(d.get("zero_threshold", 0.0)),
            seed=d.get("seed"),
            labels=tuple(d["labels"]),
            A_unthresholded=_frozen(d.get("A_unthresholded", d["A"])),
        )


def _encode_float(x):
    # JSON has no infinities; a degenerate restart's -inf is written as null
    return None if x is None or math.isinf(x) or math.isnan(x) else float(x)


def _decode_float(x):
    return -math.inf if x is None else float(x)


def _check_unique(labels):
    seen = set()
    for col, lab in enumerate(labels):
        if lab in seen:
            raise DuplicateLabel(f"column {col}: duplicate node label {lab!r}")
        seen.add(lab)


def read_text(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    try:
        return raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise MalformedFile(f"{path} is not valid UTF-8") from exc


def _write_text(path, text):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _csv_rows(text):
    return [row for row in csv.reader(io.StringIO(text)) if any(c.strip() for c in row)]


def load_grouped_data(path, hub_column=None):
    """Read a grouped-data CSV.

    The header names the nodes; each subsequent line is one group coded as
    comma-separated 0/1 indicators. When ``hub_column`` is given, that column
    holds the label of each group's hub and a ``HubAssignments`` is returned
    alongside the data (otherwise the second element is ``None``).
    """
    rows = _csv_rows(read_text(path))
    if not rows:
        raise MalformedFile(f"{path}: no header line")
    header = [c.strip() for c in rows[0]]
    hub_idx = None
    if hub_column is not None:
        if hub_column not in header:
            raise MalformedFile(f"{path}: hub column {hub_column!r} not in header")
        hub_idx = header.index(hub_column)
    node_cols = [i for i in range(len(header)) if i != hub_idx]
    labels = [header[i] for i in node_cols]
    if any(lab == "" for lab in labels):
        raise MalformedFile(f"{path}: empty node label in header")
    _check_unique(labels)
    if len(rows) < 2:
        raise MalformedFile(f"{path}: no observations")

    data = np.zeros((len(rows) - 1, len(labels)), dtype=np.uint8)
    hub_labels = []
    for t, row in enumerate(rows[1:]):
        line = t + 2
        if len(row) != len(header):
            raise MalformedFile(f"{path}: line {line} has {len(row)} fields, expected {len(header)}")
        for k, col in enumerate(node_cols):
            cell = row[col].strip()
            if cell == "1":
                data[t, k] = 1
            elif cell != "0":
                raise NonBinaryEntry(
                    f"{path}: line {line}, column {labels[k]!r}: {cell!r} is not 0 or 1"
                )
        if hub_idx is not None:
            hub_labels.append(row[hub_idx].strip())
        if not data[t].any():
            raise EmptyGroup(f"{path}: line {line} (observation {t}) is an empty group")

    G = GroupedData(data, labels)
    if hub_idx is None:
        return G, None
    lookup = {lab: i for i, lab in enumerate(labels)}
    hubs = []
    for t, lab in enumerate(hub_labels):
        if lab not in lookup:
            raise HubNotMember(f"{path}: line {t + 2}: hub {lab!r} is not a node label")
        hubs.append(lookup[lab])
    return G, HubAssignments(hubs, G.n, G)


def save_grouped_data(G: GroupedData, path, hubs: HubAssignments | None = None, hub_column="hub"):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(G.node_labels)
    if hubs is not None:
        if hub_column in header:
            raise DuplicateLabel(f"hub column {hub_column!r} collides with a node label")
        header.append(hub_column)
    w.writerow(header)
    for t, row in enumerate(G.rows):
        cells = [str(int(v)) for v in row]
        if hubs is not None:
            cells.append(G.node_labels[hubs.hubs[t]])
        w.writerow(cells)
    _write_text(path, buf.getvalue())


def _fmt(x):
    # repr gives the shortest string that round-trips to the same double
    return repr(float(x))


def format_matrix(M, labels: Sequence[str], format="matrix-csv"):
    """Render a square labelled matrix as text in one of ``MATRIX_FORMATS``.

    ``matrix-csv`` and ``json`` round-trip exactly through ``load_matrix``;
    ``edge-list`` writes one ``label_i,label_j,weight`` line per i<j pair
    with positive weight.
    """
    M = np.asarray(M, dtype=np.float64)
    labels = [str(s) for s in labels]
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != len(labels):
        raise DimensionMismatch(f"{len(labels)} labels for matrix of shape {M.shape}")
    if format == "json":
        return json.dumps({"labels": labels, "matrix": M.tolist()}) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if format == "matrix-csv":
        w.writerow(["node"] + labels)
        for lab, row in zip(labels, M):
            w.writerow([lab] + [_fmt(x) for x in row])
    elif format == "edge-list":
        n = len(labels)
        for i in range(n):
            for j in range(i + 1, n):
                if M[i, j] > 0:
                    w.writerow([labels[i], labels[j], _fmt(M[i, j])])
    else:
        raise ValueError(f"unknown matrix format {format!r}; choose from {MATRIX_FORMATS}")
    return buf.getvalue()


def save_matrix(M, labels: Sequence[str], path, format="matrix-csv"):
    """Write ``format_matrix(M, labels, format)`` to ``path``."""
    _write_text(path, format_matrix(M, labels, format))


def load_matrix(path, format="matrix-csv"):
    """Read a matrix written by ``save_matrix``. Returns ``(labels, matrix)``."""
    text = read_text(path)
    if format == "json":
        try:
            doc = json.loads(text)
            labels, M = doc["labels"], np.array(doc["matrix"], dtype=np.float64)
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedFile(f"{path}: not a matrix json document") from exc
    elif format == "matrix-csv":
        rows = _csv_rows(text)
        if not rows:
            raise MalformedFile(f"{path}: empty matrix file")
        labels = [c.strip() for c in rows[0][1:]]
        n = len(labels)
        if len(rows) != n + 1:
            raise MalformedFile(f"{path}: expected {n} matrix rows, found {len(rows) - 1}")
        M = np.empty((n, n))
        for i, row in enumerate(rows[1:]):
            if len(row) != n + 1 or row[0].strip() != labels[i]:
                raise MalformedFile(f"{path}: line {i + 2} does not match header")
            try:
                M[i] = [float(c) for c in row[1:]]
            except ValueError as exc:
                raise MalformedFile(f"{path}: line {i + 2}: {exc}") from exc
    else:
        raise ValueError(f"cannot load matrix format {format!r}")
    _check_unique(labels)
    if M.shape != (len(labels), len(labels)):
        raise MalformedFile(f"{path}: matrix shape {M.shape} does not match labels")
    return list(labels), M


def save_fit_result(result: FitResult, path):
    _write_text(path, json.dumps(result.to_dict(), indent=1) + "\n")


def load_json(path):
    try:
        return json.loads(read_text(path))
    except ValueError as exc:
        raise MalformedFile(f"{path}: invalid json ({exc})") from exc


def load_fit_result(path):
    try:
        return FitResult.from_dict(load_json(path))
    except KeyError as exc:
        raise MalformedFile(f"{path}: missing field {exc}") from exc


def write_json(doc, path):
    _write_text(path, json.dumps(doc, indent=1) + "\n")

