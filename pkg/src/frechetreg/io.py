"""CSV and JSON readers/writers for the package's file formats.

All writers put exactly one comment line at the top carrying the package
version and, when given, the seed and a sha256 of the run configuration.
Readers skip any line starting with '#'.  Floats are written with Python's
shortest round-trip repr so identical inputs produce byte-identical files;
nothing time-dependent is ever written into a CSV.
"""

from __future__ import annotations

import csv
import hashlib
import json
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import QuantileMatrix, make_grid
from .errors import DataError

_VERSION = "0.1.0"


def config_hash(config: Mapping) -> str:
    """sha256 hex digest of the canonical JSON form of a configuration."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def header_line(seed: int | None = None, config_sha: str | None = None) -> str:
    parts = [f"# frechetreg={_VERSION}"]
    if seed is not None:
        parts.append(f"seed={seed}")
    if config_sha is not None:
        parts.append(f"config=sha256:{config_sha}")
    return " ".join(parts)


def _float_repr(x: float) -> str:
    return repr(float(x))


def _data_rows(path: str) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and not row[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


# ---------------------------------------------------------------------------
# long-format readings


def read_long_csv(path: str) -> dict[str, np.ndarray]:
    """Read long-form readings into per-subject arrays (input order kept).

    The header must name subject_id and value columns; anything else (a
    timestamp column, say) is ignored.
    """
    rows = _data_rows(path)
    header = [c.strip() for c in rows[0]]
    try:
        id_col = header.index("subject_id")
        val_col = header.index("value")
    except ValueError:
        raise DataError(
            f"{path}: expected columns subject_id and value, got {header}"
        ) from None
    n_cols = max(id_col, val_col) + 1
    values: dict[str, list[float]] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) < n_cols:
            raise DataError(f"{path}:{lineno}: short row")
        try:
            v = float(row[val_col])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad value {row[val_col]!r}") from exc
        values.setdefault(row[id_col].strip(), []).append(v)
    if not values:
        raise DataError(f"{path}: no readings")
    return {k: np.asarray(v, dtype=float) for k, v in values.items()}


# ---------------------------------------------------------------------------
# quantile matrices


def write_quantile_csv(
    path: str,
    qm: QuantileMatrix,
    seed: int | None = None,
    config_sha: str | None = None,
) -> None:
    """Write rows `subject_id,q1,...,qm`."""
    m = qm.grid.m
    ids = qm.subject_ids or tuple(str(i + 1) for i in range(qm.n))
    with open(path, "w", newline="") as fh:
        fh.write(header_line(seed, config_sha) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject_id"] + [f"q{j}" for j in range(1, m + 1)])
        for sid, row in zip(ids, qm.values):
            writer.writerow([sid] + [_float_repr(v) for v in row])


def read_quantile_csv(
    path: str, box: tuple[float, float] | None = None
) -> QuantileMatrix:
    """Read a `subject_id,q1..qm` file onto the mid-probability grid."""
    rows = _data_rows(path)
    header = [c.strip() for c in rows[0]]
    if header[0] != "subject_id":
        raise DataError(f"{path}: first column must be subject_id")
    m = len(header) - 1
    if m < 2 or header[1:] != [f"q{j}" for j in range(1, m + 1)]:
        raise DataError(f"{path}: expected columns q1..qm, got {header[1:]}")
    ids, vals = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != m + 1:
            raise DataError(f"{path}:{lineno}: expected {m + 1} fields")
        ids.append(row[0].strip())
        try:
            vals.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad number") from exc
    qm = QuantileMatrix(
        grid=make_grid(m),
        values=np.asarray(vals, dtype=float),
        subject_ids=tuple(ids),
        box=box,
    )
    qm.validate()
    return qm


# ---------------------------------------------------------------------------
# covariates


def write_covariate_csv(
    path: str,
    ids: Sequence[str],
    X: np.ndarray,
    names: Sequence[str],
    seed: int | None = None,
    config_sha: str | None = None,
) -> None:
    X = np.asarray(X, dtype=float)
    if X.shape != (len(ids), len(names)):
        raise DataError("covariate shape does not match ids/names")
    with open(path, "w", newline="") as fh:
        fh.write(header_line(seed, config_sha) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subject_id"] + list(names))
        for sid, row in zip(ids, X):
            writer.writerow([sid] + [_float_repr(v) for v in row])


def read_covariate_csv(path: str) -> tuple[list[str], np.ndarray, tuple[str, ...]]:
    """Read `subject_id,<name1>,...` rows; returns (ids, raw X, names)."""
    rows = _data_rows(path)
    header = [c.strip() for c in rows[0]]
    if header[0] != "subject_id" or len(header) < 2:
        raise DataError(f"{path}: expected subject_id plus covariate columns")
    names = tuple(header[1:])
    ids, vals = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
        ids.append(row[0].strip())
        try:
            vals.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: bad number") from exc
    X = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: covariates must be finite")
    return ids, X, names


def write_centering_json(
    path: str, names: Sequence[str], column_means: np.ndarray
) -> None:
    """Sidecar recording the training-column means used for centering."""
    payload = {
        "version": _VERSION,
        "names": list(names),
        "column_means": [float(v) for v in column_means],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_centering_json(path: str) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path) as fh:
        payload = json.load(fh)
    try:
        names = tuple(payload["names"])
        means = np.asarray(payload["column_means"], dtype=float)
    except KeyError as exc:
        raise DataError(f"{path}: missing key {exc}") from exc
    if means.shape != (len(names),):
        raise DataError(f"{path}: means/names length mismatch")
    return names, means


# ---------------------------------------------------------------------------
# solution paths


def write_path_csv(
    path: str,
    taus: np.ndarray,
    lambdas: np.ndarray,
    f_values: np.ndarray,
    seed: int | None = None,
    config_sha: str | None = None,
) -> None:
    """Long-format rows `tau,k,lambda_k,f_value` with k counted from 1."""
    taus = np.asarray(taus, dtype=float)
    lambdas = np.asarray(lambdas, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write(header_line(seed, config_sha) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["tau", "k", "lambda_k", "f_value"])
        for t, tau in enumerate(taus):
            for k in range(lambdas.shape[1]):
                writer.writerow(
                    [
                        _float_repr(tau),
                        k + 1,
                        _float_repr(lambdas[t, k]),
                        _float_repr(f_values[t]),
                    ]
                )


def read_path_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of write_path_csv; returns (taus, lambdas, f_values)."""
    rows = _data_rows(path)
    if [c.strip() for c in rows[0]] != ["tau", "k", "lambda_k", "f_value"]:
        raise DataError(f"{path}: expected columns tau,k,lambda_k,f_value")
    by_tau: dict[float, dict[int, float]] = {}
    f_by_tau: dict[float, float] = {}
    order: list[float] = []
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            tau, k, lam, f = float(row[0]), int(row[1]), float(row[2]), float(row[3])
        except (ValueError, IndexError) as exc:
            raise DataError(f"{path}:{lineno}: bad row") from exc
        if tau not in by_tau:
            by_tau[tau] = {}
            order.append(tau)
        by_tau[tau][k] = lam
        f_by_tau[tau] = f
    p = max(max(d) for d in by_tau.values())
    lambdas = np.zeros((len(order), p))
    for t, tau in enumerate(order):
        d = by_tau[tau]
        if sorted(d) != list(range(1, p + 1)):
            raise DataError(f"{path}: tau={tau} is missing coordinate rows")
        for k, lam in d.items():
            lambdas[t, k - 1] = lam
    taus = np.asarray(order, dtype=float)
    f_values = np.asarray([f_by_tau[tau] for tau in order])
    return taus, lambdas, f_values


# ---------------------------------------------------------------------------
# stability output


def write_stability_csv(
    path: str,
    taus: np.ndarray,
    names: Sequence[str],
    pi_hat: np.ndarray,
    q_hat: np.ndarray,
    pi_thr: np.ndarray,
    selected_by_tau: np.ndarray,
    seed: int | None = None,
    config_sha: str | None = None,
) -> None:
    """Long-format rows `tau,k,variable_name,pi_hat,q_hat,pi_thr,selected`."""
    with open(path, "w", newline="") as fh:
        fh.write(header_line(seed, config_sha) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["tau", "k", "variable_name", "pi_hat", "q_hat", "pi_thr", "selected"]
        )
        for t, tau in enumerate(np.asarray(taus, dtype=float)):
            for k, name in enumerate(names):
                writer.writerow(
                    [
                        _float_repr(tau),
                        k + 1,
                        name,
                        _float_repr(pi_hat[t, k]),
                        _float_repr(q_hat[t]),
                        _float_repr(pi_thr[t]),
                        int(bool(selected_by_tau[t, k])),
                    ]
                )


def write_json_report(path: str, payload: Mapping) -> None:
    """Deterministic JSON report (sorted keys, no timestamps)."""
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, default=_jsonify)
        fh.write("\n")


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, Iterable):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")
