"""Dataset CSV ingestion and emission.

Two row schemas, both with a mandatory header and UTF-8 text:

* classifier:      ``s_1,...,s_D,label``        (label in {0, 1})
* lattice / Cox:   ``row,col,count[,trials]``   (cells absent from the file
  are unobserved for the binomial model and zero-count for the Cox model)

Malformed rows are reported with their line numbers; every structural
violation found is listed, not just the first.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class DatasetError(ValueError):
    def __init__(self, path, problems):
        self.problems = list(problems)
        lines = "\n".join(f"  - {p}" for p in self.problems)
        super().__init__(f"invalid dataset {path}:\n{lines}")


def _read_rows(path):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = [(i + 1, row) for i, row in enumerate(reader) if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DatasetError(path, ["file is empty; expected a header row"])
    return rows


def load_classifier_csv(path):
    """Read a classifier dataset; returns {'locations', 'labels'}."""
    rows = _read_rows(path)
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    if not header or header[-1] != "label" or not all(h.startswith("s_") for h in header[:-1]):
        raise DatasetError(path, [
            f"line {header_line}: expected header 's_1,...,s_D,label', got {','.join(header)!r}"
        ])
    n_dims = len(header) - 1
    if n_dims < 1:
        raise DatasetError(path, [f"line {header_line}: need at least one coordinate column"])

    problems, locations, labels = [], [], []
    for line, row in rows[1:]:
        if len(row) != n_dims + 1:
            problems.append(f"line {line}: expected {n_dims + 1} fields, got {len(row)}")
            continue
        try:
            coords = [float(v) for v in row[:-1]]
        except ValueError:
            problems.append(f"line {line}: non-numeric coordinate")
            continue
        label_text = row[-1].strip()
        if label_text not in ("0", "1"):
            problems.append(f"line {line}: label must be 0 or 1, got {label_text!r}")
            continue
        locations.append(coords)
        labels.append(int(label_text))
    if not problems and not locations:
        problems.append("no data rows")
    if problems:
        raise DatasetError(path, problems)
    dataset = {"locations": np.array(locations), "labels": np.array(labels)}
    logger.info("loaded classifier dataset %s: %d rows, %d input dims", path, len(labels), n_dims)
    return dataset


def load_lattice_csv(path, shape, with_trials):
    """Read a lattice dataset onto an (n1, n2) grid.

    ``with_trials`` selects the binomial schema (count = successes); without
    it the count column is a plain cell count.
    """
    rows = _read_rows(path)
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    expected = ["row", "col", "count", "trials"] if with_trials else ["row", "col", "count"]
    if header != expected and not (not with_trials and header == ["row", "col", "count", "trials"]):
        raise DatasetError(path, [
            f"line {header_line}: expected header {','.join(expected)!r}, got {','.join(header)!r}"
        ])
    n1, n2 = shape
    counts = np.zeros(n1 * n2, dtype=int)
    trials = np.zeros(n1 * n2, dtype=int)
    seen = set()
    problems = []
    for line, row in rows[1:]:
        if len(row) != len(header):
            problems.append(f"line {line}: expected {len(header)} fields, got {len(row)}")
            continue
        try:
            values = [int(v) for v in row]
        except ValueError:
            problems.append(f"line {line}: non-integer field")
            continue
        r, c, y = values[0], values[1], values[2]
        if not (0 <= r < n1 and 0 <= c < n2):
            problems.append(f"line {line}: cell ({r}, {c}) outside the {n1}x{n2} grid")
            continue
        if (r, c) in seen:
            problems.append(f"line {line}: duplicate cell ({r}, {c})")
            continue
        seen.add((r, c))
        if y < 0:
            problems.append(f"line {line}: negative count")
            continue
        k = r * n2 + c
        counts[k] = y
        if with_trials:
            n = values[3]
            if y > n:
                problems.append(f"line {line}: count {y} exceeds trials {n}")
                continue
            trials[k] = n
    if problems:
        raise DatasetError(path, problems)
    logger.info("loaded lattice dataset %s: %d observed cells on a %dx%d grid",
                path, len(seen), n1, n2)
    if with_trials:
        return {"shape": tuple(shape), "successes": counts, "trials": trials}
    return {"shape": tuple(shape), "counts": counts}


def load_dataset(path, model_kind, shape=None):
    """Dispatch on the model kind; lattice kinds need the grid shape."""
    if model_kind == "logistic":
        return load_classifier_csv(path)
    if model_kind == "binomial":
        if shape is None:
            raise ValueError("binomial datasets need the grid shape")
        return load_lattice_csv(path, shape, with_trials=True)
    if model_kind == "lgcp":
        if shape is None:
            raise ValueError("lgcp datasets need the grid shape")
        return load_lattice_csv(path, shape, with_trials=False)
    raise ValueError(f"model kind {model_kind!r} has no dataset schema")


def write_dataset(path, model_kind, dataset):
    """Inverse of load_dataset for the synthetic-data command."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if model_kind == "logistic":
            locations = np.asarray(dataset["locations"])
            labels = np.asarray(dataset["labels"])
            writer.writerow([f"s_{i + 1}" for i in range(locations.shape[1])] + ["label"])
            for coords, label in zip(locations, labels):
                writer.writerow([repr(float(c)) for c in coords] + [int(label)])
        elif model_kind == "binomial":
            n1, n2 = dataset["shape"]
            writer.writerow(["row", "col", "count", "trials"])
            trials = np.asarray(dataset["trials"]).reshape(n1, n2)
            successes = np.asarray(dataset["successes"]).reshape(n1, n2)
            for r in range(n1):
                for c in range(n2):
                    if trials[r, c] > 0:
                        writer.writerow([r, c, int(successes[r, c]), int(trials[r, c])])
        elif model_kind == "lgcp":
            n1, n2 = dataset["shape"]
            writer.writerow(["row", "col", "count"])
            counts = np.asarray(dataset["counts"]).reshape(n1, n2)
            for r in range(n1):
                for c in range(n2):
                    writer.writerow([r, c, int(counts[r, c])])
        else:
            raise ValueError(f"model kind {model_kind!r} has no dataset schema")
    return path


def write_truth(path, u_true):
    """Sidecar file with the generating latent field, one value per line."""
    path = Path(path)
    np.savetxt(path, np.asarray(u_true), fmt="%.17g", header="true_field", comments="")
    return path
