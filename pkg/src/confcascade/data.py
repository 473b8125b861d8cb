"""Score-file and report serialization.

Score files are UTF-8 JSON Lines: a header record carrying the layer
count and names, then one record per example::

    {"format": "confcascade-scores", "version": 1, "layer_count": 2, "layer_names": [...], "metadata": {...}}
    {"id": "q1", "candidates": [{"label": 0, "scores": [0.1, 2.3]}, ...], "admissible": [0, 4], "answers": [0]}

Reports are CSV with a fixed column set and six-decimal numbers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import Dataset, Example, validate_dataset
from .evaluation import METRICS, TrialReport

FORMAT = "confcascade-scores"
VERSION = 1
REPORT_COLUMNS = ("kind", "predictor", "epsilon", "trial", "stat") + METRICS


class ScoreFileError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def save_score_file(d: Dataset, path) -> None:
    header = {
        "format": FORMAT,
        "version": VERSION,
        "layer_count": d.layer_count,
        "layer_names": list(d.layer_names),
        "metadata": d.metadata,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for e in d.examples:
            record = {
                "id": e.id,
                "candidates": [
                    {"label": int(y), "scores": [float(s) for s in row]} for y, row in zip(e.labels, e.scores)
                ],
                "admissible": sorted(e.admissible),
                "answers": sorted(e.answers),
            }
            fh.write(json.dumps(record) + "\n")


def _require(obj: dict, key: str, kind, lineno: int):
    if key not in obj:
        raise ScoreFileError(lineno, f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ScoreFileError(lineno, f"field {key!r} has wrong type {type(value).__name__}")
    return value


def _parse_header(line: str) -> dict:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ScoreFileError(1, f"header is not valid JSON ({exc.msg})") from None
    if not isinstance(header, dict):
        raise ScoreFileError(1, "header must be a JSON object")
    if header.get("format") != FORMAT:
        raise ScoreFileError(1, f"unrecognised format {header.get('format')!r}")
    m = _require(header, "layer_count", int, 1)
    if m < 1:
        raise ScoreFileError(1, f"layer_count must be >= 1, got {m}")
    names = header.get("layer_names", [])
    if not isinstance(names, list) or (names and len(names) != m):
        raise ScoreFileError(1, "layer_names must list one name per layer")
    return header


def _parse_example(line: str, lineno: int, m: int) -> Example:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ScoreFileError(lineno, f"malformed record ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise ScoreFileError(lineno, "record must be a JSON object")
    ex_id = _require(rec, "id", str, lineno)
    cands = _require(rec, "candidates", list, lineno)
    admissible = _require(rec, "admissible", list, lineno)
    answers = _require(rec, "answers", list, lineno)
    labels, scores = [], []
    for c in cands:
        if not isinstance(c, dict):
            raise ScoreFileError(lineno, "candidate entries must be objects")
        labels.append(_require(c, "label", int, lineno))
        row = _require(c, "scores", list, lineno)
        if len(row) != m:
            raise ScoreFileError(lineno, f"candidate {c['label']} has {len(row)} scores, header declares {m} layers")
        if not all(isinstance(s, (int, float)) and not isinstance(s, bool) for s in row):
            raise ScoreFileError(lineno, f"candidate {c['label']} has non-numeric scores")
        scores.append(row)
    for name, ids in (("admissible", admissible), ("answers", answers)):
        if not all(isinstance(a, int) and not isinstance(a, bool) for a in ids):
            raise ScoreFileError(lineno, f"field {name!r} must hold integer labels")
    arr = np.array(scores, dtype=np.float64).reshape(len(labels), m)
    return Example(ex_id, labels, arr, admissible, answers)


def load_score_file(path) -> Dataset:
    """Parse and validate a score file; errors carry the offending line number."""
    examples = []
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise ScoreFileError(1, "missing header")
        header = _parse_header(first)
        m = header["layer_count"]
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            e = _parse_example(line, lineno, m)
            if e.id in seen:
                raise ScoreFileError(lineno, f"duplicate example id {e.id!r} (first seen on line {seen[e.id]})")
            seen[e.id] = lineno
            problems = validate_dataset(Dataset(m, [e]))
            if problems:
                raise ScoreFileError(lineno, problems[0])
            examples.append(e)
    return Dataset(m, examples, header.get("layer_names", ()), header.get("metadata", {}))


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6f}"


def report_rows(report: TrialReport):
    """Yield report rows: per-trial values, per-epsilon summaries, then AUC summaries."""
    grid = report.grid
    for p in report.predictors:
        vals = report.values[p]
        n_trials = vals[METRICS[0]].shape[0]
        for t in range(n_trials):
            for i, eps in enumerate(grid):
                yield ["trial", p, _fmt(eps), str(t), ""] + [_fmt(vals[m][t, i]) for m in METRICS]
        means = {m: report.mean(p, m) for m in METRICS}
        bands = {m: report.band(p, m) for m in METRICS}
        for i, eps in enumerate(grid):
            yield ["summary", p, _fmt(eps), "", "mean"] + [_fmt(means[m][i]) for m in METRICS]
            yield ["summary", p, _fmt(eps), "", "p16"] + [_fmt(bands[m][0][i]) for m in METRICS]
            yield ["summary", p, _fmt(eps), "", "p84"] + [_fmt(bands[m][1][i]) for m in METRICS]
        trial_aucs = {m: report.trial_aucs(p, m) for m in METRICS}
        auc_bands = {m: np.percentile(trial_aucs[m], [16, 84], method="inverted_cdf") for m in METRICS}
        yield ["auc", p, "", "", "mean"] + [_fmt(report.auc(p, m)) for m in METRICS]
        yield ["auc", p, "", "", "p16"] + [_fmt(auc_bands[m][0]) for m in METRICS]
        yield ["auc", p, "", "", "p84"] + [_fmt(auc_bands[m][1]) for m in METRICS]


def format_report(report: TrialReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    writer.writerows(report_rows(report))
    return buf.getvalue()


def write_report(report: TrialReport, path) -> None:
    Path(path).write_text(format_report(report), encoding="utf-8", newline="")


def read_report(path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
