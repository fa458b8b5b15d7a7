"""Count-series ingestion, chain export and fit-report serialization.

CSV files are UTF-8 with a mandatory header row. Supported series layouts:
a single ``value`` column, or ``date,value`` with the dates kept as opaque,
strictly increasing labels. Reports serialize to JSON with sorted keys so
repeated runs diff cleanly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass

import numpy as np

from .diagnostics import ChainDiagnostics, ModelScore
from .errors import DataError
from .inference import PosteriorDraws, credible_interval
from .process import CountSeries, Variant

SCHEMA_VERSION = 1

_INT_RE = re.compile(r"^[+-]?\d+$")


def _parse_count(cell: str, line: int) -> int:
    cell = cell.strip()
    if not cell:
        raise DataError("missing value", line=line)
    if not _INT_RE.match(cell):
        raise DataError(f"value {cell!r} is not an integer", line=line)
    value = int(cell)
    if value < 0:
        raise DataError(f"value {value} is negative", line=line)
    return value


def read_count_series(path) -> CountSeries:
    """Read a count series from a ``value`` or ``date,value`` CSV file.

    Malformed rows raise a DataError naming the offending line (the header
    is line 1); negatives, non-integers and missing cells are rejected.
    """
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in header]
        if header == ["value"]:
            dated = False
        elif header == ["date", "value"]:
            dated = True
        else:
            raise DataError(
                f"expected header 'value' or 'date,value', got {header}", line=1)
        values, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if dated:
                if len(row) != 2:
                    raise DataError(f"expected 2 columns, got {len(row)}", line=line_no)
                label = row[0].strip()
                if not label:
                    raise DataError("missing date label", line=line_no)
                labels.append(label)
                values.append(_parse_count(row[1], line_no))
            else:
                if len(row) != 1:
                    raise DataError(f"expected 1 column, got {len(row)}", line=line_no)
                values.append(_parse_count(row[0], line_no))
    if not values:
        raise DataError(f"{path} contains no observations")
    if dated:
        for i in range(len(labels) - 1):
            if labels[i] >= labels[i + 1]:
                raise DataError(
                    f"date {labels[i + 1]!r} does not increase", line=i + 3)
        return CountSeries(values=np.asarray(values), timestamps=tuple(labels))
    return CountSeries(values=np.asarray(values))


def write_count_series(series: CountSeries, path) -> None:
    """Write a series as CSV; emits ``date,value`` when labels are present."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        if series.timestamps is not None:
            writer.writerow(["date", "value"])
            for label, value in zip(series.timestamps, series.values):
                writer.writerow([label, int(value)])
        else:
            writer.writerow(["value"])
            for value in series.values:
                writer.writerow([int(value)])


def write_chain_csv(matrix, names, path) -> None:
    """Write a chain matrix as CSV, one row per draw, header = names."""
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(list(names))
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def read_chain_csv(path):
    """Read a chain CSV back into (matrix, names)."""
    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    with handle:
        reader = csv.reader(handle)
        try:
            names = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(names):
                raise DataError(f"expected {len(names)} columns", line=line_no)
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DataError("non-numeric chain entry", line=line_no)
    if not rows:
        raise DataError(f"{path} contains no draws")
    return np.asarray(rows), tuple(names)


def sha256_digest(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(65536), b""):
            digest.update(block)
    return "sha256:" + digest.hexdigest()


# ---------------------------------------------------------------------------
# fit report


def derived_quantities(draws: PosteriorDraws) -> dict:
    """Per-draw derived quantities: long-run mean, marginal VMR, innovation CV."""
    cols = {name: draws.parameter(name) for name in draws.parameter_names}
    alpha = cols["alpha"]
    if draws.variant is Variant.GP:
        theta, lam = cols["theta"], cols["lambda"]
        mean_eps = theta / (1.0 - lam)
        vmr_eps = (1.0 - lam) ** -2.0
        cv = 1.0 / np.sqrt(theta * (1.0 - lam))
    else:
        a = cols["a"]
        beta = cols["beta"]
        b = cols.get("b", np.zeros_like(a))
        c = cols["c"] if "c" in cols else beta
        theta = beta / c
        kappa = 1.0 - beta - b * theta
        mean_eps = a * theta / kappa
        vmr_eps = (1.0 - beta) / kappa ** 2
        cv = np.sqrt((1.0 - beta) / (a * theta * kappa))
    return {
        "unconditional_mean": mean_eps / (1.0 - alpha),
        "vmr_x": (vmr_eps + alpha) / (1.0 + alpha),
        "cv": cv,
    }


def _summary(values, level=0.95) -> dict:
    lo, hi = credible_interval(values, level=level)
    return {"estimate": float(np.mean(values)), "ci_low": lo, "ci_high": hi}


@dataclass(frozen=True)
class FitReport:
    """Everything a fit produces, ready for JSON serialization."""

    model: str
    estimates: dict
    derived: dict
    diagnostics: ChainDiagnostics
    scores: ModelScore
    run: dict

    def to_dict(self) -> dict:
        diag = {
            "acceptance_rate": self.diagnostics.acceptance_rate,
            "per_parameter": {
                name: {
                    "acf": {str(lag): v for lag, v in self.diagnostics.acf[name].items()},
                    "ess_ratio": self.diagnostics.ess_ratio[name],
                    "ineff": self.diagnostics.ineff[name],
                    "nse": self.diagnostics.nse[name],
                    "geweke_z": self.diagnostics.geweke_z[name],
                    "geweke_p": self.diagnostics.geweke_p[name],
                }
                for name in self.diagnostics.ineff
            },
        }
        return {
            "schema_version": SCHEMA_VERSION,
            "model": self.model,
            "estimates": self.estimates,
            "derived": self.derived,
            "diagnostics": diag,
            "scores": asdict(self.scores),
            "run": self.run,
        }


def build_fit_report(draws: PosteriorDraws, diagnostics: ChainDiagnostics,
                     scores: ModelScore, data_digest: str,
                     wall_clock: float | None, level: float = 0.95) -> FitReport:
    """Assemble a FitReport from a finished run."""
    estimates = {name: _summary(draws.parameter(name), level)
                 for name in draws.parameter_names}
    derived = {name: _summary(values, level)
               for name, values in derived_quantities(draws).items()}
    run = {
        "seed": draws.seed,
        "iterations": draws.iterations,
        "burnin": draws.burnin,
        "thin": draws.thin,
        "retained": len(draws),
        "gamma_exponent": draws.gamma_exponent,
        "data_digest": data_digest,
        "wall_clock_seconds": wall_clock,
    }
    return FitReport(model=draws.variant.value, estimates=estimates,
                     derived=derived, diagnostics=diagnostics, scores=scores,
                     run=run)


def _sanitize(value):
    """Make a report tree JSON-safe: numpy scalars to Python, non-finite to null."""
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_sanitize(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def json_dumps(obj) -> str:
    """Stable-key JSON with a trailing newline, for diffable artifacts."""
    return json.dumps(_sanitize(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(json_dumps(obj))
