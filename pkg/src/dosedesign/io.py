"""Design, report and certificate serialization plus run manifests.

Two design file formats are supported.  JSON::

    {"n": 4, "kind": "standard", "weights": [[...], ...]}

with weights as numbers or strings ("0.125", "1/8").  CSV mirrors the
usual tabular presentation: header ``i\\k,1,...,t``, then one row per
treatment starting with its index.  Fraction strings round-trip exactly;
the CSV writer emits them for exact designs.
"""

from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import Design, ModelSpec, STANDARD, EXTENDED, make_design
from .criteria import CriterionReport
from .errors import ParseError

__all__ = [
    "parse_weight",
    "design_to_json",
    "design_from_json",
    "design_to_csv",
    "design_from_csv",
    "save_design",
    "load_design",
    "report_to_dict",
    "report_to_csv",
    "certificate_to_dict",
    "RunManifest",
    "write_manifest",
]


def parse_weight(token):
    """Parse one weight: fractions and decimal strings become exact rationals."""
    if isinstance(token, (int, float, Fraction)):
        return token
    text = str(token).strip()
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"cannot parse weight {token!r}") from exc


def _format_weight(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return repr(float(value))


def design_to_json(design: Design) -> str:
    payload = {
        "n": design.n,
        "kind": design.kind,
        "weights": [[float(w) for w in row] for row in design.weights],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def design_from_json(text: str) -> Design:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("design JSON must be an object")
    missing = {"n", "kind", "weights"} - payload.keys()
    if missing:
        raise ParseError(f"design JSON lacks keys {sorted(missing)}")
    try:
        spec = ModelSpec(payload["n"], payload["kind"])
    except Exception as exc:
        raise ParseError(str(exc)) from exc
    weights = payload["weights"]
    if not isinstance(weights, list) or not all(isinstance(row, list) for row in weights):
        raise ParseError("weights must be a list of rows")
    rows = [[parse_weight(w) for w in row] for row in weights]
    return make_design(spec, rows)


def design_to_csv(design: Design) -> str:
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["i\\k"] + [str(k) for k in range(1, design.t + 1)])
    for i, row in enumerate(design.weights):
        writer.writerow([str(i)] + [_format_weight(w) for w in row])
    return buffer.getvalue()


def design_from_csv(text: str) -> Design:
    rows = [row for row in csv.reader(_io.StringIO(text)) if row]
    if len(rows) < 2:
        raise ParseError("CSV design needs a header and at least one row")
    header = rows[0]
    t = len(header) - 1
    if t < 1 or [h.strip() for h in header[1:]] != [str(k) for k in range(1, t + 1)]:
        raise ParseError("CSV header must be 'i\\k,1,...,t'")
    n = len(rows) - 2
    body = []
    for expected, row in enumerate(rows[1:]):
        if len(row) != t + 1:
            raise ParseError(f"row {expected} has {len(row) - 1} weights, expected {t}")
        if row[0].strip() != str(expected):
            raise ParseError(f"treatment rows must be labeled 0..{n} in order")
        body.append([parse_weight(w) for w in row[1:]])
    if t == n:
        kind = STANDARD
    elif t == n + 1:
        kind = EXTENDED
    else:
        raise ParseError(f"{n + 1} treatment rows cannot have {t} cohorts")
    return make_design(ModelSpec(n, kind), body)


def save_design(design: Design, path) -> None:
    path = Path(path)
    if path.suffix == ".csv":
        path.write_text(design_to_csv(design))
    else:
        path.write_text(design_to_json(design))


def load_design(path) -> Design:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if path.suffix == ".csv":
        return design_from_csv(text)
    return design_from_json(text)


def report_to_dict(report: CriterionReport) -> dict:
    return {
        "e": report.e_value,
        "a": report.a_value,
        "d": report.d_value,
        "mv": report.mv_value,
        "avg_contrast": report.avg_contrast_variance,
        "lv": None if report.lv_values is None else list(report.lv_values),
    }


def report_to_csv(report: CriterionReport) -> str:
    """One-line CSV variant for batch runs."""
    lv = report.lv_values or ()
    header = ["e", "a", "d", "mv", "avg_contrast"] + [f"lv{k + 1}" for k in range(len(lv))]
    values = [report.e_value, report.a_value, report.d_value,
              report.mv_value, report.avg_contrast_variance, *lv]
    buffer = _io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerow([repr(float(v)) for v in values])
    return buffer.getvalue()


def certificate_to_dict(result) -> dict:
    return {
        "claim": result.claim,
        "status": result.status,
        "worst_gap": result.worst_gap,
        "witness_vertex_index": result.witness_index,
        "witness_weights": [[float(w) for w in row] for row in result.witness.weights],
    }


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record written next to every CLI output."""

    command: str
    argv: list[str]
    inputs: dict
    outputs: list[str]
    seed: int | None
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "argv": list(self.argv),
            "inputs": dict(self.inputs),
            "outputs": list(self.outputs),
            "seed": self.seed,
            "tool_version": self.tool_version,
        }


def write_manifest(manifest: RunManifest, output_path) -> Path:
    path = Path(str(output_path) + ".manifest.json")
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    return path
