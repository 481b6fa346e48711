"""
Instance files and report rendering for the CLI.

Instance file (JSON):
    {"kind": "joint3" | "joint2" | "channel" | "prob_vector" | "samples",
     "dims": [...], "values": [... row-major ...], "labels": [[...], ...]}

joint3 axes are (Y, X, Z); joint2 axes default to (X, Y) and may be named
with an "axes" field; samples are [N, 2] integer (x, y) index pairs.
"""
import io
import json
import math
from pathlib import Path

import numpy as np
import pandas as pd

from core_prob import Channel, Joint2, Joint3, ProbVector, ValidationError

KINDS = {"joint3": 3, "joint2": 2, "channel": 2, "prob_vector": 1, "samples": 2}
CURVE_COLUMNS = ["beta", "rate_bits", "sufficiency_bits", "objective_bits"]
SIGNIFICANT = 10


class InstanceError(ValidationError):
    """A malformed instance file; the message names the file and the offending field"""

    def __init__(self, source, message):
        super().__init__(f"{source}: {message}")
        self.source = source


def _field(document, name, source):
    if name not in document:
        raise InstanceError(source, f"missing field '{name}'")
    return document[name]


def _dims(document, kind, source):
    dims = _field(document, "dims", source)
    if not isinstance(dims, list) or len(dims) != KINDS[kind]:
        raise InstanceError(source, f"dims must list {KINDS[kind]} sizes for kind '{kind}'")
    for i, size in enumerate(dims):
        if isinstance(size, bool) or not isinstance(size, int) or size < 1:
            raise InstanceError(source, f"dims[{i}] must be a positive integer, got {size!r}")
    return dims


def _values(document, dims, source):
    values = _field(document, "values", source)
    if not isinstance(values, list):
        raise InstanceError(source, "values must be a flat list of numbers")
    expected = int(np.prod(dims))
    if len(values) != expected:
        raise InstanceError(source, f"values has {len(values)} entries, dims {dims} need {expected}")
    for i, value in enumerate(values):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InstanceError(source, f"values[{i}] is not a number: {value!r}")
    return np.array(values, dtype=float).reshape(dims)


def _labels(document, dims, source):
    labels = document.get("labels")
    if labels is None:
        return [None] * len(dims)
    if len(dims) == 1 and labels and not isinstance(labels[0], list):
        labels = [labels]
    if not isinstance(labels, list) or len(labels) != len(dims):
        raise InstanceError(source, f"labels must hold one list per axis ({len(dims)})")
    for i, (axis_labels, size) in enumerate(zip(labels, dims)):
        if axis_labels is not None and (not isinstance(axis_labels, list) or len(axis_labels) != size):
            raise InstanceError(source, f"labels[{i}] must list {size} symbols")
    return labels


def parse_instance(document, source="<instance>"):
    """Build the probability object described by a decoded instance document"""
    if not isinstance(document, dict):
        raise InstanceError(source, "instance must be a JSON object")
    kind = _field(document, "kind", source)
    if kind not in KINDS:
        raise InstanceError(source, f"kind must be one of {sorted(KINDS)}, got {kind!r}")
    dims = _dims(document, kind, source)
    if kind == "samples":
        if dims[1] != 2:
            raise InstanceError(source, "samples need dims [N, 2]")
        raw = _values(document, dims, source)
        bad = np.argwhere((raw != np.round(raw)) | (raw < 0))
        if bad.size:
            raise InstanceError(source, f"values[{int(bad[0][0]) * 2 + int(bad[0][1])}] is not a symbol index")
        return raw.astype(int)

    values = _values(document, dims, source)
    labels = _labels(document, dims, source)
    try:
        if kind == "joint3":
            return Joint3(values, tuple(labels))
        if kind == "joint2":
            axes = tuple(document.get("axes", ["X", "Y"]))
            if len(axes) != 2:
                raise InstanceError(source, "axes must name two axes")
            return Joint2(values, axes, tuple(labels))
        if kind == "channel":
            return Channel(values, labels[0], labels[1])
        return ProbVector(values, labels[0])
    except InstanceError:
        raise
    except ValidationError as e:
        raise InstanceError(source, str(e)) from None


def load_instance(path, kinds=None):
    """Read and validate an instance file, optionally restricted to some kinds"""
    path = Path(path)
    try:
        with open(path, "r") as f:
            document = json.load(f)
    except FileNotFoundError:
        raise InstanceError(str(path), "file not found") from None
    except json.JSONDecodeError as e:
        raise InstanceError(str(path), f"invalid JSON at line {e.lineno}: {e.msg}") from None
    instance = parse_instance(document, str(path))
    if kinds is not None and document["kind"] not in kinds:
        raise InstanceError(str(path), f"kind '{document['kind']}' not accepted here (expected {', '.join(kinds)})")
    return instance


def instance_document(obj):
    """Instance document for a Channel or ProbVector (used for emitted encoders)"""
    if isinstance(obj, Channel):
        return {
            "kind": "channel",
            "dims": list(obj.rows.shape),
            "values": [round_value(v) for v in obj.rows.ravel()],
            "labels": [list(obj.input_labels), list(obj.output_labels)],
        }
    if isinstance(obj, ProbVector):
        return {
            "kind": "prob_vector",
            "dims": [obj.size],
            "values": [round_value(v) for v in obj.probs],
            "labels": [list(obj.labels)],
        }
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def round_value(value):
    """Round to SIGNIFICANT digits; infinities and NaN pass through"""
    value = float(value)
    if not math.isfinite(value):
        return value
    return float(f"{value:.{SIGNIFICANT}g}")


def round_report(report):
    if isinstance(report, dict):
        return {key: round_report(value) for key, value in report.items()}
    if isinstance(report, (list, tuple)):
        return [round_report(value) for value in report]
    if isinstance(report, (bool, np.bool_)):
        return bool(report)
    if isinstance(report, (int, np.integer)):
        return int(report)
    if isinstance(report, (float, np.floating)):
        return round_value(report)
    return report


def to_json(report):
    return json.dumps(round_report(report), sort_keys=True, indent=2, allow_nan=True)


def format_number(value):
    return f"{value:.{SIGNIFICANT}g}"


def to_table(frame: pd.DataFrame):
    return frame.to_string(index=False, float_format=format_number)


def curve_frame(points):
    return pd.DataFrame(
        [[p.beta, p.rate, p.sufficiency, p.objective] for p in points],
        columns=CURVE_COLUMNS,
    )


def to_csv(frame: pd.DataFrame):
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=f"%.{SIGNIFICANT}g", lineterminator="\n")
    return buffer.getvalue()


def has_infinite(report):
    if isinstance(report, dict):
        return any(has_infinite(v) for v in report.values())
    if isinstance(report, (list, tuple)):
        return any(has_infinite(v) for v in report)
    if isinstance(report, (float, np.floating)):
        return math.isinf(report)
    return False
