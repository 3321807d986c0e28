"""On-disk formats: datasets, activation-signature sets, test suites, reports.

Datasets, signatures, and suites are line-delimited JSON (one object per
line); reports and models are single JSON documents. Everything is emitted in
a canonical form (sorted keys, floats at 17 significant digits) so that equal
runs produce byte-equal files and every format round-trips exactly. See
FORMATS.md for the schemas.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np

from .generation import GeneratedTest, RobustnessReport
from .model import NetworkModel, dump_model

__all__ = [
    "DatasetRecord",
    "FormatError",
    "dumps_canonical",
    "read_dataset",
    "write_dataset",
    "read_signatures",
    "write_signatures",
    "read_suite",
    "write_suite",
    "read_report",
    "write_report",
    "write_model",
]

Source = Union[str, Path, IO]


class FormatError(ValueError):
    """Malformed on-disk document: bad syntax, wrong shape, or bounds violation."""


# ---------------------------------------------------------------------------
# canonical JSON
# ---------------------------------------------------------------------------


def _float_repr(v: float) -> str:
    if not np.isfinite(v):
        raise FormatError("non-finite numbers cannot be serialized")
    s = format(float(v), ".17g")
    if "." not in s and "e" not in s and "E" not in s:
        s += ".0"
    return s


def _emit(obj, out: list):
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float_repr(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise TypeError(f"object keys must be strings, got {type(key).__name__}")
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_canonical(obj) -> str:
    """Deterministic JSON: sorted keys, 17-significant-digit floats."""
    out: list = []
    _emit(obj, out)
    return "".join(out)


@contextmanager
def _open_read(source: Source):
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield fh
    else:
        yield source


@contextmanager
def _open_write(dest: Source):
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
    else:
        yield dest


def _iter_records(source: Source, what: str):
    with _open_read(source) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{what} line {lineno}: malformed record: {exc}") from exc
            if not isinstance(obj, dict):
                raise FormatError(f"{what} line {lineno}: record must be an object")
            yield lineno, obj


def _record_id(obj: dict, what: str, lineno: int) -> str:
    if "id" not in obj:
        raise FormatError(f"{what} line {lineno}: missing 'id'")
    rid = obj["id"]
    if not isinstance(rid, (str, int)):
        raise FormatError(f"{what} line {lineno}: 'id' must be a string or integer")
    return str(rid)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    x: np.ndarray
    label: int


def read_dataset(source: Source, input_dim: int | None = None) -> list[DatasetRecord]:
    """Parse a dataset file; validates component bounds and, if given, length."""
    records = []
    for lineno, obj in _iter_records(source, "dataset"):
        rid = _record_id(obj, "dataset", lineno)
        for key in ("x", "label"):
            if key not in obj:
                raise FormatError(f"dataset line {lineno}: record {rid!r} missing {key!r}")
        try:
            x = np.asarray(obj["x"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"dataset line {lineno}: record {rid!r}: bad 'x'") from exc
        if x.ndim != 1 or x.size == 0:
            raise FormatError(f"dataset line {lineno}: record {rid!r}: 'x' must be a flat vector")
        if input_dim is not None and x.shape[0] != input_dim:
            raise FormatError(
                f"dataset line {lineno}: record {rid!r}: length {x.shape[0]} != {input_dim}"
            )
        if not np.all(np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
            raise FormatError(
                f"dataset line {lineno}: record {rid!r}: components must lie in [0, 1]"
            )
        label = obj["label"]
        if not isinstance(label, int) or isinstance(label, bool) or label < 0:
            raise FormatError(
                f"dataset line {lineno}: record {rid!r}: 'label' must be a non-negative integer"
            )
        records.append(DatasetRecord(id=rid, x=x, label=label))
    return records


def write_dataset(records: Iterable[DatasetRecord], dest: Source):
    with _open_write(dest) as fh:
        for rec in records:
            fh.write(
                dumps_canonical({"id": rec.id, "x": rec.x, "label": rec.label}) + "\n"
            )


# ---------------------------------------------------------------------------
# activation-signature sets
# ---------------------------------------------------------------------------


def read_signatures(source: Source) -> list[tuple[str, tuple[np.ndarray, ...]]]:
    """Parse precomputed signatures: per record, one bit vector per hidden layer."""
    out = []
    widths = None
    for lineno, obj in _iter_records(source, "signatures"):
        rid = _record_id(obj, "signatures", lineno)
        bits = obj.get("bits")
        if not isinstance(bits, list) or not bits or not all(isinstance(b, list) for b in bits):
            raise FormatError(
                f"signatures line {lineno}: record {rid!r}: 'bits' must be a list of layer lists"
            )
        layers = []
        for layer in bits:
            arr = np.asarray(layer)
            if arr.ndim != 1 or arr.size == 0 or not np.all(np.isin(arr, (0, 1))):
                raise FormatError(
                    f"signatures line {lineno}: record {rid!r}: bits must be 0/1 vectors"
                )
            layers.append(arr.astype(np.uint8))
        shape = tuple(a.shape[0] for a in layers)
        if widths is None:
            widths = shape
        elif shape != widths:
            raise FormatError(
                f"signatures line {lineno}: record {rid!r}: widths {shape} != {widths}"
            )
        out.append((rid, tuple(layers)))
    return out


def write_signatures(entries: Iterable[tuple[str, tuple]], dest: Source):
    with _open_write(dest) as fh:
        for rid, sig in entries:
            fh.write(
                dumps_canonical({"id": rid, "bits": [list(map(int, b)) for b in sig]}) + "\n"
            )


# ---------------------------------------------------------------------------
# test suites
# ---------------------------------------------------------------------------


def _provenance_dict(test: GeneratedTest) -> dict:
    if test.kind == "random":
        return {"kind": "random"}
    layer, combo, config = test.target
    # Wire format uses 1-based hidden layer numbers, matching report rows.
    return {
        "kind": "ct",
        "layer": layer + 1,
        "combo": list(combo),
        "config": list(config),
    }


def write_suite(tests: Iterable[GeneratedTest], dest: Source):
    with _open_write(dest) as fh:
        for t in tests:
            rec = {
                "seed_id": t.seed_id,
                "provenance": _provenance_dict(t),
                "x": t.input,
                "distance": t.distance,
                "predicted_class": t.predicted_class,
                "adversarial": t.adversarial,
            }
            fh.write(dumps_canonical(rec) + "\n")


def read_suite(source: Source) -> list[GeneratedTest]:
    tests = []
    for lineno, obj in _iter_records(source, "suite"):
        missing = [
            k
            for k in ("seed_id", "provenance", "x", "distance", "predicted_class", "adversarial")
            if k not in obj
        ]
        if missing:
            raise FormatError(f"suite line {lineno}: missing fields {missing}")
        prov = obj["provenance"]
        if not isinstance(prov, dict) or prov.get("kind") not in ("random", "ct"):
            raise FormatError(f"suite line {lineno}: bad provenance")
        if prov["kind"] == "ct":
            try:
                target = (
                    int(prov["layer"]) - 1,
                    tuple(int(v) for v in prov["combo"]),
                    tuple(int(v) for v in prov["config"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise FormatError(f"suite line {lineno}: bad ct provenance") from exc
        else:
            target = None
        x = np.asarray(obj["x"], dtype=np.float64)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise FormatError(f"suite line {lineno}: bad 'x'")
        tests.append(
            GeneratedTest(
                input=x,
                seed_id=str(obj["seed_id"]),
                kind=prov["kind"],
                target=target,
                distance=float(obj["distance"]),
                predicted_class=int(obj["predicted_class"]),
                adversarial=bool(obj["adversarial"]),
            )
        )
    return tests


# ---------------------------------------------------------------------------
# reports and models
# ---------------------------------------------------------------------------


def write_report(report: Union[RobustnessReport, dict], dest: Source):
    doc = report.to_dict() if isinstance(report, RobustnessReport) else report
    with _open_write(dest) as fh:
        fh.write(dumps_canonical(doc) + "\n")


def read_report(source: Source) -> dict:
    with _open_read(source) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed report document: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("report must be a JSON object")
    return doc


def write_model(model: NetworkModel, dest: Source):
    with _open_write(dest) as fh:
        fh.write(dumps_canonical(dump_model(model)) + "\n")
