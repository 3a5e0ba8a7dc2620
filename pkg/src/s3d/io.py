"""Model JSON, dataset CSV and loss-curve CSV files.

Parse failures raise :class:`ParseError` naming the file, line and field.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParseError
from .model import Dataset, MlpNetwork

CURVE_HEADER = ("iteration", "neuron_count", "train_loss", "event")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps_json(obj) -> str:
    """Deterministic JSON: sorted keys, shortest round-trip floats, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# -- model -------------------------------------------------------------------


def model_to_dict(net: MlpNetwork) -> dict:
    layers = [{"rows": w.shape[0], "cols": w.shape[1], "weights": w.ravel().tolist()} for w in net.layers]
    return {
        "activation": net.activation.name,
        "loss": net.loss_kind,
        "layers": layers,
        "output_weights": net.output_weights.tolist(),
        "ids": [list(row) for row in net.ids],
    }


def save_model(net: MlpNetwork, path):
    write_text(path, dumps_json(model_to_dict(net)))


def _field(doc, key, kind, where):
    if key not in doc:
        raise ParseError(f"{where}: missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind) or isinstance(value, bool):
        raise ParseError(f"{where}: field {key!r} has type {type(value).__name__}")
    return value


def _reals(values, where) -> list[float]:
    out = []
    for k, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ParseError(f"{where}[{k}]: expected a finite number, got {v!r}")
        out.append(float(v))
    return out


def model_from_dict(doc, where: str = "model") -> MlpNetwork:
    if not isinstance(doc, dict):
        raise ParseError(f"{where}: top level must be an object")
    activation = _field(doc, "activation", str, where)
    loss_kind = _field(doc, "loss", str, where)
    raw_layers = _field(doc, "layers", list, where)
    layers = []
    for k, layer in enumerate(raw_layers):
        lw = f"{where}: layers[{k}]"
        if not isinstance(layer, dict):
            raise ParseError(f"{lw}: must be an object")
        rows = _field(layer, "rows", int, lw)
        cols = _field(layer, "cols", int, lw)
        weights = _reals(_field(layer, "weights", list, lw), f"{lw}.weights")
        if rows < 1 or cols < 1 or len(weights) != rows * cols:
            raise ParseError(f"{lw}: {len(weights)} weights do not fill a {rows}x{cols} matrix")
        layers.append(np.array(weights).reshape(rows, cols))
    out = _reals(_field(doc, "output_weights", list, where), f"{where}: output_weights")
    ids = doc.get("ids")
    if ids is not None and not (isinstance(ids, list) and all(isinstance(r, list) for r in ids)):
        raise ParseError(f"{where}: field 'ids' must be a list of lists")
    try:
        return MlpNetwork(activation, loss_kind, tuple(layers), np.array(out), ids)
    except InvalidInputError as exc:
        raise ParseError(f"{where}: {exc}") from None


def load_model(path) -> MlpNetwork:
    text = _read(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return model_from_dict(doc, str(path))


def _read(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None


# -- dataset -----------------------------------------------------------------


def dataset_to_csv(data: Dataset) -> str:
    lines = [",".join([f"x{k}" for k in range(data.d)] + ["y"])]
    for x, y in zip(data.inputs, data.targets):
        lines.append(",".join(repr(float(v)) for v in (*x, y)))
    return "\n".join(lines) + "\n"


def save_dataset(data: Dataset, path):
    write_text(path, dataset_to_csv(data))


def parse_dataset(text: str, where: str = "dataset") -> Dataset:
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{where}: empty file") from None
    header = [h.strip() for h in header]
    d = len(header) - 1
    expected = [f"x{k}" for k in range(d)] + ["y"]
    if d < 1 or header != expected:
        raise ParseError(f"{where}: line 1: header must be {','.join(expected if d >= 1 else ['x0', 'y'])}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{where}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        vals = []
        for name, cell in zip(header, row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{where}: line {lineno}, field {name!r}: not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{where}: line {lineno}, field {name!r}: non-finite value {cell!r}")
            vals.append(v)
        rows.append(vals)
    if not rows:
        raise ParseError(f"{where}: no data rows")
    arr = np.array(rows)
    return Dataset(arr[:, :d], arr[:, d])


def load_dataset(path) -> Dataset:
    return parse_dataset(_read(path), str(path))


# -- loss curves -------------------------------------------------------------


def curve_to_csv(rows) -> str:
    lines = [",".join(CURVE_HEADER)]
    for it, count, value, event in rows:
        lines.append(f"{int(it)},{int(count)},{_fmt(value)},{event}")
    return "\n".join(lines) + "\n"


def parse_curve(text: str, where: str = "curve") -> list[tuple]:
    reader = csv.reader(text.splitlines())
    header = next(reader, None)
    if header is None or tuple(header) != CURVE_HEADER:
        raise ParseError(f"{where}: line 1: header must be {','.join(CURVE_HEADER)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != 4:
            raise ParseError(f"{where}: line {lineno}: expected 4 fields, got {len(row)}")
        try:
            rows.append((int(row[0]), int(row[1]), float(row[2]), row[3]))
        except ValueError as exc:
            raise ParseError(f"{where}: line {lineno}: {exc}") from None
    return rows
