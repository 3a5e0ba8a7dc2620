"""Experiment runners that read configuration and write CSV/JSON outputs."""

from __future__ import annotations

import json
from dataclasses import fields
from pathlib import Path

from .engine import GrowthConfig, grow
from .errors import InvalidInputError, ParseError
from .io import curve_to_csv, dumps_json, load_dataset, load_model, save_model, write_text
from .model import OptimizerConfig, loss
from .splitting import split_reports
from .toy import ToyConfig, run_toy

OPTIMIZER_KEYS = {"optimizer": "kind", "lr": "lr", "steps": "steps", "freeze_output_weights": "freeze_output_weights"}


def load_config(path) -> dict:
    """Read a flat JSON configuration object (``None`` gives an empty one)."""
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: cannot read ({exc.strerror})") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: configuration must be a JSON object")
    return doc


def _known(doc: dict, allowed, what: str):
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise InvalidInputError(f"unknown {what} configuration keys: {unknown}")


def toy_config(doc: dict) -> ToyConfig:
    names = {f.name for f in fields(ToyConfig)}
    doc = {k: v for k, v in doc.items() if k != "experiment"}
    _known(doc, names, "toy-rbf")
    if "x_range" in doc:
        doc["x_range"] = tuple(doc["x_range"])
    return ToyConfig(**doc)


def grow_config(doc: dict) -> tuple[str, str, GrowthConfig]:
    """Split a flat grow configuration into model path, data path and GrowthConfig."""
    doc = {k: v for k, v in doc.items() if k != "experiment"}
    names = {f.name for f in fields(GrowthConfig)} - {"parametric"}
    _known(doc, names | set(OPTIMIZER_KEYS) | {"model", "data"}, "grow")
    for key in ("model", "data"):
        if key not in doc:
            raise InvalidInputError(f"grow configuration needs a {key!r} path")
    opt = {OPTIMIZER_KEYS[k]: doc.pop(k) for k in list(doc) if k in OPTIMIZER_KEYS}
    model, data = doc.pop("model"), doc.pop("data")
    seed = doc.get("seed", 0)
    return model, data, GrowthConfig(parametric=OptimizerConfig(seed=seed, **opt), **doc)


def _write_run(out: Path, net, trace, summary: dict):
    write_text(out / "loss_curve.csv", curve_to_csv(trace.rows))
    save_model(net, out / "model.json")
    write_text(out / "summary.json", dumps_json(summary))


def run_toy_rbf(cfg: ToyConfig, out_dir) -> dict:
    """Run the toy growth experiment and write curve, model and summary files."""
    result = run_toy(cfg)
    summary = result.summary()
    _write_run(Path(out_dir), result.network, result.trace, summary)
    return summary


def run_grow(doc: dict, out_dir) -> dict:
    model_path, data_path, cfg = grow_config(doc)
    net = load_model(model_path)
    data = load_dataset(data_path)
    grown, trace = grow(net, data, cfg)
    summary = {
        "experiment": "grow",
        "final_loss": loss(grown, data),
        "final_neuron_count": grown.neuron_count,
        "trace": trace.to_dict(),
    }
    _write_run(Path(out_dir), grown, trace, summary)
    return summary


def run_gains(model_path, data_path, c: float) -> dict:
    """Per-neuron spectra and gains of a saved model on a saved dataset."""
    net = load_model(model_path)
    data = load_dataset(data_path)
    if data.d != net.input_dim:
        raise InvalidInputError(f"dataset has {data.d} features, model expects {net.input_dim}")
    reports = split_reports(net, data, c)
    return {"c": c, "loss": loss(net, data), "neurons": [r.to_dict() for r in reports]}
