"""Command-line pipeline: synth/train/infer/eval plus the built-in
reference fixture battery and a gate-catalog export.

Configuration comes from an optional YAML file with nested sections
(data, model, encoding, train, output); command-line flags override
file values. Unknown config keys are rejected. Exit codes: 0 success,
1 runtime failure, 2 usage or config error, 3 fixture failure.
All file outputs are written atomically (temp file + rename).
"""

from __future__ import annotations

import csv
import functools
import json
import math
import re
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import jets, metrics, model, verify as verify_mod
from .gates import gate_catalog
from .jets import atomic_write, load_events, save_events, synth_jets
from .model import QaeTopology, TrainConfig

_SYNTH_KINDS = ("qcd-like", "two-prong", "three-prong")

_CONFIG_SCHEMA = {
    "data": {"path": str, "format": str, "limit": int, "synth": {"kind": str, "n": int, "seed": int}},
    "model": {"latent": int, "trash": int, "layers": int},
    "encoding": {"mode": str, "f": float},
    "train": {
        "learning_rate": float,
        "epochs": int,
        "batch_size": int,
        "seed": int,
        "gradient_method": str,
        "fd_step": float,
        "optimizer": str,
        "validation_fraction": float,
        "shots": (int, str),
    },
    "output": {"model": str, "loss": str, "scores": str, "report": str},
}


def _check_keys(doc, schema, prefix=""):
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise click.UsageError(f"config section {prefix or '<root>'} must be a mapping")
    for key, value in doc.items():
        if key not in schema:
            raise click.UsageError(f"unknown config key: {prefix}{key}")
        allowed = schema[key]
        if isinstance(allowed, dict):
            _check_keys(value, allowed, prefix=f"{prefix}{key}.")
        else:
            kinds = allowed if isinstance(allowed, tuple) else (allowed,)
            if value is not None and not isinstance(value, kinds) and not (float in kinds and isinstance(value, int)):
                names = "/".join(k.__name__ for k in kinds)
                raise click.UsageError(f"config key {prefix}{key} must be {names}, got {type(value).__name__}")
    return doc


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise click.UsageError(f"config file not found: {path}")
    try:
        with open(p, encoding="utf-8") as handle:
            doc = yaml.safe_load(handle)
    except yaml.YAMLError as exc:
        raise click.UsageError(f"config file {path} is not valid YAML: {exc}")
    return _check_keys(doc or {}, _CONFIG_SCHEMA)


def _section(config: dict, name: str) -> dict:
    return config.get(name) or {}


def _pick(flag, config_value, default):
    if flag is not None:
        return flag
    if config_value is not None:
        return config_value
    return default


def _parse_shots(value):
    if value is None or value == "exact":
        return None
    try:
        shots = int(value)
    except (TypeError, ValueError):
        raise click.UsageError(f"--shots must be an integer or 'exact', got {value!r}")
    if shots < 1:
        raise click.UsageError("--shots must be positive")
    return shots


def _runtime_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except click.exceptions.Exit:
            raise
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _resolve_events(config: dict, data_flag, limit_flag):
    data_cfg = _section(config, "data")
    limit = _pick(limit_flag, data_cfg.get("limit"), None)
    path = _pick(data_flag, data_cfg.get("path"), None)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise click.UsageError(f"data file not found: {path}")
        result = load_events(p, fmt=data_cfg.get("format"), limit=limit)
        for row_no, reason in result.rejected[:10]:
            click.echo(f"warning: skipped row {row_no}: {reason}", err=True)
        if len(result.rejected) > 10:
            click.echo(f"warning: {len(result.rejected) - 10} further rows skipped", err=True)
        if not result.events:
            raise click.ClickException(f"no usable events in {path}")
        return result.events
    synth_cfg = data_cfg.get("synth")
    if synth_cfg:
        missing = {"kind", "n"} - set(synth_cfg)
        if missing:
            raise click.UsageError(f"data.synth needs keys kind and n (missing {sorted(missing)})")
        events = synth_jets(str(synth_cfg["kind"]), int(synth_cfg["n"]), int(synth_cfg.get("seed", 0)))
        return events[:limit] if limit is not None else events
    raise click.UsageError("no input data: pass --data or set data.path / data.synth in the config")


def _write_loss_csv(path, history) -> None:
    with atomic_write(path) as handle:
        handle.write("epoch,train_cost,val_cost\n")
        for epoch, tc, vc in history:
            handle.write(f"{int(epoch)},{repr(float(tc))},{repr(float(vc))}\n")


def _write_scores_csv(path, records) -> None:
    with atomic_write(path) as handle:
        handle.write("event_id,fidelity,anomaly_score,label\n")
        for r in records:
            handle.write(f"{r.event_id},{repr(r.fidelity)},{repr(r.anomaly_score)},{r.label}\n")


@click.group()
def main():
    """Qutrit autoencoder pipeline for jet anomaly detection."""


@main.command()
@click.option("--config", "config_path", type=str, default=None, help="YAML config file.")
@click.option("--data", "data_path", type=str, default=None, help="Training events (CSV or JSONL).")
@click.option("--model", "model_path", type=str, default=None, help="Output model JSON path.")
@click.option("--out", "out_path", type=str, default=None, help="Output loss-history CSV path.")
@click.option("--mode", type=click.Choice(["A", "B"], case_sensitive=False), default=None, help="Feature mode.")
@click.option("--scale-f", type=float, default=None, help="Angle scale factor.")
@click.option("--seed", type=int, default=None)
@click.option("--epochs", type=int, default=None)
@click.option("--batch", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--grad", type=click.Choice(["fd", "shift"]), default=None)
@click.option("--shots", type=str, default=None, help="Sampled readout count, or 'exact'.")
@click.option("--limit", type=int, default=None, help="Use only the first N events.")
@_runtime_errors
def train(config_path, data_path, model_path, out_path, mode, scale_f, seed, epochs, batch, lr, grad, shots, limit):
    """Train the autoencoder and write the model plus its loss history."""
    config = _load_config(config_path)
    train_cfg = _section(config, "train")
    enc_cfg = _section(config, "encoding")
    model_cfg = _section(config, "model")
    out_cfg = _section(config, "output")

    topology = QaeTopology(
        latent=int(model_cfg.get("latent", 1)),
        trash=int(model_cfg.get("trash", 3)),
        layers=int(model_cfg.get("layers", 1)),
    )
    try:
        tc = TrainConfig(
            learning_rate=float(_pick(lr, train_cfg.get("learning_rate"), 0.01)),
            epochs=int(_pick(epochs, train_cfg.get("epochs"), 30)),
            batch_size=int(_pick(batch, train_cfg.get("batch_size"), 64)),
            seed=int(_pick(seed, train_cfg.get("seed"), 0)),
            gradient_method=_pick(grad, train_cfg.get("gradient_method"), "shift"),
            fd_step=float(train_cfg.get("fd_step", 1e-5)),
            optimizer=train_cfg.get("optimizer", "adam"),
            mode=_pick(mode, enc_cfg.get("mode"), "A"),
            f=float(_pick(scale_f, enc_cfg.get("f"), math.pi)),
            validation_fraction=float(train_cfg.get("validation_fraction", 0.15)),
            shots=_parse_shots(_pick(shots, train_cfg.get("shots"), None)),
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))

    events = _resolve_events(config, data_path, limit)
    result = model.train(tc, events, topology)
    if result.message:
        click.echo(result.message, err=True)

    model_out = Path(_pick(model_path, out_cfg.get("model"), "model.json"))
    loss_out = Path(_pick(out_path, out_cfg.get("loss"), "loss.csv"))
    model.save_model(model_out, result.params, topology, tc, result.loss_history)
    _write_loss_csv(loss_out, result.loss_history)
    first, last = result.loss_history[0], result.loss_history[-1]
    click.echo(
        f"trained on {len(events)} events for {last[0]} epochs: "
        f"cost {first[1]:.6f} -> {last[1]:.6f} (best epoch {result.best_epoch})"
    )
    click.echo(f"model: {model_out}")
    click.echo(f"loss history: {loss_out}")


@main.command()
@click.option("--config", "config_path", type=str, default=None, help="YAML config file.")
@click.option("--model", "model_path", type=str, default=None, help="Trained model JSON.")
@click.option("--data", "data_path", type=str, default=None, help="Events to score (CSV or JSONL).")
@click.option("--out", "out_path", type=str, default=None, help="Output scores CSV path.")
@click.option("--mode", type=click.Choice(["A", "B"], case_sensitive=False), default=None, help="Must match the model file if given.")
@click.option("--scale-f", type=float, default=None, help="Must match the model file if given.")
@click.option("--seed", type=int, default=None, help="Sampling seed (with --shots).")
@click.option("--shots", type=str, default=None, help="Sampled readout count, or 'exact'.")
@click.option("--limit", type=int, default=None)
@_runtime_errors
def infer(config_path, model_path, data_path, out_path, mode, scale_f, seed, shots, limit):
    """Score events with a trained model."""
    config = _load_config(config_path)
    out_cfg = _section(config, "output")
    mp = _pick(model_path, out_cfg.get("model"), None)
    if mp is None:
        raise click.UsageError("no model file: pass --model or set output.model in the config")
    if not Path(mp).is_file():
        raise click.UsageError(f"model file not found: {mp}")
    loaded = model.load_model(mp)

    if mode is not None and mode.upper() != loaded.mode:
        raise click.UsageError(f"--mode {mode.upper()} does not match the model file (mode {loaded.mode})")
    if scale_f is not None and abs(scale_f - loaded.f) > 1e-9:
        raise click.UsageError(f"--scale-f {scale_f} does not match the model file (f {loaded.f})")

    events = _resolve_events(config, data_path, limit)
    n_shots = _parse_shots(shots)
    if n_shots is None:
        records = model.infer(loaded.params, loaded.topology, events, loaded.mode, loaded.f)
    else:
        rng = np.random.default_rng(0 if seed is None else seed)
        arr = model.encode_events(events, loaded.topology, loaded.mode, loaded.f)
        records = []
        for i, (row, ev) in enumerate(zip(arr, events)):
            fid = model.fidelity(loaded.topology, list(row), loaded.params, engine="circuit", shots=n_shots, rng=rng)
            records.append(model.FidelityRecord(event_id=i, fidelity=fid, anomaly_score=1.0 - fid, label=ev.label))

    scores_out = Path(_pick(out_path, out_cfg.get("scores"), "scores.csv"))
    _write_scores_csv(scores_out, records)
    click.echo(f"scored {len(records)} events -> {scores_out}")


def _safe_label(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", label)


@main.command()
@click.option("--config", "config_path", type=str, default=None, help="YAML config file.")
@click.option("--data", "data_path", type=str, default=None, help="Scores CSV from `infer`.")
@click.option("--out", "out_path", type=str, default=None, help="Output report path.")
@_runtime_errors
def eval(config_path, data_path, out_path):
    """Per-class AUC against the background label, plus ROC and
    fidelity-histogram CSVs next to the report."""
    config = _load_config(config_path)
    out_cfg = _section(config, "output")
    data_cfg = _section(config, "data")
    path = _pick(data_path, data_cfg.get("path"), None)
    if path is None:
        raise click.UsageError("no scores file: pass --data or set data.path in the config")
    if not Path(path).is_file():
        raise click.UsageError(f"scores file not found: {path}")

    records = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        needed = {"event_id", "fidelity", "anomaly_score", "label"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise click.ClickException(f"scores file {path} must have columns {sorted(needed)}")
        for row in reader:
            records.append(
                model.FidelityRecord(
                    event_id=int(row["event_id"]),
                    fidelity=float(row["fidelity"]),
                    anomaly_score=float(row["anomaly_score"]),
                    label=row["label"],
                )
            )
    if not records:
        raise click.ClickException(f"scores file {path} is empty")

    by_label: dict[str, list[model.FidelityRecord]] = {}
    for r in records:
        by_label.setdefault(r.label, []).append(r)
    if jets.BACKGROUND_LABEL not in by_label:
        raise click.ClickException(f"scores file has no '{jets.BACKGROUND_LABEL}' rows; labels found: {sorted(by_label)}")
    signal_labels = sorted(l for l in by_label if l != jets.BACKGROUND_LABEL)
    if not signal_labels:
        raise click.ClickException("scores file has only background rows; need at least one signal class")

    bg_scores = [r.anomaly_score for r in by_label[jets.BACKGROUND_LABEL]]
    report_path = Path(_pick(out_path, out_cfg.get("report"), "eval.txt"))
    out_dir = report_path.parent

    lines = ["class            events  auc_vs_background"]
    lines.append(f"{jets.BACKGROUND_LABEL:<16} {len(bg_scores):>6}  (reference)")
    for label in signal_labels:
        sig_scores = [r.anomaly_score for r in by_label[label]]
        value = metrics.auc(bg_scores, sig_scores)
        lines.append(f"{label:<16} {len(sig_scores):>6}  {value:.6f}")
        curve = metrics.roc(bg_scores, sig_scores)
        metrics.roc_to_csv(curve, out_dir / f"roc_{_safe_label(label)}.csv")
    for label, hist in sorted(metrics.fidelity_histogram(records).items()):
        metrics.histogram_to_csv(hist, out_dir / f"hist_{_safe_label(label)}.csv")

    text = "\n".join(lines) + "\n"
    with atomic_write(report_path) as handle:
        handle.write(text)
    click.echo(text, nl=False)
    click.echo(f"report: {report_path}")


@main.command()
@click.option("--fault-eps", type=float, default=0.0, help="Inject a perturbation into the y-rotation generator (exercises the failure path).")
@click.option("--seed", type=int, default=0, help="Seed for the injected perturbation.")
@click.pass_context
def verify(ctx, fault_eps, seed):
    """Run the built-in reference fixtures; exit 3 if any fail."""
    results = verify_mod.run_fixtures(mutate_sigma2=fault_eps, seed=seed)
    click.echo(verify_mod.report(results))
    if not all(r.passed for r in results):
        ctx.exit(3)


@main.command(name="gates-dump")
@click.option("--out", "out_path", type=str, default=None, help="Output JSON path (stdout if omitted).")
@_runtime_errors
def gates_dump(out_path):
    """Export every named gate matrix as JSON."""
    doc = {}
    for name, gate in gate_catalog().items():
        doc[name] = {
            "arity": gate.arity,
            "generator": gate.generator,
            "params": list(gate.params),
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in gate.matrix],
        }
    text = json.dumps(doc, indent=2) + "\n"
    if out_path is None:
        click.echo(text, nl=False)
    else:
        with atomic_write(Path(out_path)) as handle:
            handle.write(text)
        click.echo(f"gate catalog: {out_path}")


@main.command()
@click.option("--kind", type=click.Choice(_SYNTH_KINDS), required=True)
@click.option("--n", "count", type=int, required=True, help="Number of jets.")
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=str, required=True, help="Output path (.csv or .jsonl).")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default=None, help="Override the extension-based format choice.")
@_runtime_errors
def synth(kind, count, seed, out_path, fmt):
    """Generate a seeded synthetic jet dataset."""
    if count < 1:
        raise click.UsageError("--n must be positive")
    events = synth_jets(kind, count, seed)
    save_events(events, Path(out_path), fmt=fmt)
    click.echo(f"wrote {len(events)} {kind} jets -> {out_path}")


if __name__ == "__main__":
    main()
