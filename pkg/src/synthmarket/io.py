"""File formats: checkpoints, loss history, scenarios and validation outputs.

Floats are written with ``repr`` so values round-trip exactly and identical
runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .data import DataError, read_table
from .dsde import DsdeSpec
from .sampler import ScenarioSet
from .score_net import ScoreParams
from .validate import ValidationReport

__all__ = [
    "checkpoint_id",
    "save_checkpoint",
    "load_checkpoint",
    "write_loss_csv",
    "read_loss_csv",
    "write_scenarios",
    "read_scenarios",
    "write_report",
    "write_qq_csv",
    "write_histogram_csv",
]

CHECKPOINT_FORMAT = "synthmarket-checkpoint/1"


def _f(x: float) -> str:
    return repr(float(x))


def checkpoint_id(theta: ScoreParams) -> str:
    """Short content hash of the parameters."""
    blob = json.dumps(theta.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_checkpoint(path, theta: ScoreParams, spec: DsdeSpec, extra: dict[str, Any] | None = None) -> str:
    body = {"format": CHECKPOINT_FORMAT, "id": checkpoint_id(theta), **theta.to_dict(),
            "dsde": spec.to_dict(), **(extra or {})}
    Path(path).write_text(json.dumps(body, indent=1) + "\n", encoding="utf-8")
    return body["id"]


def load_checkpoint(path) -> tuple[ScoreParams, DsdeSpec, dict[str, Any]]:
    """Returns (parameters, SDE spec, full JSON body)."""
    try:
        body = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataError(f"checkpoint not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed checkpoint {path}: {exc}") from exc
    if body.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    try:
        theta = ScoreParams.from_dict(body)
        spec = DsdeSpec.from_dict(body["dsde"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"invalid checkpoint {path}: {exc}") from exc
    return theta, spec, body


def write_loss_csv(path, history: Sequence[float]) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "loss"])
        for e, v in enumerate(history):
            w.writerow([e, _f(v)])


def read_loss_csv(path) -> list[float]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return [float(r[1]) for r in rows[1:]]


def write_scenarios(scen: ScenarioSet, csv_path, json_path, tickers: Sequence[str] | None = None) -> None:
    names = list(tickers or scen.tickers) or [f"x{k}" for k in range(scen.samples.shape[1])]
    with Path(csv_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", *names])
        for k, row in enumerate(scen.samples):
            w.writerow([k, *(_f(v) for v in row)])
    Path(json_path).write_text(json.dumps(scen.provenance(), indent=1) + "\n", encoding="utf-8")


def read_scenarios(path) -> tuple[tuple[str, ...], np.ndarray]:
    """Tickers and the (m, d) sample matrix of a scenario CSV.

    Scenarios are model output, so unlike historical returns they are not
    required to exceed -1; only finiteness is checked.
    """
    tickers, _, x = read_table(path, ",", "scenarios")
    return tuple(tickers), x


def write_report(path, report: ValidationReport) -> None:
    Path(path).write_text(report.to_json() + "\n", encoding="utf-8")


def write_qq_csv(path, report: ValidationReport) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["prob", "hist_q", "synth_q"])
        for p, (a, b) in zip(report.qq_probs, report.qq_pairs):
            w.writerow([_f(p), _f(a), _f(b)])


def write_histogram_csv(path, report: ValidationReport) -> None:
    e = np.asarray(report.bin_edges)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_lo", "bin_hi", "hist_count", "synth_count"])
        for lo, hi, a, b in zip(e[:-1], e[1:], report.hist_counts, report.synth_counts):
            w.writerow([_f(lo), _f(hi), int(a), int(b)])
