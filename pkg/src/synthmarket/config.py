"""Run configuration: one JSON document covering data, model, training,
sampling and validation settings.

Every key is optional and falls back to the documented default, but keys that
are not in the schema are rejected. ``describe_schema()`` renders the table
used by ``--help``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .dsde import DsdeSpec
from .objective import ObjectiveConfig
from .sampler import PathConfig
from .trainer import TrainConfig

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "describe_schema", "load_config"]


class ConfigError(ValueError):
    """Invalid or unreadable run configuration."""


# section -> key -> (default, description)
SCHEMA: dict[str, dict[str, tuple[Any, str]]] = {
    "data": {
        "path": (None, "input CSV: first column dates, then one column per ticker"),
        "format": ("prices", "'prices' (converted to simple returns) or 'returns'"),
        "delimiter": (",", "CSV field delimiter"),
        "log_returns": (False, "use log returns instead of simple returns (prices only)"),
        "window_start": (0, "first return row of the training window"),
        "window_length": (None, "rows in the training window (null = all remaining rows)"),
    },
    "dsde": {
        "kind": ("VP", "SDE family: VP, SubVP or VE"),
        "a": (0.0, "rate exponent (VP/SubVP, >= 0) or base (VE, > 1)"),
        "b": (0.1, "scale b_i: one number for all assets or one per asset"),
    },
    "objective": {
        "lambda0": (1.0, "constant weight lambda0 >= 0"),
        "gh_order": (4, "Gauss-Hermite order D (1..64)"),
        "simpson_subintervals": (8, "even number S of Simpson subintervals on [0, 1]"),
        "residual_mode": ("consistent", "VE residual: 'consistent' (0) or 'paper_literal_ve' (x_i)"),
        "target": ("expansion", "'expansion' (data point in the residual) or 'denoising'"),
    },
    "train": {
        "epochs": (2000, "number of passes over the training window"),
        "batch_size": (32, "mini-batch size (<= window rows)"),
        "learning_rate": (1e-3, "Adam step size"),
        "adam_beta1": (0.9, "Adam first-moment decay"),
        "adam_beta2": (0.999, "Adam second-moment decay"),
        "adam_eps": (1e-8, "Adam denominator offset"),
        "seed": (0, "seed for initialization and shuffling"),
        "shuffle": (True, "reshuffle rows every epoch"),
        "hidden": (16, "hidden neurons h"),
        "checkpoint_every": (100, "write an intermediate checkpoint every k epochs (0 = never)"),
    },
    "paths": {
        "steps": (256, "Euler-Maruyama steps K on [0, 1]"),
        "scheme": ("euler_maruyama", "forward encoding: 'euler_maruyama' or 'exact_transition'"),
        "seed": (0, "seed for scenario index, forward and reverse streams"),
    },
    "generate": {
        "m": (1024, "number of synthetic scenarios"),
    },
    "validate": {
        "permutations": (1000, "permutations B for the CvM p-value (>= 99)"),
        "seed": (0, "seed for the permutation streams"),
        "bins": (30, "histogram bins for the portfolio returns"),
        "qq_levels": (99, "number L of Q-Q probability levels k/(L+1)"),
        "weights": (None, "portfolio weights g (null = equal weights)"),
    },
    "output": {
        "dir": ("run", "directory for all outputs"),
        "checkpoint": ("checkpoint.json", "final checkpoint file name"),
        "loss": ("loss.csv", "loss history file name (epoch,loss)"),
        "training_data": ("training_returns.csv", "copy of the training window returns"),
        "scenarios": ("scenarios.csv", "synthetic scenarios file name"),
        "provenance": ("scenarios.json", "scenario provenance file name"),
        "report": ("report.json", "validation report file name"),
        "qq": ("qq.csv", "Q-Q pairs file name (prob,hist_q,synth_q)"),
        "histogram": ("histogram.csv", "histogram file name (bin_lo,bin_hi,hist_count,synth_count)"),
    },
}


def describe_schema() -> str:
    lines = ["config keys (JSON object of sections; all keys optional):"]
    for section, keys in SCHEMA.items():
        lines.append(f"  {section}:")
        for key, (default, text) in keys.items():
            lines.append(f"    {key:<22} {text} [default: {json.dumps(default)}]")
    return "\n".join(lines)


@dataclass
class RunConfig:
    sections: dict[str, dict[str, Any]]

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.sections[section]

    def dsde(self, d: int) -> DsdeSpec:
        return DsdeSpec.from_dict(self["dsde"], d)

    def objective(self, threads: int = 1) -> ObjectiveConfig:
        o = self["objective"]
        return ObjectiveConfig(
            lambda0=float(o["lambda0"]),
            gh_order=int(o["gh_order"]),
            simpson_S=int(o["simpson_subintervals"]),
            residual_mode=o["residual_mode"],
            target=o["target"],
            threads=threads,
        )

    def train(self) -> TrainConfig:
        return TrainConfig(**self["train"])

    def paths(self) -> PathConfig:
        p = self["paths"]
        return PathConfig(steps=int(p["steps"]), scheme=p["scheme"], seed=int(p["seed"]))

    def out(self, key: str) -> Path:
        return Path(self["output"]["dir"]) / self["output"][key]

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return {s: dict(v) for s, v in self.sections.items()}

    def validate(self, threads: int = 1) -> None:
        """Build every component once so invalid values fail early."""
        d = 1
        b = self["dsde"]["b"]
        if isinstance(b, list):
            d = len(b)
        self.dsde(d)
        self.objective(threads)
        self.train()
        self.paths()
        v = self["validate"]
        if int(v["permutations"]) < 99:
            raise ValueError("validate.permutations must be >= 99")
        if int(v["bins"]) < 1 or int(v["qq_levels"]) < 1:
            raise ValueError("validate.bins and validate.qq_levels must be >= 1")
        if int(self["generate"]["m"]) < 0:
            raise ValueError("generate.m must be >= 0")
        names = [self["output"][k] for k in SCHEMA["output"] if k != "dir"]
        if len(set(names)) != len(names):
            raise ValueError("output file names must be distinct")


def from_dict(obj: Any) -> RunConfig:
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    sections: dict[str, dict[str, Any]] = {}
    for section, keys in SCHEMA.items():
        given = obj.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section {section!r} must be an object")
        bad = set(given) - set(keys)
        if bad:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(bad)}")
        sections[section] = {k: given.get(k, default) for k, (default, _) in keys.items()}
    return RunConfig(sections)


def load_config(path=None, overrides: dict[str, dict[str, Any]] | None = None,
                threads: int = 1) -> RunConfig:
    """Read, merge overrides into, and check a run configuration."""
    obj: dict[str, Any] = {}
    if path is not None:
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    cfg = from_dict(obj)
    for section, values in (overrides or {}).items():
        for key, value in values.items():
            if value is not None:
                cfg.sections[section][key] = value
    try:
        cfg.validate(threads)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
