"""Experiment configuration: YAML schema, defaults, presets and validation."""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..kernels import GaussianKernel, LaplacianKernel, PolynomialKernel
from ..npole import HyperParams, StepSchedule
from ..process import (
    GroundTruthFn,
    HawkesModel,
    benchmark_model,
    exp_model,
    groundtruth_from_description,
)

KINDS = (
    "simulate",
    "fit",
    "evaluate",
    "table1",
    "prop1-check",
    "regret",
    "mismatch",
    "marked",
    "spatial",
    "stability",
)


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "kind": "fit",
    "seed": 0,
    "trials": 10,
    "T": 10000.0,
    "threads": 1,
    "output": "runs/out",
    # model: {name: benchmark} | {name: exponential, mu, alpha, beta}
    #        | {name: custom, mu, F: [[{kind, params}, ...], ...]} | {name: from-file}
    "model": {"name": "benchmark"},
    "events": None,
    "sort": False,
    "estimator": "npole",
    "hyper": {
        "delta": 0.05,
        "z": 3.0,
        "zeta": 1e-8,
        "omega": None,
        "mu_min": 0.01,
        "mu_init": None,
        "step": "experimental",
        "step_a": None,
        "step_b": None,
        "kernel": {"kernel": "gaussian", "bandwidth": 0.2},
        "budget": None,
        "projection": "square",
        "snap": None,
        "clip_points": None,
        "square_init": 0.01,
        "snapshot_stride": 1000,
    },
    "table1": {
        "deltas": [0.01, 0.05, 0.1, 0.5, 1.0],
        "log10_zetas": [-8, -6, -4, -2, 0],
        "step": "sensitivity",
    },
    "prop1": {"instances": 50, "T": 200.0, "deltas": [0.05, 0.1, 0.5], "windows": [1.0, 3.0, 10.0], "max_dim": 3},
    "regret": {"seeds": 5},
    "mismatch": {"pair": [1, 4], "beta": 2.0},
    "marked": {"mark_bandwidth": 1000.0, "mark_value": 1.0, "mode": "joint", "T": 1000.0},
    "spatial": {"shape": [2, 2], "spacing": [1.0, 1.0], "mu": 0.05, "T": 5000.0, "radius": None},
    "stability": {"T": 1000.0, "index": None, "shift": 1e-6},
    "baseline": {"beta": 2.0},
}

PRESETS = {
    "desk": {"T": 10000.0, "trials": 10},
    "paper": {"T": 100000.0, "trials": 100},
}


def deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (over or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def defaults_yaml() -> str:
    return yaml.safe_dump(DEFAULTS, sort_keys=False)


@dataclass
class ExperimentConfig:
    raw: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @property
    def kind(self) -> str:
        return self.raw["kind"]

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def seeds(self) -> list[int]:
        return [int(self.raw["seed"]) + n for n in range(int(self.raw["trials"]))]

    def validate(self) -> "ExperimentConfig":
        r = self.raw
        if r["kind"] not in KINDS:
            raise ConfigError(f"unknown experiment kind {r['kind']!r}")
        if r.get("seed") is None:
            raise ConfigError("seed must be given explicitly")
        if int(r["trials"]) < 1:
            raise ConfigError("trials must be positive")
        if not float(r["T"]) > 0:
            raise ConfigError("T must be positive")
        if int(r["threads"]) < 1:
            raise ConfigError("threads must be positive")
        if r.get("events") is not None and not os.path.exists(r["events"]):
            raise ConfigError(f"events file not found: {r['events']}")
        if r["model"].get("name") == "from-file" and r.get("events") is None:
            raise ConfigError("model 'from-file' needs an events file")
        if r["kind"] in ("fit", "evaluate") and r.get("events") is None and r["model"].get("name") == "from-file":
            raise ConfigError("fit needs an events file or a model to simulate")
        if r["estimator"] not in ("npole", "exp"):
            raise ConfigError("estimator must be 'npole' or 'exp'")
        try:
            self.hyper()
            if r["model"].get("name") != "from-file":
                self.model()
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def hyper(self, **override) -> HyperParams:
        return hyper_from_dict(deep_merge(self.raw["hyper"], override))

    def model(self) -> HawkesModel:
        return model_from_dict(self.raw["model"])

    def fingerprint_dict(self) -> dict:
        """Everything that determines the results (no thread count, no output path)."""
        return {k: v for k, v in self.raw.items() if k not in ("threads", "output")}


def _kernel(d: dict):
    kind = d.get("kernel", "gaussian")
    if kind == "gaussian":
        return GaussianKernel(float(d.get("bandwidth", 0.2)))
    if kind == "laplacian":
        return LaplacianKernel(float(d.get("bandwidth", 0.2)))
    if kind == "polynomial":
        return PolynomialKernel(int(d["degree"]), float(d.get("alpha", 1.0)), float(d.get("beta", 1.0)))
    raise ValueError(f"unknown kernel {kind!r}")


def hyper_from_dict(h: dict) -> HyperParams:
    h = dict(h)
    step = h.pop("step", "experimental")
    a, b = h.pop("step_a", None), h.pop("step_b", None)
    delta = float(h.get("delta", 0.05))
    if a is not None and b is not None:
        sched = StepSchedule(float(a), float(b))
    elif step == "experimental":
        sched = StepSchedule.experimental(delta)
    elif step == "sensitivity":
        sched = StepSchedule.sensitivity()
    elif step == "regret":
        z = np.min(np.asarray(h.get("zeta", 1e-8), float))
        sched = StepSchedule.regret(float(z), float(b) if b is not None else 10.0)
    else:
        raise ValueError(f"unknown step schedule {step!r}")
    kernel = _kernel(h.pop("kernel", {"kernel": "gaussian", "bandwidth": 0.2}))
    for key in ("zeta", "omega"):
        if isinstance(h.get(key), list):
            h[key] = np.asarray(h[key], float)
    return HyperParams(kernel=kernel, step=sched, **h)


def model_from_dict(m: dict) -> HawkesModel:
    name = m.get("name", "benchmark")
    if name == "benchmark":
        return benchmark_model()
    if name == "exponential":
        return exp_model(m["mu"], m["alpha"], m["beta"])
    if name == "custom":
        F = [[groundtruth_from_description(d) for d in row] for row in m["F"]]
        return HawkesModel(np.asarray(m["mu"], float), F)
    raise ValueError(f"unknown model {name!r}")


def model_to_dict(model: HawkesModel) -> dict:
    if not all(isinstance(f, GroundTruthFn) for row in model.F for f in row):
        raise ValueError("only closed-form models serialize")
    return {"name": "custom", "mu": model.mu.tolist(), "F": [[f.describe() for f in row] for row in model.F]}


def load_config(path: str | None = None, preset: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    raw = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw = deep_merge(raw, data)
    if preset is not None:
        raw = deep_merge(raw, PRESETS[preset])
    raw = deep_merge(raw, overrides or {})
    return ExperimentConfig(raw)
