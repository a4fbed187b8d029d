"""Seeded Monte Carlo studies over a grid of model and tuning settings.

Every (cell, replicate) pair is an independent task.  Its data seed is
derived from ``(master seed, cell index, replicate)``; its loading matrix
seed from ``(master seed, structure index, replicate)``, where the structure
index ignores ``n`` and the model kind, so replicate ``r`` uses the same
loading matrix across sample sizes and models.  Records are written in
``(cell, replicate, hyper setting)`` order whatever the worker count.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chi import empirical_chi
from .csvio import fmt, write_json
from .errors import ParameterError
from .htsp import htsp
from .hyperparams import adaptive_k, adaptive_kappa, pure_rows, sparsity_index
from .metrics import evaluate
from .simgen import ModelSpec, gen_loading_matrix, raw_loading, sample_dataset

RECORD_COLUMNS = [
    "n", "d", "K", "eta", "s", "model", "noise", "hyper_mode", "k", "kappa",
    "replicate", "seed", "k_rec", "s_rec", "i_rec", "tfnp", "tfpp", "loss", "millis",
]

MODEL_LABELS = {
    "linear-noise": ("linear", True),
    "linear-nonoise": ("linear", False),
    "max_linear-noise": ("max_linear", True),
    "max_linear-nonoise": ("max_linear", False),
}

# fixed settings of the reference design plus the adaptive pair
HYPER_PRESETS = {
    "fixed-0.01": {"k_frac": 0.01, "kappa": 0.1},
    "fixed-0.05": {"k_frac": 0.05, "kappa": 0.1},
    "adaptive": {"adaptive": True},
}

_SEED_DOMAIN_DATA = 0
_SEED_DOMAIN_LOADING = 1


def derive_seed(master: int, *key: int) -> int:
    """Stable 64-bit seed from a master seed and integer key path."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class HyperSetting:
    name: str
    k: int | None = None
    k_frac: float | None = None
    kappa: float | None = None
    adaptive: bool = False

    def resolve(self, n: int, d: int) -> tuple[int, float]:
        if self.adaptive:
            k = adaptive_k(n, d) if self.k is None and self.k_frac is None else self._k(n)
            kappa = adaptive_kappa(n, d) if self.kappa is None else self.kappa
        else:
            k, kappa = self._k(n), self.kappa
        if not 1 <= k <= n:
            raise ParameterError(f"setting {self.name!r} gives k={k} outside [1, {n}]")
        return k, kappa

    def _k(self, n: int) -> int:
        if self.k is not None:
            return int(self.k)
        return max(1, int(round(self.k_frac * n)))

    @classmethod
    def parse(cls, item) -> "HyperSetting":
        if isinstance(item, str):
            if item not in HYPER_PRESETS:
                raise ParameterError(f"unknown hyper preset {item!r}; known: {sorted(HYPER_PRESETS)}")
            return cls(name=item, **HYPER_PRESETS[item])
        if not isinstance(item, dict):
            raise ParameterError(f"hyper setting must be a preset name or an object, got {item!r}")
        item = dict(item)
        adaptive = bool(item.pop("adaptive", False))
        k, k_frac, kappa = item.pop("k", None), item.pop("k_frac", None), item.pop("kappa", None)
        name = item.pop("name", None)
        if item:
            raise ParameterError(f"unknown hyper setting keys {sorted(item)}")
        if k is not None and k_frac is not None:
            raise ParameterError("give at most one of k and k_frac")
        if not adaptive and (kappa is None or (k is None and k_frac is None)):
            raise ParameterError("a fixed hyper setting needs kappa and one of k, k_frac")
        if kappa is not None and not 0 < kappa < 0.5:
            raise ParameterError(f"kappa must lie in (0, 1/2), got {kappa!r}")
        if name is None:
            kpart = f"k{k}" if k is not None else (f"k{k_frac}n" if k_frac is not None else "kadapt")
            name = f"{kpart}-kappa{kappa if kappa is not None else 'adapt'}"
        return cls(name=name, k=k, k_frac=k_frac, kappa=kappa, adaptive=adaptive)


@dataclass(frozen=True)
class Cell:
    index: int
    structure: int
    n: int
    spec: ModelSpec


def _as_list(x):
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass
class StudyConfig:
    n: list[int]
    d: list[int]
    K: list[int]
    eta: list[float]
    s: list[int]
    models: list[str] = field(default_factory=lambda: list(MODEL_LABELS))
    hyper: list[HyperSetting] = field(
        default_factory=lambda: [HyperSetting.parse(p) for p in HYPER_PRESETS]
    )
    reps: int = 100
    seed: int = 0
    factor_alpha: float = 1.0
    noise_alpha: float = 2.0

    def __post_init__(self):
        if self.reps < 1:
            raise ParameterError(f"replicates must be at least 1, got {self.reps}")
        if not self.hyper:
            raise ParameterError("at least one hyper setting is required")
        for m in self.models:
            if m not in MODEL_LABELS:
                raise ParameterError(f"unknown model {m!r}; known: {sorted(MODEL_LABELS)}")
        for n in self.n:
            if n < 2:
                raise ParameterError(f"n must be at least 2, got {n}")
        # validates every combination up front
        self.cells()

    @classmethod
    def from_dict(cls, raw: dict) -> "StudyConfig":
        raw = dict(raw)
        known = {"n", "d", "K", "eta", "s", "models", "hyper", "reps", "seed",
                 "factor_alpha", "noise_alpha"}
        unknown = set(raw) - known
        if unknown:
            raise ParameterError(f"unknown config keys {sorted(unknown)}")
        missing = {"n", "d", "K", "eta", "s"} - set(raw)
        if missing:
            raise ParameterError(f"config is missing {sorted(missing)}")
        kwargs = {key: _as_list(raw[key]) for key in ("n", "d", "K", "eta", "s")}
        if "models" in raw:
            kwargs["models"] = _as_list(raw["models"])
        if "hyper" in raw:
            kwargs["hyper"] = [HyperSetting.parse(h) for h in _as_list(raw["hyper"])]
        for key in ("reps", "seed"):
            if key in raw:
                kwargs[key] = int(raw[key])
        for key in ("factor_alpha", "noise_alpha"):
            if key in raw:
                kwargs[key] = float(raw[key])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "StudyConfig":
        with Path(path).open() as fh:
            return cls.from_dict(json.load(fh))

    def cells(self) -> list[Cell]:
        structures = list(itertools.product(self.d, self.K, self.eta, self.s))
        out = []
        for n, (si, (d, K, eta, s)), model in itertools.product(
            self.n, enumerate(structures), self.models
        ):
            kind, noise = MODEL_LABELS[model]
            spec = ModelSpec(kind, noise, int(d), int(K), float(eta), int(s),
                             self.factor_alpha, self.noise_alpha)
            out.append(Cell(len(out), si, int(n), spec))
        return out


def _run_task(args):
    config, cell, rep, timing = args
    spec = cell.spec
    data_seed = derive_seed(config.seed, _SEED_DOMAIN_DATA, cell.index, rep)
    truth = gen_loading_matrix(spec, derive_seed(config.seed, _SEED_DOMAIN_LOADING, cell.structure, rep))
    X = sample_dataset(raw_loading(truth, spec.factor_alpha), spec, cell.n, data_seed)
    true_I, true_s = pure_rows(truth), sparsity_index(truth)
    rows = []
    for hs in config.hyper:
        start = time.perf_counter()
        k, kappa = hs.resolve(cell.n, spec.d)
        est = htsp(empirical_chi(X, k, data_seed), kappa)
        report = evaluate(est, truth, true_I, true_s)
        millis = (time.perf_counter() - start) * 1000.0 if timing else 0.0
        rows.append({
            "n": cell.n, "d": spec.d, "K": spec.K, "eta": spec.eta, "s": spec.s,
            "model": spec.kind, "noise": int(spec.noise), "hyper_mode": hs.name,
            "k": k, "kappa": kappa, "replicate": rep, "seed": data_seed,
            "k_rec": int(report.k_recovered), "s_rec": int(report.s_recovered),
            "i_rec": int(report.i_recovered), "tfnp": report.tfnp, "tfpp": report.tfpp,
            "loss": report.loss_inf2, "millis": round(millis, 3),
        })
    return rows


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return fmt(v)
    return str(v)


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def aggregate(config: StudyConfig, records: list[dict]) -> list[dict]:
    """Per-(cell, hyper setting) means; support/loss means over K-recovered runs."""
    groups: dict[tuple, list[dict]] = {}
    for r in records:
        key = (r["n"], r["d"], r["K"], r["eta"], r["s"], r["model"], r["noise"], r["hyper_mode"])
        groups.setdefault(key, []).append(r)
    out = []
    for key, rs in groups.items():
        n, d, K, eta, s, model, noise, mode = key
        out.append({
            "n": n, "d": d, "K": K, "eta": eta, "s": s, "model": model, "noise": bool(noise),
            "hyper_mode": mode, "replicates": len(rs),
            "k_rec": _mean([r["k_rec"] for r in rs]),
            "s_rec": _mean([r["s_rec"] for r in rs]),
            "i_rec": _mean([r["i_rec"] for r in rs]),
            "tfnp": _mean([r["tfnp"] for r in rs]),
            "tfpp": _mean([r["tfpp"] for r in rs]),
            "loss": _mean([r["loss"] for r in rs]),
            "k_mean": _mean([r["k"] for r in rs]),
            "kappa_mean": _mean([r["kappa"] for r in rs]),
            "millis": _mean([r["millis"] for r in rs]),
        })
    return out


def run_study(config: StudyConfig, out_dir, threads: int = 1, timing: bool = True) -> list[dict]:
    """Run every cell x replicate, stream ``records.csv`` and write ``summary.json``."""
    if threads < 1:
        raise ParameterError(f"threads must be at least 1, got {threads}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(config, cell, rep, timing) for cell in config.cells() for rep in range(config.reps)]
    records: list[dict] = []
    with (out_dir / "records.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        if threads == 1:
            results = map(_run_task, tasks)
            executor = None
        else:
            executor = ProcessPoolExecutor(max_workers=threads)
            results = executor.map(_run_task, tasks, chunksize=1)
        try:
            for rows in results:
                for row in rows:
                    writer.writerow([_csv_value(row[c]) for c in RECORD_COLUMNS])
                fh.flush()
                records.extend(rows)
        finally:
            if executor is not None:
                executor.shutdown(cancel_futures=True)
    summary = {
        "master_seed": config.seed,
        "replicates": config.reps,
        "records": len(records),
        "cells": aggregate(config, records),
    }
    write_json(out_dir / "summary.json", _json_safe(summary))
    return records


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
