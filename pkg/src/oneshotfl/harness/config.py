"""Experiment configuration and its ``key = value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from ..selection import AGGREGATIONS, POLICIES


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    # dataset source: "synthetic" or "csv"
    source: str = "synthetic"
    csv_path: str = ""
    synth_m: int = 40
    synth_size_range: tuple[int, int] = (20, 120)
    synth_d: int = 10
    synth_heterogeneity: float = 0.7
    split_ratios: tuple[float, float, float] = (0.5, 0.4, 0.1)
    min_samples: int = 30
    svm_lambda: float | None = None  # None: 1/n per device
    kernel_gamma: float | None = None  # None: median heuristic
    tol: float = 1e-6
    max_epochs: int = 1000
    policies: tuple[str, ...] = POLICIES
    k_grid: tuple[int, ...] = (1, 10, 50, 100)
    cv_baseline_auc: float = 0.5
    data_baseline_n: int | None = None  # None: min_samples
    random_trials: int = 5
    aggregation: str = "mean-decision"
    proxy_sizes: tuple[int, ...] = (10, 25, 50, 100, 200)
    distill_trials: int = 5
    ridge: float = 1e-8
    seed: int = 0
    ideal_pool_cap: int | None = None
    workers: int = 1
    record_timings: bool = False

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.source not in ("synthetic", "csv"):
            raise ConfigError(f"source must be 'synthetic' or 'csv', got {self.source!r}")
        if self.source == "csv" and not self.csv_path:
            raise ConfigError("source = csv requires csv_path")
        lo, hi = self.synth_size_range
        if self.synth_m < 1 or lo < 1 or hi < lo or self.synth_d < 2:
            raise ConfigError("invalid synthetic dataset parameters")
        if not 0.0 <= self.synth_heterogeneity <= 1.0:
            raise ConfigError("synth_heterogeneity must lie in [0, 1]")
        if len(self.split_ratios) != 3 or min(self.split_ratios) <= 0 or abs(sum(self.split_ratios) - 1) > 1e-9:
            raise ConfigError(f"split_ratios must be three positive values summing to 1, got {self.split_ratios}")
        if self.min_samples < 1:
            raise ConfigError("min_samples must be >= 1")
        if self.svm_lambda is not None and not self.svm_lambda > 0:
            raise ConfigError("svm_lambda must be positive")
        if self.kernel_gamma is not None and not self.kernel_gamma > 0:
            raise ConfigError("kernel_gamma must be positive")
        if not self.tol > 0 or self.max_epochs < 1:
            raise ConfigError("tol must be positive and max_epochs >= 1")
        if not self.policies or any(p not in POLICIES for p in self.policies):
            raise ConfigError(f"policies must be a nonempty subset of {', '.join(POLICIES)}")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigError("duplicate policy")
        if not self.k_grid or min(self.k_grid) < 1:
            raise ConfigError("k_grid must be nonempty with k >= 1")
        if not 0.0 <= self.cv_baseline_auc <= 1.0:
            raise ConfigError("cv_baseline_auc must lie in [0, 1]")
        if self.data_baseline_n is not None and self.data_baseline_n < 1:
            raise ConfigError("data_baseline_n must be >= 1")
        if self.random_trials < 1 or self.distill_trials < 1:
            raise ConfigError("random_trials and distill_trials must be >= 1")
        if self.aggregation not in AGGREGATIONS:
            raise ConfigError(f"aggregation must be one of {', '.join(AGGREGATIONS)}")
        if not self.proxy_sizes or min(self.proxy_sizes) < 1:
            raise ConfigError("proxy_sizes must be nonempty with sizes >= 1")
        if self.ridge < 0:
            raise ConfigError("ridge must be nonnegative")
        if self.ideal_pool_cap is not None and self.ideal_pool_cap < 2:
            raise ConfigError("ideal_pool_cap must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def effective_data_baseline_n(self) -> int:
        return self.min_samples if self.data_baseline_n is None else self.data_baseline_n

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name in d:
                v = d[f.name]
                kwargs[f.name] = tuple(v) if isinstance(v, list) else v
        return cls(**kwargs)


# sentinels accepted for optional fields
_AUTO = {"auto", "none", "median-heuristic", "unlimited", ""}


def _int(s: str) -> int:
    return int(s)


def _opt(parse):
    def inner(s: str):
        return None if s.lower() in _AUTO else parse(s)

    return inner


def _tuple(parse):
    def inner(s: str):
        return tuple(parse(p.strip()) for p in s.replace(";", ",").split(",") if p.strip())

    return inner


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


_PARSERS = {
    "name": str,
    "source": str,
    "csv_path": str,
    "synth_m": _int,
    "synth_size_range": _tuple(_int),
    "synth_d": _int,
    "synth_heterogeneity": float,
    "split_ratios": _tuple(float),
    "min_samples": _int,
    "svm_lambda": _opt(float),
    "kernel_gamma": _opt(float),
    "tol": float,
    "max_epochs": _int,
    "policies": _tuple(str),
    "k_grid": _tuple(_int),
    "cv_baseline_auc": float,
    "data_baseline_n": _opt(_int),
    "random_trials": _int,
    "aggregation": str,
    "proxy_sizes": _tuple(_int),
    "distill_trials": _int,
    "ridge": float,
    "seed": _int,
    "ideal_pool_cap": _opt(_int),
    "workers": _int,
    "record_timings": _bool,
}
assert set(_PARSERS) == {f.name for f in dataclasses.fields(ExperimentConfig)}


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment.

    A relative ``csv_path`` is resolved against ``base_dir`` when given.
    """
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    if base_dir is not None and values.get("csv_path"):
        p = Path(values["csv_path"])
        if not p.is_absolute():
            values["csv_path"] = str(base_dir / p)
    try:
        return ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)


def format_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ", ".join(format_value(x) for x in v)
    return str(v)


def dump_config(config: ExperimentConfig) -> str:
    return "".join(f"{f.name} = {format_value(getattr(config, f.name))}\n" for f in dataclasses.fields(config))
