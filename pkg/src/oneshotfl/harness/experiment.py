"""End-to-end one-shot experiment: local training, baselines, ensembles, distillation."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .._util import SCHEMA_VERSION, derive_seed
from ..distill import distill, distill_objective, sample_proxy, serialize_distilled, soft_labels
from ..feddata import FederatedDataset, load_csv, pool_test, pool_train, split, synth_federated
from ..kernel import KernelParams, median_heuristic
from ..localmodel import LocalModel, TrainingConfig, train_local, train_svm
from ..metrics import (
    DeviceScorecard,
    SummaryMetrics,
    evaluate_per_device,
    evaluate_scores,
    fraction_of_ideal,
    mean_device_relative_gain,
    relative_gain,
    summarize,
)
from ..selection import EmptyEnsembleError, Ensemble, SelectionPolicy, aggregate, comm_cost, eligible
from .config import ConfigError, ExperimentConfig

log = logging.getLogger(__name__)


@dataclass
class MethodResult:
    """One evaluated method. Random policies carry one entry per trial in
    ``trial_summaries``/``cards``/``members``; ``summary`` is their average."""

    name: str
    policy: str
    k: int | None = None
    summary: SummaryMetrics | None = None
    trial_summaries: list[SummaryMetrics] = field(default_factory=list)
    cards: list[list[DeviceScorecard]] = field(default_factory=list)
    members: list[list[str]] = field(default_factory=list)
    comm: dict | None = None
    relative_gain: float | None = None
    fraction_of_ideal: float | None = None
    mean_device_relative_gain: float | None = None
    best_k: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "policy": self.policy,
            "k": self.k,
            "summary": None if self.summary is None else self.summary.to_dict(),
            "trial_summaries": [s.to_dict() for s in self.trial_summaries],
            "cards": [[{"device_id": c.device_id, "auc": c.auc, "n_test": c.n_test} for c in trial] for trial in self.cards],
            "members": self.members,
            "comm": self.comm,
            "relative_gain": self.relative_gain,
            "fraction_of_ideal": self.fraction_of_ideal,
            "mean_device_relative_gain": self.mean_device_relative_gain,
            "best_k": self.best_k,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> MethodResult:
        return cls(
            name=d["name"],
            policy=d["policy"],
            k=d["k"],
            summary=None if d["summary"] is None else SummaryMetrics.from_dict(d["summary"]),
            trial_summaries=[SummaryMetrics.from_dict(s) for s in d["trial_summaries"]],
            cards=[[DeviceScorecard(**c) for c in trial] for trial in d["cards"]],
            members=d["members"],
            comm=d["comm"],
            relative_gain=d["relative_gain"],
            fraction_of_ideal=d["fraction_of_ideal"],
            mean_device_relative_gain=d["mean_device_relative_gain"],
            best_k=d["best_k"],
            error=d["error"],
        )


@dataclass
class DistillPoint:
    l: int
    proxy_points: int
    teacher: SummaryMetrics
    distilled: SummaryMetrics
    trial_summaries: list[SummaryMetrics]
    objective: float
    teacher_down_bytes: int
    distilled_down_bytes: float

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "proxy_points": self.proxy_points,
            "teacher": self.teacher.to_dict(),
            "distilled": self.distilled.to_dict(),
            "trial_summaries": [s.to_dict() for s in self.trial_summaries],
            "objective": self.objective,
            "teacher_down_bytes": self.teacher_down_bytes,
            "distilled_down_bytes": self.distilled_down_bytes,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DistillPoint:
        return cls(
            l=d["l"],
            proxy_points=d["proxy_points"],
            teacher=SummaryMetrics.from_dict(d["teacher"]),
            distilled=SummaryMetrics.from_dict(d["distilled"]),
            trial_summaries=[SummaryMetrics.from_dict(s) for s in d["trial_summaries"]],
            objective=d["objective"],
            teacher_down_bytes=d["teacher_down_bytes"],
            distilled_down_bytes=d["distilled_down_bytes"],
        )


@dataclass
class ExperimentReport:
    config: dict
    dataset: dict
    kernel_gamma: float
    methods: list[MethodResult]
    best_method: str | None
    distill_curve: list[DistillPoint]
    solver: dict
    ideal_pool: dict
    timings: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def method(self, name: str) -> MethodResult:
        for m in self.methods:
            if m.name == name:
                return m
        raise KeyError(name)

    @property
    def ensemble_methods(self) -> list[MethodResult]:
        return [m for m in self.methods if m.policy not in ("local", "ideal")]

    def to_dict(self, include_timings: bool = True) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "dataset": self.dataset,
            "kernel_gamma": self.kernel_gamma,
            "methods": [m.to_dict() for m in self.methods],
            "best_method": self.best_method,
            "distill_curve": [p.to_dict() for p in self.distill_curve],
            "solver": self.solver,
            "ideal_pool": self.ideal_pool,
            "timings": self.timings if include_timings else {},
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentReport:
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema_version {d.get('schema_version')!r}")
        return cls(
            config=d["config"],
            dataset=d["dataset"],
            kernel_gamma=d["kernel_gamma"],
            methods=[MethodResult.from_dict(m) for m in d["methods"]],
            best_method=d["best_method"],
            distill_curve=[DistillPoint.from_dict(p) for p in d["distill_curve"]],
            solver=d["solver"],
            ideal_pool=d["ideal_pool"],
            timings=d["timings"],
            schema_version=d["schema_version"],
        )


def average_summaries(summaries: list[SummaryMetrics]) -> SummaryMetrics:
    """Arithmetic mean of means and percentiles; device counts from the first trial."""
    first = summaries[0]
    return SummaryMetrics(
        mean_auc=float(np.mean([s.mean_auc for s in summaries])),
        evaluated_devices=first.evaluated_devices,
        skipped_devices=first.skipped_devices,
        percentiles={p: float(np.mean([s.percentiles[p] for s in summaries])) for p in first.percentiles},
    )


def load_dataset(config: ExperimentConfig) -> FederatedDataset:
    if config.source == "csv":
        path = Path(config.csv_path)
        if not path.is_file():
            raise ConfigError(f"dataset file not found: {path}")
        return load_csv(path)
    return synth_federated(
        config.synth_m,
        config.synth_size_range,
        config.synth_d,
        config.synth_heterogeneity,
        seed=derive_seed(config.seed, "synth"),
    )


def _train_one(args) -> LocalModel:
    device, training = args
    return train_local(device, training)


def train_all(dataset: FederatedDataset, training: TrainingConfig, workers: int = 1) -> list[LocalModel]:
    """Local models in device order; worker count does not change results."""
    jobs = [(dev, training) for dev in dataset.devices]
    if workers <= 1:
        return [_train_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_train_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


class _TestScores:
    """Member decision values on the pooled test set, computed once per model."""

    def __init__(self, dataset: FederatedDataset):
        self.dataset = dataset
        self.X = pool_test(dataset).X
        sizes = [len(dev.test) for dev in dataset.devices]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        self._cache: dict[str, np.ndarray] = {}

    def model_scores(self, model) -> np.ndarray:
        return model.decision_function(self.X) if len(self.X) else np.empty(0)

    def member(self, model: LocalModel) -> np.ndarray:
        if model.device_id not in self._cache:
            self._cache[model.device_id] = self.model_scores(model)
        return self._cache[model.device_id]

    def ensemble(self, ensemble: Ensemble) -> np.ndarray:
        return aggregate((self.member(m) for m in ensemble.members), ensemble.aggregation)

    def cards(self, scores: np.ndarray) -> list[DeviceScorecard]:
        by_device = {
            dev.device_id: scores[self.offsets[i] : self.offsets[i + 1]] for i, dev in enumerate(self.dataset.devices)
        }
        return evaluate_scores(by_device, self.dataset)


def _summarize_or_none(cards) -> SummaryMetrics | None:
    try:
        return summarize(cards)
    except ValueError:
        return None


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    timings: dict[str, float] = {}
    clock = time.perf_counter()

    def lap(label: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        timings[label] = now - clock
        clock = now

    seed = config.seed
    raw = load_dataset(config)
    dataset = split(raw, config.split_ratios, seed=derive_seed(seed, "split"))
    pooled = pool_train(dataset)
    if config.kernel_gamma is None:
        kernel = median_heuristic(pooled.X, seed=derive_seed(seed, "gamma"))
    else:
        kernel = KernelParams(config.kernel_gamma)
    lap("prepare")

    training = TrainingConfig(
        min_samples=config.min_samples,
        lam=config.svm_lambda,
        kernel=kernel,
        tol=config.tol,
        max_epochs=config.max_epochs,
        seed=derive_seed(seed, "local"),
    )
    locals_ = train_all(dataset, training, config.workers)
    lap("local_training")

    methods: list[MethodResult] = []
    local_cards = evaluate_per_device({m.device_id: m for m in locals_}, dataset)
    local = MethodResult("local", "local", summary=summarize(local_cards), cards=[local_cards])
    local.trial_summaries = [local.summary]
    methods.append(local)

    ideal_data = pool_train(dataset, cap=config.ideal_pool_cap, seed=derive_seed(seed, "ideal-cap"))
    ideal_model = train_svm(
        ideal_data.X,
        ideal_data.y,
        lam=config.svm_lambda,
        kernel=kernel,
        tol=config.tol,
        max_epochs=config.max_epochs,
        seed=derive_seed(seed, "ideal"),
    )
    test_scores = _TestScores(dataset)
    ideal_cards = test_scores.cards(test_scores.model_scores(ideal_model))
    ideal = MethodResult("ideal", "ideal", summary=summarize(ideal_cards), cards=[ideal_cards])
    ideal.trial_summaries = [ideal.summary]
    methods.append(ideal)
    lap("baselines")

    pool = eligible(locals_, config.min_samples)
    ensembles: dict[str, Ensemble] = {}
    for policy in config.policies:
        grid = [None] if policy == "Full" else list(config.k_grid)
        for k in grid:
            name = "Full" if k is None else f"{policy}@{k}"
            result = MethodResult(name, policy, k)
            trials = config.random_trials if policy == "Random" else 1
            costs = []
            try:
                for t in range(trials):
                    sel = SelectionPolicy(
                        policy,
                        k,
                        cv_baseline_auc=config.cv_baseline_auc,
                        data_baseline_n=config.effective_data_baseline_n,
                        seed=derive_seed(seed, "random", k, t),
                    )
                    ens = Ensemble(sel.select(pool).members, config.aggregation)
                    if t == 0:
                        ensembles[name] = ens
                    cards = test_scores.cards(test_scores.ensemble(ens))
                    result.cards.append(cards)
                    result.trial_summaries.append(summarize(cards))
                    result.members.append(ens.device_ids)
                    costs.append(comm_cost(ens))
            except (EmptyEnsembleError, ValueError) as exc:
                log.warning("%s: %s", name, exc)
                result = MethodResult(name, policy, k, error=str(exc))
                methods.append(result)
                continue
            result.summary = average_summaries(result.trial_summaries)
            result.comm = {
                "up_bytes": float(np.mean([c.up_bytes for c in costs])) if trials > 1 else costs[0].up_bytes,
                "down_bytes": float(np.mean([c.down_bytes for c in costs])) if trials > 1 else costs[0].down_bytes,
                "up_models": float(np.mean([c.up_models for c in costs])) if trials > 1 else costs[0].up_models,
                "down_models": float(np.mean([c.down_models for c in costs])) if trials > 1 else costs[0].down_models,
            }
            methods.append(result)
    lap("ensembles")

    for m in methods:
        if m.summary is None:
            continue
        m.relative_gain = relative_gain(m.summary, local.summary)
        m.fraction_of_ideal = fraction_of_ideal(m.summary, ideal.summary)
        gains = [mean_device_relative_gain(cards, local_cards) for cards in m.cards]
        gains = [g for g in gains if g is not None]
        m.mean_device_relative_gain = float(np.mean(gains)) if gains else None

    scored = [m for m in methods if m.policy not in ("local", "ideal") and m.summary is not None]
    for policy in config.policies:
        in_policy = [m for m in scored if m.policy == policy]
        if in_policy:
            max(in_policy, key=lambda m: m.summary.mean_auc).best_k = True
    best = max(scored, key=lambda m: m.summary.mean_auc) if scored else None

    curve: list[DistillPoint] = []
    if best is not None:
        teacher = ensembles[best.name]
        teacher_down = comm_cost(teacher).down_bytes
        for l in config.proxy_sizes:
            summaries, objectives, sizes, down = [], [], [], []
            for t in range(config.distill_trials):
                proxy = sample_proxy(dataset, l, seed=derive_seed(seed, "proxy", l, t))
                targets = soft_labels(teacher, proxy)
                student = distill(proxy, targets, kernel, config.ridge)
                summaries.append(summarize(test_scores.cards(test_scores.model_scores(student))))
                objectives.append(distill_objective(student, proxy, targets))
                sizes.append(len(proxy))
                down.append(len(serialize_distilled(student)))
            curve.append(
                DistillPoint(
                    l=l,
                    proxy_points=sizes[0],
                    teacher=best.trial_summaries[0],
                    distilled=average_summaries(summaries),
                    trial_summaries=summaries,
                    objective=float(np.mean(objectives)),
                    teacher_down_bytes=teacher_down,
                    distilled_down_bytes=float(np.mean(down)),
                )
            )
    lap("distillation")

    svms = [m.body for m in locals_ if m.is_svm]
    solver = {
        "local_svm": len(svms),
        "local_constant": len(locals_) - len(svms),
        "local_converged": sum(b.converged for b in svms),
        "local_max_gap": max((b.gap for b in svms), default=None),
        "local_mean_epochs": float(np.mean([b.epochs for b in svms])) if svms else None,
        "ideal_converged": ideal_model.converged,
        "ideal_gap": ideal_model.gap,
        "ideal_epochs": ideal_model.epochs,
    }
    return ExperimentReport(
        config=config.to_dict(),
        dataset={
            "name": dataset.name,
            "m": dataset.m,
            "d": dataset.d,
            "n_samples": dataset.n_samples,
            "eligible_devices": len(pool),
        },
        kernel_gamma=kernel.gamma,
        methods=methods,
        best_method=None if best is None else best.name,
        distill_curve=curve,
        solver=solver,
        ideal_pool={"size": len(ideal_data), "uncapped_size": len(pooled), "capped": len(ideal_data) < len(pooled)},
        timings=timings,
    )
