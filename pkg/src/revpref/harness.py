"""Experiment driver: instances, train/evaluate pipelines, sweeps, model files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from revpref import all_pairs, polytope, separable
from revpref.oracle import feedback, make_observation, optimal_bundle
from revpref.types import (
    ExampleDistribution,
    LinearValuation,
    SeparableConcaveValuation,
    Valuation,
    bundle_value,
    sample_example,
)

# second-derivative bound for generated separable instances
DEFAULT_Q = 1.0
VALUE_RTOL = 1e-9

SWEEP_COLUMNS = [
    "m",
    "trials",
    "exact_err_mean",
    "exact_err_std",
    "eps_err_mean",
    "eps_err_std",
    "notfound_rate",
    "seconds",
]


class DistConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    p_min: float = Field(1.0, gt=0)
    p_max: float = 2.0
    B_min: float = Field(0.5, ge=0)
    B_max: float = 4.0

    @model_validator(mode="after")
    def _ordered(self) -> DistConfig:
        if self.p_max < self.p_min or self.B_max < self.B_min:
            raise ValueError("need p_min <= p_max and B_min <= B_max")
        return self


class TrialConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learner: Literal["all_pairs", "separable", "polytope"]
    n: int = Field(ge=1)
    delta: float = Field(gt=0, lt=1)
    epsilon: float = Field(0.1, gt=0)
    C: float = Field(1.0, gt=0)
    k: int | None = Field(None, ge=1)
    dist: DistConfig = DistConfig()
    m: int | None = Field(None, ge=0)
    test_size: int = Field(1000, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _polytope_delta(self) -> TrialConfig:
        if self.learner == "polytope" and self.delta > 0.5:
            raise ValueError("the polytope learner needs delta <= 1/2")
        return self

    def distribution(self) -> ExampleDistribution:
        d = self.dist
        return ExampleDistribution(self.n, d.p_min, d.p_max, d.B_min, d.B_max)

    def grid_size(self) -> int:
        if self.k is not None:
            return self.k
        return separable.choose_k(DEFAULT_Q, self.epsilon, self.distribution().max_budget_ratio)

    def train_size(self) -> int:
        if self.m is not None:
            return self.m
        if self.learner == "all_pairs":
            return all_pairs.required_samples(self.n, self.delta, self.C)
        if self.learner == "separable":
            return separable.required_samples_separable(self.n, self.grid_size(), self.delta, self.C)
        return 0


def load_config(source: str | Path | dict) -> TrialConfig:
    """Parse a config file or dict; REVPREF_SEED overrides the seed."""
    if isinstance(source, dict):
        data = dict(source)
    else:
        data = json.loads(Path(source).read_text())
    env_seed = os.environ.get("REVPREF_SEED")
    if env_seed:
        data["seed"] = int(env_seed)
    return TrialConfig.model_validate(data)


@dataclass
class TrialResult:
    learner: str
    m: int
    exact_err: float
    eps_err: float
    notfound_rate: float = 0.0
    eps_err_found: float | None = None
    k: int | None = None
    iterations: int | None = None
    constraints: int | None = None
    hit_cap: bool | None = None
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def trial_streams(seed: int) -> dict[str, np.random.Generator]:
    """Independent generators for instance, training, learner coins and testing."""
    names = ("instance", "train", "learner", "test")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(s) for name, s in zip(names, children)}


def generate_instance(
    config: TrialConfig, rng: np.random.Generator, Q: float = DEFAULT_Q
) -> tuple[Valuation, ExampleDistribution]:
    """Draw a hidden valuation for the configured learner.

    Linear values are uniform on [0, 1]^n; separable goods draw
    b_i ~ U[0, Q] then a_i ~ U[b_i, 1].  Polytope and separable instances
    are rescaled so the full bundle is worth at most 1.
    """
    n = config.n
    dist = config.distribution()
    if config.learner == "separable":
        b = rng.uniform(0.0, Q, size=n)
        a = rng.uniform(b, 1.0)
        v = SeparableConcaveValuation(a, b)
        total = bundle_value(v, np.ones(n))
        return (v.scaled(1 / total) if total > 1 else v), dist
    values = rng.uniform(0.0, 1.0, size=n)
    if config.learner == "polytope":
        values = values / max(1.0, values.sum())
        return LinearValuation(values, normalized=True), dist
    return LinearValuation(values), dist


@dataclass
class EvalStats:
    exact_err: float
    eps_err: float
    notfound_rate: float
    eps_err_found: float | None


Predictor = Callable[[np.ndarray, float], "np.ndarray | tuple[np.ndarray, bool]"]


def evaluate(
    predictor: Predictor,
    truth: Valuation,
    dist: ExampleDistribution,
    test_size: int,
    epsilon: float,
    rng: np.random.Generator,
) -> EvalStats:
    """Error rates of ``predictor`` on fresh examples.

    Exact error: predicted bundle's true value differs from the optimum
    (relative 1e-9).  Epsilon error: it falls more than epsilon short.
    Predictors may return ``(bundle, found)``; unfound predictions are
    counted separately and excluded from ``eps_err_found``.
    """
    if test_size < 1:
        raise ValueError("test_size must be positive")
    exact_miss = eps_miss = notfound = found_miss = 0
    for _ in range(test_size):
        ex = sample_example(dist, rng)
        out = predictor(ex.prices, ex.budget)
        bundle, found = out if isinstance(out, tuple) else (out, True)
        best = bundle_value(truth, optimal_bundle(truth, ex.prices, ex.budget))
        got = bundle_value(truth, bundle)
        exact_miss += not math.isclose(got, best, rel_tol=VALUE_RTOL, abs_tol=1e-12)
        short = got < best - epsilon
        eps_miss += short
        if found:
            found_miss += short
        else:
            notfound += 1
    found_total = test_size - notfound
    return EvalStats(
        exact_miss / test_size,
        eps_miss / test_size,
        notfound / test_size,
        found_miss / found_total if found_total else None,
    )


def observations(truth: Valuation, dist: ExampleDistribution, m: int, rng: np.random.Generator):
    for _ in range(m):
        yield make_observation(truth, sample_example(dist, rng))


TrainedModel = all_pairs.AllPairsLearner | separable.DerivativeGrid | polytope.Polytope


def train_learner(
    config: TrialConfig,
    truth: Valuation,
    dist: ExampleDistribution,
    streams: dict[str, np.random.Generator],
    on_checkpoint: Callable[[TrainedModel, int], None] | None = None,
    checkpoint_every: int = 100,
) -> tuple[TrainedModel, dict]:
    """Train the configured learner; returns the model and bookkeeping fields."""
    rng = streams["train"]
    if config.learner == "all_pairs":
        learner = all_pairs.AllPairsLearner(config.n)
        m = config.train_size()
        for t, obs in enumerate(observations(truth, dist, m, rng), 1):
            learner.update(obs)
            if on_checkpoint and (t % checkpoint_every == 0 or t == m):
                on_checkpoint(learner, t)
        learner.bounds.closure()
        return learner, {"m": m}
    if config.learner == "separable":
        k = config.grid_size()
        grid = separable.DerivativeGrid(config.n, k)
        m = config.train_size()
        for t, obs in enumerate(observations(truth, dist, m, rng), 1):
            grid.update(obs)
            if on_checkpoint and (t % checkpoint_every == 0 or t == m):
                on_checkpoint(grid, t)
        grid.bounds.closure()
        return grid, {"m": m, "k": k}

    def oracle(p, B, x):
        return feedback(truth, p, B, x, config.epsilon, dist.M)

    result = polytope.train(
        oracle,
        dist,
        config.epsilon,
        config.delta,
        rng,
        C=config.C,
        on_iteration=(lambda K, rec: on_checkpoint(K, rec.iteration)) if on_checkpoint else None,
    )
    info = {
        "m": result.examples,
        "iterations": result.iterations,
        "constraints": len(result.polytope.halfspaces),
        "hit_cap": result.hit_cap,
        "training": result,
    }
    return result.polytope, info


def predictor_for(model: TrainedModel, rng: np.random.Generator) -> Predictor:
    if isinstance(model, all_pairs.AllPairsLearner):
        return model.predict
    if isinstance(model, separable.DerivativeGrid):
        return lambda p, B: model.predict_with_status(p, B, rng)
    return lambda p, B: polytope.predict(model, p, B, rng)


def run_trial(
    config: TrialConfig,
    on_checkpoint: Callable[[TrainedModel, int], None] | None = None,
    checkpoint_every: int = 100,
) -> TrialResult:
    start = time.perf_counter()
    streams = trial_streams(config.seed)
    truth, dist = generate_instance(config, streams["instance"])
    model, info = train_learner(config, truth, dist, streams, on_checkpoint, checkpoint_every)
    stats = evaluate(
        predictor_for(model, streams["learner"]),
        truth,
        dist,
        config.test_size,
        config.epsilon,
        streams["test"],
    )
    return TrialResult(
        learner=config.learner,
        m=info["m"],
        exact_err=stats.exact_err,
        eps_err=stats.eps_err,
        notfound_rate=stats.notfound_rate,
        eps_err_found=stats.eps_err_found,
        k=info.get("k"),
        iterations=info.get("iterations"),
        constraints=info.get("constraints"),
        hit_cap=info.get("hit_cap"),
        seconds=time.perf_counter() - start,
    )


def sweep(
    config: TrialConfig,
    m_values: Sequence[int],
    trials: int = 30,
    timing: bool = True,
) -> list[dict]:
    """Mean/std error over ``trials`` seeds (seed, seed + 1, ...) at each m."""
    rows = []
    for m in m_values:
        results = [
            run_trial(config.model_copy(update={"m": int(m), "seed": config.seed + t}))
            for t in range(trials)
        ]
        exact = np.array([r.exact_err for r in results])
        eps = np.array([r.eps_err for r in results])
        rows.append(
            {
                "m": int(m),
                "trials": trials,
                "exact_err_mean": float(exact.mean()),
                "exact_err_std": float(exact.std()),
                "eps_err_mean": float(eps.mean()),
                "eps_err_std": float(eps.std()),
                "notfound_rate": float(np.mean([r.notfound_rate for r in results])),
                "seconds": float(sum(r.seconds for r in results)) if timing else 0.0,
            }
        )
    return rows


def sweep_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: (f"{row[key]:.6f}" if isinstance(row[key], float) else row[key]) for key in SWEEP_COLUMNS})
    return buf.getvalue()


def model_to_dict(model: TrainedModel) -> dict:
    return model.to_dict()


def model_from_dict(data: dict) -> TrainedModel:
    kind = data.get("learner")
    if kind == "all_pairs":
        return all_pairs.AllPairsLearner.from_dict(data)
    if kind == "separable":
        return separable.DerivativeGrid.from_dict(data)
    if kind == "polytope":
        return polytope.Polytope.from_dict(data)
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1))


def load_model(path: str | Path) -> TrainedModel:
    return model_from_dict(json.loads(Path(path).read_text()))
