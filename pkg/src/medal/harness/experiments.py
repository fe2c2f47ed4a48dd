"""The three experiment protocols.

* :func:`run_al_experiment` - the active-learning loop: accuracy against the
  number of labels for one sampler and one master seed.
* :func:`eval_distance_functions` - summed predictive entropy of a MedAL
  batch for every (metric, hidden layer) pair.
* :func:`compare_init` - test accuracy after fitting a random versus a
  farthest-first initial training set.

All randomness flows from ``config.master_seed`` through
:func:`medal.core.derive_seed`, so each output is a pure function of the
configuration and the data.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..core import (METRICS, SAMPLERS, DatasetState, IterationRecord, RunConfig,
                    derive_seed, transfer)
from ..errors import ConfigError, PoolTooSmall
from ..learner import (ModelState, accuracy, extract_features, init_weights,
                       predict_proba, train_to_fit)
from ..metrics import entropies
from ..sampler import farthest_first_init, medal_select, random_select, uncertainty_select
from .data import Dataset, oversample_minority, split

log = logging.getLogger(__name__)

# stream identifiers for derive_seed
SPLIT_STREAM, INIT_STREAM, RESET_STREAM, ACQUIRE_STREAM = 1, 2, 3, 4


@dataclass
class CurveTable:
    """Iteration records keyed by ``(sampler_id, seed)``."""

    series: dict = field(default_factory=dict)

    HEADER = ("run_id", "sampler", "seed", "iteration", "labeled_count", "test_accuracy")

    def add(self, sampler_id: str, seed: int, records):
        self.series[(sampler_id, int(seed))] = list(records)

    def merge(self, other: "CurveTable") -> "CurveTable":
        self.series.update(other.series)
        return self

    def records(self, sampler_id: str, seed: int) -> list[IterationRecord]:
        return self.series[(sampler_id, int(seed))]

    def rows(self):
        for (sampler_id, seed), records in sorted(self.series.items()):
            for r in records:
                yield (f"{sampler_id}-seed{seed}", sampler_id, seed, r.iteration,
                       r.labeled_count, repr(float(r.test_accuracy)))


@dataclass(frozen=True)
class AuditRow:
    """One entropy-filtered candidate of one MedAL acquisition."""

    iteration: int
    example_id: int
    entropy: float
    mean_distance: float
    selected_rank: int  # -1 when the candidate was not acquired


AUDIT_HEADER = ("run_id", "iteration", "example_id", "entropy", "mean_distance", "selected_rank")


@dataclass
class RunResult:
    curve: CurveTable
    audit: list[AuditRow]
    initial_ids: tuple[int, ...]
    fitted: list[bool]


def _hidden_sizes(config, dataset):
    return (dataset.dimension, *config.hidden_layers, dataset.num_classes)


def build_initial_set(config: RunConfig, dataset: Dataset, state: DatasetState, seed: int,
                      strategy: str | None = None, descriptors=None) -> list[int]:
    strategy = strategy or config.init_strategy
    pool = list(state.oracle_ids)
    size = config.initial_train_size
    if size > len(pool):
        raise ConfigError(f"initial_train_size {size} exceeds the pool of {len(pool)}")
    init_seed = derive_seed(seed, INIT_STREAM)
    if strategy == "random":
        return random_select(pool, size, init_seed)
    if descriptors is None:
        descriptors = dataset.descriptors(config.orb_threshold, config.orb_max_keypoints)
    # pool ids are in shuffled order; rank ties by id on a sorted view
    pool = sorted(pool)
    return farthest_first_init(pool, descriptors[pool], size, config.metric_id, init_seed)


def fit_model(config: RunConfig, dataset: Dataset, state: DatasetState, seed: int,
              iteration: int) -> tuple[ModelState, bool]:
    """Reset to fresh weights and train until the training set is fit."""
    model = init_weights(_hidden_sizes(config, dataset), derive_seed(seed, RESET_STREAM, iteration))
    train = list(state.train_ids)
    y = state.labels(train)
    if config.oversample_minority:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            train = oversample_minority(train, y)
        y = state.labels(train)
    return train_to_fit(model, dataset.features[train], y, config.adam, config.max_epochs)


def heldout_accuracy(model: ModelState, dataset: Dataset, state: DatasetState) -> float:
    test = list(state.test_ids)
    if not test:
        return float("nan")
    return accuracy(model, dataset.features[test], state.labels(test))


def run_al_experiment(config: RunConfig, dataset: Dataset, sampler_id: str,
                      state: DatasetState | None = None, descriptors=None) -> RunResult:
    """One active-learning run for ``config.master_seed``.

    Records accuracy after training on the initial set (iteration 0) and
    after every acquisition, until the pool is empty or
    ``config.max_iterations`` acquisitions have been made.
    """
    if sampler_id not in SAMPLERS:
        raise ConfigError(f"unknown sampler {sampler_id!r}; expected one of {SAMPLERS}")
    seed = config.master_seed
    if state is None:
        state = split(dataset, (1 - config.test_fraction, config.test_fraction),
                      derive_seed(seed, SPLIT_STREAM))
    if not state.train_ids:
        state = transfer(state, build_initial_set(config, dataset, state, seed,
                                                  descriptors=descriptors))
    initial = state.train_ids

    records, audit, fitted = [], [], []
    iteration = 0
    while True:
        t0 = time.perf_counter()
        model, ok = fit_model(config, dataset, state, seed, iteration)
        fitted.append(ok)
        acc = heldout_accuracy(model, dataset, state)
        done = not state.oracle_ids or (
            config.max_iterations is not None and iteration >= config.max_iterations)
        if not done:
            picked = _acquire(config, dataset, state, model, sampler_id, seed, iteration, audit)
            next_state = transfer(state, picked)
        ms = int(round((time.perf_counter() - t0) * 1000))
        records.append(IterationRecord(iteration, len(state.train_ids), acc, sampler_id, ms))
        log.info("%s seed=%d it=%d labeled=%d acc=%.4f fit=%s %dms", sampler_id, seed,
                 iteration, len(state.train_ids), acc, ok, ms)
        if done:
            break
        state = next_state
        iteration += 1

    curve = CurveTable()
    curve.add(sampler_id, seed, records)
    return RunResult(curve, audit, initial, fitted)


def _acquire(config, dataset, state, model, sampler_id, seed, iteration, audit):
    pool = list(state.oracle_ids)
    k = min(config.imgs_per_iteration, len(pool))
    if sampler_id == "random":
        return random_select(pool, k, derive_seed(seed, ACQUIRE_STREAM, iteration))
    pool = sorted(pool)
    probs = predict_proba(model, dataset.features[pool])
    if sampler_id == "uncertainty":
        return uncertainty_select(pool, probs, k)

    layer = config.feature_layer
    pool_feats = extract_features(model, dataset.features[pool], layer)
    train_feats = extract_features(model, dataset.features[list(state.train_ids)], layer)
    result = medal_select(pool, pool_feats, probs, train_feats, config.metric_id,
                          config.entropy_filter_size, k, greedy_refilter=config.greedy_refilter)
    rank = {i: r for r, i in enumerate(result.selected_ids)}
    for i in sorted(result.scores):
        e, s = result.scores[i]
        audit.append(AuditRow(iteration, i, e, s, rank.get(i, -1)))
    return list(result.selected_ids)


def audit_rows(run_id: str, audit):
    for a in audit:
        yield (run_id, a.iteration, a.example_id, repr(a.entropy), repr(a.mean_distance),
               a.selected_rank)


def check_audit(audit) -> list[str]:
    """Violations of the MedAL acquisition invariant (empty list when clean).

    Each acquired id must be a filtered candidate, and at its rank it must
    have the largest mean distance among filtered ids not yet acquired
    (ties going to the lower id).
    """
    problems = []
    by_iter: dict[int, list[AuditRow]] = {}
    for a in audit:
        by_iter.setdefault(a.iteration, []).append(a)
    for it, rows in sorted(by_iter.items()):
        chosen = sorted((a for a in rows if a.selected_rank >= 0), key=lambda a: a.selected_rank)
        if [a.selected_rank for a in chosen] != list(range(len(chosen))):
            problems.append(f"iteration {it}: selection ranks are not 0..{len(chosen) - 1}")
        taken = set()
        for a in chosen:
            rivals = [b for b in rows if b.example_id not in taken and b.example_id != a.example_id]
            for b in rivals:
                if (b.mean_distance, -b.example_id) > (a.mean_distance, -a.example_id):
                    problems.append(f"iteration {it}: id {a.example_id} (rank {a.selected_rank}) "
                                    f"beaten by unselected id {b.example_id}")
                    break
            taken.add(a.example_id)
    return problems


# -- distance x layer evaluation ------------------------------------------

@dataclass(frozen=True)
class EntropyRow:
    metric_id: str
    layer: int
    entropy_sum: float
    selected_ids: tuple[int, ...]
    winner: bool = False


ENTROPY_HEADER = ("metric", "layer", "entropy_sum", "winner")


def eval_distance_functions(config: RunConfig, dataset: Dataset,
                            state: DatasetState | None = None, metrics=METRICS,
                            descriptors=None) -> list[EntropyRow]:
    """Summed predictive entropy of a MedAL batch per (metric, layer) pair.

    One model is fit on the initial training set; then for every metric and
    hidden layer ``eval_sample_size`` oracle examples are chosen by
    :func:`medal_select` and their entropies summed. The row with the
    largest sum is flagged as the winner (first row on ties).
    """
    seed = config.master_seed
    if state is None:
        state = split(dataset, (1 - config.test_fraction, config.test_fraction),
                      derive_seed(seed, SPLIT_STREAM))
    if not state.train_ids:
        state = transfer(state, build_initial_set(config, dataset, state, seed,
                                                  descriptors=descriptors))
    n = config.eval_sample_size
    pool = sorted(state.oracle_ids)
    if len(pool) < n:
        raise PoolTooSmall(f"oracle pool has {len(pool)} examples; need at least {n}")
    model, _ = fit_model(config, dataset, state, seed, 0)
    probs = predict_proba(model, dataset.features[pool])
    ent = dict(zip(pool, entropies(probs)))
    train = list(state.train_ids)

    rows = []
    for metric_id in metrics:
        for layer in range(model.n_hidden):
            pool_feats = extract_features(model, dataset.features[pool], layer)
            train_feats = extract_features(model, dataset.features[train], layer)
            res = medal_select(pool, pool_feats, probs, train_feats, metric_id,
                               config.entropy_filter_size, n)
            total = math.fsum(ent[i] for i in res.selected_ids)
            rows.append(EntropyRow(metric_id, layer, total, res.selected_ids))
    best = max(range(len(rows)), key=lambda j: (rows[j].entropy_sum, -j))
    return [EntropyRow(r.metric_id, r.layer, r.entropy_sum, r.selected_ids, j == best)
            for j, r in enumerate(rows)]


def entropy_rows(rows):
    for r in rows:
        yield (r.metric_id, r.layer, repr(r.entropy_sum), int(r.winner))


# -- initialisation comparison --------------------------------------------

@dataclass(frozen=True)
class InitRow:
    seed: int
    random_accuracy: float
    farthest_first_accuracy: float


INIT_HEADER = ("seed", "random_accuracy", "farthest_first_accuracy")


def compare_init(config: RunConfig, dataset: Dataset, n_seeds: int,
                 descriptors=None) -> tuple[list[InitRow], InitRow]:
    """Per-seed test accuracy of the two initial-set strategies, plus the mean.

    Seeds are ``master_seed, master_seed + 1, ...``. For each seed both
    initial sets are drawn from the same split and trained from the same
    reset weights, so the strategy is the only difference.
    """
    if n_seeds < 1:
        raise ConfigError("n_seeds must be >= 1")
    if descriptors is None:
        descriptors = dataset.descriptors(config.orb_threshold, config.orb_max_keypoints)
    rows = []
    for i in range(n_seeds):
        seed = config.master_seed + i
        base = split(dataset, (1 - config.test_fraction, config.test_fraction),
                     derive_seed(seed, SPLIT_STREAM))
        accs = {}
        for strategy in ("random", "farthest_first"):
            ids = build_initial_set(config, dataset, base, seed, strategy, descriptors)
            state = transfer(base, ids)
            model, _ = fit_model(config, dataset, state, seed, 0)
            accs[strategy] = heldout_accuracy(model, dataset, state)
        rows.append(InitRow(seed, accs["random"], accs["farthest_first"]))
    mean = InitRow(-1, float(np.mean([r.random_accuracy for r in rows])),
                   float(np.mean([r.farthest_first_accuracy for r in rows])))
    return rows, mean


def init_rows(rows, mean):
    for r in rows:
        yield (r.seed, repr(r.random_accuracy), repr(r.farthest_first_accuracy))
    yield ("mean", repr(mean.random_accuracy), repr(mean.farthest_first_accuracy))
