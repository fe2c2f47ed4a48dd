"""Acquisition strategies and diversity-based initial-set construction.

Every ranking in this module breaks ties by the lower example id.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyPool, EmptyTrainingSet, KTooLarge, TargetTooLarge
from .metrics import distance_rows, entropies, mean_distance_scores, prepare


class SelectionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AcquisitionResult:
    selected_ids: tuple[int, ...]
    # id -> (entropy, mean_distance) for every candidate that survived the filter
    scores: dict = field(default_factory=dict)
    filtered_ids: tuple[int, ...] = ()


def _rank_desc(ids, values):
    """``ids`` ordered by descending value, lower id first on ties."""
    return [i for _, i in sorted(zip((-float(v) for v in values), (int(i) for i in ids)))]


def entropy_filter(ids, probs, M: int) -> list[int]:
    """Ids of the ``M`` highest-entropy candidates, in descending entropy."""
    if M <= 0:
        raise ValueError("M must be positive")
    ids = list(ids)
    if not ids:
        return []
    return _rank_desc(ids, entropies(probs))[:M]


def medal_select(ids, feats, probs, train_feats, metric_id: str, M: int, k: int,
                 greedy_refilter: bool = False) -> AcquisitionResult:
    """Entropy filter to the top ``M``, then take the ``k`` largest mean distances.

    ``feats`` and ``probs`` are row-aligned with ``ids``; ``train_feats`` are
    the feature vectors of the current training set. With
    ``greedy_refilter`` the ``k`` picks are made one at a time, each new pick
    joining the reference set and the filter being reapplied to what is left.
    """
    ids = [int(i) for i in ids]
    if not ids:
        raise EmptyPool("no candidates in the pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    train_feats = np.asarray(train_feats)
    if train_feats.ndim != 2 or len(train_feats) == 0:
        raise EmptyTrainingSet("MedAL selection needs a nonempty training set")
    feats = prepare(metric_id, feats)
    ent = entropies(probs)
    row = {i: r for r, i in enumerate(ids)}
    k_eff = min(k, len(ids))

    if greedy_refilter:
        return _greedy_select(ids, feats, ent, prepare(metric_id, train_feats), metric_id, M, k_eff, row)

    filtered = _rank_desc(ids, ent)[:M]
    s = mean_distance_scores(feats[[row[i] for i in filtered]], train_feats, metric_id)
    scores = {i: (float(ent[row[i]]), float(v)) for i, v in zip(filtered, s)}
    selected = _rank_desc(filtered, s)[:k_eff]
    if len(selected) < k_eff:
        warnings.warn(f"entropy filter kept {len(selected)} < k={k_eff} candidates; "
                      "filling the batch in entropy order", SelectionWarning, stacklevel=2)
        taken = set(selected)
        rest = [i for i in _rank_desc(ids, ent) if i not in taken]
        selected += rest[:k_eff - len(selected)]
    return AcquisitionResult(tuple(selected), scores, tuple(filtered))


def _greedy_select(ids, feats, ent, train, metric_id, M, k, row):
    selected, scores = [], {}
    first_filter = ()
    reference = train
    for _ in range(k):
        taken = set(selected)
        remaining = [i for i in ids if i not in taken]
        filtered = _rank_desc(remaining, [ent[row[i]] for i in remaining])[:M]
        first_filter = first_filter or tuple(filtered)
        s = mean_distance_scores(feats[[row[i] for i in filtered]], reference, metric_id)
        for i, v in zip(filtered, s):
            scores.setdefault(i, (float(ent[row[i]]), float(v)))
        pick = _rank_desc(filtered, s)[0]
        selected.append(pick)
        reference = np.vstack([reference, feats[row[pick]][None, :]])
    return AcquisitionResult(tuple(selected), scores, first_filter)


def uncertainty_select(ids, probs, k: int) -> list[int]:
    """The ``k`` highest-entropy ids."""
    ids = list(ids)
    if not ids:
        raise EmptyPool("no candidates in the pool")
    if k < 1:
        raise ValueError("k must be >= 1")
    return _rank_desc(ids, entropies(probs))[:k]


def random_select(ids, k: int, seed: int) -> list[int]:
    """Uniform sample of ``k`` ids without replacement."""
    ids = list(ids)
    if k > len(ids):
        raise KTooLarge(f"cannot draw {k} ids from a pool of {len(ids)}")
    rng = np.random.default_rng(seed)
    return [int(ids[j]) for j in rng.choice(len(ids), size=k, replace=False)]


def farthest_first_init(ids, descriptors, target_size: int, metric_id: str, seed: int) -> list[int]:
    """Seeded random first pick, then repeatedly add the candidate with the
    largest mean distance to everything picked so far."""
    ids = [int(i) for i in ids]
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    if target_size > len(ids):
        raise TargetTooLarge(f"target size {target_size} exceeds the {len(ids)} available examples")
    desc = prepare(metric_id, descriptors)
    rng = np.random.default_rng(seed)
    first = int(rng.integers(len(ids)))
    picked_rows = [first]
    # dist[:, j] holds distances from every candidate to the j-th pick
    dist = np.empty((len(ids), target_size))
    alive = np.ones(len(ids), dtype=bool)
    alive[first] = False
    for t in range(1, target_size):
        dist[:, t - 1] = distance_rows(metric_id, desc[picked_rows[-1]], desc)
        rows = np.flatnonzero(alive)
        means = [math.fsum(dist[r, :t]) / t for r in rows]
        best = _rank_desc([ids[r] for r in rows], means)[0]
        r_best = rows[[ids[r] for r in rows].index(best)]
        picked_rows.append(int(r_best))
        alive[r_best] = False
    return [ids[r] for r in picked_rows]
