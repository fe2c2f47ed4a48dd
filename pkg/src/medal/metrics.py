"""Distance functions, predictive entropy and the mean-distance score.

Real-valued metrics operate on float vectors. The two binary measures
(Russell-Rao, Kulsinski) operate on boolean vectors; real features are
mapped to bits with :func:`binarize` (strictly positive -> 1) before use.

All binary distances are a single division of two integers, so they are
reproduced bit-for-bit by any implementation; means and entropies are
taken with ``math.fsum`` so neither depends on summation order. This keeps
rankings (and hence lower-id tie-breaking) stable.
"""

from __future__ import annotations

import math

import numpy as np

from .core import METRICS
from .errors import (DimensionMismatch, EmptyTrainingSet, InvalidDistribution,
                     KindMismatch)

REAL_METRICS = ("euclidean", "cosine", "cityblock", "chebyshev")
BINARY_METRICS = ("russellrao", "kulsinski")

PROB_TOL = 1e-9


def is_binary_metric(metric_id: str) -> bool:
    _check_metric(metric_id)
    return metric_id in BINARY_METRICS


def _check_metric(metric_id):
    if metric_id not in METRICS:
        raise ValueError(f"unknown metric {metric_id!r}; expected one of {METRICS}")


# -- entropy ---------------------------------------------------------------

def entropy(p) -> float:
    """Shannon entropy (nats) of one probability vector, with 0 ln 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidDistribution(f"expected a 1-D probability vector, got shape {p.shape}")
    return float(entropies(p[None, :])[0])


def entropies(probs) -> np.ndarray:
    """Row-wise entropy of an ``(n, C)`` matrix of class probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] == 0:
        raise InvalidDistribution(f"expected an (n, C) probability matrix, got {probs.shape}")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise InvalidDistribution("probabilities must be finite and non-negative")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > PROB_TOL):
        bad = int(np.argmax(np.abs(sums - 1.0)))
        raise InvalidDistribution(f"row {bad} sums to {sums[bad]!r}, not 1")
    # scalar log + fsum: permuted rows get bit-identical entropies, so entropy
    # ties are real ties
    log = math.log
    out = np.array([-math.fsum(p * log(p) for p in row if p > 0) for row in probs.tolist()])
    # rounding can push a one-hot row to -0.0 or the uniform row a hair past ln C
    return np.clip(out, 0.0, math.log(probs.shape[1]))


# -- binarisation ----------------------------------------------------------

def binarize(v) -> np.ndarray:
    """Map a real vector (or matrix) to bits: 1 where the entry is > 0."""
    v = np.asarray(v)
    if v.dtype == np.bool_:
        return v.copy()
    return np.asarray(v, dtype=np.float64) > 0


def _as_kind(metric_id, a):
    a = np.asarray(a)
    if metric_id in BINARY_METRICS:
        if a.dtype != np.bool_:
            raise KindMismatch(
                f"{metric_id} needs binary vectors; call binarize() on real features first")
        return a
    return np.asarray(a, dtype=np.float64)


def prepare(metric_id: str, feats) -> np.ndarray:
    """Coerce features to the kind ``metric_id`` works on (binarising if needed)."""
    _check_metric(metric_id)
    feats = np.asarray(feats)
    if metric_id in BINARY_METRICS:
        return binarize(feats)
    return np.asarray(feats, dtype=np.float64)


# -- distances -------------------------------------------------------------

def distance(metric_id: str, a, b) -> float:
    """Distance between two vectors of the same kind and dimension."""
    _check_metric(metric_id)
    a = _as_kind(metric_id, a)
    b = _as_kind(metric_id, b)
    if a.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} do not match")
    return float(distance_rows(metric_id, a, b[None, :])[0])


def distance_rows(metric_id: str, x, others) -> np.ndarray:
    """Distances from one vector ``x`` to every row of ``others``.

    Inputs must already be of the metric's kind (see :func:`prepare`).
    """
    x = np.asarray(x)
    others = np.asarray(others)
    if others.ndim != 2 or x.ndim != 1 or others.shape[1] != x.shape[0]:
        raise DimensionMismatch(f"cannot compare {x.shape} with rows of {others.shape}")

    if metric_id == "euclidean":
        diff = others - x
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if metric_id == "cityblock":
        return np.abs(others - x).sum(axis=1)
    if metric_id == "chebyshev":
        if x.shape[0] == 0:
            return np.zeros(len(others))
        return np.abs(others - x).max(axis=1)
    if metric_id == "cosine":
        # cosine is scale-free; dividing by the largest entry keeps x @ x from
        # underflowing to zero on tiny vectors
        x = _unit_scale(x[None, :])[0]
        others = _unit_scale(others)
        nx = np.sqrt(x @ x)
        no = np.sqrt(np.einsum("ij,ij->i", others, others))
        denom = nx * no
        with np.errstate(divide="ignore", invalid="ignore"):
            sim = np.where(denom > 0, (others @ x) / np.where(denom > 0, denom, 1.0), 0.0)
        # floating error can leave |sim| slightly above 1
        return 1.0 - np.clip(sim, -1.0, 1.0)

    n = x.shape[0]
    xi = x.astype(np.int64)
    oi = others.astype(np.int64)
    c_tt = oi @ xi
    c_tf = xi.sum() - c_tt          # x true, other false
    c_ft = oi.sum(axis=1) - c_tt    # x false, other true
    if metric_id == "russellrao":
        if n == 0:
            return np.zeros(len(others))
        return (n - c_tt) / n
    if metric_id == "kulsinski":
        denom = c_tf + c_ft + n
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(denom > 0, (c_tf + c_ft + n - c_tt) / np.where(denom > 0, denom, 1), 0.0)
    raise ValueError(f"unknown metric {metric_id!r}")


def _unit_scale(rows):
    peak = np.abs(rows).max(axis=1, keepdims=True) if rows.shape[1] else np.zeros((len(rows), 1))
    return rows / np.where(peak > 0, peak, 1.0)


def mean_distance_score(x_feat, train_feats, metric_id: str) -> float:
    """Average distance from ``x_feat`` to every training feature vector."""
    _check_metric(metric_id)
    train = np.asarray(train_feats)
    if train.ndim != 2 or len(train) == 0:
        raise EmptyTrainingSet("mean distance needs at least one training example")
    x = np.asarray(x_feat)
    if x.ndim != 1 or x.shape[0] != train.shape[1]:
        raise DimensionMismatch(f"feature {x.shape} vs training rows {train.shape}")
    x = _as_kind(metric_id, x)
    train = _as_kind(metric_id, train)
    return math.fsum(distance_rows(metric_id, x, train)) / len(train)


def mean_distance_scores(cands, train_feats, metric_id: str) -> np.ndarray:
    """:func:`mean_distance_score` for every row of ``cands``.

    Both arguments are coerced with :func:`prepare`, so real features may be
    passed to the binary metrics directly.
    """
    cands = prepare(metric_id, cands)
    train = prepare(metric_id, train_feats)
    if train.ndim != 2 or len(train) == 0:
        raise EmptyTrainingSet("mean distance needs at least one training example")
    if cands.ndim != 2 or cands.shape[1] != train.shape[1]:
        raise DimensionMismatch(f"candidates {cands.shape} vs training rows {train.shape}")
    n = len(train)
    return np.array([math.fsum(distance_rows(metric_id, c, train)) / n for c in cands])
