"""Label-distribution algebra: TV distance, noise metrics, rectified labels.

A label distribution is a point on the probability simplex over K classes.
The metrics here compare a dataset's assigned labels against an exact oracle
conditional: the label error rate, the mean assigned-label probability
(data quality), and the mean total-variation mismatch. The rectifier blends
a temperature-scaled model distribution with an inherited one-hot label.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .linalg import Rng
from .net import softmax_t

NOISE_CSV_HEADER = ["n", "p_e", "q", "mean_tv", "tag"]


@dataclass(frozen=True)
class RectifierParams:
    """Temperature and interpolation ratio of the rectified label."""

    temperature: float = 1.0
    ratio: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ParameterError(f"temperature must be > 0, got {self.temperature}")
        if not 0.0 <= self.ratio <= 1.0:
            raise ParameterError(f"ratio must lie in [0, 1], got {self.ratio}")


@dataclass(frozen=True)
class NoiseReport:
    """Aggregate noise metrics of a labeled set against its oracle."""

    p_e: float
    q: float
    mean_tv: float
    n: int

    def csv_row(self, tag: str = "") -> list:
        return [self.n, repr(self.p_e), repr(self.q), repr(self.mean_tv), tag]


def one_hot(index: int, k: int) -> np.ndarray:
    if not 0 <= index < k:
        raise ParameterError(f"class index {index} outside [0, {k})")
    v = np.zeros(k)
    v[index] = 1.0
    return v


def one_hot_rows(indices: np.ndarray, k: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size and (indices.min() < 0 or indices.max() >= k):
        raise ParameterError("class index outside [0, k)")
    out = np.zeros((indices.shape[0], k))
    out[np.arange(indices.shape[0]), indices] = 1.0
    return out


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Total variation distance, half the L1 distance between simplex points."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ShapeError(f"distributions must share a 1-D shape, got {p.shape} vs {q.shape}")
    return 0.5 * float(np.sum(np.abs(p - q)))


def tv_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise TV distance between two (n, K) stacks."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 2:
        raise ShapeError(f"stacks must share a 2-D shape, got {p.shape} vs {q.shape}")
    return 0.5 * np.sum(np.abs(p - q), axis=1)


def rectify(logits: np.ndarray, assigned: int, params: RectifierParams) -> np.ndarray:
    """ratio * softmax(logits/T) + (1 - ratio) * one_hot(assigned)."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ShapeError("rectify expects a 1-D logits vector")
    soft = softmax_t(logits, params.temperature)
    return params.ratio * soft + (1.0 - params.ratio) * one_hot(assigned, logits.shape[0])


def rectify_rows(logits: np.ndarray, assigned: np.ndarray, params: RectifierParams) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2:
        raise ShapeError("rectify_rows expects (n, K) logits")
    soft = softmax_t(logits, params.temperature)
    return params.ratio * soft + (1.0 - params.ratio) * one_hot_rows(assigned, logits.shape[1])


def _check_labeled_set(assigned: np.ndarray, true_dist: np.ndarray):
    assigned = np.asarray(assigned, dtype=np.int64)
    true_dist = np.asarray(true_dist, dtype=np.float64)
    if assigned.ndim != 1 or true_dist.ndim != 2 or assigned.shape[0] != true_dist.shape[0]:
        raise ShapeError("assigned must be (n,) and true_dist (n, K)")
    if assigned.shape[0] == 0:
        raise ParameterError("empty labeled set")
    return assigned, true_dist


def sample_labels(true_dist: np.ndarray, rng: Rng) -> np.ndarray:
    """One label per row drawn from that row's distribution (inverse CDF)."""
    true_dist = np.asarray(true_dist, dtype=np.float64)
    cdf = np.cumsum(true_dist, axis=1)
    u = rng.gen.uniform(size=(true_dist.shape[0], 1))
    return np.minimum(np.sum(cdf < u, axis=1), true_dist.shape[1] - 1)


def label_error_rate(assigned, true_dist, mode: str = "expected", seed: int | None = None) -> float:
    """Fraction of assigned labels differing from the (realized) true label.

    'sampled' realizes one true label per example from its distribution and
    counts mismatches; 'expected' integrates the indicator analytically,
    returning mean(1 - true_dist[i, assigned_i]).
    """
    assigned, true_dist = _check_labeled_set(assigned, true_dist)
    if mode == "expected":
        return float(np.mean(1.0 - true_dist[np.arange(assigned.shape[0]), assigned]))
    if mode == "sampled":
        if seed is None:
            raise ParameterError("sampled mode requires a seed")
        drawn = sample_labels(true_dist, Rng(seed))
        return float(np.mean(drawn != assigned))
    raise ParameterError(f"mode must be 'sampled' or 'expected', got {mode!r}")


def data_quality(assigned, true_dist) -> float:
    """Mean true-label probability of the assigned labels."""
    assigned, true_dist = _check_labeled_set(assigned, true_dist)
    return float(np.mean(true_dist[np.arange(assigned.shape[0]), assigned]))


def mismatch_report(model_labels, true_dist, assigned) -> NoiseReport:
    """Bundle p_e (expected), q and the mean TV mismatch for one labeled set."""
    assigned, true_dist = _check_labeled_set(assigned, true_dist)
    model_labels = np.asarray(model_labels, dtype=np.float64)
    if model_labels.shape != true_dist.shape:
        raise ShapeError(f"model_labels {model_labels.shape} vs true_dist {true_dist.shape}")
    return NoiseReport(
        p_e=label_error_rate(assigned, true_dist, mode="expected"),
        q=data_quality(assigned, true_dist),
        mean_tv=float(np.mean(tv_rows(model_labels, true_dist))),
        n=int(assigned.shape[0]),
    )


def write_noise_csv(path, rows: list[tuple[NoiseReport, str]]) -> None:
    """Rows of (report, tag) in the n,p_e,q,mean_tv,tag schema."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(NOISE_CSV_HEADER)
        for report, tag in rows:
            writer.writerow(report.csv_row(tag))
