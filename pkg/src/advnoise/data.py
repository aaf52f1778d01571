"""Synthetic datasets whose true label distribution is known in closed form.

The central object is an isotropic Gaussian mixture: inputs are sampled from
per-class Gaussians and the exact class posterior at ANY point follows from
Bayes' rule, so noise metrics stay exact even after inputs are perturbed.
The one-shot cross-class blend (mixup_once) instead defines its truth by
construction and is the controlled label-noise injector: blending ratio
rho yields data quality rho and one-hot-vs-truth mismatch 1 - rho exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .attacks import AttackConfig, pgd_batch
from .errors import ParameterError, ParseError, ShapeError
from .labels import one_hot_rows
from .linalg import Rng
from .net import Network

_STREAM_INPUTS = 11
_STREAM_SHUFFLE = 12
_STREAM_PAIRING = 13
_STREAM_NOISE = 14
_STREAM_MEANS = 15


@dataclass(frozen=True)
class GaussianMixtureOracle:
    """Equal-prior isotropic Gaussian mixture with an exact posterior."""

    means: np.ndarray  # (K, d)
    cov_scale: float

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] < 2:
            raise ParameterError("means must be (K >= 2, d)")
        if self.cov_scale <= 0:
            raise ParameterError(f"cov_scale must be > 0, got {self.cov_scale}")
        diffs = means[:, None, :] - means[None, :, :]
        dist = np.linalg.norm(diffs, axis=2)
        if np.any(dist[~np.eye(means.shape[0], dtype=bool)] == 0.0):
            raise ParameterError("class means are coincident")
        object.__setattr__(self, "means", means)

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def posterior(self, x: np.ndarray) -> np.ndarray:
        """Exact P(class | x) rows; valid for any x, perturbed or not."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return self.posterior(x[None, :])[0]
        if x.shape[1] != self.dim:
            raise ShapeError(f"input width {x.shape[1]} != mixture dim {self.dim}")
        sq = np.sum((x[:, None, :] - self.means[None, :, :]) ** 2, axis=2)
        ll = -sq / (2.0 * self.cov_scale**2)
        ll -= ll.max(axis=1, keepdims=True)
        w = np.exp(ll)
        return w / w.sum(axis=1, keepdims=True)


@dataclass
class OracleDataset:
    """Inputs, assigned labels and (when known) the exact truth per example.

    true_dist is None when the truth is unknown, e.g. after perturbing a
    dataset whose truth was defined by construction rather than by a
    recomputable oracle.
    """

    inputs: np.ndarray
    assigned: np.ndarray
    true_dist: np.ndarray | None
    n_classes: int
    oracle: GaussianMixtureOracle | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.assigned = np.asarray(self.assigned, dtype=np.int64)
        if self.inputs.ndim != 2 or self.assigned.shape != (self.inputs.shape[0],):
            raise ShapeError("inputs must be (n, d) with matching assigned (n,)")
        if self.true_dist is not None:
            self.true_dist = np.asarray(self.true_dist, dtype=np.float64)
            if self.true_dist.shape != (self.inputs.shape[0], self.n_classes):
                raise ShapeError("true_dist must be (n, K)")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    @property
    def has_truth(self) -> bool:
        return self.true_dist is not None

    def subset(self, idx: np.ndarray) -> "OracleDataset":
        return OracleDataset(
            inputs=self.inputs[idx],
            assigned=self.assigned[idx],
            true_dist=None if self.true_dist is None else self.true_dist[idx],
            n_classes=self.n_classes,
            oracle=self.oracle,
            meta=dict(self.meta),
        )


@dataclass(frozen=True)
class MixupConfig:
    """One-shot blending ratio (must stay above 1/2) and pairing seed."""

    ratio: float
    pairing_seed: int = 0

    def __post_init__(self):
        if not 0.5 < self.ratio <= 1.0:
            raise ParameterError(f"ratio must lie in (0.5, 1], got {self.ratio}")


def gen_gaussian_mixture(
    n_per_class: int,
    class_means,
    cov_scale: float,
    seed: int,
    meta: dict | None = None,
) -> OracleDataset:
    """Sample n_per_class points per class; assigned = sampled class of origin."""
    oracle = GaussianMixtureOracle(np.asarray(class_means, dtype=np.float64), cov_scale)
    if n_per_class < 1:
        raise ParameterError(f"n_per_class must be >= 1, got {n_per_class}")
    k, d = oracle.n_classes, oracle.dim
    rng = Rng(seed, _STREAM_INPUTS)
    blocks = [oracle.means[c] + cov_scale * rng.gen.normal(size=(n_per_class, d)) for c in range(k)]
    inputs = np.concatenate(blocks, axis=0)
    assigned = np.repeat(np.arange(k), n_per_class)
    order = Rng(seed, _STREAM_SHUFFLE).gen.permutation(k * n_per_class)
    inputs, assigned = inputs[order], assigned[order]
    info = {"generator": "gaussian_mixture", "n_per_class": n_per_class,
            "cov_scale": cov_scale, "seed": seed}
    info.update(meta or {})
    return OracleDataset(inputs, assigned, oracle.posterior(inputs), k, oracle, info)


def mixup_once(ds: OracleDataset, cfg: MixupConfig) -> OracleDataset:
    """Blend each input with a random partner from another class, once.

    The truth becomes ratio * one_hot(own) + (1 - ratio) * one_hot(partner)
    by construction, while the assigned label keeps the own class: the
    deliberate mismatch. The blended points no longer follow any closed-form
    mixture, so the recomputable oracle is dropped.
    """
    classes, counts = np.unique(ds.assigned, return_counts=True)
    if classes.size < 2:
        raise ParameterError("mixup needs at least two classes present")
    rng = Rng(cfg.pairing_seed, _STREAM_PAIRING)
    partners = np.empty(ds.n, dtype=np.int64)
    for c in classes:
        rows = np.flatnonzero(ds.assigned == c)
        others = np.flatnonzero(ds.assigned != c)
        partners[rows] = others[rng.gen.integers(0, others.size, size=rows.size)]
    rho = cfg.ratio
    inputs = rho * ds.inputs + (1.0 - rho) * ds.inputs[partners]
    truth = rho * one_hot_rows(ds.assigned, ds.n_classes)
    truth += (1.0 - rho) * one_hot_rows(ds.assigned[partners], ds.n_classes)
    info = dict(ds.meta)
    info.update({"mixup_ratio": rho, "pairing_seed": cfg.pairing_seed})
    return OracleDataset(inputs, ds.assigned.copy(), truth, ds.n_classes, None, info)


def build_fixed_adversarial(ds: OracleDataset, net: Network, cfg: AttackConfig,
                            rng: Rng | None = None) -> OracleDataset:
    """Replace every input by its PGD example once; labels are copied verbatim.

    Where the dataset carries a recomputable oracle, the truth is re-evaluated
    at the perturbed points, which is exactly how the mismatch between copied
    labels and distorted truth becomes measurable.
    """
    x_adv, _, _, _ = pgd_batch(net, ds.inputs, ds.assigned, cfg, rng)
    truth = ds.oracle.posterior(x_adv) if ds.oracle is not None else None
    info = dict(ds.meta)
    info.update({"augmentation": "fixed_adversarial", "epsilon": cfg.epsilon,
                 "attack_norm": cfg.norm, "attack_steps": cfg.steps})
    return OracleDataset(x_adv, ds.assigned.copy(), truth, ds.n_classes, ds.oracle, info)


def build_gaussian_augmented(ds: OracleDataset, epsilon: float, seed: int) -> OracleDataset:
    """Add a Gaussian direction rescaled to linf magnitude epsilon per example."""
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    rng = Rng(seed, _STREAM_NOISE)
    direction = rng.gen.normal(size=ds.inputs.shape)
    sup = np.maximum(np.max(np.abs(direction), axis=1, keepdims=True), 1e-300)
    x_new = ds.inputs + direction * (epsilon / sup)
    truth = ds.oracle.posterior(x_new) if ds.oracle is not None else None
    info = dict(ds.meta)
    info.update({"augmentation": "gaussian", "epsilon": epsilon, "noise_seed": seed})
    return OracleDataset(x_new, ds.assigned.copy(), truth, ds.n_classes, ds.oracle, info)


def save_csv(ds: OracleDataset, path) -> None:
    """Header row `d,K`, then rows x_1..x_d,assigned[,p_1..p_K] at %.17g."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([ds.dim, ds.n_classes])
        for i in range(ds.n):
            row = [format(v, ".17g") for v in ds.inputs[i]]
            row.append(str(int(ds.assigned[i])))
            if ds.true_dist is not None:
                row.extend(format(v, ".17g") for v in ds.true_dist[i])
            writer.writerow(row)


def load_csv(path) -> OracleDataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        try:
            d, k = int(header[0]), int(header[1])
        except (IndexError, ValueError):
            raise ParseError(f"{path}:1: header must be 'd,K'") from None
        inputs, assigned, dists = [], [], []
        want_truth: bool | None = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            has_truth = len(row) == d + 1 + k
            if len(row) != d + 1 and not has_truth:
                raise ParseError(f"{path}:{lineno}: expected {d + 1} or {d + 1 + k} columns, got {len(row)}")
            if want_truth is None:
                want_truth = has_truth
            elif want_truth != has_truth:
                raise ParseError(f"{path}:{lineno}: inconsistent truth columns")
            try:
                inputs.append([float(v) for v in row[:d]])
                assigned.append(int(row[d]))
                if has_truth:
                    dists.append([float(v) for v in row[d + 1 :]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not inputs:
        raise ParseError(f"{path}: no data rows")
    truth = np.asarray(dists) if want_truth else None
    return OracleDataset(np.asarray(inputs), np.asarray(assigned, dtype=np.int64), truth, k,
                         None, {"generator": "csv", "path": str(path)})


def two_gaussians(n_per_class: int, seed: int, separation: float = 2.0,
                  cov_scale: float = 1.0, dim: int = 2) -> OracleDataset:
    """Two isotropic classes straddling the origin along the first axis."""
    means = np.zeros((2, dim))
    means[0, 0] = -separation / 2.0
    means[1, 0] = +separation / 2.0
    return gen_gaussian_mixture(n_per_class, means, cov_scale, seed,
                                meta={"preset": "two_gaussians", "separation": separation})


def ring_mixture(n_per_class: int, seed: int, n_classes: int = 6, radius: float = 2.0,
                 cov_scale: float = 0.6) -> OracleDataset:
    """n_classes isotropic blobs equally spaced on a planar ring."""
    if n_classes < 2:
        raise ParameterError("ring_mixture needs >= 2 classes")
    angles = 2.0 * np.pi * np.arange(n_classes) / n_classes
    means = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return gen_gaussian_mixture(n_per_class, means, cov_scale, seed,
                                meta={"preset": "ring_mixture", "radius": radius})


def toy_images(n_per_class: int, seed: int, n_classes: int = 3, side: int = 4,
               cov_scale: float = 0.12) -> OracleDataset:
    """Image-like blobs on [0, 1]^(side^2) so 8/255-scale radii are meaningful.

    Class templates are seeded uniform patterns kept away from the range
    edges; per-pixel spread stays small so samples stay essentially in range.
    """
    if n_classes < 2:
        raise ParameterError("toy_images needs >= 2 classes")
    d = side * side
    means = Rng(seed, _STREAM_MEANS).gen.uniform(0.25, 0.75, size=(n_classes, d))
    ds = gen_gaussian_mixture(n_per_class, means, cov_scale, seed,
                              meta={"preset": "toy_images", "side": side,
                                    "input_range": [0.0, 1.0]})
    return ds


PRESETS = {
    "two_gaussians": two_gaussians,
    "ring_mixture": ring_mixture,
    "toy_images": toy_images,
}
