"""FGSM and PGD example generation inside an linf or l2 ball.

Attack steps ascend the cross-entropy of the attacked network against the
example's assigned class, then project back onto the ball around the clean
input and clamp to the valid input range. All attacks are pure functions of
(network, inputs, config, rng stream); evaluation-style configs disable the
random start so logged robust metrics are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linalg
from .errors import ParameterError, ShapeError
from .linalg import Rng
from .net import Network, batch_loss_and_grads

_NORMS = ("linf", "l2")
_L2_SLACK = 1e-13


@dataclass(frozen=True)
class AttackConfig:
    """Ball geometry and iteration schedule for one adversary."""

    norm: str = "linf"
    epsilon: float = 8 / 255
    steps: int = 10
    step_size: float = 2 / 255
    input_range: tuple[float, float] = (0.0, 1.0)
    random_start: bool = True

    def __post_init__(self):
        if self.norm not in _NORMS:
            raise ParameterError(f"norm must be one of {_NORMS}, got {self.norm!r}")
        if self.epsilon < 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.steps < 1:
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        if self.step_size <= 0:
            raise ParameterError(f"step_size must be > 0, got {self.step_size}")
        lo, hi = self.input_range
        if not lo < hi:
            raise ParameterError(f"input_range must satisfy lo < hi, got {self.input_range}")

    def for_eval(self) -> "AttackConfig":
        """Deterministic variant used for logged robust metrics."""
        return replace(self, random_start=False)


@dataclass
class AdvExample:
    """One perturbed input with its bookkeeping."""

    x_prime: np.ndarray
    origin_index: int
    loss_before: float
    loss_after: float
    stalled: bool = False


def project(delta: np.ndarray, norm: str, epsilon: float) -> np.ndarray:
    """Project a perturbation (row-wise for 2-D input) onto the epsilon ball."""
    if norm not in _NORMS:
        raise ParameterError(f"norm must be one of {_NORMS}, got {norm!r}")
    if epsilon < 0:
        raise ParameterError(f"epsilon must be >= 0, got {epsilon}")
    delta = np.asarray(delta, dtype=np.float64)
    if norm == "linf":
        return np.clip(delta, -epsilon, epsilon)
    if delta.ndim == 1:
        n = float(np.linalg.norm(delta))
        # slack keeps re-projection a bitwise no-op
        if n <= epsilon * (1.0 + _L2_SLACK):
            return delta.copy()
        return delta * (epsilon / n)
    norms = np.linalg.norm(delta, axis=1, keepdims=True)
    scale = np.where(norms > epsilon * (1.0 + _L2_SLACK), epsilon / np.maximum(norms, 1e-300), 1.0)
    return delta * scale


def _one_hot_rows(labels: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], k))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _ascent_direction(grads: np.ndarray, norm: str) -> np.ndarray:
    if norm == "linf":
        return np.sign(grads)
    norms = np.linalg.norm(grads, axis=1, keepdims=True)
    return np.where(norms > 0.0, grads / np.maximum(norms, 1e-300), 0.0)


def _random_start_delta(shape: tuple[int, int], cfg: AttackConfig, rng: Rng) -> np.ndarray:
    n, d = shape
    if cfg.norm == "linf":
        return rng.gen.uniform(-cfg.epsilon, cfg.epsilon, size=(n, d))
    direction = rng.gen.normal(size=(n, d))
    norms = np.maximum(np.linalg.norm(direction, axis=1, keepdims=True), 1e-300)
    radius = cfg.epsilon * rng.gen.uniform(size=(n, 1)) ** (1.0 / d)
    return direction / norms * radius


def pgd_batch(net: Network, x: np.ndarray, labels: np.ndarray, cfg: AttackConfig, rng: Rng | None = None):
    """Batched PGD; returns (x_adv, loss_before, loss_after, stalled mask).

    Rows whose loss gradient vanished at every step are returned unperturbed
    and flagged; that is a stall, not an error.
    """
    x = linalg.as_matrix(x)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (x.shape[0],):
        raise ShapeError(f"labels shape {labels.shape} does not match {x.shape[0]} inputs")
    if cfg.random_start and rng is None:
        raise ParameterError("random_start attack requires an rng stream")
    lo, hi = cfg.input_range
    targets = _one_hot_rows(labels, net.spec.classes)

    loss_before, _, _, _ = batch_loss_and_grads(net, x, targets, want_param_grads=False)
    if cfg.epsilon == 0.0:
        return x.copy(), loss_before, loss_before.copy(), np.zeros(x.shape[0], dtype=bool)

    if cfg.random_start:
        x_adv = np.clip(x + _random_start_delta(x.shape, cfg, rng), lo, hi)
    else:
        x_adv = x.copy()

    moved = np.zeros(x.shape[0], dtype=bool)
    for _ in range(cfg.steps):
        _, _, _, grads = batch_loss_and_grads(net, x_adv, targets, want_param_grads=False)
        moved |= np.any(grads != 0.0, axis=1)
        step = cfg.step_size * _ascent_direction(grads, cfg.norm)
        x_adv = np.clip(x + project(x_adv + step - x, cfg.norm, cfg.epsilon), lo, hi)

    stalled = ~moved
    if stalled.any():
        x_adv[stalled] = x[stalled]
    loss_after, _, _, _ = batch_loss_and_grads(net, x_adv, targets, want_param_grads=False)
    return x_adv, loss_before, loss_after, stalled


def pgd(net: Network, x: np.ndarray, y: int, cfg: AttackConfig, rng: Rng | None = None,
        origin_index: int = -1) -> AdvExample:
    """Iterated projected ascent from a single clean input."""
    x = np.asarray(x, dtype=np.float64)
    x_adv, lb, la, stalled = pgd_batch(net, x[None, :], np.array([y]), cfg, rng)
    return AdvExample(x_adv[0], origin_index, float(lb[0]), float(la[0]), bool(stalled[0]))


def fgsm(net: Network, x: np.ndarray, y: int, cfg: AttackConfig, origin_index: int = -1) -> AdvExample:
    """Single full-radius ascent step; cfg.steps and random_start are ignored."""
    x = np.asarray(x, dtype=np.float64)
    xm = x[None, :]
    targets = _one_hot_rows(np.array([y]), net.spec.classes)
    loss_before, _, _, grads = batch_loss_and_grads(net, xm, targets, want_param_grads=False)
    stalled = not np.any(grads != 0.0)
    lo, hi = cfg.input_range
    if stalled or cfg.epsilon == 0.0:
        x_adv = xm.copy()
    else:
        x_adv = np.clip(xm + cfg.epsilon * _ascent_direction(grads, cfg.norm), lo, hi)
    loss_after, _, _, _ = batch_loss_and_grads(net, x_adv, targets, want_param_grads=False)
    return AdvExample(x_adv[0], origin_index, float(loss_before[0]), float(loss_after[0]), stalled)
