"""Dense float64 array helpers and reproducible random streams.

Everything downstream (networks, attacks, dataset generators) goes through
the two primitives here: a matrix product with a fixed accumulation order,
and counter-based random streams keyed by (seed, stream index). Both are
pure functions of their inputs, so logged CSV artifacts are reproducible
byte for byte under a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError, ParameterError, ShapeError

_MASK64 = (1 << 64) - 1


def as_matrix(a) -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting anything else."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got ndim={a.ndim}")
    return a


def require_finite(a: np.ndarray, context: str = "result") -> np.ndarray:
    if not np.isfinite(a).all():
        raise NumericError(f"{context} contains NaN/Inf")
    return a


def matmul(a, b) -> np.ndarray:
    """Matrix product with left-to-right accumulation over the shared axis.

    Each output entry is built as ``((0 + a[i,0]*b[0,k]) + a[i,1]*b[1,k]) + ...``,
    i.e. the same floating-point operation sequence as a naive triple loop.
    BLAS reorders partial sums, which is why it is not used here: the training
    and verification margins assume bit-identical reruns.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul {a.shape} x {b.shape}: inner dimensions differ")
    out = np.zeros((a.shape[0], b.shape[1]))
    tmp = np.empty_like(out)
    for j in range(a.shape[1]):
        np.multiply(a[:, j : j + 1], b[j : j + 1, :], out=tmp)
        np.add(out, tmp, out=out)
    return require_finite(out, "matmul")


def _mix64(a: int, b: int) -> int:
    """SplitMix64-style finalizer combining two stream indices."""
    x = (a * 0x9E3779B97F4A7C15 + b + 1) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class Rng:
    """Deterministic random stream backed by the counter-based Philox generator.

    The full generator state is the key pair (seed, stream): the same pair
    yields the same sequence on every platform and every run. Parallel or
    per-trial work derives independent child streams with :meth:`split`
    instead of sharing one stream.
    """

    __slots__ = ("seed", "stream", "gen")

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def split(self, index: int) -> "Rng":
        """Child stream for lane/trial ``index``, independent of this one."""
        return Rng(self.seed, _mix64(self.stream, int(index)))

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, stream={self.stream})"


def sample_gaussian(rng: Rng, n: int, mean: float = 0.0, std: float = 1.0) -> np.ndarray:
    """n i.i.d. normal draws; std == 0 degenerates to a constant vector."""
    if std < 0:
        raise ParameterError(f"std must be >= 0, got {std}")
    if n < 0:
        raise ParameterError(f"n must be >= 0, got {n}")
    return rng.gen.normal(loc=mean, scale=std, size=n)
