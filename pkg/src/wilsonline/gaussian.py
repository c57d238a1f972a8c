"""Wick pairings, reproducible Gaussian sampling and Monte Carlo Wilson lines.

Random numbers come from the Philox counter-based generator keyed by
(seed, stream).  Standard normal number q of a stream is built from raw
words 2q and 2q+1, so sample i, coordinate j of a J-coordinate batch is a
pure function of (seed, stream, i, j); chunks of samples can be generated in
any order or thread and reassembled bit for bit.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .lie_rep import RepBasis
from .signature import _factorial_tail, entry_norm, graded_holonomy_array, wilson_orders
from .spectral import CurrentPath, SpectralModel, rk_coefficients

BATCHES = 32
_MASK64 = (1 << 64) - 1
_CHUNK = 4096


# -- Wick calculus -------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSystem:
    covariance: np.ndarray

    def __post_init__(self):
        c = np.array(self.covariance, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] == 0:
            raise ValidationError(f"covariance must be a square matrix, got shape {c.shape}")
        if np.max(np.abs(c - c.T)) > 1e-12:
            raise ValidationError("covariance is not symmetric")
        if np.min(np.linalg.eigvalsh(c)) < -1e-10:
            raise ValidationError("covariance is not positive semidefinite")
        c.setflags(write=False)
        object.__setattr__(self, "covariance", c)

    @property
    def size(self) -> int:
        return self.covariance.shape[0]

    def factor(self) -> np.ndarray:
        """A matrix F with F F^T = covariance (symmetric square root, PSD-safe)."""
        w, v = np.linalg.eigh(self.covariance)
        return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T

    def sample(self, count: int, seed: int, stream: int = 0) -> np.ndarray:
        g = standard_normals(seed, stream, 0, count, self.size)
        return g @ self.factor().T


def _matchings(items: tuple):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for i, partner in enumerate(rest):
        remaining = rest[:i] + rest[i + 1:]
        for tail in _matchings(remaining):
            yield ((first, partner),) + tail


def wick_moment(system: GaussianSystem, indices) -> float:
    """E[X_{i_1} ... X_{i_2l}] as a sum over perfect matchings of covariance products.

    Odd-length index lists return exactly 0 (odd moments of a centred
    Gaussian vanish).
    """
    idx = tuple(int(i) for i in indices)
    if any(i < 0 or i >= system.size for i in idx):
        raise ValidationError(f"index out of range for a system of size {system.size}")
    if len(idx) % 2:
        return 0.0
    c = system.covariance
    total = 0.0
    for matching in _matchings(tuple(range(len(idx)))):
        term = 1.0
        for a, b in matching:
            term *= c[idx[a], idx[b]]
        total += term
    return float(total)


def matching_count(length: int) -> int:
    """(2l - 1)!! = (2l)! / (2^l l!), the number of perfect matchings."""
    if length % 2:
        return 0
    return math.prod(range(length - 1, 0, -2))


# -- counter-based normals -----------------------------------------------------

def _raw_words(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    bg = np.random.Philox(counter=start // 4, key=[int(seed) & _MASK64, int(stream) & _MASK64])
    skip = start % 4
    return bg.random_raw(skip + count)[skip:]


def standard_normals(seed: int, stream: int, first_sample: int, count: int, width: int) -> np.ndarray:
    """(count, width) standard normals for samples first_sample .. first_sample+count-1."""
    if count < 0 or width < 1:
        raise ValidationError("count must be nonnegative and width positive")
    raw = _raw_words(seed, stream, 2 * first_sample * width, 2 * count * width)
    u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    u1, u2 = u[0::2], u[1::2]
    z = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return z.reshape(count, width)


@dataclass(frozen=True)
class SampleBatch:
    seed: int
    count: int
    draws: np.ndarray  # (count, J): coordinates <x, h_j>
    stream: int = 0
    first: int = field(default=0, compare=False)


def sample(model: SpectralModel, count: int, seed: int, stream: int = 0, first: int = 0) -> SampleBatch:
    if count < 1:
        raise ValidationError("sample count must be at least 1")
    draws = standard_normals(seed, stream, first, count, model.size)
    return SampleBatch(int(seed), int(count), draws, int(stream), int(first))


def _weights(path: CurrentPath, model: SpectralModel, rk: bool) -> np.ndarray:
    w = np.sqrt(model.weight) * path.lifted_coeffs(model)  # (T+1, J)
    if rk:
        w = w * rk_coefficients(model)
    return w


def process_values(batch: SampleBatch, path: CurrentPath, model: SpectralModel, rk: bool) -> np.ndarray:
    """(count, T+1) values sum_j g_j w_j(t) on the path's grid."""
    if batch.draws.shape[1] != model.size:
        raise ValidationError(f"batch has {batch.draws.shape[1]} coordinates, spectrum has {model.size}")
    w = _weights(path, model, rk)
    return batch.draws @ w.T


def realize_process(batch: SampleBatch, path: CurrentPath, model: SpectralModel, rk: bool = True) -> np.ndarray:
    """Per-sample increments over each grid interval, shape (count, T)."""
    return np.diff(process_values(batch, path, model, rk), axis=1)


def process_covariance(path_s: CurrentPath, path_t: CurrentPath, model: SpectralModel, rk: bool,
                       i: int = -1, j: int = -1) -> complex:
    """Exact E[P_s(t_i) P_t(t_j)] (bilinear, no conjugation)."""
    a = _weights(path_s, model, rk)[i]
    b = _weights(path_t, model, rk)[j]
    return complex(np.sum(a * b))


# -- Monte Carlo Wilson lines --------------------------------------------------

def thread_count() -> int:
    env = os.environ.get("WILSONLINE_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ValidationError(f"WILSONLINE_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ValidationError("WILSONLINE_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class LoopData:
    """One loop: a current path per Lie index and an optional deterministic stream."""

    currents: dict
    deterministic: np.ndarray | None = None

    def __post_init__(self):
        if not self.currents and self.deterministic is None:
            raise ValidationError("a loop needs at least one current or a deterministic stream")
        grids = [p.times for p in self.currents.values()]
        for g in grids[1:]:
            if g.shape != grids[0].shape or np.any(g != grids[0]):
                raise ValidationError("all currents of a loop must share one time grid")

    @property
    def intervals(self) -> int:
        if self.currents:
            return len(next(iter(self.currents.values())).times) - 1
        return self.deterministic.shape[0]


@dataclass(frozen=True)
class MCResult:
    estimate: complex
    standard_error: float
    orders: np.ndarray  # per-order means of F^m, m = 0..R
    order_errors: np.ndarray
    samples: int
    seed: int
    tail_bound_mean: float
    tail_bound_max: float

    def as_dict(self) -> dict:
        return {
            "estimate": [self.estimate.real, self.estimate.imag],
            "standard_error": self.standard_error,
            "orders": [[z.real, z.imag] for z in self.orders],
            "order_errors": self.order_errors.tolist(),
            "samples": self.samples,
            "seed": self.seed,
            "batches": BATCHES,
            "tail_bound_mean": self.tail_bound_mean,
            "tail_bound_max": self.tail_bound_max,
        }


def _loop_increments(loop: LoopData, model: SpectralModel, basis: RepBasis, seed: int,
                     first: int, count: int, rk: bool) -> np.ndarray:
    n = basis.dim_rep
    T = loop.intervals
    out = np.zeros((count, T, n, n), dtype=complex)
    for alpha, path in sorted(loop.currents.items()):
        if not 0 <= alpha < basis.dim_algebra:
            raise ValidationError(f"Lie index {alpha} outside the basis (dimension {basis.dim_algebra})")
        # each Lie index carries an independent copy of the field
        batch = sample(model, count, seed, stream=alpha, first=first)
        inc = realize_process(batch, path, model, rk)  # (count, T)
        out += inc[:, :, None, None] * basis.generators[alpha]
    return out


def _chunk_values(loops, model, basis, R, seed, first, count, rk):
    traces = []
    tails = np.zeros(count)
    for loop in loops:
        stoch = _loop_increments(loop, model, basis, seed, first, count, rk)
        det = None if loop.deterministic is None else np.asarray(loop.deterministic, dtype=complex)
        slices = graded_holonomy_array(det, stoch, R)
        traces.append(np.trace(slices, axis1=-2, axis2=-1))
        v = np.sum(entry_norm(stoch), axis=-1)
        if det is not None:
            v = v + float(np.sum(entry_norm(det)))
        tails = np.maximum(tails, _factorial_tail(v, R))
    return wilson_orders(traces, R), tails


def _batch_stats(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and batch-means standard error along axis 0 (complex-aware)."""
    mean = np.mean(values, axis=0)
    groups = np.array_split(values, BATCHES, axis=0)
    means = np.stack([np.mean(g, axis=0) for g in groups if len(g)])
    if len(means) < 2:
        return mean, np.zeros(mean.shape)
    dev = means - np.mean(means, axis=0)
    var = np.sum(np.abs(dev) ** 2, axis=0) / (len(means) - 1)
    return mean, np.sqrt(var / len(means))


def mc_wilson(loops, model: SpectralModel, basis: RepBasis, R: int, samples: int, seed: int,
              rk: bool = True, threads: int | None = None) -> MCResult:
    """Monte Carlo mean of sum_{m <= R} F^m(R_k x) over sampled fields.

    ``loops`` is a list of LoopData.  Per sample, each loop's stochastic
    stream is sum_alpha dP_alpha E_alpha; the graded holonomy slices of all
    loops are combined into the Wilson-line orders F^0..F^R.
    """
    if R < 0:
        raise ValidationError("order R must be nonnegative")
    if samples < 1:
        raise ValidationError("need at least one sample")
    loops = list(loops)
    if not loops:
        raise ValidationError("need at least one loop")
    threads = threads or thread_count()
    starts = list(range(0, samples, _CHUNK))
    sizes = [min(_CHUNK, samples - s) for s in starts]

    def work(args):
        s, c = args
        return _chunk_values(loops, model, basis, R, seed, s, c, rk)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, zip(starts, sizes)))
    else:
        parts = [work(a) for a in zip(starts, sizes)]
    orders = np.concatenate([p[0] for p in parts], axis=0)  # (samples, R+1)
    tails = np.concatenate([p[1] for p in parts])
    total = np.sum(orders, axis=1)
    est, se = _batch_stats(total)
    om, ose = _batch_stats(orders)
    return MCResult(complex(est), float(se), om, ose, samples, int(seed),
                    float(np.mean(tails)), float(np.max(tails)))


def mc_mean(values: np.ndarray) -> tuple[complex, float]:
    """Batch-means estimate and standard error for a 1-D sample array."""
    mean, se = _batch_stats(np.asarray(values))
    return complex(mean), float(se)
