"""Graded product integrals: holonomy of a matrix-valued path split by stochastic order.

A driving path is a grid 0 = t_0 < ... < t_T = 1 with two streams of n x n
increments per interval: a deterministic part D_i and a stochastic part S_i.
The holonomy is the time-ordered product

    W = exp(D_T + S_T) ... exp(D_2 + S_2) exp(D_1 + S_1),

later factors multiplying from the left.  The opposite convention equals the
transpose-ordered product, i.e. the same loop traversed backwards; it is never
mixed in, and only traces leave this module.

Marking each stochastic increment with a formal variable u (S_i -> u S_i)
makes W a power series in u; its coefficient matrices Z(0), Z(1), ... are the
stochastic-order slices.  They are computed exactly to order R by carrying a
length-(R+1) array of matrix coefficients and multiplying by convolution.

Arrays may carry leading batch axes: increments of shape (..., T, n, n) give
slices of shape (..., R+1, n, n).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .errors import ValidationError

_TAYLOR_SMALL = 1e-2


def entry_norm(a: np.ndarray) -> np.ndarray:
    """Entrywise l1 norm sum_ij |a_ij| (submultiplicative); reduces the last two axes."""
    return np.sum(np.abs(a), axis=(-2, -1))


def expm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    Small arguments (norm below 1e-2) use degree-13 Taylor with no scaling.
    """
    a = np.asarray(a, dtype=complex)
    norm = np.max(entry_norm(a)) if a.size else 0.0
    if norm < _TAYLOR_SMALL:
        squarings, degree = 0, 13
    else:
        squarings = max(0, int(np.ceil(np.log2(norm / 0.25))))
        degree = 18
    x = a / 2.0**squarings
    eye = np.broadcast_to(np.eye(a.shape[-1], dtype=complex), a.shape)
    out = eye.copy()
    # Horner form of sum_r x^r / r!
    for r in range(degree, 0, -1):
        out = eye + (x @ out) / r
    for _ in range(squarings):
        out = out @ out
    return out


def graded_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Truncated product of graded matrices: (a * b)_i = sum_{p+q=i} a_p @ b_q."""
    R = a.shape[-3] - 1
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=complex)
    for i in range(R + 1):
        acc = out[..., i, :, :]
        for p in range(i + 1):
            acc += a[..., p, :, :] @ b[..., i - p, :, :]
    return out


def graded_identity(shape: tuple, R: int, n: int) -> np.ndarray:
    out = np.zeros(shape + (R + 1, n, n), dtype=complex)
    out[..., 0, :, :] = np.eye(n)
    return out


def graded_exp(d: np.ndarray, s: np.ndarray, R: int) -> np.ndarray:
    """Coefficients of u^0..u^R in exp(d + u s)."""
    d = np.asarray(d, dtype=complex)
    s = np.asarray(s, dtype=complex)
    d, s = np.broadcast_arrays(d, s)
    n = d.shape[-1]
    batch = d.shape[:-2]
    if not np.any(d):
        # exp(u s) = sum_i u^i s^i / i!
        out = graded_identity(batch, R, n)
        term = out[..., 0, :, :].copy()
        for i in range(1, R + 1):
            term = term @ s / i
            out[..., i, :, :] = term
        return out
    if R == 0:
        return expm(d)[..., None, :, :]
    norm = float(np.max(entry_norm(d) + entry_norm(s))) if d.size else 0.0
    squarings = 0 if norm < 0.5 else int(np.ceil(np.log2(norm / 0.5)))
    x = np.zeros(batch + (R + 1, n, n), dtype=complex)
    x[..., 0, :, :] = d / 2.0**squarings
    if R >= 1:
        x[..., 1, :, :] = s / 2.0**squarings
    eye = graded_identity(batch, R, n)
    out = eye.copy()
    for r in range(20, 0, -1):
        out = eye + graded_mul(x, out) / r
    for _ in range(squarings):
        out = graded_mul(out, out)
    return out


@dataclass(frozen=True)
class DrivingPath:
    times: np.ndarray
    deterministic_increments: np.ndarray  # (T, n, n)
    stochastic_increments: np.ndarray  # (T, n, n)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        d = np.asarray(self.deterministic_increments, dtype=complex)
        s = np.asarray(self.stochastic_increments, dtype=complex)
        if t.ndim != 1 or len(t) < 2:
            raise ValidationError("time grid needs at least two points")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("time grid must be strictly increasing")
        if abs(t[0]) > 1e-12 or abs(t[-1] - 1) > 1e-12:
            raise ValidationError("time grid must start at 0 and end at 1")
        for name, arr in (("deterministic", d), ("stochastic", s)):
            if arr.ndim != 3 or arr.shape[0] != len(t) - 1 or arr.shape[1] != arr.shape[2]:
                raise ValidationError(
                    f"{name} increments must have shape ({len(t) - 1}, n, n), got {arr.shape}"
                )
        if d.shape != s.shape:
            raise ValidationError("increment streams disagree in matrix size")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "deterministic_increments", d)
        object.__setattr__(self, "stochastic_increments", s)

    @classmethod
    def from_streams(cls, times, deterministic=None, stochastic=None, n: int | None = None):
        t = np.asarray(times, dtype=float)
        T = len(t) - 1
        if deterministic is None and stochastic is None:
            if n is None:
                raise ValidationError("matrix size unknown for an empty path")
        ref = deterministic if deterministic is not None else stochastic
        if ref is not None:
            n = np.asarray(ref).shape[-1]
        zero = np.zeros((T, n, n), dtype=complex)
        return cls(t,
                   zero if deterministic is None else deterministic,
                   zero if stochastic is None else stochastic)

    @property
    def dim(self) -> int:
        return self.deterministic_increments.shape[-1]

    def variations(self) -> tuple[float, float]:
        return (float(np.sum(entry_norm(self.deterministic_increments))),
                float(np.sum(entry_norm(self.stochastic_increments))))

    def split(self, index: int) -> tuple["DrivingPath", "DrivingPath"]:
        """Pieces over [0, t_index] and [t_index, 1], each rescaled onto [0, 1]."""
        t = self.times
        if not 0 < index < len(t) - 1:
            raise ValidationError("split index must be interior")

        def piece(lo, hi):
            tt = t[lo:hi + 1]
            return DrivingPath((tt - tt[0]) / (tt[-1] - tt[0]),
                               self.deterministic_increments[lo:hi],
                               self.stochastic_increments[lo:hi])

        return piece(0, index), piece(index, len(t) - 1)


@dataclass(frozen=True)
class GradedHolonomy:
    slices: np.ndarray  # (R+1, n, n)
    truncation_tail_bound: float

    @property
    def max_stochastic_order(self) -> int:
        return self.slices.shape[0] - 1

    def total(self) -> np.ndarray:
        return np.sum(self.slices, axis=0)

    def traces(self) -> np.ndarray:
        return np.trace(self.slices, axis1=-2, axis2=-1)

    def evaluate(self, u: complex) -> np.ndarray:
        """sum_i u^i Z(i)."""
        powers = u ** np.arange(self.slices.shape[0])
        return np.einsum("i,ijk->jk", powers, self.slices)


def ordered_product(factors: np.ndarray) -> np.ndarray:
    """F_T ... F_2 F_1 for factors of shape (..., T, n, n)."""
    out = factors[..., 0, :, :]
    for i in range(1, factors.shape[-3]):
        out = factors[..., i, :, :] @ out
    return out


def holonomy_full(path: DrivingPath) -> np.ndarray:
    """Time-ordered product of exp(D_i + S_i), later intervals on the left."""
    steps = expm(path.deterministic_increments + path.stochastic_increments)
    return ordered_product(steps)


def graded_holonomy_array(det: np.ndarray | None, stoch: np.ndarray, R: int) -> np.ndarray:
    """Batched slices Z(0..R): det/stoch shaped (..., T, n, n); returns (..., R+1, n, n)."""
    stoch = np.asarray(stoch, dtype=complex)
    if R < 0:
        raise ValidationError("stochastic order must be nonnegative")
    n = stoch.shape[-1]
    T = stoch.shape[-3]
    batch = stoch.shape[:-3]
    out = graded_identity(batch, R, n)
    for i in range(T):
        s_i = stoch[..., i, :, :]
        d_i = np.zeros_like(s_i) if det is None else np.broadcast_to(det[..., i, :, :], s_i.shape)
        out = graded_mul(graded_exp(d_i, s_i, R), out)
    return out


def tail_bound(path: DrivingPath, R: int) -> float:
    """sum_{r>R} V^r / r! with V the summed total variation of both streams.

    Upper bound (in the entrywise l1 norm) on the slice mass sum_{i>R} Z(i).
    """
    if R < 0:
        raise ValidationError("stochastic order must be nonnegative")
    vd, vs = path.variations()
    return _factorial_tail(vd + vs, R)


def _factorial_tail(v, R: int):
    v = np.asarray(v, dtype=float)
    # e^v * P(R+1, v) = sum_{r>R} v^r / r!
    out = np.where(v > 0, np.exp(v) * gammainc(R + 1, np.where(v > 0, v, 1.0)), 0.0)
    return float(out) if out.ndim == 0 else out


def holonomy_graded(path: DrivingPath, R: int) -> GradedHolonomy:
    slices = graded_holonomy_array(path.deterministic_increments, path.stochastic_increments, R)
    return GradedHolonomy(slices, tail_bound(path, R))


def compositions(m: int, parts: int):
    """All tuples of ``parts`` nonnegative integers summing to m."""
    if parts == 1:
        yield (m,)
        return
    for first in range(m + 1):
        for rest in compositions(m - first, parts - 1):
            yield (first,) + rest


def wilson_slices(holonomies: list[GradedHolonomy], m: int) -> complex:
    """F^m = sum over i_1 + ... + i_s = m of prod_j Tr Z_j(i_j)."""
    if not holonomies:
        raise ValidationError("need at least one loop")
    dims = {h.slices.shape[-1] for h in holonomies}
    if len(dims) != 1:
        raise ValidationError("loops disagree in representation dimension")
    max_order = min(h.max_stochastic_order for h in holonomies)
    if m < 0 or m > max_order:
        raise ValidationError(f"order {m} exceeds the available slices (max {max_order})")
    traces = [h.traces() for h in holonomies]
    total = 0j
    for comp in compositions(m, len(traces)):
        term = 1 + 0j
        for tr, i in zip(traces, comp):
            term *= tr[i]
        total += term
    return complex(total)


def wilson_orders(trace_slices: list[np.ndarray], R: int) -> np.ndarray:
    """F^0..F^R from per-loop trace sequences of shape (..., R_j+1).

    The Cauchy product of the sequences collects exactly the compositions of
    each total order m; used by the Monte Carlo driver on sample batches.
    """
    out = np.zeros(trace_slices[0].shape[:-1] + (R + 1,), dtype=complex)
    out[..., 0] = 1.0
    for tr in trace_slices:
        new = np.zeros_like(out)
        for m in range(R + 1):
            for i in range(min(m, tr.shape[-1] - 1) + 1):
                new[..., m] += out[..., m - i] * tr[..., i]
        out = new
    return out


def minkowski_check(x: np.ndarray, q: int) -> bool:
    """Check sum_i |sum_j X_ij|^{2q} <= (sum_j (sum_i |X_ij|^{2q})^{1/2q})^{2q}."""
    x = np.abs(np.asarray(x, dtype=float))
    if x.ndim != 2:
        raise ValidationError("minkowski_check expects a matrix")
    if q < 1:
        raise ValidationError("q must be a positive integer")
    p = 2 * q
    lhs = np.sum(np.sum(x, axis=1) ** p)
    rhs = np.sum(np.sum(x**p, axis=0) ** (1.0 / p)) ** p
    return bool(lhs <= rhs * (1 + 1e-12))


def su_increments(basis_generators: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """sum_a c_a E_a for coefficient arrays of shape (..., d)."""
    return np.einsum("...a,aij->...ij", np.asarray(coeffs), basis_generators)


__all__ = [
    "DrivingPath", "GradedHolonomy", "compositions", "entry_norm", "expm", "graded_exp",
    "graded_holonomy_array", "graded_mul", "holonomy_full", "holonomy_graded",
    "minkowski_check", "ordered_product", "su_increments", "tail_bound", "wilson_orders",
    "wilson_slices",
]
