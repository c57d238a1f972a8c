"""Linking numbers of disjoint loops, by the Gauss integral and by crossing counts.

Sign convention: right-handed frame, and

    L(g1, g2) = 1/(4 pi) \\oint\\oint det[g1'(s), g2'(t), g1(s) - g2(t)] / |g1(s) - g2(t)|^3 ds dt.

The crossing oracle uses the matching convention: viewed from the tip of the
projection direction d, a crossing of loop strands counts +1 when
(over' x under') . d > 0.  Half the signed sum over crossings between the two
loops is the linking number.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .geometry import LoopCurve, tube_separation


@dataclass(frozen=True)
class LinkResult:
    value_gauss: float
    value_crossing: int | None
    separation: float
    grid: tuple[int, int]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d


def _pairwise_sum(a: np.ndarray) -> float:
    # fixed-shape tree reduction so the summation order never depends on threading
    a = np.asarray(a, dtype=float).ravel()
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return float(a[0]) if a.size else 0.0


def _gauss_trapezoid(loop1: LoopCurve, loop2: LoopCurve, n1: int, n2: int) -> float:
    t1, t2 = np.arange(n1) / n1, np.arange(n2) / n2
    p1, d1 = loop1.eval(t1), loop1.deriv(t1)
    p2, d2 = loop2.eval(t2), loop2.deriv(t2)
    rows = np.empty(n1)
    for i in range(n1):
        r = p1[i] - p2  # (n2, 3)
        cross = np.cross(d1[i], d2)  # g1' x g2'
        num = np.einsum("ij,ij->i", r, cross)  # det[g1', g2', r] = r . (g1' x g2')
        den = np.linalg.norm(r, axis=1) ** 3
        rows[i] = _pairwise_sum(num / den)
    return _pairwise_sum(rows) / (n1 * n2) / (4 * np.pi)


def _gauss_polygon(v1: np.ndarray, v2: np.ndarray) -> float:
    """Exact Gauss integral of two closed polygons (sum of signed solid angles)."""
    a0 = v1
    a1 = np.roll(v1, -1, axis=0)
    b0 = v2
    b1 = np.roll(v2, -1, axis=0)
    # all segment pairs
    A0, A1 = a0[:, None, :], a1[:, None, :]
    B0, B1 = b0[None, :, :], b1[None, :, :]
    r1 = B0 - A0
    r2 = B0 - A1
    r3 = B1 - A1
    r4 = B1 - A0

    def unit(x):
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    n1 = unit(np.cross(r1, r2))
    n2 = unit(np.cross(r2, r3))
    n3 = unit(np.cross(r3, r4))
    n4 = unit(np.cross(r4, r1))

    def asin_dot(x, y):
        return np.arcsin(np.clip(np.sum(x * y, axis=-1), -1.0, 1.0))

    omega = asin_dot(n1, n2) + asin_dot(n2, n3) + asin_dot(n3, n4) + asin_dot(n4, n1)
    sign = np.sign(np.sum(np.cross(B1 - B0, A1 - A0) * r1, axis=-1))
    return _pairwise_sum(omega * sign) / (4 * np.pi)


def linking_gauss(loop1: LoopCurve, loop2: LoopCurve, grid: int | None = None) -> float:
    """Gauss linking integral; periodic trapezoid for Fourier loops, exact for polygons."""
    sep = tube_separation(loop1, loop2, grid=min(grid or 256, 512))
    if sep.intersecting:
        raise DomainError(
            f"loops intersect (separation below 1e-9 near t=({sep.argmin[0]:.6f}, {sep.argmin[1]:.6f}));"
            " the linking number is undefined"
        )
    if loop1.form == "polyline" and loop2.form == "polyline":
        return _gauss_polygon(loop1.polyline_vertices, loop2.polyline_vertices)
    n1 = int(grid or loop1.samples_hint)
    n2 = int(grid or loop2.samples_hint)
    return _gauss_trapezoid(loop1, loop2, n1, n2)


def _plane_basis(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(d[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return e1, e2


class _Degenerate(Exception):
    pass


def _crossing_sum(v1: np.ndarray, v2: np.ndarray, d: np.ndarray, tol: float = 1e-9) -> int:
    e1, e2 = _plane_basis(d)
    a0 = v1
    a1 = np.roll(v1, -1, axis=0)
    b0 = v2
    b1 = np.roll(v2, -1, axis=0)
    P = np.stack([a0 @ e1, a0 @ e2], axis=-1)
    Pd = np.stack([(a1 - a0) @ e1, (a1 - a0) @ e2], axis=-1)
    Q = np.stack([b0 @ e1, b0 @ e2], axis=-1)
    Qd = np.stack([(b1 - b0) @ e1, (b1 - b0) @ e2], axis=-1)

    # solve P + s Pd = Q + u Qd for every segment pair
    den = Pd[:, None, 0] * Qd[None, :, 1] - Pd[:, None, 1] * Qd[None, :, 0]
    diff = Q[None, :, :] - P[:, None, :]
    scale = np.linalg.norm(Pd, axis=1)[:, None] * np.linalg.norm(Qd, axis=1)[None, :]
    near_parallel = np.abs(den) <= tol * scale
    safe = np.where(near_parallel, 1.0, den)
    s = (diff[..., 0] * Qd[None, :, 1] - diff[..., 1] * Qd[None, :, 0]) / safe
    u = (diff[..., 0] * Pd[:, None, 1] - diff[..., 1] * Pd[:, None, 0]) / safe

    inside = (s > -tol) & (s < 1 + tol) & (u > -tol) & (u < 1 + tol)
    if np.any(inside & near_parallel):
        raise _Degenerate("parallel overlap in projection")
    hits = inside & ~near_parallel
    edge = (np.abs(s) < tol) | (np.abs(s - 1) < tol) | (np.abs(u) < tol) | (np.abs(u - 1) < tol)
    if np.any(hits & edge):
        raise _Degenerate("crossing at a vertex")

    ii, jj = np.nonzero(hits)
    if ii.size == 0:
        return 0
    da = (a1 - a0)[ii]
    db = (b1 - b0)[jj]
    h1 = (a0[ii] + s[ii, jj, None] * da) @ d
    h2 = (b0[jj] + u[ii, jj, None] * db) @ d
    if np.any(np.abs(h1 - h2) < tol):
        raise _Degenerate("strands meet in space")
    over = np.where((h1 > h2)[:, None], da, db)
    under = np.where((h1 > h2)[:, None], db, da)
    signs = np.sign(np.einsum("ij,j->i", np.cross(over, under), d))
    return int(np.sum(signs))


def linking_crossing(loop1: LoopCurve, loop2: LoopCurve, direction=(0.0, 0.0, 1.0),
                     retries: int = 16, seed: int = 0) -> int:
    """Exact integer linking number of two polygons from a generic planar projection."""
    if loop1.form != "polyline" or loop2.form != "polyline":
        raise ValidationError("the crossing oracle needs polyline loops")
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    rng = np.random.default_rng(seed)
    for _ in range(retries + 1):
        try:
            total = _crossing_sum(loop1.polyline_vertices, loop2.polyline_vertices, d)
        except _Degenerate:
            d = d + 0.05 * rng.standard_normal(3)
            d /= np.linalg.norm(d)
            continue
        if total % 2:
            raise ArithmeticError("odd crossing sum between two closed loops")
        return total // 2
    raise DomainError(f"projection stayed degenerate after {retries} random perturbations")


def link(loop1: LoopCurve, loop2: LoopCurve, grid: int = 512) -> LinkResult:
    sep = tube_separation(loop1, loop2, grid=min(grid, 512))
    if sep.intersecting:
        raise DomainError("loops intersect; the linking number is undefined")
    gauss = linking_gauss(loop1, loop2, grid)
    crossing = None
    if loop1.form == "polyline" and loop2.form == "polyline":
        crossing = linking_crossing(loop1, loop2)
    return LinkResult(gauss, crossing, sep.value, (grid, grid))
