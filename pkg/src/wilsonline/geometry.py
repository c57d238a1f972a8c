"""Closed loops in R^3, line integrals of 1-forms, and mollified loop currents.

Loops are parametrized over [0, 1] and closed.  Two forms are supported:

* ``fourier``: each coordinate is a0 + sum_m (a_m cos 2 pi m t + b_m sin 2 pi m t);
* ``polyline``: vertices joined by straight segments with implicit closure,
  parametrized by normalized arc length.

A 1-form A = A_1 dx + A_2 dy + A_3 dz is a vectorized callable mapping an
(N, 3) array of points to an (N, 3) array of components.

The mollified pairing replaces A by its convolution with a scaled radial bump
phi_eps(x) = eps^-3 phi(x / eps), phi(x) proportional to (1 - |x|^2)^3 on the
unit ball.  As eps -> 0 the mollified pairing converges to the plain line
integral for every smooth form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, ValidationError

FormFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SmoothOneForm:
    evaluator: FormFn
    label: str = "form"

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(self.evaluator(pts), dtype=float)
        return np.broadcast_to(vals, pts.shape)


def constant_form(c) -> SmoothOneForm:
    c = np.asarray(c, dtype=float)
    return SmoothOneForm(lambda p: np.broadcast_to(c, p.shape).copy(), label=f"const{c.tolist()}")


def exact_form(grad: FormFn, label: str = "df") -> SmoothOneForm:
    """df given the gradient of f."""
    return SmoothOneForm(grad, label=label)


def winding_form() -> SmoothOneForm:
    """(-y dx + x dy) / (x^2 + y^2); closed but not exact away from the z-axis."""

    def ev(p):
        x, y = p[:, 0], p[:, 1]
        r2 = x * x + y * y
        return np.stack([-y / r2, x / r2, np.zeros_like(x)], axis=1)

    return SmoothOneForm(ev, label="winding")


@dataclass(frozen=True)
class LoopCurve:
    form: str
    fourier_coeffs: np.ndarray | None = None  # shape (3, M+1, 2): (cos, sin) per harmonic
    polyline_vertices: np.ndarray | None = None  # shape (V, 3), closure implicit
    samples_hint: int = 512
    _cum: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.samples_hint <= 0:
            raise ValidationError("samples_hint must be positive")
        if self.form == "fourier":
            c = np.asarray(self.fourier_coeffs, dtype=float)
            if c.ndim != 3 or c.shape[0] != 3 or c.shape[2] != 2 or c.shape[1] < 1:
                raise ValidationError(f"fourier coefficients must have shape (3, M+1, 2), got {c.shape}")
            c = c.copy()
            c[:, 0, 1] = 0.0
            c.setflags(write=False)
            object.__setattr__(self, "fourier_coeffs", c)
        elif self.form == "polyline":
            v = np.asarray(self.polyline_vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
                raise ValidationError("a polyline needs at least 3 vertices in R^3")
            closed = np.vstack([v, v[:1]])
            seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
            if np.any(seg <= 0):
                raise ValidationError("polyline has a zero-length segment")
            cum = np.concatenate([[0.0], np.cumsum(seg)])
            v.setflags(write=False)
            object.__setattr__(self, "polyline_vertices", v)
            object.__setattr__(self, "_cum", cum / cum[-1])
        else:
            raise ValidationError(f"unknown loop form {self.form!r}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def fourier(cls, x, y, z, samples_hint: int = 512) -> "LoopCurve":
        rows = [np.asarray(c, dtype=float).reshape(-1, 2) for c in (x, y, z)]
        m = max(len(r) for r in rows)
        coeffs = np.zeros((3, m, 2))
        for i, r in enumerate(rows):
            coeffs[i, : len(r)] = r
        return cls("fourier", fourier_coeffs=coeffs, samples_hint=samples_hint)

    @classmethod
    def polyline(cls, vertices, samples_hint: int = 512) -> "LoopCurve":
        return cls("polyline", polyline_vertices=np.asarray(vertices, dtype=float),
                   samples_hint=samples_hint)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], max_harmonic: int,
                      samples_hint: int = 512) -> "LoopCurve":
        """Fourier loop from a periodic callable t -> (N, 3) points.

        Exact when fn is a trigonometric polynomial of degree <= max_harmonic.
        """
        n = 4 * max_harmonic + 4
        t = np.arange(n) / n
        pts = np.asarray(fn(t), dtype=float)
        spec = np.fft.rfft(pts, axis=0) / n
        coeffs = np.zeros((3, max_harmonic + 1, 2))
        coeffs[:, 0, 0] = spec[0].real
        for m in range(1, max_harmonic + 1):
            coeffs[:, m, 0] = 2 * spec[m].real
            coeffs[:, m, 1] = -2 * spec[m].imag
        coeffs[np.abs(coeffs) < 1e-14] = 0.0
        return cls("fourier", fourier_coeffs=coeffs, samples_hint=samples_hint)

    # -- evaluation -------------------------------------------------------

    def _check_t(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > 1):
            raise DomainError("loop parameter must lie in [0, 1]")
        return t

    def eval(self, t) -> np.ndarray:
        t = self._check_t(t)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if self.form == "fourier":
            out = self._fourier_eval(t, deriv=False)
        else:
            out = self._poly_eval(t, deriv=False)
        return out[0] if scalar else out

    def deriv(self, t) -> np.ndarray:
        t = self._check_t(t)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if self.form == "fourier":
            out = self._fourier_eval(t, deriv=True)
        else:
            out = self._poly_eval(t, deriv=True)
        return out[0] if scalar else out

    def _fourier_eval(self, t: np.ndarray, deriv: bool) -> np.ndarray:
        c = self.fourier_coeffs
        m = np.arange(c.shape[1])
        ang = 2 * np.pi * np.outer(t, m)
        cos, sin = np.cos(ang), np.sin(ang)
        if deriv:
            w = 2 * np.pi * m
            return (-sin * w) @ c[:, :, 0].T + (cos * w) @ c[:, :, 1].T
        return cos @ c[:, :, 0].T + sin @ c[:, :, 1].T

    def _poly_eval(self, t: np.ndarray, deriv: bool) -> np.ndarray:
        v = self.polyline_vertices
        closed = np.vstack([v, v[:1]])
        cum = self._cum
        nseg = len(v)
        # right-sided segment choice; t = 1 falls on the last segment
        idx = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, nseg - 1)
        a, b = closed[idx], closed[idx + 1]
        span = (cum[idx + 1] - cum[idx])[:, None]
        if deriv:
            return (b - a) / span
        frac = ((t - cum[idx])[:, None]) / span
        return a + frac * (b - a)

    def grid(self, samples: int | None = None) -> np.ndarray:
        """Uniform periodic grid t_i = i / N, i < N."""
        n = samples or self.samples_hint
        return np.arange(n) / n

    # -- transformations --------------------------------------------------

    def reversed(self) -> "LoopCurve":
        """Same image, opposite orientation (t -> 1 - t)."""
        if self.form == "fourier":
            c = self.fourier_coeffs.copy()
            c[:, :, 1] *= -1
            return LoopCurve("fourier", fourier_coeffs=c, samples_hint=self.samples_hint)
        v = self.polyline_vertices
        return LoopCurve.polyline(np.vstack([v[:1], v[:0:-1]]), self.samples_hint)

    def transformed(self, rotation, translation) -> "LoopCurve":
        rot = np.asarray(rotation, dtype=float)
        tr = np.asarray(translation, dtype=float)
        if self.form == "fourier":
            c = np.einsum("ij,jmk->imk", rot, self.fourier_coeffs)
            c[:, 0, 0] += tr
            return LoopCurve("fourier", fourier_coeffs=c, samples_hint=self.samples_hint)
        return LoopCurve.polyline(self.polyline_vertices @ rot.T + tr, self.samples_hint)

    def repeated(self, times: int = 2) -> "LoopCurve":
        """Traverse the loop ``times`` times within [0, 1]."""
        if self.form == "fourier":
            c = self.fourier_coeffs
            m = c.shape[1]
            out = np.zeros((3, (m - 1) * times + 1, 2))
            out[:, 0] = c[:, 0]
            out[:, times::times] = c[:, 1:]
            return LoopCurve("fourier", fourier_coeffs=out, samples_hint=self.samples_hint * times)
        return LoopCurve.polyline(np.vstack([self.polyline_vertices] * times), self.samples_hint)

    def to_polyline(self, segments: int) -> "LoopCurve":
        return LoopCurve.polyline(self.eval(np.arange(segments) / segments), self.samples_hint)

    def min_speed(self, samples: int | None = None) -> float:
        return float(np.min(np.linalg.norm(self.deriv(self.grid(samples)), axis=1)))


# -- file format -----------------------------------------------------------

def loop_from_dict(doc: dict) -> LoopCurve:
    try:
        form = doc["form"]
        if form == "fourier":
            co = doc["coeffs"]
            loop = LoopCurve.fourier(co["x"], co["y"], co["z"], samples_hint=int(doc.get("samples", 512)))
            if loop.min_speed() <= 0:
                raise ValidationError("fourier loop is degenerate (zero speed on the grid)")
            return loop
        if form == "polyline":
            return LoopCurve.polyline(doc["vertices"], samples_hint=int(doc.get("samples", 512)))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"loop document missing field: {exc}") from exc
    raise ValidationError(f"unknown loop form {doc.get('form')!r}")


def loop_to_dict(loop: LoopCurve) -> dict:
    if loop.form == "fourier":
        c = loop.fourier_coeffs
        return {"form": "fourier",
                "coeffs": {ax: c[i].tolist() for i, ax in enumerate("xyz")}}
    return {"form": "polyline", "vertices": loop.polyline_vertices.tolist()}


def load_loop(path: str | Path) -> LoopCurve:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc
    return loop_from_dict(doc)


# -- preset loops ------------------------------------------------------------

def circle(center=(0.0, 0.0, 0.0), radius: float = 1.0, plane: str = "xy",
           samples_hint: int = 512) -> LoopCurve:
    """Circle traversed once counterclockwise in the given coordinate plane."""
    axes = {"xy": (0, 1), "xz": (0, 2), "yz": (1, 2)}[plane]
    rows = [[[c, 0.0]] for c in center]
    rows[axes[0]] = [[center[axes[0]], 0.0], [radius, 0.0]]
    rows[axes[1]] = [[center[axes[1]], 0.0], [0.0, radius]]
    return LoopCurve.fourier(*rows, samples_hint=samples_hint)


def hopf_pair(samples_hint: int = 512) -> tuple[LoopCurve, LoopCurve]:
    """Unit circle in the xy-plane and unit circle in the xz-plane centred at (1, 0, 0)."""
    return (circle(samples_hint=samples_hint),
            circle(center=(1.0, 0.0, 0.0), plane="xz", samples_hint=samples_hint))


def torus_link_component(q: int, phase: float, major: float = 2.0, minor: float = 1.0,
                         samples_hint: int = 512) -> LoopCurve:
    """Curve winding once along the core and q times around the tube of a torus."""

    def fn(t):
        phi = 2 * np.pi * t
        psi = 2 * np.pi * q * t + phase
        rho = major + minor * np.cos(psi)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), minor * np.sin(psi)], axis=1)

    return LoopCurve.from_function(fn, max_harmonic=q + 1, samples_hint=samples_hint)


def torus_link_2_2q(q: int = 2, samples_hint: int = 512) -> tuple[LoopCurve, LoopCurve]:
    """The two components of the (2, 2q) torus link; linking number q in magnitude."""
    return (torus_link_component(q, 0.0, samples_hint=samples_hint),
            torus_link_component(q, np.pi, samples_hint=samples_hint))


# -- quadrature -------------------------------------------------------------

def _simpson_weights(npts: int, h: float) -> np.ndarray:
    """Composite Simpson weights; an odd panel count closes with the 3/8 rule."""
    w = np.zeros(npts)
    intervals = npts - 1
    if intervals == 1:
        w[:] = h / 2
        return w
    n_simp = intervals if intervals % 2 == 0 else intervals - 3
    if n_simp > 0:
        w[0:n_simp + 1:2] += 2 * h / 3
        w[1:n_simp:2] += 4 * h / 3
        w[0] -= h / 3
        w[n_simp] -= h / 3
    if intervals % 2 == 1:
        s = n_simp
        w[s:s + 4] += np.array([3, 9, 9, 3]) * h / 8
    return w


def _check_interval(s: float, t: float) -> None:
    if s > t:
        raise DomainError("line integral needs s <= t")
    if s < 0 or t > 1:
        raise DomainError("loop parameter must lie in [0, 1]")


def _tau_nodes(loop: LoopCurve, s: float, t: float, grid: int | None):
    npts = max(int(grid or loop.samples_hint), 4)
    tau = np.linspace(s, t, npts)
    h = (t - s) / (npts - 1)
    return tau, _simpson_weights(npts, h)


def line_integral(loop: LoopCurve, form: SmoothOneForm, s: float = 0.0, t: float = 1.0,
                  grid: int | None = None) -> float:
    """Composite-Simpson approximation of int_s^t A(gamma(tau)) . gamma'(tau) dtau."""
    _check_interval(s, t)
    if t == s:
        return 0.0
    tau, w = _tau_nodes(loop, s, t, grid)
    integrand = np.sum(form(loop.eval(tau)) * loop.deriv(tau), axis=1)
    return float(w @ integrand)


@dataclass(frozen=True)
class Mollifier:
    """Radial bump (1 - |x|^2)^3 on the unit ball scaled to support radius epsilon."""

    epsilon: float
    quadrature_order: int = 8
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    # integral of (1 - r^2)^3 over the unit ball
    MASS = 64 * np.pi / 315

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError("mollifier epsilon must be positive")
        if self.quadrature_order <= 0:
            raise ValidationError("quadrature order must be positive")
        q = self.quadrature_order
        # Gauss-Legendre in r and cos(theta); uniform in the periodic azimuth
        xr, wr = np.polynomial.legendre.leggauss(q)
        r = (xr + 1) / 2
        wr = wr / 2
        mu, wmu = np.polynomial.legendre.leggauss(q)
        nphi = 2 * q
        phi = 2 * np.pi * np.arange(nphi) / nphi
        wphi = np.full(nphi, 2 * np.pi / nphi)
        R, MU, PHI = np.meshgrid(r, mu, phi, indexing="ij")
        W = np.einsum("i,j,k->ijk", wr, wmu, wphi)
        sin_t = np.sqrt(1 - MU**2)
        pts = np.stack([R * sin_t * np.cos(PHI), R * sin_t * np.sin(PHI), R * MU], axis=-1)
        dens = (1 - R**2) ** 3 / self.MASS
        object.__setattr__(self, "nodes", pts.reshape(-1, 3))
        object.__setattr__(self, "weights", (W * R**2 * dens).reshape(-1))

    def profile(self, x) -> np.ndarray:
        """phi_eps evaluated at points x (shape (N, 3))."""
        x = np.atleast_2d(np.asarray(x, dtype=float)) / self.epsilon
        r2 = np.sum(x * x, axis=1)
        return np.where(r2 < 1, (1 - r2) ** 3, 0.0) / self.MASS / self.epsilon**3

    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def smooth(self, form: SmoothOneForm, points: np.ndarray) -> np.ndarray:
        """Convolution (A_i * phi_eps)(p) for each point p; shape (N, 3)."""
        pts = np.atleast_2d(points)
        shifted = pts[:, None, :] + self.epsilon * self.nodes[None, :, :]
        vals = form(shifted.reshape(-1, 3)).reshape(len(pts), len(self.nodes), 3)
        return np.einsum("nqi,q->ni", vals, self.weights)


def mollified_line_integral(loop: LoopCurve, form: SmoothOneForm, moll: Mollifier,
                            s: float = 0.0, t: float = 1.0, grid: int | None = None) -> float:
    """Pairing of the mollified current R_eps gamma[s, t] with a smooth 1-form."""
    _check_interval(s, t)
    if t == s:
        return 0.0
    tau, w = _tau_nodes(loop, s, t, grid)
    smoothed = moll.smooth(form, loop.eval(tau))
    return float(w @ np.sum(smoothed * loop.deriv(tau), axis=1))


def partial_pairings(loop: LoopCurve, form: SmoothOneForm, moll: Mollifier | None = None,
                     grid: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Grid t_i and the partial pairings P(t_i) = gamma[0, t_i](A) (trapezoid-cumulative)."""
    n = int(grid or loop.samples_hint)
    t = np.linspace(0.0, 1.0, n + 1)
    pts = loop.eval(t)
    vals = moll.smooth(form, pts) if moll is not None else form(pts)
    integrand = np.sum(vals * loop.deriv(t), axis=1)
    h = 1.0 / n
    p = np.concatenate([[0.0], np.cumsum((integrand[1:] + integrand[:-1]) * h / 2)])
    return t, p


def lipschitz_constant(loop: LoopCurve, form: SmoothOneForm, moll: Mollifier | None = None,
                       grid: int | None = None) -> float:
    """Max grid difference quotient of t -> gamma[0, t](A) (or its mollified version)."""
    t, p = partial_pairings(loop, form, moll, grid)
    return float(np.max(np.abs(np.diff(p)) / np.diff(t)))


@dataclass(frozen=True)
class Separation:
    value: float
    intersecting: bool
    argmin: tuple[float, float]


def tube_separation(loop1: LoopCurve, loop2: LoopCurve, grid: int | None = None,
                    refine: bool = True) -> Separation:
    """Minimum distance between two loops; epsilon-tubes are disjoint when eps < value / 2."""
    n1 = int(grid or loop1.samples_hint)
    n2 = int(grid or loop2.samples_hint)
    t1, t2 = np.arange(n1) / n1, np.arange(n2) / n2
    p1, p2 = loop1.eval(t1), loop2.eval(t2)
    d2 = (np.sum(p1**2, axis=1)[:, None] + np.sum(p2**2, axis=1)[None, :] - 2 * p1 @ p2.T)
    i, j = np.unravel_index(np.argmin(d2), d2.shape)
    best = float(np.sqrt(max(d2[i, j], 0.0)))
    arg = (float(t1[i]), float(t2[j]))
    if refine and best > 1e-9:
        def dist(x):
            a, b = np.mod(x, 1.0)
            return float(np.linalg.norm(loop1.eval(a) - loop2.eval(b)))

        res = minimize(dist, np.array(arg), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
        if res.fun < best:
            best = float(res.fun)
            arg = tuple(float(v) for v in np.mod(res.x, 1.0))
    if best < 1e-9:
        return Separation(0.0, True, arg)
    return Separation(best, False, arg)
