"""Truncated spectral model of the twisted Dirac operator Q and the rescaling R_k.

Coefficient conventions (used by every formula in the package):

* a current u is stored by its L2 coefficients u_j = (u, e_j)_+ in the
  eigenbasis e_j of Q, Q e_j = lambda_j e_j;
* its dual lift is u~ = (I + Q^2)^-p u, coefficients (1 + lambda_j^2)^-p u_j;
* the Hilbert space H_p has inner product (u, v)_p = sum_j (1 + lambda_j^2)^p u_j v_j
  and orthonormal basis h_j = (1 + lambda_j^2)^(-p/2) e_j;
* a Gaussian sample x is stored by its coordinates g_j = <x, h_j>, iid N(0, 1),
  so <x, u~> = sum_j g_j (1 + lambda_j^2)^(p/2) u~_j and
  E[<x, a><x, b>] = (a, b)_p.

R_k acts diagonally on the e_j with complex factors r_j.  All complex square
roots take the branch -pi/2 < arg sqrt(z) < pi/2 (numpy's principal root).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, InvariantViolation, ValidationError

COVARIANCE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralModel:
    eigenvalues: np.ndarray
    p: int = 1
    k: float = 1.0
    n: float = math.inf

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        if lam.size == 0:
            raise ValidationError("spectral model needs at least one eigenvalue")
        if np.any(lam == 0) or not np.all(np.isfinite(lam)):
            raise ValidationError("eigenvalues must be finite and nonzero")
        if int(self.p) != self.p or self.p < 0:
            raise ValidationError("weight p must be a nonnegative integer")
        if not self.k > 0:
            raise DomainError("level k must be positive")
        if not self.n > 0:
            raise DomainError("regulator n must be positive or infinite")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "p", int(self.p))

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def rho(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))

    @property
    def weight(self) -> np.ndarray:
        """(1 + lambda_j^2)^p."""
        return (1.0 + self.eigenvalues**2) ** self.p

    @property
    def damped(self) -> np.ndarray:
        """(1 + lambda_j^2)^-p lambda_j, the diagonal of the CS quadratic form."""
        return self.eigenvalues / self.weight

    def summability(self) -> float:
        """sum_j (1 + lambda_j^2)^-p |lambda_j| over the truncation."""
        return float(np.sum(np.abs(self.damped)))

    def with_(self, **kw) -> "SpectralModel":
        fields = dict(eigenvalues=self.eigenvalues, p=self.p, k=self.k, n=self.n)
        fields.update(kw)
        return SpectralModel(**fields)


def symmetric_spectrum(J: int, p: int = 1, k: float = 1.0, n: float = math.inf) -> SpectralModel:
    """lambda = +-1, +-2, ..., +-J/2 (J even)."""
    if J <= 0 or J % 2:
        raise ValidationError("symmetric spectrum needs a positive even size")
    half = np.arange(1, J // 2 + 1, dtype=float)
    return SpectralModel(np.ravel(np.column_stack([half, -half])), p, k, n)


def single_sign_spectrum(J: int, p: int = 1, k: float = 1.0, n: float = math.inf) -> SpectralModel:
    """lambda = 1, 2, ..., J."""
    if J <= 0:
        raise ValidationError("spectrum size must be positive")
    return SpectralModel(np.arange(1, J + 1, dtype=float), p, k, n)


@dataclass(frozen=True, eq=False)
class CurrentVector:
    coeffs: np.ndarray
    lifted: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __len__(self) -> int:
        return self.coeffs.size

    def scaled(self, a: float) -> "CurrentVector":
        return CurrentVector(a * self.coeffs, self.lifted)


def _check_len(*vecs, model: SpectralModel | None = None) -> None:
    sizes = {len(v) for v in vecs}
    if model is not None:
        sizes.add(model.size)
    if len(sizes) != 1:
        raise ValidationError(f"coefficient length mismatch: {sorted(sizes)}")


def inner_p(u: CurrentVector, v: CurrentVector, model: SpectralModel) -> float:
    """(u, v)_p = sum_j (1 + lambda_j^2)^p u_j v_j."""
    _check_len(u, v, model=model)
    return float(np.sum(model.weight * u.coeffs * v.coeffs))


def dual_lift(u: CurrentVector, model: SpectralModel) -> CurrentVector:
    """u~ = (I + Q^2)^-p u, so that (u~, v)_p equals the L2 pairing of u and v."""
    if u.lifted:
        raise ValidationError("vector is already lifted")
    _check_len(u, model=model)
    return CurrentVector(u.coeffs / model.weight, lifted=True)


def rk_coefficients(model: SpectralModel) -> np.ndarray:
    """Diagonal of R_{n,k} (finite n) or of R_k (n = inf)."""
    if not model.k > 0:
        raise DomainError("level k must be positive")
    a = model.damped
    if math.isinf(model.n):
        return 1.0 / np.sqrt(-2j * model.k * a)
    return math.sqrt(model.n) / np.sqrt(1.0 - 2j * model.n * model.k * a)


def z_normalizer(model: SpectralModel) -> complex:
    """Fresnel normalizer prod_j (1 - 2 i n k (1 + lambda_j^2)^-p lambda_j)^(-1/2)."""
    if math.isinf(model.n):
        raise DomainError("the normalizer is only defined for a finite regulator n")
    factors = 1.0 / np.sqrt(1.0 - 2j * model.n * model.k * model.damped)
    return complex(np.prod(factors))


def fresnel_quadrature(omega: float, cutoff: float = 12.0, nodes: int = 24) -> complex:
    """(2 pi)^-1/2 int exp(i omega y^2) exp(-y^2/2) dy by panelled Gauss-Legendre.

    Panels end at the zeros y = sqrt(m pi / |omega|) of the oscillating phase,
    so each panel carries at most half an oscillation.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    m_max = int(np.ceil(abs(omega) * cutoff**2 / np.pi))
    edges = np.sqrt(np.arange(m_max + 1) * np.pi / abs(omega)) if omega else np.array([0.0])
    edges = np.union1d(edges[edges < cutoff], np.linspace(0.0, cutoff, 65))
    a, b = edges[:-1, None], edges[1:, None]
    y = (b - a) / 2 * x[None, :] + (a + b) / 2
    vals = np.exp(1j * omega * y**2 - y**2 / 2)
    total = np.sum((b - a) / 2 * w[None, :] * vals)
    return complex(2 * total / math.sqrt(2 * math.pi))


def cs_form(x_coords, model: SpectralModel) -> float:
    """sum_j (1 + lambda_j^2)^-p lambda_j <x, h_j>^2."""
    g = np.asarray(x_coords, dtype=float)
    if g.shape[-1] != model.size:
        raise ValidationError("coordinate length does not match the spectrum")
    return np.sum(model.damped * g**2, axis=-1) if g.ndim > 1 else float(np.sum(model.damped * g**2))


@dataclass(frozen=True)
class Covariance:
    value: complex
    via_rk: complex
    closed_form: complex


def covariance_rk(u: CurrentVector, v: CurrentVector, model: SpectralModel,
                  tol: float = COVARIANCE_TOL) -> complex:
    """E[<x, R_k u~><x, R_k v~>] for unlifted u, v; equals -(1/2ik)(u, Q^-1 v)_+.

    Both routes are evaluated; disagreement beyond ``tol`` (relative to the
    magnitude of the terms) raises InvariantViolation.
    """
    return covariance_routes(u, v, model, tol).value


def covariance_routes(u: CurrentVector, v: CurrentVector, model: SpectralModel,
                      tol: float = COVARIANCE_TOL) -> Covariance:
    if not math.isinf(model.n):
        raise DomainError("covariance_rk needs the n = inf model")
    if u.lifted or v.lifted:
        raise ValidationError("covariance_rk takes unlifted (L2) coefficient vectors")
    _check_len(u, v, model=model)
    r = rk_coefficients(model)
    terms_rk = r**2 / model.weight * u.coeffs * v.coeffs
    via_rk = complex(np.sum(terms_rk))
    closed = complex(-np.sum(u.coeffs * v.coeffs / model.eigenvalues) / (2j * model.k))
    scale = max(1.0, float(np.sum(np.abs(terms_rk))))
    if abs(via_rk - closed) > tol * scale:
        raise InvariantViolation(
            f"covariance routes disagree: {via_rk!r} vs {closed!r} (|diff|={abs(via_rk - closed):.3e})"
        )
    return Covariance(closed, via_rk, closed)


def pairing_inverse_q(u: CurrentVector, v: CurrentVector, model: SpectralModel) -> float:
    """(u, Q^-1 v)_+ = sum_j u_j v_j / lambda_j."""
    _check_len(u, v, model=model)
    return float(np.sum(u.coeffs * v.coeffs / model.eigenvalues))


@dataclass(frozen=True, eq=False)
class CurrentPath:
    """Time-indexed coefficient vectors of a loop current for one Lie index."""

    times: np.ndarray
    coeffs: np.ndarray  # (T+1, J)
    lifted: bool = False
    lie_index: int | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        c = np.asarray(self.coeffs, dtype=float)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0):
            raise ValidationError("current path needs a strictly increasing time grid")
        if c.ndim != 2 or c.shape[0] != len(t):
            raise ValidationError(f"coefficients must have shape ({len(t)}, J), got {c.shape}")
        t.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "coeffs", c)

    @property
    def size(self) -> int:
        return self.coeffs.shape[1]

    def at(self, i: int) -> CurrentVector:
        return CurrentVector(self.coeffs[i], self.lifted)

    def lifted_coeffs(self, model: SpectralModel) -> np.ndarray:
        if self.size != model.size:
            raise ValidationError(f"current has {self.size} modes, spectrum has {model.size}")
        return self.coeffs if self.lifted else self.coeffs / model.weight

    def lipschitz(self, model: SpectralModel) -> float:
        """max over grid intervals of ||u~(t_{i+1}) - u~(t_i)||_p / (t_{i+1} - t_i)."""
        c = self.lifted_coeffs(model)
        dif = np.diff(c, axis=0)
        norms = np.sqrt(np.sum(model.weight * dif**2, axis=1))
        return float(np.max(norms / np.diff(self.times)))

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)


def zero_current(times, J: int) -> CurrentPath:
    t = np.asarray(times, dtype=float)
    return CurrentPath(t, np.zeros((len(t), J)))


def linked_pair_model(L: float, k: float, p: int = 1, mu: float = 1.0, grid: int = 16,
                      profile: str = "smooth") -> tuple[SpectralModel, CurrentPath, CurrentPath]:
    """Two-mode synthetic model (lambda = +mu, -mu) with two loop currents.

    Loop 1 loads both modes equally, loop 2 with opposite signs, so each
    loop's pairing with itself through Q^-1 vanishes identically in t (no
    self-linking contribution) while (u1(1), Q^-1 u2(1))_+ = L.
    """
    if mu <= 0:
        raise ValidationError("mu must be positive")
    model = SpectralModel(np.array([mu, -mu]), p=p, k=k)
    t = np.linspace(0.0, 1.0, grid + 1)
    if profile == "smooth":
        shape = np.sin(np.pi * t / 2) ** 2
    elif profile == "linear":
        shape = t
    else:
        raise ValidationError(f"unknown profile {profile!r}")
    amp = math.sqrt(abs(L) * mu / 2)
    sign = 1.0 if L >= 0 else -1.0
    u1 = np.outer(shape, [amp, amp])
    u2 = np.outer(shape, [sign * amp, -sign * amp])
    return model, CurrentPath(t, u1), CurrentPath(t, u2)


# -- file formats --------------------------------------------------------------

def model_from_dict(doc: dict) -> SpectralModel:
    try:
        lam = doc["eigenvalues"]
        p = doc.get("p", 1)
        k = float(doc.get("k", 1.0))
        n_raw = doc.get("n", "inf")
    except (TypeError, AttributeError) as exc:
        raise ValidationError(f"spectrum document malformed: {exc}") from exc
    except KeyError as exc:
        raise ValidationError(f"spectrum document missing field: {exc}") from exc
    n = math.inf if n_raw in ("inf", "infinity", None) else float(n_raw)
    return SpectralModel(np.asarray(lam, dtype=float), p=p, k=k, n=n)


def model_to_dict(model: SpectralModel) -> dict:
    return {"eigenvalues": model.eigenvalues.tolist(), "p": model.p, "k": model.k,
            "n": "inf" if math.isinf(model.n) else model.n}


def current_from_dict(doc: dict) -> CurrentPath:
    try:
        return CurrentPath(np.asarray(doc["times"], dtype=float),
                           np.asarray(doc["coeffs"], dtype=float),
                           lifted=bool(doc.get("lifted", False)),
                           lie_index=doc.get("lie_index"))
    except KeyError as exc:
        raise ValidationError(f"current document missing field: {exc}") from exc


def current_to_dict(path: CurrentPath) -> dict:
    return {"times": path.times.tolist(), "coeffs": path.coeffs.tolist(), "lifted": path.lifted}


def _load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from exc


def load_model(path: str | Path) -> SpectralModel:
    return model_from_dict(_load_json(path))


def load_current(path: str | Path) -> CurrentPath:
    return current_from_dict(_load_json(path))
