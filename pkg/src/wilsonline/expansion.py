"""Analytic side of the two-loop SU(2) expansion.

Two ledgers describe the same series.  The grouped ledger indexes terms by
n with natural parameter 1/k:

    3 exp(-iL/4k) + exp(3iL/4k) = sum_n i^n (3(-1)^n + 3^n) L^n / ((4k)^n n!).

The stochastic-order ledger indexes by m with weight k^(-m/2) and
coefficient J^m = k^(m/2) * (order-m contribution).  Only even m contribute,
with m = 2n.  Self-linking terms are set to zero throughout, following Hahn's
result that they vanish for links without self-intersections.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError
from .lie_rep import RepBasis, tensor_trace_power
from .spectral import SpectralModel

SELF_LINKING_NOTE = (
    "self-linking contributions omitted: they vanish for non-self-intersecting links (Hahn)"
)


def _check_k(k: float) -> None:
    if not k > 0:
        raise DomainError("level k must be positive")


def closed_form_su2(L: float, k: float) -> complex:
    """3 exp(-iL/4k) + exp(3iL/4k)."""
    _check_k(k)
    return 3 * cmath.exp(-1j * L / (4 * k)) + cmath.exp(3j * L / (4 * k))


def grouped_term(L: float, k: float, n: int) -> complex:
    """i^n (3(-1)^n + 3^n) L^n / ((4k)^n n!)."""
    _check_k(k)
    if n < 0:
        raise ValidationError("term index must be nonnegative")
    x = L / (4 * k)
    # (3(-1)^n + 3^n) x^n grouped as powers of -x and 3x to stay in float range
    return (1j) ** (n % 4) * (3 * (-x) ** n + (3 * x) ** n) / math.factorial(n)


@dataclass(frozen=True)
class ExpansionReport:
    k: float
    L: float
    N: int
    coefficients: list  # grouped terms n = 0..N-1
    partial_sums: list
    closed_form: complex
    remainder: complex

    def stochastic_ledger(self) -> list[dict]:
        """The same terms in the (m = 2n, k^(-m/2)) indexing, with J^m = k^(m/2) term."""
        rows = []
        for n, term in enumerate(self.coefficients):
            for m in (2 * n, 2 * n + 1):
                value = term if m == 2 * n else 0j
                rows.append({"m": m, "grouped_n": n if m == 2 * n else None,
                             "k_power": -m / 2, "term": value,
                             "J_m": value * self.k ** (m / 2)})
        return rows

    def as_dict(self) -> dict:
        def cx(z):
            return [float(z.real), float(z.imag)]
        return {
            "k": self.k, "L": self.L, "N": self.N,
            "grouped": {
                "index": "n, weight k^-n",
                "coefficients": [cx(z) for z in self.coefficients],
                "partial_sums": [cx(z) for z in self.partial_sums],
            },
            "stochastic_order": {
                "index": "m = 2n, weight k^(-m/2); odd m vanish",
                "rows": [{**r, "term": cx(r["term"]), "J_m": cx(r["J_m"])}
                         for r in self.stochastic_ledger()],
            },
            "closed_form": cx(self.closed_form),
            "remainder": cx(self.remainder),
            "note": SELF_LINKING_NOTE,
        }


def series_su2(L: float, k: float, N: int) -> ExpansionReport:
    """Grouped partial sums of the two-loop SU(2) series through n = N - 1."""
    _check_k(k)
    if N < 1:
        raise ValidationError("N must be at least 1")
    terms = [grouped_term(L, k, n) for n in range(N)]
    partial = list(np.cumsum(terms))
    closed = closed_form_su2(L, k)
    partial = [complex(z) for z in partial]
    return ExpansionReport(float(k), float(L), int(N), terms, partial, closed, closed - partial[-1])


@dataclass(frozen=True)
class Coefficient:
    value: complex  # order-m contribution (carries its k dependence through c)
    scaled: complex  # J^m = k^(m/2) * value
    odd: bool


def coefficient_jm(model: SpectralModel, c: complex, basis: RepBasis, m: int, loops: int = 2) -> Coefficient:
    """Order-m two-loop coefficient Tr((sum E (x) E)^(m/2)) c^(m/2) / (m/2)!.

    ``c`` is the cross covariance of the two rescaled loop processes at t = 1,
    e.g. covariance_rk of the two currents, or -L/(2ik) from a linking number.
    Odd m give zero and set the ``odd`` flag.
    """
    if loops != 2:
        raise ValidationError("closed-form coefficients are only provided for two loops")
    if m < 0:
        raise ValidationError("order m must be nonnegative")
    if m % 2:
        return Coefficient(0j, 0j, True)
    half = m // 2
    value = tensor_trace_power(basis, half) * complex(c) ** half / math.factorial(half)
    return Coefficient(complex(value), complex(value * model.k ** (m / 2)), False)


def linking_covariance(L: float, k: float) -> complex:
    """-(1/2ik) L, the cross covariance for linking number L."""
    _check_k(k)
    return -L / (2j * k)


@dataclass(frozen=True)
class DecayRow:
    k: float
    remainder: complex
    scaled: float


def decay_check(L: float, k_list, N: int, ledger: str = "stochastic") -> list[DecayRow]:
    """k^(N/2) |closed form - sum_{m<N} k^(-m/2) J^m| for each k.

    ``ledger="grouped"`` instead uses the grouped partial sum through
    n = N - 1 scaled by k^N.
    """
    ks = [float(k) for k in k_list]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError("k_list must be increasing")
    if N < 1:
        raise ValidationError("N must be at least 1")
    rows = []
    for k in ks:
        if ledger == "stochastic":
            terms = (N + 1) // 2  # even m < N, m = 2n
            power = N / 2
        elif ledger == "grouped":
            terms, power = N, float(N)
        else:
            raise ValidationError(f"unknown ledger {ledger!r}")
        rem = series_su2(L, k, terms).remainder
        rows.append(DecayRow(k, rem, float(abs(rem) * k**power)))
    return rows
