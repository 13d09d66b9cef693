"""Integration against dmu = sin^(n-2)(theta) cos^a(theta) dtheta on (0, pi/2).

Two rules are provided.

* Gauss-Jacobi in ``u = sin^2(theta)``.  The substitution turns ``dmu`` into
  ``0.5 u^((n-3)/2) (1-u)^((a-1)/2) du``, so the endpoint singularity is
  absorbed into the weight and smooth integrands converge spectrally.
* Double-exponential (tanh-sinh) in ``theta``.  Profiles of the angular
  operator carry a ``cos^(1-a)`` component at pi/2 that is not smooth in
  ``u``; the DE rule handles such algebraic endpoint behaviour with
  near-exponential convergence.  Nodes store their distance to pi/2
  separately so that nothing is lost to cancellation near the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import expit

from .errors import PreconditionError, QuadratureError
from .params import check_n_a

HALF_PI = 0.5 * math.pi

Integrand = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, float]


def gauss_jacobi(order: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``(1-x)^alpha (1+x)^beta`` on ``[-1, 1]``.

    Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
    three-term recurrence.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if alpha <= -1.0 or beta <= -1.0:
        raise ValueError("Jacobi exponents must exceed -1")
    k = np.arange(order, dtype=float)
    ab = alpha + beta
    t = 2.0 * k + ab
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (beta**2 - alpha**2) / (t * (t + 2.0))
    if abs(ab) < 1e-14 or not math.isfinite(diag[0]):
        diag[0] = (beta - alpha) / (ab + 2.0)
    off = np.empty(max(order - 1, 0))
    if order > 1:
        off[0] = math.sqrt(4.0 * (1 + alpha) * (1 + beta) / ((2 + ab) ** 2 * (3 + ab)))
        kk = k[2:]
        tt = 2.0 * kk + ab
        off[1:] = np.sqrt(
            4.0 * kk * (kk + alpha) * (kk + beta) * (kk + ab)
            / (tt**2 * (tt + 1.0) * (tt - 1.0))
        )
    nodes, vecs = eigh_tridiagonal(diag, off)
    log_mu0 = (
        (ab + 1.0) * math.log(2.0)
        + math.lgamma(alpha + 1.0)
        + math.lgamma(beta + 1.0)
        - math.lgamma(ab + 2.0)
    )
    weights = math.exp(log_mu0) * vecs[0, :] ** 2
    return nodes, weights


def total_mass_exact(n: int, a: float) -> float:
    """``I_{n,a} = 0.5 B((n-1)/2, (a+1)/2)``."""
    x, y = 0.5 * (n - 1), 0.5 * (a + 1)
    return 0.5 * math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


@dataclass(frozen=True, eq=False)
class WeightedMeasure:
    """Quadrature nodes for ``dmu`` with positive weights.

    ``theta`` and ``s = pi/2 - theta`` are both stored; ``s`` is computed
    directly rather than by subtraction.
    """

    n: int
    a: float
    kind: str
    order: int
    theta: np.ndarray
    s: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_jacobi(cls, n: int, a: float, order: int = 64) -> "WeightedMeasure":
        n, a = check_n_a(n, a, allow_zero_a=True)
        x, w = gauss_jacobi(order, 0.5 * (a - 1.0), 0.5 * (n - 3.0))
        u = 0.5 * (1.0 + x)
        one_minus_u = 0.5 * (1.0 - x)
        theta = np.arcsin(np.sqrt(u))
        s = np.arcsin(np.sqrt(one_minus_u))
        weights = w * 2.0 ** (-0.5 * (n + a))
        return cls(n, a, "gauss-jacobi", order, theta, s, weights)

    @classmethod
    def double_exponential(cls, n: int, a: float, level: int = 6) -> "WeightedMeasure":
        """Tanh-sinh rule with step ``2**-level``."""
        n, a = check_n_a(n, a, allow_zero_a=True)
        h = 2.0**-level
        t_max = math.asinh(660.0 / math.pi)
        t = h * np.arange(-math.floor(t_max / h), math.floor(t_max / h) + 1)
        x = math.pi * np.sinh(t)
        theta = HALF_PI * expit(x)
        s = HALF_PI * expit(-x)
        dtheta = HALF_PI * expit(x) * expit(-x) * math.pi * np.cosh(t)
        density = np.cos(s) ** (n - 2) * np.sin(s) ** a
        weights = h * dtheta * density
        keep = (weights > 0) & (theta > 0) & (s > 0) & np.isfinite(weights)
        return cls(n, a, "double-exponential", level, theta[keep], s[keep], weights[keep])

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))


def _samples(f: Integrand, measure: WeightedMeasure) -> np.ndarray:
    if callable(f):
        vals = np.asarray(f(measure.theta), dtype=float)
    else:
        vals = np.asarray(f, dtype=float)
    vals = np.broadcast_to(vals, measure.theta.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise QuadratureError(
            f"non-finite integrand sample at node {k} (theta={measure.theta[k]!r})",
            node=k,
            theta=float(measure.theta[k]),
        )
    return vals


def weighted_integral(f: Integrand, measure: WeightedMeasure) -> float:
    """``int f dmu``.  ``f`` is a callable of theta or an array of node samples."""
    return float(np.dot(measure.weights, _samples(f, measure)))


def inner_product(f: Integrand, g: Integrand, measure: WeightedMeasure) -> float:
    return float(np.dot(measure.weights, _samples(f, measure) * _samples(g, measure)))


def norm(f: Integrand, measure: WeightedMeasure) -> float:
    return math.sqrt(max(inner_product(f, f, measure), 0.0))


def lemma1_gap(n: int, a: float, order: int = 64) -> float:
    """``int_0^{pi/2} sin^(n+a-2) dtheta - I_{n,a}``; negative for a in (-1, 0)."""
    n, a = check_n_a(n, a, allow_zero_a=True)
    if not -1.0 < a < 0.0:
        raise PreconditionError(f"lemma1_gap requires a in (-1, 0), got a={a}")
    # sin^p dtheta = 0.5 u^((p-1)/2) (1-u)^(-1/2) du
    p = n + a - 2.0
    _, w = gauss_jacobi(order, -0.5, 0.5 * (p - 1.0))
    lhs = float(np.sum(w)) * 2.0 ** (-1.0 - 0.5 * (p + 1.0) + 0.5)
    mass = WeightedMeasure.gauss_jacobi(n, a, order).total_mass
    return lhs - mass
