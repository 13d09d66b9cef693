"""Weighted Robin eigenproblem on the quarter circle.

``-(w e')' = lambda w e`` on ``(0, pi/2)``, regular at 0, with
``lim cos^a(theta) e_theta = beta e_B`` at pi/2.

The shooting mismatch ``F(lambda) = G_B - beta y_B`` of the regular solution
with ``y(0) = 1`` is an entire function of ``lambda`` whose roots are the
eigenvalues.  The number of eigenvalues below ``lambda`` equals the number
of interior zeros of ``y`` plus one when ``F y_B < 0``.  Bisection on that
count isolates each eigenvalue before a bracketed root solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .angular import AngularGrid, AngularProfile, integrate_angular
from .errors import BracketError, ConsistencyError, PreconditionError
from .params import check_n_a
from .quadrature import WeightedMeasure


@dataclass(frozen=True)
class EigenPair:
    index: int
    lam: float
    profile: AngularProfile
    boundary_value: float
    norm_residual: float
    zero_count: int

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "lambda": self.lam,
            "e_B": self.boundary_value,
            "norm_residual": self.norm_residual,
            "zero_count": self.zero_count,
        }


@dataclass(frozen=True)
class FunctionProfile:
    """A trial function given by callables of theta, for Rayleigh quotients."""

    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    boundary_value: float

    def sample(self, measure: WeightedMeasure):
        return np.asarray(self.f(measure.theta), float), np.asarray(self.df(measure.theta), float)


@dataclass(frozen=True)
class LinearCombination:
    """``sum c_k p_k`` of profiles supporting ``sample``."""

    terms: tuple

    @property
    def boundary_value(self) -> float:
        return float(sum(c * p.boundary_value for c, p in self.terms))

    def sample(self, measure: WeightedMeasure):
        y = np.zeros_like(measure.theta)
        dy = np.zeros_like(measure.theta)
        for c, p in self.terms:
            v, d = p.sample(measure)
            y = y + c * v
            dy = dy + c * d
        return y, dy


def flux_mismatch(lam: float, beta: float, n: int, a: float, grid: AngularGrid | None = None):
    """``(G_B - beta y_B, interior zero count)`` for the regular solution at ``kappa = -lam``."""
    prof = integrate_angular(-lam, n, a, grid)
    return prof.flux - beta * prof.boundary_value, prof.zero_count()


def _count_below(lam, beta, n, a, grid) -> tuple[int, float, AngularProfile]:
    prof = integrate_angular(-lam, n, a, grid)
    F = prof.flux - beta * prof.boundary_value
    count = prof.zero_count() + (1 if F * prof.boundary_value < 0 else 0)
    return count, F, prof


def normalize(profile: AngularProfile, measure: WeightedMeasure) -> tuple[AngularProfile, float]:
    y, _ = profile.sample(measure)
    nrm = math.sqrt(float(np.dot(measure.weights, y * y)))
    if nrm == 0.0:
        raise ConsistencyError("zero eigenfunction")
    sign = -1.0 if profile.boundary_value < 0 else 1.0
    e = profile.scaled(sign / nrm)
    y, _ = e.sample(measure)
    return e, abs(float(np.dot(measure.weights, y * y)) - 1.0)


def eigenpairs(
    beta: float,
    n: int,
    a: float,
    count: int,
    grid: AngularGrid | None = None,
    lambda_ceiling: float = 1e7,
    xtol: float = 1e-12,
    measure: WeightedMeasure | None = None,
) -> list[EigenPair]:
    """The first ``count`` eigenpairs in increasing order."""
    n, a = check_n_a(n, a)
    if count < 1:
        raise PreconditionError("count must be >= 1")
    if not math.isfinite(beta):
        raise PreconditionError("beta must be finite")
    measure = measure or WeightedMeasure.double_exponential(n, a)
    cache: dict[float, int] = {}

    def N(lam):
        if lam not in cache:
            cache[lam] = _count_below(lam, beta, n, a, grid)[0]
        return cache[lam]

    d = n + a - 2.0
    lo = -2.0 * d * d - 1.0
    while N(lo) > 0:
        lo = 4.0 * lo
        if lo < -lambda_ceiling:
            raise BracketError("could not find a lower bound for the spectrum", found=0)
    hi = max(1.0, 4.0 * d * d)
    while N(hi) < count:
        if hi > lambda_ceiling:
            raise BracketError(
                f"lambda ceiling {lambda_ceiling!r} reached with {N(hi)} eigenvalues found",
                found=N(hi),
            )
        hi = 4.0 * hi

    pairs = []
    for i in range(1, count + 1):
        keys = sorted(cache)
        l = max(k for k in keys if cache[k] <= i - 1)
        h = min(k for k in keys if cache[k] >= i)
        while not (cache[l] == i - 1 and cache[h] == i):
            mid = 0.5 * (l + h)
            if N(mid) <= i - 1:
                l = mid
            else:
                h = mid
        F = lambda lam: _count_below(lam, beta, n, a, grid)[1]
        lam = brentq(F, l, h, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
        prof = integrate_angular(-lam, n, a, grid)
        e, res = normalize(prof, measure)
        zc = e.zero_count()
        if zc != i - 1:
            raise ConsistencyError(
                f"eigenfunction {i} has {zc} interior zeros, expected {i - 1}", lam=lam
            )
        pairs.append(EigenPair(i, float(lam), e, e.boundary_value, res, zc))
    return sorted(pairs, key=lambda p: p.lam)


def compute_Ca(n: int, a: float, grid: AngularGrid | None = None) -> float:
    """Trace-Hardy constant: flux / y_B at ``kappa = (n+a-2)^2/4``."""
    n, a = check_n_a(n, a)
    prof = integrate_angular(0.25 * (n + a - 2.0) ** 2, n, a, grid)
    if prof.boundary_value <= 0.0:
        raise ConsistencyError("y_B <= 0 in trace-Hardy computation", y_B=prof.boundary_value)
    value = prof.flux / prof.boundary_value
    if value <= 0.0:
        raise ConsistencyError("non-positive trace-Hardy constant", value=value)
    return value


def rayleigh_quotient(profile, beta: float, measure: WeightedMeasure) -> float:
    """``(||e_theta||^2 - beta e_B^2) / ||e||^2`` in the weighted norms."""
    y, dy = profile.sample(measure)
    den = float(np.dot(measure.weights, y * y))
    if den <= 0.0:
        raise ConsistencyError("zero norm in Rayleigh quotient")
    num = float(np.dot(measure.weights, dy * dy)) - beta * profile.boundary_value**2
    return num / den


def gram_matrix(pairs: Sequence[EigenPair], measure: WeightedMeasure) -> np.ndarray:
    Y = np.array([p.profile.sample(measure)[0] for p in pairs])
    return (Y * measure.weights) @ Y.T


def eigen_table(pairs: Sequence[EigenPair]) -> list[dict]:
    return [p.as_dict() for p in pairs]
