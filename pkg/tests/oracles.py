"""Independent reference values computed with mpmath.

The regular solution of ``(w y')' = kappa w y`` with ``w = sin^(n-2) cos^a``
and ``y(0) = 1`` is ``2F1(A, B; (n-1)/2; sin^2 theta)`` where
``A + B = (n+a-2)/2`` and ``A B = kappa/4``.  Its boundary value and flux
follow from Gauss' connection formula, which gives closed forms for
``y_B``, ``G_B``, the trace-Hardy constant and the Robin eigenvalue equation
without any ODE integration.
"""

from __future__ import annotations

import mpmath as mp

mp.mp.dps = 30


def exponents(n: int, a: float, kappa):
    S = mp.mpf(n + a - 2) / 2
    d = mp.sqrt(mp.mpc(S * S - kappa))
    return (S + d) / 2, (S - d) / 2


def profile_value(n: int, a: float, kappa, theta) -> float:
    A, B = exponents(n, a, kappa)
    return float(mp.re(mp.hyp2f1(A, B, mp.mpf(n - 1) / 2, mp.sin(theta) ** 2)))


def boundary_data(n: int, a: float, kappa):
    """``(y_B, G_B)`` of the regular solution with ``y(0) = 1``."""
    A, B = exponents(n, a, kappa)
    c = mp.mpf(n - 1) / 2
    a = mp.mpf(a)
    yB = mp.gamma(c) * mp.gamma((1 - a) / 2) * mp.rgamma(c - A) * mp.rgamma(c - B)
    GB = 2 * mp.gamma(c) * mp.gamma((1 + a) / 2) * mp.rgamma(A) * mp.rgamma(B)
    return mp.re(yB), mp.re(GB)


def trace_hardy(n: int, a: float) -> float:
    yB, GB = boundary_data(n, a, mp.mpf(n + a - 2) ** 2 / 4)
    return float(GB / yB)


def robin_mismatch(lam, beta, n: int, a: float):
    yB, GB = boundary_data(n, a, -mp.mpf(lam))
    return GB - beta * yB


def robin_eigenvalue(beta: float, n: int, a: float, guess: float) -> float:
    return float(mp.findroot(lambda l: robin_mismatch(l, beta, n, a), mp.mpf(guess)))


def total_mass(n: int, a: float) -> float:
    return float(mp.beta(mp.mpf(n - 1) / 2, (mp.mpf(a) + 1) / 2) / 2)


def weighted_quad(f, n: int, a: float) -> float:
    """Adaptive tanh-sinh quadrature of ``f dmu`` (``f`` takes an mpf)."""
    w = lambda t: f(t) * mp.sin(t) ** (n - 2) * mp.cos(t) ** a
    return float(mp.quad(w, [0, mp.pi / 4, mp.pi / 2]))


def singular_boundary_value(n: int, a: float, q: float) -> float:
    """``V_B`` from ``V = c y`` with ``c^(q-1) = G_B / y_B^q``."""
    d = mp.mpf(n + a - 2)
    m = (1 - mp.mpf(a)) / (mp.mpf(q) - 1)
    yB, GB = boundary_data(n, a, m * (d - m))
    c = (GB / yB ** q) ** (1 / (mp.mpf(q) - 1))
    return float(c * yB)
