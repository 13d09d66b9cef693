"""Problem parameters and the closed-form constants derived from them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ParameterError


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``n``, weight exponent ``a`` and boundary exponent ``q``."""

    n: int
    a: float
    q: float

    def validate(self) -> "ProblemParams":
        n, a, q = self.n, self.a, self.q
        if isinstance(n, bool) or not float(n).is_integer():
            raise ParameterError(f"n must be an integer, got {n!r}", rule="n integer")
        if n < 3:
            raise ParameterError(f"n must satisfy n >= 3, got n={n}", rule="n >= 3")
        if not math.isfinite(a) or not -1.0 < a < 1.0:
            raise ParameterError(f"a must lie in (-1, 1), got a={a}", rule="-1 < a < 1")
        if a == 0.0:
            raise ParameterError("a = 0 is excluded (use a in (-1,0) or (0,1))", rule="a != 0")
        if not math.isfinite(q) or q <= 1.0:
            raise ParameterError(f"q must satisfy q > 1, got q={q}", rule="q > 1")
        return self

    def as_dict(self) -> dict:
        return {"n": int(self.n), "a": float(self.a), "q": float(self.q)}


@dataclass(frozen=True)
class DerivedConstants:
    """Closed-form constants attached to ``(n, a, q)``.

    ``asymptotics_established`` is False for ``a`` in ``(0, 1)``: the profile and
    spectrum computations are still valid there, but the asymptotic
    expansion results are only established for negative ``a``.
    """

    m_q: float
    gamma: float
    sigma: float
    h_na: float
    q_crit: float
    q_sing: float
    asymptotics_established: bool
    q_at_least_crit: bool

    @property
    def dim_shift(self) -> float:
        """``n + a - 2``, recovered from ``h_na``."""
        return 2.0 * math.sqrt(-self.h_na)

    def as_dict(self) -> dict:
        return asdict(self)


def derive(params: ProblemParams) -> DerivedConstants:
    params.validate()
    n, a, q = int(params.n), float(params.a), float(params.q)
    d = n + a - 2.0
    m_q = (1.0 - a) / (q - 1.0)
    q_crit = (n - a) / d
    return DerivedConstants(
        m_q=m_q,
        gamma=m_q * (d - m_q),
        sigma=d - 2.0 * m_q,
        h_na=-(d * d) / 4.0,
        q_crit=q_crit,
        q_sing=(n - 1.0) / d,
        asymptotics_established=a < 0.0,
        q_at_least_crit=q >= q_crit,
    )


def check_n_a(n: int, a: float, allow_zero_a: bool = False) -> tuple[int, float]:
    """Validate ``(n, a)`` for operations that do not involve ``q``."""
    if isinstance(n, bool) or not float(n).is_integer() or n < 3:
        raise ParameterError(f"n must be an integer >= 3, got {n!r}", rule="n >= 3")
    if not math.isfinite(a) or not -1.0 < a < 1.0:
        raise ParameterError(f"a must lie in (-1, 1), got a={a}", rule="-1 < a < 1")
    if a == 0.0 and not allow_zero_a:
        raise ParameterError("a = 0 is excluded", rule="a != 0")
    return int(n), float(a)
