"""Closed-form arithmetic of the generalized Atwood (binomial failure rate) model.

Rates and per-demand probabilities are used interchangeably under the
low-rate linearity assumption, so everything here is expressed per hour.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

COEFFICIENT_FREE = "coefficient-free"
BINOMIAL = "binomial"
SumVariant = Literal["coefficient-free", "binomial"]

# Above this group size the multi-element terms are evaluated in log domain.
_LOG_DOMAIN_K = 20


class AtwoodDomainError(ValueError):
    """Raised when an Atwood formula is evaluated outside its domain."""


class DirectedSplitError(AtwoodDomainError):
    """Raised when a directed shock split yields a probability above 1."""

    def __init__(self, subset: str, value: float):
        self.subset = subset
        self.value = value
        super().__init__(
            f"directed split gives x_{subset} = {value:.6g} > 1 for subset {subset.upper()}"
        )


@dataclass(frozen=True)
class ShockModelParams:
    mu: float
    omega: float
    rho: float
    lambda_ind: float
    alpha_nonlethal: float = 0.405
    beta_lethal: float = 5e-3

    def __post_init__(self):
        for name in ("mu", "omega", "lambda_ind", "alpha_nonlethal", "beta_lethal"):
            value = getattr(self, name)
            if not value >= 0.0 or math.isinf(value):
                raise AtwoodDomainError(f"{name} must be a finite non-negative number, got {value!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise AtwoodDomainError(f"rho must lie in [0, 1], got {self.rho!r}")
        if self.alpha_nonlethal + self.beta_lethal >= 1.0:
            raise AtwoodDomainError(
                "alpha_nonlethal + beta_lethal must be < 1, got "
                f"{self.alpha_nonlethal!r} + {self.beta_lethal!r}"
            )


@dataclass(frozen=True)
class DetectionParams:
    coverage: float
    lambda_sa: float
    lambda_nsa: float

    @property
    def lambda_ind(self) -> float:
        return self.lambda_sa + self.lambda_nsa


@dataclass(frozen=True)
class DirectedSplit:
    n: int
    rho: float
    a: int
    b: int
    p_a: float
    p_b: float
    x_a: float
    x_b: float

    @property
    def residual(self) -> float:
        """Expected-victim balance ``a*x_a + b*x_b - n*rho`` (zero by construction)."""
        return self.a * self.x_a + self.b * self.x_b - self.n * self.rho


def shock_term(k: int, n: int, rho: float) -> float:
    """Return ``rho**k * (1 - rho)**(n - k)`` for one specific group of k elements."""
    if rho == 0.0:
        return 1.0 if k == 0 else 0.0
    if rho == 1.0:
        return 1.0 if k == n else 0.0
    if k > _LOG_DOMAIN_K:
        return math.exp(k * math.log(rho) + (n - k) * math.log1p(-rho))
    return rho**k * (1.0 - rho) ** (n - k)


def shock_sum(n: int, rho: float, variant: SumVariant = COEFFICIENT_FREE) -> float:
    """Sum over k = 1..n of the shock terms, with or without ``C(n-1, k-1)``.

    With binomial coefficients the sum collapses to ``rho``; the
    coefficient-free form is the one that reproduces the published tables.
    """
    if variant == BINOMIAL:
        return math.fsum(math.comb(n - 1, k - 1) * shock_term(k, n, rho) for k in range(1, n + 1))
    if variant == COEFFICIENT_FREE:
        return math.fsum(shock_term(k, n, rho) for k in range(1, n + 1))
    raise AtwoodDomainError(f"unknown sum variant {variant!r}")


def q_group(k: int, n: int, params: ShockModelParams) -> float:
    """Failure probability of one specific group of k elements out of n."""
    if n < 1 or k < 1 or k > n:
        raise AtwoodDomainError(f"need 1 <= k <= n, got k={k}, n={n}")
    value = params.mu * shock_term(k, n, params.rho)
    if k == 1:
        value += params.lambda_ind
    if k == n:
        value += params.omega
    return value


def q_total_element(n: int, params: ShockModelParams) -> float:
    """Total failure probability (or rate) of one specific element in a group of n."""
    if n < 1:
        raise AtwoodDomainError(f"n must be >= 1, got {n}")
    shocks = params.mu * shock_sum(n, params.rho, BINOMIAL)
    return params.lambda_ind + params.omega + shocks


def beta_factor_element(n: int, params: ShockModelParams, exclude_single: bool = False) -> float:
    """Element-level beta factor: share of the element's failures due to shocks.

    ``exclude_single`` drops the k = 1 shock term from the numerator, i.e. a
    non-lethal shock hitting only this element is not counted as common cause.
    """
    total = q_total_element(n, params)
    if total <= 0.0:
        raise AtwoodDomainError("total element failure probability is zero")
    common = params.omega + params.mu * shock_sum(n, params.rho, BINOMIAL)
    if exclude_single:
        common -= params.mu * shock_term(1, n, params.rho)
    return common / total


def directed_split(n: int, rho: float, a: int, p_a: float) -> DirectedSplit:
    """Split the non-lethal conditional probability between subsets A and B.

    The expected number of victims ``n * rho`` is preserved; a share ``p_a``
    of it lands on the ``a`` elements of subset A.
    """
    if not 1 <= a <= n - 1:
        raise AtwoodDomainError(f"subset A must be a non-empty proper subset: a={a}, n={n}")
    if not 0.0 <= p_a <= 1.0:
        raise AtwoodDomainError(f"p_a must lie in [0, 1], got {p_a!r}")
    if not 0.0 <= rho <= 1.0:
        raise AtwoodDomainError(f"rho must lie in [0, 1], got {rho!r}")
    b = n - a
    p_b = 1.0 - p_a
    x_a = n * rho * p_a / a
    x_b = n * rho * p_b / b
    if x_a > 1.0:
        raise DirectedSplitError("a", x_a)
    if x_b > 1.0:
        raise DirectedSplitError("b", x_b)
    return DirectedSplit(n=n, rho=rho, a=a, b=b, p_a=p_a, p_b=p_b, x_a=x_a, x_b=x_b)


def solve_rates_analytic(
    n: int,
    alpha_nonlethal: float,
    beta_lethal: float,
    rho: float,
    lambda_ind: float,
    variant: SumVariant = COEFFICIENT_FREE,
) -> tuple[float, float]:
    """Solve the 2x2 linear system for the shock rates ``(mu, omega)``.

    (1 - alpha*S) mu + alpha omega = alpha lambda_ind
    (-beta*S) mu + (1 - beta) omega = beta lambda_ind
    """
    s = shock_sum(n, rho, variant)
    a11, a12 = 1.0 - alpha_nonlethal * s, alpha_nonlethal
    a21, a22 = -beta_lethal * s, 1.0 - beta_lethal
    det = a11 * a22 - a12 * a21
    if abs(det) < 1e-300:
        raise AtwoodDomainError("shock-rate system is singular")
    b1, b2 = alpha_nonlethal * lambda_ind, beta_lethal * lambda_ind
    mu = (b1 * a22 - a12 * b2) / det
    omega = (a11 * b2 - a21 * b1) / det
    return mu, omega


def analytic_residuals(
    n: int,
    alpha_nonlethal: float,
    beta_lethal: float,
    rho: float,
    lambda_ind: float,
    mu: float,
    omega: float,
    variant: SumVariant = COEFFICIENT_FREE,
) -> tuple[float, float]:
    s = shock_sum(n, rho, variant)
    r1 = (1.0 - alpha_nonlethal * s) * mu + alpha_nonlethal * omega - alpha_nonlethal * lambda_ind
    r2 = -beta_lethal * s * mu + (1.0 - beta_lethal) * omega - beta_lethal * lambda_ind
    return r1, r2


def gamma_ratio(
    n: int,
    alpha_nonlethal: float,
    beta_lethal: float,
    rho: float,
    variant: str = COEFFICIENT_FREE,
) -> float | dict[str, float]:
    """Ratio of independent to total element failure rate.

    ``variant="both"`` returns a dict keyed by variant name.
    """
    if variant == "both":
        return {
            COEFFICIENT_FREE: gamma_ratio(n, alpha_nonlethal, beta_lethal, rho, COEFFICIENT_FREE),
            BINOMIAL: gamma_ratio(n, alpha_nonlethal, beta_lethal, rho, BINOMIAL),
        }
    return 1.0 - alpha_nonlethal * shock_sum(n, rho, variant) - beta_lethal


def estimate_rates_from_counts(
    e_i: float,
    n: int,
    mission_hours: float,
    alpha_nonlethal: float,
    beta_lethal: float,
    gamma: float,
) -> tuple[float, float, float]:
    """Turn a mean independent-failure count per mission into ``(lambda_ind, mu, omega)``."""
    if mission_hours <= 0.0 or n < 1:
        raise AtwoodDomainError(f"need mission_hours > 0 and n >= 1, got {mission_hours}, {n}")
    if gamma <= 0.0:
        raise AtwoodDomainError(f"gamma must be positive, got {gamma}")
    lambda_ind = e_i / (mission_hours * n)
    return lambda_ind, alpha_nonlethal * lambda_ind / gamma, beta_lethal * lambda_ind / gamma


def split_detection(lambda_ind: float, coverage: float) -> DetectionParams:
    """Split the independent rate into online-detected and test-detected parts."""
    if not 0.0 <= coverage <= 1.0:
        raise AtwoodDomainError(f"coverage must lie in [0, 1], got {coverage!r}")
    lambda_sa = coverage * lambda_ind
    return DetectionParams(coverage=coverage, lambda_sa=lambda_sa, lambda_nsa=lambda_ind - lambda_sa)
