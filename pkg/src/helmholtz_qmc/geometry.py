"""Domain geometry, stabilization parameters and wavenumber-explicit constants.

The coercive Helmholtz formulation is driven by five real parameters
``A, alpha1, alpha2, beta1_hat, beta2_hat``. Admissible values depend on the
star-shape constants of the domain and on bounds of the refractive index.
Given those, :func:`compute_constants` evaluates the coercivity, continuity,
functional, recursion and regularity constants in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AssumptionViolation, InvalidArgument

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class DomainGeometry:
    """Star-shaped domain centred at the origin.

    ``L`` is the largest distance from the origin to a point of the domain;
    ``gamma_hat * L <= x.n <= mu_hat * L`` holds on the boundary.
    """

    side: float
    L: float
    d: int = 2
    gamma_hat: float = 1.0 / math.sqrt(2.0)
    mu_hat: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if not (0.0 < self.gamma_hat <= self.mu_hat <= 1.0):
            raise InvalidArgument(
                f"need 0 < gamma_hat <= mu_hat <= 1, got {self.gamma_hat}, {self.mu_hat}")
        if self.d not in (2, 3):
            raise InvalidArgument(f"d must be 2 or 3, got {self.d}")
        if self.L <= 0:
            raise InvalidArgument("L must be positive")

    @property
    def area(self) -> float:
        return self.side ** self.d

    @property
    def perimeter(self) -> float:
        return 2 * self.d * self.side ** (self.d - 1)


def make_square_domain(side: float) -> DomainGeometry:
    """Axis-aligned square ``[-side/2, side/2]^2``.

    On every face ``x.n = side/2`` and ``L = side/sqrt(2)``, so both star-shape
    constants equal ``1/sqrt(2)`` regardless of ``side``.
    """
    if not side > 0:
        raise InvalidArgument(f"side must be positive, got {side}")
    L = side * math.sqrt(2.0) / 2.0
    ratio = (side / 2.0) / L
    return DomainGeometry(side=float(side), L=L, d=2, gamma_hat=ratio, mu_hat=ratio)


@dataclass(frozen=True)
class FieldBounds:
    n_min: float
    n_max: float
    b_min: float
    b_max: float
    d: int = 2

    def check(self) -> None:
        if not (0 < self.n_min <= self.n_max):
            raise AssumptionViolation(
                f"need 0 < n_min <= n_max, got n_min={self.n_min}, n_max={self.n_max}")
        if not (0 < self.b_min <= self.b_max):
            raise AssumptionViolation(
                f"need 0 < b_min <= b_max, got b_min={self.b_min}, b_max={self.b_max}")
        if not self.b_min > (self.d - 2) * self.n_max:
            raise AssumptionViolation(
                f"non-trapping condition b_min > (d-2) n_max fails: "
                f"{self.b_min} <= {(self.d - 2) * self.n_max}")


@dataclass(frozen=True)
class StabilizationParams:
    A: float
    alpha1: float
    alpha2: float
    beta1_hat: float
    beta2_hat: float

    def check(self, bounds: FieldBounds, geom: DomainGeometry) -> None:
        """Raise :class:`AssumptionViolation` unless the parameter window holds."""
        lo, hi = alpha1_window(bounds, geom)
        if not lo < self.alpha1 < hi:
            raise AssumptionViolation(f"alpha1={self.alpha1} outside ({lo}, {hi})")
        a_hi = A_upper(bounds, self.alpha1)
        if not 0 < self.A < a_hi:
            raise AssumptionViolation(f"A={self.A} outside (0, {a_hi})")
        b_lo = beta1_lower(bounds, geom)
        # equality is admissible; allow one ulp of slack for the rounded bound
        if self.beta1_hat < b_lo * (1 - 1e-15):
            raise AssumptionViolation(f"beta1_hat={self.beta1_hat} below {b_lo}")


def alpha1_window(bounds: FieldBounds, geom: DomainGeometry) -> tuple[float, float]:
    return (geom.d - 2) / 2.0, bounds.b_min / (2.0 * bounds.n_max)


def A_upper(bounds: FieldBounds, alpha1: float) -> float:
    return (bounds.b_min - 2.0 * alpha1 * bounds.n_max) / (2.0 * bounds.n_max ** 2)


def beta1_lower(bounds: FieldBounds, geom: DomainGeometry) -> float:
    # the middle term uses gamma_hat (the printed formula has an unhatted gamma)
    mu, gam = geom.mu_hat, geom.gamma_hat
    return bounds.n_max * mu / 2.0 + 2.0 * mu ** 2 / gam + gam / 2.0


def select_parameters(bounds: FieldBounds, geom: DomainGeometry, *,
                      alpha1: float | None = None, A: float | None = None,
                      alpha2: float | None = None,
                      beta2_hat: float | None = None) -> StabilizationParams:
    """Pick admissible stabilization parameters.

    By default ``alpha1`` and ``A`` sit at the midpoints of their open
    windows, ``beta1_hat`` at its lower bound, and the free pair
    ``(alpha2, beta2_hat)`` copies ``(alpha1, beta1_hat)``. Keyword arguments
    override individual choices; the result is always validated.
    """
    if bounds.d != geom.d:
        raise InvalidArgument(f"dimension mismatch: bounds d={bounds.d}, geometry d={geom.d}")
    bounds.check()
    lo, hi = alpha1_window(bounds, geom)
    if not lo < hi:
        raise AssumptionViolation(f"empty alpha1 window ({lo}, {hi})")
    a1 = 0.5 * (lo + hi) if alpha1 is None else float(alpha1)
    a_hi = A_upper(bounds, a1)
    if not a_hi > 0:
        raise AssumptionViolation(f"empty A window (0, {a_hi}) for alpha1={a1}")
    a = 0.5 * a_hi if A is None else float(A)
    b1 = beta1_lower(bounds, geom)
    params = StabilizationParams(
        A=a,
        alpha1=a1,
        alpha2=a1 if alpha2 is None else float(alpha2),
        beta1_hat=b1,
        beta2_hat=b1 if beta2_hat is None else float(beta2_hat),
    )
    params.check(bounds, geom)
    return params


@dataclass(frozen=True)
class ConstantSet:
    kL: float
    c_coer: float
    c_cont: float
    c_func: float
    c_r: float
    c_regu: float

    @property
    def stability(self) -> float:
        """``C_func / C_coer``, the a priori solution bound per unit data."""
        return self.c_func / self.c_coer


def coercivity_constant(params: StabilizationParams, bounds: FieldBounds,
                        geom: DomainGeometry) -> float:
    d, nmax = geom.d, bounds.n_max
    return 0.5 * min(2 - d + 2 * params.alpha1,
                     bounds.b_min - 2 * params.alpha1 * nmax - 2 * params.A * nmax ** 2,
                     params.A,
                     geom.gamma_hat / 2)


def continuity_constant(kL: float, params: StabilizationParams, bounds: FieldBounds,
                        geom: DomainGeometry) -> float:
    A, a1, a2 = params.A, params.alpha1, params.alpha2
    b1, b2 = params.beta1_hat, params.beta2_hat
    nmax, mu, d = bounds.n_max, geom.mu_hat, geom.d
    m2 = abs(complex(a2, -kL * b2))
    terms = (
        abs(2 - d + a1 + a2) + kL * abs(b1 - b2),
        A * nmax + m2 + kL + A,
        a1 / kL + b1 + nmax * mu,
        abs(a2) / kL + abs(b2) + 2 * mu,
        2.0,
        (abs(a1 + a2) + bounds.b_max + kL * abs(b1 - b2)) * nmax
        + (A * nmax ** 2 + nmax * m2) + kL * nmax + A * nmax,
    )
    return SQRT3 * max(terms)


def functional_constant(kL: float, params: StabilizationParams, bounds: FieldBounds) -> float:
    A = params.A
    return SQRT3 * max(1.0, A / kL, (params.alpha1 + A * bounds.n_max) / kL + params.beta1_hat)


def recursion_constant(kL: float, params: StabilizationParams, bounds: FieldBounds,
                       geom: DomainGeometry) -> float:
    A, a1, a2 = params.A, params.alpha1, params.alpha2
    b1, b2 = params.beta1_hat, params.beta2_hat
    xi2 = complex(-a1 - a2, -kL * (b1 - b2))
    return (2 * A * (1 + bounds.n_max) + kL * (1 + b2) + abs(a2) + abs(xi2)
            + geom.d + 1 + geom.mu_hat)


def compute_constants(k: float, params: StabilizationParams, bounds: FieldBounds,
                      geom: DomainGeometry) -> ConstantSet:
    if not k > 0:
        raise InvalidArgument(f"wavenumber must be positive, got {k}")
    kL = k * geom.L
    c_coer = coercivity_constant(params, bounds, geom)
    c_func = functional_constant(kL, params, bounds)
    c_r = recursion_constant(kL, params, bounds, geom)
    c_regu = max(c_r / c_coer + params.A / (kL * c_func),
                 2 * c_r / c_coer,
                 math.sqrt(2 * params.A / c_coer))
    return ConstantSet(kL=kL, c_coer=c_coer,
                       c_cont=continuity_constant(kL, params, bounds, geom),
                       c_func=c_func, c_r=c_r, c_regu=c_regu)
