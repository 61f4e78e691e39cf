"""Product-and-order dependent weights for lattice and interlaced rules.

POD weights have the form ``gamma_u = Gamma_|u| * prod_{j in u} beta_j`` with
``Gamma_l = (l!)^(2/(1+lam))`` and ``beta_j = (Upsilon_j / sqrt(rho(lam)))^(2/(1+lam))``.

SPOD weights sum over per-coordinate derivative orders up to ``alpha``:
``gamma_u = sum_{nu in {1..alpha}^|u|} |nu|! prod_j 2^[nu_j = alpha] Upsilon_j^nu_j``.
They are evaluated through the generating polynomial
``prod_{j in u} P_j(t)`` with ``P_j(t) = sum_nu c_{j,nu} t^nu`` and
``gamma_u = sum_l l! [t^l] prod_j P_j(t)``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import zeta

from ..errors import InvalidArgument


def rho(lam: float) -> float:
    """``2 zeta(2 lam) / (2 pi^2)^lam``; equals 1/6 at ``lam = 1``."""
    if not 0.5 < lam <= 1:
        raise InvalidArgument(f"lambda must lie in (1/2, 1], got {lam}")
    return 2.0 * float(zeta(2.0 * lam)) / (2.0 * math.pi ** 2) ** lam


def choose_lambda(p1: float, delta: float) -> float:
    if not 0 < p1 < 1:
        raise InvalidArgument(f"p1 must lie in (0, 1), got {p1}")
    if not 0 < delta < 0.5:
        raise InvalidArgument(f"delta must lie in (0, 1/2), got {delta}")
    return 1.0 / (2.0 - 2.0 * delta) if p1 <= 2.0 / 3.0 else p1 / (2.0 - p1)


def lattice_rate(p1: float, delta: float) -> float:
    """Convergence order ``min(1/p1 - 1/2, 1 - delta)`` of the shifted lattice rule."""
    choose_lambda(p1, delta)
    return min(1.0 / p1 - 0.5, 1.0 - delta)


def _elementary(values: np.ndarray, order: int) -> np.ndarray:
    """Elementary symmetric polynomials ``e_0..e_order`` of ``values``."""
    e = np.zeros(order + 1)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return e


@dataclass(frozen=True)
class PodWeights:
    lam: float
    order_factor: np.ndarray
    dim_factor: np.ndarray
    upsilon: np.ndarray

    @property
    def s(self) -> int:
        return self.dim_factor.size

    def gamma(self, u: Iterable[int]) -> float:
        """Weight of the 1-based index set ``u``."""
        u = sorted(set(u))
        if any(j < 1 or j > self.s for j in u):
            raise InvalidArgument(f"index set {u} outside 1..{self.s}")
        return float(self.order_factor[len(u)] * np.prod(self.dim_factor[[j - 1 for j in u]]))

    def bound_sum(self, r: float) -> float:
        """``sum_{u nonempty} gamma_u^lam r^|u|``."""
        e = _elementary(self.dim_factor ** self.lam * r, self.s)
        return float(np.sum(self.order_factor[1:] ** self.lam * e[1:]))

    def error_bound(self, N: int) -> float:
        """Shift-averaged worst-case error bound ``(2/N sum gamma^lam rho^|u|)^(1/(2 lam))``."""
        return (2.0 / N * self.bound_sum(rho(self.lam))) ** (1.0 / (2.0 * self.lam))


def pod_weights(upsilon, p1: float, delta: float, lam: float | None = None) -> PodWeights:
    ups = np.asarray(upsilon, dtype=float)
    if np.any(ups < 0):
        raise InvalidArgument("Upsilon must be nonnegative")
    lam = choose_lambda(p1, delta) if lam is None else lam
    expo = 2.0 / (1.0 + lam)
    r = rho(lam)
    ell = np.arange(ups.size + 1)
    order = np.exp(expo * np.array([math.lgamma(l + 1) for l in ell]))
    return PodWeights(lam, order, (ups / math.sqrt(r)) ** expo, ups)


@dataclass(frozen=True)
class SpodWeights:
    alpha: int
    upsilon: np.ndarray

    @property
    def s(self) -> int:
        return self.upsilon.size

    def coefficients(self) -> np.ndarray:
        """``c[j, nu] = 2^[nu == alpha] Upsilon_j^nu`` for ``nu = 0..alpha`` (``c[:, 0] = 0``)."""
        nu = np.arange(self.alpha + 1)
        c = self.upsilon[:, None] ** nu[None, :]
        c[:, 0] = 0.0
        c[:, self.alpha] *= 2.0
        return c

    def gamma(self, u: Iterable[int]) -> float:
        u = sorted(set(u))
        if any(j < 1 or j > self.s for j in u):
            raise InvalidArgument(f"index set {u} outside 1..{self.s}")
        if not u:
            return 1.0
        c = self.coefficients()
        poly = np.array([1.0])
        for j in u:
            poly = np.convolve(poly, c[j - 1])
        fact = np.array([math.factorial(l) for l in range(poly.size)], dtype=float)
        return float(poly @ fact)


def spod_weights(upsilon, alpha: int, trunc: int | None = None) -> SpodWeights:
    """SPOD weights for the first ``trunc`` coordinates (all by default)."""
    if alpha < 2:
        raise InvalidArgument(f"interlacing factor must be >= 2, got {alpha}")
    ups = np.asarray(upsilon, dtype=float)
    if trunc is not None:
        ups = ups[:trunc]
    if np.any(ups < 0):
        raise InvalidArgument("Upsilon must be nonnegative")
    return SpodWeights(int(alpha), ups)


def interlacing_factor(p1: float) -> int:
    if not 0 < p1 < 1:
        raise InvalidArgument(f"p1 must lie in (0, 1), got {p1}")
    return math.floor(1.0 / p1) + 1


def export_weights_csv(weights: PodWeights | SpodWeights, max_order: int | None = None) -> str:
    """All subsets up to ``max_order`` as rows ``u, gamma`` (``u`` like ``1;3``)."""
    s = weights.s
    max_order = s if max_order is None else min(max_order, s)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "gamma"])
    for order in range(max_order + 1):
        for u in itertools.combinations(range(1, s + 1), order):
            w.writerow([";".join(map(str, u)), repr(weights.gamma(u))])
    return buf.getvalue()
