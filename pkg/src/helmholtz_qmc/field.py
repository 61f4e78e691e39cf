"""Affine-parametric squared refractive index on the square.

``n(x, y) = n0(x) + sum_j y_j psi_j(x)`` with ``y_j`` uniform on
``[-1/2, 1/2]``. The built-in modes are tensor cosines with algebraic decay,

    psi_j(x) = a_j cos(j1 pi (x1/side + 1/2)) cos(j2 pi (x2/side + 1/2)),

where ``a_j = amplitude * j**-theta`` and ``j -> (j1, j2)`` enumerates
frequency pairs by l1 norm, then lexicographically. Sup norms and gradient
sup norms are available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta

from .errors import AssumptionViolation, InvalidArgument
from .geometry import ConstantSet, FieldBounds


def mode_pairs(count: int) -> list[tuple[int, int]]:
    """First ``count`` frequency pairs ordered by ``j1 + j2`` then ``j1``."""
    out: list[tuple[int, int]] = []
    total = 0
    while len(out) < count:
        for j1 in range(total + 1):
            out.append((j1, total - j1))
            if len(out) == count:
                break
        total += 1
    return out


@dataclass(frozen=True)
class AffineField:
    """Mean field plus decaying cosine perturbation modes.

    ``n0`` is either a constant or a callable ``n0(x1, x2) -> (value, (d1, d2))``
    returning arrays shaped like ``x1``. ``mode_amplitudes`` overrides the
    default ``amplitude * j**-theta`` decay.
    """

    n0: float | Callable = 1.0
    amplitude: float = 0.0
    theta: float = 2.0
    s_max: int = 8
    side: float = 1.0
    mode_amplitudes: Sequence[float] | None = None
    _pairs: tuple = dc_field(init=False, repr=False, compare=False)
    _amps: np.ndarray = dc_field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.s_max < 0:
            raise InvalidArgument("s_max must be nonnegative")
        if self.side <= 0:
            raise InvalidArgument("side must be positive")
        if self.mode_amplitudes is not None:
            amps = np.asarray(self.mode_amplitudes, dtype=float)
            if amps.shape != (self.s_max,):
                raise InvalidArgument(f"need {self.s_max} mode amplitudes, got {amps.shape}")
        else:
            if self.amplitude < 0:
                raise InvalidArgument("amplitude must be nonnegative")
            j = np.arange(1, self.s_max + 1, dtype=float)
            amps = self.amplitude * j ** (-self.theta)
        object.__setattr__(self, "_amps", amps)
        object.__setattr__(self, "_pairs", tuple(mode_pairs(self.s_max)))

    @property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return self._pairs

    @property
    def amplitudes(self) -> np.ndarray:
        return self._amps.copy()

    @property
    def is_degenerate(self) -> bool:
        return not np.any(self._amps)

    def truncated(self, s: int) -> "AffineField":
        """The same field with only the first ``s`` modes materialized."""
        amps = None if self.mode_amplitudes is None else list(self._amps[:s])
        return AffineField(self.n0, self.amplitude, self.theta, s, self.side, amps)

    # -- norms ---------------------------------------------------------------

    def sup_norms(self, s: int | None = None) -> np.ndarray:
        """``||psi_j||_Linf`` for ``j = 1..s`` (closed form)."""
        return np.abs(self._amps[: self._count(s)])

    def grad_sup_norms(self, s: int | None = None) -> np.ndarray:
        """``||grad psi_j||_Linf``; the max of ``|grad|`` of a cosine product is
        ``(pi/side) * max(j1, j2)``."""
        s = self._count(s)
        freq = np.array([max(p) for p in self._pairs[:s]], dtype=float)
        return np.abs(self._amps[:s]) * math.pi * freq / self.side

    def w1inf_norms(self, L: float, s: int | None = None) -> np.ndarray:
        """``max(||psi||_Linf, L ||grad psi||_Linf)``."""
        return np.maximum(self.sup_norms(s), L * self.grad_sup_norms(s))

    def _count(self, s: int | None) -> int:
        if s is None:
            return self.s_max
        if s > self.s_max:
            raise InvalidArgument(f"only {self.s_max} modes materialized, asked for {s}")
        return s

    # -- pointwise evaluation ------------------------------------------------

    def mean(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if callable(self.n0):
            val, (g1, g2) = self.n0(x1, x2)
            return (np.broadcast_to(val, x1.shape).astype(float),
                    np.broadcast_to(g1, x1.shape).astype(float),
                    np.broadcast_to(g2, x1.shape).astype(float))
        z = np.zeros(np.broadcast(x1, x2).shape)
        return z + float(self.n0), z.copy(), z.copy()

    def modes(self, x1, x2, s: int | None = None):
        """Mode values and gradients, each shaped ``(s,) + x.shape``."""
        s = self._count(s)
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        shape = np.broadcast(x1, x2).shape
        if s == 0:
            z = np.zeros((0,) + shape)
            return z, z, z
        f = np.array(self._pairs[:s], dtype=float)
        w = math.pi / self.side
        t1 = np.multiply.outer(f[:, 0], x1 / self.side + 0.5) * math.pi
        t2 = np.multiply.outer(f[:, 1], x2 / self.side + 0.5) * math.pi
        c1, c2 = np.cos(t1), np.cos(t2)
        amp = self._amps[:s].reshape((s,) + (1,) * len(shape))
        val = amp * c1 * c2
        d1 = -amp * (w * f[:, 0]).reshape(amp.shape) * np.sin(t1) * c2
        d2 = -amp * (w * f[:, 1]).reshape(amp.shape) * c1 * np.sin(t2)
        return np.broadcast_to(val, (s,) + shape), np.broadcast_to(d1, (s,) + shape), \
            np.broadcast_to(d2, (s,) + shape)

    def contains(self, x1, x2, tol: float = 1e-12) -> bool:
        h = self.side / 2 * (1 + tol)
        return bool(np.all(np.abs(x1) <= h) and np.all(np.abs(x2) <= h))


@dataclass(frozen=True)
class ParamVector:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if np.any(np.abs(v) > 0.5 + 1e-15):
            raise InvalidArgument("parameters must lie in [-1/2, 1/2]")
        object.__setattr__(self, "values", v)

    @property
    def s(self) -> int:
        return self.values.size


def _as_values(y) -> np.ndarray:
    if isinstance(y, ParamVector):
        return y.values
    return ParamVector(y).values


def evaluate_field(field: AffineField, y, x1, x2):
    """Return ``(n, dn/dx1, dn/dx2)`` at the given points.

    Only the first ``len(y)`` modes contribute (``y_j = 0`` beyond).
    """
    yv = _as_values(y)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if not field.contains(x1, x2):
        raise InvalidArgument("evaluation point outside the domain")
    n, g1, g2 = field.mean(x1, x2)
    if yv.size:
        val, d1, d2 = field.modes(x1, x2, yv.size)
        n = n + np.tensordot(yv, val, axes=1)
        g1 = g1 + np.tensordot(yv, d1, axes=1)
        g2 = g2 + np.tensordot(yv, d2, axes=1)
    return n, g1, g2


def div_x_n(n, g1, g2, x1, x2, d: int = 2):
    """``div(x n) = d n + x . grad n``."""
    return d * n + x1 * g1 + x2 * g2


def verify_A1(field: AffineField, s: int | None = None, grid_res: int = 64,
              safety: float = 0.99) -> FieldBounds:
    """Bounds on ``n`` and ``div(x n)`` valid for every ``y`` in the cube.

    Uses the envelope ``mean +/- (1/2) sum_j |mode_j(x)|`` on a tensor grid.
    Lower bounds are multiplied and upper bounds divided by ``safety``.
    """
    if grid_res < 16:
        raise InvalidArgument("grid_res must be at least 16")
    if not 0 < safety <= 1:
        raise InvalidArgument("safety factor must lie in (0, 1]")
    s = field.s_max if s is None else s
    h = field.side / 2
    g = np.linspace(-h, h, grid_res)
    x1, x2 = np.meshgrid(g, g, indexing="ij")
    n0, g1, g2 = field.mean(x1, x2)
    b0 = div_x_n(n0, g1, g2, x1, x2)
    val, d1, d2 = field.modes(x1, x2, s)
    env_n = 0.5 * np.abs(val).sum(axis=0)
    env_b = 0.5 * np.abs(2 * val + x1 * d1 + x2 * d2).sum(axis=0)
    lo_n, hi_n = n0 - env_n, n0 + env_n
    lo_b, hi_b = b0 - env_b, b0 + env_b

    def where(arr, fn):
        i = np.unravel_index(fn(arr), arr.shape)
        return float(x1[i]), float(x2[i])

    if lo_n.min() <= 0:
        raise AssumptionViolation(
            f"n_min > 0 violated: envelope reaches {lo_n.min():.4g} at x={where(lo_n, np.argmin)}")
    if lo_b.min() <= 0:
        raise AssumptionViolation(
            f"b_min > 0 violated: div(x n) envelope reaches {lo_b.min():.4g} "
            f"at x={where(lo_b, np.argmin)}")
    bounds = FieldBounds(n_min=float(safety * lo_n.min()), n_max=float(hi_n.max() / safety),
                         b_min=float(safety * lo_b.min()), b_max=float(hi_b.max() / safety), d=2)
    bounds.check()
    return bounds


@dataclass(frozen=True)
class Summability:
    K0_partial: float
    K1_partial: float
    K0_converges: bool
    K1_converges: bool


def summability(field: AffineField, p0: float, p1: float, k: float, L: float,
                j_max: int | None = None) -> Summability:
    """Partial sums of the two wavenumber-weighted summability series.

    The verdicts use the decay of the default family: ``||psi_j|| ~ j^-theta``
    and, since frequencies grow like ``sqrt(j)``, ``||psi_j||_W1inf ~
    j^(1/2 - theta)``.
    """
    for name, p in (("p0", p0), ("p1", p1)):
        if not 0 < p < 1:
            raise InvalidArgument(f"{name} must lie in (0, 1), got {p}")
    j_max = field.s_max if j_max is None else j_max
    if j_max < 1:
        raise InvalidArgument("j_max must be at least 1")
    kL = k * L
    sup = field.sup_norms(j_max)
    w1 = field.w1inf_norms(L, j_max)
    K0 = float(np.sum(((kL + 1) * sup) ** p0))
    K1 = float(np.sum(((kL + 1 / kL) * w1) ** p1))
    return Summability(K0, K1, field.theta * p0 > 1, (field.theta - 0.5) * p1 > 1)


@dataclass(frozen=True)
class TruncationReport:
    b: np.ndarray
    s: int
    p0: float
    tail1_bound: float
    tail2_bound: float
    s_star: int
    ell_star: int
    K0_partial: float
    K1_partial: float
    pert_margin: float
    pert_margin_kl: float
    bp0_sum: float

    def tail1(self, s: int) -> float:
        return _tail1(self.bp0_sum, self.p0, s)

    def tail2(self, s: int) -> float:
        return _tail2(self.bp0_sum, self.p0, s)


def _tail1(bp0_sum: float, p0: float, s: int) -> float:
    pref = min(1.0 / (1.0 / p0 - 1.0), 1.0)
    return pref * bp0_sum ** (1 / p0) * s ** (1 - 1 / p0)


def _tail2(bp0_sum: float, p0: float, s: int) -> float:
    return bp0_sum ** (2 / p0) * s ** (1 - 2 / p0) / (2 / p0 - 1)


def ell_star(p0: float) -> int:
    return math.ceil((2 - p0) / (2 - 2 * p0))


def truncation_quantities(field: AffineField, constants: ConstantSet, p0: float, s: int,
                          p1: float | None = None, L: float | None = None) -> TruncationReport:
    """Operator-perturbation sizes ``b_j`` and the tail bounds derived from them."""
    if not 0 < p0 < 1:
        raise InvalidArgument(f"p0 must lie in (0, 1), got {p0}")
    sup = field.sup_norms()
    if np.any(np.diff(sup) > 0):
        j = int(np.argmax(np.diff(sup) > 0)) + 1
        raise AssumptionViolation(f"modes not ordered by sup norm at j={j}, {j + 1}")
    scale = constants.kL * constants.c_func / constants.c_coer
    b = scale * sup
    if field.mode_amplitudes is None and field.amplitude > 0:
        # closed form over the infinite family
        bp0 = (scale * field.amplitude) ** p0 * float(zeta(field.theta * p0)) \
            if field.theta * p0 > 1 else math.inf
    else:
        bp0 = float(np.sum(b ** p0))
    if bp0 == 0:
        s_star = 1
    elif math.isinf(bp0):
        s_star = -1
    else:
        pref = min(1.0 / (1.0 / p0 - 1.0), 1.0) * bp0 ** (1 / p0)
        s_star = max(1, math.ceil((2 * pref) ** (1 / (1 / p0 - 1)) - 1e-9))
        while s_star > 1 and _tail1(bp0, p0, s_star - 1) <= 0.5:
            s_star -= 1
        while _tail1(bp0, p0, s_star) > 0.5:
            s_star += 1
    L = field.side / math.sqrt(2.0) if L is None else L
    if field.s_max:
        K = summability(field, p0, p0 if p1 is None else p1, constants.kL / L, L)
    else:
        K = Summability(0.0, 0.0, True, True)
    return TruncationReport(
        b=b, s=s, p0=p0,
        tail1_bound=_tail1(bp0, p0, s), tail2_bound=_tail2(bp0, p0, s),
        s_star=s_star, ell_star=ell_star(p0),
        K0_partial=K.K0_partial, K1_partial=K.K1_partial,
        pert_margin=0.5 * float(b.sum()),
        pert_margin_kl=constants.kL * float(sup.sum()),
        bp0_sum=bp0,
    )
