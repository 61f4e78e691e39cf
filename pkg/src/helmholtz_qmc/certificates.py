"""Randomized checks of the coercivity, continuity and data bounds on V_h."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .fem import (SplineSpace, _default_f, assemble_system, assemble_vnorm_gram, data_norm,
                  vnorm)
from .field import AffineField
from .geometry import ConstantSet, StabilizationParams


@dataclass
class CertificateReport:
    """Worst observed ratios against the theoretical constants.

    ``coer`` is min Re(w^H B w) / (C_coer ||w||_V^2) (should be >= 1),
    ``cont`` is max |v^H B w| / (C_cont ||v|| ||w||) (should be <= 1),
    ``func`` is max |G(w)| / (C_func data ||w||) (should be <= 1).
    """

    coer: float = np.inf
    cont: float = 0.0
    func: float = 0.0
    checks: int = 0
    violations: dict = dc_field(default_factory=lambda: {"coer": 0, "cont": 0, "func": 0})

    def merge(self, other: "CertificateReport") -> None:
        self.coer = min(self.coer, other.coer)
        self.cont = max(self.cont, other.cont)
        self.func = max(self.func, other.func)
        self.checks += other.checks
        for key, val in other.violations.items():
            self.violations[key] += val

    @property
    def passed(self) -> bool:
        return not any(self.violations.values())


def _random_complex(rng, n, size=None):
    shape = (n,) if size is None else (size, n)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def certify(space: SplineSpace, field: AffineField, y, k: float, params: StabilizationParams,
            constants: ConstantSet, rng: np.random.Generator, n_vectors: int = 100,
            f=None, g=None, slack: float = 1e-6) -> CertificateReport:
    """Sample random coefficient vectors and compare against the constants."""
    sysm = assemble_system(space, field, y, k, params, f, g)
    B = sysm.matrix
    gram = assemble_vnorm_gram(space, k)
    rep = CertificateReport(checks=n_vectors)

    W = _random_complex(rng, space.dof, n_vectors)
    V = _random_complex(rng, space.dof, n_vectors)
    # B(v, w) = w^H M v with M[test, trial]
    for v, w in zip(V, W):
        nw, nv = vnorm(gram, w), vnorm(gram, v)
        coer = np.real(np.vdot(w, B @ w)) / (constants.c_coer * nw ** 2)
        cont = abs(np.vdot(w, B @ v)) / (constants.c_cont * nv * nw)
        rep.coer = min(rep.coer, coer)
        rep.cont = max(rep.cont, cont)
        rep.violations["coer"] += int(coer < 1 - slack)
        rep.violations["cont"] += int(cont > 1 + slack)

    dn = data_norm(space, f or _default_f, g)
    for w in W:
        func = abs(np.vdot(w, sysm.rhs)) / (constants.c_func * dn * vnorm(gram, w))
        rep.func = max(rep.func, func)
        rep.violations["func"] += int(func > 1 + slack)
    return rep


def dual_norm(space: SplineSpace, rhs: np.ndarray, k: float) -> float:
    """Exact ``||G||`` on V_h dual: ``sqrt(r^H Gram^{-1} r)``."""
    gram = assemble_vnorm_gram(space, k)
    z = spla.spsolve(gram.tocsc(), rhs)
    return float(np.sqrt(max(np.real(np.vdot(rhs, z)), 0.0)))


def min_coercivity_eigenvalue(space: SplineSpace, field: AffineField, y, k: float,
                              params: StabilizationParams) -> float:
    """Smallest generalized eigenvalue of the Hermitian part of B against the Gram matrix.

    Dense; intended for small meshes only.
    """
    B = assemble_system(space, field, y, k, params).matrix.toarray()
    H = 0.5 * (B + B.conj().T)
    G = assemble_vnorm_gram(space, k).toarray()
    return float(sla.eigh(H, G, eigvals_only=True, subset_by_index=[0, 0])[0])
