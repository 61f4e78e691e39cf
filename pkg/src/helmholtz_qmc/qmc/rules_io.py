"""Plain-text export and import of constructed rules.

Format: one header line ``# family=<lattice|interlaced> key=value ...`` then
one integer per line (``z_j`` for lattices, generating polynomials as
coefficient-encoded integers for interlaced rules). Lattice shifts are not
stored; they are regenerated from the recorded seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import InvalidArgument
from .lattice import LatticeRule, make_shifts
from .polylattice import InterlacedPolyLattice


def format_rule(rule) -> str:
    if isinstance(rule, LatticeRule):
        head = (f"# family=lattice N={rule.N} s={rule.s} alpha=1 R={rule.R} "
                f"seed={'none' if rule.seed is None else rule.seed}")
        body = rule.z
    elif isinstance(rule, InterlacedPolyLattice):
        head = (f"# family=interlaced m={rule.m} s={rule.s} alpha={rule.alpha} "
                f"modulus={rule.modulus} seed=none")
        body = rule.q
    else:
        raise InvalidArgument(f"cannot export {type(rule).__name__}")
    return head + "\n" + "\n".join(str(int(v)) for v in body) + "\n"


def parse_rule(text: str):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise InvalidArgument("rule file must start with a '#' header line")
    try:
        meta = dict(tok.split("=", 1) for tok in lines[0][1:].split())
        values = np.array([int(v) for v in lines[1:]], dtype=np.int64)
    except ValueError as exc:
        raise InvalidArgument(f"malformed rule file: {exc}") from exc
    fam = meta.get("family")
    if fam == "lattice":
        N, s = int(meta["N"]), int(meta["s"])
        if values.size != s:
            raise InvalidArgument(f"expected {s} generating components, got {values.size}")
        seed = None if meta.get("seed", "none") == "none" else int(meta["seed"])
        R = int(meta.get("R", 1))
        shifts = make_shifts(R, s, seed) if seed is not None else np.zeros((1, s))
        return LatticeRule(N, values, shifts, seed)
    if fam == "interlaced":
        m, s, alpha = int(meta["m"]), int(meta["s"]), int(meta["alpha"])
        if values.size != alpha * s:
            raise InvalidArgument(f"expected {alpha * s} polynomials, got {values.size}")
        if np.any(values < 1) or np.any(values >= 1 << m):
            raise InvalidArgument("generating polynomials must be nonzero with degree < m")
        return InterlacedPolyLattice(m, int(meta["modulus"]), values, alpha)
    raise InvalidArgument(f"unknown rule family {fam!r}")


def export_rule(rule, path) -> None:
    Path(path).write_text(format_rule(rule))


def import_rule(path):
    return parse_rule(Path(path).read_text())
