"""Euclidean projections onto the base-set variants and onto moving sets.

The moving-set projection uses the translation identity
Pi_{k(x) + K0}(u) = k(x) + Pi_{K0}(u - k(x)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    Ball,
    BaseSet,
    Box,
    Halfspace,
    MovingSet,
    NonnegOrthant,
    Simplex,
    WholeSpace,
    apply_shift,
    as_vector,
)

__all__ = [
    "project_base",
    "project_moving",
    "sample_in_set",
    "verify_variational_characterization",
    "CharacterizationReport",
]

MEMBERSHIP_TOL = 1e-12


def _project_simplex(u: np.ndarray, radius: float) -> np.ndarray:
    # Sort-and-threshold: find tau with sum(max(u - tau, 0)) = radius.
    # Ties in the sort do not affect the result (the projection is unique).
    s = np.sort(u)[::-1]
    css = np.cumsum(s)
    idx = np.arange(1, u.size + 1)
    cond = s * idx > css - radius
    rho = int(np.nonzero(cond)[0][-1])
    tau = (css[rho] - radius) / (rho + 1.0)
    return np.maximum(u - tau, 0.0)


def project_base(base: BaseSet, u) -> np.ndarray:
    """Unique minimizer of ||x - u||_2 over the base set.

    A point already in the set is returned unchanged.
    """
    v = as_vector(u, dim=base.dim)
    if isinstance(base, Box):
        return np.clip(v, base.lo, base.hi)
    if isinstance(base, Ball):
        d = v - base.center
        nrm = float(np.linalg.norm(d))
        if nrm <= base.radius:
            return v.copy()
        return base.center + (base.radius / nrm) * d
    if isinstance(base, Halfspace):
        slack = float(base.normal @ v) - base.offset
        if slack <= 0.0:
            return v.copy()
        return v - (slack / float(base.normal @ base.normal)) * base.normal
    if isinstance(base, Simplex):
        return _project_simplex(v, base.radius)
    if isinstance(base, NonnegOrthant):
        return np.maximum(v, 0.0)
    if isinstance(base, WholeSpace):
        return v.copy()
    raise TypeError(f"unknown base set {type(base).__name__}")


def project_moving(mset: MovingSet, anchor, u) -> np.ndarray:
    """Projection onto K(anchor) = k(anchor) + K0 via the translation identity."""
    k = apply_shift(mset.shift, anchor)
    v = as_vector(u, dim=k.size)
    return k + project_base(mset.base, v - k)


def sample_in_set(mset: MovingSet, anchor, rng: np.random.Generator,
                  scale: float = 2.0) -> np.ndarray:
    """A random member of K(anchor), obtained by projecting a Gaussian draw."""
    anchor = as_vector(anchor)
    g = anchor + scale * rng.standard_normal(anchor.size)
    return project_moving(mset, anchor, g)


@dataclass(frozen=True)
class CharacterizationReport:
    max_violation: float
    samples: int


def verify_variational_characterization(mset: MovingSet, anchor, z,
                                        samples: int,
                                        rng: np.random.Generator | None = None,
                                        ) -> CharacterizationReport:
    """Check <z - Pi(z), w - Pi(z)> <= 0 over random w in K(anchor).

    Returns the maximum inner product seen; for a correct projection it does
    not exceed 1e-9.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(0) if rng is None else rng
    anchor = as_vector(anchor)
    z = as_vector(z, dim=anchor.size)
    pz = project_moving(mset, anchor, z)
    worst = -np.inf
    for _ in range(samples):
        w = sample_in_set(mset, anchor, rng)
        worst = max(worst, float((z - pz) @ (w - pz)))
    return CharacterizationReport(max_violation=worst, samples=samples)
