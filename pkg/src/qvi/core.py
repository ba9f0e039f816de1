"""Shared vocabulary: vectors, operators, moving constraint sets, solver configuration.

All types are immutable after construction (arrays are stored read-only), so
values can be shared freely between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "as_vector",
    "OperatorSpec",
    "Box",
    "Ball",
    "Halfspace",
    "Simplex",
    "NonnegOrthant",
    "WholeSpace",
    "BaseSet",
    "ZeroShift",
    "AffineShift",
    "MinBroadcastShift",
    "ShiftMap",
    "MovingSet",
    "SolverConfig",
    "QviProblem",
    "apply_operator",
    "apply_shift",
]


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and freeze a 1-D real vector.

    Returns a read-only float64 copy. Rejects empty, non-1-D and non-finite
    input; if `dim` is given the length must match.
    """
    v = np.array(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if v.size < 1:
        raise ValueError("vector must have dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {v.size}")
    v.setflags(write=False)
    return v


def _frozen_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    a.setflags(write=False)
    return a


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

_EIG_SLACK = 1e-9  # tolerance when checking declared constants against spectra


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    """A vector field T with declared strong-monotonicity mu and Lipschitz lip.

    Affine operators (T(x) = A x + b) are validated against the spectrum of A
    at construction; callable operators carry user-declared constants that the
    library trusts (estimation lives in `analysis`).
    """

    dim: int
    mu: float
    lip: float
    matrix: np.ndarray | None = None
    offset: np.ndarray | None = None
    func: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.lip < 0:
            raise ValueError("lip must be >= 0")
        if self.mu > 0 and self.mu > self.lip + _EIG_SLACK:
            raise ValueError(f"mu={self.mu} exceeds lip={self.lip}")
        if (self.matrix is None) == (self.func is None):
            raise ValueError("exactly one of matrix / func must be given")

    @classmethod
    def affine(cls, matrix, offset=None, mu: float | None = None,
               lip: float | None = None) -> "OperatorSpec":
        """T(x) = A x + b with constants checked against (A + A^T)/2 and ||A||_2."""
        A = _frozen_matrix(matrix)
        n = A.shape[0]
        b = as_vector(np.zeros(n) if offset is None else offset, dim=n)
        sym_min = float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())
        spec = float(np.linalg.norm(A, 2))
        mu_val = max(sym_min, 0.0) if mu is None else float(mu)
        lip_val = spec if lip is None else float(lip)
        if mu_val > sym_min + _EIG_SLACK:
            raise ValueError(
                f"declared mu={mu_val} exceeds min eigenvalue {sym_min:.6g} of (A+A^T)/2")
        if lip_val < spec - _EIG_SLACK:
            raise ValueError(
                f"declared lip={lip_val} is below the spectral norm {spec:.6g}")
        return cls(dim=n, mu=mu_val, lip=lip_val, matrix=A, offset=b)

    @classmethod
    def from_callable(cls, func: Callable[[np.ndarray], np.ndarray], dim: int,
                      mu: float, lip: float) -> "OperatorSpec":
        """Wrap an arbitrary evaluation rule; (mu, lip) are trusted as declared."""
        return cls(dim=int(dim), mu=float(mu), lip=float(lip), func=func)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_operator(self, x)


def apply_operator(op: OperatorSpec, x) -> np.ndarray:
    """Evaluate T(x); the affine kind returns A x + b exactly."""
    v = as_vector(x, dim=op.dim)
    if op.matrix is not None:
        return op.matrix @ v + op.offset
    out = as_vector(op.func(v))
    if out.size != op.dim:
        raise ValueError(f"callable operator returned dimension {out.size}, expected {op.dim}")
    return out


# --------------------------------------------------------------------------
# base sets (the fixed K0 of the moving set)
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", as_vector(self.lo))
        object.__setattr__(self, "hi", as_vector(self.hi, dim=self.lo.size))
        if np.any(self.lo > self.hi):
            raise ValueError("box requires lo <= hi componentwise")

    @property
    def dim(self) -> int | None:
        return self.lo.size


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be > 0")

    @property
    def dim(self) -> int | None:
        return self.center.size


@dataclass(frozen=True, eq=False)
class Halfspace:
    """{x : <normal, x> <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", as_vector(self.normal))
        if np.linalg.norm(self.normal) == 0.0:
            raise ValueError("halfspace normal must be nonzero")

    @property
    def dim(self) -> int | None:
        return self.normal.size


@dataclass(frozen=True)
class Simplex:
    """{x : x >= 0, sum(x) = radius}; dimension is taken from the argument."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("simplex radius must be > 0")

    @property
    def dim(self) -> int | None:
        return None


@dataclass(frozen=True)
class NonnegOrthant:
    @property
    def dim(self) -> int | None:
        return None


@dataclass(frozen=True)
class WholeSpace:
    @property
    def dim(self) -> int | None:
        return None


BaseSet = Box | Ball | Halfspace | Simplex | NonnegOrthant | WholeSpace


# --------------------------------------------------------------------------
# shift maps k(x) and the moving set K(x) = k(x) + K0
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroShift:
    l: float = 0.0

    @property
    def dim(self) -> int | None:
        return None


@dataclass(frozen=True, eq=False)
class AffineShift:
    """k(x) = M x + c with Lipschitz constant l >= ||M||_2."""

    matrix: np.ndarray
    offset: np.ndarray | None = None
    l: float | None = None

    def __post_init__(self):
        M = _frozen_matrix(self.matrix)
        object.__setattr__(self, "matrix", M)
        n = M.shape[0]
        c = as_vector(np.zeros(n) if self.offset is None else self.offset, dim=n)
        object.__setattr__(self, "offset", c)
        spec = float(np.linalg.norm(M, 2))
        if self.l is None:
            object.__setattr__(self, "l", spec)
        elif self.l < spec - _EIG_SLACK:
            raise ValueError(f"declared l={self.l} is below the spectral norm {spec:.6g}")

    @property
    def dim(self) -> int | None:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MinBroadcastShift:
    """k(x) = (offset + min_i x_i) * ones; Lipschitz constant sqrt(n)."""

    offset: float
    n: int
    l: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        bound = math.sqrt(self.n)
        if self.l is None:
            object.__setattr__(self, "l", bound)
        elif self.l < bound - _EIG_SLACK:
            raise ValueError(f"declared l={self.l} is below sqrt(n)={bound:.6g}")

    @property
    def dim(self) -> int | None:
        return self.n


ShiftMap = ZeroShift | AffineShift | MinBroadcastShift


def apply_shift(shift: ShiftMap, x) -> np.ndarray:
    """Evaluate the translation k(x) of the moving set at anchor x."""
    v = as_vector(x, dim=shift.dim)
    if isinstance(shift, ZeroShift):
        return np.zeros(v.size)
    if isinstance(shift, AffineShift):
        return shift.matrix @ v + shift.offset
    if isinstance(shift, MinBroadcastShift):
        return np.full(v.size, shift.offset + float(v.min()))
    raise TypeError(f"unknown shift map {type(shift).__name__}")


@dataclass(frozen=True)
class MovingSet:
    """K(x) = k(x) + K0: a fixed closed convex base translated by a shift map."""

    base: BaseSet
    shift: ShiftMap

    def __post_init__(self):
        bd, sd = self.base.dim, self.shift.dim
        if bd is not None and sd is not None and bd != sd:
            raise ValueError(f"base dimension {bd} != shift dimension {sd}")

    @property
    def dim(self) -> int | None:
        return self.base.dim if self.base.dim is not None else self.shift.dim

    @property
    def l(self) -> float:
        return self.shift.l


# --------------------------------------------------------------------------
# solver configuration and problem bundle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SolverConfig:
    """Every scalar the algorithms leave free.

    `lam` is the projection step, `h` the discretization step, (alpha, beta,
    gamma) the ODE/stencil coefficients, `theta` the inertial weight (scalar
    or per-iteration sequence, each value in [0, 1]).
    """

    lam: float = 0.5
    h: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    theta: float | Sequence[float] | None = None
    tol: float = 1e-8
    max_iters: int = 5000
    inner_tol: float = 1e-10
    inner_max: int = 500
    dt: float = 1e-3
    t_end: float = 10.0

    def __post_init__(self):
        for name in ("lam", "h", "tol", "inner_tol", "dt", "t_end"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.inner_max < 1:
            raise ValueError("inner_max must be >= 1")
        if self.theta is not None:
            for t in np.atleast_1d(np.asarray(self.theta, dtype=float)):
                if not (0.0 <= t <= 1.0):
                    raise ValueError(f"theta value {t} outside [0, 1]")

    def theta_schedule(self, n_iters: int) -> np.ndarray:
        """Materialize the inertial weights for n_iters steps."""
        if self.theta is None:
            raise ValueError("theta required for inertial algorithms")
        if np.isscalar(self.theta):
            return np.full(n_iters, float(self.theta))
        vals = np.asarray(self.theta, dtype=float)
        if vals.size >= n_iters:
            return vals[:n_iters]
        return np.concatenate([vals, np.full(n_iters - vals.size, vals[-1])])


@dataclass(frozen=True, eq=False)
class QviProblem:
    """Operator + moving set, with an optional reference solution."""

    operator: OperatorSpec
    set: MovingSet
    x_ref: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        sd = self.set.dim
        if sd is not None and sd != self.operator.dim:
            raise ValueError(f"operator dimension {self.operator.dim} != set dimension {sd}")
        if self.x_ref is not None:
            object.__setattr__(self, "x_ref", as_vector(self.x_ref, dim=self.operator.dim))

    @property
    def dim(self) -> int:
        return self.operator.dim
