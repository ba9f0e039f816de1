"""Fixed-step integration of the third-order projected dynamical system.

The system is alpha x''' + beta x'' + gamma x' + x = Pi_{K(x)}(x - lam T(x)),
reduced to first order in the state (x, v, a). Coefficients are held constant
per run; the projection makes the right-hand side nonsmooth, so only
fixed-step RK4/Euler are offered (adaptive error control is unreliable here).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import QviProblem, SolverConfig, apply_operator, as_vector
from .projections import project_moving

__all__ = [
    "DynState",
    "Trajectory",
    "DecayFit",
    "DivergenceError",
    "rhs_third_order",
    "integrate",
    "fit_decay_rate",
]

BLOWUP_NORM = 1e12


class DivergenceError(RuntimeError):
    """Raised when an integrated state stops being finite or exceeds the guard."""

    def __init__(self, t: float):
        super().__init__(f"trajectory blew up at t={t:.6g}")
        self.t = t


@dataclass(frozen=True, eq=False)
class DynState:
    """Position x and its first two derivatives."""

    x: np.ndarray
    v: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x))
        object.__setattr__(self, "v", as_vector(self.v, dim=self.x.size))
        object.__setattr__(self, "a", as_vector(self.a, dim=self.x.size))

    @classmethod
    def at_rest(cls, x) -> "DynState":
        x = as_vector(x)
        return cls(x=x, v=np.zeros(x.size), a=np.zeros(x.size))


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(self.states) != t.size:
            raise ValueError("times and states must have equal length")
        if t.size >= 2:
            dts = np.diff(t)
            if np.any(dts <= 0):
                raise ValueError("times must be strictly increasing")
            if np.max(np.abs(dts - dts[0])) > 1e-12:
                raise ValueError("times must be uniformly spaced")

    def positions(self) -> np.ndarray:
        return np.stack([s.x for s in self.states])

    def distances_to(self, x_ref) -> np.ndarray:
        x_ref = as_vector(x_ref)
        return np.linalg.norm(self.positions() - x_ref, axis=1)


def rhs_third_order(p: QviProblem, cfg: SolverConfig, s: DynState) -> DynState:
    """Derivative of (x, v, a): x' = v, v' = a,
    a' = (Pi_{K(x)}(x - lam T(x)) - x - gamma v - beta a) / alpha.
    """
    if not cfg.alpha > 0:
        raise ValueError("alpha must be > 0: with alpha = 0 the system degenerates "
                         "to second order; use the discrete schemes instead")
    pi = project_moving(p.set, s.x, s.x - cfg.lam * apply_operator(p.operator, s.x))
    return DynState(x=s.v, v=s.a, a=(pi - s.x - cfg.gamma * s.v - cfg.beta * s.a) / cfg.alpha)


def _pack(s: DynState) -> np.ndarray:
    return np.concatenate([s.x, s.v, s.a])


def _unpack(y: np.ndarray, n: int) -> DynState:
    return DynState(x=y[:n], v=y[n:2 * n], a=y[2 * n:])


def integrate(p: QviProblem, cfg: SolverConfig, init: DynState,
              method: str = "rk4") -> Trajectory:
    """Fixed-step integration from t=0 to cfg.t_end; records every state.

    RK4 uses the classical 4-stage tableau. Raises DivergenceError, naming the
    time, if any state exceeds the blow-up guard.
    """
    if method not in ("rk4", "euler"):
        raise ValueError(f"unknown method {method!r}")
    if not cfg.t_end > cfg.dt:
        raise ValueError("t_end must exceed dt")
    n = init.x.size
    if n != p.dim:
        raise ValueError(f"state dimension {n} != problem dimension {p.dim}")

    def f(y: np.ndarray) -> np.ndarray:
        return _pack(rhs_third_order(p, cfg, _unpack(y, n)))

    nsteps = int(round(cfg.t_end / cfg.dt))
    times = np.arange(nsteps + 1) * cfg.dt
    y = _pack(init)
    states = [init]
    dt = cfg.dt
    for i in range(nsteps):
        if method == "rk4":
            k1 = f(y)
            k2 = f(y + 0.5 * dt * k1)
            k3 = f(y + 0.5 * dt * k2)
            k4 = f(y + dt * k3)
            y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            y = y + dt * f(y)
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > BLOWUP_NORM:
            raise DivergenceError(times[i + 1])
        states.append(_unpack(y, n))
    return Trajectory(times=times, states=tuple(states))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log ||x(t) - x_ref||^2 against t."""

    rho_hat: float
    eta_hat: float
    r_squared: float


def fit_decay_rate(traj: Trajectory, x_ref, t_skip: float) -> DecayFit | None:
    """Fit the post-transient decay rate; slope is -2 eta_hat.

    Returns None when every post-skip distance is below 1e-14 (the trajectory
    is already at the reference, so there is nothing to fit).
    """
    d = traj.distances_to(x_ref)
    mask = (traj.times >= t_skip) & (d > 1e-14)
    if not mask.any():
        return None
    if mask.sum() < 3:
        raise ValueError("need at least 3 post-skip samples with positive distance")
    t = traj.times[mask]
    y = np.log(d[mask] ** 2)
    design = np.vstack([t, np.ones_like(t)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ np.array([slope, intercept])
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - ss_res / ss_tot)
    return DecayFit(rho_hat=float(np.exp(intercept / 2.0)),
                    eta_hat=float(-slope / 2.0),
                    r_squared=r2)
