"""Residuals, operator-constant estimation and runnable stability diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BaseSet, Box, OperatorSpec, QviProblem, apply_operator, apply_shift, as_vector
from .projections import project_base, project_moving

__all__ = [
    "FeasibleRange",
    "fixed_point_residual",
    "gvi_residual",
    "feasible_lambda_range",
    "stability_conditions",
    "check_vasiliev",
    "estimate_operator_constants",
]


def fixed_point_residual(p: QviProblem, x, lam: float) -> float:
    """||x - Pi_{K(x)}(x - lam T(x))||; zero exactly at solutions."""
    if not lam > 0:
        raise ValueError("lam must be > 0")
    v = as_vector(x, dim=p.dim)
    step = v - lam * apply_operator(p.operator, v)
    return float(np.linalg.norm(v - project_moving(p.set, v, step)))


def gvi_residual(p: QviProblem, x, lam: float) -> float:
    """||(x - k(x)) - Pi_{K0}(x - lam T(x) - k(x))||.

    Agrees with `fixed_point_residual` for any moving set of translated form.
    """
    if not lam > 0:
        raise ValueError("lam must be > 0")
    v = as_vector(x, dim=p.dim)
    k = apply_shift(p.set.shift, v)
    step = v - lam * apply_operator(p.operator, v) - k
    return float(np.linalg.norm((v - k) - project_base(p.set.base, step)))


@dataclass(frozen=True)
class FeasibleRange:
    """Open interval of step sizes lam with mu^2 lam^2 - 2 lam (mu - l L) + l < 0."""

    lo: float
    hi: float
    nonempty: bool


def feasible_lambda_range(mu: float, lip: float, l: float) -> FeasibleRange:
    """Step-size window from the quadratic stability condition.

    Empty (a value, not an error) when mu - l*lip <= 0 or the discriminant
    (mu - l*lip)^2 - mu^2 l is nonpositive.
    """
    if not mu > 0:
        raise ValueError("mu must be > 0")
    if lip < mu:
        raise ValueError("lip must be >= mu")
    if l < 0:
        raise ValueError("l must be >= 0")
    a = mu - l * lip
    disc = a * a - mu * mu * l
    if a <= 0 or disc <= 0:
        return FeasibleRange(lo=math.nan, hi=math.nan, nonempty=False)
    root = math.sqrt(disc)
    return FeasibleRange(lo=(a - root) / mu**2, hi=(a + root) / mu**2, nonempty=True)


def stability_conditions(mu: float, lip: float, l: float, alpha: float,
                         beta: float, gamma: float, lam: float) -> dict:
    """Report of the continuous-method hypotheses at the given constants.

    These are reported rather than enforced: the discrete schemes are observed
    to converge outside them. `within_stated_theory` is the conjunction, with
    gamma != 1 flagged as outside the analyzed case.
    """
    quad = 2.0 * lam * (mu - l * lip) - mu * mu * lam * lam
    report = {
        "l_below_one": l < 1.0,
        "l_below_one_minus_two_beta": l < 1.0 - 2.0 * beta,
        "alpha_damping_ok": alpha * (1.0 - l) >= 0.0,
        "inertial_balance_ok": (1.0 - l) * (alpha + beta) >= 3.0 * alpha,
        "lambda_window_ok": l < quad,
        "gamma_is_one": gamma == 1.0,
        "lambda_quadratic_value": quad,
    }
    report["within_stated_theory"] = all(
        report[k] for k in ("l_below_one", "l_below_one_minus_two_beta",
                            "alpha_damping_ok", "inertial_balance_ok",
                            "lambda_window_ok", "gamma_is_one"))
    return report


def check_vasiliev(op: OperatorSpec, pairs: int, seed: int = 0,
                   scale: float = 5.0) -> dict:
    """Defect of ||Tx-Ty||^2 + mu L ||x-y||^2 <= (L+mu) <Tx-Ty, x-y> on random pairs."""
    if not (op.mu > 0 and op.lip > 0):
        raise ValueError("check requires mu > 0 and lip > 0")
    if pairs < 1:
        raise ValueError("pairs must be >= 1")
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(pairs):
        x = scale * rng.standard_normal(op.dim)
        y = scale * rng.standard_normal(op.dim)
        dT = apply_operator(op, x) - apply_operator(op, y)
        d = x - y
        lhs = float(dT @ dT) + op.mu * op.lip * float(d @ d)
        rhs = (op.lip + op.mu) * float(dT @ d)
        worst = max(worst, lhs - rhs)
    return {"max_defect": worst, "pairs": pairs}


def _draw_in_set(box: BaseSet, rng: np.random.Generator, dim: int) -> np.ndarray:
    if isinstance(box, Box):
        return rng.uniform(box.lo, box.hi)
    return project_base(box, 5.0 * rng.standard_normal(dim))


def estimate_operator_constants(op: OperatorSpec, samples: int, box: BaseSet,
                                seed: int = 0) -> dict:
    """Empirical (mu_hat, lip_hat) from random pairs inside the given set."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    rng = np.random.default_rng(seed)
    mu_hat = np.inf
    lip_hat = 0.0
    for _ in range(samples):
        x = _draw_in_set(box, rng, op.dim)
        y = _draw_in_set(box, rng, op.dim)
        d = x - y
        nd2 = float(d @ d)
        if nd2 == 0.0:
            continue  # degenerate pair
        dT = apply_operator(op, x) - apply_operator(op, y)
        mu_hat = min(mu_hat, float(dT @ d) / nd2)
        lip_hat = max(lip_hat, float(np.linalg.norm(dT)) / math.sqrt(nd2))
    if not np.isfinite(mu_hat):
        raise ValueError("all sampled pairs were degenerate")
    return {"mu_hat": mu_hat, "lip_hat": lip_hat}
