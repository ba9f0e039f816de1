"""Iterative schemes for the moving-set QVI.

One gradient-projection baseline, two implicit schemes solved by an averaged
inner fixed-point loop, two explicit schemes applied verbatim, and three
two-step inertial variants. All schemes stop on the fixed-point residual of
the newest iterate, so traces are comparable across algorithms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .analysis import fixed_point_residual
from .core import QviProblem, SolverConfig, apply_operator, as_vector
from .projections import project_moving
from .trace import NO_REF, Trace

__all__ = [
    "IterationResult",
    "InnerLoopError",
    "DivergenceError",
    "gradient_projection",
    "algorithm1_implicit",
    "algorithm2_implicit",
    "explicit_scheme",
    "short_explicit",
    "two_step_inertial",
    "check_descent_inequality",
]

DIVERGENCE_NORM = 1e12


class InnerLoopError(RuntimeError):
    """Inner fixed-point loop exhausted its budget."""

    def __init__(self, estimate: float, inner_max: int):
        super().__init__(
            f"inner fixed-point loop failed to converge within {inner_max} iterations; "
            f"estimated contraction factor lam*lip + alpha/(2 h^3) = {estimate:.6g} "
            f"(must be < 1 for a guaranteed contraction)")
        self.estimate = estimate


class DivergenceError(RuntimeError):
    """Iterate norm exceeded the divergence guard."""

    def __init__(self, iteration: int, norm: float):
        super().__init__(f"iterate diverged at outer step {iteration} (norm {norm:.3g})")
        self.iteration = iteration


@dataclass
class IterationResult:
    x_final: np.ndarray
    iterations: int
    converged: bool
    trace: Trace
    inner_iterations_total: int = 0
    inner_contraction_estimate: float | None = None
    contraction_flagged: bool = False
    descent_reports: list | None = None


def _step_residual(p: QviProblem, cfg: SolverConfig, x: np.ndarray) -> float:
    return fixed_point_residual(p, x, cfg.lam)


def _dist_ref(p: QviProblem, x: np.ndarray) -> float:
    if p.x_ref is None:
        return NO_REF
    return float(np.linalg.norm(x - p.x_ref))


def _guard(x: np.ndarray, iteration: int) -> None:
    nrm = float(np.linalg.norm(x))
    if not np.isfinite(nrm) or nrm > DIVERGENCE_NORM:
        raise DivergenceError(iteration, nrm)


def _gp_step(p: QviProblem, cfg: SolverConfig, x: np.ndarray) -> np.ndarray:
    return project_moving(p.set, x, x - cfg.lam * apply_operator(p.operator, x))


def _init_history(p: QviProblem, cfg: SolverConfig, seeds) -> list:
    """Four history points (x_{n-2}, x_{n-1}, x_n, x_{n+1}) from 3 or 4 seeds.

    The stencils consume four points but the method takes three starting
    values; a missing fourth is generated by one gradient-projection step
    from the last seed.
    """
    pts = [as_vector(s, dim=p.dim) for s in seeds]
    if len(pts) == 3:
        pts.append(_gp_step(p, cfg, pts[-1]))
    if len(pts) != 4:
        raise ValueError(f"expected 3 seeds (plus an optional extra history point), got {len(pts)}")
    return pts


def _run(p: QviProblem, cfg: SolverConfig, state, advance, newest) -> IterationResult:
    """Shared outer loop: stop when the newest iterate's residual meets tol."""
    trace = Trace()
    x = newest(state)
    res = _step_residual(p, cfg, x)
    trace.append(0, res, _dist_ref(p, x), 0.0)
    k = 0
    inner_total = 0
    while res > cfg.tol and k < cfg.max_iters:
        x_prev = x
        state, inner = advance(state, k)
        inner_total += inner
        x = newest(state)
        k += 1
        _guard(x, k)
        res = _step_residual(p, cfg, x)
        trace.append(k, res, _dist_ref(p, x), float(np.linalg.norm(x - x_prev)))
    return IterationResult(x_final=x, iterations=k, converged=res <= cfg.tol,
                           trace=trace, inner_iterations_total=inner_total)


def gradient_projection(p: QviProblem, cfg: SolverConfig, x0) -> IterationResult:
    """x_{n+1} = Pi_{K(x_n)}(x_n - lam T(x_n))."""
    x0 = as_vector(x0, dim=p.dim)

    def advance(x, _k):
        return _gp_step(p, cfg, x), 0

    return _run(p, cfg, x0, advance, lambda x: x)


def _inner_fixed_point(G, w0: np.ndarray, cfg: SolverConfig, estimate: float):
    """Averaged iteration w <- (w + G(w))/2 until the update is below inner_tol.

    Averaging keeps the loop convergent at the nonexpansive boundary
    (estimated factor exactly 1), where the plain iteration oscillates.
    """
    w = w0
    for k in range(cfg.inner_max):
        wn = 0.5 * (w + G(w))
        if float(np.linalg.norm(wn - w)) <= cfg.inner_tol:
            return wn, k + 1
        w = wn
    raise InnerLoopError(estimate, cfg.inner_max)


def _implicit_run(p: QviProblem, cfg: SolverConfig, seeds, correction, t_point,
                  estimate: float) -> IterationResult:
    hist = _init_history(p, cfg, seeds)
    flagged = estimate >= 1.0
    if flagged:
        warnings.warn(
            f"inner contraction estimate {estimate:.6g} >= 1; "
            "the implicit solve may fail to converge", stacklevel=3)
    reports = [] if p.x_ref is not None else None

    def advance(hist, _k):
        xm2, xm1, xn, xp1 = hist

        def G(w):
            corr = correction(w, xp1, xn, xm1, xm2)
            return project_moving(p.set, xn, xn - cfg.lam * t_point(w, xp1) - corr)

        w, inner = _inner_fixed_point(G, xp1, cfg, estimate)
        if reports is not None:
            reports.append(check_descent_inequality(p, cfg, (xm2, xm1, xn, xp1, w), p.x_ref))
        return [xm1, xn, xp1, w], inner

    result = _run(p, cfg, hist, advance, lambda h: h[-1])
    result.inner_contraction_estimate = estimate
    result.contraction_flagged = flagged
    result.descent_reports = reports
    return result


def algorithm1_implicit(p: QviProblem, cfg: SolverConfig, seeds) -> IterationResult:
    """Central-difference implicit scheme; T is evaluated at the unknown x_{n+2}.

    Each outer step solves
    w = Pi_{K(x_n)}(x_n - lam T(w) - [alpha w - 2(alpha - beta h) x_{n+1}
        - 2(2 beta h - gamma h^2) x_n + 2(alpha + beta h - gamma h^2) x_{n-1}
        - alpha x_{n-2}] / (2 h^3))
    by the averaged inner loop. `seeds` is 3 vectors plus an optional explicit
    fourth history point.
    """
    a, b, g, h = cfg.alpha, cfg.beta, cfg.gamma, cfg.h
    h3 = 2.0 * h ** 3

    def correction(w, xp1, xn, xm1, xm2):
        return (a * w - 2.0 * (a - b * h) * xp1 - 2.0 * (2.0 * b * h - g * h * h) * xn
                + 2.0 * (a + b * h - g * h * h) * xm1 - a * xm2) / h3

    estimate = cfg.lam * p.operator.lip + a / h3
    return _implicit_run(p, cfg, seeds, correction, lambda w, xp1: apply_operator(p.operator, w),
                         estimate)


def algorithm2_implicit(p: QviProblem, cfg: SolverConfig, seeds) -> IterationResult:
    """Forward-difference implicit scheme; T is evaluated at the known x_{n+1}.

    Only the alpha w/(2 h^3) term is implicit; the correction pattern is
    -2(alpha - beta h - gamma h^2) x_{n+1} - 2(2 beta h + gamma h^2) x_n
    + 2(alpha + beta h) x_{n-1} - alpha x_{n-2}.
    """
    a, b, g, h = cfg.alpha, cfg.beta, cfg.gamma, cfg.h
    h3 = 2.0 * h ** 3

    def correction(w, xp1, xn, xm1, xm2):
        return (a * w - 2.0 * (a - b * h - g * h * h) * xp1
                - 2.0 * (2.0 * b * h + g * h * h) * xn
                + 2.0 * (a + b * h) * xm1 - a * xm2) / h3

    estimate = a / h3
    return _implicit_run(p, cfg, seeds, correction,
                         lambda w, xp1: apply_operator(p.operator, xp1), estimate)


def explicit_scheme(p: QviProblem, cfg: SolverConfig, seeds) -> IterationResult:
    """Explicit recurrence with the history correction inside the projection:

    x_{n+2} = (hh/(1+hh)) Pi_{K(x_n)}[(1 - 1/h + 2/h^2) x_n - lam T(x_n)
              - ((2h-2) x_{n+1} + (2+2h-2h^2) x_{n-1} - x_{n-2}) / (2 h^3)],
    hh = 2 h^3. Its fixed points need not solve the QVI on constrained sets;
    the residual column of the trace records the discrepancy.
    """
    h = cfg.h
    hh = 2.0 * h ** 3
    pref = hh / (1.0 + hh)
    hist = _init_history(p, cfg, seeds)

    def advance(hist, _k):
        xm2, xm1, xn, xp1 = hist
        arg = ((1.0 - 1.0 / h + 2.0 / h ** 2) * xn - cfg.lam * apply_operator(p.operator, xn)
               - ((2.0 * h - 2.0) * xp1 + (2.0 + 2.0 * h - 2.0 * h * h) * xm1 - xm2) / hh)
        w = pref * project_moving(p.set, xn, arg)
        return [xm1, xn, xp1, w], 0

    return _run(p, cfg, hist, advance, lambda hst: hst[-1])


def short_explicit(p: QviProblem, cfg: SolverConfig, seeds) -> IterationResult:
    """Reduced explicit formula 3 x_{n+2} - 2 x_n + x_{n-2} = 2 Pi_{K(x_n)}(x_n - lam T(x_n))."""
    hist = _init_history(p, cfg, seeds)

    def advance(hist, _k):
        xm2, xm1, xn, xp1 = hist
        w = (2.0 * _gp_step(p, cfg, xn) + 2.0 * xn - xm2) / 3.0
        return [xm1, xn, xp1, w], 0

    return _run(p, cfg, hist, advance, lambda hst: hst[-1])


def two_step_inertial(p: QviProblem, cfg: SolverConfig, seeds,
                      variant: str = "A") -> IterationResult:
    """Two-step inertial schemes with extrapolation z_n = x_n + theta_n (x_n - x_{n-1}).

    A: x_{n+2} = (2/3) Pi_{K(x_n)}(3 x_n - lam T(z_n) - x_{n-1})
    B: x_{n+2} = (2/3) Pi_{K(x_n)}(3 z_n - lam T(z_n) - x_{n-1})
    C: x_{n+2} = (2/3) Pi_{K(z_n)}(z_n - lam T(z_n) - x_{n-1})

    Limits are recorded with their residuals; they need not solve the QVI.
    """
    if variant not in ("A", "B", "C"):
        raise ValueError(f"variant must be A, B or C, got {variant!r}")
    thetas = cfg.theta_schedule(cfg.max_iters)
    pts = [as_vector(s, dim=p.dim) for s in seeds]
    if len(pts) != 3:
        raise ValueError(f"expected 3 seeds, got {len(pts)}")

    def advance(hist, k):
        xm1, xn = hist[-2], hist[-1]
        z = xn + thetas[k] * (xn - xm1)
        tz = apply_operator(p.operator, z)
        if variant == "A":
            w = (2.0 / 3.0) * project_moving(p.set, xn, 3.0 * xn - cfg.lam * tz - xm1)
        elif variant == "B":
            w = (2.0 / 3.0) * project_moving(p.set, xn, 3.0 * z - cfg.lam * tz - xm1)
        else:
            w = (2.0 / 3.0) * project_moving(p.set, z, z - cfg.lam * tz - xm1)
        return [hist[-1], w], 0

    return _run(p, cfg, [pts[-2], pts[-1]], advance, lambda hst: hst[-1])


def check_descent_inequality(p: QviProblem, cfg: SolverConfig, history, x_star) -> dict:
    """Evaluate both sides of the descent inequality on 5 consecutive iterates.

    (alpha - beta h + gamma h^2) ||x - x_{n+2}||^2
      <= alpha ||x - 2 x_{n+1} + 2 x_{n-1} - x_{n-2}||^2
         - alpha ||x_{n+2} - 2 x_{n+1} + 2 x_{n-1} - x_{n-2}||^2
         + beta h ||x_{n+1} - 2 x_n + x_{n-1}||^2
         + gamma h^2 ||x_n - x_{n-1} + x - x_{n+2}||^2
         - gamma h^2 ||x_n - x_{n-1}||^2

    The statement covers genuine iterates of the implicit scheme with a
    monotone operator; for arbitrary points this only produces a report.
    """
    pts = [as_vector(v, dim=p.dim) for v in history]
    if len(pts) != 5:
        raise ValueError(f"need 5 consecutive iterates, got {len(pts)}")
    xm2, xm1, xn, xp1, xp2 = pts
    x = as_vector(x_star, dim=p.dim)
    a, b, g, h = cfg.alpha, cfg.beta, cfg.gamma, cfg.h

    def sq(v):
        return float(v @ v)

    lhs = (a - b * h + g * h * h) * sq(x - xp2)
    rhs = (a * sq(x - 2.0 * xp1 + 2.0 * xm1 - xm2)
           - a * sq(xp2 - 2.0 * xp1 + 2.0 * xm1 - xm2)
           + b * h * sq(xp1 - 2.0 * xn + xm1)
           + g * h * h * sq(xn - xm1 + x - xp2)
           - g * h * h * sq(xn - xm1))
    tol = 1e-12 * max(1.0, abs(lhs), abs(rhs))
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + tol}
