"""Problem constructors: the 1-D analytic toy, the implicit obstacle problem,
and generalized Nash games, each bundled as a QviProblem with diagnostics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import fixed_point_residual
from .core import (
    AffineShift,
    Box,
    MinBroadcastShift,
    MovingSet,
    NonnegOrthant,
    OperatorSpec,
    QviProblem,
    apply_operator,
    as_vector,
)
from .projections import project_moving

__all__ = [
    "build_toy_1d",
    "ObstacleProblem",
    "build_obstacle",
    "psor_solve",
    "obstacle_energy",
    "check_obstacle_complementarity",
    "GnepGame",
    "build_gnep",
    "gnep_best_response_check",
    "gnep_projected_dynamics_rhs",
]

PSOR_OMEGA = 1.5
PSOR_MAX_SWEEPS = 100_000


def build_toy_1d() -> QviProblem:
    """Desk-scale 1-D instance with a closed-form solution.

    T(x) = x - 2 (mu = lip = 1), K(x) = 0.25 x + [0, 1] (l = 0.25). The unique
    solution is x* = 4/3: K(4/3) = [1/3, 4/3] and the projection of
    x* - lam T(x*) clamps at the upper boundary for any lam > 0.
    """
    op = OperatorSpec.affine([[1.0]], [-2.0], mu=1.0, lip=1.0)
    mset = MovingSet(base=Box([0.0], [1.0]), shift=AffineShift([[0.25]]))
    return QviProblem(operator=op, set=mset, x_ref=[4.0 / 3.0], label="toy-1d")


# --------------------------------------------------------------------------
# obstacle problem
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ObstacleProblem:
    """Finite-difference implicit obstacle instance on [a, b].

    The operator is F(x) = A x - f with A = tridiag(-1, 2, -1)/delta^2 (SPD,
    homogeneous Dirichlet ends); the moving set is K(x) = M(x) 1 + R^n_+ with
    cost map M(x) = k_offset + min_i x_i.
    """

    n: int
    a: float
    b: float
    delta: float
    f: np.ndarray
    k_offset: float
    stiffness: np.ndarray
    problem: QviProblem

    def cost_map(self, x) -> float:
        return self.k_offset + float(as_vector(x, dim=self.n).min())


def _stiffness(n: int, delta: float) -> np.ndarray:
    A = (np.diag(np.full(n, 2.0)) + np.diag(np.full(n - 1, -1.0), 1)
         + np.diag(np.full(n - 1, -1.0), -1)) / delta**2
    return A


def psor_solve(A: np.ndarray, f: np.ndarray, k_offset: float,
               omega: float = PSOR_OMEGA, tol: float = 1e-13,
               max_sweeps: int = PSOR_MAX_SWEEPS) -> np.ndarray:
    """Projected SOR oracle for the implicit obstacle complementarity system.

    Sweeps x_i <- max(psi, SOR update) with the obstacle level
    psi = k_offset + min(x) recomputed every sweep.
    """
    n = len(f)
    x = np.zeros(n)
    for _ in range(max_sweeps):
        delta_max = 0.0
        psi = k_offset + float(x.min())
        for i in range(n):
            xi = x[i] + omega * (f[i] - A[i] @ x) / A[i, i]
            xi = max(xi, psi)
            delta_max = max(delta_max, abs(xi - x[i]))
            x[i] = xi
        if delta_max <= tol:
            return x
    raise RuntimeError(f"PSOR did not reach {tol} within {max_sweeps} sweeps")


def build_obstacle(n: int, f, k_offset: float, a: float = 0.0,
                   b: float = 1.0) -> ObstacleProblem:
    """Discretized implicit obstacle QVI with a PSOR reference solution.

    Self-feasibility (x in K(x)) requires k_offset <= 0, since every component
    exceeds the minimum; positive offsets make the problem unsolvable and are
    rejected.
    """
    if n < 2:
        raise ValueError("need at least 2 interior grid points")
    if not b > a:
        raise ValueError("invalid grid: b must exceed a")
    if k_offset > 0:
        raise ValueError("k_offset must be <= 0 for the QVI to admit solutions")
    fv = as_vector(np.full(n, float(f)) if np.isscalar(f) else f, dim=n)
    delta = (b - a) / (n + 1)
    A = _stiffness(n, delta)
    eigs = np.linalg.eigvalsh(A)
    op = OperatorSpec.affine(A, -fv, mu=float(eigs[0]), lip=float(eigs[-1]))
    mset = MovingSet(base=NonnegOrthant(), shift=MinBroadcastShift(k_offset, n))
    x_ref = psor_solve(A, fv, k_offset)
    problem = QviProblem(operator=op, set=mset, x_ref=x_ref, label=f"obstacle-n{n}")
    res = fixed_point_residual(problem, x_ref, 1.0 / op.lip)
    if res > 1e-8:
        raise RuntimeError(f"PSOR reference failed validation: residual {res:.3g}")
    return ObstacleProblem(n=n, a=a, b=b, delta=delta, f=fv, k_offset=k_offset,
                           stiffness=A, problem=problem)


def obstacle_energy(prob: ObstacleProblem, x, y) -> float:
    """Discrete energy I[y] = y^T A x - 2 f^T y (Dirichlet energy minus twice
    the load term when x = y)."""
    xv = as_vector(x, dim=prob.n)
    yv = as_vector(y, dim=prob.n)
    return float(yv @ (prob.stiffness @ xv) - 2.0 * prob.f @ yv)


def check_obstacle_complementarity(prob: ObstacleProblem, x, tol: float) -> dict:
    """Componentwise slack/feasibility/complementarity check at x.

    (i) A x - f >= -tol, (ii) x - M(x) 1 >= -tol,
    (iii) |(A x - f)_i (x - M(x) 1)_i| <= tol.
    """
    xv = as_vector(x, dim=prob.n)
    slack = prob.stiffness @ xv - prob.f
    gap = xv - prob.cost_map(xv)
    slack_violation = float(max(0.0, -slack.min(), -gap.min()))
    comp_violation = float(np.abs(slack * gap).max())
    return {
        "feasible": bool(slack.min() >= -tol and gap.min() >= -tol),
        "slack_violation": slack_violation,
        "comp_violation": comp_violation,
        "passes": bool(slack.min() >= -tol and gap.min() >= -tol and comp_violation <= tol),
    }


# --------------------------------------------------------------------------
# generalized Nash games (scalar decision per player)
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GnepGame:
    """m scalar players with quadratic payoffs and affinely coupled box bounds.

    Player i minimizes U_i(x) = q_i x_i^2 / 2 + x_i (coupling_i . x) - a_i x_i
    over S_i(x^{-i}) = [(M x)_i + lo_i, (M x)_i + hi_i]. The stacked gradient
    is affine, T(x) = (diag(q) + coupling) x - a, and K(x) = M x + Box(lo, hi)
    keeps the translated moving-set form.
    """

    q: np.ndarray
    coupling: np.ndarray
    a: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    shift_matrix: np.ndarray
    problem: QviProblem

    @property
    def players(self) -> int:
        return self.q.size

    def utility(self, i: int, xi: float, x) -> float:
        xv = as_vector(x, dim=self.players)
        return float(0.5 * self.q[i] * xi * xi + xi * (self.coupling[i] @ xv)
                     - self.a[i] * xi)

    def bounds_for(self, i: int, x) -> tuple[float, float]:
        shift = float(self.shift_matrix[i] @ as_vector(x, dim=self.players))
        return shift + self.lo[i], shift + self.hi[i]

    def best_response(self, i: int, x) -> float:
        lo, hi = self.bounds_for(i, x)
        xv = as_vector(x, dim=self.players)
        unconstrained = (self.a[i] - float(self.coupling[i] @ xv)) / self.q[i]
        return float(np.clip(unconstrained, lo, hi))


def _br_fixed_point(game_data, x0: np.ndarray, damping: float = 0.5,
                    tol: float = 1e-13, max_iters: int = 100_000) -> np.ndarray:
    q, coupling, a, lo, hi, M = game_data
    x = x0.copy()
    for _ in range(max_iters):
        shift = M @ x
        br = np.clip((a - coupling @ x) / q, shift + lo, shift + hi)
        xn = (1.0 - damping) * x + damping * br
        if np.abs(xn - x).max() <= tol:
            return xn
        x = xn
    raise RuntimeError("best-response iteration did not converge")


def build_gnep(q, coupling, a, lo, hi, shift_matrix=None) -> GnepGame:
    """Assemble a GnepGame; the reference equilibrium comes from a damped
    best-response fixed-point oracle.
    """
    qv = as_vector(q)
    m = qv.size
    if np.any(qv <= 0):
        raise ValueError("own-variable payoff must be convex: all q_i > 0")
    C = np.array(coupling, dtype=float)
    if C.shape != (m, m):
        raise ValueError(f"coupling must be {m}x{m}")
    if np.any(np.abs(np.diag(C)) > 0):
        raise ValueError("coupling diagonal must be zero (own terms live in q)")
    av = as_vector(a, dim=m)
    lov = as_vector(lo, dim=m)
    hiv = as_vector(hi, dim=m)
    M = np.zeros((m, m)) if shift_matrix is None else np.array(shift_matrix, dtype=float)
    if M.shape != (m, m):
        raise ValueError(f"shift_matrix must be {m}x{m}")
    if np.any(np.abs(np.diag(M)) > 0):
        raise ValueError("a player's bounds cannot depend on their own variable")

    A = np.diag(qv) + C
    op = OperatorSpec.affine(A, -av, mu=max(0.0, float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())),
                             lip=float(np.linalg.norm(A, 2)))
    mset = MovingSet(base=Box(lov, hiv), shift=AffineShift(M))
    x_ref = _br_fixed_point((qv, C, av, lov, hiv, M), np.zeros(m))
    problem = QviProblem(operator=op, set=mset, x_ref=x_ref, label=f"gnep-{m}p")
    return GnepGame(q=qv, coupling=C, a=av, lo=lov, hi=hiv, shift_matrix=M,
                    problem=problem)


def gnep_best_response_check(game: GnepGame, x, tol: float) -> dict:
    """Max unilateral improvement over all players; equilibrium iff <= tol."""
    xv = as_vector(x, dim=game.players)
    gap = 0.0
    for i in range(game.players):
        best = game.best_response(i, xv)
        gap = max(gap, game.utility(i, float(xv[i]), xv) - game.utility(i, best, xv))
    return {"is_equilibrium": gap <= tol, "worst_player_gap": gap}


def gnep_projected_dynamics_rhs(game: GnepGame, x, alpha_step: float) -> np.ndarray:
    """Right-hand side of the whole-set projected dynamics,
    Pi_{K(x)}(x - alpha T(x)) - x; zero exactly at steady states."""
    if not alpha_step > 0:
        raise ValueError("alpha_step must be > 0")
    xv = as_vector(x, dim=game.players)
    p = game.problem
    step = xv - alpha_step * apply_operator(p.operator, xv)
    return project_moving(p.set, xv, step) - xv
