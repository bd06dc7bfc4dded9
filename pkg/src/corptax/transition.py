"""Perfect-foresight transitions after an unanticipated permanent reform.

The per-period equilibrium conditions are stacked over ``t = 0..T-1`` with
the pre-reform state feeding period 0 and the post-reform steady state
standing in for period ``T``. Each period couples only to its neighbours, so
the Jacobian is block tridiagonal; it is assembled with three colour groups
of complex-step evaluations and factorized as a sparse matrix.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import model as M
from .model import IDX, NVAR, VARS, ModelError, ModelSpec, VintagePolicy
from .newton import CSTEP, SolverError, damped_newton
from .steady_state import SteadyState, solve_steady_state
from .taxcode import lambda_ss

log = logging.getLogger(__name__)

DEFAULT_HORIZON = 300
GUESS_RAMP = 50


class HorizonError(SolverError):
    pass


@dataclass
class TransitionProblem:
    spec_post: ModelSpec
    vintage: VintagePolicy
    initial: np.ndarray          # state at t = -1 (pre-reform steady state)
    terminal: SteadyState
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=float)
        if self.initial.shape != (NVAR,):
            raise ModelError(f"initial state must have {NVAR} entries")
        if self.horizon < 2:
            raise ModelError(f"horizon must be at least 2, got {self.horizon}")
        if self.terminal.spec != self.spec_post:
            raise ModelError("terminal steady state was solved for a different economy")
        if self.vintage.sched_after != self.spec_post.policy.sched:
            raise ModelError("vintage 'after' schedule must be the post-reform schedule")

    @property
    def terminal_x(self) -> np.ndarray:
        """Terminal state with each vintage's PDV at its own steady-state value."""
        x = self.terminal.x.copy()
        x[IDX["lam_b"]] = lambda_ss(self.vintage.sched_before.rate_dbal, self.spec_post.beta)
        x[IDX["lam_a"]] = lambda_ss(self.vintage.sched_after.rate_dbal, self.spec_post.beta)
        return x

    @property
    def periods(self) -> np.ndarray:
        return np.arange(self.horizon)

    def shifted(self, X):
        """(previous, next) state arrays for a stacked path ``X``."""
        Xm = np.concatenate([self.initial[None, :].astype(X.dtype), X[:-1]], axis=0)
        Xp = np.concatenate([X[1:], self.terminal_x[None, :].astype(X.dtype)], axis=0)
        return Xm, Xp

    def stacked_residuals(self, z):
        X = np.reshape(z, (self.horizon, NVAR))
        Xm, Xp = self.shifted(X)
        return M.residuals(self.spec_post, self.vintage, Xm, X, Xp, self.periods).ravel()


def make_problem(pre: SteadyState, spec_post: ModelSpec, new_investment_only: bool = True,
                 horizon: int = DEFAULT_HORIZON, terminal: SteadyState | None = None,
                 reform_period: int = 0) -> TransitionProblem:
    """Reform problem starting from the pre-reform steady state ``pre``.

    With ``new_investment_only`` the pre-reform undeducted stock keeps its
    old schedule; otherwise it switches to the new one at the reform date.
    """
    initial = pre.as_initial_state()
    if new_investment_only:
        before = pre.spec.policy.sched
    else:
        before = spec_post.policy.sched
        if before.rate_dbal == 1.0 and pre.spec.policy.rate_dbal < 1.0:
            raise ModelError("moving the existing stock to full expensing needs new_investment_only=True")
        if before.rate_dbal < 1.0:
            # choose the t=-1 stock so the t=0 stock equals the pre-reform one under the new rate
            kb0 = initial[IDX["kb"]]
            initial[IDX["kb"]] = kb0 / (1.0 - before.rate_dbal) - initial[IDX["i"]]
    vintage = VintagePolicy(before, spec_post.policy.sched, reform_period)
    terminal = terminal or solve_steady_state(spec_post)
    return TransitionProblem(spec_post, vintage, initial, terminal, horizon)


@dataclass(frozen=True)
class JacobianStructure:
    horizon: int
    block_size: int
    pattern: sp.csr_matrix   # boolean block pattern, shape (horizon, horizon)

    @property
    def n_diagonal_blocks(self) -> int:
        return int(self.pattern.diagonal().sum())

    @property
    def n_upper_blocks(self) -> int:
        return int(sp.triu(self.pattern, 1).nnz)

    @property
    def n_lower_blocks(self) -> int:
        return int(sp.tril(self.pattern, -1).nnz)

    def full_pattern(self) -> sp.csr_matrix:
        return sp.kron(self.pattern, np.ones((self.block_size, self.block_size)), format="csr").astype(bool)


def jacobian_structure(problem: TransitionProblem) -> JacobianStructure:
    T = problem.horizon
    pattern = sp.diags([1, 1, 1], [-1, 0, 1], shape=(T, T), format="csr", dtype=bool)
    return JacobianStructure(T, NVAR, pattern)


def stacked_jacobian(problem: TransitionProblem, z, h=CSTEP) -> sp.csc_matrix:
    """Block-tridiagonal Jacobian of the stacked residuals by coloured complex step."""
    T, n = problem.horizon, NVAR
    z = np.asarray(z, dtype=float)
    s = np.arange(T)
    rows, cols, vals = [], [], []
    eq = np.arange(n)
    for colour in range(3):
        offset = (colour - s + 1) % 3 - 1
        t = s + offset
        live = (t >= 0) & (t < T)
        for j in range(n):
            zc = z.astype(complex).reshape(T, n)
            zc[colour::3, j] += 1j * h
            G = np.imag(problem.stacked_residuals(zc.ravel())).reshape(T, n) / h
            r = (s[live, None] * n + eq[None, :]).ravel()
            c = np.repeat(t[live] * n + j, n)
            rows.append(r)
            cols.append(c)
            vals.append(G[live].ravel())
    return sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(T * n, T * n))


def finite_difference_jacobian(problem: TransitionProblem, z, rel_step=1e-6) -> np.ndarray:
    """Dense central-difference Jacobian (slow; for verification)."""
    z = np.asarray(z, dtype=float)
    F = problem.stacked_residuals
    J = np.empty((z.size, z.size))
    for j in range(z.size):
        h = rel_step * max(abs(z[j]), 1.0)
        e = np.zeros_like(z)
        e[j] = h
        J[:, j] = (F(z + e) - F(z - e)) / (2.0 * h)
    return J


def initial_guess(problem: TransitionProblem, ramp: int = GUESS_RAMP) -> np.ndarray:
    """Linear path from the initial to the terminal state over ``ramp`` periods, flat after."""
    T = problem.horizon
    w = np.minimum((np.arange(T) + 1.0) / ramp, 1.0)[:, None]
    return (1.0 - w) * problem.initial[None, :] + w * problem.terminal_x[None, :]


@dataclass
class TransitionPath:
    problem: TransitionProblem
    X: np.ndarray
    iterations: int
    residual: float
    trace: list = field(default_factory=list)

    @property
    def spec(self) -> ModelSpec:
        return self.problem.spec_post

    @property
    def t(self) -> np.ndarray:
        return self.problem.periods

    def __getitem__(self, name) -> np.ndarray:
        if name in IDX:
            return self.X[:, IDX[name]]
        return self.flows[name]

    @property
    def flows(self) -> dict:
        return M.flows(self.spec, self.problem.vintage, self.X, self.t)

    def aggregates(self, p_fixed=None) -> dict:
        return M.aggregates(self.spec, self.X, self.t, self.problem.vintage, p_fixed=p_fixed)

    def table(self) -> dict:
        """Ordered columns: period, state variables, then derived quantities."""
        out = {"period": self.t}
        for name in VARS:
            out[name] = self[name]
        f = self.flows
        for name in PATH_FLOWS:
            out[name] = f[name]
        return out


PATH_FLOWS = ("Y", "Yp", "w", "wp", "ID", "TB", "Tpi", "profit", "d", "dp", "Tii", "T",
              "G", "transfer", "gdp", "investment", "lam", "D")


def _admissible(spec):
    def ok(z):
        try:
            M.check_state(spec, np.reshape(z, (-1, NVAR)))
        except ModelError:
            return False
        return True
    return ok


def terminal_gap(problem: TransitionProblem, X) -> np.ndarray:
    """Per-variable relative distance of each period from the terminal state."""
    xt = problem.terminal_x
    return np.abs(X - xt[None, :]) / np.maximum(np.abs(xt), 1.0)[None, :]


def solve_transition(problem: TransitionProblem, guess=None, tol=1e-10, max_iter=50,
                     terminal_tol=1e-7) -> TransitionPath:
    T = problem.horizon
    z0 = (initial_guess(problem) if guess is None else np.asarray(guess, dtype=float)).ravel()
    names = [f"{e}[t={t}]" for t in range(T) for e in M.EQUATIONS]
    try:
        z, info = damped_newton(
            problem.stacked_residuals, lambda z: stacked_jacobian(problem, z), z0, tol=tol,
            max_iter=max_iter, admissible=_admissible(problem.spec_post), names=names)
    except SolverError as exc:
        trace = "; ".join(f"it {i}: |F|={r:.2e} step={s:.3g}" for i, r, s in exc.trace)
        raise SolverError(f"transition: {exc} (worst equation {exc.worst}); trace: {trace}",
                          exc.trace, exc.worst) from exc
    X = z.reshape(T, NVAR)
    resid = float(np.max(np.abs(problem.stacked_residuals(z))))
    gap = terminal_gap(problem, X)[-1]
    if gap.max() > terminal_tol:
        worst = VARS[int(np.argmax(gap))]
        raise HorizonError(
            f"horizon {T} too short: period {T - 1} is {gap.max():.2e} from the terminal "
            f"state in {worst}", worst=worst)
    log.info("transition solved: T=%d iterations=%d residual=%.2e", T, info.iterations, resid)
    return TransitionPath(problem, X, info.iterations, resid, info.trace)


def flat_path(ss: SteadyState, horizon: int) -> TransitionPath:
    """Path that stays at ``ss`` (the no-reform counterfactual).

    The undeducted stock is booked as a null reform at t = 0 would book it:
    everything on hand before t = 0 stays in the old vintage and decays.
    """
    problem = TransitionProblem(ss.spec, ss.vintage, ss.as_initial_state(), ss, horizon)
    X = np.tile(ss.x, (horizon, 1))
    total = ss["kb"] + ss["ka"]
    kb = total * (1.0 - ss.spec.policy.rate_dbal) ** np.arange(horizon)
    X[:, IDX["kb"]], X[:, IDX["ka"]] = kb, total - kb
    X[:, IDX["lam_b"]] = X[:, IDX["lam_a"]]
    resid = float(np.max(np.abs(problem.stacked_residuals(X.ravel()))))
    return TransitionPath(problem, X, 0, resid)
