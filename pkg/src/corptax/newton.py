"""Damped Newton iteration for square nonlinear systems."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

CSTEP = 1e-30


class SolverError(RuntimeError):
    """Newton failed; ``trace`` holds (iteration, max residual, step length) tuples."""

    def __init__(self, msg, trace=None, worst=None):
        super().__init__(msg)
        self.trace = trace or []
        self.worst = worst


@dataclass
class NewtonInfo:
    iterations: int = 0
    residual: float = np.inf
    trace: list = field(default_factory=list)


def complex_step_jacobian(F, x, h=CSTEP):
    """Dense Jacobian of ``F`` at ``x`` by complex-step differentiation."""
    x = np.asarray(x, dtype=float)
    n = x.size
    J = None
    for j in range(n):
        xc = x.astype(complex)
        xc[j] += 1j * h
        col = np.imag(F(xc)) / h
        if J is None:
            J = np.empty((col.size, n))
        J[:, j] = col
    return J


def _solve(J, r):
    if sp.issparse(J):
        return spla.spsolve(J.tocsc(), r)
    return np.linalg.solve(J, r)


def damped_newton(F, jac, x0, tol=1e-10, max_iter=50, max_halvings=30, admissible=None,
                  names=None, polish=2):
    """Solve ``F(x) = 0`` from ``x0``.

    Each full Newton step is halved until the residual 2-norm decreases and
    ``admissible(x)`` holds; after ``max_halvings`` halvings the iteration
    fails. Convergence is declared on the max-norm of the residual, after
    which up to ``polish`` further full steps are kept while they reduce it.
    """
    x = np.array(x0, dtype=float)
    info = NewtonInfo()

    def ok(z):
        return admissible is None or admissible(z)

    r = F(x)
    if not np.all(np.isfinite(r)):
        raise SolverError("residuals not finite at the initial guess")
    for it in range(max_iter + 1):
        rmax = float(np.max(np.abs(r)))
        info.iterations, info.residual = it, rmax
        if rmax < tol:
            return _polish(F, jac, x, r, polish, info)
        if it == max_iter:
            break
        J = jac(x)
        try:
            dx = _solve(J, -r)
        except (np.linalg.LinAlgError, RuntimeError) as exc:
            raise SolverError(f"singular Jacobian at iteration {it}: {exc}", info.trace) from exc
        if not np.all(np.isfinite(dx)):
            raise SolverError(f"singular Jacobian at iteration {it}", info.trace)
        norm0 = np.linalg.norm(r)
        step = 1.0
        for _ in range(max_halvings + 1):
            xn = x + step * dx
            if ok(xn):
                with np.errstate(all="ignore"):
                    rn = F(xn)
                if np.all(np.isfinite(rn)) and np.linalg.norm(rn) < norm0:
                    break
            step *= 0.5
        else:
            info.trace.append((it, rmax, 0.0))
            raise SolverError(
                f"line search failed at iteration {it} (max residual {rmax:.3e})",
                info.trace, _worst(r, names))
        info.trace.append((it, rmax, step))
        log.debug("newton it=%d |F|=%.3e step=%.3g", it, rmax, step)
        x, r = xn, rn
    raise SolverError(
        f"no convergence after {max_iter} iterations (max residual {info.residual:.3e})",
        info.trace, _worst(r, names))


def _polish(F, jac, x, r, n, info):
    for _ in range(n):
        try:
            xn = x + _solve(jac(x), -r)
        except (np.linalg.LinAlgError, RuntimeError):
            break
        with np.errstate(all="ignore"):
            rn = F(xn)
        if not (np.all(np.isfinite(rn)) and np.max(np.abs(rn)) < np.max(np.abs(r))):
            break
        x, r = xn, rn
        info.residual = float(np.max(np.abs(r)))
    return x, info


def _worst(r, names):
    j = int(np.argmax(np.abs(r)))
    return names[j] if names is not None else j
