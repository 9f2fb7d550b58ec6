"""Stationary distributions and fundamental-matrix actions for finite Markov chains.

Matrices arrive as scipy.sparse matrices or, for chains too large to
materialise, as a LinearOperator supporting ``@`` and ``.T @``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from loguru import logger
from scipy.sparse import csgraph
from scipy.sparse.linalg import LinearOperator, gmres, splu

from parrondo.config import EngineConfig
from parrondo.errors import ConvergenceError

MAX_ATTEMPTS = 3


def _pattern(P) -> sp.csr_matrix:
    graph = sp.csr_matrix(P, copy=True)
    graph.eliminate_zeros()
    return graph


def closed_classes(P) -> list[np.ndarray]:
    """Recurrent classes of P: strongly connected components with no exit."""
    graph = _pattern(P)
    n_components, labels = csgraph.connected_components(graph, directed=True, connection="strong")
    coo = graph.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    has_exit = np.zeros(n_components, dtype=bool)
    has_exit[labels[coo.row[leaving]]] = True
    return [np.flatnonzero(labels == c) for c in range(n_components) if not has_exit[c]]


def period(P) -> int:
    """Period of an irreducible chain: gcd of level(u) + 1 - level(v) over edges u -> v."""
    graph = _pattern(P)
    size = graph.shape[0]
    order, predecessors = csgraph.breadth_first_order(graph, 0, directed=True, return_predecessors=True)
    level = np.full(size, -1, dtype=np.int64)
    level[0] = 0
    for node in order[1:]:
        level[node] = level[predecessors[node]] + 1
    coo = graph.tocoo()
    gaps = np.abs(level[coo.row] + 1 - level[coo.col])
    return int(np.gcd.reduce(gaps)) if gaps.size else 0


def submatrix(P, keep: np.ndarray) -> sp.csr_matrix:
    return sp.csr_matrix(P)[keep][:, keep]


def _dense(P) -> np.ndarray:
    return P.toarray() if sp.issparse(P) else np.asarray(P)


def _is_operator(P) -> bool:
    return isinstance(P, LinearOperator)


def gmres_solve(A: LinearOperator, rhs: np.ndarray, diagonal: np.ndarray | None, config: EngineConfig, what: str):
    """Restarted GMRES with Jacobi preconditioning, retried with a longer restart.

    Raises:
        ConvergenceError: If the relative residual stays above ``config.warn_tol``.
    """
    preconditioner = None
    if diagonal is not None:
        inverse = 1.0 / diagonal
        preconditioner = LinearOperator(A.shape, matvec=lambda v: inverse * v, dtype=np.float64)
    scale = max(float(np.max(np.abs(rhs))), np.finfo(float).tiny)
    restart = config.gmres_restart
    solution = np.zeros_like(rhs)
    residual = np.inf
    for attempt in range(1, MAX_ATTEMPTS + 1):
        solution, _ = gmres(
            A,
            rhs,
            x0=solution,
            rtol=config.solver_tol,
            atol=0.0,
            restart=restart,
            maxiter=max(10, A.shape[0] // restart + 10),
            M=preconditioner,
        )
        residual = float(np.max(np.abs(A @ solution - rhs))) / scale
        if residual <= config.solver_tol:
            return solution
        if attempt < MAX_ATTEMPTS:
            restart *= 2
            logger.warning(
                "GMRES for {} stopped at residual {:.2e} (attempt {}/{}), retrying with restart {}",
                what,
                residual,
                attempt,
                MAX_ATTEMPTS,
                restart,
            )
    if residual <= config.warn_tol:
        logger.warning("Accepting {} at residual {:.2e}", what, residual)
        return solution
    logger.error("GMRES for {} failed at residual {:.2e}", what, residual)
    raise ConvergenceError(f"{what}: residual {residual:.2e} above {config.warn_tol:.0e}")


def stationary_vector(P, config: EngineConfig | None = None) -> tuple[np.ndarray, float]:
    """Solve pi P = pi, sum(pi) = 1 for a chain with one recurrent class.

    The first balance equation is replaced by the normalisation. Dense LU for
    small chains, sparse LU up to ``config.direct_limit``, GMRES above or when
    P is an operator.

    Returns:
        The stationary vector and ``max |pi P - pi|``.
    """
    config = config or EngineConfig()
    size = P.shape[0]
    if size == 1:
        return np.ones(1), 0.0
    rhs = np.zeros(size)
    rhs[0] = 1.0
    if _is_operator(P) or size > config.direct_limit:
        logger.debug("Stationary solve by GMRES, {} states", size)
        diagonal = None if _is_operator(P) else 1.0 - P.diagonal() + 1.0 / size
        A = LinearOperator(
            (size, size),
            matvec=lambda x: x - P.T @ x + x.sum() / size,
            dtype=np.float64,
        )
        pi = gmres_solve(A, np.full(size, 1.0 / size), diagonal, config, "stationary distribution")
    elif size <= config.dense_limit:
        A = (np.eye(size) - _dense(P)).T
        A[0, :] = 1.0
        pi = np.linalg.solve(A, rhs)
    else:
        logger.debug("Stationary solve by sparse LU, {} states", size)
        A = sp.vstack([sp.csr_matrix(np.ones((1, size))), (sp.identity(size, format="csr") - P).T.tocsr()[1:]])
        pi = splu(A.tocsc()).solve(rhs)
    pi = np.where(pi < 0.0, 0.0, pi)
    pi /= pi.sum()
    residual = float(np.max(np.abs(P.T @ pi - pi)))
    return pi, residual


def fundamental_action(P, pi: np.ndarray, g: np.ndarray, config: EngineConfig | None = None) -> np.ndarray:
    """Return (Z - 1 pi) g with Z = (I - P + 1 pi)^-1, without forming Z.

    Solves (I - P) h = g - (pi g) 1 with h pinned to zero at the state of largest
    stationary mass, then projects so that pi h = 0.
    """
    config = config or EngineConfig()
    size = P.shape[0]
    centered = g - pi @ g
    if size == 1:
        return np.zeros(1)
    if _is_operator(P) or size > config.direct_limit:
        diagonal = None if _is_operator(P) else 1.0 - P.diagonal() + pi
        A = LinearOperator(
            (size, size),
            matvec=lambda h: h - P @ h + pi @ h,
            dtype=np.float64,
        )
        h = gmres_solve(A, centered, diagonal, config, "fundamental matrix action")
    else:
        pinned = int(np.argmax(pi))
        keep = np.delete(np.arange(size), pinned)
        h = np.zeros(size)
        if size <= config.dense_limit:
            A = np.eye(size) - _dense(P)
            h[keep] = np.linalg.solve(A[np.ix_(keep, keep)], centered[keep])
        else:
            A = sp.identity(size, format="csr") - sp.csr_matrix(P)
            h[keep] = splu(A[keep][:, keep].tocsc()).solve(centered[keep])
    return h - pi @ h
