"""Exact transition matrices and equilibrium statistics for games A, B and C.

The per-turn profit is +1 when the chosen player's coin comes up heads and -1
otherwise. Profit-weighted (Dot) matrices replace every q_m by -q_m, so

    mu      = pi Pdot 1
    sigma^2 = pi Pddot 1 - mu^2 + 2 pi Pdot (Z - 1 pi) Pdot 1

and Pddot = P because profits are +-1. Everything is evaluated on the chain
lumped over symmetry orbits.
"""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from loguru import logger
from scipy.sparse.linalg import LinearOperator, spsolve

from parrondo.config import EngineConfig
from parrondo.errors import CapacityExceeded, DomainError, MeanUndefined, RegimeNotErgodic, UnsupportedBoundary
from parrondo.lattice import (
    enumerate_orbits,
    neighbor_table,
    site_neighbor_counts,
    trivial_orbit_table,
)
from parrondo.linalg import closed_classes, fundamental_action, period, stationary_vector, submatrix
from parrondo.models import (
    EquilibriumStats,
    GameKind,
    GameSpec,
    LatticeDims,
    LatticeState,
    OrbitTable,
    ParamVector,
    ReducedChain,
    RegimeTag,
    SignVariant,
)

FAIR = ParamVector.fair()
NEGATIVE_TOLERANCE = 1e-10


class ChainStructure:
    """Sparsity pattern of a lumped transition matrix with symbolic coin weights.

    Entry k contributes ``w[coef[k]] / MN`` at ``(rows[k], cols[k])`` where
    ``w = (p0..p4, q0..q4)``. Duplicates are summed when a matrix is built, so
    one structure serves every parameter vector and sign variant.
    """

    def __init__(self, table: OrbitTable) -> None:
        self.table = table
        dims = table.dims
        sites = dims.sites
        size = table.num_classes
        reps = table.representative
        occupied = (reps[:, None] >> np.arange(sites)) & 1
        self.site_m = site_neighbor_counts(reps, dims)
        targets = table.class_of[reps[:, None] ^ (np.int64(1) << np.arange(sites))]
        rows = np.broadcast_to(np.arange(size)[:, None], (size, sites))
        # Flipping 0 -> 1 is a win (p_m), 1 -> 0 a loss (q_m); staying put is the reverse.
        flip_coef = self.site_m + 5 * occupied
        stay_coef = self.site_m + 5 * (1 - occupied)
        self.rows = np.concatenate([rows.ravel(), rows.ravel()])
        self.cols = np.concatenate([targets.ravel(), rows.ravel()]).astype(np.int64)
        self.coef = np.concatenate([flip_coef.ravel(), stay_coef.ravel()])
        self.sites = sites
        self.size = size

    @property
    def is_win(self) -> np.ndarray:
        return self.coef < 5

    def weights(self, p: ParamVector, variant: SignVariant = SignVariant.PLAIN) -> np.ndarray:
        q = 1.0 - p.array
        return np.concatenate([p.array, variant.sign * q])[self.coef] / self.sites

    def matrix(self, p: ParamVector, variant: SignVariant = SignVariant.PLAIN) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.weights(p, variant), (self.rows, self.cols)),
            shape=(self.size, self.size),
        )

    def neighbor_weights(self) -> np.ndarray:
        """Share of sites with m winning neighbours in each class, shape (K, 5)."""
        return np.stack([(self.site_m == m).sum(axis=1) for m in range(5)], axis=1) / self.sites


def _resolve_transpose(dims: LatticeDims, use_transpose: bool | None) -> bool:
    if use_transpose is None:
        return dims.is_square
    if use_transpose and not dims.is_square:
        raise DomainError(f"transposition needs a square lattice, got {dims.token}")
    return use_transpose


def _check_cap(dims: LatticeDims, config: EngineConfig) -> None:
    if dims.sites > config.exact_cap:
        raise CapacityExceeded(
            f"{dims.token} has M*N={dims.sites} > exact cap {config.exact_cap}; use simulation"
        )


@lru_cache(maxsize=8)
def chain_structure(dims: LatticeDims, use_transpose: bool) -> ChainStructure:
    return ChainStructure(enumerate_orbits(dims, use_transpose))


@lru_cache(maxsize=4)
def full_structure(dims: LatticeDims) -> ChainStructure:
    return ChainStructure(trivial_orbit_table(dims))


def build_full_row(
    x: LatticeState,
    p: ParamVector,
    v: SignVariant = SignVariant.PLAIN,
) -> dict[int, float]:
    """Row x of the full transition matrix as ``{target bits: probability}``."""
    sites = x.dims.sites
    table = neighbor_table(x.dims)
    sign = v.sign
    row: dict[int, float] = {}
    diagonal = 0.0
    for k in range(sites):
        m = sum((x.bits >> int(t)) & 1 for t in table[k])
        win, loss = p[m] / sites, sign * (1.0 - p[m]) / sites
        if (x.bits >> k) & 1:
            row[x.bits ^ (1 << k)] = loss
            diagonal += win
        else:
            row[x.bits ^ (1 << k)] = win
            diagonal += loss
    row[x.bits] = diagonal
    return row


def two_step_probability(x: LatticeState, y: LatticeState, p: ParamVector) -> float:
    """P^2(x, y) from two full rows."""
    if x.dims != y.dims:
        raise DomainError("states live on different lattices")
    total = 0.0
    for middle, first in build_full_row(x, p).items():
        second = build_full_row(LatticeState(bits=middle, dims=x.dims), p).get(y.bits, 0.0)
        total += first * second
    return total


def build_full_chain(
    dims: LatticeDims,
    p: ParamVector,
    v: SignVariant = SignVariant.PLAIN,
    config: EngineConfig | None = None,
) -> sp.csr_matrix:
    """The whole 2^(MN) x 2^(MN) matrix, indexed by state bits."""
    _check_cap(dims, config or EngineConfig())
    return full_structure(dims).matrix(p, v)


def build_augmented_chain(
    dims: LatticeDims,
    p: ParamVector,
    config: EngineConfig | None = None,
) -> tuple[sp.csr_matrix, sp.csr_matrix, sp.csr_matrix]:
    """P, Pdot and Pddot on states x paired with the last profit s.

    State (x, s) has index ``2 * bits + (s == +1)``. The profit of a transition
    is +1 exactly when its weight comes from a p coefficient.
    """
    _check_cap(dims, config or EngineConfig())
    structure = full_structure(dims)
    base = structure.weights(p)
    win = structure.is_win
    landing = 2 * structure.cols + win
    rows = np.concatenate([2 * structure.rows, 2 * structure.rows + 1])
    cols = np.concatenate([landing, landing])
    size = 2 * structure.size
    profit = np.where(win, 1.0, -1.0)
    plain = sp.csr_matrix((np.concatenate([base, base]), (rows, cols)), shape=(size, size))
    dot = sp.csr_matrix((np.concatenate([base * profit, base * profit]), (rows, cols)), shape=(size, size))
    return plain, dot, plain.copy()


def build_reduced(
    dims: LatticeDims,
    p: ParamVector,
    v: SignVariant = SignVariant.PLAIN,
    use_transpose: bool | None = None,
    config: EngineConfig | None = None,
) -> ReducedChain:
    """Lumped chain over symmetry classes, evaluated at class representatives.

    Raises:
        CapacityExceeded: If M*N is above the exact cap.
    """
    config = config or EngineConfig()
    _check_cap(dims, config)
    structure = chain_structure(dims, _resolve_transpose(dims, use_transpose))
    return ReducedChain(
        dims=dims,
        params=p,
        variant=v,
        orbit_table=structure.table,
        matrix=structure.matrix(p, v),
    )


def variant_matrix(chain: ReducedChain, v: SignVariant) -> sp.csr_matrix:
    """The same chain with another sign variant."""
    if v is chain.variant:
        return chain.matrix
    structure = chain_structure(chain.dims, chain.orbit_table.use_transpose)
    return structure.matrix(chain.params, v)


def mixture_params(p: ParamVector, gamma: float) -> ParamVector:
    """Coins of gamma A + (1 - gamma) B: p'_m = gamma/2 + (1 - gamma) p_m."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma={gamma} is not a probability")
    return ParamVector.of(*(gamma * 0.5 + (1.0 - gamma) * pm for pm in p.p))


def reflect_params(p: ParamVector) -> ParamVector:
    """(q4, q3, q2, q1, q0): the parameters whose game B has mean -mu_B(p)."""
    return ParamVector.of(*(1.0 - pm for pm in reversed(p.p)))


def voter_params(eps: float) -> ParamVector:
    """Parameters that approach the voter model as eps -> 0."""
    _check_voter_eps(eps)
    return ParamVector.of(eps, (0.5 + eps) / 2, 0.5, (1.5 - eps) / 2, 1.0 - eps)


def voter_variance_3x3(eps: float) -> float:
    """Closed-form sigma^2 of game B on the 3 x 3 lattice at ``voter_params(eps)``."""
    _check_voter_eps(eps)
    return (9 - 17 * eps + 12 * eps**2 + 4 * eps**3) / (eps * (1 + 16 * eps - 4 * eps**2))


def _check_voter_eps(eps: float) -> None:
    if not 0.0 < eps <= 0.5:
        raise DomainError(f"eps={eps} outside (0, 1/2]")


def classify_regime(p: ParamVector, dims: LatticeDims, *, strict: bool = True) -> RegimeTag:
    """Which reducible case, if any, the parameter vector falls into.

    Raises:
        UnsupportedBoundary: If p1, p2 or p3 is 0 or 1 and *strict* is set.
    """
    p0, p4 = p[0], p[4]
    if p0 == 0.0 and p4 == 1.0:
        return RegimeTag.MEAN_UNDEFINED
    if any(pm in (0.0, 1.0) for pm in p.p[1:4]):
        if strict:
            raise UnsupportedBoundary(f"p1..p3 = {p.p[1:4]} touch 0 or 1")
        return RegimeTag.BOUNDARY_ACCESSIBLE
    if p0 == 0.0:
        return RegimeTag.ABSORB_ZEROS
    if p4 == 1.0:
        return RegimeTag.ABSORB_ONES
    if p0 == 1.0 and p4 == 0.0:
        if dims.M % 2 == 0 and dims.N % 2 == 0:
            return RegimeTag.CHECKERBOARD
        return RegimeTag.CASE5_ODD_CONJECTURED
    if p0 == 1.0:
        return RegimeTag.RESTRICTED_DROP0
    if p4 == 0.0:
        return RegimeTag.RESTRICTED_DROP1
    return RegimeTag.ERGODIC


class ChainMoments(NamedTuple):
    stationary: np.ndarray
    mean: float
    variance: float | None


def _recurrent_class(P, what: str) -> np.ndarray:
    classes = closed_classes(P)
    if len(classes) != 1:
        raise RegimeNotErgodic(f"{what} has {len(classes)} closed classes, no unique stationary distribution")
    keep = classes[0]
    if period(submatrix(P, keep)) != 1:
        raise RegimeNotErgodic(f"{what} is periodic on its recurrent class")
    if len(keep) < P.shape[0]:
        logger.debug("Restricting {} to its closed class of {} / {} states", what, len(keep), P.shape[0])
    return keep


def _clamp_variance(variance: float) -> float:
    if -NEGATIVE_TOLERANCE < variance < 0.0:
        return 0.0
    return variance


def chain_moments(
    P,
    P_dot,
    P_ddot=None,
    config: EngineConfig | None = None,
    with_variance: bool = True,
) -> ChainMoments:
    """Mean and variance of the per-turn profit of a chain with one recurrent class.

    Transient states get stationary mass 0.

    Raises:
        RegimeNotErgodic: If the recurrent class is not unique or is periodic.
    """
    config = config or EngineConfig()
    size = P.shape[0]
    keep = _recurrent_class(P, "chain")
    if len(keep) < size:
        P, P_dot = submatrix(P, keep), submatrix(P_dot, keep)
        P_ddot = submatrix(P_ddot, keep) if P_ddot is not None else None
    pi, _ = stationary_vector(P, config)
    gain = P_dot @ np.ones(P.shape[0])
    mean = float(pi @ gain)
    variance = None
    if with_variance:
        second = float(pi @ (P_ddot @ np.ones(P.shape[0]))) if P_ddot is not None else 1.0
        h = fundamental_action(P, pi, gain, config)
        variance = _clamp_variance(second - mean**2 + 2.0 * float((P_dot.T @ pi) @ h))
    stationary = np.zeros(size)
    stationary[keep] = pi
    return ChainMoments(stationary, mean, variance)


def stationary_distribution(chain: ReducedChain, config: EngineConfig | None = None) -> np.ndarray:
    """Stationary distribution over orbit classes.

    Raises:
        RegimeNotErgodic: If the chain has no unique aperiodic recurrent class.
    """
    keep = _recurrent_class(chain.matrix, f"{chain.dims.token} chain")
    pi, residual = stationary_vector(submatrix(chain.matrix, keep), config)
    stationary = np.zeros(chain.num_classes)
    stationary[keep] = pi
    logger.debug("Stationary residual {:.2e}", residual)
    return stationary


def _residual(P, pi: np.ndarray) -> float:
    return float(np.max(np.abs(P.T @ pi - pi)))


def _check_defined(p: ParamVector, dims: LatticeDims) -> RegimeTag:
    regime = classify_regime(p, dims, strict=False)
    if regime is RegimeTag.MEAN_UNDEFINED:
        logger.error("p0=0 and p4=1: both constant states absorb")
        raise MeanUndefined("p0 = 0 and p4 = 1 make both the all-zeros and all-ones states absorbing")
    if regime is RegimeTag.CASE5_ODD_CONJECTURED:
        logger.warning("p0=1, p4=0 on {}: ergodicity is conjectured, not proved", dims.token)
    return regime


def equilibrium_stats_B(
    dims: LatticeDims,
    p: ParamVector,
    *,
    config: EngineConfig | None = None,
    use_transpose: bool | None = None,
    with_variance: bool = True,
) -> EquilibriumStats:
    """Mean and variance of game B at equilibrium.

    Raises:
        MeanUndefined: If p0 = 0 and p4 = 1.
        RegimeNotErgodic: If the accessible chain is not ergodic.
        CapacityExceeded: If M*N is above the exact cap.
    """
    config = config or EngineConfig()
    regime = _check_defined(p, dims)
    chain = build_reduced(dims, p, use_transpose=use_transpose, config=config)
    moments = chain_moments(
        chain.matrix,
        variant_matrix(chain, SignVariant.DOT),
        variant_matrix(chain, SignVariant.DDOT),
        config,
        with_variance,
    )
    residual = _residual(chain.matrix, moments.stationary)
    logger.debug("Game B on {}: mu={:.9g}, {} classes", dims.token, moments.mean, chain.num_classes)
    return EquilibriumStats(
        dims=dims,
        game=GameSpec.b(),
        params=p,
        mean=moments.mean,
        variance=moments.variance,
        regime=regime,
        num_classes=chain.num_classes,
        residual=residual,
        stationary=moments.stationary,
    )


def equilibrium_stats_mixture(
    dims: LatticeDims,
    p: ParamVector,
    gamma: float,
    *,
    config: EngineConfig | None = None,
    use_transpose: bool | None = None,
    with_variance: bool = True,
) -> EquilibriumStats:
    """Game gamma A + (1 - gamma) B, which is game B at the blended coins."""
    blended = mixture_params(p, gamma)
    stats = equilibrium_stats_B(
        dims,
        blended,
        config=config,
        use_transpose=use_transpose,
        with_variance=with_variance,
    )
    if 0.0 < gamma < 1.0:
        return stats.model_copy(update={"game": GameSpec.mixture(gamma), "params": p})
    # gamma of 0 or 1 is a plain game at the blended coins.
    return stats


def _cycle_product(P_A, P_B, r: int, s: int, config: EngineConfig):
    """P_A^r P_B^s, as a sparse matrix or, above ``product_limit``, an operator."""
    size = P_A.shape[0]
    if size <= config.product_limit:
        product = sp.identity(size, format="csr")
        for _ in range(r):
            product = product @ P_A
        for _ in range(s):
            product = product @ P_B
        return product.tocsr()

    def matvec(v):
        for _ in range(s):
            v = P_B @ v
        for _ in range(r):
            v = P_A @ v
        return v

    def rmatvec(v):
        for _ in range(r):
            v = P_A.T @ v
        for _ in range(s):
            v = P_B.T @ v
        return v

    logger.debug("Pattern product on {} classes kept as an operator", size)
    return LinearOperator((size, size), matvec=matvec, rmatvec=rmatvec, dtype=np.float64)


def cycle_support(P_A, P_B, r: int, s: int) -> sp.csr_matrix:
    """0/1 pattern of P_A^r P_B^s, built from the sparsity patterns alone.

    Entries are nonnegative, so no product term cancels and the pattern of the
    boolean product equals the pattern of the numerical one.
    """

    def ones_pattern(P) -> sp.csr_matrix:
        graph = sp.csr_matrix(P, dtype=np.float64, copy=True)
        graph.eliminate_zeros()
        graph.data[:] = 1.0
        return graph

    step_a, step_b = ones_pattern(P_A), ones_pattern(P_B)
    support = sp.identity(P_A.shape[0], format="csr", dtype=np.float64)
    for step, times in ((step_a, r), (step_b, s)):
        for _ in range(times):
            support = (support @ step).tocsr()
            support.data[:] = 1.0
    return support


def _restrict_operator(P: LinearOperator, keep: np.ndarray) -> LinearOperator:
    """P on a closed class, without materialising it."""
    size = P.shape[0]

    def embed(v):
        full = np.zeros(size)
        full[keep] = v
        return full

    return LinearOperator(
        (len(keep), len(keep)),
        matvec=lambda v: (P @ embed(v))[keep],
        rmatvec=lambda v: (P.T @ embed(v))[keep],
        dtype=np.float64,
    )


def _power_row(v: np.ndarray, P, times: int) -> np.ndarray:
    for _ in range(times):
        v = P.T @ v
    return v


def _power_col(v: np.ndarray, P, times: int) -> np.ndarray:
    for _ in range(times):
        v = P @ v
    return v


def equilibrium_stats_pattern(
    dims: LatticeDims,
    p: ParamVector,
    r: int,
    s: int,
    *,
    config: EngineConfig | None = None,
    use_transpose: bool | None = None,
    with_variance: bool = True,
) -> EquilibriumStats:
    """Mean and variance of the periodic pattern A^r B^s.

    pi is stationary for one full cycle P_A^r P_B^s. With a_u = pi P_A^u,
    b_v = a_r P_B^v, c_v = P_B^v g_B and m_v = b_v g_B (g_B = Pdot_B 1), the
    mean is sum_v m_v / (r + s); game A contributes nothing because its steps
    have mean zero. The variance adds the within-cycle covariances between
    turns to the across-cycle term carried by the fundamental matrix of the
    cycle chain.

    Raises:
        DomainError: If r or s is below 1.
        RegimeNotErgodic: If the cycle chain has no unique aperiodic recurrent class.
    """
    if r < 1 or s < 1:
        raise DomainError(f"pattern needs r, s >= 1, got r={r}, s={s}")
    config = config or EngineConfig()
    _check_cap(dims, config)
    structure = chain_structure(dims, _resolve_transpose(dims, use_transpose))
    P_A, Pd_A = structure.matrix(FAIR), structure.matrix(FAIR, SignVariant.DOT)
    P_B, Pd_B = structure.matrix(p), structure.matrix(p, SignVariant.DOT)
    size = structure.size
    ones = np.ones(size)
    cycle = _cycle_product(P_A, P_B, r, s, config)

    regime = RegimeTag.ERGODIC
    support = cycle if sp.issparse(cycle) else cycle_support(P_A, P_B, r, s)
    keep = _recurrent_class(support, f"A^{r}B^{s} cycle")
    pi = np.zeros(size)
    if len(keep) == size:
        pi, _ = stationary_vector(cycle, config)
    elif sp.issparse(cycle):
        pi[keep], _ = stationary_vector(submatrix(cycle, keep), config)
    else:
        pi[keep], _ = stationary_vector(_restrict_operator(cycle, keep), config)
    if len(keep) < size:
        regime = RegimeTag.BOUNDARY_ACCESSIBLE
    residual = _residual(cycle, pi)

    a = [pi]
    for _ in range(r):
        a.append(P_A.T @ a[-1])
    b = [a[r]]
    for _ in range(s - 1):
        b.append(P_B.T @ b[-1])
    g_B = Pd_B @ ones
    c = [g_B]
    for _ in range(s - 1):
        c.append(P_B @ c[-1])
    m = np.array([b_v @ g_B for b_v in b])
    period_length = r + s
    mean = float(m.sum() / period_length)

    variance = None
    if with_variance:
        # Covariances between an A turn u and a later B turn v in the same cycle.
        t1 = 0.0
        for u in range(r):
            row = Pd_A.T @ a[u]
            carried = _power_row(row, P_A, r - u - 1)
            drift = row @ ones
            for v in range(s):
                t1 += carried @ c[v] - drift * m[v]
        # Covariances between B turns u < v of the same cycle.
        t2 = 0.0
        for u in range(s):
            row = Pd_B.T @ b[u]
            drift = row @ ones
            for v in range(u + 1, s):
                t2 += row @ c[v - u - 1] - drift * m[v]
        # Covariances with turns of later cycles, through the cycle chain.
        y = sum(_power_col(c_v, P_A, r) for c_v in c)
        h = fundamental_action(cycle, pi, y, config)
        t3 = 0.0
        for u in range(r):
            row = _power_row(Pd_A.T @ a[u], P_A, r - u - 1)
            t3 += _power_row(row, P_B, s) @ h
        t4 = 0.0
        for u in range(s):
            t4 += _power_row(Pd_B.T @ b[u], P_B, s - u - 1) @ h
        variance = _clamp_variance(
            1.0 - float(m @ m) / period_length + 2.0 / period_length * (t1 + t2 + t3 + t4)
        )
    logger.debug("Pattern [{},{}] on {}: mu={:.9g}", r, s, dims.token, mean)
    return EquilibriumStats(
        dims=dims,
        game=GameSpec.pattern(r, s),
        params=p,
        mean=mean,
        variance=variance,
        regime=regime,
        num_classes=size,
        residual=residual,
        stationary=pi,
    )


def equilibrium_stats(
    dims: LatticeDims,
    game: GameSpec,
    p: ParamVector,
    *,
    config: EngineConfig | None = None,
    use_transpose: bool | None = None,
    with_variance: bool = True,
) -> EquilibriumStats:
    options = {"config": config, "use_transpose": use_transpose, "with_variance": with_variance}
    if game.kind is GameKind.MIXTURE:
        return equilibrium_stats_mixture(dims, p, game.gamma, **options)
    if game.kind is GameKind.PATTERN:
        return equilibrium_stats_pattern(dims, p, game.r, game.s, **options)
    return equilibrium_stats_B(dims, p, **options)


def mean_profit(
    dims: LatticeDims,
    game: GameSpec,
    p: ParamVector,
    *,
    config: EngineConfig | None = None,
    use_transpose: bool | None = None,
) -> float:
    """Equilibrium mean only; skips the variance solve."""
    stats = equilibrium_stats(dims, game, p, config=config, use_transpose=use_transpose, with_variance=False)
    return stats.mean


def lambda_weights(
    dims: LatticeDims,
    p: ParamVector,
    *,
    config: EngineConfig | None = None,
    use_transpose: bool | None = None,
) -> np.ndarray:
    """Equilibrium law of the number of winning neighbours of one site.

    Every site sees the same law because the symmetry group moves any site
    to any other, so the class average over sites equals the law at (2,2).
    """
    stats = equilibrium_stats_B(dims, p, config=config, use_transpose=use_transpose, with_variance=False)
    structure = chain_structure(dims, _resolve_transpose(dims, use_transpose))
    return stats.stationary @ structure.neighbor_weights()


def absorption_probability(
    dims: LatticeDims,
    p: ParamVector,
    x: LatticeState,
    *,
    config: EngineConfig | None = None,
    use_transpose: bool | None = None,
) -> float:
    """Probability that game B started at x is absorbed at the all-ones state.

    Only defined when both constant states absorb (p0 = 0, p4 = 1) and
    p1..p3 lie strictly inside (0, 1).
    """
    if x.dims != dims:
        raise DomainError(f"state is {x.dims.token}, lattice is {dims.token}")
    if classify_regime(p, dims, strict=False) is not RegimeTag.MEAN_UNDEFINED or any(
        pm in (0.0, 1.0) for pm in p.p[1:4]
    ):
        raise DomainError("absorption probabilities need p0 = 0, p4 = 1 and 0 < p1, p2, p3 < 1")
    chain = build_reduced(dims, p, use_transpose=use_transpose, config=config)
    size = chain.num_classes
    zeros_class, ones_class = 0, size - 1
    transient = np.arange(1, size - 1)
    start = chain.orbit_table.class_index(x)
    if start in (zeros_class, ones_class):
        return float(start == ones_class)
    A = sp.identity(len(transient), format="csc") - submatrix(chain.matrix, transient).tocsc()
    rhs = chain.matrix[transient, ones_class].toarray().ravel()
    h = spsolve(A, rhs)
    return float(h[start - 1])

