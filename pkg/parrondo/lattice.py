"""Lattice geometry on the M x N torus: neighbour counts, symmetries and orbits.

States are integers with bit ``(i-1)*N + (j-1)`` holding the player at row i,
column j. Symmetries are stored as site permutations; enumerating orbits maps
every one of the 2^(MN) states to the minimum-bits member of its orbit using
byte lookup tables and a parallel numba kernel.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numba as nb
import numpy as np
from loguru import logger

from parrondo.config import ENUMERATION_LIMIT
from parrondo.errors import CapacityExceeded, DomainError
from parrondo.models import LatticeDims, LatticeState, OrbitTable, ParamVector, SymmetryGroup

ENUMERATION_CHUNK = 1 << 22
GENERATOR_NAMES = (
    "row_rotation",
    "row_reflection",
    "column_rotation",
    "column_reflection",
)


def site_index(dims: LatticeDims, i: int, j: int) -> int:
    """Bit position of the 1-based site (i, j)."""
    if not (1 <= i <= dims.M and 1 <= j <= dims.N):
        raise DomainError(f"site ({i},{j}) outside the {dims.token} lattice")
    return (i - 1) * dims.N + (j - 1)


@lru_cache(maxsize=32)
def neighbor_table(dims: LatticeDims) -> np.ndarray:
    """Wrapped neighbour sites of every site, shape (MN, 4).

    Columns are the sites below, above, right of and left of each site.
    """
    M, N = dims.M, dims.N
    rows, cols = np.divmod(np.arange(M * N, dtype=np.int64), N)
    table = np.stack(
        [
            ((rows + 1) % M) * N + cols,
            ((rows - 1) % M) * N + cols,
            rows * N + (cols + 1) % N,
            rows * N + (cols - 1) % N,
        ],
        axis=1,
    )
    table.flags.writeable = False
    return table


def neighbor_count(x: LatticeState, i: int, j: int) -> int:
    """Number of winners among the four nearest neighbours of (i, j).

    Args:
        x: Lattice state.
        i: Row, 1-based.
        j: Column, 1-based.

    Returns:
        Integer in 0..4.

    Raises:
        DomainError: If (i, j) is not a site of the lattice.
    """
    k = site_index(x.dims, i, j)
    return sum((x.bits >> int(t)) & 1 for t in neighbor_table(x.dims)[k])


def site_neighbor_counts(bits: np.ndarray, dims: LatticeDims) -> np.ndarray:
    """Neighbour counts m_s(x) of every site for an array of states, shape (len(bits), MN)."""
    occupied = (np.asarray(bits, dtype=np.int64)[:, None] >> np.arange(dims.sites)) & 1
    return occupied[:, neighbor_table(dims)].sum(axis=2)


# Generators as site maps. Applying sigma to x gives (x_sigma)[s] = x[sigma[s]].


def _site_map(dims: LatticeDims, move) -> np.ndarray:
    rows, cols = np.divmod(np.arange(dims.sites, dtype=np.int64), dims.N)
    new_rows, new_cols = move(rows, cols)
    return new_rows * dims.N + new_cols


def row_rotation(dims: LatticeDims) -> np.ndarray:
    """Shift rows down by one: row 1 of the result is row M of x."""
    return _site_map(dims, lambda r, c: ((r - 1) % dims.M, c))


def row_reflection(dims: LatticeDims) -> np.ndarray:
    return _site_map(dims, lambda r, c: (dims.M - 1 - r, c))


def column_rotation(dims: LatticeDims) -> np.ndarray:
    return _site_map(dims, lambda r, c: (r, (c - 1) % dims.N))


def column_reflection(dims: LatticeDims) -> np.ndarray:
    return _site_map(dims, lambda r, c: (r, dims.N - 1 - c))


def transposition(dims: LatticeDims) -> np.ndarray:
    if not dims.is_square:
        raise DomainError(f"transposition needs a square lattice, got {dims.token}")
    return _site_map(dims, lambda r, c: (c, r))


def generators(dims: LatticeDims, use_transpose: bool = False) -> dict[str, np.ndarray]:
    builders = {name: globals()[name] for name in GENERATOR_NAMES}
    if use_transpose:
        builders["transposition"] = transposition
    return {name: build(dims) for name, build in builders.items()}


@lru_cache(maxsize=32)
def symmetry_group(dims: LatticeDims, use_transpose: bool = False) -> SymmetryGroup:
    """Close the generators under composition.

    Raises:
        DomainError: If transposition is requested on a non-square lattice.
    """
    gens = generators(dims, use_transpose)
    identity = np.arange(dims.sites, dtype=np.int64)
    seen = {identity.tobytes(): identity}
    frontier = [identity]
    while frontier:
        found = []
        for element in frontier:
            for gen in gens.values():
                product = element[gen]
                key = product.tobytes()
                if key not in seen:
                    seen[key] = product
                    found.append(product)
        frontier = found
    # The identity sorts first.
    elements = np.array(sorted(seen.values(), key=lambda a: a.tolist()), dtype=np.int64)
    elements.flags.writeable = False
    logger.debug("Symmetry group of {} has {} elements", dims.token, len(elements))
    return SymmetryGroup(dims=dims, generators=tuple(gens), elements=elements)


def _permute_bits(bits: int, sigma: np.ndarray) -> int:
    result = 0
    for s, source in enumerate(sigma.tolist()):
        result |= ((bits >> source) & 1) << s
    return result


def apply_permutation(x: LatticeState, sigma: np.ndarray) -> LatticeState:
    """Return x_sigma with (x_sigma)[s] = x[sigma[s]]."""
    sigma = np.asarray(sigma)
    if sigma.shape != (x.dims.sites,):
        raise DomainError(f"permutation of length {sigma.size} does not fit a {x.dims.token} lattice")
    return LatticeState(bits=_permute_bits(x.bits, sigma), dims=x.dims)


def _check_group(x: LatticeState, group: SymmetryGroup) -> None:
    if group.dims != x.dims:
        raise DomainError(f"group built for {group.dims.token}, state is {x.dims.token}")


def canonicalize(x: LatticeState, group: SymmetryGroup) -> LatticeState:
    """Minimum-bits member of the orbit of x."""
    _check_group(x, group)
    best = min(_permute_bits(x.bits, sigma) for sigma in group.elements)
    return LatticeState(bits=best, dims=x.dims)


def orbit(x: LatticeState, group: SymmetryGroup) -> set[int]:
    _check_group(x, group)
    return {_permute_bits(x.bits, sigma) for sigma in group.elements}


def stabilizer_size(x: LatticeState, group: SymmetryGroup) -> int:
    _check_group(x, group)
    return sum(_permute_bits(x.bits, sigma) == x.bits for sigma in group.elements)


def _byte_tables(group: SymmetryGroup) -> np.ndarray:
    """tables[g, c, v]: bits contributed to x_g by byte c of x having value v."""
    order, sites = group.elements.shape
    n_bytes = (sites + 7) // 8
    tables = np.zeros((order, n_bytes, 256), dtype=np.int64)
    values = np.arange(256, dtype=np.int64)
    for g, sigma in enumerate(group.elements):
        target = np.empty(sites, dtype=np.int64)
        target[sigma] = np.arange(sites)
        for source in range(sites):
            c, shift = divmod(source, 8)
            tables[g, c] |= ((values >> shift) & 1) << target[source]
    return tables


@nb.njit(parallel=True, cache=True)
def _canonical_forms(start, count, tables):
    out = np.empty(count, dtype=np.int64)
    n_elements = tables.shape[0]
    n_bytes = tables.shape[1]
    for k in nb.prange(count):
        x = np.int64(start) + np.int64(k)
        best = x
        for g in range(n_elements):
            y = np.int64(0)
            for c in range(n_bytes):
                y |= tables[g, c, (x >> (8 * c)) & 255]
            if y < best:
                best = y
        out[k] = best
    return out


@lru_cache(maxsize=8)
def enumerate_orbits(
    dims: LatticeDims,
    use_transpose: bool = False,
    limit: int = ENUMERATION_LIMIT,
) -> OrbitTable:
    """Partition all 2^(MN) states into orbits of the symmetry group.

    Args:
        dims: Lattice size.
        use_transpose: Include transposition (square lattices only).
        limit: Largest M*N allowed.

    Returns:
        OrbitTable with classes ordered by representative.

    Raises:
        CapacityExceeded: If M*N exceeds *limit*.
        DomainError: If transposition is requested on a non-square lattice.
    """
    if dims.sites > min(limit, ENUMERATION_LIMIT):
        raise CapacityExceeded(
            f"{dims.token} has 2^{dims.sites} states, above the enumeration limit 2^{limit}"
        )
    group = symmetry_group(dims, use_transpose)
    tables = _byte_tables(group)
    total = dims.num_states
    canonical = np.empty(total, dtype=np.uint32)
    for start in range(0, total, ENUMERATION_CHUNK):
        count = min(ENUMERATION_CHUNK, total - start)
        canonical[start : start + count] = _canonical_forms(start, count, tables)
        logger.debug("Canonicalised states {}..{} of {}", start, start + count, total)
    representative, class_of, class_size = np.unique(canonical, return_inverse=True, return_counts=True)
    table = OrbitTable(
        dims=dims,
        use_transpose=use_transpose,
        group_order=group.order,
        class_of=_frozen(class_of.reshape(-1).astype(np.int32)),
        representative=_frozen(representative.astype(np.int64)),
        class_size=_frozen(class_size.astype(np.int64)),
    )
    logger.info(
        "Enumerated {} orbits of {} ({} states, group order {})",
        table.num_classes,
        dims.token,
        total,
        group.order,
    )
    return table


@lru_cache(maxsize=8)
def trivial_orbit_table(dims: LatticeDims, limit: int = ENUMERATION_LIMIT) -> OrbitTable:
    """Every state in its own class; the full chain in OrbitTable form."""
    if dims.sites > limit:
        raise CapacityExceeded(f"{dims.token} has too many states to list individually")
    states = np.arange(dims.num_states, dtype=np.int64)
    return OrbitTable(
        dims=dims,
        group_order=1,
        class_of=_frozen(states.astype(np.int32)),
        representative=_frozen(states),
        class_size=_frozen(np.ones(dims.num_states, dtype=np.int64)),
    )


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def verify_lumpability(
    dims: LatticeDims,
    group: SymmetryGroup,
    p: ParamVector,
    samples: int | None = None,
    seed: int = 0,
) -> bool:
    """Check P(x_sigma, y_sigma) = P(x, y) for every sigma in *group*.

    Exhaustive over (x, sigma) pairs when *samples* is None or covers them all,
    otherwise over *samples* pairs drawn with *seed*. Every y reachable from x
    is compared.
    """
    from parrondo.exact import build_full_row

    if group.dims != dims:
        raise DomainError(f"group built for {group.dims.token}, lattice is {dims.token}")
    total = dims.num_states * group.order
    if samples is None or samples >= total:
        pairs = itertools.product(range(dims.num_states), range(group.order))
    else:
        rng = np.random.default_rng(seed)
        pairs = zip(
            rng.integers(0, dims.num_states, samples).tolist(),
            rng.integers(0, group.order, samples).tolist(),
        )
    for bits, g in pairs:
        sigma = group.elements[g]
        row = build_full_row(LatticeState(bits=bits, dims=dims), p)
        row_sigma = build_full_row(LatticeState(bits=_permute_bits(bits, sigma), dims=dims), p)
        if len(row) != len(row_sigma):
            return False
        for target, probability in row.items():
            moved = _permute_bits(target, sigma)
            if abs(row_sigma.get(moved, np.inf) - probability) > 1e-14:
                logger.debug("Lumpability fails at x={:#x}, element {}", bits, g)
                return False
    return True
