"""Row/column random partitions and their paving bounds.

Indices are 0-based internally; :meth:`Partition.to_lines` and the log messages render
them 1-based.
"""

from __future__ import annotations

import dataclasses
import functools
import logging
from typing import Any, Iterable, Iterator, List, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt

from .exceptions import BlockIndexError, DomainError, ParameterError
from .linalg import as_dense, nonzero_singular_values, take_cols, take_rows

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, Sequence[int], np.random.SeedSequence, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """PCG64 generator; an existing generator is passed through so callers can share
    one stream."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


@dataclasses.dataclass(frozen=True)
class Partition:
    universe_size: int
    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: List[int] = []
        for block in self.blocks:
            if not block:
                raise ParameterError("partition blocks must be nonempty")
            seen.extend(block)
        if sorted(seen) != list(range(self.universe_size)):
            raise BlockIndexError(
                f"blocks do not partition [0, {self.universe_size}): {self.blocks}"
            )

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[Tuple[int, ...]]:
        return iter(self.blocks)

    def __getitem__(self, index: int) -> Tuple[int, ...]:
        return self.blocks[index]

    @functools.cached_property
    def index_arrays(self) -> Tuple[npt.NDArray[np.intp], ...]:
        """The blocks as numpy index arrays, for fancy indexing in solver loops."""
        return tuple(np.asarray(block, dtype=np.intp) for block in self.blocks)

    @property
    def sizes(self) -> List[int]:
        return [len(block) for block in self.blocks]

    def to_lines(self) -> List[str]:
        """One line per block, comma-separated 1-based indices."""
        return [",".join(str(i + 1) for i in block) for block in self.blocks]

    @classmethod
    def from_lines(cls, lines: Iterable[str], universe_size: int = -1) -> Partition:
        blocks = []
        for line in lines:
            line = line.strip()
            if not line:
                continue
            try:
                blocks.append(tuple(int(token) - 1 for token in line.split(",")))
            except ValueError:
                raise BlockIndexError(f"invalid partition line: {line!r}") from None
        if universe_size < 0:
            universe_size = sum(map(len, blocks))
        return cls(universe_size=universe_size, blocks=tuple(blocks))

    @classmethod
    def single_block(cls, size: int) -> Partition:
        return cls(universe_size=size, blocks=(tuple(range(size)),))

    @classmethod
    def singletons(cls, size: int) -> Partition:
        return cls(universe_size=size, blocks=tuple((i,) for i in range(size)))


@dataclasses.dataclass(frozen=True)
class PavingBounds:
    alpha: float
    """min over blocks of the smallest nonzero Gram eigenvalue"""
    beta: float
    """max over blocks of the largest Gram eigenvalue"""
    block_count: int
    max_cond_sq: float
    """beta / alpha, a uniform bound on the squared block condition number"""
    rank_deficient: bool = False
    """Some block's Gram matrix is singular; alpha then skips its zero eigenvalues."""

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= self.beta:
            raise DomainError(
                f"invalid paving bounds alpha={self.alpha}, beta={self.beta}"
            )


def _random_partition(size: int, blocks: int, seed: SeedLike) -> Partition:
    if blocks < 1 or blocks > size:
        raise ParameterError(f"cannot split {size} indices into {blocks} blocks")
    permutation = make_rng(seed).permutation(size)
    # block i-1 holds pi(k) for k in (floor((i-1)m/s), floor(im/s)] (1-based k)
    bounds = [(i * size) // blocks for i in range(blocks + 1)]
    return Partition(
        universe_size=size,
        blocks=tuple(
            tuple(int(j) for j in permutation[bounds[i] : bounds[i + 1]])
            for i in range(blocks)
        ),
    )


def row_random_partition(m: int, s: int, seed: SeedLike) -> Partition:
    """Row random partition of [m] with s blocks, from a uniformly random
    permutation split at the floor((i-1)m/s) boundaries."""
    return _random_partition(m, s, seed)


def column_random_partition(q: int, t: int, seed: SeedLike) -> Partition:
    return _random_partition(q, t, seed)


def blocks_for_size(dimension: int, tau: int) -> int:
    """Number of blocks giving blocks of about ``tau`` indices."""
    if tau < 1 or tau > dimension:
        raise ParameterError(f"block size {tau} is not in [1, {dimension}]")
    return max(1, dimension // tau)


def _paving_bounds(
    blocks: Iterable[Tuple[int, int, Any]], block_count: int
) -> PavingBounds:
    alpha = float("inf")
    beta = 0.0
    rank_deficient = False
    for block_id, block_size, submatrix in blocks:
        s = nonzero_singular_values(submatrix)
        if s.size == 0:
            raise DomainError(f"block {block_id + 1} is identically zero")
        if s.size < block_size:
            rank_deficient = True
        alpha = min(alpha, float(s[-1]) ** 2)
        beta = max(beta, float(s[0]) ** 2)
    if rank_deficient:
        logger.warning(
            "rank-deficient paving block; alpha=%.3e is the smallest nonzero"
            " eigenvalue",
            alpha,
        )
    return PavingBounds(
        alpha=alpha,
        beta=beta,
        block_count=block_count,
        max_cond_sq=beta / alpha,
        rank_deficient=rank_deficient,
    )


def row_paving_bounds(a: Any, partition: Partition) -> PavingBounds:
    """(alpha_A, beta_A): extreme eigenvalues of A_{U,:} A_{U,:}^T over blocks U."""
    a = as_dense(a, "A")
    if partition.universe_size != a.shape[0]:
        raise ParameterError(
            f"partition of [{partition.universe_size}] for a matrix with "
            f"{a.shape[0]} rows"
        )
    return _paving_bounds(
        (
            (block_id, len(block), take_rows(a, block))
            for block_id, block in enumerate(partition.index_arrays)
        ),
        len(partition),
    )


def col_paving_bounds(b: Any, partition: Partition) -> PavingBounds:
    """(alpha_B, beta_B): extreme eigenvalues of B_{:,V}^T B_{:,V} over blocks V."""
    b = as_dense(b, "B")
    if partition.universe_size != b.shape[1]:
        raise ParameterError(
            f"partition of [{partition.universe_size}] for a matrix with "
            f"{b.shape[1]} columns"
        )
    return _paving_bounds(
        (
            (block_id, len(block), take_cols(b, block))
            for block_id, block in enumerate(partition.index_arrays)
        ),
        len(partition),
    )
