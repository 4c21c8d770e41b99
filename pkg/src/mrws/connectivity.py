"""Reachability structure of the walk: which sets the chain can ever hit.

All decisions here are combinatorial on the support digraph {i -> j :
kernel[i][j] > 0}; kernel entries are constructed rather than measured, so
zero tests are exact and no epsilon thresholding is applied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _linalg
from .core import ScalarField, Space, Subset, as_mask

__all__ = [
    "ReachabilityResult",
    "ErgodicityResult",
    "BlockDecomposition",
    "reachability",
    "is_m_connected",
    "is_ergodic",
    "invariant_blocks",
]


@dataclass(frozen=True)
class ReachabilityResult:
    """Partition of the space by whether the walk can ever enter a target set.

    ``first_hit[x]`` is the least k >= 1 with positive k-step mass on the
    target (this applies to points of the target itself too), and -1 on the
    never-hitting set.
    """

    n_set: Subset
    h_set: Subset
    first_hit: np.ndarray


def reachability(space: Space, d) -> ReachabilityResult:
    """Breadth-first hitting levels toward the set d on the support digraph."""
    target = as_mask(space, d)
    if not target.any():
        raise ValueError("target set is empty")
    adj = space.kernel > 0
    first_hit = np.full(space.n, -1, dtype=int)
    frontier = adj[:, target].any(axis=1) & (first_hit < 0)
    level = 1
    while frontier.any():
        first_hit[frontier] = level
        reached = first_hit > 0
        frontier = adj[:, frontier].any(axis=1) & ~reached
        level += 1
    h_mask = first_hit > 0
    return ReachabilityResult(Subset(space, ~h_mask), Subset(space, h_mask), first_hit)


def is_m_connected(space: Space) -> bool:
    """True when every positive-measure set is reachable from everywhere,
    i.e. the support digraph is strongly connected."""
    ncomp, _ = connected_components(csr_matrix(space.kernel > 0), connection="strong")
    return int(ncomp) == 1


@dataclass(frozen=True)
class ErgodicityResult:
    ergodic: bool
    kernel_dim: int
    witness: ScalarField | None  # a nonconstant harmonic function, if any


def is_ergodic(space: Space) -> ErgodicityResult:
    """Spectral ergodicity test: the generator kernel is one-dimensional.

    ``kernel_dim`` counts eigenvalues of the symmetrized kernel within 1e-10
    of 1. When it exceeds one, the indicator of an invariant block is returned
    as an explicit nonconstant harmonic witness.
    """
    dim = _linalg.kernel_dimension(space)
    if dim == 1:
        return ErgodicityResult(True, 1, None)
    blocks = invariant_blocks(space).blocks
    witness = None
    if len(blocks) > 1:
        witness = ScalarField(space, blocks[0].mask.astype(float))
    return ErgodicityResult(False, dim, witness)


@dataclass(frozen=True)
class BlockDecomposition:
    blocks: list
    count: int


def invariant_blocks(space: Space) -> BlockDecomposition:
    """Closed communicating classes of the support digraph.

    For reversible kernels with full-support measure these partition the
    space and their number equals the kernel dimension of the generator.
    """
    adj = space.kernel > 0
    ncomp, labels = connected_components(csr_matrix(adj), connection="strong")
    blocks = []
    for c in range(ncomp):
        mask = labels == c
        if not space.kernel[np.ix_(mask, ~mask)].any():  # closed: no escaping mass
            blocks.append(Subset(space, mask))
    blocks.sort(key=lambda b: int(b.indices[0]))
    return BlockDecomposition(blocks, len(blocks))
