"""Shared spectral machinery for reversible kernels.

Reversibility makes S = D^{1/2} P D^{-1/2} symmetric (D = diag of the
normalized measure), so one symmetric eigendecomposition serves the heat
semigroup, the spectral gap, ergodicity counts and curvature bounds alike.
Decompositions are memoized per Space object; spaces are immutable.
"""

from __future__ import annotations

import weakref

import numpy as np

from .core import Space

_CACHE: "weakref.WeakKeyDictionary[Space, tuple]" = weakref.WeakKeyDictionary()

# Eigenvalue-1 multiplicity threshold for the symmetrized kernel.
KERNEL_DIM_TOL = 1e-10


def symmetrized(space: Space) -> tuple[np.ndarray, np.ndarray]:
    """Return (S, s) with S = diag(s) P diag(1/s) and s = sqrt(nu)."""
    s = np.sqrt(space.nu)
    S = (s[:, None] * space.kernel) / s[None, :]
    return S, s


def decomposition(space: Space) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Eigendecomposition of the generator on L^2(nu).

    Returns (lam, U, s): eigenvalues of I - S in ascending order, the matching
    orthonormal eigenvector columns of S, and s = sqrt(nu). Eigenvalues lie in
    [0, 2] up to roundoff.
    """
    hit = _CACHE.get(space)
    if hit is not None:
        return hit
    S, s = symmetrized(space)
    S = 0.5 * (S + S.T)  # scrub roundoff asymmetry before eigh
    mu, U = np.linalg.eigh(S)
    lam = (1.0 - mu)[::-1].copy()
    U = U[:, ::-1].copy()
    out = (lam, U, s)
    _CACHE[space] = out
    return out


def kernel_dimension(space: Space, tol: float = KERNEL_DIM_TOL) -> int:
    """Multiplicity of eigenvalue 1 of the symmetrized kernel (= dim ker of
    the generator)."""
    lam, _, _ = decomposition(space)
    return int(np.count_nonzero(np.abs(lam) <= tol))


def heat_apply(space: Space, values: np.ndarray, t: float) -> np.ndarray:
    """Apply the heat propagator at time t through the eigenbasis.

    Accepts a vector or a matrix whose columns are fields.
    """
    lam, U, s = decomposition(space)
    decay = np.exp(-t * lam)
    if values.ndim == 1:
        w = U.T @ (s * values)
        return (U @ (decay * w)) / s
    w = U.T @ (s[:, None] * values)
    return (U @ (decay[:, None] * w)) / s[:, None]
