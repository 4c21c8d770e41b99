"""Nonlocal set geometry: interaction, perimeter, total variation, coarea
levels, boundary mean curvature, medians, and the Cheeger constant.

All quantities normalize the stationary measure to a probability internally,
so perimeters and interaction masses are comparable across spaces regardless
of how the measure was stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ScalarField, Space, Subset, as_mask, as_values

__all__ = [
    "interaction",
    "perimeter",
    "total_variation",
    "CoareaLevel",
    "coarea_decompose",
    "mean_curvature",
    "MedianShift",
    "median_shift",
    "CheegerResult",
    "cheeger",
    "min_bipartition_interaction",
]

EXACT_ENUM_LIMIT = 24


def _edge_mass(space: Space) -> np.ndarray:
    """Symmetric matrix nu_i k(i,j) of normalized interaction mass."""
    return space.nu[:, None] * space.kernel


def interaction(space: Space, a, b) -> float:
    """Mass the walk sends from a into b in one step, weighted by the
    stationary measure; symmetric in its arguments by reversibility."""
    ma, mb = as_mask(space, a), as_mask(space, b)
    Q = _edge_mass(space)
    return float(Q[np.ix_(ma, mb)].sum())


def perimeter(space: Space, e) -> float:
    """Interaction of a set with its complement (nonlocal boundary mass)."""
    mask = as_mask(space, e)
    return interaction(space, mask, ~mask)


def total_variation(space: Space, u) -> float:
    """(1/2) sum_{x,y} nu_x k(x,y) |u(y) - u(x)|."""
    v = as_values(space, u)
    Q = _edge_mass(space)
    return 0.5 * float(np.sum(Q * np.abs(v[None, :] - v[:, None])))


@dataclass(frozen=True)
class CoareaLevel:
    threshold: float
    level_set: Subset  # {u > threshold}
    perimeter: float
    width: float  # gap to the next distinct value


def coarea_decompose(space: Space, u) -> list:
    """Slice a field into its superlevel sets.

    The perimeters of the level sets, weighted by the gaps between
    consecutive distinct values, sum exactly to the total variation: finite
    range makes the layer-cake identity a finite sum.
    """
    v = as_values(space, u)
    vals = np.unique(v)
    levels = []
    for lo, hi in zip(vals[:-1], vals[1:]):
        level_set = Subset(space, v > lo)
        levels.append(CoareaLevel(float(lo), level_set, perimeter(space, level_set), float(hi - lo)))
    return levels


def mean_curvature(space: Space, e) -> ScalarField:
    """Pointwise boundary curvature of a set: 1 - 2 * (one-step mass in it).

    Its integral over the set equals twice the perimeter minus the set mass.
    """
    mask = as_mask(space, e)
    inside = space.kernel @ mask.astype(float)
    return ScalarField(space, 1.0 - 2.0 * inside)


@dataclass(frozen=True)
class MedianShift:
    shifted: ScalarField
    median: float
    interval: tuple  # (lo, hi): the full set of medians


def median_shift(space: Space, u) -> MedianShift:
    """Shift a field by a median of its distribution under the measure.

    A median m leaves at most half the mass strictly below and strictly
    above. The full median interval is reported; when it is nondegenerate the
    midpoint is used for the shift, and zero is a median of the result.
    """
    v = as_values(space, u)
    nu = space.nu
    order = np.argsort(v, kind="stable")
    sv, snu = v[order], nu[order]

    vals = np.unique(sv)
    cum = np.cumsum(snu)
    total = cum[-1]
    valid = []
    for t in vals:
        below = float(snu[sv < t].sum())
        above = float(total - below - snu[sv == t].sum())
        if below <= 0.5 * total + 1e-15 and above <= 0.5 * total + 1e-15:
            valid.append(float(t))
    # between consecutive distinct values the whole open interval qualifies
    # exactly when the lower cumulative mass is one half
    for lo, hi in zip(vals[:-1], vals[1:]):
        mass_le = float(snu[sv <= lo].sum())
        if abs(mass_le - 0.5 * total) <= 1e-15:
            valid.extend([float(lo), float(hi)])
    lo, hi = min(valid), max(valid)
    med = 0.5 * (lo + hi)
    return MedianShift(ScalarField(space, v - med), med, (lo, hi))


# ---------------------------------------------------------------------------
# Cheeger constant


@dataclass(frozen=True)
class CheegerResult:
    lower: float
    upper: float
    exact: bool
    witness_set: Subset
    method: str


def _bipartition_scan(space: Space):
    """Iterate all proper bipartitions (point n-1 fixed outside the subset),
    yielding (cut mass, subset mass, best index bookkeeping) per chunk."""
    n = space.n
    Q = _edge_mass(space)
    nu = space.nu
    q = Q.sum(axis=1)
    total_masks = 1 << (n - 1)
    chunk = 1 << 16
    bit = np.arange(n, dtype=np.uint64)
    for start in range(1, total_masks, chunk):
        stop = min(start + chunk, total_masks)
        ids = np.arange(start, stop, dtype=np.uint64)
        bits = ((ids[:, None] >> bit[None, :]) & 1).astype(float)
        inner = np.einsum("mi,mi->m", bits @ Q, bits)
        cut = np.maximum(bits @ q - inner, 0.0)  # sums of nonnegative masses; scrub cancellation
        mass = bits @ nu
        yield ids, cut, mass


def cheeger(space: Space, mode: str = "exact") -> CheegerResult:
    """Cheeger constant: least perimeter over the smaller side's mass.

    ``exact`` enumerates every bipartition (limited to n <= 24);
    ``sweep`` orders points by the second eigenvector and scans prefix cuts,
    returning an upper bound together with the gap/2 lower bound from the
    Cheeger inequality.
    """
    n = space.n
    if n < 2:
        raise ValueError("Cheeger constant needs at least two points")
    if mode == "exact":
        if n > EXACT_ENUM_LIMIT:
            raise ValueError(
                f"exact enumeration is limited to n <= {EXACT_ENUM_LIMIT}; use mode='sweep'")
        best = np.inf
        best_id = None
        for ids, cut, mass in _bipartition_scan(space):
            ratio = cut / np.minimum(mass, 1.0 - mass)
            k = int(np.argmin(ratio))
            if ratio[k] < best:
                best, best_id = float(ratio[k]), int(ids[k])
        mask = np.array([(best_id >> i) & 1 for i in range(n)], dtype=bool)
        if space.nu[mask].sum() > 0.5:
            mask = ~mask
        return CheegerResult(best, best, True, Subset(space, mask), "exact")

    if mode != "sweep":
        raise ValueError("mode must be 'exact' or 'sweep'")

    from . import _linalg
    from .spectral import spectral_gap

    lam, U, s = _linalg.decomposition(space)
    fiedler = U[:, 1] / s
    order = np.argsort(fiedler, kind="stable")
    Q = _edge_mass(space)
    q = Q.sum(axis=1)
    nu = space.nu
    cut = 0.0
    mass = 0.0
    r = np.zeros(n)
    best = np.inf
    best_k = 0
    for k, idx in enumerate(order[:-1]):
        cut = max(cut + q[idx] - Q[idx, idx] - 2.0 * r[idx], 0.0)
        mass += nu[idx]
        r += Q[:, idx]
        ratio = cut / min(mass, 1.0 - mass)
        if ratio < best:
            best, best_k = float(ratio), k
    mask = np.zeros(n, dtype=bool)
    mask[order[: best_k + 1]] = True
    if nu[mask].sum() > 0.5:
        mask = ~mask
    lower = spectral_gap(space).gap / 2.0
    return CheegerResult(float(lower), best, False, Subset(space, mask), "sweep")


def min_bipartition_interaction(space: Space) -> float:
    """Exhaustive minimum of the interaction between the two sides of a
    bipartition; positive exactly when the space is connected (n <= 24)."""
    if space.n > EXACT_ENUM_LIMIT:
        raise ValueError(f"exhaustive scan is limited to n <= {EXACT_ENUM_LIMIT}")
    if space.n < 2:
        raise ValueError("needs at least two points")
    best = np.inf
    for _, cut, _ in _bipartition_scan(space):
        best = min(best, float(cut.min()))
    return best
