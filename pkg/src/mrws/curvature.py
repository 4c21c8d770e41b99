"""Curvature of the walk: the squared-gradient form and its iterate, best
curvature-dimension constants, coarse (transport) Ricci curvature, and the
semigroup estimates those bounds imply.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ScalarField, Space, as_values
from .heat import heat_evolve
from .transport import wasserstein

__all__ = [
    "gamma",
    "gamma2",
    "PointQuadraticForms",
    "point_forms",
    "BEResult",
    "be_best_constant",
    "OllivierResult",
    "ollivier_kappa",
    "ollivier_global",
    "gradient_estimate_check",
    "lipschitz_contraction_check",
]

# Rank threshold for the squared-gradient form and PSD slack for feasibility.
FORM_RANK_TOL = 1e-12
PSD_TOL = 1e-10


def gamma(space: Space, f, g=None) -> ScalarField:
    """Carre du champ: Gamma(f,g)(x) = (1/2) sum_y k(x,y)(f(y)-f(x))(g(y)-g(x))."""
    fv = as_values(space, f)
    gv = fv if g is None else as_values(space, g)
    P = space.kernel
    out = 0.5 * (P @ (fv * gv) - fv * (P @ gv) - gv * (P @ fv) + fv * gv)
    return ScalarField(space, out)


def gamma2(space: Space, f, g=None) -> ScalarField:
    """Iterated form: Gamma2(f,g) = (1/2) L Gamma(f,g) - (1/2)(Gamma(f, Lg) + Gamma(g, Lf)).

    Its integral against the stationary measure equals that of (Lf)(Lg).
    """
    fv = as_values(space, f)
    gv = fv if g is None else as_values(space, g)
    P = space.kernel
    lf = P @ fv - fv
    lg = P @ gv - gv
    gfg = gamma(space, fv, gv).values
    lgfg = P @ gfg - gfg
    cross = 0.5 * (gamma(space, fv, lg).values + gamma(space, gv, lf).values)
    return ScalarField(space, 0.5 * lgfg - cross)


# ---------------------------------------------------------------------------
# per-point quadratic forms


def _forms_at(space: Space, x: int, P2: np.ndarray, PL: np.ndarray):
    """Matrices (B, M2, Lrow) with f.B f = Gamma(f)(x), f.M2 f = Gamma2(f)(x),
    Lrow @ f = (Lf)(x). All O(n^2) per point."""
    P = space.kernel
    n = space.n
    px = P[x]
    ex = np.zeros(n)
    ex[x] = 1.0
    Dx = np.diag(px)

    B = 0.5 * (Dx - np.outer(px, ex) - np.outer(ex, px) + np.outer(ex, ex))

    # sum_j k(x,j) B_j, expanded through one extra kernel power
    SB = 0.5 * (np.diag(P2[x]) - P.T @ Dx - Dx @ P + Dx)

    L = P - np.eye(n)
    lx = L[x]
    C = 0.5 * (Dx @ L - np.outer(px, lx) - np.outer(ex, PL[x]) + np.outer(ex, lx))
    M2 = 0.5 * (SB - B) - 0.5 * (C + C.T)
    return B, 0.5 * (M2 + M2.T), lx


@dataclass(frozen=True)
class PointQuadraticForms:
    """Dense per-point forms; O(n^3) memory, intended for small spaces."""

    gamma_forms: np.ndarray  # (n, n, n), [x] is the form of Gamma(.)(x)
    gamma2_forms: np.ndarray
    laplacian_rows: np.ndarray  # (n, n)


def point_forms(space: Space) -> PointQuadraticForms:
    P = space.kernel
    P2 = P @ P
    PL = P2 - P
    n = space.n
    B = np.empty((n, n, n))
    M2 = np.empty((n, n, n))
    Lr = P - np.eye(n)
    for x in range(n):
        B[x], M2[x], _ = _forms_at(space, x, P2, PL)
    return PointQuadraticForms(B, M2, Lr)


@dataclass(frozen=True)
class BEResult:
    n_param: float
    k_best_global: float
    k_best_per_point: np.ndarray
    feasible: bool


def be_best_constant(space: Space, n_param: float) -> BEResult:
    """Largest K with Gamma2(f) >= (1/n) (Lf)^2 + K Gamma(f) at every point.

    Per point this asks for the supremum of K with A - K B positive
    semidefinite, A = Gamma2-form minus the dimension term and B the
    squared-gradient form. B is singular, so the pencil is reduced by
    eliminating the kernel of B through a Schur complement: directions with
    zero gradient must already be nonnegative for A (else no finite K works,
    reported as -inf and feasible=False), and their coupling to the rest
    tightens the constant. The reduced problem is an ordinary symmetric
    generalized eigenvalue problem.
    """
    if not n_param > 1:
        raise ValueError("dimension parameter must satisfy n > 1 (inf allowed)")
    P = space.kernel
    P2 = P @ P
    PL = P2 - P
    n = space.n
    ks = np.empty(n)
    for x in range(n):
        B, M2, lx = _forms_at(space, x, P2, PL)
        A = M2 if math.isinf(n_param) else M2 - np.outer(lx, lx) / n_param
        ks[x] = _pencil_supremum(A, B)
    finite = np.all(ks > -np.inf)
    k_global = float(ks.min()) if n else math.inf
    return BEResult(float(n_param), k_global, ks, bool(finite))


def _pencil_supremum(A: np.ndarray, B: np.ndarray) -> float:
    """sup{K : A - K B is PSD} for symmetric A and PSD B (possibly singular)."""
    w, V = np.linalg.eigh(B)
    keep = w > FORM_RANK_TOL
    if not keep.any():
        return math.inf  # B = 0: any K works
    R, wR = V[:, keep], w[keep]
    N = V[:, ~keep]
    ARR = R.T @ A @ R
    if N.shape[1]:
        ANN = N.T @ A @ N
        dN, WN = np.linalg.eigh(ANN)
        if dN.min() < -PSD_TOL:
            return -math.inf  # negative on zero-gradient directions
        G = R.T @ A @ N
        null = dN <= PSD_TOL
        if null.any() and np.abs(G @ WN[:, null]).max() > 1e-8:
            return -math.inf  # coupling into a null direction: unbounded below
        inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, dN))
        ARR = ARR - (G @ WN) @ (inv[:, None] * (WN.T @ G.T))
    scale = 1.0 / np.sqrt(wR)
    T = scale[:, None] * ARR * scale[None, :]
    return float(np.linalg.eigvalsh(T).min())


# ---------------------------------------------------------------------------
# coarse Ricci curvature


def ollivier_kappa(space: Space, x, y) -> float:
    """Coarse Ricci curvature along a pair: one minus the transport distance
    of the two jump laws relative to the points' own distance."""
    i, j = space.index(x), space.index(y)
    if i == j:
        raise ValueError("curvature needs two distinct points")
    w1 = wasserstein(space, space.kernel[i], space.kernel[j], p=1).cost
    return 1.0 - w1 / float(space.metric[i, j])


@dataclass(frozen=True)
class OllivierResult:
    kappa_pairs: dict  # (i, j) with i < j -> kappa
    kappa_global: float
    pair_policy: str


def ollivier_global(space: Space, policy: str = "all_pairs", threads: int | None = None,
                    max_all_pairs: int = 300) -> OllivierResult:
    """Infimum of the pairwise curvature over a pair family.

    ``all_pairs`` is the faithful global value (guarded to n <= 300);
    ``support_edges`` restricts to kernel-adjacent pairs and is only an upper
    bound on the global infimum, reported for diagnostics.
    """
    n = space.n
    if policy == "all_pairs":
        if n > max_all_pairs:
            raise ValueError(f"all_pairs is limited to n <= {max_all_pairs}; "
                             "use policy='support_edges'")
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif policy == "support_edges":
        adj = (space.kernel > 0) | (space.kernel.T > 0)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n) if adj[i, j]]
    else:
        raise ValueError("policy must be 'all_pairs' or 'support_edges'")

    def one(pair):
        return ollivier_kappa(space, pair[0], pair[1])

    if threads and threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(one, pairs))
    else:
        values = [one(p) for p in pairs]
    kappa_pairs = dict(zip(pairs, values))
    kappa_global = min(values) if values else math.inf
    return OllivierResult(kappa_pairs, float(kappa_global), policy)


# ---------------------------------------------------------------------------
# semigroup estimates


def gradient_estimate_check(space: Space, k: float, samples: int,
                            times=(0.25, 1.0, 4.0), rng=None, extra_fields=()) -> float:
    """Largest pointwise excess of Gamma(T_t f) over e^{-2kt} T_t Gamma(f).

    Nonpositive (up to 1e-9) for every f and t exactly when the
    curvature-dimension bound holds with constant k and infinite dimension.
    """
    rng = np.random.default_rng(rng)
    fields = [as_values(space, f) for f in extra_fields]
    fields += [rng.standard_normal(space.n) for _ in range(samples)]
    worst = -math.inf
    for f in fields:
        gf = gamma(space, f).values
        for t in times:
            tf = heat_evolve(space, f, t, method="spectral").values
            lhs = gamma(space, tf).values
            rhs = np.exp(-2.0 * k * t) * heat_evolve(space, gf, t, method="spectral").values
            worst = max(worst, float((lhs - rhs).max()))
    return worst


def _lipschitz_norm(space: Space, v: np.ndarray) -> float:
    d = space.metric
    off = ~np.eye(space.n, dtype=bool)
    return float((np.abs(v[None, :] - v[:, None])[off] / d[off]).max())


def lipschitz_contraction_check(space: Space, samples: int, times=(0.5, 2.0, 8.0),
                                rng=None, kappa: float | None = None) -> float:
    """Largest ratio of Lip(T_t f) to e^{-t kappa} Lip(f) over random fields.

    With kappa the global coarse Ricci curvature the ratio stays at or below
    one; constant fields (Lipschitz seminorm zero) are skipped.
    """
    if space.n < 2:
        raise ValueError("needs at least two points")
    if kappa is None:
        kappa = ollivier_global(space).kappa_global
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(samples):
        f = rng.standard_normal(space.n)
        base = _lipschitz_norm(space, f)
        if base <= 1e-12:
            continue
        for t in times:
            tf = heat_evolve(space, f, t, method="spectral").values
            worst = max(worst, _lipschitz_norm(space, tf) / (np.exp(-t * kappa) * base))
    return float(worst)
