"""Exact optimal transport on the space's metric, local transport statistics,
entropy/information functionals, and the transport-inequality verifiers.

The transportation LP is solved to vertex optimality (HiGHS dual simplex);
optimality is certified by explicit feasible dual potentials, tightened by
c-transform so that the reported duality gap is meaningful on its own. For
ground cost d the source potential is genuinely 1-Lipschitz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix

from .core import HypothesisError, Space, as_values
from .spectral import dirichlet_energy

__all__ = [
    "TransportPlan",
    "wasserstein",
    "TransportStats",
    "transport_stats",
    "DivergenceStats",
    "divergences",
    "verify_transport_inequality",
    "random_density",
]


@dataclass(frozen=True)
class TransportPlan:
    coupling: np.ndarray  # (n, n), row marginals = source, column = target
    cost: float  # the W_p value (p-th root of the optimal LP objective)
    dual_u: np.ndarray
    dual_v: np.ndarray
    duality_gap: float
    p: int


def wasserstein(space: Space, mu, nu2, p: int = 1) -> TransportPlan:
    """Optimal transport between two equal-mass nonnegative vectors.

    Ground cost is the space metric to the p-th power (p in {1, 2}); the
    reported ``cost`` is the p-th root of the optimal objective. Duals are
    extended to the whole space by c-transform: for p = 1 this yields a
    1-Lipschitz potential u with dual_v = -u (the flat dual form), and the
    duality gap compares the primal objective with its dual value.
    """
    a = as_values(space, mu)
    b = as_values(space, nu2)
    if np.any(a < 0) or np.any(b < 0):
        raise ValueError("marginals must be nonnegative")
    ta, tb = float(a.sum()), float(b.sum())
    if abs(ta - tb) > 1e-12 * max(1.0, ta, tb):
        raise ValueError(f"mass imbalance: {ta} vs {tb}")
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    n = space.n
    if ta == 0.0:
        z = np.zeros(n)
        return TransportPlan(np.zeros((n, n)), 0.0, z, z, 0.0, p)
    b = b * (ta / tb)  # balance exactly

    if np.array_equal(a, b):
        return TransportPlan(np.diag(a), 0.0, np.zeros(n), np.zeros(n), 0.0, p)

    cost_matrix = space.metric if p == 1 else space.metric ** 2
    I = np.flatnonzero(a > 0)
    J = np.flatnonzero(b > 0)
    C = cost_matrix[np.ix_(I, J)]
    ni, nj = len(I), len(J)

    rows, cols = [], []
    for r in range(ni):
        rows.extend([r] * nj)
        cols.extend(range(r * nj, (r + 1) * nj))
    for c in range(nj):
        rows.extend([ni + c] * ni)
        cols.extend(range(c, ni * nj, nj))
    A_eq = coo_matrix((np.ones(2 * ni * nj), (rows, cols)), shape=(ni + nj, ni * nj))
    b_eq = np.concatenate([a[I], b[J]])

    res = linprog(C.reshape(-1), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    objective = float(res.fun)

    y = np.asarray(res.eqlin.marginals, dtype=float)
    if abs(b_eq @ y - objective) > abs(b_eq @ y + objective):
        y = -y  # solver sign convention
    u_I, v_J = y[:ni], y[ni:]

    # c-transform onto the full space; tightening never hurts feasibility
    u_full = (cost_matrix[:, J] - v_J[None, :]).min(axis=1)
    if p == 1:
        v_full = -u_full
        dual_value = float(a @ u_full - b @ u_full)
    else:
        v_full = (cost_matrix[I, :] - u_full[I][:, None]).min(axis=0)
        dual_value = float(a @ u_full + b @ v_full)
    gap = abs(objective - dual_value)

    coupling = np.zeros((n, n))
    coupling[np.ix_(I, J)] = np.maximum(res.x.reshape(ni, nj), 0.0)
    wp = objective if p == 1 else float(np.sqrt(max(objective, 0.0)))
    return TransportPlan(coupling, wp, u_full, v_full, gap, p)


# ---------------------------------------------------------------------------
# local statistics and divergences


@dataclass(frozen=True)
class TransportStats:
    theta: np.ndarray  # half squared 2-transport cost from each point to its jump law
    theta_m: float
    jump: np.ndarray  # expected jump length per point


def transport_stats(space: Space) -> TransportStats:
    """Half second moments and first moments of the one-step jump laws.

    Both couplings from a point mass are forced, so these closed-form sums
    equal the corresponding transport costs exactly.
    """
    d, P = space.metric, space.kernel
    theta = 0.5 * np.einsum("ij,ij->i", P, d ** 2)
    jump = np.einsum("ij,ij->i", P, d)
    return TransportStats(theta, float(theta.max()), jump)


@dataclass(frozen=True)
class DivergenceStats:
    entropy: float
    fisher: float


def divergences(space: Space, density) -> DivergenceStats:
    """Relative entropy and information of a probability density w.r.t. the
    normalized stationary measure.

    entropy = int f log f dnu (0 log 0 = 0); fisher = 2 * energy(sqrt f).
    Both vanish exactly when the density is identically one.
    """
    f = as_values(space, density)
    if np.any(f < 0):
        raise ValueError("density must be nonnegative")
    nu = space.nu
    total = float(nu @ f)
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"density must integrate to 1 (got {total})")
    pos = f > 0
    entropy = float(np.sum(nu[pos] * f[pos] * np.log(f[pos])))
    fisher = 2.0 * dirichlet_energy(space, np.sqrt(f))
    return DivergenceStats(entropy, fisher)


# ---------------------------------------------------------------------------
# inequality verification


def random_density(space: Space, rng: np.random.Generator, point_mass_prob: float = 0.3) -> np.ndarray:
    """Sample a probability density w.r.t. the normalized measure.

    Mixes pure point masses (which stress transport inequalities hardest)
    with smooth exponential tilts.
    """
    nu = space.nu
    if rng.random() < point_mass_prob:
        x = int(rng.integers(space.n))
        f = np.zeros(space.n)
        f[x] = 1.0 / nu[x]
        return f
    g = np.exp(1.5 * rng.standard_normal(space.n))
    return g / float(nu @ g)


KINDS = ("ti_be", "ti_ollivier", "te")


def verify_transport_inequality(space: Space, kind: str, trials: int, rng=None) -> float:
    """Stress a transport inequality with random densities; return the max
    ratio of its left side to its right side (<= 1 + 1e-9 when it holds).

    ti_be        W1(f nu, nu) <= sqrt(2 theta_m)/K * sqrt(I(f))   for the best
                 curvature-dimension constant K = K(infinity) > 0.
    ti_ollivier  same with K replaced by the coarse Ricci curvature kappa > 0.
    te           W1(f nu, nu) <= sqrt( sqrt(2 theta_m)/K_TI * Ent(f) ) where
                 1/K_TI is the best available transport-information constant.

    A ratio above 1 is a counterexample. The curvature hypotheses are local,
    so they can hold on a space with several invariant blocks even though the
    inequalities themselves are then false; to surface this reliably, the
    normalized indicator of each invariant block is always tried alongside
    the random densities (a block indicator has zero information but positive
    transport cost, so every finite information constant fails on it).
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    from .connectivity import invariant_blocks
    from .curvature import be_best_constant, ollivier_global  # deferred: cyclic module pair

    theta_m = transport_stats(space).theta_m
    root2theta = float(np.sqrt(2.0 * theta_m))

    k_be = None
    kappa = None
    if kind in ("ti_be", "te"):
        k = be_best_constant(space, np.inf).k_best_global
        if np.isfinite(k) and k > 0:
            k_be = float(k)
        elif kind == "ti_be":
            raise HypothesisError("curvature-dimension constant K(inf) is not positive")
    if kind in ("ti_ollivier", "te"):
        k = ollivier_global(space).kappa_global
        if np.isfinite(k) and k > 0:
            kappa = float(k)
        elif kind == "ti_ollivier":
            raise HypothesisError("coarse Ricci curvature is not positive")

    if kind == "te":
        candidates = [c / root2theta for c in (k_be, kappa) if c is not None]
        if not candidates:
            raise HypothesisError("no positive transport-information constant available")
        k_ti = max(candidates)

    rng = np.random.default_rng(rng)
    nu = space.nu
    densities = [random_density(space, rng) for _ in range(trials)]
    blocks = invariant_blocks(space).blocks
    if len(blocks) > 1:
        densities += [b.mask / float(nu @ b.mask) for b in blocks]

    worst = 0.0
    for f in densities:
        lhs = wasserstein(space, f * nu, nu, p=1).cost
        if kind == "ti_be":
            rhs = root2theta / k_be * np.sqrt(divergences(space, f).fisher)
        elif kind == "ti_ollivier":
            rhs = root2theta / kappa * np.sqrt(divergences(space, f).fisher)
        else:
            rhs = np.sqrt(root2theta / k_ti * max(divergences(space, f).entropy, 0.0))
        if rhs == 0.0:
            ratio = 0.0 if lhs <= 1e-12 else np.inf
        else:
            ratio = lhs / rhs
        worst = max(worst, float(ratio))
    return worst
