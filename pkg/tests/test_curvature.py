import math

import numpy as np
import pytest

from mrws import (
    apply_laplacian,
    be_best_constant,
    dirichlet_energy,
    gamma,
    gamma2,
    gradient_estimate_check,
    is_ergodic,
    lipschitz_contraction_check,
    ollivier_global,
    ollivier_kappa,
    point_forms,
    propagate_measure,
    spectral_gap,
    wasserstein,
)
from mrws.builders import cycle, lazy_cycle

import _oracles
from conftest import random_spaces


def test_gamma_constant_is_zero(p3):
    np.testing.assert_array_equal(gamma(p3, np.full(3, 1.0)).values, 0.0)


def test_gamma_p3_endpoint_formula(p3, rng):
    for _ in range(10):
        f = rng.standard_normal(3)
        g = gamma(p3, f).values
        assert g[0] == pytest.approx(0.5 * (f[1] - f[0]) ** 2, abs=1e-14)
        assert g[2] == pytest.approx(0.5 * (f[1] - f[2]) ** 2, abs=1e-14)
        assert g[1] == pytest.approx(0.5 * (g[0] + g[2]), abs=1e-14)


def test_gamma_matches_pointwise_oracle(rng):
    for sp in random_spaces(8, rng):
        f = rng.standard_normal(sp.n)
        g = gamma(sp, f).values
        for x in range(sp.n):
            assert g[x] == pytest.approx(_oracles.gamma_pointwise(sp, f, x), abs=1e-12)
        assert (g >= 0).all()


def test_gamma_integral_is_energy(rng):
    for sp in random_spaces(8, rng):
        f = rng.standard_normal(sp.n)
        assert float(sp.nu @ gamma(sp, f).values) == pytest.approx(dirichlet_energy(sp, f), abs=1e-12)


def test_gamma2_p3_formulas(p3, rng):
    for _ in range(10):
        f = rng.standard_normal(3)
        lf = apply_laplacian(p3, f).values
        g2 = gamma2(p3, f).values
        g = gamma(p3, f).values
        assert g2[1] == pytest.approx(0.5 * lf[1] ** 2 + g[1], abs=1e-13)
        expect_a = 0.125 * lf[2] ** 2 + 0.625 * lf[0] ** 2 + 0.25 * lf[0] * lf[2]
        assert g2[0] == pytest.approx(expect_a, abs=1e-13)
        expect_c = 0.125 * lf[0] ** 2 + 0.625 * lf[2] ** 2 + 0.25 * lf[0] * lf[2]
        assert g2[2] == pytest.approx(expect_c, abs=1e-13)


def test_gamma2_constant_is_zero(p3):
    np.testing.assert_array_equal(gamma2(p3, np.full(3, 2.0)).values, 0.0)


def test_gamma2_matches_pointwise_oracle(rng):
    for sp in random_spaces(6, rng):
        f = rng.standard_normal(sp.n)
        g2 = gamma2(sp, f).values
        for x in range(sp.n):
            assert g2[x] == pytest.approx(_oracles.gamma2_pointwise(sp, f, x), abs=1e-11)


def test_gamma2_integral_identity(rng):
    for sp in random_spaces(10, rng):
        f = rng.standard_normal(sp.n)
        lhs = float(sp.nu @ gamma2(sp, f).values)
        lf = apply_laplacian(sp, f).values
        assert lhs == pytest.approx(float(sp.nu @ lf ** 2), abs=1e-11)


# ---------------------------------------------------------------------------
# per-point forms


def test_forms_match_direct_evaluation(rng):
    for sp in random_spaces(4, rng, n_hi=8):
        forms = point_forms(sp)
        for _ in range(12):
            f = rng.standard_normal(sp.n)
            g = gamma(sp, f).values
            g2 = gamma2(sp, f).values
            lf = apply_laplacian(sp, f).values
            for x in range(sp.n):
                assert f @ forms.gamma_forms[x] @ f == pytest.approx(g[x], abs=1e-10)
                assert f @ forms.gamma2_forms[x] @ f == pytest.approx(g2[x], abs=1e-10)
                assert forms.laplacian_rows[x] @ f == pytest.approx(lf[x], abs=1e-12)


def test_gamma_forms_are_psd(rng):
    for sp in random_spaces(6, rng):
        forms = point_forms(sp)
        for x in range(sp.n):
            assert np.linalg.eigvalsh(forms.gamma_forms[x]).min() >= -1e-10


def test_zero_gradient_directions_feasible(rng):
    # where the gradient form vanishes the dimension-reduced form must be PSD;
    # a failure would surface as an unbounded (-inf) constant
    for sp in random_spaces(10, rng):
        res = be_best_constant(sp, np.inf)
        assert res.feasible
        assert np.all(res.k_best_per_point > -math.inf)


# ---------------------------------------------------------------------------
# curvature-dimension constants


def test_p3_constants_match_closed_form(p3):
    for n in (2.0, 3.0, 4.0, 10.0):
        res = be_best_constant(p3, n)
        assert res.k_best_global == pytest.approx(1.0 - 2.0 / n, abs=1e-9)
    assert be_best_constant(p3, np.inf).k_best_global == pytest.approx(1.0, abs=1e-9)


def test_dimension_parameter_validation(p3):
    with pytest.raises(ValueError):
        be_best_constant(p3, 1.0)
    with pytest.raises(ValueError):
        be_best_constant(p3, 0.5)


def test_constant_monotone_in_dimension(rng):
    for sp in random_spaces(6, rng):
        ks = [be_best_constant(sp, n).k_best_global for n in (1.5, 2.0, 5.0, 50.0, np.inf)]
        for a, b in zip(ks, ks[1:]):
            assert a <= b + 1e-10


def test_be_to_gap_bridge(rng):
    for sp in random_spaces(10, rng) + [lazy_cycle(5, 0.3)]:
        gap = spectral_gap(sp).gap
        for n in (2.0, 5.0, np.inf):
            k = be_best_constant(sp, n).k_best_global
            if np.isfinite(k) and k > 0:
                factor = 1.0 if np.isinf(n) else n / (n - 1.0)
                assert gap >= k * factor - 1e-8


# ---------------------------------------------------------------------------
# coarse Ricci curvature


def test_p3_pair_curvatures(p3):
    assert ollivier_kappa(p3, "a", "c") == pytest.approx(1.0, abs=1e-12)
    assert ollivier_kappa(p3, "a", "b") == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        ollivier_kappa(p3, "a", "a")


def test_k3_edge_curvature_with_oracle(k3):
    val = ollivier_kappa(k3, "a", "b")
    assert val == pytest.approx(0.5, abs=1e-12)
    w1 = _oracles.w1_bruteforce(k3.kernel[0], k3.kernel[1], k3.metric)
    assert 1.0 - w1 / k3.metric[0, 1] == pytest.approx(val, abs=1e-10)


def test_cycle6_global_curvature_with_oracle():
    sp = cycle(6)
    res = ollivier_global(sp, policy="all_pairs")
    assert res.kappa_global == pytest.approx(0.0, abs=1e-12)
    for (i, j), k in res.kappa_pairs.items():
        w1 = _oracles.w1_bruteforce(sp.kernel[i], sp.kernel[j], sp.metric)
        assert k == pytest.approx(1.0 - w1 / sp.metric[i, j], abs=1e-9)


def test_kappa_symmetry_and_upper_bound(rng):
    for sp in random_spaces(5, rng, n_hi=6):
        for i in range(sp.n):
            for j in range(i + 1, sp.n):
                kij = ollivier_kappa(sp, i, j)
                kji = ollivier_kappa(sp, j, i)
                assert kij == pytest.approx(kji, abs=1e-10)
                assert kij <= 1.0 + 1e-12


def test_support_edges_policy_is_upper_family(k3):
    full = ollivier_global(k3, policy="all_pairs")
    edges = ollivier_global(k3, policy="support_edges")
    assert edges.kappa_global >= full.kappa_global - 1e-12
    assert set(edges.kappa_pairs) <= set(full.kappa_pairs)


def test_all_pairs_guard():
    from mrws.builders import random_reversible_space

    sp = random_reversible_space(12, np.random.default_rng(0))
    with pytest.raises(ValueError):
        ollivier_global(sp, policy="all_pairs", max_all_pairs=10)


def test_threads_do_not_change_result(k3):
    a = ollivier_global(k3, threads=None)
    b = ollivier_global(k3, threads=4)
    assert a.kappa_pairs == b.kappa_pairs


def test_positive_curvature_implies_ergodic(rng):
    for sp in random_spaces(10, rng, connected=False):
        if ollivier_global(sp).kappa_global > 0:
            assert is_ergodic(sp).ergodic


# ---------------------------------------------------------------------------
# semigroup estimates


def test_gradient_estimate_at_best_constant(p3, k3):
    for sp in (p3, k3):
        k = be_best_constant(sp, np.inf).k_best_global
        assert gradient_estimate_check(sp, k, samples=100, rng=5) <= 1e-9


def test_gradient_estimate_vacuous_constant(p3):
    assert gradient_estimate_check(p3, -10.0, samples=20, rng=5) <= 1e-9


def test_gradient_estimate_fails_above_best_constant(p3):
    # the linear field is the extremal direction at the endpoints
    bad = gradient_estimate_check(p3, 1.5, samples=0, extra_fields=[np.array([0.0, 1.0, 2.0])])
    assert bad > 1e-6


def test_lipschitz_contraction_k3(k3):
    kap = ollivier_global(k3).kappa_global
    assert kap == pytest.approx(0.5, abs=1e-12)
    assert lipschitz_contraction_check(k3, samples=50, rng=11, kappa=kap) <= 1.0 + 1e-9


def test_lipschitz_nonexpansive_at_zero_curvature(p3):
    assert lipschitz_contraction_check(p3, samples=50, rng=11, kappa=0.0) <= 1.0 + 1e-9


def test_lipschitz_constant_fields_skipped(p3):
    # all-constant samples produce no ratio at all
    class _Rng:
        def standard_normal(self, n):
            return np.zeros(n)

    assert lipschitz_contraction_check(p3, samples=0, kappa=0.0) == 0.0


def test_w1_distribution_contraction(rng):
    for sp in (cycle(6), lazy_cycle(5, 0.4)):
        kap = ollivier_global(sp).kappa_global
        for _ in range(20):
            a = rng.uniform(0, 1, sp.n)
            b = rng.uniform(0, 1, sp.n)
            a /= a.sum()
            b /= b.sum()
            w0 = wasserstein(sp, a, b).cost
            for steps in (1, 2, 3):
                an = propagate_measure(sp, a, steps).values
                bn = propagate_measure(sp, b, steps).values
                wn = wasserstein(sp, an, bn).cost
                assert wn <= (1.0 - kap) ** steps * w0 + 1e-9
