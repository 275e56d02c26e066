import math

import numpy as np
import pytest

import matineq as mi


def rand_pd(n, seed, shift=0.1):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g @ g.conj().T / n + shift * np.eye(n)


def test_eigen_and_svd_match_numpy():
    a = rand_pd(5, 1)
    np.testing.assert_allclose(mi.eigenvalues(a), np.sort(np.linalg.eigvalsh(a))[::-1], atol=1e-12)
    m = np.random.default_rng(2).standard_normal((4, 6))
    np.testing.assert_allclose(mi.singular_values(m), np.linalg.svd(m, compute_uv=False), atol=1e-12)


def test_geometric_mean_solves_riccati():
    a, b = rand_pd(4, 3), rand_pd(4, 4)
    g = mi.geometric_mean(a, b)
    assert np.linalg.norm(g @ np.linalg.inv(a) @ g - b, 2) < 1e-9


def test_theorem_checks_pass_and_a_equals_b_is_tight():
    a, b = mi.random_psd(5, seed=7), mi.random_psd(5, rank=3, seed=8)
    for check in (mi.check_bk1, mi.check_bk2, mi.check_bkd):
        assert check(a, b).passed
    r = mi.check_bkd(a, a)
    assert max(abs(x) for x in r.margins) < 1e-9


def test_scalar_bkd_margin():
    # 2 + 8 - 2 * sqrt(16)
    r = mi.check_bkd(np.array([[2.0]]), np.array([[8.0]]))
    assert r.margins == pytest.approx([2.0], abs=1e-12)


def test_conjecture_flag_and_ando():
    a, b = rand_pd(3, 5), rand_pd(3, 6)
    c = mi.check_conjecture(a, b, 0.3)
    assert c.conjecture and c.id == "conjecture"
    assert mi.check_ando(a, b, 0.3).passed


def test_reduction_worked_example():
    tr = mi.run_reduction(np.eye(2), np.diag([1.0, 0.5]), 1)
    assert tr.ok()
    np.testing.assert_allclose(tr.b1, np.diag([1.0, 0.0]), atol=1e-10)
    np.testing.assert_allclose(tr.a1, np.diag([1.0, 0.0]), atol=1e-10)
    assert tr.stage_eigen[2] == pytest.approx(2.0, abs=1e-10)
    assert set(tr.stages) == {"normalize", "b1", "partition", "a1", "prop1"}


def test_prop_spot_values():
    assert mi.lemma1_margin(np.array([[2.0]]), np.array([[1.0]])).min_margin == pytest.approx(0.5, abs=1e-10)
    r = mi.check_prop2(np.array([[4.0]]), np.array([[1.0]]))
    assert r.diagnostics["lambda_r"] == pytest.approx((5 + math.sqrt(10)) / 2, abs=1e-10)
    assert mi.check_prop1(5, 2, seed=3).passed


def test_dsl_and_catalogue():
    cat = mi.catalogue()
    assert list(cat) == ["eq1", "eq2", "eq3", "eq4", "eq5", "eq7", "eq8", "conjecture", "weyl-gm"]
    for src in cat.values():
        assert mi.dsl_format(mi.dsl_format(src)) == mi.dsl_format(src)
    a, b = rand_pd(3, 9), rand_pd(3, 10)
    got = mi.dsl_check(cat["eq5"], {"A": a, "B": b})
    want = mi.check_bkd(a, b)
    np.testing.assert_allclose(got.margins, want.margins, atol=1e-12)


def test_errors_are_typed():
    with pytest.raises(mi.DomainError):
        mi.geometric_mean(np.diag([1.0, -1.0]), np.eye(2))
    with pytest.raises(mi.Error):
        mi.dsl_check("lam(A + ", {"A": np.eye(2)})
    with pytest.raises(mi.DimensionMismatch):
        mi.check_bkd(np.eye(2), np.eye(3))


def test_small_search_is_deterministic():
    a = mi.search(dims=[2, 3], trials_per_cell=5, seed=11)
    b = mi.search(dims=[2, 3], trials_per_cell=5, seed=11, threads=2)
    a.pop("wall_time", None)
    b.pop("wall_time", None)
    assert a == b
    assert a["trials_run"] == 2 * 11 * 5
    assert a["min_margin_overall"] >= -1e-6
