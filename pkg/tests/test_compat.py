import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from conftest import random_skew, random_spd, sympy_form
from nhcompat import compat, skew
from nhcompat.compat import Case
from nhcompat.exceptions import DegeneratePointError, PreconditionError
from nhcompat.geometry import MetricField

x1, x2, x3, x4 = sp.symbols("x1:5")
I3, I4 = np.eye(3), np.eye(4)


def pars3_at(q):
    a = np.array([-q[1], 0.0, 1.0])
    M = np.zeros((3, 3))
    M[0, 1], M[1, 0] = -1.0, 1.0
    return a, M


def test_R_examples():
    a, M = pars3_at([0, 1, 0])
    assert compat.capital_R(a, M, I3, [0, 1, 0]) == pytest.approx(1.0)
    a, M = pars3_at([0, 0, 0])
    assert compat.capital_R(a, M, I3, [1, 0, 0]) == 0.0
    assert compat.capital_R(a, np.zeros((3, 3)), I3, [1, 2, 3]) == 0.0


@given(st.integers(2, 7), st.integers(0, 10_000))
def test_R_bounded_by_norms(n, seed):
    """|R| <= |a| |M qdot| (Cauchy-Schwarz), the identity behind the sign choice."""
    rng = np.random.default_rng(seed)
    g = random_spd(rng, n)
    M = random_skew(rng, n)
    a, qd = rng.standard_normal((2, n))
    R = compat.capital_R(a, M, g, qd)
    ginv = np.linalg.inv(g)
    bound = np.sqrt(a @ ginv @ a) * np.sqrt((M @ qd) @ ginv @ (M @ qd))
    assert abs(R) <= bound * (1 + 1e-10) + 1e-12


def test_compat_residual_examples():
    a, M = pars3_at([0, 0, 0])
    assert compat.compat_residual(a, M, I3, [1, 0, 0]) == pytest.approx(np.sqrt(2.0))
    assert compat.compat_residual(a, np.zeros((3, 3)), I3, [1, 0, 0]) == 0.0
    assert compat.compat_residual(a, M, I3, [0, 0, 0]) == 0.0
    # (1, 1, 0): M qdot = (-1, 1, 0), |.| = sqrt 2, residual = |(-1, 1, -/+ sqrt 2)| = 2
    assert compat.compat_residual(a, M, I3, [1, 1, 0]) == pytest.approx(2.0)


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_compat_residual_brute_force(n, seed):
    rng = np.random.default_rng(seed)
    g = random_spd(rng, n)
    M = random_skew(rng, n)
    a, qd = rng.standard_normal((2, n))
    ginv = np.linalg.inv(g)
    nrm = lambda u: np.sqrt(u @ ginv @ u)  # noqa: E731
    v = M @ qd
    ref = min(nrm(v - s * nrm(v) / nrm(a) * a) for s in (1, -1))
    assert compat.compat_residual(a, M, g, qd) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_compat_residual_vanishing_a():
    with pytest.raises(DegeneratePointError):
        compat.compat_residual(np.zeros(3), np.zeros((3, 3)), I3, [1, 0, 0])


def test_three_dim_obstruction():
    rng = np.random.default_rng(0)
    for q in rng.uniform(-1, 1, (20, 3)):
        a, M = pars3_at(q)
        assert compat.three_dim_obstruction(a, M) == -1.0
    sphere, _ = sympy_form([2 * x1, 2 * x2, 2 * x3], [x1, x2, x3])
    factor3, _ = sympy_form([x2, 2 * x1, 0], [x1, x2, x3])
    from nhcompat.constraint import curl
    for q in rng.uniform(1, 2, (20, 3)):
        assert compat.three_dim_obstruction(sphere(q), curl(sphere, q)) == pytest.approx(0.0, abs=1e-12)
        assert compat.three_dim_obstruction(factor3(q), curl(factor3, q)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        compat.three_dim_obstruction(np.zeros(4), np.zeros((4, 4)))


def test_kernel_direction_3d():
    rng = np.random.default_rng(1)
    for _ in range(10):
        M = random_skew(rng, 3)
        np.testing.assert_allclose(M @ compat.kernel_direction_3d(M), 0.0, atol=1e-12)


@pytest.mark.parametrize("n,p,expected", [(4, 1, (1, 2, 3)), (4, 2, (3, 0, 3)), (3, 1, (1, 0, 1)),
                                          (6, 2, (3, 2, 5)), (6, 3, (5, 0, 5)), (2, 1, (1, 0, 1))])
def test_consistency_counts(n, p, expected):
    c = compat.consistency_counts(n, p)
    assert (c.velocity_conditions, c.orthogonality_conditions, c.total) == expected


@given(st.integers(4, 12), st.data())
def test_consistency_total_is_n_minus_one(n, data):
    p = data.draw(st.integers(1, n // 2))
    c = compat.consistency_counts(n, p)
    assert c.total == n - 1 == c.velocity_conditions + c.orthogonality_conditions


@pytest.mark.parametrize("n,p,full", [(4, 0, None), (4, 3, None), (4, 2, False), (4, 1, True)])
def test_consistency_counts_rejects(n, p, full):
    with pytest.raises(ValueError):
        compat.consistency_counts(n, p, full_rank=full)


def test_velocity_family_pars3():
    a, M = pars3_at([0, 0, 0])
    fam = compat.velocity_family(a, M, I3, skew.decompose(M, I3))
    np.testing.assert_allclose(fam.span_direction, 0.0, atol=1e-15)
    assert fam.admissible_kernel_dims == 0
    a, M = pars3_at([0, 1, 0])
    fam = compat.velocity_family(a, M, I3, skew.decompose(M, I3))
    d = fam.span_direction
    assert abs(d[0]) < 1e-15 and abs(d[2]) < 1e-15 and abs(d[1]) > 0.1
    assert fam.admissible_kernel_dims == 0


def test_velocity_family_zero_M():
    g = np.diag([1.0, 2.0, 3.0])
    fam = compat.velocity_family([1.0, 0.0, 0.0], np.zeros((3, 3)), g, skew.decompose(np.zeros((3, 3)), g))
    assert fam.admissible_kernel_dims == 2
    np.testing.assert_allclose(fam.span_direction, 0.0)


def test_velocity_family_requires_basis():
    a, M = pars3_at([0, 0, 0])
    with pytest.raises(PreconditionError):
        compat.velocity_family(a, M, I3, skew.skew_spectrum(M, I3))


@given(st.integers(1, 4), st.integers(0, 10_000))
def test_span_direction_solves_equation_full_rank(p, seed):
    """Full rank: M d = a / |a| and a.d = 0; for g = I, d is the least-squares solution."""
    n = 2 * p
    rng = np.random.default_rng(seed)
    for g in (np.eye(n), random_spd(rng, n, cond_max=1e2)):
        M = random_skew(rng, n)
        a = rng.standard_normal(n)
        s = skew.decompose(M, g)
        fam = compat.velocity_family(a, M, g, s)
        d = fam.span_direction
        a_norm = np.sqrt(a @ np.linalg.solve(g, a))
        np.testing.assert_allclose(M @ d, a / a_norm, atol=1e-8 * max(1, np.abs(a).max()) * np.linalg.cond(M))
        assert abs(a @ d) <= 1e-10 * np.abs(a).max() * np.abs(d).max() * n
        # the verdict at qdot = r d is a compatible span case
        qd = 0.7 * d
        v = compat.verdict_at_point(a, M, g, qd, tol=1e-6)
        assert v.case is Case.SPAN and v.compatible_at_point
        if np.array_equal(g, np.eye(n)):
            ls = np.linalg.lstsq(M, a / a_norm, rcond=None)[0]
            np.testing.assert_allclose(d, ls, atol=1e-8 * np.linalg.cond(M))


def test_verdict_pars3_span_incompatible():
    a, M = pars3_at([0, 0, 0])
    v = compat.verdict_at_point(a, M, I3, [1, 1, 0])
    assert v.case is Case.SPAN
    assert not v.compatible_at_point
    assert v.compat_residual == pytest.approx(2.0)
    assert v.obstruction_3d == -1.0
    assert (v.n_velocity_conditions, v.n_orthogonality_conditions) == (1, 0)
    assert v.necessary_only


def test_initial_data_verdict_pars3_fields():
    form, _ = sympy_form([-x2, 0, 1], [x1, x2, x3])
    v = compat.initial_data_verdict(form, MetricField.identity(3), [0, 0, 0], [1, 1, 0])
    assert v.case is Case.SPAN and not v.compatible_at_point


def test_verdict_sphere_trivial():
    form, _ = sympy_form([2 * x1, 2 * x2, 2 * x3], [x1, x2, x3])
    v = compat.initial_data_verdict(form, MetricField.identity(3), [1, 0, 0], [0, 1, -2])
    assert v.case is Case.TRIVIALLY_COMPATIBLE and v.compatible_at_point


def test_verdict_pars4pad_kernel_case():
    form, _ = sympy_form([-x2, 0, 1, 0], [x1, x2, x3, x4])
    v = compat.initial_data_verdict(form, MetricField.identity(4), [0, 0, 0, 0], [0, 0, 0, 1])
    assert v.case is Case.KERNEL
    assert v.compatible_at_point
    assert v.representation_residual < 1e-12 and v.orthogonality_residual < 1e-12


def test_verdict_kernel_case_two_dim_kernel():
    # kernel span{e3, e4}; a lies in it, qdot is the admissible kernel direction
    n = 4
    M = np.zeros((n, n))
    M[0, 1], M[1, 0] = -1.0, 1.0
    a = np.array([0.0, 0.0, 1.0, 1.0])
    qd = np.array([0.0, 0.0, 1.0, -1.0])
    v = compat.verdict_at_point(a, M, np.eye(n), qd)
    assert v.case is Case.KERNEL
    assert v.compatible_at_point


def test_verdict_rejects_inadmissible():
    a, M = pars3_at([0, 0, 0])
    with pytest.raises(PreconditionError):
        compat.verdict_at_point(a, M, I3, [0, 0, 1])


def test_genuine4_random_admissible_mostly_incompatible():
    form, _ = sympy_form([-x2, 0, 1, -x3], [x1, x2, x3, x4])
    g = MetricField.identity(4)
    bad = total = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        for _ in range(10):
            q0 = rng.uniform(-1, 1, 4)
            a = form(q0)
            qd = rng.standard_normal(4)
            qd -= (a @ qd) / (a @ a) * a
            v = compat.initial_data_verdict(form, g, q0, qd)
            total += 1
            bad += v.case is Case.SPAN and not v.compatible_at_point
    assert bad / total >= 0.95
    assert compat.consistency_counts(4, 2).total == 3
