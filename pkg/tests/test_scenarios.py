import json

import numpy as np
import pytest
import sympy as sp

from nhcompat.constraint import classify
from nhcompat.exceptions import ConfigError
from nhcompat.scenarios import BUILTINS, Polynomial, PolynomialArray, builtin, from_dict, load


def _sympy_poly_terms(expr, syms):
    poly = sp.Poly(expr, *syms)
    return [[float(c), list(m)] for m, c in zip(poly.monoms(), poly.coeffs())]


def test_polynomial_against_sympy():
    x, y, z = sp.symbols("x y z")
    expr = 3 * x ** 2 * y - 2 * y * z ** 3 + 5 + x * z
    p = Polynomial(_sympy_poly_terms(expr, [x, y, z]), 3)
    f = sp.lambdify([[x, y, z]], expr)
    df = sp.lambdify([[x, y, z]], [sp.diff(expr, s) for s in (x, y, z)])
    rng = np.random.default_rng(0)
    for q in rng.uniform(-2, 2, (10, 3)):
        assert p(q) == pytest.approx(f(q), rel=1e-13)
        np.testing.assert_allclose(p.grad(q), df(q), rtol=1e-13, atol=1e-13)


def test_polynomial_array_matches_scalar():
    rng = np.random.default_rng(1)
    polys = [Polynomial([[float(rng.normal()), list(rng.integers(0, 3, 3))] for _ in range(4)], 3)
             for _ in range(6)]
    arr = PolynomialArray(polys, (2, 3))
    q = rng.uniform(-1, 1, 3)
    np.testing.assert_allclose(arr(q).ravel(), [p(q) for p in polys], rtol=1e-14)
    np.testing.assert_allclose(arr.grad(q).reshape(6, 3), [p.grad(q) for p in polys], rtol=1e-14, atol=1e-15)


def test_empty_polynomial_is_zero():
    arr = PolynomialArray([Polynomial([], 2), Polynomial([[2.0, [1, 0]]], 2)], (2,))
    np.testing.assert_array_equal(arr(np.array([3.0, 1.0])), [0.0, 6.0])
    np.testing.assert_array_equal(arr.grad(np.array([3.0, 1.0])), [[0, 0], [2, 0]])


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_expected_class(name):
    sc = from_dict(builtin(name))
    assert str(classify(sc.constraint, sc.metric, sc.chart).label) == sc.expected_class


def test_builtin_registry_contents():
    assert {"pars3", "grad_sphere", "factor3", "genuine4", "pars4pad"} <= set(BUILTINS)
    a = from_dict(builtin("genuine4")).constraint
    np.testing.assert_allclose(a(np.array([0.5, 2.0, 3.0, 0.0])), [-2.0, 0.0, 1.0, -3.0])


def test_builtin_returns_copy():
    d = builtin("pars3")
    d["dim"] = 99
    assert builtin("pars3")["dim"] == 3


def test_load_file_and_errors(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(builtin("factor3")))
    assert load(str(p))["name"] == "factor3"
    with pytest.raises(ConfigError):
        load("definitely-not-a-scenario")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load(str(bad))


@pytest.mark.parametrize("mutate,path", [
    (lambda d: d.pop("dim"), "dim"),
    (lambda d: d.update(dim=1), "dim"),
    (lambda d: d.update(constraint=[[], []]), "constraint"),
    (lambda d: d["constraint"][0].append([1.0, [1, 0]]), "constraint[0][1]"),
    (lambda d: d["initial"].update(q0=[0.0, 0.0]), "initial.q0"),
    (lambda d: d["initial"].update(qdot0=[0.0, 0.0, 1.0]), "initial.qdot0"),
    (lambda d: d.update(chart=[[0, 1]]), "chart"),
    (lambda d: d.update(metric={"diagonal": [[], []]}), "metric.diagonal"),
    (lambda d: d.update(metric="hyperbolic"), "metric"),
    (lambda d: d.update(potential={"velocity": 1}), "potential"),
    (lambda d: d.update(run={"nonsense": 1}), "run"),
    (lambda d: d.update(run={"h": -1.0}), "run"),
])
def test_config_errors_carry_field_path(mutate, path):
    d = builtin("pars3")
    mutate(d)
    with pytest.raises(ConfigError) as exc:
        from_dict(d)
    assert exc.value.path == path or str(exc.value).startswith(path)


def test_projection_flagged():
    d = builtin("pars3")
    d["initial"]["qdot0"] = [1.0, 0.0, 0.5]
    sc = from_dict(d, project_velocity=True)
    assert sc.projected
    np.testing.assert_allclose(sc.qdot0, [1.0, 0.0, 0.0])
    assert sc.raw["initial"]["qdot0"] == [1.0, 0.0, 0.0]


def test_overrides():
    sc = from_dict(builtin("pars3"), overrides={"T": 0.5, "h": 0.01, "mu0": 2.0, "seed": 4})
    assert (sc.run["T"], sc.run["h"], sc.run["seed"], sc.mu0) == (0.5, 0.01, 4, 2.0)


def test_metric_and_potential_tables():
    d = builtin("pars3")
    d["metric"] = {"full": [[[[2.0, [0, 0, 0]]], [], []],
                            [[], [[1.0, [0, 0, 0]], [1.0, [2, 0, 0]]], []],
                            [[], [], [[1.0, [0, 0, 0]]]]]}
    d["potential"] = {"polynomial": [[0.5, [2, 0, 0]], [1.0, [0, 0, 1]]]}
    sc = from_dict(d)
    q = np.array([2.0, 0.0, 0.0])
    np.testing.assert_allclose(sc.metric(q), np.diag([2.0, 5.0, 1.0]))
    assert sc.metric.partials(q)[1, 1, 0] == pytest.approx(4.0)
    np.testing.assert_allclose(sc.lagrangian.potential.grad(q), [2.0, 0.0, 1.0])
    d["metric"] = {"diagonal": [[[1.0, [0, 0, 0]]], [[1.0, [0, 0, 0]], [1.0, [2, 0, 0]]], [[1.0, [0, 0, 0]]]]}
    assert from_dict(d).metric(q)[1, 1] == pytest.approx(5.0)
    d["potential"] = {"harmonic": 3.0}
    np.testing.assert_allclose(from_dict(d).lagrangian.potential.grad(q), [6.0, 0, 0])
