import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_spd(rng, n, cond_max=1e3):
    """Random SPD matrix with condition number at most cond_max."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    ev = np.exp(rng.uniform(0.0, np.log(cond_max), n))
    ev /= ev.min()
    return (Q * ev) @ Q.T


def random_skew(rng, n, scale=1.0):
    X = scale * rng.standard_normal((n, n))
    return X - X.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def sympy_form(exprs, syms, analytic=True):
    """ConstraintForm built from sympy expressions, plus the symbolic curl."""
    import sympy as sp

    from nhcompat.constraint import ConstraintForm

    n = len(syms)
    vec = sp.Matrix(exprs)
    J = vec.jacobian(syms)
    ev = sp.lambdify([syms], list(vec), "numpy")
    jac = sp.lambdify([syms], J.tolist(), "numpy")
    curl_sym = sp.lambdify([syms], (J - J.T).tolist(), "numpy")
    form = ConstraintForm(
        n,
        lambda q: np.array(ev(q), dtype=float),
        (lambda q: np.array(jac(q), dtype=float)) if analytic else None,
    )
    return form, lambda q: np.array(curl_sym(q), dtype=float)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running reference recomputation")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
