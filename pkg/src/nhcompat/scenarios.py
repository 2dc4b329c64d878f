"""Scenario descriptions: polynomial coefficient tables and the builtin registry.

A polynomial in q^1..q^N is a list of terms ``[coef, [e1, ..., eN]]``.
Scenario JSON layout::

    {
      "name": "pars3",
      "dim": 3,
      "constraint": [poly_a1, ..., poly_aN],
      "metric": "identity" | {"diagonal": [poly, ...]} | {"full": [[poly, ...], ...]},
      "potential": "none" | {"harmonic": k} | {"polynomial": poly},
      "chart": [[lo, hi], ...],
      "initial": {"q0": [...], "qdot0": [...], "mu0": 0.0},
      "run": {"T": 1.0, "h": 0.001, "seed": 0, ...},
      "expected_class": "GenuinelyNonholonomic"
    }

Everything except ``name``, ``dim`` and ``constraint`` has a default.
"""
import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constraint import ConstraintForm
from .dynamics import NaturalLagrangian, Potential
from .exceptions import ConfigError
from .geometry import Chart, MetricField

RUN_DEFAULTS = {
    "T": 1.0,
    "h": 1e-3,
    "seed": 0,
    "n_samples": 64,
    "n_random": 0,
    "tol_classify": 1e-7,
    "tol_compat": 1e-8,
    "tol_rank": 1e-10,
    "epsilon": 1e-2,
    "project_steps": False,
}


class Polynomial:
    def __init__(self, terms, dim, path="polynomial"):
        coefs, exps = [], []
        if not isinstance(terms, list):
            raise ConfigError("expected a list of [coef, exponents] terms", path)
        for i, term in enumerate(terms):
            try:
                c, e = term
                c = float(c)
                e = [int(x) for x in e]
            except (TypeError, ValueError):
                raise ConfigError("term must be [coef, [e1, ..., eN]]", f"{path}[{i}]") from None
            if len(e) != dim:
                raise ConfigError(f"exponent list has length {len(e)}, expected {dim}", f"{path}[{i}]")
            if min(e, default=0) < 0:
                raise ConfigError("exponents must be non-negative", f"{path}[{i}]")
            coefs.append(c)
            exps.append(e)
        self.dim = dim
        self.coefs = np.array(coefs, dtype=float)
        self.exps = np.array(exps, dtype=int).reshape(len(coefs), dim)
        # d/dq^c: (coefficients * exponent, lowered exponents) over the terms that contain q^c
        self._dtables = []
        for c in range(dim):
            mask = self.exps[:, c] > 0
            e = self.exps[mask].copy()
            k = e[:, c].astype(float)
            e[:, c] -= 1
            self._dtables.append((self.coefs[mask] * k, e))

    def __call__(self, q):
        if not len(self.coefs):
            return 0.0
        return float(self.coefs @ np.prod(np.power(q, self.exps), axis=1))

    def grad(self, q):
        out = np.zeros(self.dim)
        for c, (ck, e) in enumerate(self._dtables):
            if len(ck):
                out[c] = ck @ np.prod(np.power(q, e), axis=1)
        return out


class PolynomialArray:
    """Array of polynomials evaluated together (one monomial pass per call)."""

    def __init__(self, polys, shape):
        self.shape = tuple(shape)
        self.dim = polys[0].dim
        self.size = len(polys)
        self.owner = np.concatenate([np.full(len(p.coefs), i) for i, p in enumerate(polys)]).astype(int)
        self.coefs = np.concatenate([p.coefs for p in polys])
        self.exps = np.concatenate([p.exps for p in polys]).reshape(-1, self.dim)
        self._dtables = []
        for c in range(self.dim):
            mask = self.exps[:, c] > 0
            e = self.exps[mask].copy()
            k = e[:, c].astype(float)
            e[:, c] -= 1
            self._dtables.append((self.owner[mask], self.coefs[mask] * k, e))

    def __call__(self, q):
        m = np.prod(np.power(q, self.exps), axis=1)
        return np.bincount(self.owner, self.coefs * m, minlength=self.size).reshape(self.shape)

    def grad(self, q):
        out = np.zeros((self.size, self.dim))
        for c, (own, ck, e) in enumerate(self._dtables):
            if len(ck):
                out[:, c] = np.bincount(own, ck * np.prod(np.power(q, e), axis=1), minlength=self.size)
        return out.reshape(self.shape + (self.dim,))


def _poly_list(spec, dim, path):
    if not isinstance(spec, list) or len(spec) != dim:
        raise ConfigError(f"expected {dim} polynomials", path)
    return [Polynomial(p, dim, f"{path}[{i}]") for i, p in enumerate(spec)]


def build_constraint(spec, dim):
    field_ = PolynomialArray(_poly_list(spec, dim, "constraint"), (dim,))
    return ConstraintForm(dim, field_, field_.grad)


def build_metric(spec, dim):
    if spec in (None, "identity"):
        return MetricField.identity(dim)
    if isinstance(spec, dict) and "diagonal" in spec:
        diag = PolynomialArray(_poly_list(spec["diagonal"], dim, "metric.diagonal"), (dim,))
        idx = np.arange(dim)

        def ev(q):
            return np.diag(diag(q))

        def partials(q):
            dg = np.zeros((dim, dim, dim))
            dg[idx, idx, :] = diag.grad(q)
            return dg

        return MetricField(dim, ev, partials)
    if isinstance(spec, dict) and "full" in spec:
        rows = spec["full"]
        if not isinstance(rows, list) or len(rows) != dim:
            raise ConfigError(f"expected {dim} rows", "metric.full")
        polys = [p for i, r in enumerate(rows) for p in _poly_list(r, dim, f"metric.full[{i}]")]
        full = PolynomialArray(polys, (dim, dim))
        return MetricField(dim, full, full.grad)
    raise ConfigError("expected 'identity', {'diagonal': ...} or {'full': ...}", "metric")


def build_potential(spec, dim):
    if spec in (None, "none"):
        return Potential.zero()
    if isinstance(spec, dict):
        if "velocity" in spec or "generalized" in spec:
            raise ConfigError("velocity-dependent (generalized) potentials are not supported; "
                              "only V(q) is allowed", "potential")
        if "harmonic" in spec:
            return Potential.harmonic(float(spec["harmonic"]))
        if "polynomial" in spec:
            p = Polynomial(spec["polynomial"], dim, "potential.polynomial")
            return Potential(p, p.grad)
    raise ConfigError("expected 'none', {'harmonic': k} or {'polynomial': ...}", "potential")


@dataclass
class Scenario:
    name: str
    dim: int
    raw: dict
    constraint: ConstraintForm
    lagrangian: NaturalLagrangian
    chart: Chart
    q0: np.ndarray
    qdot0: np.ndarray
    mu0: float
    run: dict
    expected_class: str = None
    projected: bool = False
    notes: list = field(default_factory=list)

    @property
    def metric(self):
        return self.lagrangian.metric


def _vector(x, dim, path):
    try:
        v = np.array(x, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("expected a list of numbers", path) from None
    if v.shape != (dim,):
        raise ConfigError(f"expected length {dim}, got shape {v.shape}", path)
    return v


def from_dict(d, overrides=None, project_velocity=False):
    """Validate a scenario dict and build the numerical objects.

    ``overrides`` updates the ``run`` block (T, h, seed, tolerances) and may
    carry ``mu0``. With ``project_velocity`` an inadmissible qdot0 is
    projected onto the constraint plane instead of rejected.
    """
    if not isinstance(d, dict):
        raise ConfigError("scenario must be a JSON object")
    d = copy.deepcopy(d)
    for key in ("name", "dim", "constraint"):
        if key not in d:
            raise ConfigError("missing required field", key)
    dim = d["dim"]
    if not isinstance(dim, int) or dim < 2:
        raise ConfigError("must be an integer >= 2", "dim")
    overrides = dict(overrides or {})

    a = build_constraint(d["constraint"], dim)
    g = build_metric(d.get("metric"), dim)
    V = build_potential(d.get("potential"), dim)

    chart_spec = d.get("chart", [[-1.0, 1.0]] * dim)
    if not isinstance(chart_spec, list) or len(chart_spec) != dim:
        raise ConfigError(f"expected {dim} intervals", "chart")
    try:
        chart = Chart(tuple(tuple(b) for b in chart_spec))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "chart") from None

    init = d.get("initial", {})
    q0 = _vector(init.get("q0", [0.0] * dim), dim, "initial.q0")
    qdot0 = _vector(init.get("qdot0", [0.0] * dim), dim, "initial.qdot0")
    mu0 = float(overrides.pop("mu0", init.get("mu0", 0.0)))

    run = dict(RUN_DEFAULTS)
    unknown = set(d.get("run", {})) - set(RUN_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", "run")
    run.update(d.get("run", {}))
    run.update({k: v for k, v in overrides.items() if v is not None})
    if not run["h"] > 0 or not run["T"] >= run["h"]:
        raise ConfigError("need h > 0 and T >= h", "run")

    try:
        g0 = g(q0)
        a0 = a(q0)
    except Exception as exc:
        raise ConfigError(f"cannot evaluate the scenario at q0: {exc}", "initial.q0") from None
    a_up = np.linalg.solve(g0, a0)
    a_norm = float(np.sqrt(a0 @ a_up))
    v_norm = float(np.sqrt(qdot0 @ g0 @ qdot0))
    projected = False
    if abs(a0 @ qdot0) > 1e-10 * a_norm * v_norm:
        if not project_velocity:
            raise ConfigError(f"qdot0 violates the constraint (a.qdot = {a0 @ qdot0:.6g}); "
                              "use --project-velocity to project it", "initial.qdot0")
        qdot0 = qdot0 - (a0 @ qdot0) / (a0 @ a_up) * a_up
        projected = True

    d["run"] = run
    d.setdefault("initial", {})
    d["initial"].update({"q0": q0.tolist(), "qdot0": qdot0.tolist(), "mu0": mu0})
    return Scenario(
        name=str(d["name"]),
        dim=dim,
        raw=d,
        constraint=a,
        lagrangian=NaturalLagrangian(g, V),
        chart=chart,
        q0=q0,
        qdot0=qdot0,
        mu0=mu0,
        run=run,
        expected_class=d.get("expected_class"),
        projected=projected,
    )


def _mono(c, *e):
    return [c, list(e)]


BUILTINS = {
    "pars3": {
        "name": "pars3",
        "dim": 3,
        "constraint": [[_mono(-1.0, 0, 1, 0)], [], [_mono(1.0, 0, 0, 0)]],
        "metric": "identity",
        "potential": "none",
        "chart": [[-1.0, 1.0]] * 3,
        "initial": {"q0": [0.0, 0.0, 0.0], "qdot0": [1.0, 1.0, 0.0], "mu0": 0.0},
        "expected_class": "GenuinelyNonholonomic",
    },
    "grad_sphere": {
        "name": "grad_sphere",
        "dim": 3,
        "constraint": [[_mono(2.0, 1, 0, 0)], [_mono(2.0, 0, 1, 0)], [_mono(2.0, 0, 0, 1)]],
        "metric": "identity",
        "potential": "none",
        "chart": [[-1.0, 1.0]] * 3,
        "initial": {"q0": [1.0, 0.0, 0.0], "qdot0": [0.0, 1.0, 0.0], "mu0": 0.0},
        "expected_class": "HolonomicExact",
    },
    "factor3": {
        "name": "factor3",
        "dim": 3,
        "constraint": [[_mono(1.0, 0, 1, 0)], [_mono(2.0, 1, 0, 0)], []],
        "metric": "identity",
        "potential": "none",
        "chart": [[1.0, 2.0]] * 3,
        "initial": {"q0": [1.5, 1.5, 1.5], "qdot0": [1.0, -0.5, 0.5], "mu0": 0.0},
        "expected_class": "IntegrableWithFactor",
    },
    "genuine4": {
        "name": "genuine4",
        "dim": 4,
        "constraint": [[_mono(-1.0, 0, 1, 0, 0)], [], [_mono(1.0, 0, 0, 0, 0)], [_mono(-1.0, 0, 0, 1, 0)]],
        "metric": "identity",
        "potential": "none",
        "chart": [[-1.0, 1.0]] * 4,
        "initial": {"q0": [0.0] * 4, "qdot0": [1.0, 1.0, 0.0, 1.0], "mu0": 0.0},
        "expected_class": "GenuinelyNonholonomic",
    },
    "pars4pad": {
        "name": "pars4pad",
        "dim": 4,
        "constraint": [[_mono(-1.0, 0, 1, 0, 0)], [], [_mono(1.0, 0, 0, 0, 0)], []],
        "metric": "identity",
        "potential": "none",
        "chart": [[-1.0, 1.0]] * 4,
        "initial": {"q0": [0.0] * 4, "qdot0": [1.0, 1.0, 0.0, 1.0], "mu0": 0.0},
        "expected_class": "GenuinelyNonholonomic",
    },
}


def builtin(name):
    if name not in BUILTINS:
        raise ConfigError(f"unknown builtin scenario {name!r}; known: {sorted(BUILTINS)}", "scenario")
    return copy.deepcopy(BUILTINS[name])


def load(name_or_path):
    """Scenario dict for a builtin name or a JSON file path."""
    if name_or_path in BUILTINS:
        return builtin(name_or_path)
    path = Path(name_or_path)
    if not path.is_file():
        raise ConfigError(f"not a builtin name or readable file: {name_or_path}", "scenario")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "scenario") from None
