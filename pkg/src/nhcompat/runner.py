"""Stage execution for a scenario and the on-disk run layout.

A run directory holds ``manifest.json`` (always written), ``verdict.json``,
one CSV per simulated system and ``comparison.csv``. Numeric outputs are
pure functions of the scenario, so reruns give byte-identical CSVs; only the
manifest timestamps differ.
"""
import datetime as _dt
import json
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, compat, skew
from .constraint import classify, curl
from .dynamics import DALEMBERT, VAKONOMIC, compare, integrate
from .exceptions import ConfigError, DegeneratePointError, NonholonomicError
from .scenarios import from_dict

STAGES = ("classify", "spectrum", "compat", "simulate", "compare")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_FMT = "%.17g"


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="microseconds")


def default_run_dir(name, base="runs"):
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    return Path(base) / f"{name}-{stamp}"


def write_trajectory_csv(path, traj):
    n = traj.q.shape[1]
    header = ["t"] + [f"q{i + 1}" for i in range(n)] + [f"qd{i + 1}" for i in range(n)]
    header += ["multiplier", "energy", "drift"]
    data = np.column_stack([traj.t, traj.q, traj.qdot, traj.multiplier, traj.energy, traj.drift])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in data:
            fh.write(",".join(_FMT % x for x in row) + "\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dump(path, obj):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


class RunResult:
    def __init__(self, manifest, exit_code, run_dir):
        self.manifest = manifest
        self.exit_code = exit_code
        self.run_dir = Path(run_dir)


def run_scenario(config, out_dir=None, commands=STAGES, overrides=None, project_velocity=False):
    """Execute the requested stages (in canonical order) and persist the artifacts.

    ``config`` is a scenario dict. Returns a RunResult whose ``exit_code`` is
    0 on success, 2 on configuration errors, 3 on numeric/degenerate errors.
    """
    commands = [c for c in STAGES if c in set(commands)]
    name = config.get("name", "scenario") if isinstance(config, dict) else "scenario"
    run_dir = Path(out_dir) if out_dir else default_run_dir(name)
    run_dir.mkdir(parents=True, exist_ok=True)
    overrides = dict(overrides or {})
    manifest = {
        "artifact": "nhcompat",
        "version": __version__,
        "started_at": _now(),
        "commands": commands,
        "seed": None,
        "files": [],
        "summary": {},
    }

    def finish(status, code, error=None):
        manifest["status"] = status
        if error:
            manifest["error"] = error
        manifest["finished_at"] = _now()
        _dump(run_dir / "manifest.json", manifest)
        return RunResult(manifest, code, run_dir)

    try:
        sc = from_dict(config, overrides=overrides, project_velocity=project_velocity)
    except ConfigError as exc:
        manifest["scenario"] = config
        return finish("config_error", EXIT_CONFIG, str(exc))

    manifest["scenario"] = sc.raw
    manifest["seed"] = sc.run["seed"]
    manifest["projected_initial_velocity"] = sc.projected
    summary = manifest["summary"]
    verdict_record = {"scenario": sc.name}
    try:
        _execute(sc, commands, run_dir, manifest, summary, verdict_record)
    except NonholonomicError as exc:
        _dump(run_dir / "verdict.json", verdict_record)
        manifest["files"].append("verdict.json")
        return finish("numeric_error", EXIT_NUMERIC, f"{type(exc).__name__}: {exc}")
    _dump(run_dir / "verdict.json", verdict_record)
    manifest["files"].append("verdict.json")
    return finish("ok", EXIT_OK)


def _execute(sc, commands, run_dir, manifest, summary, record):
    run = sc.run
    a, g = sc.constraint, sc.metric
    if "classify" in commands:
        cl = classify(a, g, sc.chart, tol=run["tol_classify"], n_samples=run["n_samples"],
                      n_random=run["n_random"], seed=run["seed"])
        rep = cl.report
        record["classification"] = {
            "class": str(cl.label),
            "expected_class": sc.expected_class,
            "tol": cl.tol,
            "max_closedness_residual": rep.max_closedness_residual,
            "max_frobenius_residual": rep.max_frobenius_residual,
            "max_closedness_normalized": rep.max_closedness_normalized,
            "max_frobenius_normalized": rep.max_frobenius_normalized,
            "n_conditions": rep.n_conditions,
            "n_samples": rep.n_samples,
            "n_skipped": rep.n_skipped,
        }
        summary["class"] = str(cl.label)

    M0 = curl(a, sc.q0)
    g0 = g(sc.q0)
    spectrum = None
    if "spectrum" in commands or "compat" in commands:
        spectrum = skew.decompose(M0, g0, tol_rank=run["tol_rank"])
    if "spectrum" in commands:
        res = skew.verify_basis(spectrum, M0, g0)
        record["spectrum"] = {
            "q0": sc.q0,
            "eigenvalues": spectrum.eigenvalues,
            "kappas": spectrum.kappas,
            "pair_kappas": spectrum.pair_kappas,
            "rank": spectrum.rank,
            "b_basis": spectrum.b_basis,
            "residuals": {"ortho": res.ortho, "meq_odd": res.meq_odd,
                          "meq_even": res.meq_even, "eigen": res.eigen},
        }
        summary["rank"] = spectrum.rank
        summary["kappas"] = spectrum.kappas
    if "compat" in commands:
        v = compat.verdict_at_point(a(sc.q0), M0, g0, sc.qdot0, spectrum=spectrum, tol=run["tol_compat"])
        record["compat"] = v.summary()
        summary["case"] = str(v.case)
        summary["compatible_at_point"] = bool(v.compatible_at_point)
        summary["consistency_conditions"] = record["compat"]["consistency_conditions"]

    trajs = {}
    if "simulate" in commands or "compare" in commands:
        for which in (DALEMBERT, VAKONOMIC):
            tr = integrate(sc.lagrangian, a, which, sc.q0, sc.qdot0, mu0=sc.mu0, T=run["T"],
                           h=run["h"], project=bool(run["project_steps"]))
            trajs[which] = tr
            fname = f"{which}.csv"
            write_trajectory_csv(run_dir / fname, tr)
            manifest["files"].append(fname)
            summary[f"{which}_max_energy_error"] = float(np.max(np.abs(tr.energy - tr.energy[0])))
            summary[f"{which}_max_drift"] = float(np.max(np.abs(tr.drift)))
            if tr.error:
                summary[f"{which}_error"] = tr.error
    if "compare" in commands:
        A, B = trajs[DALEMBERT], trajs[VAKONOMIC]
        n = min(len(A), len(B))
        if n < len(A) or n < len(B):
            A = replace(A, t=A.t[:n], q=A.q[:n])
            B = replace(B, t=B.t[:n], q=B.q[:n])
        cmp_ = compare(A, B, metric=g, epsilon=run["epsilon"])
        with open(run_dir / "comparison.csv", "w", newline="") as fh:
            fh.write("t,distance\n")
            for t, dist in zip(cmp_.t, cmp_.distance):
                fh.write(f"{_FMT % t},{_FMT % dist}\n")
        manifest["files"].append("comparison.csv")
        stride = max(1, (len(cmp_.t) - 1) // 10)
        record["comparison"] = {
            "sup_q_distance": cmp_.sup_q_distance,
            "first_crossing": cmp_.first_crossing,
            "epsilon": cmp_.epsilon,
            "table": cmp_.table(every=stride),
        }
        summary["sup_q_distance"] = cmp_.sup_q_distance
    failed = [tr.error for tr in trajs.values() if not tr.ok]
    if failed:
        raise DegeneratePointError(failed[0])


def load_manifest(run_dir):
    path = Path(run_dir) / "manifest.json"
    if not path.is_file():
        raise FileNotFoundError(f"no manifest.json in {run_dir}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt manifest in {run_dir}: {exc}") from None


def report(run_dir):
    """Plain-text summary of a run directory."""
    m = load_manifest(run_dir)
    vpath = Path(run_dir) / "verdict.json"
    v = json.loads(vpath.read_text()) if vpath.is_file() else {}
    sc = m.get("scenario", {})
    lines = [f"scenario: {sc.get('name', '?')} (N = {sc.get('dim', '?')})",
             f"status: {m.get('status', '?')}"]
    if m.get("error"):
        lines.append(f"error: {m['error']}")
    if "classification" in v:
        c = v["classification"]
        lines.append(f"class: {c['class']}")
        lines.append(f"  max closedness residual: {c['max_closedness_residual']:.6g}")
        lines.append(f"  max integrating-factor residual: {c['max_frobenius_residual']:.6g}")
        lines.append(f"  independent conditions: {c['n_conditions']}"
                     f"  samples: {c['n_samples']} ({c['n_skipped']} skipped)")
    if "spectrum" in v:
        s = v["spectrum"]
        kap = ", ".join(f"{k:.6g}" for k in s["kappas"])
        lines.append(f"spectrum at q0: kappa = [{kap}], rank 2p = {s['rank']}")
        r = s["residuals"]
        lines.append(f"  basis residuals: ortho {r['ortho']:.3g}, odd {r['meq_odd']:.3g}, "
                     f"even {r['meq_even']:.3g}, eigen {r['eigen']:.3g}")
    if "compat" in v:
        c = v["compat"]
        cc = c["consistency_conditions"]
        lines.append(f"verdict: {c['case']}, compatible_at_point = {str(c['compatible_at_point']).lower()}"
                     " (necessary conditions only)")
        lines.append(f"  compat residual: {c['compat_residual']:.6g}  R: {c['R']:.6g}")
        lines.append(f"consistency conditions: {cc['velocity']} + {cc['orthogonality']} (total {cc['total']})")
    if "comparison" in v:
        c = v["comparison"]
        fc = "never" if c["first_crossing"] is None else f"t = {c['first_crossing']:.6g}"
        lines.append(f"divergence: sup |q_dA - q_var| = {c['sup_q_distance']:.6g}; "
                     f"exceeds {c['epsilon']:g} at {fc}")
        lines.append("       t      distance")
        for t, d in c["table"]:
            lines.append(f"  {t:8.4f}  {d:.6e}")
    return "\n".join(lines)
