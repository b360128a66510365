"""Command-line harness: config parsing, dispatch, seeds, output artifacts.

Run configurations are flat, line-oriented text: `[section]` headers with
`key = value` lines and `#` comments. Sections are [law] (c, nu, kappa,
eps), [experiment] (per-subcommand keys), and [run] (seed, jobs, out,
format). Unknown sections or keys are errors, not warnings; every numeric
value is validated against the target operation's preconditions before any
simulation starts. Command-line flags override [run] values.

Exit codes: 0 success, 2 configuration or hypothesis error, 3 assertion
failure under --assert, 4 window-audit failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import artifacts, engine, measures, rng, state, variational
from .disorder import sample_rates, scan_event_probability
from .tandem import replica_key
from .disorder import RateLaw, critical_gap
from .errors import ConfigError, HypothesisError, WindowAuditError
from . import experiments as xp

_LIST = object()


def _parse_scalar(kind, raw: str, key: str):
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "str":
            return raw.strip()
        if kind == "floats":
            return [float(v) for v in raw.split(",") if v.strip()]
        if kind == "ints":
            return [int(float(v)) for v in raw.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
    raise ConfigError(f"internal: unknown kind {kind}")


def parse_config_text(text: str) -> dict[str, dict[str, str]]:
    """Strict [section] / key = value parser; duplicate keys are errors."""
    sections: dict[str, dict[str, str]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ConfigError(f"line {lineno}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        if current is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, val = line.split("=", 1)
        key = key.strip()
        if key in sections[current]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{current}]")
        sections[current][key] = val.strip()
    return sections


# Allowed [experiment] keys per subcommand: key -> (kind, default or _LIST marker)
_LAW_KEYS = {"c": "float", "nu": "float", "kappa": "float", "eps": "float"}

SCHEMAS: dict[str, dict] = {
    "simulate": dict(law=True, keys={
        "mode": ("str", "jam"), "t": ("float", 50.0), "n": ("int", 100),
        "u": ("float", 3.0), "gap_family": ("str", "geometric"),
        "a": ("float", 0.4), "K": ("float", 2.0),
        "snapshots": ("floats", []),
    }),
    "lemma1": dict(law=True, keys={
        "q1_grid": ("floats", [0.5, 1.0, 2.0]),
        "q2_grid": ("floats", [0.5, 1.0]),
        "n_grid": ("floats", [1e4, 1e6]),
        "replicas": ("int", 100000),
        "limit_n": ("float", 1e8),
    }),
    "thm1": dict(law=True, keys={
        "t_grid": ("floats", [1e3, 3e3, 1e4]),
        "replicas": ("int", 200), "u": ("float", 3.0),
        "gap_family": ("str", "geometric"),
        "z_grid": ("floats", [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5]),
        "slope_lo": ("float", 0.567), "slope_hi": ("float", 0.767),
    }),
    "thm2": dict(law=True, keys={
        "t_grid": ("floats", [1e3, 1e4, 1e5]),
        "replicas": ("int", 200),
        "b_grid": ("floats", [0.0, 0.125, 0.25, 0.5, 1.0, 1.5]),
        "slope_lo": ("float", 0.567), "slope_hi": ("float", 0.767),
        "bracket_b": ("float", 0.5),
    }),
    "thm3": dict(law=True, keys={
        "t_grid": ("floats", [1e3, 1e4]),
        "a_grid": ("floats", [0.1, 0.5]),
        "b_grid": ("floats", [3.0, 10.0]),
        "replicas": ("int", 400), "freq_min": ("float", 0.9),
    }),
    "thm4": dict(law=True, keys={
        "t_grid": ("floats", [1e4, 1e5, 1e6]),
        "replicas": ("int", 100), "margin": ("float", 0.1),
    }),
    "burke": dict(law=True, keys={
        "a": ("float", 0.45), "t": ("float", 100.0),
        "labels": ("int", 10000), "replicas": ("int", 10000),
    }),
    "varcheck": dict(law=True, keys={
        "trials": ("int", 1000), "max_particles": ("int", 20),
        "max_t": ("float", 10.0),
    }),
    "rost": dict(law=False, keys={
        "t": ("float", 1e4), "replicas": ("int", 100),
        "xs": ("floats", [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]),
        "delta": ("float", 0.05),
        "tol_mid": ("float", 0.02),
    }),
    "glynnwhitt": dict(law=False, keys={
        "rate": ("float", 1.0), "a": ("float", 1.0), "gamma": ("float", 0.5),
        "t_grid": ("floats", [1e3, 1e4, 1e5]), "replicas": ("int", 100),
    }),
}

_RUN_KEYS = {"seed": "int", "jobs": "int", "out": "str", "format": "str"}


def resolve_config(name: str, sections: dict, args) -> dict:
    """Merge file sections, schema defaults, and flag overrides; validate."""
    schema = SCHEMAS[name]
    known = {"law", "experiment", "run"}
    for sec in sections:
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")
    law_sec = sections.get("law", {})
    exp_sec = dict(sections.get("experiment", {}))
    run_sec = sections.get("run", {})

    law = None
    if schema["law"]:
        missing = [k for k in _LAW_KEYS if k not in law_sec]
        if missing:
            raise ConfigError(f"[law] section is missing key(s): {', '.join(missing)}")
        extra = [k for k in law_sec if k not in _LAW_KEYS]
        if extra:
            raise ConfigError(f"unknown [law] key(s): {', '.join(extra)}")
        vals = {k: _parse_scalar(kind, law_sec[k], k) for k, kind in _LAW_KEYS.items()}
        try:
            law = RateLaw(**vals)
        except ValueError as exc:
            raise ConfigError(f"invalid rate law: {exc}") from None
    elif law_sec:
        raise ConfigError(f"subcommand {name!r} takes no [law] section")

    exp_name = exp_sec.pop("name", None)
    if exp_name is not None and exp_name != name:
        raise ConfigError(f"[experiment] name={exp_name!r} does not match "
                          f"subcommand {name!r}")
    exp = {}
    for key, (kind, default) in schema["keys"].items():
        if key in exp_sec:
            exp[key] = _parse_scalar(kind, exp_sec.pop(key), key)
        else:
            exp[key] = default
    if exp_sec:
        raise ConfigError(f"unknown [experiment] key(s): {', '.join(sorted(exp_sec))}")

    extra_run = [k for k in run_sec if k not in _RUN_KEYS]
    if extra_run:
        raise ConfigError(f"unknown [run] key(s): {', '.join(extra_run)}")
    seed = args.seed if args.seed is not None else (
        _parse_scalar("int", run_sec["seed"], "seed") if "seed" in run_sec
        else xp.DEFAULT_SEED)
    jobs = args.jobs if args.jobs is not None else (
        _parse_scalar("int", run_sec["jobs"], "jobs") if "jobs" in run_sec
        else xp.default_jobs())
    out = args.out if args.out is not None else run_sec.get("out", f"{name}_out")
    fmt = run_sec.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    return {"law": law, "exp": exp, "seed": seed, "jobs": jobs,
            "out": Path(out), "format": fmt}


def _write_table(cfg, stem: str, header: list[str], rows: list) -> Path:
    outdir = cfg["out"]
    if cfg["format"] == "json":
        path = outdir / f"{stem}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        docs = [dict(zip(header, row)) for row in rows]
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(docs, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        path = outdir / f"{stem}.csv"
        artifacts.write_csv(path, header, rows)
    return path


def _write_manifest(cfg, name: str, extra: dict | None = None) -> None:
    doc = {
        "experiment": name,
        "law": cfg["law"].to_config() if cfg["law"] else None,
        "parameters": {k: v for k, v in cfg["exp"].items()},
        "seed": cfg["seed"],
        "jobs": cfg["jobs"],
        "format": cfg["format"],
    }
    if extra:
        doc.update(extra)
    artifacts.write_manifest(cfg["out"] / "manifest.json", doc)


class AssertionFailed(Exception):
    pass


def _assert_all(do_assert: bool, checks: list[tuple[str, bool]]) -> None:
    failed = [label for label, ok in checks if not ok]
    for label, ok in checks:
        print(("PASS " if ok else "FAIL ") + label)
    sys.stdout.flush()
    if do_assert and failed:
        raise AssertionFailed("; ".join(failed))


# --------------------------------------------------------------------------
# subcommand handlers

def _cmd_simulate(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    mode = exp["mode"]
    if mode not in ("jam", "iid", "equilibrium"):
        raise ConfigError("mode must be jam, iid, or equilibrium")
    t = exp["t"]
    if mode == "jam":
        lo, hi = engine.choose_window(t, exp["K"], "jam", speed=law.c)
    else:
        lo, hi = engine.choose_window(t, exp["K"], "tagged")
    n_labels = hi - lo + 1
    est_rings = n_labels * t  # rates are below one
    if dry_run:
        print(f"plan: mode={mode} window=[{lo}, {hi}] ({n_labels} labels), "
              f"t={t}, est. attempts <= {est_rings:.3g}")
        return 0
    if est_rings > 5e7:
        raise ConfigError(
            f"run of ~{est_rings:.3g} attempts exceeds the event-driven "
            "budget; shrink t or K (large horizons belong to the "
            "experiment subcommands)")
    field = sample_rates(law, lo, hi, seed=rng.derive(cfg["seed"], 1))
    sched = engine.ClockSchedule.from_field(rng.derive(cfg["seed"], 2), field)
    if mode == "jam":
        config = measures.jam_initial(n_labels)
    elif mode == "iid":
        gaps = measures.sample_iid_gaps(
            measures.IIDGapSpec(u=exp["u"], family=exp["gap_family"],
                                seed=rng.derive(cfg["seed"], 3)), lo, hi - 1)
        config = state.gaps_to_particles(gaps)
    else:
        spec = measures.EquilibriumSpec(a=exp["a"], field=field,
                                        seed=rng.derive(cfg["seed"], 3))
        gaps = measures.sample_equilibrium_gaps(spec, lo, hi - 1)
        config = state.gaps_to_particles(gaps)
    sim = engine.SimulationRun(config, sched)
    engine.run(sim, t, snapshot_times=exp["snapshots"])
    rows = []
    for snap_t in sorted(set(sim.snapshots) | {t}):
        pos = sim.snapshots.get(snap_t, np.asarray(sim.positions))
        heights = pos - np.arange(lo, hi + 1)
        gaps_arr = np.append(np.diff(pos) - 1, -1)
        for i, lab in enumerate(range(lo, hi + 1)):
            gap = "" if i == n_labels - 1 else int(gaps_arr[i])
            rows.append((snap_t, lab, int(pos[i]), gap, int(heights[i])))
    _write_table(cfg, "snapshots", ["time", "label", "position", "gap", "height"], rows)
    _write_manifest(cfg, "simulate")
    print(f"simulate: {sim.executed_count} jumps over t={t} "
          f"({sim.attempt_count} attempts)")
    return 0


def _cmd_lemma1(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    if dry_run:
        n_pts = len(exp['q1_grid']) * len(exp['q2_grid']) * len(exp['n_grid'])
        print(f"plan: {n_pts} grid points x {exp['replicas']} disorder replicas")
        return 0
    points = xp.lemma1_curve(law, exp["q1_grid"], exp["q2_grid"], exp["n_grid"],
                             exp["replicas"], seed=cfg["seed"])
    _write_table(cfg, "curve", xp.Lemma1Point.HEADER, [p.row() for p in points])
    _write_manifest(cfg, "lemma1")
    checks = []
    for p in points:
        ok = abs(p.empirical - p.exact_finite_n) <= 4.0 * p.std_error
        checks.append((f"lemma1 q1={p.q1} q2={p.q2} N={p.N:g}: "
                       f"emp={p.empirical:.4f} exact={p.exact_finite_n:.4f} "
                       f"(4se={4 * p.std_error:.4f})", ok))
    # exact tier: the finite-N product approaches the closed-form limit
    big = scan_event_probability(law, exp["q1_grid"][0], exp["q2_grid"][0],
                                 exp["limit_n"], 1, seed=cfg["seed"])
    checks.append((f"lemma1 exact N={exp['limit_n']:g}: product "
                   f"{big.exact_finite_n:.6f} vs limit {big.limit:.6f}",
                   abs(big.exact_finite_n - big.limit) < 1e-3))
    _assert_all(do_assert, checks)
    return 0


def _cmd_thm1(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    u_star = critical_gap(law)
    if law.nu <= 0.0:
        raise HypothesisError("thm1 requires nu > 0")
    if not exp["u"] > u_star:
        raise HypothesisError(f"thm1 requires u > u* = {u_star}")
    measures.IIDGapSpec(u=exp["u"], family=exp["gap_family"])
    d = law.derived()
    if dry_run:
        for t in exp["t_grid"]:
            base = int(law.c * t + 3.5 * t**d.one_minus_alpha) + 32
            cells = base * base / (2.0 * exp["u"])
            print(f"plan: t={t:g} budget={base} est_cells={cells:.3g} "
                  f"est_mem={3 * base * 8 / 1e6:.1f}MB x {exp['replicas']} replicas")
        return 0
    ensembles = {}
    rows_rep = []
    for i_t, t in enumerate(sorted(exp["t_grid"])):
        samples = xp.tagged_slowdown_ensemble(law, exp["u"], t, exp["replicas"],
                                              rng.derive(cfg["seed"], i_t),
                                              exp["gap_family"], jobs=cfg["jobs"])
        ensembles[t] = samples
        curve = xp.theorem1_tail(law, exp["u"], t, exp["z_grid"],
                                 exp["replicas"], samples=samples)
        _write_table(cfg, f"tail_t{int(t)}", xp.TailCurve.HEADER, list(curve.rows()))
        t_seed = rng.derive(cfg["seed"], i_t)
        for i, v in enumerate(samples):
            rows_rep.append((t, i, f"{replica_key(t_seed, i):016x}", int(v)))
    fit = xp.fit_medians(list(ensembles), ensembles, center=lambda t: law.c * t)
    _write_table(cfg, "fit", xp.ScalingFit.HEADER, list(fit.rows()))
    _write_table(cfg, "replicas", ["t", "replica", "replica_key", "position"], rows_rep)
    _write_manifest(cfg, "thm1", {"u_star": u_star})
    checks = [(f"thm1 slope {fit.slope:.3f} in [{exp['slope_lo']}, {exp['slope_hi']}]"
               f" (se {fit.slope_se:.3f})",
               exp["slope_lo"] <= fit.slope <= exp["slope_hi"])]
    _assert_all(do_assert, checks)
    return 0


def _cmd_thm2(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    if law.nu <= 0.0:
        raise HypothesisError("thm2 requires nu > 0")
    d = law.derived()
    if dry_run:
        for t in exp["t_grid"]:
            rows = int(4 * t**d.one_minus_alpha) + 64
            print(f"plan: t={t:g} rows<={rows} cols={int(law.c * t) + rows} "
                  f"x {exp['replicas']} replicas")
        return 0
    ensembles = {}
    rows_rep = []
    curves = {}
    for i_t, t in enumerate(sorted(exp["t_grid"])):
        samples = xp.front_count_ensemble(law, t, exp["replicas"],
                                          rng.derive(cfg["seed"], i_t),
                                          jobs=cfg["jobs"])
        ensembles[t] = samples
        curve = xp.theorem2_front(law, t, exp["b_grid"], exp["replicas"],
                                  samples=samples)
        curves[t] = curve
        _write_table(cfg, f"tail_t{int(t)}", xp.TailCurve.HEADER, list(curve.rows()))
        t_seed = rng.derive(cfg["seed"], i_t)
        for i, v in enumerate(samples):
            rows_rep.append((t, i, f"{replica_key(t_seed, i):016x}", int(v)))
    fit = xp.fit_medians(list(ensembles), ensembles)
    _write_table(cfg, "fit", xp.ScalingFit.HEADER, list(fit.rows()))
    _write_table(cfg, "replicas", ["t", "replica", "replica_key", "front_count"], rows_rep)
    _write_manifest(cfg, "thm2")
    t_max = max(ensembles)
    b = exp["bracket_b"]
    emp = float(np.mean(ensembles[t_max] > b * t_max**d.one_minus_alpha))
    _, upper = xp.theorem2_bounds(law, np.array([b]))
    checks = [
        (f"thm2 slope {fit.slope:.3f} in [{exp['slope_lo']}, {exp['slope_hi']}]",
         exp["slope_lo"] <= fit.slope <= exp["slope_hi"]),
        (f"thm2 tail at b={b}, t={t_max:g}: {emp:.3f} <= 2x upper bound "
         f"{float(upper[0]):.3f}", emp <= 2.0 * float(upper[0])),
    ]
    _assert_all(do_assert, checks)
    return 0


def _cmd_thm3(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    if law.nu != 0.0:
        raise HypothesisError("thm3 requires nu = 0")
    if dry_run:
        print(f"plan: horizons {exp['t_grid']} x {exp['replicas']} replicas")
        return 0
    recs = xp.theorem3_window(law, exp["t_grid"], exp["a_grid"], exp["b_grid"],
                              exp["replicas"], seed=cfg["seed"], jobs=cfg["jobs"])
    _write_table(cfg, "window", xp.WindowFrequency.HEADER, [r.row() for r in recs])
    _write_manifest(cfg, "thm3")
    t_max = max(exp["t_grid"])
    a_min, b_max = min(exp["a_grid"]), max(exp["b_grid"])
    best = [r for r in recs if r.t == t_max and r.a == a_min and r.b == b_max][0]
    checks = [(f"thm3 bracketing freq at t={t_max:g}, a={a_min}, b={b_max}: "
               f"{best.frequency:.3f} >= {exp['freq_min']}",
               best.frequency >= exp["freq_min"])]
    _assert_all(do_assert, checks)
    return 0


def _cmd_thm4(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    if not -1.0 < law.nu < 0.0:
        raise HypothesisError("thm4 requires -1 < nu < 0")
    if dry_run:
        print(f"plan: horizons {exp['t_grid']} x {exp['replicas']} replicas")
        return 0
    bracket = xp.theorem4_window(law, exp["t_grid"], exp["replicas"],
                                 seed=cfg["seed"], jobs=cfg["jobs"],
                                 margin=exp["margin"])
    _write_table(cfg, "fit", xp.ScalingFit.HEADER, list(bracket.fit.rows()))
    _write_manifest(cfg, "thm4", {
        "lower_exponent": bracket.lower_exponent,
        "upper_exponent": bracket.upper_exponent,
        "margin": bracket.margin,
    })
    checks = [(f"thm4 slope {bracket.fit.slope:.3f} in "
               f"[{bracket.lower_exponent - bracket.margin:.3f}, "
               f"{bracket.upper_exponent + bracket.margin:.3f}]",
               bracket.inside)]
    _assert_all(do_assert, checks)
    return 0


def _cmd_burke(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    if not 0.0 < exp["a"] < law.c:
        raise HypothesisError("burke requires 0 < a < c")
    if dry_run:
        print(f"plan: fixed field of {exp['labels']} labels, t={exp['t']}, "
              f"{exp['replicas']} replicas")
        return 0
    res = xp.burke_study(law, exp["a"], exp["t"], exp["labels"],
                         exp["replicas"], seed=cfg["seed"], jobs=cfg["jobs"])
    _write_table(cfg, "replicas",
                 ["replica", "replica_key", "increment", "final_gap"],
                 [(i, f"{replica_key(cfg['seed'], i):016x}",
                   int(res.increments[i]), int(res.final_gaps[i]))
                  for i in range(res.replicas)])
    _write_manifest(cfg, "burke", {
        "increment_mean": res.increment_mean,
        "increment_target": res.increment_target,
        "var_mean_ratio": res.var_mean_ratio,
        "gap_chi2_pvalue": res.gap_chi2_pvalue,
    })
    checks = [
        (f"burke increment mean {res.increment_mean:.3f} within 4se of "
         f"{res.increment_target:.1f}",
         abs(res.increment_mean - res.increment_target) <= 4.0 * res.mean_se),
        (f"burke var/mean {res.var_mean_ratio:.4f} in [0.95, 1.05]",
         0.95 <= res.var_mean_ratio <= 1.05),
        (f"burke gap chi2 p={res.gap_chi2_pvalue:.4f} >= 1e-3",
         res.gap_chi2_pvalue >= 1e-3),
    ]
    _assert_all(do_assert, checks)
    return 0


def _cmd_varcheck(cfg, do_assert, dry_run):
    law, exp = cfg["law"], cfg["exp"]
    if dry_run:
        print(f"plan: {exp['trials']} coupled small instances, up to "
              f"{exp['max_particles']} particles, t <= {exp['max_t']}")
        return 0
    records = variational.varcheck_trials(law, exp["trials"], cfg["seed"],
                                          max_particles=exp["max_particles"],
                                          max_time=exp["max_t"])
    cfg["out"].mkdir(parents=True, exist_ok=True)
    variational.write_audit_report(cfg["out"] / "audit.json", records)
    _write_manifest(cfg, "varcheck")
    n_bad = sum(1 for r in records if not r["match"])
    checks = [(f"varcheck {len(records)} comparisons, {n_bad} mismatches",
               n_bad == 0)]
    _assert_all(do_assert, checks)
    return 0


def _cmd_rost(cfg, do_assert, dry_run):
    exp = cfg["exp"]
    if dry_run:
        print(f"plan: t={exp['t']:g}, {exp['replicas']} replicas, "
              f"{int(1.7 * exp['t'])} particles")
        return 0
    pts = xp.rost_profile(exp["t"], exp["replicas"], xs=exp["xs"],
                          delta=exp["delta"], seed=cfg["seed"], jobs=cfg["jobs"])
    _write_table(cfg, "profile", xp.ProfilePoint.HEADER, [p.row() for p in pts])
    _write_manifest(cfg, "rost")
    checks = []
    for p in pts:
        if p.x == 0.0:
            checks.append((f"rost density at 0: {p.density:.4f} within "
                           f"{exp['tol_mid']} of 0.5",
                           abs(p.density - 0.5) <= exp["tol_mid"]))
        elif p.x <= -1.5:
            checks.append((f"rost density at {p.x}: {p.density:.4f} >= 0.98",
                           p.density >= 0.98))
        elif p.x >= 1.5:
            checks.append((f"rost density at {p.x}: {p.density:.4f} <= 0.02",
                           p.density <= 0.02))
    _assert_all(do_assert, checks)
    return 0


def _cmd_glynnwhitt(cfg, do_assert, dry_run):
    exp = cfg["exp"]
    if not 0.0 < exp["gamma"] < 1.0:
        raise HypothesisError("glynnwhitt requires 0 < gamma < 1")
    if dry_run:
        print(f"plan: horizons {exp['t_grid']} x {exp['replicas']} replicas")
        return 0
    pts = xp.glynn_whitt_benchmark(exp["rate"], exp["a"], exp["gamma"],
                                   exp["t_grid"], exp["replicas"],
                                   seed=cfg["seed"], jobs=cfg["jobs"])
    _write_table(cfg, "trend", xp.GlynnWhittPoint.HEADER, [p.row() for p in pts])
    _write_manifest(cfg, "glynnwhitt")
    gaps_to_target = [abs(p.mean_stat - p.target) for p in pts]
    ses = [p.std_error for p in pts]
    ok = all(gaps_to_target[i + 1] <= gaps_to_target[i] + 2 * (ses[i] + ses[i + 1])
             for i in range(len(pts) - 1))
    checks = [("glynnwhitt trend toward target " +
               " -> ".join(f"{g:.3f}" for g in gaps_to_target), ok)]
    _assert_all(do_assert, checks)
    return 0


_HANDLERS = {
    "simulate": _cmd_simulate, "lemma1": _cmd_lemma1, "thm1": _cmd_thm1,
    "thm2": _cmd_thm2, "thm3": _cmd_thm3, "thm4": _cmd_thm4,
    "burke": _cmd_burke, "varcheck": _cmd_varcheck, "rost": _cmd_rost,
    "glynnwhitt": _cmd_glynnwhitt,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dtasep",
        description="Disordered exclusion process: simulation and scaling experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _HANDLERS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--assert", dest="enforce", action="store_true")
        p.add_argument("--dry-run", dest="dry_run", action="store_true")
    args = parser.parse_args(argv)
    try:
        sections = {}
        if args.config is not None:
            path = Path(args.config)
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            sections = parse_config_text(path.read_text(encoding="utf-8"))
        elif SCHEMAS[args.command]["law"]:
            raise ConfigError(
                f"subcommand {args.command!r} needs --config with a [law] section")
        cfg = resolve_config(args.command, sections, args)
        t0 = time.perf_counter()
        try:
            return _HANDLERS[args.command](cfg, args.enforce, args.dry_run)
        finally:
            if not args.dry_run:
                print(f"wall time: {time.perf_counter() - t0:.1f}s",
                      file=sys.stderr)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HypothesisError as exc:
        print(f"hypothesis error: {exc}", file=sys.stderr)
        return 2
    except WindowAuditError as exc:
        print(f"window audit failure: {exc}", file=sys.stderr)
        return 4
    except AssertionFailed as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
