"""Command-line experiments: ``carleman-workbench <subcommand> --config FILE --out DIR``.

Errors are reported as a single ``error: <Kind>: <message>`` line on stderr.
Exit status 2 means a configuration problem, 1 any other failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import carleman_lbm as cl
from . import carleman_ode as co
from . import costs
from . import lattice as lb
from . import streaming as qs
from .errors import ConfigError, DomainError
from .fileio import (
    boolean,
    floats,
    ints,
    line_plot_svg,
    load_config,
    write_csv,
    write_field,
    write_macro,
)

SWEEP_HEADER = ["Re", "tau", "steps", "mean_epsilon", "max_epsilon", "leakage"]


@dataclass
class RunConfig:
    subcommand: str
    config: Path | None
    out: Path
    seed: int | None
    threads: int


LBM_SCHEMA = {
    "nx": (int, 32),
    "ny": (int, 32),
    "tau": (float, 0.8),
    "u0": (float, 0.05),
    "n_modes": (int, 1),
    "steps": (int, 1000),
    "seed": (int, 0),
    "noise": (float, 0.0),
    "snapshot_every": (int, 0),
}

SWEEP_SCHEMA = {
    "nx": (int, 16),
    "ny": (int, 16),
    "u0": (float, 0.05),
    "n_modes": (int, 1),
    "steps": (int, 500),
    "seed": (int, 0),
    "noise": (float, 0.0),
    "re_list": (floats, [10.0, 25.0, 50.0, 100.0]),
    "tau_list": (floats, []),
    "order": (int, 2),
    "window": (int, 4),
    "center": (boolean, True),
    "leak_warn_fraction": (float, math.inf),
}

BURGERS_SCHEMA = {
    "n": (int, 16),
    "re": (float, 20.0),
    "steps": (int, 4000),
    "length": (float, 1.0),
    "amplitude": (float, 1.0),
    "t_final": (float, 0.5),
    "dt": (float, 0.0),
    "k_list": (ints, [1, 2, 3, 4]),
    "output_every": (int, 400),
    "memory_budget_mb": (int, 2048),
    "seed": (int, 0),
}

VERIFY_SCHEMA = {
    "grids": (ints, [2, 4, 8]),
    "trials": (int, 20),
    "seed": (int, 0),
    "tolerance": (float, 1e-12),
    "corrupt_gate": (int, -1),
}

CIRCUIT_SCHEMA = {
    "nx": (int, 8),
    "ny": (int, 8),
    "velocity": (int, -1),
    "seed": (int, 0),
}

COST_SCHEMA = {
    "re_list": (floats, [1e4, 1e6, 1e8, 1e10]),
    "grids": (ints, [2, 4, 8, 16, 32]),
    "precision": (float, 0.01),
    "readout_constant": (int, 1),
    "carleman_order": (int, 2),
    "seed": (int, 0),
}


def _seed(cfg: dict, rc: RunConfig) -> int:
    return rc.seed if rc.seed is not None else cfg["seed"]


# ---- run-lbm -----------------------------------------------------------------


def run_lbm(rc: RunConfig) -> int:
    cfg = load_config(rc.config, LBM_SCHEMA)
    lat = lb.LatticeConfig(cfg["nx"], cfg["ny"], cfg["tau"])
    f = lb.init_kolmogorov(lat, cfg["u0"], cfg["n_modes"])
    if cfg["noise"] > 0:
        rng = np.random.default_rng(_seed(cfg, rc))
        f = f * (1.0 + cfg["noise"] * rng.standard_normal(f.shape))
    rc.out.mkdir(parents=True, exist_ok=True)
    every = cfg["snapshot_every"]
    rows = [(0, lb.kinetic_energy(f), float(f.sum()))]
    write_macro(rc.out / "macro_t000000.csv", f)
    for t in range(1, cfg["steps"] + 1):
        f = lb.lbm_step(f, lat)
        rows.append((t, lb.kinetic_energy(f), float(f.sum())))
        if (every and t % every == 0) or t == cfg["steps"]:
            write_macro(rc.out / f"macro_t{t:06d}.csv", f)
    write_field(rc.out / "field_final.csv", f)
    write_csv(rc.out / "energy.csv", ["t", "energy", "mass"], rows)
    return 0


# ---- carleman-sweep ----------------------------------------------------------


def run_carleman_sweep(rc: RunConfig) -> int:
    cfg = load_config(rc.config, SWEEP_SCHEMA)
    leak = cfg["leak_warn_fraction"]
    ccfg = cl.CarlemanConfig(
        order=cfg["order"],
        window=cfg["window"],
        center=cfg["center"],
        leak_warn_fraction=None if math.isinf(leak) else leak,
    )
    args = (cfg["nx"], cfg["ny"], cfg["u0"], ccfg, cfg["steps"])
    kw = dict(n_modes=cfg["n_modes"], threads=rc.threads, noise=cfg["noise"], seed=_seed(cfg, rc))
    if cfg["tau_list"]:
        rows = cl.tau_sweep(cfg["tau_list"], *args, **kw)
    else:
        rows = cl.reynolds_sweep(cfg["re_list"], *args, **kw)

    rc.out.mkdir(parents=True, exist_ok=True)
    write_csv(
        rc.out / "sweep.csv",
        SWEEP_HEADER,
        [(r.re, r.tau, r.steps, r.mean_epsilon, r.max_epsilon, r.leakage) for r in rows],
    )
    write_csv(
        rc.out / "sweep_flags.csv",
        ["Re", "tau", "reason"],
        [(r.re, r.tau, r.reason) for r in rows if r.flagged],
    )
    for r in rows:
        if not r.flagged:
            write_csv(rc.out / f"epsilon_Re{r.re:g}.csv", ["t", "epsilon"], enumerate(r.series))
    ok = [r for r in rows if not r.flagged]
    line_plot_svg(
        rc.out / "sweep.svg",
        {"<eps>": ([r.re for r in ok], [r.mean_epsilon for r in ok])},
        "Re",
        "mean epsilon",
        title=f"Carleman k={ccfg.order}, window {ccfg.window}",
    )
    for r in rows:
        if r.flagged:
            print(f"flagged: Re={r.re:g} tau={r.tau:g}: {r.reason}", file=sys.stderr)
    return 0


# ---- burgers -----------------------------------------------------------------


def run_burgers(rc: RunConfig) -> int:
    cfg = load_config(rc.config, BURGERS_SCHEMA)
    n, L, U = cfg["n"], cfg["length"], cfg["amplitude"]
    nu = U * L / cfg["re"]
    system = co.burgers_system(n, nu, L)
    x = co.burgers_grid(n, L)
    u0 = U * np.sin(2 * np.pi * x / L)
    steps = cfg["steps"]
    if cfg["dt"] > 0:
        dt = cfg["dt"]
    elif cfg["t_final"] > 0:
        dt = cfg["t_final"] / steps
    else:
        dt = co.default_dt(system, U)
    budget = cfg["memory_budget_mb"] * 1024**2
    table = co.truncation_error(system, u0, dt, steps, cfg["k_list"], budget)
    rc.out.mkdir(parents=True, exist_ok=True)
    write_csv(rc.out / "errors.csv", ["k", "error"], table)
    ref = co.direct_euler(system, u0, dt, steps)
    every = max(cfg["output_every"], 1)
    traj = [
        (t * dt, x[j], ref[t, j])
        for t in range(0, steps + 1)
        if t % every == 0 or t == steps
        for j in range(n)
    ]
    write_csv(rc.out / "trajectory.csv", ["t", "x", "u"], traj)
    finite = [(k, e) for k, e in table if math.isfinite(e)]
    line_plot_svg(
        rc.out / "errors.svg",
        {"final-time error": ([k for k, _ in finite], [e for _, e in finite])},
        "Carleman order k",
        "relative error",
        title=f"Burgers n={n}, Re={cfg['re']:g}",
        logy=True,
    )
    return 0


# ---- verify-streaming --------------------------------------------------------


def _corrupt(c: qs.Circuit, k: int) -> qs.Circuit:
    g = c.gates[k]
    if g.controls:
        (q, pos), rest = g.controls[0], g.controls[1:]
        bad = qs.Gate(g.target, ((q, not pos),) + rest)
    else:
        bad = qs.Gate(g.target, ((c.layout.velocity_qubits[-1], True),))
    return qs.Circuit(c.layout, c.gates[:k] + (bad,) + c.gates[k + 1 :])


def _first_mismatch(got: np.ndarray, want: np.ndarray, tol: float):
    bad = np.flatnonzero(np.abs(got - want) > tol)
    return int(bad[0]) if bad.size else None


def verify_streaming(rc: RunConfig) -> int:
    cfg = load_config(rc.config, VERIFY_SCHEMA)
    rng = np.random.default_rng(_seed(cfg, rc))
    tol = cfg["tolerance"]
    lines: list[str] = []
    count_rows = []
    failures = 0
    for n in cfg["grids"]:
        lat = lb.LatticeConfig(n, n, 1.0)
        layout = qs.layout_for(lat)
        circuits = [qs.streaming_circuit(i, layout) for i in range(lb.Q)]
        full = qs.full_streaming_circuit(layout)
        if cfg["corrupt_gate"] >= 0:
            if cfg["corrupt_gate"] >= len(full):
                raise ConfigError(f"corrupt_gate {cfg['corrupt_gate']} beyond {len(full)} gates")
            full = _corrupt(full, cfg["corrupt_gate"])
        for i, c in enumerate(circuits):
            gc = qs.gate_counts(c)
            arities = " ".join(f"{a}:{m}" for a, m in gc["by_arity"].items())
            count_rows.append((f"{n}x{n}", layout.total, i, gc["gates"], arities, gc["cx_equivalent"]))
        grid_fail = 0
        for trial in range(cfg["trials"]):
            f = rng.random((lb.Q, n, n)) + 1e-3
            s = qs.encode(f)
            streamed = lb.stream(f, lat)
            checks = [(i, c, i) for i, c in enumerate(circuits)] + [("all", full, None)]
            for label, c, only in checks:
                out = qs.apply_circuit(c, s)
                if only is None:
                    want_f = streamed
                else:
                    want_f = f.copy()
                    want_f[only] = streamed[only]
                want = qs.encode(want_f).amplitudes
                norm_err = abs(float(np.linalg.norm(out.amplitudes)) - 1.0)
                slots_ok = not np.any(qs.invalid_slots(out))
                idx = _first_mismatch(out.amplitudes, want, tol / s.norm_factor)
                if idx is not None or norm_err > 1e-14 or not slots_ok:
                    grid_fail += 1
                    if idx is not None:
                        iv = idx % 2**layout.vq
                        xy = idx >> layout.vq
                        detail = (
                            f"first differing amplitude at basis index {idx} "
                            f"(i={iv}, x={xy % n}, y={xy // n}): got {float(out.amplitudes[idx].real)!r}, "
                            f"expected {float(want[idx].real)!r}"
                        )
                    else:
                        detail = f"norm error {norm_err:.3e}, invalid slots clean: {slots_ok}"
                    lines.append(f"FAIL grid {n}x{n} circuit S_{label} trial {trial}: {detail}")
        failures += grid_fail
        status = "PASS" if grid_fail == 0 else "FAIL"
        lines.append(f"{status} grid {n}x{n} (Q={layout.total}): {cfg['trials']} random fields, S_0..S_8 and full S")

    rc.out.mkdir(parents=True, exist_ok=True)
    write_csv(
        rc.out / "gate_counts.csv",
        ["grid", "qubits", "velocity", "gates", "arity_histogram", "cx_equivalent"],
        count_rows,
    )
    table = ["", "gate counts per S_i", "grid  Q  i  gates  arity:count  cx_equivalent"]
    table += [f"{g}  {q}  {i}  {n}  {a}  {cx}" for g, q, i, n, a, cx in count_rows]
    summary = "ALL PASS" if failures == 0 else f"{failures} FAILURES"
    report = "\n".join(lines + table + ["", summary]) + "\n"
    (rc.out / "report.txt").write_text(report)
    print(report, end="")
    if failures:
        print(f"error: VerificationFailure: {failures} streaming checks failed", file=sys.stderr)
        return 1
    return 0


# ---- emit-circuit / emit-costs ----------------------------------------------


def emit_circuit(rc: RunConfig) -> int:
    cfg = load_config(rc.config, CIRCUIT_SCHEMA)
    layout = qs.layout_for(lb.LatticeConfig(cfg["nx"], cfg["ny"], 1.0))
    v = cfg["velocity"]
    c = qs.full_streaming_circuit(layout) if v < 0 else qs.streaming_circuit(v, layout)
    rc.out.mkdir(parents=True, exist_ok=True)
    name = "streaming_all.txt" if v < 0 else f"streaming_S{v}.txt"
    (rc.out / name).write_text(c.to_text())
    return 0


def emit_costs(rc: RunConfig) -> int:
    cfg = load_config(rc.config, COST_SCHEMA)
    rc.out.mkdir(parents=True, exist_ok=True)
    re_rows = []
    for re in cfg["re_list"]:
        q = costs.qubit_estimate(re)
        re_rows.append((re, q, costs.generic_unitary_bound(q), "ceil(3 log2 Re)"))
    write_csv(rc.out / "costs_re.csv", ["Re", "qubits", "generic_unitary_bound", "provenance"], re_rows)

    k = cfg["carleman_order"]
    lay_rows = []
    for n in cfg["grids"]:
        layout = qs.layout_for(lb.LatticeConfig(n, n, 1.0))
        cx = qs.gate_counts(qs.full_streaming_circuit(layout))["cx_equivalent"]
        g = n * n
        hy = costs.hybrid_step_cost(g, cfg["precision"], cfg["readout_constant"])
        lay_rows.append(
            (
                f"{n}x{n}",
                layout.total,
                cx,
                costs.generic_unitary_bound(layout.total),
                costs.carleman_variable_count(g, costs.CARLEMAN_VELOCITY_SPARSITY, k),
                costs.carleman_register_count(k, False),
                costs.carleman_register_count(k, True),
                hy.shots,
                costs.reinit_amplitudes(g),
            )
        )
    header = [
        "grid",
        "qubits",
        "streaming_cx_equivalent",
        "generic_unitary_bound",
        f"carleman_vars_level{k}",
        "registers_collision_only",
        "registers_fully_quantum",
        "readout_shots_model",
        "reinit_amplitudes",
    ]
    write_csv(rc.out / "costs_layout.csv", header, lay_rows)

    text = ["Reynolds -> qubits (ceil(3 log2 Re))"]
    text += [f"  Re={r:<10g} Q={q}" for r, q, _, _ in re_rows]
    text += ["", "layouts (shots: model, not measurement)"]
    text += ["  " + "  ".join(header)]
    text += ["  " + "  ".join(str(v) for v in row) for row in lay_rows]
    (rc.out / "costs.txt").write_text("\n".join(text) + "\n")
    return 0


COMMANDS = {
    "run-lbm": run_lbm,
    "carleman-sweep": run_carleman_sweep,
    "burgers": run_burgers,
    "verify-streaming": verify_streaming,
    "emit-circuit": emit_circuit,
    "emit-costs": emit_costs,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="carleman-workbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, default=None, help="key=value config file")
        s.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--threads", type=int, default=1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    rc = RunConfig(args.subcommand, args.config, args.out, args.seed, args.threads)
    try:
        return COMMANDS[rc.subcommand](rc)
    except ConfigError as exc:
        print(f"error: ConfigError: {exc}", file=sys.stderr)
        return 2
    except (DomainError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
