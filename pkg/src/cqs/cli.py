"""Experiment harness: named experiments with flat key=value configs, seeds,
CSV artifacts, and one PASS/FAIL summary line per run.

Exit codes: 0 pass, 2 metric failure, 1 usage/config error.
"""
import argparse
import os
import sys

import numpy as np

from . import control, fourier, fock, grid, qec, search, selection, statevec, swarm
from ._accel import USE_NUMBA, thread_cap


class UsageError(Exception):
    pass


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Plain comma-separated output: '.' decimal, no locale, repr floats."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# experiments: name -> (defaults, stochastic?, runner)
# runner(params, seed, outdir) -> (passed, metric_name, metric_value)
# ---------------------------------------------------------------------------

def _exp_grover(p, seed, outdir):
    oracle = search.BooleanOracle.single_target(p["n"], p["target"] % 2 ** p["n"])
    result = search.grover_search(oracle, rng_seed=seed)
    rows = [(t + 1, prob) for t, prob in enumerate(result.probability_trace)]
    write_csv(
        os.path.join(outdir, "grover_trace.csv"),
        ["iteration (count)", "success_probability (1)"],
        rows,
    )
    return result.success_probability >= p["threshold"], "success_prob", result.success_probability


def _exp_grover_general(p, seed, outdir):
    inst = search.GeneralizedSearchInstance(
        (2 ** p["n"] - p["l2"] - p["l3"], p["l2"], p["l3"]), (p["d"],)
    )
    trace, warn = search.generalized_search(inst)
    write_csv(
        os.path.join(outdir, "generalized_trace.csv"),
        ["iteration (count)", "target_probability (1)"],
        [(t + 1, prob) for t, prob in enumerate(trace)],
    )
    return trace[-1] >= p["threshold"] and not warn, "final_prob", trace[-1]


def _exp_qft_check(p, seed, outdir):
    rows = []
    worst = 0.0
    for n in range(1, p["max_n"] + 1):
        gates = fourier.qft_circuit(fourier.QftCircuitSpec(n))
        M = fourier.compose_circuit(gates + fourier.qft_circuit_swaps(n), n)
        dev = float(np.abs(M - fourier.qft_matrix(n, inverse=True)).max())
        worst = max(worst, dev)
        rows.append((n, len(gates), dev))
    write_csv(
        os.path.join(outdir, "qft_check.csv"),
        ["n (qubits)", "gate_count (count)", "max_deviation (1)"],
        rows,
    )
    return worst < p["tolerance"], "max_deviation", worst


def _exp_shor(p, seed, outdir):
    rng = np.random.default_rng(seed)
    rows = []
    divisor = None
    for trial in range(p["trials"]):
        try:
            divisor = fourier.factor(p["q"], rng)
        except fourier.NoFactorError:
            rows.append((trial, p["q"], -1))
            continue
        rows.append((trial, p["q"], divisor))
        break
    write_csv(
        os.path.join(outdir, "shor.csv"),
        ["trial (count)", "q (integer)", "divisor (integer)"],
        rows,
    )
    ok = divisor is not None and p["q"] % divisor == 0 and 1 < divisor < p["q"]
    return ok, "divisor", divisor if divisor else -1


def _exp_control_qft(p, seed, outdir):
    report, dist = control.qft_via_continuous(
        p["n"], mode=p["mode"], rng_seed=seed, ticks=p["ticks"] or None
    )
    write_csv(
        os.path.join(outdir, "control_qft.csv"),
        ["n (qubits)", "mode (name)", "distance (operator_norm)"],
        [(p["n"], p["mode"], dist)],
    )
    threshold = p["threshold"] if p["threshold"] > 0 else (
        1e-6 if p["mode"] == "periodic" else 1e-2
    )
    return dist < threshold, "distance", dist


def _exp_cnot_synth(p, seed, outdir):
    n, _, _, dist = control.synthesize_cnot((p["dE"], 0.0, 0.0, 0.0), eps=p["eps"])
    write_csv(
        os.path.join(outdir, "cnot_synth.csv"),
        ["dE (phase_rad)", "eps (rad)", "repetitions (count)", "distance (operator_norm)"],
        [(p["dE"], p["eps"], n, dist)],
    )
    return dist < p["threshold"], "distance", dist


def _exp_fock_check(p, seed, outdir):
    J = p["levels"]
    worst = 0.0
    for j in range(1, J + 1):
        for k in range(1, J + 1):
            a_j = fock.annihilation_matrix(J, j)
            a_k = fock.annihilation_matrix(J, k)
            anti = a_j @ a_k.T + a_k.T @ a_j
            expect = np.eye(2**J) if j == k else 0.0
            worst = max(worst, float(np.abs(anti - expect).max()))
            worst = max(worst, float(np.abs(a_j @ a_k + a_k @ a_j).max()))
    rng = np.random.default_rng(seed)
    d = rng.standard_normal() + 1j * rng.standard_normal()
    H = np.array([[rng.standard_normal(), d], [np.conj(d), rng.standard_normal()]])
    intertwine = fock.intertwine_check(H)
    write_csv(
        os.path.join(outdir, "fock_check.csv"),
        ["levels (count)", "car_deviation (1)", "intertwine_deviation (1)"],
        [(J, worst, intertwine)],
    )
    return worst == 0.0 and intertwine < 1e-10, "car_deviation", worst


def _exp_qec_cycle(p, seed, outdir):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    v = v / np.linalg.norm(v)
    _, records = qec.run_cycles(v[0], v[1], p["cycles"], p["error_probability"], rng)
    with open(os.path.join(outdir, "qec_cycles.csv"), "w") as fh:
        fh.write("cycle (count),error_qubit (index),outcome (bit),fidelity (1)\n")
        for rec in records:
            fh.write(
                f"{rec['cycle']},{rec['error_qubit']},{rec['outcome']},{rec['fidelity']!r}\n"
            )
    worst = min(rec["fidelity"] for rec in records)
    return worst > 1 - p["tolerance"], "min_fidelity", worst


def _exp_heat(p, seed, outdir):
    m = p["nodes"]
    x = np.linspace(0, 1, m)
    u0 = grid.GridField(np.sin(np.pi * x), x[1] - x[0])
    alpha = p["alpha"]
    dt = 0.2 * u0.dx**2 / (2 * alpha)
    steps = p["steps"]
    explicit = grid.heat_explicit(u0, alpha, dt, (0.0, 0.0), steps)
    sweep = grid.heat_sweep(u0, alpha, dt, (0.0, 0.0), steps)
    diff = float(np.abs(explicit.values - sweep.values).max())
    write_csv(
        os.path.join(outdir, "heat.csv"),
        ["x (length)", "u_explicit (temperature)", "u_sweep (temperature)"],
        list(zip(x.tolist(), explicit.values.tolist(), sweep.values.tolist())),
    )
    return diff < p["tolerance"], "max_scheme_diff", diff


def _exp_split_step(p, seed, outdir):
    n, L = p["nodes"], p["length"]
    x = np.linspace(-L / 2, L / 2, n, endpoint=False)
    psi = np.exp(-(x**2) / 2.0).astype(complex)
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * (x[1] - x[0]))
    f0 = grid.GridField(psi, x[1] - x[0], x[0])
    params = grid.SplitStepParams(mass=1.0, dt=p["dt"], potential=0.5 * x**2)
    rows = []
    state = f0
    stride = max(1, p["steps"] // 50)
    for step in range(0, p["steps"], stride):
        state = grid.split_step(state, params, stride)
        corr = abs(np.vdot(f0.values, state.values) * f0.dx)
        norm = float(np.sum(np.abs(state.values) ** 2) * f0.dx)
        rows.append((step + stride, norm, corr))
    write_csv(
        os.path.join(outdir, "split_step.csv"),
        ["step (count)", "norm (1)", "autocorrelation (1)"],
        rows,
    )
    final = rows[-1][2]
    return final >= 1 - p["tolerance"], "autocorrelation", final


def _exp_dmc(p, seed, outdir):
    x, history, _ = swarm.dmc_run(
        lambda q: 0.5 * q**2, p["samples"], p["steps"], seed
    )
    width = float(np.std(x))
    edges = np.linspace(-4, 4, 81)
    hist, _ = np.histogram(x, bins=edges, density=True)
    write_csv(
        os.path.join(outdir, "dmc_density.csv"),
        ["x (length)", "density (1/length)"],
        list(zip((0.5 * (edges[1:] + edges[:-1])).tolist(), hist.tolist())),
    )
    err = abs(width - 1.0)
    return err < p["tolerance"], "width_error", err


def _exp_dds(p, seed, outdir):
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(0.5)
    n = p["samples"]
    c = p["speed"]
    sw = swarm.Swarm(
        ids=np.arange(n),
        positions=rng.normal(0, sigma, n),
        codes=np.zeros(n, dtype=np.int8),
        mass=1.0,
        delta_x=p["grain"],
        speed=c,
        nu=swarm.nu_for_width(1.0, c, sigma),
    )
    edges = np.arange(-3.0, 3.0 + 1e-9, p["grain"])
    h0, _ = np.histogram(sw.positions[:, 0], bins=edges, density=True)
    out = sw
    for step in range(p["steps"]):
        out = swarm.dds_step(out, lambda pos: pos, p["dt"], rng)
    h1, _ = np.histogram(out.positions[:, 0], bins=edges, density=True)
    drift = float(np.sum(np.abs(h1 - h0)) * p["grain"])
    write_csv(
        os.path.join(outdir, "dds_density.csv"),
        ["x (length)", "rho_initial (1/length)", "rho_final (1/length)"],
        list(zip((0.5 * (edges[1:] + edges[:-1])).tolist(), h0.tolist(), h1.tolist())),
    )
    return drift < p["tolerance"], "l1_drift", drift


def _exp_bridge(p, seed, outdir):
    n_grid, L = 256, 16.0
    x = np.linspace(-L / 2, L / 2, n_grid, endpoint=False)
    vals = np.exp(-(x**2) / 2 + 0.7j * x)
    vals /= np.sqrt(np.sum(np.abs(vals) ** 2) * (x[1] - x[0]))
    psi = grid.GridField(vals, x[1] - x[0], x[0])
    sw = swarm.swarm_from_wavefunction(
        psi, p["samples"], delta_x=0.25, speed=4.0, rng_seed=seed
    )
    edges = np.arange(-L / 2, L / 2 + 1e-9, 0.25)
    recon = swarm.wavefunction_from_swarm(sw, edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    target = np.interp(centers, x, vals.real) + 1j * np.interp(centers, x, vals.imag)
    target /= np.sqrt(np.sum(np.abs(target) ** 2) * 0.25)
    recon_n = recon / np.sqrt(np.sum(np.abs(recon) ** 2) * 0.25)
    k = int(np.argmax(np.abs(target)))
    align = (target[k] / recon_n[k]) / abs(target[k] / recon_n[k])
    recon_n = recon_n * align
    err = float(np.sqrt(np.sum(np.abs(recon_n - target) ** 2) * 0.25))
    write_csv(
        os.path.join(outdir, "bridge.csv"),
        ["x (length)", "target_abs (1/sqrt_length)", "recon_abs (1/sqrt_length)",
         "recon_phase (rad)"],
        list(zip(centers.tolist(), np.abs(target).tolist(),
                 np.abs(recon_n).tolist(), np.angle(recon_n).tolist())),
    )
    return err < p["tolerance"], "l2_error", err


def _exp_selection(p, seed, outdir):
    cfg = selection.SelectionConfig(cell_size=0.4, min_group_size=4)
    res = selection.association_experiment(
        p["r0"], cfg, rng_seed=seed, n_corteges=p["corteges"], iterations=p["iterations"]
    )
    centers = 0.5 * (res.edges[1:] + res.edges[:-1])
    rows = []
    for it, (hist, frac) in enumerate(zip(res.histograms, res.canonical_fraction)):
        mode = float(centers[np.argmax(hist)])
        rows.append((it, frac, mode))
    write_csv(
        os.path.join(outdir, "selection.csv"),
        ["iteration (count)", "canonical_fraction (1)", "histogram_mode (length)"],
        rows,
    )
    grew = res.canonical_fraction[-1] >= 3 * max(res.canonical_fraction[0], 1e-9)
    mode_ok = abs(rows[-1][2] - p["r0"]) <= 0.1 * p["r0"]
    return grew and mode_ok, "canonical_fraction", res.canonical_fraction[-1]


def _exp_born_grain(p, seed, outdir):
    state = statevec.from_amplitudes([np.sqrt(0.3), np.sqrt(0.7)])
    counts, l = statevec.branch_split_counts(state, p["epsilon"], p["shots"], seed)
    probs = l / l.sum()
    stat, ok = statevec.pearson_check(counts, probs, alpha=p["alpha"])
    write_csv(
        os.path.join(outdir, "born_grain.csv"),
        ["outcome (basis_index)", "count (shots)", "expected_probability (1)"],
        [(i, int(c), float(q)) for i, (c, q) in enumerate(zip(counts, probs))],
    )
    return ok, "chi2", stat


EXPERIMENTS = {
    "grover": ({"n": 10, "target": 517, "threshold": 0.99}, True, _exp_grover),
    "grover-general": (
        {"n": 12, "l2": 4, "l3": 16, "d": np.pi / 2, "threshold": 0.95},
        False,
        _exp_grover_general,
    ),
    "qft-check": ({"max_n": 8, "tolerance": 1e-10}, False, _exp_qft_check),
    "shor": ({"q": 15, "trials": 10}, True, _exp_shor),
    "control-qft": (
        {"n": 3, "mode": "periodic", "ticks": 0, "threshold": 0.0},
        True,
        _exp_control_qft,
    ),
    "cnot-synth": ({"dE": 1.0, "eps": 1e-3, "threshold": 5e-3}, False, _exp_cnot_synth),
    "fock-check": ({"levels": 4}, True, _exp_fock_check),
    "qec-cycle": (
        {"cycles": 100, "error_probability": 0.3, "tolerance": 1e-9},
        True,
        _exp_qec_cycle,
    ),
    "heat": ({"nodes": 101, "alpha": 1.0, "steps": 200, "tolerance": 1e-4}, False, _exp_heat),
    "split-step": (
        {"nodes": 256, "length": 20.0, "dt": 0.001, "steps": 1000, "tolerance": 1e-6},
        False,
        _exp_split_step,
    ),
    "dmc": ({"samples": 20000, "steps": 1200, "tolerance": 0.05}, True, _exp_dmc),
    "dds": (
        {"samples": 20000, "steps": 100, "dt": 0.01, "grain": 0.25, "speed": 4.0,
         "tolerance": 0.1},
        True,
        _exp_dds,
    ),
    "bridge": ({"samples": 100000, "tolerance": 0.15}, True, _exp_bridge),
    "selection": ({"r0": 2.0, "corteges": 400, "iterations": 12}, True, _exp_selection),
    "born-grain": (
        {"shots": 10000, "epsilon": 1e-3, "alpha": 0.01},
        True,
        _exp_born_grain,
    ),
}


def parse_config_file(path):
    params = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = stripped.partition("=")
            params[key.strip()] = value.strip()
    return params


def coerce(value, default):
    if isinstance(default, bool):
        return value in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def run(experiment, overrides, seed, outdir):
    if experiment not in EXPERIMENTS:
        raise UsageError(
            f"unknown experiment {experiment!r}; choose from: "
            + ", ".join(sorted(EXPERIMENTS))
        )
    defaults, stochastic, fn = EXPERIMENTS[experiment]
    params = dict(defaults)
    for key, value in overrides.items():
        if key == "seed":
            seed = int(value)
            continue
        if key not in defaults:
            raise UsageError(
                f"unknown key {key!r} for {experiment}; known: "
                + ", ".join(sorted(defaults))
            )
        params[key] = coerce(value, defaults[key])
    if stochastic and seed is None:
        raise UsageError(f"experiment {experiment} is stochastic: --seed is mandatory")
    os.makedirs(outdir, exist_ok=True)
    passed, metric, value = fn(params, seed, outdir)
    status = "PASS" if passed else "FAIL"
    print(f"{experiment}: {status} {metric}={_fmt(value)}")
    return 0 if passed else 2


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="cqs", description="desk-scale quantum simulation experiments"
    )
    parser.add_argument("--experiment", required=True)
    parser.add_argument("--config", help="flat key = value file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=".", help="artifact directory")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    args = parser.parse_args(argv)

    cap = thread_cap()
    if cap and USE_NUMBA:
        import numba

        numba.set_num_threads(max(1, cap))

    try:
        overrides = {}
        if args.config:
            overrides.update(parse_config_file(args.config))
        for item in args.set:
            if "=" not in item:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            key, _, value = item.partition("=")
            overrides[key.strip()] = value.strip()
        return run(args.experiment, overrides, args.seed, args.out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
