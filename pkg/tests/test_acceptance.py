"""Acceptance gate: every criterion at its stated tolerance, one printed
pass/fail line per criterion (run with -s to see every line)."""
import time
import warnings

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from cqs import control, fourier, fock, grid, qec, search, selection, statevec, swarm


def check(name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    print(line)
    assert passed, line


class TestSearchAcceptance:
    def test_grover_single_target(self):
        t0 = time.perf_counter()
        oracle = search.BooleanOracle.single_target(10, 731)
        result = search.grover_search(oracle, rng_seed=0)
        elapsed = time.perf_counter() - t0
        check(
            "grover n=10 single target",
            result.iterations == 25
            and result.success_probability >= 0.99
            and elapsed < 1.0,
            f"t0={result.iterations} P={result.success_probability:.5f} "
            f"runtime={elapsed:.2f}s",
        )

    def test_grover_four_targets(self):
        table = np.zeros(1024, dtype=np.int8)
        table[[11, 222, 333, 1000]] = 1
        oracle = search.BooleanOracle(10, table)
        result = search.grover_search(oracle, rng_seed=1)
        check(
            "grover n=10 l=4",
            result.iterations == 12 and result.success_probability >= 0.99,
            f"t={result.iterations} P={result.success_probability:.5f}",
        )

    def test_theorem_one(self):
        inst = search.GeneralizedSearchInstance((2**12 - 20, 4, 16), (np.pi / 2,))
        trace, warn = search.generalized_search(inst)
        check(
            "generalized search flagship",
            trace[-1] >= 0.95 and not warn,
            f"final P(e2)={trace[-1]:.4f}",
        )
        errors = []
        for n in (10, 12, 14, 16):  # three doublings of N
            ins = search.GeneralizedSearchInstance((2**n - 20, 4, 16), (np.pi / 2,))
            tr, _ = search.generalized_search(ins)
            errors.append(1 - tr[-1])
        check(
            "generalized search error trend",
            all(a >= b for a, b in zip(errors, errors[1:])),
            f"errors={['%.4f' % e for e in errors]}",
        )
        G = search.build_generalized_operator(inst)
        eig = np.linalg.eigvals(G)
        roots = search.char_poly_roots(inst)
        cost = np.abs(eig[:, None] - roots[None, :])
        r, c = linear_sum_assignment(cost)
        check(
            "eigenvalues vs recursion roots",
            cost[r, c].max() < 1e-9,
            f"max mismatch={cost[r, c].max():.2e}",
        )
        gamma = inst.gamma
        x = inst.x
        ratios = []
        for target, sign in ((1 - 1j * x, -1), (1 + 1j * x, 1)):
            i = int(np.argmin(np.abs(eig - target)))
            ratios.append(abs(np.angle(eig[i]) - sign * x) / gamma)
        check(
            "leading eigenphases within o(gamma) band",
            max(ratios) < 0.3,
            f"gamma-ratios={['%.3f' % v for v in ratios]}",
        )


class TestFourierAcceptance:
    def test_qft_circuit(self):
        worst = 0.0
        counts_ok = True
        for n in range(1, 9):
            gates = fourier.qft_circuit(fourier.QftCircuitSpec(n))
            counts_ok &= len(gates) == n + n * (n - 1) // 2
            M = fourier.compose_circuit(gates + fourier.qft_circuit_swaps(n), n)
            worst = max(worst, float(np.abs(M - fourier.qft_matrix(n, inverse=True)).max()))
        check(
            "qft circuit vs matrix (n<=8)",
            worst < 1e-10 and counts_ok,
            f"max deviation={worst:.2e}, gate count l+l(l-1)/2: {counts_ok}",
        )

    def test_shor(self):
        t0 = time.perf_counter()
        ok = runs = 0
        for q in (15, 21, 33):
            for seed in range(50):
                rng = np.random.default_rng(10_000 * q + seed)
                runs += 1
                try:
                    d = fourier.factor(q, rng)
                except fourier.NoFactorError:
                    continue
                if q % d == 0 and 1 < d < q:
                    ok += 1
        elapsed = time.perf_counter() - t0
        check(
            "shor q in {15,21,33}",
            ok / runs >= 0.95 and elapsed < 10.0,
            f"success={ok}/{runs} runtime={elapsed:.1f}s",
        )

    def test_order_verified(self):
        rng = np.random.default_rng(5)
        for q in (15, 21, 33):
            for _ in range(10):
                y = int(rng.integers(2, q))
                from math import gcd
                if gcd(y, q) != 1:
                    continue
                r, _ = fourier.order_find(fourier.OrderFindingInstance(q, y), rng)
                assert pow(y, r, q) == 1
                assert r == fourier.classical_order(y, q)
        check("orders verified by modular exponentiation", True, "all sampled r minimal")


class TestControlAcceptance:
    def test_cnot_synthesis(self):
        n, _, _, dist = control.synthesize_cnot((1.0, 0, 0, 0), eps=1e-3)
        check(
            "cnot synthesis dE=1.0 eps=1e-3",
            dist < 5e-3,
            f"n={n} distance={dist:.2e}",
        )

    def test_continuous_qft_deterministic(self):
        _, dist = control.qft_via_continuous(3, mode="periodic")
        check("continuous qft n=3 deterministic", dist < 1e-6, f"distance={dist:.2e}")

    def test_continuous_qft_poisson(self):
        ok = 0
        dists = []
        for seed in range(10):
            _, dist = control.qft_via_continuous(
                3, mode="poisson", rng_seed=seed, ticks=2**14
            )
            dists.append(dist)
            ok += dist < 1e-2
        check(
            "continuous qft n=3 poisson",
            ok >= 9,
            f"{ok}/10 below 1e-2 (max={max(dists):.2e})",
        )

    def test_compensation_scaling(self):
        g = control.InteractionGraph.yukawa(3, 1.3)
        ms = [2**10, 2**13, 2**16]
        means = []
        for M in ms:
            vals = []
            for seed in range(12):
                _, report = control.compensate_random(
                    g, (0, 1), 1.0, lam=M / 2, rng_seed=seed, ticks=M
                )
                vals.append(report["unwanted_two_qubit_max"])
            means.append(np.mean(vals))
        slope = float(np.polyfit(np.log(ms), np.log(means), 1)[0])
        check(
            "compensation residual ~ T/sqrt(M)",
            -0.65 <= slope <= -0.35,
            f"log-log slope={slope:.3f}",
        )


class TestFockAcceptance:
    def test_car_identities(self):
        worst = 0.0
        for J in range(1, 6):
            ops = [fock.annihilation_matrix(J, lvl) for lvl in range(1, J + 1)]
            eye = np.eye(2**J)
            for j in range(J):
                for k in range(J):
                    anti = ops[j] @ ops[k].T + ops[k].T @ ops[j]
                    expect = eye if j == k else 0 * eye
                    worst = max(worst, float(np.abs(anti - expect).max()))
                    worst = max(worst, float(np.abs(ops[j] @ ops[k] + ops[k] @ ops[j]).max()))
        check("fermionic algebra exact (J<=5)", worst == 0.0, f"max deviation={worst}")

    def test_intertwining(self):
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(10):
            d = rng.standard_normal() + 1j * rng.standard_normal()
            H = np.array(
                [[rng.standard_normal(), d], [np.conj(d), rng.standard_normal()]]
            )
            worst = max(worst, fock.intertwine_check(H))
        check("pair-map intertwining", worst < 1e-10, f"max deviation={worst:.2e}")


class TestQecAcceptance:
    def test_thousand_single_errors(self):
        rng = np.random.default_rng(0)
        worst = 1.0
        for _ in range(1000):
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            v = v / np.linalg.norm(v)
            state = qec.encode(v[0], v[1])
            qubit = int(rng.integers(1, 4))
            _, state = qec.inject_measurement_error(state, qubit, rng)
            _, state = qec.correction_cycle(state, rng)
            worst = min(worst, qec.logical_fidelity(state, v[0], v[1]))
        check(
            "single-error recovery over 1000 trials",
            worst > 1 - 1e-12,
            f"min fidelity deficit={1 - worst:.2e}",
        )

    def test_gram_preservation(self):
        dev = qec.recovery_gram_deviation()
        check("recovery angle preservation", dev < 1e-12, f"gram deviation={dev:.2e}")

    def test_hundred_cycles(self):
        rng = np.random.default_rng(4)
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        v = v / np.linalg.norm(v)
        state, records = qec.run_cycles(v[0], v[1], 100, 0.3, rng)
        fid = qec.logical_fidelity(state, v[0], v[1])
        check("100 correction cycles", fid > 1 - 1e-9, f"fidelity deficit={1 - fid:.2e}")


class TestGridAcceptance:
    def test_instability_boundary(self):
        m = 41
        x = np.linspace(0, 1, m)
        u0 = grid.GridField(np.sin((m - 2) * np.pi * x), x[1] - x[0])
        limit = u0.dx**2 / 2
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            grid.heat_explicit(u0, 1.0, 0.999 * limit, (0.0, 0.0), 200)  # no warning
        with pytest.warns(grid.StabilityWarning):
            out = grid.heat_explicit(u0, 1.0, 1.01 * limit, (0.0, 0.0), 500)
        grew = np.abs(out.values).max() > 10
        check(
            "explicit instability detected exactly at dt > dx^2/(2a)",
            grew,
            f"amplitude after 500 unstable steps={np.abs(out.values).max():.1f}",
        )

    def test_trotter_ratio(self):
        n, L = 64, 12.0
        x = np.linspace(-L / 2, L / 2, n, endpoint=False)
        psi = np.exp(-(x**2) / 4).astype(complex)
        psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * (x[1] - x[0]))
        f0 = grid.GridField(psi, x[1] - x[0], x[0])
        V = 0.5 * x**2 + 0.3 * x
        T = 0.5
        errs = []
        for dt in (0.02, 0.01):
            params = grid.SplitStepParams(mass=1.0, dt=dt, potential=V)
            approx = grid.split_step(f0, params, int(round(T / dt)))
            exact = grid.dense_propagator(f0, params, T) @ f0.values
            errs.append(np.linalg.norm(approx.values - exact))
        ratio = errs[0] / errs[1]
        check("trotter halving ratio", 3.2 <= ratio <= 4.8, f"ratio={ratio:.2f}")

    def test_harmonic_autocorrelation(self):
        n, L = 256, 20.0
        x = np.linspace(-L / 2, L / 2, n, endpoint=False)
        psi = np.exp(-(x**2) / 2).astype(complex)
        psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * (x[1] - x[0]))
        f0 = grid.GridField(psi, x[1] - x[0], x[0])
        params = grid.SplitStepParams(mass=1.0, dt=0.001, potential=0.5 * x**2)
        out = grid.split_step(f0, params, 1000)
        corr = abs(np.vdot(f0.values, out.values) * f0.dx)
        check(
            "ground-state autocorrelation over 1000 steps",
            corr >= 1 - 1e-6,
            f"deficit={1 - corr:.2e}",
        )

    def test_kernel_modulus(self):
        xs = np.array([0.0, 0.3, -2.0, 11.0])
        worst = 0.0
        for t in (0.2, 1.0, 3.7):
            for m in (0.5, 1.0, 2.5):
                k2 = np.abs(grid.free_kernel(xs, t, m)) ** 2
                worst = max(worst, float(np.abs(k2 - m / (2 * np.pi * t)).max()))
        check("free kernel modulus", worst < 1e-15, f"max deviation={worst:.2e}")


class TestDmcAcceptance:
    def test_harmonic_width_1e5(self):
        t0 = time.perf_counter()
        x, _, _ = swarm.dmc_run(
            lambda q: 0.5 * q**2, n_samples=100_000, steps=1200, rng_seed=0
        )
        elapsed = time.perf_counter() - t0
        width = float(np.std(x))
        check(
            "dmc harmonic width at 1e5 samples",
            abs(width - 1.0) < 0.05 and elapsed < 30.0,
            f"width={width:.4f} (target 1.0) runtime={elapsed:.1f}s",
        )


def _harmonic_swarm(n, seed, c=4.0, dx=0.25):
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(0.5)
    return swarm.Swarm(
        ids=np.arange(n), positions=rng.normal(0, sigma, n),
        codes=np.zeros(n, dtype=np.int8), mass=1.0, delta_x=dx, speed=c,
        nu=swarm.nu_for_width(1.0, c, sigma),
    )


def _free_spread_l1(n, seed, T=0.25, dx=0.25, dt=0.005, c=4.0):
    ng, L = 512, 40.0
    x = np.linspace(-L / 2, L / 2, ng, endpoint=False)
    vals = np.exp(-(x**2) / 4).astype(complex)
    vals /= np.sqrt(np.sum(np.abs(vals) ** 2) * (x[1] - x[0]))
    psi = grid.GridField(vals, x[1] - x[0], x[0])
    params = grid.SplitStepParams(mass=1.0, dt=0.002, potential=np.zeros(ng))
    ref = grid.split_step(psi, params, int(T / 0.002))
    rho_ref = np.abs(ref.values) ** 2
    sw = swarm.swarm_from_wavefunction(psi, n, delta_x=dx, speed=c, rng_seed=seed)
    rng = np.random.default_rng(seed + 999)
    out = sw
    for _ in range(int(round(T / dt))):
        out = swarm.dds_step(out, lambda p: np.zeros_like(p), dt, rng)
    bw = 0.25
    edges = np.arange(-L / 2, L / 2 + 1e-9, bw)
    h, _ = np.histogram(out.positions[:, 0], bins=edges, density=True)
    centers = 0.5 * (edges[1:] + edges[:-1])
    r = np.interp(centers, x, rho_ref)
    r /= np.sum(r) * bw
    return float(np.sum(np.abs(h - r)) * bw)


class TestDdsAcceptance:
    def test_harmonic_stationarity_1e5(self):
        sw = _harmonic_swarm(100_000, 0)
        edges = np.arange(-3.0, 3.01, 0.25)
        h0, _ = np.histogram(sw.positions[:, 0], bins=edges, density=True)
        rng = np.random.default_rng(1)
        out = sw
        for _ in range(200):
            out = swarm.dds_step(out, lambda p: p, 0.01, rng)
        h1, _ = np.histogram(out.positions[:, 0], bins=edges, density=True)
        drift = float(np.sum(np.abs(h1 - h0)) * 0.25)
        check("dds harmonic stationary L1 drift", drift < 0.1, f"L1 drift={drift:.4f}")

    def test_exchange_momentum_exact(self):
        worst = 0.0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            a = swarm.Sample(0, np.array([0.0]), np.array([0.0]))
            b = swarm.Sample(1, np.array([0.1]), np.array([0.0]))
            a2, b2 = swarm.exchange(a, b, 0.5, 3.0, rng)
            worst = max(worst, float(np.abs(a2.velocity + b2.velocity).max()))
            a3, b3 = swarm.exchange(a2, b2, 0.5, 3.0, rng)
            worst = max(worst, float(np.abs(a3.velocity + b3.velocity).max()))
        check("exchange conserves momentum exactly", worst == 0.0, f"max drift={worst}")

    def test_free_l1_monotone_three_decades(self):
        means = []
        for n in (10_000, 100_000, 1_000_000):
            vals = [_free_spread_l1(n, seed) for seed in (1, 2, 3)]
            means.append(float(np.mean(vals)))
        check(
            "free-particle L1 vs split-step monotone in n",
            means[0] > means[1] > means[2],
            f"L1 means={['%.4f' % m for m in means]}",
        )

    def test_eq_swar_residual_1e6(self):
        resids = []
        for seed in (0, 1):
            rng = np.random.default_rng(seed)
            c, nu, omega, dx, dt, K = 4.0, 0.15, 1.0, 0.2, 0.004, 20
            sigma_stat = c * np.sqrt(nu) / omega
            sw = swarm.Swarm(
                ids=np.arange(1_000_000),
                positions=rng.normal(0.0, 1.4 * sigma_stat, 1_000_000),
                codes=np.zeros(1_000_000, dtype=np.int8),
                mass=1.0, delta_x=dx, speed=c, nu=nu,
            )
            grad = lambda p: omega**2 * p
            edges = np.arange(-8.0, 8.0 + 1e-9, dx)
            centers = 0.5 * (edges[1:] + edges[:-1])

            def hist(s):
                h, _ = np.histogram(s.positions[:, 0], bins=edges)
                return h / dx

            out = sw
            for _ in range(4):
                out = swarm.dds_step(out, grad, dt, rng)
            snaps = [hist(out)]
            for _ in range(2):
                for _ in range(K):
                    out = swarm.dds_step(out, grad, dt, rng)
                snaps.append(hist(out))
            DT = K * dt
            rho_m, rho_0, rho_p = snaps
            d2rho = (rho_p - 2 * rho_0 + rho_m) / DT**2
            I_eff, kappa_eff = swarm.effective_intensities(out)
            m = out.sample_mass
            flux = I_eff * np.gradient(rho_0, dx) + kappa_eff * rho_0 * (omega**2 * centers)
            rhs = np.gradient(flux, dx) / m
            w = np.ones(9) / 9
            d2s = np.convolve(d2rho, w, mode="same")
            rhss = np.convolve(rhs, w, mode="same")
            resids.append(float(np.linalg.norm(d2s - rhss) / np.linalg.norm(rhss)))
        resid = float(np.mean(resids))
        check(
            "density second derivative vs diffusion flux law",
            resid < 0.3,
            f"relative L2 residual={resid:.3f} (1e6 samples)",
        )


class TestBridgeAcceptance:
    def test_round_trip_1e5(self):
        ng, L = 256, 16.0
        x = np.linspace(-L / 2, L / 2, ng, endpoint=False)
        vals = np.exp(-(x**2) / 2 + 0.7j * x)
        vals /= np.sqrt(np.sum(np.abs(vals) ** 2) * (x[1] - x[0]))
        psi = grid.GridField(vals, x[1] - x[0], x[0])
        sw = swarm.swarm_from_wavefunction(psi, 100_000, delta_x=0.25, speed=4.0, rng_seed=0)
        edges = np.arange(-L / 2, L / 2 + 1e-9, 0.25)
        recon = swarm.wavefunction_from_swarm(sw, edges)
        centers = 0.5 * (edges[1:] + edges[:-1])
        target = np.interp(centers, x, vals.real) + 1j * np.interp(centers, x, vals.imag)
        target /= np.sqrt(np.sum(np.abs(target) ** 2) * 0.25)
        recon /= np.sqrt(np.sum(np.abs(recon) ** 2) * 0.25)
        k = int(np.argmax(np.abs(target)))
        recon *= (target[k] / recon[k]) / abs(target[k] / recon[k])
        err = float(np.sqrt(np.sum(np.abs(recon - target) ** 2) * 0.25))
        check("bridge round trip at 1e5 samples", err < 0.15, f"L2 error={err:.4f}")

    def test_closed_contour_time_stable(self):
        rng = np.random.default_rng(0)
        n = 200_000
        pos = rng.uniform(0, 8, (n, 2))
        v, c, nu = 0.5, 4.0, 0.05
        fm = max(nu / 2 - v / (2 * c), 0.0)
        fp = v / c + fm
        u = rng.random(n)
        codes = np.zeros(n, dtype=np.int8)
        codes[u < fp] = 1
        codes[(u >= fp) & (u < fp + fm)] = 2
        sw = swarm.Swarm(
            ids=np.arange(n), positions=pos, codes=codes, mass=1.0,
            delta_x=0.5, speed=c, nu=nu,
        )
        ex = np.arange(2.0, 6.01, 0.5)
        i0 = swarm.closed_contour_integral(sw, ex, ex)
        out = sw
        for _ in range(20):
            out = swarm.dds_step(out, lambda p: np.zeros_like(p), 0.01, rng)
        i1 = swarm.closed_contour_integral(out, ex, ex)
        tol = 0.6  # ~6 sigma of the per-cell mean-velocity shot noise
        check(
            "closed-contour phase integral time-stable",
            abs(i0) < tol and abs(i1) < tol and abs(i1 - i0) < tol,
            f"integral {i0:.3f} -> {i1:.3f} (tolerance {tol})",
        )


class TestSelectionAcceptance:
    def test_association_20_seeds(self):
        cfg = selection.SelectionConfig(cell_size=0.4, min_group_size=4)
        good = 0
        for seed in range(20):
            res = selection.association_experiment(2.0, cfg, rng_seed=seed)
            centers = 0.5 * (res.edges[1:] + res.edges[:-1])
            mode = float(centers[np.argmax(res.histograms[-1])])
            grew = res.canonical_fraction[-1] >= 3 * max(res.canonical_fraction[0], 1e-9)
            good += grew and abs(mode - 2.0) <= 0.2
        check("association toy over 20 seeds", good >= 18, f"good seeds={good}/20")

    def test_no_attraction_control(self):
        cfg = selection.SelectionConfig(cell_size=0.4, min_group_size=4)
        res = selection.association_experiment(2.0, cfg, rng_seed=3, attractive=False)
        centers = 0.5 * (res.edges[1:] + res.edges[:-1])
        mode = float(centers[np.argmax(res.histograms[-1])])
        peaked = abs(mode - 2.0) <= 0.2 and res.canonical_fraction[-1] > 0.5
        check("no-attraction control shows no peak", not peaked,
              f"mode={mode:.2f} fraction={res.canonical_fraction[-1]:.3f}")


class TestBornGrainAcceptance:
    def test_branch_splitting_reproduces_born(self):
        state = statevec.from_amplitudes([np.sqrt(0.3), np.sqrt(0.7)])
        counts, l = statevec.branch_split_counts(state, 1e-3, 10_000, rng_seed=0)
        probs = l / l.sum()
        stat, ok = statevec.pearson_check(counts, probs, alpha=0.01)
        check(
            "branch-splitting reduction matches Born frequencies",
            ok,
            f"chi2={stat:.3f} counts={counts.tolist()}",
        )
