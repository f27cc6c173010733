#!/usr/bin/env python3
"""Calibrate the swarm <-> wavefunction bridge constants.

The connection formulas carry two symbolic constants: the phase-integration
weight k (phase = k dx^2 * integral of the mean velocity) and the velocity
weight a (v = a dx^-2 * dphase/dx).  Requiring the uniform-velocity round
trip to be the identity for every wavenumber forces

    a dx^-2 = hbar / M        (velocity = hbar/M * phase gradient)
    k dx^2  = M / hbar        (phase = M/hbar * integral of velocity)

This script verifies both by a least-squares fit over plane waves and prints
the fitted against the hard-coded constants.
"""
import numpy as np

from cqs import grid, swarm


def main():
    mass, dx, c = 1.0, 0.25, 6.0
    L, ng, n = 20.0, 256, 400_000
    x = np.linspace(0, L, ng, endpoint=False)
    fitted = []
    for k0 in (0.4, 0.8, 1.2):
        vals = np.exp(1j * k0 * x) / np.sqrt(L)
        psi = grid.GridField(vals, x[1] - x[0], x[0])
        sw = swarm.swarm_from_wavefunction(psi, n, delta_x=dx, speed=c,
                                           rng_seed=int(k0 * 100), mass=mass)
        v_mean = sw.velocities()[:, 0].mean()
        fitted.append(v_mean / k0)  # should be hbar/M
    a_fit = float(np.mean(fitted))
    a_hard = swarm.bridge_velocity_constant(mass, dx) / dx**2
    print(f"velocity constant a dx^-2: fitted {a_fit:.6f}, stored {a_hard:.6f}")

    slopes = []
    for k0 in (0.4, 0.8, 1.2):
        vals = np.exp(1j * k0 * x) / np.sqrt(L)
        psi = grid.GridField(vals, x[1] - x[0], x[0])
        sw = swarm.swarm_from_wavefunction(psi, n, delta_x=dx, speed=c,
                                           rng_seed=int(k0 * 100) + 7, mass=mass)
        edges = np.arange(0, L + 1e-9, dx)
        recon = swarm.wavefunction_from_swarm(sw, edges)
        centers = 0.5 * (edges[1:] + edges[:-1])
        phase = np.unwrap(np.angle(recon))
        slopes.append(np.polyfit(centers, phase, 1)[0] / k0)
    k_fit = float(np.mean(slopes))  # should be 1: round trip is the identity
    print(f"round-trip slope ratio: fitted {k_fit:.6f}, target 1.0")
    k_hard = swarm.bridge_phase_constant(mass, dx) * dx**2
    print(f"phase constant k dx^2: stored {k_hard:.6f} (= M/hbar)")


if __name__ == "__main__":
    main()
