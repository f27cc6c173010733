"""Collective-behavior machinery: the dynamical diffusion swarm, stationary
diffusion (ground-state Monte Carlo), the swarm <-> wavefunction bridge, and
many-particle cortege ensembles.

A swarm is a set of point samples with quantized velocities (rest, or speed
c along one axis).  Momentum exchanges between samples in the same cell
carry the density dynamics; potential kicks add momentum in +-c quanta with
the exact expected value; free flight moves samples.  Samples keep their ids
through every step.

Dynamics calibration: the per-cell standing population of balanced movers is
nu * count with nu = hbar^2 / (4 M^2 c^2 sigma_ref^2); kicks give each
sample the real particle's acceleration -grad V / M.  With that choice the
stationary density of a harmonic well is exactly the squared ground state
of width sigma_ref.  The grain-scaled intensity formulas are exposed as
diagnostics on the Swarm.
"""
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _swarm_kernels
from .rng import ensure_rng, step_key

HBAR = 1.0

# velocity code -> direction row; index 0 is rest
def _directions(dim):
    dirs = np.zeros((2 * dim + 1, dim))
    for a in range(dim):
        dirs[1 + 2 * a, a] = 1.0
        dirs[2 + 2 * a, a] = -1.0
    return dirs


class InvalidExchangeError(ValueError):
    pass


class RunFailedError(RuntimeError):
    pass


class UndefinedPhaseError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    id: int
    position: np.ndarray
    velocity: np.ndarray  # zero vector or +-c along one axis

    def is_resting(self, tol=0.0):
        return not np.any(np.abs(self.velocity) > tol)


@dataclass
class Swarm:
    ids: np.ndarray          # (n,) stable history tags
    positions: np.ndarray    # (n, dim)
    codes: np.ndarray        # (n,) int8 velocity codes
    mass: float              # real-particle mass M; samples carry M/n
    delta_x: float           # grain
    speed: float             # limit speed c
    stationary_fraction: float = 0.5   # balanced-pair refresh parameter d
    nu: float = 0.05         # target moving fraction per cell
    origin: float = 0.0

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=np.float64)
        if positions.ndim == 1:
            positions = positions[:, None]
        self.positions = positions
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.codes = np.asarray(self.codes, dtype=np.int8)
        if len(self.ids) < 1:
            raise ValueError("a swarm needs at least one sample")

    @property
    def size(self):
        return len(self.ids)

    @property
    def dim(self):
        return self.positions.shape[1]

    @property
    def sample_mass(self):
        return self.mass / self.size

    @property
    def diffusion_intensity(self):
        """Grain-scaled intensity hbar^2 / (2 m^2 dx^3), m the sample mass."""
        return HBAR**2 / (2 * self.sample_mass**2 * self.delta_x**3)

    @property
    def kick_intensity(self):
        """Grain-scaled coefficient hbar / (m dx)."""
        return HBAR / (self.sample_mass * self.delta_x)

    def velocities(self):
        return self.speed * _directions(self.dim)[self.codes]

    def total_momentum(self):
        return self.sample_mass * self.velocities().sum(axis=0)

    def moving_fraction(self):
        return float(np.mean(self.codes != 0))

    def cell_indices(self):
        return np.floor((self.positions - self.origin) / self.delta_x).astype(np.int64)

    def copy(self):
        return replace(
            self, ids=self.ids.copy(), positions=self.positions.copy(),
            codes=self.codes.copy(),
        )

    def to_text(self):
        dirs = _directions(self.dim)
        lines = []
        for i in range(self.size):
            pos = " ".join(repr(float(v)) for v in self.positions[i])
            vel = " ".join(repr(float(v * self.speed)) for v in dirs[self.codes[i]])
            lines.append(f"{int(self.ids[i])} {pos} {vel}")
        return "\n".join(lines) + "\n"


def exchange(a, b, delta_x, speed, rng_seed):
    """Exchange reaction between two samples: an opposite-moving pair stops;
    a resting pair picks up opposite +-c speeds along a random axis.
    Total momentum is conserved exactly."""
    rng = ensure_rng(rng_seed)
    if np.linalg.norm(a.position - b.position) > delta_x:
        raise InvalidExchangeError("samples are farther apart than the grain")
    va, vb = a.velocity, b.velocity
    dim = len(a.position)
    if not np.any(va) and not np.any(vb):
        axis = int(rng.integers(0, dim))
        v = np.zeros(dim)
        v[axis] = speed
        return (
            Sample(a.id, a.position, v.copy()),
            Sample(b.id, b.position, -v),
        )
    if np.allclose(va, -vb) and np.any(va):
        zero = np.zeros(dim)
        return Sample(a.id, a.position, zero.copy()), Sample(b.id, b.position, zero.copy())
    raise InvalidExchangeError("velocities must be opposite or both zero")


def nu_for_width(mass, speed, sigma):
    """Moving fraction reproducing quantum pressure at density scale sigma."""
    return HBAR**2 / (4 * mass**2 * speed**2 * sigma**2)


def _sorted_segments(swarm):
    cells = swarm.cell_indices()
    if swarm.dim == 1:
        flat = cells[:, 0]
    else:
        flat = cells[:, 0] * np.int64(1 << 21) + cells[:, 1]
    flat = flat - flat.min()
    return flat


def dds_step(swarm, potential_grad, dt, rng_seed):
    """One dynamical-diffusion step: per-cell pair refresh and creation,
    momentum kicks with exact expectation, free flight.

    potential_grad(positions) -> (n, dim) gradient of the external potential.
    Returns a new Swarm; ids persist."""
    rng = ensure_rng(rng_seed)
    if swarm.speed * dt > 0.5 * swarm.delta_x:
        warnings.warn("c dt should be well below the grain", stacklevel=2)
    key = step_key(rng)
    shuffle_keys = rng.integers(0, 1 << 20, size=swarm.size)

    flat = _sorted_segments(swarm)
    order = np.argsort((flat << 20) | shuffle_keys, kind="stable")
    flat_sorted = flat[order]
    codes_sorted = swarm.codes[order]
    boundaries = np.flatnonzero(np.diff(flat_sorted)) + 1
    seg_starts = np.concatenate(([0], boundaries, [swarm.size])).astype(np.int64)
    seg_cells = flat_sorted[seg_starts[:-1]].astype(np.uint64)

    grad = np.atleast_2d(np.asarray(potential_grad(swarm.positions), dtype=np.float64))
    if grad.shape != swarm.positions.shape:
        grad = grad.reshape(swarm.positions.shape)
    dvc = -grad * dt / (swarm.mass * swarm.speed)  # per-sample expected dv / c
    dvc_sorted = dvc[order]
    cell_dv = np.add.reduceat(dvc_sorted, seg_starts[:-1], axis=0)

    new_codes_sorted = _swarm_kernels.exchange_and_kick(
        codes_sorted, seg_starts, seg_cells, cell_dv,
        swarm.nu, swarm.stationary_fraction, swarm.dim, key,
    )
    codes = np.empty_like(swarm.codes)
    codes[order] = new_codes_sorted

    positions = swarm.positions + swarm.speed * dt * _directions(swarm.dim)[codes]
    out = replace(swarm, positions=positions, codes=codes)
    if out.moving_fraction() > 0.2:
        warnings.warn("moving fraction above 0.2: non-relativistic regime violated",
                      stacklevel=2)
    return out


def density(swarm, edges):
    """Per-cell sample density N(cell) / dx^dim over the given bin edges
    (1D array of edges, or a tuple of per-axis edges in 2D)."""
    if swarm.dim == 1:
        counts, _ = np.histogram(swarm.positions[:, 0], bins=edges)
        return counts / swarm.delta_x
    counts, _, _ = np.histogram2d(
        swarm.positions[:, 0], swarm.positions[:, 1], bins=edges
    )
    return counts / swarm.delta_x**2


def momentum_field(swarm, edges):
    """Per-cell summed sample momentum / dx^dim."""
    v = swarm.velocities()
    m = swarm.sample_mass
    if swarm.dim == 1:
        total, _ = np.histogram(swarm.positions[:, 0], bins=edges, weights=v[:, 0])
        return (m * total / swarm.delta_x)[:, None]
    out = []
    for a in range(2):
        total, _, _ = np.histogram2d(
            swarm.positions[:, 0], swarm.positions[:, 1], bins=edges, weights=v[:, a]
        )
        out.append(m * total / swarm.delta_x**2)
    return np.stack(out, axis=-1)


def effective_intensities(swarm):
    """The coefficients the implementation realizes in
    d2 rho/dt2 = div(I_eff grad rho + kappa_eff rho grad V):
    I_eff = m c^2 nu (momentum flux per density gradient), kappa_eff = m/M."""
    m = swarm.sample_mass
    return m * swarm.speed**2 * swarm.nu, m / swarm.mass


# ---------------------------------------------------------------------------
# wavefunction bridge
# ---------------------------------------------------------------------------

# Eq.-connection constants, calibrated once so that the uniform-velocity
# round trip is the identity (see scripts/calibrate_bridge.py):
# phase(x) = PHASE_K(M, dx) * dx^2 * integral(v dx), v = VEL_A(M, dx) * dx^-2 * dphase/dx.
def bridge_phase_constant(mass, delta_x):
    return mass / (HBAR * delta_x**2)


def bridge_velocity_constant(mass, delta_x):
    return HBAR * delta_x**2 / mass


def swarm_from_wavefunction(psi, n_samples, delta_x, speed, rng_seed,
                            mass=1.0, nu=None, stationary_fraction=0.5):
    """Sample positions from |psi|^2 and set per-cell mover fractions so the
    mean velocity matches the phase gradient."""
    rng = ensure_rng(rng_seed)
    values = np.asarray(psi.values)
    prob = np.abs(values) ** 2
    prob = prob / prob.sum()
    nodes = psi.nodes()
    idx = rng.choice(len(prob), size=n_samples, p=prob)
    positions = nodes[idx] + rng.uniform(0, psi.dx, size=n_samples)

    phase = np.unwrap(np.angle(values))
    dphase = np.gradient(phase, psi.dx)
    v_target = bridge_velocity_constant(mass, delta_x) * dphase / delta_x**2
    # = hbar/M dphase/dx
    if nu is None:
        sigma = np.sqrt(np.sum(prob * nodes**2) - np.sum(prob * nodes) ** 2)
        nu = nu_for_width(mass, speed, max(sigma, delta_x))
    vt = v_target[idx] / speed
    f_plus = np.clip(nu / 2 + vt / 2, 0.0, 1.0)
    f_minus = np.clip(nu / 2 - vt / 2, 0.0, 1.0)
    shortfall = np.abs(vt) - (f_plus - f_minus) * np.sign(vt)
    f_plus = np.where((vt > 0) & (shortfall > 0), np.clip(vt + f_minus, 0, 1), f_plus)
    f_minus = np.where((vt < 0) & (shortfall > 0), np.clip(-vt + f_plus, 0, 1), f_minus)
    u = rng.random(n_samples)
    codes = np.zeros(n_samples, dtype=np.int8)
    codes[u < f_plus] = 1
    codes[(u >= f_plus) & (u < f_plus + f_minus)] = 2
    return Swarm(
        ids=np.arange(n_samples),
        positions=positions[:, None],
        codes=codes,
        mass=mass,
        delta_x=delta_x,
        speed=speed,
        stationary_fraction=stationary_fraction,
        nu=float(nu),
    )


def wavefunction_from_swarm(swarm, edges, reference_cell=None):
    """Modulus from the cell histogram, phase from the line-integrated mean
    velocity along the canonical contour (straight line from the reference
    cell; in 2D: along x first, then y).

    Returns a complex array over the cells; empty cells along the contour
    raise UndefinedPhaseError."""
    if swarm.dim != 1:
        raise NotImplementedError("bridge restoration is 1D at desk scale")
    counts, _ = np.histogram(swarm.positions[:, 0], bins=edges)
    widths = np.diff(edges)
    rho = counts / (widths * swarm.size)
    v = swarm.velocities()[:, 0]
    vsum, _ = np.histogram(swarm.positions[:, 0], bins=edges, weights=v)
    if reference_cell is None:
        reference_cell = int(np.argmax(counts))
    if counts[reference_cell] == 0:
        raise UndefinedPhaseError("empty reference cell")
    vbar = np.zeros(len(counts))
    occupied = counts > 0
    vbar[occupied] = vsum[occupied] / counts[occupied]
    lo, hi = np.flatnonzero(occupied)[0], np.flatnonzero(occupied)[-1]
    if not occupied[lo:hi + 1].all():
        raise UndefinedPhaseError("zero-density cell on the integration contour")
    k = bridge_phase_constant(swarm.mass, swarm.delta_x) * swarm.delta_x**2
    phase = np.zeros(len(counts))
    phase[lo:hi + 1] = np.concatenate(([0.0], np.cumsum(
        0.5 * (vbar[lo:hi] + vbar[lo + 1:hi + 1]) * widths[lo:hi] * k
    )))
    phase -= phase[reference_cell]
    return np.sqrt(rho) * np.exp(1j * phase)


def closed_contour_integral(swarm, edges_x, edges_y):
    """Mean-velocity line integral around the rectangle of cells bounded by
    the given 2D edge arrays (the bridge's single-valuedness check)."""
    if swarm.dim != 2:
        raise ValueError("closed contours need a 2D swarm")
    v = swarm.velocities()
    pos = swarm.positions

    def mean_v(mask, axis):
        if not mask.any():
            raise UndefinedPhaseError("empty cell on the closed contour")
        return v[mask, axis].mean()

    x0, x1 = edges_x[0], edges_x[-1]
    y0, y1 = edges_y[0], edges_y[-1]
    total = 0.0
    # bottom: left -> right along x
    for i in range(len(edges_x) - 1):
        m = ((pos[:, 0] >= edges_x[i]) & (pos[:, 0] < edges_x[i + 1])
             & (pos[:, 1] >= y0) & (pos[:, 1] < y0 + swarm.delta_x))
        total += mean_v(m, 0) * (edges_x[i + 1] - edges_x[i])
    # right: bottom -> top along y
    for i in range(len(edges_y) - 1):
        m = ((pos[:, 1] >= edges_y[i]) & (pos[:, 1] < edges_y[i + 1])
             & (pos[:, 0] >= x1 - swarm.delta_x) & (pos[:, 0] < x1))
        total += mean_v(m, 1) * (edges_y[i + 1] - edges_y[i])
    # top: right -> left
    for i in range(len(edges_x) - 1, 0, -1):
        m = ((pos[:, 0] >= edges_x[i - 1]) & (pos[:, 0] < edges_x[i])
             & (pos[:, 1] >= y1 - swarm.delta_x) & (pos[:, 1] < y1))
        total -= mean_v(m, 0) * (edges_x[i] - edges_x[i - 1])
    # left: top -> bottom
    for i in range(len(edges_y) - 1, 0, -1):
        m = ((pos[:, 1] >= edges_y[i - 1]) & (pos[:, 1] < edges_y[i])
             & (pos[:, 0] >= x0) & (pos[:, 0] < x0 + swarm.delta_x))
        total -= mean_v(m, 1) * (edges_y[i] - edges_y[i - 1])
    k = bridge_phase_constant(swarm.mass, swarm.delta_x) * swarm.delta_x**2
    return k * total


# ---------------------------------------------------------------------------
# stationary diffusion (ground-state Monte Carlo)
# ---------------------------------------------------------------------------

def dmc_run(potential, n_samples, steps, rng_seed, delta_x=0.1, dtau=None,
            mass=1.0, record_every=0):
    """Random +-dx shifts plus birth/death at rate -(V - E_ref); the walker
    population is held inside [N/2, 2N] by the reference-energy feedback.

    The stabilized walker density is proportional to the ground-state
    amplitude (not its square).  Returns (positions, E_ref history, snapshots).
    """
    rng = ensure_rng(rng_seed)
    if dtau is None:
        dtau = mass * delta_x**2 / HBAR  # shift probability 1/2 per direction
    p_shift = HBAR * dtau / (2 * mass * delta_x**2)
    if p_shift > 0.5:
        raise ValueError("dtau too large for the grain")
    x = np.zeros(n_samples)
    e_ref = float(np.mean(potential(x))) / HBAR
    history = []
    snapshots = []
    for step in range(steps):
        u = rng.random(len(x))
        x = x + delta_x * ((u < p_shift).astype(float) - (u > 1 - p_shift))
        weight = np.exp(-(potential(x) / HBAR - e_ref) * dtau)
        copies = np.floor(weight + rng.random(len(x))).astype(np.int64)
        x = np.repeat(x, copies)
        if len(x) == 0:
            raise RunFailedError("walker population died out")
        e_ref = e_ref + 0.1 * np.log(n_samples / len(x)) / dtau
        if len(x) > 2 * n_samples:
            x = rng.choice(x, size=n_samples, replace=False)
        elif len(x) < n_samples // 2:
            x = np.concatenate([x, rng.choice(x, size=n_samples - len(x))])
        history.append(e_ref)
        if record_every and step % record_every == 0:
            snapshots.append(x.copy())
    return x, np.array(history), snapshots


# ---------------------------------------------------------------------------
# cortege ensembles
# ---------------------------------------------------------------------------

@dataclass
class CortegeEnsemble:
    """Per-particle swarms bound into corteges: corteges[k, j] is the index
    (into swarm j's arrays) of the j-th member of cortege k; every sample
    appears in exactly one cortege."""
    swarms: list
    corteges: np.ndarray

    def __post_init__(self):
        self.corteges = np.asarray(self.corteges, dtype=np.int64)
        k, n = self.corteges.shape
        if len(self.swarms) != n:
            raise ValueError("one swarm per particle required")
        for j, sw in enumerate(self.swarms):
            col = np.sort(self.corteges[:, j])
            if not np.array_equal(col, np.arange(sw.size)):
                raise ValueError("corteges must partition every swarm")

    @property
    def num_corteges(self):
        return self.corteges.shape[0]

    @property
    def num_particles(self):
        return self.corteges.shape[1]

    def positions(self):
        """(k, n_particles) stacked 1D positions."""
        return np.column_stack(
            [sw.positions[self.corteges[:, j], 0] for j, sw in enumerate(self.swarms)]
        )


def cortege_build(swarms, rng_seed, target_density=None, cell=None):
    """Bind equal-size swarms into corteges.

    Product states: uniform random pairing.  With target_density(points) the
    corteges are drawn so the joint cell counts follow it (sequential
    conditional sampling against per-cell availability)."""
    rng = ensure_rng(rng_seed)
    sizes = {sw.size for sw in swarms}
    if len(sizes) != 1:
        raise ValueError("swarms must have equal sizes")
    n = sizes.pop()
    if target_density is None:
        cols = [rng.permutation(n) for _ in swarms]
        return CortegeEnsemble(swarms, np.column_stack(cols))
    if cell is None:
        cell = swarms[0].delta_x
    # bins of available sample indices per cell, per particle
    pools = []
    for sw in swarms:
        cells = np.floor(sw.positions[:, 0] / cell).astype(np.int64)
        pool = {}
        order = rng.permutation(sw.size)
        for i in order:
            pool.setdefault(cells[i], []).append(i)
        pools.append((cells, pool))
    corteges = np.empty((n, len(swarms)), dtype=np.int64)
    first_cells, first_pool = pools[0]
    row = 0
    for c0, members in first_pool.items():
        for i0 in members:
            chosen = [i0]
            x0 = swarms[0].positions[i0, 0]
            for j in range(1, len(swarms)):
                _, pool = pools[j]
                cells_avail = [c for c, lst in pool.items() if lst]
                pts = np.column_stack(
                    [np.full(len(cells_avail), x0),
                     (np.array(cells_avail) + 0.5) * cell]
                )
                weights = np.maximum(target_density(pts), 0.0)
                weights = weights * np.array([len(pool[c]) for c in cells_avail])
                if weights.sum() <= 0:
                    raise ValueError("target density unsatisfiable with these swarms")
                pick = rng.choice(len(cells_avail), p=weights / weights.sum())
                chosen.append(pool[cells_avail[pick]].pop())
            corteges[row] = chosen
            row += 1
    return CortegeEnsemble(swarms, corteges)


def cortege_dds_step(ensemble, potential_grads, dt, rng_seed):
    """Step the ensemble: per shared joint cell, momentum exchange between
    corteges through one uniformly chosen particle index; per-particle kicks
    and free flight.

    potential_grads(joint_positions) -> (k, n_particles) gradient of
    V(r_1..r_n) with respect to each particle coordinate."""
    rng = ensure_rng(rng_seed)
    n_part = ensemble.num_particles
    if n_part == 1:
        new = dds_step(ensemble.swarms[0], potential_grads, dt, rng)
        return CortegeEnsemble([new], ensemble.corteges)
    joint = ensemble.positions()
    grads = np.asarray(potential_grads(joint), dtype=np.float64)
    cellsize = ensemble.swarms[0].delta_x
    joint_cells = np.floor(joint / cellsize).astype(np.int64)
    keys = [tuple(row) for row in joint_cells]
    groups = {}
    for k_idx, keyt in enumerate(keys):
        groups.setdefault(keyt, []).append(k_idx)
    new_swarms = [sw.copy() for sw in ensemble.swarms]
    for keyt, members in groups.items():
        j = int(rng.integers(0, n_part))
        sw = new_swarms[j]
        sample_idx = ensemble.corteges[members, j]
        codes = sw.codes[sample_idx]
        plus = sample_idx[codes == 1]
        minus = sample_idx[codes == 2]
        npair = min(len(plus), len(minus))
        # refresh balanced pairs, then recreate toward the standing fraction
        kill = int(np.floor(npair * sw.stationary_fraction + rng.random()))
        kill = min(kill, npair)
        sw.codes[plus[:kill]] = 0
        sw.codes[minus[:kill]] = 0
        codes = sw.codes[sample_idx]
        movers = int(np.count_nonzero(codes))
        rest_idx = sample_idx[codes == 0]
        need = int(np.floor(0.5 * (sw.nu * len(members) - movers) + rng.random()))
        need = max(0, min(need, len(rest_idx) // 2))
        if need:
            pick = rng.permutation(rest_idx)[: 2 * need]
            sw.codes[pick[:need]] = 1
            sw.codes[pick[need:]] = 2
    # kicks and flight per particle
    for j, sw in enumerate(new_swarms):
        dvc = np.zeros(sw.size)
        dvc[ensemble.corteges[:, j]] = -grads[:, j] * dt / (sw.mass * sw.speed)
        u = rng.random(sw.size)
        flip = u < np.abs(dvc)
        target = np.where(dvc > 0, 1, 2).astype(np.int8)
        opposite = np.where(dvc > 0, 2, 1).astype(np.int8)
        resting = sw.codes == 0
        sw.codes[flip & resting] = target[flip & resting]
        stopping = flip & ~resting & (sw.codes == opposite)
        sw.codes[stopping] = 0
        sw.positions = sw.positions + sw.speed * dt * _directions(sw.dim)[sw.codes]
    return CortegeEnsemble(new_swarms, ensemble.corteges)
