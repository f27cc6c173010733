"""Genetic quantum-state selection over cortege scenarios: grouping in the
doubled configuration space, rejection of minority groups, crossover
replication, and the two-body association toy experiment."""
from dataclasses import dataclass

import numpy as np

from .rng import ensure_rng


class SelectionCollapseError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioPair:
    """Initial and final cortege positions in the doubled configuration
    space, tagged with a stable cortege id."""
    cortege_id: int
    initial: np.ndarray
    final: np.ndarray

    def __post_init__(self):
        ini = np.asarray(self.initial, dtype=np.float64)
        fin = np.asarray(self.final, dtype=np.float64)
        if ini.shape != fin.shape:
            raise ValueError("initial and final points need the same dimension")
        object.__setattr__(self, "initial", ini)
        object.__setattr__(self, "final", fin)

    def doubled_point(self):
        return np.concatenate([self.initial, self.final])


@dataclass(frozen=True)
class SelectionConfig:
    cell_size: float
    kept_groups: int = None      # None: keep groups covering >= mass_floor
    min_group_size: int = 4
    mass_floor: float = 0.8
    iteration_cap: int = 50
    stabilize_window: int = 3
    stabilize_tol: float = 0.01

    def __post_init__(self):
        if self.kept_groups is not None and self.kept_groups < 1:
            raise ValueError("kept_groups must be >= 1")
        if self.min_group_size < 2:
            raise ValueError("min_group_size must be >= 2")


def group(pairs, config):
    """Group scenario pairs sharing a cube of the doubled configuration
    space; groups come back sorted by size, largest first."""
    buckets = {}
    for pair in pairs:
        cube = tuple(np.floor(pair.doubled_point() / config.cell_size).astype(np.int64))
        buckets.setdefault(cube, []).append(pair)
    groups = sorted(buckets.values(), key=len, reverse=True)
    return groups


def reject_and_replicate(groups, config, rng_seed):
    """Keep the dominant groups; refill to the original count by crossover
    between uniformly chosen surviving corteges (component exchange).

    Children reuse their parents' components, so every component of the new
    population traces back to a survivor."""
    rng = ensure_rng(rng_seed)
    total = sum(len(g) for g in groups)
    eligible = [g for g in groups if len(g) >= config.min_group_size]
    if not eligible:
        raise SelectionCollapseError("no group reaches the minimum size")
    if config.kept_groups is not None:
        kept = eligible[: config.kept_groups]
    else:
        kept = []
        mass = 0
        for g in eligible:
            kept.append(g)
            mass += len(g)
            if mass >= config.mass_floor * total:
                break
    survivors = [p for g in kept for p in g]
    out = list(survivors)
    next_id = max(p.cortege_id for p in survivors) + 1
    while len(out) < total - 1:
        a, b = rng.choice(len(survivors), size=2, replace=True)
        pa, pb = survivors[a], survivors[b]
        dim = len(pa.initial)
        mask = rng.integers(0, 2, size=dim).astype(bool)
        if not mask.any():
            mask[rng.integers(0, dim)] = True
        child1 = ScenarioPair(
            next_id,
            np.where(mask, pa.initial, pb.initial),
            np.where(mask, pa.final, pb.final),
        )
        child2 = ScenarioPair(
            next_id + 1,
            np.where(mask, pb.initial, pa.initial),
            np.where(mask, pb.final, pa.final),
        )
        out.extend([child1, child2])
        next_id += 2
    return out[:total] if len(out) > total else out


def run_selection(dynamics_step, initial_pairs, config, iterations=None, rng_seed=0):
    """Iterate (evolve, group, reject/replicate) until the kept-group sizes
    stabilize (relative change below tol across the window) or the cap hits.

    dynamics_step(pairs, rng) -> evolved pairs (fresh final positions).
    Returns the history of populations, one list of pairs per iteration."""
    rng = ensure_rng(rng_seed)
    cap = iterations if iterations is not None else config.iteration_cap
    pairs = list(initial_pairs)
    history = [pairs]
    kept_sizes = []
    for _ in range(cap):
        pairs = dynamics_step(pairs, rng)
        groups = group(pairs, config)
        pairs = reject_and_replicate(groups, config, rng)
        history.append(pairs)
        kept_sizes.append(len(groups[0]))
        if len(kept_sizes) > config.stabilize_window:
            window = kept_sizes[-config.stabilize_window - 1:]
            base = max(window[0], 1)
            if max(abs(w - window[0]) for w in window) / base < config.stabilize_tol:
                break
    return history


# ---------------------------------------------------------------------------
# two-body association toy
# ---------------------------------------------------------------------------

@dataclass
class AssociationResult:
    histograms: list          # per-iteration separation histograms
    edges: np.ndarray
    canonical_fraction: list  # fraction with | |r| - r0 | < tolerance
    final_separations: np.ndarray


def _morse_like_grad(r, r0, depth):
    """d/dr of a well with minimum at r0 (harmonic near r0, flat far away)."""
    return 2 * depth * (r - r0) * np.exp(-((r - r0) / r0) ** 2)


def association_experiment(
    r0,
    config,
    rng_seed,
    n_corteges=400,
    iterations=12,
    depth=4.0,
    damping=0.12,
    dt=0.05,
    substeps=25,
    jitter=0.08,
    attractive=True,
    tolerance=None,
    initial_separations=None,
):
    """Two 1D particles per cortege, random initial separations (uniform in
    [0.2 r0, 5 r0] unless given); dynamics is relative-coordinate integration
    in the effective well, a per-iteration velocity damping standing in for
    radiated energy, and a small velocity jitter; selection keeps scenario
    groups that stay coherent.

    Returns an AssociationResult with per-iteration separation histograms and
    the canonical fraction."""
    rng = ensure_rng(rng_seed)
    if tolerance is None:
        tolerance = 0.1 * r0
    if initial_separations is None:
        sep = rng.uniform(0.2 * r0, 5.0 * r0, size=n_corteges)
    else:
        sep = np.asarray(initial_separations, dtype=np.float64).copy()
        n_corteges = len(sep)
    vel = np.zeros(n_corteges)
    edges = np.linspace(0.0, 6.0 * r0, 61)

    state = {"sep": sep, "vel": vel}
    histograms = []
    fractions = []

    def record():
        h, _ = np.histogram(state["sep"], bins=edges)
        histograms.append(h)
        fractions.append(float(np.mean(np.abs(state["sep"] - r0) < tolerance)))

    record()
    mu = 0.5  # reduced mass of the pair
    for _ in range(iterations):
        s, v = state["sep"], state["vel"]
        n_now = len(s)
        ini = s.copy()
        for _ in range(substeps):
            force = -_morse_like_grad(s, r0, depth) if attractive else np.zeros_like(s)
            v = v + force / mu * dt
            s = np.abs(s + v * dt)
        v = (1 - damping) * v + jitter * rng.standard_normal(n_now)
        pairs = [
            ScenarioPair(i, np.array([ini[i]]), np.array([s[i]]))
            for i in range(n_now)
        ]
        groups = group(pairs, config)
        pairs = reject_and_replicate(groups, config, rng)
        # survivors keep their velocity; recombined scenarios restart at rest
        new_sep = np.array([p.final[0] for p in pairs])
        new_vel = np.zeros(len(pairs))
        for i, p in enumerate(pairs):
            if p.cortege_id < n_now:
                new_vel[i] = v[p.cortege_id]
        state = {"sep": new_sep, "vel": new_vel}
        record()
    return AssociationResult(histograms, edges, fractions, state["sep"])
