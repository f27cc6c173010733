"""Classical reference numerics on a uniform 1D lattice: explicit and sweep
finite-difference heat schemes, split-step Schrodinger propagation, the free
propagator kernel, and the classical-regime criterion."""
import warnings
from dataclasses import dataclass

import numpy as np

from ._accel import njit


class DivergenceError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


class SingularTimeError(ValueError):
    pass


class StabilityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GridField:
    values: np.ndarray
    dx: float
    origin: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1 or len(values) < 3:
            raise ValueError("field needs at least 3 nodes")
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        object.__setattr__(self, "values", values)

    @property
    def num_nodes(self):
        return len(self.values)

    def nodes(self):
        return self.origin + self.dx * np.arange(self.num_nodes)

    def to_text(self):
        lines = []
        for x, v in zip(self.nodes(), self.values):
            if np.iscomplexobj(self.values):
                lines.append(f"{float(x)!r} {float(v.real)!r} {float(v.imag)!r}")
            else:
                lines.append(f"{float(x)!r} {float(v)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        xs, vals = [], []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            xs.append(float(parts[0]))
            if len(parts) == 3:
                vals.append(complex(float(parts[1]), float(parts[2])))
            else:
                vals.append(float(parts[1]))
        xs = np.array(xs)
        return cls(np.array(vals), float(xs[1] - xs[0]), float(xs[0]))


# ---------------------------------------------------------------------------
# heat equation
# ---------------------------------------------------------------------------

def heat_explicit(u0, alpha, dt, boundary, steps):
    """Forward-difference layers with fixed Dirichlet boundary values.

    Warns when dt exceeds the dx^2/(2 alpha) stability bound; raises
    DivergenceError once the field stops being finite.
    """
    limit = u0.dx**2 / (2 * alpha)
    if dt > limit * (1 + 1e-12):
        warnings.warn(
            f"dt={dt} above the stability bound {limit}", StabilityWarning, stacklevel=2
        )
    ua, ub = boundary
    u = np.array(u0.values, dtype=np.float64)
    r = alpha * dt / u0.dx**2
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(steps):
            u[0], u[-1] = ua, ub
            nxt = u.copy()
            nxt[1:-1] = u[1:-1] + r * (u[2:] - 2 * u[1:-1] + u[:-2])
            u = nxt
            if not np.isfinite(u).all():
                raise DivergenceError("explicit scheme diverged")
    u[0], u[-1] = ua, ub
    return GridField(u, u0.dx, u0.origin)


@njit(cache=True)
def _thomas_kernel(lower, diag, upper, rhs):
    n = len(diag)
    cp = np.empty(n)
    dp = np.empty(n)
    piv = diag[0]
    if abs(piv) < 1e-300:
        return np.full(n, np.nan), False
    cp[0] = upper[0] / piv
    dp[0] = rhs[0] / piv
    for i in range(1, n):
        piv = diag[i] - lower[i] * cp[i - 1]
        if abs(piv) < 1e-300:
            return np.full(n, np.nan), False
        cp[i] = upper[i] / piv
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / piv
    x = np.empty(n)
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x, True


def thomas_solve(lower, diag, upper, rhs):
    """Tridiagonal forward-elimination/back-substitution in O(m).

    lower[0] and upper[-1] are ignored."""
    x, ok = _thomas_kernel(
        np.ascontiguousarray(lower, dtype=np.float64),
        np.ascontiguousarray(diag, dtype=np.float64),
        np.ascontiguousarray(upper, dtype=np.float64),
        np.ascontiguousarray(rhs, dtype=np.float64),
    )
    if not ok:
        raise SolverError("singular pivot in tridiagonal solve")
    return x


def heat_sweep(u0, alpha, dt, boundary, steps):
    """Implicit layers solved by the tridiagonal sweep; unconditionally
    stable, so dt is not tied to dx^2."""
    ua, ub = boundary
    m = u0.num_nodes
    inner = m - 2
    beta = -2.0 - u0.dx**2 / (alpha * dt)
    omega = beta + 2.0
    lower = np.ones(inner)
    diag = np.full(inner, beta)
    upper = np.ones(inner)
    u = np.array(u0.values, dtype=np.float64)
    u[0], u[-1] = ua, ub
    for _ in range(steps):
        rhs = omega * u[1:-1]
        rhs[0] -= ua
        rhs[-1] -= ub
        u[1:-1] = thomas_solve(lower, diag, upper, rhs)
    return GridField(u, u0.dx, u0.origin)


# ---------------------------------------------------------------------------
# split-step Schrodinger propagation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitStepParams:
    mass: float
    dt: float
    potential: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        V = np.asarray(self.potential, dtype=np.float64)
        object.__setattr__(self, "potential", V)


def split_step(psi0, params, steps):
    """Symmetric split propagation on a periodic domain: half potential
    phase, spectral kinetic phase, half potential phase.  Each factor is a
    pure phase in its own basis, so the norm is conserved exactly."""
    n = psi0.num_nodes
    if params.potential.shape != (n,):
        raise ValueError("potential must be sampled on the grid")
    hbar = params.hbar
    k = 2 * np.pi * np.fft.fftfreq(n, d=psi0.dx)
    half_v = np.exp(-0.5j * params.potential * params.dt / hbar)
    kinetic = np.exp(-1j * hbar * k**2 * params.dt / (2 * params.mass))
    psi = np.asarray(psi0.values, dtype=np.complex128)
    for _ in range(steps):
        psi = half_v * psi
        psi = np.fft.ifft(kinetic * np.fft.fft(psi))
        psi = half_v * psi
    return GridField(psi, psi0.dx, psi0.origin)


def dense_propagator(psi0, params, total_time):
    """Matrix-exponential oracle: exact exp(-iHt) with the spectral kinetic
    term and diagonal potential on the same periodic grid."""
    n = psi0.num_nodes
    k = 2 * np.pi * np.fft.fftfreq(n, d=psi0.dx)
    F = np.fft.fft(np.eye(n), axis=0) / np.sqrt(n)
    kin = F.conj().T @ np.diag(params.hbar**2 * k**2 / (2 * params.mass)) @ F
    H = kin + np.diag(params.potential)
    evals, evecs = np.linalg.eigh(H)
    U = (evecs * np.exp(-1j * evals * total_time / params.hbar)) @ evecs.conj().T
    return U


def free_kernel(x, t, mass, hbar=1.0):
    """Closed-form free propagator (2 pi i hbar t / m)^{-1/2} e^{i m x^2 / 2 hbar t}."""
    if t == 0:
        raise SingularTimeError("kernel is singular at t = 0")
    prefactor = 1.0 / np.sqrt(2j * np.pi * hbar * t / mass)
    return prefactor * np.exp(1j * mass * np.asarray(x) ** 2 / (2 * hbar * t))


def kernel_propagate(psi0, t, mass, hbar=1.0):
    """Propagate by direct quadrature against the free kernel."""
    x = psi0.nodes()
    out = np.empty(psi0.num_nodes, dtype=np.complex128)
    for i, xi in enumerate(x):
        out[i] = np.sum(free_kernel(xi - x, t, mass, hbar) * psi0.values) * psi0.dx
    return GridField(out, psi0.dx, psi0.origin)


def classicality(action, hbar=1.0, threshold=100.0):
    """|S| / hbar and whether it clears the classical-regime threshold."""
    ratio = abs(action) / hbar
    return ratio, ratio > threshold
