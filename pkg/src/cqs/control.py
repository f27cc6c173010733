"""Quantum computation driven by one-qubit pulses over an always-on diagonal
pairwise interaction: exact phase accounting, NOT-compensation schedules,
CNOT synthesis from a fixed diagonal coupling, and the continuous-interaction
inverse-QFT scheme.

Pulses are instantaneous; interaction during a pulse is ignored (the model's
own idealization).  Units: hbar = 1.
"""
from dataclasses import dataclass

import numpy as np

from . import fourier
from .rng import ensure_rng
from .statevec import GateOp, H_GATE, X_GATE, QuantumState, apply_gate, phase_gate


class UnsupportedModelError(ValueError):
    pass


class UnsynthesizableError(ValueError):
    pass


class CapExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class InteractionGraph:
    """Always-on diagonal pairwise coupling.

    form "projector": energy rho_jk only on the |11> component of each pair
    (rho_jk from an explicit matrix or a Yukawa law over positions).
    form "diagonal": energies (E1..E4) on (00,01,10,11) per pair.
    """
    num_qubits: int
    pair_energies: np.ndarray  # (n, n, 4) diagonal energies, symmetric in j,k
    form: str

    @classmethod
    def yukawa(cls, num_qubits, rho0, b=1.0, positions=None):
        if positions is None:
            positions = np.arange(num_qubits, dtype=np.float64)
        positions = np.asarray(positions, dtype=np.float64)
        pe = np.zeros((num_qubits, num_qubits, 4))
        for j in range(num_qubits):
            for k in range(num_qubits):
                if j == k:
                    continue
                r = abs(positions[j] - positions[k])
                if r <= 0:
                    raise ValueError("coincident qubit positions")
                pe[j, k, 3] = rho0 * np.exp(-b * r) / r
        return cls(num_qubits, pe, "projector")

    @classmethod
    def projector(cls, num_qubits, rho):
        rho = np.asarray(rho, dtype=np.float64)
        pe = np.zeros((num_qubits, num_qubits, 4))
        pe[:, :, 3] = rho
        np.fill_diagonal(pe[:, :, 3], 0.0)
        return cls(num_qubits, pe, "projector")

    @classmethod
    def diagonal(cls, num_qubits, energies):
        pe = np.asarray(energies, dtype=np.float64)
        if pe.shape != (num_qubits, num_qubits, 4):
            raise ValueError("energies must have shape (n, n, 4)")
        for j in range(num_qubits):
            for k in range(j + 1, num_qubits):
                e = pe[j, k]
                if abs(e[0] + e[3] - e[1] - e[2]) < 1e-12:
                    raise ValueError(
                        f"pair ({j},{k}): E1+E4 = E2+E3 is not synthesizable"
                    )
        return cls(num_qubits, pe, "diagonal")

    def energy_table(self):
        """Diagonal energy E(b) for every basis index (qubit 0 = MSB)."""
        n = self.num_qubits
        idx = np.arange(2**n)
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        E = np.zeros(2**n)
        for j in range(n):
            for k in range(j + 1, n):
                code = 2 * bits[j] + bits[k]
                E += self.pair_energies[j, k][code]
        return E

    def coupling_coefficient(self, j, k):
        """Two-qubit phase-rate d_jk: coefficient of b_j b_k in -E(b)."""
        e = self.pair_energies[j, k] + self.pair_energies[k, j] * 0
        return -(e[3] - e[2] - e[1] + e[0])


GATE_MATRICES = {"X": X_GATE, "H": H_GATE}


@dataclass(frozen=True)
class PulseEvent:
    time: float
    qubit: int
    gate: str  # "X", "H", or "PHASE:<theta>"

    def matrix(self):
        if self.gate.startswith("PHASE:"):
            return phase_gate(float(self.gate.split(":", 1)[1]))
        return GATE_MATRICES[self.gate]


@dataclass
class PulseSchedule:
    events: list
    duration: float
    tick: float = 0.0

    def __post_init__(self):
        self.events = sorted(self.events, key=lambda e: e.time)
        for e in self.events:
            if e.time < 0 or e.time > self.duration + 1e-12:
                raise ValueError("event outside [0, duration]")
            if self.tick > 0:
                offset = e.time % self.tick
                if min(offset, self.tick - offset) > 1e-9 * max(1.0, self.duration):
                    raise ValueError(f"event time {e.time} is off the tick grid")

    def to_text(self):
        lines = [f"# duration {self.duration!r} tick {self.tick!r}"]
        for e in self.events:
            lines.append(f"{e.time!r} {e.qubit} {e.gate}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        events = []
        duration = 0.0
        tick = 0.0
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line.split()
                duration, tick = float(parts[2]), float(parts[4])
                continue
            t, q, g = line.split()
            events.append(PulseEvent(float(t), int(q), g))
        return cls(events, duration, tick)

    def not_parity(self, num_qubits):
        parity = np.zeros(num_qubits, dtype=int)
        for e in self.events:
            if e.gate == "X":
                parity[e.qubit] ^= 1
        return parity


def evolve(graph, schedule, initial_state):
    """Exact evolution: diagonal phases between pulses, instantaneous pulses."""
    E = graph.energy_table()
    state = initial_state
    t = 0.0
    for event in schedule.events:
        dt = event.time - t
        if dt > 1e-15:
            state = QuantumState(state.num_qubits, state.amplitudes * np.exp(-1j * E * dt))
        state = apply_gate(state, GateOp((event.qubit,), event.matrix()))
        t = event.time
    if schedule.duration - t > 1e-15:
        state = QuantumState(
            state.num_qubits, state.amplitudes * np.exp(-1j * E * (schedule.duration - t))
        )
    return state


def evolve_operator(graph, schedule):
    """Dense matrix of the schedule's evolution (n <= ~8)."""
    n = graph.num_qubits
    N = 2**n
    E = graph.energy_table()
    M = np.eye(N, dtype=np.complex128)
    t = 0.0
    for event in schedule.events:
        dt = event.time - t
        if dt > 1e-15:
            M = np.exp(-1j * E * dt)[:, None] * M
        M = _embed_gate(event.matrix(), event.qubit, n) @ M
        t = event.time
    if schedule.duration - t > 1e-15:
        M = np.exp(-1j * E * (schedule.duration - t))[:, None] * M
    return M


def _embed_gate(U, q, n):
    full = np.array([[1.0]], dtype=np.complex128)
    for i in range(n):
        full = np.kron(full, U if i == q else np.eye(2))
    return full


def accumulated_phase(graph, x_schedule):
    """Exact per-basis-state phase Phi(b) of an X-pulse-only schedule with
    even NOT parity per qubit (the net operator is diagonal: exp(i Phi)).
    """
    n = graph.num_qubits
    if x_schedule.not_parity(n).any():
        raise ValueError("schedule must restore every qubit (even NOT parity)")
    E = graph.energy_table()
    idx = np.arange(2**n)
    if not x_schedule.events:
        return -E * x_schedule.duration
    times = np.array([e.time for e in x_schedule.events])
    flips = np.array(
        [1 << (n - 1 - e.qubit) for e in x_schedule.events], dtype=np.int64
    )
    for e in x_schedule.events:
        if e.gate != "X":
            raise ValueError("phase accounting applies to X-only schedules")
    # mask in force during segment s = [t_{s-1}, t_s): xor of flips before it
    masks = np.zeros(len(times) + 1, dtype=np.int64)
    np.bitwise_xor.accumulate(flips, out=masks[1:])
    bounds = np.concatenate([[0.0], times, [x_schedule.duration]])
    deltas = np.diff(bounds)
    keep = deltas > 1e-15
    looked = E[idx[:, None] ^ masks[None, keep]]
    phi = looked @ deltas[keep]
    return -phi  # evolution phase factor is exp(-i E t)


def phase_coefficients(phi, num_qubits):
    """Decompose a quadratic-in-bits phase function (length 2^n) into
    constant, one-qubit, and two-qubit coefficients."""
    n = num_qubits

    def pattern(*qubits):
        p = 0
        for q in qubits:
            p |= 1 << (n - 1 - q)
        return p

    const = phi[0]
    single = np.array([phi[pattern(q)] - const for q in range(n)])
    double = np.zeros((n, n))
    for j in range(n):
        for k in range(j + 1, n):
            double[j, k] = (
                phi[pattern(j, k)] - phi[pattern(j)] - phi[pattern(k)] + const
            )
    return const, single, double


# ---------------------------------------------------------------------------
# NOT-compensation schedules
# ---------------------------------------------------------------------------

def _wrap_events(events, duration, tick):
    return PulseSchedule(events, duration, tick)


def compensate_random(graph, pair, duration, lam, rng_seed, ticks=2048):
    """Poisson NOT pulses on every qubit outside `pair`, discretized to the
    tick grid, plus parity-restoring final NOTs.

    Returns (schedule, report).  The report decomposes the realized phase:
    the wanted pair coefficient, the per-qubit linear part, the constant,
    and the residual unwanted two-qubit coefficients (all compensable parts
    are meant to be removed by one-qubit gates).
    """
    rng = ensure_rng(rng_seed)
    n = graph.num_qubits
    j, k = pair
    others = [q for q in range(n) if q not in (j, k)]
    dt_tick = duration / ticks
    p_flip = min(lam * dt_tick, 1.0)
    events = []
    for q in others:
        flips = rng.random(ticks) < p_flip
        times = (np.flatnonzero(flips) + 1) * dt_tick
        for t in times:
            events.append(PulseEvent(min(t, duration), q, "X"))
        if len(times) % 2 == 1:
            events.append(PulseEvent(duration, q, "X"))
    schedule = _wrap_events(events, duration, dt_tick)
    report = compensation_report(graph, schedule, pair)
    return schedule, report


def compensate_periodic(graph, pair, duration, ticks=None):
    """Deterministic NOT compensation: qubit i outside the pair flips at
    multiples of 2^i * tick (square waves, mutually orthogonal over the full
    duration), so every unwanted two-qubit phase cancels exactly.
    """
    n = graph.num_qubits
    others = [q for q in range(n) if q not in pair]
    if ticks is None:
        ticks = 2 ** max(len(others) + 1, 4)
    K = int(np.ceil(np.log2(ticks)))
    if 2**K != ticks:
        raise ValueError("ticks must be a power of two")
    if 2 ** len(others) > ticks:
        raise ValueError("not enough ticks for orthogonal square waves")
    dt_tick = duration / ticks
    events = []
    for i, q in enumerate(others):
        period = 2**i
        times = np.arange(period, ticks + 1, period) * dt_tick
        for t in times:
            events.append(PulseEvent(t, q, "X"))
        if len(times) % 2 == 1:
            events.append(PulseEvent(duration, q, "X"))
    schedule = _wrap_events(events, duration, dt_tick)
    report = compensation_report(graph, schedule, pair)
    return schedule, report


def compensation_report(graph, schedule, pair):
    phi = accumulated_phase(graph, schedule)
    const, single, double = phase_coefficients(phi, graph.num_qubits)
    j, k = sorted(pair)
    wanted = double[j, k]
    unwanted = double.copy()
    unwanted[j, k] = 0.0
    return {
        "constant": float(const),
        "one_qubit": single,
        "pair_coefficient": float(wanted),
        "unwanted_two_qubit_max": float(np.abs(unwanted).max()),
        "unwanted_two_qubit": unwanted,
    }


# ---------------------------------------------------------------------------
# CNOT from a fixed diagonal interaction
# ---------------------------------------------------------------------------

def synthesize_cnot(energies, eps, cap=10**6):
    """Find n with |dE n - pi (2m+1)| < eps and assemble
    (I x H) (E (A x B))^n (I x H).

    Returns (n, pulse matrices (A, B), achieved 4x4 operator, distance).
    """
    E1, E2, E3, E4 = energies
    dE = E1 - E2 - E3 + E4
    if abs(dE) < 1e-12:
        raise UnsynthesizableError("dE = 0: interaction has no two-qubit part")
    if abs((dE % (2 * np.pi))) < 1e-12 or abs((dE % (2 * np.pi)) - 2 * np.pi) < 1e-12:
        raise UnsynthesizableError("dE is an even multiple of pi")
    best_n = None
    for reps in range(1, cap + 1):
        r = (dE * reps - np.pi) % (2 * np.pi)
        dist = min(r, 2 * np.pi - r)
        if dist < eps:
            best_n = reps
            break
    if best_n is None:
        raise CapExceededError(f"no repetition count within eps={eps} below {cap}")
    A = np.diag([1.0, np.exp(1j * (E1 - E3))])
    B = np.diag([np.exp(-1j * E1), np.exp(-1j * E2)])
    Efull = np.diag(np.exp(1j * np.array([E1, E2, E3, E4])))
    U = Efull @ np.kron(A, B)
    IH = np.kron(np.eye(2), H_GATE)
    achieved = IH @ np.linalg.matrix_power(U, best_n) @ IH
    cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
    )
    distance = float(np.linalg.norm(achieved - cnot, 2))
    return best_n, (A, B), achieved, distance


# ---------------------------------------------------------------------------
# inverse QFT over a continuous interaction
# ---------------------------------------------------------------------------

def _qft_coupling(n):
    """Wire couplings rho(u,w) = -pi / (2^d d), d = |u-w| (wire = line
    position; wire w is qubit n-1-w).  The negative sign makes the e^{-iEt}
    evolution accumulate the +pi/2^d cross phases the inverse transform
    needs."""
    pe = np.zeros((n, n, 4))
    for qj in range(n):
        for qk in range(n):
            if qj == qk:
                continue
            d = abs(qj - qk)
            pe[qj, qk, 3] = -np.pi / (2**d * d)
    return InteractionGraph(n, pe, "projector")


def stagger_schedule(n):
    """One Hadamard per qubit at times 0, 1, .., n-1 (qubit q at time q)."""
    return PulseSchedule([PulseEvent(float(q), q, "H") for q in range(n)], float(n - 1))


def qft_defect_coefficients(n):
    """Closed-form diagonal defect of the staggered-H scheme: quadratic phase
    coefficients on the input bits (A) and on the pre-swap output bits (B).

    Qubit pair (qj, qk), qj < qk; wires u = n-1-qj > w = n-1-qk.
    """
    graph = _qft_coupling(n)
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for qj in range(n):
        for qk in range(qj + 1, n):
            u, w = n - 1 - qj, n - 1 - qk
            rho = graph.pair_energies[qj, qk, 3]
            A[qj, qk] = -rho * (n - 1 - u)  # time both wires still carry inputs
            B[qj, qk] = -rho * w            # time both wires already carry outputs
    return A, B


def _diag_from_coefficients(coeffs, n):
    idx = np.arange(2**n)
    bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
    phi = np.zeros(2**n)
    for j in range(n):
        for k in range(j + 1, n):
            if coeffs[j, k]:
                phi += coeffs[j, k] * bits[j] * bits[k]
    return phi


def _correction_stage(graph, target_coeffs, mode, rng, ticks, passes=3):
    """Build NOT-compensated interaction windows realizing the two-qubit
    phase sum(c_jk b_j b_k) (coefficients taken mod 2pi), then cancel the
    stage's constant and linear parts with exact one-qubit phase gates.

    In poisson mode the controller knows its own realized pulse times, so it
    re-runs shorter windows against the classically computed leftover
    (`passes` rounds); the final two-qubit coefficients it cannot reach with
    one-qubit gates are the irreducible error.

    Returns (realized diagonal phase array, residual two-qubit matrix).
    """
    n = graph.num_qubits
    idx = np.arange(2**n)
    phi_total = np.zeros(2**n)
    remaining = (target_coeffs % (2 * np.pi) + np.pi) % (2 * np.pi) - np.pi
    remaining[np.tril_indices(n)] = 0.0
    for _round in range(passes if mode == "poisson" else 1):
        for j in range(n):
            for k in range(j + 1, n):
                c = remaining[j, k]
                if abs(c) < 1e-12:
                    continue
                rate = graph.coupling_coefficient(j, k)  # phase rate of b_j b_k
                if rate <= 0:
                    raise UnsupportedModelError("window needs a positive phase rate")
                duration = abs(c) / rate
                if mode == "periodic":
                    schedule, _ = compensate_periodic(graph, (j, k), duration, ticks=ticks)
                elif mode == "poisson":
                    lam = ticks / duration / 2  # flip probability 1/2 per tick
                    schedule, _ = compensate_random(
                        graph, (j, k), duration, lam, rng, ticks=ticks
                    )
                else:
                    raise ValueError(f"unknown mode {mode!r}")
                events = schedule.events
                if c < 0:
                    # sandwich the window in NOTs on j: the pair term becomes
                    # rate (1-b_j) b_k, i.e. a negative b_j b_k coefficient
                    # plus a one-qubit part removed with the rest
                    events = events + [
                        PulseEvent(0.0, j, "X"),
                        PulseEvent(duration, j, "X"),
                    ]
                    schedule = PulseSchedule(events, duration, schedule.tick)
                phi_total = phi_total + accumulated_phase(graph, schedule)
        _, _, double = phase_coefficients(phi_total, n)
        remaining = ((target_coeffs - double) % (2 * np.pi) + np.pi) % (2 * np.pi) - np.pi
        remaining[np.tril_indices(n)] = 0.0
        if np.abs(remaining).max() < 1e-12:
            break
    # exact one-qubit correction of the constant and linear parts: what is
    # left beyond the intended two-qubit phase is the error
    const, single, double = phase_coefficients(phi_total, n)
    bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
    lin = np.full(2**n, const)
    for q in range(n):
        lin = lin + single[q] * bits[q]
    realized = phi_total - lin  # after the one-qubit phase gates
    residual = (double - target_coeffs % (2 * np.pi) + np.pi) % (2 * np.pi) - np.pi
    return realized, residual


def qft_via_continuous(n, mode="periodic", rng_seed=0, ticks=None):
    """Inverse QFT from staggered Hadamards over the always-on coupling plus
    NOT-compensated correction windows.

    mode "periodic": deterministic square-wave compensation (exact).
    mode "poisson":  random compensation; error shrinks like T/sqrt(M).

    Returns (report dict, operator distance to the exact inverse QFT).
    """
    if n > 6:
        raise ValueError("desk-scale limit: n <= 6")
    rng = ensure_rng(rng_seed)
    if ticks is None:
        ticks = 2 ** max(n + 1, 8)
    graph = _qft_coupling(n)
    U_stagger = evolve_operator(graph, stagger_schedule(n))
    A, B = qft_defect_coefficients(n)
    target_A = -A  # corrections must cancel the defect
    target_B = -B
    if mode == "none":
        corr_pre = np.zeros(2**n)
        corr_post = np.zeros(2**n)
        residual = None
    else:
        corr_pre, res_a = _correction_stage(graph, target_A, mode, rng, ticks)
        corr_post, res_b = _correction_stage(graph, target_B, mode, rng, ticks)
        residual = max(np.abs(res_a).max(), np.abs(res_b).max())
    D_pre = np.exp(1j * corr_pre)
    D_post = np.exp(1j * corr_post)
    M = D_post[:, None] * U_stagger * D_pre[None, :]
    # undo the circuit's output bit reversal
    P = _bit_reversal(n)
    M = P @ M
    F = fourier.qft_matrix(n, inverse=True)
    distance = _distance_up_to_phase(M, F)
    return {"mode": mode, "ticks": ticks, "two_qubit_residual": residual}, distance


def _bit_reversal(n):
    N = 2**n
    P = np.zeros((N, N))
    for j in range(N):
        rev = int(format(j, f"0{n}b")[::-1], 2)
        P[rev, j] = 1.0
    return P


def _distance_up_to_phase(M, F):
    inner = np.trace(F.conj().T @ M)
    phase = inner / abs(inner) if abs(inner) > 1e-12 else 1.0
    return float(np.linalg.norm(M / phase - F, 2))


def predicted_defect_distance(n):
    """Operator distance the uncorrected scheme must show, computed from the
    closed-form A and B phase summands alone (B acts before the output
    bit reversal, so its diagonal is conjugated by it)."""
    A, B = qft_defect_coefficients(n)
    F = fourier.qft_matrix(n, inverse=True)
    P = _bit_reversal(n)
    d_pre = np.exp(1j * _diag_from_coefficients(A, n))
    d_post = P @ np.exp(1j * _diag_from_coefficients(B, n))
    M = d_post[:, None] * F * d_pre[None, :]
    return _distance_up_to_phase(M, F)
