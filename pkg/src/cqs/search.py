"""Reflections, the quantum oracle, amplitude-amplification search, and the
generalized rotation-phase search operator with its eigenvalue machinery."""
from dataclasses import dataclass, field

import numpy as np

from .rng import ensure_rng
from .statevec import QuantumState, from_amplitudes


class OracleMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class BooleanOracle:
    """Total predicate f over n-bit strings, stored as a 0/1 table."""
    arity: int
    table: np.ndarray
    known_solutions: tuple = None

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int8)
        if table.shape != (2**self.arity,):
            raise ValueError("table must enumerate all 2^n inputs")
        if not np.isin(table, (0, 1)).all():
            raise ValueError("oracle values must be 0 or 1")
        object.__setattr__(self, "table", table)
        if self.known_solutions is not None:
            object.__setattr__(self, "known_solutions", tuple(self.known_solutions))

    @classmethod
    def from_predicate(cls, arity, f):
        table = np.array([f(x) for x in range(2**arity)], dtype=np.int8)
        return cls(arity, table, known_solutions=tuple(np.flatnonzero(table)))

    @classmethod
    def single_target(cls, arity, target):
        table = np.zeros(2**arity, dtype=np.int8)
        table[target] = 1
        return cls(arity, table, known_solutions=(target,))

    def solution_count(self):
        return int(self.table.sum())


def load_truth_table(path):
    """Read an oracle from a text file with one "bits value" pair per line."""
    entries = {}
    widths = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                bits, value = line.split()
                widths.add(len(bits))
                entries[int(bits, 2)] = int(value)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: expected 'bits value'") from exc
    if len(widths) != 1:
        raise ValueError(f"{path}: inconsistent input widths {sorted(widths)}")
    arity = widths.pop()
    table = np.zeros(2**arity, dtype=np.int8)
    for x, v in entries.items():
        table[x] = v
    return BooleanOracle(arity, table)


def oracle_apply(state, oracle):
    """|a, b> -> |a, b xor f(a)> with a one-qubit answer register at the end."""
    n = oracle.arity
    if state.num_qubits != n + 1:
        raise OracleMismatchError(
            f"state has {state.num_qubits} qubits, oracle needs {n} + 1"
        )
    amps = state.amplitudes.reshape(2**n, 2)
    out = amps.copy()
    flip = oracle.table == 1
    out[flip, 0] = amps[flip, 1]
    out[flip, 1] = amps[flip, 0]
    return QuantumState(state.num_qubits, out.reshape(-1))


def phase_oracle(state, oracle):
    """Sign flip on solutions: the oracle acting through the (|0>-|1>)/sqrt2 ancilla."""
    if state.num_qubits != oracle.arity:
        raise OracleMismatchError("state size must equal oracle arity")
    sign = 1.0 - 2.0 * oracle.table
    return QuantumState(state.num_qubits, state.amplitudes * sign)


def reflect(state, axis):
    """I_a: fixes the orthocomplement of `axis` and negates the axis component."""
    if abs(axis.norm - 1) > 1e-10:
        raise ValueError("axis must be normalized")
    overlap = np.vdot(axis.amplitudes, state.amplitudes)
    return QuantumState(
        state.num_qubits, state.amplitudes - 2.0 * overlap * axis.amplitudes
    )


def reflection_matrix(axis):
    a = axis.amplitudes
    return np.eye(len(a)) - 2.0 * np.outer(a, a.conj())


def uniform_state(n):
    return from_amplitudes(np.full(2**n, 1.0), normalize=True)


def grover_iterate(state, oracle, start):
    """One step of G = -I_start I_targets."""
    out = phase_oracle(state, oracle)
    out = reflect(out, start)
    return QuantumState(out.num_qubits, -out.amplitudes)


@dataclass
class GroverResult:
    found: int            # index, or -1 for not-found
    success_probability: float
    iterations: int
    oracle_queries: int
    probability_trace: list = field(default_factory=list)


def grover_search(oracle, rng_seed, iterations=None):
    """Run amplitude amplification for t0 = floor(pi sqrt(N/l) / 4) steps
    from the uniform state, measure, and classically verify the outcome."""
    rng = ensure_rng(rng_seed)
    n = oracle.arity
    N = 2**n
    l = oracle.solution_count()
    if iterations is None:
        if l == 0:
            iterations = int(np.floor(np.pi * np.sqrt(N) / 4))
        else:
            overlap = np.sqrt(l / N)
            iterations = int(np.floor(np.pi / (4 * overlap)))
    start = uniform_state(n)
    state = start
    trace = []
    for _ in range(iterations):
        state = grover_iterate(state, oracle, start)
        p = float(state.probabilities()[oracle.table == 1].sum()) if l else 0.0
        trace.append(p)
    probs = state.probabilities()
    outcome = int(rng.choice(N, p=probs / probs.sum()))
    queries = iterations + 1  # one verification call
    if oracle.table[outcome] == 1:
        return GroverResult(outcome, trace[-1] if trace else l / N, iterations, queries, trace)
    return GroverResult(-1, trace[-1] if trace else l / N, iterations, queries, trace)


def grover_success_probability(n, l, t):
    """Closed form sin^2((2t+1) theta), theta = arcsin(sqrt(l/N))."""
    theta = np.arcsin(np.sqrt(l / 2**n))
    return float(np.sin((2 * t + 1) * theta) ** 2)


def grover_unknown_count(oracle, rng_seed, cap_constant=3.0, max_passes=4):
    """Doubling schedule of run lengths up to C sqrt(N); measure and verify
    classically after each stage; the whole schedule restarts up to
    `max_passes` times.  Returns a GroverResult (found = -1 once the full
    budget is exhausted, after exactly the deterministic query total)."""
    rng = ensure_rng(rng_seed)
    n = oracle.arity
    N = 2**n
    cap = cap_constant * np.sqrt(N)
    start = uniform_state(n)
    queries = 0
    for _ in range(max_passes):
        stage = 1
        while stage <= cap:
            state = start
            for _ in range(stage):
                state = grover_iterate(state, oracle, start)
            queries += stage
            probs = state.probabilities()
            outcome = int(rng.choice(N, p=probs / probs.sum()))
            queries += 1  # classical verification
            if oracle.table[outcome] == 1:
                return GroverResult(outcome, float(probs[outcome]), stage, queries)
            stage *= 2
    return GroverResult(-1, 0.0, 0, queries)


def unknown_count_schedule_queries(n, cap_constant=3.0, max_passes=4):
    """Deterministic total query budget of grover_unknown_count."""
    cap = cap_constant * np.sqrt(2**n)
    per_pass = sum(s + 1 for s in (2**k for k in range(64)) if s <= cap)
    return max_passes * per_pass


# ---------------------------------------------------------------------------
# generalized search: m state groups rotated by distinct phases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneralizedSearchInstance:
    """Group sizes l_1..l_m (l_1 untouched, l_2 flipped targets, the rest
    rotated by angles d_1..d_{m-2})."""
    group_sizes: tuple
    angles: tuple

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.group_sizes)
        angles = tuple(float(a) for a in self.angles)
        if len(sizes) < 2:
            raise ValueError("need at least main and target groups")
        if len(angles) != len(sizes) - 2:
            raise ValueError("need one angle per extra group")
        if sizes[1] <= 0:
            raise ValueError("target group must be nonempty")
        if any(s < 0 for s in sizes):
            raise ValueError("group sizes must be nonnegative")
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "angles", angles)

    @property
    def total(self):
        return sum(self.group_sizes)

    @property
    def m(self):
        return len(self.group_sizes)

    @property
    def gamma(self):
        return np.sqrt(self.group_sizes[1] / self.total)

    @property
    def x(self):
        return 2 * self.gamma

    def phase_factors(self):
        return np.exp(1j * np.asarray(self.angles))

    def hypotheses_hold(self, ratio_tol=0.1):
        """Theorem regime: l1/N near 1, extra mass small vs d sqrt(N l2),
        sqrt(l2/N) small vs d."""
        N = self.total
        l1, l2 = self.group_sizes[0], self.group_sizes[1]
        if not self.angles:
            return l1 / N > 1 - ratio_tol
        d = max(abs(a) for a in self.angles)
        extra = N - l1 - l2
        return (
            l1 / N > 1 - ratio_tol
            and extra / (d * np.sqrt(N * l2)) < ratio_tol * 3
            and np.sqrt(l2 / N) / d < ratio_tol * 3
        )


def build_generalized_operator(inst):
    """The m x m matrix G = -I_0 U in the invariant basis e_1..e_m, computed
    within O(eps), eps = sum_{j>=2} l_j / N."""
    if inst.group_sizes[1] == 0:
        raise ValueError("degenerate instance: empty target group")
    m = inst.m
    x = inst.x
    ys = [2 * np.sqrt(l / inst.total) for l in inst.group_sizes[2:]]
    vs = inst.phase_factors()
    G = np.zeros((m, m), dtype=np.complex128)
    G[0, 0] = 1.0
    G[0, 1] = -x
    G[1, 0] = x
    G[1, 1] = 1.0
    for j, (y, v) in enumerate(zip(ys, vs)):
        G[0, 2 + j] = -y * v
        G[2 + j, 0] = y
        G[2 + j, 2 + j] = v
    return G


def char_poly_coeffs(inst):
    """Coefficients (ascending degree) of det(G - lam I) for the approximate
    operator, via the product-sum recursion."""
    x = inst.x
    ys = np.array([2 * np.sqrt(l / inst.total) for l in inst.group_sizes[2:]])
    vs = inst.phase_factors()
    base = np.array([1 + x * x, -2.0, 1.0], dtype=np.complex128)  # (lam-1)^2 + x^2
    total = base
    for v in vs:
        total = np.convolve(total, np.array([v, -1.0], dtype=np.complex128))
    for j, (y, v) in enumerate(zip(ys, vs)):
        term = np.array([v * y * y], dtype=np.complex128)
        term = np.convolve(term, np.array([1.0, -1.0], dtype=np.complex128))  # (1-lam)
        for k, vk in enumerate(vs):
            if k != j:
                term = np.convolve(term, np.array([vk, -1.0], dtype=np.complex128))
        padded = np.zeros_like(total)
        padded[: len(term)] = term
        total = total + padded
    return total


def char_poly(inst, lam):
    """Evaluate the characteristic polynomial at lam."""
    coeffs = char_poly_coeffs(inst)
    return complex(np.polyval(coeffs[::-1], lam))


def char_poly_roots(inst):
    return np.roots(char_poly_coeffs(inst)[::-1])


def generalized_search(inst, steps=None):
    """Iterate the exact -I_0 U in the m-dimensional invariant subspace for
    t = floor(pi/4 sqrt(N / l2)) steps.

    Returns (per-step |<e2|state>|^2 trace, hypothesis warning flag).
    """
    N = inst.total
    l2 = inst.group_sizes[1]
    if steps is None:
        steps = int(np.floor((np.pi / 4) * np.sqrt(N / l2)))
    tilde0 = np.sqrt(np.array(inst.group_sizes, dtype=np.float64) / N)
    U = np.diag(
        np.concatenate([[1.0, -1.0], -inst.phase_factors()]).astype(np.complex128)
    )
    I0 = np.eye(inst.m, dtype=np.complex128) - 2.0 * np.outer(tilde0, tilde0)
    G = -I0 @ U
    v = tilde0.astype(np.complex128)
    trace = []
    for _ in range(steps):
        v = G @ v
        trace.append(float(abs(v[1]) ** 2))
    return trace, not inst.hypotheses_hold()
