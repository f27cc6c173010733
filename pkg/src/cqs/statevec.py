"""Exact n-qubit state-vector simulation.

Basis convention (used everywhere in this package): the basis index j
encodes qubit 0 as the MOST significant bit, so for an n-qubit state the
bit of qubit q in index j is (j >> (n-1-q)) & 1.

States are immutable values: every operation returns a new QuantumState.
"""
from dataclasses import dataclass

import numpy as np

from .rng import ensure_rng

NORM_TOL = 1e-10
UNITARY_TOL = 1e-12


class InvalidGateError(ValueError):
    pass


class TotalReductionError(ValueError):
    """Every amplitude fell below the reduction grain."""


@dataclass(frozen=True)
class QuantumState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.num_qubits,):
            raise ValueError(
                f"amplitude vector must have length {2**self.num_qubits}, got {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def bit(self, index, qubit):
        return (index >> (self.num_qubits - 1 - qubit)) & 1


def basis_state(num_qubits, index):
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[index] = 1.0
    return QuantumState(num_qubits, amps)


def from_amplitudes(amps, normalize=False):
    amps = np.asarray(amps, dtype=np.complex128)
    n = int(np.log2(len(amps)))
    if 2**n != len(amps):
        raise ValueError("amplitude vector length must be a power of two")
    if normalize:
        amps = amps / np.linalg.norm(amps)
    return QuantumState(n, amps)


@dataclass(frozen=True)
class GateOp:
    targets: tuple
    matrix: np.ndarray

    def __post_init__(self):
        targets = tuple(self.targets)
        mat = np.asarray(self.matrix, dtype=np.complex128)
        k = len(targets)
        if not 1 <= k <= 3:
            raise InvalidGateError("gates act on 1-3 qubits")
        if len(set(targets)) != k:
            raise InvalidGateError(f"duplicate targets {targets}")
        if mat.shape != (2**k, 2**k):
            raise InvalidGateError(f"matrix shape {mat.shape} does not match {k} targets")
        if np.abs(mat @ mat.conj().T - np.eye(2**k)).max() > UNITARY_TOL:
            raise InvalidGateError("matrix is not unitary")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", mat)


# common one- and two-qubit matrices
H_GATE = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
X_GATE = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Z_GATE = np.array([[1, 0], [0, -1]], dtype=np.complex128)
CNOT_GATE = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)


def phase_gate(theta):
    return np.diag([1.0, np.exp(1j * theta)]).astype(np.complex128)


def cphase_gate(theta):
    return np.diag([1.0, 1.0, 1.0, np.exp(1j * theta)]).astype(np.complex128)


def apply_gate(state, gate):
    """Apply gate.matrix to gate.targets, identity elsewhere."""
    n = state.num_qubits
    targets = gate.targets
    for q in targets:
        if not 0 <= q < n:
            raise InvalidGateError(f"target {q} out of range for {n} qubits")
    k = len(targets)
    tensor = state.amplitudes.reshape([2] * n)
    # qubit q lives on tensor axis q (axis 0 is the most significant bit)
    tensor = np.moveaxis(tensor, targets, range(n - k, n))
    shape = tensor.shape
    tensor = tensor.reshape(-1, 2**k) @ gate.matrix.T
    tensor = np.moveaxis(tensor.reshape(shape), range(n - k, n), targets)
    return QuantumState(n, tensor.reshape(-1))


def apply_unitary(state, matrix):
    """Apply a full 2^n x 2^n unitary (dense helper for small n)."""
    return QuantumState(state.num_qubits, matrix @ state.amplitudes)


def measure(state, qubits, rng_seed):
    """Projective measurement of a set of qubits in the computational basis.

    Returns (outcome bits as a tuple, collapsed renormalized state).
    """
    qubits = sorted(set(qubits))
    if not qubits:
        raise ValueError("empty qubit set")
    n = state.num_qubits
    if qubits[0] < 0 or qubits[-1] >= n:
        raise ValueError("qubit index out of range")
    rng = ensure_rng(rng_seed)
    idx = np.arange(2**n)
    # outcome label packs the measured qubits' bits in ascending qubit order
    label = np.zeros(2**n, dtype=np.int64)
    for q in qubits:
        label = (label << 1) | ((idx >> (n - 1 - q)) & 1)
    probs = np.bincount(label, weights=state.probabilities(), minlength=2 ** len(qubits))
    outcome = rng.choice(len(probs), p=probs / probs.sum())
    keep = label == outcome
    amps = np.where(keep, state.amplitudes, 0.0)
    amps = amps / np.linalg.norm(amps)
    bits = tuple((outcome >> (len(qubits) - 1 - i)) & 1 for i in range(len(qubits)))
    return bits, QuantumState(n, amps)


def outcome_distribution(state, qubits):
    """Exact probability of each outcome of measuring the given qubits."""
    qubits = sorted(set(qubits))
    n = state.num_qubits
    idx = np.arange(2**n)
    label = np.zeros(2**n, dtype=np.int64)
    for q in qubits:
        label = (label << 1) | ((idx >> (n - 1 - q)) & 1)
    return np.bincount(label, weights=state.probabilities(), minlength=2 ** len(qubits))


def tensor(a, b):
    """Product state; a's qubits become the most significant block."""
    return QuantumState(a.num_qubits + b.num_qubits, np.kron(a.amplitudes, b.amplitudes))


def reduced_density_matrix(state, partition):
    """Trace out everything outside `partition` (set of qubit indices)."""
    part = sorted(set(partition))
    n = state.num_qubits
    rest = [q for q in range(n) if q not in part]
    t = state.amplitudes.reshape([2] * n)
    t = np.transpose(t, part + rest)
    t = t.reshape(2 ** len(part), 2 ** len(rest))
    return t @ t.conj().T


def entanglement_entropy(state, partition):
    """Von Neumann entropy -Tr(rho ln rho) of the reduced state (natural log)."""
    part = sorted(set(partition))
    if not part or len(part) >= state.num_qubits:
        raise ValueError("partition must be a proper nonempty subset of qubits")
    rho = reduced_density_matrix(state, part)
    evals = np.linalg.eigvalsh(rho)
    evals = evals[evals > 1e-15]
    return float(-np.sum(evals * np.log(evals)))


def ghz_state(num_qubits, weights=None):
    """(lam0 |00..0> + lam1 |11..1>); equal weights by default."""
    if weights is None:
        weights = (1 / np.sqrt(2), 1 / np.sqrt(2))
    lam0, lam1 = weights
    if abs(abs(lam0) ** 2 + abs(lam1) ** 2 - 1) > NORM_TOL:
        raise ValueError("weights must satisfy sum |lam|^2 = 1")
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    amps[0] = lam0
    amps[-1] = lam1
    return QuantumState(num_qubits, amps)


def w_state(num_qubits, weights=None):
    """sum_i lam_i |0..1..0> with the 1 at qubit i."""
    if weights is None:
        weights = np.full(num_qubits, 1 / np.sqrt(num_qubits))
    weights = np.asarray(weights, dtype=np.complex128)
    if len(weights) != num_qubits:
        raise ValueError("need one weight per qubit")
    if abs(np.sum(np.abs(weights) ** 2) - 1) > NORM_TOL:
        raise ValueError("weights must satisfy sum |lam|^2 = 1")
    amps = np.zeros(2**num_qubits, dtype=np.complex128)
    for i, lam in enumerate(weights):
        amps[1 << (num_qubits - 1 - i)] = lam
    return QuantumState(num_qubits, amps)


@dataclass(frozen=True)
class ReductionParams:
    epsilon: float

    def __post_init__(self):
        if not 0 <= self.epsilon < 1:
            raise ValueError("epsilon must lie in [0, 1)")


def reduce_amplitudes(state, params):
    """Zero every amplitude with |lam| < epsilon and renormalize."""
    keep = np.abs(state.amplitudes) >= params.epsilon
    if not keep.any():
        raise TotalReductionError("all amplitudes below the grain")
    amps = np.where(keep, state.amplitudes, 0.0)
    return QuantumState(state.num_qubits, amps / np.linalg.norm(amps))


def branch_split_counts(state, epsilon, shots, rng_seed):
    """Grain-reduction measurement: split each summand j into
    l_j = round(|lam_j|^2 / eps^2) equal sub-branches, reduce until a single
    sub-branch survives, and count which summand it came from.

    Returns (counts per basis state, sub-branch counts l_j).
    """
    rng = ensure_rng(rng_seed)
    p = state.probabilities()
    l = np.round(p / epsilon**2).astype(np.int64)
    if l.sum() == 0:
        raise TotalReductionError("grain too coarse: no sub-branches")
    probs = l / l.sum()
    counts = rng.multinomial(shots, probs)
    return counts, l


def pearson_check(observed, expected_probs, alpha):
    """Chi-squared goodness-of-fit: returns (statistic, accept?).

    Uses S = sum (obs - n p)^2 / (n p) against the chi2(1-alpha) quantile
    with (bins - 1) degrees of freedom.
    """
    from scipy.stats import chi2

    observed = np.asarray(observed, dtype=np.float64)
    expected_probs = np.asarray(expected_probs, dtype=np.float64)
    if observed.shape != expected_probs.shape:
        raise ValueError("observed and expected must have matching bins")
    if abs(expected_probs.sum() - 1) > 1e-9:
        raise ValueError("expected probabilities must sum to 1")
    if np.any((expected_probs <= 0) & (observed > 0)):
        raise ValueError("zero expected probability in a non-empty bin")
    total = observed.sum()
    mask = expected_probs > 0
    exp = total * expected_probs[mask]
    stat = float(np.sum((observed[mask] - exp) ** 2 / exp))
    threshold = float(chi2.ppf(1 - alpha, df=mask.sum() - 1))
    return stat, stat <= threshold
