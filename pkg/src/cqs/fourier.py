"""Discrete Fourier transform on amplitude vectors, its two-qubit circuit,
eigen-frequency revealing, order finding with continued fractions, and the
coordinate-impulse commutator report."""
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .rng import ensure_rng
from .statevec import GateOp, H_GATE, QuantumState, apply_gate, cphase_gate

SWAP_GATE = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128
)


def qft(state):
    """|a> -> N^{-1/2} sum_b exp(-2 pi i a b / N) |b>."""
    return QuantumState(state.num_qubits, np.fft.fft(state.amplitudes, norm="ortho"))


def qft_inverse(state):
    """|a> -> N^{-1/2} sum_b exp(+2 pi i a b / N) |b>."""
    return QuantumState(state.num_qubits, np.fft.ifft(state.amplitudes, norm="ortho"))


def qft_matrix(n, inverse=False):
    N = 2**n
    a = np.arange(N)
    sign = 1.0 if inverse else -1.0
    return np.exp(sign * 2j * np.pi * np.outer(a, a) / N) / np.sqrt(N)


@dataclass(frozen=True)
class QftCircuitSpec:
    num_qubits: int
    truncation_band: int = None

    def __post_init__(self):
        if self.truncation_band is not None and self.truncation_band < 1:
            raise ValueError("band must be >= 1")


def qft_circuit(spec):
    """Gate list realizing the inverse transform: one Hadamard per qubit plus
    a controlled phase diag(1,1,1,e^{i pi/2^dist}) per qubit pair, nearest
    pairs first.  The composed circuit equals the inverse-QFT matrix up to
    output bit reversal; see qft_circuit_swaps for the undo stage.
    """
    l = spec.num_qubits
    band = spec.truncation_band
    gates = []
    for q in range(l):
        gates.append(GateOp((q,), H_GATE))
        for p in range(q + 1, l):
            dist = p - q
            if band is not None and dist > band:
                continue
            gates.append(GateOp((p, q), cphase_gate(np.pi / 2**dist)))
    return gates


def qft_circuit_swaps(num_qubits):
    """Final swap stage undoing the circuit's bit-reversed output order."""
    return [
        GateOp((q, num_qubits - 1 - q), SWAP_GATE) for q in range(num_qubits // 2)
    ]


def compose_circuit(gates, num_qubits):
    """Dense matrix of a gate list (columns = basis-state images)."""
    N = 2**num_qubits
    cols = np.zeros((N, N), dtype=np.complex128)
    for j in range(N):
        state = QuantumState(num_qubits, np.eye(N, dtype=np.complex128)[j])
        for gate in gates:
            state = apply_gate(state, gate)
        cols[:, j] = state.amplitudes
    return cols


# ---------------------------------------------------------------------------
# eigen-frequency revealing
# ---------------------------------------------------------------------------

def reveal_state(apply_power, system_dim, input_amps, m_bits):
    """State after QFT2 . U_cond . QFT2 with an m-bit frequency register.

    apply_power(amps_matrix) must multiply column alpha of the
    (system_dim x 2^m) amplitude matrix by U^alpha.
    """
    M = 2**m_bits
    amps = np.zeros((system_dim, M), dtype=np.complex128)
    amps[:, 0] = input_amps
    amps = np.fft.fft(amps, axis=1, norm="ortho")  # uniform register from |0>
    amps = apply_power(amps)
    amps = np.fft.fft(amps, axis=1, norm="ortho")
    return amps


def conditional_power_from_matrix(U):
    """apply_power callback for a small dense unitary U (exact sequential
    powers, no spectral assumptions)."""
    U = np.asarray(U, dtype=np.complex128)

    def apply_power(amps):
        M = amps.shape[1]
        out = np.empty_like(amps)
        out[:, 0] = amps[:, 0]
        power = np.eye(len(U), dtype=np.complex128)
        for alpha in range(1, M):
            power = U @ power
            out[:, alpha] = power @ amps[:, alpha]
        return out

    return apply_power


def phase_estimation(U, input_amps, m_bits, rng_seed):
    """Estimate the eigen frequency w written as an m-bit fraction c / 2^m.

    Returns (c, estimate w = c / 2^m, register distribution).
    """
    rng = ensure_rng(rng_seed)
    amps = reveal_state(
        conditional_power_from_matrix(U), len(input_amps), input_amps, m_bits
    )
    dist = np.sum(np.abs(amps) ** 2, axis=0)
    dist = dist / dist.sum()
    c = int(rng.choice(len(dist), p=dist))
    return c, c / 2**m_bits, dist


# ---------------------------------------------------------------------------
# order finding and factoring
# ---------------------------------------------------------------------------

class NonUnitaryMapError(ValueError):
    pass


class NoFactorError(RuntimeError):
    pass


@dataclass(frozen=True)
class OrderFindingInstance:
    modulus: int
    base: int

    def __post_init__(self):
        q, y = self.modulus, self.base
        if not 1 < y < q:
            raise ValueError("need 1 < y < q")
        if gcd(y, q) != 1:
            raise ValueError("base must be coprime to the modulus")

    @property
    def num_bits(self):
        return max(1, (self.modulus - 1).bit_length())


def cond_modmul_permutation(y, q, n):
    """Index permutation of |x> -> |y x mod q> (identity for x >= q)."""
    if gcd(y, q) != 1:
        raise NonUnitaryMapError("y not coprime to q: the map is not a permutation")
    idx = np.arange(2**n, dtype=np.int64)
    out = idx.copy()
    small = idx < q
    out[small] = (y * idx[small]) % q
    return out


def cond_modmul(state, y, q):
    """Apply the modular multiplication map to a state vector."""
    n = state.num_qubits
    perm = cond_modmul_permutation(y, q, n)
    amps = np.zeros_like(state.amplitudes)
    amps[perm] = state.amplitudes
    return QuantumState(n, amps)


def continued_fraction(value, denominator_bound):
    """Best rational approximation to `value` in [0,1) with denominator at
    most the bound (continued-fraction convergents plus the final
    semiconvergent)."""
    x = Fraction(value)
    if not 0 <= x < 1:
        raise ValueError("value must lie in [0, 1)")
    if x.denominator <= denominator_bound:
        return x
    p0, q0, p1, q1 = 0, 1, 1, 0
    n, d = x.numerator, x.denominator
    while True:
        a = n // d
        q2 = q0 + a * q1
        if q2 > denominator_bound:
            break
        p0, q0, p1, q1 = p1, q1, p0 + a * p1, q2
        n, d = d, n - a * d
    k = (denominator_bound - q0) // q1
    semi = Fraction(p0 + k * p1, q0 + k * q1)
    conv = Fraction(p1, q1)
    return conv if abs(conv - x) <= abs(semi - x) else semi


from functools import lru_cache


@lru_cache(maxsize=256)
def _register_distribution(q, y):
    """Exact frequency-register distribution of the revealing procedure for
    the modular multiplication map, input |1>, register width 2n."""
    n = max(1, (q - 1).bit_length())
    m = 2 * n
    perm = cond_modmul_permutation(y, q, n)

    def apply_power(amps):
        M = amps.shape[1]
        out = np.empty_like(amps)
        cur = np.arange(2**n)
        for alpha in range(M):
            out[cur, alpha] = amps[np.arange(2**n), alpha]
            cur = perm[cur]
        return out

    input_amps = np.zeros(2**n, dtype=np.complex128)
    input_amps[1] = 1.0  # |1> = uniform combination of the eigenvectors
    amps = reveal_state(apply_power, 2**n, input_amps, m)
    dist = np.sum(np.abs(amps) ** 2, axis=0)
    return dist / dist.sum()


def order_find(inst, rng_seed, max_samples=20):
    """Minimal r with y^r = 1 (mod q), recovered from eigen-frequency samples
    of the modular multiplication map via continued fractions.

    Returns (r, samples used); raises NoFactorError if the budget runs out.
    """
    rng = ensure_rng(rng_seed)
    q, y = inst.modulus, inst.base
    m = 2 * inst.num_bits
    dist = _register_distribution(q, y)

    candidate = 1
    for sample in range(1, max_samples + 1):
        c = int(rng.choice(len(dist), p=dist))
        frac = continued_fraction(Fraction(c, 2**m), q)
        if frac.denominator > 1:
            candidate = candidate * frac.denominator // gcd(candidate, frac.denominator)
        if candidate > 1 and pow(y, candidate, q) == 1:
            return _minimal_period(y, q, candidate), sample
    raise NoFactorError(f"no order found for y={y}, q={q} in {max_samples} samples")


def _minimal_period(y, q, r):
    """Reduce a verified period to the minimal one by checking divisors."""
    for d in sorted(_divisors(r)):
        if pow(y, d, q) == 1:
            return d
    return r


def _divisors(r):
    out = set()
    d = 1
    while d * d <= r:
        if r % d == 0:
            out.add(d)
            out.add(r // d)
        d += 1
    return out


def classical_order(y, q):
    """Brute-force period oracle."""
    acc = y % q
    for r in range(1, q + 1):
        if acc == 1:
            return r
        acc = (acc * y) % q
    raise ValueError("no period: y not coprime to q")


def factor(q, rng_seed, max_trials=30):
    """Find a nontrivial divisor of q via random bases and order finding."""
    rng = ensure_rng(rng_seed)
    if q % 2 == 0:
        return 2
    for _ in range(max_trials):
        y = int(rng.integers(2, q))
        g = gcd(y, q)
        if g > 1:
            return g  # lucky case
        inst = OrderFindingInstance(q, y)
        try:
            r, _ = order_find(inst, rng)
        except NoFactorError:
            continue
        if r % 2 != 0:
            continue
        half = pow(y, r // 2, q)
        if half == q - 1:
            continue
        for cand in (gcd(half - 1, q), gcd(half + 1, q)):
            if 1 < cand < q:
                return cand
    raise NoFactorError(f"no factor of {q} found in {max_trials} trials")


# ---------------------------------------------------------------------------
# coordinate-impulse commutator (exploratory)
# ---------------------------------------------------------------------------

def commutator_experiment(N, scale=None):
    """Build x = diag(0..N-1) and p = -i F x F^{-1} scale, and report how far
    [x, p] is from a constant multiple of the identity.

    The report's `c_estimate` and `residual` are invariant under conjugation
    by any unitary; the diagonal diagnostics are taken in the Fourier frame
    (the computational-frame diagonal of a commutator with diagonal x is
    identically zero).
    """
    if N < 4:
        raise ValueError("need N >= 4")
    if scale is None:
        scale = 2 * np.pi / N
    F = _dft(N)
    x = np.diag(np.arange(N, dtype=np.float64))
    Finv = F.conj().T
    p = -1j * scale * (F @ x @ Finv)
    comm = x @ p - p @ x
    c = np.trace(comm) / N
    residual = float(np.linalg.norm(comm - c * np.eye(N)))
    fp = F @ p @ Finv
    offdiag = fp - np.diag(np.diag(fp))
    # diagonal diagnostics in the Fourier frame
    diag_f = np.diag(Finv @ comm @ F)
    interior = diag_f[N // 4: 3 * N // 4]
    boundary = np.concatenate([diag_f[: N // 4], diag_f[3 * N // 4:]])
    return {
        "c_estimate": complex(c),
        "residual": residual,
        "fpf_offdiag_max": float(np.abs(offdiag).max()),
        "interior_diag_mean": complex(interior.mean()),
        "interior_diag_spread": float(np.abs(interior - interior.mean()).max()),
        "boundary_diag_max_dev": float(np.abs(boundary - interior.mean()).max()),
    }


def _dft(N):
    a = np.arange(N)
    return np.exp(-2j * np.pi * np.outer(a, a) / N) / np.sqrt(N)
