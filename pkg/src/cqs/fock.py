"""Fermionic occupation-number formalism: creation/annihilation with parity
signs, Slater determinants, the pair map between qubit and Fock spaces, and
the field-plus-tunneling control equivalence.

Occupation basis: levels 1..J; the Fock basis index packs n_1 as the most
significant bit.  Operator signs use sigma_j = n_1 + .. + n_{j-1}, the level
j itself excluded (the standard string convention; including n_j only flips
each operator's overall sign, but it would also break the algebra if the
creation operator were defined by the same inclusive rule instead of as the
adjoint).  The anticommutation identities in the tests are the arbiter.
"""
from dataclasses import dataclass
from itertools import permutations
from math import factorial

import numpy as np

from .statevec import QuantumState


class OutOfSubspaceError(ValueError):
    pass


@dataclass(frozen=True)
class FockState:
    num_levels: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.num_levels,):
            raise ValueError("amplitude vector length must be 2^J")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))


def fock_basis(num_levels, occupations):
    """Basis state from an occupation bit sequence (n_1, .., n_J)."""
    occupations = tuple(occupations)
    if len(occupations) != num_levels or any(b not in (0, 1) for b in occupations):
        raise ValueError("occupations must be J bits")
    idx = 0
    for b in occupations:
        idx = (idx << 1) | b
    amps = np.zeros(2**num_levels, dtype=np.complex128)
    amps[idx] = 1.0
    return FockState(num_levels, amps)


def occupation_of(index, level, num_levels):
    """Bit n_level of a Fock basis index (levels count from 1)."""
    return (index >> (num_levels - level)) & 1


def annihilation_matrix(num_levels, level):
    """Dense matrix of a_level on the 2^J occupation basis."""
    J = num_levels
    N = 2**J
    idx = np.arange(N)
    occupied = occupation_of(idx, level, J) == 1
    parity = np.zeros(N, dtype=np.int64)
    for s in range(1, level):
        parity += occupation_of(idx, s, J)
    sign = np.where(parity % 2 == 0, 1.0, -1.0)
    target = idx ^ (1 << (J - level))
    mat = np.zeros((N, N))
    mat[target[occupied], idx[occupied]] = sign[occupied]
    return mat


def creation_matrix(num_levels, level):
    return annihilation_matrix(num_levels, level).T


def annihilate(state, level):
    """a_level applied to a FockState; an empty level yields the zero state."""
    out = annihilation_matrix(state.num_levels, level) @ state.amplitudes
    return FockState(state.num_levels, out)


def create(state, level):
    out = creation_matrix(state.num_levels, level) @ state.amplitudes
    return FockState(state.num_levels, out)


def number_operator(num_levels, level):
    a = annihilation_matrix(num_levels, level)
    return a.T @ a


# ---------------------------------------------------------------------------
# Slater determinants
# ---------------------------------------------------------------------------

def slater_state(orbitals, grid_size):
    """Antisymmetrized n-particle state over (C^m)^n from one-particle
    amplitude vectors, normalized with 1/sqrt(n!).

    Linearly dependent inputs produce the zero vector (Pauli exclusion);
    the caller can check the returned norm.
    """
    orbitals = [np.asarray(f, dtype=np.complex128) for f in orbitals]
    n = len(orbitals)
    for f in orbitals:
        if f.shape != (grid_size,):
            raise ValueError("orbital length must equal the grid size")
    out = np.zeros(grid_size**n, dtype=np.complex128)
    for perm in permutations(range(n)):
        sign = _perm_sign(perm)
        term = orbitals[perm[0]]
        for i in range(1, n):
            term = np.kron(term, orbitals[perm[i]])
        out = out + sign * term
    return out / np.sqrt(factorial(n))


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        length = 0
        j = i
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# pairing map between qubit and Fock spaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevelPairing:
    """k (lower, upper) level pairs around the Fermi index.  Default: levels
    1..k are lower, k+1..2k upper, pair i = (i, 2k+1-i)."""
    pairs: tuple

    def __post_init__(self):
        pairs = tuple((int(a), int(b)) for a, b in self.pairs)
        flat = [x for p in pairs for x in p]
        if len(set(flat)) != len(flat):
            raise ValueError("pairing must be a bijection on distinct levels")
        object.__setattr__(self, "pairs", pairs)

    @classmethod
    def default(cls, k):
        return cls(tuple((i, 2 * k + 1 - i) for i in range(1, k + 1)))

    @property
    def num_pairs(self):
        return len(self.pairs)

    @property
    def num_levels(self):
        return 2 * len(self.pairs)


def _pair_occupations(pairing, qubit_bits):
    """Occupation bits for a qubit basis pattern: qubit value 0 fills the
    lower level of its pair, value 1 the upper level."""
    J = pairing.num_levels
    occ = [0] * J
    for (lower, upper), bit in zip(pairing.pairs, qubit_bits):
        occ[(upper if bit else lower) - 1] = 1
    return occ


def theta_map(qubit_state, pairing):
    """Isometry from k-qubit states into the half-filled pair subspace."""
    k = pairing.num_pairs
    if qubit_state.num_qubits != k:
        raise ValueError("qubit count must match the number of pairs")
    J = pairing.num_levels
    out = np.zeros(2**J, dtype=np.complex128)
    for j, amp in enumerate(qubit_state.amplitudes):
        if amp == 0:
            continue
        bits = [(j >> (k - 1 - q)) & 1 for q in range(k)]
        occ = _pair_occupations(pairing, bits)
        idx = 0
        for b in occ:
            idx = (idx << 1) | b
        out[idx] = amp
    return FockState(J, out)


def theta_matrix(pairing):
    k = pairing.num_pairs
    cols = [theta_map(QuantumState(k, np.eye(2**k)[j]), pairing).amplitudes
            for j in range(2**k)]
    return np.array(cols).T


def theta_inverse(fock_state, pairing, tol=1e-10):
    """Inverse on the image subspace; anything outside it is an error."""
    theta = theta_matrix(pairing)
    coeffs = theta.conj().T @ fock_state.amplitudes
    recon = theta @ coeffs
    if np.linalg.norm(recon - fock_state.amplitudes) > tol:
        raise OutOfSubspaceError("state has support outside the pair subspace")
    return QuantumState(pairing.num_pairs, coeffs)


# ---------------------------------------------------------------------------
# Hamiltonians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FockHamiltonian:
    """External field alpha_i, diagonal couplings beta_ij, tunneling gamma_ij."""
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=np.float64))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=np.complex128))


def assemble_hamiltonian(h, num_levels):
    """Dense 2^J matrix of sum_i alpha_i n_i + sum_ij beta_ij n_i n_j
    + sum_{i<j} (gamma_ij a_i+ a_j + conj)."""
    J = num_levels
    N = 2**J
    H = np.zeros((N, N), dtype=np.complex128)
    numbers = [number_operator(J, i) for i in range(1, J + 1)]
    for i in range(J):
        if h.alpha[i]:
            H += h.alpha[i] * numbers[i]
    for i in range(J):
        for j in range(J):
            if h.beta[i, j]:
                H += h.beta[i, j] * numbers[i] @ numbers[j]
    for i in range(J):
        for j in range(J):
            if i != j and h.gamma[i, j]:
                ai_dag = creation_matrix(J, i + 1)
                aj = annihilation_matrix(J, j + 1)
                H += h.gamma[i, j] * ai_dag @ aj
    if np.abs(H - H.conj().T).max() > 1e-12:
        raise ValueError("assembled Hamiltonian is not Hermitian")
    return H


def pair_tunneling_sign(pairing, pair_index):
    """Sign the string operator a_lower+ a_upper picks inside the half-filled
    subspace: constant over the subspace because every enclosed pair holds
    exactly one fermion."""
    lower, upper = pairing.pairs[pair_index]
    lo, hi = min(lower, upper), max(lower, upper)
    enclosed = sum(
        1 for (a, b) in pairing.pairs if lo < a < hi and lo < b < hi
    )
    return -1.0 if enclosed % 2 else 1.0


def pair_hamiltonians(one_qubit_h, pairing, pair_index):
    """Fock-side field + tunneling operators matching a one-qubit Hermitian
    H = [[d1, d], [conj(d), d2]] on the given pair."""
    J = pairing.num_levels
    lower, upper = pairing.pairs[pair_index]
    d1, d2 = one_qubit_h[0, 0].real, one_qubit_h[1, 1].real
    d = one_qubit_h[0, 1]
    n_lo = number_operator(J, lower)
    n_up = number_operator(J, upper)
    H0 = d1 * n_lo + d2 * n_up
    sign = pair_tunneling_sign(pairing, pair_index)
    a_lo_dag = creation_matrix(J, lower)
    a_up = annihilation_matrix(J, upper)
    tun = a_lo_dag @ a_up
    H1 = sign * (d * tun + np.conj(d) * tun.conj().T)
    return H0, H1


def intertwine_check(one_qubit_h, pairing=None):
    """|| Htilde theta - theta H || for a single pair (no sign compensation
    needed: nothing is enclosed)."""
    if pairing is None:
        pairing = LevelPairing.default(1)
    if pairing.num_pairs != 1:
        raise ValueError("intertwine check is defined for one pair")
    H0, H1 = pair_hamiltonians(np.asarray(one_qubit_h, dtype=np.complex128), pairing, 0)
    theta = theta_matrix(pairing)
    return float(np.linalg.norm((H0 + H1) @ theta - theta @ np.asarray(one_qubit_h)))


# ---------------------------------------------------------------------------
# control equivalence
# ---------------------------------------------------------------------------

def _expm_hermitian(H):
    evals, evecs = np.linalg.eigh(H)
    return (evecs * np.exp(-1j * evals)) @ evecs.conj().T


def control_equivalence_demo(circuit, pairing):
    """Compile a circuit of one-qubit gates and diagonal two-qubit phases to
    field + tunneling evolutions on the Fock side and report
    || theta(circuit psi) - fock-evolution theta(psi) || for a random input.

    circuit: list of ("1q", qubit, 2x2 Hermitian generator) or
    ("diag", (q1, q2), 4 phases) entries; each gate is exp(-iH).
    """
    k = pairing.num_pairs
    if k > 3:
        raise ValueError("desk-scale limit: <= 3 pairs")
    J = pairing.num_levels
    rng = np.random.default_rng(12)
    psi = rng.standard_normal(2**k) + 1j * rng.standard_normal(2**k)
    psi = psi / np.linalg.norm(psi)

    qubit_state = psi.copy()
    fock_state = theta_matrix(pairing) @ psi
    numbers = [number_operator(J, lvl) for lvl in range(1, J + 1)]
    for kind, where, payload in circuit:
        if kind == "1q":
            H = np.asarray(payload, dtype=np.complex128)
            if np.abs(H - H.conj().T).max() > 1e-12:
                raise ValueError("one-qubit generator must be Hermitian")
            U = _expm_hermitian(H)
            qubit_state = _apply_1q(qubit_state, U, where, k)
            H0, H1 = pair_hamiltonians(H, pairing, where)
            fock_state = _expm_hermitian(H0 + H1) @ fock_state
        elif kind == "diag":
            q1, q2 = where
            phases = np.asarray(payload, dtype=np.float64)  # on (00, 01, 10, 11)
            qubit_state = _apply_diag2(qubit_state, phases, q1, q2, k)
            up1 = numbers[pairing.pairs[q1][1] - 1]
            up2 = numbers[pairing.pairs[q2][1] - 1]
            eye = np.eye(2**J)
            Hf = (
                phases[0] * (eye - up1) @ (eye - up2)
                + phases[1] * (eye - up1) @ up2
                + phases[2] * up1 @ (eye - up2)
                + phases[3] * up1 @ up2
            )
            fock_state = _expm_hermitian(Hf) @ fock_state
        else:
            raise ValueError(f"unsupported circuit element {kind!r}")
    lhs = theta_matrix(pairing) @ qubit_state
    return float(np.linalg.norm(lhs - fock_state))


def _apply_1q(vec, U, q, k):
    t = vec.reshape([2] * k)
    t = np.moveaxis(t, q, -1) @ U.T
    return np.moveaxis(t, -1, q).reshape(-1)


def _apply_diag2(vec, phases, q1, q2, k):
    idx = np.arange(2**k)
    b1 = (idx >> (k - 1 - q1)) & 1
    b2 = (idx >> (k - 1 - q2)) & 1
    code = 2 * b1 + b2
    return vec * np.exp(-1j * phases[code])
