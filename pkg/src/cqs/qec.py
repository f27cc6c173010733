"""Three-qubit code against single-qubit measurement: encoding, the twelve
post-measurement states, the measured-recovery unitary, ancilla reset, and
repeated correction cycles.

Layout: qubits 0-2 carry the code, qubits 3-5 are the ancilla.
"""
import csv
import io
from dataclasses import dataclass

import numpy as np

from .rng import ensure_rng
from .statevec import (
    H_GATE,
    GateOp,
    QuantumState,
    X_GATE,
    apply_gate,
    measure,
    outcome_distribution,
)

_SIGNS_ONE = {0b000: 1, 0b100: -1, 0b010: -1, 0b001: -1,
              0b110: 1, 0b101: 1, 0b011: 1, 0b111: -1}


def codeword(logical):
    """The 3-qubit codewords: logical 0 is the uniform all-plus combination,
    logical 1 carries signs by occupation parity pattern."""
    amps = np.full(8, 1 / (2 * np.sqrt(2)), dtype=np.complex128)
    if logical == 1:
        for idx, sign in _SIGNS_ONE.items():
            amps[idx] *= sign
    return amps


def broken_codeword(logical, qubit, outcome):
    """Codeword after measuring coding `qubit` (1-based) with `outcome`:
    project and renormalize."""
    amps = codeword(logical).copy()
    bit = lambda idx: (idx >> (3 - qubit)) & 1
    for idx in range(8):
        if bit(idx) != outcome:
            amps[idx] = 0.0
    return amps / np.linalg.norm(amps)


@dataclass(frozen=True)
class CodeState:
    """Six-qubit state: three coding qubits then three ancilla qubits."""
    state: QuantumState

    def __post_init__(self):
        if self.state.num_qubits != 6:
            raise ValueError("code state uses 3 coding + 3 ancilla qubits")

    def logical_amplitudes(self):
        """(alpha, beta) when the state is a clean encoded word with zero
        ancilla; undefined otherwise."""
        amps = self.state.amplitudes.reshape(8, 8)[:, 0]
        alpha = np.vdot(codeword(0), amps)
        beta = np.vdot(codeword(1), amps)
        return alpha, beta


@dataclass(frozen=True)
class ErrorEvent:
    qubit: int = None   # 1..3 or None
    outcome: int = None

    def __post_init__(self):
        if (self.qubit is None) != (self.outcome is None):
            raise ValueError("outcome present iff qubit present")
        if self.qubit is not None and self.qubit not in (1, 2, 3):
            raise ValueError("coding qubit index must be 1..3")


def encode(alpha, beta):
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-10:
        raise ValueError("logical amplitudes must be normalized")
    coding = alpha * codeword(0) + beta * codeword(1)
    amps = np.zeros(64, dtype=np.complex128)
    amps.reshape(8, 8)[:, 0] = coding
    return CodeState(QuantumState(6, amps))


def inject_measurement_error(code_state, qubit, rng_seed):
    """Projective measurement of coding qubit `qubit` (1-based)."""
    if qubit not in (1, 2, 3):
        raise ValueError("coding qubit index must be 1..3")
    rng = ensure_rng(rng_seed)
    bits, post = measure(code_state.state, [qubit - 1], rng)
    return bits[0], CodeState(post)


def _domain_image_vectors():
    zero_anc = np.zeros(8)
    zero_anc[0] = 1.0
    domain, image = [], []
    for logical in (0, 1):
        domain.append(np.kron(codeword(logical), zero_anc))
        image.append(np.kron(codeword(logical), codeword(0)))
        for qubit in (1, 2, 3):
            for outcome in (0, 1):
                domain.append(np.kron(broken_codeword(logical, qubit, outcome), zero_anc))
                image.append(
                    np.kron(codeword(logical), broken_codeword(0, qubit, outcome))
                )
    return np.array(domain).T, np.array(image).T


def recovery_gram_deviation():
    """Max deviation between the Gram matrices of the 14 domain and image
    vectors (the angle-preservation property the construction relies on)."""
    D, I = _domain_image_vectors()
    return float(np.abs(D.conj().T @ D - I.conj().T @ I).max())


def _complete_basis(vectors):
    """Orthonormalize `vectors` (columns, fixed order) and extend with the
    standard basis by deterministic Gram-Schmidt."""
    dim = vectors.shape[0]
    basis = []
    for col in list(vectors.T) + list(np.eye(dim)):
        v = np.asarray(col, dtype=np.complex128)
        for b in basis:
            v = v - np.vdot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-9:
            basis.append(v / norm)
        if len(basis) == dim:
            break
    return np.array(basis).T


def build_recovery():
    """The 64x64 recovery unitary: broken-word x zero-ancilla maps to clean
    word x broken-zero-ancilla; the partial isometry on the 14 defined
    vectors is completed to a unitary basis-to-basis."""
    dev = recovery_gram_deviation()
    if dev > 1e-10:
        raise AssertionError(f"domain/image Gram mismatch {dev}: no isometry")
    D, I = _domain_image_vectors()
    B_dom = _complete_basis(D)
    B_img = _complete_basis(I)
    return B_img @ B_dom.conj().T


_U_REST_CACHE = {}


def recovery_operator():
    if "U" not in _U_REST_CACHE:
        _U_REST_CACHE["U"] = build_recovery()
    return _U_REST_CACHE["U"]


def correction_cycle(code_state, rng_seed):
    """Apply the recovery unitary, measure the ancilla, reset it to zero.

    Returns (ancilla outcome bits, fresh CodeState)."""
    rng = ensure_rng(rng_seed)
    amps = recovery_operator() @ code_state.state.amplitudes
    state = QuantumState(6, amps)
    bits, state = measure(state, [3, 4, 5], rng)
    # reset: the ancilla is in a known basis state, so clearing it is a
    # relabeling of that factor
    mat = state.amplitudes.reshape(8, 8)
    anc_index = (bits[0] << 2) | (bits[1] << 1) | bits[2]
    fresh = np.zeros_like(mat)
    fresh[:, 0] = mat[:, anc_index]
    return bits, CodeState(QuantumState(6, fresh.reshape(-1)))


def logical_fidelity(code_state, alpha, beta):
    """|<encoded(alpha, beta) | state>| (global phase quotiented out)."""
    target = encode(alpha, beta)
    return float(abs(np.vdot(target.state.amplitudes, code_state.state.amplitudes)))


def ancilla_distribution_after_recovery(code_state):
    amps = recovery_operator() @ code_state.state.amplitudes
    return outcome_distribution(QuantumState(6, amps), [3, 4, 5])


def bit_flip(code_state, qubit):
    """Convenience adapter: X on a coding qubit (reduces to measurement-type
    errors plus local unitaries)."""
    return CodeState(apply_gate(code_state.state, GateOp((qubit - 1,), X_GATE)))


def phase_flip(code_state, qubit):
    """Convenience adapter: conjugation by H turns a phase flip into a bit flip."""
    return CodeState(apply_gate(code_state.state, GateOp((qubit - 1,), H_GATE)))


def run_cycles(alpha, beta, cycles, error_probability, rng_seed):
    """Repeated decoherence-restoration rounds; at most one coding-qubit
    measurement happens between corrections.

    Returns (final CodeState, list of per-cycle records)."""
    rng = ensure_rng(rng_seed)
    state = encode(alpha, beta)
    records = []
    for cycle in range(1, cycles + 1):
        if rng.random() < error_probability:
            qubit = int(rng.integers(1, 4))
            outcome, state = inject_measurement_error(state, qubit, rng)
            event = ErrorEvent(qubit, int(outcome))
        else:
            event = ErrorEvent()
        _, state = correction_cycle(state, rng)
        fid = logical_fidelity(state, alpha, beta)
        records.append(
            {
                "cycle": cycle,
                "error_qubit": event.qubit if event.qubit is not None else "",
                "outcome": event.outcome if event.outcome is not None else "",
                "fidelity": fid,
            }
        )
    return state, records


def cycles_to_csv(records):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["cycle", "error_qubit", "outcome", "fidelity"])
    writer.writeheader()
    for rec in records:
        writer.writerow(rec)
    return buf.getvalue()
