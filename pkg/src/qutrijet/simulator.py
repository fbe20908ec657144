"""Dense statevector engine for n-qutrit registers.

Amplitudes are ordered with qutrit 0 as the most significant ternary
digit. Gate application works at arbitrary wire positions through axis
transposition, so no 3^n x 3^n operator is ever materialized. The
register cap defaults to 8 qutrits (6561 amplitudes) and can be raised
per call.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import linalg
from .gates import GELL_MANN, GateMatrix, chrestenson, controlled_swap

logger = logging.getLogger(__name__)

DEFAULT_MAX_QUTRITS = 8

_clamp_events = 0


def clamp_count() -> int:
    """How many fidelity readouts needed clamping into [0, 1] so far."""
    return _clamp_events


@dataclass(frozen=True)
class QutritState:
    """Amplitude vector over an n-qutrit register."""

    num_qutrits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.shape[0] != 3**self.num_qutrits:
            raise ValueError(f"amplitude vector must have length 3^{self.num_qutrits}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes contain NaN or Inf")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qutrits: int, max_qutrits: int = DEFAULT_MAX_QUTRITS) -> "QutritState":
        _check_register(num_qutrits, max_qutrits)
        amps = np.zeros(3**num_qutrits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qutrits, amps)

    @classmethod
    def from_amplitudes(cls, amplitudes, max_qutrits: int = DEFAULT_MAX_QUTRITS) -> "QutritState":
        amps = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log(amps.size) / np.log(3.0)))
        _check_register(n, max_qutrits)
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _check_register(n: int, max_qutrits: int) -> None:
    if n < 1:
        raise ValueError("register needs at least one qutrit")
    if n > max_qutrits:
        raise ValueError(f"register of {n} qutrits exceeds the cap of {max_qutrits}; raise max_qutrits to allow it")


def _gate_matrix(gate) -> tuple[np.ndarray, int]:
    if isinstance(gate, GateMatrix):
        if gate.generator:
            raise ValueError(f"{gate.name} is a hermitian generator, not a circuit unitary")
        return gate.matrix, gate.arity
    m = linalg.as_matrix(gate)
    dim = m.shape[0]
    arity = {3: 1, 9: 2, 27: 3}.get(dim)
    if arity is None or m.shape != (dim, dim):
        raise ValueError(f"gate matrix of shape {m.shape} is not a 1-, 2- or 3-qutrit operator")
    return m, arity


def apply_gate(state: QutritState, gate, wires) -> QutritState:
    """Apply a gate on the given wires; wires are most-significant-first
    positions matching the gate's own index order."""
    m, arity = _gate_matrix(gate)
    wires = [int(w) for w in wires]
    n = state.num_qutrits
    if len(wires) != arity:
        raise ValueError(f"gate acts on {arity} wires, got {len(wires)}")
    if len(set(wires)) != len(wires):
        raise ValueError("duplicate wires")
    if any(w < 0 or w >= n for w in wires):
        raise ValueError(f"wire out of range for a {n}-qutrit register")

    rest = [a for a in range(n) if a not in wires]
    t = state.amplitudes.reshape((3,) * n)
    t = np.transpose(t, wires + rest)
    t = m @ t.reshape(3**arity, 3 ** (n - arity))
    t = t.reshape((3,) * n)
    inv = np.argsort(wires + rest)
    return QutritState(n, np.transpose(t, inv).reshape(-1))


def probabilities(state: QutritState, wire: int) -> np.ndarray:
    """Marginal probabilities of the three outcomes on one wire."""
    n = state.num_qutrits
    if wire < 0 or wire >= n:
        raise ValueError(f"wire {wire} out of range")
    t = np.abs(state.amplitudes.reshape((3,) * n)) ** 2
    axes = tuple(a for a in range(n) if a != wire)
    return t.sum(axis=axes)


def sample_wire(state: QutritState, wire: int, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial outcome counts from `shots` measurements of one wire."""
    if shots < 1:
        raise ValueError("shots must be positive")
    p = probabilities(state, wire)
    p = np.clip(p, 0.0, None)
    return rng.multinomial(shots, p / p.sum())


def reduced_density(state: QutritState, wire: int) -> np.ndarray:
    """Partial trace onto a single wire. Hermitian, unit trace."""
    n = state.num_qutrits
    if wire < 0 or wire >= n:
        raise ValueError(f"wire {wire} out of range")
    t = state.amplitudes.reshape((3,) * n)
    t = np.moveaxis(t, wire, 0).reshape(3, 3 ** (n - 1))
    rho = t @ t.conj().T
    return 0.5 * (rho + rho.conj().T)


def purity(rho) -> float:
    rho = linalg.as_matrix(rho)
    return float(np.real(np.trace(rho @ rho)))


def bloch_from_density(rho) -> np.ndarray:
    """Eight real components n_k = (sqrt(3)/2) tr(rho lambda_k)."""
    rho = linalg.as_matrix(rho)
    if rho.shape != (3, 3):
        raise ValueError("density matrix must be 3x3")
    if not linalg.is_hermitian(rho, 1e-10):
        raise ValueError("density matrix is not hermitian")
    if abs(np.trace(rho) - 1.0) > 1e-10:
        raise ValueError("density matrix trace must be 1")
    return np.array([np.sqrt(3.0) / 2.0 * np.real(np.trace(rho @ lam)) for lam in GELL_MANN])


def density_from_bloch(n) -> np.ndarray:
    """rho = (1/3)(I + sqrt(3) n . lambda); rejects unphysical vectors."""
    n = np.asarray(n, dtype=float)
    if n.shape != (8,):
        raise ValueError("Bloch vector must have 8 real components")
    rho = np.eye(3, dtype=complex)
    for nk, lam in zip(n, GELL_MANN):
        rho = rho + np.sqrt(3.0) * nk * lam
    rho = rho / 3.0
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("Bloch vector lies outside the physical state space")
    return rho


def _swap_block(state: QutritState, ancilla: int, pairs) -> QutritState:
    ch = chrestenson()
    cs = controlled_swap()
    out = apply_gate(state, ch, [ancilla])
    for a, b in pairs:
        out = apply_gate(out, cs, [ancilla, a, b])
    return apply_gate(out, linalg.adjoint(ch.matrix), [ancilla])


def _validate_test_wires(state: QutritState, ancilla: int, pairs) -> list[tuple[int, int]]:
    pairs = [(int(a), int(b)) for a, b in pairs]
    used = [ancilla] + [w for p in pairs for w in p]
    if len(set(used)) != len(used):
        raise ValueError("ancilla and pair wires must all be distinct")
    if not pairs:
        raise ValueError("at least one wire pair is required")
    p_anc = probabilities(state, ancilla)
    if abs(p_anc[0] - 1.0) > 1e-9:
        raise ValueError("ancilla must be in |0> before the overlap test")
    return pairs


def _readout_fidelity(p0: float) -> float:
    global _clamp_events
    f = (9.0 * p0 - 5.0) / 4.0
    if f < 0.0 or f > 1.0:
        _clamp_events += 1
        logger.info("fidelity %.3e clamped into [0, 1]", f)
        f = min(max(f, 0.0), 1.0)
    return f


def swap_test_fidelity(state: QutritState, ancilla: int, pairs, shots: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Overlap tr(rho_A sigma_B) of the joint paired subsystems.

    Runs the interference block (ternary Fourier on the ancilla, one
    controlled SWAP per pair sharing that ancilla, inverse Fourier) and
    maps the ancilla ground probability through F = (9 P(0) - 5) / 4.
    Exact readout by default; `shots` switches to seeded sampling.
    """
    pairs = _validate_test_wires(state, ancilla, pairs)
    out = _swap_block(state, ancilla, pairs)
    if shots is None:
        p0 = float(probabilities(out, ancilla)[0])
    else:
        if rng is None:
            raise ValueError("shot sampling requires an explicit rng for reproducibility")
        counts = sample_wire(out, ancilla, shots, rng)
        p0 = counts[0] / shots
    return _readout_fidelity(p0)


def swap_test_fidelity_sequential(state: QutritState, ancilla: int, pairs) -> list[float]:
    """Per-pair overlaps, each measured by its own test from the same
    pre-test state (the ancilla is reused, never entangled across
    pairs)."""
    pairs = _validate_test_wires(state, ancilla, pairs)
    out = []
    for pair in pairs:
        tested = _swap_block(state, ancilla, [pair])
        out.append(_readout_fidelity(float(probabilities(tested, ancilla)[0])))
    return out


def state_to_json(state: QutritState) -> dict:
    """Snapshot for external cross-checking."""
    return {
        "num_qutrits": state.num_qutrits,
        "basis_order": "qutrit 0 most significant",
        "amplitudes": [[float(a.real), float(a.imag)] for a in state.amplitudes],
    }
