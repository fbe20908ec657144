"""Qutrit gate catalog.

Eight Gell-Mann generators, the J and Sigma SO(3) families, closed-form
Sigma rotations, spectral generator exponentials, the Chrestenson
(ternary Fourier) gate, the ternary SWAP, the controlled SWAP used by
the overlap test, the ternary controlled-add, and the lambda-8 phase
gate. Every unitary in the catalog passes is_unitary at 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg

SQRT2 = math.sqrt(2.0)
OMEGA = np.exp(2j * np.pi / 3.0)


@dataclass(frozen=True)
class GateMatrix:
    """A named operator acting on 1, 2 or 3 qutrits.

    `generator=True` marks hermitian generators (not unitaries) so they
    can live in the same catalog without weakening the unitarity
    invariant on actual gates.
    """

    name: str
    arity: int
    matrix: np.ndarray
    params: tuple[float, ...] = field(default=())
    generator: bool = False

    def __post_init__(self):
        m = linalg.as_matrix(self.matrix)
        dim = 3**self.arity
        if self.arity not in (1, 2, 3):
            raise ValueError(f"unsupported arity {self.arity}")
        if m.shape != (dim, dim):
            raise ValueError(f"gate {self.name}: matrix shape {m.shape} does not match arity {self.arity}")
        if self.generator:
            if not linalg.is_hermitian(m, 1e-12):
                raise ValueError(f"generator {self.name} is not hermitian")
        elif not linalg.is_unitary(m, 1e-12):
            raise ValueError(f"gate {self.name} is not unitary at 1e-12")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))

    @property
    def dim(self) -> int:
        return 3**self.arity


def _gm() -> tuple[np.ndarray, ...]:
    l1 = np.array([[0, 1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
    l2 = np.array([[0, -1j, 0], [1j, 0, 0], [0, 0, 0]], dtype=complex)
    l3 = np.array([[1, 0, 0], [0, -1, 0], [0, 0, 0]], dtype=complex)
    l4 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)
    l5 = np.array([[0, 0, -1j], [0, 0, 0], [1j, 0, 0]], dtype=complex)
    l6 = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
    l7 = np.array([[0, 0, 0], [0, 0, -1j], [0, 1j, 0]], dtype=complex)
    l8 = np.array([[1, 0, 0], [0, 1, 0], [0, 0, -2]], dtype=complex) / math.sqrt(3.0)
    return l1, l2, l3, l4, l5, l6, l7, l8


GELL_MANN: tuple[np.ndarray, ...] = _gm()

SIGMA_X = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2
SIGMA_Y = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2
SIGMA_Z = np.diag([1.0, 0.0, -1.0]).astype(complex)
SIGMA = {"x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}

J1 = 1j * np.array([[0, 0, 0], [0, 0, 1], [0, -1, 0]], dtype=complex)
J2 = 1j * np.array([[0, 0, 1], [0, 0, 0], [-1, 0, 0]], dtype=complex)
J3 = 1j * np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], dtype=complex)
J_FAMILY = (J1, J2, J3)


@dataclass(frozen=True)
class GeneratorSet:
    gellmann: tuple[np.ndarray, ...]
    j_family: tuple[np.ndarray, ...]
    sigma_family: tuple[np.ndarray, ...]


def generator_set() -> GeneratorSet:
    return GeneratorSet(gellmann=GELL_MANN, j_family=J_FAMILY, sigma_family=(SIGMA_X, SIGMA_Y, SIGMA_Z))


def gellmann(i: int) -> GateMatrix:
    """The i-th Gell-Mann generator, i in 1..8. Hermitian, traceless."""
    if not 1 <= i <= 8:
        raise ValueError(f"Gell-Mann index must be in 1..8, got {i}")
    return GateMatrix(name=f"lambda{i}", arity=1, matrix=GELL_MANN[i - 1], generator=True)


def exp_lambda(i: int, theta: float) -> GateMatrix:
    """exp(i * theta * lambda_i), via spectral decomposition.

    Exact for hermitian 3x3 generators; no series truncation.
    """
    if not 1 <= i <= 8:
        raise ValueError(f"Gell-Mann index must be in 1..8, got {i}")
    w, v = np.linalg.eigh(GELL_MANN[i - 1])
    u = (v * np.exp(1j * theta * w)) @ v.conj().T
    return GateMatrix(name=f"exp_lambda{i}", arity=1, matrix=u, params=(theta,))


def _rotation_from_generator(sigma: np.ndarray, xi: float) -> np.ndarray:
    # closed form for generators with S^3 = S
    return np.eye(3, dtype=complex) + (math.cos(xi) - 1.0) * (sigma @ sigma) + 1j * math.sin(xi) * sigma


def sigma_rotation(axis: str, xi: float) -> GateMatrix:
    """Rotation exp(i * xi * Sigma_axis) in closed form.

    Valid because each Sigma satisfies Sigma^3 = Sigma; the rotation
    moves both points of the two-point sphere representation rigidly.
    """
    if axis not in SIGMA:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    return GateMatrix(name=f"r{axis}", arity=1, matrix=_rotation_from_generator(SIGMA[axis], xi), params=(xi,))


def phase8(theta: float) -> GateMatrix:
    """Diagonal relative-phase gate generated by lambda_8."""
    g = exp_lambda(8, theta)
    return GateMatrix(name="phase8", arity=1, matrix=g.matrix, params=(theta,))


def chrestenson() -> GateMatrix:
    """Ternary Fourier gate: each basis state to an equal superposition
    with cube-root-of-unity phases."""
    m = np.array(
        [[1, 1, 1], [1, OMEGA, OMEGA**2], [1, OMEGA**2, OMEGA]],
        dtype=complex,
    ) / math.sqrt(3.0)
    return GateMatrix(name="chrestenson", arity=1, matrix=m)


def swap_gate() -> GateMatrix:
    """Two-qutrit permutation |ij> -> |ji>. An involution."""
    m = np.zeros((9, 9), dtype=complex)
    for i in range(3):
        for j in range(3):
            m[3 * j + i, 3 * i + j] = 1.0
    return GateMatrix(name="swap", arity=2, matrix=m)


def controlled_swap() -> GateMatrix:
    """Three-qutrit controlled SWAP; the first qutrit is the control.

    Control level k applies SWAP^k to the targets, so levels 1 and 2
    both swap (SWAP is an involution). This makes the operator
    hermitian and the overlap-test ancilla statistics closed-form.
    """
    s = swap_gate().matrix
    m = np.zeros((27, 27), dtype=complex)
    m[:9, :9] = np.eye(9)
    m[9:18, 9:18] = s
    m[18:, 18:] = s
    return GateMatrix(name="cswap", arity=3, matrix=m)


def tadd() -> GateMatrix:
    """Ternary controlled-add |i,j> -> |i,(i+j) mod 3>; order three."""
    m = np.zeros((9, 9), dtype=complex)
    for i in range(3):
        for j in range(3):
            m[3 * i + (i + j) % 3, 3 * i + j] = 1.0
    return GateMatrix(name="tadd", arity=2, matrix=m)


def gate_catalog() -> dict[str, GateMatrix]:
    """Every named operator, with sample angles on the parameterized
    entries (recorded in their params field)."""
    cat: dict[str, GateMatrix] = {}
    for i in range(1, 9):
        g = gellmann(i)
        cat[g.name] = g
    for k, jm in enumerate(J_FAMILY, start=1):
        cat[f"j{k}"] = GateMatrix(name=f"j{k}", arity=1, matrix=jm, generator=True)
    for axis, sm in SIGMA.items():
        cat[f"sigma_{axis}"] = GateMatrix(name=f"sigma_{axis}", arity=1, matrix=sm, generator=True)
    cat["rx"] = sigma_rotation("x", math.pi / 2)
    cat["ry"] = sigma_rotation("y", math.pi / 4)
    cat["rz"] = sigma_rotation("z", 4 * math.pi / 3)
    cat["phase8"] = phase8(math.pi / 3)
    cat["exp_lambda1"] = exp_lambda(1, math.pi / 2)
    for g in (chrestenson(), swap_gate(), controlled_swap(), tadd()):
        cat[g.name] = g
    return cat
