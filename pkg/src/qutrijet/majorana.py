"""Two-point sphere codec for pure qutrit states.

A pure qutrit state is equivalent to an unordered pair of points
(theta, phi) on the unit sphere. `encode` builds the amplitude vector
from the four angles, `decode` recovers the points as roots of the
associated second-degree polynomial, and `preparation_unitary` wraps a
state into a unitary whose first column is that state, so circuits can
load it onto a wire initialized at |0>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .gates import GateMatrix

TWO_PI = 2.0 * math.pi
_DEGENERACY_TOL = 1e-15


def wrap_angle(phi: float) -> float:
    """Wrap into [0, 2*pi)."""
    out = math.fmod(float(phi), TWO_PI)
    if out < 0.0:
        out += TWO_PI
    return 0.0 if out == TWO_PI else out


def clamp_polar(theta: float) -> float:
    """Clamp into [0, pi]."""
    return min(max(float(theta), 0.0), math.pi)


@dataclass(frozen=True)
class MajoranaAngles:
    """The four-angle tuple (theta1, theta2, phi1, phi2).

    Polar angles are clamped to [0, pi] and azimuths wrapped to
    [0, 2*pi) on construction; non-finite values are rejected.
    """

    theta1: float
    theta2: float
    phi1: float
    phi2: float

    def __post_init__(self):
        vals = (self.theta1, self.theta2, self.phi1, self.phi2)
        if not all(math.isfinite(float(v)) for v in vals):
            raise ValueError("angles must be finite")
        object.__setattr__(self, "theta1", clamp_polar(self.theta1))
        object.__setattr__(self, "theta2", clamp_polar(self.theta2))
        object.__setattr__(self, "phi1", wrap_angle(self.phi1))
        object.__setattr__(self, "phi2", wrap_angle(self.phi2))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.theta1, self.theta2, self.phi1, self.phi2)


def encode(angles: MajoranaAngles) -> np.ndarray:
    """Amplitudes of the pure state with points (theta1, phi1) and
    (theta2, phi2). Unit norm; the bracket inside the normalization
    lies in [2, 4], so it is never singular."""
    t1, t2, p1, p2 = angles.as_tuple()
    c1, s1 = math.cos(t1 / 2.0), math.sin(t1 / 2.0)
    c2, s2 = math.cos(t2 / 2.0), math.sin(t2 / 2.0)
    raw = np.array(
        [
            math.sqrt(2.0) * c1 * c2,
            np.exp(1j * p1) * s1 * c2 + np.exp(1j * p2) * c1 * s2,
            math.sqrt(2.0) * np.exp(1j * (p1 + p2)) * s1 * s2,
        ],
        dtype=complex,
    )
    bracket = 3.0 + math.cos(t1) * math.cos(t2) + math.sin(t1) * math.sin(t2) * math.cos(p1 - p2)
    gamma = math.sqrt(2.0) / math.sqrt(bracket)
    return gamma * raw


def _validated_state(state) -> np.ndarray:
    psi = linalg.as_vector(state)
    if psi.shape != (3,):
        raise ValueError("expected a single-qutrit amplitude vector of length 3")
    norm = float(np.linalg.norm(psi))
    if norm < 1e-12:
        raise ValueError("zero state cannot be decoded")
    return psi / norm


def decode(state) -> MajoranaAngles:
    """Invert a pure qutrit state to its two sphere points.

    Roots of a2*z^2 + a1*z + a0 with a0 = c2/sqrt(2), a1 = -c1,
    a2 = c0/sqrt(2) give z_k; theta = 2*arctan|z|, phi = arg z. A
    vanishing a2 drops the degree: the missing root sits at the south
    pole (theta = pi). Points are returned sorted by (theta, phi) since
    quadratic roots carry no order.
    """
    c0, c1, c2 = _validated_state(state)
    a0 = c2 / math.sqrt(2.0)
    a1 = -c1
    a2 = c0 / math.sqrt(2.0)

    points: list[tuple[float, float]] = []
    if abs(a2) < _DEGENERACY_TOL:
        if abs(a1) < _DEGENERACY_TOL:
            # both roots at infinity: the state is |2> up to phase
            return MajoranaAngles(math.pi, math.pi, 0.0, 0.0)
        points.append(_point_from_root(-a0 / a1))
        phi_inf = wrap_angle(float(np.angle(-a0 / a1))) if abs(a0) > _DEGENERACY_TOL else 0.0
        points.append((math.pi, phi_inf))
    else:
        for z in _quadratic_roots(a2, a1, a0):
            points.append(_point_from_root(z))

    points.sort()
    (t1, p1), (t2, p2) = points
    return MajoranaAngles(t1, t2, p1, p2)


def _quadratic_roots(a2: complex, a1: complex, a0: complex) -> tuple[complex, complex]:
    # cancellation-free: split off the larger root via q, divide for the other
    disc = np.sqrt(a1 * a1 - 4.0 * a2 * a0 + 0j)
    if abs(a1 + disc) >= abs(a1 - disc):
        q = -(a1 + disc) / 2.0
    else:
        q = -(a1 - disc) / 2.0
    r1 = q / a2
    r2 = a0 / q if abs(q) > 0.0 else 0.0 + 0j
    return r1, r2


def _point_from_root(z: complex) -> tuple[float, float]:
    theta = 2.0 * math.atan(abs(z))
    phi = wrap_angle(float(np.angle(z))) if abs(z) > 0.0 else 0.0
    return (theta, phi)


def preparation_unitary(state, completion=None) -> GateMatrix:
    """Unitary whose first column is the given state.

    The global phase is fixed by making the largest-magnitude component
    real positive (ties resolve to the lowest index). The remaining
    columns come from Gram-Schmidt against a completion basis: by
    default the two canonical basis vectors that follow the pivot
    index, which makes preparation_unitary(|0>) the identity exactly.
    An explicit `completion` (two 3-vectors) overrides the default.
    """
    psi = _validated_state(state)
    k = int(np.argmax(np.abs(psi)))
    pivot = psi[k]
    psi = psi * (pivot.conjugate() / abs(pivot))

    if completion is None:
        cols = [np.eye(3, dtype=complex)[:, (k + 1) % 3], np.eye(3, dtype=complex)[:, (k + 2) % 3]]
    else:
        cols = [linalg.as_vector(c) for c in completion]
        if len(cols) != 2 or any(c.shape != (3,) for c in cols):
            raise ValueError("completion must be two 3-vectors")

    a = np.column_stack([psi, cols[0], cols[1]])
    res = linalg.qr_decompose(a)
    return GateMatrix(name="prep", arity=1, matrix=res.q)


def roundtrip_check(angles: MajoranaAngles) -> float:
    """Ray distance between encode(angles) and encode(decode(encode(angles)))."""
    psi = encode(angles)
    back = encode(decode(psi))
    return linalg.phase_aligned_distance(psi, back)
