"""Built-in reference fixtures.

Every fixture compares a quantity computed by this package against an
independently recorded reference value (worked single-qutrit states, a
preparation unitary, rotation tables, a composite rotation, and exact
operator-algebra identities). `run_fixtures` returns structured
results; `report` renders one PASS/FAIL line per fixture with the
measured value next to its reference.

Two caveats about the reference tables, also emitted in the report:

* The y-rotation reference table carries two transcription slips at
  entries (1, 3) and (3, 1): as tabulated, row 3 has squared norm 1.87,
  so the table itself is not unitary there. The seven clean entries are
  checked against the table; the two corrupt entries are checked
  against the closed-form rotation, whose value at both is
  (1 - cos(pi/4))/2 = 0.1464...
* The reference preparation matrix carries solver-dependent phases on
  each column (they are not one global phase), so columns are compared
  after aligning each column's phase; the first column is additionally
  pinned to the worked state at 1e-10 up to phase, and unitarity is
  checked at 1e-12.

`mutate_sigma2` injects a seeded hermitian perturbation into the
y-rotation generator before the fixtures run. It exists to exercise
the failure path (any nonzero value must trip the y-rotation, composite
and generator-identity fixtures); production callers leave it at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .gates import GELL_MANN, SIGMA, _rotation_from_generator, chrestenson, swap_gate
from .majorana import MajoranaAngles, decode, encode, preparation_unitary

PI = math.pi

WORKED_ANGLES = MajoranaAngles(PI / 2, PI / 4, 3 * PI / 2, 4 * PI / 3)
REF_STATE = np.array([0.69, -0.10 - 0.66j, -0.25 + 0.14j])

# pin for a nearby angle tuple, freezing the encoding formula exactly
PIN_ANGLES = MajoranaAngles(PI / 2, PI / 4, 2 * PI / 3, 3 * PI / 4)
PIN_STATE = np.array(
    [
        0.6808144038171723 + 0.0j,
        -0.3817055205943122 + 0.5579132544823148j,
        -0.0729876331714398 - 0.272393555320013j,
    ]
)

REF_PREP = np.array(
    [
        [-0.69 + 0.00j, -0.52 - 0.07j, 0.29 - 0.41j],
        [0.10 + 0.66j, -0.10 - 0.21j, 0.58 + 0.41j],
        [0.25 - 0.14j, -0.81 + 0.07j, -0.29 + 0.41j],
    ]
)
# completion used by the reference matrix: the y-generator eigenvectors
# with eigenvalues 0 and +1
COMPLETION_V0 = np.array([1.0, 0.0, 1.0]) / math.sqrt(2.0)
COMPLETION_VPLUS = np.array([0.5, 1j / math.sqrt(2.0), -0.5])

REF_RX = np.array([[0.5, 0.7j, -0.5], [0.7j, 0.0, 0.7j], [-0.5, 0.7j, 0.5]])
REF_RY = np.array([[0.9, 0.5, 0.2], [-0.5, 0.7, 0.5], [0.9, -0.5, 0.9]])
RY_CLEAN = np.ones((3, 3), dtype=bool)
RY_CLEAN[0, 2] = RY_CLEAN[2, 0] = False
RY_CORNER = (1.0 - math.cos(PI / 4)) / 2.0
REF_RZ = np.diag([-0.5 - 0.9j, 1.0, -0.5 + 0.9j])
REF_COMPOSITE = np.array([-0.34 - 0.66j, -0.54 + 0.29j, 0.06 + 0.25j])

RX_ANGLE, RY_ANGLE, RZ_ANGLE = PI / 2, PI / 4, 4 * PI / 3


@dataclass(frozen=True)
class FixtureResult:
    name: str
    expected: str
    measured: str
    deviation: float
    tol: float
    passed: bool


def _fmt_c(z: complex) -> str:
    if abs(z.imag) < 5e-13:
        return f"{z.real:.4f}"
    return f"{z.real:.4f}{z.imag:+.4f}i"


def _worst(measured: np.ndarray, expected: np.ndarray, mask: np.ndarray | None = None) -> tuple[float, str, str]:
    m = np.asarray(measured)
    e = np.asarray(expected)
    diff = np.abs(m - e)
    if mask is not None:
        diff = np.where(mask, diff, -1.0)
    idx = np.unravel_index(int(np.argmax(diff)), diff.shape)
    pos = idx[0] if len(idx) == 1 else tuple(int(i) for i in idx)
    return float(diff[idx]), f"{_fmt_c(complex(e[idx]))} at {pos}", f"{_fmt_c(complex(m[idx]))} at {pos}"


def _result(name: str, measured, expected, tol: float, mask=None) -> FixtureResult:
    dev, exp_s, mea_s = _worst(measured, expected, mask)
    return FixtureResult(name, exp_s, mea_s, dev, tol, dev <= tol)


def _scalar_result(name: str, deviation: float, tol: float, expected: str, measured: str) -> FixtureResult:
    return FixtureResult(name, expected, measured, float(deviation), tol, float(deviation) <= tol)


def run_fixtures(mutate_sigma2: float = 0.0, seed: int = 0) -> list[FixtureResult]:
    sigma_y = SIGMA["y"].copy()
    if mutate_sigma2 != 0.0:
        rng = np.random.default_rng(seed)
        h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        sigma_y = sigma_y + mutate_sigma2 * (h + h.conj().T) / 2.0

    def r_x(xi):
        return _rotation_from_generator(SIGMA["x"], xi)

    def r_y(xi):
        return _rotation_from_generator(sigma_y, xi)

    def r_z(xi):
        return _rotation_from_generator(SIGMA["z"], xi)

    out: list[FixtureResult] = []

    # -- worked encoding
    psi = encode(WORKED_ANGLES)
    out.append(_result("encode-reference-state", psi, REF_STATE, 0.01))
    out.append(_result("encode-exact-pin", encode(PIN_ANGLES), PIN_STATE, 1e-9))

    # -- preparation unitary
    prep = preparation_unitary(psi, completion=(COMPLETION_V0, COMPLETION_VPLUS)).matrix
    first_dev = linalg.phase_aligned_distance(prep[:, 0], psi)
    out.append(_scalar_result("prep-first-column", first_dev, 1e-10, "worked state (up to phase)", f"distance {first_dev:.2e}"))
    unit_dev = float(np.max(np.abs(prep.conj().T @ prep - np.eye(3))))
    out.append(_scalar_result("prep-unitarity", unit_dev, 1e-12, "identity", f"max |U*U - I| = {unit_dev:.2e}"))
    aligned = np.column_stack([linalg.align_phase(REF_PREP[:, k], prep[:, k]) for k in range(3)])
    out.append(_result("prep-reference-matrix", aligned, REF_PREP, 0.01))
    front = linalg.align_phase(REF_PREP[:, :2].reshape(-1, order="F"), prep[:, :2].reshape(-1, order="F"))
    out.append(_result("prep-front-columns-common-phase", front.reshape((3, 2), order="F"), REF_PREP[:, :2], 0.01))

    # -- decode roundtrip on the worked state
    rt = linalg.phase_aligned_distance(psi, encode(decode(psi)))
    out.append(_scalar_result("decode-roundtrip", rt, 1e-9, "identical ray", f"ray distance {rt:.2e}"))

    # -- rotation tables
    out.append(_result("rotation-x-table", r_x(RX_ANGLE), REF_RX, 0.05))
    out.append(_result("rotation-z-table", r_z(RZ_ANGLE), REF_RZ, 0.05))
    ry = r_y(RY_ANGLE)
    out.append(_result("rotation-y-table-clean-entries", ry, REF_RY, 0.05, mask=RY_CLEAN))
    corners = np.array([ry[0, 2], ry[2, 0]])
    out.append(_result("rotation-y-corrected-corners", corners, np.array([RY_CORNER, RY_CORNER]), 1e-12))

    # -- composite rotation on the worked state
    combo = r_z(RZ_ANGLE) @ r_y(RY_ANGLE) @ r_x(RX_ANGLE) @ psi
    out.append(_result("composite-rotation", combo, REF_COMPOSITE, 0.01))

    # -- operator algebra identities
    tr_dev = max(
        abs(np.trace(GELL_MANN[k] @ GELL_MANN[l]) - (2.0 if k == l else 0.0))
        for k in range(8)
        for l in range(8)
    )
    out.append(_scalar_result("generator-trace-orthogonality", float(tr_dev), 1e-14, "tr = 2*delta", f"max deviation {tr_dev:.2e}"))

    fam_dev = max(
        float(np.max(np.abs(SIGMA["x"] - (GELL_MANN[0] + GELL_MANN[5]) / math.sqrt(2.0)))),
        float(np.max(np.abs(sigma_y - (GELL_MANN[1] + GELL_MANN[6]) / math.sqrt(2.0)))),
        float(np.max(np.abs(SIGMA["z"] - np.diag([1.0, 0.0, -1.0])))),
        float(np.max(np.abs(SIGMA["x"] @ SIGMA["x"] @ SIGMA["x"] - SIGMA["x"]))),
        float(np.max(np.abs(sigma_y @ sigma_y @ sigma_y - sigma_y))),
        float(np.max(np.abs(SIGMA["z"] @ SIGMA["z"] @ SIGMA["z"] - SIGMA["z"]))),
    )
    out.append(_scalar_result("spin-generator-identities", fam_dev, 1e-14, "exact algebra", f"max deviation {fam_dev:.2e}"))

    ch = chrestenson().matrix
    w = np.exp(2j * PI / 3)
    ch_ref = np.array([[1, 1, 1], [1, w, w**2], [1, w**2, w]]) / math.sqrt(3.0)
    ch_dev = max(
        float(np.max(np.abs(ch - ch_ref))),
        float(np.max(np.abs(ch.conj().T @ ch - np.eye(3)))),
    )
    out.append(_scalar_result("ternary-fourier-gate", ch_dev, 1e-12, "exact + unitary", f"max deviation {ch_dev:.2e}"))

    s = swap_gate().matrix
    perm_dev = 0.0
    for i in range(3):
        for j in range(3):
            v = np.zeros(9)
            v[3 * i + j] = 1.0
            target = np.zeros(9)
            target[3 * j + i] = 1.0
            perm_dev = max(perm_dev, float(np.max(np.abs(s @ v - target))))
    perm_dev = max(perm_dev, float(np.max(np.abs(s @ s - np.eye(9)))))
    out.append(_scalar_result("ternary-swap-involution", perm_dev, 1e-12, "permutation, S^2 = I", f"max deviation {perm_dev:.2e}"))

    return out


def report(results: list[FixtureResult]) -> str:
    lines = []
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(
            f"[{status}] {r.name:<{width}}  measured {r.measured}  vs reference {r.expected}  "
            f"(deviation {r.deviation:.2e}, tol {r.tol:.0e})"
        )
    n_fail = sum(not r.passed for r in results)
    lines.append("")
    lines.append(f"{len(results) - n_fail}/{len(results)} fixtures passed")
    lines.append("")
    lines.append("notes:")
    lines.append("  * rotation-y table entries (1,3) and (3,1) are transcription slips in the")
    lines.append("    reference (row 3 squared norm 1.87, non-unitary); they are checked against")
    lines.append("    the closed form (1 - cos(pi/4))/2 instead of the table.")
    lines.append("  * the reference preparation matrix carries per-column solver phases; columns")
    lines.append("    are compared after per-column phase alignment (plus strict first-column,")
    lines.append("    unitarity, and shared-phase checks).")
    return "\n".join(lines)
