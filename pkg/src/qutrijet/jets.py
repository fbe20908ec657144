"""Jet ingestion, angle features, and a synthetic jet generator.

Per-constituent kinematics are mapped onto the four-angle encoding:
the polar pair comes from the momentum direction relative to the jet
axis, the azimuthal pair from one of two jet-structure feature sets
(mode A: mass and energy terms; mode B: impact parameters).

File schemas (documented fixtures live under tests/fixtures):
  CSV: one row per constituent, header required, columns
       jet_id, jet_pt, jet_mass, jet_energy, label,
       pt, delta_eta, delta_phi, energy, d0, dz
       Constituent rows of one jet must be consecutive; a change of
       jet_id starts a new jet (ids separate neighbours only, so
       concatenated files work without renumbering). Jet-level fields
       are taken from the jet's first row.
  JSONL: one jet object per line,
       {"jet_pt": .., "jet_mass": .., "jet_energy": .., "label": ..,
        "constituents": [{"pt": .., "delta_eta": .., "delta_phi": ..,
                          "energy": .., "d0": .., "dz": ..}, ..]}

Naming note: the d0 column is treated as the longitudinal impact
parameter and dz as the transverse one, matching the upstream data
convention this package follows (the reverse of common usage).
"""

from __future__ import annotations

import csv
import json
import math
import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .majorana import MajoranaAngles, wrap_angle

CSV_COLUMNS = [
    "jet_id",
    "jet_pt",
    "jet_mass",
    "jet_energy",
    "label",
    "pt",
    "delta_eta",
    "delta_phi",
    "energy",
    "d0",
    "dz",
]

BACKGROUND_LABEL = "background"

_SYNTH_KINDS = ("qcd-like", "two-prong", "three-prong")


@contextmanager
def atomic_write(path, mode: str = "w"):
    """Write to a temp file in the target directory, then rename.

    Guarantees no partial output file survives a failure.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, newline="" if "b" not in mode else None) as handle:
            yield handle
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


@dataclass(frozen=True)
class JetConstituent:
    """One jet constituent. delta_phi is wrapped to (-pi, pi] on
    construction; pt and energy must be nonnegative and finite."""

    pt: float
    delta_eta: float
    delta_phi: float
    energy: float = 0.0
    d0: float = 0.0
    dz: float = 0.0

    def __post_init__(self):
        # builtin floats throughout so repr/json stay plain numbers
        for name in ("pt", "delta_eta", "delta_phi", "energy", "d0", "dz"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError("constituent fields must be finite")
            object.__setattr__(self, name, v)
        if self.pt < 0.0 or self.energy < 0.0:
            raise ValueError("pt and energy must be nonnegative")
        dphi = math.fmod(self.delta_phi, 2.0 * math.pi)
        if dphi <= -math.pi:
            dphi += 2.0 * math.pi
        elif dphi > math.pi:
            dphi -= 2.0 * math.pi
        object.__setattr__(self, "delta_phi", dphi)


@dataclass(frozen=True)
class JetEvent:
    """A jet with its constituents, kept sorted by descending pt."""

    constituents: tuple[JetConstituent, ...]
    jet_pt: float
    jet_mass: float
    jet_energy: float
    label: str = BACKGROUND_LABEL

    def __post_init__(self):
        if len(self.constituents) < 1:
            raise ValueError("a jet needs at least one constituent")
        for name in ("jet_pt", "jet_mass", "jet_energy"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not (math.isfinite(self.jet_pt) and self.jet_pt > 0.0):
            raise ValueError("jet_pt must be positive")
        ordered = tuple(sorted(self.constituents, key=lambda c: -c.pt))
        object.__setattr__(self, "constituents", ordered)


def base_angles(c: JetConstituent, jet: JetEvent, f: float) -> tuple[float, float]:
    """Momentum-direction pair: a polar angle centered on the equator
    (so on-axis constituents avoid the degenerate poles) and an
    azimuth, both modulated by the pt fraction."""
    if jet.jet_pt <= 0.0:
        raise ValueError("jet_pt must be positive")
    ratio = c.pt / jet.jet_pt
    theta = min(max(f * ratio * c.delta_eta + math.pi / 2.0, 0.0), math.pi)
    phi = wrap_angle(f * ratio * c.delta_phi)
    return theta, phi


def constituent_mass(c: JetConstituent) -> float:
    """Mass proxy from (E, p) with p = pt*cosh(delta_eta); zero when the
    energy field is absent or below the momentum."""
    if c.energy <= 0.0:
        return 0.0
    p = c.pt * math.cosh(c.delta_eta)
    return math.sqrt(max(c.energy**2 - p**2, 0.0))


def extended_features(c: JetConstituent, jet: JetEvent, f: float) -> tuple[float, float, float, float]:
    """The four jet-structure products, each wrapped to [0, 2*pi) for
    use as an azimuth."""
    ratio = c.pt / jet.jet_pt
    sigma_m = wrap_angle(f * ratio * (constituent_mass(c) - jet.jet_mass))
    eps = wrap_angle(f * ratio * c.energy)
    rho0 = wrap_angle(f * ratio * c.d0)
    rhoz = wrap_angle(f * ratio * c.dz)
    return sigma_m, eps, rho0, rhoz


def encode_event(jet: JetEvent, mode: str = "A", f: float = math.pi, max_particles: int = 4) -> list[MajoranaAngles]:
    """Angle tuples for the leading constituents, zero-padded to
    exactly max_particles entries.

    theta1 is the polar base angle; theta2 is the circular distance of
    the base azimuth from zero, folded into [0, pi] so that on-axis
    constituents land near the zero tuple. Mode A uses (mass, energy)
    features as the azimuths, mode B the impact parameters.
    """
    mode = str(mode).upper()
    if mode not in ("A", "B"):
        raise ValueError(f"mode must be A or B, got {mode!r}")
    if max_particles < 1:
        raise ValueError("max_particles must be at least 1")

    out: list[MajoranaAngles] = []
    for c in jet.constituents[:max_particles]:
        theta, phi = base_angles(c, jet, f)
        theta2 = math.acos(math.cos(phi))  # circular distance from zero, folded into [0, pi]
        sigma_m, eps, rho0, rhoz = extended_features(c, jet, f)
        phi1, phi2 = (sigma_m, eps) if mode == "A" else (rho0, rhoz)
        out.append(MajoranaAngles(theta, theta2, phi1, phi2))
    while len(out) < max_particles:
        out.append(MajoranaAngles(0.0, 0.0, 0.0, 0.0))
    return out


@dataclass(frozen=True)
class LoadResult:
    """Parsed events plus (row_number, reason) for every rejected row."""

    events: list
    rejected: list


def _format_for(path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in ("csv", "jsonl"):
            raise ValueError(f"format must be csv or jsonl, got {fmt!r}")
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise ValueError(f"cannot infer format from {path!r}; pass format explicitly")


def load_events(path, fmt: str | None = None, limit: int | None = None) -> LoadResult:
    """Parse a jet file. Malformed rows are reported with their row
    number, never silently dropped; a wrong header or unreadable file
    is a hard error."""
    fmt = _format_for(path, fmt)
    if fmt == "csv":
        result = _load_csv(path)
    else:
        result = _load_jsonl(path)
    if limit is not None:
        result = LoadResult(events=result.events[: int(limit)], rejected=result.rejected)
    return result


def _load_csv(path) -> LoadResult:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            return LoadResult(events=[], rejected=[])
        if header != CSV_COLUMNS:
            raise ValueError(f"{path}: row 1: expected header {','.join(CSV_COLUMNS)}, got {','.join(header)}")

        # constituent rows of one jet must be consecutive; a change of
        # jet_id starts a new jet, so ids only separate neighbours and
        # concatenated files need no global renumbering
        rejected: list[tuple[int, str]] = []
        events: list[JetEvent] = []
        current_id: str | None = None
        current: dict | None = None

        def flush():
            if current is not None and current["constituents"]:
                jet_pt, jet_mass, jet_energy, label = current["jet"]
                events.append(
                    JetEvent(
                        constituents=tuple(current["constituents"]),
                        jet_pt=jet_pt,
                        jet_mass=jet_mass,
                        jet_energy=jet_energy,
                        label=label,
                    )
                )

        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                if len(row) != len(CSV_COLUMNS):
                    raise ValueError(f"expected {len(CSV_COLUMNS)} columns, got {len(row)}")
                rec = dict(zip(CSV_COLUMNS, row))
                const = JetConstituent(
                    pt=float(rec["pt"]),
                    delta_eta=float(rec["delta_eta"]),
                    delta_phi=float(rec["delta_phi"]),
                    energy=float(rec["energy"]),
                    d0=float(rec["d0"]),
                    dz=float(rec["dz"]),
                )
                jet_fields = (float(rec["jet_pt"]), float(rec["jet_mass"]), float(rec["jet_energy"]), rec["label"])
            except (ValueError, KeyError) as exc:
                rejected.append((row_no, str(exc)))
                continue
            if rec["jet_id"] != current_id:
                flush()
                current_id = rec["jet_id"]
                current = {"jet": jet_fields, "constituents": []}
            current["constituents"].append(const)
        flush()
        return LoadResult(events=events, rejected=rejected)


def _load_jsonl(path) -> LoadResult:
    events: list[JetEvent] = []
    rejected: list[tuple[int, str]] = []
    with open(path, encoding="utf-8") as handle:
        for row_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                consts = tuple(
                    JetConstituent(
                        pt=float(c["pt"]),
                        delta_eta=float(c["delta_eta"]),
                        delta_phi=float(c["delta_phi"]),
                        energy=float(c.get("energy", 0.0)),
                        d0=float(c.get("d0", 0.0)),
                        dz=float(c.get("dz", 0.0)),
                    )
                    for c in obj["constituents"]
                )
                events.append(
                    JetEvent(
                        constituents=consts,
                        jet_pt=float(obj["jet_pt"]),
                        jet_mass=float(obj["jet_mass"]),
                        jet_energy=float(obj["jet_energy"]),
                        label=str(obj.get("label", BACKGROUND_LABEL)),
                    )
                )
            except (ValueError, KeyError, TypeError) as exc:
                rejected.append((row_no, str(exc)))
    return LoadResult(events=events, rejected=rejected)


def save_events(events, path, fmt: str | None = None) -> None:
    """Write events in the documented schema. Floats use shortest
    round-trip formatting, so write-then-load is bit exact."""
    fmt = _format_for(path, fmt)
    if fmt == "csv":
        with atomic_write(path) as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_COLUMNS)
            for jet_id, jet in enumerate(events):
                for c in jet.constituents:
                    writer.writerow(
                        [
                            jet_id,
                            repr(jet.jet_pt),
                            repr(jet.jet_mass),
                            repr(jet.jet_energy),
                            jet.label,
                            repr(c.pt),
                            repr(c.delta_eta),
                            repr(c.delta_phi),
                            repr(c.energy),
                            repr(c.d0),
                            repr(c.dz),
                        ]
                    )
    else:
        with atomic_write(path) as handle:
            for jet in events:
                handle.write(
                    json.dumps(
                        {
                            "jet_pt": jet.jet_pt,
                            "jet_mass": jet.jet_mass,
                            "jet_energy": jet.jet_energy,
                            "label": jet.label,
                            "constituents": [
                                {
                                    "pt": c.pt,
                                    "delta_eta": c.delta_eta,
                                    "delta_phi": c.delta_phi,
                                    "energy": c.energy,
                                    "d0": c.d0,
                                    "dz": c.dz,
                                }
                                for c in jet.constituents
                            ],
                        }
                    )
                    + "\n"
                )


def synth_jets(kind: str, n: int, seed: int) -> list[JetEvent]:
    """Seeded toy jets in normalized units (jet_pt near 1).

    qcd-like: one collimated core plus soft diffuse radiation.
    two-prong / three-prong: 2 or 3 angularly separated cores with
    progressively larger mass, spread, and impact parameters.
    """
    if kind not in _SYNTH_KINDS:
        raise ValueError(f"kind must be one of {_SYNTH_KINDS}, got {kind!r}")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng([int(seed), _SYNTH_KINDS.index(kind)])

    jets = []
    for _ in range(n):
        jets.append(_one_synth_jet(kind, rng))
    return jets


def _one_synth_jet(kind: str, rng: np.random.Generator) -> JetEvent:
    jet_pt = float(rng.uniform(0.9, 1.1))

    if kind == "qcd-like":
        centers = [(0.0, 0.0)]
        prong_shares = np.array([0.62])
        mass = abs(float(rng.normal(0.12, 0.025)))
        ip_scale = 0.010
        core_spread = 0.035
    elif kind == "two-prong":
        sep = max(float(rng.normal(0.50, 0.05)), 0.2)
        alpha = float(rng.uniform(0.0, 2.0 * np.pi))
        centers = [
            (0.5 * sep * np.cos(alpha), 0.5 * sep * np.sin(alpha)),
            (-0.5 * sep * np.cos(alpha), -0.5 * sep * np.sin(alpha)),
        ]
        prong_shares = np.array([0.42, 0.34])
        mass = abs(float(rng.normal(0.38, 0.035)))
        ip_scale = 0.045
        core_spread = 0.035
    else:
        radius = max(float(rng.normal(0.42, 0.04)), 0.2)
        alpha = float(rng.uniform(0.0, 2.0 * np.pi))
        centers = [
            (radius * np.cos(alpha + 2.0 * np.pi * k / 3.0), radius * np.sin(alpha + 2.0 * np.pi * k / 3.0))
            for k in range(3)
        ]
        prong_shares = np.array([0.33, 0.27, 0.21])
        mass = abs(float(rng.normal(0.60, 0.045)))
        ip_scale = 0.080
        core_spread = 0.035

    prong_shares = prong_shares * (1.0 + rng.normal(0.0, 0.04, size=prong_shares.shape))
    consts: list[tuple[float, float, float]] = []  # (pt share, eta, phi)
    for (ceta, cphi), share in zip(centers, prong_shares):
        for sub in (0.80, 0.20):  # leading + subleading core particle
            consts.append(
                (
                    share * sub,
                    ceta + float(rng.normal(0.0, core_spread)),
                    cphi + float(rng.normal(0.0, core_spread)),
                )
            )

    soft_share = max(1.0 - sum(s for s, _, _ in consts), 0.05)
    n_soft = int(rng.integers(4, 9))
    soft_weights = rng.dirichlet(np.ones(n_soft))
    for w in soft_weights:
        consts.append(
            (
                soft_share * float(w),
                float(rng.normal(0.0, 0.30)),
                float(rng.normal(0.0, 0.30)),
            )
        )

    total = sum(s for s, _, _ in consts)
    out = []
    for share, eta, phi in consts:
        pt = jet_pt * share / total
        energy = pt * math.cosh(eta) * (1.0 + abs(float(rng.normal(0.0, 0.04))))
        out.append(
            JetConstituent(
                pt=pt,
                delta_eta=eta,
                delta_phi=phi,
                energy=energy,
                d0=float(rng.normal(0.0, ip_scale)),
                dz=float(rng.normal(0.0, ip_scale)),
            )
        )

    jet_energy = sum(c.energy for c in out)
    return JetEvent(
        constituents=tuple(out),
        jet_pt=jet_pt,
        jet_mass=mass,
        jet_energy=jet_energy,
        label=BACKGROUND_LABEL if kind == "qcd-like" else kind,
    )
