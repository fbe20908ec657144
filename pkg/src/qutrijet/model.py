"""Variational qutrit autoencoder.

Circuit layout: data wires first (latent block then trash block), one
reference wire per trash wire, one ancilla wire last. Each data wire is
loaded through a preparation unitary built from its constituent's
angle tuple, followed by per-layer rotation triples and ternary
controlled-add entanglers, and finally the overlap test between trash
and reference wires through the shared ancilla.

Two equivalent cost engines are provided. The `circuit` engine runs the
literal register including references and ancilla. The `reduced`
engine evolves only the data wires and reads the fidelity as the
population of the trash-ground subspace; this is the same quantity
because references and ancilla stay in |0> until the test block, and
the equality is pinned by tests at 1e-12. Training uses the reduced
engine, batched over events.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import jets, simulator
from .gates import sigma_rotation, tadd
from .majorana import MajoranaAngles, preparation_unitary
from .simulator import DEFAULT_MAX_QUTRITS, QutritState

MODEL_VERSION = 1

_SHIFT_SMALL = math.pi / 4.0
_SHIFT_LARGE = 3.0 * math.pi / 4.0
_SHIFT_C1 = (math.sqrt(2.0) + 1.0) / (2.0 * math.sqrt(2.0))
_SHIFT_C2 = (math.sqrt(2.0) - 1.0) / (2.0 * math.sqrt(2.0))


@dataclass(frozen=True)
class QaeTopology:
    """Wire counts: reference count always equals trash count and a
    single ancilla is implied. `entangler_pairs=None` means every
    ordered data-wire pair (i, j) with i < j, control on i."""

    latent: int = 1
    trash: int = 3
    layers: int = 1
    entangler_pairs: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if self.latent < 1 or self.trash < 1:
            raise ValueError("latent and trash counts must be at least 1")
        if self.layers < 0:
            raise ValueError("layers must be nonnegative")
        if self.entangler_pairs is not None:
            pairs = tuple((int(i), int(j)) for i, j in self.entangler_pairs)
            for i, j in pairs:
                if not (0 <= i < j < self.data_qutrits):
                    raise ValueError(f"entangler pair ({i}, {j}) is not an ordered data-wire pair")
            object.__setattr__(self, "entangler_pairs", pairs)

    @property
    def data_qutrits(self) -> int:
        return self.latent + self.trash

    @property
    def reference(self) -> int:
        return self.trash

    @property
    def total_qutrits(self) -> int:
        return self.latent + 2 * self.trash + 1

    @property
    def data_wires(self) -> range:
        return range(self.data_qutrits)

    @property
    def trash_wires(self) -> range:
        return range(self.latent, self.data_qutrits)

    @property
    def reference_wires(self) -> range:
        return range(self.data_qutrits, self.data_qutrits + self.trash)

    @property
    def ancilla_wire(self) -> int:
        return self.data_qutrits + self.trash

    def pairs(self) -> tuple[tuple[int, int], ...]:
        if self.entangler_pairs is not None:
            return self.entangler_pairs
        d = self.data_qutrits
        return tuple((i, j) for i in range(d) for j in range(i + 1, d))

    def to_dict(self) -> dict:
        return {
            "latent": self.latent,
            "trash": self.trash,
            "layers": self.layers,
            "entangler_pairs": None if self.entangler_pairs is None else [list(p) for p in self.entangler_pairs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QaeTopology":
        pairs = d.get("entangler_pairs")
        return cls(
            latent=int(d["latent"]),
            trash=int(d["trash"]),
            layers=int(d["layers"]),
            entangler_pairs=None if pairs is None else tuple(tuple(p) for p in pairs),
        )


def param_count(topology: QaeTopology) -> int:
    """One (phi, theta, omega) rotation triple per data wire per layer."""
    return 3 * topology.data_qutrits * topology.layers


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    epochs: int = 30
    batch_size: int = 64
    seed: int = 0
    gradient_method: str = "shift"
    fd_step: float = 1e-5
    optimizer: str = "adam"
    mode: str = "A"
    f: float = math.pi
    validation_fraction: float = 0.15
    shots: int | None = None

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 < self.fd_step <= 0.1):
            raise ValueError("fd_step must lie in (0, 0.1]")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be nonnegative and batch_size positive")
        if self.gradient_method not in ("fd", "shift"):
            raise ValueError("gradient_method must be 'fd' or 'shift'")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if str(self.mode).upper() not in ("A", "B"):
            raise ValueError("mode must be A or B")
        object.__setattr__(self, "mode", str(self.mode).upper())
        if not (0.0 <= self.validation_fraction < 0.5):
            raise ValueError("validation_fraction must lie in [0, 0.5)")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive when given")


@dataclass(frozen=True)
class FidelityRecord:
    event_id: int
    fidelity: float
    anomaly_score: float
    label: str


@dataclass(frozen=True)
class TrainResult:
    params: np.ndarray
    loss_history: list  # rows (epoch, train_cost, val_cost)
    best_epoch: int
    halted: bool = False
    message: str = ""


def angles_array(batch) -> np.ndarray:
    """Coerce a batch of encoded events to a float array (B, D, 4)."""
    if isinstance(batch, np.ndarray):
        arr = np.asarray(batch, dtype=float)
    else:
        arr = np.array(
            [[a.as_tuple() if isinstance(a, MajoranaAngles) else tuple(a) for a in event] for event in batch],
            dtype=float,
        )
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3 or arr.shape[-1] != 4:
        raise ValueError(f"expected batch shape (events, wires, 4), got {arr.shape}")
    return arr


def _encode_states(arr: np.ndarray) -> np.ndarray:
    """Vectorized form of majorana.encode over an (..., 4) angle array."""
    t1, t2, p1, p2 = arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3]
    c1, s1 = np.cos(t1 / 2.0), np.sin(t1 / 2.0)
    c2, s2 = np.cos(t2 / 2.0), np.sin(t2 / 2.0)
    raw = np.stack(
        [
            np.sqrt(2.0) * c1 * c2 + 0j,
            np.exp(1j * p1) * s1 * c2 + np.exp(1j * p2) * c1 * s2,
            np.sqrt(2.0) * np.exp(1j * (p1 + p2)) * s1 * s2,
        ],
        axis=-1,
    )
    bracket = 3.0 + np.cos(t1) * np.cos(t2) + np.sin(t1) * np.sin(t2) * np.cos(p1 - p2)
    return raw * (np.sqrt(2.0) / np.sqrt(bracket))[..., None]


def _rotation_triple(phi: float, theta: float, omega: float) -> np.ndarray:
    # applied order: y-rotation, then z, then x
    return sigma_rotation("x", phi).matrix @ sigma_rotation("z", theta).matrix @ sigma_rotation("y", omega).matrix


def _layer_mats(topology: QaeTopology, params: np.ndarray) -> np.ndarray:
    d = topology.data_qutrits
    trip = np.asarray(params, dtype=float).reshape(topology.layers, d, 3)
    mats = np.empty((topology.layers, d, 3, 3), dtype=complex)
    for l in range(topology.layers):
        for w in range(d):
            phi, theta, omega = trip[l, w]
            mats[l, w] = _rotation_triple(phi, theta, omega)
    return mats


def _check_params(topology: QaeTopology, params) -> np.ndarray:
    p = np.asarray(params, dtype=float).reshape(-1)
    if p.size != param_count(topology):
        raise ValueError(f"parameter vector has length {p.size}, topology needs {param_count(topology)}")
    return p


# ---------------------------------------------------------------- reduced engine

def _apply_shared_1q(t: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    b = t.shape[0]
    t = np.moveaxis(t, 1 + axis, 1)
    shape = t.shape
    t = np.einsum("ij,bjr->bir", mat, t.reshape(b, 3, -1))
    return np.moveaxis(t.reshape(shape), 1, 1 + axis)


def _apply_shared_2q(t: np.ndarray, mat9: np.ndarray, ax1: int, ax2: int) -> np.ndarray:
    b = t.shape[0]
    t = np.moveaxis(t, (1 + ax1, 1 + ax2), (1, 2))
    shape = t.shape
    t = np.einsum("ij,bjr->bir", mat9, t.reshape(b, 9, -1))
    return np.moveaxis(t.reshape(shape), (1, 2), (1 + ax1, 1 + ax2))


def _prepared_tensor(topology: QaeTopology, arr: np.ndarray) -> np.ndarray:
    """Product of per-wire encoded states: shape (B,) + (3,)*D."""
    b, d, _ = arr.shape
    if d != topology.data_qutrits:
        raise ValueError(f"events encode {d} wires, topology has {topology.data_qutrits} data wires")
    states = _encode_states(arr)  # (B, D, 3)
    t = states[:, 0, :]
    for w in range(1, d):
        t = (t[:, :, None] * states[:, w, None, :]).reshape(b, -1)
    return t.reshape((b,) + (3,) * d)


def _evolved_tensor(topology: QaeTopology, arr: np.ndarray, params: np.ndarray, prepared: np.ndarray | None = None) -> np.ndarray:
    t = _prepared_tensor(topology, arr) if prepared is None else prepared
    mats = _layer_mats(topology, params)
    tadd9 = tadd().matrix
    for l in range(topology.layers):
        for w in range(topology.data_qutrits):
            t = _apply_shared_1q(t, mats[l, w], w)
        for i, j in topology.pairs():
            t = _apply_shared_2q(t, tadd9, i, j)
    return t


def _reduced_fidelities(topology: QaeTopology, arr: np.ndarray, params: np.ndarray, prepared: np.ndarray | None = None) -> np.ndarray:
    t = _evolved_tensor(topology, arr, params, prepared)
    idx = (slice(None),) * (1 + topology.latent) + (0,) * topology.trash
    block = t[idx].reshape(t.shape[0], -1)
    return np.einsum("bl,bl->b", np.abs(block), np.abs(block))


# ---------------------------------------------------------------- circuit engine

def build_circuit(topology: QaeTopology, angles, params, max_qutrits: int = DEFAULT_MAX_QUTRITS) -> QutritState:
    """Run the full register: preparation, variational layers, and the
    overlap-test block. Returns the post-circuit state."""
    state = _encoded_state(topology, angles, params, max_qutrits)
    pairs = list(zip(topology.trash_wires, topology.reference_wires))
    return simulator._swap_block(state, topology.ancilla_wire, pairs)


def _encoded_state(topology: QaeTopology, angles, params, max_qutrits: int) -> QutritState:
    """Register state after preparation and layers, before the test."""
    params = _check_params(topology, params)
    angle_list = list(angles)
    if len(angle_list) != topology.data_qutrits:
        raise ValueError(f"need {topology.data_qutrits} angle tuples, got {len(angle_list)}")
    state = QutritState.zero(topology.total_qutrits, max_qutrits=max_qutrits)
    for w, a in enumerate(angle_list):
        if not isinstance(a, MajoranaAngles):
            a = MajoranaAngles(*a)
        prep = preparation_unitary(_encode_states(np.array(a.as_tuple(), dtype=float)))
        state = simulator.apply_gate(state, prep, [w])
    mats = _layer_mats(topology, params)
    t9 = tadd()
    for l in range(topology.layers):
        for w in range(topology.data_qutrits):
            state = simulator.apply_gate(state, mats[l, w], [w])
        for i, j in topology.pairs():
            state = simulator.apply_gate(state, t9, [i, j])
    return state


def _circuit_fidelity(topology: QaeTopology, angles, params, shots: int | None = None, rng: np.random.Generator | None = None, max_qutrits: int = DEFAULT_MAX_QUTRITS) -> float:
    state = _encoded_state(topology, angles, params, max_qutrits)
    pairs = list(zip(topology.trash_wires, topology.reference_wires))
    return simulator.swap_test_fidelity(state, topology.ancilla_wire, pairs, shots=shots, rng=rng)


# ---------------------------------------------------------------- cost and gradient

def fidelity(topology: QaeTopology, angles, params, engine: str = "reduced", shots: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Trash-versus-reference overlap for a single encoded event."""
    params = _check_params(topology, params)
    if engine == "reduced":
        arr = angles_array([list(angles)])
        return float(np.clip(_reduced_fidelities(topology, arr, params)[0], 0.0, 1.0))
    if engine == "circuit":
        return _circuit_fidelity(topology, angles, params, shots=shots, rng=rng)
    raise ValueError(f"engine must be 'reduced' or 'circuit', got {engine!r}")


def cost(topology: QaeTopology, batch, params, engine: str = "reduced", shots: int | None = None, rng: np.random.Generator | None = None) -> float:
    """Mean negative fidelity over the batch; always in [-1, 0]."""
    params = _check_params(topology, params)
    arr = angles_array(batch)
    if arr.shape[0] == 0:
        raise ValueError("batch must be nonempty")
    if engine == "reduced" and shots is None:
        return float(-np.mean(_reduced_fidelities(topology, arr, params)))
    fids = [
        _circuit_fidelity(topology, [MajoranaAngles(*row) for row in event], params, shots=shots, rng=rng)
        for event in arr
    ]
    return float(-np.mean(fids))


def gradient(topology: QaeTopology, batch, params, method: str = "shift", fd_step: float = 1e-5, engine: str = "reduced") -> np.ndarray:
    """Cost gradient by central finite differences or the exact
    four-term shift rule (shifts pi/4 and 3pi/4), which is valid for
    rotation generators with eigenvalues {-1, 0, +1}."""
    params = _check_params(topology, params).copy()
    arr = angles_array(batch)
    prepared = _prepared_tensor(topology, arr) if engine == "reduced" else None

    def c(p: np.ndarray) -> float:
        if engine == "reduced":
            return float(-np.mean(_reduced_fidelities(topology, arr, p, prepared)))
        return cost(topology, arr, p, engine=engine)

    grad = np.zeros_like(params)
    if method == "fd":
        for k in range(params.size):
            params[k] += fd_step
            up = c(params)
            params[k] -= 2.0 * fd_step
            down = c(params)
            params[k] += fd_step
            grad[k] = (up - down) / (2.0 * fd_step)
    elif method == "shift":
        for k in range(params.size):
            base = params[k]
            vals = []
            for s in (_SHIFT_SMALL, -_SHIFT_SMALL, _SHIFT_LARGE, -_SHIFT_LARGE):
                params[k] = base + s
                vals.append(c(params))
            params[k] = base
            grad[k] = _SHIFT_C1 * (vals[0] - vals[1]) - _SHIFT_C2 * (vals[2] - vals[3])
    else:
        raise ValueError(f"method must be 'fd' or 'shift', got {method!r}")
    return grad


# ---------------------------------------------------------------- training

def _optimizer_step(opt: str, params, grad, state, lr, step):
    if opt == "sgd":
        return params - lr * grad, state
    m, v = state
    b1, b2, eps = 0.9, 0.999, 1e-8
    m = b1 * m + (1.0 - b1) * grad
    v = b2 * v + (1.0 - b2) * grad * grad
    mhat = m / (1.0 - b1**step)
    vhat = v / (1.0 - b2**step)
    return params - lr * mhat / (np.sqrt(vhat) + eps), (m, v)


def encode_events(events, topology: QaeTopology, mode: str, f: float) -> np.ndarray:
    """Angle array (N, D, 4) for a list of jet events."""
    rows = []
    for ev in events:
        tuples = jets.encode_event(ev, mode=mode, f=f, max_particles=topology.data_qutrits)
        rows.append([t.as_tuple() for t in tuples])
    return np.array(rows, dtype=float)


def train(config: TrainConfig, events, topology: QaeTopology | None = None) -> TrainResult:
    """Seeded minibatch training; returns the parameters with the best
    validation cost along with the full loss curve.

    The loss history starts with an epoch-0 row holding the initial
    costs. When the event list is too small for a validation split the
    training cost doubles as the validation column. Training halts
    early with a diagnostic if the validation cost worsens for 10
    consecutive epochs.
    """
    topology = topology or QaeTopology()
    events = list(events)
    if not events:
        raise ValueError("training needs at least one event")

    arr = encode_events(events, topology, config.mode, config.f)
    rng = np.random.default_rng(config.seed)
    params = rng.uniform(-0.1, 0.1, size=param_count(topology))

    n = arr.shape[0]
    n_val = int(round(n * config.validation_fraction)) if n >= 5 else 0
    n_val = min(n_val, n - 1)
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    train_arr = arr[train_idx]
    val_arr = arr[val_idx] if n_val > 0 else train_arr
    prepared_train = _prepared_tensor(topology, train_arr)
    prepared_val = _prepared_tensor(topology, val_arr) if n_val > 0 else prepared_train

    def full_costs(p):
        tc = float(-np.mean(_reduced_fidelities(topology, train_arr, p, prepared_train)))
        vc = float(-np.mean(_reduced_fidelities(topology, val_arr, p, prepared_val)))
        return tc, vc

    tc, vc = full_costs(params)
    history = [(0, tc, vc)]
    best = (vc, 0, params.copy())
    opt_state = (np.zeros_like(params), np.zeros_like(params))
    step = 0
    worsening = 0
    prev_vc = vc
    halted = False
    message = ""

    for epoch in range(1, config.epochs + 1):
        order = train_idx[rng.permutation(train_idx.size)]
        for lo in range(0, order.size, config.batch_size):
            chunk = arr[order[lo : lo + config.batch_size]]
            g = gradient(topology, chunk, params, method=config.gradient_method, fd_step=config.fd_step)
            step += 1
            params, opt_state = _optimizer_step(config.optimizer, params, g, opt_state, config.learning_rate, step)

        tc, vc = full_costs(params)
        history.append((epoch, tc, vc))
        if vc < best[0]:
            best = (vc, epoch, params.copy())
        worsening = worsening + 1 if vc > prev_vc + 1e-12 else 0
        prev_vc = vc
        if worsening >= 10:
            halted = True
            message = f"halted at epoch {epoch}: validation cost worsened for 10 consecutive epochs; returning the epoch-{best[1]} checkpoint"
            break

    return TrainResult(params=best[2], loss_history=history, best_epoch=best[1], halted=halted, message=message)


def infer(params, topology: QaeTopology, events, mode: str, f: float) -> list[FidelityRecord]:
    """Per-event fidelity and anomaly score. Labels are carried through
    for evaluation only; they never enter the computation."""
    params = _check_params(topology, params)
    events = list(events)
    if not events:
        return []
    arr = encode_events(events, topology, mode, f)
    fids = np.clip(_reduced_fidelities(topology, arr, params), 0.0, 1.0)
    return [
        FidelityRecord(event_id=i, fidelity=float(fi), anomaly_score=float(1.0 - fi), label=ev.label)
        for i, (fi, ev) in enumerate(zip(fids, events))
    ]


# ---------------------------------------------------------------- persistence

def save_model(path, params, topology: QaeTopology, config: TrainConfig, loss_history) -> None:
    params = _check_params(topology, params)
    doc = {
        "version": MODEL_VERSION,
        "topology": topology.to_dict(),
        "mode": config.mode,
        "f": config.f,
        "params": [float(p) for p in params],
        "train_config": asdict(config),
        "loss_history": [[int(e), float(t), float(v)] for e, t, v in loss_history],
    }
    with jets.atomic_write(path) as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


@dataclass(frozen=True)
class LoadedModel:
    params: np.ndarray
    topology: QaeTopology
    mode: str
    f: float
    train_config: dict
    loss_history: list


def load_model(path) -> LoadedModel:
    try:
        with open(path, encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt model file {path}: {exc}") from exc
    try:
        version = doc["version"]
        if version != MODEL_VERSION:
            raise ValueError(f"model file version {version} is not supported (expected {MODEL_VERSION})")
        topology = QaeTopology.from_dict(doc["topology"])
        params = np.asarray(doc["params"], dtype=float)
        mode = str(doc["mode"]).upper()
        f = float(doc["f"])
        loss_history = [(int(e), float(t), float(v)) for e, t, v in doc["loss_history"]]
        train_config = dict(doc["train_config"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"corrupt model file {path}: missing or malformed field ({exc})") from exc
    _check_params(topology, params)
    return LoadedModel(params=params, topology=topology, mode=mode, f=f, train_config=train_config, loss_history=loss_history)
