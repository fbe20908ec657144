"""Qutrit statevector toolkit: two-point sphere encoding of jet
constituents, SU(3)/SO(3) gate algebra, a dense simulator with an
overlap-test readout, and a variational autoencoder for unsupervised
jet anomaly detection."""

from .estimators import MajoranaJetEncoder, QutritAnomalyDetector
from .gates import (
    GELL_MANN,
    GateMatrix,
    chrestenson,
    controlled_swap,
    exp_lambda,
    gate_catalog,
    gellmann,
    generator_set,
    sigma_rotation,
    swap_gate,
    tadd,
)
from .jets import JetConstituent, JetEvent, encode_event, load_events, save_events, synth_jets
from .majorana import MajoranaAngles, decode, encode, preparation_unitary, roundtrip_check
from .metrics import auc, fidelity_histogram, roc
from .model import (
    FidelityRecord,
    QaeTopology,
    TrainConfig,
    TrainResult,
    build_circuit,
    cost,
    gradient,
    infer,
    load_model,
    param_count,
    save_model,
    train,
)
from .simulator import (
    QutritState,
    apply_gate,
    bloch_from_density,
    density_from_bloch,
    probabilities,
    purity,
    reduced_density,
    swap_test_fidelity,
)
from .verify import run_fixtures

__version__ = "0.1.0"

__all__ = [
    "GELL_MANN",
    "FidelityRecord",
    "GateMatrix",
    "JetConstituent",
    "JetEvent",
    "MajoranaAngles",
    "MajoranaJetEncoder",
    "QaeTopology",
    "QutritAnomalyDetector",
    "QutritState",
    "TrainConfig",
    "TrainResult",
    "apply_gate",
    "auc",
    "bloch_from_density",
    "build_circuit",
    "chrestenson",
    "controlled_swap",
    "cost",
    "decode",
    "density_from_bloch",
    "encode",
    "encode_event",
    "exp_lambda",
    "fidelity_histogram",
    "gate_catalog",
    "gellmann",
    "generator_set",
    "gradient",
    "infer",
    "load_events",
    "load_model",
    "param_count",
    "preparation_unitary",
    "probabilities",
    "purity",
    "reduced_density",
    "roc",
    "roundtrip_check",
    "run_fixtures",
    "save_events",
    "save_model",
    "sigma_rotation",
    "swap_gate",
    "swap_test_fidelity",
    "synth_jets",
    "tadd",
    "train",
]
