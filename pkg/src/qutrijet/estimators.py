"""Estimator-style wrappers around the functional core.

These follow the scikit-learn conventions (constructor stores
hyperparameters untouched, fit/transform/predict do the work, learned
attributes get a trailing underscore) so the model slots into sklearn
pipelines and model-selection tooling. X is a sequence of JetEvent
objects rather than a numeric matrix.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import model
from .jets import JetEvent, encode_event
from .model import QaeTopology, TrainConfig


def _check_events(X) -> list[JetEvent]:
    events = list(X)
    if not events:
        raise ValueError("need at least one event")
    for e in events:
        if not isinstance(e, JetEvent):
            raise TypeError(f"expected JetEvent entries, got {type(e).__name__}")
    return events


class MajoranaJetEncoder(BaseEstimator, TransformerMixin):
    """Stateless transformer: jet events to per-constituent angle
    tuples, shape (n_events, max_particles, 4)."""

    def __init__(self, mode: str = "A", f: float = math.pi, max_particles: int = 4):
        self.mode = mode
        self.f = f
        self.max_particles = max_particles

    def fit(self, X, y=None):
        _check_events(X)
        self.n_features_in_ = 4 * self.max_particles
        return self

    def transform(self, X) -> np.ndarray:
        events = _check_events(X)
        rows = [
            [t.as_tuple() for t in encode_event(e, mode=self.mode, f=self.f, max_particles=self.max_particles)]
            for e in events
        ]
        return np.array(rows, dtype=float)


class QutritAnomalyDetector(BaseEstimator):
    """Unsupervised anomaly detector: train the compression circuit on
    (assumed mostly background) events, score by reconstruction
    fidelity. Follows the sklearn outlier-detector convention: higher
    score_samples means more normal, predict returns +1 normal and
    -1 anomalous, with the threshold set so that `contamination` of the
    training events fall below it."""

    def __init__(
        self,
        latent: int = 1,
        trash: int = 3,
        layers: int = 1,
        mode: str = "A",
        f: float = math.pi,
        learning_rate: float = 0.01,
        epochs: int = 30,
        batch_size: int = 64,
        seed: int = 0,
        gradient_method: str = "shift",
        optimizer: str = "adam",
        validation_fraction: float = 0.15,
        contamination: float = 0.1,
    ):
        self.latent = latent
        self.trash = trash
        self.layers = layers
        self.mode = mode
        self.f = f
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.gradient_method = gradient_method
        self.optimizer = optimizer
        self.validation_fraction = validation_fraction
        self.contamination = contamination

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            gradient_method=self.gradient_method,
            optimizer=self.optimizer,
            mode=self.mode,
            f=self.f,
            validation_fraction=self.validation_fraction,
        )

    def fit(self, X, y=None):
        if not (0.0 < self.contamination < 0.5):
            raise ValueError("contamination must lie in (0, 0.5)")
        events = _check_events(X)
        topology = QaeTopology(latent=self.latent, trash=self.trash, layers=self.layers)
        result = model.train(self._config(), events, topology)
        self.topology_ = topology
        self.params_ = result.params
        self.loss_history_ = result.loss_history
        self.n_features_in_ = 4 * topology.data_qutrits
        fids = np.array([r.fidelity for r in model.infer(result.params, topology, events, self.mode, self.f)])
        self.offset_ = float(np.quantile(fids, self.contamination))
        return self

    def _fidelities(self, X) -> np.ndarray:
        if not hasattr(self, "params_"):
            raise RuntimeError("this detector is not fitted yet; call fit first")
        events = _check_events(X)
        records = model.infer(self.params_, self.topology_, events, self.mode, self.f)
        return np.array([r.fidelity for r in records])

    def score_samples(self, X) -> np.ndarray:
        return self._fidelities(X)

    def decision_function(self, X) -> np.ndarray:
        return self.score_samples(X) - self.offset_

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0.0, 1, -1)
