import numpy as np
import pytest
from sklearn.base import clone

from qutrijet.estimators import MajoranaJetEncoder, QutritAnomalyDetector
from qutrijet.jets import encode_event, synth_jets


@pytest.fixture(scope="module")
def events():
    return synth_jets("qcd-like", 20, seed=21)


@pytest.fixture(scope="module")
def fitted(events):
    det = QutritAnomalyDetector(epochs=2, batch_size=10, seed=0, learning_rate=0.05, contamination=0.25)
    return det.fit(events)


class TestEncoder:
    def test_transform_shape_and_values(self, events):
        enc = MajoranaJetEncoder(mode="A", max_particles=4).fit(events)
        X = enc.transform(events)
        assert X.shape == (20, 4, 4)
        assert enc.n_features_in_ == 16
        expected = [t.as_tuple() for t in encode_event(events[0], mode="A", f=np.pi, max_particles=4)]
        np.testing.assert_allclose(X[0], expected, atol=0)

    def test_max_particles_hyperparameter(self, events):
        X = MajoranaJetEncoder(max_particles=6).fit(events).transform(events)
        assert X.shape == (20, 6, 4)

    def test_sklearn_param_protocol(self):
        enc = MajoranaJetEncoder(mode="B", f=2.0)
        assert clone(enc).get_params() == enc.get_params()
        enc.set_params(mode="A")
        assert enc.mode == "A"

    def test_rejects_non_events(self):
        with pytest.raises(TypeError):
            MajoranaJetEncoder().fit([np.zeros(4)])
        with pytest.raises(ValueError):
            MajoranaJetEncoder().fit([])


class TestDetector:
    def test_fitted_attributes(self, fitted):
        assert fitted.params_.shape == (12,)
        assert fitted.topology_.data_qutrits == 4
        assert fitted.n_features_in_ == 16
        assert len(fitted.loss_history_) == 3
        assert 0.0 <= fitted.offset_ <= 1.0

    def test_scores_are_fidelities(self, fitted, events):
        s = fitted.score_samples(events)
        assert s.shape == (20,)
        assert np.all((s >= 0.0) & (s <= 1.0))

    def test_decision_and_predict_agree(self, fitted, events):
        d = fitted.decision_function(events)
        np.testing.assert_allclose(d, fitted.score_samples(events) - fitted.offset_, atol=0)
        pred = fitted.predict(events)
        assert set(np.unique(pred)) <= {-1, 1}
        np.testing.assert_array_equal(pred, np.where(d >= 0, 1, -1))

    def test_contamination_sets_the_threshold(self, fitted, events):
        # about a quarter of the training events fall below the offset
        frac = np.mean(fitted.score_samples(events) < fitted.offset_)
        assert frac <= 0.30

    def test_anomalies_score_lower_on_average(self, fitted):
        sig = synth_jets("three-prong", 20, seed=22)
        bg = synth_jets("qcd-like", 20, seed=23)
        assert fitted.score_samples(sig).mean() < fitted.score_samples(bg).mean()

    def test_unfitted_raises(self, events):
        with pytest.raises(RuntimeError, match="not fitted"):
            QutritAnomalyDetector().score_samples(events)

    def test_bad_contamination(self, events):
        with pytest.raises(ValueError):
            QutritAnomalyDetector(contamination=0.7, epochs=1).fit(events)

    def test_sklearn_param_protocol(self):
        det = QutritAnomalyDetector(latent=2, trash=2, epochs=5)
        cloned = clone(det)
        assert cloned.get_params() == det.get_params()
        det.set_params(epochs=7)
        assert det.epochs == 7

    def test_fit_is_deterministic(self, events):
        a = QutritAnomalyDetector(epochs=1, seed=5).fit(events)
        b = QutritAnomalyDetector(epochs=1, seed=5).fit(events)
        np.testing.assert_array_equal(a.params_, b.params_)
        assert a.offset_ == b.offset_
