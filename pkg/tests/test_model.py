import json

import numpy as np
import pytest

from qutrijet import model, simulator
from qutrijet.jets import synth_jets
from qutrijet.majorana import MajoranaAngles, encode
from qutrijet.model import (
    QaeTopology,
    TrainConfig,
    angles_array,
    cost,
    encode_events,
    fidelity,
    gradient,
    infer,
    load_model,
    param_count,
    save_model,
    train,
)

RNG = np.random.default_rng(20260818)

TOPOLOGIES = [
    QaeTopology(),
    QaeTopology(latent=2, trash=2),
    QaeTopology(latent=1, trash=1, layers=2),
    QaeTopology(latent=1, trash=3, entangler_pairs=((0, 1), (2, 3))),
    QaeTopology(latent=1, trash=2, layers=2, entangler_pairs=((0, 2),)),
]


def random_angles(rng, wires):
    theta = rng.uniform(0.0, np.pi, size=(wires, 2))
    phi = rng.uniform(-np.pi, np.pi, size=(wires, 2))
    return [MajoranaAngles(t[0], t[1], p[0], p[1]) for t, p in zip(theta, phi)]


class TestTopology:
    def test_default_layout(self):
        t = QaeTopology()
        assert t.data_qutrits == 4
        assert t.total_qutrits == 8
        assert list(t.data_wires) == [0, 1, 2, 3]
        assert list(t.trash_wires) == [1, 2, 3]
        assert list(t.reference_wires) == [4, 5, 6]
        assert t.reference == 3
        assert t.ancilla_wire == 7

    def test_pairs_default_is_all_ordered(self):
        t = QaeTopology(latent=1, trash=2)
        assert t.pairs() == ((0, 1), (0, 2), (1, 2))

    def test_pairs_explicit_subset(self):
        t = QaeTopology(entangler_pairs=((0, 3),))
        assert t.pairs() == ((0, 3),)

    def test_param_count(self):
        assert param_count(QaeTopology()) == 12
        assert param_count(QaeTopology(latent=2, trash=2, layers=3)) == 36
        # zero layers is a legal identity circuit with no parameters
        assert param_count(QaeTopology(layers=0)) == 0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"latent": 0},
            {"trash": 0},
            {"layers": -1},
            {"latent": -1},
            {"entangler_pairs": ((1, 0),)},
            {"entangler_pairs": ((0, 0),)},
            {"entangler_pairs": ((0, 4),)},
            {"entangler_pairs": ((-1, 2),)},
        ],
    )
    def test_rejects_bad_layout(self, kwargs):
        with pytest.raises(ValueError):
            QaeTopology(**kwargs)

    def test_dict_roundtrip(self):
        for t in TOPOLOGIES:
            assert QaeTopology.from_dict(t.to_dict()) == t


class TestTrainConfig:
    def test_mode_is_uppercased(self):
        assert TrainConfig(mode="b").mode == "B"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"learning_rate": 0.0},
            {"learning_rate": -1.0},
            {"epochs": -1},
            {"batch_size": 0},
            {"mode": "C"},
            {"gradient_method": "autodiff"},
            {"optimizer": "lbfgs"},
            {"validation_fraction": 0.9},
            {"validation_fraction": -0.1},
            {"fd_step": 0.0},
            {"fd_step": 0.5},
            {"shots": 0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestAnglesArray:
    def test_accepts_angle_objects(self):
        batch = [random_angles(RNG, 4), random_angles(RNG, 4)]
        arr = angles_array(batch)
        assert arr.shape == (2, 4, 4)
        assert arr[0, 2, 1] == batch[0][2].theta2
        assert arr[1, 3, 2] == batch[1][3].phi1

    def test_accepts_ndarray(self):
        raw = RNG.uniform(0, 1, size=(3, 4, 4))
        np.testing.assert_array_equal(angles_array(raw), raw)

    def test_single_event_is_promoted(self):
        assert angles_array(np.zeros((4, 4))).shape == (1, 4, 4)

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError):
            angles_array(np.zeros((2, 4, 3)))
        with pytest.raises(ValueError):
            angles_array(np.zeros((2, 4, 4, 1)))


class TestFidelity:
    def test_zero_point_is_exact_max(self):
        # every wire holds |0> and the identity circuit leaves trash at |0>
        t = QaeTopology()
        zero = [MajoranaAngles(0, 0, 0, 0)] * t.data_qutrits
        assert fidelity(t, zero, np.zeros(param_count(t))) == 1.0

    def test_engines_agree(self):
        rng = np.random.default_rng(41)
        for t in TOPOLOGIES:
            angles = random_angles(rng, t.data_qutrits)
            params = rng.uniform(-1.5, 1.5, param_count(t))
            fr = fidelity(t, angles, params, engine="reduced")
            fc = fidelity(t, angles, params, engine="circuit")
            assert abs(fr - fc) < 1e-12

    def test_build_circuit_readout_matches_reduced(self):
        # third route: read the ancilla distribution off the full register
        rng = np.random.default_rng(42)
        t = QaeTopology()
        angles = random_angles(rng, t.data_qutrits)
        params = rng.uniform(-1.0, 1.0, param_count(t))
        state = model.build_circuit(t, angles, params)
        p0 = simulator.probabilities(state, t.ancilla_wire)[0]
        assert abs((9.0 * p0 - 5.0) / 4.0 - fidelity(t, angles, params)) < 1e-12

    def test_fidelity_in_unit_interval(self):
        rng = np.random.default_rng(43)
        t = QaeTopology()
        for _ in range(25):
            f = fidelity(t, random_angles(rng, 4), rng.uniform(-2, 2, 12))
            assert -1e-12 <= f <= 1.0 + 1e-12

    def test_unknown_engine_rejected(self):
        t = QaeTopology()
        with pytest.raises(ValueError):
            fidelity(t, random_angles(RNG, 4), np.zeros(12), engine="tensornet")

    def test_shots_deterministic_and_unbiased(self):
        rng = np.random.default_rng(44)
        t = QaeTopology()
        angles = random_angles(rng, 4)
        params = rng.uniform(-1, 1, 12)
        exact = fidelity(t, angles, params)
        a = fidelity(t, angles, params, engine="circuit", shots=4000, rng=np.random.default_rng(7))
        b = fidelity(t, angles, params, engine="circuit", shots=4000, rng=np.random.default_rng(7))
        assert a == b
        # sample estimate within 4 sigma of the exact value
        p0 = (5.0 + 4.0 * exact) / 9.0
        sigma = 2.25 * np.sqrt(p0 * (1.0 - p0) / 4000)
        assert abs(a - exact) < 4.0 * sigma

    def test_wrong_wire_count_rejected(self):
        t = QaeTopology()
        with pytest.raises(ValueError):
            fidelity(t, random_angles(RNG, 3), np.zeros(12))

    def test_wrong_param_count_rejected(self):
        t = QaeTopology()
        with pytest.raises(ValueError):
            fidelity(t, random_angles(RNG, 4), np.zeros(11))


class TestCost:
    def test_cost_is_mean_negative_fidelity(self):
        rng = np.random.default_rng(45)
        t = QaeTopology()
        batch = [random_angles(rng, 4) for _ in range(6)]
        params = rng.uniform(-1, 1, 12)
        per_event = [fidelity(t, a, params) for a in batch]
        assert abs(cost(t, batch, params) + np.mean(per_event)) < 1e-12

    def test_cost_circuit_engine_matches(self):
        rng = np.random.default_rng(46)
        t = QaeTopology(latent=1, trash=2)
        batch = [random_angles(rng, 3) for _ in range(3)]
        params = rng.uniform(-1, 1, param_count(t))
        assert abs(cost(t, batch, params) - cost(t, batch, params, engine="circuit")) < 1e-12


class TestGradient:
    def test_zero_gradient_at_the_maximum(self):
        t = QaeTopology()
        zero = [[MajoranaAngles(0, 0, 0, 0)] * 4]
        g = gradient(t, zero, np.zeros(12))
        assert np.linalg.norm(g) < 1e-8

    def test_shift_matches_finite_difference(self):
        rng = np.random.default_rng(47)
        for t in TOPOLOGIES[:3]:
            batch = np.asarray([[a.as_tuple() for a in random_angles(rng, t.data_qutrits)] for _ in range(3)])
            params = rng.uniform(-1, 1, param_count(t))
            gs = gradient(t, batch, params, method="shift")
            gf = gradient(t, batch, params, method="fd", fd_step=1e-6)
            assert np.linalg.norm(gs - gf) < 1e-6 * max(1.0, np.linalg.norm(gs))

    def test_shift_matches_analytic_slope(self):
        # central difference of the cost itself, tiny step, one coordinate
        rng = np.random.default_rng(48)
        t = QaeTopology(latent=1, trash=2)
        batch = np.asarray([[a.as_tuple() for a in random_angles(rng, 3)]])
        params = rng.uniform(-1, 1, param_count(t))
        g = gradient(t, batch, params)
        k = 4
        step = 1e-7
        plus, minus = params.copy(), params.copy()
        plus[k] += step
        minus[k] -= step
        slope = (cost(t, batch, plus) - cost(t, batch, minus)) / (2 * step)
        assert abs(g[k] - slope) < 1e-6

    def test_no_entanglers_kills_latent_gradient(self):
        # a unitary on the latent wire alone cannot move the trash marginal
        t = QaeTopology(latent=1, trash=3, entangler_pairs=())
        rng = np.random.default_rng(49)
        batch = rng.uniform(0, np.pi, (4, 4, 4))
        params = rng.uniform(-1, 1, param_count(t))
        g = gradient(t, batch, params)
        assert np.abs(g[:3]).max() < 1e-10
        assert np.linalg.norm(g[3:]) > 1e-3

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            gradient(QaeTopology(), np.zeros((1, 4, 4)), np.zeros(12), method="spsa")


class TestTrain:
    def test_smoke_cost_decreases(self):
        events = synth_jets("qcd-like", 24, seed=3)
        cfg = TrainConfig(epochs=4, batch_size=8, seed=1, learning_rate=0.05)
        r = train(cfg, events)
        assert len(r.loss_history) == 5
        assert r.loss_history[0][0] == 0
        assert r.loss_history[-1][1] < r.loss_history[0][1]
        assert not r.halted

    def test_deterministic(self):
        events = synth_jets("qcd-like", 16, seed=4)
        cfg = TrainConfig(epochs=2, batch_size=8, seed=9)
        a, b = train(cfg, events), train(cfg, events)
        np.testing.assert_array_equal(a.params, b.params)
        assert a.loss_history == b.loss_history
        assert a.best_epoch == b.best_epoch

    def test_zero_epochs_returns_initial(self):
        events = synth_jets("qcd-like", 8, seed=5)
        r = train(TrainConfig(epochs=0, seed=2), events)
        assert len(r.loss_history) == 1
        assert r.best_epoch == 0
        init = np.random.default_rng(2).uniform(-0.1, 0.1, 12)
        np.testing.assert_array_equal(r.params, init)

    def test_best_checkpoint_is_returned(self):
        events = synth_jets("qcd-like", 24, seed=6)
        cfg = TrainConfig(epochs=5, batch_size=8, seed=3)
        r = train(cfg, events)
        vals = [row[2] for row in r.loss_history]
        assert r.best_epoch == int(np.argmin(vals))

    def test_halts_on_sustained_worsening(self, monkeypatch):
        # flip the gradient so every step is ascent on the cost
        real = model.gradient

        def flipped(*args, **kwargs):
            return -real(*args, **kwargs)

        monkeypatch.setattr(model, "gradient", flipped)
        events = synth_jets("qcd-like", 24, seed=7)
        cfg = TrainConfig(epochs=40, batch_size=24, seed=4, learning_rate=0.05, optimizer="sgd")
        r = train(cfg, events)
        assert r.halted
        assert "halted at epoch" in r.message
        assert len(r.loss_history) < 41
        assert r.best_epoch == 0
        init = np.random.default_rng(4).uniform(-0.1, 0.1, 12)
        np.testing.assert_array_equal(r.params, init)

    def test_no_validation_split_below_five_events(self):
        events = synth_jets("qcd-like", 4, seed=8)
        r = train(TrainConfig(epochs=1, seed=0), events)
        # train and validation columns coincide when nothing is held out
        assert all(abs(row[1] - row[2]) < 1e-15 for row in r.loss_history)

    def test_empty_events_rejected(self):
        with pytest.raises(ValueError):
            train(TrainConfig(), [])


class TestInfer:
    def test_records_carry_labels_and_complement(self):
        events = synth_jets("two-prong", 6, seed=9)
        t = QaeTopology()
        recs = infer(np.zeros(12), t, events, mode="A", f=np.pi)
        assert [r.event_id for r in recs] == list(range(6))
        for r in recs:
            assert r.label == "two-prong"
            assert 0.0 <= r.fidelity <= 1.0
            assert abs(r.anomaly_score - (1.0 - r.fidelity)) < 1e-15

    def test_empty_events(self):
        assert infer(np.zeros(12), QaeTopology(), [], mode="A", f=np.pi) == []


class TestEncodeEvents:
    def test_shape_and_mode_sensitivity(self):
        events = synth_jets("qcd-like", 5, seed=10)
        t = QaeTopology()
        a = encode_events(events, t, "A", np.pi)
        b = encode_events(events, t, "B", np.pi)
        assert a.shape == b.shape == (5, 4, 4)
        # polar pair is shared, the azimuth pair distinguishes the modes
        np.testing.assert_allclose(a[..., :2], b[..., :2], atol=1e-12)
        assert np.abs(a[..., 2:] - b[..., 2:]).max() > 1e-6

    def test_vectorized_encode_matches_scalar(self):
        rng = np.random.default_rng(51)
        arr = np.stack(
            [
                rng.uniform(0, np.pi, 16),
                rng.uniform(0, np.pi, 16),
                rng.uniform(-np.pi, np.pi, 16),
                rng.uniform(-np.pi, np.pi, 16),
            ],
            axis=-1,
        )
        states = model._encode_states(arr)
        for row, st in zip(arr, states):
            np.testing.assert_allclose(st, encode(MajoranaAngles(*row)), atol=1e-14)


class TestPersistence:
    def make_model(self, tmp_path, topology=None):
        t = topology or QaeTopology()
        cfg = TrainConfig(epochs=1, seed=0)
        params = np.linspace(-0.5, 0.5, param_count(t))
        history = [(0, -0.5, -0.4), (1, -0.6, -0.55)]
        path = tmp_path / "model.json"
        save_model(path, params, t, cfg, history)
        return path, params, t, cfg, history

    def test_roundtrip(self, tmp_path):
        path, params, t, cfg, history = self.make_model(tmp_path)
        loaded = load_model(path)
        np.testing.assert_array_equal(loaded.params, params)
        assert loaded.topology == t
        assert loaded.mode == cfg.mode
        assert loaded.f == cfg.f
        assert loaded.loss_history == history

    def test_roundtrip_nondefault_topology(self, tmp_path):
        t = QaeTopology(latent=2, trash=2, layers=2, entangler_pairs=((0, 1), (1, 3)))
        path, _, _, _, _ = self.make_model(tmp_path, t)
        assert load_model(path).topology == t

    def test_truncated_file_is_corrupt(self, tmp_path):
        path, *_ = self.make_model(tmp_path)
        text = path.read_text()
        path.write_text(text[: len(text) // 2])
        with pytest.raises(ValueError, match="corrupt model file"):
            load_model(path)

    def test_missing_field_is_corrupt(self, tmp_path):
        path, *_ = self.make_model(tmp_path)
        doc = json.loads(path.read_text())
        del doc["params"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="corrupt model file"):
            load_model(path)

    def test_version_mismatch_rejected(self, tmp_path):
        path, *_ = self.make_model(tmp_path)
        doc = json.loads(path.read_text())
        doc["version"] = 99
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="version 99"):
            load_model(path)

    def test_param_length_mismatch_rejected(self, tmp_path):
        path, *_ = self.make_model(tmp_path)
        doc = json.loads(path.read_text())
        doc["params"] = doc["params"][:-1]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError):
            load_model(path)

    def test_file_is_plain_json(self, tmp_path):
        path, *_ = self.make_model(tmp_path)
        doc = json.loads(path.read_text())
        assert doc["version"] == 1
        assert set(doc) == {"version", "topology", "mode", "f", "params", "train_config", "loss_history"}
