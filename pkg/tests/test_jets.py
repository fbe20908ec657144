import math
from pathlib import Path

import numpy as np
import pytest

from qutrijet import jets
from qutrijet.jets import (
    JetConstituent,
    JetEvent,
    atomic_write,
    base_angles,
    constituent_mass,
    encode_event,
    extended_features,
    load_events,
    save_events,
    synth_jets,
)

FIXTURES = Path(__file__).parent / "fixtures"


def one_jet(**kw):
    defaults = dict(
        constituents=(
            JetConstituent(pt=0.6, delta_eta=0.05, delta_phi=-0.02, energy=0.61, d0=0.01, dz=-0.02),
            JetConstituent(pt=0.3, delta_eta=-0.1, delta_phi=0.3, energy=0.32, d0=0.0, dz=0.0),
        ),
        jet_pt=1.0,
        jet_mass=0.2,
        jet_energy=1.05,
        label="background",
    )
    defaults.update(kw)
    return JetEvent(**defaults)


class TestTypes:
    def test_delta_phi_wrapped(self):
        c = JetConstituent(pt=1.0, delta_eta=0.0, delta_phi=4.0)
        assert -math.pi < c.delta_phi <= math.pi
        assert abs(c.delta_phi - (4.0 - 2 * math.pi)) < 1e-12

    def test_negative_pt_rejected(self):
        with pytest.raises(ValueError):
            JetConstituent(pt=-1.0, delta_eta=0.0, delta_phi=0.0)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            JetConstituent(pt=float("nan"), delta_eta=0.0, delta_phi=0.0)

    def test_constituents_sorted_by_pt(self):
        jet = one_jet()
        pts = [c.pt for c in jet.constituents]
        assert pts == sorted(pts, reverse=True)

    def test_empty_jet_rejected(self):
        with pytest.raises(ValueError):
            JetEvent(constituents=(), jet_pt=1.0, jet_mass=0.0, jet_energy=1.0)

    def test_nonpositive_jet_pt_rejected(self):
        with pytest.raises(ValueError):
            one_jet(jet_pt=0.0)

    def test_fields_are_builtin_floats(self):
        c = JetConstituent(pt=np.float64(0.5), delta_eta=np.float64(0.1), delta_phi=np.float64(0.2))
        assert type(c.pt) is float and type(c.delta_eta) is float


class TestAngleFeatures:
    def test_on_axis_constituent_near_zero_tuple(self):
        c = JetConstituent(pt=0.5, delta_eta=0.0, delta_phi=0.0, energy=0.0)
        jet = one_jet(constituents=(c,), jet_mass=0.0)
        theta, phi = base_angles(c, jet, f=math.pi)
        assert theta == math.pi / 2.0  # equator, not a pole
        assert phi == 0.0
        tup = encode_event(jet, mode="A", f=math.pi)[0]
        assert tup.theta2 == 0.0
        assert tup.phi1 == 0.0 and tup.phi2 == 0.0

    def test_polar_angle_clamped(self):
        c = JetConstituent(pt=1.0, delta_eta=3.0, delta_phi=0.0)
        jet = one_jet(constituents=(c,))
        theta, _ = base_angles(c, jet, f=math.pi)
        assert theta == math.pi

    def test_ratio_invariance_under_common_scaling(self):
        # base angles depend on pt only through pt/jet_pt
        c = JetConstituent(pt=0.4, delta_eta=0.2, delta_phi=-0.4)
        jet = one_jet(constituents=(c,), jet_pt=1.0)
        a1 = base_angles(c, jet, f=math.pi)
        for scale in (10.0, 250.0):
            cs = JetConstituent(pt=0.4 * scale, delta_eta=0.2, delta_phi=-0.4)
            js = one_jet(constituents=(cs,), jet_pt=scale)
            assert np.allclose(a1, base_angles(cs, js, f=math.pi), atol=1e-12)
        # a different ratio moves the angles
        c_hi = JetConstituent(pt=0.8, delta_eta=0.2, delta_phi=-0.4)
        a_hi = base_angles(c_hi, one_jet(constituents=(c_hi,), jet_pt=1.0), f=math.pi)
        assert abs(a_hi[0] - a1[0]) > 1e-3

    def test_theta2_is_fold_of_base_azimuth(self):
        # continuity across the wrap: small +/- azimuth deviations give
        # nearby theta2 values
        jet = one_jet()
        cp = JetConstituent(pt=0.6, delta_eta=0.0, delta_phi=0.01)
        cm = JetConstituent(pt=0.6, delta_eta=0.0, delta_phi=-0.01)
        tp = encode_event(one_jet(constituents=(cp,)), f=math.pi)[0].theta2
        tm = encode_event(one_jet(constituents=(cm,)), f=math.pi)[0].theta2
        assert abs(tp - tm) < 1e-9
        assert tp < 0.1

    def test_constituent_mass_cases(self):
        assert constituent_mass(JetConstituent(pt=1.0, delta_eta=0.5, delta_phi=0.0, energy=0.0)) == 0.0
        # energy below momentum floors at zero
        assert constituent_mass(JetConstituent(pt=1.0, delta_eta=0.0, delta_phi=0.0, energy=0.5)) == 0.0
        m = constituent_mass(JetConstituent(pt=0.6, delta_eta=0.1, delta_phi=0.0, energy=0.9))
        p = 0.6 * math.cosh(0.1)
        assert abs(m - math.sqrt(0.9**2 - p**2)) < 1e-12

    def test_extended_features_wrapped(self):
        c = JetConstituent(pt=0.9, delta_eta=0.0, delta_phi=0.0, energy=9.0, d0=5.0, dz=-5.0)
        jet = one_jet(constituents=(c,))
        for v in extended_features(c, jet, f=math.pi):
            assert 0.0 <= v < 2 * math.pi

    def test_modes_select_different_azimuths(self):
        jet = one_jet()
        a = encode_event(jet, mode="A", f=math.pi)[0]
        b = encode_event(jet, mode="B", f=math.pi)[0]
        assert a.theta1 == b.theta1 and a.theta2 == b.theta2
        assert (a.phi1, a.phi2) != (b.phi1, b.phi2)

    def test_mode_validation(self):
        with pytest.raises(ValueError):
            encode_event(one_jet(), mode="C")

    def test_padding_and_truncation(self):
        jet = one_jet()
        tuples = encode_event(jet, max_particles=4)
        assert len(tuples) == 4
        assert tuples[2].as_tuple() == (0.0, 0.0, 0.0, 0.0)
        assert tuples[3].as_tuple() == (0.0, 0.0, 0.0, 0.0)
        only_two = encode_event(jet, max_particles=2)
        assert len(only_two) == 2
        many = one_jet(
            constituents=tuple(
                JetConstituent(pt=0.1 * (k + 1), delta_eta=0.01 * k, delta_phi=0.0) for k in range(6)
            )
        )
        lead = encode_event(many, max_particles=4)
        assert len(lead) == 4
        # leading constituents by pt are kept
        assert lead[0].theta1 != math.pi / 2 or many.constituents[0].delta_eta != 0.0


class TestFileRoundtrip:
    def test_csv_roundtrip_bit_exact(self, tmp_path):
        events = synth_jets("two-prong", 5, seed=3)
        p = tmp_path / "jets.csv"
        save_events(events, p)
        back = load_events(p)
        assert back.rejected == []
        assert back.events == events

    def test_jsonl_roundtrip_bit_exact(self, tmp_path):
        events = synth_jets("three-prong", 5, seed=4)
        p = tmp_path / "jets.jsonl"
        save_events(events, p)
        back = load_events(p)
        assert back.rejected == []
        assert back.events == events

    def test_fixture_csv_and_jsonl_agree(self):
        a = load_events(FIXTURES / "jets_small.csv")
        b = load_events(FIXTURES / "jets_small.jsonl")
        assert a.rejected == [] and b.rejected == []
        assert a.events == b.events
        assert [e.label for e in a.events] == [
            "background",
            "background",
            "two-prong",
            "two-prong",
            "three-prong",
            "three-prong",
        ]

    def test_malformed_fixture_reports_row(self):
        r = load_events(FIXTURES / "jets_malformed.csv")
        assert len(r.rejected) == 1
        row_no, reason = r.rejected[0]
        assert row_no == 58
        assert "oops" in reason
        assert len(r.events) > 0

    def test_wrong_header_is_hard_error(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError, match="row 1"):
            load_events(p)

    def test_limit(self):
        r = load_events(FIXTURES / "jets_small.csv", limit=3)
        assert len(r.events) == 3

    def test_concatenated_files_stay_separate_jets(self, tmp_path):
        a = synth_jets("qcd-like", 3, seed=5)
        b = synth_jets("two-prong", 3, seed=6)
        pa, pb, pc = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
        save_events(a, pa)
        save_events(b, pb)
        body = pb.read_text().splitlines()[1:]
        pc.write_text(pa.read_text() + "\n".join(body) + "\n")
        r = load_events(pc)
        assert len(r.events) == 6
        assert r.events == a + b

    def test_jsonl_bad_line_rejected(self, tmp_path):
        events = synth_jets("qcd-like", 2, seed=7)
        p = tmp_path / "jets.jsonl"
        save_events(events, p)
        lines = p.read_text().splitlines()
        lines.insert(1, "{not json")
        p.write_text("\n".join(lines) + "\n")
        r = load_events(p)
        assert len(r.events) == 2
        assert len(r.rejected) == 1
        assert r.rejected[0][0] == 2

    def test_format_override(self, tmp_path):
        events = synth_jets("qcd-like", 2, seed=8)
        p = tmp_path / "data.txt"
        save_events(events, p, fmt="csv")
        r = load_events(p, fmt="csv")
        assert r.events == events
        with pytest.raises(ValueError):
            load_events(p, fmt="parquet")
        with pytest.raises(ValueError):
            save_events(events, tmp_path / "noext")


class TestAtomicWrite:
    def test_failure_leaves_nothing(self, tmp_path):
        target = tmp_path / "out.txt"
        with pytest.raises(RuntimeError):
            with atomic_write(target) as fh:
                fh.write("partial")
                raise RuntimeError("boom")
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []

    def test_success_replaces(self, tmp_path):
        target = tmp_path / "out.txt"
        target.write_text("old")
        with atomic_write(target) as fh:
            fh.write("new")
        assert target.read_text() == "new"


class TestSynth:
    def test_deterministic(self):
        a = synth_jets("qcd-like", 10, seed=42)
        b = synth_jets("qcd-like", 10, seed=42)
        assert a == b

    def test_seeds_differ(self):
        a = synth_jets("qcd-like", 10, seed=1)
        b = synth_jets("qcd-like", 10, seed=2)
        assert a != b

    def test_kinds_independent_streams(self):
        a = synth_jets("qcd-like", 5, seed=9)
        b = synth_jets("two-prong", 5, seed=9)
        assert a != b

    def test_labels_and_counts(self):
        for kind, label in [("qcd-like", "background"), ("two-prong", "two-prong"), ("three-prong", "three-prong")]:
            events = synth_jets(kind, 7, seed=0)
            assert len(events) == 7
            assert all(e.label == label for e in events)

    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError):
            synth_jets("four-prong", 3, seed=0)
        with pytest.raises(ValueError):
            synth_jets("qcd-like", 0, seed=0)

    def test_normalized_units(self):
        events = synth_jets("qcd-like", 50, seed=10)
        for e in events:
            assert 0.85 < e.jet_pt < 1.15
            assert abs(sum(c.pt for c in e.constituents) - e.jet_pt) < 1e-9

    def test_mass_ordering(self):
        def mean_mass(kind):
            return float(np.mean([e.jet_mass for e in synth_jets(kind, 100, seed=11)]))

        assert mean_mass("qcd-like") < mean_mass("two-prong") < mean_mass("three-prong")

    def test_angular_spread_ordering(self):
        def spread(kind):
            vals = []
            for e in synth_jets(kind, 100, seed=12):
                num = sum(c.pt * math.hypot(c.delta_eta, c.delta_phi) for c in e.constituents)
                vals.append(num / e.jet_pt)
            return float(np.mean(vals))

        assert spread("qcd-like") < spread("two-prong")
        assert spread("qcd-like") < spread("three-prong")

    def test_share_entropy_ordering(self):
        # pt sharing gets more democratic with prong count
        def entropy(kind):
            vals = []
            for e in synth_jets(kind, 100, seed=13):
                p = np.array([c.pt for c in e.constituents]) / e.jet_pt
                vals.append(float(-(p * np.log(p + 1e-12)).sum()))
            return float(np.mean(vals))

        assert entropy("qcd-like") < entropy("two-prong") < entropy("three-prong")
