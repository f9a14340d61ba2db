from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from aqmfluid import config as cfg
from aqmfluid.controllers import PiParams
from aqmfluid.fluid import NetworkParams
from aqmfluid.neural import TUNED_IRBF, TUNED_RBF, RbfSpec


def test_defaults_round_trip():
    doc = cfg.ConfigDocument()
    text = cfg.dumps(doc)
    assert cfg.loads(text) == doc
    assert cfg.dumps(cfg.loads(text)) == text


@settings(max_examples=60, deadline=None)
@given(
    capacity=st.floats(100, 1e5), tp=st.floats(0.001, 0.5), buffer=st.floats(200, 1000),
    profile=st.lists(st.integers(1, 500), min_size=1, max_size=4),
    delayed=st.booleans(), weights=st.lists(st.floats(-1, 1), min_size=1, max_size=12),
    gain=st.floats(0, 0.01), seed=st.integers(0, 2**31), a=st.floats(1e-5, 1e-3),
    w_q=st.one_of(st.none(), st.floats(1e-6, 0.5)),
)
def test_round_trip_is_fixpoint(capacity, tp, buffer, profile, delayed, weights, gain, seed, a, w_q):
    from aqmfluid.controllers import AredParams
    net = NetworkParams(capacity=capacity, prop_delay=tp, buffer=buffer, delayed_drop_probability=delayed,
                        n_profile=tuple((10.0 * i, n) for i, n in enumerate(profile)))
    doc = cfg.ConfigDocument(network=net, rbf=RbfSpec.evenly_spaced(len(weights), weights, gain),
                             pi=PiParams(a=a, b=a / 2), ared=AredParams(w_q=w_q), seed=seed)
    text = cfg.dumps(doc)
    again = cfg.loads(text)
    assert again == doc
    assert cfg.dumps(again) == text


def test_unknown_keys_and_sections_rejected():
    with pytest.raises(cfg.ConfigError, match="unknown key"):
        cfg.loads("[network]\ncapacity = 1000\nbandwidth = 3\n")
    with pytest.raises(cfg.ConfigError, match="unknown section"):
        cfg.loads("[plotting]\ncolor = red\n")
    with pytest.raises(cfg.ConfigError):
        cfg.loads("[network]\ncapacity = fast\n")
    with pytest.raises(cfg.ConfigError):
        cfg.loads("[controller]\ndiscipline = blue\n")
    with pytest.raises(cfg.ConfigError):
        cfg.loads("[pi]\na = 1e-5\nb = 2e-5\n")


def test_partial_document_uses_defaults():
    doc = cfg.loads("[network]\nn_profile = 0.0:100, 30.0:130\n[experiment]\nseed = 7\n")
    assert doc.network.n_profile == ((0.0, 100), (30.0, 130))
    assert doc.network.capacity == 1250.0
    assert doc.seed == doc.pso.seed == doc.ga.seed == 7


def test_presets_carry_published_values():
    irbf = cfg.load("table2_irbf")
    assert irbf.rbf == TUNED_IRBF and irbf.discipline == "irbf"
    rbf = cfg.loads(cfg.preset_text("table2_rbf.cfg"))
    assert rbf.rbf == TUNED_RBF
    base = cfg.load("table3_baselines")
    assert (base.pi.a, base.pi.b, base.pi.sample_period) == (1.822e-5, 1.816e-5, 0.00625)
    assert (base.rem.gamma, base.rem.phi) == (0.001, 1.001)
    assert (base.ared.min_th, base.ared.max_th, base.ared.w_q) == (100.0, 215.0, None)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        cfg.load(tmp_path / "nope.cfg")


def test_save_and_load(tmp_path):
    doc = replace(cfg.ConfigDocument(), rbf=TUNED_RBF, discipline="rbf")
    path = cfg.save(doc, tmp_path / "x.cfg")
    assert cfg.load(path) == doc
