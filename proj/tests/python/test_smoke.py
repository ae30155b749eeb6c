import math

import numpy as np
import pytest

import cwat


def test_downsample_and_znorm():
    t = np.arange(2500) / 250.0
    out = cwat.downsample(np.sin(2 * np.pi * 10 * t).tolist(), 250.0)
    assert len(out) == 1000
    z = np.asarray(cwat.znorm([1.0, 2.0, 3.0, 4.0]))
    assert abs(z.mean()) < 1e-12
    assert abs(z.std() - 1.0) < 1e-12


def test_cost_ratio_and_report():
    cw = cwat.count_cost_conv(7, 19, 19, 12000, 19, True)
    st = cwat.count_cost_conv(7, 19, 19, 12000, 19, False)
    assert st[0] == 19 * cw[0]
    report = cwat.cost_report("paper-defaults")
    assert 100e6 <= report["totals"]["total"]["flops"] <= 400e6


def test_schedule_and_metrics():
    assert math.isclose(cwat.lr_schedule(1), 5e-6)
    assert cwat.lr_schedule(500) == 1e-3
    rows = [("a", 1, 1)] * 3 + [("a", 1, 0)] * 2 + [("b", 0, 1)] * 2 + [("b", 0, 0)] * 2
    assert cwat.confusion(rows) == {"tp": 3, "tn": 2, "fp": 2, "fn": 2}
    assert cwat.per_case_vote(rows) == [("a", 1, 1), ("b", 0, 0)]
    r = cwat.rates(tp=96, tn=137, fp=13, fn=30)
    assert round(r["sensitivity"], 3) == 0.762
    with pytest.raises(cwat.CwatError):
        cwat.lr_schedule(0)


def test_synth_edf_round_trip():
    raw = cwat.synth_edf_bytes(index=1)
    parsed = cwat.parse_edf(raw)
    assert len(parsed["labels"]) == 19
    assert parsed["sampling_rates"][0] == 100.0
    with pytest.raises(cwat.CwatError):
        cwat.parse_edf(raw[:100])


def test_model_shapes_and_save(tmp_path):
    config = "\n".join([
        "cae.input_length = 1024",
        "cae.kernel_sizes = 7,5",
        "cae.strides = 4,4",
        "cae.feature_multipliers = 2,1",
        "transformer.model_dim = 16",
        "transformer.key_dim = 8",
        "transformer.ff_dim = 32",
        "transformer.n_layers = 1",
    ])
    model = cwat.Model(config, seed=3)
    x = np.random.default_rng(0).standard_normal((19, 1024))
    z = np.asarray(model.encode(x))
    assert z.shape == (19, 64)
    assert np.asarray(model.reconstruct(x)).shape == (19, 1024)
    logits = np.asarray(model.logits(x))
    assert logits.shape == (2,)
    path = tmp_path / "m.ck"
    model.save(str(path))
    again = cwat.Model.load(str(path))
    assert np.array_equal(np.asarray(again.logits(x)), logits)
    assert again.parameter_count() == model.parameter_count()


def test_synth_segments_are_labelled():
    segs = cwat.synth_segments(n_cases=2, segments_per_case=1, segment_seconds=20.0)
    assert {s["label"] for s in segs} == {0, 1}
    assert np.asarray(segs[0]["data"]).shape == (19, 2000)
