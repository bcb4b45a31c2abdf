# Copyright 2026 The fhat Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json

import numpy as np
import pytest

import fhat


def tiny_config(**overrides):
    cfg = dict(
        num_blocks=2, model_dim=8, attention_heads=2, conv_kernel_size=3,
        input_dim=4, subsample_factor=2, pred_hidden=8, pred_embed_dim=8,
        vocab_size=5, joint_dim=8, train_steps=30, batch_size=2,
        warmup_steps=5, log_every=10, seed=3,
    )
    cfg.update(overrides)
    return fhat.config(**cfg)


def tiny_task():
    task = fhat.SyntheticTask()
    task.vocab_size = 5
    task.feature_dim = 4
    task.frames_per_token = 4
    task.max_labels = 4
    return task


def test_funnel_shorthand_round_trip():
    placements = fhat.parse_funnel("(s15^2, s13^2)")
    assert placements == [(13, 2), (15, 2)]
    assert fhat.parse_funnel(fhat.format_funnel(placements)) == placements
    assert fhat.parse_funnel("-") == []
    with pytest.raises(fhat.ParseError):
        fhat.parse_funnel("s15x2")
    with pytest.raises(fhat.ConfigError):
        fhat.parse_funnel("s16^2")


def test_frame_rate_and_steps():
    assert fhat.frame_duration_ms("-") == pytest.approx(40.0)
    assert fhat.frame_duration_ms("s15^2") == pytest.approx(80.0)
    assert fhat.decoder_steps(8000.0, 80.0, 30) == 130


def test_latency_fit_is_exact_on_a_line():
    slope, intercept, r2 = fhat.fit_latency([1.0, 2.0, 3.0], [3.0, 5.0, 7.0])
    assert slope == pytest.approx(2.0)
    assert intercept == pytest.approx(1.0)
    assert r2 == pytest.approx(1.0)


def test_cost_table_reduction_against_baseline():
    table = fhat.cost_table([("B", "-"), ("F", "s15^2")])
    assert isinstance(table, dict)
    text = json.dumps(table)
    assert '"B"' in text and '"F"' in text
    assert fhat.published_sweep_table()


def test_dataset_generation_and_io(tmp_path):
    ds = fhat.generate_dataset(tiny_task(), 6, stream=1)
    assert len(ds) == 6
    features, labels = ds[0]
    assert features.shape == (4 * len(labels), 4)
    manifest = ds.write(str(tmp_path / "data"))
    back = fhat.read_dataset(manifest)
    assert len(back) == 6
    np.testing.assert_array_equal(back[3][0], ds[3][0])
    assert back[3][1] == ds[3][1]
    with pytest.raises(IndexError):
        ds[6]
    with pytest.raises(fhat.IoError):
        fhat.read_dataset(str(tmp_path / "missing"))


def test_config_validation():
    cfg = tiny_config()
    assert cfg["num_blocks"] == 2
    with pytest.raises(fhat.ParseError):
        fhat.config(no_such_field=1)
    with pytest.raises(fhat.ConfigError):
        fhat.config(model_dim=7, attention_heads=2)


def test_train_decode_evaluate_checkpoint(tmp_path):
    data = fhat.generate_dataset(tiny_task(), 16)
    model = fhat.train(tiny_config(), data)
    curve = model.loss_curve
    assert curve[0][0] == 0 and curve[-1][0] == 30
    assert all(np.isfinite(loss) for _, loss in curve)
    assert model.num_params == fhat.count_params(tiny_config())

    features, labels = data[0]
    assert model.encode(features).shape[1] == 8
    assert np.isfinite(model.loss(features, labels))
    out = model.decode(features, beam=3, max_labels=8)
    assert out["invariant_violations"] == 0
    assert out["steps"] <= out["frames"] + 8
    assert len(out["nbest"]) >= 1
    scores = [s for _, s in out["nbest"]]
    assert scores == sorted(scores, reverse=True)
    fs = model.decode(features, beam=3, max_labels=8, algorithm="framesync")
    assert len(fs["nbest"]) >= 1
    with pytest.raises(fhat.ConfigError):
        model.decode(features, algorithm="greedy")
    with pytest.raises(fhat.DimensionError):
        model.encode(np.zeros((10, 3)))

    metrics = model.evaluate(data, beam=2, max_labels=8, workers=2)
    assert metrics["utterances"] == 16
    assert metrics["invariant_violations"] == 0
    assert metrics["max_steps"] <= metrics["step_bound"]

    path = str(tmp_path / "model.ckpt")
    model.save(path)
    loaded = fhat.load_checkpoint(path)
    assert json.loads(loaded.config) == json.loads(model.config)
    assert loaded.loss(features, labels) == model.loss(features, labels)


def test_training_is_deterministic():
    data = fhat.generate_dataset(tiny_task(), 8)
    a = fhat.train(tiny_config(train_steps=10), data)
    b = fhat.train(tiny_config(train_steps=10), data)
    assert a.loss_curve == b.loss_curve


def test_acceptance_without_training():
    report = fhat.acceptance(run_training=False)
    criteria = report["criteria"]
    assert len(criteria) == 12
    assert report["all_passed"]
    for c in criteria:
        assert c["status"] == ("skip" if c["id"] == 11 else "pass"), c
