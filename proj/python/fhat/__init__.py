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

"""Funnel-encoder HAT transducer toolkit."""

import json

from . import _fhat
from ._fhat import (
    ConfigError,
    Dataset,
    DimensionError,
    IoError,
    Model,
    NumericError,
    ParseError,
    SyntheticTask,
    decoder_steps,
    fit_latency,
    format_funnel,
    frame_duration_ms,
    generate_dataset,
    init_model,
    load_checkpoint,
    parse_funnel,
    read_dataset,
)

__all__ = [
    "ConfigError",
    "Dataset",
    "DimensionError",
    "IoError",
    "Model",
    "NumericError",
    "ParseError",
    "SyntheticTask",
    "acceptance",
    "config",
    "cost_table",
    "count_params",
    "decoder_steps",
    "fit_latency",
    "format_funnel",
    "frame_duration_ms",
    "generate_dataset",
    "init_model",
    "load_checkpoint",
    "parse_funnel",
    "published_sweep_table",
    "read_dataset",
    "train",
]


def config(**overrides):
    """RunConfig as a dict: defaults updated with `overrides`, validated."""
    base = json.loads(_fhat.default_config())
    base.update(overrides)
    return json.loads(_fhat.normalize_config(json.dumps(base)))


def init_model_from(cfg):
    return _fhat.init_model(json.dumps(cfg))


def train(cfg, dataset):
    """Trains a model described by the dict `cfg` on `dataset`."""
    return _fhat.train(json.dumps(cfg), dataset)


def cost_table(configs):
    """configs: [(id, shorthand)]; reductions are against the first entry."""
    return json.loads(_fhat.cost_table(list(configs)))


def published_sweep_table():
    return json.loads(_fhat.published_sweep_table())


def count_params(cfg):
    return _fhat.count_params(json.dumps(cfg))


def acceptance(run_training=False):
    """Runs the acceptance suite; returns the report dict."""
    return json.loads(_fhat.run_acceptance(run_training))
