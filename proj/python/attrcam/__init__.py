# Copyright 2026 The attrcam Authors
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

"""Gradient-based class activation maps for single-output binary classifiers."""

from ._attrcam import (
    ConfigError,
    DataError,
    DegenerateAttributeError,
    DimensionError,
    Error,
    IoError,
    Model,
    NumericError,
    UsageError,
    combine_map,
    frontal_score,
    moon_weights,
    proportional_energy,
    run_cli,
    upsample_bilinear,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DegenerateAttributeError",
    "DimensionError",
    "Error",
    "IoError",
    "Model",
    "NumericError",
    "UsageError",
    "combine_map",
    "frontal_score",
    "moon_weights",
    "proportional_energy",
    "run_cli",
    "upsample_bilinear",
]
